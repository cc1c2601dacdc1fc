//! Collocation spectrum of the linearized operator, cross-validated.
//!
//! The same operator whose eigenvalues the dispersion relation describes
//! is discretized here by Chebyshev collocation on the constraint space,
//! and its spectrum is computed by a dense eigensolver with two
//! spurious-mode filters: agreement under grid doubling, and a leakage
//! test for the defective zero cluster. The two routes share no code, so
//! their agreement (reported in the `dispersion_residual` column) is a
//! genuine cross check of both.
//!
//! Writes `spectrum.json` (the full report) and `spectrum.csv` per
//! surface-tension value, and fails if any kept eigenvalue sits on the
//! punctured imaginary axis or violates the dispersion relation.
//!
//! ```text
//! cargo run --release --example spectrum
//! ```

use vortwave::harness::{cmd_spectrum, resolve_out_root, SpectrumArgs};

fn main() -> vortwave::Result<()> {
    let root = resolve_out_root(None).join("spectrum");
    for sigma0 in [0.4, 0.5, 1.0] {
        let args = SpectrumArgs {
            sigma0,
            ..SpectrumArgs::default()
        };
        let out = root.join(format!("sigma{sigma0:.2}"));
        let pass = cmd_spectrum(&args, &out)?;
        assert!(pass, "the collocation spectrum failed a cross check");
    }
    Ok(())
}
