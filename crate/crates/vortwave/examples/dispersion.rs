//! Roots of the dispersion relation of the linearized problem.
//!
//! At the critical vorticity the spectrum of the linearized spatial
//! evolution consists of a defective zero eigenvalue plus nonzero
//! eigenvalues given by the roots of
//!
//! ```text
//! lambda cos(lambda) = (1 - sigma0 lambda^2) sin(lambda),
//! ```
//!
//! which for `sigma0 > 1/3` are all real: the linearization is
//! hyperbolic apart from the degenerate pair at zero. This example
//! solves the relation for three surface-tension values and bounds each
//! root's residual, writing `dispersion.csv` / `dispersion.json` per
//! value under the output root (`--help` on the `vortwave` binary shows
//! the same command with flags).
//!
//! ```text
//! cargo run --release --example dispersion
//! ```

use vortwave::harness::{cmd_dispersion, resolve_out_root, DispersionArgs};

fn main() -> vortwave::Result<()> {
    let root = resolve_out_root(None).join("dispersion");
    for sigma0 in [0.4, 0.5, 1.0] {
        let args = DispersionArgs {
            sigma0,
            ..DispersionArgs::default()
        };
        let out = root.join(format!("sigma{sigma0:.2}"));
        let pass = cmd_dispersion(&args, &out)?;
        assert!(pass, "a dispersion root missed its residual bound");
    }
    Ok(())
}
