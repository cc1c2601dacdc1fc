//! Coefficients and orbit of the reduced system on the kernel modes.
//!
//! Restricted to the two-dimensional generalized kernel of the
//! linearization, the transformed Hamiltonian has closed-form second-
//! and third-order coefficients in the spectral gap `tau = sigma0 - 1/3`.
//! This example measures all of them by quadrature and polarization and
//! compares against the closed forms — the bridge between the full
//! operator machinery and the planar normal form.
//!
//! It then shoots the homoclinic orbit of the truncated reduced field
//! at a small vorticity detuning `eps1` and rescales it to normal-form
//! variables, where the crossing value must be `-3` and the energy must
//! vanish along the whole trajectory.
//!
//! Writes `reduced.json` (the coefficient table with deviations) and
//! `reduced_orbit.csv` (xbar, q, p, energy).
//!
//! ```text
//! cargo run --release --example reduced
//! ```

use vortwave::harness::{cmd_reduced, resolve_out_root, ReducedArgs};

fn main() -> vortwave::Result<()> {
    let out = resolve_out_root(None).join("reduced");
    let pass = cmd_reduced(&ReducedArgs::default(), &out)?;
    assert!(pass, "the reduced system failed a coefficient or orbit check");
    Ok(())
}
