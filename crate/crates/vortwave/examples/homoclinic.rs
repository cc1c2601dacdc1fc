//! Shooting the normal-form homoclinic orbit from the saddle.
//!
//! The rescaled reduced equations are the traveling KdV system
//! `Q'' = Q + Q^2 / 2`, whose homoclinic orbit is the explicit pulse
//! `Q(xbar) = -3 sech^2(xbar / 2)`. This example reconstructs the pulse
//! without using that formula: it launches a trajectory along the
//! unstable eigendirection of the saddle at the origin, integrates
//! until the trajectory crosses the symmetry section `{P = 0}`, refines
//! the crossing by bisection, and completes the orbit by reversibility.
//! The closed form then serves as the verdict: profile match to `1e-6`,
//! turning value `-3`, and conserved energy along the way.
//!
//! Writes `homoclinic.csv` (xbar, Q, P, energy) and `homoclinic.json`.
//!
//! ```text
//! cargo run --release --example homoclinic
//! ```

use vortwave::harness::{cmd_homoclinic, resolve_out_root, HomoclinicArgs};

fn main() -> vortwave::Result<()> {
    let out = resolve_out_root(None).join("homoclinic");
    let pass = cmd_homoclinic(&HomoclinicArgs::default(), &out)?;
    assert!(pass, "the shot orbit does not match the explicit pulse");
    Ok(())
}
