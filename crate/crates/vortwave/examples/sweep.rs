//! Amplitude continuation: the asymptotic scaling made quantitative.
//!
//! The existence theorem says the wave family behaves like
//! `eta = eps Q(sqrt(eps) xbar) + O(eps^2)` for small `eps`. A single
//! solve cannot test an order relation, but a sweep can: this example
//! continues the solution through `eps in {0.02, 0.04, 0.08}`
//! (warm-starting each solve from the previous profile rescaled) and
//! checks the three signatures of the scaling —
//!
//! * the remainder quotient `rho = |eta - eps Q|_inf / eps^2` stays
//!   within a factor 3 across the sweep (the remainder really is
//!   `O(eps^2)`),
//! * the crest amplitude tracks `-3 eps`,
//! * quartering `eps` doubles the half-depth width (the `sqrt(eps)`
//!   argument).
//!
//! Writes per-wave CSV/JSON plus `sweep_sigma*_rho.csv` and
//! `sweep.json`.
//!
//! ```text
//! cargo run --release --example sweep
//! ```

use vortwave::harness::{cmd_sweep, resolve_out_root, SweepArgs};

fn main() -> vortwave::Result<()> {
    let out = resolve_out_root(None).join("sweep");
    let pass = cmd_sweep(&SweepArgs::default(), &out)?;
    assert!(pass, "the sweep violated the asymptotic scaling checks");
    Ok(())
}
