//! Phase space of the spatial-dynamics formulation.
//!
//! A state is a tuple `m = (phi, theta, z, eta)`: two profile functions on
//! the scaled depth interval `[0, 1]`, a scalar `z` conjugate to the
//! surface elevation, and the elevation `eta` itself. The constraint space
//! requires `phi` to have zero mean and the generating function `theta` to
//! vanish at both walls, where the wall values are understood through the
//! integral trace formulas of [`grid::trace_bottom`] / [`grid::trace_top`].
//! The admissible open set additionally asks `eta > -1` (no bottom
//! touchdown) and `|z_tilde| < sigma` for the modified momentum
//! [`z_tilde`].
//!
//! Tolerances follow a two-level ladder shared across the crate:
//! constructions and algebraic identities are held to [`TOL_CONSTRUCT`],
//! while derived quantities checked at runtime (constraint defects of
//! computed vector fields, boundary-condition residuals) are held to
//! [`TOL_RUNTIME`].

use crate::grid::{self, CollocationGrid, GridFn};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Tolerance for exact algebraic identities evaluated in floating point.
pub const TOL_CONSTRUCT: f64 = 1e-12;
/// Tolerance for derived quantities that carry discretization error.
pub const TOL_RUNTIME: f64 = 1e-8;

/// Optional dimensional scalings: wave speed `c` and depth `d`. The solver
/// works in nondimensional variables (`c = d = 1`); these only enter when
/// converting profiles back to physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysScales {
    pub c: f64,
    pub d: f64,
}

/// Model parameters.
///
/// `omega0` is the reference vorticity (one at criticality), `sigma0` the
/// reference capillary number (strong surface tension means
/// `sigma0 > 1/3`), and `(eps1, eps2)` the small detuning of vorticity and
/// surface tension away from the reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub omega0: f64,
    pub sigma0: f64,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phys: Option<PhysScales>,
}

impl Params {
    pub fn new(omega0: f64, sigma0: f64, eps1: f64, eps2: f64) -> Result<Params> {
        if !(sigma0.is_finite() && sigma0 > 1.0 / 3.0) {
            return Err(Error::invalid(format!(
                "sigma0 must exceed 1/3 (strong surface tension), got {sigma0}"
            )));
        }
        if !(eps1.abs() < 0.5) || !(eps2.abs() < 0.5) {
            return Err(Error::invalid(format!(
                "detunings must satisfy |eps1|, |eps2| < 1/2, got ({eps1}, {eps2})"
            )));
        }
        if !(sigma0 + eps2 > 0.0) {
            return Err(Error::invalid(format!(
                "effective surface tension sigma0 + eps2 = {} must be positive",
                sigma0 + eps2
            )));
        }
        if !omega0.is_finite() {
            return Err(Error::invalid(format!("omega0 must be finite, got {omega0}")));
        }
        Ok(Params {
            omega0,
            sigma0,
            eps1,
            eps2,
            phys: None,
        })
    }

    /// Critical parameters: unit vorticity, no detuning.
    pub fn critical(sigma0: f64) -> Result<Params> {
        Params::new(1.0, sigma0, 0.0, 0.0)
    }

    /// Effective vorticity `omega0 + eps1`.
    pub fn omega(&self) -> f64 {
        self.omega0 + self.eps1
    }

    /// Effective capillary number `sigma0 + eps2`.
    pub fn sigma(&self) -> f64 {
        self.sigma0 + self.eps2
    }

    /// The spectral gap parameter `sigma0 - 1/3`, positive by construction.
    pub fn gap(&self) -> f64 {
        self.sigma0 - 1.0 / 3.0
    }
}

/// A phase-space state `(phi, theta, z, eta)`.
///
/// The same container carries three roles: points of the manifold, tangent
/// vectors (the constraint space is linear, so tangent vectors live in the
/// same space), and states in the flattened variables produced by
/// [`crate::flatten`]. Only the interpretation changes.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub phi: GridFn,
    pub theta: GridFn,
    pub z: f64,
    pub eta: f64,
}

/// Tangent vectors share the representation of states.
pub type TangentVec = PhasePoint;

impl PhasePoint {
    pub fn new(phi: GridFn, theta: GridFn, z: f64, eta: f64) -> PhasePoint {
        assert_eq!(phi.n(), theta.n(), "phi/theta grid mismatch");
        PhasePoint { phi, theta, z, eta }
    }

    pub fn zero(grid: Arc<CollocationGrid>) -> PhasePoint {
        PhasePoint {
            phi: GridFn::zeros(grid.clone()),
            theta: GridFn::zeros(grid),
            z: 0.0,
            eta: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<CollocationGrid> {
        self.phi.grid()
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn scale(&self, c: f64) -> PhasePoint {
        PhasePoint {
            phi: &self.phi * c,
            theta: &self.theta * c,
            z: c * self.z,
            eta: c * self.eta,
        }
    }

    pub fn add(&self, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            phi: &self.phi + &other.phi,
            theta: &self.theta + &other.theta,
            z: self.z + other.z,
            eta: self.eta + other.eta,
        }
    }

    pub fn sub(&self, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            phi: &self.phi - &other.phi,
            theta: &self.theta - &other.theta,
            z: self.z - other.z,
            eta: self.eta - other.eta,
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            phi: self.phi.add_scaled(c, &other.phi),
            theta: self.theta.add_scaled(c, &other.theta),
            z: self.z + c * other.z,
            eta: self.eta + c * other.eta,
        }
    }

    /// Surrogate `X^1` norm: quadrature `H^1` norms of the profiles plus
    /// the scalar moduli. A diagnostic seminorm, not a certified Sobolev
    /// norm; all quantitative contracts in the crate are stated against it.
    pub fn x1_norm(&self) -> f64 {
        h1_norm(&self.phi) + h1_norm(&self.theta) + self.z.abs() + self.eta.abs()
    }

    /// Surrogate `X^2` norm: adds the second derivatives.
    pub fn x2_norm(&self) -> f64 {
        h2_norm(&self.phi) + h2_norm(&self.theta) + self.z.abs() + self.eta.abs()
    }

    /// Largest nodal/scalar magnitude; cheap gauge for test tolerances.
    pub fn sup_norm(&self) -> f64 {
        self.phi
            .sup_norm()
            .max(self.theta.sup_norm())
            .max(self.z.abs())
            .max(self.eta.abs())
    }

    /// Constraint defect: how far the state is from the linear constraint
    /// space (mean-zero `phi`, vanishing `theta` traces).
    pub fn m0_defect(&self) -> f64 {
        self.phi
            .mean()
            .abs()
            .max(grid::trace_bottom(&self.theta).abs())
            .max(grid::trace_top(&self.theta).abs())
    }

    pub fn check_m0(&self, tol: f64) -> Result<()> {
        let d = self.m0_defect();
        if d <= tol {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "state violates the constraint space: defect {d:e} > {tol:e}"
            )))
        }
    }

    /// Serializes to the interchange JSON shape `{n, phi, theta, z, eta}`.
    pub fn to_json(&self) -> Result<String> {
        let repr = PhasePointRepr {
            n: self.n(),
            phi: self.phi.values().iter().copied().collect(),
            theta: self.theta.values().iter().copied().collect(),
            z: self.z,
            eta: self.eta,
        };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    /// Reads the interchange JSON shape, rebuilding the grid from `n`.
    pub fn from_json(text: &str) -> Result<PhasePoint> {
        let repr: PhasePointRepr = serde_json::from_str(text)?;
        if repr.phi.len() != repr.n || repr.theta.len() != repr.n {
            return Err(Error::invalid(format!(
                "profile lengths ({}, {}) do not match n = {}",
                repr.phi.len(),
                repr.theta.len(),
                repr.n
            )));
        }
        let g = grid::build_grid(repr.n)?;
        Ok(PhasePoint {
            phi: GridFn::from_values(g.clone(), nalgebra::DVector::from_vec(repr.phi)),
            theta: GridFn::from_values(g, nalgebra::DVector::from_vec(repr.theta)),
            z: repr.z,
            eta: repr.eta,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PhasePointRepr {
    n: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    z: f64,
    eta: f64,
}

fn h1_norm(f: &GridFn) -> f64 {
    let fy = f.deriv();
    (f.mul(f).integral() + fy.mul(&fy).integral()).sqrt()
}

fn h2_norm(f: &GridFn) -> f64 {
    let fy = f.deriv();
    let fyy = fy.deriv();
    (f.mul(f).integral() + fy.mul(&fy).integral() + fyy.mul(&fyy).integral()).sqrt()
}

/// Modified momentum
/// `z_tilde = z + ∫ y phi_y (theta_y + omega (1 - y) - 1) / (eta + 1) dy`.
///
/// Admissibility of a state means `|z_tilde| < sigma`; the square root
/// `sqrt(sigma^2 - z_tilde^2)` appears throughout the Hamiltonian
/// formalism.
pub fn z_tilde(m: &PhasePoint, p: &Params) -> f64 {
    let g = m.grid().clone();
    let omega = p.omega();
    let phi_y = m.phi.deriv();
    let theta_y = m.theta.deriv();
    let y = GridFn::from_fn(g.clone(), |y| y);
    let drift = GridFn::from_fn(g, |y| omega * (1.0 - y) - 1.0);
    let integrand = y.mul(&phi_y).mul(&theta_y.add_scaled(1.0, &drift));
    m.z + integrand.integral() / (m.eta + 1.0)
}

/// Checks that a state lies in the open admissible set: no bottom
/// touchdown and momentum strictly inside the capillary bound.
pub fn check_admissible(m: &PhasePoint, p: &Params) -> Result<()> {
    if !(m.eta > -1.0) {
        return Err(Error::invalid(format!(
            "eta = {} touches the bottom (needs eta > -1)",
            m.eta
        )));
    }
    let zt = z_tilde(m, p);
    if !(zt.abs() < p.sigma()) {
        return Err(Error::invalid(format!(
            "modified momentum |z_tilde| = {:e} is not below sigma = {:e}",
            zt.abs(),
            p.sigma()
        )));
    }
    Ok(())
}

/// The reverser `S(phi, theta, z, eta) = (-phi, theta, -z, eta)`.
///
/// States fixed by `S` correspond to waves symmetric about the crest line;
/// the whole formalism is reversible with respect to this involution.
pub fn reverser(m: &PhasePoint) -> PhasePoint {
    PhasePoint {
        phi: -&m.phi,
        theta: m.theta.clone(),
        z: -m.z,
        eta: m.eta,
    }
}

/// Orthogonal-in-spirit projection onto the constraint space: removes the
/// mean of `phi` and the unique affine function matching the `theta`
/// traces. Exactly linear and exactly idempotent (the affine corrections
/// have trace pattern `(1, 0)` / `(0, 1)` and zero correction mean).
pub fn project_m0(m: &PhasePoint) -> PhasePoint {
    let g = m.grid().clone();
    let phi = m.phi.map({
        let mean = m.phi.mean();
        move |v| v - mean
    });
    let t0 = grid::trace_bottom(&m.theta);
    let t1 = grid::trace_top(&m.theta);
    let ramp_down = GridFn::from_fn(g.clone(), |y| 1.0 - y);
    let ramp_up = GridFn::from_fn(g, |y| y);
    let theta = m
        .theta
        .add_scaled(-t0, &ramp_down)
        .add_scaled(-t1, &ramp_up);
    PhasePoint {
        phi,
        theta,
        z: m.z,
        eta: m.eta,
    }
}

/// Deterministic random states for tests and the verification suite.
pub mod sampling {
    use super::*;
    use rand::Rng;

    /// Smooth random profile: a few low-frequency trigonometric modes with
    /// `1/k^2`-damped coefficients, so every sample is fully resolved on
    /// any grid this crate builds.
    pub fn smooth_fn(grid: &Arc<CollocationGrid>, rng: &mut impl Rng, amp: f64) -> GridFn {
        let mut coeffs = Vec::new();
        for k in 1..=6 {
            let damping = amp / (k * k) as f64;
            coeffs.push((
                k as f64,
                rng.gen_range(-damping..damping),
                rng.gen_range(-damping..damping),
            ));
        }
        GridFn::from_fn(grid.clone(), move |y| {
            coeffs
                .iter()
                .map(|&(k, a, b)| {
                    let t = k * std::f64::consts::PI * y;
                    a * t.cos() + b * t.sin()
                })
                .sum()
        })
    }

    /// Random state in the constraint space, of surrogate size `~ amp`.
    pub fn random_m0(
        grid: &Arc<CollocationGrid>,
        rng: &mut impl Rng,
        amp: f64,
    ) -> PhasePoint {
        let phi = smooth_fn(grid, rng, amp);
        let theta = smooth_fn(grid, rng, amp);
        let z = rng.gen_range(-amp..amp);
        let eta = rng.gen_range(-amp..amp);
        project_m0(&PhasePoint::new(phi, theta, z, eta))
    }

    /// Random tangent vector (the constraint space itself).
    pub fn random_tangent(
        grid: &Arc<CollocationGrid>,
        rng: &mut impl Rng,
        amp: f64,
    ) -> TangentVec {
        random_m0(grid, rng, amp)
    }

    /// Random admissible state satisfying both wall conditions of the
    /// evolution's domain: `phi_y(0) = 0` and
    /// `phi_y(1) = z_tilde (theta_y(1) - 1) / sqrt(sigma^2 - z_tilde^2)`.
    ///
    /// The base profile is a Neumann cosine sum; the top slope is tuned by
    /// adding a multiple of `y^3/3` (whose slope vanishes at the bottom
    /// only). Since `z_tilde` itself depends on `phi`, the tuning is a
    /// small fixed-point iteration. To keep that iteration contractive the
    /// sampler prescribes a small starting momentum (rather than drawing
    /// `z` outright): large `|z_tilde|` drives the required top slope
    /// toward the capillary bound where no solution exists.
    pub fn random_dom(
        grid: &Arc<CollocationGrid>,
        p: &Params,
        rng: &mut impl Rng,
        amp: f64,
    ) -> PhasePoint {
        let phi0 = neumann_fn(grid, rng, amp);
        let theta = dirichlet_fn(grid, rng, amp);
        let zt_base = rng.gen_range(-amp / 2.0..amp / 2.0);
        let eta = rng.gen_range(-amp..amp);
        let bump = {
            let raw = GridFn::from_fn(grid.clone(), |y| y * y * y / 3.0);
            let mean = raw.mean();
            raw.map(move |v| v - mean)
        };
        // Solve z from the prescribed base momentum, then iterate the slope.
        let mut m = PhasePoint::new(phi0.clone(), theta, 0.0, eta);
        m.z = zt_base - z_tilde(&m, p);
        for _ in 0..60 {
            let zt = z_tilde(&m, p);
            assert!(
                zt.is_finite() && zt.abs() < p.sigma(),
                "dom sampler left the admissible set (z_tilde = {zt})"
            );
            let root = (p.sigma() * p.sigma() - zt * zt).sqrt();
            let target = zt * (grid::trace_top(&m.theta.deriv()) - 1.0) / root;
            m.phi = phi0.add_scaled(target, &bump);
        }
        m
    }

    /// Random state in the flattened variables' domain: both wall slopes
    /// of the potential vanish outright.
    pub fn random_flat_dom(
        grid: &Arc<CollocationGrid>,
        rng: &mut impl Rng,
        amp: f64,
    ) -> PhasePoint {
        let phi = neumann_fn(grid, rng, amp);
        let theta = dirichlet_fn(grid, rng, amp);
        let z = rng.gen_range(-amp..amp);
        let eta = rng.gen_range(-amp..amp);
        PhasePoint::new(phi, theta, z, eta)
    }

    /// Cosine sum: zero mean, zero slope at both walls.
    pub fn neumann_fn(grid: &Arc<CollocationGrid>, rng: &mut impl Rng, amp: f64) -> GridFn {
        let mut coeffs = Vec::new();
        for k in 1..=6 {
            let damping = amp / (k * k) as f64;
            coeffs.push((k as f64, rng.gen_range(-damping..damping)));
        }
        GridFn::from_fn(grid.clone(), move |y| {
            coeffs
                .iter()
                .map(|&(k, a)| a * (k * std::f64::consts::PI * y).cos())
                .sum()
        })
    }

    /// Sine sum: vanishes at both walls.
    pub fn dirichlet_fn(grid: &Arc<CollocationGrid>, rng: &mut impl Rng, amp: f64) -> GridFn {
        let mut coeffs = Vec::new();
        for k in 1..=6 {
            let damping = amp / (k * k) as f64;
            coeffs.push((k as f64, rng.gen_range(-damping..damping)));
        }
        GridFn::from_fn(grid.clone(), move |y| {
            coeffs
                .iter()
                .map(|&(k, a)| a * (k * std::f64::consts::PI * y).sin())
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> Arc<CollocationGrid> {
        grid::build_grid(48).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, 0.3, 0.0, 0.0).is_err());
        assert!(Params::new(1.0, 1.0 / 3.0, 0.0, 0.0).is_err());
        assert!(Params::new(1.0, 0.5, 0.6, 0.0).is_err());
        assert!(Params::new(1.0, 0.5, 0.0, -0.6).is_err());
        let p = Params::new(1.0, 0.5, 0.1, -0.05).unwrap();
        assert_abs_diff_eq!(p.omega(), 1.1);
        assert_abs_diff_eq!(p.sigma(), 0.45);
        assert_abs_diff_eq!(p.gap(), 0.5 - 1.0 / 3.0);
    }

    #[test]
    fn projection_is_idempotent_and_kills_defect() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let raw = PhasePoint::new(
                sampling::smooth_fn(&g, &mut rng, 1.0),
                sampling::smooth_fn(&g, &mut rng, 1.0),
                0.3,
                0.2,
            );
            let once = project_m0(&raw);
            assert!(once.m0_defect() <= 1e-12, "defect {:e}", once.m0_defect());
            let twice = project_m0(&once);
            assert!(once.sub(&twice).sup_norm() <= 1e-13);
        }
    }

    #[test]
    fn projection_is_linear() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = PhasePoint::new(
            sampling::smooth_fn(&g, &mut rng, 1.0),
            sampling::smooth_fn(&g, &mut rng, 1.0),
            0.4,
            -0.1,
        );
        let v = PhasePoint::new(
            sampling::smooth_fn(&g, &mut rng, 1.0),
            sampling::smooth_fn(&g, &mut rng, 1.0),
            -0.2,
            0.5,
        );
        let lhs = project_m0(&u.scale(0.7).add(&v.scale(-1.3)));
        let rhs = project_m0(&u).scale(0.7).add(&project_m0(&v).scale(-1.3));
        assert!(lhs.sub(&rhs).sup_norm() <= 1e-12);
    }

    #[test]
    fn projection_annihilates_linear_theta() {
        let g = test_grid();
        let m = PhasePoint::new(
            GridFn::zeros(g.clone()),
            GridFn::from_fn(g, |y| y),
            0.0,
            0.0,
        );
        let pm = project_m0(&m);
        assert!(pm.theta.sup_norm() <= 1e-13);
    }

    #[test]
    fn z_tilde_is_odd_under_reverser() {
        let g = test_grid();
        let p = Params::new(1.0, 0.5, 0.02, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let m = sampling::random_m0(&g, &mut rng, 0.1);
            let zt = z_tilde(&m, &p);
            let zt_rev = z_tilde(&reverser(&m), &p);
            assert_abs_diff_eq!(zt_rev, -zt, epsilon = 1e-14);
        }
    }

    #[test]
    fn reverser_is_an_involution() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = sampling::random_m0(&g, &mut rng, 0.3);
        let back = reverser(&reverser(&m));
        assert_eq!(back.sub(&m).sup_norm(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let m = sampling::random_m0(&g, &mut rng, 0.2);
        let text = m.to_json().unwrap();
        let back = PhasePoint::from_json(&text).unwrap();
        assert_eq!(back.n(), m.n());
        assert_eq!(back.sub(&m).sup_norm(), 0.0);
    }

    #[test]
    fn json_rejects_mismatched_lengths() {
        let text = r#"{"n": 16, "phi": [0.0], "theta": [0.0], "z": 0.0, "eta": 0.0}"#;
        assert!(PhasePoint::from_json(text).is_err());
    }

    #[test]
    fn admissibility_detects_violations() {
        let g = test_grid();
        let p = Params::critical(0.5).unwrap();
        let mut bad = PhasePoint::zero(g.clone());
        bad.eta = -1.0;
        assert!(check_admissible(&bad, &p).is_err());
        let mut bad = PhasePoint::zero(g);
        bad.z = 0.6; // z_tilde = z here; sigma = 0.5
        assert!(check_admissible(&bad, &p).is_err());
    }

    #[test]
    fn sampled_dom_states_satisfy_both_wall_conditions() {
        let g = test_grid();
        let p = Params::new(1.0, 0.5, 0.03, -0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..5 {
            let m = sampling::random_dom(&g, &p, &mut rng, 0.05);
            assert!(m.m0_defect() <= 1e-11, "defect {:e}", m.m0_defect());
            let phi_y = m.phi.deriv();
            assert!(phi_y.first().abs() <= 1e-10);
            let zt = z_tilde(&m, &p);
            let target = zt * (m.theta.deriv().last() - 1.0)
                / (p.sigma() * p.sigma() - zt * zt).sqrt();
            assert!(
                (phi_y.last() - target).abs() <= 1e-10,
                "top slope residual {:e}",
                (phi_y.last() - target).abs()
            );
            check_admissible(&m, &p).unwrap();
        }
    }

    #[test]
    fn norms_scale_homogeneously() {
        let g = test_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = sampling::random_m0(&g, &mut rng, 0.3);
        assert_abs_diff_eq!(m.scale(2.0).x1_norm(), 2.0 * m.x1_norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.scale(2.0).x2_norm(), 2.0 * m.x2_norm(), epsilon = 1e-11);
        assert_eq!(PhasePoint::zero(g).x2_norm(), 0.0);
    }
}
