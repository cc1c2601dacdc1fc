//! The reduced planar dynamics on the generalized kernel.
//!
//! Near the critical parameters the flow on the two-dimensional center
//! subspace is governed, after truncating the remainders, by a reversible
//! planar Hamiltonian system in the chain-basis coordinates `(q, p)`. Its
//! coefficients are second and third derivatives of the transformed
//! Hamiltonian at the origin, evaluated here as explicit quadrature
//! functionals and polarized into multilinear forms, so the closed-form
//! coefficient table can be *measured* rather than assumed. A long-wave
//! rescaling turns the truncated system into the stationary KdV normal
//! form, whose explicit `sech^2` pulse is reproduced independently by
//! reversible shooting: integrate from the unstable direction of the
//! saddle until the trajectory hits the symmetry section `{p = 0}`, then
//! reflect.

use nalgebra::Vector2;

use crate::flatten::{theta_p, FlattenedPoint};
use crate::grid::{trace_top, GridFn};
use crate::ode::{integrate_to, DormandPrince, Tolerances};
use crate::state::Params;
use crate::{Error, Result};

/// Half-width of the reported homoclinic window (in the stretched
/// coordinate, centered at the symmetry crossing).
pub const HOMOCLINIC_HALF_WINDOW: f64 = 20.0;

/// Uniform sample spacing of the reported homoclinic trajectory. Small
/// enough that a fourth-order finite-difference check of the ODE residual
/// on the samples resolves `1e-8`.
pub const HOMOCLINIC_STEP: f64 = 0.01;

/// Default launch distance along the unstable eigendirection.
const LAUNCH_OFFSET: f64 = 1e-8;

/// Give up if no symmetry crossing appears within this much stretched time.
const CROSSING_SPAN: f64 = 200.0;

// ---------------------------------------------------------------------------
// Planar states
// ---------------------------------------------------------------------------

/// A point of the reduced phase plane in chain-basis coordinates: the
/// center-subspace vector is `q e + p f`. The reverser acts by
/// `S(q, p) = (q, -p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarState {
    pub q: f64,
    pub p: f64,
}

impl PlanarState {
    pub fn new(q: f64, p: f64) -> PlanarState {
        PlanarState { q, p }
    }
}

/// A point of the long-wave plane together with the stretched horizontal
/// coordinate. The fields hold the capital variables of the rescaling:
/// `q` stores `Q`, `p` stores `P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledState {
    pub q: f64,
    pub p: f64,
    pub xbar: f64,
}

impl RescaledState {
    pub fn new(q: f64, p: f64, xbar: f64) -> RescaledState {
        RescaledState { q, p, xbar }
    }
}

// ---------------------------------------------------------------------------
// Coefficient functionals
// ---------------------------------------------------------------------------

fn require_same_grid(a: &FlattenedPoint, b: &FlattenedPoint) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::invalid(format!(
            "grid mismatch: {} vs {} intervals",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

/// Diagonal of the quadratic term of the transformed Hamiltonian's Taylor
/// expansion at the origin (the vorticity-independent part):
///
/// ```text
/// int theta_y^2 - int Phi_y^2 + 6 (Phi(1)+Z) int y Phi_y - 3 (Phi(1)+Z)^2
/// + eta^2 - 4 omega0 eta int theta + (omega0^2/3) eta^2 - omega0 eta^2
/// + 9 sigma0 (Phi(1)+Z)^2
/// ```
fn diag_d2h0(u: &FlattenedPoint, p: &Params) -> f64 {
    let w0 = p.omega0;
    let theta_y = u.theta.deriv();
    let phi_y = u.phi.deriv();
    let y = GridFn::from_fn(u.grid().clone(), |y| y);
    let l = trace_top(&u.phi) + u.z;
    let eta = u.eta;
    theta_y.mul(&theta_y).integral() - phi_y.mul(&phi_y).integral()
        + 6.0 * l * y.mul(&phi_y).integral()
        - 3.0 * l * l
        + eta * eta
        - 4.0 * w0 * eta * u.theta.integral()
        + w0 * w0 / 3.0 * eta * eta
        - w0 * eta * eta
        + 9.0 * p.sigma0 * l * l
}

/// Diagonal of the cubic term of the same expansion:
///
/// ```text
/// -3 eta int theta_y^2 + 3 eta int Phi_y^2 - omega0^2 eta^3
/// + 3 omega0 eta^3 - 3 eta^3 + 6 omega0 eta^2 int theta
/// - 18 (Phi(1)+Z) int y Phi_y theta_y
/// + 54 (Phi(1)+Z) theta_p(1) int y Phi_y
/// - 18 eta (Phi(1)+Z) int y Phi_y + 9 eta (Phi(1)+Z)^2
/// + 54 (Phi(1)+Z)^2 int y^2 theta_y - 54 (Phi(1)+Z)^2 theta_p(1)
/// + 162 sigma0 (Phi(1)+Z)^2 theta_p(1)
/// ```
fn diag_d3h0(u: &FlattenedPoint, p: &Params) -> f64 {
    let w0 = p.omega0;
    let g = u.grid().clone();
    let theta_y = u.theta.deriv();
    let phi_y = u.phi.deriv();
    let y = GridFn::from_fn(g.clone(), |y| y);
    let y2 = GridFn::from_fn(g, |y| y * y);
    let l = trace_top(&u.phi) + u.z;
    let eta = u.eta;
    let tp1 = trace_top(&theta_p(&u.theta));
    let int_y_phi_y = y.mul(&phi_y).integral();
    -3.0 * eta * theta_y.mul(&theta_y).integral()
        + 3.0 * eta * phi_y.mul(&phi_y).integral()
        - w0 * w0 * eta.powi(3)
        + 3.0 * w0 * eta.powi(3)
        - 3.0 * eta.powi(3)
        + 6.0 * w0 * eta * eta * u.theta.integral()
        - 18.0 * l * y.mul(&phi_y).mul(&theta_y).integral()
        + 54.0 * l * tp1 * int_y_phi_y
        - 18.0 * eta * l * int_y_phi_y
        + 9.0 * eta * l * l
        + 54.0 * l * l * y2.mul(&theta_y).integral()
        - 54.0 * l * l * tp1
        + 162.0 * p.sigma0 * l * l * tp1
}

/// Diagonal of the quadratic coefficient of the linear-in-`eps1` term:
/// `-4 eta int theta + (2 omega0 / 3) eta^2 - eta^2`.
fn diag_d2h1(u: &FlattenedPoint, p: &Params) -> f64 {
    let eta = u.eta;
    -4.0 * eta * u.theta.integral() + 2.0 * p.omega0 / 3.0 * eta * eta - eta * eta
}

/// The quadratic coefficient functional of the reduced expansion, as a
/// bilinear form: polarization `B(u, v) = (Q(u+v) - Q(u-v)) / 4` of the
/// homogeneous diagonal, which is exact.
pub fn quad_form_d2h0(v1: &FlattenedPoint, v2: &FlattenedPoint, p: &Params) -> Result<f64> {
    require_same_grid(v1, v2)?;
    Ok(0.25 * (diag_d2h0(&v1.add(v2), p) - diag_d2h0(&v1.sub(v2), p)))
}

/// The cubic coefficient functional as a symmetric trilinear form, by the
/// inclusion–exclusion polarization
/// `T(u,v,w) = (1/6) [Q(u+v+w) - Q(u+v) - Q(u+w) - Q(v+w) + Q(u) + Q(v) + Q(w)]`,
/// exact for a homogeneous cubic.
pub fn cubic_form_d3h0(
    v1: &FlattenedPoint,
    v2: &FlattenedPoint,
    v3: &FlattenedPoint,
    p: &Params,
) -> Result<f64> {
    require_same_grid(v1, v2)?;
    require_same_grid(v1, v3)?;
    let q = |u: &FlattenedPoint| diag_d3h0(u, p);
    Ok((q(&v1.add(v2).add(v3)) - q(&v1.add(v2)) - q(&v1.add(v3)) - q(&v2.add(v3))
        + q(v1)
        + q(v2)
        + q(v3))
        / 6.0)
}

/// The `eps1`-linear quadratic coefficient functional, polarized like
/// [`quad_form_d2h0`].
pub fn quad_form_d2h1(v1: &FlattenedPoint, v2: &FlattenedPoint, p: &Params) -> Result<f64> {
    require_same_grid(v1, v2)?;
    Ok(0.25 * (diag_d2h1(&v1.add(v2), p) - diag_d2h1(&v1.sub(v2), p)))
}

// ---------------------------------------------------------------------------
// Reduced field, rescaling, normal form
// ---------------------------------------------------------------------------

/// Hamilton's equations of the truncated reduced system (remainders
/// dropped), with `tau = sigma0 - 1/3`:
///
/// ```text
/// q_dot = p,    p_dot = eps1 q / tau + q^2 / (2 tau^{3/2}).
/// ```
///
/// Meaningful for `sigma0 > 1/3`. Besides the origin the field has the
/// equilibrium `q = -2 eps1 sqrt(tau)`, `p = 0`.
pub fn reduced_field(s: PlanarState, eps1: f64, sigma0: f64) -> PlanarState {
    let tau = sigma0 - 1.0 / 3.0;
    PlanarState {
        q: s.p,
        p: eps1 * s.q / tau + s.q * s.q / (2.0 * tau.powf(1.5)),
    }
}

/// The long-wave rescaling `Q = q / (eps1 sqrt(tau))`, `P = p / eps1^{3/2}`,
/// `xbar = sqrt(eps1) tau^{-1/2} x`, with `tau = sigma0 - 1/3`.
pub fn rescale(s: PlanarState, eps1: f64, sigma0: f64, x: f64) -> Result<RescaledState> {
    let tau = check_rescale_params(eps1, sigma0)?;
    Ok(RescaledState {
        q: s.q / (eps1 * tau.sqrt()),
        p: s.p / eps1.powf(1.5),
        xbar: (eps1 / tau).sqrt() * x,
    })
}

/// Exact inverse of [`rescale`]; returns the planar state and the
/// unstretched coordinate.
pub fn unrescale(r: RescaledState, eps1: f64, sigma0: f64) -> Result<(PlanarState, f64)> {
    let tau = check_rescale_params(eps1, sigma0)?;
    Ok((
        PlanarState {
            q: r.q * eps1 * tau.sqrt(),
            p: r.p * eps1.powf(1.5),
        },
        r.xbar * (tau / eps1).sqrt(),
    ))
}

fn check_rescale_params(eps1: f64, sigma0: f64) -> Result<f64> {
    if !(eps1 > 0.0) {
        return Err(Error::invalid(format!(
            "long-wave rescaling requires eps1 > 0 (got {eps1})"
        )));
    }
    let tau = sigma0 - 1.0 / 3.0;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "long-wave rescaling requires sigma0 > 1/3 (got {sigma0})"
        )));
    }
    Ok(tau)
}

/// The stationary KdV normal form `Q_dot = P`, `P_dot = Q + Q^2/2`; the
/// `xbar` slot of the returned value is the unit rate of the independent
/// variable.
pub fn kdv_field(s: RescaledState) -> RescaledState {
    RescaledState {
        q: s.p,
        p: s.q + s.q * s.q / 2.0,
        xbar: 1.0,
    }
}

/// The planar restriction of [`kdv_field`], in the shape the shooting
/// routine consumes.
pub fn kdv_planar(y: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(y[1], y[0] + y[0] * y[0] / 2.0)
}

/// First integral of the normal form, `P^2/2 - Q^2/2 - Q^3/6`; the
/// homoclinic orbit lives on its zero level.
pub fn kdv_energy(s: RescaledState) -> f64 {
    s.p * s.p / 2.0 - s.q * s.q / 2.0 - s.q.powi(3) / 6.0
}

/// The explicit homoclinic solution of the normal form:
/// `Q = -3 sech^2(xbar/2)`, `P = 3 sech^2(xbar/2) tanh(xbar/2)`.
pub fn exact_homoclinic(xbar: f64) -> RescaledState {
    let sech = 1.0 / (xbar / 2.0).cosh();
    let tanh = (xbar / 2.0).tanh();
    RescaledState {
        q: -3.0 * sech * sech,
        p: 3.0 * sech * sech * tanh,
        xbar,
    }
}

// ---------------------------------------------------------------------------
// Reversible shooting
// ---------------------------------------------------------------------------

/// A symmetric homoclinic trajectory on a uniform grid of the stretched
/// coordinate, centered at the symmetry crossing `p = 0`. The right half
/// is the reflection `S(q, p) = (q, -p)` of the integrated left half.
#[derive(Clone, Debug)]
pub struct HomoclinicOrbit {
    pub xbar: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl HomoclinicOrbit {
    /// Index of the symmetry crossing (the center sample).
    pub fn center(&self) -> usize {
        self.xbar.len() / 2
    }
}

/// Shoots the homoclinic orbit of a reversible planar field with the
/// default launch offset; see [`shoot_homoclinic_from`].
pub fn shoot_homoclinic<F>(field: F, tol: f64) -> Result<HomoclinicOrbit>
where
    F: Fn(&Vector2<f64>) -> Vector2<f64>,
{
    shoot_homoclinic_from(field, tol, LAUNCH_OFFSET)
}

/// Shoots the homoclinic orbit: launch a trajectory from the unstable
/// eigendirection of the saddle at the origin (at the given offset, on the
/// `q < 0` side), integrate with local tolerance `tol` until it crosses
/// the symmetry section `{p = 0}` transversally and well clear of the
/// saddle (`q < -1000 * offset`), refine the crossing by bisection, and
/// complete the orbit by reflection.
///
/// Fails if the origin is not a saddle with a usable unstable direction,
/// or if no crossing appears within a field time of `200`.
pub fn shoot_homoclinic_from<F>(field: F, tol: f64, offset: f64) -> Result<HomoclinicOrbit>
where
    F: Fn(&Vector2<f64>) -> Vector2<f64>,
{
    if !(1e-15..=1e-3).contains(&tol) {
        return Err(Error::invalid(format!(
            "shooting tolerance {tol} is outside [1e-15, 1e-3]"
        )));
    }
    if !(1e-12..=1e-4).contains(&offset) {
        return Err(Error::invalid(format!(
            "launch offset {offset} is outside [1e-12, 1e-4]"
        )));
    }

    // Unstable eigendirection of the linearization at the origin, by
    // central differences (exact for the quadratic fields used here).
    let delta = 1e-7;
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut step = Vector2::zeros();
        step[j] = delta;
        let diff = (field(&step) - field(&(-step))) / (2.0 * delta);
        jac[0][j] = diff[0];
        jac[1][j] = diff[1];
    }
    let (a, b, c, d) = (jac[0][0], jac[0][1], jac[1][0], jac[1][1]);
    let det = a * d - b * c;
    if det >= -1e-12 {
        return Err(Error::invalid(format!(
            "origin is not a saddle: Jacobian determinant {det:e} is not negative"
        )));
    }
    let mu = 0.5 * (a + d) + (0.25 * (a + d).powi(2) - det).sqrt();
    // Eigenvector of the unstable eigenvalue; pick the better-conditioned
    // of the two row formulas.
    let cand1 = Vector2::new(b, mu - a);
    let cand2 = Vector2::new(mu - d, c);
    let mut dir = if cand1.norm() >= cand2.norm() { cand1 } else { cand2 };
    dir /= dir.norm();
    if dir[0].abs() < 1e-12 {
        return Err(Error::invalid(
            "unstable direction has no q component; cannot launch toward q < -1".to_string(),
        ));
    }
    if dir[0] > 0.0 {
        dir = -dir;
    }

    // March until the trajectory crosses {p = 0} away from the saddle. The
    // absolute tolerance is scaled by the launch offset: the escape from
    // the saddle amplifies early errors like the state itself, so accuracy
    // relative to the (initially tiny) state is what survives to the
    // crossing.
    let q_gate = -1e3 * offset;
    let tols = Tolerances {
        abs_tol: tol * offset,
        rel_tol: tol,
    };
    let launch = dir * offset;
    let mut stepper = DormandPrince::new(&field, 0.0, launch, tols);
    let (mut x_lo, mut y_lo) = (stepper.x(), *stepper.y());
    let crossing = loop {
        if stepper.x() >= CROSSING_SPAN {
            return Err(Error::numerical(format!(
                "no symmetry crossing with q < {q_gate:e} within field time {CROSSING_SPAN}; \
                 the trajectory is not homoclinic"
            )));
        }
        stepper.step_toward(CROSSING_SPAN)?;
        let (x, y) = (stepper.x(), *stepper.y());
        if y_lo[1] < 0.0 && y[1] >= 0.0 && y[0] < q_gate {
            break (x_lo, y_lo, x);
        }
        (x_lo, y_lo) = (x, y);
    };

    // Bisection refinement of the crossing time within the bracket.
    let (bracket_lo, bracket_state, mut hi) = crossing;
    let mut lo = bracket_lo;
    let mut y_c = bracket_state;
    let mut x_c = bracket_lo;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let y_mid = integrate_to(&field, bracket_lo, bracket_state, mid, tols)?;
        if y_mid[1] < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        (x_c, y_c) = (mid, y_mid);
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    if y_c[1].abs() > 1e-9 * (1.0 + y_c[0].abs()) {
        return Err(Error::numerical(format!(
            "crossing refinement stalled: p = {:e} at the section",
            y_c[1]
        )));
    }

    // Uniform window around the crossing, clipped to the launch time.
    let half_steps = ((HOMOCLINIC_HALF_WINDOW.min(x_c) / HOMOCLINIC_STEP).floor()) as usize;
    let total = 2 * half_steps + 1;
    let mut xbar = vec![0.0; total];
    let mut q = vec![0.0; total];
    let mut p = vec![0.0; total];

    // Left half: one continuous pass from the launch state.
    let (mut x_cur, mut y_cur) = (0.0, launch);
    for j in 0..=half_steps {
        let rel = (j as f64 - half_steps as f64) * HOMOCLINIC_STEP;
        let target = x_c + rel;
        y_cur = integrate_to(&field, x_cur, y_cur, target, tols)?;
        x_cur = target;
        xbar[j] = rel;
        q[j] = y_cur[0];
        p[j] = y_cur[1];
    }
    // Right half by reflection.
    for j in 1..=half_steps {
        xbar[half_steps + j] = j as f64 * HOMOCLINIC_STEP;
        q[half_steps + j] = q[half_steps - j];
        p[half_steps + j] = -p[half_steps - j];
    }
    Ok(HomoclinicOrbit { xbar, q, p })
}
