//! Near-identity change of variables that straightens the wall conditions.
//!
//! The Hamiltonian field of [`crate::hamiltonian`] lives on a domain cut
//! out by one inhomogeneous, state-dependent wall condition. The map
//! implemented here trades the potential `phi` and momentum `z` for new
//! variables `(Phi, Z)` in which the domain becomes the fixed Neumann
//! space `Phi_y(0) = Phi_y(1) = 0`. The map has an explicit inverse (no
//! iteration anywhere), an explicit linearization at the origin, and
//! conjugates the Hamiltonian and its field to the transformed versions
//! [`transformed_hamiltonian`] / [`transformed_field`].
//!
//! Flattened states reuse the [`PhasePoint`] container; the first
//! component is read as `Phi` and the third as `Z`. Both coordinate charts
//! satisfy the same linear constraints, so every state helper applies
//! unchanged.
//!
//! The map is a diffeomorphism only near the origin. How far exactly is an
//! open modeling question; rather than guessing a sharp radius, [`flatten`]
//! enforces the conservative default [`FLATTEN_RADIUS`] in the surrogate
//! `X^2` norm and [`flatten_with_radius`] exposes the knob.

use crate::grid::{trace_top, GridFn};
use crate::state::{check_admissible, z_tilde, Params, PhasePoint, TangentVec};
use crate::{Error, Result};

/// Flattened states ride in the shared state container: fields `phi` and
/// `z` hold `Phi` and `Z`.
pub type FlattenedPoint = PhasePoint;

/// Default validity radius of [`flatten`] in the surrogate `X^2` norm.
pub const FLATTEN_RADIUS: f64 = 0.1;

/// Denominators of the inverse map smaller than this are treated as
/// singular (the state is far outside the chart).
const SINGULAR_TOL: f64 = 1e-6;

/// The scalar weight `W = z_tilde / sqrt(sigma^2 - z_tilde^2)`.
///
/// Requires an admissible state (`|z_tilde| < sigma`); returns NaN
/// otherwise. Odd under the reverser because `z_tilde` is.
pub fn w_of(m: &PhasePoint, p: &Params) -> f64 {
    let zt = z_tilde(m, p);
    let sigma = p.sigma();
    zt / (sigma * sigma - zt * zt).sqrt()
}

/// The primitive `theta_p(y) = ∫_0^y s theta_s ds - (its mean)`, computed
/// with the spectral antiderivative (never a trapezoid sum: the rest of
/// the chart is spectrally accurate and the primitive must keep up).
pub fn theta_p(theta: &GridFn) -> GridFn {
    let g = theta.grid().clone();
    let y = GridFn::from_fn(g, |y| y);
    let raw = y.mul(&theta.deriv()).cumint();
    let mean = raw.mean();
    raw.map(move |v| v - mean)
}

/// The quadratic profile `q(y) = (y^2 - 1/3) / 2` recurring in the chart.
fn half_parabola(like: &GridFn) -> GridFn {
    GridFn::from_fn(like.grid().clone(), |y| 0.5 * (y * y - 1.0 / 3.0))
}

/// Forward chart with the default validity radius. See
/// [`flatten_with_radius`].
pub fn flatten(m: &PhasePoint, p: &Params) -> Result<FlattenedPoint> {
    flatten_with_radius(m, p, FLATTEN_RADIUS)
}

/// Forward chart:
/// `Phi = phi - W (theta_p - (y^2 - 1/3)/2)`, `Z = -phi(1)`, with `theta`
/// and `eta` unchanged. Exactly constraint-preserving. Fails outside the
/// prescribed `X^2`-surrogate ball or outside the admissible set.
pub fn flatten_with_radius(
    m: &PhasePoint,
    p: &Params,
    radius: f64,
) -> Result<FlattenedPoint> {
    check_admissible(m, p)?;
    let norm = m.x2_norm();
    if !(norm <= radius) {
        return Err(Error::invalid(format!(
            "state lies outside the chart: |m| = {norm:e} > radius {radius:e}"
        )));
    }
    let w = w_of(m, p);
    let shape = theta_p(&m.theta).add_scaled(-1.0, &half_parabola(&m.theta));
    Ok(FlattenedPoint {
        phi: m.phi.add_scaled(-w, &shape),
        theta: m.theta.clone(),
        z: -trace_top(&m.phi),
        eta: m.eta,
    })
}

/// The scalar `R = -(Phi(1) + Z) / (theta_p(1) - 1/3)` of the inverse
/// chart. Fails when the denominator degenerates (state far outside the
/// chart). On the image of [`flatten`] this reproduces `W` exactly.
pub fn r_of(u: &FlattenedPoint, p: &Params) -> Result<f64> {
    let _ = p;
    let tp_top = trace_top(&theta_p(&u.theta));
    let den = tp_top - 1.0 / 3.0;
    if den.abs() < SINGULAR_TOL {
        return Err(Error::numerical(format!(
            "inverse chart singular: theta_p(1) - 1/3 = {den:e}"
        )));
    }
    Ok(-(trace_top(&u.phi) + u.z) / den)
}

/// Inverse chart, in closed form:
/// `phi = Phi + R (theta_p - (y^2 - 1/3)/2)` and
/// `z = sigma R / sqrt(1 + R^2) - Z_p` with
/// `Z_p = ∫ y (Phi_y + R y (theta_y - 1)) (theta_y - 1 + omega (1 - y)) / (eta + 1)`.
pub fn unflatten(u: &FlattenedPoint, p: &Params) -> Result<PhasePoint> {
    if !(u.eta > -1.0) {
        return Err(Error::invalid(format!(
            "eta = {} touches the bottom (needs eta > -1)",
            u.eta
        )));
    }
    let r = r_of(u, p)?;
    let omega = p.omega();
    let sigma = p.sigma();
    let g = u.grid().clone();

    let shape = theta_p(&u.theta).add_scaled(-1.0, &half_parabola(&u.theta));
    let phi = u.phi.add_scaled(r, &shape);

    let theta_y = u.theta.deriv();
    let phi_cap_y = u.phi.deriv();
    let y = GridFn::from_fn(g.clone(), |y| y);
    let drift = GridFn::from_fn(g, move |y| omega * (1.0 - y) - 1.0);
    let slope = phi_cap_y.add_scaled(r, &y.mul(&theta_y.map(|v| v - 1.0)));
    let z_p = y
        .mul(&slope)
        .mul(&theta_y.add_scaled(1.0, &drift))
        .integral()
        / (u.eta + 1.0);

    Ok(PhasePoint {
        phi,
        theta: u.theta.clone(),
        z: sigma * r / (1.0 + r * r).sqrt() - z_p,
        eta: u.eta,
    })
}

/// Linearization of the chart at the origin of states and detunings
/// (`eps = 0`), in closed form.
pub fn df0(v: &TangentVec, p: &Params) -> TangentVec {
    let phi_top = trace_top(&v.phi);
    let y = GridFn::from_fn(v.grid().clone(), |y| y);
    let moment = y.mul(&v.phi).integral();
    let coeff = (v.z - phi_top + 2.0 * p.omega0 * moment) / (2.0 * p.sigma0);
    let parabola = GridFn::from_fn(v.grid().clone(), |y| y * y - 1.0 / 3.0);
    TangentVec {
        phi: v.phi.add_scaled(coeff, &parabola),
        theta: v.theta.clone(),
        z: -phi_top,
        eta: v.eta,
    }
}

/// Exact inverse of [`df0`], in closed form.
pub fn df0_inv(u: &TangentVec, p: &Params) -> TangentVec {
    let phi_top = trace_top(&u.phi);
    let head = phi_top + u.z;
    let parabola = GridFn::from_fn(u.grid().clone(), |y| y * y - 1.0 / 3.0);
    let y = GridFn::from_fn(u.grid().clone(), |y| y);
    let moment = y.mul(&u.phi).integral();
    TangentVec {
        phi: u.phi.add_scaled(-1.5 * head, &parabola),
        theta: u.theta.clone(),
        z: (3.0 * p.sigma0 - 1.0 + p.omega0 / 4.0) * head + phi_top
            - 2.0 * p.omega0 * moment,
        eta: u.eta,
    }
}

/// The Hamiltonian in the flattened variables, in closed form. Agrees with
/// the pullback `H(unflatten(u))` on the chart; vanishes at the origin.
pub fn transformed_hamiltonian(u: &FlattenedPoint, p: &Params) -> Result<f64> {
    if !(u.eta > -1.0) {
        return Err(Error::invalid(format!(
            "eta = {} touches the bottom (needs eta > -1)",
            u.eta
        )));
    }
    let r = r_of(u, p)?;
    let omega = p.omega();
    let sigma = p.sigma();
    let h = u.eta + 1.0;
    let g = u.grid().clone();

    let theta_y = u.theta.deriv();
    let phi_cap_y = u.phi.deriv();
    let y = GridFn::from_fn(g, |y| y);
    let slope = phi_cap_y.add_scaled(r, &y.mul(&theta_y.map(|v| v - 1.0)));
    let kinetic =
        (theta_y.mul(&theta_y).integral() - slope.mul(&slope).integral()) / (2.0 * h);

    let theta_mean = u.theta.integral();
    let eta = u.eta;
    Ok(kinetic
        + eta * eta / (2.0 * h)
        + vorticity_terms(omega, h, eta, theta_mean)
        + sigma
        - sigma / (1.0 + r * r).sqrt())
}

// The vorticity block of the transformed Hamiltonian, grouped so the main
// expression above stays readable.
fn vorticity_terms(omega: f64, h: f64, eta: f64, theta_mean: f64) -> f64 {
    omega * theta_mean / h - omega * h * theta_mean + omega * omega / (6.0 * h)
        + omega * eta / (2.0 * h)
        + omega * omega * eta / 6.0
        - omega * omega / 6.0
        - omega * eta / 2.0
}

/// The Hamiltonian vector field in the flattened variables, in closed
/// form. Defined near the origin; the formulas extend smoothly wherever
/// `R` does.
pub fn transformed_field(u: &FlattenedPoint, p: &Params) -> Result<TangentVec> {
    if !(u.eta > -1.0) {
        return Err(Error::invalid(format!(
            "eta = {} touches the bottom (needs eta > -1)",
            u.eta
        )));
    }
    let r = r_of(u, p)?;
    let omega = p.omega();
    let sigma = p.sigma();
    let h = u.eta + 1.0;
    let g = u.grid().clone();

    let theta_y = u.theta.deriv();
    let phi_cap_y = u.phi.deriv();
    let phi_top = trace_top(&u.phi);
    let theta_y_top = trace_top(&theta_y);
    let y = GridFn::from_fn(g.clone(), |y| y);
    let centered = GridFn::from_fn(g.clone(), |y| y - 0.5);
    let zbar = (1.0 + r * r) * (theta_y_top - 1.0) * (theta_y_top - 1.0) / (2.0 * h * h)
        - 0.5;

    let phi_dot = {
        let z = u.z;
        let inner = y
            .mul(&phi_cap_y)
            .map(|v| 2.0 * v)
            .add_scaled(r, &y.mul(&y).mul(&theta_y.map(|v| v - 1.0)))
            .add_scaled(-1.0, &u.phi)
            .map(move |v| v - phi_top + z);
        let main = theta_y.add_scaled(r, &inner).map(move |v| v / h);
        let shape = theta_p(&u.theta).add_scaled(-1.0, &half_parabola(&u.theta));
        let cubic = GridFn::from_fn(g, move |y| {
            omega * r * r * y * y * (4.0 * y - 3.0) / (6.0 * h)
        });
        main.add_scaled(-zbar * (1.0 + r * r).powf(1.5) / sigma, &shape)
            .add_scaled(1.0, &cubic)
            .add_scaled(omega * h - omega / h, &centered)
    };

    let theta_dot = phi_cap_y
        .add_scaled(-omega * r, &GridFn::from_fn(u.grid().clone(), |y| (1.0 - y) * y))
        .map(move |v| -v / h);

    let z_dot = -(theta_y_top + r * (r * (theta_y_top - 1.0) + u.z)) / h
        - omega * h / 2.0
        + omega / (2.0 * h);

    Ok(TangentVec {
        phi: phi_dot,
        theta: theta_dot,
        z: z_dot,
        eta: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::hamiltonian::{hamiltonian, vector_field};
    use crate::state::{reverser, sampling};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> Params {
        Params::new(1.0, 0.5, 0.03, -0.02).unwrap()
    }

    /// A random constrained state rescaled to `|m|_{X^2} = 0.04`,
    /// comfortably inside the chart.
    fn small_state(
        g: &std::sync::Arc<crate::grid::CollocationGrid>,
        rng: &mut ChaCha8Rng,
    ) -> PhasePoint {
        let m = sampling::random_m0(g, rng, 0.05);
        m.scale(0.04 / m.x2_norm())
    }

    #[test]
    fn weight_reference_value_and_oddness() {
        let p = params();
        let g = build_grid(48).unwrap();
        let mut m = PhasePoint::zero(g.clone());
        m.z = p.sigma() / 2f64.sqrt(); // z_tilde = z for trivial profiles
        assert_abs_diff_eq!(w_of(&m, &p), 1.0, epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let m = sampling::random_m0(&g, &mut rng, 0.05);
            assert_abs_diff_eq!(w_of(&reverser(&m), &p), -w_of(&m, &p), epsilon = 1e-13);
        }
    }

    #[test]
    fn theta_p_reference_profile() {
        let g = build_grid(48).unwrap();
        let theta = GridFn::from_fn(g, |y| (1.0 - y) * y);
        let tp = theta_p(&theta);
        assert_abs_diff_eq!(tp.mean(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tp.last(), -1.0 / 6.0, epsilon = 1e-13);
        // Against the hand antiderivative y^2/2 - 2 y^3/3 (already
        // mean-free).
        let exact = GridFn::from_fn(tp.grid().clone(), |y| y * y / 2.0 - 2.0 * y * y * y / 3.0);
        assert!((&tp - &exact).sup_norm() <= 1e-13);
    }

    #[test]
    fn chart_fixes_origin_and_commutes_with_reverser() {
        let p = params();
        let g = build_grid(48).unwrap();
        let zero = flatten(&PhasePoint::zero(g.clone()), &p).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..5 {
            let m = small_state(&g, &mut rng);
            let lhs = flatten(&reverser(&m), &p).unwrap();
            let rhs = reverser(&flatten(&m, &p).unwrap());
            assert!(lhs.sub(&rhs).sup_norm() <= 1e-13);
        }
    }

    #[test]
    fn chart_preserves_constraints() {
        let p = params();
        let g = build_grid(48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..5 {
            let m = small_state(&g, &mut rng);
            let u = flatten(&m, &p).unwrap();
            assert!(u.m0_defect() <= 1e-12, "defect {:e}", u.m0_defect());
        }
    }

    #[test]
    fn chart_rejects_large_states() {
        let p = params();
        let g = build_grid(48).unwrap();
        let mut m = PhasePoint::zero(g);
        m.eta = 0.5;
        assert!(flatten(&m, &p).is_err());
        assert!(flatten_with_radius(&m, &p, 1.0).is_ok());
    }

    #[test]
    fn round_trip_both_ways() {
        let p = params();
        let g = build_grid(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..8 {
            let m = small_state(&g, &mut rng);
            let u = flatten(&m, &p).unwrap();
            let back = unflatten(&u, &p).unwrap();
            assert!(
                back.sub(&m).sup_norm() <= 1e-9,
                "forward round trip defect {:e}",
                back.sub(&m).sup_norm()
            );

            let v = small_state(&g, &mut rng); // read as a flattened state
            let m2 = unflatten(&v, &p).unwrap();
            let there = flatten(&m2, &p).unwrap();
            assert!(
                there.sub(&v).sup_norm() <= 1e-9,
                "reverse round trip defect {:e}",
                there.sub(&v).sup_norm()
            );
        }
    }

    /// `R` of the flattened state reproduces `W` of the original.
    #[test]
    fn r_pulls_back_to_w() {
        let p = params();
        let g = build_grid(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..8 {
            let m = small_state(&g, &mut rng);
            let u = flatten(&m, &p).unwrap();
            assert_abs_diff_eq!(r_of(&u, &p).unwrap(), w_of(&m, &p), epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_chart_flags_singular_denominator() {
        let p = params();
        let g = build_grid(48).unwrap();
        // theta = (1-y)y scaled so that theta_p(1) = 1/3: need -s/6 = 1/3.
        let theta = GridFn::from_fn(g.clone(), |y| -2.0 * (1.0 - y) * y);
        let u = PhasePoint::new(GridFn::zeros(g.clone()), theta, 0.1, 0.0);
        assert!(matches!(unflatten(&u, &p), Err(Error::Numerical(_))));
    }

    #[test]
    fn linearization_pair_is_exactly_inverse() {
        let p = Params::critical(0.5).unwrap();
        let g = build_grid(48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..5 {
            let v = sampling::random_tangent(&g, &mut rng, 0.5);
            let there_back = df0_inv(&df0(&v, &p), &p);
            assert!(there_back.sub(&v).sup_norm() <= 1e-12);
            let back_there = df0(&df0_inv(&v, &p), &p);
            assert!(back_there.sub(&v).sup_norm() <= 1e-12);
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let p = Params::critical(0.5).unwrap();
        let g = build_grid(48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h = 1e-6;
        for _ in 0..5 {
            let v = sampling::random_tangent(&g, &mut rng, 0.5);
            let plus = flatten(&v.scale(h), &p).unwrap();
            let minus = flatten(&v.scale(-h), &p).unwrap();
            let fd = plus.sub(&minus).scale(0.5 / h);
            assert!(
                fd.sub(&df0(&v, &p)).sup_norm() <= 1e-6,
                "df(0) FD defect {:e}",
                fd.sub(&df0(&v, &p)).sup_norm()
            );

            let plus = unflatten(&v.scale(h), &p).unwrap();
            let minus = unflatten(&v.scale(-h), &p).unwrap();
            let fd = plus.sub(&minus).scale(0.5 / h);
            assert!(
                fd.sub(&df0_inv(&v, &p)).sup_norm() <= 1e-6,
                "df(0)^{{-1}} FD defect {:e}",
                fd.sub(&df0_inv(&v, &p)).sup_norm()
            );
        }
    }

    #[test]
    fn transformed_energy_is_the_pullback() {
        let p = params();
        let g = build_grid(64).unwrap();
        assert_abs_diff_eq!(
            transformed_hamiltonian(&PhasePoint::zero(g.clone()), &p).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..8 {
            let u = small_state(&g, &mut rng);
            let direct = transformed_hamiltonian(&u, &p).unwrap();
            let pulled = hamiltonian(&unflatten(&u, &p).unwrap(), &p).unwrap();
            assert_abs_diff_eq!(direct, pulled, epsilon = 1e-10);
            assert_abs_diff_eq!(
                transformed_hamiltonian(&reverser(&u), &p).unwrap(),
                direct,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn transformed_field_basics() {
        let p = params();
        let g = build_grid(48).unwrap();
        let v0 = transformed_field(&PhasePoint::zero(g.clone()), &p).unwrap();
        assert!(v0.sup_norm() <= 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(39);
        for _ in 0..5 {
            let u = sampling::random_flat_dom(&g, &mut rng, 0.05);
            let u = u.scale(0.03 / u.x2_norm());
            let lhs = transformed_field(&reverser(&u), &p).unwrap();
            let rhs = reverser(&transformed_field(&u, &p).unwrap()).scale(-1.0);
            assert!(lhs.sub(&rhs).sup_norm() <= 1e-12);
            let defect = transformed_field(&u, &p).unwrap().m0_defect();
            assert!(defect <= 1e-8, "constraint defect {defect:e}");
        }
    }

    /// The closed-form transformed field is the conjugation of the
    /// original field by the chart: `v~(u) = df(m)[v_H(m)]`, `m` the
    /// unflattened state, with `df` taken by centered differences.
    #[test]
    fn transformed_field_is_the_conjugated_field() {
        let p = params();
        let g = build_grid(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..5 {
            let u = sampling::random_flat_dom(&g, &mut rng, 0.05);
            let u = u.scale(0.02 / u.x2_norm());
            let m = unflatten(&u, &p).unwrap();
            let vh = vector_field(&m, &p).unwrap();
            let h = 1e-6 * (1.0 + m.x1_norm());
            let plus = flatten(&m.add_scaled(h, &vh), &p).unwrap();
            let minus = flatten(&m.add_scaled(-h, &vh), &p).unwrap();
            let pushed = plus.sub(&minus).scale(0.5 / h);
            let direct = transformed_field(&u, &p).unwrap();
            assert!(
                direct.sub(&pushed).sup_norm() <= 1e-6,
                "conjugation defect {:e}",
                direct.sub(&pushed).sup_norm()
            );
        }
    }
}
