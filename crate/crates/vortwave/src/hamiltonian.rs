//! Hamiltonian structure of the spatial evolution.
//!
//! The traveling-wave problem is recast as an evolution in the horizontal
//! coordinate on the phase space of [`crate::state`]. This module carries
//! the three ingredients of that structure: the (constant-coefficient)
//! symplectic form, the Hamiltonian functional, and the Hamiltonian vector
//! field defined through `dH_m[v'] = Omega[v_H(m), v']`.
//!
//! The defining identity is also the master correctness check: the vector
//! field components below were derived by hand from the Hamiltonian, so
//! tests verify the identity directly with centered finite differences of
//! `H` against the symplectic pairing, at randomly sampled states of the
//! field's domain.
//!
//! The evolution itself is ill-posed as an initial-value problem (the
//! spectrum of its linearization is unbounded in both half-planes), so
//! nothing here integrates the `x`-flow; the vector field exists to be
//! linearized and paired, not marched.

use crate::grid::{self, GridFn};
use crate::state::{check_admissible, z_tilde, Params, PhasePoint, TangentVec};
use crate::Result;

/// The symplectic form
/// `Omega[v1, v2] = z2 eta1 - eta2 z1 + ∫ (theta2_y phi1 - phi2 theta1_y)`.
///
/// Independent of the base point, bilinear, and antisymmetric by
/// integration by parts on the constraint space.
pub fn symplectic_form(v1: &TangentVec, v2: &TangentVec) -> f64 {
    let t1y = v1.theta.deriv();
    let t2y = v2.theta.deriv();
    v2.z * v1.eta - v2.eta * v1.z + (t2y.mul(&v1.phi).integral() - v2.phi.mul(&t1y).integral())
}

/// The Hamiltonian functional. Normalized so that the trivial state has
/// zero energy for every parameter choice.
pub fn hamiltonian(m: &PhasePoint, p: &Params) -> Result<f64> {
    check_admissible(m, p)?;
    let omega = p.omega();
    let sigma = p.sigma();
    let zt = z_tilde(m, p);
    let root = (sigma * sigma - zt * zt).sqrt();
    let h = m.eta + 1.0;

    let g = m.grid().clone();
    let phi_y = m.phi.deriv();
    let theta_y = m.theta.deriv();
    let eta = m.eta;
    let shear = GridFn::from_fn(g.clone(), move |y| omega * (1.0 - y) + eta);
    let bracket = &theta_y + &shear;
    let first = (bracket.mul(&bracket).integral() - phi_y.mul(&phi_y).integral()) / (2.0 * h);

    let weight = GridFn::from_fn(g.clone(), move |y| omega * (y * h - 1.0));
    let drift = GridFn::from_fn(g, move |y| omega * (1.0 - y) - 1.0);
    let second = weight.mul(&theta_y.add_scaled(1.0, &drift)).integral();

    Ok(first + second - root - omega / 2.0 + omega * omega / 6.0 + sigma)
}

/// The Hamiltonian vector field `v_H(m)`.
///
/// The closed-form components extend smoothly to every admissible state;
/// membership of the result in the constraint space (and the pairing
/// identity defining it) is only guaranteed on the domain where
/// [`check_bc`] vanishes.
pub fn vector_field(m: &PhasePoint, p: &Params) -> Result<TangentVec> {
    check_admissible(m, p)?;
    let omega = p.omega();
    let sigma = p.sigma();
    let zt = z_tilde(m, p);
    let root = (sigma * sigma - zt * zt).sqrt();
    let h = m.eta + 1.0;

    let g = m.grid().clone();
    let phi_y = m.phi.deriv();
    let theta_y = m.theta.deriv();
    let phi_top = grid::trace_top(&m.phi);
    let y = GridFn::from_fn(g.clone(), |y| y);
    let centered = GridFn::from_fn(g.clone(), |y| y - 0.5);
    let drift = GridFn::from_fn(g.clone(), move |y| omega * (1.0 - y) - 1.0);
    // theta_y + omega (1 - y) - 1, the recurring shear bracket
    let sheared = theta_y.add_scaled(1.0, &drift);

    let phi_dot = {
        let transport = y.mul(&phi_y).map(move |v| (v - phi_top) * zt / root);
        let main = theta_y.add_scaled(1.0, &transport).map(move |v| v / h);
        main.add_scaled(omega * h - omega / h, &centered)
    };

    let theta_dot = y
        .mul(&sheared)
        .map(move |v| v * zt / root)
        .add_scaled(-1.0, &phi_y)
        .map(move |v| v / h);

    let z_dot = {
        let quad = sheared.mul(&sheared).add_scaled(-1.0, &phi_y.mul(&phi_y));
        let first = quad.map(move |v| v / (2.0 * h * h) - 0.5).integral();
        let second = zt / root * y.mul(&phi_y).mul(&sheared).integral() / (h * h);
        let third = y.mul(&sheared).integral() * omega;
        first + second - third
    };

    let eta_dot = zt / root;

    Ok(TangentVec {
        phi: phi_dot,
        theta: theta_dot,
        z: z_dot,
        eta: eta_dot,
    })
}

/// Residual of the two wall conditions cutting out the field's domain:
/// `phi_y(0) = 0` and
/// `phi_y(1) = z_tilde (theta_y(1) - 1) / sqrt(sigma^2 - z_tilde^2)`.
///
/// Wall slopes are read off nodally (the grid contains both endpoints).
pub fn check_bc(m: &PhasePoint, p: &Params) -> f64 {
    let zt = z_tilde(m, p);
    let sigma = p.sigma();
    let root = (sigma * sigma - zt * zt).sqrt();
    let phi_y = m.phi.deriv();
    let theta_y = m.theta.deriv();
    let bottom = phi_y.first().abs();
    let top = (phi_y.last() - zt * (theta_y.last() - 1.0) / root).abs();
    bottom.max(top)
}

/// Centered finite-difference directional derivative of a functional along
/// `v`, with the step scaled by the base point:
/// `h = 1e-6 (1 + ||m||_{X^1})`.
pub fn fd_directional(
    f: impl Fn(&PhasePoint) -> Result<f64>,
    m: &PhasePoint,
    v: &TangentVec,
) -> Result<f64> {
    let h = 1e-6 * (1.0 + m.x1_norm());
    let plus = f(&m.add_scaled(h, v))?;
    let minus = f(&m.add_scaled(-h, v))?;
    Ok((plus - minus) / (2.0 * h))
}
