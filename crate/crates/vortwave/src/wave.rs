//! Nonlinear traveling-wave solver on the flattened strip.
//!
//! The full free-boundary system for a steady wave in the moving frame —
//! Laplace's equation for the potential below the surface, a Neumann bottom
//! condition, and kinematic and Bernoulli conditions on the free surface —
//! is posed on the fixed strip `[-Lambda, Lambda] x [0, 1]` through the
//! change of variable `ybar = (y + 1)/(eta + 1)`, which maps the fluid
//! domain onto the strip at the cost of metric terms in the operators.
//!
//! A solitary wave of depression is even in `xi` with an odd potential, so
//! the discretization is built from half-integer trigonometric modes
//! `cos(k_j xi)` and `sin(k_j xi)`, `k_j = (j + 1/2) pi / Lambda`, on a
//! symmetric uniform grid: the cosine family is even and vanishes at the
//! ends (far-field closure for `eta`), the sine family is odd with zero
//! end slope (far-field closure for the potential), and both are exactly
//! orthogonal on the shifted nodes. The vertical direction reuses the
//! Chebyshev collocation grid. Symmetry pins the horizontal translation,
//! so no phase constraint is needed; Newton runs on the symmetry-reduced
//! unknowns and converges quadratically from the long-wave asymptotic
//! profile `eta ~ eps Q(sqrt(eps) (sigma - 1/3)^{-1/2} xi)` with
//! `Q(xbar) = -3 sech^2(xbar/2)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::grid::{build_grid, find_real_root, CollocationGrid};
use crate::reduced::exact_homoclinic;
use crate::state::Params;
use crate::{Error, Result};

/// Default number of horizontal nodes (both half-planes together).
pub const DEFAULT_NX: usize = 128;

/// Default number of vertical Chebyshev intervals.
pub const DEFAULT_NY: usize = 16;

/// Bound on the surface elevation at the outermost nodes of a converged
/// profile; the domain half-length is chosen so the exact tail sits near
/// `e^{-20}`, far below this.
pub const TAIL_TOL: f64 = 1e-6;

const MAX_NEWTON_ITERS: usize = 50;
const MAX_BACKTRACKS: usize = 12;

/// Domain half-length for amplitude parameter `eps`:
/// `Lambda = 20 sqrt(sigma - 1/3) / sqrt(eps)`, so the scaled coordinate
/// `xbar = sqrt(eps) (sigma - 1/3)^{-1/2} xi` spans `[-20, 20]` and the
/// truncated tail of `sech^2(xbar/2)` is of size `e^{-20}`.
pub fn lambda_for(eps: f64, sigma: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let tau = sigma - 1.0 / 3.0;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "domain sizing requires sigma > 1/3, got {sigma}"
        )));
    }
    Ok(20.0 * tau.sqrt() / eps.sqrt())
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

/// The tensor discretization of the strip: half-integer trigonometric
/// collocation in `xi` on a symmetric shifted-uniform grid, Chebyshev
/// collocation in `ybar`.
#[derive(Debug)]
pub struct WaveDisc {
    lambda: f64,
    half: usize,
    xi: Vec<f64>,
    k: Vec<f64>,
    grid: Arc<CollocationGrid>,
    /// Columns `0..half` sample `cos(k_j xi)`, columns `half..` sample
    /// `sin(k_j xi)`; orthogonal with `B^T B = half * I`.
    basis: DMatrix<f64>,
    dxi: DMatrix<f64>,
    dy_t: DMatrix<f64>,
}

impl WaveDisc {
    /// Builds the discretization with `nx` horizontal nodes (must be even,
    /// at least 16) and `ny` vertical intervals on `[-lambda, lambda]`.
    pub fn new(lambda: f64, nx: usize, ny: usize) -> Result<Arc<WaveDisc>> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "half-length must be positive, got {lambda}"
            )));
        }
        if nx < 16 || !nx.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "nx must be even and at least 16, got {nx}"
            )));
        }
        let grid = build_grid(ny)?;
        let m = nx / 2;
        let xi: Vec<f64> = (0..nx)
            .map(|i| lambda * (2.0 * i as f64 + 1.0 - nx as f64) / nx as f64)
            .collect();
        let k: Vec<f64> = (0..m)
            .map(|j| (j as f64 + 0.5) * std::f64::consts::PI / lambda)
            .collect();

        let mut basis = DMatrix::zeros(nx, nx);
        let mut dbasis = DMatrix::zeros(nx, nx);
        for i in 0..nx {
            for j in 0..m {
                let (s, c) = (k[j] * xi[i]).sin_cos();
                basis[(i, j)] = c;
                basis[(i, m + j)] = s;
                dbasis[(i, j)] = -k[j] * s;
                dbasis[(i, m + j)] = k[j] * c;
            }
        }
        // Discrete orthogonality of the shifted half-integer family makes
        // the inverse transform a scaled transpose.
        let dxi = &dbasis * basis.transpose() / m as f64;
        debug_assert!({
            let gram = basis.transpose() * &basis / m as f64;
            (gram - DMatrix::identity(nx, nx)).amax() < 1e-10
        });
        let dy_t = grid.diff().transpose();
        Ok(Arc::new(WaveDisc {
            lambda,
            half: m,
            xi,
            k,
            grid,
            basis,
            dxi,
            dy_t,
        }))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of horizontal nodes.
    pub fn nx(&self) -> usize {
        2 * self.half
    }

    /// Number of nodes per half-plane (the symmetry-reduced width).
    pub fn half(&self) -> usize {
        self.half
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn ybar(&self) -> &Arc<CollocationGrid> {
        &self.grid
    }

    /// Coefficients of the even (cosine) interpolant of nodal values.
    fn cos_coeffs(&self, values: &DVector<f64>) -> DVector<f64> {
        self.basis.columns(0, self.half).transpose() * values / self.half as f64
    }

    /// Coefficients of the odd (sine) interpolants, one column at a time.
    fn sin_coeffs_mat(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        self.basis.columns(self.half, self.half).transpose() * values / self.half as f64
    }
}

// ---------------------------------------------------------------------------
// Fields on the strip
// ---------------------------------------------------------------------------

/// A velocity potential and surface elevation sampled on the strip grid:
/// `phi[(i, j)] = phi(xi_i, ybar_j)` and `eta[i] = eta(xi_i)`. Solution
/// fields are symmetric — `eta` even and `phi` odd in `xi` — and `eta`
/// stays above the bottom, `eta > -1`.
#[derive(Clone, Debug)]
pub struct StripField {
    disc: Arc<WaveDisc>,
    pub phi: DMatrix<f64>,
    pub eta: DVector<f64>,
}

impl StripField {
    pub fn zero(disc: &Arc<WaveDisc>) -> StripField {
        StripField {
            disc: disc.clone(),
            phi: DMatrix::zeros(disc.nx(), disc.grid.n()),
            eta: DVector::zeros(disc.nx()),
        }
    }

    pub fn disc(&self) -> &Arc<WaveDisc> {
        &self.disc
    }

    /// Largest deviation from the symmetry class (`eta` even, `phi` odd).
    pub fn asymmetry(&self) -> f64 {
        let nx = self.disc.nx();
        let mut worst = 0.0_f64;
        for i in 0..self.disc.half {
            let im = nx - 1 - i;
            worst = worst.max((self.eta[i] - self.eta[im]).abs());
            for j in 0..self.phi.ncols() {
                worst = worst.max((self.phi[(i, j)] + self.phi[(im, j)]).abs());
            }
        }
        worst
    }

    /// Evaluates the even interpolant of the surface elevation anywhere.
    pub fn eta_at(&self, xi: f64) -> f64 {
        let coeffs = self.disc.cos_coeffs(&self.eta);
        coeffs
            .iter()
            .zip(&self.disc.k)
            .map(|(c, k)| c * (k * xi).cos())
            .sum()
    }

    /// Packs the right-half nodal values into the symmetry-reduced
    /// unknown vector: potential entries first (node-major, vertical
    /// fastest), then the elevation entries.
    fn to_reduced(&self) -> DVector<f64> {
        let (m, ncol) = (self.disc.half, self.phi.ncols());
        let mut x = DVector::zeros(m * ncol + m);
        for i in 0..m {
            for j in 0..ncol {
                x[i * ncol + j] = self.phi[(m + i, j)];
            }
            x[m * ncol + i] = self.eta[m + i];
        }
        x
    }

    /// Rebuilds the full symmetric field from reduced unknowns.
    fn from_reduced(disc: &Arc<WaveDisc>, x: &DVector<f64>) -> StripField {
        let (m, ncol) = (disc.half, disc.grid.n());
        let mut f = StripField::zero(disc);
        for i in 0..m {
            for j in 0..ncol {
                let v = x[i * ncol + j];
                f.phi[(m + i, j)] = v;
                f.phi[(m - 1 - i, j)] = -v;
            }
            let e = x[m * ncol + i];
            f.eta[m + i] = e;
            f.eta[m - 1 - i] = e;
        }
        f
    }
}

// ---------------------------------------------------------------------------
// Residual of the free-boundary system
// ---------------------------------------------------------------------------

/// Sup-norms of the four residual blocks of [`residual`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub laplace: f64,
    pub bottom: f64,
    pub kinematic: f64,
    pub bernoulli: f64,
}

impl Residuals {
    pub fn sup(&self) -> f64 {
        self.laplace
            .max(self.bottom)
            .max(self.kinematic)
            .max(self.bernoulli)
    }
}

/// Evaluates the steady free-boundary system in strip coordinates. The
/// result is field-shaped: row `j = 0` of the potential block holds the
/// bottom Neumann residual `phi_ybar`, interior rows hold the transformed
/// Laplace operator, the top row holds the kinematic condition, and the
/// elevation block holds the Bernoulli condition.
///
/// With `J = 1 + eta` and the shear coefficient `a = ybar eta_xi / J`,
/// the chain rule for `ybar = (y + 1)/J` gives
///
/// ```text
/// phi_y  = u_ybar / J,
/// phi_xi = u_xi - a u_ybar,
/// ```
///
/// and the Laplacian becomes
///
/// ```text
/// u_xixi - 2 a u_xiybar + (a^2 + 1/J^2) u_ybarybar
///        + (2 ybar eta_xi^2 / J^2 - ybar eta_xixi / J) u_ybar.
/// ```
///
/// The surface rows are, in unflattened form,
///
/// ```text
/// kinematic: phi_y - (phi_xi - omega eta) eta_xi + eta_xi = 0,
/// Bernoulli: -phi_xi + phi_xi^2/2 + phi_y^2/2 - omega eta phi_xi
///            + omega eta + omega^2 eta^2 / 2
///            - sigma eta_xixi / (1 + eta_xi^2)^{3/2} = 0.
/// ```
///
/// Fails if the surface touches the bottom (`eta <= -1` anywhere). No
/// symmetry is assumed: the operator maps the symmetric class to
/// definite parities but accepts arbitrary fields.
pub fn residual(f: &StripField, p: &Params) -> Result<StripField> {
    let d = &f.disc;
    let (nx, n) = (d.nx(), d.grid.n());
    if let Some(bad) = f.eta.iter().find(|e| **e <= -1.0 || !e.is_finite()) {
        return Err(Error::invalid(format!(
            "surface elevation {bad} leaves the fluid domain (needs eta > -1)"
        )));
    }
    let (omega, sigma) = (p.omega(), p.sigma());
    let nodes = d.grid.nodes();

    let e_xi = &d.dxi * &f.eta;
    let e_xixi = &d.dxi * &e_xi;
    let u_xi = &d.dxi * &f.phi;
    let u_y = &f.phi * &d.dy_t;
    let u_yy = &u_y * &d.dy_t;
    let u_xiy = &u_xi * &d.dy_t;
    let u_xixi = &d.dxi * &u_xi;

    let mut out = StripField::zero(d);
    for i in 0..nx {
        let jm = 1.0 + f.eta[i];
        let (exi, exx) = (e_xi[i], e_xixi[i]);
        out.phi[(i, 0)] = u_y[(i, 0)];
        for jy in 1..n - 1 {
            let ybar = nodes[jy];
            let a = ybar * exi / jm;
            out.phi[(i, jy)] = u_xixi[(i, jy)] - 2.0 * a * u_xiy[(i, jy)]
                + (a * a + 1.0 / (jm * jm)) * u_yy[(i, jy)]
                + (2.0 * ybar * exi * exi / (jm * jm) - ybar * exx / jm) * u_y[(i, jy)];
        }
        let a_top = exi / jm;
        let phi_xi = u_xi[(i, n - 1)] - a_top * u_y[(i, n - 1)];
        let phi_y = u_y[(i, n - 1)] / jm;
        out.phi[(i, n - 1)] = phi_y - (phi_xi - omega * f.eta[i]) * exi + exi;
        out.eta[i] = -phi_xi + 0.5 * phi_xi * phi_xi + 0.5 * phi_y * phi_y
            - omega * f.eta[i] * phi_xi
            + omega * f.eta[i]
            + 0.5 * omega * omega * f.eta[i] * f.eta[i]
            - sigma * exx / (1.0 + exi * exi).powf(1.5);
    }
    Ok(out)
}

/// Block sup-norms of a field-shaped residual.
pub fn residual_norms(res: &StripField) -> Residuals {
    let n = res.disc.grid.n();
    let mut r = Residuals {
        laplace: 0.0,
        bottom: 0.0,
        kinematic: 0.0,
        bernoulli: res.eta.amax(),
    };
    for i in 0..res.disc.nx() {
        r.bottom = r.bottom.max(res.phi[(i, 0)].abs());
        r.kinematic = r.kinematic.max(res.phi[(i, n - 1)].abs());
        for jy in 1..n - 1 {
            r.laplace = r.laplace.max(res.phi[(i, jy)].abs());
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Asymptotic profile and initial guess
// ---------------------------------------------------------------------------

/// Leading-order solitary-wave profile in physical variables:
/// `eta = d eps Q(sqrt(eps) (sigma/(c^2 d) - 1/3)^{-1/2} xi / d)` with
/// `Q(xbar) = -3 sech^2(xbar / 2)`, for wave speed `c` and depth `d`.
pub fn asymptotic_profile(eps: f64, sigma: f64, c: f64, d: f64, xi_phys: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if c == 0.0 || !(d > 0.0) || !c.is_finite() || !d.is_finite() {
        return Err(Error::invalid(format!(
            "need nonzero speed and positive depth, got c = {c}, d = {d}"
        )));
    }
    let tau = sigma / (c * c * d) - 1.0 / 3.0;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "strong-surface-tension regime requires sigma/(c^2 d) > 1/3, got {}",
            sigma / (c * c * d)
        )));
    }
    let xbar = eps.sqrt() / tau.sqrt() * xi_phys / d;
    Ok(d * eps * exact_homoclinic(xbar).q)
}

/// Initial guess for the Newton solver: the asymptotic elevation together
/// with its leading-order potential. At this order the Bernoulli condition
/// linearizes to `phi_xi = eta` with no vertical structure, so the
/// potential is lifted mode by mode, `phihat_j = etahat_j / k_j`, which is
/// odd, in-basis, and exactly antidifferentiates the elevation.
pub fn asymptotic_strip(disc: &Arc<WaveDisc>, p: &Params) -> Result<StripField> {
    let eps = p.eps1;
    let mut f = StripField::zero(disc);
    if eps == 0.0 {
        return Ok(f);
    }
    for (i, &xi) in disc.xi.iter().enumerate() {
        f.eta[i] = asymptotic_profile(eps, p.sigma(), 1.0, 1.0, xi)?;
    }
    let ehat = disc.cos_coeffs(&f.eta);
    for i in 0..disc.nx() {
        let lift: f64 = ehat
            .iter()
            .zip(&disc.k)
            .map(|(c, k)| c / k * (k * disc.xi[i]).sin())
            .sum();
        for j in 0..f.phi.ncols() {
            f.phi[(i, j)] = lift;
        }
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Newton solver
// ---------------------------------------------------------------------------

/// A converged traveling-wave solution with its diagnostics.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    pub params: Params,
    pub strip: StripField,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Minimum of the elevation; negative for a wave of depression.
    pub amplitude: f64,
    pub residuals: Residuals,
    pub newton_iters: usize,
    /// Sup-norm of each accepted Newton increment, for convergence-order
    /// diagnostics.
    pub increments: Vec<f64>,
    /// Remainder diagnostic `|eta - eps Q|_inf / eps^2` against the
    /// leading-order profile; zero for the flat branch.
    pub rho: f64,
}

impl WaveProfile {
    /// Half-depth width: the positive `xi` where the surface interpolant
    /// rises to half its minimum.
    pub fn half_depth_width(&self) -> Result<f64> {
        let target = self.amplitude / 2.0;
        let m = self.strip.disc.half;
        let mut lo = 0.0;
        for i in m..self.strip.disc.nx() {
            let xi = self.xi[i];
            if self.eta[i] > target {
                return find_real_root(
                    |x| self.strip.eta_at(x) - target,
                    lo,
                    xi,
                    1e-12,
                );
            }
            lo = xi;
        }
        Err(Error::numerical(
            "surface never recovers to half depth inside the domain".to_string(),
        ))
    }
}

fn reduced_residual(disc: &Arc<WaveDisc>, p: &Params, x: &DVector<f64>) -> Result<DVector<f64>> {
    let f = StripField::from_reduced(disc, x);
    let r = residual(&f, p)?;
    Ok(r.to_reduced_unsigned())
}

impl StripField {
    /// Right-half values in unknown order, without parity signs — used to
    /// read residual blocks, whose parities differ from the unknowns'.
    fn to_reduced_unsigned(&self) -> DVector<f64> {
        let (m, ncol) = (self.disc.half, self.phi.ncols());
        let mut x = DVector::zeros(m * ncol + m);
        for i in 0..m {
            for j in 0..ncol {
                x[i * ncol + j] = self.phi[(m + i, j)];
            }
            x[m * ncol + i] = self.eta[m + i];
        }
        x
    }
}

/// Jacobian of the reduced residual. The residual is a polynomial of
/// degree two in the potential unknowns (the Bernoulli block is quadratic,
/// everything else linear), so the central difference with unit step is
/// the exact derivative for those columns; elevation columns, which enter
/// through the metric terms, use a genuine small-step difference.
fn jacobian(
    disc: &Arc<WaveDisc>,
    p: &Params,
    x: &DVector<f64>,
    eta_scale: f64,
) -> Result<DMatrix<f64>> {
    let n_phi = disc.half * disc.grid.n();
    let dim = x.len();
    let mut jac = DMatrix::zeros(dim, dim);
    let mut work = x.clone();
    for col in 0..dim {
        let h = if col < n_phi {
            1.0
        } else {
            1e-6 * (1.0 + eta_scale)
        };
        let base = work[col];
        work[col] = base + h;
        let plus = reduced_residual(disc, p, &work)?;
        work[col] = base - h;
        let minus = reduced_residual(disc, p, &work)?;
        work[col] = base;
        jac.column_mut(col).copy_from(&((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// Damped Newton iteration on the symmetry-reduced discretization,
/// starting from `initial` (normally an [`asymptotic_strip`] or a
/// continuation warm start). Converges to sup-norm residual `tol`;
/// `tol` must be at least `1e-12`.
pub fn newton_solve(initial: &StripField, p: &Params, tol: f64) -> Result<WaveProfile> {
    if !(tol >= 1e-12 && tol.is_finite()) {
        return Err(Error::invalid(format!(
            "solver tolerance must be at least 1e-12, got {tol}"
        )));
    }
    let disc = initial.disc.clone();
    let mut x = initial.to_reduced();
    let mut res = reduced_residual(&disc, p, &x)?;
    let mut sup = res.amax();
    let mut increments = Vec::new();
    let mut iters = 0;

    while sup > tol {
        if iters >= MAX_NEWTON_ITERS {
            return Err(Error::numerical(format!(
                "Newton did not converge in {MAX_NEWTON_ITERS} iterations; residual {sup:e}"
            )));
        }
        let eta_scale = x.rows(disc.half * disc.grid.n(), disc.half).amax();
        let jac = jacobian(&disc, p, &x, eta_scale)?;
        let delta = jac.lu().solve(&(-&res)).ok_or_else(|| {
            Error::numerical("singular Jacobian: continuation step too large".to_string())
        })?;

        // Backtracking: accept the first step fraction that reduces the
        // sup-norm; trial states that leave the fluid domain just shrink.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &x + &delta * t;
            if let Ok(r) = reduced_residual(&disc, p, &cand) {
                let s = r.amax();
                if s < sup {
                    increments.push(t * delta.amax());
                    (x, res, sup) = (cand, r, s);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::numerical(format!(
                "line search stalled at residual {sup:e}"
            )));
        }
        iters += 1;
    }

    let strip = StripField::from_reduced(&disc, &x);
    let residuals = residual_norms(&residual(&strip, p)?);
    let eta: Vec<f64> = strip.eta.iter().copied().collect();
    let amplitude = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let rho = remainder_diagnostic(&strip, p)?;
    Ok(WaveProfile {
        params: *p,
        xi: disc.xi.clone(),
        eta,
        amplitude,
        residuals,
        newton_iters: iters,
        increments,
        rho,
        strip,
    })
}

/// `|eta - eps Q(xbar)|_inf / eps^2`, the size of the remainder beyond the
/// leading-order asymptotics; zero on the flat branch.
fn remainder_diagnostic(f: &StripField, p: &Params) -> Result<f64> {
    let eps = p.eps1;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0_f64;
    for (i, &xi) in f.disc.xi.iter().enumerate() {
        let lead = asymptotic_profile(eps, p.sigma(), 1.0, 1.0, xi)?;
        worst = worst.max((f.eta[i] - lead).abs());
    }
    Ok(worst / (eps * eps))
}

/// Re-evaluates the residual of a field after spectral interpolation onto
/// a grid with twice the resolution in both directions; returns the sup
/// over all blocks. The half-integer wavenumbers of the coarse basis are
/// the leading wavenumbers of the fine one, so the horizontal refinement
/// is zero-padding; the vertical refinement is barycentric.
pub fn refined_residual_sup(f: &StripField, p: &Params) -> Result<f64> {
    let d = &f.disc;
    let fine = WaveDisc::new(d.lambda, 2 * d.nx(), 2 * d.grid.n())?;
    let ehat = d.cos_coeffs(&f.eta);
    let phat = d.sin_coeffs_mat(&f.phi);

    let mut g = StripField::zero(&fine);
    for (i, &xi) in fine.xi.iter().enumerate() {
        g.eta[i] = ehat
            .iter()
            .zip(&d.k)
            .map(|(c, k)| c * (k * xi).cos())
            .sum();
    }
    // Horizontal interpolation of the potential per coarse vertical level,
    // then vertical interpolation per fine node.
    let ncol_c = f.phi.ncols();
    let mut coarse_cols = DMatrix::zeros(fine.nx(), ncol_c);
    for (i, &xi) in fine.xi.iter().enumerate() {
        for j in 0..ncol_c {
            coarse_cols[(i, j)] = (0..d.half)
                .map(|q| phat[(q, j)] * (d.k[q] * xi).sin())
                .sum();
        }
    }
    for i in 0..fine.nx() {
        let row = DVector::from_fn(ncol_c, |j, _| coarse_cols[(i, j)]);
        for (jf, &y) in fine.grid.nodes().iter().enumerate() {
            g.phi[(i, jf)] = d.grid.interp(&row, y);
        }
    }
    Ok(residual_norms(&residual(&g, p)?).sup())
}

// ---------------------------------------------------------------------------
// Continuation in eps
// ---------------------------------------------------------------------------

/// Solves along an increasing list of amplitude parameters. The first
/// solve starts from the asymptotic profile; each later one warm-starts
/// from the previous solution rescaled index-wise (`eta` by `eps_2/eps_1`,
/// `phi` by its square root), which is exact at leading order because the
/// scaled coordinate grid `xbar_i` is the same for every `eps`.
pub fn continuation_sweep(
    eps_list: &[f64],
    base: &Params,
    tol: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<WaveProfile>> {
    if eps_list.is_empty() {
        return Err(Error::invalid("empty eps list".to_string()));
    }
    for pair in eps_list.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid(format!(
                "eps list must increase strictly, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if eps_list[0] <= 0.0 || eps_list[eps_list.len() - 1] > 0.15 {
        return Err(Error::invalid(format!(
            "every eps must lie in (0, 0.15], got range [{}, {}]",
            eps_list[0],
            eps_list[eps_list.len() - 1]
        )));
    }

    let mut out: Vec<WaveProfile> = Vec::with_capacity(eps_list.len());
    let mut prev: Option<(f64, StripField)> = None;
    for &eps in eps_list {
        let annotate = |e: Error| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("eps = {eps}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("eps = {eps}: {m}")),
            other => other,
        };
        let p = Params::new(base.omega0, base.sigma0, eps, base.eps2).map_err(annotate)?;
        let disc = WaveDisc::new(lambda_for(eps, p.sigma())?, nx, ny).map_err(annotate)?;
        let initial = match &prev {
            None => asymptotic_strip(&disc, &p).map_err(annotate)?,
            Some((e0, f0)) => {
                let ratio = eps / e0;
                StripField {
                    disc: disc.clone(),
                    phi: &f0.phi * ratio.sqrt(),
                    eta: &f0.eta * ratio,
                }
            }
        };
        let prof = newton_solve(&initial, &p, tol).map_err(annotate)?;
        prev = Some((eps, prof.strip.clone()));
        out.push(prof);
    }
    Ok(out)
}
