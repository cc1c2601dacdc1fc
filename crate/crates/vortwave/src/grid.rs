//! Chebyshev–Gauss–Lobatto collocation on the unit interval.
//!
//! One immutable [`CollocationGrid`] bundles everything the rest of the
//! toolkit needs: the mapped Gauss–Lobatto nodes (ascending, endpoints
//! included), the spectral differentiation matrix, Clenshaw–Curtis
//! quadrature weights normalized to unit total mass, a spectral
//! antiderivative operator (cumulative integral from `y = 0`), and
//! barycentric interpolation. Grids are cheap to build (dense `O(n^2)`
//! setup) and shared behind an [`Arc`], so every derived object is safe to
//! use from multiple threads.
//!
//! All transforms are dense matrix products — no FFT. Sizes of interest
//! stay below a few hundred nodes, where dense operators are both faster to
//! set up and easier to audit.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Minimum number of nodes accepted by [`build_grid`].
pub const MIN_NODES: usize = 8;

/// Chebyshev–Gauss–Lobatto grid on `[0, 1]` with `n` nodes.
#[derive(Debug)]
pub struct CollocationGrid {
    nodes: DVector<f64>,
    diff: DMatrix<f64>,
    weights: DVector<f64>,
    antideriv: DMatrix<f64>,
    bary: DVector<f64>,
}

/// Builds the `n`-node grid. Fails for `n < MIN_NODES`: the coarse end is
/// where silent accuracy cliffs live, so it is fenced off entirely.
pub fn build_grid(n: usize) -> Result<Arc<CollocationGrid>> {
    if n < MIN_NODES {
        return Err(Error::invalid(format!(
            "collocation grid needs at least {MIN_NODES} nodes, got {n}"
        )));
    }
    Ok(Arc::new(CollocationGrid::new(n)))
}

impl CollocationGrid {
    fn new(n: usize) -> Self {
        let nn = n - 1; // polynomial degree
        let nf = nn as f64;

        // Nodes y_j = (1 - cos(j pi / N)) / 2 = sin^2(j pi / 2N), ascending.
        // The sin^2 form is exact at both endpoints and strictly monotone.
        let nodes = DVector::from_fn(n, |j, _| {
            let s = (std::f64::consts::PI * j as f64 / (2.0 * nf)).sin();
            s * s
        });

        // Differentiation matrix. Build the classical matrix on the
        // standard nodes t_j = cos(j pi / N) and rescale: y = (1 - t)/2
        // keeps the index order (t descending <=> y ascending) and maps
        // d/dy = -2 d/dt.
        let t = DVector::from_fn(n, |j, _| (std::f64::consts::PI * j as f64 / nf).cos());
        let c = |j: usize| if j == 0 || j == nn { 2.0 } else { 1.0 };
        let mut diff = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    diff[(i, j)] = c(i) / c(j) * sign / (t[i] - t[j]);
                }
            }
        }
        // Diagonal by the negative-sum trick: exact derivative of constants.
        for i in 0..n {
            let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| diff[(i, j)]).sum();
            diff[(i, i)] = -row_sum;
        }
        diff *= -2.0;

        // Clenshaw–Curtis weights on [-1, 1], halved for [0, 1]. The
        // weights are symmetric, so the index orientation is immaterial.
        let mut w = DVector::zeros(n);
        if nn.is_multiple_of(2) {
            let end = 1.0 / (nf * nf - 1.0);
            w[0] = end;
            w[nn] = end;
            for j in 1..nn {
                let theta = std::f64::consts::PI * j as f64 / nf;
                let mut v = 1.0;
                for k in 1..nn / 2 {
                    v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
                }
                v -= (nf * theta).cos() / (nf * nf - 1.0);
                w[j] = 2.0 * v / nf;
            }
        } else {
            let end = 1.0 / (nf * nf);
            w[0] = end;
            w[nn] = end;
            for j in 1..nn {
                let theta = std::f64::consts::PI * j as f64 / nf;
                let mut v = 1.0;
                for k in 1..=(nn - 1) / 2 {
                    v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
                }
                w[j] = 2.0 * v / nf;
            }
        }
        let weights = w / 2.0;

        // Antiderivative operator: nodal values -> values of the cumulative
        // integral from y = 0. Route: dense cosine analysis to Chebyshev
        // coefficients, coefficient-space antiderivative (one degree up, so
        // the result is evaluated exactly rather than re-interpolated), and
        // synthesis back to the nodes.
        let analysis = DMatrix::from_fn(n, n, |k, j| {
            let kj = std::f64::consts::PI * (k * j) as f64 / nf;
            2.0 / (nf * c(k) * c(j)) * kj.cos()
        });
        // Coefficient antiderivative B: (N + 2) x (N + 1), G = sum b_k T_k
        // with G(-1) = 0 for g = sum a_k T_k.
        let mut bmat = DMatrix::zeros(n + 1, n);
        for k in 1..=nn + 1 {
            let kf = k as f64;
            if k == 1 {
                // the k = 1 row sees the doubled zeroth coefficient
                bmat[(1, 0)] = 1.0;
                if n > 2 {
                    bmat[(1, 2)] = -0.5;
                }
            } else {
                bmat[(k, k - 1)] = 1.0 / (2.0 * kf);
                if k + 1 < n {
                    bmat[(k, k + 1)] = -1.0 / (2.0 * kf);
                }
            }
        }
        for k in 1..=nn + 1 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..n {
                let add = -sign * bmat[(k, j)];
                bmat[(0, j)] += add;
            }
        }
        // Synthesis at the nodes, including the degree N + 1 mode.
        let synth = DMatrix::from_fn(n, n + 1, |j, k| {
            (std::f64::consts::PI * (k * j) as f64 / nf).cos()
        });
        let g_nodes = synth * bmat * analysis; // values of G(t_j)
        let g_top = g_nodes.row(0).clone_owned(); // t_0 = 1, i.e. y = 0 row holds G(1)
        let mut antideriv = -g_nodes;
        for i in 0..n {
            for j in 0..n {
                antideriv[(i, j)] += g_top[j];
            }
        }
        antideriv *= 0.5; // dy = -dt/2

        // Barycentric weights for Gauss–Lobatto nodes (up to scaling):
        // alternating signs, halved at the endpoints.
        let bary = DVector::from_fn(n, |j, _| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == nn {
                0.5 * sign
            } else {
                sign
            }
        });

        CollocationGrid {
            nodes,
            diff,
            weights,
            antideriv,
            bary,
        }
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes, ascending in `[0, 1]`, endpoints included.
    pub fn nodes(&self) -> &DVector<f64> {
        &self.nodes
    }

    /// Spectral differentiation matrix.
    pub fn diff(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Quadrature weights (nonnegative, summing to one).
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Antiderivative operator (cumulative integral from `y = 0`).
    pub fn antideriv(&self) -> &DMatrix<f64> {
        &self.antideriv
    }

    /// Barycentric interpolation of nodal `values` at an arbitrary point.
    pub fn interp(&self, values: &DVector<f64>, y: f64) -> f64 {
        let n = self.n();
        assert_eq!(values.len(), n, "value/grid size mismatch");
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let d = y - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let r = self.bary[j] / d;
            num += r * values[j];
            den += r;
        }
        num / den
    }
}

/// A scalar function sampled on a shared collocation grid.
#[derive(Debug, Clone)]
pub struct GridFn {
    grid: Arc<CollocationGrid>,
    values: DVector<f64>,
}

impl GridFn {
    pub fn from_values(grid: Arc<CollocationGrid>, values: DVector<f64>) -> Self {
        assert_eq!(values.len(), grid.n(), "value/grid size mismatch");
        GridFn { grid, values }
    }

    pub fn from_fn(grid: Arc<CollocationGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.map(f);
        GridFn { grid, values }
    }

    pub fn zeros(grid: Arc<CollocationGrid>) -> Self {
        let values = DVector::zeros(grid.n());
        GridFn { grid, values }
    }

    pub fn grid(&self) -> &Arc<CollocationGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Nodal value at `y = 0`.
    pub fn first(&self) -> f64 {
        self.values[0]
    }

    /// Nodal value at `y = 1`.
    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Spectral derivative.
    pub fn deriv(&self) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: &self.grid.diff * &self.values,
        }
    }

    /// Quadrature over `[0, 1]`.
    pub fn integral(&self) -> f64 {
        self.grid.weights.dot(&self.values)
    }

    /// Mean value; equal to [`GridFn::integral`] on the unit interval, kept
    /// separate for readability at call sites.
    pub fn mean(&self) -> f64 {
        self.integral()
    }

    /// Cumulative integral from `y = 0`, as a grid function.
    pub fn cumint(&self) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: &self.grid.antideriv * &self.values,
        }
    }

    /// Barycentric evaluation at an arbitrary point of `[0, 1]`.
    pub fn at_point(&self, y: f64) -> f64 {
        self.grid.interp(&self.values, y)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.amax()
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFn) -> GridFn {
        self.check_same_grid(other);
        GridFn {
            grid: self.grid.clone(),
            values: self.values.component_mul(&other.values),
        }
    }

    /// Applies a scalar map to every nodal value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: self.values.map(f),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &GridFn) -> GridFn {
        self.check_same_grid(other);
        let mut values = self.values.clone();
        values.axpy(c, &other.values, 1.0);
        GridFn {
            grid: self.grid.clone(),
            values,
        }
    }

    fn check_same_grid(&self, other: &GridFn) {
        assert_eq!(self.n(), other.n(), "grid size mismatch");
    }
}

impl std::ops::Add for &GridFn {
    type Output = GridFn;
    fn add(self, rhs: &GridFn) -> GridFn {
        self.check_same_grid(rhs);
        GridFn {
            grid: self.grid.clone(),
            values: &self.values + &rhs.values,
        }
    }
}

impl std::ops::Sub for &GridFn {
    type Output = GridFn;
    fn sub(self, rhs: &GridFn) -> GridFn {
        self.check_same_grid(rhs);
        GridFn {
            grid: self.grid.clone(),
            values: &self.values - &rhs.values,
        }
    }
}

impl std::ops::Mul<f64> for &GridFn {
    type Output = GridFn;
    fn mul(self, rhs: f64) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: &self.values * rhs,
        }
    }
}

impl std::ops::Neg for &GridFn {
    type Output = GridFn;
    fn neg(self) -> GridFn {
        GridFn {
            grid: self.grid.clone(),
            values: -&self.values,
        }
    }
}

/// Value of `f` at `y = 0` through the integral representation
/// `f(0) = -∫ (1 - y) f'(y) dy + ∫ f(y) dy`.
///
/// Trace functionals are evaluated this way (derivative plus quadrature)
/// rather than by reading off nodal values, so that they stay meaningful as
/// linear functionals when assembled into constraint rows. The nodal value
/// is the natural cross-check and the two agree to spectral accuracy.
pub fn trace_bottom(f: &GridFn) -> f64 {
    let fy = f.deriv();
    let one_minus_y = GridFn::from_fn(f.grid().clone(), |y| 1.0 - y);
    -one_minus_y.mul(&fy).integral() + f.integral()
}

/// Value of `f` at `y = 1` through `f(1) = ∫ y f'(y) dy + ∫ f(y) dy`.
pub fn trace_top(f: &GridFn) -> f64 {
    let fy = f.deriv();
    let yfn = GridFn::from_fn(f.grid().clone(), |y| y);
    yfn.mul(&fy).integral() + f.integral()
}

/// Maximum number of iterations for [`find_real_root`].
const ROOT_MAX_ITERS: usize = 100;

/// Bisection-safeguarded Newton iteration on a bracketing interval.
///
/// `f(a)` and `f(b)` must have opposite signs (or vanish). Newton steps use
/// a centered finite-difference slope; any step that leaves the current
/// bracket or fails to shrink it falls back to bisection, so convergence is
/// guaranteed for continuous `f`. The returned abscissa is accurate to
/// `tol` (absolute).
pub fn find_real_root(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::invalid(format!("bad bracket [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("bad tolerance {tol}")));
    }
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::invalid(format!(
            "no sign change on [{a}, {b}]: f(a) = {fa:e}, f(b) = {fb:e}"
        )));
    }

    let (mut lo, mut hi) = (a, b);
    let (mut flo, mut fhi) = (fa, fb);
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..ROOT_MAX_ITERS {
        if fx == 0.0 {
            return Ok(x);
        }
        // Maintain the bracket.
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if hi - lo <= tol {
            // Return the endpoint with the smaller residual.
            return Ok(if flo.abs() <= fhi.abs() { lo } else { hi });
        }
        // Newton step with a centered difference slope.
        let h = 1e-7 * (1.0 + x.abs());
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        let newton = x - fx / slope;
        x = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        fx = f(x);
    }
    Err(Error::numerical(format!(
        "root iteration did not converge on [{a}, {b}] within {ROOT_MAX_ITERS} steps"
    )))
}
