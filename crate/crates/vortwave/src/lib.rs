//! Numerical toolkit for pure capillary solitary waves on water of finite
//! depth with constant vorticity, treated by spatial dynamics.
//!
//! The toolkit follows one pipeline end to end:
//!
//! * [`grid`] — Chebyshev–Gauss–Lobatto collocation on `[0,1]`: spectral
//!   differentiation, Clenshaw–Curtis quadrature, antiderivatives, trace
//!   functionals, and a safeguarded scalar root finder.
//! * [`state`] — the phase space of the spatial-dynamics formulation:
//!   states `(phi, theta, z, eta)`, the constraint manifold (mean-zero
//!   potential, pinned generating-function traces), the reverser, and
//!   surrogate Sobolev norms.
//! * [`hamiltonian`] — the Hamiltonian, its symplectic form, and the formal
//!   vector field of the evolution in the horizontal coordinate.
//! * [`flatten`] — the near-identity change of variables that straightens
//!   the boundary conditions, together with its exact inverse, its
//!   linearization at the origin, and the transformed Hamiltonian and field.
//! * [`linear`] — the linearized operator at the trivial flow: the
//!   dispersion relation, eigenvectors in closed form, a collocation
//!   spectrum computed independently, resolvent-gain estimates on the
//!   imaginary axis, contour spectral projections, and the degenerate pair
//!   spanning the generalized kernel.
//! * [`ode`] — adaptive Runge–Kutta integration for the small autonomous
//!   systems that appear on the reduced plane.
//! * [`reduced`] — the planar reduced system on the kernel modes: the
//!   quadratic/cubic coefficient functionals evaluated by quadrature and
//!   polarization, the rescaling to the KdV-type normal form, the explicit
//!   solitary pulse, and a reversible shooting construction of the same
//!   pulse.
//! * [`wave`] — a Newton solver for the full traveling-wave equations on a
//!   flattened strip, validated against the small-amplitude asymptotics.
//! * [`harness`] — configuration, file output, and the subcommand layer
//!   shared by the `vortwave` binary and the examples.
//!
//! Everything is dense, deterministic, and sized for interactive use:
//! spectra take well under a second, a full nonlinear solve takes seconds.

// Guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod state;
pub mod hamiltonian;
pub mod flatten;
pub mod linear;
pub mod ode;
pub mod reduced;
pub mod wave;
pub mod harness;

/// Unified error type. The variants map onto the process exit codes used by
/// the binary: invalid input exits 2, numerical failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated a documented precondition (bad parameter range,
    /// malformed configuration, mismatched grids).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An iteration failed to converge or a computation left its domain of
    /// validity (Newton divergence, missing bracket, singular pivot).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// File input/output failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failed.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
