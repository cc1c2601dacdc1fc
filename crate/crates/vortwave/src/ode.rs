//! Runge–Kutta integration for small autonomous systems.
//!
//! Two integrators cover everything the planar reduced dynamics needs: an
//! adaptive Dormand–Prince 5(4) pair with embedded error control for
//! shooting (local tolerances down to `1e-12`), and a classic fixed-step
//! fourth-order scheme for conservation checks where a known, rigid step
//! size is part of the experiment. States are stack-allocated nalgebra
//! vectors, so dimension mismatches are compile errors.

use nalgebra::SVector;

use crate::{Error, Result};

/// Absolute/relative tolerance pair for the embedded 5(4) error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
        }
    }
}

impl Tolerances {
    /// Same value for the absolute and relative knobs.
    pub fn uniform(tol: f64) -> Tolerances {
        Tolerances {
            abs_tol: tol,
            rel_tol: tol,
        }
    }
}

/// Dormand–Prince coefficients (the `ode45` pair). The fifth-order weights
/// are the last stage row, so the scheme is first-same-as-last: the final
/// stage of an accepted step is the first stage of the next.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Difference between the fifth- and fourth-order weights; contracting the
/// stages with these gives the local error estimate directly.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) stepper for an autonomous field. The
/// stepper owns the current `(x, y)` state; [`DormandPrince::step_toward`]
/// advances it by one accepted step without passing the given limit.
pub struct DormandPrince<F, const D: usize>
where
    F: Fn(&SVector<f64, D>) -> SVector<f64, D>,
{
    field: F,
    tol: Tolerances,
    x: f64,
    y: SVector<f64, D>,
    h: f64,
    /// First-same-as-last cache: the field at the current `y`.
    k1: SVector<f64, D>,
}

impl<F, const D: usize> DormandPrince<F, D>
where
    F: Fn(&SVector<f64, D>) -> SVector<f64, D>,
{
    pub fn new(field: F, x0: f64, y0: SVector<f64, D>, tol: Tolerances) -> Self {
        let k1 = field(&y0);
        // Conservative starting step; the controller recovers the natural
        // scale within a few accepted steps.
        let h = 1e-3 / (1.0 + k1.norm());
        DormandPrince {
            field,
            tol,
            x: x0,
            y: y0,
            h,
            k1,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> &SVector<f64, D> {
        &self.y
    }

    /// Advances by one accepted step, capped so `x` never passes `limit`.
    /// Fails on step-size underflow (the controller cannot reach the local
    /// tolerance) or if the attempt budget is exhausted.
    pub fn step_toward(&mut self, limit: f64) -> Result<()> {
        if limit <= self.x {
            return Err(Error::invalid(format!(
                "step limit {limit} is not ahead of x = {}",
                self.x
            )));
        }
        for _ in 0..200 {
            let h = self.h.min(limit - self.x);
            if h < 1e-14 * (1.0 + self.x.abs()) {
                return Err(Error::numerical(format!(
                    "step size underflow at x = {}: h = {h:e}",
                    self.x
                )));
            }

            let mut k = [SVector::<f64, D>::zeros(); 7];
            k[0] = self.k1;
            for s in 0..6 {
                let mut stage = self.y;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    stage += kj * (h * A[s][j]);
                }
                k[s + 1] = (self.field)(&stage);
            }
            // Fifth-order solution: the last stage row of A doubles as the
            // weight vector b.
            let mut y_new = self.y;
            for (j, kj) in k.iter().enumerate().take(6) {
                y_new += kj * (h * A[5][j]);
            }
            let mut err_vec = SVector::<f64, D>::zeros();
            for (j, kj) in k.iter().enumerate() {
                err_vec += kj * (h * E[j]);
            }
            let mut err = 0.0;
            for i in 0..D {
                let scale =
                    self.tol.abs_tol + self.tol.rel_tol * self.y[i].abs().max(y_new[i].abs());
                err += (err_vec[i] / scale).powi(2);
            }
            let err = (err / D as f64).sqrt();

            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if err <= 1.0 {
                self.x += h;
                self.y = y_new;
                self.k1 = k[6];
                self.h = h * factor;
                return Ok(());
            }
            self.h = h * factor;
        }
        Err(Error::numerical(format!(
            "no acceptable step within the attempt budget at x = {}",
            self.x
        )))
    }
}

/// Integrates the autonomous field from `(x0, y0)` to exactly `x1 >= x0`.
pub fn integrate_to<F, const D: usize>(
    field: F,
    x0: f64,
    y0: SVector<f64, D>,
    x1: f64,
    tol: Tolerances,
) -> Result<SVector<f64, D>>
where
    F: Fn(&SVector<f64, D>) -> SVector<f64, D>,
{
    if x1 < x0 {
        return Err(Error::invalid(format!(
            "integration runs forward only: x1 = {x1} < x0 = {x0}"
        )));
    }
    if x1 == x0 {
        return Ok(y0);
    }
    let mut stepper = DormandPrince::new(field, x0, y0, tol);
    while stepper.x() < x1 - 1e-14 * (1.0 + x1.abs()) {
        stepper.step_toward(x1)?;
    }
    Ok(*stepper.y())
}

/// One classic fourth-order Runge–Kutta step of size `h`.
pub fn rk4_step<F, const D: usize>(field: &F, y: &SVector<f64, D>, h: f64) -> SVector<f64, D>
where
    F: Fn(&SVector<f64, D>) -> SVector<f64, D>,
{
    let k1 = field(y);
    let k2 = field(&(y + k1 * (h / 2.0)));
    let k3 = field(&(y + k2 * (h / 2.0)));
    let k4 = field(&(y + k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector2;

    #[test]
    fn exponential_decay_to_machine_accuracy() {
        let field = |y: &SVector<f64, 1>| -y;
        let end = integrate_to(field, 0.0, SVector::<f64, 1>::new(1.0), 10.0, Tolerances::default())
            .unwrap();
        assert_abs_diff_eq!(end[0], (-10.0_f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn harmonic_oscillator_returns_after_ten_periods() {
        let field = |y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let span = 10.0 * 2.0 * std::f64::consts::PI;
        let end = integrate_to(field, 0.0, Vector2::new(1.0, 0.0), span, Tolerances::default())
            .unwrap();
        assert_abs_diff_eq!(end[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(end[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn stepper_respects_the_limit_exactly() {
        let field = |y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let mut stepper =
            DormandPrince::new(field, 0.0, Vector2::new(1.0, 0.0), Tolerances::default());
        while stepper.x() < 0.7 - 1e-15 {
            stepper.step_toward(0.7).unwrap();
            assert!(stepper.x() <= 0.7 + 1e-15);
        }
        assert_abs_diff_eq!(stepper.y()[0], 0.7_f64.cos(), epsilon = 1e-11);
        assert!(stepper.step_toward(0.5).is_err());
    }

    #[test]
    fn backward_requests_are_rejected_and_trivial_spans_are_free() {
        let field = |y: &SVector<f64, 1>| -y;
        let y0 = SVector::<f64, 1>::new(2.0);
        assert!(integrate_to(field, 1.0, y0, 0.0, Tolerances::default()).is_err());
        let same = integrate_to(field, 1.0, y0, 1.0, Tolerances::default()).unwrap();
        assert_eq!(same[0], 2.0);
    }

    #[test]
    fn rk4_is_fourth_order_on_the_oscillator() {
        let field = |y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let run = |h: f64| {
            let steps = (2.0 / h).round() as usize;
            let mut y = Vector2::new(1.0, 0.0);
            for _ in 0..steps {
                y = rk4_step(&field, &y, h);
            }
            (y - Vector2::new(2.0_f64.cos(), -2.0_f64.sin())).norm()
        };
        let (coarse, fine) = (run(0.02), run(0.01));
        let order = (coarse / fine).log2();
        assert!(
            (3.7..=4.3).contains(&order),
            "observed order {order} (errors {coarse:e}, {fine:e})"
        );
    }
}
