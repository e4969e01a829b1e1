//! Explicit Runge–Kutta integration with event location.
//!
//! Two propagators are provided: the Dormand–Prince 5(4) embedded pair with
//! step-size control, and the classical fourth-order method at a fixed step
//! for convergence studies. Both expose a continuous extension by taking a
//! single partial step of the same scheme from the last accepted point; the
//! extension is a polynomial in the step length and carries the scheme's
//! local order, so root location on it does not degrade the global order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bracketed_root;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Stepping {
    /// Dormand–Prince 5(4) with mixed absolute/relative error control.
    Adaptive {
        rtol: f64,
        atol: f64,
        h_init: f64,
        h_max: f64,
    },
    /// Classical RK4 at constant step.
    Fixed { h: f64 },
}

impl Stepping {
    pub fn adaptive(tol: f64) -> Self {
        Stepping::Adaptive {
            rtol: tol,
            atol: tol,
            h_init: 1e-3,
            h_max: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Stepping::Adaptive {
                rtol,
                atol,
                h_init,
                h_max,
            } => rtol > 0.0 && atol > 0.0 && h_init > 0.0 && h_max >= h_init,
            Stepping::Fixed { h } => h > 0.0 && h.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Degenerate(format!("invalid stepping controls {self:?}")))
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[([f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, a) in terms {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution, the error
/// estimate vector and the derivative at the new point.
fn dopri_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let terms: Vec<([f64; N], f64)> = (0..s).map(|j| (k[j], A[s][j])).collect();
        let ys = axpy(y, h, &terms);
        k[s] = sys.rhs(t + C[s] * h, &ys);
    }
    // stage 7 is evaluated at the fifth-order solution (first same as last)
    let y_new = axpy(y, h, &(0..6).map(|j| (k[j], A[6][j])).collect::<Vec<_>>());
    let mut err = [0.0; N];
    for (s, e) in E.iter().enumerate() {
        for i in 0..N {
            err[i] += h * e * k[s][i];
        }
    }
    (y_new, err, k[6])
}

fn rk4_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = *f0;
    let k2 = sys.rhs(t + 0.5 * h, &axpy(y, h, &[(k1, 0.5)]));
    let k3 = sys.rhs(t + 0.5 * h, &axpy(y, h, &[(k2, 0.5)]));
    let k4 = sys.rhs(t + h, &axpy(y, h, &[(k3, 1.0)]));
    axpy(
        y,
        h,
        &[(k1, 1.0 / 6.0), (k2, 1.0 / 3.0), (k3, 1.0 / 3.0), (k4, 1.0 / 6.0)],
    )
}

/// An accepted step `[t0, t1]` together with the data needed to evaluate
/// the continuous extension inside it.
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub f0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
}

/// Step-by-step driver in a fixed direction.
pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    stepping: Stepping,
    direction: f64,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    pub fn new(sys: &'a S, stepping: Stepping, t0: f64, y0: [f64; N], direction: f64) -> Result<Self> {
        stepping.validate()?;
        let h = match stepping {
            Stepping::Adaptive { h_init, .. } => h_init,
            Stepping::Fixed { h } => h,
        };
        Ok(Stepper {
            sys,
            stepping,
            direction: direction.signum(),
            t: t0,
            y: y0,
            f: sys.rhs(t0, &y0),
            h,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Advances by one accepted step, never past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<AcceptedStep<N>> {
        let remaining = (t_end - self.t) * self.direction;
        if remaining <= 0.0 {
            return Err(Error::StepFailure {
                r: self.t,
                reason: "already at end of range",
            });
        }
        match self.stepping {
            Stepping::Fixed { h } => {
                let hs = h.min(remaining) * self.direction;
                let y1 = rk4_step(self.sys, self.t, &self.y, &self.f, hs);
                let t1 = if h >= remaining { t_end } else { self.t + hs };
                self.finish(t1, y1, None)
            }
            Stepping::Adaptive {
                rtol, atol, h_max, ..
            } => {
                let mut last_rejected = false;
                loop {
                    let h = self.h.min(h_max).min(remaining);
                    if h < 1e-14 * (1.0 + self.t.abs()) {
                        return Err(Error::StepFailure {
                            r: self.t,
                            reason: "step size underflow",
                        });
                    }
                    let hs = h * self.direction;
                    let (y1, e, f1) = dopri_step(self.sys, self.t, &self.y, &self.f, hs);
                    let mut acc = 0.0;
                    for i in 0..N {
                        let sc = atol + rtol * self.y[i].abs().max(y1[i].abs());
                        acc += (e[i] / sc).powi(2);
                    }
                    let err = (acc / N as f64).sqrt();
                    if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                        self.rejected += 1;
                        self.h = 0.2 * h;
                        last_rejected = true;
                        continue;
                    }
                    let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                    fac = fac.clamp(0.2, 5.0);
                    if err <= 1.0 {
                        if last_rejected {
                            fac = fac.min(1.0);
                        }
                        self.h = h * fac;
                        let t1 = if h >= remaining { t_end } else { self.t + hs };
                        return self.finish(t1, y1, Some(f1));
                    }
                    self.rejected += 1;
                    self.h = h * fac.min(1.0);
                    last_rejected = true;
                }
            }
        }
    }

    fn finish(&mut self, t1: f64, y1: [f64; N], f1: Option<[f64; N]>) -> Result<AcceptedStep<N>> {
        if y1.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure {
                r: self.t,
                reason: "non-finite state",
            });
        }
        let step = AcceptedStep {
            t0: self.t,
            y0: self.y,
            f0: self.f,
            t1,
            y1,
        };
        self.t = t1;
        self.y = y1;
        self.f = f1.unwrap_or_else(|| self.sys.rhs(t1, &y1));
        self.accepted += 1;
        Ok(step)
    }

    /// State at `t0 + tau` inside `step` via a partial step of the scheme.
    pub fn extension(&self, step: &AcceptedStep<N>, tau: f64) -> [f64; N] {
        if tau == 0.0 {
            return step.y0;
        }
        match self.stepping {
            Stepping::Fixed { .. } => rk4_step(self.sys, step.t0, &step.y0, &step.f0, tau),
            Stepping::Adaptive { .. } => dopri_step(self.sys, step.t0, &step.y0, &step.f0, tau).0,
        }
    }

    /// Locates a sign change of `g` inside `step`; returns `t` and the state.
    pub fn locate<G: Fn(&[f64; N]) -> f64>(
        &self,
        step: &AcceptedStep<N>,
        g: G,
        xtol: f64,
    ) -> Result<(f64, [f64; N])> {
        let h = step.t1 - step.t0;
        let tau = bracketed_root(|tau| g(&self.extension(step, tau)), 0.0, h, xtol)?;
        Ok((step.t0 + tau, self.extension(step, tau)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    fn run(stepping: Stepping, t_end: f64, dir: f64) -> [f64; 2] {
        let mut st = Stepper::new(&Oscillator, stepping, 0.0, [1.0, 0.0], dir).unwrap();
        while (st.t() - t_end).abs() > 0.0 {
            st.step(t_end).unwrap();
        }
        *st.y()
    }

    #[test]
    fn adaptive_accuracy() {
        let y = run(Stepping::adaptive(1e-11), 3.0, 1.0);
        assert!((y[0] - 3f64.cos()).abs() < 1e-9);
        assert!((y[1] + 3f64.sin()).abs() < 1e-9);
        let y = run(Stepping::adaptive(1e-11), -3.0, -1.0);
        assert!((y[0] - 3f64.cos()).abs() < 1e-9);
        assert!((y[1] - 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |h: f64| (run(Stepping::Fixed { h }, 2.0, 1.0)[0] - 2f64.cos()).abs();
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn locate_zero_of_cosine() {
        let mut st = Stepper::new(&Oscillator, Stepping::adaptive(1e-12), 0.0, [1.0, 0.0], 1.0).unwrap();
        loop {
            let step = st.step(10.0).unwrap();
            if step.y1[0] <= 0.0 {
                let (t, y) = st.locate(&step, |y| y[0], 1e-14).unwrap();
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
                assert!((y[1] + 1.0).abs() < 1e-10);
                break;
            }
        }
    }

    #[test]
    fn invalid_controls() {
        assert!(Stepper::new(&Oscillator, Stepping::Fixed { h: 0.0 }, 0.0, [1.0, 0.0], 1.0).is_err());
    }
}
