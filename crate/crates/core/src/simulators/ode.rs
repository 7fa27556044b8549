//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-6, abs: 1e-9 }
    }
}

impl Tolerances {
    pub fn halved(self) -> Self {
        Self {
            rel: self.rel / 2.0,
            abs: self.abs / 2.0,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order weights (also the last stage row, FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `t0` over consecutive intervals of
/// length `dt`, landing exactly on each sample time.
pub struct DormandPrince<const N: usize, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    f: F,
    tol: Tolerances,
    t: f64,
    y: [f64; N],
    h: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl<const N: usize, F> DormandPrince<N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(f: F, t0: f64, y0: [f64; N], tol: Tolerances) -> Self {
        Self {
            f,
            tol,
            t: t0,
            y: y0,
            h: 1e-3,
        }
    }

    pub fn state(&self) -> &[f64; N] {
        &self.y
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advances the solution to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let f = &self.f;
        while self.t < t_end {
            let remaining = t_end - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::IntegrationFailure { time: self.t });
            }
            let t = self.t;
            let y = &self.y;
            let k1 = f(t, y);
            let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + h, &y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.tol.abs + self.tol.rel * y[i].abs().max(y_new[i].abs());
                // Per-component control: the worst component decides.
                err = f64::max(err, (e / scale).abs());
            }

            if !err.is_finite() {
                self.h = h * 0.2;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = if last { t_end } else { t + h };
                self.y = y_new;
                // A step shortened to hit the sample time says nothing about the natural step size.
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut s = DormandPrince::new(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], Tolerances::default());
        s.advance_to(2.0).unwrap();
        assert!((s.state()[0] - (-2.0f64).exp()).abs() < 1e-6);
        assert_eq!(s.time(), 2.0);
    }

    #[test]
    fn harmonic_oscillator_over_sampled_intervals() {
        let tol = Tolerances {
            rel: 1e-10,
            abs: 1e-12,
        };
        let mut s = DormandPrince::new(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], tol);
        for i in 1..=200 {
            let t = i as f64 * 0.05;
            s.advance_to(t).unwrap();
            assert!((s.state()[0] - t.cos()).abs() < 1e-7, "t = {t}");
        }
    }
}
