//! Adaptive Dormand-Prince 5(4) with fourth-order dense output.

use crate::constants::TWO_PI;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Minimum number of steps per period of the fastest rate.
    pub points_per_period: f64,
    pub max_steps: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            points_per_period: 20.0,
            max_steps: 500_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Stateful stepper. The last accepted step size carries over between calls,
/// so a scan can be integrated dwell by dwell without restarting the controller.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerances,
    h_max: f64,
    rate_name: &'static str,
    rate: f64,
    h: f64,
    pub stats: Stats,
}

impl Dopri5 {
    pub fn new(tol: Tolerances, fastest: (&'static str, f64)) -> Self {
        let mut s = Self {
            tol,
            h_max: f64::INFINITY,
            rate_name: fastest.0,
            rate: fastest.1,
            h: 0.0,
            stats: Stats::default(),
        };
        s.set_fastest_rate(fastest);
        s
    }

    pub fn set_fastest_rate(&mut self, (name, rate): (&'static str, f64)) {
        self.rate_name = name;
        self.rate = rate;
        self.h_max = if rate > 0.0 {
            TWO_PI / (self.tol.points_per_period * rate)
        } else {
            f64::INFINITY
        };
        if self.h > self.h_max {
            self.h = self.h_max;
        }
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Advance `y` from `t0` to `t_end`, calling `on_sample` at each requested
    /// time (ascending, inside `[t0, t_end]`). Samples at `t_end` see the
    /// final state exactly; interior ones are interpolated.
    pub fn integrate<const N: usize, F, S>(
        &mut self,
        f: &mut F,
        t0: f64,
        y: &mut [f64; N],
        t_end: f64,
        samples: &[f64],
        mut on_sample: S,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64; N], &mut [f64; N]),
        S: FnMut(f64, &[f64; N]),
    {
        let span = t_end - t0;
        if !(span >= 0.0) {
            return Err(Error::Domain(format!("integration interval [{t0}, {t_end}] is reversed")));
        }
        let mut next = 0;
        while next < samples.len() && samples[next] <= t0 {
            on_sample(samples[next], y);
            next += 1;
        }
        if span == 0.0 {
            return Ok(());
        }

        let mut k1 = [0.0; N];
        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];
        let mut tmp = [0.0; N];
        let mut y_new = [0.0; N];
        f(t0, y, &mut k1);
        self.stats.evaluations += 1;

        let mut t = t0;
        let mut h = if self.h > 0.0 { self.h } else { (0.01 * span).min(self.h_max) };
        let mut last_rejected = false;
        let h_min = 1e-14 * t0.abs().max(span);
        let mut steps = 0u64;

        while t < t_end {
            let mut last = false;
            // stretch by a hair rather than leave a sliver of an interval behind
            if t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }
            if h < h_min {
                return Err(self.stiff(t));
            }
            steps += 1;
            if steps > self.tol.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget of {} exhausted at t = {t:.6e} s",
                    self.tol.max_steps
                )));
            }

            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &tmp, &mut k2);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &tmp, &mut k3);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &tmp, &mut k4);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &tmp, &mut k5);
            for i in 0..N {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_next = if last { t_end } else { t + h };
            f(t_next, &tmp, &mut k6);
            for i in 0..N {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t_next, &y_new, &mut k7);
            self.stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();

            if !err.is_finite() {
                self.stats.rejected += 1;
                h *= 0.2;
                last_rejected = true;
                continue;
            }

            if err <= 1.0 {
                self.stats.accepted += 1;
                if next < samples.len() && samples[next] <= t_next {
                    // dense output coefficients
                    let mut r2 = [0.0; N];
                    let mut r3 = [0.0; N];
                    let mut r4 = [0.0; N];
                    let mut r5 = [0.0; N];
                    for i in 0..N {
                        let dy = y_new[i] - y[i];
                        let bspl = h * k1[i] - dy;
                        r2[i] = dy;
                        r3[i] = bspl;
                        r4[i] = dy - h * k7[i] - bspl;
                        r5[i] = h
                            * (D1 * k1[i]
                                + D3 * k3[i]
                                + D4 * k4[i]
                                + D5 * k5[i]
                                + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    while next < samples.len() && samples[next] <= t_next {
                        let ts = samples[next];
                        if last && ts >= t_end {
                            on_sample(ts, &y_new);
                        } else {
                            let th = (ts - t) / h;
                            let th1 = 1.0 - th;
                            for i in 0..N {
                                tmp[i] = y[i]
                                    + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                            }
                            on_sample(ts, &tmp);
                        }
                        next += 1;
                    }
                }
                *y = y_new;
                k1 = k7;
                t = t_next;

                let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 5.0 });
                let proposed = (h * fac).min(self.h_max);
                if !last {
                    h = proposed;
                    self.h = proposed;
                } else if proposed > self.h || self.h == 0.0 {
                    // a clipped final step says little about the natural size
                    self.h = proposed.max(self.h);
                }
                last_rejected = false;
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                last_rejected = true;
            }
        }
        Ok(())
    }

    fn stiff(&self, t: f64) -> Error {
        Error::Numerical(format!(
            "step size underflow at t = {t:.6e} s; the problem looks stiff. \
             Fastest rate is {} = {:.4e} rad/s",
            self.rate_name, self.rate
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut st = Dopri5::new(Tolerances::default(), ("k", 1.0));
        let mut y = [1.0];
        let samples: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let mut got = Vec::new();
        st.integrate(&mut |_t, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = -y[0], 0.0, &mut y, 5.0, &samples, |t, y| {
            got.push((t, y[0]))
        })
        .unwrap();
        assert_eq!(got.len(), samples.len());
        for (t, v) in got {
            assert!((v - (-t).exp()).abs() < 1e-8, "t={t} v={v}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let w = 3.0;
        let mut st = Dopri5::new(Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() }, ("w", w));
        let mut y = [1.0, 0.0];
        let samples: Vec<f64> = (0..1000).map(|i| i as f64 * 0.0101).collect();
        let mut worst: f64 = 0.0;
        st.integrate(
            &mut |_t, y: &[f64; 2], dy: &mut [f64; 2]| {
                dy[0] = y[1];
                dy[1] = -w * w * y[0];
            },
            0.0,
            &mut y,
            10.1,
            &samples,
            |t, y| worst = worst.max((y[0] - (w * t).cos()).abs()),
        )
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
        assert!((y[0] - (w * 10.1f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn step_ceiling_respected() {
        let mut st = Dopri5::new(Tolerances::default(), ("fast", 1e3));
        let mut y = [0.0];
        st.integrate(&mut |_t, _y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = 1.0, 0.0, &mut y, 1.0, &[], |_, _| {})
            .unwrap();
        let min_steps = (1.0 / st.h_max()).floor() as u64;
        assert!(st.stats.accepted >= min_steps);
        assert!((y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_reports_stiffness() {
        let mut st = Dopri5::new(Tolerances::default(), ("k", 1.0));
        let mut y = [1.0];
        let err = st
            .integrate(&mut |_t, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0] * y[0], 0.0, &mut y, 2.0, &[], |_, _| {})
            .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn zero_length_interval_emits_initial_sample() {
        let mut st = Dopri5::new(Tolerances::default(), ("k", 1.0));
        let mut y = [2.0];
        let mut n = 0;
        st.integrate(&mut |_t, _y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = 1.0, 1.0, &mut y, 1.0, &[1.0], |_, v| {
            assert_eq!(v[0], 2.0);
            n += 1;
        })
        .unwrap();
        assert_eq!(n, 1);
    }
}
