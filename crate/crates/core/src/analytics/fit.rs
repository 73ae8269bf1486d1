//! Least-squares line-shape fits (Levenberg-Marquardt on a few parameters).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative RMS residual above which a fit is flagged as a poor model of the data.
pub const RESIDUAL_FLAG: f64 = 0.02;

/// `amplitude * d^2 / ((x - center)^2 + d^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl LorentzianParams {
    pub fn fwhm(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d2 = self.half_width * self.half_width;
        self.amplitude * d2 / ((x - self.center).powi(2) + d2)
    }
}

/// `prefactor * exp(-rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialParams {
    pub rate: f64,
    pub prefactor: f64,
}

impl ExponentialParams {
    pub fn eval(&self, t: f64) -> f64 {
        self.prefactor * (-self.rate * t).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub params: P,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// RMS residual divided by the largest data value.
    pub relative_residual: f64,
    /// Diagonal of `sigma^2 (J^T J)^-1`, a rough variance per parameter.
    pub covariance_diag: Vec<f64>,
    pub iterations: usize,
    /// Set when `relative_residual` exceeds [`RESIDUAL_FLAG`].
    pub large_residual: bool,
    /// Index range of the samples used in the fit.
    pub window: (usize, usize),
    pub truncated: bool,
}

struct LmOutcome<const N: usize> {
    params: [f64; N],
    cost: f64,
    covariance_diag: [f64; N],
    iterations: usize,
}

/// Minimises `sum (model(x_i, p) - y_i)^2`. `model` returns the value and the
/// gradient with respect to the parameters.
fn levenberg_marquardt<const N: usize>(
    x: &[f64],
    y: &[f64],
    p0: [f64; N],
    model: impl Fn(f64, &[f64; N]) -> (f64, [f64; N]),
    admissible: impl Fn(&[f64; N]) -> bool,
    max_iter: usize,
) -> Result<LmOutcome<N>> {
    let cost_of = |p: &[f64; N]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| (model(xi, p).0 - yi).powi(2))
            .sum()
    };
    let mut p = p0;
    let mut cost = cost_of(&p);
    let mut lambda = 1e-3;
    let mut trace = vec![cost];
    let mut iterations;

    for it in 0..max_iter {
        iterations = it + 1;
        let mut jtj = [[0.0; N]; N];
        let mut jtr = [0.0; N];
        for (&xi, &yi) in x.iter().zip(y) {
            let (f, g) = model(xi, &p);
            let r = f - yi;
            for a in 0..N {
                jtr[a] += g[a] * r;
                for b in 0..N {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-300);
            }
            let rhs = jtr.map(|v| -v);
            let Some(step) = solve(m, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for a in 0..N {
                trial[a] += step[a];
            }
            let trial_cost = if admissible(&trial) { cost_of(&trial) } else { f64::INFINITY };
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel_change = (cost - trial_cost) / cost.max(1e-300);
                let step_small = (0..N).all(|a| step[a].abs() <= 1e-12 * p[a].abs().max(1e-300));
                p = trial;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                trace.push(cost);
                if rel_change < 1e-14 || step_small {
                    return Ok(finish(p, cost, jtj_at(x, &p, &model), x.len(), iterations));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: converged to machine precision
            return Ok(finish(p, cost, jtj_at(x, &p, &model), x.len(), iterations));
        }
        if cost == 0.0 {
            return Ok(finish(p, cost, jtj_at(x, &p, &model), x.len(), iterations));
        }
    }
    Err(Error::Fit {
        message: format!("no convergence after {max_iter} iterations"),
        residual_trace: trace,
    })
}

fn jtj_at<const N: usize>(
    x: &[f64],
    p: &[f64; N],
    model: &impl Fn(f64, &[f64; N]) -> (f64, [f64; N]),
) -> [[f64; N]; N] {
    let mut jtj = [[0.0; N]; N];
    for &xi in x {
        let (_, g) = model(xi, p);
        for a in 0..N {
            for b in 0..N {
                jtj[a][b] += g[a] * g[b];
            }
        }
    }
    jtj
}

fn finish<const N: usize>(p: [f64; N], cost: f64, jtj: [[f64; N]; N], n: usize, iterations: usize) -> LmOutcome<N> {
    let dof = n.saturating_sub(N).max(1) as f64;
    let sigma2 = cost / dof;
    let mut cov = [f64::NAN; N];
    for a in 0..N {
        let mut e = [0.0; N];
        e[a] = 1.0;
        if let Some(col) = solve(jtj, e) {
            cov[a] = sigma2 * col[a];
        }
    }
    LmOutcome {
        params: p,
        cost,
        covariance_diag: cov,
        iterations,
    }
}

/// Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for k in row + 1..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn relative_rms(cost: f64, n: usize, y: &[f64]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    (cost / n as f64).sqrt() / scale
}

/// Least-squares Lorentzian through one dominant peak.
pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<FitReport<LorentzianParams>> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::Domain("Lorentzian fit needs >= 4 paired samples".into()));
    }
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if !(ymax > 0.0) {
        return Err(Error::Fit {
            message: "series has no positive peak".into(),
            residual_trace: Vec::new(),
        });
    }
    // half-maximum crossings for the initial width
    let half = 0.5 * ymax;
    let left = (0..imax).rev().find(|&i| y[i] < half).map(|i| x[i]);
    let right = (imax + 1..y.len()).find(|&i| y[i] < half).map(|i| x[i]);
    let span = (x[x.len() - 1] - x[0]).abs();
    let hw0 = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => x[imax] - l,
        (None, Some(r)) => r - x[imax],
        (None, None) => 0.25 * span,
    }
    .abs()
    .max(span * 1e-6);

    let model = |xi: f64, p: &[f64; 3]| {
        let [c, d, a] = *p;
        let u = xi - c;
        let den = u * u + d * d;
        let shape = d * d / den;
        let f = a * shape;
        let df_dc = a * d * d * 2.0 * u / (den * den);
        let df_dd = a * 2.0 * d * u * u / (den * den);
        (f, [df_dc, df_dd, shape])
    };
    let out = levenberg_marquardt(
        x,
        y,
        [x[imax], hw0, ymax],
        model,
        |p| p[1] != 0.0 && p[1].is_finite(),
        500,
    )?;
    let [center, d, amplitude] = out.params;
    let params = LorentzianParams {
        center,
        half_width: d.abs(),
        amplitude,
    };
    let relative_residual = relative_rms(out.cost, x.len(), y);
    Ok(FitReport {
        params,
        residual_norm: out.cost.sqrt(),
        relative_residual,
        covariance_diag: out.covariance_diag.to_vec(),
        iterations: out.iterations,
        large_residual: relative_residual > RESIDUAL_FLAG,
        window: (0, x.len()),
        truncated: false,
    })
}

/// Least-squares `I0 exp(-r t)` on a decay trace.
///
/// Samples from the first non-positive value onwards are dropped (the window
/// is reported as truncated). Needs at least 10 usable samples.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<FitReport<ExponentialParams>> {
    if t.len() != y.len() {
        return Err(Error::Domain("time and signal lengths differ".into()));
    }
    let end = y.iter().position(|&v| !(v > 0.0)).unwrap_or(y.len());
    let truncated = end < y.len();
    if end < 10 {
        return Err(Error::Fit {
            message: format!("only {end} positive samples; need >= 10"),
            residual_trace: Vec::new(),
        });
    }
    let (t, y) = (&t[..end], &y[..end]);

    // log-linear initial guess
    let n = t.len() as f64;
    let (st, sl) = (t.iter().sum::<f64>(), y.iter().map(|v| v.ln()).sum::<f64>());
    let stt = t.iter().map(|v| v * v).sum::<f64>();
    let stl = t.iter().zip(y).map(|(a, b)| a * b.ln()).sum::<f64>();
    let slope = (n * stl - st * sl) / (n * stt - st * st);
    let icpt = (sl - slope * st) / n;
    let rate0 = (-slope).max(1e-300);
    let t0 = t[0];

    // parametrised relative to the first sample time to keep the prefactor well scaled
    let model = |ti: f64, p: &[f64; 2]| {
        let [r, a] = *p;
        let e = (-r * (ti - t0)).exp();
        (a * e, [-a * (ti - t0) * e, e])
    };
    let out = levenberg_marquardt(
        t,
        y,
        [rate0, (icpt + slope * t0).exp()],
        model,
        |p| p[0].is_finite() && p[1].is_finite(),
        500,
    )?;
    let [rate, a] = out.params;
    let params = ExponentialParams {
        rate,
        prefactor: a * (rate * t0).exp(),
    };
    let relative_residual = relative_rms(out.cost, t.len(), y);
    Ok(FitReport {
        params,
        residual_norm: out.cost.sqrt(),
        relative_residual,
        covariance_diag: out.covariance_diag.to_vec(),
        iterations: out.iterations,
        large_residual: relative_residual > RESIDUAL_FLAG,
        window: (0, end),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_lorentzian_recovered() {
        let truth = LorentzianParams {
            center: 1.3e5,
            half_width: 2.1e5,
            amplitude: 4.2e-12,
        };
        let x = grid(200, -2e6, 2e6);
        let y: Vec<f64> = x.iter().map(|&v| truth.eval(v)).collect();
        let fit = fit_lorentzian(&x, &y).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(fit.params.center, truth.center) < 1e-6);
        assert!(rel(fit.params.half_width, truth.half_width) < 1e-6);
        assert!(rel(fit.params.amplitude, truth.amplitude) < 1e-6);
        assert!(!fit.large_residual);
    }

    #[test]
    fn noisy_lorentzian_width_within_two_percent() {
        let truth = LorentzianParams {
            center: 0.0,
            half_width: 1.0,
            amplitude: 1.0,
        };
        let x = grid(200, -10.0, 10.0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let y: Vec<f64> = x.iter().map(|&v| truth.eval(v) + noise.sample(&mut rng)).collect();
            let fit = fit_lorentzian(&x, &y).unwrap();
            assert!((fit.params.fwhm() - 2.0).abs() / 2.0 < 0.02, "{}", fit.params.fwhm());
            assert!(!fit.large_residual);
        }
    }

    #[test]
    fn two_peak_input_flagged() {
        let a = LorentzianParams {
            center: -5.0,
            half_width: 0.5,
            amplitude: 1.0,
        };
        let b = LorentzianParams { center: 5.0, ..a };
        let x = grid(200, -15.0, 15.0);
        let y: Vec<f64> = x.iter().map(|&v| a.eval(v) + b.eval(v)).collect();
        match fit_lorentzian(&x, &y) {
            Ok(fit) => assert!(fit.large_residual, "rel residual {}", fit.relative_residual),
            Err(Error::Fit { .. }) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn exact_exponential_recovered_and_scale_invariant() {
        let t = grid(200, 0.0, 5e-6);
        let rate = 2.0 * std::f64::consts::TAU * 0.5e6;
        let y: Vec<f64> = t.iter().map(|&v| 3e-12 * (-rate * v).exp()).collect();
        let fit = fit_exponential(&t, &y).unwrap();
        assert!((fit.params.rate - rate).abs() / rate < 1e-9);
        let ys: Vec<f64> = y.iter().map(|v| v * 1e7).collect();
        let fit2 = fit_exponential(&t, &ys).unwrap();
        assert!((fit2.params.rate - fit.params.rate).abs() / rate < 1e-9);
    }

    #[test]
    fn biexponential_flagged() {
        let t = grid(200, 0.0, 5.0);
        let y: Vec<f64> = t.iter().map(|&v| 0.5 * (-v).exp() + 0.5 * (-10.0 * v).exp()).collect();
        let fit = fit_exponential(&t, &y).unwrap();
        assert!(fit.large_residual, "rel residual {}", fit.relative_residual);
    }

    #[test]
    fn non_positive_tail_truncates_window() {
        let t = grid(100, 0.0, 10.0);
        let mut y: Vec<f64> = t.iter().map(|&v| (-v).exp()).collect();
        for v in y.iter_mut().skip(60) {
            *v = 0.0;
        }
        let fit = fit_exponential(&t, &y).unwrap();
        assert!(fit.truncated);
        assert_eq!(fit.window, (0, 60));
        assert!((fit.params.rate - 1.0).abs() < 1e-9);
        assert!(fit_exponential(&t[..8], &y[..8]).is_err());
    }
}
