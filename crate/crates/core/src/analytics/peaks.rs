use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum prominence of a reported peak, as a fraction of the series maximum.
pub const DEFAULT_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Interpolated position (same units as the abscissa).
    pub position: f64,
    /// Interpolated height.
    pub height: f64,
    /// Index of the sampled maximum.
    pub index: usize,
    pub prominence: f64,
}

/// Local maxima of `y(x)` whose prominence exceeds `rel_prominence * max(y)`.
///
/// Positions are refined by fitting a parabola through the sampled maximum
/// and its two neighbours. Peaks are returned in order of increasing `x`.
pub fn find_peaks(x: &[f64], y: &[f64], rel_prominence: f64) -> Result<Vec<Peak>> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "abscissa and ordinate lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if y.len() < 5 {
        return Err(Error::Domain(format!("peak search needs >= 5 points, got {}", y.len())));
    }
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(y_max > 0.0) {
        return Ok(Vec::new());
    }
    let threshold = rel_prominence * y_max;

    let mut peaks = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            // walk across a possible plateau
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let top = (i + j) / 2;
                let prominence = prominence(y, top);
                if prominence >= threshold {
                    let (position, height) = refine(x, y, top);
                    peaks.push(Peak {
                        position,
                        height,
                        index: top,
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(peaks)
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left_min = h;
    for &v in y[..i].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn refine(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    // parabola through three (possibly unevenly spaced) points
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curvature = (d1 - d0) / (x2 - x0);
    if !(curvature < 0.0) {
        return (x1, y1);
    }
    let xv = 0.5 * (x0 + x1) - d0 / (2.0 * curvature);
    let xv = xv.clamp(x0, x2);
    let yv = y1 + d0 * (xv - x1) + curvature * (xv - x0) * (xv - x1);
    (xv, yv.max(y1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(x: f64, x0: f64, d: f64) -> f64 {
        d * d / ((x - x0).powi(2) + d * d)
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn single_centered_peak() {
        let x = grid(201, -10.0, 10.0);
        let y: Vec<f64> = x.iter().map(|&v| lorentz(v, 0.0, 1.0)).collect();
        let p = find_peaks(&x, &y, DEFAULT_PROMINENCE).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].position.abs() < 0.1);
    }

    #[test]
    fn sub_step_interpolation() {
        let x = grid(41, -10.0, 10.0);
        let y: Vec<f64> = x.iter().map(|&v| lorentz(v, 0.2, 2.0)).collect();
        let p = find_peaks(&x, &y, DEFAULT_PROMINENCE).unwrap();
        assert!((p[0].position - 0.2).abs() < 0.05, "{:?}", p);
    }

    #[test]
    fn two_peaks_and_small_bump_rejected() {
        let x = grid(401, -20.0, 20.0);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| lorentz(v, -8.0, 1.0) + lorentz(v, 8.0, 1.0) + 0.01 * lorentz(v, 0.0, 0.2))
            .collect();
        let p = find_peaks(&x, &y, DEFAULT_PROMINENCE).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0].position + 8.0).abs() < 0.05 && (p[1].position - 8.0).abs() < 0.05);
    }

    #[test]
    fn flat_series_has_no_peaks() {
        let x = grid(50, 0.0, 1.0);
        assert!(find_peaks(&x, &vec![3.0; 50], DEFAULT_PROMINENCE).unwrap().is_empty());
        assert!(find_peaks(&x, &vec![0.0; 50], DEFAULT_PROMINENCE).unwrap().is_empty());
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(find_peaks(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], DEFAULT_PROMINENCE).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn positions_invariant_under_positive_scaling(scale in 1e-15f64..1e6, c in -3.0f64..3.0, d in 0.3f64..3.0) {
                let x = grid(121, -12.0, 12.0);
                let y: Vec<f64> = x.iter().map(|&v| lorentz(v, c, d) + 0.5 * lorentz(v, c + 6.0, d)).collect();
                let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
                let a = find_peaks(&x, &y, DEFAULT_PROMINENCE).unwrap();
                let b = find_peaks(&x, &ys, DEFAULT_PROMINENCE).unwrap();
                prop_assert_eq!(a.len(), b.len());
                for (p, q) in a.iter().zip(&b) {
                    prop_assert_eq!(p.index, q.index);
                    prop_assert!((p.position - q.position).abs() < 1e-9);
                }
            }
        }
    }
}
