//! Small statistics helpers with a fixed summation order.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], level: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, level)
}

pub fn quantile_sorted(v: &[f64], level: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = level.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if sxx > 0.0 && syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Composite quadrature weights on `n` uniform nodes with step `h`:
/// Simpson, closed by a 3/8 panel when the interval count is odd.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => return w,
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
            return w;
        }
        3 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
            return w;
        }
        _ => {}
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[s + o] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// Cumulative integrals `∫_0^{t_i}` for samples on a uniform grid: Simpson
/// at even nodes, the last odd interval closed with a three-point rule.
pub fn cumulative_weights(n: usize, h: f64) -> Vec<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut w = vec![0.0; n];
        if i >= 1 {
            let even = i - (i % 2);
            for s in (0..even).step_by(2) {
                w[s] += h / 3.0;
                w[s + 1] += 4.0 * h / 3.0;
                w[s + 2] += h / 3.0;
            }
            if i % 2 == 1 {
                // ∫_{t_{i−1}}^{t_i} through nodes i−1, i, i+1 (or i−2, i−1, i at the end)
                if i + 1 < n {
                    w[i - 1] += 5.0 * h / 12.0;
                    w[i] += 8.0 * h / 12.0;
                    w[i + 1] -= h / 12.0;
                } else if i >= 2 {
                    w[i - 2] -= h / 12.0;
                    w[i - 1] += 8.0 * h / 12.0;
                    w[i] += 5.0 * h / 12.0;
                } else {
                    w[0] += h / 2.0;
                    w[1] += h / 2.0;
                }
            }
        }
        out.push(
            w.into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        );
    }
    out
}

/// `ln P(S > R)` against `R²`, `R = S^{1/degree}`, at the given levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn tail_fit(samples: &[f64], degree: f64, levels: &[f64]) -> TailFit {
    let mut v: Vec<f64> = samples
        .iter()
        .map(|s| s.max(0.0).powf(1.0 / degree))
        .collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let points: Vec<(f64, f64)> = levels
        .iter()
        .map(|&l| {
            let r = quantile_sorted(&v, l);
            (r * r, (1.0 - l).ln())
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let f = linear_fit(&x, &y);
    TailFit {
        slope: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        points,
    }
}
