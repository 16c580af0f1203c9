//! Orthonormal Hermite functions `h_m`, `−h_m'' + x² h_m = (2m+1) h_m`, with
//! `h_0 = π^{−1/4} e^{−x²/2} > 0`.
//!
//! Values come from the upward three-term recurrence run on a rescaled
//! sequence: the Gaussian factor is kept as a separate logarithm and the
//! polynomial part is renormalised whenever it grows past a threshold, so
//! neither piece under- or overflows before they are recombined.

use crate::error::{Error, Result};
use crate::{cst, Real};

/// `λ_m = √(2m+1)`.
#[inline]
pub fn lambda(m: usize) -> f64 {
    ((2 * m + 1) as f64).sqrt()
}

/// Renormalisation threshold, a quarter of the exponent range of `T`.
fn big<T: Real>() -> T {
    let e = T::max_value().log2().floor() / cst(4.0);
    cst::<T>(2.0).powf(e)
}

/// Upward recurrence state: `(h_{k−1}, h_k) = (prev, cur)·exp(log_scale)`.
struct Ladder<T> {
    k: usize,
    x: T,
    prev: T,
    cur: T,
    log_scale: T,
    big: T,
    ln_big: T,
}

impl<T: Real> Ladder<T> {
    fn new(x: T) -> Self {
        let big = big::<T>();
        Ladder {
            k: 0,
            x,
            prev: T::zero(),
            cur: T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI().sqrt(),
            log_scale: -x * x / cst(2.0),
            big,
            ln_big: big.ln(),
        }
    }

    fn step(&mut self) {
        let k = cst::<T>(self.k as f64);
        let next = (cst::<T>(2.0) / (k + T::one())).sqrt() * self.x * self.cur
            - (k / (k + T::one())).sqrt() * self.prev;
        self.prev = self.cur;
        self.cur = next;
        self.k += 1;
        if self.cur.abs() > self.big {
            self.prev /= self.big;
            self.cur /= self.big;
            self.log_scale += self.ln_big;
        }
    }

    fn advance_to(&mut self, m: usize) {
        while self.k < m {
            self.step();
        }
    }

    fn unscale(&self, v: T) -> T {
        if v == T::zero() {
            return v;
        }
        let ln = v.abs().ln() + self.log_scale;
        v.signum() * ln.exp()
    }
}

// π^{−1/4} = (2/√π)^{1/2}/√2 is what Ladder::new seeds with.

/// `h_m(x)`.
pub fn hermite_eval<T: Real>(m: usize, x: T) -> T {
    let mut l = Ladder::new(x);
    l.advance_to(m);
    l.unscale(l.cur)
}

/// Sign and natural logarithm of `|h_m(x)|`; usable where the value itself
/// is below the floating point range. Returns `(0, −∞)` at a zero.
pub fn hermite_log_abs<T: Real>(m: usize, x: T) -> (T, T) {
    let mut l = Ladder::new(x);
    l.advance_to(m);
    if l.cur == T::zero() {
        return (T::zero(), T::neg_infinity());
    }
    (l.cur.signum(), l.cur.abs().ln() + l.log_scale)
}

/// `(h_{m−1}(x), h_m(x), h_{m+1}(x))` with `h_{−1} = 0`.
pub fn hermite_triple<T: Real>(m: usize, x: T) -> (T, T, T) {
    let mut l = Ladder::new(x);
    l.advance_to(m);
    let (a, b) = (l.prev, l.cur);
    let s = l.log_scale;
    l.step();
    // step may have renormalised; bring a, b onto the same scale as l.cur
    let shift = (s - l.log_scale).exp();
    (l.unscale(a * shift), l.unscale(b * shift), l.unscale(l.cur))
}

/// `h_m'(x) = √(m/2) h_{m−1}(x) − √((m+1)/2) h_{m+1}(x)`.
pub fn hermite_derivative<T: Real>(m: usize, x: T) -> T {
    let (a, _, c) = hermite_triple(m, x);
    let mm = cst::<T>(m as f64);
    (mm / cst(2.0)).sqrt() * a - ((mm + T::one()) / cst(2.0)).sqrt() * c
}

/// `h_0(x), …, h_{m_max}(x)` written into `out` (length `m_max + 1`).
pub fn hermite_column_into<T: Real>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    let mut l = Ladder::new(x);
    let mut factor = l.log_scale.exp();
    let mut scale = l.log_scale;
    out[0] = l.cur * factor;
    for slot in out.iter_mut().skip(1) {
        l.step();
        if l.log_scale != scale {
            scale = l.log_scale;
            factor = scale.exp();
        }
        *slot = if factor == T::zero() || !factor.is_finite() {
            l.unscale(l.cur)
        } else {
            l.cur * factor
        };
    }
}

pub fn hermite_column<T: Real>(m_max: usize, x: T) -> Vec<T> {
    let mut v = vec![T::zero(); m_max + 1];
    hermite_column_into(x, &mut v);
    v
}

/// Three-region pointwise envelope for `|h_m|`.
pub fn envelope_bound<T: Real>(m: usize, x: T) -> T {
    let lam = cst::<T>(lambda(m));
    let ax = x.abs();
    let half = lam / cst(2.0);
    let two = lam * cst(2.0);
    let inner = || lam.powf(cst(-0.5));
    let middle = || (lam.powf(cst(2.0 / 3.0)) + (ax * ax - lam * lam).abs()).powf(cst(-0.25));
    let outer = || (-ax * ax / cst(8.0)).exp();
    if ax < half {
        inner()
    } else if ax == half {
        inner().max(middle())
    } else if ax < two {
        middle()
    } else if ax == two {
        middle().max(outer())
    } else {
        outer()
    }
}

/// Decay exponent of `‖h_m‖_{L^p}` in `λ_m`: `1/2 − 1/p` on `[2,4]`,
/// `1/6 + 1/(3p)` above 4. `p = ∞` is allowed.
pub fn zeta(p: f64) -> Result<f64> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::ExponentBelowTwo(p));
    }
    Ok(if p <= 4.0 {
        0.5 - 1.0 / p
    } else {
        1.0 / 6.0 + 1.0 / (3.0 * p)
    })
}

/// Uniform trapezoid grid on `[−half_width, half_width]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadGrid {
    pub half_width: f64,
    pub count: usize,
}

impl QuadGrid {
    pub fn new(half_width: f64, count: usize) -> Self {
        QuadGrid {
            half_width,
            count: count.max(2),
        }
    }

    /// Default grid for modes up to `m_max`: `X = 2λ + 8`, spacing at most
    /// `min(0.5 λ^{−1/3}, 0.05, π/(λ+2))`.
    pub fn for_mode(m_max: usize) -> Self {
        let lam = lambda(m_max);
        let x = 2.0 * lam + 8.0;
        let h = Self::max_spacing(m_max).min(0.05);
        QuadGrid::new(x, (2.0 * x / h).ceil() as usize + 1)
    }

    fn max_spacing(m: usize) -> f64 {
        let lam = lambda(m);
        (0.5 * lam.powf(-1.0 / 3.0)).min(std::f64::consts::PI / (lam + 2.0))
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.count - 1) as f64
    }

    pub fn refined(&self) -> Self {
        QuadGrid::new(self.half_width, 2 * self.count - 1)
    }

    pub fn nodes<T: Real>(&self) -> Vec<T> {
        let h = self.spacing();
        (0..self.count)
            .map(|j| cst(-self.half_width + j as f64 * h))
            .collect()
    }

    pub fn weights<T: Real>(&self) -> Vec<T> {
        let h = self.spacing();
        let mut w = vec![cst::<T>(h); self.count];
        w[0] = cst(h / 2.0);
        w[self.count - 1] = cst(h / 2.0);
        w
    }

    /// Resolution precondition for quadrature of powers of `h_m`.
    pub fn check_resolves(&self, m: usize) -> Result<()> {
        let lam = lambda(m);
        if self.half_width < 2.0 * lam + 4.0 {
            return Err(Error::Unresolved {
                m,
                reason: format!(
                    "half width {} < 2λ+4 = {}",
                    self.half_width,
                    2.0 * lam + 4.0
                ),
            });
        }
        let hmax = Self::max_spacing(m);
        if self.spacing() > hmax {
            return Err(Error::Unresolved {
                m,
                reason: format!("spacing {} > {}", self.spacing(), hmax),
            });
        }
        Ok(())
    }
}

/// `‖h_m‖_{L^p(R)}` by trapezoid quadrature; grid maximum of `|h_m|` when
/// `p = ∞`.
pub fn lp_norm<T: Real>(m: usize, p: f64, grid: &QuadGrid) -> Result<T> {
    zeta(p)?;
    grid.check_resolves(m)?;
    let xs = grid.nodes::<T>();
    let ws = grid.weights::<T>();
    if p.is_infinite() {
        return Ok(xs
            .iter()
            .map(|&x| hermite_eval(m, x).abs())
            .fold(T::zero(), T::max));
    }
    let pp = cst::<T>(p);
    let s = xs.iter().zip(&ws).fold(T::zero(), |acc, (&x, &w)| {
        acc + w * hermite_eval(m, x).abs().powf(pp)
    });
    Ok(s.powf(pp.recip()))
}

/// `h_m(x_j)` for all `m ≤ m_max` on the nodes of a quadrature grid.
#[derive(Clone, Debug)]
pub struct HermiteTable<T> {
    pub m_max: usize,
    pub x_nodes: Vec<T>,
    pub weights: Vec<T>,
    /// m-major: `values[m * n_nodes + j]`.
    pub values: Vec<T>,
}

impl<T: Real> HermiteTable<T> {
    pub fn new(m_max: usize, grid: &QuadGrid) -> Self {
        Self::scaled(m_max, grid, T::one())
    }

    /// Table of `h_m(s·x_j)`, the profile used at Fourier node `|η| = s²`.
    pub fn scaled(m_max: usize, grid: &QuadGrid, s: T) -> Self {
        let x_nodes = grid.nodes::<T>();
        let weights = grid.weights::<T>();
        let n = x_nodes.len();
        let mut values = vec![T::zero(); (m_max + 1) * n];
        let mut col = vec![T::zero(); m_max + 1];
        for (j, &x) in x_nodes.iter().enumerate() {
            hermite_column_into(s * x, &mut col);
            for (m, &v) in col.iter().enumerate() {
                values[m * n + j] = v;
            }
        }
        HermiteTable {
            m_max,
            x_nodes,
            weights,
            values,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn row(&self, m: usize) -> &[T] {
        let n = self.n_nodes();
        &self.values[m * n..(m + 1) * n]
    }

    /// `Σ_j w_j h_m(x_j) h_n(x_j)`.
    pub fn gram(&self, m: usize, n: usize) -> T {
        self.row(m)
            .iter()
            .zip(self.row(n))
            .zip(&self.weights)
            .fold(T::zero(), |acc, ((&a, &b), &w)| acc + w * a * b)
    }

    /// `max_{m,n} |G_{mn} − δ_{mn}|`.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for m in 0..=self.m_max {
            for n in m..=self.m_max {
                let target = if m == n { T::one() } else { T::zero() };
                worst = worst.max((self.gram(m, n) - target).abs());
            }
        }
        worst
    }

    /// `h_m'` on the nodes from the table rows (needs `m + 1 ≤ m_max`).
    pub fn derivative_row(&self, m: usize) -> Vec<T> {
        assert!(m < self.m_max, "derivative needs h_(m+1)");
        let mm = cst::<T>(m as f64);
        let a = (mm / cst(2.0)).sqrt();
        let c = ((mm + T::one()) / cst(2.0)).sqrt();
        let up = self.row(m + 1);
        (0..self.n_nodes())
            .map(|j| {
                let down = if m == 0 {
                    T::zero()
                } else {
                    self.row(m - 1)[j]
                };
                a * down - c * up[j]
            })
            .collect()
    }

    /// `h_m''` on the nodes, applying the derivative recurrence twice
    /// (needs `m + 2 ≤ m_max`).
    pub fn second_derivative_row(&self, m: usize) -> Vec<T> {
        assert!(m + 1 < self.m_max, "second derivative needs h_(m+2)");
        let mm = cst::<T>(m as f64);
        let two = cst::<T>(2.0);
        let lo = (mm * (mm - T::one())).max(T::zero()).sqrt();
        let hi = ((mm + T::one()) * (mm + two)).sqrt();
        let mid = two * mm + T::one();
        let up = self.row(m + 2);
        let cur = self.row(m);
        (0..self.n_nodes())
            .map(|j| {
                let down = if m < 2 { T::zero() } else { self.row(m - 2)[j] };
                (lo * down - mid * cur[j] + hi * up[j]) / two
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn low_order_closed_forms() {
        let h00 = PI.powf(-0.25);
        assert_relative_eq!(hermite_eval(0, 0.0), h00, max_relative = 1e-15);
        assert_eq!(hermite_eval(1, 0.0_f64), 0.0);
        assert_relative_eq!(
            hermite_eval(2, 0.0),
            -h00 / 2f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            hermite_eval(0, 1.7),
            h00 * (-1.7f64 * 1.7 / 2.0).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            hermite_eval(1, 0.9),
            2f64.sqrt() * 0.9 * h00 * (-0.81f64 / 2.0).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(hermite_derivative(0, 0.0_f64).abs(), 0.0);
        assert_relative_eq!(
            hermite_derivative(1, 0.0),
            2f64.sqrt() * PI.powf(-0.25),
            max_relative = 1e-14
        );
        let h = 1e-5;
        let fd = (hermite_eval(5, 1.3 + h) - hermite_eval(5, 1.3 - h)) / (2.0 * h);
        assert_relative_eq!(hermite_derivative(5, 1.3), fd, max_relative = 1e-6);
    }

    #[test]
    fn envelope_examples() {
        assert_relative_eq!(
            envelope_bound(12, 0.0),
            25f64.powf(-0.25),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            envelope_bound(0, 3.0),
            (-9.0f64 / 8.0).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            envelope_bound(4, 3.0),
            9f64.powf(-1.0 / 12.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zeta_branches() {
        assert_eq!(zeta(2.0).unwrap(), 0.0);
        assert_relative_eq!(zeta(4.0).unwrap(), 0.25);
        assert_relative_eq!(zeta(4.0 + 1e-12).unwrap(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(zeta(f64::INFINITY).unwrap(), 1.0 / 6.0);
        assert!(zeta(1.5).is_err());
    }

    #[test]
    fn huge_order_stays_finite() {
        let m = 1_000_000;
        let lam = lambda(m);
        for &x in &[0.0, 0.37 * lam, lam, 1.5 * lam, 3.0 * lam] {
            let v: f64 = hermite_eval(m, x);
            assert!(v.is_finite(), "m={m} x={x}");
            let (_, ln) = hermite_log_abs::<f64>(m, x);
            assert!(ln < 0.0 || ln == f64::NEG_INFINITY);
        }
        // even order at 0: |h_m(0)| ≈ (2/(π λ))^{1/2} in the bulk
        let v: f64 = hermite_eval(m, 0.0);
        assert_relative_eq!(v.abs(), (2.0 / (PI * lam)).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn column_matches_pointwise() {
        let col = hermite_column::<f64>(300, 7.25);
        for m in [0, 1, 17, 120, 300] {
            assert_relative_eq!(
                col[m],
                hermite_eval(m, 7.25),
                max_relative = 1e-12,
                epsilon = 1e-300
            );
        }
    }

    #[test]
    fn lp_norm_oracles() {
        let g = QuadGrid::for_mode(0);
        assert_relative_eq!(lp_norm::<f64>(0, 2.0, &g).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(
            lp_norm::<f64>(0, f64::INFINITY, &g).unwrap(),
            PI.powf(-0.25),
            max_relative = 1e-12
        );
        assert!(lp_norm::<f64>(400, 4.0, &g).is_err());
        assert!(lp_norm::<f64>(0, 1.0, &g).is_err());
    }

    #[test]
    fn single_precision_table() {
        let t = HermiteTable::<f32>::new(20, &QuadGrid::for_mode(20));
        assert!(t.orthonormality_defect() < 1e-4);
    }
}
