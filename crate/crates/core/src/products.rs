//! Sobolev norms of products of sparse fields without truncation.
//!
//! A product of factors `Σ c h_m(√|η|x) e^{iηy}` has, at every output node
//! `η_s = Σ η_i`, an x-profile `Ŵ_s(x)` that is a finite sum of products of
//! Hermite functions. Its `H^ℓ` weight is read off from the expansion of
//! `Ŵ_s` in the orthonormal family `|η_s|^{1/4} h_k(√|η_s| x)`, carried as
//! far in `k` as the profile needs; at `η_s = 0` the operator is `1 − ∂²_x`
//! and the weight is taken from the Fourier transform in x.
//!
//! Used by the sweeps whose right-hand sides live beyond any fixed
//! `(m_max, Q)` truncation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::grid::{band_exponent, DyadicIndex};
use crate::hermite::{hermite_column_into, lambda};
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseNode {
    pub q: i64,
    pub m: usize,
    pub c: Complex64,
}

/// Finitely many coefficients `f[m][q]` on the lattice `η_q = qΔη`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sparse {
    pub eta_step: f64,
    pub nodes: Vec<SparseNode>,
}

impl Sparse {
    pub fn new(eta_step: f64) -> Self {
        Sparse {
            eta_step,
            nodes: Vec::new(),
        }
    }

    pub fn single(eta_step: f64, q: i64, m: usize, c: Complex64) -> Self {
        Sparse {
            eta_step,
            nodes: vec![SparseNode { q, m, c }],
        }
    }

    pub fn from_field(f: &SpectralField<f64>) -> Self {
        let nodes = f
            .entries()
            .filter(|(_, _, c)| c.norm_sqr() > 0.0)
            .map(|(m, q, c)| SparseNode { q, m, c })
            .collect();
        Sparse {
            eta_step: f.spec().eta_step,
            nodes,
        }
    }

    pub fn push(&mut self, q: i64, m: usize, c: Complex64) {
        self.nodes.push(SparseNode { q, m, c });
    }

    pub fn eta(&self, q: i64) -> f64 {
        q as f64 * self.eta_step
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.iter().all(|n| n.c.norm_sqr() == 0.0)
    }

    /// Coefficients of the complex conjugate field.
    pub fn conj(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| SparseNode {
                q: -n.q,
                m: n.m,
                c: n.c.conj(),
            })
            .collect();
        Sparse {
            eta_step: self.eta_step,
            nodes,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.nodes.iter_mut().for_each(|n| n.c *= s);
        out
    }

    /// Free flow `e^{it(2m+1)|η|}` on every node.
    pub fn propagate(&self, t: f64) -> Self {
        let mut out = self.clone();
        for n in &mut out.nodes {
            let w = (2 * n.m + 1) as f64 * self.eta(n.q).abs();
            n.c *= Complex64::from_polar(1.0, t * w);
        }
        out
    }

    pub fn sobolev_norm_sq(&self, k: f64) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                let eta = self.eta(n.q).abs();
                (1.0 + (2 * n.m + 1) as f64 * eta).powf(k) * n.c.norm_sqr() * self.eta_step
                    / eta.sqrt()
            })
            .sum()
    }

    /// Split into building blocks `(I, m)`.
    pub fn blocks(&self) -> BTreeMap<DyadicIndex, Sparse> {
        let mut out: BTreeMap<DyadicIndex, Sparse> = BTreeMap::new();
        for n in &self.nodes {
            if n.c.norm_sqr() == 0.0 {
                continue;
            }
            let key = DyadicIndex::new(band_exponent(self.eta(n.q)), n.m);
            out.entry(key)
                .or_insert_with(|| Sparse::new(self.eta_step))
                .nodes
                .push(*n);
        }
        out
    }

    pub fn x_norm_sq(&self, k: f64, rho: f64) -> f64 {
        self.blocks()
            .iter()
            .map(|(d, b)| d.weight().powf(k) * d.bracket().powf(rho) * b.sobolev_norm_sq(0.0))
            .sum()
    }

    /// Largest `(λ_m + 4)√|η|`: frequency reach of the x-profiles.
    fn reach(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (lambda(n.m) + 4.0) * self.eta(n.q).abs().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest `(λ_m + 6)/√|η|`: spatial extent of the x-profiles.
    fn extent(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (lambda(n.m) + 6.0) / self.eta(n.q).abs().sqrt())
            .fold(0.0, f64::max)
    }
}

/// One monomial `coef · Π_i h_{m_i}(√|η_i| x)` of an output profile.
#[derive(Clone, Debug)]
struct Monomial {
    coef: Complex64,
    parts: Vec<(i64, usize)>,
}

/// Output profiles of a product, grouped by output node.
fn convolve(factors: &[&Sparse]) -> BTreeMap<i64, Vec<Monomial>> {
    let deta = factors[0].eta_step;
    let norm = (deta / (2.0 * PI).sqrt()).powi(factors.len() as i32 - 1);
    let mut acc: Vec<(i64, Monomial)> = vec![(
        0,
        Monomial {
            coef: Complex64::new(norm, 0.0),
            parts: vec![],
        },
    )];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.nodes.len());
        for (s, mono) in &acc {
            for n in f.nodes.iter().filter(|n| n.c.norm_sqr() > 0.0) {
                let mut parts = mono.parts.clone();
                parts.push((n.q, n.m));
                next.push((
                    s + n.q,
                    Monomial {
                        coef: mono.coef * n.c,
                        parts,
                    },
                ));
            }
        }
        acc = next;
    }
    let mut out: BTreeMap<i64, Vec<Monomial>> = BTreeMap::new();
    for (s, mono) in acc {
        out.entry(s).or_default().push(mono);
    }
    out
}

/// Quadrature grid and basis shared by every product landing on one node.
#[derive(Clone, Debug)]
struct NodeBasis {
    s: i64,
    xs: Vec<f64>,
    dx: f64,
    /// Hermite case: `e_k(x_j)`, k-major. Fourier case: unused.
    basis: Vec<f64>,
    k_count: usize,
    /// Slot weights `(1+(2k+1)|η|)^ℓ Δη` or `(1+ξ²)^ℓ dξ Δη`.
    weights: Vec<f64>,
}

const K_CAP: usize = 1 << 15;

impl NodeBasis {
    fn hermite(s: i64, deta: f64, extent: f64, reach: f64, ell: f64, k_hint: usize) -> Self {
        let eta = (s as f64 * deta).abs();
        let k_count = k_hint.clamp(8, K_CAP);
        let band = reach + (lambda(k_count) + 4.0) * eta.sqrt();
        let h = PI / band;
        let x_max = extent;
        let n = (2.0 * x_max / h).ceil() as usize + 1;
        let dx = 2.0 * x_max / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|j| -x_max + j as f64 * dx).collect();
        let root = eta.sqrt();
        let quarter = eta.powf(0.25);
        let cols: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| {
                let mut col = vec![0.0; k_count];
                hermite_column_into(root * x, &mut col);
                col.iter_mut().for_each(|v| *v *= quarter);
                col
            })
            .collect();
        let mut basis = vec![0.0; k_count * n];
        for (j, col) in cols.iter().enumerate() {
            for (k, &v) in col.iter().enumerate() {
                basis[k * n + j] = v;
            }
        }
        let weights = (0..k_count)
            .map(|k| (1.0 + (2 * k + 1) as f64 * eta).powf(ell) * deta)
            .collect();
        NodeBasis {
            s,
            xs,
            dx,
            basis,
            k_count,
            weights,
        }
    }

    fn fourier(deta: f64, extent: f64, reach: f64, ell: f64) -> Self {
        let h = PI / (2.0 * reach);
        let width = 4.0 * extent;
        let mut n = ((width / h).ceil() as usize).next_power_of_two();
        n = n.max(64);
        let dx = width / n as f64;
        let xs: Vec<f64> = (0..n).map(|j| -width / 2.0 + j as f64 * dx).collect();
        let dxi = 2.0 * PI / width;
        let weights = (0..n)
            .map(|k| {
                let kk = if k <= n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                let xi = kk * dxi;
                (1.0 + xi * xi).powf(ell) * dxi * deta
            })
            .collect();
        NodeBasis {
            s: 0,
            xs,
            dx,
            basis: Vec::new(),
            k_count: n,
            weights,
        }
    }

    fn is_fourier(&self) -> bool {
        self.s == 0
    }

    /// Slot coefficients of a profile sampled on `xs`.
    fn coefficients(&self, profile: &[Complex64]) -> Vec<Complex64> {
        let n = self.xs.len();
        if self.is_fourier() {
            let mut buf = profile.to_vec();
            let mut planner = FftPlanner::new();
            planner.plan_fft_forward(n).process(&mut buf);
            // shift phase to the left end of the box and normalise
            let x0 = self.xs[0];
            let dxi = 2.0 * PI / (n as f64 * self.dx);
            return buf
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let kk = if k <= n / 2 {
                        k as f64
                    } else {
                        k as f64 - n as f64
                    };
                    v * Complex64::from_polar(self.dx / (2.0 * PI).sqrt(), -kk * dxi * x0)
                })
                .collect();
        }
        // trapezoid endpoints are negligible: the profile has decayed there
        (0..self.k_count)
            .into_par_iter()
            .map(|k| {
                let row = &self.basis[k * n..(k + 1) * n];
                row.iter()
                    .zip(profile)
                    .fold(Complex64::new(0.0, 0.0), |a, (&e, &p)| a + p * e)
                    * self.dx
            })
            .collect()
    }

    fn norm_sq(&self, coeffs: &[Complex64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum()
    }
}

/// Samples of one output profile on the node grid.
fn sample(monos: &[Monomial], factors: &[&Sparse], xs: &[f64]) -> Vec<Complex64> {
    let deta = factors[0].eta_step;
    // distinct (q, max m) per factor position, evaluated once per x
    let mut needs: BTreeMap<i64, usize> = BTreeMap::new();
    for mono in monos {
        for &(q, m) in &mono.parts {
            let e = needs.entry(q).or_insert(0);
            *e = (*e).max(m);
        }
    }
    xs.par_iter()
        .map(|&x| {
            let cols: BTreeMap<i64, Vec<f64>> = needs
                .iter()
                .map(|(&q, &m)| {
                    let mut col = vec![0.0; m + 1];
                    hermite_column_into((q as f64 * deta).abs().sqrt() * x, &mut col);
                    (q, col)
                })
                .collect();
            monos.iter().fold(Complex64::new(0.0, 0.0), |acc, mono| {
                let p: f64 = mono.parts.iter().map(|(q, m)| cols[q][*m]).product();
                acc + mono.coef * p
            })
        })
        .collect()
}

/// A set of products `P_i = Π_j F_{ij}` expanded in a common output basis,
/// so that norms of linear combinations `Σ c_i P_i` are cheap.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    nodes: Vec<NodeBasis>,
    /// `coeffs[i][node]` for product `i`, empty when it misses the node.
    coeffs: Vec<Vec<Vec<Complex64>>>,
    /// Largest relative L² capture defect over nodes and products.
    pub capture_defect: f64,
}

impl ProductSpace {
    /// `products[i]` lists the factors of `P_i` (conjugations already applied).
    pub fn new(products: &[Vec<Sparse>], ell: f64) -> Self {
        let deta = products
            .iter()
            .flatten()
            .map(|s| s.eta_step)
            .next()
            .unwrap_or(1.0);
        let conv: Vec<BTreeMap<i64, Vec<Monomial>>> = products
            .iter()
            .map(|fs| {
                let refs: Vec<&Sparse> = fs.iter().collect();
                if refs.iter().any(|f| f.is_zero()) {
                    BTreeMap::new()
                } else {
                    convolve(&refs)
                }
            })
            .collect();
        // per node: widest extent, largest reach, phase-space hint for k
        let mut spans: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (fs, c) in products.iter().zip(&conv) {
            let extent = fs.iter().map(|f| f.extent()).fold(f64::INFINITY, f64::min);
            let reach: f64 = fs.iter().map(|f| f.reach()).sum();
            for &s in c.keys() {
                let e = spans.entry(s).or_insert((0.0, 0.0));
                e.0 = e.0.max(extent);
                e.1 = e.1.max(reach);
            }
        }
        let mut defect: f64 = 0.0;
        let mut nodes = Vec::new();
        let mut coeffs = vec![Vec::new(); products.len()];
        for (&s, &(extent, reach)) in &spans {
            let mut k_hint = {
                let eta = (s as f64 * deta).abs();
                if s == 0 {
                    0
                } else {
                    ((reach * reach / eta + eta * extent * extent) / 2.0).ceil() as usize + 24
                }
            };
            loop {
                let basis = if s == 0 {
                    NodeBasis::fourier(deta, extent, reach, ell)
                } else {
                    NodeBasis::hermite(s, deta, extent, reach, ell, k_hint)
                };
                let mut worst: f64 = 0.0;
                let mut per: Vec<Vec<Complex64>> = Vec::with_capacity(products.len());
                for (fs, c) in products.iter().zip(&conv) {
                    let Some(monos) = c.get(&s) else {
                        per.push(Vec::new());
                        continue;
                    };
                    let refs: Vec<&Sparse> = fs.iter().collect();
                    let prof = sample(monos, &refs, &basis.xs);
                    let direct: f64 =
                        prof.iter().map(|p| p.norm_sqr()).sum::<f64>() * basis.dx * deta;
                    let co = basis.coefficients(&prof);
                    let got: f64 = co.iter().map(|c| c.norm_sqr()).sum::<f64>()
                        * if basis.is_fourier() {
                            2.0 * PI / (basis.xs.len() as f64 * basis.dx)
                        } else {
                            1.0
                        }
                        * deta;
                    if direct > 0.0 {
                        worst = worst.max((direct - got).abs() / direct);
                    }
                    per.push(co);
                }
                if worst < 1e-11 || s == 0 || k_hint >= K_CAP {
                    defect = defect.max(worst);
                    for (i, co) in per.into_iter().enumerate() {
                        coeffs[i].push(co);
                    }
                    nodes.push(basis);
                    break;
                }
                k_hint *= 2;
            }
        }
        ProductSpace {
            nodes,
            coeffs,
            capture_defect: defect,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `‖P_i‖²_{H^ℓ}`.
    pub fn norm_sq(&self, i: usize) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coeffs[i])
            .map(|(b, c)| if c.is_empty() { 0.0 } else { b.norm_sq(c) })
            .sum()
    }

    /// `‖Σ_i w_i P_i‖²_{H^ℓ}`.
    pub fn combination_norm_sq(&self, w: &[Complex64]) -> f64 {
        let mut total = 0.0;
        let mut buf: Vec<Complex64> = Vec::new();
        for (node, b) in self.nodes.iter().enumerate() {
            buf.clear();
            buf.resize(b.weights.len(), Complex64::new(0.0, 0.0));
            for (i, wi) in w.iter().enumerate() {
                let c = &self.coeffs[i][node];
                if c.is_empty() || wi.norm_sqr() == 0.0 {
                    continue;
                }
                buf.iter_mut().zip(c).for_each(|(a, &v)| *a += *wi * v);
            }
            total += b.norm_sq(&buf);
        }
        total
    }
}

/// `‖Π_i F_i‖²_{H^ℓ}` for one product.
pub fn product_norm_sq(factors: &[Sparse], ell: f64) -> f64 {
    ProductSpace::new(&[factors.to_vec()], ell).norm_sq(0)
}

/// `‖Π_i F_i‖²_{L²}` by trapezoid quadrature in x and an exact FFT
/// convolution in η at every x node.
pub fn l2_product_sq(factors: &[Sparse]) -> f64 {
    if factors.is_empty() || factors.iter().any(|f| f.is_zero()) {
        return 0.0;
    }
    let deta = factors[0].eta_step;
    let extent = factors
        .iter()
        .map(|f| f.extent())
        .fold(f64::INFINITY, f64::min);
    let reach: f64 = factors.iter().map(|f| f.reach()).sum();
    let h = PI / (2.0 * reach);
    let half = (extent / h).ceil() as usize;
    let spans: Vec<(i64, i64)> = factors
        .iter()
        .map(|f| {
            let lo = f.nodes.iter().map(|n| n.q).min().unwrap_or(0);
            let hi = f.nodes.iter().map(|n| n.q).max().unwrap_or(0);
            (lo, hi)
        })
        .collect();
    let len: i64 = spans.iter().map(|(lo, hi)| hi - lo + 1).sum();
    let size = (len as usize).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let total: f64 = (0..=2 * half)
        .into_par_iter()
        .map(|j| {
            let x = (j as f64 - half as f64) * h;
            let mut acc = vec![Complex64::new(1.0, 0.0); size];
            let mut buf = vec![Complex64::new(0.0, 0.0); size];
            for (f, &(lo, _)) in factors.iter().zip(&spans) {
                buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                for n in &f.nodes {
                    let r = f.eta(n.q).abs().sqrt();
                    buf[(n.q - lo) as usize] += n.c * crate::hermite::hermite_eval(n.m, r * x);
                }
                fwd.process(&mut buf);
                acc.iter_mut().zip(&buf).for_each(|(a, b)| *a *= b);
            }
            inv.process(&mut acc);
            acc.iter().map(|c| c.norm_sqr()).sum::<f64>() / (size * size) as f64
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let norm = (deta / (2.0 * PI).sqrt()).powi(2 * (factors.len() as i32 - 1));
    total * h * norm * deta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_derivative, hermite_eval};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `‖W‖² + ‖W'‖² + η²‖xW‖²` by direct quadrature, W = h_m(√a x) h_n(√b x).
    fn h1_direct(m: usize, a: f64, n: usize, b: f64, deta: f64) -> f64 {
        let eta = a + b;
        let norm = deta / (2.0 * PI).sqrt();
        let (ra, rb) = (a.sqrt(), b.sqrt());
        let h = 1e-3;
        let mut s = 0.0;
        let mut x = -30.0;
        while x <= 30.0 {
            let w = hermite_eval(m, ra * x) * hermite_eval(n, rb * x);
            let dw = ra * hermite_derivative(m, ra * x) * hermite_eval(n, rb * x)
                + rb * hermite_eval(m, ra * x) * hermite_derivative(n, rb * x);
            s += (w * w * (1.0 + eta * eta * x * x) + dw * dw) * h;
            x += h;
        }
        s * norm * norm * deta
    }

    #[test]
    fn h1_norm_matches_direct_quadrature() {
        let deta = 0.25;
        let u = Sparse::single(deta, 3, 4, c(1.0, 0.0));
        let v = Sparse::single(deta, 6, 7, c(1.0, 0.0));
        let got = product_norm_sq(&[u, v], 1.0);
        let want = h1_direct(4, 0.75, 7, 1.5, deta);
        assert!((got - want).abs() / want < 1e-8, "{got} {want}");
    }

    #[test]
    fn zero_output_node_uses_fourier_weight() {
        let deta = 0.5;
        let u = Sparse::single(deta, 2, 1, c(0.0, 1.0));
        let prod = [u.clone(), u.conj()];
        let l2 = product_norm_sq(&prod, 0.0);
        // |h_1(x)|^4 integral at scale 1, times the convolution factor
        let mut s = 0.0;
        let mut x = -20.0;
        while x < 20.0 {
            s += hermite_eval::<f64>(1, x).powi(4) * 1e-3;
            x += 1e-3;
        }
        let want = s * deta * deta / (2.0 * PI) * deta;
        assert!((l2 - want).abs() / want < 1e-8, "{l2} {want}");
        assert!(product_norm_sq(&prod, 1.0) > l2);
    }

    #[test]
    fn combination_is_linear() {
        let deta = 0.25;
        let a = vec![
            Sparse::single(deta, 2, 0, c(1.0, 0.0)),
            Sparse::single(deta, 5, 3, c(0.5, 0.2)),
        ];
        let b = vec![
            Sparse::single(deta, 2, 1, c(0.3, -1.0)),
            Sparse::single(deta, 5, 3, c(0.5, 0.2)),
        ];
        let sp = ProductSpace::new(&[a.clone(), b.clone()], 1.5);
        let w = [c(2.0, 0.0), c(0.0, 0.0)];
        assert!((sp.combination_norm_sq(&w) - 4.0 * sp.norm_sq(0)).abs() < 1e-10 * sp.norm_sq(0));
        assert!(sp.capture_defect < 1e-10);
    }
}
