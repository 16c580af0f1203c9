//! Phase-space representation on a [`GridSpec`]: coefficient tables
//! `f[m][q]`, the physical `(x, y)` samples they synthesise to, and the
//! diagonal operators, norms and products acting on them.
//!
//! Conventions. `û(x, η_q) = (dy/√(2π)) Σ_l u(x, y_l) e^{−iη_q y_l}` and
//! `u(x, y) = Σ_q û(x, η_q) (Δη/√(2π)) e^{iη_q y}`, so that
//! `Σ_q |û_q|² Δη = ∫|u|² dy` over one period. The Hermite projection is
//! `f[m][q] = |η_q|^{1/2} Σ_j w_j û(x_j, η_q) h_m(√|η_q| x_j)` and norms
//! carry the matching weight `|η_q|^{−1/2} Δη`.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{band_exponent, packet_exponent, DyadicIndex, GridSpec};
use crate::hermite::HermiteTable;
use crate::{cst, Real};

/// Row batch handed to one FFT call.
const FFT_ROWS: usize = 32;

/// A [`GridSpec`] together with its precomputed Hermite tables and FFT plans.
pub struct Grid<T: Real> {
    pub spec: GridSpec,
    x_nodes: Vec<T>,
    weights: Vec<T>,
    /// `tables[|q|−1][m·N_x + j] = h_m(√(|q|Δη) x_j)`.
    tables: Vec<Vec<T>>,
    ny: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("ny", &self.ny)
            .finish()
    }
}

impl<T: Real> Grid<T> {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let quad = spec.quad();
        let x_nodes = quad.nodes::<T>();
        let weights = quad.weights::<T>();
        let tables = (1..=spec.eta_count)
            .into_par_iter()
            .map(|q| {
                let s = cst::<T>(spec.eta(q as i64).sqrt());
                HermiteTable::scaled(spec.m_max, &quad, s).values
            })
            .collect();
        let ny = spec.y_count();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(ny);
        let inv = planner.plan_fft_inverse(ny);
        Ok(Arc::new(Grid {
            spec,
            x_nodes,
            weights,
            tables,
            ny,
            fwd,
            inv,
        }))
    }

    pub fn nx(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_nodes(&self) -> &[T] {
        &self.x_nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn dy(&self) -> T {
        cst(self.spec.y_period() / self.ny as f64)
    }

    pub fn y_nodes(&self) -> Vec<T> {
        let dy = self.spec.y_period() / self.ny as f64;
        (0..self.ny).map(|l| cst(l as f64 * dy)).collect()
    }

    /// `h_m(√|η_q| x_j)` for all `j`.
    pub fn profile(&self, m: usize, q: i64) -> &[T] {
        let nx = self.nx();
        &self.tables[q.unsigned_abs() as usize - 1][m * nx..(m + 1) * nx]
    }

    fn bin(&self, q: i64) -> usize {
        q.rem_euclid(self.ny as i64) as usize
    }

    pub fn eta(&self, q: i64) -> T {
        cst(self.spec.eta(q))
    }

    pub fn same(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.spec == other.spec
    }

    fn fft_rows(&self, buf: &mut [Complex<T>], forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        let ny = self.ny;
        buf.par_chunks_mut(ny * FFT_ROWS).for_each(|chunk| {
            let mut scratch =
                vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
    }
}

/// Smooth cutoff with `χ = 1` on `[0, 1/2]`, `χ = 0` on `[1, ∞)`.
pub fn chi(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let s = 2.0 * r - 1.0;
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Coefficient table `f[m][q]`, m-major with the column order of
/// [`GridSpec::col`].
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    pub grid: Arc<Grid<T>>,
    pub coeffs: Vec<Complex<T>>,
}

/// Samples `u(x_j, y_l)`, x-major.
#[derive(Clone, Debug)]
pub struct PhysicalField<T: Real> {
    pub grid: Arc<Grid<T>>,
    pub values: Vec<Complex<T>>,
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        let n = grid.spec.n_modes() * grid.spec.n_cols();
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![czero(); n],
        }
    }

    pub fn from_fn(grid: &Arc<Grid<T>>, mut f: impl FnMut(usize, i64) -> Complex<T>) -> Self {
        let mut out = Self::zeros(grid);
        let nc = grid.spec.n_cols();
        for m in 0..grid.spec.n_modes() {
            for c in 0..nc {
                out.coeffs[m * nc + c] = f(m, grid.spec.q_of_col(c));
            }
        }
        out
    }

    pub fn spec(&self) -> &GridSpec {
        &self.grid.spec
    }

    fn idx(&self, m: usize, q: i64) -> usize {
        m * self.spec().n_cols() + self.spec().col(q)
    }

    pub fn get(&self, m: usize, q: i64) -> Complex<T> {
        self.coeffs[self.idx(m, q)]
    }

    pub fn set(&mut self, m: usize, q: i64, v: Complex<T>) {
        let i = self.idx(m, q);
        self.coeffs[i] = v;
    }

    /// Iterates `(m, q, f[m][q])` over stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, i64, Complex<T>)> + '_ {
        let nc = self.spec().n_cols();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / nc, self.spec().q_of_col(i % nc), v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re == T::zero() && c.im == T::zero())
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `1 + (2m+1)|η_q|`.
    pub fn weight(&self, m: usize, q: i64) -> T {
        T::one() + cst::<T>((2 * m + 1) as f64) * self.grid.eta(q).abs()
    }

    /// Multiplies entry `(m, q)` by `mult(m, q)`.
    pub fn map_diag(&self, mut mult: impl FnMut(usize, i64) -> Complex<T>) -> Self {
        let mut out = self.clone();
        let nc = self.spec().n_cols();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if c.re != T::zero() || c.im != T::zero() {
                *c *= mult(i / nc, self.spec().q_of_col(i % nc));
            }
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, &b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, &b)| *a -= b);
        Ok(out)
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: Complex<T>, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, &b)| *a += s * b);
        Ok(())
    }

    /// `|η_q|^{−1/2} Δη`, the norm weight of a column.
    fn measure(&self, q: i64) -> T {
        cst::<T>(self.spec().eta_step) / self.grid.eta(q).abs().sqrt()
    }

    /// `Σ (1+(2m+1)|η_q|)^k |f[m][q]|² |η_q|^{−1/2} Δη`.
    pub fn sobolev_norm_sq(&self, k: T) -> T {
        let nc = self.spec().n_cols();
        let mut acc = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let a = c.norm_sqr();
            if a == T::zero() {
                continue;
            }
            let (m, q) = (i / nc, self.spec().q_of_col(i % nc));
            let w = if k == T::zero() {
                T::one()
            } else {
                self.weight(m, q).powf(k)
            };
            acc += w * a * self.measure(q);
        }
        acc
    }

    pub fn sobolev_norm(&self, k: T) -> T {
        self.sobolev_norm_sq(k).sqrt()
    }

    pub fn l2_norm(&self) -> T {
        self.sobolev_norm(T::zero())
    }

    /// Spectral `L²` inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_grid(other)?;
        let nc = self.spec().n_cols();
        let mut acc = czero::<T>();
        for (i, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            acc += *a * b.conj() * self.measure(self.spec().q_of_col(i % nc));
        }
        Ok(acc)
    }

    /// Squared `L²` norms of the building blocks, keyed by `(I, m)`.
    pub fn block_norms_sq(&self) -> std::collections::BTreeMap<DyadicIndex, T> {
        let mut out = std::collections::BTreeMap::new();
        for (m, q, c) in self.entries() {
            let a = c.norm_sqr();
            if a == T::zero() {
                continue;
            }
            let key = DyadicIndex::new(band_exponent(self.spec().eta(q)), m);
            *out.entry(key).or_insert(T::zero()) += a * self.measure(q);
        }
        out
    }

    /// Building blocks carrying non-zero data.
    pub fn blocks(&self) -> Vec<DyadicIndex> {
        self.block_norms_sq().into_keys().collect()
    }

    /// `Σ_{(I,m)} (1+(2m+1)I)^k ⟨I⟩^ρ ‖u_{I,m}‖²`, square-rooted.
    pub fn x_norm(&self, k: T, rho: T) -> T {
        self.block_norms_sq()
            .into_iter()
            .fold(T::zero(), |acc, (d, n2)| {
                acc + cst::<T>(d.weight()).powf(k) * cst::<T>(d.bracket()).powf(rho) * n2
            })
            .sqrt()
    }

    pub fn band_extract(&self, j: i32, m: usize) -> Result<Self> {
        let (lo, hi) = self.spec().band_range();
        if j < lo || j > hi {
            return Err(Error::BandOutOfRange(j));
        }
        if m > self.spec().m_max {
            return Err(Error::ModeOverflow(m));
        }
        let spec = self.spec().clone();
        Ok(self.keep(|mm, q| mm == m && band_exponent(spec.eta(q)) == j))
    }

    pub fn block(&self, d: DyadicIndex) -> Result<Self> {
        self.band_extract(d.j, d.m)
    }

    /// `u_A`, `A = 2^a`: modes whose block has `1+(2m+1)I ∈ [A, 2A)`.
    pub fn packet_extract(&self, a: i32) -> Self {
        let spec = self.spec().clone();
        self.keep(|m, q| {
            let d = DyadicIndex::new(band_exponent(spec.eta(q)), m);
            packet_exponent(d.weight()) == a
        })
    }

    /// Packet exponents present in the data.
    pub fn packets(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self
            .blocks()
            .iter()
            .map(|d| packet_exponent(d.weight()))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn keep(&self, mut pred: impl FnMut(usize, i64) -> bool) -> Self {
        let mut out = self.clone();
        let nc = self.spec().n_cols();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !pred(i / nc, self.spec().q_of_col(i % nc)) {
                *c = czero();
            }
        }
        out
    }

    /// The single block carrying all the data, if there is one.
    pub fn unimodal(&self) -> Option<DyadicIndex> {
        let b = self.blocks();
        if b.len() == 1 {
            Some(b[0])
        } else {
            None
        }
    }

    /// `P_{≤A}`: multiplies mode `(m, q)` by `χ((1+(2m+1)|η_q|)/A)`.
    pub fn smooth_project(&self, a: T) -> Self {
        self.map_diag(|m, q| {
            let r = crate::to64(self.weight(m, q) / a);
            Complex::new(cst(chi(r)), T::zero())
        })
    }

    /// `(Id − Δ_G)^s`.
    pub fn apply_resolvent_power(&self, s: T) -> Self {
        self.map_diag(|m, q| Complex::new(self.weight(m, q).powf(s), T::zero()))
    }

    /// Coefficients of the complex conjugate field: `conj(f[m][−q])`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(&self.grid);
        let nc = self.spec().n_cols();
        for m in 0..self.spec().n_modes() {
            for c in 0..nc {
                out.coeffs[m * nc + (nc - 1 - c)] = self.coeffs[m * nc + c].conj();
            }
        }
        out
    }

    /// `û(x_j, η_q)` for every column, `c`-major.
    fn fourier_columns(&self) -> Vec<Option<Vec<Complex<T>>>> {
        let g = &self.grid;
        let nx = g.nx();
        let nc = self.spec().n_cols();
        let nm = self.spec().n_modes();
        (0..nc)
            .into_par_iter()
            .map(|c| {
                let q = self.spec().q_of_col(c);
                let mut col: Option<Vec<Complex<T>>> = None;
                for m in 0..nm {
                    let f = self.coeffs[m * nc + c];
                    if f.re == T::zero() && f.im == T::zero() {
                        continue;
                    }
                    let out = col.get_or_insert_with(|| vec![czero(); nx]);
                    for (o, &h) in out.iter_mut().zip(g.profile(m, q)) {
                        *o += f * h;
                    }
                }
                col
            })
            .collect()
    }

    /// Samples on the `(x, y)` grid.
    pub fn synthesize(&self) -> PhysicalField<T> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let scale = cst::<T>(self.spec().eta_step / (2.0 * std::f64::consts::PI).sqrt());
        let mut buf = vec![czero::<T>(); nx * ny];
        for (c, col) in self.fourier_columns().into_iter().enumerate() {
            let Some(col) = col else { continue };
            let b = g.bin(self.spec().q_of_col(c));
            for (j, v) in col.into_iter().enumerate() {
                buf[j * ny + b] = v * scale;
            }
        }
        g.fft_rows(&mut buf, false);
        PhysicalField {
            grid: g.clone(),
            values: buf,
        }
    }

    /// Pointwise product, evaluated on the padded physical grid and
    /// projected back onto the retained modes.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let a = self.synthesize();
        let b = other.synthesize();
        Ok(a.mul(&b)?.analyze())
    }

    /// `|u|² u`, evaluated in physical space.
    pub fn cubic(&self) -> Self {
        let mut p = self.synthesize();
        p.values.par_iter_mut().for_each(|v| *v *= v.norm_sqr());
        p.analyze()
    }

    /// `‖self − other‖_{H^k} / max(‖other‖_{H^k}, tiny)`.
    pub fn relative_distance(&self, other: &Self, k: T) -> Result<T> {
        let d = self.sub(other)?.sobolev_norm(k);
        let n = other.sobolev_norm(k);
        Ok(if n > T::zero() { d / n } else { d })
    }
}

impl<T: Real> PhysicalField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        PhysicalField {
            grid: grid.clone(),
            values: vec![czero(); grid.nx() * grid.ny()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T, T) -> Complex<T>) -> Self {
        let ys = grid.y_nodes();
        let mut values = Vec::with_capacity(grid.nx() * grid.ny());
        for &x in grid.x_nodes() {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if !self.grid.same(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(a, &b)| *a *= b);
        Ok(out)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// `∫|u|^p dx dy` over one period by the grid quadrature.
    pub fn lp_norm_pow(&self, p: T) -> T {
        let ny = self.grid.ny();
        let dy = self.grid.dy();
        self.values
            .chunks(ny)
            .zip(self.grid.weights())
            .map(|(row, &w)| {
                let s = row.iter().fold(T::zero(), |acc, v| {
                    let a = v.norm();
                    acc + if p == cst(2.0) { a * a } else { a.powf(p) }
                });
                s * w * dy
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// `‖u‖_{L^p}`; `p = ∞` gives the grid maximum.
    pub fn lp_norm(&self, p: T) -> T {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        }
        self.lp_norm_pow(p).powf(p.recip())
    }

    pub fn l2_norm(&self) -> T {
        self.lp_norm_pow(cst(2.0)).sqrt()
    }

    /// Spectral coefficients of the samples (the exact inverse of
    /// [`SpectralField::synthesize`] on band-limited data).
    pub fn analyze(&self) -> SpectralField<T> {
        let g = &self.grid;
        let spec = &g.spec;
        let (nx, ny) = (g.nx(), g.ny());
        let mut buf = self.values.clone();
        g.fft_rows(&mut buf, true);
        let scale = g.dy() / cst::<T>((2.0 * std::f64::consts::PI).sqrt());
        let nc = spec.n_cols();
        let nm = spec.n_modes();
        let cols: Vec<Vec<Complex<T>>> = (0..nc)
            .into_par_iter()
            .map(|c| {
                let q = spec.q_of_col(c);
                let b = g.bin(q);
                let wu: Vec<Complex<T>> = (0..nx)
                    .map(|j| buf[j * ny + b] * (scale * g.weights()[j]))
                    .collect();
                let root = g.eta(q).abs().sqrt();
                (0..nm)
                    .map(|m| {
                        let acc = wu
                            .iter()
                            .zip(g.profile(m, q))
                            .fold(czero::<T>(), |acc, (&u, &h)| acc + u * h);
                        acc * root
                    })
                    .collect()
            })
            .collect();
        let mut out = SpectralField::zeros(g);
        for (c, col) in cols.into_iter().enumerate() {
            for (m, v) in col.into_iter().enumerate() {
                out.coeffs[m * nc + c] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Dealias;

    fn grid() -> Arc<Grid<f64>> {
        Grid::new(GridSpec::new(0.25, 12, 8, Dealias::THREE_HALVES)).unwrap()
    }

    #[test]
    fn basis_roundtrip() {
        let g = grid();
        let mut f = SpectralField::zeros(&g);
        f.set(3, 5, Complex::new(1.0, 0.0));
        let back = f.synthesize().analyze();
        for (m, q, v) in back.entries() {
            let target = if (m, q) == (3, 5) { 1.0 } else { 0.0 };
            assert!(
                (v - Complex::new(target, 0.0)).norm() < 1e-10,
                "{m} {q} {v}"
            );
        }
        let z = PhysicalField::zeros(&g).analyze();
        assert!(z.is_zero());
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.0), 0.0);
        assert!(chi(0.7) > 0.0 && chi(0.7) < 1.0);
        assert!(chi(0.6) > chi(0.9));
    }

    #[test]
    fn conj_matches_physical() {
        let g = grid();
        let f = SpectralField::from_fn(&g, |m, q| {
            Complex::new(
                (m as f64 + 0.3 * q as f64).sin(),
                (q as f64 - m as f64).cos(),
            ) * 0.1
        });
        let a = f.conj().synthesize();
        let b = f.synthesize().conj();
        let err = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
