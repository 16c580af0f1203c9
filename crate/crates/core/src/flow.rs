//! Free Grushin-Schrodinger flow, Gaussian randomisation of building blocks,
//! the rough potentials whose randomisations do not gain regularity, and
//! Monte Carlo checks of the Gaussian decoupling and integrability gains.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{band_exponent, DyadicIndex};
use crate::hermite::zeta;
use crate::products::Sparse;
use crate::report::{Quantile, Row, SweepReport};
use crate::spectral::SpectralField;
use crate::stats::{linear_fit, mean, quantile, simpson_weights, std_error, tail_fit};
use crate::{cst, Real};

/// `E|X|²` for `X = g + ih`, `g, h` independent standard normals.
pub const GAUSSIAN_SECOND_MOMENT: f64 = 2.0;

/// Tail quantile levels used by ensemble reports.
pub const TAIL_LEVELS: [f64; 3] = [0.9, 0.99, 0.999];

/// `e^{it(2m+1)|η_q|}` on every mode.
pub fn linear_propagate<T: Real>(field: &SpectralField<T>, t: T) -> SpectralField<T> {
    field.map_diag(|m, q| {
        let w = cst::<T>((2 * m + 1) as f64) * field.grid.eta(q).abs();
        Complex::from_polar(T::one(), t * w)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub master_seed: u64,
    pub n_samples: usize,
}

impl EnsembleConfig {
    pub fn new(master_seed: u64, n_samples: usize) -> Self {
        EnsembleConfig {
            master_seed,
            n_samples,
        }
    }

    /// Independent stream of sample `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Largest quantile level the sample count supports.
    pub fn check_level(&self, level: f64) -> Result<()> {
        if (self.n_samples as f64) < 10.0 / (1.0 - level) - 1e-9 {
            return Err(Error::TooFewSamples {
                n: self.n_samples,
                level,
            });
        }
        Ok(())
    }

    pub fn supported_levels(&self) -> Vec<f64> {
        TAIL_LEVELS
            .iter()
            .copied()
            .filter(|&l| self.check_level(l).is_ok())
            .collect()
    }
}

/// One complex standard Gaussian, `E|X|² = 2`.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let g: f64 = StandardNormal.sample(rng);
    let h: f64 = StandardNormal.sample(rng);
    Complex64::new(g, h)
}

fn key_rng(master: u64, index: u64, k: DyadicIndex) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&index.to_le_bytes());
    seed[16..20].copy_from_slice(&k.j.to_le_bytes());
    seed[20..28].copy_from_slice(&(k.m as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Scalars `X_{I,m}` attached to building blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub values: BTreeMap<DyadicIndex, Complex64>,
}

impl Draw {
    /// Draw of sample `index`. Each `X_{I,m}` comes from its own stream keyed
    /// by `(master_seed, index, I, m)`, so enlarging the key set leaves the
    /// existing values unchanged.
    pub fn sample(cfg: &EnsembleConfig, index: usize, keys: &[DyadicIndex]) -> Self {
        let values = keys
            .iter()
            .map(|&k| {
                let mut rng = key_rng(cfg.master_seed, index as u64, k);
                (k, complex_gaussian(&mut rng))
            })
            .collect();
        Draw { values }
    }

    pub fn constant(keys: &[DyadicIndex], v: Complex64) -> Self {
        Draw {
            values: keys.iter().map(|&k| (k, v)).collect(),
        }
    }

    pub fn get(&self, d: DyadicIndex) -> Result<Complex64> {
        self.values
            .get(&d)
            .copied()
            .ok_or(Error::MissingDraw { j: d.j, m: d.m })
    }
}

/// `u_0^ω = Σ X_{I,m} u_{I,m}`.
pub fn randomize<T: Real>(u0: &SpectralField<T>, draw: &Draw) -> Result<SpectralField<T>> {
    let mut factors: BTreeMap<DyadicIndex, Complex<T>> = BTreeMap::new();
    for d in u0.blocks() {
        let x = draw.get(d)?;
        factors.insert(d, Complex::new(cst(x.re), cst(x.im)));
    }
    let spec = u0.spec().clone();
    Ok(u0.map_diag(|m, q| {
        factors
            .get(&DyadicIndex::new(band_exponent(spec.eta(q)), m))
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }))
}

pub fn randomize_sparse(u0: &Sparse, draw: &Draw) -> Result<Sparse> {
    let mut out = u0.clone();
    for n in &mut out.nodes {
        if n.c.norm_sqr() == 0.0 {
            continue;
        }
        n.c *= draw.get(DyadicIndex::new(band_exponent(u0.eta(n.q)), n.m))?;
    }
    Ok(out)
}

/// Potential with block norms
/// `‖u_{I,m}‖² = 1/((1+(2m+1)I)^k ⟨I⟩^ρ log(1+I)² (m+1) log(m+2)²)`, `I ≥ 1`,
/// and profile `|η|^{1/4} h_m(|η|^{1/2} x)` inside each band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughPotential {
    pub k: f64,
    pub rho: f64,
}

impl RoughPotential {
    pub fn new(k: f64, rho: f64) -> Self {
        RoughPotential { k, rho }
    }

    pub fn block_norm_sq(&self, d: DyadicIndex) -> f64 {
        if d.j < 0 {
            return 0.0;
        }
        let i = d.band();
        let m = d.m as f64;
        1.0 / (d.weight().powf(self.k)
            * d.bracket().powf(self.rho)
            * (1.0 + i).ln().powi(2)
            * (m + 1.0)
            * (m + 2.0).ln().powi(2))
    }

    /// `|(I, m)| = max{log(1+I), m}`.
    pub fn size(d: DyadicIndex) -> f64 {
        (1.0 + d.band()).ln().max(d.m as f64)
    }

    /// Blocks with `I ≥ 1` and `|(I, m)| ≤ K`.
    pub fn blocks_within(k_trunc: f64) -> Vec<DyadicIndex> {
        let mut out = Vec::new();
        let mut j = 0;
        while (1.0 + 2f64.powi(j)).ln() <= k_trunc {
            for m in 0..=(k_trunc.floor() as usize) {
                out.push(DyadicIndex::new(j, m));
            }
            j += 1;
        }
        out
    }

    /// `‖u_{I,m}‖²_{H^s} / ‖u_{I,m}‖²` for the band profile: the mean of
    /// `(1+(2m+1)η)^s` over `η ∈ [I, 2I]`.
    pub fn sobolev_factor(d: DyadicIndex, s: f64) -> f64 {
        let c = (2 * d.m + 1) as f64;
        let i = d.band();
        if s.abs() < 1e-15 {
            return 1.0;
        }
        let prim = |eta: f64| (1.0 + c * eta).powf(s + 1.0) / (c * (s + 1.0));
        if (s + 1.0).abs() < 1e-15 {
            return ((1.0 + 2.0 * c * i).ln() - (1.0 + c * i).ln()) / (c * i);
        }
        (prim(2.0 * i) - prim(i)) / i
    }

    /// `Σ_{|(I,m)| ≤ K} |X_{I,m}|² ‖u_{I,m}‖²_{H^s}`; `draw = None` means `X ≡ 1`.
    pub fn truncated_sobolev_sq(&self, s: f64, k_trunc: f64, draw: Option<&Draw>) -> Result<f64> {
        let mut acc = 0.0;
        for d in Self::blocks_within(k_trunc) {
            let x2 = match draw {
                Some(dr) => dr.get(d)?.norm_sqr(),
                None => 1.0,
            };
            acc += x2 * self.block_norm_sq(d) * Self::sobolev_factor(d, s);
        }
        Ok(acc)
    }

    /// `Σ_{|(I,m)| ≤ K} (1+(2m+1)I)^k ⟨I⟩^ρ ‖u_{I,m}‖²`.
    pub fn truncated_x_sq(&self, k_trunc: f64) -> f64 {
        Self::blocks_within(k_trunc)
            .into_iter()
            .map(|d| d.weight().powf(self.k) * d.bracket().powf(self.rho) * self.block_norm_sq(d))
            .sum()
    }

    /// Realisation on a grid, truncated to its bands and modes.
    pub fn field<T: Real>(
        &self,
        grid: &std::sync::Arc<crate::spectral::Grid<T>>,
    ) -> SpectralField<T> {
        let spec = &grid.spec;
        let mut count: BTreeMap<i32, usize> = BTreeMap::new();
        for q in 1..=spec.eta_count as i64 {
            *count.entry(band_exponent(spec.eta(q))).or_insert(0) += 2;
        }
        SpectralField::from_fn(grid, |m, q| {
            let eta = spec.eta(q).abs();
            let d = DyadicIndex::new(band_exponent(eta), m);
            if d.j < 0 {
                return Complex::new(T::zero(), T::zero());
            }
            let s2 = self.block_norm_sq(d) / (count[&d.j] as f64 * spec.eta_step);
            Complex::new(cst(s2.sqrt() * eta.powf(0.25)), T::zero())
        })
    }
}

pub fn rough_potential<T: Real>(
    k: f64,
    rho: f64,
    grid: &std::sync::Arc<crate::spectral::Grid<T>>,
) -> SpectralField<T> {
    RoughPotential::new(k, rho).field(grid)
}

/// Outcome of the truncation diagnostics for one draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationProfile {
    pub truncations: Vec<f64>,
    pub rough: Vec<f64>,
    pub regular: Vec<f64>,
}

impl TruncationProfile {
    pub fn strictly_increasing(&self) -> bool {
        self.rough.windows(2).all(|w| w[1] > w[0])
    }

    /// Relative tail of the truncated `H^k` norm at the largest
    /// truncation, `1 − (S_{K/2}/S_K)^{1/2}` for the stored squared sums.
    pub fn regular_tail(&self) -> f64 {
        let n = self.regular.len();
        1.0 - (self.regular[n - 2] / self.regular[n - 1]).sqrt()
    }
}

/// Truncated `H^{k+ε}` and `H^k` sums of the randomised rough potential for
/// every draw of the ensemble.
pub fn non_smoothing_profiles(
    pot: &RoughPotential,
    eps: f64,
    truncations: &[f64],
    cfg: &EnsembleConfig,
) -> Result<Vec<TruncationProfile>> {
    let kmax = truncations.iter().copied().fold(0.0, f64::max);
    let keys = RoughPotential::blocks_within(kmax);
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let draw = Draw::sample(cfg, i, &keys);
            let rough = truncations
                .iter()
                .map(|&k| pot.truncated_sobolev_sq(pot.k + eps, k, Some(&draw)))
                .collect::<Result<Vec<_>>>()?;
            let regular = truncations
                .iter()
                .map(|&k| pot.truncated_sobolev_sq(pot.k, k, Some(&draw)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TruncationProfile {
                truncations: truncations.to_vec(),
                rough,
                regular,
            })
        })
        .collect()
}

/// Ensemble report for the non-smoothing surrogate.
pub fn non_smoothing_report(
    pot: &RoughPotential,
    eps: f64,
    cfg: &EnsembleConfig,
) -> Result<SweepReport> {
    let truncations = [8.0, 16.0, 32.0];
    let profiles = non_smoothing_profiles(pot, eps, &truncations, cfg)?;
    let mut rep = SweepReport::new(
        "non_smoothing",
        "truncated H^{k+eps} and H^k norms of the randomised rough potential",
    );
    let growing = profiles.iter().filter(|p| p.strictly_increasing()).count();
    let tails: Vec<f64> = profiles.iter().map(|p| p.regular_tail()).collect();
    let small_tail = tails.iter().filter(|&&t| t < 0.05).count();
    let det_rough: Vec<f64> = truncations
        .iter()
        .map(|&k| pot.truncated_sobolev_sq(pot.k + eps, k, None))
        .collect::<Result<_>>()?;
    let det_regular: Vec<f64> = truncations
        .iter()
        .map(|&k| pot.truncated_sobolev_sq(pot.k, k, None))
        .collect::<Result<_>>()?;
    for (i, &k) in truncations.iter().enumerate() {
        rep.rows.push(Row::new(
            &[("K", k), ("s", pot.k + eps)],
            k,
            det_rough[i],
            det_rough[0],
        ));
        rep.rows.push(Row::new(
            &[("K", k), ("s", pot.k)],
            k,
            det_regular[i],
            det_regular[0],
        ));
    }
    rep.constant("draws", cfg.n_samples as f64);
    rep.constant("draws_strictly_increasing", growing as f64);
    rep.constant("draws_tail_below_5pct", small_tail as f64);
    rep.constant("mean_regular_tail", mean(&tails));
    rep.constant(
        "max_regular_tail",
        tails.iter().copied().fold(0.0, f64::max),
    );
    rep.constant("E|X|^2", GAUSSIAN_SECOND_MOMENT);
    let need = (0.99 * cfg.n_samples as f64).ceil() as usize;
    rep.finish_check(growing >= need && small_tail >= need);
    Ok(rep)
}

/// Monte Carlo checks of the Gaussian moment identities for `S = Σ Ψ_n X_n`.
pub fn decoupling_moment_check(psi: &[Complex64], cfg: &EnsembleConfig) -> Result<SweepReport> {
    if cfg.n_samples < 1000 {
        return Err(Error::TooFewSamples {
            n: cfg.n_samples,
            level: 0.999,
        });
    }
    let len = psi.len();
    let draws: Vec<Vec<Complex64>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.rng(i);
            (0..len).map(|_| complex_gaussian(&mut rng)).collect()
        })
        .collect();
    let mut rep = SweepReport::new(
        "decoupling",
        "Gaussian moment identities, 3 sigma tolerance",
    );
    let mut ok = true;
    let mut z_check = |rep: &mut SweepReport, name: &str, xs: Vec<f64>, target: f64| {
        let mu = mean(&xs);
        let se = std_error(&xs).max(1e-300);
        let z = (mu - target) / se;
        rep.rows.push(Row::new(
            &[("target", target), ("std_error", se)],
            1.0,
            mu,
            target.abs().max(se),
        ));
        rep.constant(&format!("{name}.mean"), mu);
        rep.constant(&format!("{name}.z"), z);
        if z.abs() > 3.0 {
            ok = false;
            rep.notice(format!("{name}: |z| = {:.2} > 3", z.abs()));
        }
    };
    let psi2: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
    let sums: Vec<Complex64> = draws
        .iter()
        .map(|x| psi.iter().zip(x).map(|(p, x)| p * x).sum())
        .collect();
    z_check(
        &mut rep,
        "second_moment",
        sums.iter().map(|s| s.norm_sqr()).collect(),
        GAUSSIAN_SECOND_MOMENT * psi2,
    );
    z_check(
        &mut rep,
        "mean_re",
        draws.iter().map(|x| x[0].re).collect(),
        0.0,
    );
    z_check(
        &mut rep,
        "square_re",
        draws.iter().map(|x| (x[0] * x[0]).re).collect(),
        0.0,
    );
    z_check(
        &mut rep,
        "square_im",
        draws.iter().map(|x| (x[0] * x[0]).im).collect(),
        0.0,
    );
    // E[X_a X̄_b X̄_c X_d] vanishes unless {a, d} = {b, c}
    let tuples: Vec<[usize; 4]> = if len >= 4 {
        vec![[0, 1, 2, 3], [0, 0, 0, 1], [0, 1, 1, 0], [1, 2, 3, 1]]
    } else if len >= 2 {
        vec![[0, 0, 0, 1], [0, 1, 1, 0]]
    } else {
        vec![]
    };
    for t in tuples {
        let v: Vec<Complex64> = draws
            .iter()
            .map(|x| x[t[0]] * x[t[1]].conj() * x[t[2]].conj() * x[t[3]])
            .collect();
        let name = format!("quartic[{},{},{},{}]", t[0], t[1], t[2], t[3]);
        z_check(
            &mut rep,
            &format!("{name}.re"),
            v.iter().map(|c| c.re).collect(),
            0.0,
        );
        z_check(
            &mut rep,
            &format!("{name}.im"),
            v.iter().map(|c| c.im).collect(),
            0.0,
        );
    }
    // paired control: E|X_0|^4 = 2 (E|X|^2)^2
    z_check(
        &mut rep,
        "quartic_paired",
        draws.iter().map(|x| x[0].norm_sqr().powi(2)).collect(),
        2.0 * GAUSSIAN_SECOND_MOMENT.powi(2),
    );
    // tail of |S| / (Σ|Ψ|²)^{1/2} against R²
    let norm = psi2.sqrt();
    let ratios: Vec<f64> = sums.iter().map(|s| s.norm() / norm).collect();
    let mut pts = Vec::new();
    for i in 1..=14 {
        let r = 0.25 * i as f64;
        let count = ratios.iter().filter(|&&x| x > r).count();
        if count >= 10 {
            pts.push((r * r, (count as f64 / cfg.n_samples as f64).ln()));
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let fit = linear_fit(&x, &y);
    rep.tail_fit = Some(crate::stats::TailFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        points: pts,
    });
    rep.constant("E|X|^2", GAUSSIAN_SECOND_MOMENT);
    if !(fit.slope < 0.0 && fit.r2 > 0.9) {
        ok = false;
        rep.notice(format!("tail fit slope {} r2 {}", fit.slope, fit.r2));
    }
    rep.finish_check(ok);
    Ok(rep)
}

/// Inputs of [`integrability_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityConfig {
    pub k: f64,
    pub p: f64,
    pub q: f64,
    pub t_final: f64,
    pub n_t: usize,
}

/// `‖(t ↦ f(t))‖_{L^q_T}` from samples on the uniform time grid.
pub fn time_norm(values: &[f64], q: f64, t_final: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let w = simpson_weights(n, t_final / (n - 1) as f64);
    let s: f64 = values.iter().zip(&w).map(|(v, w)| w * v.powf(q)).sum();
    s.max(0.0).powf(1.0 / q)
}

/// Deterministic block sum and ensemble statistic of the integrability gain
/// of the randomised free flow.
pub fn integrability_sweep(
    u0: &SpectralField<f64>,
    ic: &IntegrabilityConfig,
    cfg: &EnsembleConfig,
) -> Result<SweepReport> {
    let zp = zeta(ic.p)?;
    if !(ic.q >= 2.0) || ic.p.is_infinite() || ic.q.is_infinite() {
        return Err(Error::Config(
            "p and q must be finite and at least 2".into(),
        ));
    }
    if ic.n_t < 16 {
        return Err(Error::Config("integrability sweep needs n_t >= 16".into()));
    }
    let times: Vec<f64> = (0..ic.n_t)
        .map(|i| ic.t_final * i as f64 / (ic.n_t - 1) as f64)
        .collect();
    let rho = zp + 1.5 - 3.0 / ic.p;
    let xnorm = u0.x_norm(ic.k, rho);
    if !xnorm.is_finite() {
        return Err(Error::InfiniteNorm);
    }
    let mut rep = SweepReport::new(
        "integrability",
        "||z^w||_{L^q_T W^{k+zeta(p),p}} / (T^{1/q} ||u0||_X)",
    );
    // (a) deterministic block sum
    let mut lhs = 0.0;
    for d in u0.blocks() {
        let b = u0.block(d)?;
        let norms: Vec<f64> = times
            .iter()
            .map(|&t| linear_propagate(&b, t).synthesize().lp_norm(ic.p))
            .collect();
        let tn = time_norm(&norms, ic.q, ic.t_final);
        lhs += d.weight().powf(ic.k + zp) * tn * tn;
    }
    let rhs = ic.t_final.powf(2.0 / ic.q) * xnorm * xnorm;
    rep.rows.push(Row::new(
        &[("p", ic.p), ("q", ic.q), ("k", ic.k)],
        1.0,
        lhs,
        rhs,
    ));
    rep.constant("C_block_sum", if rhs > 0.0 { lhs / rhs } else { 0.0 });
    rep.constant("rho", rho);
    rep.constant("E|X|^2", GAUSSIAN_SECOND_MOMENT);
    // (b) ensemble
    let keys = u0.blocks();
    let s = ic.k + zp;
    let lifted = u0.apply_resolvent_power(s / 2.0);
    let stats: Vec<f64> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let draw = Draw::sample(cfg, i, &keys);
            let r = randomize(&lifted, &draw)?;
            let norms: Vec<f64> = times
                .iter()
                .map(|&t| linear_propagate(&r, t).synthesize().lp_norm(ic.p))
                .collect();
            let denom = ic.t_final.powf(1.0 / ic.q) * xnorm;
            Ok(if denom > 0.0 {
                time_norm(&norms, ic.q, ic.t_final) / denom
            } else {
                0.0
            })
        })
        .collect::<Result<_>>()?;
    attach_distribution(&mut rep, &stats, 1.0, cfg);
    rep.finish_check(rep.quantiles.iter().all(|q| q.value.is_finite()));
    Ok(rep)
}

/// Quantiles and tail fit of an ensemble statistic of homogeneity `degree`.
pub fn attach_distribution(
    rep: &mut SweepReport,
    stats: &[f64],
    degree: f64,
    cfg: &EnsembleConfig,
) {
    let mut levels = vec![0.5];
    levels.extend(cfg.supported_levels());
    rep.quantiles = levels
        .iter()
        .map(|&l| Quantile {
            level: l,
            value: quantile(stats, l),
        })
        .collect();
    rep.constant("median", quantile(stats, 0.5));
    rep.constant("mean", mean(stats));
    if stats.len() >= 20 {
        let mut fit_levels = vec![0.5, 0.6, 0.7, 0.8, 0.9];
        fit_levels.extend(cfg.supported_levels().into_iter().filter(|&l| l > 0.9));
        rep.tail_fit = Some(tail_fit(stats, degree, &fit_levels));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Dealias, GridSpec};
    use crate::spectral::Grid;

    #[test]
    fn phase_example() {
        let g = Grid::<f64>::new(GridSpec::new(0.5, 4, 3, Dealias::THREE_HALVES)).unwrap();
        let mut f = SpectralField::zeros(&g);
        f.set(1, 2, Complex64::new(1.0, 0.0));
        let p = linear_propagate(&f, std::f64::consts::PI / 3.0);
        assert!((p.get(1, 2) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn draws_are_reproducible() {
        let cfg = EnsembleConfig::new(42, 10);
        let keys = [DyadicIndex::new(0, 1), DyadicIndex::new(-1, 3)];
        assert_eq!(Draw::sample(&cfg, 3, &keys), Draw::sample(&cfg, 3, &keys));
        assert_ne!(Draw::sample(&cfg, 3, &keys), Draw::sample(&cfg, 4, &keys));
    }

    #[test]
    fn sobolev_factor_limits() {
        let d = DyadicIndex::new(2, 3);
        assert!((RoughPotential::sobolev_factor(d, 0.0) - 1.0).abs() < 1e-15);
        let f = RoughPotential::sobolev_factor(d, 1.0);
        // mean of 1 + 7η over [4, 8]
        assert!((f - (1.0 + 7.0 * 6.0)).abs() < 1e-12);
    }
}
