//! Random bilinear and trilinear smoothing: the deterministic block sums
//! behind the quadratic and cubic random estimates, their bound-side
//! formulas, and ensemble statistics of `(z^ω)²`, `|z^ω|²`, `|z^ω|²z^ω`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{attach_distribution, time_norm, Draw, EnsembleConfig, GAUSSIAN_SECOND_MOMENT};
use crate::grid::DyadicIndex;
use crate::products::{product_norm_sq, ProductSpace, Sparse};
use crate::report::{Row, SweepReport};
use crate::stats::quantile;

use super::{linf_bound, SweepConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub k: f64,
    /// Largest Hermite index of the test data; the refinement run doubles it.
    pub m_max: usize,
    pub t_final: f64,
    pub n_t: usize,
    pub samples: usize,
    pub seed: u64,
    /// Also run the ensemble for `|z^ω|²z^ω`, the costliest statistic.
    pub cubic_ensemble: bool,
}

impl SmoothingConfig {
    pub fn default_for(cfg: &SweepConfig) -> Self {
        SmoothingConfig {
            k: 1.0,
            m_max: 64,
            t_final: 0.1,
            n_t: 5,
            samples: cfg.samples,
            seed: cfg.seed,
            cubic_ensemble: false,
        }
    }

    pub fn ell(&self) -> f64 {
        self.k + 0.5
    }
}

/// Test data: one node per block at `η ∈ {1, 4}` (`Δη = 1`) and
/// `m ∈ {0, 1, 2, 4, …, m_max}`, with `‖u_{I,m}‖² = (1+(2m+1)I)^{−k−1}/⟨I⟩`.
pub fn smoothing_data(m_max: usize, k: f64) -> Sparse {
    let mut ms = vec![0usize];
    let mut m = 1;
    while m <= m_max {
        ms.push(m);
        m *= 2;
    }
    let mut out = Sparse::new(1.0);
    for q in [1i64, 4] {
        let eta = q as f64;
        for &m in &ms {
            let d = DyadicIndex::new(crate::grid::band_exponent(eta), m);
            let norm_sq = d.weight().powf(-k - 1.0) / d.bracket();
            out.push(q, m, Complex64::new((norm_sq * eta.sqrt()).sqrt(), 0.0));
        }
    }
    out
}

struct Block {
    f: Sparse,
    norm_sq: f64,
    linf: f64,
    packet: f64,
    band: f64,
    bracket: f64,
}

fn blocks_of(u0: &Sparse) -> Vec<Block> {
    u0.blocks()
        .into_iter()
        .map(|(d, f)| {
            let linf = linf_bound(&f);
            Block {
                norm_sq: f.sobolev_norm_sq(0.0),
                linf,
                packet: d.packet(),
                band: d.band(),
                bracket: d.bracket(),
                f,
            }
        })
        .collect()
}

/// The four deterministic sums and their bound-side counterparts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSums {
    pub zz: f64,
    pub zz_bound: f64,
    pub zz_star: f64,
    pub zz_star_bound: f64,
    pub zzz_1: f64,
    pub zzz_1_bound: f64,
    pub zzz_2: f64,
    pub zzz_2_bound: f64,
    pub x_norm: f64,
}

pub fn block_sums(u0: &Sparse, k: f64) -> BlockSums {
    let ell = k + 0.5;
    let bl = blocks_of(u0);
    let n = bl.len();
    let conj: Vec<Sparse> = bl.iter().map(|b| b.f.conj()).collect();
    // Σ_{a,b} ‖u_a u_b‖², symmetric in (a, b)
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let zz_terms: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (x, y) = (&bl[a], &bl[b]);
            let lhs = product_norm_sq(&[x.f.clone(), y.f.clone()], ell);
            let big = x.packet.max(y.packet);
            let rhs = big.powf(ell)
                * (y.band * x.bracket / x.packet.sqrt()).min(x.band * y.bracket / y.packet.sqrt())
                * x.norm_sq
                * y.norm_sq;
            let mult = if a == b { 1.0 } else { 2.0 };
            (mult * lhs, mult * rhs)
        })
        .collect();
    let zz_star_terms: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let x = &bl[a];
            let lhs = product_norm_sq(&[x.f.clone(), conj[a].clone()], ell).sqrt();
            (lhs, x.packet.powf(ell / 2.0 - 0.25) * x.bracket * x.norm_sq)
        })
        .collect();
    // Σ_{a,b,c} ‖u_a u_b ū_c‖², symmetric in (a, b)
    let triples: Vec<(usize, usize, usize)> = pairs
        .iter()
        .flat_map(|&(a, b)| (0..n).map(move |c| (a, b, c)))
        .collect();
    let zzz1_terms: Vec<(f64, f64)> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            let lhs = product_norm_sq(&[bl[a].f.clone(), bl[b].f.clone(), conj[c].clone()], ell);
            let idx = [a, b, c];
            let top = *idx
                .iter()
                .max_by(|&&i, &&j| bl[i].packet.total_cmp(&bl[j].packet).then(j.cmp(&i)))
                .unwrap();
            let pos = idx.iter().position(|&i| i == top).unwrap();
            let rest: Vec<usize> = (0..3).filter(|&p| p != pos).map(|p| idx[p]).collect();
            let side =
                |two: usize, inf: usize| bl[two].bracket * bl[two].norm_sq * bl[inf].linf.powi(2);
            let rhs = bl[top].packet.powf(ell - 0.5)
                * bl[top].bracket
                * bl[top].norm_sq
                * side(rest[0], rest[1]).min(side(rest[1], rest[0]));
            let mult = if a == b { 1.0 } else { 2.0 };
            (mult * lhs, mult * rhs)
        })
        .collect();
    // Σ_b (Σ_a ‖|u_a|² u_b‖)²
    let zzz2_inner: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|b| {
            (0..n)
                .map(|a| {
                    let lhs =
                        product_norm_sq(&[bl[a].f.clone(), conj[a].clone(), bl[b].f.clone()], ell)
                            .sqrt();
                    let big = bl[a].packet.max(bl[b].packet);
                    let rhs = big.powf(ell / 2.0 - 0.25)
                        * (bl[a].bracket * bl[b].bracket).sqrt()
                        * (bl[a].norm_sq * bl[b].norm_sq).sqrt()
                        * bl[a].linf;
                    (lhs, rhs)
                })
                .collect()
        })
        .collect();
    let sum2 = |v: &[(f64, f64)]| {
        v.iter()
            .fold((0.0, 0.0), |acc, t| (acc.0 + t.0, acc.1 + t.1))
    };
    let (zz, zz_bound) = sum2(&zz_terms);
    let (zz_star, zz_star_bound) = sum2(&zz_star_terms);
    let (zzz_1, zzz_1_bound) = sum2(&zzz1_terms);
    let (mut zzz_2, mut zzz_2_bound) = (0.0, 0.0);
    for row in &zzz2_inner {
        let (l, r) = sum2(row);
        zzz_2 += l * l;
        zzz_2_bound += r * r;
    }
    let x_norm = u0.x_norm_sq(k, 1.0).sqrt();
    BlockSums {
        zz,
        zz_bound,
        zz_star,
        zz_star_bound,
        zzz_1,
        zzz_1_bound,
        zzz_2,
        zzz_2_bound,
        x_norm,
    }
}

/// Which random product an ensemble statistic measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RandomProduct {
    /// `(z^ω)²`
    Square,
    /// `|z^ω|²`
    Modulus,
    /// `|z^ω|² z^ω`
    Cubic,
}

impl RandomProduct {
    pub fn degree(&self) -> i32 {
        match self {
            RandomProduct::Cubic => 3,
            _ => 2,
        }
    }
}

/// `F(t) = Σ X…  Π z_{a_i}(t)` expanded once per time node, so that
/// `‖F^ω(t)‖_{H^ℓ}` is cheap for every draw.
pub struct RandomFamily {
    pub kind: RandomProduct,
    pub times: Vec<f64>,
    keys: Vec<DyadicIndex>,
    /// Block indices and multiplicity of each product.
    terms: Vec<(Vec<usize>, f64)>,
    spaces: Vec<ProductSpace>,
}

impl RandomFamily {
    pub fn new(u0: &Sparse, kind: RandomProduct, times: &[f64], ell: f64) -> Self {
        let blocks: Vec<(DyadicIndex, Sparse)> = u0.blocks().into_iter().collect();
        let n = blocks.len();
        let mut terms = Vec::new();
        match kind {
            RandomProduct::Square => {
                for a in 0..n {
                    for b in a..n {
                        terms.push((vec![a, b], if a == b { 1.0 } else { 2.0 }));
                    }
                }
            }
            RandomProduct::Modulus => {
                for a in 0..n {
                    for b in 0..n {
                        terms.push((vec![a, b], 1.0));
                    }
                }
            }
            RandomProduct::Cubic => {
                for a in 0..n {
                    for b in a..n {
                        for c in 0..n {
                            terms.push((vec![a, b, c], if a == b { 1.0 } else { 2.0 }));
                        }
                    }
                }
            }
        }
        let spaces = times
            .iter()
            .map(|&t| {
                let z: Vec<Sparse> = blocks.iter().map(|(_, f)| f.propagate(t)).collect();
                let zc: Vec<Sparse> = z.iter().map(|f| f.conj()).collect();
                let products: Vec<Vec<Sparse>> = terms
                    .iter()
                    .map(|(idx, _)| match kind {
                        RandomProduct::Square => vec![z[idx[0]].clone(), z[idx[1]].clone()],
                        RandomProduct::Modulus => vec![z[idx[0]].clone(), zc[idx[1]].clone()],
                        RandomProduct::Cubic => {
                            vec![z[idx[0]].clone(), z[idx[1]].clone(), zc[idx[2]].clone()]
                        }
                    })
                    .collect();
                ProductSpace::new(&products, ell)
            })
            .collect();
        RandomFamily {
            kind,
            times: times.to_vec(),
            keys: blocks.iter().map(|(d, _)| *d).collect(),
            terms,
            spaces,
        }
    }

    pub fn keys(&self) -> &[DyadicIndex] {
        &self.keys
    }

    /// `‖F^ω(t_i)‖_{H^ℓ}` at every time node.
    pub fn norms(&self, draw: &Draw) -> Result<Vec<f64>> {
        let x = self
            .keys
            .iter()
            .map(|&k| draw.get(k))
            .collect::<Result<Vec<_>>>()?;
        let w: Vec<Complex64> = self
            .terms
            .iter()
            .map(|(idx, mult)| {
                let c = match self.kind {
                    RandomProduct::Square => x[idx[0]] * x[idx[1]],
                    RandomProduct::Modulus => x[idx[0]] * x[idx[1]].conj(),
                    RandomProduct::Cubic => x[idx[0]] * x[idx[1]] * x[idx[2]].conj(),
                };
                c * *mult
            })
            .collect();
        Ok(self
            .spaces
            .iter()
            .map(|s| s.combination_norm_sq(&w).max(0.0).sqrt())
            .collect())
    }

    pub fn capture_defect(&self) -> f64 {
        self.spaces
            .iter()
            .map(|s| s.capture_defect)
            .fold(0.0, f64::max)
    }
}

pub fn uniform_times(t_final: f64, n_t: usize) -> Vec<f64> {
    (0..n_t)
        .map(|i| t_final * i as f64 / (n_t - 1).max(1) as f64)
        .collect()
}

/// Ensemble of `‖F^ω‖_{L²_T H^ℓ} / (T^{1/2} ‖u₀‖^{deg}_{X^k_1})`.
pub fn ensemble_statistic(
    u0: &Sparse,
    kind: RandomProduct,
    sc: &SmoothingConfig,
) -> Result<(Vec<f64>, f64)> {
    let times = uniform_times(sc.t_final, sc.n_t);
    let fam = RandomFamily::new(u0, kind, &times, sc.ell());
    let xn = u0.x_norm_sq(sc.k, 1.0).sqrt();
    if !xn.is_finite() {
        return Err(Error::InfiniteNorm);
    }
    let ens = EnsembleConfig::new(sc.seed, sc.samples);
    let denom = sc.t_final.sqrt() * xn.powi(kind.degree());
    let stats = (0..sc.samples)
        .into_par_iter()
        .map(|i| {
            let draw = Draw::sample(&ens, i, fam.keys());
            let norms = fam.norms(&draw)?;
            Ok(if denom > 0.0 {
                time_norm(&norms, 2.0, sc.t_final) / denom
            } else {
                0.0
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((stats, fam.capture_defect()))
}

/// Deterministic sums and ensemble statistics for `u0`.
pub fn random_smoothing_sweep(u0: &Sparse, sc: &SmoothingConfig) -> Result<SweepReport> {
    let s = block_sums(u0, sc.k);
    if !s.x_norm.is_finite() {
        return Err(Error::InfiniteNorm);
    }
    let mut rep = SweepReport::new(
        "random_smoothing",
        "block sums against bound-side formulas; ||(z^w)^2||_{L^2_T H^{k+1/2}} / (T^{1/2}||u0||^2_{X^k_1})",
    );
    let x = s.x_norm;
    let entries = [
        ("zz", s.zz, s.zz_bound, x.powi(4)),
        ("zz_star", s.zz_star, s.zz_star_bound, x.powi(2)),
        ("zzz_1", s.zzz_1, s.zzz_1_bound, x.powi(6)),
        ("zzz_2", s.zzz_2, s.zzz_2_bound, x.powi(6)),
    ];
    for (i, (name, lhs, bound, xp)) in entries.iter().enumerate() {
        rep.rows
            .push(Row::new(&[("sum", i as f64)], 1.0, *lhs, *bound));
        rep.constant(&format!("{name}.lhs"), *lhs);
        rep.constant(&format!("{name}.C_bound"), lhs / bound);
        rep.constant(&format!("{name}.C_x"), lhs / xp);
    }
    rep.constant("x_norm", x);
    rep.constant("k", sc.k);
    rep.constant("ell", sc.ell());
    rep.constant("E|X|^2", GAUSSIAN_SECOND_MOMENT);
    let mut kinds = vec![RandomProduct::Square, RandomProduct::Modulus];
    if sc.cubic_ensemble {
        kinds.push(RandomProduct::Cubic);
    }
    let ens = EnsembleConfig::new(sc.seed, sc.samples);
    for kind in kinds {
        let (stats, defect) = ensemble_statistic(u0, kind, sc)?;
        let tag = match kind {
            RandomProduct::Square => "square",
            RandomProduct::Modulus => "modulus",
            RandomProduct::Cubic => "cubic",
        };
        rep.constant(&format!("{tag}.median"), quantile(&stats, 0.5));
        rep.constant(&format!("{tag}.capture_defect"), defect);
        if kind == RandomProduct::Square {
            attach_distribution(&mut rep, &stats, 2.0, &ens);
        }
    }
    rep.finish_check(true);
    Ok(rep)
}

/// Runs [`random_smoothing_sweep`] at `m_max` and `2 m_max` and compares the
/// fitted constants of the quadratic and cubic sums and the ensemble median.
pub fn smoothing_refinement(sc: &SmoothingConfig) -> Result<SweepReport> {
    let coarse = random_smoothing_sweep(&smoothing_data(sc.m_max, sc.k), sc)?;
    let mut fine_cfg = sc.clone();
    fine_cfg.m_max *= 2;
    let fine = random_smoothing_sweep(&smoothing_data(fine_cfg.m_max, sc.k), &fine_cfg)?;
    let mut rep = fine.clone();
    rep.name = "random_smoothing_refinement".into();
    let mut ok = true;
    for key in ["zz.C_bound", "zzz_1.C_bound", "square.median"] {
        let a = coarse.constants[key];
        let b = fine.constants[key];
        let change = (b - a).abs() / a.abs();
        rep.constant(&format!("{key}.coarse"), a);
        rep.constant(&format!("{key}.change"), change);
        if !(change <= 0.10) {
            ok = false;
            rep.notice(format!(
                "{key} moved by {:.2}% under m_max doubling",
                100.0 * change
            ));
        }
    }
    rep.finish_check(ok);
    Ok(rep)
}
