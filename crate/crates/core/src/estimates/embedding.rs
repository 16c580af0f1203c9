//! Sobolev embeddings for the Grushin scaling: critical `H^k ↪ L^p`, the
//! `√p` growth at the `H^{3/2}` endpoint, and the logarithmic refinement
//! of the `L^∞` bound.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{Dealias, GridSpec};
use crate::hermite::hermite_eval;
use crate::products::Sparse;
use crate::report::{Row, SweepReport};
use crate::spectral::{Grid, SpectralField};
use crate::stats::linear_fit;

use super::{linf_bound, SweepConfig};

/// Hermite cap of the packet fields; keeping `m` bounded makes the packet
/// family invariant under the Grushin dilation.
const PACKET_M_CAP: usize = 7;

/// Lattice nodes per packet scale in the grid sweeps.
const NODES_PER_SCALE: usize = 128;

/// Exponents `p` of the endpoint growth law.
pub const GROWTH_EXPONENTS: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

/// `P_A δ₀` restricted to `m ≤ m_cap`: coefficients `|η|^{1/2} h_m(0)` on
/// the nodes with `1 + (2m+1)|η| ∈ [A, 2A)`.
pub fn delta_packet(a: f64, m_cap: usize, eta_step: f64) -> Sparse {
    let mut out = Sparse::new(eta_step);
    for m in (0..=m_cap).step_by(2) {
        let h0 = hermite_eval(m, 0.0f64);
        let w = (2 * m + 1) as f64;
        let lo = ((a - 1.0) / w / eta_step).ceil().max(1.0) as i64;
        let hi = ((2.0 * a - 1.0) / w / eta_step).ceil() as i64;
        for q in lo..hi {
            let eta = q as f64 * eta_step;
            let c = Complex64::new(eta.sqrt() * h0, 0.0);
            out.push(q, m, c);
            out.push(-q, m, c);
        }
    }
    out
}

/// `Σ_{a=1}^{n} a^{−1/2} δ_{2^a} / ‖δ_{2^a}‖_{H^{3/2}}`: bounded `H^{3/2}`
/// growth `(ln n)^{1/2}` against a sup norm of order `n^{1/2}`.
pub fn log_packet_field(n: u32, eta_step: f64) -> Sparse {
    let mut out = Sparse::new(eta_step);
    for a in 1..=n {
        let d = delta_packet(2f64.powi(a as i32), PACKET_M_CAP, eta_step);
        let norm = d.sobolev_norm_sq(1.5).sqrt();
        if norm > 0.0 {
            out.nodes.extend(
                d.scale(Complex64::new((a as f64).powf(-0.5) / norm, 0.0))
                    .nodes,
            );
        }
    }
    out
}

/// `u(0, 0)`, a lower bound for `‖u‖_{L^∞}`.
fn value_at_origin(f: &Sparse) -> f64 {
    let s: Complex64 = f
        .nodes
        .iter()
        .map(|n| n.c * hermite_eval(n.m, 0.0f64))
        .sum();
    s.norm() * f.eta_step / (2.0 * std::f64::consts::PI).sqrt()
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

fn to_grid(f: &Sparse, grid: &std::sync::Arc<Grid<f64>>) -> SpectralField<f64> {
    let map: HashMap<(usize, i64), Complex64> = f.nodes.iter().map(|n| ((n.m, n.q), n.c)).collect();
    SpectralField::from_fn(grid, |m, q| map.get(&(m, q)).copied().unwrap_or_default())
}

/// Grid whose lattice scales with `A`, so that the packet at `A` sits on
/// the same relative nodes at every scale.
fn packet_grid(a: f64, x_refine: usize) -> Result<std::sync::Arc<Grid<f64>>> {
    let eta_step = a / NODES_PER_SCALE as f64;
    let mut spec =
        GridSpec::with_factors(eta_step, 2 * NODES_PER_SCALE, PACKET_M_CAP, Dealias::TWO, 4);
    spec.x_count = (spec.x_count - 1) * x_refine + 1;
    Grid::new(spec)
}

/// `‖u‖_{L^p}` for each `p` together with the `H^k` norm at `k = 3(1/2 − 1/p)`.
fn critical_pairs(f: &SpectralField<f64>, ps: &[f64]) -> Vec<(f64, f64)> {
    let phys = f.synthesize();
    ps.iter()
        .map(|&p| (phys.lp_norm(p), f.sobolev_norm(3.0 * (0.5 - 1.0 / p))))
        .collect()
}

/// `‖u‖_{L^p}` of `u = (ln r₀/ρ)^{1/2}_+`, `ρ = (x⁴ + y²)^{1/4}`, with `r₀`
/// fixed by `|{ρ < r₀}| = 1`: a field on the borderline of `H^{3/2}`.
/// Homogeneity (`|{ρ < r}| ∝ r³`) reduces the integral to
/// `∫_0^∞ s^{p/2} 3e^{−3s} ds`.
pub fn log_field_lp_norm(p: f64) -> f64 {
    let s_max = 40.0 + 2.0 * p;
    let m = 200_000;
    let h = s_max / m as f64;
    let mut radial = 0.0;
    for i in 1..m {
        let s: f64 = i as f64 * h;
        radial += (0.5 * p * s.ln() - 3.0 * s).exp();
    }
    (3.0 * h * radial).powf(1.0 / p)
}

pub fn embedding_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let mut rep = SweepReport::new(
        "embedding",
        "||u||_{L^p} / ||u||_{H^k} at 1/p = 1/2 - k/3 on packet fields; sqrt(p) growth; log-refined sup bound",
    );
    let ps = [4.0, 6.0, 8.0];
    let a_exps: Vec<i32> = (4..=8).collect();
    let cells: Vec<(i32, Vec<(f64, f64)>, f64)> = a_exps
        .par_iter()
        .map(|&e| {
            let a = 2f64.powi(e);
            let grid = packet_grid(a, 1)?;
            let d = to_grid(&delta_packet(a, PACKET_M_CAP, grid.spec.eta_step), &grid);
            let pairs = critical_pairs(&d, &ps);
            // subcritical endpoint on random-phase packets
            let mut rng = cfg.rng(e as u64);
            let r = SpectralField::from_fn(&grid, |m, q| {
                let w = 1.0 + (2 * m + 1) as f64 * grid.spec.eta(q).abs();
                if m <= PACKET_M_CAP && w >= a && w < 2.0 * a {
                    Complex64::from_polar(1.0, rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
                } else {
                    Complex64::default()
                }
            });
            let sub = ratio(r.synthesize().lp_norm(f64::INFINITY), r.sobolev_norm(1.6));
            Ok((e, pairs, sub))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sub_max: f64 = 0.0;
    for (e, pairs, sub) in &cells {
        let a = 2f64.powi(*e);
        for (&p, &(lp, hk)) in ps.iter().zip(pairs) {
            if hk > 0.0 {
                rep.rows.push(Row::new(&[("p", p), ("A", a)], a, lp, hk));
            }
        }
        sub_max = sub_max.max(*sub);
    }
    rep.constant("subcritical_linf_over_h1.6_max", sub_max);

    // one refinement of the x quadrature at the top scale
    let top = 2f64.powi(*a_exps.last().unwrap());
    let fine = packet_grid(top, 2)?;
    let fine_pairs = critical_pairs(
        &to_grid(&delta_packet(top, PACKET_M_CAP, fine.spec.eta_step), &fine),
        &ps,
    );
    let coarse_pairs = &cells.last().unwrap().1;
    let refine = coarse_pairs
        .iter()
        .zip(&fine_pairs)
        .map(|(c, f)| ((f.0 - c.0) / f.0).abs())
        .fold(0.0, f64::max);
    rep.constant("lp_refinement_change", refine);

    // endpoint growth in p
    let norms: Vec<f64> = GROWTH_EXPONENTS
        .iter()
        .map(|&p| log_field_lp_norm(p))
        .collect();
    let fit = linear_fit(
        &GROWTH_EXPONENTS.iter().map(|p| p.ln()).collect::<Vec<_>>(),
        &norms.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    );
    for (&p, &v) in GROWTH_EXPONENTS.iter().zip(&norms) {
        rep.constant(&format!("log_field_lp.p{p}"), v);
    }
    rep.constant("sqrt_p.exponent", fit.slope);

    // logarithmic refinement of the sup bound
    let mut bg = Vec::new();
    for n in (4..=16).step_by(2) {
        let u = log_packet_field(n, 0.25);
        let h32 = u.sobolev_norm_sq(1.5).sqrt();
        let h2 = u.sobolev_norm_sq(2.0).sqrt();
        let sup = linf_bound(&u);
        let plain = ratio(sup, h32);
        let refined = ratio(sup, h32 * (1.0 + ratio(h2, h32)).ln().sqrt());
        rep.constant(&format!("bg.n{n}.plain"), plain);
        rep.constant(&format!("bg.n{n}.refined"), refined);
        rep.constant(&format!("bg.n{n}.origin"), ratio(value_at_origin(&u), h32));
        bg.push(refined);
    }
    let (last, earlier) = bg.split_last().unwrap();
    let bg_ok = *last <= 1.1 * earlier.iter().copied().fold(0.0, f64::max);

    rep.finish_stability();
    let mut ok = rep.passed();
    if !(refine < super::REFINEMENT_TOLERANCE) {
        rep.notice(format!(
            "L^p quadrature moved by {:.3}% under x refinement",
            100.0 * refine
        ));
        ok = false;
    }
    if !(0.35..=0.65).contains(&fit.slope) {
        rep.notice(format!("fitted exponent of p is {:.3}", fit.slope));
        ok = false;
    }
    if !bg_ok {
        rep.notice("log-refined sup ratio grows with the number of packets");
        ok = false;
    }
    if !sub_max.is_finite() {
        ok = false;
    }
    rep.finish_check(ok);
    Ok(rep)
}
