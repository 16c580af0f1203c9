//! δ-shifted building blocks and the exact expansion of `(Id − Δ_G)` acting
//! on products of two or three blocks.
//!
//! For a block `u_{I,m}` in packet `A` and `δ = (δ₀, ±)`, the shifted block
//! `u^δ` has Hermite index `m + δ₀` and coefficients `F^δ_{I,m}(η) f_m(η)`:
//!
//! | δ        | `F^δ_{I,m}(η)`                 |
//! |----------|--------------------------------|
//! | `(±1,+)` | `((2m+1)|η|/(4A))^{1/2}`       |
//! | `(±1,−)` | `((2m+1)/(4A))^{1/2} η/√|η|`   |
//! | `(0,+)`  | `(2m+1)|η|/(4A)`               |
//! | `(0,−)`  | `1`                            |
//!
//! Writing `ψ = h_m(√|η₁|x)`, `φ = h_n(√|η₂|x)`, the recurrences
//! `xh_m = √(m/2)h_{m−1} + √((m+1)/2)h_{m+1}` and
//! `h_m' = √(m/2)h_{m−1} − √((m+1)/2)h_{m+1}` turn
//! `(1 − ∂²_x + x²(η₁+η₂)²)(ψφ)` into
//! `[1 + (2m+1)|η₁| + (2n+1)|η₂|]ψφ + 2η₁η₂x²ψφ − 2ψ'φ'`,
//! and every piece is a product of shifted blocks with an explicit
//! coefficient. The coefficients below are exact for any choice of `A, B`
//! used consistently in `F`.

use serde::{Deserialize, Serialize};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{band_exponent, DyadicIndex};
use crate::products::Sparse;
use crate::spectral::SpectralField;
use crate::{cst, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShiftIndex {
    pub delta0: i8,
    pub sign: Sign,
}

impl ShiftIndex {
    pub const fn new(delta0: i8, sign: Sign) -> Self {
        ShiftIndex { delta0, sign }
    }

    pub const IDENTITY: ShiftIndex = ShiftIndex::new(0, Sign::Minus);
    pub const DIAGONAL: ShiftIndex = ShiftIndex::new(0, Sign::Plus);

    /// `F^δ_{I,m}(η)` for a block of packet `A`.
    pub fn multiplier(&self, m: usize, eta: f64, a: f64) -> f64 {
        let w = (2 * m + 1) as f64;
        match (self.delta0, self.sign) {
            (0, Sign::Minus) => 1.0,
            (0, Sign::Plus) => w * eta.abs() / (4.0 * a),
            (_, Sign::Plus) => (w * eta.abs() / (4.0 * a)).sqrt(),
            (_, Sign::Minus) => (w / (4.0 * a)).sqrt() * eta.signum() * eta.abs().sqrt(),
        }
    }
}

impl std::fmt::Display for ShiftIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "({},{})", self.delta0, s)
    }
}

/// `D_1 = {−1, 0, 1} × {+, −}`.
pub const D1: [ShiftIndex; 6] = [
    ShiftIndex::new(-1, Sign::Plus),
    ShiftIndex::new(-1, Sign::Minus),
    ShiftIndex::new(0, Sign::Plus),
    ShiftIndex::new(0, Sign::Minus),
    ShiftIndex::new(1, Sign::Plus),
    ShiftIndex::new(1, Sign::Minus),
];

/// `u^δ` for a block `u = u_{I,m}`. A zero block maps to zero; `m = 0` with
/// `δ₀ = −1` gives the zero field.
pub fn shift<T: Real>(block: &SpectralField<T>, delta: ShiftIndex) -> Result<SpectralField<T>> {
    if block.is_zero() {
        return Ok(block.clone());
    }
    let d = block.unimodal().ok_or(Error::NotUnimodal)?;
    let mut out = SpectralField::zeros(&block.grid);
    if d.m == 0 && delta.delta0 < 0 {
        return Ok(out);
    }
    let target = (d.m as i64 + delta.delta0 as i64) as usize;
    if target > block.spec().m_max {
        return Err(Error::ModeOverflow(target));
    }
    let a = d.packet();
    for q in (1..=block.spec().eta_count as i64).flat_map(|q| [-q, q]) {
        let f = block.get(d.m, q);
        if f.re == T::zero() && f.im == T::zero() {
            continue;
        }
        let mult = delta.multiplier(d.m, block.spec().eta(q), a);
        out.set(target, q, f * cst::<T>(mult));
    }
    Ok(out)
}

/// Blockwise shift of a general field, `Σ_{(I,m)} (u_{I,m})^δ`.
pub fn shift_field<T: Real>(u: &SpectralField<T>, delta: ShiftIndex) -> Result<SpectralField<T>> {
    let mut out = SpectralField::zeros(&u.grid);
    for d in u.blocks() {
        let s = shift(&u.block(d)?, delta)?;
        out.axpy(Complex::new(T::one(), T::zero()), &s)?;
    }
    Ok(out)
}

/// Blockwise `u^δ` of a sparse field, each node shifted with the packet of
/// its own block.
pub fn shift_sparse(u: &Sparse, delta: ShiftIndex) -> Sparse {
    let mut out = Sparse::new(u.eta_step);
    for n in &u.nodes {
        if n.m == 0 && delta.delta0 < 0 {
            continue;
        }
        let eta = u.eta(n.q);
        let a = DyadicIndex::new(band_exponent(eta), n.m).packet();
        let target = (n.m as i64 + delta.delta0 as i64) as usize;
        out.push(n.q, target, n.c * delta.multiplier(n.m, eta, a));
    }
    out
}

/// One term `coeff · Π_i u_i^{δ_i}` of the product expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTerm {
    pub coeff: f64,
    pub shifts: Vec<ShiftIndex>,
}

/// Data of one factor: Hermite index and packet `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub m: usize,
    pub a: f64,
}

fn sigma(m: usize, d: i8) -> f64 {
    if d < 0 {
        (m as f64 / 2.0).sqrt()
    } else {
        ((m + 1) as f64 / 2.0).sqrt()
    }
}

fn tau(m: usize, d: i8) -> f64 {
    if d < 0 {
        (m as f64 / 2.0).sqrt()
    } else {
        -((m + 1) as f64 / 2.0).sqrt()
    }
}

/// The eight cross terms `2η₁η₂x²ψφ − 2ψ'φ'` for one pair of factors.
fn pair_terms(f: Factor, g: Factor) -> Vec<(ShiftIndex, ShiftIndex, f64)> {
    let c = 8.0 * (f.a * g.a).sqrt() / (((2 * f.m + 1) * (2 * g.m + 1)) as f64).sqrt();
    let mut out = Vec::with_capacity(8);
    for d1 in [-1i8, 1] {
        for d2 in [-1i8, 1] {
            out.push((
                ShiftIndex::new(d1, Sign::Minus),
                ShiftIndex::new(d2, Sign::Minus),
                c * sigma(f.m, d1) * sigma(g.m, d2),
            ));
            out.push((
                ShiftIndex::new(d1, Sign::Plus),
                ShiftIndex::new(d2, Sign::Plus),
                -c * tau(f.m, d1) * tau(g.m, d2),
            ));
        }
    }
    out
}

/// Exact expansion of `(Id − Δ_G)(u_{I,m} v_{J,n})`: 11 terms.
pub fn expand_two(u: Factor, v: Factor) -> Vec<ShiftTerm> {
    let id = ShiftIndex::IDENTITY;
    let diag = ShiftIndex::DIAGONAL;
    let mut out = vec![
        ShiftTerm {
            coeff: 1.0,
            shifts: vec![id, id],
        },
        ShiftTerm {
            coeff: 4.0 * u.a,
            shifts: vec![diag, id],
        },
        ShiftTerm {
            coeff: 4.0 * v.a,
            shifts: vec![id, diag],
        },
    ];
    for (s1, s2, c) in pair_terms(u, v) {
        out.push(ShiftTerm {
            coeff: c,
            shifts: vec![s1, s2],
        });
    }
    out
}

/// Exact expansion of `(Id − Δ_G)(u₁u₂u₃)` for three blocks: 28 terms, the
/// set `D_3` together with its coefficients.
pub fn expand_three(f: [Factor; 3]) -> Vec<ShiftTerm> {
    let id = ShiftIndex::IDENTITY;
    let diag = ShiftIndex::DIAGONAL;
    let mut out = vec![ShiftTerm {
        coeff: 1.0,
        shifts: vec![id, id, id],
    }];
    for i in 0..3 {
        let mut s = vec![id; 3];
        s[i] = diag;
        out.push(ShiftTerm {
            coeff: 4.0 * f[i].a,
            shifts: s,
        });
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (s1, s2, c) in pair_terms(f[i], f[j]) {
            let mut s = vec![id; 3];
            s[i] = s1;
            s[j] = s2;
            out.push(ShiftTerm {
                coeff: c,
                shifts: s,
            });
        }
    }
    out
}

/// The shift triples of the three-factor expansion.
pub fn d3() -> Vec<[ShiftIndex; 3]> {
    let f = Factor { m: 3, a: 8.0 };
    let mut out: Vec<[ShiftIndex; 3]> = expand_three([f, f, f])
        .into_iter()
        .map(|t| [t.shifts[0], t.shifts[1], t.shifts[2]])
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Coefficient of a given shift tuple in an expansion, zero when absent.
pub fn coefficient(terms: &[ShiftTerm], shifts: &[ShiftIndex]) -> f64 {
    terms
        .iter()
        .filter(|t| t.shifts == shifts)
        .map(|t| t.coeff)
        .sum()
}

/// Factor data of a unimodal block.
pub fn factor_of<T: Real>(block: &SpectralField<T>) -> Result<Factor> {
    let d = block.unimodal().ok_or(Error::NotUnimodal)?;
    Ok(Factor {
        m: d.m,
        a: d.packet(),
    })
}

/// Pointwise product of several fields, formed once in physical space.
pub fn product<T: Real>(factors: &[&SpectralField<T>]) -> Result<SpectralField<T>> {
    let first = factors
        .first()
        .ok_or_else(|| Error::Config("empty product".into()))?;
    let mut p = first.synthesize();
    for f in &factors[1..] {
        p = p.mul(&f.synthesize())?;
    }
    Ok(p.analyze())
}

impl ShiftTerm {
    /// `coeff · Π_i shift(u_i, δ_i)`.
    pub fn apply<T: Real>(&self, blocks: &[&SpectralField<T>]) -> Result<SpectralField<T>> {
        if blocks.len() != self.shifts.len() {
            return Err(Error::Config("shift arity mismatch".into()));
        }
        let shifted = blocks
            .iter()
            .zip(&self.shifts)
            .map(|(b, &d)| shift(b, d))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&SpectralField<T>> = shifted.iter().collect();
        Ok(product(&refs)?.scale_re(cst(self.coeff)))
    }
}

/// Right-hand side of the expansion for the given blocks.
pub fn expand_apply<T: Real>(blocks: &[&SpectralField<T>]) -> Result<SpectralField<T>> {
    let factors = blocks
        .iter()
        .map(|b| factor_of(b))
        .collect::<Result<Vec<_>>>()?;
    let terms = match factors.as_slice() {
        [u, v] => expand_two(*u, *v),
        [a, b, c] => expand_three([*a, *b, *c]),
        _ => return Err(Error::Config("expansion needs two or three factors".into())),
    };
    let mut out = SpectralField::zeros(&blocks[0].grid);
    for t in terms.iter().filter(|t| t.coeff != 0.0) {
        out.axpy(Complex::new(T::one(), T::zero()), &t.apply(blocks)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_factor_structure() {
        let t = expand_two(Factor { m: 3, a: 8.0 }, Factor { m: 5, a: 16.0 });
        let id = ShiftIndex::IDENTITY;
        let diag = ShiftIndex::DIAGONAL;
        assert_eq!(coefficient(&t, &[id, id]), 1.0);
        assert_eq!(coefficient(&t, &[diag, diag]), 0.0);
        assert_eq!(coefficient(&t, &[diag, id]), 32.0);
        assert_eq!(coefficient(&t, &[id, diag]), 64.0);
        for term in &t {
            assert!(term.coeff.abs() <= 4.0 * 16.0);
        }
    }

    #[test]
    fn three_factor_count() {
        let t = expand_three([
            Factor { m: 0, a: 1.0 },
            Factor { m: 2, a: 4.0 },
            Factor { m: 1, a: 2.0 },
        ]);
        assert_eq!(t.len(), 28);
    }

    #[test]
    fn multipliers() {
        let s = ShiftIndex::new(1, Sign::Minus);
        let v = s.multiplier(2, -3.0, 16.0);
        assert!((v + (5.0f64 / 64.0).sqrt() * 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(ShiftIndex::DIAGONAL.multiplier(1, 4.0, 3.0), 1.0);
    }
}
