//! Discretisation contract: the η lattice, the x quadrature grid, the Hermite
//! truncation and the zero-padding used for products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{lambda, QuadGrid};

/// Zero-padding ratio of the y spectrum, `num/den ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dealias {
    pub num: u32,
    pub den: u32,
}

impl Dealias {
    /// Alias-free for quadratic products.
    pub const THREE_HALVES: Dealias = Dealias { num: 3, den: 2 };
    /// Alias-free for cubic products.
    pub const TWO: Dealias = Dealias { num: 2, den: 1 };
    pub const NONE: Dealias = Dealias { num: 1, den: 1 };

    pub fn ratio(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lattice spacing Δη; y has period `2π/Δη`.
    pub eta_step: f64,
    /// Q: nodes `η_q = qΔη`, `q ∈ [−Q, Q] \ {0}`.
    pub eta_count: usize,
    pub m_max: usize,
    /// x quadrature on `[−x_range, x_range]`.
    pub x_range: f64,
    pub x_count: usize,
    pub dealias: Dealias,
}

impl GridSpec {
    /// Grid resolving products of up to four Hermite profiles at every
    /// lattice node, padded by `dealias`.
    pub fn new(eta_step: f64, eta_count: usize, m_max: usize, dealias: Dealias) -> Self {
        Self::with_factors(eta_step, eta_count, m_max, dealias, 4)
    }

    /// `factors` is the number of Hermite profiles whose product the x grid
    /// integrates exactly.
    pub fn with_factors(
        eta_step: f64,
        eta_count: usize,
        m_max: usize,
        dealias: Dealias,
        factors: usize,
    ) -> Self {
        let lam = lambda(m_max);
        let x_range = (2.0 * lam + 4.0) / eta_step.sqrt();
        let eta_max = eta_count as f64 * eta_step;
        let h = std::f64::consts::PI / (factors as f64 / 2.0 * (lam + 4.0) * eta_max.sqrt());
        let h = h.min(0.5 / eta_max.sqrt());
        let x_count = (2.0 * x_range / h).ceil() as usize + 1;
        GridSpec {
            eta_step,
            eta_count,
            m_max,
            x_range,
            x_count,
            dealias,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_step > 0.0) || self.eta_count == 0 {
            return Err(Error::Config(
                "eta lattice must be non-empty with positive step".into(),
            ));
        }
        if self.dealias.den == 0 || self.dealias.num < self.dealias.den {
            return Err(Error::Config("dealias factor must be >= 1".into()));
        }
        if self.x_count < 3 {
            return Err(Error::Config("x grid needs at least 3 nodes".into()));
        }
        let need = 2.0 * lambda(self.m_max) / self.eta_step.sqrt() + 1.0;
        if self.x_range < need {
            return Err(Error::Unresolved {
                m: self.m_max,
                reason: format!("x range {} < 2λ/√Δη + 1 = {}", self.x_range, need),
            });
        }
        Ok(())
    }

    pub fn quad(&self) -> QuadGrid {
        QuadGrid::new(self.x_range, self.x_count)
    }

    pub fn eta(&self, q: i64) -> f64 {
        q as f64 * self.eta_step
    }

    pub fn eta_max(&self) -> f64 {
        self.eta(self.eta_count as i64)
    }

    /// Number of stored columns, `2Q`.
    pub fn n_cols(&self) -> usize {
        2 * self.eta_count
    }

    pub fn n_modes(&self) -> usize {
        self.m_max + 1
    }

    /// Column index of lattice node `q` (`q ≠ 0`).
    pub fn col(&self, q: i64) -> usize {
        let big_q = self.eta_count as i64;
        debug_assert!(q != 0 && q.abs() <= big_q);
        if q < 0 {
            (q + big_q) as usize
        } else {
            (q + big_q - 1) as usize
        }
    }

    pub fn q_of_col(&self, c: usize) -> i64 {
        let big_q = self.eta_count as i64;
        let c = c as i64;
        if c < big_q {
            c - big_q
        } else {
            c - big_q + 1
        }
    }

    /// y samples per period: smallest 2,3,5-smooth even integer at least
    /// `2⌈dealias·Q⌉ + 2`.
    pub fn y_count(&self) -> usize {
        let min = 2 * (self.dealias.ratio() * self.eta_count as f64).ceil() as usize + 2;
        let mut n = min + (min % 2);
        while !smooth235(n) {
            n += 2;
        }
        n
    }

    pub fn y_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.eta_step
    }

    /// Smallest and largest band exponents `j` (`I = 2^j`) touched by the lattice.
    pub fn band_range(&self) -> (i32, i32) {
        (band_exponent(self.eta_step), band_exponent(self.eta_max()))
    }
}

fn smooth235(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

/// `floor(log2 v)` for `v > 0`, exact at powers of two.
pub fn floor_log2(v: f64) -> i32 {
    let mut a = v.log2().floor() as i32;
    while 2f64.powi(a) > v {
        a -= 1;
    }
    while 2f64.powi(a + 1) <= v {
        a += 1;
    }
    a
}

/// Band exponent of a frequency: `I(η) = 2^{floor(log2|η|)}`.
pub fn band_exponent(eta: f64) -> i32 {
    floor_log2(eta.abs())
}

/// Packet exponent: `A = 2^a` with `1 + (2m+1)|η| ∈ [A, 2A)`.
pub fn packet_exponent(weight: f64) -> i32 {
    floor_log2(weight)
}

/// A building block label `(I, m)` with `I = 2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub j: i32,
    pub m: usize,
}

impl DyadicIndex {
    pub fn new(j: i32, m: usize) -> Self {
        DyadicIndex { j, m }
    }

    pub fn band(&self) -> f64 {
        2f64.powi(self.j)
    }

    /// `1 + (2m+1) I`.
    pub fn weight(&self) -> f64 {
        1.0 + (2 * self.m + 1) as f64 * self.band()
    }

    /// `A = 2^a`, the dyadic packet containing the block.
    pub fn packet(&self) -> f64 {
        2f64.powi(packet_exponent(self.weight()))
    }

    /// `⟨I⟩ = √(1 + I²)`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.band() * self.band()).sqrt()
    }

    pub fn contains(&self, eta: f64) -> bool {
        band_exponent(eta) == self.j
    }
}
