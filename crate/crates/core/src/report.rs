//! Tabulated ratios and verdicts shared by every sweep and ensemble check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stats::{linear_fit, TailFit};

/// Largest tolerated growth of the top-two-scale maximum over the maximum on
/// the lower scales.
pub const STABILITY_TOLERANCE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub params: BTreeMap<String, f64>,
    /// Dyadic scale used by the stability verdict.
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(params: &[(&str, f64)], scale: f64, lhs: f64, rhs: f64) -> Self {
        Row {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            scale,
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_ratio: f64,
    /// Maximum over the two largest scales.
    pub top_max: f64,
    /// Maximum over the remaining scales.
    pub lower_max: f64,
    pub growth: f64,
    /// Slope of log2(max ratio per scale) against log2(scale).
    pub trend_slope: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub statistic: String,
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub quantiles: Vec<Quantile>,
    pub tail_fit: Option<TailFit>,
    pub constants: BTreeMap<String, f64>,
    pub notices: Vec<String>,
}

impl SweepReport {
    pub fn new(name: &str, statistic: &str) -> Self {
        SweepReport {
            name: name.into(),
            statistic: statistic.into(),
            rows: Vec::new(),
            summary: Summary {
                max_ratio: 0.0,
                top_max: 0.0,
                lower_max: 0.0,
                growth: 0.0,
                trend_slope: 0.0,
                verdict: Verdict::Pass,
            },
            quantiles: Vec::new(),
            tail_fit: None,
            constants: BTreeMap::new(),
            notices: Vec::new(),
        }
    }

    pub fn constant(&mut self, key: &str, v: f64) {
        self.constants.insert(key.into(), v);
    }

    pub fn notice(&mut self, s: impl Into<String>) {
        self.notices.push(s.into());
    }

    /// Dyadic-stability verdict over the rows.
    pub fn finish_stability(&mut self) {
        let mut per: BTreeMap<i64, f64> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.scale.log2() * 1024.0).round() as i64;
            let e = per.entry(key).or_insert(0.0);
            *e = e.max(r.ratio);
        }
        let scales: Vec<(f64, f64)> = per.iter().map(|(&k, &v)| (k as f64 / 1024.0, v)).collect();
        let max_ratio = self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let n = scales.len();
        let (top_max, lower_max) = if n >= 3 {
            (
                scales[n - 2..].iter().map(|s| s.1).fold(0.0, f64::max),
                scales[..n - 2].iter().map(|s| s.1).fold(0.0, f64::max),
            )
        } else {
            (max_ratio, max_ratio)
        };
        let growth = if lower_max > 0.0 {
            top_max / lower_max - 1.0
        } else {
            0.0
        };
        let pos: Vec<(f64, f64)> = scales.iter().filter(|s| s.1 > 0.0).copied().collect();
        let trend_slope = if pos.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = pos.iter().map(|&(s, v)| (s, v.log2())).unzip();
            linear_fit(&x, &y).slope
        } else {
            0.0
        };
        let mut verdict = Verdict::from_bool(growth < STABILITY_TOLERANCE && max_ratio.is_finite());
        if n < 3 {
            self.notice("fewer than three dyadic scales; stability verdict is vacuous");
        }
        if self.summary.verdict == Verdict::Fail {
            verdict = Verdict::Fail;
        }
        self.summary = Summary {
            max_ratio,
            top_max,
            lower_max,
            growth,
            trend_slope,
            verdict,
        };
    }

    /// Marks the report failed without touching the ratio summary.
    pub fn fail(&mut self, why: impl Into<String>) {
        self.summary.verdict = Verdict::Fail;
        self.notice(why);
    }

    /// Sets the verdict from an explicit check.
    pub fn finish_check(&mut self, ok: bool) {
        self.summary.max_ratio = self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        if !ok {
            self.summary.verdict = Verdict::Fail;
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.verdict.is_pass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_rule() {
        let mut r = SweepReport::new("t", "x");
        for (s, v) in [(1.0, 1.0), (2.0, 1.2), (4.0, 1.25), (8.0, 1.3)] {
            r.rows.push(Row::new(&[], s, v, 1.0));
        }
        r.finish_stability();
        assert!(r.passed(), "{:?}", r.summary);
        let mut r = SweepReport::new("t", "x");
        for (s, v) in [(1.0, 1.0), (2.0, 1.0), (4.0, 1.5), (8.0, 2.0)] {
            r.rows.push(Row::new(&[], s, v, 1.0));
        }
        r.finish_stability();
        assert!(!r.passed());
    }
}
