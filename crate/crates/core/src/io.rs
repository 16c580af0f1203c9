//! GRSF1 field snapshots and CSV/JSON emitters.
//!
//! Snapshot layout, little-endian throughout: the 5 bytes `GRSF1`, a `u32`
//! header length, a JSON [`SnapshotHeader`], then `(re, im)` `f64` pairs
//! for every stored coefficient, `m`-major with the column order of
//! [`GridSpec::col`].

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::report::SweepReport;
use crate::spectral::{Grid, SpectralField};
use crate::{cst, to64, Complex, Real};

pub const MAGIC: &[u8; 5] = b"GRSF1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub eta_step: f64,
    pub eta_count: usize,
    pub m_max: usize,
    pub x_range: f64,
    pub x_count: usize,
}

impl SnapshotHeader {
    pub fn of(spec: &GridSpec) -> Self {
        SnapshotHeader {
            eta_step: spec.eta_step,
            eta_count: spec.eta_count,
            m_max: spec.m_max,
            x_range: spec.x_range,
            x_count: spec.x_count,
        }
    }

    pub fn len(&self) -> usize {
        (self.m_max + 1) * 2 * self.eta_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `spec` stores coefficients in the same layout.
    pub fn matches(&self, spec: &GridSpec) -> bool {
        self.eta_step == spec.eta_step
            && self.eta_count == spec.eta_count
            && self.m_max == spec.m_max
            && self.x_range == spec.x_range
            && self.x_count == spec.x_count
    }
}

pub struct Snapshot {
    pub header: SnapshotHeader,
    pub coeffs: Vec<Complex64>,
}

impl Snapshot {
    /// Coefficients on `grid`, which must share the snapshot's layout.
    pub fn into_field<T: Real>(self, grid: &Arc<Grid<T>>) -> Result<SpectralField<T>> {
        if !self.header.matches(&grid.spec) {
            return Err(Error::GridMismatch);
        }
        let mut f = SpectralField::zeros(grid);
        f.coeffs = self
            .coeffs
            .iter()
            .map(|c| Complex::new(cst(c.re), cst(c.im)))
            .collect();
        Ok(f)
    }
}

pub fn write_snapshot<T: Real, W: Write>(w: &mut W, field: &SpectralField<T>) -> Result<()> {
    let header = serde_json::to_vec(&SnapshotHeader::of(field.spec()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(16 * field.coeffs.len());
    for c in &field.coeffs {
        buf.extend_from_slice(&to64(c.re).to_le_bytes());
        buf.extend_from_slice(&to64(c.im).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Snapshot> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let header: SnapshotHeader = serde_json::from_slice(&header)?;
    let n = header.len();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 16 * n {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            16 * n,
            payload.len()
        )));
    }
    let word =
        |i: usize| f64::from_le_bytes(payload[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let coeffs = (0..n)
        .map(|i| Complex64::new(word(2 * i), word(2 * i + 1)))
        .collect();
    Ok(Snapshot { header, coeffs })
}

/// Pretty JSON with a trailing newline. `serde_json` prints every `f64` in
/// its shortest round-tripping decimal form.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Rows of a report as CSV: `report, <params…>, scale, lhs, rhs, ratio`.
pub fn report_csv(reports: &[SweepReport]) -> Result<String> {
    let mut keys: Vec<String> = reports
        .iter()
        .flat_map(|r| r.rows.iter().flat_map(|row| row.params.keys().cloned()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["report".to_string()];
    head.extend(keys.iter().cloned());
    head.extend(["scale", "lhs", "rhs", "ratio"].map(String::from));
    w.write_record(&head).map_err(csv_err)?;
    for r in reports {
        for row in &r.rows {
            let mut rec = vec![r.name.clone()];
            rec.extend(
                keys.iter()
                    .map(|k| row.params.get(k).map(|v| v.to_string()).unwrap_or_default()),
            );
            rec.extend([row.scale, row.lhs, row.rhs, row.ratio].map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    table_string(w)
}

/// CSV of a plain numeric table.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    table_string(w)
}

fn table_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Dealias;

    #[test]
    fn snapshot_roundtrip() {
        let grid = Grid::<f64>::new(GridSpec::new(0.5, 3, 2, Dealias::THREE_HALVES)).unwrap();
        let f = SpectralField::from_fn(&grid, |m, q| Complex::new(m as f64 + 0.25, q as f64 / 3.0));
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f).unwrap();
        assert_eq!(&buf[..5], MAGIC);
        let g = read_snapshot(&mut buf.as_slice())
            .unwrap()
            .into_field(&grid)
            .unwrap();
        assert_eq!(f.coeffs, g.coeffs);
        buf.pop();
        assert!(read_snapshot(&mut buf.as_slice()).is_err());
    }
}
