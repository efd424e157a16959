//! Deterministic synthetic multi-manifold datasets plus CSV ingestion.
//!
//! All generators draw from [`SplitMix64`], so outputs are bit-identical
//! across runs and platforms for a given seed.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood's published
/// constants). Golden outputs from seed 0:
/// `0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// An N×D point set with optional ground-truth cluster labels in `1..=M`.
/// Labels are evaluation metadata; embedding algorithms never read them.
#[derive(Debug, Clone)]
pub struct PointSet {
    coords: Matrix,
    labels: Option<Vec<usize>>,
}

impl PointSet {
    pub fn new(coords: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if !coords.all_finite() {
            return Err(Error::InvalidParam(
                "point coordinates must be finite".into(),
            ));
        }
        if let Some(l) = &labels {
            if l.len() != coords.rows() {
                return Err(Error::ShapeMismatch(format!(
                    "{} labels for {} points",
                    l.len(),
                    coords.rows()
                )));
            }
            let max = *l.iter().max().unwrap_or(&0);
            if l.contains(&0) || (1..=max).any(|c| !l.contains(&c)) {
                return Err(Error::InvalidParam(
                    "labels must cover 1..=M without gaps".into(),
                ));
            }
        }
        Ok(PointSet { coords, labels })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.rows() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.cols()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.coords.row(i)
    }

    /// Rows restricted to the given indices.
    pub fn subset(&self, indices: &[usize]) -> Matrix {
        assert!(!indices.is_empty());
        let mut m = Matrix::zeros(indices.len(), self.dim());
        for (r, &i) in indices.iter().enumerate() {
            m.row_mut(r).copy_from_slice(self.coords.row(i));
        }
        m
    }
}

/// Two rectangular strips on the spiral `(t cos t, z, t sin t)` with
/// `t ∈ [π/6, π/2)`; the halves take `z ∈ [1,10)` and `z ∈ [16,25)`.
pub fn gen_two_strips(n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!(
            "two-strips needs a positive even point count, got {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let half = n / 2;
    let mut coords = Matrix::zeros(n, 3);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = (std::f64::consts::PI / 6.0) * (1.0 + 2.0 * rng.next_f64());
        let z = if i < half {
            rng.uniform(1.0, 10.0)
        } else {
            rng.uniform(16.0, 25.0)
        };
        coords.set(i, 0, t * t.cos());
        coords.set(i, 1, z);
        coords.set(i, 2, t * t.sin());
        labels.push(if i < half { 1 } else { 2 });
    }
    PointSet::new(coords, Some(labels))
}

/// A strip and a disc-like band on the same spiral: angular parameter in
/// `[11π/12, 14π/12) ∪ [16π/12, 19π/12)`, `z ∈ [1, 25)` throughout.
pub fn gen_strip_and_disc(n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!(
            "strip-disc needs a positive even point count, got {n}"
        )));
    }
    let pi = std::f64::consts::PI;
    let mut rng = SplitMix64::new(seed);
    let half = n / 2;
    let mut coords = Matrix::zeros(n, 3);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i < half {
            rng.uniform(pi * 11.0 / 12.0, pi * 14.0 / 12.0)
        } else {
            rng.uniform(pi * 16.0 / 12.0, pi * 19.0 / 12.0)
        };
        let z = rng.uniform(1.0, 25.0);
        coords.set(i, 0, t * t.cos());
        coords.set(i, 1, z);
        coords.set(i, 2, t * t.sin());
        labels.push(if i < half { 1 } else { 2 });
    }
    PointSet::new(coords, Some(labels))
}

/// Three rectangular regions on the Swiss-roll spiral: two short bands with
/// heights in `[−1, 3)` and one long band with heights in `[6, 10)`.
pub fn gen_three_strips(n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(Error::InvalidParam(format!(
            "three-strips needs a positive point count divisible by 4, got {n}"
        )));
    }
    let pi = std::f64::consts::PI;
    let mut rng = SplitMix64::new(seed);
    let quarter = n / 4;
    let mut coords = Matrix::zeros(n, 3);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (t, z, label) = if i < quarter {
            (
                rng.uniform(pi * 5.0 / 6.0, pi * 16.0 / 12.0),
                rng.uniform(-1.0, 3.0),
                1,
            )
        } else if i < 2 * quarter {
            (
                rng.uniform(pi * 18.0 / 12.0, pi * 2.0),
                rng.uniform(-1.0, 3.0),
                2,
            )
        } else {
            (
                (5.0 * pi / 6.0) * (1.0 + 7.0 / 5.0 * rng.next_f64()),
                rng.uniform(6.0, 10.0),
                3,
            )
        };
        coords.set(i, 0, t * t.cos());
        coords.set(i, 1, z);
        coords.set(i, 2, t * t.sin());
        labels.push(label);
    }
    PointSet::new(coords, Some(labels))
}

/// Writes a point set or embedding as CSV: a `# dim=D labels=0|1` header,
/// then one comma-separated row per point at 17 significant digits, the
/// label (when present) as a final integer column.
pub fn save_csv(path: &Path, coords: &Matrix, labels: Option<&[usize]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != coords.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} rows",
                l.len(),
                coords.rows()
            )));
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# dim={} labels={}",
        coords.cols(),
        if labels.is_some() { 1 } else { 0 }
    );
    for i in 0..coords.rows() {
        for j in 0..coords.cols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", coords.get(i, j));
        }
        if let Some(l) = labels {
            let _ = write!(out, ",{}", l[i]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a numeric CSV written by [`save_csv`] or any plain numeric CSV
/// (one point per row, no header).
pub fn load_csv(path: &Path) -> Result<PointSet> {
    let text = std::fs::read_to_string(path)?;
    let mut dim_hint: Option<usize> = None;
    let mut has_labels = false;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_1 = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            for token in trimmed.trim_start_matches('#').split_whitespace() {
                if let Some(v) = token.strip_prefix("dim=") {
                    dim_hint = Some(v.parse().map_err(|_| Error::Csv {
                        line: line_1,
                        msg: format!("bad dim value '{v}'"),
                    })?);
                } else if let Some(v) = token.strip_prefix("labels=") {
                    has_labels = v == "1";
                }
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        let ncols = fields.len();
        let dim = match dim_hint {
            Some(d) => d,
            None => ncols, // no header: every column is a coordinate
        };
        let expected = dim + usize::from(has_labels);
        if ncols != expected {
            return Err(Error::Csv {
                line: line_1,
                msg: format!("expected {expected} fields, found {ncols}"),
            });
        }
        if let Some(first) = rows.first() {
            if first.len() != dim {
                return Err(Error::Csv {
                    line: line_1,
                    msg: format!("ragged row: expected {} fields", first.len()),
                });
            }
        }
        let mut row = Vec::with_capacity(dim);
        for f in &fields[..dim] {
            let v: f64 = f.trim().parse().map_err(|_| Error::Csv {
                line: line_1,
                msg: format!("non-numeric field '{f}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line: line_1,
                    msg: format!("non-finite value '{f}'"),
                });
            }
            row.push(v);
        }
        if dim_hint.is_none() {
            dim_hint = Some(dim);
        }
        if has_labels {
            let f = fields[dim].trim();
            let l: usize = f.parse().map_err(|_| Error::Csv {
                line: line_1,
                msg: format!("non-integer label '{f}'"),
            })?;
            labels.push(l);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Csv {
            line: 0,
            msg: "empty file".into(),
        });
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    PointSet::new(
        Matrix::from_rows(&refs),
        if has_labels { Some(labels) } else { None },
    )
}
