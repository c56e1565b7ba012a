//! Datasets and support masks.

use ndarray::{Array2, ArrayView1, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Feature matrix with `n` rows (samples) and `p` columns, plus `±1` labels.
///
/// Columns are stored contiguously, since every solver touches the data
/// one feature at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<f64>,
    names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 1 || p < 1 {
            return invalid(format!("dataset must have at least one row and column, got {n}x{p}"));
        }
        if y.len() != n {
            return invalid(format!("{} labels for {n} rows", y.len()));
        }
        if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return invalid(format!("label {} at row {i} is not +1 or -1", y[i]));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("feature matrix contains non-finite entries");
        }
        let x = if x.t().is_standard_layout() {
            x
        } else {
            let mut f = Array2::zeros((n, p).f());
            f.assign(&x);
            f
        };
        Ok(Self { x, y, names: None })
    }

    /// Builds a dataset from row-major data.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return invalid("ragged rows");
        }
        let x = Array2::from_shape_fn((n, p).f(), |(i, j)| rows[i][j]);
        Self::new(x, y)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return invalid(format!("{} names for {} columns", names.len(), self.p()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        self.x
            .column(j)
            .to_slice()
            .expect("columns are contiguous in column-major storage")
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v > 0.0).count();
        (pos, self.n() - pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (pos, neg) = self.class_counts();
        pos > 0 && neg > 0
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.n() < 2 || !self.has_both_classes() {
            return invalid("fitting requires at least one sample from each class");
        }
        Ok(())
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let p = self.p();
        let x = Array2::from_shape_fn((idx.len(), p).f(), |(i, j)| self.x[[idx[i], j]]);
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Self { x, y, names: self.names.clone() }
    }

    /// Linear scores `X w + b`.
    pub fn scores(&self, w: &[f64], b: f64) -> Vec<f64> {
        let mut s = vec![b; self.n()];
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for (si, xij) in s.iter_mut().zip(self.col(j)) {
                    *si += wj * xij;
                }
            }
        }
        s
    }

    /// Centers each column and scales it to unit (population) variance.
    /// Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let mut out = self.clone();
        standardize_columns(&mut out.x);
        out
    }
}

pub(crate) fn standardize_columns(x: &mut Array2<f64>) {
    let n = x.nrows() as f64;
    for mut c in x.columns_mut() {
        let mean = c.sum() / n;
        c.mapv_inplace(|v| v - mean);
        let var = c.iter().map(|v| v * v).sum::<f64>() / n;
        if var > 0.0 {
            let sd = var.sqrt();
            c.mapv_inplace(|v| v / sd);
        }
    }
}

/// Binary selection vector over `p` features with a cardinality budget `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportMask {
    bits: Vec<bool>,
    k: usize,
}

impl SupportMask {
    pub fn empty(p: usize, k: usize) -> Self {
        Self { bits: vec![false; p], k }
    }

    pub fn from_bits(bits: Vec<bool>, k: usize) -> Result<Self> {
        let p = bits.len();
        if k > p {
            return invalid(format!("budget k={k} exceeds p={p}"));
        }
        let count = bits.iter().filter(|&&b| b).count();
        if count > k {
            return invalid(format!("{count} active coordinates exceed budget k={k}"));
        }
        Ok(Self { bits, k })
    }

    pub fn from_indices(p: usize, k: usize, idx: &[usize]) -> Result<Self> {
        let mut bits = vec![false; p];
        for &j in idx {
            if j >= p {
                return invalid(format!("index {j} out of range for p={p}"));
            }
            bits[j] = true;
        }
        Self::from_bits(bits, k)
    }

    /// All-ones mask with `k = p`.
    pub fn full(p: usize) -> Self {
        Self { bits: vec![true; p], k: p }
    }

    pub fn p(&self) -> usize {
        self.bits.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }

    /// The mask as a `0/1` weight vector.
    pub fn weights(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// Stable 64-bit fingerprint used in run logs.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the active indices, independent of std's hasher seed.
        let mut h: u64 = 0xcbf29ce484222325;
        for j in self.indices() {
            for byte in (j as u64).to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}
