use super::matrix::{accumulation_budget, ZqMatrix, ZqVector};
use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Dense row-major integer matrix for short objects: trapdoor bases, preimage
/// samples and secret keys.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IntMatrix({}x{})", self.rows, self.cols)?;
        if self.rows * self.cols <= 64 {
            for r in 0..self.rows {
                write!(f, "\n  {:?}", self.row(r))?;
            }
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_columns(columns: &[Vec<i64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m.data[i * m.cols + j] = v;
            }
        }
        Ok(m)
    }

    /// Lifts residues to their centered representatives.
    pub fn from_zq_centered(m: &ZqMatrix) -> Self {
        let q = m.modulus();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|&x| q.centered(x)).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn max_abs(&self) -> u64 {
        self.data.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn to_zq(&self, modulus: Modulus) -> ZqMatrix {
        ZqMatrix::from_i64(self.rows, self.cols, &self.data, modulus)
            .expect("shape is consistent by construction")
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d = d
                        .checked_add(a.checked_mul(b).expect("integer matrix overflow"))
                        .expect("integer matrix overflow");
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension("shape mismatch in addition".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension("row mismatch in hstack".into()));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// `[self ; other]` (rows of `self` on top).
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension("column mismatch in vstack".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Rows `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows);
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0f64; self.cols];
        for r in 0..self.rows {
            for (s, &v) in sq.iter_mut().zip(self.row(r)) {
                *s += (v as f64) * (v as f64);
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Norm of the longest column.
    pub fn max_column_norm(&self) -> f64 {
        self.column_norms().into_iter().fold(0.0, f64::max)
    }

    /// `self^T * v mod q`, the workhorse of decryption.
    pub fn transpose_mul_zq(&self, v: &ZqVector) -> Result<ZqVector> {
        if self.rows != v.len() {
            return Err(Error::Dimension(format!(
                "cannot multiply transpose of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let m = v.modulus();
        let qi = m.value() as i128;
        let budget = accumulation_budget(m.value() as u128, self.max_abs() as u128);
        let mut acc = vec![0i128; self.cols];
        let mut pending = 0;
        for (i, &x) in v.as_slice().iter().enumerate() {
            if x == 0 {
                continue;
            }
            if pending == budget {
                acc.iter_mut().for_each(|a| *a %= qi);
                pending = 0;
            }
            let x = x as i128;
            for (a, &z) in acc.iter_mut().zip(self.row(i)) {
                *a += x * z as i128;
            }
            pending += 1;
        }
        ZqVector::from_vec(acc.into_iter().map(|a| m.reduce_i128(a)).collect(), m)
    }
}
