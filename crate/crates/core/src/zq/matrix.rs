use rand::Rng;

use super::int_matrix::IntMatrix;
use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Number of products of magnitude below `max_a * max_b` that can be summed in
/// an `i128` before the accumulator has to be reduced.
pub(crate) fn accumulation_budget(max_a: u128, max_b: u128) -> usize {
    let prod = max_a.max(1).saturating_mul(max_b.max(1));
    let budget = (i128::MAX as u128 / 2) / prod;
    budget.clamp(1, usize::MAX as u128) as usize
}

/// Dense row-major matrix over `Z_q` with canonical residues in `[0, q)`.
#[derive(Clone, PartialEq, Eq)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    modulus: Modulus,
}

impl std::fmt::Debug for ZqMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ZqMatrix({}x{} mod {})", self.rows, self.cols, self.modulus.value())?;
        if self.rows * self.cols <= 64 {
            for r in 0..self.rows {
                write!(f, "\n  {:?}", self.row(r))?;
            }
        }
        Ok(())
    }
}

impl ZqMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: Modulus) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
            modulus,
        }
    }

    pub fn identity(n: usize, modulus: Modulus) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.data[i * n + i] = 1 % modulus.value();
        }
        m
    }

    /// Builds a matrix from canonical residues; every entry must lie in `[0, q)`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<u64>, modulus: Modulus) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&e| e >= modulus.value()) {
            return Err(Error::InvalidParameter(format!(
                "entry {bad} is not a residue mod {}",
                modulus.value()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            modulus,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>], modulus: Modulus) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat(), modulus)
    }

    /// Reduces arbitrary integers into `Z_q`.
    pub fn from_i64(rows: usize, cols: usize, data: &[i64], modulus: Modulus) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: data.iter().map(|&x| modulus.reduce_i64(x)).collect(),
            modulus,
        })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, modulus: Modulus, rng: &mut R) -> Self {
        let q = modulus.value();
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(0..q)).collect(),
            modulus,
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
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        debug_assert!(v < self.modulus.value());
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ZqVector {
        ZqVector {
            data: (0..self.rows).map(|r| self.get(r, c)).collect(),
            modulus: self.modulus,
        }
    }

    pub fn from_columns(cols: &[ZqVector]) -> Result<Self> {
        let first = cols
            .first()
            .ok_or_else(|| Error::Dimension("no columns".into()))?;
        let (rows, modulus) = (first.len(), first.modulus);
        let mut m = Self::zeros(rows, cols.len(), modulus);
        for (j, c) in cols.iter().enumerate() {
            check_modulus(modulus, c.modulus)?;
            if c.len() != rows {
                return Err(Error::Dimension("columns of unequal length".into()));
            }
            for (i, &v) in c.data.iter().enumerate() {
                m.data[i * m.cols + j] = v;
            }
        }
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.modulus);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Columns `start..end`.
    pub fn column_range(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols);
        let w = end - start;
        let mut data = Vec::with_capacity(self.rows * w);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Self {
            rows: self.rows,
            cols: w,
            data,
            modulus: self.modulus,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let m = self.modulus;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(&a, &b)| m.add(a, b)).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let m = self.modulus;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(&a, &b)| m.sub(a, b)).collect()))
    }

    pub fn scale(&self, c: u64) -> Self {
        let m = self.modulus;
        let c = c % m.value();
        self.with_data(self.data.iter().map(|&a| m.mul(a, c)).collect())
    }

    pub fn neg(&self) -> Self {
        let m = self.modulus;
        self.with_data(self.data.iter().map(|&a| m.neg(a)).collect())
    }

    /// Exact product modulo `q`.
    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        check_modulus(self.modulus, other.modulus)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let q = self.modulus.value() as u128;
        let budget = accumulation_budget(q, q);
        let mut out = Self::zeros(self.rows, other.cols, self.modulus);
        let mut acc = vec![0u128; other.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            let mut pending = 0;
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                if pending == budget {
                    acc.iter_mut().for_each(|x| *x %= q);
                    pending = 0;
                }
                let a = a as u128;
                for (x, &b) in acc.iter_mut().zip(other.row(k)) {
                    *x += a * b as u128;
                }
                pending += 1;
            }
            for (o, &x) in out.data[i * other.cols..(i + 1) * other.cols].iter_mut().zip(&acc) {
                *o = (x % q) as u64;
            }
        }
        Ok(out)
    }

    /// `self * z mod q` for an integer matrix `z`.
    pub fn mul_int(&self, z: &IntMatrix) -> Result<Self> {
        if self.cols != z.rows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                z.rows(),
                z.cols()
            )));
        }
        let m = self.modulus;
        let budget = accumulation_budget(m.value() as u128, z.max_abs() as u128);
        let mut out = Self::zeros(self.rows, z.cols(), m);
        let mut acc = vec![0i128; z.cols()];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            let mut pending = 0;
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                if pending == budget {
                    acc.iter_mut().for_each(|x| *x %= m.value() as i128);
                    pending = 0;
                }
                let a = a as i128;
                for (x, &b) in acc.iter_mut().zip(z.row(k)) {
                    *x += a * b as i128;
                }
                pending += 1;
            }
            for (o, &x) in out.data[i * z.cols()..(i + 1) * z.cols()].iter_mut().zip(&acc) {
                *o = m.reduce_i128(x);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &ZqVector) -> Result<ZqVector> {
        check_modulus(self.modulus, v.modulus)?;
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let m = self.modulus;
        let budget = accumulation_budget(m.value() as u128, m.value() as u128);
        let data = (0..self.rows)
            .map(|i| dot_mod(self.row(i), &v.data, m, budget))
            .collect();
        Ok(ZqVector { data, modulus: m })
    }

    /// `self^T * v mod q` without materializing the transpose.
    pub fn transpose_mul_vec(&self, v: &ZqVector) -> Result<ZqVector> {
        check_modulus(self.modulus, v.modulus)?;
        if self.rows != v.len() {
            return Err(Error::Dimension(format!(
                "cannot multiply transpose of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let q = self.modulus.value() as u128;
        let budget = accumulation_budget(q, q);
        let mut acc = vec![0u128; self.cols];
        let mut pending = 0;
        for (i, &s) in v.data.iter().enumerate() {
            if s == 0 {
                continue;
            }
            if pending == budget {
                acc.iter_mut().for_each(|x| *x %= q);
                pending = 0;
            }
            for (x, &a) in acc.iter_mut().zip(self.row(i)) {
                *x += s as u128 * a as u128;
            }
            pending += 1;
        }
        Ok(ZqVector {
            data: acc.into_iter().map(|x| (x % q) as u64).collect(),
            modulus: self.modulus,
        })
    }

    /// Rank over `Z_q` by Gaussian elimination; requires prime `q`.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.row_reduce()?.pivots.len())
    }

    /// Reduced row echelon form together with the pivot columns and the
    /// invertible transform `P` with `P * self = rref`. Requires prime `q`.
    pub fn row_reduce(&self) -> Result<RowReduction> {
        let m = self.modulus;
        if !m.is_prime() {
            return Err(Error::InvalidModulus(m.value(), "row reduction needs a prime modulus"));
        }
        let mut a = self.clone();
        let mut p = Self::identity(self.rows, m);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| a.get(i, c) != 0) else {
                continue;
            };
            a.swap_rows(r, pr);
            p.swap_rows(r, pr);
            let inv = m.inv(a.get(r, c)).expect("prime modulus");
            a.scale_row(r, inv);
            p.scale_row(r, inv);
            for i in 0..self.rows {
                let f = a.get(i, c);
                if i != r && f != 0 {
                    a.sub_row_multiple(i, r, f);
                    p.sub_row_multiple(i, r, f);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Ok(RowReduction {
            rref: a,
            transform: p,
            pivots,
        })
    }

    /// Square-matrix inverse over a prime field, `None` if singular.
    pub fn inverse(&self) -> Result<Option<Self>> {
        if self.rows != self.cols {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let red = self.row_reduce()?;
        Ok((red.pivots.len() == self.rows).then_some(red.transform))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, f: u64) {
        let m = self.modulus;
        for x in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *x = m.mul(*x, f);
        }
    }

    fn sub_row_multiple(&mut self, dst: usize, src: usize, f: u64) {
        let m = self.modulus;
        for c in 0..self.cols {
            let v = m.mul(self.data[src * self.cols + c], f);
            let d = &mut self.data[dst * self.cols + c];
            *d = m.sub(*d, v);
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        check_modulus(self.modulus, other.modulus)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    fn with_data(&self, data: Vec<u64>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
            modulus: self.modulus,
        }
    }
}

/// Column concatenation `[A | B | ...]`.
pub fn concat_cols(parts: &[&ZqMatrix]) -> Result<ZqMatrix> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Dimension("nothing to concatenate".into()))?;
    let (rows, modulus) = (first.rows, first.modulus);
    for p in parts {
        check_modulus(modulus, p.modulus)?;
        if p.rows != rows {
            return Err(Error::Dimension(format!(
                "row mismatch in concatenation: {} vs {}",
                p.rows, rows
            )));
        }
    }
    let cols = parts.iter().map(|p| p.cols).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    Ok(ZqMatrix {
        rows,
        cols,
        data,
        modulus,
    })
}

pub struct RowReduction {
    pub rref: ZqMatrix,
    pub transform: ZqMatrix,
    pub pivots: Vec<usize>,
}

/// Vector over `Z_q`.
#[derive(Clone, PartialEq, Eq)]
pub struct ZqVector {
    data: Vec<u64>,
    modulus: Modulus,
}

impl std::fmt::Debug for ZqVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ZqVector(mod {}, {:?})", self.modulus.value(), self.data)
    }
}

impl ZqVector {
    pub fn zeros(len: usize, modulus: Modulus) -> Self {
        Self {
            data: vec![0; len],
            modulus,
        }
    }

    pub fn from_vec(data: Vec<u64>, modulus: Modulus) -> Result<Self> {
        if let Some(bad) = data.iter().find(|&&e| e >= modulus.value()) {
            return Err(Error::InvalidParameter(format!(
                "entry {bad} is not a residue mod {}",
                modulus.value()
            )));
        }
        Ok(Self { data, modulus })
    }

    pub fn from_i64(data: &[i64], modulus: Modulus) -> Self {
        Self {
            data: data.iter().map(|&x| modulus.reduce_i64(x)).collect(),
            modulus,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, modulus: Modulus, rng: &mut R) -> Self {
        let q = modulus.value();
        Self {
            data: (0..len).map(|_| rng.gen_range(0..q)).collect(),
            modulus,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        self.data[i]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let m = self.modulus;
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| m.add(a, b)).collect(),
            modulus: m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let m = self.modulus;
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| m.sub(a, b)).collect(),
            modulus: m,
        })
    }

    pub fn scale(&self, c: u64) -> Self {
        let m = self.modulus;
        Self {
            data: self.data.iter().map(|&a| m.mul(a, c % m.value())).collect(),
            modulus: m,
        }
    }

    pub fn dot(&self, other: &Self) -> Result<u64> {
        self.check_same(other)?;
        let q = self.modulus.value() as u128;
        Ok(dot_mod(&self.data, &other.data, self.modulus, accumulation_budget(q, q)))
    }

    /// Concatenation of vectors sharing one modulus.
    pub fn stack(parts: &[&ZqVector]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            check_modulus(first.modulus, p.modulus)?;
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            data,
            modulus: first.modulus,
        })
    }

    /// Signed representatives in `(-q/2, q/2]`.
    pub fn centered(&self) -> Vec<i64> {
        self.data.iter().map(|&x| self.modulus.centered(x)).collect()
    }

    /// Infinity norm of the centered representative.
    pub fn inf_norm(&self) -> u64 {
        self.centered().iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        check_modulus(self.modulus, other.modulus)?;
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "vector lengths {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

fn dot_mod(a: &[u64], b: &[u64], m: Modulus, budget: usize) -> u64 {
    let q = m.value() as u128;
    let mut acc = 0u128;
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        if i > 0 && i % budget == 0 {
            acc %= q;
        }
        acc += x as u128 * y as u128;
    }
    (acc % q) as u64
}

pub(crate) fn check_modulus(a: Modulus, b: Modulus) -> Result<()> {
    if a != b {
        return Err(Error::ModulusMismatch(a.value(), b.value()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn q(v: u64) -> Modulus {
        Modulus::new(v).unwrap()
    }

    #[test]
    fn small_product_over_7() {
        let m = q(7);
        let a = ZqMatrix::from_rows(&[vec![1, 2], vec![3, 4]], m).unwrap();
        let b = ZqMatrix::from_rows(&[vec![5, 6], vec![0, 1]], m).unwrap();
        let c = a.mat_mul(&b).unwrap();
        assert_eq!(c, ZqMatrix::from_rows(&[vec![5, 1], vec![1, 1]], m).unwrap());
    }

    #[test]
    fn identity_and_zero_products() {
        let m = q(101);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = ZqMatrix::random(4, 6, m, &mut rng);
        assert_eq!(ZqMatrix::identity(4, m).mat_mul(&a).unwrap(), a);
        assert!(a.mat_mul(&ZqMatrix::zeros(6, 3, m)).unwrap().is_zero());
    }

    #[test]
    fn product_errors() {
        let a = ZqMatrix::zeros(2, 3, q(7));
        assert!(matches!(a.mat_mul(&ZqMatrix::zeros(2, 3, q(7))), Err(Error::Dimension(_))));
        assert!(matches!(
            a.mat_mul(&ZqMatrix::zeros(3, 3, q(11))),
            Err(Error::ModulusMismatch(7, 11))
        ));
    }

    #[test]
    fn product_matches_bigint_near_2_pow_32() {
        let m = q(4_294_967_291);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = ZqMatrix::random(8, 8, m, &mut rng);
            let b = ZqMatrix::random(8, 8, m, &mut rng);
            let c = a.mat_mul(&b).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    let mut acc = BigInt::from(0);
                    for k in 0..8 {
                        acc += BigInt::from(a.get(i, k)) * BigInt::from(b.get(k, j));
                    }
                    let want: BigInt = acc % BigInt::from(m.value());
                    assert_eq!(BigInt::from(c.get(i, j)), want);
                }
            }
        }
    }

    #[test]
    fn large_modulus_accumulation_stays_exact() {
        // 61-bit modulus forces periodic reduction of the accumulator.
        let m = q((1u64 << 61) - 1);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = ZqMatrix::random(3, 40, m, &mut rng);
        let b = ZqMatrix::random(40, 2, m, &mut rng);
        let c = a.mat_mul(&b).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = BigInt::from(0);
                for k in 0..40 {
                    acc += BigInt::from(a.get(i, k)) * BigInt::from(b.get(k, j));
                }
                assert_eq!(BigInt::from(c.get(i, j)), acc % BigInt::from(m.value()));
            }
        }
        let v = ZqVector::random(3, m, &mut rng);
        assert_eq!(a.transpose_mul_vec(&v).unwrap(), a.transpose().mul_vec(&v).unwrap());
    }

    #[test]
    fn concat_preserves_positions() {
        let m = q(97);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let parts: Vec<_> = [2, 3, 1].iter().map(|&c| ZqMatrix::random(3, c, m, &mut rng)).collect();
        let cat = concat_cols(&parts.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!((cat.rows(), cat.cols()), (3, 6));
        let mut offset = 0;
        for p in &parts {
            for r in 0..3 {
                for c in 0..p.cols() {
                    assert_eq!(cat.get(r, offset + c), p.get(r, c));
                }
            }
            offset += p.cols();
        }
        assert_eq!(concat_cols(&[&parts[0]]).unwrap(), parts[0]);
        assert!(concat_cols(&[&parts[0], &ZqMatrix::zeros(2, 2, m)]).is_err());
    }

    #[test]
    fn row_reduction_and_inverse() {
        let m = q(101);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = ZqMatrix::random(5, 5, m, &mut rng);
        let inv = a.inverse().unwrap().expect("random 5x5 is invertible w.h.p.");
        assert_eq!(a.mat_mul(&inv).unwrap(), ZqMatrix::identity(5, m));
        let wide = ZqMatrix::random(3, 9, m, &mut rng);
        let red = wide.row_reduce().unwrap();
        assert_eq!(red.transform.mat_mul(&wide).unwrap(), red.rref);
        assert_eq!(wide.rank().unwrap(), 3);
        assert!(ZqMatrix::zeros(2, 2, q(8)).rank().is_err());
    }
}
