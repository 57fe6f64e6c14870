//! The primitive (gadget) matrix `G = I_n ⊗ (1, 2, ..., 2^{k-1})`, zero-padded
//! on the right to `m` columns, its bit-decomposition inverse and the short
//! basis of its kernel lattice.

use super::int_matrix::IntMatrix;
use super::matrix::{ZqMatrix, ZqVector};
use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Shape of a gadget matrix: `n` rows, `m >= n*k` columns, `k = ceil(log2 q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gadget {
    n: usize,
    m: usize,
    k: usize,
    modulus: Modulus,
}

impl Gadget {
    pub fn new(n: usize, m: usize, modulus: Modulus) -> Result<Self> {
        let k = modulus.bit_length() as usize;
        if n == 0 {
            return Err(Error::InvalidParameter("gadget needs n >= 1".into()));
        }
        if m < n * k {
            return Err(Error::InvalidParameter(format!(
                "gadget width m = {m} is below n*ceil(log q) = {}",
                n * k
            )));
        }
        Ok(Self { n, m, k, modulus })
    }

    /// Unpadded gadget: `m = n*k`.
    pub fn tight(n: usize, modulus: Modulus) -> Result<Self> {
        Self::new(n, n * modulus.bit_length() as usize, modulus)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Digits per row.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn matrix(&self) -> ZqMatrix {
        let mut g = ZqMatrix::zeros(self.n, self.m, self.modulus);
        for i in 0..self.n {
            for b in 0..self.k {
                g.set(i, i * self.k + b, self.modulus.reduce_u128(1u128 << b));
            }
        }
        g
    }

    /// `G^{-1}(U)`: binary `m x cols` matrix with `G * X = U`; padded rows are zero.
    pub fn inverse(&self, u: &ZqMatrix) -> Result<IntMatrix> {
        if u.rows() != self.n {
            return Err(Error::Dimension(format!(
                "gadget inverse expects {} rows, got {}",
                self.n,
                u.rows()
            )));
        }
        if u.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(u.modulus().value(), self.modulus.value()));
        }
        let mut x = IntMatrix::zeros(self.m, u.cols());
        for i in 0..self.n {
            for (j, &v) in u.row(i).iter().enumerate() {
                for b in 0..self.k {
                    x.set(i * self.k + b, j, ((v >> b) & 1) as i64);
                }
            }
        }
        Ok(x)
    }

    /// Bits of column `col` of `x*G`, laid out in the gadget's row block.
    /// Column `i*k + b` of `x*G` is `x * 2^b * e_i`; padded columns are zero.
    fn scaled_column_bits(&self, x: u64, col: usize) -> Option<(usize, u64)> {
        if col >= self.n * self.k {
            return None;
        }
        let (i, b) = (col / self.k, col % self.k);
        let v = self.modulus.mul(x, self.modulus.reduce_u128(1u128 << b));
        Some((i, v))
    }

    /// Dense `G^{-1}(x * G)`.
    pub fn inverse_of_scaled(&self, x: u64) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.m, self.m);
        for col in 0..self.m {
            if let Some((i, v)) = self.scaled_column_bits(x, col) {
                for b in 0..self.k {
                    out.set(i * self.k + b, col, ((v >> b) & 1) as i64);
                }
            }
        }
        out
    }

    /// `a * G^{-1}(x * G)` without forming the `m x m` decomposition.
    pub fn mul_inverse_of_scaled(&self, a: &ZqMatrix, x: u64) -> Result<ZqMatrix> {
        if a.cols() != self.m {
            return Err(Error::Dimension(format!(
                "expected {} columns, got {}",
                self.m,
                a.cols()
            )));
        }
        let q = self.modulus;
        let mut out = ZqMatrix::zeros(a.rows(), self.m, q);
        for col in 0..self.m {
            let Some((i, v)) = self.scaled_column_bits(x, col) else {
                continue;
            };
            for r in 0..a.rows() {
                let mut acc = 0u64;
                for b in 0..self.k {
                    if (v >> b) & 1 == 1 {
                        acc = q.add(acc, a.get(r, i * self.k + b));
                    }
                }
                out.set(r, col, acc);
            }
        }
        Ok(out)
    }

    /// Integer analogue of [`Gadget::mul_inverse_of_scaled`] for short matrices.
    pub fn int_mul_inverse_of_scaled(&self, r: &IntMatrix, x: u64) -> Result<IntMatrix> {
        if r.cols() != self.m {
            return Err(Error::Dimension(format!(
                "expected {} columns, got {}",
                self.m,
                r.cols()
            )));
        }
        let mut out = IntMatrix::zeros(r.rows(), self.m);
        for col in 0..self.m {
            let Some((i, v)) = self.scaled_column_bits(x, col) else {
                continue;
            };
            for row in 0..r.rows() {
                let acc = (0..self.k)
                    .filter(|b| (v >> b) & 1 == 1)
                    .map(|b| r.get(row, i * self.k + b))
                    .sum();
                out.set(row, col, acc);
            }
        }
        Ok(out)
    }

    /// `G^{-1}(x * G)^T * c`, used to fold attribute components of a ciphertext.
    pub fn inverse_of_scaled_transpose_mul(&self, x: u64, c: &ZqVector) -> Result<ZqVector> {
        if c.len() != self.m {
            return Err(Error::Dimension(format!(
                "expected vector of length {}, got {}",
                self.m,
                c.len()
            )));
        }
        let q = self.modulus;
        let out = (0..self.m)
            .map(|col| match self.scaled_column_bits(x, col) {
                Some((i, v)) => (0..self.k)
                    .filter(|b| (v >> b) & 1 == 1)
                    .fold(0, |acc, b| q.add(acc, c.get(i * self.k + b))),
                None => 0,
            })
            .collect();
        ZqVector::from_vec(out, q)
    }

    /// Basis `T_G` of the kernel lattice of `G`: block diagonal with one
    /// `k x k` block per row of `G` and an identity on the padded coordinates.
    pub fn basis(&self) -> IntMatrix {
        let q = self.modulus.value();
        let k = self.k;
        let mut block = IntMatrix::zeros(k, k);
        for c in 0..k.saturating_sub(1) {
            block.set(c, c, 2);
            block.set(c + 1, c, -1);
        }
        if q == 1u64 << k {
            block.set(k - 1, k - 1, 2);
        } else {
            for b in 0..k {
                block.set(b, k - 1, ((q >> b) & 1) as i64);
            }
        }
        let mut t = IntMatrix::zeros(self.m, self.m);
        for i in 0..self.n {
            for r in 0..k {
                for c in 0..k {
                    t.set(i * k + r, i * k + c, block.get(r, c));
                }
            }
        }
        for p in self.n * k..self.m {
            t.set(p, p, 1);
        }
        t
    }
}

pub fn gadget_matrix(n: usize, m: usize, modulus: Modulus) -> Result<ZqMatrix> {
    Ok(Gadget::new(n, m, modulus)?.matrix())
}

pub fn gadget_inverse(u: &ZqMatrix, m: usize) -> Result<IntMatrix> {
    Gadget::new(u.rows(), m, u.modulus())?.inverse(u)
}

pub fn gadget_basis(n: usize, m: usize, modulus: Modulus) -> Result<IntMatrix> {
    Ok(Gadget::new(n, m, modulus)?.basis())
}
