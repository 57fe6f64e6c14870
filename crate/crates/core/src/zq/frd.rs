//! Full-rank difference encoding `H: Z_q^n -> Z_q^{n x n}`.
//!
//! `H(v)` is the matrix of multiplication by `v(X) = sum v_i X^i` in
//! `Z_q[X]/(f)` for a fixed monic irreducible `f` of degree `n`. The quotient
//! is a field, so `H(a) - H(b) = H(a - b)` is invertible whenever `a != b`.

use super::matrix::{ZqMatrix, ZqVector};
use super::modulus::Modulus;
use crate::error::{Error, Result};

/// Coefficients are stored low degree first.
type Poly = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrdMap {
    modulus: Modulus,
    /// Lower coefficients `f_0..f_{n-1}` of the monic modulus polynomial.
    poly: Vec<u64>,
}

impl FrdMap {
    /// Deterministic search for the first irreducible monic polynomial of
    /// degree `n`, scanning lower coefficients as base-`min(q, 256)` digits.
    pub fn find(n: usize, modulus: Modulus) -> Result<Self> {
        if !modulus.is_prime() {
            return Err(Error::InvalidModulus(
                modulus.value(),
                "full-rank difference map needs a prime modulus",
            ));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("FRD map needs n >= 1".into()));
        }
        let base = modulus.value().min(256);
        // 2^20 candidates is far beyond what is ever needed: roughly one in n
        // monic polynomials is irreducible.
        for index in 0u64..(1 << 20) {
            let mut t = index;
            let mut lower = vec![0u64; n];
            for c in lower.iter_mut() {
                *c = t % base;
                t /= base;
            }
            if t != 0 {
                break;
            }
            if is_irreducible(&lower, modulus) {
                return Ok(Self {
                    modulus,
                    poly: lower,
                });
            }
        }
        Err(Error::InvalidParameter(format!(
            "no irreducible polynomial of degree {n} found"
        )))
    }

    /// Rebuilds a map from stored coefficients, re-checking irreducibility.
    pub fn from_poly(poly: Vec<u64>, modulus: Modulus) -> Result<Self> {
        if !modulus.is_prime() {
            return Err(Error::InvalidModulus(
                modulus.value(),
                "full-rank difference map needs a prime modulus",
            ));
        }
        if poly.is_empty() || poly.iter().any(|&c| c >= modulus.value()) {
            return Err(Error::InvalidParameter("malformed FRD polynomial".into()));
        }
        if !is_irreducible(&poly, modulus) {
            return Err(Error::InvalidParameter("FRD polynomial is reducible".into()));
        }
        Ok(Self { modulus, poly })
    }

    pub fn degree(&self) -> usize {
        self.poly.len()
    }

    /// Lower coefficients of the monic modulus polynomial.
    pub fn poly(&self) -> &[u64] {
        &self.poly
    }

    pub fn apply(&self, v: &ZqVector) -> Result<ZqMatrix> {
        let n = self.degree();
        if v.len() != n {
            return Err(Error::Dimension(format!(
                "FRD input of length {} for degree {n}",
                v.len()
            )));
        }
        if v.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(v.modulus().value(), self.modulus.value()));
        }
        let q = self.modulus;
        let mut h = ZqMatrix::zeros(n, n, q);
        let mut col: Vec<u64> = v.as_slice().to_vec();
        for j in 0..n {
            for (i, &c) in col.iter().enumerate() {
                h.set(i, j, c);
            }
            // col <- X * col mod f
            let lead = col[n - 1];
            for i in (1..n).rev() {
                col[i] = q.sub(col[i - 1], q.mul(lead, self.poly[i]));
            }
            col[0] = q.neg(q.mul(lead, self.poly[0]));
        }
        Ok(h)
    }
}

/// `H(v)` under an explicit polynomial.
pub fn frd_map(v: &ZqVector, map: &FrdMap) -> Result<ZqMatrix> {
    map.apply(v)
}

fn trim(p: &mut Poly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

fn poly_rem(a: &[u64], b: &[u64], q: Modulus) -> Poly {
    let mut r: Poly = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let inv_lead = q.inv(b[db]).expect("nonzero leading coefficient");
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let f = q.mul(*r.last().unwrap(), inv_lead);
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = q.sub(r[shift + i], q.mul(f, bc));
        }
        trim(&mut r);
    }
    r
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], q: Modulus) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = q.add(prod[i + j], q.mul(x, y));
        }
    }
    poly_rem(&prod, f, q)
}

fn poly_powmod(base: &[u64], mut e: u64, f: &[u64], q: Modulus) -> Poly {
    let mut acc: Poly = poly_rem(&[1], f, q);
    let mut b = poly_rem(base, f, q);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &b, f, q);
        }
        b = poly_mulmod(&b, &b, f, q);
        e >>= 1;
    }
    acc
}

fn poly_gcd(a: &[u64], b: &[u64], q: Modulus) -> Poly {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b, q);
        a = b;
        b = r;
    }
    a
}

/// Ben-Or irreducibility test for the monic polynomial `X^n + lower`.
fn is_irreducible(lower: &[u64], q: Modulus) -> bool {
    let n = lower.len();
    let mut f = lower.to_vec();
    f.push(1);
    if n == 1 {
        return true;
    }
    let x: Poly = vec![0, 1];
    let mut h = poly_rem(&x, &f, q);
    for _ in 0..n / 2 {
        h = poly_powmod(&h, q.value(), &f, q);
        // h - X
        let mut d = h.clone();
        d.resize(d.len().max(2), 0);
        d[1] = q.sub(d[1], 1);
        trim(&mut d);
        let g = poly_gcd(&f, &d, q);
        if g.len() != 1 {
            return false;
        }
    }
    true
}
