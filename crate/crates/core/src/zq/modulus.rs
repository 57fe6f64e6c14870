use crate::error::{Error, Result};

/// Largest supported bit length; products of two residues must fit in `u128`
/// with room for accumulation.
pub const MAX_MODULUS_BITS: u32 = 62;

/// An integer modulus `q >= 2` together with `bit_length = ceil(log2 q)`.
///
/// Any `q` is accepted so that gadget arithmetic can be exercised with small
/// powers of two; operations that need a field (the full-rank difference map,
/// scheme parameters) check [`Modulus::is_prime`] themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus {
    q: u64,
    bits: u32,
    prime: bool,
}

impl Modulus {
    pub fn new(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidModulus(q, "modulus must be at least 2"));
        }
        let bits = ceil_log2(q);
        if bits > MAX_MODULUS_BITS {
            return Err(Error::InvalidModulus(q, "modulus exceeds 62 bits"));
        }
        Ok(Self {
            q,
            bits,
            prime: is_prime_u64(q),
        })
    }

    /// Like [`Modulus::new`] but rejects composite moduli.
    pub fn new_prime(q: u64) -> Result<Self> {
        let m = Self::new(q)?;
        if !m.prime {
            return Err(Error::InvalidModulus(q, "modulus must be prime"));
        }
        Ok(m)
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.q
    }

    /// `ceil(log2 q)`; also the gadget width per row.
    #[inline]
    pub fn bit_length(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn is_prime(&self) -> bool {
        self.prime
    }

    /// Bytes per residue on the wire.
    #[inline]
    pub fn byte_width(&self) -> usize {
        self.bits.div_ceil(8) as usize
    }

    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        (x % self.q as u128) as u64
    }

    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn reduce_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.q as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` when `a` shares a factor with `q`.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let (mut old_r, mut r) = (a as i128 % self.q as i128, self.q as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let quot = old_r / r;
            (old_r, r) = (r, old_r - quot * r);
            (old_s, s) = (s, old_s - quot * s);
        }
        if old_r != 1 {
            return None;
        }
        Some(self.reduce_i128(old_s))
    }

    /// Representative in `(-q/2, q/2]`.
    #[inline]
    pub fn centered(&self, a: u64) -> i64 {
        if a > self.q / 2 {
            a as i64 - self.q as i64
        } else {
            a as i64
        }
    }
}

pub(crate) fn ceil_log2(q: u64) -> u32 {
    if q <= 1 {
        0
    } else {
        64 - (q - 1).leading_zeros()
    }
}

/// Deterministic Miller-Rabin; the base set is exact for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= from`.
pub fn next_prime(from: u64) -> u64 {
    let mut c = from.max(2);
    while !is_prime_u64(c) {
        c += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_length_is_ceil_log2() {
        assert_eq!(Modulus::new(2).unwrap().bit_length(), 1);
        assert_eq!(Modulus::new(8).unwrap().bit_length(), 3);
        assert_eq!(Modulus::new(9).unwrap().bit_length(), 4);
        assert_eq!(Modulus::new(257).unwrap().bit_length(), 9);
        assert_eq!(Modulus::new(257).unwrap().byte_width(), 2);
    }

    #[test]
    fn rejects_degenerate_moduli() {
        assert!(Modulus::new(0).is_err());
        assert!(Modulus::new(1).is_err());
        assert!(Modulus::new(1 << 63).is_err());
        assert!(Modulus::new_prime(8).is_err());
        assert!(Modulus::new_prime(7).is_ok());
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..5000 {
            assert_eq!(is_prime_u64(n), trial(n), "n = {n}");
        }
        assert!(is_prime_u64(4_294_967_291));
        assert!(!is_prime_u64(4_294_967_297)); // 641 * 6700417
        assert_eq!(next_prime(4_294_967_280), 4_294_967_291);
    }

    #[test]
    fn inverse_and_centering() {
        let m = Modulus::new(97).unwrap();
        for a in 1..97 {
            assert_eq!(m.mul(a, m.inv(a).unwrap()), 1);
        }
        assert_eq!(m.inv(0), None);
        assert_eq!(Modulus::new(8).unwrap().inv(4), None);
        assert_eq!(m.centered(48), 48);
        assert_eq!(m.centered(49), -48);
        assert_eq!(m.reduce_i64(-1), 96);
    }
}
