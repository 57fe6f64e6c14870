//! Injective packing of identity and time labels into `Z_q^n`.
//!
//! A label is read as a bijective base-256 numeral (digit `b + 1` for byte
//! `b`, least significant first), so labels of different lengths never
//! collide and the empty label maps to zero. The number is then written in
//! base `q` across the `n` coordinates.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::params::SysParams;
use crate::zq::ZqVector;

pub fn encode_id_time(params: &SysParams, label: &[u8]) -> Result<ZqVector> {
    let max = params.max_label_len();
    let too_long = Error::LabelTooLong { len: label.len(), max };
    if label.len() > max {
        return Err(too_long);
    }
    let mut value = BigUint::default();
    for &b in label.iter().rev() {
        value = value * 256u32 + (b as u32 + 1);
    }
    let q = BigUint::from(params.q());
    let mut digits = Vec::with_capacity(params.n());
    for _ in 0..params.n() {
        let d = &value % &q;
        digits.push(d.iter_u64_digits().next().unwrap_or(0));
        value /= &q;
    }
    if value != BigUint::default() {
        return Err(too_long);
    }
    ZqVector::from_vec(digits, params.modulus())
}

/// Inverse of [`encode_id_time`].
pub fn decode_id_time(v: &ZqVector) -> Vec<u8> {
    let q = BigUint::from(v.modulus().value());
    let mut value = BigUint::default();
    for &d in v.as_slice().iter().rev() {
        value = value * &q + d;
    }
    let mut out = Vec::new();
    let base = BigUint::from(256u32);
    while value != BigUint::default() {
        let mut d = (&value % &base).iter_u32_digits().next().unwrap_or(0);
        if d == 0 {
            d = 256;
        }
        out.push((d - 1) as u8);
        value = (value - d) / &base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProfileSpec;
    use std::collections::HashSet;

    fn params(q: u64) -> SysParams {
        SysParams::from_spec(ProfileSpec {
            name: "unit".into(),
            n: 2,
            users: 2,
            ell: 1,
            kappa: 8,
            q,
            s: 1.0,
            noise_bound: 1,
            omega_const: 1e-9,
        })
        .unwrap()
    }

    #[test]
    fn empty_label_is_zero() {
        let p = SysParams::profile("toy").unwrap();
        assert!(encode_id_time(&p, b"").unwrap().is_zero());
    }

    #[test]
    fn two_byte_labels_are_injective() {
        let p = params(65_537);
        assert_eq!(p.max_label_len(), 4);
        let mut seen = HashSet::new();
        let labels = std::iter::once(vec![])
            .chain((0..=255u8).map(|a| vec![a]))
            .chain((0..=0xffffu32).map(|x| x.to_le_bytes()[..2].to_vec()));
        for label in labels {
            let v = encode_id_time(&p, &label).unwrap();
            assert_eq!(decode_id_time(&v), label);
            assert!(seen.insert(v.into_vec()), "collision at {label:?}");
        }
    }

    #[test]
    fn length_limit() {
        let p = SysParams::profile("toy").unwrap();
        let max = p.max_label_len();
        assert!(encode_id_time(&p, &vec![7u8; max]).is_ok());
        assert_eq!(
            encode_id_time(&p, &vec![0u8; max + 1]),
            Err(Error::LabelTooLong { len: max + 1, max })
        );
    }

    #[test]
    fn round_trip_at_profile_scale() {
        let p = SysParams::profile("toy").unwrap();
        for label in [&b"alice"[..], b"t42", &[0, 0, 0], &[255; 20]] {
            assert_eq!(decode_id_time(&encode_id_time(&p, label).unwrap()), label);
        }
    }
}
