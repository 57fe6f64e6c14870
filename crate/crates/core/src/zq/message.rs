use super::matrix::ZqVector;
use super::modulus::Modulus;

/// `encode(b) = (b, 0, ..., 0)` of length `kappa`.
pub fn encode_message(bit: bool, kappa: usize) -> Vec<u8> {
    let mut v = vec![0u8; kappa];
    if let Some(first) = v.first_mut() {
        *first = bit as u8;
    }
    v
}

/// `encode(b) * floor(q/2)` as a vector over `Z_q`.
pub fn scaled_encoding(bit: bool, kappa: usize, modulus: Modulus) -> ZqVector {
    let half = modulus.value() / 2;
    let data = encode_message(bit, kappa)
        .into_iter()
        .map(|b| b as u64 * half)
        .collect();
    ZqVector::from_vec(data, modulus).expect("floor(q/2) < q")
}

/// Per-coordinate `round(2x/q) mod 2`: a residue decodes to 1 iff it lies in
/// the real interval `[q/4, 3q/4)`.
#[inline]
pub fn round_bit(x: u64, modulus: Modulus) -> bool {
    let (x, q) = (x as u128 * 4, modulus.value() as u128);
    x >= q && x < 3 * q
}

/// Recovers `M` when the rounded vector is exactly `encode(M)`; `None` (⊥)
/// for any other pattern.
pub fn round_decode(d: &ZqVector) -> Option<bool> {
    let q = d.modulus();
    let mut bits = d.as_slice().iter().map(|&x| round_bit(x, q));
    let first = bits.next()?;
    bits.all(|b| !b).then_some(first)
}
