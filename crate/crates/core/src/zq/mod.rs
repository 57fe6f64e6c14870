//! Exact modular linear algebra over `Z_q`: dense matrices, the gadget
//! matrix, the full-rank difference map and bit encodings.

mod frd;
mod gadget;
mod int_matrix;
mod matrix;
mod message;
mod modulus;

pub use frd::{frd_map, FrdMap};
pub use gadget::{gadget_basis, gadget_inverse, gadget_matrix, Gadget};
pub use int_matrix::IntMatrix;
pub use matrix::{concat_cols, RowReduction, ZqMatrix, ZqVector};
pub use message::{encode_message, round_bit, round_decode, scaled_encoding};
pub use modulus::{is_prime_u64, next_prime, Modulus, MAX_MODULUS_BITS};
