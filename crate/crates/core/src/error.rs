use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("invalid modulus {0}: {1}")]
    InvalidModulus(u64, &'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular basis")]
    SingularBasis,

    #[error("no preimage: target is outside the image of the matrix")]
    NoPreimage,

    #[error("binary tree is full ({0} leaves)")]
    TreeFull(usize),

    #[error("identity already registered")]
    DuplicateIdentity,

    #[error("unknown identity")]
    UnknownIdentity,

    #[error("unknown leaf {0}")]
    UnknownLeaf(u64),

    #[error("node {0} already holds a matrix")]
    NodeOverwrite(u64),

    #[error("label of {len} bytes exceeds capacity of {max} bytes")]
    LabelTooLong { len: usize, max: usize },

    #[error("epoch mismatch: ciphertext is for epoch {ciphertext}, key is for epoch {key}")]
    EpochMismatch { ciphertext: u64, key: u64 },

    #[error("wire format: {0}")]
    Wire(String),
}

pub type Result<T> = std::result::Result<T, Error>;
