use thiserror::Error;

#[derive(Debug, Error)]
pub enum PciError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json")]
    Parse(#[from] serde_json::Error),

    #[error("negative weight {weight} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("non-finite weight at ({i}, {j})")]
    NonFiniteWeight { i: usize, j: usize },

    #[error("conflicting weights for pair ({i}, {j}); declare the matrix asymmetric to symmetrize")]
    ConflictingWeight { i: usize, j: usize },

    #[error("cell index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("self-loop on cell {0}")]
    SelfLoop(usize),

    #[error("pci value {value} at cell {cell} outside [0, 1007]")]
    PciOutOfRange { cell: usize, value: i64 },

    #[error("residue {value} out of range for modulus {modulus} at cell {cell}")]
    ResidueOutOfRange { cell: usize, value: usize, modulus: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient entry")]
    NonFiniteGradient,

    #[error("instance too large for exhaustive search: {k}^{n} labelings")]
    TooLarge { k: usize, n: usize },

    #[error("label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },
}

pub type Result<T> = std::result::Result<T, PciError>;
