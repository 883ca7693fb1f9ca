use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subsystem dimensions {0:?}: every entry must be >= 1")]
    InvalidDims(Vec<usize>),

    #[error("matrix is {rows}x{cols} but the space has dimension {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },

    #[error("operator spaces differ: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("slot {slot} out of range for a space with {slots} slots")]
    InvalidSlot { slot: usize, slots: usize },

    #[error("operator is not Hermitian (max |A - A^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (max |U U^dag - I| = {0:e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("temperature must be nonnegative, got {0}")]
    NegativeTemperature(f64),

    #[error("rate must be finite and nonnegative, got {0}")]
    InvalidRate(f64),

    #[error("coherent state |{alpha}> loses {tail:e} of its norm beyond {n_fock} Fock levels")]
    TailMass { alpha: String, tail: f64, n_fock: usize },

    #[error("transform acts on the external slots (deviation {0:e} from identity)")]
    NotSystemLocal(f64),

    #[error("unsupported frame: {0}")]
    UnsupportedFrame(String),

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("Fock truncation leakage {leak:e} exceeds {threshold:e} at t = {t}")]
    TruncationLeakage { t: f64, leak: f64, threshold: f64 },

    #[error("no samples inside window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("time {0} is not a recorded sample")]
    TimeNotSampled(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}
