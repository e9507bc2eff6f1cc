use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid construction: {0}")]
    Grid(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("SCF did not converge after {iterations} iterations (last |dE| = {energy_drift:.3e})")]
    ScfNotConverged { iterations: usize, energy_drift: f64 },

    #[error("imaginary-time propagation did not converge after {steps} steps (E = {energy:.12}, last |dE| = {drift:.3e})")]
    ItpNotConverged { steps: usize, energy: f64, drift: f64 },

    #[error("root refinement did not converge: {0}")]
    RootFinding(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("determinant space size {computed} exceeds cap {cap}")]
    SpaceTooLarge { computed: u128, cap: u128 },

    #[error("memory estimate {required} bytes exceeds budget {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
