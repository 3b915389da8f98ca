use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsfError {
    #[error("sub-contest needs at least two contestants, got {size}")]
    InvalidSubset { size: usize },

    #[error("subset mask {mask:#x} reaches beyond {n} contestants")]
    SubsetOutOfRange { mask: u64, n: usize },

    #[error("every impact in the sub-contest is zero; probabilities are undefined")]
    DegenerateDenominator,

    #[error("deviation d_{i}{j} is undefined: contestant {j} has zero probability once {i} is inactive")]
    UndefinedDeviation { i: usize, j: usize },

    #[error("deviation needs two distinct contestants, got i = j = {0}")]
    SameContestant(usize),

    #[error("family has no luck term (sum of b is zero)")]
    LucklessFamily,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid effort profile: {0}")]
    InvalidProfile(String),

    #[error("expected {expected} contestants, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("contestant index {index} out of range for {n} contestants")]
    IndexOutOfRange { index: usize, n: usize },

    #[error(
        "custom impact for contestant {contestant} is not strictly increasing and non-negative near x = {at}"
    )]
    NonMonotoneImpact { contestant: usize, at: f64 },

    #[error("impact of contestant {contestant} is not finite at x = {at}")]
    NonFiniteImpact { contestant: usize, at: f64 },

    #[error("effort {effort} is outside the declared domain [0, {max}] of the custom impact")]
    EffortOutOfDomain { effort: f64, max: f64 },

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("operation not supported for the {family} family: {why}")]
    UnsupportedFamily { family: &'static str, why: &'static str },

    #[error("axiom {axiom} is inapplicable: {why}")]
    InapplicableAxiom { axiom: &'static str, why: &'static str },
}

pub type Result<T, E = CsfError> = std::result::Result<T, E>;
