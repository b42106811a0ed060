use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} outside (0, 1)")]
    Domain { value: f64 },

    #[error("Sobol' dimension {requested} unavailable (direction numbers cover {available})")]
    SobolDimension { requested: usize, available: usize },

    #[error("Sobol' index space exhausted: {count} points requested at index {index}")]
    SobolExhausted { index: u64, count: u64 },

    #[error("direction table line {line}: {reason}")]
    DirectionTable { line: usize, reason: &'static str },

    #[error("cell energy is zero; relaxation time undefined")]
    DegenerateCell,

    #[error("particle {particle} at x = {position} lies outside [0, {length}]")]
    OutsideDomain { particle: usize, position: f64, length: f64 },

    #[error("particle {particle} crossed a wall more than {limit} times in one step")]
    WallRecursion { particle: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(alloc::string::String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(alloc::string::String),

    #[error("slope fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),
}
