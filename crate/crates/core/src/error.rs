use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("channel entry {index} = {value} is outside [0, 1]")]
    ChannelEntry { index: usize, value: f64 },

    #[error("expected {expected} channel entries, got {got}")]
    ChannelArity { expected: usize, got: usize },

    #[error("cannot parse channel entry {index}: {text:?}")]
    ChannelParse { index: usize, text: String },

    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid probability vector: {0}")]
    ProbVector(String),

    #[error("function evaluated to {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("envelope grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),

    #[error("second derivative has a pole at q = {0}")]
    Pole(f64),

    #[error("certificate {certificate} disagrees with optimum {value} (|diff| = {diff:e})")]
    Certification { value: f64, certificate: f64, diff: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
