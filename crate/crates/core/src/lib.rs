//! Weighted sum-rate computations for binary clean-Z interference (CZI)
//! channels.
//!
//! The crate evaluates the single-letter Han-Kobayashi maximum of
//! `lambda * R1 + R2` through an upper-concave-envelope formula, the
//! normalized two-letter treating-interference-as-noise rate of the product
//! channel, and the gap between them. The [`appendix`] module carries a
//! closed-form treatment of the channel `[[1, 0.5], [1, 0]]` at `lambda = 2`
//! that certifies the gap without relying on the numeric envelope.

pub mod appendix;
pub mod channel;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod hk;
pub mod infotheory;
pub mod optim;
pub mod search;
pub mod table;
pub mod twoletter;

pub use channel::{CziChannel, TwoLetterChannel};
pub use envelope::{upper_concave_envelope, Envelope, EnvelopeConfig, MixtureSupport};
pub use error::{Error, Result};
pub use hk::{hk_max, tin_max, HkConfig, OptResult, WeightedProblem};
pub use infotheory::{binary_entropy, entropy, rate_terms, ProbVector, RateTerms};
pub use twoletter::{gap, two_letter_max, GapReport, PairDistribution, TwoLetterConfig};
