use thiserror::Error;

use crate::rng::RandomSeed;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{x} is outside the support of {law}")]
    OutOfSupport { x: f64, law: &'static str },

    #[error("degenerate distribution: differential entropy is negative infinity")]
    NegativeInfiniteEntropy,

    #[error("log loss is infinite: the forecast assigns zero density to outcome {outcome}")]
    InfiniteLoss { outcome: f64 },

    #[error("action does not match the action space of {loss}")]
    ActionMismatch { loss: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no enumeration is available for this predictive; use eur_monte_carlo")]
    NotEnumerable,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(
        "particle weights degenerated on day {day} (effective sample size {ess:.2} of {particles}); \
         increase the number of particles"
    )]
    Degenerate {
        day: usize,
        ess: f64,
        particles: usize,
    },

    #[error("refit failed: {0}")]
    Refit(#[source] Box<Error>),

    #[error("replicate with seed {seed} failed: {source}")]
    Replicate {
        seed: RandomSeed,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Strips refit/replicate context and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Refit(inner) => inner.root(),
            Error::Replicate { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors raised by numerical degeneracy rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Degenerate { .. } | Error::NegativeInfiniteEntropy | Error::InfiniteLoss { .. }
        )
    }
}
