//! Self-contained special functions, quantiles, root finding, and the
//! seeded generator used across the crate. No numerical dependencies; the
//! only external piece is the ChaCha12 stream cipher backing [`RssRng`].

mod rng;
mod roots;
mod special;

pub use rng::{derive_seed, RssRng};
pub use roots::{find_root, RootBracket};
pub use special::{
    beta_half_cdf, binomial_tail, chisq1_sf, normal_cdf, normal_quantile, t_cdf, t_quantile,
};

pub(crate) use special::inv_norm;

/// Errors from the numerical kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("degrees of freedom must be positive, got {0}")]
    NonPositiveDf(f64),
    #[error("argument must be non-negative, got {0}")]
    NegativeArgument(f64),
    #[error("binomial tail needs k <= n, got k={k}, n={n}")]
    TailIndexOutOfRange { k: usize, n: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutsideClosedRange(f64),
    #[error("rank {rank} outside 1..={set_size}")]
    RankOutOfRange { rank: usize, set_size: usize },
    #[error("no sign change on [{lo}, {hi}] (f(lo)={flo:e}, f(hi)={fhi:e})")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("root finding did not converge within {0} iterations")]
    MaxIterationsExceeded(usize),
    #[error("bracket endpoints must be finite and ordered, got [{0}, {1}]")]
    BadBracket(f64, f64),
}
