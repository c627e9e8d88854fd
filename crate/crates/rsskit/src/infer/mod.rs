//! Inference that respects rank strata: mean tests (normal, t, empirical
//! likelihood), a distribution-free sign test for the median, a proportion
//! test for binary designs, and two-sample AUC estimation with a jackknife
//! empirical-likelihood test.

mod auc;
mod elr;
mod mean;
mod prop;
mod sign;

pub use auc::{rss_auc_estimate, rss_auc_test};
pub use elr::{rss_elr_test, ElrProfile};
pub use mean::{mean_summary, rss_t_test, rss_z_test, DfMethod, MeanSummary};
pub use prop::{proportion_estimate, rss_prop_test};
pub use sign::{rss_sign_test, sign_eta_sq};

use crate::model::{partition_by_rank, Kind, RssDataset};
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferError {
    #[error("expected a {expected} dataset, got {found}")]
    WrongKind { expected: &'static str, found: &'static str },
    #[error("dataset has missing outcomes; drop or measure them first")]
    MissingOutcome,
    #[error("stratum {rank} has no measured values")]
    EmptyStratum { rank: usize },
    #[error("stratum {rank} has a single value; variance is unavailable")]
    SingletonStratum { rank: usize },
    #[error("alpha must be in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("{0}")]
    InvalidNull(String),
    #[error("pooled variance estimate is zero; the pivot is undefined")]
    ZeroVariance,
    #[error("degenerate proportion estimate {estimate}; variance is zero")]
    DegenerateProportion { estimate: f64 },
    #[error("every observation equals the hypothesized median; nothing to test")]
    AllValuesEqualNull,
    #[error("sample {sample} stratum {rank} has {count} record(s); leave-one-out needs at least 2")]
    StratumTooSmallForJackknife { sample: usize, rank: usize, count: usize },
    #[error("all jackknife pseudo-values are identical; the likelihood is degenerate")]
    DegeneratePseudoValues,
    #[error("need at least {needed} observations, got {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("solver failed to converge: {0}")]
    NonConvergent(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Outcomes grouped by rank after checking kind, completeness, and that no
/// stratum is empty. The workhorse precondition of every test in here.
fn complete_parts(data: &RssDataset, expected: Kind) -> Result<Vec<Vec<f64>>, InferError> {
    if data.kind() != expected {
        return Err(InferError::WrongKind {
            expected: expected.as_str(),
            found: data.kind().as_str(),
        });
    }
    if !data.is_complete() {
        return Err(InferError::MissingOutcome);
    }
    let parts = partition_by_rank(data);
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(InferError::EmptyStratum { rank: i + 1 });
        }
    }
    Ok(parts)
}

fn check_alpha(alpha: f64) -> Result<(), InferError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(InferError::InvalidAlpha(alpha));
    }
    Ok(())
}
