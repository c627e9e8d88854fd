//! Sample-size allocation across rank strata.
//!
//! The estimator variance being minimized is
//! (1/H^2) * sum_h s_h^2 / n_h, the variance of the rank-stratified mean.
//! Three integer rules are offered for continuous outcomes: the exact
//! integer Neyman optimum at a fixed total, an adjusted variant that never
//! drops below the counts already in hand, and a "grow until competitive"
//! rule that adds units until the design beats the balanced benchmark and
//! the counts are ordered like the spreads. Binary designs get the
//! real-valued Neyman proportion split.

use crate::model::{
    partition_by_rank, stratum_counts, Allocation, DesignReport, Kind, RssDataset,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocError {
    #[error("stratum {rank} has a zero count but positive spread")]
    ZeroCountWithSpread { rank: usize },
    #[error("allocation length {found} does not match {expected} strata")]
    LengthMismatch { expected: usize, found: usize },
    #[error("total {total} cannot seed {set_size} strata with one unit each")]
    TotalTooSmall { total: usize, set_size: usize },
    #[error("stratum {rank} needs at least 2 measured values to estimate a spread, got {count}")]
    StratumTooSmall { rank: usize, count: usize },
    #[error("proportion estimate {0} is degenerate; Neyman weights are undefined")]
    DegenerateProportion(f64),
    #[error("spread must be finite and non-negative, got {0}")]
    BadSpread(f64),
    #[error("expected a {expected} dataset for this report, got {found}")]
    WrongKind { expected: &'static str, found: &'static str },
    #[error("total must be positive and finite, got {0}")]
    BadTotal(f64),
    #[error(transparent)]
    Infer(#[from] crate::infer::InferError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Per-stratum spread estimates and the counts they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumStats {
    sds: Vec<f64>,
    counts: Allocation,
}

impl StratumStats {
    pub fn new(sds: Vec<f64>, counts: Allocation) -> Result<Self, AllocError> {
        if sds.len() != counts.set_size() {
            return Err(AllocError::LengthMismatch {
                expected: counts.set_size(),
                found: sds.len(),
            });
        }
        for &s in &sds {
            if !s.is_finite() || s < 0.0 {
                return Err(AllocError::BadSpread(s));
            }
        }
        Ok(StratumStats { sds, counts })
    }

    /// Sample standard deviation and count per stratum of a continuous
    /// dataset. Every stratum needs at least two measured values.
    pub fn from_dataset(data: &RssDataset) -> Result<Self, AllocError> {
        if data.kind() != Kind::Continuous {
            return Err(AllocError::WrongKind { expected: "continuous", found: data.kind().as_str() });
        }
        let parts = partition_by_rank(data);
        let mut sds = Vec::with_capacity(parts.len());
        let mut counts = Vec::with_capacity(parts.len());
        for (i, ys) in parts.iter().enumerate() {
            if ys.len() < 2 {
                return Err(AllocError::StratumTooSmall { rank: i + 1, count: ys.len() });
            }
            let n = ys.len() as f64;
            let mean = ys.iter().sum::<f64>() / n;
            let ss: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
            sds.push((ss / (n - 1.0)).sqrt());
            counts.push(ys.len());
        }
        Ok(StratumStats { sds, counts: Allocation::new(counts) })
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    pub fn counts(&self) -> &Allocation {
        &self.counts
    }

    pub fn set_size(&self) -> usize {
        self.sds.len()
    }

    /// True when no stratum shows any spread; the spread-driven rules have
    /// nothing to work with and fall back to balance.
    pub fn degenerate_spread(&self) -> bool {
        self.sds.iter().all(|&s| s == 0.0)
    }
}

/// Variance of the rank-stratified mean under the given allocation:
/// (1/H^2) * sum_h s_h^2 / n_h.
pub fn estimated_variance(stats: &StratumStats, alloc: &Allocation) -> Result<f64, AllocError> {
    if alloc.set_size() != stats.set_size() {
        return Err(AllocError::LengthMismatch {
            expected: stats.set_size(),
            found: alloc.set_size(),
        });
    }
    let h = stats.set_size() as f64;
    let mut sum = 0.0;
    for (i, (&s, &n)) in stats.sds.iter().zip(alloc.counts()).enumerate() {
        if n == 0 {
            if s > 0.0 {
                return Err(AllocError::ZeroCountWithSpread { rank: i + 1 });
            }
            continue; // no spread, no contribution
        }
        sum += s * s / n as f64;
    }
    Ok(sum / (h * h))
}

/// Raw variance sum without the 1/H^2 factor, tolerating zero counts by
/// treating their contribution as infinite. Internal to the greedy rules.
fn variance_sum(sds: &[f64], counts: &[usize]) -> f64 {
    let mut sum = 0.0;
    for (&s, &n) in sds.iter().zip(counts) {
        if n == 0 {
            if s > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        sum += s * s / n as f64;
    }
    sum
}

fn balanced_fill(set_size: usize, total: usize) -> Vec<usize> {
    let base = total / set_size;
    let extra = total % set_size;
    (0..set_size).map(|i| base + usize::from(i < extra)).collect()
}

/// Integer Neyman allocation of `total` units by the priority method: seed
/// every stratum with one unit, then hand out the rest one at a time to the
/// stratum with the largest s_h / sqrt(k_h (k_h + 1)). This greedy order is
/// exactly optimal for the separable convex objective sum s_h^2 / n_h.
/// With no spread anywhere the split is balanced instead.
pub fn integer_neyman(stats: &StratumStats, total: usize) -> Result<Allocation, AllocError> {
    let set_size = stats.set_size();
    if total < set_size {
        return Err(AllocError::TotalTooSmall { total, set_size });
    }
    if stats.degenerate_spread() {
        return Ok(Allocation::new(balanced_fill(set_size, total)));
    }
    let mut counts = vec![1usize; set_size];
    for _ in 0..(total - set_size) {
        let mut best = 0usize;
        let mut best_priority = f64::NEG_INFINITY;
        for (i, &s) in stats.sds.iter().enumerate() {
            let k = counts[i] as f64;
            let priority = s / (k * (k + 1.0)).sqrt();
            if priority > best_priority {
                best_priority = priority;
                best = i;
            }
        }
        counts[best] += 1;
    }
    Ok(Allocation::new(counts))
}

/// Integer Neyman at the original total, floored at the counts already in
/// hand: recommendation_h = max(original_h, neyman_h). Never asks to throw
/// samples away, at the price of possibly raising the total.
pub fn adjusted_neyman(
    original: &Allocation,
    stats: &StratumStats,
) -> Result<Allocation, AllocError> {
    if original.set_size() != stats.set_size() {
        return Err(AllocError::LengthMismatch {
            expected: stats.set_size(),
            found: original.set_size(),
        });
    }
    let neyman = integer_neyman(stats, original.total())?;
    let counts = original
        .counts()
        .iter()
        .zip(neyman.counts())
        .map(|(&o, &n)| o.max(n))
        .collect();
    Ok(Allocation::new(counts))
}

/// Grows the original allocation one unit at a time, always adding where
/// the variance drops most, until the design (a) is at least as efficient
/// as a balanced design of the same total, sum s_h^2/n_h <= (H/N) sum
/// s_h^2, and (b) has counts ordered consistently with the spreads. The
/// result dominates the original componentwise.
pub fn lrc_allocation(
    original: &Allocation,
    stats: &StratumStats,
) -> Result<Allocation, AllocError> {
    if original.set_size() != stats.set_size() {
        return Err(AllocError::LengthMismatch {
            expected: stats.set_size(),
            found: original.set_size(),
        });
    }
    let sds = stats.sds();
    let set_size = sds.len() as f64;
    let sum_sq: f64 = sds.iter().map(|s| s * s).sum();
    let ordered = |counts: &[usize]| {
        for i in 0..counts.len() {
            for j in 0..counts.len() {
                if sds[i] < sds[j] && counts[i] > counts[j] {
                    return false;
                }
            }
        }
        true
    };
    let mut counts = original.counts().to_vec();
    loop {
        let total: usize = counts.iter().sum();
        let efficient = variance_sum(sds, &counts) <= set_size / total as f64 * sum_sq;
        if efficient && ordered(&counts) {
            return Ok(Allocation::new(counts));
        }
        // Largest per-unit variance decrease: s^2 / (n (n+1)), with empty
        // strata (infinite gain) served first.
        let mut best = 0usize;
        let mut best_gain = f64::NEG_INFINITY;
        for (i, &s) in sds.iter().enumerate() {
            let n = counts[i] as f64;
            let gain = if counts[i] == 0 {
                if s > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                s * s / (n * (n + 1.0))
            };
            if gain > best_gain {
                best_gain = gain;
                best = i;
            }
        }
        counts[best] += 1;
    }
}

/// Real-valued Neyman split of `total` units for a binary design with
/// success probability `p_hat`: weights w_h = sqrt(p_h (1 - p_h)) where
/// p_h = P(Bin(H, p_hat) >= H - h + 1) is the rank-h success probability.
pub fn neyman_proportion(
    p_hat: f64,
    set_size: usize,
    total: f64,
) -> Result<Vec<f64>, AllocError> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(AllocError::DegenerateProportion(p_hat));
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(AllocError::BadTotal(total));
    }
    let mut weights = Vec::with_capacity(set_size);
    for rank in 1..=set_size {
        let p_rank = crate::numerics::binomial_tail(set_size, set_size - rank + 1, p_hat)?;
        weights.push((p_rank * (1.0 - p_rank)).sqrt());
    }
    let weight_sum: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| total * w / weight_sum).collect())
}

/// Reviews the allocation behind a dataset. Continuous outcomes get the
/// three integer rules at the observed counts; binary outcomes (with
/// `prop` set) get the real-valued Neyman proportion split at the observed
/// total.
pub fn design_report(data: &RssDataset, prop: bool) -> Result<DesignReport, AllocError> {
    let original = stratum_counts(data);
    if prop {
        if data.kind() != Kind::Binary {
            return Err(AllocError::WrongKind { expected: "binary", found: data.kind().as_str() });
        }
        let p_hat = crate::infer::proportion_estimate(data)?;
        if p_hat <= 0.0 || p_hat >= 1.0 {
            return Err(AllocError::DegenerateProportion(p_hat));
        }
        let rec = neyman_proportion(p_hat, data.set_size(), original.total() as f64)?;
        return Ok(DesignReport {
            original,
            integer_neyman: None,
            adjusted_neyman: None,
            lrc: None,
            neyman_proportion: Some(rec),
            degenerate_spread: false,
        });
    }
    if data.kind() != Kind::Continuous {
        return Err(AllocError::WrongKind { expected: "continuous", found: data.kind().as_str() });
    }
    let stats = StratumStats::from_dataset(data)?;
    let integer = integer_neyman(&stats, original.total())?;
    let adjusted = adjusted_neyman(&original, &stats)?;
    let lrc = lrc_allocation(&original, &stats)?;
    Ok(DesignReport {
        original,
        integer_neyman: Some(integer),
        adjusted_neyman: Some(adjusted),
        lrc: Some(lrc),
        neyman_proportion: None,
        degenerate_spread: stats.degenerate_spread(),
    })
}
