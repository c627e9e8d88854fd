//! Distribution-free median test. A unit that ranked h-th in its set of H
//! sits at or below the true median with probability
//! beta_h = P(Bin(H, 1/2) >= h), so under the null S+ = #{y > median0} has
//! mean sum n_h (1 - beta_h) and variance sum n_h beta_h (1 - beta_h).
//! That one statistic covers balanced and unbalanced designs; for balanced
//! ones it reduces to the classical form with variance n * eta^2 / 4.

use super::{check_alpha, InferError};
use crate::model::{Alternative, Kind, Method, RssDataset, TestResult};
use crate::numerics::{beta_half_cdf, inv_norm, normal_cdf};

/// Balanced-design variance deflation factor
/// eta^2 = 1 - (4/H) sum_h (beta_h - 1/2)^2. Equals 1 for H = 1 and
/// shrinks as ranking information accumulates.
pub fn sign_eta_sq(set_size: usize) -> f64 {
    assert!(set_size >= 1, "set size must be at least 1");
    let h = set_size as f64;
    let mut sq = 0.0;
    for rank in 1..=set_size {
        let beta = beta_half_cdf(rank, set_size).expect("rank in range");
        sq += (beta - 0.5) * (beta - 0.5);
    }
    // Multiply before dividing so dyadic sums stay exact where they can.
    1.0 - 4.0 * sq / h
}

/// Sign test of the population median. Ties with `median0` are dropped
/// from the statistic; the point estimate is the pooled sample median and
/// the interval collects the order statistics whose induced two-sided p
/// exceeds alpha.
pub fn rss_sign_test(
    data: &RssDataset,
    median0: f64,
    alpha: f64,
    alternative: Alternative,
) -> Result<TestResult, InferError> {
    check_alpha(alpha)?;
    if data.kind() != Kind::Continuous {
        return Err(InferError::WrongKind {
            expected: Kind::Continuous.as_str(),
            found: data.kind().as_str(),
        });
    }
    if !data.is_complete() {
        return Err(InferError::MissingOutcome);
    }
    let set_size = data.set_size();
    let betas: Vec<f64> = (1..=set_size)
        .map(|h| beta_half_cdf(h, set_size).expect("rank in range"))
        .collect();

    // Empty strata are fine here: they contribute nothing to either moment.
    let mut s_plus = 0usize;
    let mut test_counts = vec![0usize; set_size];
    let mut full_counts = vec![0usize; set_size];
    let mut pooled = Vec::with_capacity(data.len());
    for rec in data.records() {
        let y = rec.y.expect("completeness checked");
        pooled.push(y);
        full_counts[rec.rank - 1] += 1;
        if y > median0 {
            s_plus += 1;
        }
        if y != median0 {
            test_counts[rec.rank - 1] += 1;
        }
    }
    if test_counts.iter().all(|&n| n == 0) {
        return Err(InferError::AllValuesEqualNull);
    }

    let (center, var) = moments(&test_counts, &betas);
    let statistic = (s_plus as f64 - center) / var.sqrt();
    let p_value = match alternative {
        Alternative::TwoSided => 2.0 * (1.0 - normal_cdf(statistic.abs())),
        Alternative::Less => normal_cdf(statistic),
        Alternative::Greater => 1.0 - normal_cdf(statistic),
    };

    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let estimate = median_of_sorted(&pooled);
    let (ci_lower, ci_upper) =
        order_statistic_interval(&pooled, &full_counts, &betas, alpha, alternative);

    Ok(TestResult {
        estimate,
        ci_lower,
        ci_upper,
        statistic,
        df: None,
        p_value,
        method: Method::Sign,
        alpha,
        alternative,
    })
}

fn moments(counts: &[usize], betas: &[f64]) -> (f64, f64) {
    let mut center = 0.0;
    let mut var = 0.0;
    for (&n, &beta) in counts.iter().zip(betas) {
        center += n as f64 * (1.0 - beta);
        var += n as f64 * beta * (1.0 - beta);
    }
    (center, var)
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Inverts the sign statistic over the pooled order statistics: a
/// hypothesized median between adjacent order statistics induces a fixed
/// S+ count, and the interval keeps exactly the counts inside the normal
/// acceptance band. Indices are clamped to the observed range.
fn order_statistic_interval(
    sorted: &[f64],
    full_counts: &[usize],
    betas: &[f64],
    alpha: f64,
    alternative: Alternative,
) -> (f64, f64) {
    let n = sorted.len();
    let (center, var) = moments(full_counts, betas);
    let sd = var.sqrt();
    let at = |index: i64| sorted[index.clamp(1, n as i64) as usize - 1];
    match alternative {
        Alternative::TwoSided => {
            let half = inv_norm(1.0 - alpha / 2.0) * sd;
            let mut s_max = (center + half).floor() as i64;
            let mut s_min = (center - half).ceil() as i64;
            if s_min > s_max {
                s_min = center.round() as i64;
                s_max = s_min;
            }
            (at(n as i64 - s_max), at(n as i64 - s_min + 1))
        }
        Alternative::Less => {
            let s_min = (center - inv_norm(1.0 - alpha) * sd).ceil() as i64;
            (f64::NEG_INFINITY, at(n as i64 - s_min + 1))
        }
        Alternative::Greater => {
            let s_max = (center + inv_norm(1.0 - alpha) * sd).floor() as i64;
            (at(n as i64 - s_max), f64::INFINITY)
        }
    }
}
