//! Proportion inference for binary designs. The estimator averages the
//! stratum success proportions, which is unbiased because the rank-wise
//! success probabilities p_h = P(Bin(H, p) >= H-h+1) sum to H*p. The
//! variance plugs the model-implied p_h at the pooled estimate back in,
//! for the statistic and the interval alike.

use super::{check_alpha, complete_parts, InferError};
use crate::model::{Alternative, Kind, Method, RssDataset, TestResult};
use crate::numerics::{binomial_tail, inv_norm, normal_cdf};

/// Pooled proportion estimate (1/H) sum_h (successes_h / n_h).
pub fn proportion_estimate(data: &RssDataset) -> Result<f64, InferError> {
    let parts = complete_parts(data, Kind::Binary)?;
    Ok(stratum_proportions(&parts).iter().sum::<f64>() / parts.len() as f64)
}

fn stratum_proportions(parts: &[Vec<f64>]) -> Vec<f64> {
    parts
        .iter()
        .map(|ys| ys.iter().sum::<f64>() / ys.len() as f64)
        .collect()
}

/// Wald test of the pooled proportion against `p0`. A unit ranked h-th out
/// of H is a success exactly when at least H-h+1 of its set are, so the
/// plug-in stratum probabilities are binomial tails at the pooled estimate.
pub fn rss_prop_test(
    data: &RssDataset,
    p0: f64,
    alpha: f64,
    alternative: Alternative,
) -> Result<TestResult, InferError> {
    check_alpha(alpha)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(InferError::InvalidNull(format!(
            "p0 must be in (0, 1), got {p0}"
        )));
    }
    let parts = complete_parts(data, Kind::Binary)?;
    let set_size = parts.len();
    let p_hat = stratum_proportions(&parts).iter().sum::<f64>() / set_size as f64;
    if p_hat == 0.0 || p_hat == 1.0 {
        return Err(InferError::DegenerateProportion { estimate: p_hat });
    }
    let mut var = 0.0;
    for (i, ys) in parts.iter().enumerate() {
        let tail = set_size - i; // H - h + 1 for h = i + 1
        let p_h = binomial_tail(set_size, tail, p_hat).expect("tail index in range");
        var += p_h * (1.0 - p_h) / ys.len() as f64;
    }
    var /= (set_size * set_size) as f64;
    let se = var.sqrt();
    let statistic = (p_hat - p0) / se;
    let p_value = match alternative {
        Alternative::TwoSided => 2.0 * (1.0 - normal_cdf(statistic.abs())),
        Alternative::Less => normal_cdf(statistic),
        Alternative::Greater => 1.0 - normal_cdf(statistic),
    };
    let (ci_lower, ci_upper) = match alternative {
        Alternative::TwoSided => {
            let q = inv_norm(1.0 - alpha / 2.0);
            (p_hat - q * se, p_hat + q * se)
        }
        Alternative::Less => (f64::NEG_INFINITY, p_hat + inv_norm(1.0 - alpha) * se),
        Alternative::Greater => (p_hat - inv_norm(1.0 - alpha) * se, f64::INFINITY),
    };
    Ok(TestResult {
        estimate: p_hat,
        ci_lower,
        ci_upper,
        statistic,
        df: None,
        p_value,
        method: Method::Prop,
        alpha,
        alternative,
    })
}
