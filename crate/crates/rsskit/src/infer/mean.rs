//! Rank-stratified mean estimation and the normal/t pivot tests built on
//! it. The point estimate averages the stratum means with equal weight
//! 1/H, so it stays unbiased under unbalanced designs; its variance is
//! (1/H^2) * sum_h s_h^2 / n_h.

use super::{check_alpha, complete_parts, InferError};
use crate::model::{Allocation, Alternative, Kind, Method, RssDataset, TestResult};
use crate::numerics::{inv_norm, normal_cdf, t_cdf, t_quantile};

/// Stratified mean estimate with its variance pieces. The variance parts
/// are `None` whenever some stratum holds a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSummary {
    pub mu_hat: f64,
    pub var_hat: Option<f64>,
    pub stratum_means: Vec<f64>,
    pub stratum_vars: Option<Vec<f64>>,
    pub counts: Allocation,
}

/// Degrees-of-freedom rule for [`rss_t_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfMethod {
    /// n - H per sample: each stratum mean spends one degree of freedom.
    Naive,
    /// Welch-Satterthwaite matched to the estimator variance.
    #[default]
    Sample,
}

impl std::str::FromStr for DfMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(DfMethod::Naive),
            "sample" => Ok(DfMethod::Sample),
            other => Err(format!("unknown df method {other:?} (expected naive or sample)")),
        }
    }
}

/// Stratified summary of a complete continuous dataset.
pub fn mean_summary(data: &RssDataset) -> Result<MeanSummary, InferError> {
    let parts = complete_parts(data, Kind::Continuous)?;
    summarize(&parts)
}

fn summarize(parts: &[Vec<f64>]) -> Result<MeanSummary, InferError> {
    let set_size = parts.len() as f64;
    let mut means = Vec::with_capacity(parts.len());
    let mut vars = Vec::with_capacity(parts.len());
    let mut all_pairs = true;
    for ys in parts {
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        means.push(mean);
        if ys.len() < 2 {
            all_pairs = false;
            vars.push(f64::NAN);
        } else {
            let ss: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
            vars.push(ss / (n - 1.0));
        }
    }
    let mu_hat = means.iter().sum::<f64>() / set_size;
    let (var_hat, stratum_vars) = if all_pairs {
        let v = vars
            .iter()
            .zip(parts)
            .map(|(&v, ys)| v / ys.len() as f64)
            .sum::<f64>()
            / (set_size * set_size);
        (Some(v), Some(vars))
    } else {
        (None, None)
    };
    Ok(MeanSummary {
        mu_hat,
        var_hat,
        stratum_means: means,
        stratum_vars,
        counts: Allocation::new(parts.iter().map(Vec::len).collect()),
    })
}

fn variance_or_singleton(parts: &[Vec<f64>], summary: &MeanSummary) -> Result<f64, InferError> {
    match summary.var_hat {
        Some(v) => Ok(v),
        None => {
            let rank = parts.iter().position(|p| p.len() < 2).unwrap() + 1;
            Err(InferError::SingletonStratum { rank })
        }
    }
}

/// p-value of an observed pivot under the reference CDF.
fn p_value(stat: f64, cdf: &dyn Fn(f64) -> f64, alternative: Alternative) -> f64 {
    match alternative {
        Alternative::TwoSided => 2.0 * (1.0 - cdf(stat.abs())),
        Alternative::Less => cdf(stat),
        Alternative::Greater => 1.0 - cdf(stat),
    }
}

/// Confidence bounds around `est` with the untested side left open. The
/// quantile function receives the one-sided coverage it must produce.
fn confidence_interval(
    est: f64,
    se: f64,
    alpha: f64,
    alternative: Alternative,
    quantile: &dyn Fn(f64) -> f64,
) -> (f64, f64) {
    match alternative {
        Alternative::TwoSided => {
            let q = quantile(1.0 - alpha / 2.0);
            (est - q * se, est + q * se)
        }
        Alternative::Less => (f64::NEG_INFINITY, est + quantile(1.0 - alpha) * se),
        Alternative::Greater => (est - quantile(1.0 - alpha) * se, f64::INFINITY),
    }
}

struct Pivot {
    estimate: f64,
    se: f64,
    /// Stratum (count, variance) pairs of every involved sample, with the
    /// sample's set size attached; feeds the Welch df.
    components: Vec<(usize, f64, usize)>,
    /// Records minus strata, summed over samples.
    naive_df: f64,
}

fn pivot(
    data1: &RssDataset,
    data2: Option<&RssDataset>,
) -> Result<Pivot, InferError> {
    let parts1 = complete_parts(data1, Kind::Continuous)?;
    let s1 = summarize(&parts1)?;
    let v1 = variance_or_singleton(&parts1, &s1)?;
    let mut components: Vec<(usize, f64, usize)> = parts1
        .iter()
        .zip(s1.stratum_vars.as_ref().unwrap())
        .map(|(ys, &var)| (ys.len(), var, parts1.len()))
        .collect();
    let mut naive_df = (data1.len() - data1.set_size()) as f64;
    let (estimate, se) = match data2 {
        None => (s1.mu_hat, v1.sqrt()),
        Some(d2) => {
            let parts2 = complete_parts(d2, Kind::Continuous)?;
            let s2 = summarize(&parts2)?;
            let v2 = variance_or_singleton(&parts2, &s2)?;
            components.extend(
                parts2
                    .iter()
                    .zip(s2.stratum_vars.as_ref().unwrap())
                    .map(|(ys, &var)| (ys.len(), var, parts2.len())),
            );
            naive_df += (d2.len() - d2.set_size()) as f64;
            (s1.mu_hat - s2.mu_hat, (v1 + v2).sqrt())
        }
    };
    if se == 0.0 {
        return Err(InferError::ZeroVariance);
    }
    Ok(Pivot { estimate, se, components, naive_df })
}

/// One- or two-sample test of the stratified mean against the normal
/// reference. `mu0` is the hypothesized mean (difference of means when
/// `data2` is given).
pub fn rss_z_test(
    data1: &RssDataset,
    data2: Option<&RssDataset>,
    mu0: f64,
    alpha: f64,
    alternative: Alternative,
) -> Result<TestResult, InferError> {
    check_alpha(alpha)?;
    let piv = pivot(data1, data2)?;
    let statistic = (piv.estimate - mu0) / piv.se;
    let cdf = |x: f64| normal_cdf(x);
    let quantile = |p: f64| inv_norm(p);
    let (ci_lower, ci_upper) =
        confidence_interval(piv.estimate, piv.se, alpha, alternative, &quantile);
    Ok(TestResult {
        estimate: piv.estimate,
        ci_lower,
        ci_upper,
        statistic,
        df: None,
        p_value: p_value(statistic, &cdf, alternative),
        method: Method::Z,
        alpha,
        alternative,
    })
}

/// Same pivot as [`rss_z_test`] but calibrated against a t reference with
/// the chosen degrees-of-freedom rule.
pub fn rss_t_test(
    data1: &RssDataset,
    data2: Option<&RssDataset>,
    mu0: f64,
    alpha: f64,
    alternative: Alternative,
    df_method: DfMethod,
) -> Result<TestResult, InferError> {
    check_alpha(alpha)?;
    let piv = pivot(data1, data2)?;
    let df = match df_method {
        DfMethod::Naive => piv.naive_df,
        DfMethod::Sample => welch_df(&piv.components),
    };
    if !(df > 0.0) {
        return Err(InferError::NonConvergent(format!(
            "degrees of freedom {df} must be positive; add observations"
        )));
    }
    let statistic = (piv.estimate - mu0) / piv.se;
    let cdf = |x: f64| t_cdf(x, df).expect("positive df");
    let quantile = |p: f64| t_quantile(p, df).expect("valid one-sided coverage");
    let (ci_lower, ci_upper) =
        confidence_interval(piv.estimate, piv.se, alpha, alternative, &quantile);
    Ok(TestResult {
        estimate: piv.estimate,
        ci_lower,
        ci_upper,
        statistic,
        df: Some(df),
        p_value: p_value(statistic, &cdf, alternative),
        method: Method::T,
        alpha,
        alternative,
    })
}

/// Welch-Satterthwaite df for the stratified variance: with
/// g_h = s_h^2 / (H^2 n_h), df = (sum g)^2 / sum g^2 / (n_h - 1).
fn welch_df(components: &[(usize, f64, usize)]) -> f64 {
    let mut g_sum = 0.0;
    let mut g_sq = 0.0;
    for &(n, var, set_size) in components {
        let g = var / ((set_size * set_size * n) as f64);
        g_sum += g;
        g_sq += g * g / (n as f64 - 1.0);
    }
    g_sum * g_sum / g_sq
}
