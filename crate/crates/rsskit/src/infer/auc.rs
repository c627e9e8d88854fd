//! Two-sample AUC inference. The estimate is a Mann-Whitney kernel mean
//! that weights every stratum pair equally, so unbalanced designs do not
//! tilt it. The test forms leave-one-out jackknife pseudo-values of that
//! estimate and runs a one-sample empirical likelihood on them, calibrated
//! by chi-squared with one degree of freedom.

use super::{check_alpha, complete_parts, InferError};
use crate::model::{Alternative, Kind, Method, RssDataset, TestResult};
use crate::numerics::{chisq1_sf, find_root, inv_norm, RootBracket};

fn psi(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// P(Y2 > Y1) estimated as the average over stratum pairs of the within-
/// pair Mann-Whitney proportion, ties counting one half.
pub fn rss_auc_estimate(data1: &RssDataset, data2: &RssDataset) -> Result<f64, InferError> {
    let parts1 = complete_parts(data1, Kind::Continuous)?;
    let parts2 = complete_parts(data2, Kind::Continuous)?;
    let mut total = 0.0;
    for ys1 in &parts1 {
        for ys2 in &parts2 {
            let mut kernel = 0.0;
            for &a in ys1 {
                for &b in ys2 {
                    kernel += psi(b - a);
                }
            }
            total += kernel / (ys1.len() * ys2.len()) as f64;
        }
    }
    Ok(total / (parts1.len() * parts2.len()) as f64)
}

/// Empirical likelihood test of the AUC against `delta0` on the jackknife
/// pseudo-values. A `delta0` outside their convex hull is unreachable and
/// reports an infinite statistic with p = 0. The interval inverts the
/// statistic over (0, 1) and is clamped to that range.
pub fn rss_auc_test(
    data1: &RssDataset,
    data2: &RssDataset,
    delta0: f64,
    alpha: f64,
) -> Result<TestResult, InferError> {
    check_alpha(alpha)?;
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(InferError::InvalidNull(format!(
            "delta0 must be in (0, 1), got {delta0}"
        )));
    }
    let parts1 = complete_parts(data1, Kind::Continuous)?;
    let parts2 = complete_parts(data2, Kind::Continuous)?;
    let n_total: usize = parts1.iter().chain(&parts2).map(Vec::len).sum();
    if n_total < 4 {
        return Err(InferError::TooFewObservations { needed: 4, found: n_total });
    }
    for (sample, parts) in [(1usize, &parts1), (2usize, &parts2)] {
        if let Some(rank) = parts.iter().position(|p| p.len() < 2) {
            return Err(InferError::StratumTooSmallForJackknife {
                sample,
                rank: rank + 1,
                count: parts[rank].len(),
            });
        }
    }

    let pseudo = pseudo_values(&parts1, &parts2);
    let delta_hat = pseudo.delta_hat;
    let values = pseudo.values;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(InferError::DegeneratePseudoValues);
    }

    let statistic = owen_statistic(&values, delta0).unwrap_or(f64::INFINITY);
    let p_value = if statistic.is_finite() {
        chisq1_sf(statistic).expect("statistic is non-negative")
    } else {
        0.0
    };
    let quantile = inv_norm(1.0 - alpha / 2.0);
    let (ci_lower, ci_upper) = invert_interval(&values, quantile * quantile);

    Ok(TestResult {
        estimate: delta_hat,
        ci_lower,
        ci_upper,
        statistic,
        df: Some(1.0),
        p_value,
        method: Method::Auc,
        alpha,
        alternative: Alternative::TwoSided,
    })
}

struct PseudoValues {
    delta_hat: f64,
    values: Vec<f64>,
}

/// Leave-one-out pseudo-values N d - (N-1) d_minus for every record of
/// both samples. Removing a record only perturbs its own stratum's kernel
/// row, so per-record partial sums make each recomputation O(H).
fn pseudo_values(parts1: &[Vec<f64>], parts2: &[Vec<f64>]) -> PseudoValues {
    let h1 = parts1.len();
    let h2 = parts2.len();
    let mut kernel = vec![vec![0.0f64; h2]; h1];
    // rows[g][r][h]: kernel mass of record r of sample-1 stratum g against
    // sample-2 stratum h; cols mirrors it for sample 2.
    let mut rows: Vec<Vec<Vec<f64>>> =
        parts1.iter().map(|ys| vec![vec![0.0; h2]; ys.len()]).collect();
    let mut cols: Vec<Vec<Vec<f64>>> =
        parts2.iter().map(|ys| vec![vec![0.0; h1]; ys.len()]).collect();
    for (g, ys1) in parts1.iter().enumerate() {
        for (h, ys2) in parts2.iter().enumerate() {
            for (r, &a) in ys1.iter().enumerate() {
                for (s, &b) in ys2.iter().enumerate() {
                    let k = psi(b - a);
                    kernel[g][h] += k;
                    rows[g][r][h] += k;
                    cols[h][s][g] += k;
                }
            }
        }
    }

    let pairs = (h1 * h2) as f64;
    let mut weighted = 0.0;
    for (g, ys1) in parts1.iter().enumerate() {
        for (h, ys2) in parts2.iter().enumerate() {
            weighted += kernel[g][h] / (ys1.len() * ys2.len()) as f64;
        }
    }
    let delta_hat = weighted / pairs;

    let n_total: usize = parts1.iter().chain(parts2).map(Vec::len).sum();
    let n_f = n_total as f64;
    let mut values = Vec::with_capacity(n_total);
    for (g, ys1) in parts1.iter().enumerate() {
        let n_g = ys1.len() as f64;
        for row in &rows[g] {
            let mut adjusted = weighted;
            for (h, ys2) in parts2.iter().enumerate() {
                let m_h = ys2.len() as f64;
                adjusted -= kernel[g][h] / (n_g * m_h);
                adjusted += (kernel[g][h] - row[h]) / ((n_g - 1.0) * m_h);
            }
            values.push(n_f * delta_hat - (n_f - 1.0) * adjusted / pairs);
        }
    }
    for (h, ys2) in parts2.iter().enumerate() {
        let m_h = ys2.len() as f64;
        for col in &cols[h] {
            let mut adjusted = weighted;
            for (g, ys1) in parts1.iter().enumerate() {
                let n_g = ys1.len() as f64;
                adjusted -= kernel[g][h] / (n_g * m_h);
                adjusted += (kernel[g][h] - col[g]) / (n_g * (m_h - 1.0));
            }
            values.push(n_f * delta_hat - (n_f - 1.0) * adjusted / pairs);
        }
    }
    PseudoValues { delta_hat, values }
}

/// Owen's one-sample empirical likelihood statistic for the mean of
/// `values` at `mu`: -2 log LR = 2 sum ln(1 + t (v - mu)) at the
/// multiplier t solving sum (v - mu)/(1 + t (v - mu)) = 0. `None` when mu
/// is not strictly inside the convex hull.
fn owen_statistic(values: &[f64], mu: f64) -> Option<f64> {
    let d: Vec<f64> = values.iter().map(|v| v - mu).collect();
    let d_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let d_max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(d_min < 0.0 && d_max > 0.0) {
        return None;
    }
    let g = |t: f64| d.iter().map(|&di| di / (1.0 + t * di)).sum::<f64>();
    let at_zero = g(0.0);
    let t = if at_zero == 0.0 {
        0.0
    } else {
        // g is strictly decreasing on the open domain (-1/d_max, -1/d_min)
        // and diverges at the ends, so march toward the relevant end until
        // the sign flips.
        let boundary = if at_zero > 0.0 { -1.0 / d_min } else { -1.0 / d_max };
        let mut probe = boundary * 0.5;
        let mut guard = 0;
        while g(probe).signum() == at_zero.signum() {
            probe = 0.5 * (probe + boundary);
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
        let (lo, hi) = if at_zero > 0.0 { (0.0, probe) } else { (probe, 0.0) };
        find_root(g, RootBracket::new(lo, hi).with_tol(1e-12)).ok()?
    };
    let stat = 2.0 * d.iter().map(|&di| (t * di).ln_1p()).sum::<f64>();
    Some(stat.max(0.0))
}

/// AUC values whose statistic stays at or below `threshold`, bracketed by
/// bisection from the pseudo-value mean toward each hull boundary and
/// clamped to [0, 1].
fn invert_interval(values: &[f64], threshold: f64) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let stat_at = |mu: f64| owen_statistic(values, mu).unwrap_or(f64::INFINITY);
    let endpoint = |boundary: f64| -> f64 {
        let mut gap = (mean - boundary) * 0.5;
        let mut rejected = boundary;
        let mut found = false;
        for _ in 0..80 {
            let probe = boundary + gap;
            if stat_at(probe) > threshold {
                rejected = probe;
                found = true;
                break;
            }
            gap *= 0.5;
        }
        if !found {
            return boundary;
        }
        let mut accepted = mean;
        while (rejected - accepted).abs() > 1e-8 {
            let mid = 0.5 * (rejected + accepted);
            if mid == rejected || mid == accepted {
                break;
            }
            if stat_at(mid) > threshold {
                rejected = mid;
            } else {
                accepted = mid;
            }
        }
        0.5 * (rejected + accepted)
    };
    let raw = (endpoint(lo), endpoint(hi));
    let clamped = (raw.0.clamp(0.0, 1.0), raw.1.clamp(0.0, 1.0));
    if clamped.0 > clamped.1 {
        let collapse = mean.clamp(0.0, 1.0);
        (collapse, collapse)
    } else {
        clamped
    }
}
