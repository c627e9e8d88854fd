//! Empirical likelihood ratio test for the mean. Record masses p_{h,r}
//! maximize the log empirical likelihood subject to a fixed mass of 1/H
//! per stratum and a mean constraint sum p_{h,r} y_{h,r} = mu0. The
//! optimum has the closed form p_{h,r} = 1/(H n_h + lambda (y - mu0) - nu_h)
//! with one global multiplier lambda and one per-stratum multiplier nu_h,
//! so the solve nests a per-stratum Newton inside a one-dimensional root
//! find over lambda. Twice the log-likelihood drop is asymptotically
//! chi-squared with one degree of freedom.

use super::{check_alpha, complete_parts, InferError};
use crate::model::{Alternative, Kind, Method, RssDataset, TestResult};
use crate::numerics::{chisq1_sf, find_root, inv_norm, RootBracket};

/// Solved profile at one hypothesized mean: the record masses and the
/// multipliers that produced them. Returned so callers can audit the
/// constraints; absent when the hypothesis is infeasible.
#[derive(Debug, Clone)]
pub struct ElrProfile {
    pub mu0: f64,
    pub neg2_log_lr: f64,
    /// Masses grouped by stratum, in record order within each.
    pub weights: Vec<Vec<f64>>,
    /// Per-stratum multipliers nu_h in the denominator form above.
    pub stratum_multipliers: Vec<f64>,
    /// Global mean-constraint multiplier.
    pub lambda: f64,
}

/// Tests `mu0` against the empirical likelihood calibrated by chi-squared
/// with 1 df. A `mu0` outside the open interval
/// ((1/H) sum_h min_r y, (1/H) sum_h max_r y) cannot be reached by any
/// admissible weights: the statistic is reported as infinite with p = 0
/// and no profile. The interval inverts the statistic at `alpha` by
/// bisection from the point estimate outward.
pub fn rss_elr_test(
    data: &RssDataset,
    mu0: f64,
    alpha: f64,
) -> Result<(TestResult, Option<ElrProfile>), InferError> {
    check_alpha(alpha)?;
    if !mu0.is_finite() {
        return Err(InferError::InvalidNull(format!("mu0 must be finite, got {mu0}")));
    }
    let parts = complete_parts(data, Kind::Continuous)?;
    let set_size = parts.len() as f64;
    let mu_hat = parts
        .iter()
        .map(|ys| ys.iter().sum::<f64>() / ys.len() as f64)
        .sum::<f64>()
        / set_size;
    let solution = solve_profile(&parts, mu0)?;
    let quantile = inv_norm(1.0 - alpha / 2.0);
    let (ci_lower, ci_upper) = invert_interval(&parts, mu_hat, quantile * quantile);
    let (statistic, p_value, profile) = match solution {
        Some(sol) => {
            let p = chisq1_sf(sol.neg2_log_lr).expect("statistic is non-negative");
            (sol.neg2_log_lr, p, Some(sol.into_profile(mu0)))
        }
        None => (f64::INFINITY, 0.0, None),
    };
    Ok((
        TestResult {
            estimate: mu_hat,
            ci_lower,
            ci_upper,
            statistic,
            df: Some(1.0),
            p_value,
            method: Method::Elr,
            alpha,
            alternative: Alternative::TwoSided,
        },
        profile,
    ))
}

struct Solution {
    neg2_log_lr: f64,
    weights: Vec<Vec<f64>>,
    nus: Vec<f64>,
    lambda: f64,
}

impl Solution {
    fn into_profile(self, mu0: f64) -> ElrProfile {
        ElrProfile {
            mu0,
            neg2_log_lr: self.neg2_log_lr,
            weights: self.weights,
            stratum_multipliers: self.nus,
            lambda: self.lambda,
        }
    }
}

fn feasibility_bounds(parts: &[Vec<f64>]) -> (f64, f64) {
    let set_size = parts.len() as f64;
    let lo = parts
        .iter()
        .map(|ys| ys.iter().cloned().fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / set_size;
    let hi = parts
        .iter()
        .map(|ys| ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / set_size;
    (lo, hi)
}

/// Profile solve at one hypothesis. `Ok(None)` means mu0 is outside the
/// open feasibility interval.
fn solve_profile(parts: &[Vec<f64>], mu0: f64) -> Result<Option<Solution>, InferError> {
    let set_size = parts.len();
    let h_f = set_size as f64;
    // Work with y centered at the hypothesis; the mean constraint becomes
    // sum p z = 0 and the multipliers stay well scaled.
    let centered: Vec<Vec<f64>> = parts
        .iter()
        .map(|ys| ys.iter().map(|y| y - mu0).collect())
        .collect();
    let mu_hat_centered = centered
        .iter()
        .map(|zs| zs.iter().sum::<f64>() / zs.len() as f64)
        .sum::<f64>()
        / h_f;

    let uniform = || {
        let weights: Vec<Vec<f64>> = parts
            .iter()
            .map(|ys| vec![1.0 / (h_f * ys.len() as f64); ys.len()])
            .collect();
        Solution { neg2_log_lr: 0.0, weights, nus: vec![0.0; set_size], lambda: 0.0 }
    };
    if mu_hat_centered == 0.0 {
        return Ok(Some(uniform()));
    }
    let (lo, hi) = feasibility_bounds(&centered);
    if !(lo < 0.0 && hi > 0.0) {
        return Ok(None);
    }

    // Residual mean under the profile weights at a given lambda; strictly
    // decreasing, positive at 0 iff mu_hat > mu0.
    let spread = centered
        .iter()
        .flat_map(|zs| zs.iter())
        .fold(0.0f64, |a, &z| a.max(z.abs()));
    let lambda_cap = 1e12 / (1.0 + spread);
    let residual = |lambda: f64| -> Result<f64, InferError> {
        let mut total = 0.0;
        for zs in &centered {
            let nu = stratum_multiplier(zs, set_size, lambda)?;
            for &z in zs {
                total += z / (h_f * zs.len() as f64 + lambda * z - nu);
            }
        }
        Ok(total)
    };

    let at_zero = residual(0.0)?;
    let (bracket_lo, bracket_hi) = if at_zero > 0.0 {
        let mut prev = 0.0;
        let mut cand = 1.0;
        while residual(cand)? > 0.0 {
            prev = cand;
            cand *= 2.0;
            if cand > lambda_cap {
                return Err(InferError::NonConvergent(format!(
                    "mean multiplier exceeded {lambda_cap:e}; mu0 = {mu0} sits too close \
                     to the feasibility boundary"
                )));
            }
        }
        (prev, cand)
    } else {
        let mut prev = 0.0;
        let mut cand = -1.0;
        while residual(cand)? < 0.0 {
            prev = cand;
            cand *= 2.0;
            if cand < -lambda_cap {
                return Err(InferError::NonConvergent(format!(
                    "mean multiplier exceeded {lambda_cap:e}; mu0 = {mu0} sits too close \
                     to the feasibility boundary"
                )));
            }
        }
        (cand, prev)
    };
    let mut residual_err = None;
    let lambda = find_root(
        |l| match residual(l) {
            Ok(v) => v,
            Err(e) => {
                residual_err = Some(e);
                f64::NAN
            }
        },
        RootBracket::new(bracket_lo, bracket_hi).with_tol(1e-12),
    )
    .map_err(|e| residual_err.take().unwrap_or_else(|| e.into()))?;

    let mut weights = Vec::with_capacity(set_size);
    let mut nus = Vec::with_capacity(set_size);
    let mut stat = 0.0;
    for zs in &centered {
        let nu = stratum_multiplier(zs, set_size, lambda)?;
        let base = h_f * zs.len() as f64;
        let ws: Vec<f64> = zs.iter().map(|&z| 1.0 / (base + lambda * z - nu)).collect();
        for &z in zs {
            stat += 2.0 * ((lambda * z - nu) / base).ln_1p();
        }
        weights.push(ws);
        nus.push(nu);
    }
    Ok(Some(Solution { neg2_log_lr: stat.max(0.0), weights, nus, lambda }))
}

/// Solves the per-stratum mass constraint sum_r 1/(H n + lambda z_r - nu)
/// = 1/H for nu. The left side is increasing and convex in nu on
/// (-inf, min denominator zero), so a Newton descent from the steep side
/// converges monotonically; the residual of this equation is exactly the
/// stratum's mass error.
fn stratum_multiplier(zs: &[f64], set_size: usize, lambda: f64) -> Result<f64, InferError> {
    let h_f = set_size as f64;
    let n = zs.len() as f64;
    let base = h_f * n;
    let b_min = zs.iter().map(|&z| base + lambda * z).fold(f64::INFINITY, f64::min);
    let target = 1.0 / h_f;
    let eval = |nu: f64| -> (f64, f64) {
        let mut f = -target;
        let mut fp = 0.0;
        for &z in zs {
            let d = base + lambda * z - nu;
            f += 1.0 / d;
            fp += 1.0 / (d * d);
        }
        (f, fp)
    };
    // At nu = b_min - H n every term is at most 1/(H n), so f <= 0 with
    // equality only when the stratum is constant.
    let floor = b_min - base;
    let (f_floor, _) = eval(floor);
    if f_floor.abs() <= 1e-13 {
        return Ok(floor);
    }
    if !f_floor.is_finite() || f_floor > 0.0 {
        return Err(InferError::NonConvergent(format!(
            "stratum mass equation ill-posed at lambda = {lambda}"
        )));
    }
    let mut gap = base * 0.5;
    let mut nu = b_min - gap;
    for _ in 0..200 {
        let (f, _) = eval(nu);
        if f > 0.0 {
            break;
        }
        gap *= 0.5;
        nu = b_min - gap;
    }
    for _ in 0..200 {
        let (f, fp) = eval(nu);
        if !f.is_finite() || !fp.is_finite() {
            return Err(InferError::NonConvergent(format!(
                "stratum mass equation diverged at lambda = {lambda}"
            )));
        }
        if f.abs() <= 1e-13 {
            return Ok(nu);
        }
        let mut next = nu - f / fp;
        if !(next < b_min) {
            // A negative-f start can overshoot the domain; damp toward it.
            next = 0.5 * (nu + b_min);
        }
        if next == nu {
            // Stalled at float resolution; accept the best available point.
            return Ok(nu);
        }
        nu = next;
    }
    Err(InferError::NonConvergent(format!(
        "stratum mass equation did not converge at lambda = {lambda}"
    )))
}

/// Confidence bounds: the hypotheses whose statistic stays at or below
/// `threshold`, found by bisection between the point estimate and each
/// feasibility boundary. Hypotheses where the solve breaks down sit
/// essentially on the boundary and count as rejected.
fn invert_interval(parts: &[Vec<f64>], mu_hat: f64, threshold: f64) -> (f64, f64) {
    let (feas_lo, feas_hi) = feasibility_bounds(parts);
    if feas_lo == feas_hi {
        return (mu_hat, mu_hat);
    }
    let stat_at = |mu: f64| -> f64 {
        match solve_profile(parts, mu) {
            Ok(Some(sol)) => sol.neg2_log_lr,
            Ok(None) | Err(_) => f64::INFINITY,
        }
    };
    let endpoint = |boundary: f64| -> f64 {
        // March toward the boundary until the statistic crosses the
        // threshold, then bisect the crossing down to 1e-8 in mu.
        let mut gap = (mu_hat - boundary) * 0.5;
        let mut outside = boundary;
        let mut found = false;
        for _ in 0..80 {
            let probe = boundary + gap;
            if stat_at(probe) > threshold {
                outside = probe;
                found = true;
                break;
            }
            gap *= 0.5;
        }
        if !found {
            return boundary;
        }
        let mut rejected = outside;
        let mut accepted = mu_hat;
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
    (endpoint(feas_lo), endpoint(feas_hi))
}
