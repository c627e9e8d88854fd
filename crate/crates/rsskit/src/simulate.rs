//! Synthetic ranked set samples under a linear ranking model.
//!
//! Each record of rank h is produced by drawing `H` iid (Y, X) pairs with
//! X = Y + e, where e is normal noise sized so that corr(X, Y) equals the
//! requested `rho`, then keeping the Y whose X is h-th smallest. `rho = 1`
//! is perfect ranking; `rho` near zero makes ranking useless and the result
//! degenerates toward a simple random sample.

use crate::model::{Allocation, Kind, RssDataset, RssRecord};
use crate::numerics::{t_quantile, RssRng};

/// Outcome distributions available to the generators. All are standard
/// shapes; a location shift is applied separately via `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dist {
    /// Standard normal, variance 1.
    Normal,
    /// Student t; variance df/(df-2) requires df > 2.
    T,
    /// Lognormal with meanlog 0, sdlog 1; variance (e-1)e.
    Lognormal,
}

impl Dist {
    pub fn as_str(self) -> &'static str {
        match self {
            Dist::Normal => "normal",
            Dist::T => "t",
            Dist::Lognormal => "lognormal",
        }
    }

    /// Variance of the un-shifted base distribution.
    pub fn base_variance(self, t_df: f64) -> f64 {
        match self {
            Dist::Normal => 1.0,
            Dist::T => t_df / (t_df - 2.0),
            Dist::Lognormal => (std::f64::consts::E - 1.0) * std::f64::consts::E,
        }
    }

    /// One draw from the base distribution. Student t uses the inverse-CDF
    /// transform so the stream stays reproducible.
    pub fn draw(self, rng: &mut RssRng, t_df: f64) -> f64 {
        match self {
            Dist::Normal => rng.standard_normal(),
            Dist::T => t_quantile(rng.open_uniform(), t_df).expect("valid open uniform"),
            Dist::Lognormal => rng.standard_normal().exp(),
        }
    }
}

impl std::str::FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Dist::Normal),
            "t" => Ok(Dist::T),
            "lognormal" => Ok(Dist::Lognormal),
            other => Err(format!("unknown distribution {other:?} (expected normal, t, or lognormal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("rho must be in (0, 1], got {0}")]
    RhoOutOfRange(f64),
    #[error("t degrees of freedom must exceed 2 for a finite variance, got {0}")]
    TDfTooSmall(f64),
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("set size must be at least 2, got {0}")]
    SetSizeTooSmall(usize),
    #[error("allocation has {found} strata but set size is {expected}")]
    AllocationMismatch { expected: usize, found: usize },
    #[error("allocation requests no samples")]
    EmptyAllocation,
    #[error("success probability must be in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Controls one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub set_size: usize,
    pub allocation: Allocation,
    pub dist: Dist,
    /// Target correlation between the outcome and the ranking variable.
    pub rho: f64,
    /// Location shift added to every outcome.
    pub delta: f64,
    /// Degrees of freedom when `dist` is Student t.
    pub t_df: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(set_size: usize, allocation: Allocation, dist: Dist, rho: f64, seed: u64) -> Self {
        SimConfig { set_size, allocation, dist, rho, delta: 0.0, t_df: 3.0, seed }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_t_df(mut self, t_df: f64) -> Self {
        self.t_df = t_df;
        self
    }

    fn check(&self) -> Result<(), SimError> {
        if self.set_size < 2 {
            return Err(SimError::SetSizeTooSmall(self.set_size));
        }
        if self.allocation.set_size() != self.set_size {
            return Err(SimError::AllocationMismatch {
                expected: self.set_size,
                found: self.allocation.set_size(),
            });
        }
        if self.allocation.total() == 0 {
            return Err(SimError::EmptyAllocation);
        }
        if self.dist == Dist::T && self.t_df <= 2.0 {
            return Err(SimError::TDfTooSmall(self.t_df));
        }
        Ok(())
    }
}

/// Ranking-noise variance that delivers corr(X, Y) = rho when X = Y + e:
/// var(e) = var(Y) * (1 - rho^2) / rho^2.
pub fn noise_variance_for_rho(sigma_y_sq: f64, rho: f64) -> Result<f64, SimError> {
    if !(sigma_y_sq > 0.0) {
        return Err(SimError::NonPositiveVariance(sigma_y_sq));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(SimError::RhoOutOfRange(rho));
    }
    Ok(sigma_y_sq * (1.0 - rho * rho) / (rho * rho))
}

/// One internal set of a simulation run: the outcomes in ranking order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetDraw {
    pub rank: usize,
    /// Outcomes of the `H` drawn pairs, ascending by ranking variable.
    pub ranked_ys: Vec<f64>,
    pub measured_y: f64,
}

fn simulate(cfg: &SimConfig) -> Result<(RssDataset, Vec<SimSetDraw>), SimError> {
    cfg.check()?;
    let sigma_eps = noise_variance_for_rho(cfg.dist.base_variance(cfg.t_df), cfg.rho)?.sqrt();
    let mut rng = RssRng::new(cfg.seed);
    let mut records = Vec::with_capacity(cfg.allocation.total());
    let mut sets = Vec::with_capacity(cfg.allocation.total());
    for rank in 1..=cfg.set_size {
        for _ in 0..cfg.allocation.count_for_rank(rank) {
            let mut pairs: Vec<(f64, f64)> = (0..cfg.set_size)
                .map(|_| {
                    let y = cfg.dist.draw(&mut rng, cfg.t_df) + cfg.delta;
                    let x = if sigma_eps > 0.0 {
                        y + sigma_eps * rng.standard_normal()
                    } else {
                        y
                    };
                    (y, x)
                })
                .collect();
            pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let measured_y = pairs[rank - 1].0;
            records.push(RssRecord::new(rank, measured_y));
            sets.push(SimSetDraw {
                rank,
                ranked_ys: pairs.iter().map(|p| p.0).collect(),
                measured_y,
            });
        }
    }
    let data = RssDataset::new(cfg.set_size, Kind::Continuous, records)?;
    Ok((data, sets))
}

/// Generates a ranked set sample under the linear ranking model.
pub fn rss_simulate(cfg: &SimConfig) -> Result<RssDataset, SimError> {
    simulate(cfg).map(|(data, _)| data)
}

/// [`rss_simulate`] plus the internal draws of every set.
pub fn rss_simulate_traced(cfg: &SimConfig) -> Result<(RssDataset, Vec<SimSetDraw>), SimError> {
    simulate(cfg)
}

/// Generates a binary ranked set sample under perfect ranking on the trait.
/// Rather than materializing sets, each rank-h record is a Bernoulli draw
/// with the closed-form selection probability
/// p_h = P(Bin(H, p) >= H - h + 1), the chance that the h-th smallest of
/// H binary values is a success.
pub fn rss_prop_simulate(
    set_size: usize,
    allocation: &Allocation,
    p: f64,
    seed: u64,
) -> Result<RssDataset, SimError> {
    if set_size < 2 {
        return Err(SimError::SetSizeTooSmall(set_size));
    }
    if allocation.set_size() != set_size {
        return Err(SimError::AllocationMismatch {
            expected: set_size,
            found: allocation.set_size(),
        });
    }
    if allocation.total() == 0 {
        return Err(SimError::EmptyAllocation);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    let mut rng = RssRng::new(seed);
    let mut records = Vec::with_capacity(allocation.total());
    for rank in 1..=set_size {
        let p_rank = crate::numerics::binomial_tail(set_size, set_size - rank + 1, p)?;
        for _ in 0..allocation.count_for_rank(rank) {
            let y = f64::from(rng.uniform() < p_rank);
            records.push(RssRecord::new(rank, y));
        }
    }
    Ok(RssDataset::new(set_size, Kind::Binary, records)?)
}
