//! Ranked set sample selection from a finite population.
//!
//! The procedure per measured unit: draw `H` units from the pool without
//! replacement, order them by the cheap ranking variable x, measure the
//! unit sitting at the prescribed rank, and move on. Quotas come from an
//! [`Allocation`]; sampling proceeds in cycles that serve every rank still
//! short of its quota in ascending rank order, so unbalanced designs run
//! incomplete final cycles. Everything is deterministic given the seed and
//! the row order of the frame.

use crate::model::{Allocation, Kind, PopulationFrame, RssDataset, RssRecord};
use crate::numerics::RssRng;

/// What happens to the unmeasured units of a drawn set.
///
/// `DiscardSet` is the field-work default: all `H` drawn units leave the
/// pool, measured or not. `ReturnUnmeasured` puts the `H - 1` unmeasured
/// units back, which stretches small populations further at the price of
/// mild dependence between sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolPolicy {
    #[default]
    DiscardSet,
    ReturnUnmeasured,
}

impl std::str::FromStr for PoolPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discard" => Ok(PoolPolicy::DiscardSet),
            "return" => Ok(PoolPolicy::ReturnUnmeasured),
            other => Err(format!("unknown pool policy {other:?} (expected discard or return)")),
        }
    }
}

/// Controls one sampling run.
#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub set_size: usize,
    pub allocation: Allocation,
    pub pool_policy: PoolPolicy,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(set_size: usize, allocation: Allocation, seed: u64) -> Self {
        SamplingConfig { set_size, allocation, pool_policy: PoolPolicy::default(), seed }
    }

    pub fn with_pool_policy(mut self, policy: PoolPolicy) -> Self {
        self.pool_policy = policy;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("set size must be at least 2, got {0}")]
    SetSizeTooSmall(usize),
    #[error("allocation has {found} strata but set size is {expected}")]
    AllocationMismatch { expected: usize, found: usize },
    #[error("allocation requests no samples")]
    EmptyAllocation,
    #[error("population of {available} cannot supply {needed} units")]
    InfeasiblePopulation { needed: usize, available: usize },
    #[error("pool exhausted in cycle {cycle}: {left} units remain, set needs {set_size}")]
    PoolExhausted { cycle: usize, left: usize, set_size: usize },
    #[error("unit {id:?}: ranking variable must be 0 or 1 for proportion designs, got {value}")]
    NonBinaryAuxiliary { id: String, value: f64 },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// One internal set: the drawn units in ranked order and which was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct SetDraw {
    pub rank: usize,
    /// Ids of the `H` drawn units, ascending by ranking variable.
    pub ranked_ids: Vec<String>,
    /// Ranking variable of each drawn unit, same order as `ranked_ids`.
    pub ranked_x: Vec<f64>,
    pub measured_id: String,
}

/// Full account of a sampling run, for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    pub sets: Vec<SetDraw>,
    /// Ids removed from the pool, in removal order. Under
    /// [`PoolPolicy::DiscardSet`] this is every drawn unit; under
    /// [`PoolPolicy::ReturnUnmeasured`] only the measured ones.
    pub consumed_ids: Vec<String>,
}

fn check_config(pop: &PopulationFrame, cfg: &SamplingConfig) -> Result<(), SamplingError> {
    if cfg.set_size < 2 {
        return Err(SamplingError::SetSizeTooSmall(cfg.set_size));
    }
    if cfg.allocation.set_size() != cfg.set_size {
        return Err(SamplingError::AllocationMismatch {
            expected: cfg.set_size,
            found: cfg.allocation.set_size(),
        });
    }
    let total = cfg.allocation.total();
    if total == 0 {
        return Err(SamplingError::EmptyAllocation);
    }
    let needed = match cfg.pool_policy {
        PoolPolicy::DiscardSet => cfg.set_size * total,
        PoolPolicy::ReturnUnmeasured => cfg.set_size.max(total),
    };
    if pop.len() < needed {
        return Err(SamplingError::InfeasiblePopulation { needed, available: pop.len() });
    }
    Ok(())
}

fn run(
    pop: &PopulationFrame,
    cfg: &SamplingConfig,
    kind: Kind,
) -> Result<(RssDataset, SampleTrace), SamplingError> {
    check_config(pop, cfg)?;
    if kind == Kind::Binary {
        for row in pop.rows() {
            if row.x != 0.0 && row.x != 1.0 {
                return Err(SamplingError::NonBinaryAuxiliary {
                    id: row.id.clone(),
                    value: row.x,
                });
            }
        }
    }

    let h_count = cfg.set_size;
    let mut rng = RssRng::new(cfg.seed);
    let mut pool: Vec<usize> = (0..pop.len()).collect();
    let mut remaining: Vec<usize> = cfg.allocation.counts().to_vec();
    let mut per_rank: Vec<Vec<RssRecord>> = vec![Vec::new(); h_count];
    let mut trace = SampleTrace { sets: Vec::new(), consumed_ids: Vec::new() };
    let frame_y = pop.has_outcomes();

    let mut cycle = 0usize;
    while remaining.iter().any(|&r| r > 0) {
        cycle += 1;
        for rank in 1..=h_count {
            if remaining[rank - 1] == 0 {
                continue;
            }
            if pool.len() < h_count {
                return Err(SamplingError::PoolExhausted {
                    cycle,
                    left: pool.len(),
                    set_size: h_count,
                });
            }
            // Draw H units by a partial shuffle of the pool front.
            for j in 0..h_count {
                let k = j + rng.index(pool.len() - j);
                pool.swap(j, k);
            }
            // Rank by x; a fresh uniform per unit breaks ties, equivalent
            // to ranking x plus infinitesimal noise.
            let mut drawn: Vec<(usize, f64, f64)> = pool[..h_count]
                .iter()
                .map(|&row| (row, pop.rows()[row].x, rng.uniform()))
                .collect();
            drawn.sort_by(|a, b| {
                a.1.partial_cmp(&b.1).unwrap().then(a.2.partial_cmp(&b.2).unwrap())
            });
            let (measured_row, measured_x, _) = drawn[rank - 1];
            let measured = &pop.rows()[measured_row];

            let y = match kind {
                // Proportion designs rank on the binary trait itself, so
                // the measurement is the selected unit's x.
                Kind::Binary => Some(measured_x),
                Kind::Continuous => {
                    if frame_y {
                        measured.y
                    } else {
                        None
                    }
                }
            };
            per_rank[rank - 1].push(RssRecord {
                rank,
                id: Some(measured.id.clone()),
                y,
            });
            trace.sets.push(SetDraw {
                rank,
                ranked_ids: drawn.iter().map(|d| pop.rows()[d.0].id.clone()).collect(),
                ranked_x: drawn.iter().map(|d| d.1).collect(),
                measured_id: measured.id.clone(),
            });

            match cfg.pool_policy {
                PoolPolicy::DiscardSet => {
                    for d in &drawn {
                        trace.consumed_ids.push(pop.rows()[d.0].id.clone());
                    }
                    pool.drain(..h_count);
                }
                PoolPolicy::ReturnUnmeasured => {
                    trace.consumed_ids.push(measured.id.clone());
                    let pos = pool[..h_count]
                        .iter()
                        .position(|&row| row == measured_row)
                        .expect("measured unit comes from the drawn set");
                    pool.remove(pos);
                }
            }
            remaining[rank - 1] -= 1;
        }
    }

    let records: Vec<RssRecord> = per_rank.into_iter().flatten().collect();
    let data = RssDataset::new(h_count, kind, records)?;
    Ok((data, trace))
}

/// Draws a ranked set sample. If the frame carries outcomes the records
/// are measured (missing outcomes stay missing rather than being skipped);
/// otherwise the result is a selection sheet awaiting measurement.
pub fn rss_sample(pop: &PopulationFrame, cfg: &SamplingConfig) -> Result<RssDataset, SamplingError> {
    run(pop, cfg, Kind::Continuous).map(|(data, _)| data)
}

/// [`rss_sample`] plus the per-set draw trace.
pub fn rss_sample_traced(
    pop: &PopulationFrame,
    cfg: &SamplingConfig,
) -> Result<(RssDataset, SampleTrace), SamplingError> {
    run(pop, cfg, Kind::Continuous)
}

/// Ranked set sampling on a binary trait: units are ranked by the 0/1
/// variable itself (ties resolved randomly) and the measurement recorded
/// for each selected unit is that variable.
pub fn rss_prop_sample(
    pop: &PopulationFrame,
    cfg: &SamplingConfig,
) -> Result<RssDataset, SamplingError> {
    run(pop, cfg, Kind::Binary).map(|(data, _)| data)
}

/// [`rss_prop_sample`] plus the per-set draw trace.
pub fn rss_prop_sample_traced(
    pop: &PopulationFrame,
    cfg: &SamplingConfig,
) -> Result<(RssDataset, SampleTrace), SamplingError> {
    run(pop, cfg, Kind::Binary)
}
