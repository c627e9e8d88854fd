//! Monte Carlo benchmark harness: repeated designs drawn from a fixed
//! finite population, compared by interval coverage and length.
//!
//! All randomness flows from the config seed through `derive_seed`, one
//! stream per (replicate, stage), so results do not depend on evaluation
//! order and reruns are byte-identical.

use std::collections::HashSet;
use std::path::Path;

use rsskit::allocate::design_report;
use rsskit::infer::{rss_auc_estimate, rss_auc_test, rss_t_test, DfMethod, InferError};
use rsskit::model::{
    Allocation, AllocationRule, Alternative, Kind, PopulationFrame, PopulationRow, RssDataset,
    RssRecord, TestResult,
};
use rsskit::numerics::{derive_seed, RssRng};
use rsskit::sampling::{rss_sample, rss_sample_traced, SamplingConfig};
use rsskit::simulate::Dist;
use serde::Deserialize;

use crate::io::{read_population, BenchRow, Failure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    OneSampleMean,
    TwoSampleAuc,
}

/// Population source for one group: a CSV file or a synthetic draw.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopSource {
    Csv(String),
    Synthetic(SyntheticPop),
}

/// Synthetic population: `size` units with outcome `delta + draw(dist)`
/// and an auxiliary ranking variable calibrated to correlation `rho`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticPop {
    pub dist: String,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_t_df")]
    pub t_df: f64,
    #[serde(default = "default_pop_size")]
    pub size: usize,
    /// Log-scale standard deviation, lognormal only.
    #[serde(default = "default_sdlog")]
    pub sdlog: f64,
}

fn default_rho() -> f64 {
    1.0
}

fn default_t_df() -> f64 {
    3.0
}

fn default_pop_size() -> usize {
    2000
}

fn default_sdlog() -> f64 {
    1.0
}

fn default_replicates() -> usize {
    500
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: Scenario,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub set_size: usize,
    /// One allocation per group.
    pub allocations: Vec<Vec<usize>>,
    /// One population per group.
    pub populations: Vec<PopSource>,
    #[serde(default)]
    pub missing_rate: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

pub fn read_config(path: &Path) -> Result<BenchConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let cfg: BenchConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &BenchConfig) -> Result<()> {
    let fail = |msg: String| Err(Failure::Data(msg));
    if cfg.replicates < 1 {
        return fail("replicates must be at least 1".into());
    }
    if !(0.0..1.0).contains(&cfg.missing_rate) {
        return fail(format!("missing_rate must be in [0, 1), got {}", cfg.missing_rate));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return fail(format!("alpha must be in (0, 1), got {}", cfg.alpha));
    }
    let groups = match cfg.scenario {
        Scenario::OneSampleMean => 1,
        Scenario::TwoSampleAuc => 2,
    };
    if cfg.allocations.len() != groups {
        return fail(format!(
            "scenario needs {groups} allocation(s), got {}",
            cfg.allocations.len()
        ));
    }
    if cfg.populations.len() != groups {
        return fail(format!(
            "scenario needs {groups} population(s), got {}",
            cfg.populations.len()
        ));
    }
    for alloc in &cfg.allocations {
        if alloc.len() != cfg.set_size {
            return fail(format!(
                "allocation {alloc:?} has {} strata but set_size is {}",
                alloc.len(),
                cfg.set_size
            ));
        }
        if alloc.iter().sum::<usize>() == 0 {
            return fail("allocation requests no samples".into());
        }
    }
    if cfg.missing_rate > 0.0 && cfg.scenario != Scenario::OneSampleMean {
        return fail("missing_rate applies to the one_sample_mean scenario only".into());
    }
    Ok(())
}

/// Stream indices reserved per replicate; population materialization sits
/// far above any reachable replicate stream.
const STAGES_PER_REPLICATE: u64 = 16;
const POPULATION_STREAM_BASE: u64 = 1 << 48;

fn materialize(source: &PopSource, seed: u64, group: u64) -> Result<PopulationFrame> {
    match source {
        PopSource::Csv(path) => read_population(Path::new(path)),
        PopSource::Synthetic(syn) => synthesize(syn, derive_seed(seed, POPULATION_STREAM_BASE + group)),
    }
}

fn synthesize(syn: &SyntheticPop, seed: u64) -> Result<PopulationFrame> {
    let dist: Dist = syn
        .dist
        .parse()
        .map_err(|e: String| Failure::Data(e))?;
    if syn.size == 0 {
        return Err(Failure::Data("synthetic population size must be positive".into()));
    }
    if !(syn.rho > 0.0 && syn.rho <= 1.0) {
        return Err(Failure::Data(format!(
            "rho must be in (0, 1], got {}",
            syn.rho
        )));
    }
    if !(syn.sdlog > 0.0) {
        return Err(Failure::Data(format!("sdlog must be positive, got {}", syn.sdlog)));
    }
    let var_y = match dist {
        // exp(sdlog * Z) has variance (e^{s^2} - 1) e^{s^2}.
        Dist::Lognormal => {
            let s2 = syn.sdlog * syn.sdlog;
            (s2.exp() - 1.0) * s2.exp()
        }
        other => other.base_variance(syn.t_df),
    };
    // Additive normal ranking noise sized so Corr(X, Y) = rho.
    let noise_sd = (var_y * (1.0 - syn.rho * syn.rho) / (syn.rho * syn.rho)).sqrt();
    let mut rng = RssRng::new(seed);
    let mut rows = Vec::with_capacity(syn.size);
    for i in 0..syn.size {
        let y = match dist {
            Dist::Lognormal => (syn.sdlog * rng.standard_normal()).exp() + syn.delta,
            other => other.draw(&mut rng, syn.t_df) + syn.delta,
        };
        let x = if noise_sd == 0.0 { y } else { y + noise_sd * rng.standard_normal() };
        rows.push(PopulationRow { id: format!("u{i}"), x, y: Some(y) });
    }
    PopulationFrame::new(rows).map_err(|e| Failure::Data(e.to_string()))
}

fn outcomes(pop: &PopulationFrame) -> Result<Vec<f64>> {
    pop.rows()
        .iter()
        .map(|row| {
            row.y.ok_or_else(|| {
                Failure::Data(format!("unit {}: bench populations need complete outcomes", row.id))
            })
        })
        .collect()
}

/// P(Y2 > Y1) + P(Y2 = Y1)/2 over the two finite populations, via midranks
/// of the pooled sort rather than the quadratic pair sweep.
fn finite_population_auc(ys1: &[f64], ys2: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, usize)> = ys1
        .iter()
        .map(|&y| (y, 0usize))
        .chain(ys2.iter().map(|&y| (y, 1usize)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rank_sum_2 = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share the midrank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for item in &pooled[i..j] {
            if item.1 == 1 {
                rank_sum_2 += midrank;
            }
        }
        i = j;
    }
    let (n1, n2) = (ys1.len() as f64, ys2.len() as f64);
    (rank_sum_2 - n2 * (n2 + 1.0) / 2.0) / (n1 * n2)
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

/// Sample `n` distinct row indices by a partial Fisher-Yates shuffle.
fn srs_indices(rng: &mut RssRng, pop_len: usize, n: usize) -> Result<Vec<usize>> {
    if n > pop_len {
        return Err(Failure::Numeric(format!(
            "population of {pop_len} cannot supply a simple random sample of {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..pop_len).collect();
    for j in 0..n {
        let k = j + rng.index(pop_len - j);
        indices.swap(j, k);
    }
    indices.truncate(n);
    Ok(indices)
}

fn srs_dataset(pop: &PopulationFrame, n: usize, seed: u64) -> Result<RssDataset> {
    let mut rng = RssRng::new(seed);
    let indices = srs_indices(&mut rng, pop.len(), n)?;
    let records = indices
        .into_iter()
        .map(|i| {
            let row = &pop.rows()[i];
            RssRecord { rank: 1, id: Some(row.id.clone()), y: row.y }
        })
        .collect();
    RssDataset::new(1, Kind::Continuous, records).map_err(numeric)
}

/// Running totals for one method row.
#[derive(Default)]
struct Tally {
    n: f64,
    covered: f64,
    length: f64,
    reps: f64,
}

impl Tally {
    fn record(&mut self, sample_size: usize, truth: f64, lower: f64, upper: f64) {
        self.n += sample_size as f64;
        if lower <= truth && truth <= upper {
            self.covered += 1.0;
        }
        self.length += upper - lower;
        self.reps += 1.0;
    }

    fn row(&self, method: &str) -> BenchRow {
        BenchRow {
            method: method.to_string(),
            mean_n: self.n / self.reps,
            coverage: self.covered / self.reps,
            mean_ci_length: self.length / self.reps,
        }
    }
}

pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    validate(cfg)?;
    match cfg.scenario {
        Scenario::OneSampleMean => one_sample_mean(cfg),
        Scenario::TwoSampleAuc => two_sample_auc(cfg),
    }
}

/// Per replicate: balanced draw, missingness, t interval on the reduced
/// data, top-up per the cheaper design recommendation, re-test, and a
/// simple random sample of the updated total as the classical comparator.
fn one_sample_mean(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let pop = materialize(&cfg.populations[0], cfg.seed, 0)?;
    let ys = outcomes(&pop)?;
    let truth = ys.iter().sum::<f64>() / ys.len() as f64;
    let alloc = Allocation::new(cfg.allocations[0].clone());

    let mut original = Tally::default();
    let mut updated = Tally::default();
    let mut srs = Tally::default();

    for rep in 0..cfg.replicates as u64 {
        let stream = |stage: u64| derive_seed(cfg.seed, rep * STAGES_PER_REPLICATE + stage);

        let draw_cfg = SamplingConfig::new(cfg.set_size, alloc.clone(), stream(0));
        let (brss, trace) = rss_sample_traced(&pop, &draw_cfg).map_err(numeric)?;

        let mut records = brss.records().to_vec();
        if cfg.missing_rate > 0.0 {
            let mut miss_rng = RssRng::new(stream(1));
            for rec in &mut records {
                if miss_rng.uniform() < cfg.missing_rate {
                    rec.y = None;
                }
            }
        }
        let masked =
            RssDataset::new(cfg.set_size, Kind::Continuous, records).map_err(numeric)?;
        let reduced = masked.drop_missing().map_err(numeric)?;

        let t_orig = rss_t_test(
            &reduced,
            None,
            truth,
            cfg.alpha,
            Alternative::TwoSided,
            DfMethod::Sample,
        )
        .map_err(numeric)?;
        original.record(reduced.len(), truth, t_orig.ci_lower, t_orig.ci_upper);

        let report = design_report(&reduced, false).map_err(numeric)?;
        let additions = report.additions();
        let cheaper = [AllocationRule::AdjustedNeyman, AllocationRule::Lrc]
            .into_iter()
            .filter_map(|rule| additions.get(&rule).map(|d| (rule, d.iter().sum::<i64>())))
            .min_by_key(|&(_, total)| total)
            .map(|(rule, _)| rule);
        let top_up: Vec<usize> = match cheaper {
            Some(rule) => additions[&rule].iter().map(|&d| d.max(0) as usize).collect(),
            None => vec![0; cfg.set_size],
        };

        let (merged, t_updated) = if top_up.iter().sum::<usize>() > 0 {
            let consumed: HashSet<&str> =
                trace.consumed_ids.iter().map(String::as_str).collect();
            let remaining: Vec<PopulationRow> = pop
                .rows()
                .iter()
                .filter(|row| !consumed.contains(row.id.as_str()))
                .cloned()
                .collect();
            let rest = PopulationFrame::new(remaining).map_err(numeric)?;
            let add_cfg =
                SamplingConfig::new(cfg.set_size, Allocation::new(top_up), stream(2));
            let extra = rss_sample(&rest, &add_cfg).map_err(numeric)?;
            let merged = reduced.merged_with(&extra).map_err(numeric)?;
            let t = rss_t_test(
                &merged,
                None,
                truth,
                cfg.alpha,
                Alternative::TwoSided,
                DfMethod::Sample,
            )
            .map_err(numeric)?;
            (merged, t)
        } else {
            (reduced, t_orig)
        };
        updated.record(merged.len(), truth, t_updated.ci_lower, t_updated.ci_upper);

        let srs_data = srs_dataset(&pop, merged.len(), stream(3))?;
        let t_srs = rss_t_test(
            &srs_data,
            None,
            truth,
            cfg.alpha,
            Alternative::TwoSided,
            DfMethod::Naive,
        )
        .map_err(numeric)?;
        srs.record(srs_data.len(), truth, t_srs.ci_lower, t_srs.ci_upper);
    }

    Ok(vec![original.row("original_urss"), updated.row("updated_rss"), srs.row("srs")])
}

/// An interval for the arm, degrading to a zero-length point interval when
/// every jackknife pseudo-value coincides (the likelihood carries no
/// spread to invert).
fn auc_interval(
    data1: &RssDataset,
    data2: &RssDataset,
    delta0: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    match rss_auc_test(data1, data2, delta0, alpha) {
        Ok(TestResult { ci_lower, ci_upper, .. }) => Ok((ci_lower, ci_upper)),
        Err(InferError::DegeneratePseudoValues) => {
            let est = rss_auc_estimate(data1, data2).map_err(numeric)?;
            Ok((est, est))
        }
        Err(e) => Err(numeric(e)),
    }
}

fn balanced_counterpart(set_size: usize, total: usize) -> Allocation {
    let per = total / set_size;
    let rem = total % set_size;
    Allocation::new((0..set_size).map(|h| per + usize::from(h < rem)).collect())
}

/// Per replicate: the configured unbalanced design, its balanced
/// counterpart at the same totals, and simple random samples of the same
/// totals pushed through the single-stratum path of the same test.
fn two_sample_auc(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let pop1 = materialize(&cfg.populations[0], cfg.seed, 0)?;
    let pop2 = materialize(&cfg.populations[1], cfg.seed, 1)?;
    let ys1 = outcomes(&pop1)?;
    let ys2 = outcomes(&pop2)?;
    let delta0 = finite_population_auc(&ys1, &ys2);
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Failure::Numeric(format!(
            "population AUC {delta0} admits no two-sided interval; groups are fully separated"
        )));
    }

    let alloc1 = Allocation::new(cfg.allocations[0].clone());
    let alloc2 = Allocation::new(cfg.allocations[1].clone());
    let bal1 = balanced_counterpart(cfg.set_size, alloc1.total());
    let bal2 = balanced_counterpart(cfg.set_size, alloc2.total());

    let mut urss = Tally::default();
    let mut brss = Tally::default();
    let mut srs = Tally::default();

    for rep in 0..cfg.replicates as u64 {
        let stream = |stage: u64| derive_seed(cfg.seed, rep * STAGES_PER_REPLICATE + stage);
        let draw = |pop, alloc: &Allocation, stage| {
            let cfg = SamplingConfig::new(alloc.set_size(), alloc.clone(), stream(stage));
            rss_sample(pop, &cfg).map_err(numeric)
        };

        let u1 = draw(&pop1, &alloc1, 0)?;
        let u2 = draw(&pop2, &alloc2, 1)?;
        let (lo, hi) = auc_interval(&u1, &u2, delta0, cfg.alpha)?;
        urss.record(u1.len() + u2.len(), delta0, lo, hi);

        let b1 = draw(&pop1, &bal1, 2)?;
        let b2 = draw(&pop2, &bal2, 3)?;
        let (lo, hi) = auc_interval(&b1, &b2, delta0, cfg.alpha)?;
        brss.record(b1.len() + b2.len(), delta0, lo, hi);

        let s1 = srs_dataset(&pop1, alloc1.total(), stream(4))?;
        let s2 = srs_dataset(&pop2, alloc2.total(), stream(5))?;
        let (lo, hi) = auc_interval(&s1, &s2, delta0, cfg.alpha)?;
        srs.record(s1.len() + s2.len(), delta0, lo, hi);
    }

    Ok(vec![urss.row("urss"), brss.row("brss"), srs.row("srs")])
}
