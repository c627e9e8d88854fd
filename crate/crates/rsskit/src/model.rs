//! Shared data model: rank-stratified datasets, per-stratum allocations,
//! population frames, and the result types every front end consumes.
//!
//! Ranks are 1-based everywhere a user can see them; vectors indexed by
//! stratum keep position 0 for rank 1.

use std::collections::BTreeMap;
use std::collections::HashSet;

/// Outcome scale of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Continuous,
    Binary,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Continuous => "continuous",
            Kind::Binary => "binary",
        }
    }
}

/// One measured (or pending) unit: the rank stratum it came from, an
/// optional unit id, and the outcome. `y` is `None` on selection sheets
/// and wherever the measurement is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RssRecord {
    pub rank: usize,
    pub id: Option<String>,
    pub y: Option<f64>,
}

impl RssRecord {
    pub fn new(rank: usize, y: f64) -> Self {
        RssRecord { rank, id: None, y: Some(y) }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("set size must be at least 1, got {0}")]
    SetSizeZero(usize),
    #[error("record {index}: rank {rank} outside 1..={set_size}")]
    RankOutOfRange { index: usize, rank: usize, set_size: usize },
    #[error("record {index}: outcome {value} is not finite")]
    NonFiniteOutcome { index: usize, value: f64 },
    #[error("record {index}: binary outcome must be 0 or 1, got {value}")]
    NonBinaryOutcome { index: usize, value: f64 },
    #[error("cannot merge: set sizes differ ({0} vs {1})")]
    MergeSetSizeMismatch(usize, usize),
    #[error("cannot merge: outcome kinds differ")]
    MergeKindMismatch,
    #[error("population row {index}: duplicate id {id:?}")]
    DuplicateId { index: usize, id: String },
    #[error("population row {index}: ranking variable {value} is not finite")]
    NonFiniteAuxiliary { index: usize, value: f64 },
    #[error("population frame has no rows")]
    EmptyFrame,
}

/// A ranked set sample. Construction validates, so a value of this type is
/// always internally consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct RssDataset {
    set_size: usize,
    kind: Kind,
    records: Vec<RssRecord>,
}

impl RssDataset {
    pub fn new(set_size: usize, kind: Kind, records: Vec<RssRecord>) -> Result<Self, ModelError> {
        let data = RssDataset { set_size, kind, records };
        validate_dataset(&data)?;
        Ok(data)
    }

    /// Continuous dataset from (rank, y) pairs; mostly a test convenience.
    pub fn from_pairs(set_size: usize, pairs: &[(usize, f64)]) -> Result<Self, ModelError> {
        let records = pairs.iter().map(|&(rank, y)| RssRecord::new(rank, y)).collect();
        RssDataset::new(set_size, Kind::Continuous, records)
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn records(&self) -> &[RssRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every record carries a measured outcome.
    pub fn is_complete(&self) -> bool {
        self.records.iter().all(|r| r.y.is_some())
    }

    /// Copy with the missing-outcome records removed. The usual route from
    /// a balanced draw with measurement failures to an unbalanced dataset.
    pub fn drop_missing(&self) -> Result<RssDataset, ModelError> {
        let records: Vec<RssRecord> =
            self.records.iter().filter(|r| r.y.is_some()).cloned().collect();
        RssDataset::new(self.set_size, self.kind, records)
    }

    /// Concatenates two samples of the same design, keeping records grouped
    /// by rank (within a rank, `self` comes first).
    pub fn merged_with(&self, other: &RssDataset) -> Result<RssDataset, ModelError> {
        if self.set_size != other.set_size {
            return Err(ModelError::MergeSetSizeMismatch(self.set_size, other.set_size));
        }
        if self.kind != other.kind {
            return Err(ModelError::MergeKindMismatch);
        }
        let mut records = Vec::with_capacity(self.len() + other.len());
        records.extend_from_slice(&self.records);
        records.extend_from_slice(&other.records);
        records.sort_by_key(|r| r.rank);
        RssDataset::new(self.set_size, self.kind, records)
    }
}

/// Checks the dataset invariants: at least one record, every rank within
/// 1..=set_size, outcomes finite, and 0/1 outcomes for binary designs.
pub fn validate_dataset(data: &RssDataset) -> Result<(), ModelError> {
    if data.set_size == 0 {
        return Err(ModelError::SetSizeZero(data.set_size));
    }
    if data.records.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    for (index, rec) in data.records.iter().enumerate() {
        if rec.rank == 0 || rec.rank > data.set_size {
            return Err(ModelError::RankOutOfRange {
                index,
                rank: rec.rank,
                set_size: data.set_size,
            });
        }
        if let Some(y) = rec.y {
            if !y.is_finite() {
                return Err(ModelError::NonFiniteOutcome { index, value: y });
            }
            if data.kind == Kind::Binary && y != 0.0 && y != 1.0 {
                return Err(ModelError::NonBinaryOutcome { index, value: y });
            }
        }
    }
    Ok(())
}

/// Records per rank stratum, counting pending (missing-y) records too.
pub fn stratum_counts(data: &RssDataset) -> Allocation {
    let mut counts = vec![0usize; data.set_size];
    for rec in data.records() {
        counts[rec.rank - 1] += 1;
    }
    Allocation::new(counts)
}

/// Measured outcomes grouped by rank, preserving record order within each
/// stratum. Records whose outcome is missing are skipped.
pub fn partition_by_rank(data: &RssDataset) -> Vec<Vec<f64>> {
    let mut by_rank = vec![Vec::new(); data.set_size];
    for rec in data.records() {
        if let Some(y) = rec.y {
            by_rank[rec.rank - 1].push(y);
        }
    }
    by_rank
}

/// Per-stratum sample sizes (n_1, ..., n_H). Zero entries are allowed:
/// they mean "no samples planned or taken" for that rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation(Vec<usize>);

impl Allocation {
    pub fn new(counts: Vec<usize>) -> Self {
        Allocation(counts)
    }

    /// Balanced allocation: `per_stratum` in every rank.
    pub fn balanced(set_size: usize, per_stratum: usize) -> Self {
        Allocation(vec![per_stratum; set_size])
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn set_size(&self) -> usize {
        self.0.len()
    }

    /// Count for 1-based rank h.
    pub fn count_for_rank(&self, h: usize) -> usize {
        self.0[h - 1]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

impl From<Vec<usize>> for Allocation {
    fn from(counts: Vec<usize>) -> Self {
        Allocation(counts)
    }
}

/// One unit of a sampling frame: id, the cheap ranking variable x, and the
/// expensive outcome y when it has already been measured.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRow {
    pub id: String,
    pub x: f64,
    pub y: Option<f64>,
}

/// Finite population to sample from. Ids are unique and x is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFrame {
    rows: Vec<PopulationRow>,
}

impl PopulationFrame {
    pub fn new(rows: Vec<PopulationRow>) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyFrame);
        }
        let mut seen = HashSet::with_capacity(rows.len());
        for (index, row) in rows.iter().enumerate() {
            if !row.x.is_finite() {
                return Err(ModelError::NonFiniteAuxiliary { index, value: row.x });
            }
            if !seen.insert(row.id.as_str()) {
                return Err(ModelError::DuplicateId { index, id: row.id.clone() });
            }
        }
        Ok(PopulationFrame { rows })
    }

    pub fn rows(&self) -> &[PopulationRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when at least one row carries an outcome.
    pub fn has_outcomes(&self) -> bool {
        self.rows.iter().any(|r| r.y.is_some())
    }
}

/// Which hypothesis test produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Z,
    T,
    Elr,
    Sign,
    Prop,
    Auc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Z => "z",
            Method::T => "t",
            Method::Elr => "elr",
            Method::Sign => "sign",
            Method::Prop => "prop",
            Method::Auc => "auc",
        }
    }
}

/// Alternative hypothesis direction. String forms follow the R convention
/// ("two.sided", "less", "greater").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alternative {
    #[default]
    TwoSided,
    Less,
    Greater,
}

impl Alternative {
    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two.sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        }
    }
}

impl std::str::FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two.sided" | "two-sided" | "twosided" => Ok(Alternative::TwoSided),
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            other => Err(format!("unknown alternative {other:?} (expected two.sided, less, or greater)")),
        }
    }
}

/// Common shape of every test's output. One-sided tests leave the untested
/// CI side infinite; tests without a reference distribution df carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_value: f64,
    pub method: Method,
    pub alpha: f64,
    pub alternative: Alternative,
}

/// Allocation rules a design review can recommend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AllocationRule {
    IntegerNeyman,
    AdjustedNeyman,
    Lrc,
    NeymanProportion,
}

impl AllocationRule {
    pub fn as_str(self) -> &'static str {
        match self {
            AllocationRule::IntegerNeyman => "integer_neyman",
            AllocationRule::AdjustedNeyman => "adjusted_neyman",
            AllocationRule::Lrc => "lrc",
            AllocationRule::NeymanProportion => "neyman_proportion",
        }
    }
}

/// Review of an existing allocation: the observed per-stratum counts plus
/// recommended targets under the applicable rules. Integer rules also
/// report the per-stratum delta against the original; for the Neyman
/// proportion rule the recommendation is real-valued and unrounded.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub original: Allocation,
    pub integer_neyman: Option<Allocation>,
    pub adjusted_neyman: Option<Allocation>,
    pub lrc: Option<Allocation>,
    pub neyman_proportion: Option<Vec<f64>>,
    /// Set when every stratum standard deviation was zero and the
    /// spread-based rules fell back to a balanced recommendation.
    pub degenerate_spread: bool,
}

impl DesignReport {
    /// Per-stratum recommendation minus original for the integer rules.
    /// Negative entries are possible for the unadjusted Neyman rule.
    pub fn additions(&self) -> BTreeMap<AllocationRule, Vec<i64>> {
        let mut map = BTreeMap::new();
        let orig = self.original.counts();
        let mut insert = |rule: AllocationRule, alloc: &Option<Allocation>| {
            if let Some(alloc) = alloc {
                let delta = alloc
                    .counts()
                    .iter()
                    .zip(orig)
                    .map(|(&n, &o)| n as i64 - o as i64)
                    .collect();
                map.insert(rule, delta);
            }
        };
        insert(AllocationRule::IntegerNeyman, &self.integer_neyman);
        insert(AllocationRule::AdjustedNeyman, &self.adjusted_neyman);
        insert(AllocationRule::Lrc, &self.lrc);
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rank: usize, y: f64) -> RssRecord {
        RssRecord::new(rank, y)
    }

    #[test]
    fn rejects_empty_dataset() {
        let err = RssDataset::new(3, Kind::Continuous, vec![]).unwrap_err();
        assert_eq!(err, ModelError::EmptyDataset);
    }

    #[test]
    fn rejects_rank_out_of_range() {
        let err = RssDataset::new(3, Kind::Continuous, vec![rec(4, 1.0)]).unwrap_err();
        assert!(matches!(err, ModelError::RankOutOfRange { rank: 4, .. }));
        let err = RssDataset::new(3, Kind::Continuous, vec![rec(0, 1.0)]).unwrap_err();
        assert!(matches!(err, ModelError::RankOutOfRange { rank: 0, .. }));
    }

    #[test]
    fn rejects_non_binary_outcome_for_binary_kind() {
        let err = RssDataset::new(2, Kind::Binary, vec![rec(1, 0.5)]).unwrap_err();
        assert!(matches!(err, ModelError::NonBinaryOutcome { .. }));
        assert!(RssDataset::new(2, Kind::Binary, vec![rec(1, 1.0), rec(2, 0.0)]).is_ok());
    }

    #[test]
    fn rejects_non_finite_outcome() {
        let err = RssDataset::new(2, Kind::Continuous, vec![rec(1, f64::NAN)]).unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteOutcome { .. }));
    }

    #[test]
    fn single_stratum_datasets_are_valid() {
        // Set size 1 is the degenerate simple-random-sample case; the
        // inference code relies on it being representable.
        let data = RssDataset::from_pairs(1, &[(1, 2.0), (1, 3.0)]).unwrap();
        assert_eq!(data.set_size(), 1);
    }

    #[test]
    fn counts_include_pending_records() {
        let records = vec![
            RssRecord { rank: 1, id: Some("a".into()), y: Some(1.0) },
            RssRecord { rank: 1, id: Some("b".into()), y: None },
            RssRecord { rank: 3, id: Some("c".into()), y: Some(2.0) },
        ];
        let data = RssDataset::new(3, Kind::Continuous, records).unwrap();
        assert_eq!(stratum_counts(&data).counts(), &[2, 0, 1]);
        assert!(!data.is_complete());
        let complete = data.drop_missing().unwrap();
        assert_eq!(stratum_counts(&complete).counts(), &[1, 0, 1]);
    }

    #[test]
    fn partition_respects_record_order() {
        let data = RssDataset::from_pairs(2, &[(2, 5.0), (1, 1.0), (2, 4.0), (1, 2.0)]).unwrap();
        let parts = partition_by_rank(&data);
        assert_eq!(parts, vec![vec![1.0, 2.0], vec![5.0, 4.0]]);
        let total: usize = parts.iter().map(Vec::len).sum();
        assert_eq!(total, data.len());
    }

    #[test]
    fn merge_groups_by_rank_and_checks_design() {
        let a = RssDataset::from_pairs(2, &[(1, 1.0), (2, 2.0)]).unwrap();
        let b = RssDataset::from_pairs(2, &[(1, 3.0), (2, 4.0)]).unwrap();
        let m = a.merged_with(&b).unwrap();
        let ranks: Vec<usize> = m.records().iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![1, 1, 2, 2]);
        let ys: Vec<f64> = m.records().iter().map(|r| r.y.unwrap()).collect();
        assert_eq!(ys, vec![1.0, 3.0, 2.0, 4.0]);

        let c = RssDataset::from_pairs(3, &[(1, 1.0)]).unwrap();
        assert!(matches!(a.merged_with(&c), Err(ModelError::MergeSetSizeMismatch(2, 3))));
    }

    #[test]
    fn allocation_helpers() {
        let a = Allocation::new(vec![3, 10, 5]);
        assert_eq!(a.total(), 18);
        assert_eq!(a.set_size(), 3);
        assert_eq!(a.count_for_rank(2), 10);
        assert!(!a.is_balanced());
        assert!(Allocation::balanced(4, 2).is_balanced());
        assert!(Allocation::new(vec![0, 2, 0]).counts().contains(&0));
    }

    #[test]
    fn frame_rejects_duplicate_ids_and_bad_x() {
        let rows = vec![
            PopulationRow { id: "1".into(), x: 0.3, y: None },
            PopulationRow { id: "1".into(), x: 0.4, y: None },
        ];
        assert!(matches!(PopulationFrame::new(rows), Err(ModelError::DuplicateId { .. })));
        let rows = vec![PopulationRow { id: "1".into(), x: f64::NAN, y: None }];
        assert!(matches!(PopulationFrame::new(rows), Err(ModelError::NonFiniteAuxiliary { .. })));
        assert!(matches!(PopulationFrame::new(vec![]), Err(ModelError::EmptyFrame)));
    }

    #[test]
    fn design_report_additions_are_componentwise_deltas() {
        let report = DesignReport {
            original: Allocation::new(vec![3, 10, 5]),
            integer_neyman: Some(Allocation::new(vec![4, 5, 9])),
            adjusted_neyman: Some(Allocation::new(vec![4, 10, 9])),
            lrc: None,
            neyman_proportion: None,
            degenerate_spread: false,
        };
        let adds = report.additions();
        assert_eq!(adds[&AllocationRule::IntegerNeyman], vec![1, -5, 4]);
        assert_eq!(adds[&AllocationRule::AdjustedNeyman], vec![1, 0, 4]);
        assert!(!adds.contains_key(&AllocationRule::Lrc));
    }

    #[test]
    fn alternative_round_trip() {
        for alt in [Alternative::TwoSided, Alternative::Less, Alternative::Greater] {
            assert_eq!(alt.as_str().parse::<Alternative>().unwrap(), alt);
        }
        assert!("both".parse::<Alternative>().is_err());
    }
}
