//! File formats and error classes. CSV carries the data, JSON carries the
//! results, and every float printed outside JSON goes through the same
//! 7-significant-digit formatter so reruns are byte-identical.

use std::fmt;
use std::path::Path;

use rsskit::model::{
    DesignReport, Kind, PopulationFrame, PopulationRow, RssDataset, RssRecord, TestResult,
};
use serde::Serialize;

/// What went wrong, bucketed by exit code: bad input files are `Data` (3),
/// failures inside the statistical machinery are `Numeric` (4), and
/// command-line misuse beyond clap's reach is `Usage` (2).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Data(msg) => write!(f, "data error: {msg}"),
            Failure::Numeric(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for Failure {}

pub type Result<T> = std::result::Result<T, Failure>;

/// `%.*g`-style formatting: `digits` significant digits, fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    // Round first in scientific form so the exponent reflects the rounded
    // value (9.9999999 must land in the same branch as 10).
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let trimmed = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{trimmed}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn is_missing(field: &str) -> bool {
    let t = field.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na")
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field.trim().parse().map_err(|_| {
        Failure::Data(format!("line {line}: cannot parse {what} from {field:?}"))
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(reader)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Population frame CSV: columns `ID,X[,Y]`, case-insensitive headers,
/// extra columns ignored. Missing outcomes are empty fields or `NA`.
pub fn read_population(path: &Path) -> Result<PopulationFrame> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        .clone();
    let id_col = find_column(&headers, "id")
        .ok_or_else(|| Failure::Data(format!("{}: no ID column", path.display())))?;
    let x_col = find_column(&headers, "x")
        .ok_or_else(|| Failure::Data(format!("{}: no X column", path.display())))?;
    let y_col = find_column(&headers, "y");
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let line = record_line(&record);
        let id = record
            .get(id_col)
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| Failure::Data(format!("line {line}: empty ID")))?
            .trim()
            .to_string();
        let x = parse_f64(record.get(x_col).unwrap_or(""), "X", line)?;
        let y = match y_col.map(|c| record.get(c).unwrap_or("")) {
            Some(field) if !is_missing(field) => Some(parse_f64(field, "Y", line)?),
            _ => None,
        };
        rows.push(PopulationRow { id, x, y });
    }
    PopulationFrame::new(rows).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Ranked set sample CSV: columns `rank[,ID][,y]`, case-insensitive. The
/// set size is the largest rank present.
pub fn read_rss(path: &Path, kind: Kind) -> Result<RssDataset> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        .clone();
    let rank_col = find_column(&headers, "rank")
        .ok_or_else(|| Failure::Data(format!("{}: no rank column", path.display())))?;
    let id_col = find_column(&headers, "id");
    let y_col = find_column(&headers, "y");
    let mut records = Vec::new();
    let mut set_size = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let line = record_line(&record);
        let rank: usize = record
            .get(rank_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| {
                Failure::Data(format!(
                    "line {line}: cannot parse rank from {:?}",
                    record.get(rank_col).unwrap_or("")
                ))
            })?;
        if rank == 0 {
            return Err(Failure::Data(format!("line {line}: rank must be at least 1")));
        }
        set_size = set_size.max(rank);
        let id = id_col
            .and_then(|c| record.get(c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from);
        let y = match y_col.map(|c| record.get(c).unwrap_or("")) {
            Some(field) if !is_missing(field) => Some(parse_f64(field, "y", line)?),
            _ => None,
        };
        records.push(RssRecord { rank, id, y });
    }
    if records.is_empty() {
        return Err(Failure::Data(format!("{}: no data rows", path.display())));
    }
    RssDataset::new(set_size, kind, records)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Sample CSV, columns `rank[,ID][,y]`: the ID column appears when any
/// record carries an id, the y column when any outcome is present, and
/// missing outcomes inside a present column print as `NA`.
pub fn format_rss(data: &RssDataset) -> String {
    let with_id = data.records().iter().any(|r| r.id.is_some());
    let with_y = data.records().iter().any(|r| r.y.is_some());
    let mut out = String::from("rank");
    if with_id {
        out.push_str(",ID");
    }
    if with_y {
        out.push_str(",y");
    }
    out.push('\n');
    for record in data.records() {
        out.push_str(&record.rank.to_string());
        if with_id {
            out.push(',');
            out.push_str(record.id.as_deref().unwrap_or(""));
        }
        if with_y {
            out.push(',');
            match record.y {
                Some(y) => out.push_str(&fmt_sig(y, 7)),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TestResultJson<'a> {
    estimate: f64,
    ci: [f64; 2],
    statistic: f64,
    df: Option<f64>,
    p_value: f64,
    method: &'a str,
    alpha: f64,
    alternative: &'a str,
}

/// Test result JSON. serde_json writes non-finite floats as `null`, which
/// is how open one-sided interval ends and infeasible statistics appear.
pub fn format_test_result(result: &TestResult) -> String {
    let json = TestResultJson {
        estimate: result.estimate,
        ci: [result.ci_lower, result.ci_upper],
        statistic: result.statistic,
        df: result.df,
        p_value: result.p_value,
        method: result.method.as_str(),
        alpha: result.alpha,
        alternative: result.alternative.as_str(),
    };
    let mut out = serde_json::to_string_pretty(&json).expect("serializable");
    out.push('\n');
    out
}

#[derive(Serialize)]
struct DesignReportJson {
    original: Vec<usize>,
    integer_neyman: Option<Vec<usize>>,
    adjusted_neyman: Option<Vec<usize>>,
    lrc: Option<Vec<usize>>,
    neyman_proportion: Option<Vec<f64>>,
    additions: std::collections::BTreeMap<String, Vec<i64>>,
    degenerate_spread: bool,
}

pub fn format_design_report(report: &DesignReport) -> String {
    let counts = |alloc: &Option<rsskit::model::Allocation>| {
        alloc.as_ref().map(|a| a.counts().to_vec())
    };
    let json = DesignReportJson {
        original: report.original.counts().to_vec(),
        integer_neyman: counts(&report.integer_neyman),
        adjusted_neyman: counts(&report.adjusted_neyman),
        lrc: counts(&report.lrc),
        neyman_proportion: report.neyman_proportion.clone(),
        additions: report
            .additions()
            .into_iter()
            .map(|(rule, delta)| (rule.as_str().to_string(), delta))
            .collect(),
        degenerate_spread: report.degenerate_spread,
    };
    let mut out = serde_json::to_string_pretty(&json).expect("serializable");
    out.push('\n');
    out
}

/// One aggregated bench row.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: String,
    pub mean_n: f64,
    pub coverage: f64,
    pub mean_ci_length: f64,
}

pub fn format_bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,mean_n,coverage,mean_ci_length\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.method,
            fmt_sig(row.mean_n, 7),
            fmt_sig(row.coverage, 7),
            fmt_sig(row.mean_ci_length, 7)
        ));
    }
    out
}

pub fn format_bench_table(rows: &[BenchRow]) -> String {
    let mut cells: Vec<[String; 4]> =
        vec![["method".into(), "mean_n".into(), "coverage".into(), "mean_ci_length".into()]];
    for row in rows {
        cells.push([
            row.method.clone(),
            fmt_sig(row.mean_n, 7),
            fmt_sig(row.coverage, 7),
            fmt_sig(row.mean_ci_length, 7),
        ]);
    }
    let widths: Vec<usize> =
        (0..4).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap()).collect();
    let mut out = String::new();
    for row in &cells {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            for _ in cell.len()..widths[c] {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}

/// Writes to the path when given, otherwise to stdout.
pub fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
