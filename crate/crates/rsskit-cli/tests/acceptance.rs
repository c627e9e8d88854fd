//! Release gate: ten end-to-end checks covering allocation arithmetic,
//! inference anchors, Monte Carlo calibration, and the CLI determinism
//! contract. Each check prints one PASS line (visible with --nocapture);
//! tolerances and runtime budgets are pinned inline.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rsskit::allocate::{adjusted_neyman, integer_neyman, neyman_proportion, StratumStats};
use rsskit::infer::{
    rss_auc_estimate, rss_elr_test, rss_prop_test, rss_sign_test, rss_t_test, DfMethod,
};
use rsskit::model::{
    partition_by_rank, stratum_counts, Allocation, Alternative, Kind, PopulationFrame,
    PopulationRow, RssDataset, RssRecord,
};
use rsskit::numerics::{beta_half_cdf, chisq1_sf, RssRng};
use rsskit::simulate::noise_variance_for_rho;
use rsskit::sampling::{rss_sample_traced, SamplingConfig};
use rsskit::simulate::{rss_simulate, Dist, SimConfig};

fn pass(number: u32, what: &str) {
    println!("PASS criterion {number:2}: {what}");
}

fn within(budget: Duration, start: Instant, what: &str) {
    let elapsed = start.elapsed();
    assert!(elapsed <= budget, "{what} took {elapsed:?}, budget {budget:?}");
}

fn binary_dataset(set_size: usize, totals: &[usize], ones: &[usize]) -> RssDataset {
    let mut records = Vec::new();
    for (h, (&n, &k)) in totals.iter().zip(ones).enumerate() {
        for i in 0..n {
            records.push(RssRecord::new(h + 1, f64::from(u8::from(i < k))));
        }
    }
    RssDataset::new(set_size, Kind::Binary, records).unwrap()
}

fn continuous_dataset(parts: &[Vec<f64>]) -> RssDataset {
    let pairs: Vec<(usize, f64)> = parts
        .iter()
        .enumerate()
        .flat_map(|(h, ys)| ys.iter().map(move |&y| (h + 1, y)))
        .collect();
    RssDataset::from_pairs(parts.len(), &pairs).unwrap()
}

/// Random dataset with every stratum size in `per`, values standard normal.
fn random_parts(rng: &mut RssRng, set_size: usize, per: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    (0..set_size)
        .map(|_| {
            let n = per.start + rng.index(per.end - per.start);
            (0..n).map(|_| rng.standard_normal()).collect()
        })
        .collect()
}

#[test]
fn criterion_01_proportion_neyman_split_matches_the_printed_allocation() {
    let start = Instant::now();
    let split = neyman_proportion(0.5, 3, 45.0).unwrap();
    let expected = [12.814, 19.373, 12.814];
    for (got, want) in split.iter().zip(expected) {
        assert!((got - want).abs() <= 0.001, "got {got}, want {want}");
    }
    within(Duration::from_secs(1), start, "proportion split");
    pass(1, "neyman_proportion(0.5, 3, 45) = (12.814, 19.373, 12.814) +-0.001");
}

#[test]
fn criterion_02_proportion_test_reproduces_the_printed_numbers() {
    let start = Instant::now();
    let data = binary_dataset(3, &[12, 9, 6], &[3, 5, 4]);
    let result = rss_prop_test(&data, 0.2, 0.05, Alternative::TwoSided).unwrap();
    assert!((result.estimate - 0.4907407).abs() <= 1e-7, "estimate {}", result.estimate);
    assert!((result.statistic - 3.700841).abs() <= 1e-5, "statistic {}", result.statistic);
    assert!((result.p_value - 2.148859e-4).abs() <= 1e-8, "p {}", result.p_value);
    assert!((result.ci_lower - 0.3367646).abs() <= 1e-6, "lower {}", result.ci_lower);
    assert!((result.ci_upper - 0.6447169).abs() <= 1e-6, "upper {}", result.ci_upper);
    within(Duration::from_secs(1), start, "proportion test");
    pass(2, "pooled proportion 0.4907407, z 3.700841, p 2.148859e-4, CI (0.3367646, 0.6447169)");
}

#[test]
fn criterion_03_integer_neyman_is_optimal_and_adjustment_never_drops_counts() {
    let start = Instant::now();

    // Spreads proportional to (4, 5, 9) at 18 units split exactly that way;
    // topping up (3, 10, 5) keeps every stratum at its componentwise max.
    let placeholder = Allocation::new(vec![1, 1, 1]);
    let stats = StratumStats::new(vec![4.0, 5.0, 9.0], placeholder).unwrap();
    let original = Allocation::new(vec![3, 10, 5]);
    assert_eq!(integer_neyman(&stats, 18).unwrap().counts(), &[4, 5, 9]);
    assert_eq!(adjusted_neyman(&original, &stats).unwrap().counts(), &[4, 10, 9]);

    // The greedy split minimizes sum s_h^2 / n_h over every composition,
    // checked exhaustively for all H <= 4 and totals up to 20.
    let objective = |sds: &[f64], counts: &[usize]| -> f64 {
        sds.iter().zip(counts).map(|(s, &n)| s * s / n as f64).sum()
    };
    fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        let mut all = Vec::new();
        for first in 1..=total - (parts - 1) {
            for mut rest in compositions(total - first, parts - 1) {
                rest.insert(0, first);
                all.push(rest);
            }
        }
        all
    }
    let mut rng = RssRng::new(0xacce55);
    for case in 0..50 {
        let set_size = 2 + case % 3;
        let sds: Vec<f64> = (0..set_size).map(|_| 0.1 + 9.9 * rng.uniform()).collect();
        let stats =
            StratumStats::new(sds.clone(), Allocation::new(vec![1; set_size])).unwrap();
        for total in set_size..=20 {
            let greedy = integer_neyman(&stats, total).unwrap();
            let got = objective(&sds, greedy.counts());
            let best = compositions(total, set_size)
                .iter()
                .map(|c| objective(&sds, c))
                .fold(f64::INFINITY, f64::min);
            assert!(
                got <= best * (1.0 + 1e-12),
                "H={set_size} N={total} sds={sds:?}: greedy {got} vs best {best}"
            );
        }
    }
    within(Duration::from_secs(5), start, "allocation optimality sweep");
    pass(3, "integer Neyman exhaustively optimal (H<=4, N<=20, 50 spreads); max(3,10,5 | 4,5,9) = (4,10,9)");
}

#[test]
fn criterion_04_two_sample_naive_df_counts_strata_out() {
    let start = Instant::now();
    let mut rng = RssRng::new(0xdf36);
    let parts1: Vec<Vec<f64>> =
        (0..3).map(|_| (0..6).map(|_| rng.standard_normal()).collect()).collect();
    let parts2: Vec<Vec<f64>> =
        (0..3).map(|_| (0..8).map(|_| 0.5 + rng.standard_normal()).collect()).collect();
    let d1 = continuous_dataset(&parts1);
    let d2 = continuous_dataset(&parts2);
    assert_eq!((d1.len(), d2.len()), (18, 24));
    let result = rss_t_test(
        &d1,
        Some(&d2),
        0.0,
        0.05,
        Alternative::TwoSided,
        DfMethod::Naive,
    )
    .unwrap();
    assert_eq!(result.df, Some(36.0));
    within(Duration::from_secs(1), start, "naive df");
    pass(4, "two-sample naive df, H=3 with n = 18 and 24, equals 36 exactly");
}

#[test]
fn criterion_05_likelihood_statistic_calibrates_against_chi_squared() {
    let start = Instant::now();
    assert!((chisq1_sf(0.1488371).unwrap() - 0.6996491).abs() <= 1e-6);

    // At the point estimate the profiled likelihood ratio must vanish.
    let mut rng = RssRng::new(0xe18);
    for _ in 0..100 {
        let set_size = 2 + rng.index(3);
        let parts = random_parts(&mut rng, set_size, 3..9);
        let data = continuous_dataset(&parts);
        let mu_hat = parts
            .iter()
            .map(|ys| ys.iter().sum::<f64>() / ys.len() as f64)
            .sum::<f64>()
            / set_size as f64;
        let (result, _) = rss_elr_test(&data, mu_hat, 0.05).unwrap();
        assert!(result.statistic.abs() <= 1e-8, "statistic {}", result.statistic);
    }
    within(Duration::from_secs(10), start, "likelihood calibration");
    pass(5, "chisq1_sf(0.1488371) = 0.6996491 +-1e-6; -2logLR at the estimate <= 1e-8 on 100 datasets");
}

#[test]
fn criterion_06_sign_test_constants_are_exact_and_forms_coincide() {
    let start = Instant::now();
    assert_eq!(beta_half_cdf(1, 3).unwrap(), 0.875);
    assert_eq!(beta_half_cdf(2, 3).unwrap(), 0.5);
    assert_eq!(beta_half_cdf(3, 3).unwrap(), 0.125);
    assert_eq!(rsskit::infer::sign_eta_sq(3), 0.625);

    // On balanced data the general statistic collapses to the classical
    // centered form (S+ - n/2) / sqrt(n eta^2 / 4).
    let mut rng = RssRng::new(0x51069);
    for case in 0..100 {
        let set_size = 2 + case % 5;
        let per = 3 + rng.index(7);
        let parts: Vec<Vec<f64>> = (0..set_size)
            .map(|_| (0..per).map(|_| rng.standard_normal()).collect())
            .collect();
        let data = continuous_dataset(&parts);
        let median0 = 0.1 * rng.standard_normal();
        let result = rss_sign_test(&data, median0, 0.05, Alternative::TwoSided).unwrap();
        let n = (set_size * per) as f64;
        let s_plus = parts.iter().flatten().filter(|&&y| y > median0).count() as f64;
        let eta_sq = rsskit::infer::sign_eta_sq(set_size);
        let balanced_form = (s_plus - n / 2.0) / (n * eta_sq / 4.0).sqrt();
        assert!(
            (result.statistic - balanced_form).abs() <= 1e-12,
            "H={set_size} general {} vs balanced {balanced_form}",
            result.statistic
        );
    }
    within(Duration::from_secs(5), start, "sign statistic coincidence");
    pass(6, "rank medians (0.875, 0.5, 0.125) and eta^2(3) = 0.625 exact; forms agree to 1e-12");
}

#[test]
fn criterion_07_ranking_noise_and_stratum_means_are_calibrated() {
    let start = Instant::now();

    // The additive-noise calibration hits the requested correlation.
    for (i, &rho) in [0.5, 0.8, 1.0].iter().enumerate() {
        let noise_sd = noise_variance_for_rho(1.0, rho).unwrap().sqrt();
        let mut rng = RssRng::derive(0xca11b, i as u64);
        let n = 100_000;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let y = rng.standard_normal();
            let x = y + noise_sd * rng.standard_normal();
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx / nf * (sy / nf);
        let vx = sxx / nf - (sx / nf) * (sx / nf);
        let vy = syy / nf - (sy / nf) * (sy / nf);
        let corr = cov / (vx * vy).sqrt();
        assert!((corr - rho).abs() <= 0.01, "rho {rho}: correlation {corr}");
    }

    // Under perfect ranking the stratum means are the order statistic
    // means of a standard normal triple: -3/(2 sqrt(pi)), 0, +3/(2 sqrt(pi)).
    let cfg = SimConfig::new(3, Allocation::balanced(3, 100_000), Dist::Normal, 1.0, 0x0fac);
    let data = rss_simulate(&cfg).unwrap();
    let parts = partition_by_rank(&data);
    for (h, want) in [(-0.846f64), 0.0, 0.846].iter().enumerate() {
        let mean = parts[h].iter().sum::<f64>() / parts[h].len() as f64;
        assert!((mean - want).abs() <= 0.01, "stratum {} mean {mean}, want {want}", h + 1);
    }
    within(Duration::from_secs(30), start, "simulation calibration");
    pass(7, "Corr(X,Y) within 0.01 of rho at 1e5 pairs; H=3 stratum means within 0.01 of (-0.846, 0, 0.846)");
}

fn rsskit_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsskit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bench_rows(config: &Path) -> Vec<(String, f64, f64, f64)> {
    let out = rsskit_bin(&["bench", "--config", config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "bench failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    text.lines()
        .skip(1)
        .take_while(|line| !line.is_empty())
        .map(|line| {
            let mut fields = line.split(',');
            let name = fields.next().unwrap().to_string();
            let rest: Vec<f64> =
                fields.map(|f| f.parse().expect("numeric cell")).collect();
            (name, rest[0], rest[1], rest[2])
        })
        .collect()
}

#[test]
fn criterion_08_missingness_recovery_beats_simple_random_sampling() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mean.json");
    // Right-skewed population; ranking is assumed exact. Coverage must hold
    // for all three designs and the topped-up design must be materially
    // tighter than a simple random sample of the same size.
    std::fs::write(
        &config,
        r#"{
            "scenario": "one_sample_mean",
            "replicates": 500,
            "set_size": 3,
            "allocations": [[10, 10, 10]],
            "populations": [{"synthetic": {"dist": "lognormal", "rho": 1.0, "size": 2000, "sdlog": 0.35}}],
            "missing_rate": 0.1,
            "alpha": 0.05,
            "seed": 20260401
        }"#,
    )
    .unwrap();
    let rows = bench_rows(&config);
    assert_eq!(rows.len(), 3);
    for (name, _, coverage, length) in &rows {
        assert!(
            (0.93..=0.97).contains(coverage),
            "{name} coverage {coverage} outside [0.93, 0.97]"
        );
        assert!(*length > 0.0);
    }
    let length = |want: &str| rows.iter().find(|(n, ..)| n == want).unwrap().3;
    let updated = length("updated_rss");
    let srs = length("srs");
    assert!(
        updated <= 0.95 * srs,
        "updated {updated} not at least 5% shorter than SRS {srs}"
    );
    within(Duration::from_secs(120), start, "mean design benchmark");
    pass(8, "lognormal H=3 m=10 with 10% missing: coverages in [0.93, 0.97], updated CI >= 5% shorter than SRS");
}

#[test]
fn criterion_09_unbalanced_designs_tighten_the_auc_interval() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("auc.json");
    // Normal groups shifted so the separation probability is about 0.89;
    // the second group's allocation mirrors the first.
    std::fs::write(
        &config,
        r#"{
            "scenario": "two_sample_auc",
            "replicates": 500,
            "set_size": 3,
            "allocations": [[5, 10, 15], [15, 10, 5]],
            "populations": [
                {"synthetic": {"dist": "normal", "rho": 1.0, "delta": 0.0, "size": 2000}},
                {"synthetic": {"dist": "normal", "rho": 1.0, "delta": 1.7346, "size": 2000}}
            ],
            "alpha": 0.05,
            "seed": 20260402
        }"#,
    )
    .unwrap();
    let rows = bench_rows(&config);
    assert_eq!(rows.len(), 3);
    for (name, mean_n, coverage, _) in &rows {
        assert_eq!(*mean_n, 60.0, "{name} draws 30 per group");
        assert!(
            (0.91..=0.97).contains(coverage),
            "{name} coverage {coverage} outside [0.91, 0.97]"
        );
    }
    let length = |want: &str| rows.iter().find(|(n, ..)| n == want).unwrap().3;
    let (urss, brss, srs) = (length("urss"), length("brss"), length("srs"));
    // Ordering up to Monte Carlo noise, with a hard 3% margin over SRS.
    assert!(urss <= brss * 1.02, "urss {urss} vs brss {brss}");
    assert!(brss <= srs * 1.02, "brss {brss} vs srs {srs}");
    assert!(urss <= 0.97 * srs, "urss {urss} not at least 3% shorter than SRS {srs}");
    within(Duration::from_secs(300), start, "auc design benchmark");
    pass(9, "AUC 0.89 benchmark: coverages in [0.91, 0.97], URSS <= BRSS <= SRS with >= 3% URSS margin");
}

#[test]
fn criterion_10_property_bundle_holds_end_to_end() {
    let start = Instant::now();

    // Sampling and simulation deliver exactly the requested allocation.
    let alloc = Allocation::new(vec![3, 7, 5]);
    let sim = rss_simulate(&SimConfig::new(3, alloc.clone(), Dist::Normal, 0.8, 21)).unwrap();
    assert_eq!(stratum_counts(&sim), alloc);
    let rows: Vec<PopulationRow> = (0..200)
        .map(|i| PopulationRow {
            id: format!("u{i}"),
            x: (i as f64 * 0.61803398875).fract(),
            y: Some(i as f64),
        })
        .collect();
    let pop = PopulationFrame::new(rows).unwrap();
    let (sample, trace) =
        rss_sample_traced(&pop, &SamplingConfig::new(3, Allocation::new(vec![4, 6, 5]), 5))
            .unwrap();
    assert_eq!(stratum_counts(&sample).counts(), &[4, 6, 5]);
    let mut seen = std::collections::HashSet::new();
    assert!(trace.consumed_ids.iter().all(|id| seen.insert(id)), "units never reused");

    // The rank-stratified mean is unbiased under perfect ranking.
    let reps = 2000;
    let alloc = Allocation::new(vec![3, 10, 5]);
    let mut estimates = Vec::with_capacity(reps);
    for rep in 0..reps {
        let cfg = SimConfig::new(
            3,
            alloc.clone(),
            Dist::Normal,
            1.0,
            rsskit::numerics::derive_seed(0xb1a5 ^ 0x1111, rep as u64),
        );
        let data = rss_simulate(&cfg).unwrap();
        let parts = partition_by_rank(&data);
        let estimate = parts
            .iter()
            .map(|ys| ys.iter().sum::<f64>() / ys.len() as f64)
            .sum::<f64>()
            / 3.0;
        estimates.push(estimate);
    }
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!(mean.abs() <= 3.0 * se, "bias {mean} exceeds 3 x {se}");

    // Profiled weights satisfy both likelihood constraints.
    let mut rng = RssRng::new(0xc0375);
    for _ in 0..20 {
        let parts = random_parts(&mut rng, 3, 4..9);
        let data = continuous_dataset(&parts);
        let lows: f64 = parts.iter().map(|ys| ys.iter().cloned().fold(f64::INFINITY, f64::min)).sum::<f64>() / 3.0;
        let highs: f64 = parts.iter().map(|ys| ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / 3.0;
        let mu0 = lows + 0.37 * (highs - lows);
        let (_, profile) = rss_elr_test(&data, mu0, 0.05).unwrap();
        let profile = profile.expect("interior point is feasible");
        let mut weighted_mean = 0.0;
        for (h, stratum) in profile.weights.iter().enumerate() {
            let mass: f64 = stratum.iter().sum();
            assert!((mass - 1.0 / 3.0).abs() <= 1e-8, "stratum mass {mass}");
            weighted_mean += stratum.iter().zip(&parts[h]).map(|(w, y)| w * y).sum::<f64>();
        }
        let scale = 1.0 + mu0.abs();
        assert!((weighted_mean - mu0).abs() <= 1e-8 * scale, "mean {weighted_mean} vs {mu0}");
    }

    // The separation estimate is invariant under monotone transforms.
    let mut rng = RssRng::new(0x40c);
    let d1 = continuous_dataset(&random_parts(&mut rng, 3, 3..7));
    let d2 = continuous_dataset(&random_parts(&mut rng, 3, 3..7));
    let transform = |data: &RssDataset, f: &dyn Fn(f64) -> f64| {
        let records: Vec<RssRecord> = data
            .records()
            .iter()
            .map(|r| RssRecord::new(r.rank, f(r.y.unwrap())))
            .collect();
        RssDataset::new(3, Kind::Continuous, records).unwrap()
    };
    let base = rss_auc_estimate(&d1, &d2).unwrap();
    let expd = rss_auc_estimate(&transform(&d1, &f64::exp), &transform(&d2, &f64::exp)).unwrap();
    let affine = |y: f64| 2.0 * y + 3.0;
    let aff = rss_auc_estimate(&transform(&d1, &affine), &transform(&d2, &affine)).unwrap();
    assert_eq!(base, expd);
    assert_eq!(base, aff);

    // Mean inference is equivariant under location shifts.
    let data = continuous_dataset(&random_parts(&mut rng, 3, 4..8));
    let shift = 7.25;
    let shifted = transform(&data, &|y| y + shift);
    let t0 = rss_t_test(&data, None, 0.0, 0.05, Alternative::TwoSided, DfMethod::Sample).unwrap();
    let t1 =
        rss_t_test(&shifted, None, shift, 0.05, Alternative::TwoSided, DfMethod::Sample).unwrap();
    assert!((t1.estimate - t0.estimate - shift).abs() <= 1e-9 * (1.0 + shift));
    assert!((t1.ci_lower - t0.ci_lower - shift).abs() <= 1e-9 * (1.0 + shift));
    assert!((t1.ci_upper - t0.ci_upper - shift).abs() <= 1e-9 * (1.0 + shift));
    assert!((t1.statistic - t0.statistic).abs() <= 1e-9 * (1.0 + t0.statistic.abs()));

    // Fixed seeds give byte-identical command output, end to end.
    let dir = tempfile::tempdir().unwrap();
    let pop_csv = dir.path().join("pop.csv");
    let mut text = String::from("ID,X,Y\n");
    for i in 0..300 {
        let y = (i as f64 * 0.7548776662466927).fract() * 4.0;
        text.push_str(&format!("p{i},{y},{y}\n"));
    }
    std::fs::write(&pop_csv, text).unwrap();
    let bench_json = dir.path().join("tiny.json");
    std::fs::write(
        &bench_json,
        r#"{
            "scenario": "one_sample_mean",
            "replicates": 10,
            "set_size": 3,
            "allocations": [[4, 4, 4]],
            "populations": [{"synthetic": {"dist": "normal", "rho": 0.9, "size": 300}}],
            "seed": 99
        }"#,
    )
    .unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--H", "4", "--nsamp", "3,5,2,4", "--dist", "t", "--t-df", "4",
             "--rho", "0.7", "--seed", "17"],
        vec!["sample", "--pop", pop_csv.to_str().unwrap(), "--H", "3", "--nsamp", "5,5,5",
             "--seed", "23"],
        vec!["bench", "--config", bench_json.to_str().unwrap()],
    ];
    for args in &commands {
        let first = rsskit_bin(args);
        let second = rsskit_bin(args);
        assert!(first.status.success(), "{args:?}: {}", String::from_utf8_lossy(&first.stderr));
        assert_eq!(first.stdout, second.stdout, "rerun of {args:?} differs");
        assert!(!first.stdout.is_empty());
    }

    within(Duration::from_secs(120), start, "property bundle");
    pass(10, "allocation fidelity, unbiasedness, likelihood residuals, invariances, byte-identical reruns");
}
