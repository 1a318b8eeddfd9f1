//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use drivseg::features::{
    difference_quotient, moving_stat_window, peak_intervals, peak_values, singular_points,
    MovingStat,
};
use drivseg::histogram::build_histogram;
use drivseg::ingest::{generate_synthetic_fleet, Archetype, FleetSpec};
use drivseg::learn::{pca_project, v_measure_labels};
use drivseg::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> std::result::Result<(), String> {
    check(
        elapsed <= Duration::from_secs(limit_s),
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn gas(mean: f64, variance: f64, reversion: f64, peak_rate: f64) -> Archetype {
    let mut a = Archetype::default();
    let o = a.override_mut(SignalKind::Gas);
    o.mean = Some(mean);
    o.variance = Some(variance);
    o.reversion = Some(reversion);
    o.peak_rate = Some(peak_rate);
    a
}

fn g2_spec() -> FleetSpec {
    let mut spec = FleetSpec::new(
        vec![gas(20.0, 64.0, 0.5, 0.05), gas(60.0, 256.0, 2.0, 0.3)],
        10,
        4,
        42,
    );
    spec.session_seconds = [900.0, 900.0];
    spec
}

fn g3_spec(sessions: usize, seconds: f64) -> FleetSpec {
    let archetypes = [20.0, 40.0, 60.0].map(|m| gas(m, 64.0, 0.1, 0.05)).to_vec();
    let mut spec = FleetSpec::new(archetypes, 6, sessions, 42);
    spec.session_seconds = [seconds, seconds];
    spec
}

fn ks() -> Vec<usize> {
    (2..=10).collect()
}

// Entropy tables by direct double loops over the label values.
fn oracle_v(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let la: Vec<usize> = {
        let mut v = a.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let lb: Vec<usize> = {
        let mut v = b.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let count = |f: &dyn Fn(usize) -> bool| (0..a.len()).filter(|&i| f(i)).count() as f64;
    let h = |labels: &[usize], xs: &[usize]| -> f64 {
        labels
            .iter()
            .map(|&l| {
                let p = count(&|i| xs[i] == l) / n;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (h(&la, a), h(&lb, b));
    let mut ha_b = 0.0;
    let mut hb_a = 0.0;
    for &x in &la {
        for &y in &lb {
            let nij = count(&|i| a[i] == x && b[i] == y);
            if nij == 0.0 {
                continue;
            }
            ha_b -= nij / n * (nij / count(&|i| b[i] == y)).ln();
            hb_a -= nij / n * (nij / count(&|i| a[i] == x)).ln();
        }
    }
    let hom = if ha == 0.0 { 1.0 } else { 1.0 - ha_b / ha };
    let com = if hb == 0.0 { 1.0 } else { 1.0 - hb_a / hb };
    if hom + com == 0.0 {
        0.0
    } else {
        2.0 * hom * com / (hom + com)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=15);
        let ka = rng.random_range(1..=5);
        let kb = rng.random_range(1..=5);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        let v = v_measure_labels(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((v - oracle_v(&a, &b)).abs());
        check(
            v == v_measure_labels(&b, &a).unwrap(),
            format!("asymmetric on {a:?} {b:?}"),
        )?;
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..5).collect();
            p.reverse();
            p.rotate_left(rng.random_range(0..5));
            p
        };
        let a2: Vec<usize> = a.iter().map(|&x| perm[x] + 10).collect();
        let b2: Vec<usize> = b.iter().map(|&x| perm[x]).collect();
        check(
            v == v_measure_labels(&a2, &b2).unwrap(),
            format!("relabeling changed {a:?} {b:?}"),
        )?;
    }
    check(
        worst <= 1e-12,
        format!("max deviation from oracle {worst:e}"),
    )?;
    within(start.elapsed(), 5)?;
    Ok(format!(
        "500 pairs, max |V - oracle| = {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 1000 {
        let n = rng.random_range(1..=300);
        let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        if rng.random_bool(0.3) {
            values.iter_mut().for_each(|v| *v = v.round());
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let Ok(bins) = BinSpec::new(lo, hi, 10) else {
            continue;
        };
        tested += 1;
        let bars = build_histogram(&values, &bins).map_err(|e| e.to_string())?;
        worst = worst.max((bars.iter().sum::<f64>() - 1.0).abs());
        let mut shuffled = values.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        check(
            build_histogram(&shuffled, &bins).unwrap() == bars,
            "permutation changed the bars",
        )?;
    }
    check(worst <= 1e-9, format!("bars sum deviates by {worst:e}"))?;

    let bins = BinSpec::new(0.0, 10.0, 10).unwrap();
    let mut lo_only = vec![0.0; 10];
    lo_only[0] = 1.0;
    check(
        build_histogram(&[0.0; 10], &bins).unwrap() == lo_only,
        "ten copies of lo",
    )?;
    let mut ends = vec![0.0; 10];
    ends[0] = 0.5;
    ends[9] = 0.5;
    check(
        build_histogram(&[0.0, 10.0], &bins).unwrap() == ends,
        "lo and hi",
    )?;
    let centers: Vec<f64> = (0..10).map(|i| i as f64 + 0.5).collect();
    check(
        build_histogram(&centers, &bins).unwrap() == vec![0.1; 10],
        "bin centers",
    )?;
    within(start.elapsed(), 5)?;
    Ok(format!(
        "1000 vectors, max |sum - 1| = {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn brute_window(xs: &[f64], i: usize, half: usize) -> Vec<f64> {
    let lo = i.saturating_sub(half);
    let hi = (i + half).min(xs.len() - 1);
    (lo..=hi).map(|j| xs[j]).collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let half = 120;
    for case in 0..200 {
        let n: usize = rng.random_range(1..=500);
        let coarse = rng.random_bool(0.5);
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                if coarse {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random_range(-10.0..10.0)
                }
            })
            .collect();
        let series = UniformSeries::at_4hz(xs.clone());
        let fail = |what: &str| format!("series {case}: {what}");

        let mut all = Vec::new();
        let mut maxima = Vec::new();
        for j in 1..n.saturating_sub(1) {
            if xs[j] > xs[j - 1] && xs[j] > xs[j + 1] {
                all.push(j);
                maxima.push(j);
            } else if xs[j] < xs[j - 1] && xs[j] < xs[j + 1] {
                all.push(j);
            }
        }
        let sp = singular_points(&xs);
        check(
            sp.all == all && sp.maxima == maxima,
            fail("singular points"),
        )?;

        let dq = difference_quotient(&series);
        check(dq.len() == n - 1, fail("difference quotient length"))?;
        for i in 0..n - 1 {
            check(
                close(dq[i], (xs[i + 1] - xs[i]) * 4.0),
                fail("difference quotient"),
            )?;
        }
        let pi = peak_intervals(&series);
        check(
            pi.len() == all.len().saturating_sub(1),
            fail("peak interval count"),
        )?;
        for (i, w) in all.windows(2).enumerate() {
            check(
                close(pi[i], (w[1] - w[0]) as f64 / 4.0),
                fail("peak interval"),
            )?;
        }
        let pv = peak_values(&series);
        check(
            pv == maxima.iter().map(|&j| xs[j]).collect::<Vec<_>>(),
            fail("peak values"),
        )?;

        let mean = moving_stat_window(&xs, MovingStat::Mean, half);
        let median = moving_stat_window(&xs, MovingStat::Median, half);
        let std = moving_stat_window(&xs, MovingStat::Std, half);
        for i in 0..n {
            let mut w = brute_window(&xs, i, half);
            let m = w.iter().sum::<f64>() / w.len() as f64;
            let s = if w.len() < 2 {
                0.0
            } else {
                (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64).sqrt()
            };
            w.sort_by(f64::total_cmp);
            let k = w.len();
            let med = if k % 2 == 1 {
                w[k / 2]
            } else {
                (w[k / 2 - 1] + w[k / 2]) / 2.0
            };
            check(close(mean[i], m), fail("moving mean"))?;
            check(close(median[i], med), fail("moving median"))?;
            check(close(std[i], s), fail("moving std"))?;
        }
    }
    within(start.elapsed(), 10)?;
    Ok(format!(
        "200 series, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let fleet = generate_synthetic_fleet(&g2_spec()).map_err(|e| e.to_string())?;
    let table = FeatureTable::extract(&fleet.users, SignalKind::Gas, FeatureKind::Values);
    let cell = cross_validate(&table, &ks(), 40, 4, &ExperimentOptions::default())
        .map_err(|e| e.to_string())?;
    let (m, s) = (
        cell.mean_at(cell.optimal_k).unwrap(),
        cell.std_at(cell.optimal_k).unwrap(),
    );
    let summary = format!(
        "K = {}, M = {m:.4}, S = {s:.4}, {:.1} s",
        cell.optimal_k,
        start.elapsed().as_secs_f64()
    );
    check(
        cell.optimal_k == 2 && m >= 0.95 && s <= 0.05,
        summary.clone(),
    )?;
    within(start.elapsed(), 60)?;
    Ok(summary)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let fleet = generate_synthetic_fleet(&g3_spec(4, 900.0)).map_err(|e| e.to_string())?;
    let table = FeatureTable::extract(&fleet.users, SignalKind::Gas, FeatureKind::Values);
    let cell = cross_validate(&table, &ks(), 40, 5, &ExperimentOptions::default())
        .map_err(|e| e.to_string())?;
    let m = cell.mean_at(cell.optimal_k).unwrap();
    let summary = format!(
        "{} users, K = {}, M = {m:.4}, {:.1} s",
        table.len(),
        cell.optimal_k,
        start.elapsed().as_secs_f64()
    );
    check(
        table.len() == 18 && cell.optimal_k == 3 && m >= 0.9,
        summary.clone(),
    )?;
    within(start.elapsed(), 60)?;
    Ok(summary)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let fleet = generate_synthetic_fleet(&g3_spec(10, 3600.0)).map_err(|e| e.to_string())?;
    check(
        fleet.users.iter().all(|u| u.total_hours >= 10.0),
        "drivers under 10 h",
    )?;
    let table = FeatureTable::extract(&fleet.users, SignalKind::Gas, FeatureKind::Values);
    let opts = ExperimentOptions::default();
    let pcts = experiments::DEFAULT_PERCENTAGES;
    let curve = |m| robustness_curve(&table, m, 3, &pcts, 40, 6, &opts).map_err(|e| e.to_string());
    let ind = curve(SubsampleMethod::Independent)?;
    let con = curve(SubsampleMethod::Contiguous)?;
    let at =
        |c: &SubsampleCurve, p: f64| c.mean[c.percentages.iter().position(|&x| x == p).unwrap()];
    let summary = format!(
        "independent at 1% = {:.4}, contiguous at 1% = {:.4}, {:.1} s",
        at(&ind, 1.0),
        at(&con, 1.0),
        start.elapsed().as_secs_f64()
    );
    check(at(&ind, 1.0) >= 0.9, summary.clone())?;
    for (i, &p) in pcts.iter().enumerate() {
        if p <= 20.0 {
            check(
                ind.mean[i] >= con.mean[i],
                format!("contiguous beats independent at {p}%: {summary}"),
            )?;
        }
    }
    within(start.elapsed(), 300)?;
    Ok(summary)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let direction: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let offset: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
    let line: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let t: f64 = rng.random_range(-3.0..3.0);
            direction
                .iter()
                .zip(&offset)
                .map(|(d, o)| o + t * d)
                .collect()
        })
        .collect();
    let p = pca_project(&PointSet::from_points(line).unwrap(), 2).map_err(|e| e.to_string())?;
    let rank1 = p.explained_variance_ratio[0];
    check((rank1 - 1.0).abs() <= 1e-9, format!("rank-1 ratio {rank1}"))?;

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=30);
        let d = rng.random_range(1..=10);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = pca_project(&PointSet::from_points(pts).unwrap(), d.min(2))
            .map_err(|e| e.to_string())?;
        worst = worst.max((p.ratio_spectrum.iter().sum::<f64>() - 1.0).abs());
        check(
            p.ratio_spectrum.windows(2).all(|w| w[0] >= w[1]),
            "ratio spectrum increases",
        )?;
    }
    check(
        worst <= 1e-9,
        format!("ratio spectrum sum deviates by {worst:e}"),
    )?;

    let fleet = generate_synthetic_fleet(&g2_spec()).map_err(|e| e.to_string())?;
    let table = FeatureTable::extract(&fleet.users, SignalKind::Gas, FeatureKind::Values);
    let set =
        HistogramSet::build(&table, &HistogramOptions::default()).map_err(|e| e.to_string())?;
    let p = pca_project(&PointSet::from_histograms(&set).unwrap(), 2).map_err(|e| e.to_string())?;
    let two: f64 = p.explained_variance_ratio.iter().sum();
    check(
        two >= 0.8,
        format!("planted fleet: first two components explain {two:.4}"),
    )?;
    Ok(format!(
        "rank-1 ratio {rank1:.12}, max |spectrum sum - 1| = {worst:.1e}, planted fleet PC1+PC2 = {two:.4}, {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

fn files_under(dir: &Path) -> HashMap<String, Vec<u8>> {
    let mut out = HashMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = g2_spec();
    spec.drivers_per_archetype = 4;
    spec.sessions_per_driver = 2;
    spec.session_seconds = [300.0, 600.0];
    fs::write(work.path().join("fleet.toml"), spec.to_toml_string()).unwrap();
    fs::write(
        work.path().join("run.toml"),
        "fleet_spec = \"fleet.toml\"\nsignals = [\"GAS\", \"SPD\"]\nfeatures = [1, 2, 7]\nmin_hours = 0.1\nk_max = 4\ntrials = 5\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = work.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_drivseg"))
            .args(["pipeline", "--seed", "8", "--config"])
            .arg(work.path().join("run.toml"))
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        check(
            status.status.success(),
            format!(
                "run {run} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ),
        )?;
        outputs.push(files_under(&out));
    }
    check(outputs[0].contains_key("summary.json"), "no summary.json")?;
    let csvs = outputs[0].keys().filter(|k| k.ends_with(".csv")).count();
    check(
        csvs == 1 + 6 * 4,
        format!("expected 25 CSV exports, found {csvs}"),
    )?;
    check(outputs[0] == outputs[1], "outputs differ between runs")?;
    Ok(format!(
        "{} files byte-identical across two runs, {:.1} s",
        outputs[0].len(),
        start.elapsed().as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("V-measure matches the entropy-table oracle", criterion_1),
        ("histogram suite", criterion_2),
        ("feature extractors match brute force", criterion_3),
        ("planted K = 2 recovery", criterion_4),
        ("planted K = 3 recovery", criterion_5),
        ("subsampling robustness", criterion_6),
        ("PCA checks", criterion_7),
        ("pipeline determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
