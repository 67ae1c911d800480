//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{fig2, fig4, persistent, random_series, random_valid_params, ScalarHmmKalman};
use pmm_forecast::error_analysis::{mse_sweep, theoretical_mse_pair, SweepAxis};
use pmm_forecast::oracle::{build_joint, conditional, linear_predictor_mse};
use pmm_forecast::pipeline::{compare, estimate_params, fit_detrend};
use pmm_forecast::{
    filter_coefficients, forecast_coefficients, forecast_mean, forecast_variance,
    monte_carlo_mse, observation_covariance, sample, FilterState, ModelLabel, MseCurve, PmmParams,
    StandardizationParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_valid_params(&mut rng);
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=12 - n);
        let ys = random_series(&mut rng, n);
        let model = p.markov_form().map_err(|e| e.to_string())?;
        let state = FilterState::run(&model, &ys).map_err(|e| e.to_string())?;
        let joint = build_joint(&p, n, k).map_err(|e| e.to_string())?;
        let given = joint.observation_indices();
        for (kk, mean, var) in [
            (0, state.mean, state.variance),
            (k, forecast_mean(&state, &model, k), forecast_variance(&state, &model, k)),
        ] {
            let c = conditional(&joint, joint.x_index(n + kk), &given).map_err(|e| e.to_string())?;
            let m: f64 = c.weights.iter().zip(&ys).map(|(w, y)| w * y).sum();
            worst = worst.max((m - mean).abs()).max((c.variance - var).abs());
        }
    }
    let t = start.elapsed();
    check(
        worst <= 1e-9 && within(t, 10.0),
        format!("200 cases, max abs error {worst:.2e}, {:.2}s", t.as_secs_f64()),
        format!("max abs error {worst:.2e} (limit 1e-9), {:.2}s (limit 10s)", t.as_secs_f64()),
    )
}

fn hmm_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = rng.random_range(-0.95..0.95);
        let b = rng.random_range(-0.95..0.95);
        let n = rng.random_range(1..=40);
        let k = rng.random_range(1..=30);
        let ys = random_series(&mut rng, n);
        let model = PmmParams::hmm(a, b)
            .and_then(|p| p.markov_form())
            .map_err(|e| e.to_string())?;
        let state = FilterState::run(&model, &ys).map_err(|e| e.to_string())?;
        let kf = ScalarHmmKalman::run(a, b, &ys);
        let (m, v) = kf.forecast(k);
        worst = worst
            .max((forecast_mean(&state, &model, k) - m).abs())
            .max((forecast_variance(&state, &model, k) - v).abs());
    }
    check(
        worst <= 1e-12,
        format!("100 cases, max abs difference {worst:.2e}"),
        format!("max abs difference {worst:.2e} (limit 1e-12)"),
    )
}

fn sweep(p: &PmmParams, n: &[usize], k: &[usize], axis: SweepAxis) -> Result<Vec<MseCurve>, String> {
    let h = p.hmm_restriction().map_err(|e| e.to_string())?;
    mse_sweep(p, &h, axis, n, k).map_err(|e| e.to_string())
}

fn curve(curves: &[MseCurve], label: ModelLabel, fixed: usize) -> Vec<f64> {
    curves
        .iter()
        .find(|c| c.model_label == label && c.fixed == fixed)
        .map(|c| c.points.iter().map(|q| q.1).collect())
        .unwrap_or_default()
}

fn max_ratio(curves: &[MseCurve], fixed: usize) -> (f64, usize) {
    let pmm = curve(curves, ModelLabel::Pmm, fixed);
    let hmm = curve(curves, ModelLabel::Hmm, fixed);
    pmm.iter()
        .zip(&hmm)
        .enumerate()
        .map(|(i, (p, h))| (h / p, i + 1))
        .fold((0.0, 0), |acc, r| if r.0 > acc.0 { r } else { acc })
}

/// Largest single-step increase along the curve.
fn max_rise(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn fig2_reproduction() -> Outcome {
    let start = Instant::now();
    let n: Vec<usize> = (1..=100).collect();
    let curves = sweep(&fig2(), &n, &[0], SweepAxis::N)?;
    let t = start.elapsed();
    let (ratio, at) = max_ratio(&curves, 0);
    let pmm = curve(&curves, ModelLabel::Pmm, 0);
    let hmm = curve(&curves, ModelLabel::Hmm, 0);
    // The PMM filter variance is a Riccati iterate and never increases. The
    // misspecified HMM curve settles with a sub-micro overshoot, so it is
    // checked to 1e-6 together with convergence of the tail.
    let rise_p = max_rise(&pmm);
    let rise_h = max_rise(&hmm);
    let tail = |v: &[f64]| (v[99] - v[89]).abs();
    let monotone = rise_p <= 1e-12 && rise_h <= 1e-6 && tail(&pmm) < 1e-6 && tail(&hmm) < 1e-6;
    check(
        ratio >= 5.0 && monotone && within(t, 5.0),
        format!(
            "max HMM/PMM ratio {ratio:.3} at n={at}; max rise PMM {rise_p:.1e}, HMM {rise_h:.1e}; {:.3}s",
            t.as_secs_f64()
        ),
        format!(
            "ratio {ratio:.3} (need >= 5), rises {rise_p:.1e}/{rise_h:.1e}, tails {:.1e}/{:.1e}, {:.3}s",
            tail(&pmm),
            tail(&hmm),
            t.as_secs_f64()
        ),
    )
}

fn fig4_reproduction() -> Outcome {
    let start = Instant::now();
    let n: Vec<usize> = (1..=200).collect();
    let curves = sweep(&fig4(), &n, &[0], SweepAxis::N)?;
    let t = start.elapsed();
    let (ratio, at) = max_ratio(&curves, 0);
    check(
        ratio >= 10.0 && within(t, 5.0),
        format!("max HMM/PMM ratio {ratio:.3} at n={at}; {:.3}s", t.as_secs_f64()),
        format!("ratio {ratio:.3} (need >= 10), {:.3}s", t.as_secs_f64()),
    )
}

fn prediction_gain() -> Outcome {
    let k: Vec<usize> = (1..=30).collect();
    let curves = sweep(&fig2(), &[1], &k, SweepAxis::K)?;
    let pmm = curve(&curves, ModelLabel::Pmm, 1);
    let hmm = curve(&curves, ModelLabel::Hmm, 1);
    let (gain, at) = pmm
        .iter()
        .zip(&hmm)
        .enumerate()
        .map(|(i, (p, h))| ((h - p) / h, i + 1))
        .fold((f64::NEG_INFINITY, 0), |acc, r| if r.0 > acc.0 { r } else { acc });
    check(
        (0.03..=0.25).contains(&gain),
        format!("max relative gain {gain:.4} at k={at}"),
        format!("max relative gain {gain:.4} at k={at}, outside [0.03, 0.25]"),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let p = fig2();
    let h = p.hmm_restriction().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (n, k)) in [(5, 1), (10, 5), (20, 10)].into_iter().enumerate() {
        let theory = theoretical_mse_pair(&p, &h, n, k).map_err(|e| e.to_string())?;
        for (label, f, want) in [("PMM", &p, theory.pmm), ("HMM", &h, theory.hmm)] {
            let est = monte_carlo_mse(&p, f, n, k, 100_000, 60 + i as u64).map_err(|e| e.to_string())?;
            let z = (est.mse - want) / est.stderr;
            ok &= z.abs() <= 3.0;
            lines.push(format!("({n},{k}) {label} z={z:+.2}"));
        }
    }
    let t = start.elapsed();
    ok &= within(t, 60.0);
    check(
        ok,
        format!("{}; {:.1}s", lines.join(", "), t.as_secs_f64()),
        format!("{}; {:.1}s (limit 60s)", lines.join(", "), t.as_secs_f64()),
    )
}

fn pythagoras() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_valid_params(&mut rng);
        let h = p.hmm_restriction().map_err(|e| e.to_string())?;
        if h.markov_form().is_err() {
            continue;
        }
        let n = rng.random_range(1..=8);
        let k = rng.random_range(0..=12 - n);
        let pair = theoretical_mse_pair(&p, &h, n, k).map_err(|e| e.to_string())?;
        let hw = forecast_coefficients(&h.markov_form().unwrap(), n, k).map_err(|e| e.to_string())?;
        let joint = build_joint(&p, n, k).map_err(|e| e.to_string())?;
        let direct = linear_predictor_mse(&joint, joint.x_index(n + k), &joint.observation_indices(), &hw.weights)
            .map_err(|e| e.to_string())?;
        worst = worst.max((direct - pair.hmm).abs());
    }
    check(
        worst <= 1e-9,
        format!("100 cases, max abs error {worst:.2e}"),
        format!("max abs error {worst:.2e} (limit 1e-9)"),
    )
}

// Rows of the evaluation tables: n in {5, 20, 50}, k in {10, 24, 48}.
const TABLE_N: [usize; 3] = [5, 20, 50];
const TABLE_K: [usize; 3] = [10, 24, 48];

fn pipeline_round_trip() -> Outcome {
    let truth = fig2();
    let train = sample(&truth, 100_000, 80).map_err(|e| e.to_string())?;
    let fitted = estimate_params(&train.x, &train.y).map_err(|e| e.to_string())?;
    let err = fitted
        .params
        .as_array()
        .iter()
        .zip(truth.as_array())
        .map(|(e, t)| (e - t).abs())
        .fold(0.0, f64::max);
    let test = sample(&truth, 20_000, 81).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut worst_z = f64::INFINITY;
    for n in TABLE_N {
        for k in TABLE_K {
            let c = compare(&fitted, &test.x, &test.y, 1, n, k).map_err(|e| e.to_string())?;
            let z = (c.mse_hmm - c.mse_pmm) / c.diff_stderr;
            worst_z = worst_z.min(z);
            if c.mse_pmm > c.mse_hmm + 3.0 * c.diff_stderr {
                bad.push(format!("(n={n},k={k}) pmm {:.4} hmm {:.4}", c.mse_pmm, c.mse_hmm));
            }
        }
    }
    check(
        err <= 0.03 && bad.is_empty(),
        format!("max parameter error {err:.4}; 9 rows ordered, min (hmm-pmm)/stderr {worst_z:+.2}"),
        format!("max parameter error {err:.4} (limit 0.03); violations: {}", bad.join("; ")),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pmm"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn cli_end_to_end() -> Outcome {
    // Reference values measured on the atmospheric pressure series
    // (n, k, HMM, PMM), recorded for comparison only:
    //   5 10 0.85 0.59 | 5 24 0.77 0.57 | 5 48 1.15 0.83
    //  20 10 0.75 0.53 | 20 24 0.82 0.57 | 20 48 1.24 0.78
    //  50 10 0.69 0.59 | 50 24 0.86 0.59 | 50 48 1.15 0.64
    // and on the soil moisture series:
    //   5 10 1.31 0.79 | 5 24 1.02 0.70 | 5 48 1.05 0.77
    //  20 24 1.13 0.67 | 20 48 1.22 0.74 | 20 72 1.20 0.69
    //  50 24 1.05 0.68 | 50 48 1.17 0.64 | 50 72 1.05 0.60
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let n_rows = 30_000;
    let traj = sample(&persistent(), n_rows, 90).map_err(|e| e.to_string())?;
    let mut text = String::from("timestamp,x,y\n");
    for (i, (x, y)) in traj.x.iter().zip(&traj.y).enumerate() {
        let t = (i + 1) as f64;
        let season = 1.5 * (2.0 * PI * t / 24.0).cos() + 0.5 * (2.0 * PI * t / 8772.0).sin();
        text.push_str(&format!("h{i},{},{}\n", 1013.0 + 8.0 * x, 4.0 + 6.0 * y + season));
    }
    let csv = dir.path().join("series.csv");
    fs::write(&csv, text).map_err(|e| e.to_string())?;
    let s = |p: &Path| p.to_string_lossy().into_owned();
    let model = dir.path().join("model.json");
    let table = dir.path().join("table.csv");
    let half = format!("0:{}", n_rows / 2);
    let rest = format!("{}:{n_rows}", n_rows / 2);
    run_cli(&["fit", "--input", &s(&csv), "--output", &s(&model), "--detrend", "--fit-range", &half])?;
    run_cli(&["evaluate", "--model", &s(&model), "--input", &s(&csv), "--test-range", &rest, "--output", &s(&table)])?;
    let out = fs::read_to_string(&table).map_err(|e| e.to_string())?;
    let mut cells = 0;
    let mut bad = Vec::new();
    for line in out.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let hmm: f64 = f[2].parse().map_err(|_| line.to_string())?;
        let pmm: f64 = f[3].parse().map_err(|_| line.to_string())?;
        cells += 1;
        if pmm > hmm {
            bad.push(format!("(n={},k={}) pmm {pmm:.4} > hmm {hmm:.4}", f[0], f[1]));
        }
    }
    check(
        cells == 9 && bad.is_empty(),
        format!("fit --detrend + evaluate on synthetic CSV: PMM <= HMM in all {cells} cells"),
        format!("{cells} cells; {}", bad.join("; ")),
    )
}

fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cases = 0;
    let mut failures = Vec::new();

    for _ in 0..120 {
        let p = random_valid_params(&mut rng);
        let m = p.markov_form().map_err(|e| e.to_string())?;
        let r = m.stationarity_residual().abs().max();
        if r > 1e-12 {
            failures.push(format!("fixed point residual {r:.1e}"));
        }
        cases += 1;
    }

    for _ in 0..120 {
        let p = random_valid_params(&mut rng);
        let m = p.markov_form().map_err(|e| e.to_string())?;
        let n = rng.random_range(2..=10);
        let sigma = observation_covariance(&m, n);
        let lag1 = sigma.matrix[(0, 1)];
        if (lag1 - p.c).abs() > 1e-12 || (sigma.matrix[(n - 2, n - 1)] - p.c).abs() > 1e-12 {
            failures.push(format!("lag-1 covariance {lag1} vs c {}", p.c));
        }
        cases += 1;
    }

    for _ in 0..100 {
        let len = rng.random_range(50..800);
        let periods = [24.0, rng.random_range(30.0..500.0)];
        let theta: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (1..=len)
            .map(|i| {
                let row = harmonic_row(i, periods);
                row.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-1.0..1.0)
            })
            .collect();
        let d = fit_detrend(&y, periods).map_err(|e| e.to_string())?;
        let res = d.apply(&y, 1);
        let rn = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..5 {
            let col: Vec<f64> = (1..=len).map(|i| harmonic_row(i, periods)[c]).collect();
            let cn = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = res.iter().zip(&col).map(|(a, b)| a * b).sum();
            if (dot / (rn * cn)).abs() > 1e-9 {
                failures.push(format!("detrend residual not orthogonal to column {c}: {dot:.2e}"));
            }
        }
        cases += 1;
    }

    for _ in 0..100 {
        let len = rng.random_range(30..500);
        let shift = rng.random_range(-100.0..100.0);
        let scale = rng.random_range(0.01..50.0);
        let v: Vec<f64> = (0..len).map(|_| shift + scale * rng.random_range(-1.0..1.0)).collect();
        let s = StandardizationParams::fit(&v).map_err(|e| e.to_string())?;
        let z = s.apply(&v);
        let mean = z.iter().sum::<f64>() / len as f64;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
        if mean.abs() > 1e-10 || (var - 1.0).abs() > 1e-10 {
            failures.push(format!("standardized mean {mean:.1e} variance {var}"));
        }
        cases += 1;
    }

    for _ in 0..120 {
        let p = random_valid_params(&mut rng);
        let m = p.markov_form().map_err(|e| e.to_string())?;
        let n = rng.random_range(1..=60);
        let ys = random_series(&mut rng, n);
        let via_weights = filter_coefficients(&m, n).map_err(|e| e.to_string())?.apply(&ys);
        let via_filter = FilterState::run(&m, &ys).map_err(|e| e.to_string())?.mean;
        if (via_weights - via_filter).abs() > 1e-10 {
            failures.push(format!("coefficient/filter mismatch {via_weights} vs {via_filter}"));
        }
        cases += 1;
    }

    check(
        failures.is_empty() && cases >= 500,
        format!("{cases} randomized cases across 5 invariants"),
        format!("{} of {cases} cases failed; first: {}", failures.len(), failures.first().cloned().unwrap_or_default()),
    )
}

fn harmonic_row(i: usize, periods: [f64; 2]) -> [f64; 5] {
    let t = i as f64;
    let (w1, w2) = (2.0 * PI * t / periods[0], 2.0 * PI * t / periods[1]);
    [1.0, w1.cos(), w1.sin(), w2.cos(), w2.sin()]
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("HMM degeneracy", hmm_degeneracy),
        ("filtering sweep, fig2 preset", fig2_reproduction),
        ("filtering sweep, fig4 preset", fig4_reproduction),
        ("prediction gain at n=1", prediction_gain),
        ("Monte Carlo calibration", monte_carlo),
        ("Pythagoras identity", pythagoras),
        ("pipeline round trip", pipeline_round_trip),
        ("CLI end to end on synthetic data", cli_end_to_end),
        ("invariant suite", invariant_suite),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
