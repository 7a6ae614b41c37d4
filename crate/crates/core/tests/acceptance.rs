//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always printed:
//! `cargo test --release --test acceptance`.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use camp::harness::{interpolate, logistic_crossing};
use camp::{
    run_sweep, run_transition_profile, Axes, Camp, GainMode, GenerationConfig, ProblemInstance,
    SolverConfig, SweepSpec,
};

const THRESHOLD: f64 = 1e-8;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String, start: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "{tag}  {name:<32} {detail}  [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
        if !pass {
            self.failures += 1;
        }
    }
}

/// `mse_corr` of a blind solve on a model-sampled instance.
fn blind_mse(n: usize, alpha: f64, p: usize, seed: u64) -> f64 {
    let m = (alpha * n as f64).round() as usize;
    let gen = GenerationConfig::standard(n, m, p, 0.2, 0.01, seed);
    let inst = ProblemInstance::generate(&gen).unwrap();
    let cfg = SolverConfig::matched(&gen).unwrap();
    match Camp::new(&inst, &cfg).unwrap().run() {
        Ok(res) => res.mse_corr,
        Err(_) => f64::NAN,
    }
}

fn successes(mses: &[f64]) -> usize {
    mses.iter().filter(|&&m| m < THRESHOLD).count()
}

fn fmt_mses(mses: &[f64]) -> String {
    let lo = mses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("mse_corr in [{lo:.1e}, {hi:.1e}]")
}

fn denoiser(report: &mut Report) {
    let start = Instant::now();
    let worst = common::denoiser_grid_worst();
    let secs = start.elapsed().as_secs_f64();
    report.check(
        "denoiser vs oracle",
        worst <= 1e-8 && secs < 10.0,
        format!("max |closed - oracle| = {worst:.2e} on 1200 points"),
        start,
    );
}

fn channel(report: &mut Report) {
    let start = Instant::now();
    let w = common::channel_fd_worst(2024, 50);
    let pass = w[0] <= 1e-5
        && w[1] <= 1e-4
        && w[2] <= 1e-5
        && w[3] <= 1e-4
        && start.elapsed().as_secs() < 60;
    report.check(
        "channel vs generating function",
        pass,
        format!(
            "50 tuples: e {:.1e}, h {:.1e}, k {:.1e}, l {:.1e}",
            w[0], w[1], w[2], w[3]
        ),
        start,
    );
}

fn gamp_reduction(report: &mut Report) {
    let start = Instant::now();
    let worst = common::gamp_reduction_worst(50);
    report.check(
        "GAMP reduction",
        worst <= 1e-10,
        format!("max per-iteration gap {worst:.2e} over 50 iterations"),
        start,
    );
}

fn fixed_point(report: &mut Report) {
    let start = Instant::now();
    let worst = common::fixed_point_worst(10);
    report.check(
        "fixed point",
        worst <= 1e-20,
        format!("max crit {worst:.2e} over 10 iterations"),
        start,
    );
}

fn success_point(report: &mut Report) {
    let start = Instant::now();
    let large: Vec<f64> = (0..5).map(|s| blind_mse(1000, 0.75, 2, s)).collect();
    let small: Vec<f64> = (0..10).map(|s| blind_mse(250, 0.75, 2, s)).collect();
    let (wl, ws) = (successes(&large), successes(&small));
    report.check(
        "success point",
        wl == 5 && ws >= 8,
        format!(
            "N=1000: {wl}/5 ({}); N=250: {ws}/10",
            fmt_mses(&large)
        ),
        start,
    );
}

fn impossibility(report: &mut Report) {
    let start = Instant::now();
    let single: Vec<f64> = (0..10).map(|s| blind_mse(1000, 0.9, 1, s)).collect();
    let below: Vec<f64> = (0..10).map(|s| blind_mse(1000, 0.35, 2, s)).collect();
    let (w1, w2) = (successes(&single), successes(&below));
    report.check(
        "impossibility points",
        w1 == 0 && w2 == 0,
        format!(
            "P=1 alpha=0.9: {w1}/10 ({}); alpha=0.35: {w2}/10 ({})",
            fmt_mses(&single),
            fmt_mses(&below)
        ),
        start,
    );
}

fn sharpness(report: &mut Report) {
    let start = Instant::now();
    let alphas: Vec<f64> = (0..=12).map(|i| 0.40 + 0.025 * i as f64).collect();
    let spec = SweepSpec::new(
        Axes {
            alpha: alphas,
            rho: vec![0.2],
            p: vec![2],
            sigma2: vec![0.0251],
            n: vec![125, 500],
        },
        20,
        2013,
    );
    let grid = run_transition_profile(&spec, 0).unwrap();
    let mut fits = Vec::new();
    for n in [125, 500] {
        let crossing = logistic_crossing(&grid.success_counts(|c| c.n == n));
        let iters = crossing.and_then(|c| {
            interpolate(&grid.iterations_curve(|p| p.n == n), c.alpha + 0.15)
        });
        fits.push((crossing, iters));
    }
    let detail = |i: usize| match fits[i] {
        (Some(c), it) => format!(
            "crossing {:.3}, slope {:.1}, iterations {}",
            c.alpha,
            c.slope,
            it.map_or("n/a".into(), |x| format!("{x:.0}"))
        ),
        (None, _) => "no crossing".into(),
    };
    let (pass_slope, ratio) = match (fits[0], fits[1]) {
        ((Some(a), Some(ia)), (Some(b), Some(ib))) => {
            (b.slope > a.slope, Some(ia.max(ib) / ia.min(ib)))
        }
        ((Some(a), _), (Some(b), _)) => (b.slope > a.slope, None),
        _ => (false, None),
    };
    report.check(
        "sharpness: slope grows with N",
        pass_slope,
        format!("N=125: {}; N=500: {}", detail(0), detail(1)),
        start,
    );
    report.check(
        "sharpness: iterations flat in N",
        ratio.is_some_and(|r| r < 1.3),
        format!(
            "larger/smaller mean iterations at crossing + 0.15 = {}",
            ratio.map_or("n/a".into(), |r| format!("{r:.3}"))
        ),
        start,
    );

    // rate may dip by at most one seed in 20 as alpha grows
    let mut worst_dip: f64 = 0.0;
    for n in [125, 500] {
        let curve = grid.success_curve(|c| c.n == n);
        let mut best: f64 = 0.0;
        for &(_, rate) in &curve {
            worst_dip = worst_dip.max(best - rate);
            best = best.max(rate);
        }
    }
    report.check(
        "property: rate monotone in alpha",
        worst_dip <= 0.1 + 1e-12,
        format!("largest drop below running maximum {worst_dip:.2}"),
        start,
    );
}

fn small_sigma_regression(report: &mut Report) {
    let start = Instant::now();
    let mut spec = SweepSpec::new(
        Axes {
            alpha: vec![0.75],
            rho: vec![0.5],
            p: vec![3],
            sigma2: vec![1e-6],
            n: vec![250],
        },
        10,
        4,
    );
    let blind = run_sweep(&spec, 0).unwrap();
    spec.solver.gain_mode = GainMode::Known;
    let known = run_sweep(&spec, 0).unwrap();
    let mut agree = 0;
    let (mut wb, mut wk) = (0, 0);
    for (b, k) in blind.rows().zip(known.rows()) {
        assert_eq!(b.seed, k.seed);
        let (sb, sk) = (b.succeeded(THRESHOLD), k.succeeded(THRESHOLD));
        agree += usize::from(sb == sk);
        wb += usize::from(sb);
        wk += usize::from(sk);
    }
    report.check(
        "small-sigma2 regression",
        agree >= 9,
        format!("{agree}/10 outcomes agree (blind {wb}/10, known {wk}/10)"),
        start,
    );
}

fn determinism(report: &mut Report) {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(
        Axes {
            alpha: vec![0.3, 0.6, 0.9],
            rho: vec![0.1, 0.3],
            p: vec![1, 2],
            sigma2: vec![0.01],
            n: vec![40, 60],
        },
        2,
        77,
    );
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, spec.to_json().unwrap()).unwrap();
    let run = |threads: usize| {
        let out = dir.path().join(format!("grid{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_camp"))
            .args(["sweep", "--spec"])
            .arg(&spec_path)
            .arg("--out")
            .arg(&out)
            .args(["--threads", &threads.to_string()])
            .status()
            .unwrap();
        assert!(status.success());
        let text = std::fs::read_to_string(out).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[1..].sort();
        lines.join("\n")
    };
    let (one, four, again) = (run(1), run(4), run(1));
    let rows = one.lines().count() - 1;
    report.check(
        "sweep determinism",
        one == four && one == again,
        format!("{rows} rows identical across 1, 4, 1 threads"),
        start,
    );
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut report = Report { failures: 0 };
    denoiser(&mut report);
    channel(&mut report);
    gamp_reduction(&mut report);
    fixed_point(&mut report);
    success_point(&mut report);
    impossibility(&mut report);
    sharpness(&mut report);
    small_sigma_regression(&mut report);
    determinism(&mut report);
    println!(
        "{} failed, total {:.0}s",
        report.failures,
        total.elapsed().as_secs_f64()
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
