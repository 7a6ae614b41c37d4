//! Seeded parameter sweeps over `(alpha, rho, P, sigma2, N)` grids.
//!
//! Every replicate of every cell gets its own seed derived from the base seed
//! and the cell's axis indices, so results do not depend on scheduling or
//! thread count. Results go out as one CSV row per replicate.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GenerationConfig, ProblemInstance, Sparsity};
use crate::solver::{Camp, GainMode, SolverConfig, Status, DEFAULT_INFLATION};

/// Header of the grid CSV.
pub const CSV_HEADER: &str = "alpha,rho,P,sigma2,N,seed,mse_corr,iterations,converged";

/// `MSE^corr` values are floored here before taking `log10`.
pub const MSE_FLOOR: f64 = 1e-30;

/// Counting bound `P rho / (P - 1)`; infinite for a single signal.
pub fn alpha_min(p: usize, rho: f64) -> f64 {
    if p <= 1 {
        f64::INFINITY
    } else {
        p as f64 * rho / (p as f64 - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<usize>,
    pub sigma2: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
}

/// Solver knobs a sweep may override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub damping: f64,
    pub crit_tol: f64,
    pub delta_reg: f64,
    pub stall_window: usize,
    pub inflation_factor: f64,
    pub gain_mode: GainMode,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            crit_tol: 1e-13,
            delta_reg: 1e-17,
            stall_window: 100,
            inflation_factor: DEFAULT_INFLATION,
            gain_mode: GainMode::Blind,
            max_iters: 2000,
        }
    }
}

impl SolverSettings {
    pub fn solver_config(&self, gen: &GenerationConfig) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::matched_with_inflation(gen, self.inflation_factor)?;
        cfg.damping = self.damping;
        cfg.crit_tol = self.crit_tol;
        cfg.delta_reg = self.delta_reg;
        cfg.stall_window = self.stall_window;
        cfg.gain_mode = self.gain_mode;
        cfg.max_iters = self.max_iters;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_replicates() -> usize {
    1
}

fn default_success_threshold() -> f64 {
    1e-8
}

fn default_sparsity() -> Sparsity {
    Sparsity::Exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axes: Axes,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    #[serde(default = "default_sparsity")]
    pub sparsity: Sparsity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(axes: Axes, replicates: usize, base_seed: u64) -> Self {
        Self {
            axes,
            replicates,
            base_seed,
            solver: SolverSettings::default(),
            success_threshold: default_success_threshold(),
            sparsity: default_sparsity(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let a = &self.axes;
        if a.alpha.is_empty() || a.rho.is_empty() || a.p.is_empty() || a.sigma2.is_empty() || a.n.is_empty() {
            return bad("every axis needs at least one value".into());
        }
        if let Some(x) = a.alpha.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return bad(format!("alpha must be positive, got {x}"));
        }
        if let Some(x) = a.rho.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
            return bad(format!("rho must lie in (0, 1], got {x}"));
        }
        if a.p.contains(&0) {
            return bad("P must be >= 1".into());
        }
        if let Some(x) = a.sigma2.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            return bad(format!("sigma2 must be >= 0, got {x}"));
        }
        if let Some(x) = a.n.iter().find(|&&x| x < 16) {
            return bad(format!("N must be >= 16, got {x}"));
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1".into());
        }
        if !(self.success_threshold > 0.0) {
            return bad(format!(
                "success_threshold must be positive, got {}",
                self.success_threshold
            ));
        }
        for cell in self.cells() {
            if cell.m == 0 {
                return bad(format!(
                    "alpha={} with N={} gives no measurements",
                    cell.alpha, cell.n
                ));
            }
            // rejects gain priors whose (inflated) support reaches zero
            self.solver.solver_config(&cell.generation_config(0, self.sparsity))?;
        }
        Ok(())
    }

    /// Cells in output order: `P`, `sigma2`, `N`, `rho`, then `alpha` fastest.
    pub fn cells(&self) -> Vec<CellParams> {
        let a = &self.axes;
        let mut out = Vec::new();
        for (ip, &p) in a.p.iter().enumerate() {
            for (is, &sigma2) in a.sigma2.iter().enumerate() {
                for (inn, &n) in a.n.iter().enumerate() {
                    for (ir, &rho) in a.rho.iter().enumerate() {
                        for (ia, &alpha) in a.alpha.iter().enumerate() {
                            out.push(CellParams {
                                alpha,
                                rho,
                                p,
                                sigma2,
                                n,
                                m: (alpha * n as f64).round() as usize,
                                k: (rho * n as f64).round() as usize,
                                index: [ia, ir, ip, is, inn],
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn seed_for(&self, cell: &CellParams, replicate: usize) -> u64 {
        cell_seed(self.base_seed, &cell.index, replicate)
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "P")]
    pub p: usize,
    pub sigma2: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Indices into the `(alpha, rho, P, sigma2, N)` axes.
    pub index: [usize; 5],
}

impl CellParams {
    pub fn alpha_min(&self) -> f64 {
        alpha_min(self.p, self.rho)
    }

    pub fn generation_config(&self, seed: u64, sparsity: Sparsity) -> GenerationConfig {
        GenerationConfig {
            sparsity,
            ..GenerationConfig::standard(self.n, self.m, self.p, self.rho, self.sigma2, seed)
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replicate, a hash of the base seed, axis indices and replicate.
pub fn cell_seed(base_seed: u64, index: &[usize; 5], replicate: usize) -> u64 {
    let mut h = splitmix64(base_seed);
    for &i in index.iter().chain(std::iter::once(&replicate)) {
        h = splitmix64(h ^ i as u64);
    }
    h
}

/// How a replicate ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    Stalled,
    MaxIters,
    /// The solver hit non-finite values or an invalid intermediate state.
    Diverged,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::Stalled => "stalled",
            Outcome::MaxIters => "max_iters",
            Outcome::Diverged => "diverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "converged" => Outcome::Converged,
            "stalled" => Outcome::Stalled,
            "max_iters" => Outcome::MaxIters,
            "diverged" => Outcome::Diverged,
            _ => return None,
        })
    }
}

impl From<Status> for Outcome {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => Outcome::Converged,
            Status::Stalled => Outcome::Stalled,
            Status::MaxIters => Outcome::MaxIters,
        }
    }
}

/// One row of the grid CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub alpha: f64,
    pub rho: f64,
    #[serde(rename = "P")]
    pub p: usize,
    pub sigma2: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// NaN when the replicate diverged.
    pub mse_corr: f64,
    pub iterations: usize,
    #[serde(rename = "converged")]
    pub outcome: Outcome,
}

impl GridRow {
    pub fn succeeded(&self, threshold: f64) -> bool {
        self.mse_corr < threshold
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_float(self.alpha),
            fmt_float(self.rho),
            self.p,
            fmt_float(self.sigma2),
            self.n,
            self.seed,
            fmt_float(self.mse_corr),
            self.iterations,
            self.outcome.as_str()
        )
    }
}

/// 17 significant digits; `NaN`/`inf`/`-inf` for non-finite values.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Per-cell summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    /// Mean of `log10(max(mse_corr, MSE_FLOOR))` over non-diverged replicates.
    pub mean_log10_mse: f64,
    pub success_rate: f64,
    /// `None` when no replicate succeeded.
    pub mean_iterations_on_success: Option<f64>,
}

pub fn aggregate(rows: &[GridRow], threshold: f64) -> Aggregates {
    let logs: Vec<f64> = rows
        .iter()
        .filter(|r| r.mse_corr.is_finite())
        .map(|r| r.mse_corr.max(MSE_FLOOR).log10())
        .collect();
    let mean_log10_mse = if logs.is_empty() {
        f64::NAN
    } else {
        logs.iter().sum::<f64>() / logs.len() as f64
    };
    let wins: Vec<&GridRow> = rows.iter().filter(|r| r.succeeded(threshold)).collect();
    let success_rate = if rows.is_empty() {
        f64::NAN
    } else {
        wins.len() as f64 / rows.len() as f64
    };
    let mean_iterations_on_success = if wins.is_empty() {
        None
    } else {
        Some(wins.iter().map(|r| r.iterations as f64).sum::<f64>() / wins.len() as f64)
    };
    Aggregates {
        mean_log10_mse,
        success_rate,
        mean_iterations_on_success,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub params: CellParams,
    pub replicates: Vec<GridRow>,
    pub aggregates: Aggregates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub spec: SweepSpec,
    pub cells: Vec<CellResult>,
}

impl GridResult {
    pub fn rows(&self) -> impl Iterator<Item = &GridRow> {
        self.cells.iter().flat_map(|c| c.replicates.iter())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in self.rows() {
            writeln!(out, "{}", row.csv_line())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }

    /// Cells matching a predicate on their parameters.
    pub fn select<'a>(
        &'a self,
        pred: impl Fn(&CellParams) -> bool + 'a,
    ) -> impl Iterator<Item = &'a CellResult> + 'a {
        self.cells.iter().filter(move |c| pred(&c.params))
    }

    /// `(alpha, success_rate)` for cells matching `pred`, sorted by alpha.
    pub fn success_curve(&self, pred: impl Fn(&CellParams) -> bool) -> Vec<(f64, f64)> {
        let mut curve: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| pred(&c.params))
            .map(|c| (c.params.alpha, c.aggregates.success_rate))
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        curve
    }

    /// `(alpha, successes, replicates)` for cells matching `pred`, sorted by alpha.
    pub fn success_counts(&self, pred: impl Fn(&CellParams) -> bool) -> Vec<(f64, usize, usize)> {
        let threshold = self.spec.success_threshold;
        let mut counts: Vec<(f64, usize, usize)> = self
            .cells
            .iter()
            .filter(|c| pred(&c.params))
            .map(|c| {
                let wins = c.replicates.iter().filter(|r| r.succeeded(threshold)).count();
                (c.params.alpha, wins, c.replicates.len())
            })
            .collect();
        counts.sort_by(|a, b| a.0.total_cmp(&b.0));
        counts
    }

    /// `(alpha, mean iterations on success)` for matching cells with at least one success.
    pub fn iterations_curve(&self, pred: impl Fn(&CellParams) -> bool) -> Vec<(f64, f64)> {
        let mut curve: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| pred(&c.params))
            .filter_map(|c| Some((c.params.alpha, c.aggregates.mean_iterations_on_success?)))
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        curve
    }
}

/// Solve one replicate; solver failures become `Diverged` rows.
pub fn run_replicate(spec: &SweepSpec, cell: &CellParams, replicate: usize) -> GridRow {
    let seed = spec.seed_for(cell, replicate);
    let gen = cell.generation_config(seed, spec.sparsity);
    let outcome = ProblemInstance::generate(&gen).and_then(|inst| {
        let cfg = spec.solver.solver_config(&gen)?;
        Camp::new(&inst, &cfg)?.run()
    });
    let (mse_corr, iterations, outcome) = match outcome {
        Ok(res) => (res.mse_corr, res.iterations, res.status.into()),
        Err(Error::Divergence { iteration, .. }) => (f64::NAN, iteration, Outcome::Diverged),
        Err(_) => (f64::NAN, 0, Outcome::Diverged),
    };
    GridRow {
        alpha: cell.alpha,
        rho: cell.rho,
        p: cell.p,
        sigma2: cell.sigma2,
        n: cell.n,
        seed,
        mse_corr,
        iterations,
        outcome,
    }
}

/// Run every replicate of every cell on a pool of `threads` workers
/// (`0` picks the rayon default).
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<GridResult> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replicates).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<GridRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| run_replicate(spec, &cells[c], r))
            .collect()
    });
    let mut rows = rows.into_iter();
    let results = cells
        .into_iter()
        .map(|params| {
            let replicates: Vec<GridRow> = rows.by_ref().take(spec.replicates).collect();
            let aggregates = aggregate(&replicates, spec.success_threshold);
            CellResult {
                params,
                replicates,
                aggregates,
            }
        })
        .collect();
    Ok(GridResult {
        spec: spec.clone(),
        cells: results,
    })
}

fn require_single(name: &str, len: usize) -> Result<()> {
    if len != 1 {
        return Err(Error::InvalidConfig(format!(
            "this sweep needs exactly one {name} value, got {len}"
        )));
    }
    Ok(())
}

/// alpha-rho diagram at fixed `(P, sigma2, N)`.
pub fn run_phase_diagram(spec: &SweepSpec, threads: usize) -> Result<GridResult> {
    require_single("P", spec.axes.p.len())?;
    require_single("sigma2", spec.axes.sigma2.len())?;
    require_single("N", spec.axes.n.len())?;
    run_sweep(spec, threads)
}

/// alpha profiles for several `N` at fixed `(rho, P, sigma2)`.
pub fn run_transition_profile(spec: &SweepSpec, threads: usize) -> Result<GridResult> {
    require_single("rho", spec.axes.rho.len())?;
    require_single("P", spec.axes.p.len())?;
    require_single("sigma2", spec.axes.sigma2.len())?;
    if spec.axes.alpha.len() < 2 {
        return Err(Error::InvalidConfig(
            "a transition profile needs at least two alpha values".into(),
        ));
    }
    run_sweep(spec, threads)
}

/// sigma2-P diagram at fixed `(rho, alpha, N)`.
pub fn run_sigma_p_diagram(spec: &SweepSpec, threads: usize) -> Result<GridResult> {
    require_single("rho", spec.axes.rho.len())?;
    require_single("alpha", spec.axes.alpha.len())?;
    require_single("N", spec.axes.n.len())?;
    run_sweep(spec, threads)
}

/// Where an empirical success curve crosses one half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub alpha: f64,
    /// d(success rate)/d(alpha) at the crossing.
    pub slope: f64,
}

/// Pool-adjacent-violators fit of a non-decreasing sequence.
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((m1 * n1 as f64 + m2 * n2 as f64) / (n1 + n2) as f64, n1 + n2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Half-way crossing of the isotonic fit of a `(alpha, rate)` curve sorted by alpha.
pub fn half_crossing(curve: &[(f64, f64)]) -> Option<Crossing> {
    let fitted = isotonic_fit(&curve.iter().map(|p| p.1).collect::<Vec<_>>());
    for i in 1..curve.len() {
        let (r0, r1) = (fitted[i - 1], fitted[i]);
        if r0 < 0.5 && r1 >= 0.5 {
            let (a0, a1) = (curve[i - 1].0, curve[i].0);
            let slope = (r1 - r0) / (a1 - a0);
            let alpha = a0 + (0.5 - r0) / slope;
            return Some(Crossing { alpha, slope });
        }
    }
    None
}

/// Binomial logistic fit `P(success) = 1 / (1 + exp(-b (alpha - c)))` by
/// Newton's method on `(alpha, successes, trials)` points.
///
/// Returns the centre `c` and the slope `b / 4` at the half-way point, or
/// `None` when the fitted curve is not increasing. A tiny ridge on `b` keeps
/// perfectly separated data finite.
pub fn logistic_crossing(points: &[(f64, usize, usize)]) -> Option<Crossing> {
    const RIDGE: f64 = 1e-6;
    let total: usize = points.iter().map(|p| p.2).sum();
    if total == 0 {
        return None;
    }
    let shift = points.iter().map(|p| p.0 * p.2 as f64).sum::<f64>() / total as f64;
    let loglik = |b0: f64, b1: f64| {
        let mut acc = -0.5 * RIDGE * b1 * b1;
        for &(a, s, n) in points {
            let z = b0 + b1 * (a - shift);
            // ln(1 + e^z) without overflow
            let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
            acc += s as f64 * z - n as f64 * softplus;
        }
        acc
    };
    let (mut b0, mut b1) = (0.0, 0.0);
    let mut current = loglik(b0, b1);
    for _ in 0..200 {
        let (mut g0, mut g1) = (0.0, -RIDGE * b1);
        let (mut h00, mut h01, mut h11) = (0.0, 0.0, RIDGE);
        for &(a, s, n) in points {
            let x = a - shift;
            let q = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
            let w = n as f64 * q * (1.0 - q);
            let r = s as f64 - n as f64 * q;
            g0 += r;
            g1 += r * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-12 {
            let next = loglik(b0 + t * d0, b1 + t * d1);
            if next >= current {
                b0 += t * d0;
                b1 += t * d1;
                current = next;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved || (t * d0).abs().max((t * d1).abs()) < 1e-10 * (1.0 + b1.abs()) {
            break;
        }
    }
    if !(b1 > 0.0 && b1.is_finite()) {
        return None;
    }
    Some(Crossing {
        alpha: shift - b0 / b1,
        slope: b1 / 4.0,
    })
}

/// Linear interpolation on a curve sorted by its first coordinate; `None`
/// outside its range.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let i = curve.iter().position(|p| p.0 >= x)?;
    if curve[i].0 == x {
        return Some(curve[i].1);
    }
    if i == 0 {
        return None;
    }
    let ((x0, y0), (x1, y1)) = (curve[i - 1], curve[i]);
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Parse a grid CSV produced by [`GridResult::write_csv`].
pub fn read_grid_csv<R: Read>(input: R) -> Result<Vec<GridRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if headers.iter().take(expected.len()).ne(expected.iter().copied()) {
        return Err(Error::InvalidConfig(format!(
            "unexpected grid CSV header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number {:?}", field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|_| Error::InvalidConfig(format!("bad integer {:?}", field(i))))
        };
        rows.push(GridRow {
            alpha: num(0)?,
            rho: num(1)?,
            p: int(2)? as usize,
            sigma2: num(3)?,
            n: int(4)? as usize,
            seed: int(5)?,
            mse_corr: num(6)?,
            iterations: int(7)? as usize,
            outcome: Outcome::parse(field(8))
                .ok_or_else(|| Error::InvalidConfig(format!("bad status {:?}", field(8))))?,
        });
    }
    Ok(rows)
}

/// Group rows by their cell parameters and aggregate each group.
pub fn aggregate_rows(rows: &[GridRow], threshold: f64) -> Vec<(GridRow, Aggregates)> {
    let mut groups: BTreeMap<[u64; 5], Vec<GridRow>> = BTreeMap::new();
    for r in rows {
        let key = [
            r.alpha.to_bits(),
            r.rho.to_bits(),
            r.p as u64,
            r.sigma2.to_bits(),
            r.n as u64,
        ];
        groups.entry(key).or_default().push(r.clone());
    }
    groups
        .into_values()
        .map(|g| {
            let agg = aggregate(&g, threshold);
            (g[0].clone(), agg)
        })
        .collect()
}

/// Copy a grid CSV, appending `alpha_min` and one constant column per reference line.
pub fn annotate_csv<R: Read, W: Write>(
    input: R,
    output: W,
    references: &[(String, f64)],
) -> Result<()> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidConfig(format!("grid CSV has no {name} column")))
    };
    let (rho_col, p_col) = (col("rho")?, col("P")?);
    let mut writer = csv::Writer::from_writer(output);
    let mut header: Vec<String> = headers.iter().map(String::from).collect();
    header.push("alpha_min".into());
    header.extend(references.iter().map(|(name, _)| name.clone()));
    writer.write_record(&header)?;
    for record in reader.records() {
        let record = record?;
        let rho: f64 = record[rho_col]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad rho {:?}", &record[rho_col])))?;
        let p: usize = record[p_col]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad P {:?}", &record[p_col])))?;
        let mut fields: Vec<String> = record.iter().map(String::from).collect();
        fields.push(fmt_float(alpha_min(p, rho)));
        fields.extend(references.iter().map(|(_, v)| fmt_float(*v)));
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}
