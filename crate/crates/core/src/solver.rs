//! The calibration-AMP iteration.
//!
//! One sweep updates, in order: projected variances `V`, projections `omega`
//! with the Onsager term built from the previous sweep's `e`, the gain field
//! `(C^2, T)` and gain moments `(k, l)`, the output messages `(e, h)`, the
//! signal field `(Sigma^2, R)`, and finally the signal moments `(a, v)`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::channel::{OutputChannel, ProductChannel};
use crate::error::{Error, Result};
use crate::model::{GaussBernoulliPrior, GenerationConfig, ProblemInstance, UniformGainPrior};
use crate::priors::{gain_posterior_moments, signal_posterior_moments};

/// Floor applied to signal and gain variances.
pub const VARIANCE_FLOOR: f64 = 1e-18;
/// `Sigma^2` is kept inside `[SIGMA2_MIN, SIGMA2_MAX]`.
pub const SIGMA2_MIN: f64 = 1e-18;
pub const SIGMA2_MAX: f64 = 1e18;
/// Assumed gain variance relative to the generating one.
pub const DEFAULT_INFLATION: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// Gains are unknown and estimated jointly with the signals.
    #[default]
    Blind,
    /// Gains are pinned to the true values (plain GAMP on `d0 * y`).
    Known,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// `new <- damping * new + (1 - damping) * old` on `(a, v)` and `(k, l)`.
    pub damping: f64,
    /// Extra noise variance added to the channel for stability.
    pub delta_reg: f64,
    pub crit_tol: f64,
    /// Stop after this many iterations without a new minimum of `crit`.
    pub stall_window: usize,
    pub signal_prior: GaussBernoulliPrior,
    pub gain_prior: UniformGainPrior,
    pub gain_mode: GainMode,
}

impl SolverConfig {
    pub fn new(signal_prior: GaussBernoulliPrior, gain_prior: UniformGainPrior) -> Self {
        Self {
            max_iters: 2000,
            damping: 0.5,
            delta_reg: 1e-17,
            crit_tol: 1e-13,
            stall_window: 100,
            signal_prior,
            gain_prior,
            gain_mode: GainMode::Blind,
        }
    }

    /// Priors matched to the generator, with the gain variance inflated by 1.1.
    pub fn matched(cfg: &GenerationConfig) -> Result<Self> {
        Self::matched_with_inflation(cfg, DEFAULT_INFLATION)
    }

    pub fn matched_with_inflation(cfg: &GenerationConfig, inflation: f64) -> Result<Self> {
        if !(inflation > 0.0 && inflation.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "inflation factor must be positive, got {inflation}"
            )));
        }
        Ok(Self::new(
            cfg.signal_prior()?,
            cfg.gain_prior()?.inflated(inflation)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.crit_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "crit_tol must be positive, got {}",
                self.crit_tol
            )));
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidConfig("stall_window must be >= 1".into()));
        }
        if !(self.delta_reg >= 0.0 && self.delta_reg.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta_reg must be >= 0, got {}",
                self.delta_reg
            )));
        }
        self.signal_prior.validate()?;
        self.gain_prior.validate()?;
        Ok(())
    }
}

/// Everything the iteration carries from one sweep to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub a: Array2<f64>,
    pub v: Array2<f64>,
    pub omega: Array2<f64>,
    pub big_v: Array2<f64>,
    pub e: Array2<f64>,
    pub h: Array2<f64>,
    pub k: Array1<f64>,
    pub l: Array1<f64>,
    pub c2: Array1<f64>,
    pub t: Array1<f64>,
    pub sigma2: Array2<f64>,
    pub r: Array2<f64>,
    pub iter: usize,
    pub crit_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Stalled,
    MaxIters,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Stalled => "stalled",
            Status::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub a_final: Array2<f64>,
    pub k_final: Array1<f64>,
    pub iterations: usize,
    pub status: Status,
    pub crit_final: f64,
    pub mse_corr: f64,
    pub s_hat: f64,
    pub crit_trace: Vec<f64>,
}

/// The JSON view of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: Status,
    pub iterations: usize,
    pub crit_final: f64,
    pub mse_corr: f64,
    pub s_hat: f64,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            converged: self.status,
            iterations: self.iterations,
            crit_final: self.crit_final,
            mse_corr: self.mse_corr,
            s_hat: self.s_hat,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// `iteration,crit` rows, one per sweep.
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "iteration,crit")?;
        for (i, c) in self.crit_trace.iter().enumerate() {
            writeln!(out, "{},{:.16e}", i + 1, c)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A solver bound to one instance and configuration.
pub struct Camp<'a> {
    instance: &'a ProblemInstance,
    config: &'a SolverConfig,
    f_sq: Array2<f64>,
    channel: ProductChannel,
}

impl<'a> Camp<'a> {
    pub fn new(instance: &'a ProblemInstance, config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            instance,
            config,
            f_sq: instance.f.mapv(|x| x * x),
            channel: ProductChannel,
        })
    }

    fn channel_noise(&self) -> f64 {
        self.instance.delta + self.config.delta_reg
    }

    /// `omega = Y`, `(a, v)` and `(k, l)` from the assumed priors, `e = 0`.
    pub fn initialize(&self) -> SolverState {
        let inst = self.instance;
        let (n, m, p) = (inst.n(), inst.m(), inst.p());
        let prior = &self.config.signal_prior;
        let a = Array2::from_elem((n, p), prior.mixture_mean());
        let v = Array2::from_elem((n, p), prior.mixture_variance());
        let (k, l) = match self.config.gain_mode {
            GainMode::Blind => (
                Array1::from_elem(m, self.config.gain_prior.center),
                Array1::from_elem(m, self.config.gain_prior.variance),
            ),
            GainMode::Known => (inst.d0.clone(), Array1::zeros(m)),
        };
        let big_v = self.f_sq.dot(&v);
        SolverState {
            a,
            v,
            omega: inst.y.clone(),
            big_v,
            e: Array2::zeros((m, p)),
            h: Array2::zeros((m, p)),
            k,
            l,
            c2: Array1::zeros(m),
            t: Array1::zeros(m),
            sigma2: Array2::zeros((n, p)),
            r: Array2::zeros((n, p)),
            iter: 0,
            crit_trace: Vec::new(),
        }
    }

    /// One full sweep of the message-passing equations.
    pub fn iterate_once(&self, state: &mut SolverState) -> Result<()> {
        let inst = self.instance;
        let cfg = self.config;
        let delta = self.channel_noise();
        let damp = cfg.damping;
        let iteration = state.iter + 1;
        let diverged = |field| Error::Divergence { iteration, field };

        let big_v = self.f_sq.dot(&state.v);
        if !all_finite(&big_v) {
            return Err(diverged("V"));
        }
        let mut omega = inst.f.dot(&state.a);
        Zip::from(&mut omega)
            .and(&big_v)
            .and(&state.e)
            .for_each(|w, &v, &e| *w -= v * e);
        if !all_finite(&omega) {
            return Err(diverged("omega"));
        }

        if cfg.gain_mode == GainMode::Blind {
            let (c2, t) = self.channel.gain_field(&inst.y, &omega, &big_v, delta)?;
            if !all_finite(&c2) || !all_finite(&t) {
                return Err(diverged("gain field"));
            }
            let p = inst.p();
            for mu in 0..inst.m() {
                let g = gain_posterior_moments(&cfg.gain_prior, p, c2[mu], t[mu])?;
                state.k[mu] = damp * g.k + (1.0 - damp) * state.k[mu];
                state.l[mu] = (damp * g.l + (1.0 - damp) * state.l[mu]).max(VARIANCE_FLOOR);
            }
            state.c2 = c2;
            state.t = t;
        }

        let (e, mut h) = self
            .channel
            .output_messages(&inst.y, &omega, &big_v, &state.k, &state.l, delta)?;
        // gain uncertainty can push h below zero once V is tiny; a negative
        // curvature would flip the sign of the field precision
        h.mapv_inplace(|x| x.max(0.0));
        if !all_finite(&e) || !all_finite(&h) {
            return Err(diverged("e"));
        }

        let field_precision = self.f_sq.t().dot(&h);
        let field_shift = inst.f.t().dot(&e);
        let mut sigma2 = field_precision.mapv(|s| {
            if s > 0.0 {
                (1.0 / s).clamp(SIGMA2_MIN, SIGMA2_MAX)
            } else {
                SIGMA2_MAX
            }
        });
        if sigma2.iter().any(|s| s.is_nan()) {
            return Err(diverged("Sigma^2"));
        }
        sigma2.mapv_inplace(|s| s.clamp(SIGMA2_MIN, SIGMA2_MAX));
        let mut r = state.a.clone();
        Zip::from(&mut r)
            .and(&sigma2)
            .and(&field_shift)
            .for_each(|r, &s, &u| *r += s * u);
        if !all_finite(&r) {
            return Err(diverged("R"));
        }

        let prior = &cfg.signal_prior;
        let mut failure = None;
        Zip::from(&mut state.a)
            .and(&mut state.v)
            .and(&sigma2)
            .and(&r)
            .for_each(|a, v, &s, &r| match signal_posterior_moments(prior, s, r) {
                Ok(post) => {
                    *a = damp * post.mean + (1.0 - damp) * *a;
                    *v = (damp * post.variance + (1.0 - damp) * *v).max(VARIANCE_FLOOR);
                }
                Err(err) => failure = Some(err),
            });
        if let Some(err) = failure {
            return Err(err);
        }
        if !all_finite(&state.a) || !all_finite(&state.v) {
            return Err(diverged("a"));
        }

        state.big_v = big_v;
        state.e = e;
        state.h = h;
        state.omega = omega;
        state.sigma2 = sigma2;
        state.r = r;
        state.iter = iteration;
        Ok(())
    }

    pub fn crit(&self, state: &SolverState) -> f64 {
        compute_crit(state, self.instance)
    }

    /// Iterate from the standard initialization.
    pub fn run(&self) -> Result<SolveResult> {
        self.run_from(self.initialize())
    }

    /// Iterate from a caller-supplied state until convergence, stall, or the
    /// iteration cap, returning the iterate with the smallest `crit`.
    pub fn run_from(&self, mut state: SolverState) -> Result<SolveResult> {
        let cfg = self.config;
        let mut best = state.clone();
        let mut best_crit = self.crit(&state);
        let mut best_iter = state.iter;
        let mut trace = Vec::new();
        let mut status = Status::MaxIters;

        for _ in 0..cfg.max_iters {
            self.iterate_once(&mut state)?;
            let c = self.crit(&state);
            if !c.is_finite() {
                return Err(Error::Divergence {
                    iteration: state.iter,
                    field: "crit",
                });
            }
            trace.push(c);
            if c < best_crit {
                best_crit = c;
                best_iter = state.iter;
                best.clone_from(&state);
            }
            if c < cfg.crit_tol {
                status = Status::Converged;
                break;
            }
            if state.iter - best_iter >= cfg.stall_window {
                status = Status::Stalled;
                break;
            }
        }

        let inst = self.instance;
        let (mse_corr, s_hat) = compute_mse_corr(&best.a, &best.k, &inst.x0, &inst.d0)?;
        Ok(SolveResult {
            a_final: best.a,
            k_final: best.k,
            iterations: state.iter,
            status,
            crit_final: best_crit,
            mse_corr,
            s_hat,
            crit_trace: trace,
        })
    }
}

fn all_finite<D: ndarray::Dimension>(x: &ndarray::Array<f64, D>) -> bool {
    x.iter().all(|v| v.is_finite())
}

pub fn initialize(instance: &ProblemInstance, config: &SolverConfig) -> Result<SolverState> {
    Ok(Camp::new(instance, config)?.initialize())
}

pub fn iterate_once(
    state: &mut SolverState,
    instance: &ProblemInstance,
    config: &SolverConfig,
) -> Result<()> {
    Camp::new(instance, config)?.iterate_once(state)
}

pub fn run(instance: &ProblemInstance, config: &SolverConfig) -> Result<SolveResult> {
    Camp::new(instance, config)?.run()
}

/// `(1/MP) sum (k_mu y_ml - sum_i F_mi a_il)^2`.
pub fn compute_crit(state: &SolverState, instance: &ProblemInstance) -> f64 {
    let z = instance.f.dot(&state.a);
    let mut acc = 0.0;
    for (((mu, _), &y), &z) in instance.y.indexed_iter().zip(z.iter()) {
        let r = state.k[mu] * y - z;
        acc += r * r;
    }
    acc / instance.y.len() as f64
}

/// Scale-corrected MSE and the scale estimate `s_hat = mean(d0 / k)`.
pub fn compute_mse_corr(
    a: &Array2<f64>,
    k: &Array1<f64>,
    x0: &Array2<f64>,
    d0: &Array1<f64>,
) -> Result<(f64, f64)> {
    if a.dim() != x0.dim() || k.len() != d0.len() {
        return Err(Error::DimensionMismatch(format!(
            "a {:?} vs X0 {:?}, k {} vs d0 {}",
            a.dim(),
            x0.dim(),
            k.len(),
            d0.len()
        )));
    }
    if let Some(sensor) = k.iter().position(|&k| k == 0.0) {
        return Err(Error::ZeroGainEstimate { sensor });
    }
    let s_hat = d0.iter().zip(k).map(|(d, k)| d / k).sum::<f64>() / k.len() as f64;
    let mse = x0
        .iter()
        .zip(a)
        .map(|(x, a)| (x - s_hat * a).powi(2))
        .sum::<f64>()
        / x0.len() as f64;
    Ok((mse, s_hat))
}
