//! Measurement model for blind calibration with multiplicative sensor gains.
//!
//! Each sensor `mu` reports `y[mu, l] = (sum_i F[mu, i] x[i, l] + w[mu, l]) / d[mu]`
//! for `P` unknown sparse signals sharing the same unknown gains `d`.
//! Random instances are drawn from a seeded ChaCha generator with one
//! stream per component (matrix, signals, gains, noise), so each piece can
//! be regenerated on its own.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MATRIX_STREAM: u64 = 0;
const SIGNAL_STREAM: u64 = 1;
const GAIN_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Spike-and-slab law: zero with probability `1 - rho`, otherwise Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBernoulliPrior {
    pub rho: f64,
    pub mean: f64,
    pub variance: f64,
}

impl GaussBernoulliPrior {
    pub fn new(rho: f64, mean: f64, variance: f64) -> Result<Self> {
        let prior = Self { rho, mean, variance };
        prior.validate()?;
        Ok(prior)
    }

    /// Zero-mean, unit-variance slab.
    pub fn standard(rho: f64) -> Result<Self> {
        Self::new(rho, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "signal density rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) || !self.mean.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "slab needs finite mean and positive variance, got ({}, {})",
                self.mean, self.variance
            )));
        }
        Ok(())
    }

    /// Mean of the full mixture.
    pub fn mixture_mean(&self) -> f64 {
        self.rho * self.mean
    }

    /// Variance of the full mixture.
    pub fn mixture_variance(&self) -> f64 {
        let second = self.rho * (self.variance + self.mean * self.mean);
        let m = self.mixture_mean();
        second - m * m
    }
}

/// Uniform law on gains, parameterized by its center and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGainPrior {
    pub center: f64,
    pub variance: f64,
}

impl UniformGainPrior {
    pub fn new(center: f64, variance: f64) -> Result<Self> {
        let prior = Self { center, variance };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) || !self.center.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gain prior needs finite center and variance >= 0, got ({}, {})",
                self.center, self.variance
            )));
        }
        let (lo, _) = self.support();
        if lo <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gain support [{}, {}] must exclude zero",
                lo,
                self.support().1
            )));
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        (3.0 * self.variance).sqrt()
    }

    pub fn support(&self) -> (f64, f64) {
        let h = self.half_width();
        (self.center - h, self.center + h)
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width()
    }

    pub fn is_point_mass(&self) -> bool {
        self.variance == 0.0
    }

    /// Same center, variance multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Result<Self> {
        Self::new(self.center, self.variance * factor)
    }
}

/// How many entries of each signal are non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sparsity {
    /// Each entry is non-zero independently with probability `rho`.
    #[default]
    Bernoulli,
    /// Exactly `round(rho * N)` non-zeros per signal, at uniform positions.
    Exact,
}

fn default_signal_variance() -> f64 {
    1.0
}

fn default_gain_center() -> f64 {
    1.0
}

/// Everything needed to draw one random problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub rho: f64,
    pub sigma2: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub signal_mean: f64,
    #[serde(default = "default_signal_variance")]
    pub signal_variance: f64,
    #[serde(default = "default_gain_center")]
    pub gain_center: f64,
    #[serde(default)]
    pub sparsity: Sparsity,
}

impl GenerationConfig {
    /// Standard experiment setup: unit Gaussian slab, gains centered at 1, no noise.
    pub fn standard(n: usize, m: usize, p: usize, rho: f64, sigma2: f64, seed: u64) -> Self {
        Self {
            n,
            m,
            p,
            rho,
            sigma2,
            delta: 0.0,
            seed,
            signal_mean: 0.0,
            signal_variance: 1.0,
            gain_center: 1.0,
            sparsity: Sparsity::Bernoulli,
        }
    }

    /// Non-zeros per signal under [`Sparsity::Exact`].
    pub fn exact_k(&self) -> usize {
        (self.rho * self.n as f64).round() as usize
    }

    pub fn signal_prior(&self) -> Result<GaussBernoulliPrior> {
        GaussBernoulliPrior::new(self.rho, self.signal_mean, self.signal_variance)
    }

    pub fn gain_prior(&self) -> Result<UniformGainPrior> {
        UniformGainPrior::new(self.gain_center, self.sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.p == 0 {
            return Err(Error::InvalidConfig(format!(
                "N, M, P must be >= 1, got ({}, {}, {})",
                self.n, self.m, self.p
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be >= 0, got {}",
                self.delta
            )));
        }
        self.signal_prior()?;
        self.gain_prior()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ground truth together with what a solver gets to observe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    /// Measurement matrix, `M x N`.
    pub f: Array2<f64>,
    /// True signals, `N x P`.
    pub x0: Array2<f64>,
    /// True gains, length `M`.
    pub d0: Array1<f64>,
    /// Readings, `M x P`.
    pub y: Array2<f64>,
    pub delta: f64,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn generate(cfg: &GenerationConfig) -> Result<Self> {
        cfg.validate()?;
        let f = generate_matrix(cfg.n, cfg.m, cfg.seed)?;
        let x0 = match cfg.sparsity {
            Sparsity::Bernoulli => generate_signals(cfg.n, cfg.p, &cfg.signal_prior()?, cfg.seed)?,
            Sparsity::Exact => {
                generate_k_sparse_signals(cfg.n, cfg.p, cfg.exact_k(), &cfg.signal_prior()?, cfg.seed)?
            }
        };
        let d0 = generate_gains(cfg.m, &cfg.gain_prior()?, cfg.seed)?;
        let y = forward_product_channel(&f, &x0, &d0, cfg.delta, cfg.seed)?;
        Ok(Self {
            f,
            x0,
            d0,
            y,
            delta: cfg.delta,
            seed: cfg.seed,
        })
    }

    /// Assemble an instance from explicit parts, checking shapes.
    pub fn from_parts(
        f: Array2<f64>,
        x0: Array2<f64>,
        d0: Array1<f64>,
        y: Array2<f64>,
        delta: f64,
        seed: u64,
    ) -> Result<Self> {
        let (m, n) = f.dim();
        if x0.nrows() != n || d0.len() != m || y.nrows() != m || y.ncols() != x0.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "F is {}x{}, X0 is {}x{}, d0 has {}, Y is {}x{}",
                m,
                n,
                x0.nrows(),
                x0.ncols(),
                d0.len(),
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(Self {
            f,
            x0,
            d0,
            y,
            delta,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.f.ncols()
    }

    pub fn m(&self) -> usize {
        self.f.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    /// Write `F.csv`, `X0.csv`, `d0.csv` and `Y.csv` into `dir`.
    pub fn write_csv_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix_csv(&dir.join("F.csv"), &self.f)?;
        write_matrix_csv(&dir.join("X0.csv"), &self.x0)?;
        write_matrix_csv(&dir.join("d0.csv"), &self.d0.clone().insert_axis(Axis(1)))?;
        write_matrix_csv(&dir.join("Y.csv"), &self.y)?;
        Ok(())
    }

    pub fn read_csv_dir(dir: &Path, delta: f64, seed: u64) -> Result<Self> {
        let f = read_matrix_csv(&dir.join("F.csv"))?;
        let x0 = read_matrix_csv(&dir.join("X0.csv"))?;
        let d0 = read_matrix_csv(&dir.join("d0.csv"))?;
        let y = read_matrix_csv(&dir.join("Y.csv"))?;
        if d0.ncols() != 1 {
            return Err(Error::DimensionMismatch(
                "d0.csv must hold a single column".into(),
            ));
        }
        Self::from_parts(f, x0, d0.column(0).to_owned(), y, delta, seed)
    }
}

/// iid Gaussian `M x N` matrix with entry variance `1/N`.
pub fn generate_matrix(n: usize, m: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "matrix dimensions must be >= 1, got {m}x{n}"
        )));
    }
    let mut rng = component_rng(seed, MATRIX_STREAM);
    let scale = 1.0 / (n as f64).sqrt();
    Ok(Array2::from_shape_simple_fn((m, n), || {
        let g: f64 = StandardNormal.sample(&mut rng);
        g * scale
    }))
}

/// `N x P` Gauss-Bernoulli signals.
pub fn generate_signals(
    n: usize,
    p: usize,
    prior: &GaussBernoulliPrior,
    seed: u64,
) -> Result<Array2<f64>> {
    prior.validate()?;
    let mut rng = component_rng(seed, SIGNAL_STREAM);
    let slab = Normal::new(prior.mean, prior.variance.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(Array2::from_shape_simple_fn((n, p), || {
        let nonzero = rng.random::<f64>() < prior.rho;
        let value = slab.sample(&mut rng);
        if nonzero {
            value
        } else {
            0.0
        }
    }))
}

/// `N x P` signals with exactly `k` slab-distributed non-zeros per column.
pub fn generate_k_sparse_signals(
    n: usize,
    p: usize,
    k: usize,
    prior: &GaussBernoulliPrior,
    seed: u64,
) -> Result<Array2<f64>> {
    prior.validate()?;
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "cannot place {k} non-zeros in a signal of length {n}"
        )));
    }
    let mut rng = component_rng(seed, SIGNAL_STREAM);
    let slab = Normal::new(prior.mean, prior.variance.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut x = Array2::zeros((n, p));
    for mut col in x.columns_mut() {
        let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        for i in support {
            col[i] = slab.sample(&mut rng);
        }
    }
    Ok(x)
}

/// Length-`M` gains drawn uniformly on the prior's support.
pub fn generate_gains(m: usize, prior: &UniformGainPrior, seed: u64) -> Result<Array1<f64>> {
    prior.validate()?;
    if prior.is_point_mass() {
        return Ok(Array1::from_elem(m, prior.center));
    }
    let (lo, hi) = prior.support();
    let law = Uniform::new_inclusive(lo, hi).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = component_rng(seed, GAIN_STREAM);
    Ok(Array1::from_shape_simple_fn(m, || law.sample(&mut rng)))
}

/// Apply the product channel `y = (F x + w) / d` with `w ~ N(0, delta)`.
pub fn forward_product_channel(
    f: &Array2<f64>,
    x0: &Array2<f64>,
    d0: &Array1<f64>,
    delta: f64,
    seed: u64,
) -> Result<Array2<f64>> {
    let (m, n) = f.dim();
    if x0.nrows() != n || d0.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "F is {}x{}, X0 has {} rows, d0 has {} entries",
            m,
            n,
            x0.nrows(),
            d0.len()
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be >= 0, got {delta}"
        )));
    }
    if let Some(sensor) = d0.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroGain { sensor });
    }
    let mut y = f.dot(x0);
    if delta > 0.0 {
        let mut rng = component_rng(seed, NOISE_STREAM);
        let sd = delta.sqrt();
        y.mapv_inplace(|z| {
            let g: f64 = StandardNormal.sample(&mut rng);
            z + sd * g
        });
    }
    for (mut row, &d) in y.rows_mut().into_iter().zip(d0.iter()) {
        row.mapv_inplace(|v| v / d);
    }
    Ok(y)
}

/// Dump a matrix as headerless CSV with 17 significant digits.
pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "{}: ragged row {}",
                    path.display(),
                    rows + 1
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("{}: bad number {field:?}", path.display()))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))
}
