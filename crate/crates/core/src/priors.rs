//! Posterior moments ("denoisers") for signal components and sensor gains.
//!
//! Signal components use the spike-and-slab prior tilted by a Gaussian
//! likelihood `exp(-(x - R)^2 / 2 Sigma^2)`; the moments are closed form.
//! Gains use the uniform prior tilted by `|d|^P exp(-(d - T)^2 / 2 C^2)`;
//! the moments come from a Gauss-Legendre rule on a window around the mode.
//! [`quadrature_oracle`] is a separate brute-force integrator used to check
//! both.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{GaussBernoulliPrior, UniformGainPrior};
use crate::quadrature::{log_space_moments, GaussLegendre};

/// Mean and variance of a scalar posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorStats {
    pub mean: f64,
    pub variance: f64,
}

/// Posterior mean `k` and variance `l` of one sensor gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMoments {
    pub k: f64,
    pub l: f64,
}

/// Mean and variance of `x` under `P_X(x) exp(-(x - r)^2 / (2 sigma2))`.
pub fn signal_posterior_moments(
    prior: &GaussBernoulliPrior,
    sigma2: f64,
    r: f64,
) -> Result<PosteriorStats> {
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositiveVariance {
            what: "Sigma^2",
            value: sigma2,
        });
    }
    let s = prior.variance;
    let m = prior.mean;
    let total = s + sigma2;
    // slab part, conjugate Gaussian update
    let slab_mean = (m * sigma2 + r * s) / total;
    let slab_var = s * sigma2 / total;

    let pi = if prior.rho >= 1.0 {
        1.0
    } else {
        let log_slab = prior.rho.ln() - 0.5 * (r - m).powi(2) / total - 0.5 * total.ln();
        let log_spike = (1.0 - prior.rho).ln() - 0.5 * r * r / sigma2 - 0.5 * sigma2.ln();
        // logistic of the log-odds, written to avoid overflow either way
        let odds = log_slab - log_spike;
        if odds >= 0.0 {
            1.0 / (1.0 + (-odds).exp())
        } else {
            let e = odds.exp();
            e / (1.0 + e)
        }
    };
    let mean = pi * slab_mean;
    let variance = pi * slab_var + pi * (1.0 - pi) * slab_mean * slab_mean;
    Ok(PosteriorStats {
        mean,
        variance: variance.max(0.0),
    })
}

/// Mean and variance of `d` under `P_D(d) |d|^p exp(-(d - t)^2 / (2 c2))`.
pub fn gain_posterior_moments(
    prior: &UniformGainPrior,
    p: usize,
    c2: f64,
    t: f64,
) -> Result<GainMoments> {
    // 128 nodes agree with 512 to rounding on the window below
    gain_moments_with_rule(prior, p, c2, t, GaussLegendre::rule_128())
}

fn gain_moments_with_rule(
    prior: &UniformGainPrior,
    p: usize,
    c2: f64,
    t: f64,
    rule: &GaussLegendre,
) -> Result<GainMoments> {
    if !(c2 > 0.0) {
        return Err(Error::NonPositiveVariance {
            what: "C^2",
            value: c2,
        });
    }
    prior.validate()?;
    if prior.is_point_mass() {
        return Ok(GainMoments {
            k: prior.center,
            l: 0.0,
        });
    }
    let (lo, hi) = prior.support();
    let pf = p as f64;
    let log_weight = |d: f64| pf * d.ln() - (d - t) * (d - t) / (2.0 * c2);

    // unconstrained mode of the log-concave integrand: d^2 - t d - p c2 = 0
    let unconstrained = if p == 0 {
        t
    } else {
        let disc = (t * t + 4.0 * pf * c2).sqrt();
        if t >= 0.0 {
            0.5 * (t + disc)
        } else {
            2.0 * pf * c2 / (disc - t)
        }
    };
    let mode = unconstrained.clamp(lo, hi);
    let slope = pf / mode - (mode - t) / c2;
    // log-weight falls by at least 50 outside this window (curvature <= -1/c2)
    let c = c2.sqrt();
    let mut half = 10.0 * c;
    if slope != 0.0 {
        half = half.min(50.0 / slope.abs());
    }
    let a = (mode - half).max(lo);
    let b = (mode + half).min(hi);
    if !(b > a) {
        return Ok(GainMoments { k: mode, l: 0.0 });
    }

    // the common ln((b - a) / 2) weight factor cancels in the moments
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    let points: Vec<(f64, f64)> = rule
        .nodes()
        .iter()
        .zip(rule.log_weights())
        .map(|(&x, &lw)| {
            let d = mid + half * x;
            (d - mode, log_weight(d) + lw)
        })
        .collect();
    let (offset, l, _) = log_space_moments(&points).ok_or(Error::DegenerateMeasure)?;
    Ok(GainMoments {
        k: (mode + offset).clamp(lo, hi),
        l,
    })
}

/// Integration domain for [`quadrature_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Interval(f64, f64),
    RealLine,
}

/// Normalized moments returned by [`quadrature_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMoments {
    pub mean: f64,
    pub variance: f64,
    pub log_normalizer: f64,
}

/// Brute-force moments of the measure with density `exp(log_weight(x))`.
///
/// Bounded supports use the trapezoidal rule on `nodes` equispaced points;
/// the real line is mapped through `x = tan(pi u / 2)` and integrated with the
/// midpoint rule in `u`.
pub fn quadrature_oracle(
    log_weight: impl Fn(f64) -> f64,
    support: Support,
    nodes: usize,
) -> Result<OracleMoments> {
    quadrature_oracle_with_atoms(log_weight, &[], support, nodes)
}

/// Like [`quadrature_oracle`], plus point masses given as `(position, log_mass)`.
pub fn quadrature_oracle_with_atoms(
    log_weight: impl Fn(f64) -> f64,
    atoms: &[(f64, f64)],
    support: Support,
    nodes: usize,
) -> Result<OracleMoments> {
    if nodes < 2 {
        return Err(Error::InvalidConfig(format!(
            "quadrature needs at least 2 nodes, got {nodes}"
        )));
    }
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(nodes + atoms.len());
    match support {
        Support::Interval(a, b) => {
            if !(b > a) {
                return Err(Error::InvalidConfig(format!("empty interval [{a}, {b}]")));
            }
            let step = (b - a) / (nodes - 1) as f64;
            for j in 0..nodes {
                let x = if j == nodes - 1 { b } else { a + j as f64 * step };
                let w = if j == 0 || j == nodes - 1 { 0.5 * step } else { step };
                points.push((x, log_weight(x) + w.ln()));
            }
        }
        Support::RealLine => {
            let du = 2.0 / nodes as f64;
            for j in 0..nodes {
                let u = -1.0 + (j as f64 + 0.5) * du;
                let angle = 0.5 * PI * u;
                let x = angle.tan();
                let jac = 0.5 * PI / (angle.cos() * angle.cos());
                points.push((x, log_weight(x) + (jac * du).ln()));
            }
        }
    }
    points.extend_from_slice(atoms);
    let (mean, variance, log_normalizer) =
        log_space_moments(&points).ok_or(Error::DegenerateMeasure)?;
    Ok(OracleMoments {
        mean,
        variance,
        log_normalizer,
    })
}
