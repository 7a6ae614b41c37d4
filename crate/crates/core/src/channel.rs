//! Output-side messages for the product channel `y = (z + w) / d`.
//!
//! With Gaussian noise of variance `delta`, the per-sensor likelihood of a
//! gain `d` given projections with mean `omega` and variance `V` is
//!
//! ```text
//! prod_n |d| sqrt(V_n / (V_n + delta)) exp(-(y_n d - omega_n)^2 / (2 (V_n + delta)))
//! ```
//!
//! which collapses to a Gaussian in `d` with precision `1/C^2` and mean `T`,
//! tilted by `|d|^P`. [`product_eh`] and [`gain_ct`] use this directly;
//! [`numeric_g`] integrates the same expression over the gain prior and is
//! kept for cross-checking derivatives.

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{Error, Result};
use crate::model::UniformGainPrior;
use crate::priors::{quadrature_oracle, Support};

/// Per-measurement messages.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub omega: Array2<f64>,
    pub v: Array2<f64>,
    pub e: Array2<f64>,
    pub h: Array2<f64>,
}

/// Per-sensor gain field and posterior moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GainChannelState {
    pub c2: Array1<f64>,
    pub t: Array1<f64>,
    pub k: Array1<f64>,
    pub l: Array1<f64>,
}

/// Output channel seen by the solver.
///
/// `y`, `omega` and `v` are `M x P`; `k` and `l` are per-sensor gain
/// moments.
pub trait OutputChannel {
    /// Output messages `(e, h)`.
    fn output_messages(
        &self,
        y: &Array2<f64>,
        omega: &Array2<f64>,
        v: &Array2<f64>,
        k: &Array1<f64>,
        l: &Array1<f64>,
        delta: f64,
    ) -> Result<(Array2<f64>, Array2<f64>)>;

    /// Gaussian field `(C^2, T)` acting on each sensor gain.
    fn gain_field(
        &self,
        y: &Array2<f64>,
        omega: &Array2<f64>,
        v: &Array2<f64>,
        delta: f64,
    ) -> Result<(Array1<f64>, Array1<f64>)>;
}

/// Multiplicative gains with additive Gaussian noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductChannel;

impl OutputChannel for ProductChannel {
    fn output_messages(
        &self,
        y: &Array2<f64>,
        omega: &Array2<f64>,
        v: &Array2<f64>,
        k: &Array1<f64>,
        l: &Array1<f64>,
        delta: f64,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        product_eh(y, omega, v, k, l, delta)
    }

    fn gain_field(
        &self,
        y: &Array2<f64>,
        omega: &Array2<f64>,
        v: &Array2<f64>,
        delta: f64,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        gain_ct(y, omega, v, delta)
    }
}

fn check_shapes(y: &Array2<f64>, omega: &Array2<f64>, v: &Array2<f64>) -> Result<()> {
    if y.dim() != omega.dim() || y.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "y {:?}, omega {:?}, V {:?}",
            y.dim(),
            omega.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// `e = (k y - omega) / (V + delta)`, `h = 1/(V + delta) - l y^2 / (V + delta)^2`.
pub fn product_eh(
    y: &Array2<f64>,
    omega: &Array2<f64>,
    v: &Array2<f64>,
    k: &Array1<f64>,
    l: &Array1<f64>,
    delta: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(y, omega, v)?;
    if k.len() != y.nrows() || l.len() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} sensors but {} gain means and {} gain variances",
            y.nrows(),
            k.len(),
            l.len()
        )));
    }
    if let Some(bad) = v.iter().map(|&v| v + delta).find(|s| !(*s > 0.0)) {
        return Err(Error::NonPositiveVariance {
            what: "V + delta",
            value: bad,
        });
    }
    let mut e = Array2::zeros(y.dim());
    let mut h = Array2::zeros(y.dim());
    for mu in 0..y.nrows() {
        let (kmu, lmu) = (k[mu], l[mu]);
        Zip::from(e.row_mut(mu))
            .and(h.row_mut(mu))
            .and(y.row(mu))
            .and(omega.row(mu))
            .and(v.row(mu))
            .for_each(|e, h, &y, &w, &v| {
                let s = v + delta;
                *e = (kmu * y - w) / s;
                *h = 1.0 / s - lmu * y * y / (s * s);
            });
    }
    Ok((e, h))
}

/// `C^2 = [sum_n y^2 / (V + delta)]^-1`, `T = C^2 sum_n y omega / (V + delta)`.
pub fn gain_ct(
    y: &Array2<f64>,
    omega: &Array2<f64>,
    v: &Array2<f64>,
    delta: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    check_shapes(y, omega, v)?;
    let m = y.nrows();
    let mut c2 = Array1::zeros(m);
    let mut t = Array1::zeros(m);
    for mu in 0..m {
        let mut precision = 0.0;
        let mut field = 0.0;
        for ((&y, &w), &v) in y.row(mu).iter().zip(omega.row(mu)).zip(v.row(mu)) {
            let s = v + delta;
            if !(s > 0.0) {
                return Err(Error::NonPositiveVariance {
                    what: "V + delta",
                    value: s,
                });
            }
            precision += y * y / s;
            field += y * w / s;
        }
        if precision == 0.0 {
            return Err(Error::UninformativeSensor { sensor: mu });
        }
        c2[mu] = 1.0 / precision;
        t[mu] = field / precision;
    }
    Ok((c2, t))
}

/// Log of one sensor's likelihood factor for gain `d`, summed over signals.
fn log_sensor_likelihood(
    d: f64,
    y: ArrayView1<f64>,
    omega: ArrayView1<f64>,
    v: ArrayView1<f64>,
    delta: f64,
) -> f64 {
    let mut acc = 0.0;
    for ((&y, &w), &v) in y.iter().zip(omega).zip(v) {
        let s = v + delta;
        let r = y * d - w;
        acc += d.abs().ln() + 0.5 * (v / s).ln() - 0.5 * r * r / s;
    }
    acc
}

/// Generating function of one sensor row, integrated numerically over the gain.
///
/// Evaluates `ln ∫ P_D(d) prod_n G~(y_n, d, omega_n, V_n) exp(theta d) dd` where
/// `G~` is the unnormalized factor `|d| sqrt(V/(V + delta)) exp(-(y d - omega)^2 / 2(V + delta))`.
/// Relative to a fully normalized density this drops `-P/2 ln(2 pi V)`, a
/// constant in `omega` and `theta`, so derivatives are unaffected.
pub fn numeric_g(
    y: ArrayView1<f64>,
    omega: ArrayView1<f64>,
    v: ArrayView1<f64>,
    theta: f64,
    prior: &UniformGainPrior,
    delta: f64,
    quad_nodes: usize,
) -> Result<f64> {
    if y.len() != omega.len() || y.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "row lengths {}, {}, {}",
            y.len(),
            omega.len(),
            v.len()
        )));
    }
    if let Some(bad) = v.iter().map(|&v| v + delta).find(|s| !(*s > 0.0)) {
        return Err(Error::NonPositiveVariance {
            what: "V + delta",
            value: bad,
        });
    }
    prior.validate()?;
    let log_weight = |d: f64| log_sensor_likelihood(d, y, omega, v, delta) + theta * d;
    if prior.is_point_mass() {
        let g = log_weight(prior.center);
        return if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::DegenerateMeasure)
        };
    }
    let (lo, hi) = prior.support();
    let log_density = -(hi - lo).ln();
    let moments = quadrature_oracle(
        |d| log_weight(d) + log_density,
        Support::Interval(lo, hi),
        quad_nodes,
    )?;
    Ok(moments.log_normalizer)
}
