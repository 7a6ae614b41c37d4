#![allow(dead_code)]

use std::f64::consts::PI;

use camp::{
    Camp, GainMode, GaussBernoulliPrior, GenerationConfig, ProblemInstance, SolverConfig,
    UniformGainPrior,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in b.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            worst = worst.max((a[[i, j]] - x).abs());
        }
    }
    worst
}

/// Spike-and-slab posterior written from the textbook mixture formula.
pub fn reference_denoiser(prior: &GaussBernoulliPrior, sigma2: f64, r: f64) -> (f64, f64) {
    let s = prior.variance;
    let m = prior.mean;
    let gauss = |x: f64, var: f64| (-(x * x) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    let z_slab = prior.rho * gauss(r - m, s + sigma2);
    let z_spike = (1.0 - prior.rho) * gauss(r, sigma2);
    let pi = z_slab / (z_slab + z_spike);
    let mu = (m / s + r / sigma2) / (1.0 / s + 1.0 / sigma2);
    let tau = 1.0 / (1.0 / s + 1.0 / sigma2);
    let mean = pi * mu;
    let second = pi * (tau + mu * mu);
    (mean, second - mean * mean)
}

/// Gain posterior by a dense midpoint sum over the uniform support.
pub fn reference_gain(prior: &UniformGainPrior, p: usize, c2: f64, t: f64) -> (f64, f64) {
    let (lo, hi) = prior.support();
    let n = 400_000;
    let step = (hi - lo) / n as f64;
    let logw: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let d = lo + (i as f64 + 0.5) * step;
            (d, p as f64 * d.ln() - (d - t) * (d - t) / (2.0 * c2))
        })
        .collect();
    let max = logw.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|&(_, l)| (l - max).exp()).collect();
    let z = kahan_sum(w.iter().copied());
    let mean = kahan_sum(w.iter().zip(&logw).map(|(w, (d, _))| w * d)) / z;
    let var = kahan_sum(w.iter().zip(&logw).map(|(w, (d, _))| w * (d - mean).powi(2))) / z;
    (mean, var)
}

/// State carried by the straight-line transcription, all as nested vectors.
#[derive(Debug, Clone)]
pub struct PlainState {
    pub a: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    pub big_v: Vec<Vec<f64>>,
    pub sigma2: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

/// One undamped blind-calibration sweep, loop by loop.
pub fn plain_camp_sweep(
    inst: &ProblemInstance,
    prior: &GaussBernoulliPrior,
    gain: &UniformGainPrior,
    delta: f64,
    st: &mut PlainState,
) {
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let f = |mu: usize, i: usize| inst.f[[mu, i]];
    let y = |mu: usize, l: usize| inst.y[[mu, l]];

    let mut big_v = vec![vec![0.0; p]; m];
    let mut omega = vec![vec![0.0; p]; m];
    for mu in 0..m {
        for l in 0..p {
            let mut vs = 0.0;
            let mut ws = 0.0;
            for i in 0..n {
                vs += f(mu, i) * f(mu, i) * st.v[i][l];
                ws += f(mu, i) * st.a[i][l];
            }
            big_v[mu][l] = vs;
            omega[mu][l] = ws - vs * st.e[mu][l];
        }
    }

    for mu in 0..m {
        let mut prec = 0.0;
        let mut field = 0.0;
        for l in 0..p {
            let s = big_v[mu][l] + delta;
            prec += y(mu, l) * y(mu, l) / s;
            field += y(mu, l) * omega[mu][l] / s;
        }
        let c2 = 1.0 / prec;
        let t = c2 * field;
        let (k, var) = reference_gain(gain, p, c2, t);
        st.k[mu] = k;
        st.l[mu] = var;
    }

    let mut e = vec![vec![0.0; p]; m];
    let mut h = vec![vec![0.0; p]; m];
    for mu in 0..m {
        for l in 0..p {
            let s = big_v[mu][l] + delta;
            e[mu][l] = (st.k[mu] * y(mu, l) - omega[mu][l]) / s;
            h[mu][l] = (1.0 / s - st.l[mu] * y(mu, l) * y(mu, l) / (s * s)).max(0.0);
        }
    }

    let mut sigma2 = vec![vec![0.0; p]; n];
    let mut r = vec![vec![0.0; p]; n];
    for i in 0..n {
        for l in 0..p {
            let mut hs = 0.0;
            let mut es = 0.0;
            for mu in 0..m {
                hs += f(mu, i) * f(mu, i) * h[mu][l];
                es += f(mu, i) * e[mu][l];
            }
            sigma2[i][l] = 1.0 / hs;
            r[i][l] = st.a[i][l] + sigma2[i][l] * es;
        }
    }
    for i in 0..n {
        for l in 0..p {
            let (mean, var) = reference_denoiser(prior, sigma2[i][l], r[i][l]);
            st.a[i][l] = mean;
            st.v[i][l] = var;
        }
    }
    st.e = e;
    st.omega = omega;
    st.big_v = big_v;
    st.sigma2 = sigma2;
    st.r = r;
}

/// Bayesian GAMP for `y = F x + w`, single signal column, damped on `(a, v)`.
pub struct AwgnGamp<'a> {
    pub f: &'a Array2<f64>,
    pub y: Vec<f64>,
    pub delta: f64,
    pub prior: GaussBernoulliPrior,
    pub damping: f64,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
}

impl<'a> AwgnGamp<'a> {
    pub fn new(
        f: &'a Array2<f64>,
        y: Vec<f64>,
        delta: f64,
        prior: GaussBernoulliPrior,
        damping: f64,
    ) -> Self {
        let n = f.ncols();
        let m = f.nrows();
        let mean = prior.rho * prior.mean;
        let var = prior.rho * (prior.variance + prior.mean * prior.mean) - mean * mean;
        Self {
            f,
            y,
            delta,
            prior,
            damping,
            a: vec![mean; n],
            v: vec![var; n],
            g: vec![0.0; m],
        }
    }

    pub fn step(&mut self) {
        let (m, n) = self.f.dim();
        let mut p_var = vec![0.0; m];
        let mut p_hat = vec![0.0; m];
        for mu in 0..m {
            for i in 0..n {
                let fm = self.f[[mu, i]];
                p_var[mu] += fm * fm * self.v[i];
                p_hat[mu] += fm * self.a[i];
            }
            p_hat[mu] -= p_var[mu] * self.g[mu];
        }
        let mut minus_dg = vec![0.0; m];
        for mu in 0..m {
            let s = p_var[mu] + self.delta;
            self.g[mu] = (self.y[mu] - p_hat[mu]) / s;
            minus_dg[mu] = 1.0 / s;
        }
        for i in 0..n {
            let mut prec = 0.0;
            let mut corr = 0.0;
            for mu in 0..m {
                let fm = self.f[[mu, i]];
                prec += fm * fm * minus_dg[mu];
                corr += fm * self.g[mu];
            }
            let tau = 1.0 / prec;
            let r = self.a[i] + tau * corr;
            let (mean, var) = reference_denoiser(&self.prior, tau, r);
            self.a[i] = self.damping * mean + (1.0 - self.damping) * self.a[i];
            self.v[i] = (self.damping * var + (1.0 - self.damping) * self.v[i]).max(1e-18);
        }
    }
}

/// Spike-and-slab moments by trapezoid quadrature plus an explicit atom at 0.
pub fn spike_slab_oracle(prior: &GaussBernoulliPrior, sigma2: f64, r: f64) -> (f64, f64) {
    let slab = |x: f64| {
        prior.rho.ln()
            - 0.5 * (x - prior.mean).powi(2) / prior.variance
            - 0.5 * (2.0 * PI * prior.variance).ln()
            - 0.5 * (x - r).powi(2) / sigma2
    };
    let atoms = if prior.rho < 1.0 {
        vec![(0.0, (1.0 - prior.rho).ln() - 0.5 * r * r / sigma2)]
    } else {
        vec![]
    };
    let m = camp::priors::quadrature_oracle_with_atoms(
        slab,
        &atoms,
        camp::Support::Interval(-12.0, 12.0),
        60_001,
    )
    .unwrap();
    (m.mean, m.variance)
}

/// Largest closed-form vs oracle gap over 20 log-spaced `Sigma^2` in
/// [1e-4, 10], 20 fields in [-5, 5] and `rho` in {0.1, 0.5, 1}.
pub fn denoiser_grid_worst() -> f64 {
    let mut worst: f64 = 0.0;
    for rho in [0.1, 0.5, 1.0] {
        let prior = GaussBernoulliPrior::standard(rho).unwrap();
        for i in 0..20 {
            let sigma2 = 10f64.powf(-4.0 + 5.0 * i as f64 / 19.0);
            for j in 0..20 {
                let r = -5.0 + 10.0 * j as f64 / 19.0;
                let s = camp::signal_posterior_moments(&prior, sigma2, r).unwrap();
                let (mean, var) = spike_slab_oracle(&prior, sigma2, r);
                worst = worst.max((s.mean - mean).abs()).max((s.variance - var).abs());
            }
        }
    }
    worst
}

pub struct ChannelTuple {
    pub y: Array2<f64>,
    pub omega: Array2<f64>,
    pub v: Array2<f64>,
    pub delta: f64,
    pub prior: UniformGainPrior,
}

pub fn random_channel_tuple(rng: &mut ChaCha8Rng) -> ChannelTuple {
    let p = rng.random_range(1..=3);
    let center = rng.random_range(0.8..1.5);
    let var = rng.random_range(0.002..0.05);
    let prior = UniformGainPrior::new(center, var).unwrap();
    let (lo, hi) = prior.support();
    let d = rng.random_range(lo..hi);
    let delta = if rng.random_bool(0.3) {
        0.0
    } else {
        rng.random_range(1e-3..0.1)
    };
    let mut y = Array2::zeros((1, p));
    let mut omega = Array2::zeros((1, p));
    let mut v: Array2<f64> = Array2::zeros((1, p));
    for l in 0..p {
        let mag = rng.random_range(0.3..2.0);
        y[[0, l]] = if rng.random_bool(0.5) { mag } else { -mag };
        v[[0, l]] = rng.random_range(0.05..1.0);
        omega[[0, l]] = y[[0, l]] * d + rng.random_range(-0.5..0.5) * v[[0, l]].sqrt();
    }
    ChannelTuple {
        y,
        omega,
        v,
        delta,
        prior,
    }
}

/// Worst gaps `[e, h, k, l]` between the analytic channel and central
/// differences of the numerically integrated generating function.
pub fn channel_fd_worst(seed: u64, tuples: usize) -> [f64; 4] {
    const NODES: usize = 20_001;
    let g_at = |t: &ChannelTuple, omega: &Array2<f64>, theta: f64| {
        camp::numeric_g(t.y.row(0), omega.row(0), t.v.row(0), theta, &t.prior, t.delta, NODES)
            .unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h1, h2) = (1e-5, 1e-4);
    let mut worst = [0.0f64; 4];
    for _ in 0..tuples {
        let t = random_channel_tuple(&mut rng);
        let p = t.y.ncols();
        let (c2, tt) = camp::gain_ct(&t.y, &t.omega, &t.v, t.delta).unwrap();
        let g = camp::gain_posterior_moments(&t.prior, p, c2[0], tt[0]).unwrap();
        let (e, h) = camp::product_eh(
            &t.y,
            &t.omega,
            &t.v,
            &Array1::from_elem(1, g.k),
            &Array1::from_elem(1, g.l),
            t.delta,
        )
        .unwrap();

        let g0 = g_at(&t, &t.omega, 0.0);
        for l in 0..p {
            let shifted = |s: f64| {
                let mut w = t.omega.clone();
                w[[0, l]] += s;
                g_at(&t, &w, 0.0)
            };
            let d1 = (shifted(h1) - shifted(-h1)) / (2.0 * h1);
            let d2 = (shifted(h2) - 2.0 * g0 + shifted(-h2)) / (h2 * h2);
            worst[0] = worst[0].max((e[[0, l]] - d1).abs());
            worst[1] = worst[1].max((h[[0, l]] + d2).abs());
        }
        let d1 = (g_at(&t, &t.omega, h1) - g_at(&t, &t.omega, -h1)) / (2.0 * h1);
        let d2 = (g_at(&t, &t.omega, h2) - 2.0 * g0 + g_at(&t, &t.omega, -h2)) / (h2 * h2);
        worst[2] = worst[2].max((g.k - d1).abs());
        worst[3] = worst[3].max((g.l - d2).abs());
    }
    worst
}

/// Largest per-iteration gap in `(a, v)` between known-gain mode with unit
/// gains and [`AwgnGamp`] on a 50 x 100, P = 1 noiseless instance.
pub fn gamp_reduction_worst(iters: usize) -> f64 {
    let gen = GenerationConfig::standard(100, 50, 1, 0.2, 0.0, 5);
    let inst = ProblemInstance::generate(&gen).unwrap();
    assert!(inst.d0.iter().all(|&d| d == 1.0));
    let mut cfg = SolverConfig::matched(&gen).unwrap();
    cfg.gain_mode = GainMode::Known;
    let solver = Camp::new(&inst, &cfg).unwrap();
    let mut state = solver.initialize();
    let mut gamp = AwgnGamp::new(
        &inst.f,
        inst.y.column(0).to_vec(),
        inst.delta + cfg.delta_reg,
        cfg.signal_prior,
        cfg.damping,
    );
    let mut worst: f64 = 0.0;
    for _ in 0..iters {
        solver.iterate_once(&mut state).unwrap();
        gamp.step();
        for i in 0..inst.n() {
            worst = worst
                .max((state.a[[i, 0]] - gamp.a[i]).abs())
                .max((state.v[[i, 0]] - gamp.v[i]).abs());
        }
    }
    worst
}

/// Largest `crit` over `iters` sweeps started at the ground truth of a
/// noiseless 100 x 200, P = 2 instance.
pub fn fixed_point_worst(iters: usize) -> f64 {
    let gen = GenerationConfig::standard(200, 100, 2, 0.2, 0.01, 3);
    let inst = ProblemInstance::generate(&gen).unwrap();
    let cfg = SolverConfig::matched(&gen).unwrap();
    let solver = Camp::new(&inst, &cfg).unwrap();
    let mut state = solver.initialize();
    state.a = inst.x0.clone();
    state.v.fill(camp::solver::VARIANCE_FLOOR);
    state.k = inst.d0.clone();
    state.l.fill(camp::solver::VARIANCE_FLOOR);
    let mut worst = solver.crit(&state);
    for _ in 0..iters {
        solver.iterate_once(&mut state).unwrap();
        worst = worst.max(solver.crit(&state));
    }
    worst
}
