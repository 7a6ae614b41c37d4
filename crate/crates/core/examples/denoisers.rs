//! Posterior moments for signal entries and sensor gains, checked against
//! brute-force quadrature.

use std::f64::consts::PI;

use camp::priors::quadrature_oracle_with_atoms;
use camp::{
    gain_posterior_moments, quadrature_oracle, signal_posterior_moments, GaussBernoulliPrior,
    Support, UniformGainPrior,
};

fn main() -> camp::Result<()> {
    let prior = GaussBernoulliPrior::standard(0.2)?;
    println!("spike-and-slab, rho = 0.2, Sigma^2 = 0.5");
    println!("{:>6} {:>12} {:>12} {:>10}", "R", "mean", "variance", "|err|");
    for r in [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0] {
        let s = signal_posterior_moments(&prior, 0.5, r)?;
        let slab = |x: f64| {
            prior.rho.ln() - 0.5 * x * x - 0.5 * (2.0 * PI).ln() - (x - r).powi(2) / (2.0 * 0.5)
        };
        let spike = [(0.0, (1.0 - prior.rho).ln() - r * r / (2.0 * 0.5))];
        let o = quadrature_oracle_with_atoms(slab, &spike, Support::Interval(-12.0, 12.0), 100_001)?;
        let err = (s.mean - o.mean).abs().max((s.variance - o.variance).abs());
        println!("{r:>6.1} {:>12.6} {:>12.6} {err:>10.1e}", s.mean, s.variance);
    }

    let gain = UniformGainPrior::new(1.0, 0.01)?;
    let (lo, hi) = gain.support();
    println!("\ngain prior uniform on [{lo:.4}, {hi:.4}], P = 2");
    println!("{:>8} {:>6} {:>10} {:>12} {:>10}", "C^2", "T", "k", "l", "|err|");
    for (c2, t) in [(1.0, 1.0), (0.01, 1.05), (0.01, 0.7), (1e-4, 0.95), (1e-6, 1.3)] {
        let g = gain_posterior_moments(&gain, 2, c2, t)?;
        let o = quadrature_oracle(
            |d| 2.0 * d.ln() - (d - t).powi(2) / (2.0 * c2),
            Support::Interval(lo, hi),
            1_000_001,
        )?;
        let err = (g.k - o.mean).abs().max((g.l - o.variance).abs());
        println!("{c2:>8.0e} {t:>6.2} {:>10.6} {:>12.4e} {err:>10.1e}", g.k, g.l);
    }
    Ok(())
}
