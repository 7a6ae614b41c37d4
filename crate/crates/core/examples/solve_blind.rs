//! Recover two sparse signals and the unknown sensor gains at once.
//!
//! ```bash
//! cargo run --release --example solve_blind -- [N] [alpha] [seed]
//! ```

use camp::{Camp, GenerationConfig, ProblemInstance, SolverConfig};

fn main() -> camp::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(250, |s| s.parse().expect("N"));
    let alpha: f64 = args.next().map_or(0.75, |s| s.parse().expect("alpha"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let m = (alpha * n as f64).round() as usize;

    let gen = GenerationConfig::standard(n, m, 2, 0.2, 0.01, seed);
    let inst = ProblemInstance::generate(&gen)?;
    let cfg = SolverConfig::matched(&gen)?;
    let start = std::time::Instant::now();
    let res = Camp::new(&inst, &cfg)?.run()?;

    println!("N = {n}, M = {m}, P = 2, rho = 0.2, gain variance 0.01");
    println!("status      {}", res.status.as_str());
    println!("iterations  {}", res.iterations);
    println!("crit        {:.3e}", res.crit_final);
    println!("mse_corr    {:.3e}", res.mse_corr);
    println!("scale s_hat {:.6}", res.s_hat);
    println!("time        {:.2?}", start.elapsed());

    // gains are only identifiable up to a global factor
    let worst = inst
        .d0
        .iter()
        .zip(&res.k_final)
        .map(|(d, k)| (d - res.s_hat * k).abs())
        .fold(0.0, f64::max);
    println!("max |d0 - s_hat k| = {worst:.3e}");
    for t in [0, 10, 50, 100] {
        if let Some(c) = res.crit_trace.get(t) {
            println!("crit after {:>3} sweeps: {c:.3e}", t + 1);
        }
    }
    Ok(())
}
