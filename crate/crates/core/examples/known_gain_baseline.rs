//! Blind calibration against the oracle that knows the gains (plain GAMP).

use camp::{Camp, GainMode, GenerationConfig, ProblemInstance, SolverConfig};

fn main() -> camp::Result<()> {
    println!("{:>6} {:>5} {:>14} {:>6} {:>14} {:>6}", "alpha", "seed", "blind", "iters", "known", "iters");
    for alpha in [0.35, 0.5, 0.75] {
        for seed in 0..3 {
            let m = (alpha * 250.0_f64).round() as usize;
            let gen = GenerationConfig::standard(250, m, 2, 0.2, 0.01, seed);
            let inst = ProblemInstance::generate(&gen)?;
            let mut cfg = SolverConfig::matched(&gen)?;
            let blind = Camp::new(&inst, &cfg)?.run()?;
            cfg.gain_mode = GainMode::Known;
            let known = Camp::new(&inst, &cfg)?.run()?;
            println!(
                "{alpha:>6.2} {seed:>5} {:>14.3e} {:>6} {:>14.3e} {:>6}",
                blind.mse_corr, blind.iterations, known.mse_corr, known.iterations
            );
        }
    }
    Ok(())
}
