//! How many signals are needed for a given gain spread: success over
//! (sigma2, P) at fixed alpha and rho, with the gain-aware solver alongside.

use camp::{run_sigma_p_diagram, Axes, GainMode, SweepSpec};

fn main() -> camp::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(100, |s| s.parse().expect("N"));
    let sigmas = vec![1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1];
    let ps = vec![1, 2, 3, 5];
    let mut spec = SweepSpec::new(
        Axes {
            alpha: vec![0.75],
            rho: vec![0.3],
            p: ps.clone(),
            sigma2: sigmas.clone(),
            n: vec![n],
        },
        3,
        11,
    );
    let blind = run_sigma_p_diagram(&spec, 0)?;
    spec.solver.gain_mode = GainMode::Known;
    let known = run_sigma_p_diagram(&spec, 0)?;

    println!("success rate, blind (known-gain) at alpha = 0.75, rho = 0.3, N = {n}");
    print!("{:>8}", "sigma2");
    for p in &ps {
        print!("{:>14}", format!("P={p}"));
    }
    println!();
    for &s in &sigmas {
        print!("{s:>8.0e}");
        for &p in &ps {
            let rate = |g: &camp::GridResult| {
                g.select(|c| c.p == p && c.sigma2 == s).next().unwrap().aggregates.success_rate
            };
            print!("{:>14}", format!("{:.2} ({:.2})", rate(&blind), rate(&known)));
        }
        println!();
    }
    Ok(())
}
