//! Success rate against alpha for two problem sizes; the larger one should
//! switch more abruptly.
//!
//! ```bash
//! cargo run --release --example transition_profile -- [replicates]
//! ```

use camp::harness::{interpolate, logistic_crossing};
use camp::{run_transition_profile, Axes, SweepSpec};

fn main() -> camp::Result<()> {
    let reps: usize = std::env::args()
        .nth(1)
        .map_or(10, |s| s.parse().expect("replicates"));
    let alphas: Vec<f64> = (0..=6).map(|i| 0.40 + 0.05 * i as f64).collect();
    let sizes = [125, 250];
    let spec = SweepSpec::new(
        Axes {
            alpha: alphas.clone(),
            rho: vec![0.2],
            p: vec![2],
            sigma2: vec![0.0251],
            n: sizes.to_vec(),
        },
        reps,
        7,
    );
    let grid = run_transition_profile(&spec, 0)?;

    print!("{:>6}", "alpha");
    for n in sizes {
        print!("  {:>8} {:>6}", format!("N={n}"), "iters");
    }
    println!();
    for &alpha in &alphas {
        print!("{alpha:>6.2}");
        for n in sizes {
            let cell = grid.select(|c| c.n == n && c.alpha == alpha).next().unwrap();
            let it = cell
                .aggregates
                .mean_iterations_on_success
                .map_or("-".into(), |x| format!("{x:.0}"));
            print!("  {:>8.2} {it:>6}", cell.aggregates.success_rate);
        }
        println!();
    }
    for n in sizes {
        match logistic_crossing(&grid.success_counts(|c| c.n == n)) {
            Some(c) => {
                let iters = interpolate(&grid.iterations_curve(|p| p.n == n), c.alpha + 0.15);
                println!(
                    "N={n}: 50% at alpha = {:.3}, slope {:.1}, iterations at +0.15: {}",
                    c.alpha,
                    c.slope,
                    iters.map_or("n/a".into(), |x| format!("{x:.0}"))
                );
            }
            None => println!("N={n}: no crossing in range"),
        }
    }
    Ok(())
}
