//! alpha-rho phase diagram at P = 2, printed as a character map and written
//! as a grid CSV.
//!
//! ```bash
//! cargo run --release --example phase_diagram -- [N] [replicates] [out.csv]
//! ```

use std::fs::File;
use std::io::BufWriter;

use camp::{alpha_min, run_phase_diagram, Axes, SweepSpec};

fn main() -> camp::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(100, |s| s.parse().expect("N"));
    let reps: usize = args.next().map_or(1, |s| s.parse().expect("replicates"));
    let out = args.next().unwrap_or_else(|| "phase_diagram.csv".into());

    let alphas: Vec<f64> = (1..=12).map(|i| 0.1 * i as f64).collect();
    let rhos: Vec<f64> = (1..=9).map(|i| 0.1 * i as f64).collect();
    let spec = SweepSpec::new(
        Axes {
            alpha: alphas.clone(),
            rho: rhos.clone(),
            p: vec![2],
            sigma2: vec![0.01],
            n: vec![n],
        },
        reps,
        2013,
    );
    let start = std::time::Instant::now();
    let grid = run_phase_diagram(&spec, 0)?;
    grid.write_csv(BufWriter::new(File::create(&out)?))?;

    // '#' all replicates succeed, '+' some, '.' none; '|' marks alpha_min
    println!("rho \\ alpha  {}", alphas.iter().map(|a| format!("{a:<4.1}")).collect::<String>());
    for &rho in rhos.iter().rev() {
        let curve = grid.success_curve(|c| c.rho == rho);
        let bound = alpha_min(2, rho);
        let mut line = String::new();
        for (alpha, rate) in curve {
            let mark = if rate == 1.0 {
                '#'
            } else if rate > 0.0 {
                '+'
            } else {
                '.'
            };
            let edge = if (alpha - 0.1..alpha).contains(&bound) { '|' } else { ' ' };
            line.push(edge);
            line.push(mark);
            line.push_str("  ");
        }
        println!("{rho:>11.1}  {line}");
    }
    println!("wrote {out} in {:.1?}", start.elapsed());
    Ok(())
}
