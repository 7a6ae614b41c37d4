//! Draw a calibration problem and write it out as CSV.
//!
//! ```bash
//! cargo run --release --example generate_instance -- [out_dir]
//! ```

use camp::{GenerationConfig, ProblemInstance};

fn main() -> camp::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "instance".to_string());

    // N = 200 components, M = 150 sensors, P = 2 signals, 20% non-zeros,
    // gains uniform around 1 with variance 0.01
    let mut cfg = GenerationConfig::standard(200, 150, 2, 0.2, 0.01, 42);
    cfg.delta = 1e-4;
    let inst = ProblemInstance::generate(&cfg)?;

    let nnz = inst.x0.iter().filter(|&&x| x != 0.0).count();
    let (dmin, dmax) = inst
        .d0
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    println!("F: {}x{}, X0: {}x{}, Y: {}x{}", inst.m(), inst.n(), inst.n(), inst.p(), inst.m(), inst.p());
    println!("non-zeros: {nnz} of {}", inst.x0.len());
    println!("gains in [{dmin:.4}, {dmax:.4}]");

    let dir = std::path::Path::new(&out);
    inst.write_csv_dir(dir)?;
    std::fs::write(dir.join("config.json"), cfg.to_json()?)?;
    println!("wrote {}", dir.display());

    // reading it back gives the same instance
    let back = ProblemInstance::read_csv_dir(dir, cfg.delta, cfg.seed)?;
    assert_eq!(back, inst);
    Ok(())
}
