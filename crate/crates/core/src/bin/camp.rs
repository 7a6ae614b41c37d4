use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use camp::harness::{annotate_csv, run_sweep, SweepSpec};
use camp::{Camp, Error, GainMode, GenerationConfig, ProblemInstance, SolverConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "camp", version, about = "Blind calibration by approximate message passing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance and write it as CSV matrices plus config.json.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one instance and print the result summary as JSON.
    Solve {
        /// Directory written by `generate`.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        instance: Option<PathBuf>,
        /// Generation config; the instance is drawn on the fly.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's seed (only with --config).
        #[arg(long, conflicts_with = "instance")]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "blind")]
        gain_mode: Mode,
        #[arg(long)]
        damping: Option<f64>,
        #[arg(long, default_value_t = camp::solver::DEFAULT_INFLATION)]
        inflation: f64,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        crit_tol: Option<f64>,
        /// Write the per-iteration crit trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the JSON summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep spec and write the grid CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Overrides the spec's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Append alpha_min and constant reference lines to a grid CSV.
    Annotate {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reference line as NAME=VALUE, repeatable.
        #[arg(long = "ref", value_parser = parse_reference)]
        references: Vec<(String, f64)>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Blind,
    Known,
}

fn parse_reference(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| format!("reference value {value:?} is not a number"))?;
    if name.is_empty() {
        return Err("reference name is empty".into());
    }
    Ok((name.to_string(), value))
}

fn read_config(path: &Path) -> camp::Result<GenerationConfig> {
    GenerationConfig::from_json(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> camp::Result<()> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let mut cfg = read_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let inst = ProblemInstance::generate(&cfg)?;
            inst.write_csv_dir(&out)?;
            std::fs::write(out.join("config.json"), cfg.to_json()?)?;
        }
        Command::Solve {
            instance,
            config,
            seed,
            gain_mode,
            damping,
            inflation,
            max_iters,
            crit_tol,
            trace,
            out,
        } => {
            let (cfg, inst) = match (instance, config) {
                (Some(dir), _) => {
                    let cfg = read_config(&dir.join("config.json"))?;
                    let inst = ProblemInstance::read_csv_dir(&dir, cfg.delta, cfg.seed)?;
                    (cfg, inst)
                }
                (None, Some(path)) => {
                    let mut cfg = read_config(&path)?;
                    if let Some(seed) = seed {
                        cfg.seed = seed;
                    }
                    let inst = ProblemInstance::generate(&cfg)?;
                    (cfg, inst)
                }
                (None, None) => unreachable!("clap requires one of --instance/--config"),
            };
            let mut solver = SolverConfig::matched_with_inflation(&cfg, inflation)?;
            solver.gain_mode = match gain_mode {
                Mode::Blind => GainMode::Blind,
                Mode::Known => GainMode::Known,
            };
            if let Some(d) = damping {
                solver.damping = d;
            }
            if let Some(n) = max_iters {
                solver.max_iters = n;
            }
            if let Some(t) = crit_tol {
                solver.crit_tol = t;
            }
            let result = Camp::new(&inst, &solver)?.run()?;
            if let Some(path) = trace {
                result.write_trace_csv(&path)?;
            }
            let json = result.to_json()?;
            match out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
        }
        Command::Sweep {
            spec,
            out,
            threads,
            seed,
        } => {
            let mut spec = SweepSpec::from_json(&std::fs::read_to_string(&spec)?)?;
            if let Some(seed) = seed {
                spec.base_seed = seed;
            }
            let grid = run_sweep(&spec, threads)?;
            grid.write_csv(BufWriter::new(File::create(&out)?))?;
        }
        Command::Annotate {
            csv,
            out,
            references,
        } => {
            let input = BufReader::new(File::open(&csv)?);
            annotate_csv(input, BufWriter::new(File::create(&out)?), &references)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                e if e.is_io() => 3,
                Error::Divergence { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
