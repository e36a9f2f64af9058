//! Command-line experiment runner.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use oafl::codec::{train_decoder, DecoderArch, EncoderState};
use oafl::harness::{metrics_csv, optimize_once, run_experiment, ExperimentConfig};
use oafl::ldsc::{rd_feasible, SourceStats};

#[derive(Parser)]
#[command(name = "oafl", about = "Over-the-air federated learning simulator for MIMO cloud RANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment and write metrics.csv and trace.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace every named seed with streams derived from this value.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// One-shot system design on a frozen round; dumps the sweep trace.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Rate-region feasibility report for given statistics and rates.
    RdCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a fronthaul decoder offline and write the weight checkpoint.
    TrainCodec {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
struct RdCheckConfig {
    sigma_s: Vec<Vec<f64>>,
    sigma_v: Vec<f64>,
    rates: Vec<f64>,
}

#[derive(Deserialize)]
struct TrainCodecConfig {
    sigma_s: Vec<Vec<f64>>,
    c: Vec<f64>,
    rates: Vec<f64>,
    #[serde(default = "one")]
    sigma: f64,
    n: usize,
    #[serde(default = "three")]
    k_layers: usize,
    #[serde(default = "sixteen")]
    hidden: usize,
    epochs: usize,
    #[serde(default)]
    zero_side: bool,
    seed: u64,
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn sixteen() -> usize {
    16
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> oafl::Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(oafl::Error::Config("sigma_s must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn load_experiment(path: &PathBuf, seed_override: Option<u64>) -> oafl::Result<ExperimentConfig> {
    let json = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_json(&json)?;
    Ok(match seed_override {
        Some(s) => cfg.with_seed_override(s),
        None => cfg,
    })
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> oafl::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed_override } => {
            let cfg = load_experiment(&config, seed_override)?;
            let result = run_experiment(&cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("metrics.csv"), metrics_csv(&result.records))?;
            std::fs::write(
                out.join("trace.json"),
                serde_json::to_string_pretty(&result.trace)?,
            )?;
            let last = result.records.last().expect("at least one round");
            println!(
                "{} rounds of `{}`: final train loss {:.6e}, test metric {:.6}, bound {:.6e}",
                result.records.len(),
                last.scheme,
                last.train_loss,
                last.test_metric,
                last.bound
            );
            println!(
                "wrote {} and {}",
                out.join("metrics.csv").display(),
                out.join("trace.json").display()
            );
        }
        Command::Optimize { config, out, seed_override } => {
            let cfg = load_experiment(&config, seed_override)?;
            let (state, trace) = optimize_once(&cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("trace.json"), serde_json::to_string_pretty(&trace)?)?;
            for sweep in &state.sweep_traces {
                println!(
                    "sweep {}: objective {:.6e} (wireless {:.3e}, noise {:.3e}, wired {:.3e})",
                    sweep.sweep, sweep.objective, sweep.wireless, sweep.noise, sweep.wired
                );
            }
            println!("wrote {}", out.join("trace.json").display());
        }
        Command::RdCheck { config, out } => {
            let json = std::fs::read_to_string(&config)?;
            let rc: RdCheckConfig = serde_json::from_str(&json)?;
            let stats = SourceStats::new(
                matrix_from_rows(&rc.sigma_s)?,
                DVector::from_vec(rc.sigma_v),
                rc.rates,
            )?;
            let report = rd_feasible(&stats)?;
            println!(
                "{} (worst slack {:.6} bits)",
                if report.feasible { "FEASIBLE" } else { "INFEASIBLE" },
                report.worst_slack
            );
            println!("{:>10} {:>14} {:>12} {:>12}", "subset", "required", "budget", "slack");
            for s in &report.slacks {
                println!(
                    "{:>10} {:>14.6} {:>12.6} {:>12.6}",
                    format!("{:#b}", s.subset),
                    s.required,
                    s.budget,
                    s.slack
                );
            }
            if let Some(out) = out {
                std::fs::create_dir_all(&out)?;
                std::fs::write(
                    out.join("rd_report.json"),
                    serde_json::to_string_pretty(&report)?,
                )?;
                println!("wrote {}", out.join("rd_report.json").display());
            }
        }
        Command::TrainCodec { config, out } => {
            let json = std::fs::read_to_string(&config)?;
            let tc: TrainCodecConfig = serde_json::from_str(&json)?;
            let sigma_s = matrix_from_rows(&tc.sigma_s)?;
            let n_aps = sigma_s.nrows();
            let encoders: Vec<EncoderState> = (0..n_aps)
                .map(|i| EncoderState::random(i as u16, tc.n, tc.sigma, tc.rates[i], tc.seed))
                .collect::<oafl::Result<_>>()?;
            let arch = DecoderArch { layers: tc.k_layers, hidden: tc.hidden };
            let report = train_decoder(
                &sigma_s,
                &DVector::from_vec(tc.c),
                &encoders,
                arch,
                tc.epochs,
                tc.zero_side,
                tc.seed,
            )?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("decoder.json"), report.weights.to_json()?)?;
            std::fs::write(
                out.join("train_loss.json"),
                serde_json::to_string(&report.loss_trace)?,
            )?;
            let first = report.loss_trace.first().copied().unwrap_or(f64::NAN);
            let last = report.loss_trace.last().copied().unwrap_or(f64::NAN);
            println!("trained {} epochs: loss {first:.6} -> {last:.6}", report.loss_trace.len());
            println!("wrote {}", out.join("decoder.json").display());
        }
    }
    Ok(())
}
