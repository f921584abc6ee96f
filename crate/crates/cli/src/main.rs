use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ids_core::config::{DataSource, ExperimentConfig};
use ids_core::experiment;
use ids_core::oracle;
use ids_core::{alm, persist, readout, Error};

/// Memristor-crossbar Ink Drop Spread simulator.
#[derive(Parser)]
#[command(name = "ids", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train planes from a dataset and write a state file
    Spread {
        #[command(flatten)]
        common: Common,
        /// Output state file
        #[arg(long)]
        state: PathBuf,
        /// CSV dataset path, or `eq16` for the builtin target
        #[arg(long)]
        data: Option<String>,
    },
    /// Run inference on a trained state
    Query {
        #[arg(long)]
        state: PathBuf,
        /// One value per input
        #[arg(required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Reproduce the reference experiment and write CSV artifacts
    Model {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare circuit readout against the ink-balance reference per column
    Oracle {
        #[arg(long)]
        state: PathBuf,
        /// Restrict to one column (0-based)
        #[arg(long)]
        column: Option<usize>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Numerical(_) => 4,
        _ => 3,
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

/// Commands that sample the builtin target cannot run without a seed.
fn needs_seed(cli: &Cli) -> Result<bool, Error> {
    let (common, data) = match &cli.command {
        Command::Spread { common, data, .. } => (common, data.as_deref()),
        Command::Model { common, .. } => (common, Some("eq16")),
        _ => return Ok(false),
    };
    let cfg = load_config(common)?;
    let builtin = match data {
        Some(d) => d == "eq16",
        None => cfg.data == DataSource::Eq16,
    };
    Ok(builtin && cfg.seed.is_none())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Spread {
            common,
            state,
            data,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = data {
                cfg.data = d.parse()?;
            }
            let (_, report) = experiment::run_spread(&cfg, &state)?;
            println!("samples={}", report.samples);
            println!("max_delta_r_ratio={:.6}", report.max_delta_r_ratio);
            if !report.regime_ok {
                eprintln!(
                    "warning: max ΔR/r_off = {:.4} exceeds {}; the readout linearization may not hold",
                    report.max_delta_r_ratio, cfg.regime_limit
                );
            }
            println!("state={}", state.display());
        }
        Command::Query { state, x } => {
            let model = persist::load(&state)?;
            let b = alm::infer(&model, &x)?;
            println!("plane\tcol\tnarrow_path\trow_pos\tspread\ty\tweight");
            for (k, p) in b.planes.iter().enumerate() {
                let np = p.narrow_path_row.map_or("-".to_string(), |r| r.to_string());
                println!(
                    "{}\t{}\t{}\t{:.3}\t{}\t{:.6}\t{:.6}",
                    k + 1,
                    p.col,
                    np,
                    p.row_position,
                    p.spread,
                    p.y,
                    p.weight
                );
            }
            println!("y_hat={}", b.y_hat);
        }
        Command::Model { common, out } => {
            let cfg = load_config(&common)?;
            let r = experiment::run_model(&cfg, &out)?;
            println!("rmse={}", r.stats.rmse);
            println!("max_abs_err={}", r.stats.max_abs_err);
            println!("max_delta_r_ratio={:.6}", r.max_delta_r_ratio);
            println!("runtime_seconds={:.2}", r.total_seconds);
            if !r.regime_ok {
                eprintln!("warning: trained planes left the linear readout regime");
            }
            println!("artifacts={}", out.display());
        }
        Command::Oracle { state, column } => {
            let model = persist::load(&state)?;
            println!("plane\tcol\tcircuit_row\toracle_row\tcircuit_spread\toracle_spread");
            let mut mismatches = 0;
            for (k, plane) in model.planes().iter().enumerate() {
                let cols: Vec<usize> = match column {
                    Some(c) => vec![c],
                    None => (0..plane.cols()).collect(),
                };
                for j in cols {
                    let r = readout::read_plane(plane, j, &model.readout)?;
                    let ink = plane.delta_r_column(j);
                    let ob = oracle::oracle_balance_row(&ink);
                    let os = oracle::oracle_spread(&ink, model.readout.delta_threshold);
                    if ob != r.narrow_path_row || os != r.spread.count {
                        mismatches += 1;
                    }
                    let fmt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
                    println!(
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        k + 1,
                        j,
                        fmt(r.narrow_path_row),
                        fmt(ob),
                        r.spread.count,
                        os
                    );
                }
            }
            println!("mismatches={mismatches}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match needs_seed(&cli) {
        Ok(true) => {
            eprintln!("error: a seed is required for the builtin target (--seed or `seed =` in the config)");
            return ExitCode::from(2);
        }
        Ok(false) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
