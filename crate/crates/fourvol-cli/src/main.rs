//! `fourvol` — Fourier-domain volatility functional estimation.
//!
//! Subcommands: `estimate`, `simulate`, `montecarlo`, `kernels`.
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical/inference error.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fourvol::error::VolError;
use fourvol::functionals::VolFunctional;
use fourvol_cli::config::RunConfig;
use fourvol_cli::pipeline;

#[derive(Parser)]
#[command(
    name = "fourvol",
    about = "Spot volatility matrices and volatility functionals from irregular, asynchronous tick data via Fourier-Fejer estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate volatility functionals from tick data or a simulated panel.
    Estimate {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Parse timestamps as RFC 3339 instead of decimal seconds.
        #[arg(long)]
        iso_times: bool,
        /// Override the configured functionals (repeatable), e.g.
        /// `--g power:2 --g entry:1,2 --g eig:1`.
        #[arg(long = "g")]
        functionals: Vec<String>,
    },
    /// Simulate a latent path, sample it and write tick data plus ground truth.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Replicated simulation study of the studentized estimators.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit kernel values (and optionally theta-integral curves) as CSV.
    Kernels {
        /// Kernel order (used for both the Dirichlet and Fejér kernels).
        #[arg(long)]
        order: usize,
        /// Number of abscissae on [-1/2, 1/2].
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Tick CSV whose first two assets define the observation grids for
        /// the theta-integral curves.
        #[arg(long)]
        ticks: Option<PathBuf>,
        /// Convolution width N for the theta-integral curves.
        #[arg(long, default_value_t = 64)]
        theta_n: usize,
        /// Evaluation grid size for the theta-integral curves.
        #[arg(long, default_value_t = 128)]
        theta_grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &VolError) -> u8 {
    match e {
        VolError::Config(_) | VolError::Tuning(_) => 2,
        VolError::Data(_) | VolError::Sampling(_) => 3,
        _ => 4,
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, VolError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| VolError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn run() -> Result<(), VolError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate {
            config,
            iso_times,
            functionals,
        } => {
            let mut cfg = load_config(&config)?;
            if !functionals.is_empty() {
                for f in &functionals {
                    f.parse::<fourvol::Functional>()?;
                }
                cfg.functionals = functionals;
            }
            let reports = if iso_times && !cfg.tick_files.is_empty() {
                let ticks =
                    fourvol_cli::ticks::parse_ticks_files(&cfg.tick_files, cfg.window_t, true)?;
                let est = pipeline::estimate_dataset(&ticks, &cfg)?;
                est.reports
            } else {
                pipeline::run_estimation(&cfg)?
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&reports)
                    .map_err(|e| VolError::Numerical(e.to_string()))?
            );
            Ok(())
        }
        Command::Simulate { config } => {
            let cfg = load_config(&config)?;
            let sim = cfg
                .simulation
                .as_ref()
                .ok_or_else(|| VolError::Config("simulate needs a simulation block".into()))?;
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| VolError::Config("simulate needs output_dir".into()))?;
            std::fs::create_dir_all(&dir)
                .map_err(|e| VolError::Data(format!("cannot create {}: {e}", dir.display())))?;
            let (path, ticks) = pipeline::simulate_dataset(sim, cfg.seed, 0)?;
            fourvol_cli::ticks::write_ticks(&dir.join("ticks.csv"), &ticks)?;

            let mut truths = serde_json::Map::new();
            for id in &cfg.functionals {
                let g: fourvol::Functional = id.parse()?;
                let v = fourvol::simulate::true_functional(&path, &g)?;
                truths.insert(g.id(), serde_json::json!(v));
            }
            let c_all: Vec<f64> = path.vols.iter().flatten().cloned().collect();
            let summary = serde_json::json!({
                "true_functionals": truths,
                "path": {
                    "t_window": path.t_window,
                    "dt": path.dt,
                    "seed": path.seed,
                    "assets": path.dim(),
                    "samples_per_asset": ticks.iter().map(|t| t.n_intervals()).collect::<Vec<_>>(),
                    "spot_variance_min": c_all.iter().cloned().fold(f64::INFINITY, f64::min),
                    "spot_variance_max": c_all.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    "spot_variance_mean": c_all.iter().sum::<f64>() / c_all.len() as f64,
                }
            });
            std::fs::write(
                dir.join("ground_truth.json"),
                serde_json::to_string_pretty(&summary).unwrap(),
            )
            .map_err(|e| VolError::Data(format!("cannot write ground truth: {e}")))?;
            println!("wrote {} and {}", dir.join("ticks.csv").display(), dir.join("ground_truth.json").display());
            Ok(())
        }
        Command::Montecarlo { config } => {
            let cfg = load_config(&config)?;
            let out = pipeline::run_montecarlo(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&out).map_err(|e| VolError::Numerical(e.to_string()))?
            );
            Ok(())
        }
        Command::Kernels {
            order,
            points,
            ticks,
            theta_n,
            theta_grid,
            out,
        } => {
            let mut text = String::from("x,dirichlet,fejer\n");
            for i in 0..points {
                let x = -0.5 + i as f64 / (points - 1).max(1) as f64;
                text.push_str(&format!(
                    "{x},{},{}\n",
                    fourvol::kernels::dirichlet_kernel(order, x),
                    fourvol::kernels::fejer_kernel(order.max(1), x)
                ));
            }
            if let Some(tick_path) = ticks {
                let file = std::fs::File::open(&tick_path)
                    .map_err(|e| VolError::Data(format!("cannot open {}: {e}", tick_path.display())))?;
                let series =
                    fourvol_cli::ticks::parse_ticks(std::io::BufReader::new(file), None, false)?;
                let g1 = &series[0].grid;
                let g2 = series.get(1).map(|s| &s.grid).unwrap_or(g1);
                let quad = g1.min_spacing().min(g2.min_spacing());
                let th = fourvol::kernels::theta_integrals(g1, g2, g1, g2, theta_n, quad, theta_grid)?;
                text.push_str("\nt,theta_tilde,theta_acute,theta_check,theta_grave\n");
                for (i, t) in th.t_grid.iter().enumerate() {
                    text.push_str(&format!(
                        "{t},{},{},{},{}\n",
                        th.tilde[i], th.acute[i], th.check[i], th.grave[i]
                    ));
                }
            }
            std::fs::write(&out, text)
                .map_err(|e| VolError::Data(format!("cannot write {}: {e}", out.display())))?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
