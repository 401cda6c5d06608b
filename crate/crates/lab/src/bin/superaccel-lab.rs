use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superaccel::fitting::{RmspropScanSettings, TimescaleMode};
use superaccel::mlp::BatchSize;
use superaccel::optim::{DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_G};
use superaccel::oscillator::InitialVelocity;
use superaccel_lab::config::{
    parse_schedule, ExperimentConfig, LinregConfig, MnistConfig, Optimizer, ParabolaConfig, PlotConfig,
    RmspropScanConfig, SigmaChoice, SigmaStarConfig, Synth2dConfig,
};
use superaccel_lab::error::{usage, Result};
use superaccel_lab::{rerun, run};

/// Reproducible experiments for super-accelerated gradient descent.
///
/// Every command writes CSV/JSON artifacts plus a JSON sidecar into
/// --out-dir; `rerun <sidecar>` regenerates byte-identical files.
#[derive(Parser)]
#[command(name = "superaccel-lab", version)]
struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SigmaArgs {
    /// Single lookahead value.
    #[arg(long, conflicts_with_all = ["sigma_list", "sigma_schedule"])]
    sigma: Option<f64>,
    /// Comma-separated lookahead values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    sigma_list: Option<Vec<f64>>,
    /// Linear schedule start:end:steps.
    #[arg(long, conflicts_with = "sigma_list")]
    sigma_schedule: Option<String>,
}

impl SigmaArgs {
    fn choice(&self, default: &[f64]) -> Result<SigmaChoice> {
        if let Some(s) = &self.sigma_schedule {
            return Ok(SigmaChoice::Schedule(parse_schedule(s)?));
        }
        let list = match (self.sigma, &self.sigma_list) {
            (Some(s), _) => vec![s],
            (None, Some(l)) => l.clone(),
            (None, None) => default.to_vec(),
        };
        if list.is_empty() {
            return Err(usage("--sigma-list is empty"));
        }
        Ok(SigmaChoice::List(list))
    }
}

#[derive(Subcommand)]
enum Command {
    /// 1-D parabola runs with timescale fits and ODE overlays [sigma default 1,9,20].
    Parabola {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[arg(long, default_value_t = 800)]
        steps: usize,
        /// ODE initial velocity: midpoint, zero, first-step or a number.
        #[arg(long, default_value = "midpoint")]
        v0: String,
    },
    /// Numeric optimal lookahead against the closed-form predictions.
    SigmaStar {
        /// Comma-separated k*eta values.
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.0025,0.005,0.01,0.025,0.05,0.1,0.25,0.5")]
        k_eta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma_min: f64,
        #[arg(long, default_value_t = 12.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 49)]
        n_grid: usize,
    },
    /// Trajectories on the 2-D nonconvex valley [sigma default 0,0.9,2,7].
    Synth2d(Synth2dArgs),
    /// Linear regression on cubic targets [sigma default 0,1,2,4].
    Linreg {
        #[arg(long, default_value_t = 0.005)]
        eta: f64,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        n_features: usize,
        #[arg(long, default_value_t = 1000)]
        n_data: usize,
        #[arg(long, default_value_t = 0.2)]
        theta0: f64,
    },
    /// MNIST multilayer perceptron training [sigma default 0,0.9,4].
    Mnist {
        /// Layer sizes, e.g. 784,30,10 or 784,15,15,10.
        #[arg(long, value_delimiter = ',', default_value = "784,30,10")]
        arch: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        /// Minibatch size or `full`.
        #[arg(long, default_value = "full")]
        batch_size: String,
        /// Comma-separated seeds (initialization and shuffling).
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Training records to use, or `all`.
        #[arg(long, default_value = "5000")]
        subset: String,
        /// Test records to use, or `all`.
        #[arg(long, default_value = "1000")]
        test_subset: String,
        /// Also record the training loss each epoch.
        #[arg(long)]
        train_loss: bool,
        /// Directory holding the four IDX files [env MNIST_DIR, else data/mnist].
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
    },
    /// Super-accelerated RMSProp experiments.
    #[command(subcommand)]
    Rmsprop(RmspropCommand),
    /// Line plot of CSV columns as SVG.
    Plot {
        csv: PathBuf,
        /// Column for the x axis.
        #[arg(long, default_value = "iter")]
        x: String,
        /// Comma-separated y columns.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        log_y: bool,
        /// Output file name inside --out-dir.
        #[arg(long, default_value = "plot.svg")]
        out: String,
        #[arg(long, default_value = "")]
        title: String,
    },
    /// Re-run an experiment from its JSON sidecar.
    Rerun { sidecar: PathBuf },
}

#[derive(Args)]
struct Synth2dArgs {
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_G)]
    g: f64,
    #[command(flatten)]
    sigma: SigmaArgs,
    /// Start point `x,y`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [-1.0, -3.8], allow_hyphen_values = true)]
    start: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    steps: usize,
}

#[derive(Subcommand)]
enum RmspropCommand {
    /// Optimal lookahead versus learning rate on k*theta^2/2 (envelope fits).
    ParabolaScan {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        /// Comma-separated learning rates.
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.0025,0.005,0.01,0.025,0.05,0.1,0.2")]
        eta: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        sigma_min: f64,
        #[arg(long, default_value_t = 10.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 41)]
        n_grid: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_BETA2)]
        beta2: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// RMSProp trajectories on the 2-D valley [sigma default 0,0.9,2,7].
    Synth2d {
        #[command(flatten)]
        common: Synth2dArgs,
        #[arg(long, default_value_t = DEFAULT_BETA2)]
        beta2: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
}

fn parse_v0(text: &str) -> Result<InitialVelocity> {
    Ok(match text {
        "midpoint" => InitialVelocity::Midpoint,
        "zero" => InitialVelocity::Zero,
        "first-step" => InitialVelocity::FirstStep,
        other => InitialVelocity::Value(
            other
                .parse()
                .map_err(|_| usage(format!("--v0 `{other}` is not midpoint, zero, first-step or a number")))?,
        ),
    })
}

fn parse_limit(flag: &str, text: &str) -> Result<Option<usize>> {
    if text == "all" {
        return Ok(None);
    }
    match text.parse() {
        Ok(0) | Err(_) => Err(usage(format!("{flag} `{text}` is not a positive count or `all`"))),
        Ok(n) => Ok(Some(n)),
    }
}

fn parse_batch(text: &str) -> Result<BatchSize> {
    if text.eq_ignore_ascii_case("full") {
        return Ok(BatchSize::Full);
    }
    match text.parse() {
        Ok(0) | Err(_) => Err(usage(format!("--batch-size `{text}` is not a positive integer or `full`"))),
        Ok(n) => Ok(BatchSize::Mini(n)),
    }
}

fn synth2d_config(a: &Synth2dArgs, optimizer: Optimizer, beta2: f64, epsilon: f64) -> Result<Synth2dConfig> {
    Ok(Synth2dConfig {
        optimizer,
        eta: a.eta,
        g: a.g,
        beta2,
        epsilon,
        sigmas: a.sigma.choice(&[0.0, 0.9, 2.0, 7.0])?,
        start: [a.start[0], a.start[1]],
        steps: a.steps,
    })
}

fn build(command: Command) -> Result<Option<ExperimentConfig>> {
    Ok(Some(match command {
        Command::Parabola {
            k,
            eta,
            g,
            sigma,
            steps,
            v0,
        } => ExperimentConfig::Parabola(ParabolaConfig {
            k,
            eta,
            g,
            sigmas: sigma.choice(&[1.0, 9.0, 20.0])?,
            steps,
            theta0: 1.0,
            v0: parse_v0(&v0)?,
            fit_mode: TimescaleMode::Auto,
        }),
        Command::SigmaStar {
            k_eta,
            g,
            sigma_min,
            sigma_max,
            n_grid,
        } => ExperimentConfig::SigmaStar(SigmaStarConfig {
            k_eta_grid: k_eta,
            g,
            sigma_min,
            sigma_max,
            n_grid,
        }),
        Command::Synth2d(a) => {
            ExperimentConfig::Synth2d(synth2d_config(&a, Optimizer::Momentum, DEFAULT_BETA2, DEFAULT_EPSILON)?)
        }
        Command::Linreg {
            eta,
            g,
            sigma,
            steps,
            seed,
            n_features,
            n_data,
            theta0,
        } => ExperimentConfig::Linreg(LinregConfig {
            eta,
            g,
            sigmas: sigma.choice(&[0.0, 1.0, 2.0, 4.0])?,
            steps,
            seed,
            n_features,
            n_data,
            theta0,
        }),
        Command::Mnist {
            arch,
            eta,
            g,
            sigma,
            epochs,
            batch_size,
            seeds,
            subset,
            test_subset,
            train_loss,
            mnist_dir,
        } => ExperimentConfig::Mnist(MnistConfig {
            arch,
            eta,
            g,
            sigmas: sigma.choice(&[0.0, 0.9, 4.0])?,
            epochs,
            batch: parse_batch(&batch_size)?,
            seeds,
            train_subset: parse_limit("--subset", &subset)?,
            test_subset: parse_limit("--test-subset", &test_subset)?,
            record_train_loss: train_loss,
            mnist_dir,
        }),
        Command::Rmsprop(RmspropCommand::ParabolaScan {
            k,
            g,
            eta,
            sigma_min,
            sigma_max,
            n_grid,
            steps,
            beta2,
            epsilon,
        }) => ExperimentConfig::RmspropParabolaScan(RmspropScanConfig {
            k,
            g,
            eta_grid: eta,
            settings: RmspropScanSettings {
                sigma_min,
                sigma_max,
                n_grid,
                steps,
                beta2,
                epsilon,
            },
        }),
        Command::Rmsprop(RmspropCommand::Synth2d { common, beta2, epsilon }) => {
            ExperimentConfig::RmspropSynth2d(synth2d_config(&common, Optimizer::Rmsprop, beta2, epsilon)?)
        }
        Command::Plot {
            csv,
            x,
            y,
            log_y,
            out,
            title,
        } => ExperimentConfig::Plot(PlotConfig {
            csv,
            x,
            y,
            log_y,
            out,
            title,
        }),
        Command::Rerun { .. } => return Ok(None),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rerun { sidecar } => rerun(&sidecar, &cli.out_dir),
        command => build(command).and_then(|c| run(&c.expect("non-rerun command"), &cli.out_dir)),
    };
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("{} files in {}", outcome.written.files.len(), cli.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
