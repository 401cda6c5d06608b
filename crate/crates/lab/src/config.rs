//! Experiment descriptions. Each one is written as a JSON sidecar next to
//! its outputs and is enough to regenerate them.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use superaccel::fitting::{RmspropScanSettings, TimescaleMode};
use superaccel::mlp::BatchSize;
use superaccel::optim::{SigmaSchedule, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_G};
use superaccel::oscillator::InitialVelocity;

use crate::error::{usage, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaChoice {
    List(Vec<f64>),
    Schedule(SigmaSchedule),
}

/// One optimizer run: a file-name label, the starting lookahead and an
/// optional schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRun {
    pub label: String,
    pub sigma: f64,
    pub schedule: Option<SigmaSchedule>,
}

impl SigmaChoice {
    pub fn runs(&self) -> Result<Vec<SigmaRun>> {
        match self {
            Self::List(list) if list.is_empty() => Err(usage("sigma list is empty")),
            Self::List(list) => Ok(list
                .iter()
                .map(|&s| SigmaRun {
                    label: crate::output::sigma_label(s),
                    sigma: s,
                    schedule: None,
                })
                .collect()),
            Self::Schedule(s) => {
                s.validate()?;
                Ok(vec![SigmaRun {
                    label: format!("{}-{}-{}", s.sigma_start, s.sigma_end, s.decay_steps),
                    sigma: s.sigma_start,
                    schedule: Some(*s),
                }])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolaConfig {
    pub k: f64,
    pub eta: f64,
    pub g: f64,
    pub sigmas: SigmaChoice,
    pub steps: usize,
    pub theta0: f64,
    /// ODE overlay initial velocity (constant-sigma runs only).
    pub v0: InitialVelocity,
    pub fit_mode: TimescaleMode,
}

impl Default for ParabolaConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            eta: 0.01,
            g: DEFAULT_G,
            sigmas: SigmaChoice::List(vec![1.0, 9.0, 20.0]),
            steps: 800,
            theta0: 1.0,
            v0: InitialVelocity::default(),
            fit_mode: TimescaleMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaStarConfig {
    pub k_eta_grid: Vec<f64>,
    pub g: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub n_grid: usize,
}

impl Default for SigmaStarConfig {
    fn default() -> Self {
        Self {
            k_eta_grid: vec![0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5],
            g: DEFAULT_G,
            sigma_min: 0.0,
            sigma_max: 12.0,
            n_grid: 49,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Momentum,
    Rmsprop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synth2dConfig {
    pub optimizer: Optimizer,
    pub eta: f64,
    pub g: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub sigmas: SigmaChoice,
    pub start: [f64; 2],
    pub steps: usize,
}

impl Default for Synth2dConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Momentum,
            eta: 0.01,
            g: DEFAULT_G,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            sigmas: SigmaChoice::List(vec![0.0, 0.9, 2.0, 7.0]),
            start: [-1.0, -3.8],
            steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinregConfig {
    pub eta: f64,
    pub g: f64,
    pub sigmas: SigmaChoice,
    pub steps: usize,
    pub seed: u64,
    pub n_features: usize,
    pub n_data: usize,
    pub theta0: f64,
}

impl Default for LinregConfig {
    fn default() -> Self {
        Self {
            eta: 0.005,
            g: DEFAULT_G,
            sigmas: SigmaChoice::List(vec![0.0, 1.0, 2.0, 4.0]),
            steps: 5000,
            seed: 0,
            n_features: 50,
            n_data: 1000,
            theta0: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistConfig {
    pub arch: Vec<usize>,
    pub eta: f64,
    pub g: f64,
    pub sigmas: SigmaChoice,
    pub epochs: usize,
    pub batch: BatchSize,
    /// Each seed drives both the initialization and the minibatch shuffle.
    pub seeds: Vec<u64>,
    /// First N training / test records; `None` uses the whole file.
    pub train_subset: Option<usize>,
    pub test_subset: Option<usize>,
    pub record_train_loss: bool,
    /// Data location as given on the command line; `None` defers to
    /// `MNIST_DIR` or the workspace default at run time.
    pub mnist_dir: Option<PathBuf>,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            arch: vec![784, 30, 10],
            eta: 0.5,
            g: DEFAULT_G,
            sigmas: SigmaChoice::List(vec![0.0, 0.9, 4.0]),
            epochs: 50,
            batch: BatchSize::Full,
            seeds: vec![1],
            train_subset: Some(5000),
            test_subset: Some(1000),
            record_train_loss: false,
            mnist_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmspropScanConfig {
    pub k: f64,
    pub g: f64,
    pub eta_grid: Vec<f64>,
    pub settings: RmspropScanSettings,
}

impl Default for RmspropScanConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            g: DEFAULT_G,
            eta_grid: vec![0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.1, 0.2],
            settings: RmspropScanSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotConfig {
    pub csv: PathBuf,
    pub x: String,
    pub y: Vec<String>,
    pub log_y: bool,
    /// Output file name, relative to the output directory.
    pub out: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Parabola(ParabolaConfig),
    SigmaStar(SigmaStarConfig),
    Synth2d(Synth2dConfig),
    Linreg(LinregConfig),
    Mnist(MnistConfig),
    RmspropParabolaScan(RmspropScanConfig),
    RmspropSynth2d(Synth2dConfig),
    Plot(PlotConfig),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Parabola(_) => "parabola",
            Self::SigmaStar(_) => "sigma_star",
            Self::Synth2d(_) => "synth2d",
            Self::Linreg(_) => "linreg",
            Self::Mnist(_) => "mnist",
            Self::RmspropParabolaScan(_) => "rmsprop_parabola_scan",
            Self::RmspropSynth2d(_) => "rmsprop_synth2d",
            Self::Plot(_) => "plot",
        }
    }

    pub fn sidecar_name(&self) -> String {
        match self {
            Self::Plot(p) => format!("{}.plot.json", p.out.trim_end_matches(".svg")),
            other => format!("{}.json", other.name()),
        }
    }
}

/// Parses `start:end:steps` into a linear schedule.
pub fn parse_schedule(text: &str) -> Result<SigmaSchedule> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || usage(format!("sigma schedule `{text}` is not start:end:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start = parts[0].trim().parse().map_err(|_| bad())?;
    let end = parts[1].trim().parse().map_err(|_| bad())?;
    let steps = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(SigmaSchedule::linear(start, end, steps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trip() {
        let configs = [
            ExperimentConfig::Parabola(ParabolaConfig::default()),
            ExperimentConfig::Mnist(MnistConfig {
                batch: BatchSize::Mini(200),
                sigmas: SigmaChoice::Schedule(parse_schedule("5:2:100").unwrap()),
                ..Default::default()
            }),
            ExperimentConfig::RmspropParabolaScan(RmspropScanConfig::default()),
        ];
        for c in configs {
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        }
    }

    #[test]
    fn schedule_parsing() {
        let s = parse_schedule("5:2:100").unwrap();
        assert_eq!((s.sigma_start, s.sigma_end, s.decay_steps), (5.0, 2.0, 100));
        assert!(parse_schedule("5:2").is_err());
        assert!(parse_schedule("5:x:3").is_err());
        assert!(parse_schedule("5:2:0").is_err());
    }

    #[test]
    fn empty_sigma_list_is_usage_error() {
        assert!(SigmaChoice::List(vec![]).runs().is_err());
        let runs = SigmaChoice::List(vec![0.9, 4.0]).runs().unwrap();
        assert_eq!(runs[1].label, "4");
    }
}
