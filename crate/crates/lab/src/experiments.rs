//! One function per experiment. Each writes its CSV/JSON artifacts into the
//! output directory and finishes with the JSON sidecar that reproduces them.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use superaccel::fitting::{
    extract_timescale, extract_timescale_about, find_sigma_star_numeric, rmsprop_sigma_star_scan, FitMethod, FitResult,
    SigmaScan, TimescaleMode,
};
use superaccel::landscape::{linreg_hessian_spectrum, linreg_landscape, make_linreg_dataset, parabola, synth2d};
use superaccel::mlp::{train, MlpSpec, TrainConfig, TrainHistory};
use superaccel::optim::{run_trajectory, OptimConfig, Termination, Trajectory};
use superaccel::oscillator::{overlay_parabola, sigma_star_formula, OdeVariant};
use superaccel::Landscape;

use crate::config::{
    ExperimentConfig, LinregConfig, MnistConfig, Optimizer, ParabolaConfig, PlotConfig, RmspropScanConfig, SigmaRun,
    SigmaStarConfig, Synth2dConfig,
};
use crate::data::{load_split, resolve_mnist_dir, Split};
use crate::error::{usage, LabError, Result};
use crate::output::{ensure_dir, fmt_f64, fmt_opt, header, read_json, CsvColumns, Written};
use crate::svg::{self, PlotOptions, Series};

/// Files written by a command plus one human-readable line per run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Written,
    pub lines: Vec<String>,
}

pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    ensure_dir(out_dir)?;
    let mut outcome = match config {
        ExperimentConfig::Parabola(c) => cmd_parabola(c, out_dir)?,
        ExperimentConfig::SigmaStar(c) => cmd_sigma_star(c, out_dir)?,
        ExperimentConfig::Synth2d(c) => cmd_synth2d(c, "synth2d", out_dir)?,
        ExperimentConfig::RmspropSynth2d(c) => cmd_synth2d(c, "rmsprop_synth2d", out_dir)?,
        ExperimentConfig::Linreg(c) => cmd_linreg(c, out_dir)?,
        ExperimentConfig::Mnist(c) => cmd_mnist(c, out_dir)?,
        ExperimentConfig::RmspropParabolaScan(c) => cmd_rmsprop_scan(c, out_dir)?,
        ExperimentConfig::Plot(c) => emit_plot(c, out_dir)?,
    };
    outcome.written.json(out_dir.join(config.sidecar_name()), config)?;
    Ok(outcome)
}

/// Reads a sidecar and runs it again into `out_dir`.
pub fn rerun(sidecar: &Path, out_dir: &Path) -> Result<Outcome> {
    let config: ExperimentConfig = read_json(sidecar).map_err(|e| e.context(sidecar.display().to_string()))?;
    run(&config, out_dir)
}

fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::Diverged => "diverged",
        Termination::Trapped => "trapped",
    }
}

fn optim_for(run: &SigmaRun, mut cfg: OptimConfig) -> OptimConfig {
    cfg.sigma = run.sigma;
    match run.schedule {
        Some(s) => cfg.with_schedule(s),
        None => cfg,
    }
}

fn at_sigma(run: &SigmaRun) -> impl Fn(LabError) -> LabError + '_ {
    move |e| e.context(format!("sigma={}", run.label))
}

fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.records
        .iter()
        .map(|r| {
            let mut row = vec![r.iter.to_string()];
            row.extend(r.theta.iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(r.loss));
            row.push(fmt_opt(r.dist));
            row
        })
        .collect()
}

fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((0..dim).map(|j| format!("theta_{j}")));
    h.push("loss".into());
    h.push("dist".into());
    h
}

fn sign_changes(xs: impl Iterator<Item = f64>) -> usize {
    let mut prev = 0.0f64;
    let mut n = 0;
    for x in xs {
        if x != 0.0 {
            if prev != 0.0 && (x > 0.0) != (prev > 0.0) {
                n += 1;
            }
            prev = x;
        }
    }
    n
}

#[derive(Serialize)]
struct OdeRms {
    ode1: f64,
    ode2: f64,
    ode3: f64,
}

#[derive(Serialize)]
struct ParabolaRun {
    label: String,
    sigma: f64,
    termination: &'static str,
    sign_changes: usize,
    oscillatory: bool,
    fit: Option<FitResult>,
    fit_error: Option<String>,
    /// RMS distance of each surrogate from the iterates (constant sigma only).
    ode_rms: Option<OdeRms>,
}

type ParabolaResult = (Trajectory, ParabolaRun, Option<Vec<Vec<String>>>);

pub fn cmd_parabola(c: &ParabolaConfig, out_dir: &Path) -> Result<Outcome> {
    let runs = c.sigmas.runs()?;
    let landscape = parabola(c.k)?;
    let k_eta = c.k * c.eta;
    let results: Vec<ParabolaResult> = runs
        .par_iter()
        .map(|run| {
            let cfg = optim_for(run, OptimConfig::momentum(c.eta, c.g, run.sigma));
            let traj = run_trajectory(&landscape, &cfg, &[c.theta0], c.steps)
                .map_err(LabError::from)
                .map_err(at_sigma(run))?;
            let (fit, fit_error) = match extract_timescale(&traj, c.fit_mode) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let (ode_rms, overlay) = if run.schedule.is_none() {
                let (discrete, dev) = overlay_parabola(k_eta, c.g, run.sigma, c.theta0, c.steps, c.v0)
                    .map_err(LabError::from)
                    .map_err(at_sigma(run))?;
                let rows = discrete
                    .iter()
                    .enumerate()
                    .map(|(i, &theta)| {
                        let mut row = vec![i.to_string(), fmt_f64(theta)];
                        row.extend(dev.iter().map(|d| fmt_opt(d.path.as_ref().map(|p| p[i].x))));
                        row
                    })
                    .collect();
                let rms = OdeRms {
                    ode1: dev[0].rms,
                    ode2: dev[1].rms,
                    ode3: dev[2].rms,
                };
                (Some(rms), Some(rows))
            } else {
                (None, None)
            };
            let crossings = sign_changes(traj.records.iter().map(|r| r.theta[0]));
            let summary = ParabolaRun {
                label: run.label.clone(),
                sigma: run.sigma,
                termination: termination_label(traj.terminated),
                sign_changes: crossings,
                oscillatory: crossings >= 2,
                fit,
                fit_error,
                ode_rms,
            };
            Ok((traj, summary, overlay))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    for (traj, summary, overlay) in &results {
        out.written.csv(
            out_dir.join(format!("parabola_sigma_{}.csv", summary.label)),
            &trajectory_header(1),
            &trajectory_rows(traj),
        )?;
        if let Some(rows) = overlay {
            out.written.csv(
                out_dir.join(format!("parabola_overlay_sigma_{}.csv", summary.label)),
                &header(&["iter", "theta", "ode1_x", "ode2_x", "ode3_x"]),
                rows,
            )?;
        }
        let t = summary.fit.as_ref().map_or(f64::NAN, |f| f.timescale);
        out.lines.push(format!(
            "sigma={}: {} T={} {}",
            summary.label,
            if summary.oscillatory { "oscillatory" } else { "monotone" },
            t,
            summary.termination
        ));
    }
    let summaries: Vec<&ParabolaRun> = results.iter().map(|r| &r.1).collect();
    out.written.json(out_dir.join("parabola_fits.json"), &summaries)?;
    Ok(out)
}

#[derive(Serialize)]
struct ScanPointSummary {
    sigma: f64,
    timescale: f64,
    converged: bool,
    method: Option<FitMethod>,
    error: Option<String>,
}

fn scan_points(scan: &SigmaScan) -> Vec<ScanPointSummary> {
    scan.points
        .iter()
        .zip(&scan.timescales)
        .map(|(p, &t)| ScanPointSummary {
            sigma: p.sigma,
            timescale: t,
            converged: p.fit.as_ref().is_some_and(|f| f.converged),
            method: p.fit.as_ref().map(|f| f.method),
            error: p.error.clone(),
        })
        .collect()
}

fn scan_rows(scan: &SigmaScan) -> Vec<Vec<String>> {
    scan_points(scan)
        .iter()
        .map(|p| vec![fmt_f64(p.sigma), fmt_f64(p.timescale), p.converged.to_string()])
        .collect()
}

#[derive(Serialize)]
struct SigmaStarRow {
    k_eta: f64,
    sigma_star: Option<f64>,
    well_defined: bool,
    ode1: Option<f64>,
    ode2: Option<f64>,
    ode3: Option<f64>,
    points: Vec<ScanPointSummary>,
}

pub fn cmd_sigma_star(c: &SigmaStarConfig, out_dir: &Path) -> Result<Outcome> {
    if c.k_eta_grid.is_empty() {
        return Err(usage("k_eta grid is empty"));
    }
    let scans: Vec<(f64, SigmaScan)> = c
        .k_eta_grid
        .par_iter()
        .map(|&k_eta| {
            find_sigma_star_numeric(k_eta, c.g, c.sigma_min, c.sigma_max, c.n_grid)
                .map(|s| (k_eta, s))
                .map_err(|e| LabError::from(e).context(format!("k_eta={k_eta}")))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (k_eta, scan) in &scans {
        let formula = |v| sigma_star_formula(v, *k_eta, c.g).ok();
        let row = SigmaStarRow {
            k_eta: *k_eta,
            sigma_star: scan.sigma_star,
            well_defined: scan.well_defined,
            ode1: formula(OdeVariant::Ode1),
            ode2: formula(OdeVariant::Ode2),
            ode3: formula(OdeVariant::Ode3),
            points: scan_points(scan),
        };
        rows.push(vec![
            fmt_f64(row.k_eta),
            fmt_opt(row.sigma_star),
            row.well_defined.to_string(),
            fmt_opt(row.ode1),
            fmt_opt(row.ode2),
            fmt_opt(row.ode3),
        ]);
        out.written.csv(
            out_dir.join(format!("sigma_scan_keta_{k_eta}.csv")),
            &header(&["sigma", "T", "converged"]),
            &scan_rows(scan),
        )?;
        out.lines.push(match scan.sigma_star {
            Some(s) if scan.well_defined => format!("k_eta={k_eta}: sigma*={s:.4} (ode3 {:.4})", row.ode3.unwrap_or(f64::NAN)),
            _ => format!("k_eta={k_eta}: sigma* not well defined"),
        });
        summary.push(row);
    }
    out.written.csv(
        out_dir.join("sigma_star.csv"),
        &header(&["k_eta", "numeric", "well_defined", "ode1", "ode2", "ode3"]),
        &rows,
    )?;
    out.written.json(out_dir.join("sigma_star_summary.json"), &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct Synth2dRun {
    label: String,
    sigma: f64,
    termination: &'static str,
    final_theta: Vec<f64>,
    final_dist: Option<f64>,
    final_gradient_sup_norm: f64,
    fit: Option<FitResult>,
}

pub fn cmd_synth2d(c: &Synth2dConfig, prefix: &str, out_dir: &Path) -> Result<Outcome> {
    let runs = c.sigmas.runs()?;
    let landscape = synth2d()?;
    let base = match c.optimizer {
        Optimizer::Momentum => OptimConfig::momentum(c.eta, c.g, 0.0),
        Optimizer::Rmsprop => {
            let mut o = OptimConfig::rmsprop(c.eta, c.g, 0.0);
            o.beta2 = c.beta2;
            o.epsilon = c.epsilon;
            o
        }
    };
    let trajs: Vec<Trajectory> = runs
        .par_iter()
        .map(|run| {
            run_trajectory(&landscape, &optim_for(run, base), &c.start, c.steps)
                .map_err(LabError::from)
                .map_err(at_sigma(run))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for (run, traj) in runs.iter().zip(&trajs) {
        out.written.csv(
            out_dir.join(format!("{prefix}_sigma_{}.csv", run.label)),
            &trajectory_header(2),
            &trajectory_rows(traj),
        )?;
        let last = traj.last();
        let grad = landscape.try_gradient(&last.theta)?;
        let s = Synth2dRun {
            label: run.label.clone(),
            sigma: run.sigma,
            termination: termination_label(traj.terminated),
            final_theta: last.theta.clone(),
            final_dist: last.dist,
            final_gradient_sup_norm: grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
            fit: extract_timescale_about(traj, landscape.minimum_hint(), TimescaleMode::Auto).ok(),
        };
        out.lines.push(format!(
            "sigma={}: {} dist={}",
            s.label,
            s.termination,
            fmt_opt(s.final_dist)
        ));
        summary.push(s);
    }
    let longest = trajs.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let mut cols = vec!["iter".to_string()];
    cols.extend(runs.iter().map(|r| format!("dist_sigma_{}", r.label)));
    let rows: Vec<Vec<String>> = (0..longest)
        .map(|i| {
            let mut row = vec![i.to_string()];
            row.extend(trajs.iter().map(|t| fmt_opt(t.records.get(i).and_then(|r| r.dist))));
            row
        })
        .collect();
    out.written.csv(out_dir.join(format!("{prefix}_distance.csv")), &cols, &rows)?;
    out.written.json(out_dir.join(format!("{prefix}_summary.json")), &serde_json::json!({
        "minimum": landscape.minimum_hint(),
        "runs": summary,
    }))?;
    Ok(out)
}

#[derive(Serialize)]
struct LinregRun {
    label: String,
    sigma: f64,
    termination: &'static str,
    final_loss: f64,
}

pub fn cmd_linreg(c: &LinregConfig, out_dir: &Path) -> Result<Outcome> {
    let runs = c.sigmas.runs()?;
    let dataset = make_linreg_dataset(c.n_features, c.n_data, c.seed)?;
    let spectrum = linreg_hessian_spectrum(&dataset)?;
    let landscape = linreg_landscape(&dataset);
    let theta0 = vec![c.theta0; landscape.dim()];
    let trajs: Vec<Trajectory> = runs
        .par_iter()
        .map(|run| {
            let cfg = optim_for(run, OptimConfig::momentum(c.eta, c.g, run.sigma));
            run_trajectory(&landscape, &cfg, &theta0, c.steps)
                .map_err(LabError::from)
                .map_err(at_sigma(run))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    let mut cols = vec!["iter".to_string()];
    cols.extend(runs.iter().map(|r| format!("loss_sigma_{}", r.label)));
    let rows: Vec<Vec<String>> = (0..=c.steps)
        .map(|i| {
            let mut row = vec![i.to_string()];
            row.extend(trajs.iter().map(|t| fmt_opt(t.records.get(i).map(|r| r.loss))));
            row
        })
        .collect();
    out.written.csv(out_dir.join("linreg_losses.csv"), &cols, &rows)?;
    out.written.json(out_dir.join("linreg_spectrum.json"), &spectrum)?;

    let mut data_cols: Vec<String> = (1..=c.n_features).map(|j| format!("x_{j}")).collect();
    data_cols.push("y".into());
    let data_rows: Vec<Vec<String>> = dataset
        .rows()
        .zip(dataset.targets())
        .map(|(x, &y)| x.iter().chain(std::iter::once(&y)).map(|&v| fmt_f64(v)).collect())
        .collect();
    out.written.csv(out_dir.join("linreg_dataset.csv"), &data_cols, &data_rows)?;

    let summary: Vec<LinregRun> = runs
        .iter()
        .zip(&trajs)
        .map(|(run, t)| LinregRun {
            label: run.label.clone(),
            sigma: run.sigma,
            termination: termination_label(t.terminated),
            final_loss: t.last().loss,
        })
        .collect();
    for s in &summary {
        out.lines.push(format!("sigma={}: {} final loss {}", s.label, s.termination, s.final_loss));
    }
    out.lines.push(format!("kappa in [{}, {}]", spectrum.kappa_min, spectrum.kappa_max));
    out.written.json(out_dir.join("linreg_summary.json"), &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct MnistRun {
    label: String,
    seed: u64,
    final_test_accuracy: Option<f64>,
    final_test_loss: Option<f64>,
    aborted: Option<String>,
    file: String,
}

pub fn cmd_mnist(c: &MnistConfig, out_dir: &Path) -> Result<Outcome> {
    let runs = c.sigmas.runs()?;
    if c.seeds.is_empty() {
        return Err(usage("seed list is empty"));
    }
    let dir = resolve_mnist_dir(c.mnist_dir.as_deref());
    let train_set = load_split(&dir, Split::Train, c.train_subset)?;
    let test_set = load_split(&dir, Split::Test, c.test_subset)?;
    let jobs: Vec<(&SigmaRun, u64)> = runs.iter().flat_map(|r| c.seeds.iter().map(move |&s| (r, s))).collect();
    let histories: Vec<TrainHistory> = jobs
        .par_iter()
        .map(|&(run, seed)| {
            let spec = MlpSpec::new(&c.arch, seed)?;
            let cfg = TrainConfig {
                optim: optim_for(run, OptimConfig::momentum(c.eta, c.g, run.sigma)),
                batch: c.batch,
                epochs: c.epochs,
                shuffle_seed: seed,
                record_train_loss: c.record_train_loss,
            };
            train(&spec, &train_set, &test_set, &cfg)
                .map_err(LabError::from)
                .map_err(|e| e.context(format!("sigma={} seed={seed}", run.label)))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    let mut summary = Vec::new();
    let mut cols = header(&["epoch", "test_loss", "test_accuracy"]);
    if c.record_train_loss {
        cols.push("train_loss".into());
    }
    for (&(run, seed), h) in jobs.iter().zip(&histories) {
        let file = format!("mnist_sigma_{}_seed_{seed}.csv", run.label);
        let rows: Vec<Vec<String>> = h
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.epoch.to_string(), fmt_f64(r.test_loss), fmt_f64(r.test_accuracy)];
                if c.record_train_loss {
                    row.push(fmt_opt(r.train_loss));
                }
                row
            })
            .collect();
        out.written.csv(out_dir.join(&file), &cols, &rows)?;
        let last = h.last();
        let s = MnistRun {
            label: run.label.clone(),
            seed,
            final_test_accuracy: last.map(|r| r.test_accuracy),
            final_test_loss: last.map(|r| r.test_loss),
            aborted: h.aborted.clone(),
            file,
        };
        out.lines.push(format!(
            "sigma={} seed={seed}: accuracy {}{}",
            s.label,
            fmt_opt(s.final_test_accuracy),
            s.aborted.as_deref().map(|a| format!(" (aborted: {a})")).unwrap_or_default()
        ));
        summary.push(s);
    }
    out.written.json(out_dir.join("mnist_summary.json"), &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct RmspropScanSummary {
    eta: f64,
    sigma_star: Option<f64>,
    well_defined: bool,
    error: Option<String>,
    points: Vec<ScanPointSummary>,
}

pub fn cmd_rmsprop_scan(c: &RmspropScanConfig, out_dir: &Path) -> Result<Outcome> {
    if c.eta_grid.is_empty() {
        return Err(usage("eta grid is empty"));
    }
    let rows: Vec<_> = c
        .eta_grid
        .par_iter()
        .map(|&eta| {
            rmsprop_sigma_star_scan(&[eta], c.k, c.g, &c.settings)
                .map(|mut r| r.remove(0))
                .map_err(|e| LabError::from(e).context(format!("eta={eta}")))
        })
        .collect::<Result<_>>()?;

    let mut out = Outcome::default();
    let mut csv_rows = Vec::new();
    let mut summary = Vec::new();
    for row in rows {
        let (sigma_star, well_defined) = row.scan.as_ref().map_or((None, false), |s| (s.sigma_star, s.well_defined));
        csv_rows.push(vec![fmt_f64(row.eta), fmt_opt(sigma_star), well_defined.to_string()]);
        if let Some(scan) = &row.scan {
            out.written.csv(
                out_dir.join(format!("rmsprop_scan_eta_{}.csv", row.eta)),
                &header(&["sigma", "T", "converged"]),
                &scan_rows(scan),
            )?;
        }
        out.lines.push(format!("eta={}: sigma*={}", row.eta, fmt_opt(sigma_star.filter(|_| well_defined))));
        summary.push(RmspropScanSummary {
            eta: row.eta,
            sigma_star,
            well_defined,
            error: row.error,
            points: row.scan.as_ref().map(scan_points).unwrap_or_default(),
        });
    }
    out.written.csv(
        out_dir.join("rmsprop_sigma_star.csv"),
        &header(&["eta", "sigma_star", "well_defined"]),
        &csv_rows,
    )?;
    out.written.json(out_dir.join("rmsprop_sigma_star.json"), &summary)?;
    Ok(out)
}

pub fn emit_plot(c: &PlotConfig, out_dir: &Path) -> Result<Outcome> {
    if c.y.is_empty() {
        return Err(usage("no y columns selected"));
    }
    let table = CsvColumns::read(&c.csv)?;
    let xs = table.column(&c.x)?;
    let series = c
        .y
        .iter()
        .map(|name| {
            let ys = table.column(name)?;
            let points = xs
                .iter()
                .zip(&ys)
                .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
                .collect();
            Ok(Series {
                name: name.clone(),
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = PlotOptions {
        title: c.title.clone(),
        x_label: c.x.clone(),
        y_label: if c.y.len() == 1 { c.y[0].clone() } else { String::new() },
        log_y: c.log_y,
    };
    let mut out = Outcome::default();
    let path: PathBuf = out_dir.join(&c.out);
    out.written.text(path.clone(), &svg::render(&series, &opts))?;
    out.lines.push(format!("wrote {}", path.display()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SigmaChoice;

    #[test]
    fn parabola_regimes_and_rerun() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::Parabola(ParabolaConfig::default());
        let out = run(&cfg, dir.path()).unwrap();
        let fits: serde_json::Value = read_json(&dir.path().join("parabola_fits.json")).unwrap();
        assert_eq!(fits[0]["oscillatory"], true);
        assert_eq!(fits[2]["oscillatory"], false);
        assert!(dir.path().join("parabola_sigma_20.csv").is_file());

        let again = tempfile::tempdir().unwrap();
        rerun(&dir.path().join("parabola.json"), again.path()).unwrap();
        for f in &out.written.files {
            let name = f.file_name().unwrap();
            assert_eq!(std::fs::read(f).unwrap(), std::fs::read(again.path().join(name)).unwrap());
        }
    }

    #[test]
    fn errors_name_the_sigma() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ParabolaConfig {
            sigmas: SigmaChoice::List(vec![1.0, -2.0]),
            ..Default::default()
        };
        let err = cmd_parabola(&cfg, dir.path()).unwrap_err().to_string();
        assert!(err.contains("sigma=-2"), "{err}");
    }

    #[test]
    fn plot_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = LinregConfig {
            steps: 50,
            n_features: 3,
            n_data: 20,
            ..Default::default()
        };
        cmd_linreg(&cfg, dir.path()).unwrap();
        let plot = PlotConfig {
            csv: dir.path().join("linreg_losses.csv"),
            x: "iter".into(),
            y: vec!["loss_sigma_0".into(), "loss_sigma_4".into()],
            log_y: true,
            out: "losses.svg".into(),
            title: "loss".into(),
        };
        run(&ExperimentConfig::Plot(plot), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("losses.svg")).unwrap();
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(dir.path().join("losses.plot.json").is_file());
    }
}
