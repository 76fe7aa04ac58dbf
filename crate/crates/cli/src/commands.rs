use std::collections::BTreeMap;
use std::path::Path;

use nflab_core::diagnostics::{
    bound_reports, measure_init_loss, measure_last_layer_norm, measure_sigma_min_growth, seed_list, SlopeEstimate,
};
use nflab_core::linalg::{LinearFit, RngState};
use nflab_core::net::DenseNet;
use nflab_core::optim::{train_objective, Objective, TrainReport};
use nflab_core::scaling::{run_sweep, ComparisonTable, SweepReport, TrialCounter};
use nflab_core::tasks::{
    downsample4x, iou, make_occupancy_dataset, save_image, ssim, Dataset, ImageGrid, SuperResObjective,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_run_config, load_sweep_config, RunConfig, TaskConfig};
use crate::error::{CliError, Result};
use crate::journal::Journal;
use crate::model;
use crate::output::{fmt_f64, opt, OutDir, Table};

pub const CONFIG_ECHO: &str = "effective_config.json";

/// Overrides shared by the single-config subcommands.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
}

#[derive(Serialize)]
struct Echoed<'a, T: Serialize> {
    config_echo: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
pub struct QualityMetric {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Serialize)]
struct Metrics<'a> {
    task: &'static str,
    config_echo: &'a RunConfig,
    psnr_db: f64,
    quality_metric: QualityMetric,
}

fn prepare(config: &Path, out: &Path, o: &Overrides) -> Result<(RunConfig, OutDir)> {
    let cfg = load_run_config(config)?.effective(o.seed, o.seeds)?;
    let dir = OutDir::acquire(out)?;
    dir.write_json(CONFIG_ECHO, &cfg)?;
    Ok((cfg, dir))
}

fn check_dims(cfg: &RunConfig, inputs: usize, outputs: usize) -> Result<()> {
    let w = &cfg.network.widths;
    if w[0] != inputs || *w.last().expect("validated widths") != outputs {
        return Err(CliError::config(format!(
            "network widths {w:?} do not match the {} task ({inputs} inputs, {outputs} outputs)",
            cfg.task.name()
        )));
    }
    Ok(())
}

fn trace_table(report: &TrainReport) -> Table {
    let mut t = Table::new(&["step", "loss", "psnr_db"]);
    for (&(step, loss), &(_, psnr)) in report.loss_trace.iter().zip(&report.psnr_trace) {
        t.push(vec![step.to_string(), fmt_f64(loss), fmt_f64(psnr)]);
    }
    t
}

fn fit_and_train(cfg: &RunConfig, objective: &impl Objective) -> Result<(DenseNet, TrainReport)> {
    let mut net = DenseNet::init(cfg.network.clone())?;
    let report = train_objective(&mut net, objective, cfg.train()?)?;
    Ok((net, report))
}

pub fn train(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let data = cfg.task.dataset(cfg.seed, None)?;
    check_dims(&cfg, data.input_dim(), data.output_dim())?;
    let (net, report) = fit_and_train(&cfg, &data)?;
    dir.write_json(
        "report.json",
        &Echoed {
            config_echo: &cfg,
            body: BTreeMap::from([("report", &report)]),
        },
    )?;
    dir.write_csv("trace.csv", &trace_table(&report))?;
    dir.write_bytes("model.bin", &model::encode(&net))?;
    Ok(report.check()?)
}

pub const BOUND_HEADER: [&str; 8] = ["seed", "N", "n_last", "sigma0_sq", "loss0", "wnorm", "rhs", "holds"];

#[derive(Serialize)]
struct BoundSummary<T: Serialize> {
    holds_rate: f64,
    reports: T,
}

pub fn verify_bound(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let data = cfg.task.dataset(cfg.seed, None)?;
    check_dims(&cfg, data.input_dim(), data.output_dim())?;
    let seeds = seed_list(cfg.seed, cfg.probe().seeds);
    if seeds.is_empty() {
        return Err(CliError::config("verify-bound needs at least one seed"));
    }
    let width = cfg.network.widths[cfg.network.widths.len() - 2];
    let reports = bound_reports(&cfg.network, &data, width, &seeds)?;
    let mut t = Table::new(&BOUND_HEADER);
    for r in &reports {
        t.push(vec![
            r.seed.to_string(),
            r.n.to_string(),
            r.n_last.to_string(),
            fmt_f64(r.sigma0_sq),
            fmt_f64(r.loss0),
            fmt_f64(r.wnorm),
            fmt_f64(r.rhs),
            r.holds.to_string(),
        ]);
    }
    dir.write_csv("bound.csv", &t)?;
    let holds = reports.iter().filter(|r| r.holds).count();
    dir.write_json(
        "bound.json",
        &Echoed {
            config_echo: &cfg,
            body: BoundSummary {
                holds_rate: holds as f64 / reports.len() as f64,
                reports: &reports,
            },
        },
    )?;
    Ok(())
}

pub fn spectral_norm(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let probe = cfg.probe();
    let seeds = seed_list(cfg.seed, probe.seeds);
    let report = measure_last_layer_norm(cfg.network.init, probe.n_out, &probe.widths, &seeds)?;
    let mut t = Table::new(&["n_in", "seed", "norm"]);
    for rec in &report.records {
        for (s, v) in rec.seeds.iter().zip(&rec.norms) {
            t.push(vec![rec.n_in.to_string(), s.to_string(), fmt_f64(*v)]);
        }
    }
    dir.write_csv("spectral.csv", &t)?;
    dir.write_json(
        "spectral.json",
        &Echoed {
            config_echo: &cfg,
            body: &report,
        },
    )?;
    Ok(())
}

pub fn sigma_min(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let probe = cfg.probe();
    let data = cfg.task.dataset(cfg.seed, None)?;
    check_dims(&cfg, data.input_dim(), data.output_dim())?;
    let seeds = seed_list(cfg.seed, probe.seeds);
    let report = measure_sigma_min_growth(&cfg.network, &data, &probe.widths, &seeds)?;
    let mut t = Table::new(&["width", "seed", "sigma_min"]);
    for rec in &report.records {
        for (s, v) in rec.seeds.iter().zip(&rec.values) {
            t.push(vec![rec.width.to_string(), s.to_string(), fmt_f64(*v)]);
        }
    }
    dir.write_csv("sigma_min.csv", &t)?;
    dir.write_json(
        "sigma_min.json",
        &Echoed {
            config_echo: &cfg,
            body: &report,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct InitLossSummary<T: Serialize> {
    report: T,
    slope: SlopeEstimate,
}

pub fn init_loss(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let probe = cfg.probe();
    if probe.sizes.is_empty() {
        return Err(CliError::config("init-loss needs probe.sizes"));
    }
    let seeds = seed_list(cfg.seed, probe.seeds);
    let datasets: BTreeMap<usize, Dataset> = probe
        .sizes
        .iter()
        .map(|&n| Ok((n, cfg.task.dataset(cfg.seed, Some(n))?)))
        .collect::<Result<_>>()?;
    let first = datasets.values().next().expect("sizes checked non-empty");
    check_dims(&cfg, first.input_dim(), first.output_dim())?;
    let report = measure_init_loss(&cfg.network, &probe.sizes, &seeds, |n| Ok(datasets[&n].clone()))?;
    let mut t = Table::new(&["N", "seed", "ratio"]);
    for rec in &report.records {
        for (s, v) in rec.seeds.iter().zip(&rec.ratios) {
            t.push(vec![rec.n.to_string(), s.to_string(), fmt_f64(*v)]);
        }
    }
    dir.write_csv("init_loss.csv", &t)?;
    let xs: Vec<f64> = report.records.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = report.records.iter().map(|r| r.median).collect();
    let slope = match SlopeEstimate::fit(&xs, &ys) {
        Ok(s) => s,
        Err(e) => SlopeEstimate {
            slope: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            withheld: Some(e.to_string()),
        },
    };
    dir.write_json(
        "init_loss.json",
        &Echoed {
            config_echo: &cfg,
            body: InitLossSummary { report: &report, slope },
        },
    )?;
    Ok(())
}

pub fn superres(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let TaskConfig::Superres { image } = &cfg.task else {
        return Err(CliError::config(format!("superres needs a superres task, got {}", cfg.task.name())));
    };
    let truth = image.load()?;
    let low = downsample4x(&truth)?;
    check_dims(&cfg, 2, truth.channels())?;
    let objective = SuperResObjective::new(&low);
    let (net, report) = fit_and_train(&cfg, &objective)?;
    dir.write_csv("trace.csv", &trace_table(&report))?;
    report.check()?;
    let pred = net.predict(objective.inputs())?;
    let recon = ImageGrid::from_matrix(truth.width(), truth.height(), &pred)?;
    let save = |name: &str, img: &ImageGrid| save_image(img, dir.path(name)).map_err(CliError::from);
    save("reconstruction.ppm", &recon)?;
    save("low_res.ppm", &low)?;
    dir.write_bytes("model.bin", &model::encode(&net))?;
    dir.write_json(
        "metrics.json",
        &Metrics {
            task: "superres",
            config_echo: &cfg,
            psnr_db: report.final_psnr_db,
            quality_metric: QualityMetric {
                name: "ssim",
                value: ssim(&recon, &truth)?,
            },
        },
    )?;
    Ok(())
}

pub fn occupancy(config: &Path, out: &Path, o: &Overrides) -> Result<()> {
    let (cfg, dir) = prepare(config, out, o)?;
    let TaskConfig::Occupancy {
        scene,
        eval_points,
        threshold,
        ..
    } = &cfg.task
    else {
        return Err(CliError::config(format!("occupancy needs an occupancy task, got {}", cfg.task.name())));
    };
    let train = cfg.task.dataset(cfg.seed, None)?;
    let eval = make_occupancy_dataset(scene, *eval_points, &mut RngState::new(cfg.seed).derive("data").derive("eval"))?;
    check_dims(&cfg, 3, 1)?;
    let (net, report) = fit_and_train(&cfg, &train)?;
    dir.write_csv("trace.csv", &trace_table(&report))?;
    report.check()?;
    let pred = net.predict(&eval.x)?;
    let mut t = Table::new(&["x", "y", "z", "occupancy", "predicted"]);
    for i in 0..eval.len() {
        let p = eval.x.row(i);
        t.push(vec![
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(p[2]),
            fmt_f64(eval.y[(i, 0)]),
            fmt_f64(pred[(i, 0)]),
        ]);
    }
    dir.write_csv("points.csv", &t)?;
    dir.write_bytes("model.bin", &model::encode(&net))?;
    dir.write_json(
        "metrics.json",
        &Metrics {
            task: "occupancy",
            config_echo: &cfg,
            psnr_db: report.final_psnr_db,
            quality_metric: QualityMetric {
                name: "iou",
                value: iou(pred.data(), eval.y.data(), *threshold)?,
            },
        },
    )?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 6] = ["label", "N", "minimal_width", "minimal_params", "saturated", "non_monotone"];

#[derive(Serialize)]
struct SweepEcho<'a, T: Serialize> {
    config_echo: &'a crate::config::SweepConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Exponent<'a> {
    label: &'a str,
    fit: Option<LinearFit>,
}

/// Runs every sweep of the config; returns how many trials were actually trained.
pub fn sweep(config: &Path, out: &Path, seed: Option<u64>, resume: bool) -> Result<usize> {
    let cfg = load_sweep_config(config)?.effective(seed)?;
    let dir = OutDir::acquire(out)?;
    dir.write_json(CONFIG_ECHO, &cfg)?;
    let journal = Journal::open(&dir.path("journal.jsonl"), &cfg, resume)?;
    let counter = TrialCounter::default();
    let reports: Vec<SweepReport> = cfg
        .sweeps
        .par_iter()
        .map(|spec| run_sweep(spec, &journal, &counter))
        .collect::<nflab_core::Result<_>>()?;

    let mut t = Table::new(&SWEEP_HEADER);
    for r in &reports {
        for row in &r.rows {
            t.push(vec![
                r.label.clone(),
                row.n.to_string(),
                opt(row.minimal_width),
                opt(row.minimal_params),
                row.saturated.to_string(),
                row.non_monotone.to_string(),
            ]);
        }
    }
    dir.write_csv("sweep.csv", &t)?;
    let exponents: Vec<Exponent> = reports
        .iter()
        .map(|r| Exponent {
            label: &r.label,
            fit: r.exponent,
        })
        .collect();
    dir.write_json(
        "exponent.json",
        &SweepEcho {
            config_echo: &cfg,
            body: BTreeMap::from([("exponents", &exponents)]),
        },
    )?;
    dir.write_json(
        "sweep_report.json",
        &SweepEcho {
            config_echo: &cfg,
            body: BTreeMap::from([("reports", &reports)]),
        },
    )?;
    if let Ok(table) = ComparisonTable::from_reports(&reports) {
        dir.write_json(
            "comparison.json",
            &SweepEcho {
                config_echo: &cfg,
                body: BTreeMap::from([("table", &table)]),
            },
        )?;
    }
    Ok(counter.get())
}
