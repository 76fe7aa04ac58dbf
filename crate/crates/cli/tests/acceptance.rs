//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p nflab-cli --test acceptance`; pass criterion numbers
//! after `--` to run a subset. The process exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use nflab_core::diagnostics::{
    bound_reports, measure_init_loss, measure_last_layer_norm, measure_sigma_min_growth, seed_list,
};
use nflab_core::linalg::{sample_gaussian, spectral_norm, svd, Matrix, RngState};
use nflab_core::net::{loss_sum_sq, Activation, DenseNet, InitScheme, NetworkConfig};
use nflab_core::optim::{train_objective, TrainConfig};
use nflab_core::tasks::make_curve_dataset;
use serde_json::{json, Value};
use tempfile::TempDir;

type Outcome = Result<(bool, String), Box<dyn Error>>;

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn nflab(args: &[&str]) -> Result<(), Box<dyn Error>> {
    let out = Command::new(env!("CARGO_BIN_EXE_nflab")).args(args).env_remove("NFLAB_OUT").output()?;
    if !out.status.success() {
        return Err(format!("nflab {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()).into());
    }
    Ok(())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp paths")
}

fn read_json(path: impl AsRef<Path>) -> Result<Value, Box<dyn Error>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json(path: &Path, value: &Value) -> Result<(), Box<dyn Error>> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// A repo config with one JSON pointer replaced.
fn variant(name: &str, pointer: &str, value: Value, dir: &Path) -> Result<PathBuf, Box<dyn Error>> {
    let mut cfg = read_json(repo_config(name))?;
    *cfg.pointer_mut(pointer).ok_or("bad pointer")? = value;
    let path = dir.join(format!("{}-{}", pointer.replace('/', "_"), name));
    write_json(&path, &cfg)?;
    Ok(path)
}

// 1

fn shift(net: &mut DenseNet, idx: usize, delta: f64) {
    let mut seen = 0;
    for block in net.param_blocks_mut() {
        if idx < seen + block.len() {
            block[idx - seen] += delta;
            return;
        }
        seen += block.len();
    }
}

fn max_fd_error(net: &DenseNet, x: &Matrix, y: &Matrix) -> f64 {
    let h = 1e-6;
    let (_, grads) = net.backward(x, y).unwrap();
    let analytic: Vec<f64> = grads.blocks().flat_map(|b| b.iter().copied()).collect();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (idx, &an) in analytic.iter().enumerate() {
        let mut central = |h: f64| {
            shift(&mut probe, idx, h);
            let up = loss_sum_sq(&probe.predict(x).unwrap(), y).unwrap();
            shift(&mut probe, idx, -2.0 * h);
            let down = loss_sum_sq(&probe.predict(x).unwrap(), y).unwrap();
            shift(&mut probe, idx, h);
            (up - down) / (2.0 * h)
        };
        // Two Richardson levels over central differences at h, h/2, h/4.
        let (c1, c2, c4) = (central(h), central(h / 2.0), central(h / 4.0));
        let (r1, r2) = ((4.0 * c2 - c1) / 3.0, (4.0 * c4 - c2) / 3.0);
        let fd = (16.0 * r2 - r1) / 15.0;
        worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1.0));
    }
    worst
}

fn gradient_correctness() -> Outcome {
    let activations = [
        Activation::DEFAULT_SINE,
        Activation::DEFAULT_SINC,
        Activation::DEFAULT_GAUSSIAN,
        Activation::DEFAULT_GABOR,
        Activation::Relu,
    ];
    let mut schemes = InitScheme::ALL_STANDARD.to_vec();
    schemes.push(InitScheme::CustomLastExponent { p: 1.0, gain: 1.0 });
    let mut worst = (0.0, String::new());
    let mut nets = 0;
    for act in activations {
        for &init in &schemes {
            for seed in 0..20 {
                let mut cfg = NetworkConfig::new(vec![2, 5, 4, 3, 2], act, init).with_seed(seed);
                // Off the ReLU kink, where the derivative is undefined.
                if act == Activation::Relu {
                    cfg.bias = 0.01;
                }
                let net = DenseNet::init(cfg)?;
                let mut rng = RngState::new(seed).derive("probe");
                let x = Matrix::from_fn(6, 2, |_, _| 2.0 * rng.uniform() - 1.0);
                let y = Matrix::from_fn(6, 2, |_, _| 2.0 * rng.uniform() - 1.0);
                let err = max_fd_error(&net, &x, &y);
                if err >= worst.0 {
                    worst = (err, format!("{} {} seed {seed}", act.name(), init.name()));
                }
                nets += 1;
            }
        }
    }
    Ok((
        worst.0 <= 1e-5,
        format!("{nets} nets, worst rel. error {:.2e} ({}) <= 1e-5", worst.0, worst.1),
    ))
}

// 2

fn linalg_oracles() -> Outcome {
    let mut rng = RngState::new(2024);
    let (mut recon, mut ortho, mut norm_err) = (0f64, 0f64, 0f64);
    for case in 0..100 {
        let rows = 1 + rng.below(60);
        let cols = 1 + rng.below(60);
        let a = sample_gaussian(&mut rng.derive_index(case), rows, cols, 1.0);
        let d = svd(&a)?;
        let resid = d.reconstruct().sub(&a)?.frobenius_norm() / a.frobenius_norm();
        let orth = |q: &Matrix| q.matmul_tn(q).unwrap().sub(&Matrix::identity(q.cols())).unwrap().frobenius_norm();
        recon = recon.max(resid);
        ortho = ortho.max(orth(&d.u)).max(orth(&d.v));
        let sn = spectral_norm(&a, 1e-14, 10_000).value;
        norm_err = norm_err.max((sn - d.s[0]).abs() / d.s[0]);
    }
    Ok((
        recon <= 1e-9 && ortho <= 1e-9 && norm_err <= 1e-8,
        format!(
            "100 shapes: reconstruction {recon:.1e}, orthogonality {ortho:.1e} (<= 1e-9); power vs svd {norm_err:.1e} (<= 1e-8)"
        ),
    ))
}

// 3

fn spectral_norm_law() -> Outcome {
    let widths: Vec<usize> = (8..=14).map(|k| 1 << k).collect();
    let seeds = seed_list(0, 20);
    let lecun = measure_last_layer_norm(InitScheme::LecunNormal, 4, &widths, &seeds)?;
    let worst = lecun
        .records
        .iter()
        .map(|r| (r.median_norm - (1.0 + (4.0 / r.n_in as f64).sqrt())).abs())
        .fold(0.0, f64::max);
    let init1 = measure_last_layer_norm(InitScheme::Init1, 4, &widths, &seeds)?;
    let slope = init1.slope.reported();
    let slope_ok = slope.is_some_and(|s| (s + 0.25).abs() <= 0.05);
    Ok((
        worst <= 0.15 && slope_ok,
        format!(
            "LeCun max |median - (1+sqrt(4/n))| = {worst:.4} (<= 0.15); Init1 slope {} (-0.25 +/- 0.05)",
            slope.map_or_else(|| format!("withheld: {:?}", init1.slope.withheld), |s| format!("{s:.4}"))
        ),
    ))
}

// 4

fn sigma_min_growth() -> Outcome {
    let data = make_curve_dataset(256, true)?;
    let template = NetworkConfig::new(vec![2, 1, 1], Activation::DEFAULT_GAUSSIAN, InitScheme::LecunNormal);
    let widths = [1024, 2048, 4096, 8192, 16384];
    let report = measure_sigma_min_growth(&template, &data, &widths, &seed_list(0, 5))?;
    let s = &report.slope;
    let medians: Vec<String> = report.records.iter().map(|r| format!("{:.2e}", r.median)).collect();
    Ok((
        (s.slope - 0.5).abs() <= 0.1 && s.residual <= 0.05,
        format!(
            "slope {:.4} (0.5 +/- 0.1), residual {:.4} (<= 0.05), medians [{}]",
            s.slope,
            s.residual,
            medians.join(", ")
        ),
    ))
}

// 5

fn init_loss_scale() -> Outcome {
    let sizes = [64, 256, 1024, 4096];
    let mut details = Vec::new();
    let mut pass = true;
    for act in [
        Activation::DEFAULT_SINE,
        Activation::DEFAULT_SINC,
        Activation::DEFAULT_GAUSSIAN,
        Activation::DEFAULT_GABOR,
    ] {
        let template = NetworkConfig::new(vec![2, 256, 1], act, InitScheme::LecunNormal);
        let report = measure_init_loss(&template, &sizes, &seed_list(0, 5), |n| make_curve_dataset(n, true))?;
        pass &= report.spread < 2.0;
        details.push(format!("{} {:.3}", act.name(), report.spread));
    }
    Ok((pass, format!("max/min median ratio (< 2): {}", details.join(", "))))
}

// 6

fn key_bound() -> Outcome {
    let data = make_curve_dataset(128, true)?;
    let template = NetworkConfig::new(vec![2, 1, 1], Activation::DEFAULT_SINC, InitScheme::Init1);
    let seeds = seed_list(0, 100);
    let wide = bound_reports(&template, &data, 4 * 128, &seeds)?;
    let holds = wide.iter().filter(|r| r.holds).count();
    let narrow = bound_reports(&template, &data, 128 / 4, &seeds)?;
    let narrow_holds = narrow.iter().filter(|r| r.holds).count();
    let median = |f: fn(&nflab_core::diagnostics::BoundReport) -> f64| {
        let mut v: Vec<f64> = wide.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        0.5 * (v[49] + v[50])
    };
    Ok((
        holds >= 95,
        format!(
            "n1=512: holds {holds}/100 (>= 95), median sigma0^2 {:.2e} vs rhs {:.2e}; n1=32 contrast: {narrow_holds}/100",
            median(|r| r.sigma0_sq),
            median(|r| r.rhs)
        ),
    ))
}

// 7

fn convergence_smoke() -> Outcome {
    let cfg = read_json(repo_config("curve_train.json"))?;
    let data = make_curve_dataset(200, true)?;
    let net_cfg: NetworkConfig = serde_json::from_value(cfg["network"].clone())?;
    let train: TrainConfig = serde_json::from_value(cfg["train"].clone())?;
    if net_cfg.widths[1] != 4096 || train.max_steps > 50_000 || train.target_psnr_db != Some(35.0) {
        return Err("curve_train.json no longer matches the criterion".into());
    }
    let mut reached = 0;
    let mut steps = Vec::new();
    for seed in 0..3 {
        let mut net = DenseNet::init(net_cfg.clone().with_seed(seed))?;
        let report = train_objective(&mut net, &data, &train)?;
        reached += report.reached_target as usize;
        steps.push(format!("{}:{:.1}dB@{}", seed, report.final_psnr_db, report.steps_run));
    }
    Ok((
        reached >= 2,
        format!("{reached}/3 seeds reach 35 dB within 50k {} steps ({})", train.optimizer.name(), steps.join(" ")),
    ))
}

// 8

fn scaling_ordering() -> Outcome {
    let tmp = TempDir::new()?;
    let out = tmp.path().join("sweep");
    nflab(&["sweep", "--config", p(&repo_config("sweep_curve.json")), "--out", p(&out), "--jobs", "8"])?;
    let mut csv = csv::Reader::from_path(out.join("sweep.csv"))?;
    let mut width: BTreeMap<(String, usize), Option<usize>> = BTreeMap::new();
    for rec in csv.records() {
        let rec = rec?;
        width.insert((rec[0].to_string(), rec[1].parse()?), rec[2].parse().ok());
    }
    let mut ordered = true;
    let mut pairs = Vec::new();
    for n in [50, 100, 200] {
        let a = width[&("sinc_init1".to_string(), n)];
        let b = width[&("sinc_lecun".to_string(), n)];
        ordered &= matches!((a, b), (Some(a), Some(b)) if a <= b);
        pairs.push(format!("N={n}: {a:?}<={b:?}"));
    }
    let exps = read_json(out.join("exponent.json"))?;
    let slope = |label: &str| {
        exps["exponents"]
            .as_array()
            .and_then(|a| a.iter().find(|e| e["label"] == label))
            .and_then(|e| e["fit"]["slope"].as_f64())
    };
    let (sinc, relu) = (slope("sinc_lecun"), slope("relu_pe_lecun"));
    let gap = matches!((sinc, relu), (Some(s), Some(r)) if s <= r - 0.2);
    Ok((
        ordered && gap,
        format!(
            "Init1 <= LeCun widths [{}]; exponent sinc+LeCun {sinc:.3?} <= ReLU-PE {relu:.3?} - 0.2: {gap}",
            pairs.join(", ")
        ),
    ))
}

// 9

fn quality(dir: &Path) -> Result<f64, Box<dyn Error>> {
    read_json(dir.join("metrics.json"))?["quality_metric"]["value"]
        .as_f64()
        .ok_or_else(|| "metrics.json has no quality value".into())
}

fn occupancy_analogue() -> Outcome {
    let tmp = TempDir::new()?;
    let cfg = read_json(repo_config("occupancy.json"))?;
    if cfg["task"]["train_points"] != 20000 || cfg["train"]["max_steps"] != 10000 {
        return Err("occupancy.json no longer matches the criterion".into());
    }
    let lecun = variant("occupancy.json", "/network/init", json!({ "kind": "lecun_uniform" }), tmp.path())?;
    let (a, b) = (tmp.path().join("init2"), tmp.path().join("lecun"));
    nflab(&["occupancy", "--config", p(&repo_config("occupancy.json")), "--out", p(&a)])?;
    nflab(&["occupancy", "--config", p(&lecun), "--out", p(&b)])?;
    let (init2, lecun) = (quality(&a)?, quality(&b)?);
    Ok((
        init2 >= 0.80 && init2 >= lecun - 0.02,
        format!("IOU Init2 {init2:.4} (>= 0.80), LeCunUniform {lecun:.4} (Init2 >= LeCun - 0.02)"),
    ))
}

// 10

fn superres_pipeline() -> Outcome {
    let tmp = TempDir::new()?;
    let cfg = read_json(repo_config("superres.json"))?;
    let widths = &cfg["network"]["widths"];
    if cfg["task"]["image"]["size"] != 128 || widths.as_array().map_or(0, Vec::len) != 4 {
        return Err("superres.json no longer matches the criterion".into());
    }
    let lecun = variant("superres.json", "/network/init", json!({ "kind": "lecun_normal" }), tmp.path())?;
    let (a, b) = (tmp.path().join("init1"), tmp.path().join("lecun"));
    nflab(&["superres", "--config", p(&repo_config("superres.json")), "--out", p(&a)])?;
    nflab(&["superres", "--config", p(&lecun), "--out", p(&b)])?;
    let complete = ["reconstruction.ppm", "low_res.ppm", "model.bin"].iter().all(|f| a.join(f).is_file());
    let (init1, lecun) = (quality(&a)?, quality(&b)?);
    Ok((
        complete && init1 >= 0.6 && init1 >= lecun - 0.01,
        format!("SSIM Init1 {init1:.4} (>= 0.6), LeCunNormal {lecun:.4} (Init1 >= LeCun - 0.01), outputs written: {complete}"),
    ))
}

// 11

fn data_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, Box<dyn Error>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if matches!(ext, "csv" | "json") {
            files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path)?);
        }
    }
    Ok(files)
}

fn first_difference(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Option<String> {
    if a.keys().ne(b.keys()) {
        return Some(format!("file sets differ: {:?} vs {:?}", a.keys(), b.keys()));
    }
    a.iter().find(|(k, v)| b[*k] != **v).map(|(k, _)| k.clone())
}

fn small_configs(dir: &Path) -> Result<Vec<(&'static str, PathBuf)>, Box<dyn Error>> {
    let curve = |widths: Value, probe: Value| {
        json!({
            "schema_version": 1,
            "seed": 4,
            "task": { "kind": "curve", "n": 32 },
            "network": { "widths": widths, "activation": { "kind": "sinc", "omega": 30.0 }, "init": { "kind": "init1" } },
            "train": { "optimizer": { "kind": "adam", "lr": 0.001 }, "max_steps": 400, "log_every": 50 },
            "probe": probe
        })
    };
    let probe = json!({ "widths": [32, 64, 128, 256, 512], "sizes": [16, 32, 64, 128, 256], "seeds": 4 });
    let run = curve(json!([2, 64, 1]), probe);
    let superres = json!({
        "schema_version": 1,
        "seed": 2,
        "task": { "kind": "superres", "image": { "source": "synth", "pattern": { "kind": "bands", "components": 4 }, "size": 32, "channels": 1 } },
        "network": { "widths": [2, 16, 16, 1], "activation": { "kind": "gaussian", "width": 0.1 }, "init": { "kind": "init1" } },
        "train": { "optimizer": { "kind": "adam", "lr": 0.001 }, "max_steps": 200, "log_every": 50 }
    });
    let occupancy = json!({
        "schema_version": 1,
        "seed": 2,
        "task": { "kind": "occupancy", "train_points": 500, "eval_points": 300 },
        "network": { "widths": [3, 16, 16, 1], "activation": { "kind": "gabor_wavelet", "omega": 10.0, "s": 1.0 }, "init": { "kind": "init2" } },
        "train": { "optimizer": { "kind": "adam", "lr": 0.001 }, "max_steps": 200, "log_every": 50 }
    });
    let mut out = Vec::new();
    for (cmd, cfg) in [
        ("train", &run),
        ("verify-bound", &run),
        ("spectral-norm", &run),
        ("sigma-min", &run),
        ("init-loss", &run),
        ("superres", &superres),
        ("occupancy", &occupancy),
    ] {
        let path = dir.join(format!("{cmd}.json"));
        write_json(&path, cfg)?;
        out.push((cmd, path));
    }
    Ok(out)
}

fn small_sweep() -> Value {
    let spec = |label: &str, act: Value| {
        json!({
            "label": label,
            "task": { "kind": "curve" },
            "sizes": [8, 16, 32],
            "template": { "widths": [2, 1, 1], "activation": act, "init": { "kind": "lecun_normal" } },
            "train": { "optimizer": { "kind": "adam", "lr": 0.003 }, "max_steps": 3000, "target_psnr_db": 30.0 },
            "w_min": 1,
            "w_max": 256
        })
    };
    json!({
        "schema_version": 1,
        "sweeps": [
            spec("sinc", json!({ "kind": "sinc", "omega": 30.0 })),
            spec("gauss", json!({ "kind": "gaussian", "width": 0.1 }))
        ]
    })
}

fn journal_lines(path: &Path) -> usize {
    fs::read_to_string(path).map_or(0, |t| t.lines().count())
}

fn reproducibility() -> Outcome {
    let tmp = TempDir::new()?;
    let mut problems = Vec::new();
    let mut checked = 0;
    for (cmd, cfg) in small_configs(tmp.path())? {
        let (a, b) = (tmp.path().join(format!("{cmd}-a")), tmp.path().join(format!("{cmd}-b")));
        nflab(&[cmd, "--config", p(&cfg), "--out", p(&a), "--jobs", "1"])?;
        nflab(&[cmd, "--config", p(&a.join("effective_config.json")), "--out", p(&b), "--jobs", "3"])?;
        if let Some(diff) = first_difference(&data_files(&a)?, &data_files(&b)?) {
            problems.push(format!("{cmd}: {diff}"));
        }
        checked += 1;
    }

    let sweep_cfg = tmp.path().join("sweep.json");
    write_json(&sweep_cfg, &small_sweep())?;
    let full = tmp.path().join("sweep-full");
    nflab(&["sweep", "--config", p(&sweep_cfg), "--out", p(&full), "--jobs", "1"])?;
    let replay = tmp.path().join("sweep-replay");
    nflab(&["sweep", "--config", p(&full.join("effective_config.json")), "--out", p(&replay), "--jobs", "3"])?;
    let reference = data_files(&full)?;
    if let Some(diff) = first_difference(&reference, &data_files(&replay)?) {
        problems.push(format!("sweep replay: {diff}"));
    }

    // Kill partway through, then resume.
    let killed = tmp.path().join("sweep-killed");
    let journal = killed.join("journal.jsonl");
    let total = journal_lines(&full.join("journal.jsonl"));
    let mut child = Command::new(env!("CARGO_BIN_EXE_nflab"))
        .args(["sweep", "--config", p(&sweep_cfg), "--out", p(&killed), "--jobs", "2"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()?;
    let started = Instant::now();
    while journal_lines(&journal) < total / 2 && started.elapsed() < Duration::from_secs(300) {
        if child.try_wait()?.is_some() {
            break;
        }
        sleep(Duration::from_millis(5));
    }
    let interrupted = child.try_wait()?.is_none();
    child.kill().ok();
    child.wait()?;
    let at_kill = journal_lines(&journal);
    nflab(&["sweep", "--config", p(&sweep_cfg), "--out", p(&killed), "--resume", "--jobs", "2"])?;
    if !interrupted {
        problems.push("sweep finished before it could be killed".to_string());
    }
    if let Some(diff) = first_difference(&reference, &data_files(&killed)?) {
        problems.push(format!("sweep kill-resume: {diff}"));
    }
    Ok((
        problems.is_empty(),
        format!(
            "{checked} subcommands replayed from their echo under --jobs 1 vs 3, sweep replayed and resumed after a kill at {at_kill}/{total} journal lines{}",
            if problems.is_empty() { String::new() } else { format!("; differences: {}", problems.join("; ")) }
        ),
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

const fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "gradient correctness", limit: minutes(1), run: gradient_correctness },
    Criterion { id: 2, name: "linear-algebra oracles", limit: minutes(2), run: linalg_oracles },
    Criterion { id: 3, name: "spectral-norm law", limit: minutes(3), run: spectral_norm_law },
    Criterion { id: 4, name: "sigma_min growth", limit: minutes(10), run: sigma_min_growth },
    Criterion { id: 5, name: "loss at initialization", limit: minutes(2), run: init_loss_scale },
    Criterion { id: 6, name: "key bound at linear width", limit: minutes(5), run: key_bound },
    Criterion { id: 7, name: "convergence smoke", limit: minutes(10), run: convergence_smoke },
    Criterion { id: 8, name: "scaling ordering", limit: minutes(60), run: scaling_ordering },
    Criterion { id: 9, name: "occupancy", limit: minutes(15), run: occupancy_analogue },
    Criterion { id: 10, name: "super-resolution", limit: minutes(15), run: superres_pipeline },
    Criterion { id: 11, name: "reproducibility", limit: minutes(10), run: reproducibility },
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {:>2} {:<26} {}  {detail}; {:.1}s (limit {}s)",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
