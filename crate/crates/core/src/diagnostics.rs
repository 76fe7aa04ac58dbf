//! Numerical checks of the spectral quantities behind the convergence bounds, measured at initialization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{log_log_fit, sigma_min, spectral_norm, Matrix, RngState};
use crate::net::{loss_sum_sq, DenseNet, InitScheme, NetworkConfig};
use crate::tasks::Dataset;

/// Largest RMS log-space residual at which a fitted slope is still reported.
pub const MAX_SLOPE_RESIDUAL: f64 = 0.1;
const MIN_SLOPE_POINTS: usize = 5;
const MIN_SLOPE_SPAN: f64 = 16.0;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

/// A log-log slope plus the reason it is withheld, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub withheld: Option<String>,
}

impl SlopeEstimate {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let fit = log_log_fit(xs, ys)?;
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let withheld = if xs.len() < MIN_SLOPE_POINTS {
            Some(format!("only {} widths, need {MIN_SLOPE_POINTS}", xs.len()))
        } else if hi / lo < MIN_SLOPE_SPAN {
            Some(format!("widths span {:.1}x, need {MIN_SLOPE_SPAN}x", hi / lo))
        } else if !(fit.residual <= MAX_SLOPE_RESIDUAL) {
            Some(format!("fit residual {:.3} exceeds {MAX_SLOPE_RESIDUAL}", fit.residual))
        } else {
            None
        };
        Ok(Self {
            slope: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            withheld,
        })
    }

    /// The slope, unless the fit was withheld.
    pub fn reported(&self) -> Option<f64> {
        self.withheld.is_none().then_some(self.slope)
    }
}

/// Median and interquartile range (linear interpolation between order statistics).
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if v.is_empty() {
            return f64::NAN;
        }
        let pos = p * (v.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    (q(0.5), q(0.75) - q(0.25))
}

fn log_slope_inputs(widths: &[usize], medians: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    if medians.iter().all(|&m| m > 0.0 && m.is_finite()) {
        Some((widths.iter().map(|&w| w as f64).collect(), medians.to_vec()))
    } else {
        None
    }
}

fn fit_or_withhold(widths: &[usize], medians: &[f64]) -> Result<SlopeEstimate> {
    match log_slope_inputs(widths, medians) {
        Some((xs, ys)) => SlopeEstimate::fit(&xs, &ys),
        None => Ok(SlopeEstimate {
            slope: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            withheld: Some("non-positive values cannot be fitted in log space".to_string()),
        }),
    }
}

fn check_widths(widths: &[usize], what: &str) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::config(format!("{what} needs at least two widths")));
    }
    if widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(Error::config(format!("{what} widths must be positive and strictly increasing")));
    }
    Ok(())
}

/// Per-seed seed values: `master, master+1, …`.
pub fn seed_list(master: u64, seeds: usize) -> Vec<u64> {
    (0..seeds as u64).map(|i| master.wrapping_add(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    pub n_in: usize,
    pub n_out: usize,
    pub scheme: String,
    pub seeds: Vec<u64>,
    pub norms: Vec<f64>,
    pub median_norm: f64,
    pub iqr: f64,
}

/// Fit of `median ≈ c·g(n_in)` in log space for a candidate law `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: String,
    pub scale: f64,
    pub rms_log_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub records: Vec<SpectralRecord>,
    pub slope: SlopeEstimate,
    pub models: Vec<ModelFit>,
}

fn model_fit(name: &str, medians: &[f64], law: impl Fn(usize) -> f64, n_ins: &[usize]) -> ModelFit {
    let logs: Vec<f64> = medians
        .iter()
        .zip(n_ins)
        .map(|(&m, &n)| m.ln() - law(n).ln())
        .collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let rms = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    ModelFit {
        model: name.to_string(),
        scale: mean.exp(),
        rms_log_residual: rms,
    }
}

/// Samples the final-layer matrix (`n_in × n_out`) of `scheme` per width and seed and
/// measures its spectral norm.
pub fn measure_last_layer_norm(
    scheme: InitScheme,
    n_out: usize,
    widths: &[usize],
    seeds: &[u64],
) -> Result<SpectralReport> {
    check_widths(widths, "measure_last_layer_norm")?;
    scheme.validate()?;
    if seeds.is_empty() || n_out == 0 {
        return Err(Error::config("need at least one seed and a positive n_out"));
    }
    let records: Vec<SpectralRecord> = widths
        .par_iter()
        .map(|&n_in| {
            let law = scheme.law(2, 2, n_in, n_out);
            let norms: Vec<f64> = seeds
                .iter()
                .map(|&s| {
                    let mut rng = RngState::new(s).derive(&format!("last-layer-{n_in}x{n_out}"));
                    let w = law.sample(&mut rng, n_in, n_out);
                    spectral_norm(&w, POWER_TOL, POWER_MAX_ITERS).value
                })
                .collect();
            let (median_norm, iqr) = median_iqr(&norms);
            SpectralRecord {
                n_in,
                n_out,
                scheme: scheme.name().to_string(),
                seeds: seeds.to_vec(),
                norms,
                median_norm,
                iqr,
            }
        })
        .collect();
    let medians: Vec<f64> = records.iter().map(|r| r.median_norm).collect();
    let slope = fit_or_withhold(widths, &medians)?;
    let models = if medians.iter().all(|&m| m > 0.0) {
        let ratio = |n: usize| (n_out as f64 / n as f64).sqrt();
        vec![
            model_fit("sqrt_ratio", &medians, ratio, widths),
            model_fit("one_plus_sqrt_ratio", &medians, |n| 1.0 + ratio(n), widths),
        ]
    } else {
        Vec::new()
    };
    Ok(SpectralReport {
        records,
        slope,
        models,
    })
}

/// `template` with its last hidden layer resized to `width`.
pub fn with_last_hidden_width(template: &NetworkConfig, width: usize) -> NetworkConfig {
    let mut cfg = template.clone();
    let k = cfg.widths.len() - 2;
    cfg.widths[k] = width;
    cfg
}

fn last_hidden_features(net: &DenseNet, x: &Matrix) -> Result<(Matrix, Matrix)> {
    let mut outs = net.forward(x)?;
    let pred = outs.pop().expect("output layer");
    let feats = outs.pop().expect("last hidden layer");
    Ok((feats, pred))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinRecord {
    pub width: usize,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
    /// Fewer features than samples: the feature matrix cannot have full row rank.
    pub underparameterized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaMinReport {
    pub n_samples: usize,
    pub records: Vec<SigmaMinRecord>,
    pub slope: SlopeEstimate,
}

/// σ_min of the last hidden feature matrix at initialization, per width and seed.
pub fn measure_sigma_min_growth(
    template: &NetworkConfig,
    data: &Dataset,
    widths: &[usize],
    seeds: &[u64],
) -> Result<SigmaMinReport> {
    check_widths(widths, "measure_sigma_min_growth")?;
    template.validate()?;
    if seeds.is_empty() {
        return Err(Error::config("need at least one seed"));
    }
    let cells: Vec<(usize, u64)> = widths
        .iter()
        .flat_map(|&w| seeds.iter().map(move |&s| (w, s)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(w, s)| {
            let net = DenseNet::init(with_last_hidden_width(template, w).with_seed(s))?;
            sigma_min(&last_hidden_features(&net, &data.x)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let records: Vec<SigmaMinRecord> = widths
        .iter()
        .zip(values.chunks(seeds.len()))
        .map(|(&width, vals)| {
            let (median, iqr) = median_iqr(vals);
            SigmaMinRecord {
                width,
                seeds: seeds.to_vec(),
                values: vals.to_vec(),
                median,
                iqr,
                underparameterized: width < data.len(),
            }
        })
        .collect();
    let medians: Vec<f64> = records.iter().map(|r| r.median).collect();
    Ok(SigmaMinReport {
        n_samples: data.len(),
        slope: fit_or_withhold(widths, &medians)?,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitLossRecord {
    pub n: usize,
    pub seeds: Vec<u64>,
    /// `√(2L₀)/√N` per seed.
    pub ratios: Vec<f64>,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitLossReport {
    pub records: Vec<InitLossRecord>,
    /// Largest over smallest per-N median ratio.
    pub spread: f64,
}

/// `√(2L₀)/√N` at initialization for each dataset size produced by `make_data`.
pub fn measure_init_loss(
    template: &NetworkConfig,
    sizes: &[usize],
    seeds: &[u64],
    make_data: impl Fn(usize) -> Result<Dataset> + Sync,
) -> Result<InitLossReport> {
    template.validate()?;
    if sizes.is_empty() || seeds.is_empty() {
        return Err(Error::config("need at least one dataset size and one seed"));
    }
    let records = sizes
        .par_iter()
        .map(|&n| {
            let data = make_data(n)?;
            let ratios = seeds
                .iter()
                .map(|&s| {
                    let net = DenseNet::init(template.clone().with_seed(s))?;
                    let loss = loss_sum_sq(&net.predict(&data.x)?, &data.y)?;
                    Ok((2.0 * loss).sqrt() / (data.len() as f64).sqrt())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(InitLossRecord {
                n,
                seeds: seeds.to_vec(),
                median: median_iqr(&ratios).0,
                ratios,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = records.iter().map(|r| r.median).fold(f64::INFINITY, f64::min);
    let hi = records.iter().map(|r| r.median).fold(f64::NEG_INFINITY, f64::max);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(InitLossReport { records, spread })
}

/// The four factors of `σ₀² ≥ 16·√N·√n·√(2L₀)·‖W_L⁰‖₂` and the comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub seed: u64,
    pub n: usize,
    pub n_last: usize,
    pub sigma0: f64,
    pub sigma0_sq: f64,
    pub loss0: f64,
    pub wnorm: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Measured on a net with more than one hidden layer.
    pub deep_analogue: bool,
}

pub const BOUND_CONSTANT: f64 = 16.0;

/// Evaluates the bound on a freshly initialized network.
pub fn verify_key_bound(net: &DenseNet, data: &Dataset) -> Result<BoundReport> {
    let (feats, pred) = last_hidden_features(net, &data.x)?;
    let sigma0 = sigma_min(&feats)?;
    let loss0 = loss_sum_sq(&pred, &data.y)?;
    let w_last = net.weights().last().expect("at least one layer");
    let wnorm = spectral_norm(w_last, POWER_TOL, POWER_MAX_ITERS).value;
    let n_last = feats.cols();
    let rhs = BOUND_CONSTANT
        * (data.len() as f64).sqrt()
        * (n_last as f64).sqrt()
        * (2.0 * loss0).sqrt()
        * wnorm;
    let sigma0_sq = sigma0 * sigma0;
    Ok(BoundReport {
        seed: net.config().seed,
        n: data.len(),
        n_last,
        sigma0,
        sigma0_sq,
        loss0,
        wnorm,
        rhs,
        holds: sigma0_sq >= rhs,
        deep_analogue: net.num_layers() > 2,
    })
}

/// One [`BoundReport`] per seed with the last hidden width set to `width`.
pub fn bound_reports(
    template: &NetworkConfig,
    data: &Dataset,
    width: usize,
    seeds: &[u64],
) -> Result<Vec<BoundReport>> {
    let cfg = with_last_hidden_width(template, width);
    cfg.validate()?;
    seeds
        .par_iter()
        .map(|&s| verify_key_bound(&DenseNet::init(cfg.clone().with_seed(s))?, data))
        .collect()
}

/// Fraction of seeds for which the bound holds at width `width_rule(N)`.
pub fn bound_success_rate(
    template: &NetworkConfig,
    data: &Dataset,
    width_rule: impl Fn(usize) -> usize,
    seeds: &[u64],
) -> Result<f64> {
    if seeds.len() < 10 {
        return Err(Error::config("bound_success_rate needs at least 10 seeds"));
    }
    let reports = bound_reports(template, data, width_rule(data.len()).max(1), seeds)?;
    Ok(reports.iter().filter(|r| r.holds).count() as f64 / reports.len() as f64)
}
