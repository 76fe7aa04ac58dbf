//! Minimal-width search and parameter-growth exponents.
//!
//! A cell `(N, width)` succeeds when the median over `seeds_per_trial` training
//! runs reaches the target PSNR within the step budget. Only the last hidden
//! layer is searched; all other widths come from the template.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::with_last_hidden_width;
use crate::error::{Error, Result};
use crate::linalg::{log_log_fit, LinearFit, RngState};
use crate::net::{DenseNet, NetworkConfig};
use crate::optim::{train_objective, TrainConfig};
use crate::tasks::{make_curve_dataset, make_image_dataset, synth_image, Dataset, SynthKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepTask {
    Curve {
        #[serde(default = "default_true")]
        normalized: bool,
    },
    Image {
        image: SynthKind,
        size: usize,
        channels: usize,
        #[serde(default)]
        image_seed: u64,
    },
}

fn default_true() -> bool {
    true
}

fn default_seeds_per_trial() -> usize {
    3
}

fn default_lr_backoff() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub label: String,
    pub task: SweepTask,
    pub sizes: Vec<usize>,
    /// The second-to-last entry of `template.widths` is replaced by the searched width.
    pub template: NetworkConfig,
    /// Optimizer, step budget (`max_steps`) and target PSNR.
    pub train: TrainConfig,
    #[serde(default = "default_seeds_per_trial")]
    pub seeds_per_trial: usize,
    pub w_min: usize,
    pub w_max: usize,
    /// Times the learning rate is halved after a divergence before the run counts as failed.
    #[serde(default = "default_lr_backoff")]
    pub lr_backoff: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        self.train.validate()?;
        if self.train.target_psnr_db.is_none() {
            return Err(Error::config("sweeps need a target PSNR"));
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) || self.sizes[0] == 0 {
            return Err(Error::config("sweep sizes must be positive and strictly increasing"));
        }
        if self.seeds_per_trial == 0 || self.seeds_per_trial % 2 == 0 {
            return Err(Error::config("seeds_per_trial must be odd"));
        }
        if self.w_min == 0 || self.w_min > self.w_max {
            return Err(Error::config("need 1 <= w_min <= w_max"));
        }
        Ok(())
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.seeds_per_trial as u64)
            .map(|i| self.master_seed.wrapping_add(i))
            .collect()
    }

    /// The dataset for size `n`; independent of width and trial seed.
    pub fn dataset(&self, n: usize) -> Result<Dataset> {
        match &self.task {
            SweepTask::Curve { normalized } => make_curve_dataset(n, *normalized),
            SweepTask::Image {
                image,
                size,
                channels,
                image_seed,
            } => {
                let img = synth_image(*image, *size, *channels, &mut RngState::new(*image_seed))?;
                let mut rng = RngState::new(self.master_seed).derive(&format!("pixels-{n}"));
                make_image_dataset(&img, n, &mut rng)
            }
        }
    }

    pub fn config_for(&self, width: usize) -> NetworkConfig {
        with_last_hidden_width(&self.template, width)
    }
}

/// Result of one seeded training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub reached: bool,
    pub final_psnr_db: f64,
    pub steps: usize,
    pub lr_halvings: usize,
}

/// Trains one `(N, width, seed)` trial, halving the learning rate after divergence.
pub fn run_trial(spec: &SweepSpec, data: &Dataset, width: usize, seed: u64) -> Result<TrialOutcome> {
    let cfg = spec.config_for(width).with_seed(seed);
    let mut train = spec.train.clone();
    train.seed = seed;
    for halvings in 0..=spec.lr_backoff {
        let mut net = DenseNet::init(cfg.clone())?;
        let report = train_objective(&mut net, data, &train)?;
        if report.diverged.is_none() {
            return Ok(TrialOutcome {
                reached: report.reached_target,
                final_psnr_db: report.final_psnr_db,
                steps: report.steps_run,
                lr_halvings: halvings,
            });
        }
        train.optimizer = train.optimizer.with_lr(train.optimizer.lr() / 2.0);
    }
    Ok(TrialOutcome {
        reached: false,
        final_psnr_db: f64::NAN,
        steps: 0,
        lr_halvings: spec.lr_backoff,
    })
}

pub fn trial_succeeds(spec: &SweepSpec, n: usize, width: usize, seed: u64) -> Result<bool> {
    Ok(run_trial(spec, &spec.dataset(n)?, width, seed)?.reached)
}

/// Identifies a trial within a journal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub label: String,
    pub n: usize,
    pub width: usize,
    pub seed: u64,
}

/// Persistent memo of finished trials.
pub trait TrialStore: Sync {
    fn get(&self, key: &TrialKey) -> Option<bool>;
    fn put(&self, key: &TrialKey, success: bool) -> Result<()>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    cells: Mutex<HashMap<TrialKey, bool>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cells.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TrialStore for MemoryStore {
    fn get(&self, key: &TrialKey) -> Option<bool> {
        self.cells.lock().expect("store lock").get(key).copied()
    }

    fn put(&self, key: &TrialKey, success: bool) -> Result<()> {
        self.cells.lock().expect("store lock").insert(key.clone(), success);
        Ok(())
    }
}

/// Outcome of [`min_width_search`] for one dataset size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub minimal_width: Option<usize>,
    pub saturated: bool,
    pub non_monotone: bool,
    /// Every cell evaluated, in evaluation order.
    pub tested: Vec<(usize, bool)>,
}

/// Smallest width in `[w_min, w_max]` whose cell succeeds.
///
/// Probes `w_min·2^k` upward, bisects the last failing/succeeding bracket, then
/// checks that half the answer fails. If it does not, the probe grid is scanned
/// linearly instead and the result is flagged non-monotone.
pub fn min_width_search(
    w_min: usize,
    w_max: usize,
    mut cell: impl FnMut(usize) -> Result<bool>,
) -> Result<SearchOutcome> {
    let mut tested: Vec<(usize, bool)> = Vec::new();
    let mut eval = |w: usize, tested: &mut Vec<(usize, bool)>| -> Result<bool> {
        if let Some(&(_, ok)) = tested.iter().find(|(tw, _)| *tw == w) {
            return Ok(ok);
        }
        let ok = cell(w)?;
        tested.push((w, ok));
        Ok(ok)
    };

    let mut grid = vec![w_min];
    while *grid.last().unwrap() < w_max {
        let next = grid.last().unwrap().saturating_mul(2).min(w_max);
        grid.push(next);
    }

    let mut lo = None;
    let mut hi = None;
    for &w in &grid {
        if eval(w, &mut tested)? {
            hi = Some(w);
            break;
        }
        lo = Some(w);
    }
    let Some(mut hi) = hi else {
        return Ok(SearchOutcome {
            minimal_width: None,
            saturated: true,
            non_monotone: false,
            tested,
        });
    };
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if eval(mid, &mut tested)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let half = hi / 2;
    if half >= w_min && eval(half, &mut tested)? {
        for &w in &grid {
            if eval(w, &mut tested)? {
                return Ok(SearchOutcome {
                    minimal_width: Some(w),
                    saturated: false,
                    non_monotone: true,
                    tested,
                });
            }
        }
        unreachable!("the probe grid contains a succeeding width");
    }
    Ok(SearchOutcome {
        minimal_width: Some(hi),
        saturated: false,
        non_monotone: false,
        tested,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub minimal_width: Option<usize>,
    pub minimal_params: Option<usize>,
    pub saturated: bool,
    pub non_monotone: bool,
    pub trials: Vec<(usize, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub label: String,
    pub rows: Vec<SweepRow>,
    /// Slope of log params against log N over unsaturated rows; absent with fewer than 3.
    pub exponent: Option<LinearFit>,
}

/// Counts trainings actually run, as opposed to journal hits.
#[derive(Debug, Default)]
pub struct TrialCounter(AtomicUsize);

impl TrialCounter {
    pub fn get(&self) -> usize {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

/// Median-over-seeds success, stopping as soon as the majority is decided.
fn cell_succeeds(
    seeds: &[u64],
    store: &dyn TrialStore,
    key: impl Fn(u64) -> TrialKey,
    mut trial: impl FnMut(u64) -> Result<bool>,
) -> Result<bool> {
    let need = seeds.len() / 2 + 1;
    let (mut wins, mut losses) = (0, 0);
    for &seed in seeds {
        let k = key(seed);
        let ok = match store.get(&k) {
            Some(ok) => ok,
            None => {
                let ok = trial(seed)?;
                store.put(&k, ok)?;
                ok
            }
        };
        if ok {
            wins += 1;
        } else {
            losses += 1;
        }
        if wins >= need || losses > seeds.len() - need {
            break;
        }
    }
    Ok(wins >= need)
}

/// [`run_sweep`] with an arbitrary per-trial predicate `trial(N, width, seed)`.
pub fn run_sweep_with(
    spec: &SweepSpec,
    store: &dyn TrialStore,
    trial: &(dyn Fn(usize, usize, u64) -> Result<bool> + Sync),
) -> Result<SweepReport> {
    spec.validate()?;
    let seeds = spec.trial_seeds();
    let rows = spec
        .sizes
        .par_iter()
        .map(|&n| {
            let search = min_width_search(spec.w_min, spec.w_max, |width| {
                cell_succeeds(
                    &seeds,
                    store,
                    |seed| TrialKey {
                        label: spec.label.clone(),
                        n,
                        width,
                        seed,
                    },
                    |seed| trial(n, width, seed),
                )
            })?;
            Ok(SweepRow {
                n,
                minimal_params: search.minimal_width.map(|w| spec.config_for(w).param_count()),
                minimal_width: search.minimal_width,
                saturated: search.saturated,
                non_monotone: search.non_monotone,
                trials: search.tested,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.minimal_params.map(|p| (r.n as f64, p as f64)))
        .collect();
    let exponent = if fitted.len() >= 3 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fitted.into_iter().unzip();
        Some(log_log_fit(&xs, &ys)?)
    } else {
        None
    };
    Ok(SweepReport {
        label: spec.label.clone(),
        rows,
        exponent,
    })
}

/// Searches the minimal width at every size with real training runs.
pub fn run_sweep(spec: &SweepSpec, store: &dyn TrialStore, counter: &TrialCounter) -> Result<SweepReport> {
    spec.validate()?;
    let datasets: HashMap<usize, Dataset> = spec
        .sizes
        .iter()
        .map(|&n| Ok((n, spec.dataset(n)?)))
        .collect::<Result<_>>()?;
    run_sweep_with(spec, store, &|n, width, seed| {
        counter.bump();
        Ok(run_trial(spec, &datasets[&n], width, seed)?.reached)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub sizes: Vec<usize>,
    pub labels: Vec<String>,
    /// `params[scheme][size]`; `None` where the search saturated.
    pub params: Vec<Vec<Option<usize>>>,
    /// `wins[i][j]`: sizes where scheme `i` needs strictly fewer parameters than `j`.
    pub wins: Vec<Vec<usize>>,
    /// `ties[i][j]`: sizes where both need the same number.
    pub ties: Vec<Vec<usize>>,
}

impl ComparisonTable {
    pub fn from_reports(reports: &[SweepReport]) -> Result<Self> {
        let sizes: Vec<usize> = reports
            .first()
            .map(|r| r.rows.iter().map(|row| row.n).collect())
            .unwrap_or_default();
        for r in reports {
            if r.rows.iter().map(|row| row.n).ne(sizes.iter().copied()) {
                return Err(Error::config(format!("sweep {} does not share the sizes {sizes:?}", r.label)));
            }
        }
        let params: Vec<Vec<Option<usize>>> = reports
            .iter()
            .map(|r| r.rows.iter().map(|row| row.minimal_params).collect())
            .collect();
        let k = reports.len();
        let mut wins = vec![vec![0; k]; k];
        let mut ties = vec![vec![0; k]; k];
        for i in 0..k {
            for j in 0..k {
                for s in 0..sizes.len() {
                    if let (Some(a), Some(b)) = (params[i][s], params[j][s]) {
                        wins[i][j] += (a < b) as usize;
                        ties[i][j] += (a == b) as usize;
                    }
                }
            }
        }
        Ok(Self {
            sizes,
            labels: reports.iter().map(|r| r.label.clone()).collect(),
            params,
            wins,
            ties,
        })
    }
}

/// Runs every spec and lines the minimal parameter counts up per size.
pub fn compare_schemes(
    specs: &[SweepSpec],
    store: &dyn TrialStore,
    counter: &TrialCounter,
) -> Result<(Vec<SweepReport>, ComparisonTable)> {
    let reports = specs
        .iter()
        .map(|s| run_sweep(s, store, counter))
        .collect::<Result<Vec<_>>>()?;
    let table = ComparisonTable::from_reports(&reports)?;
    Ok((reports, table))
}
