//! Full-batch training loops with PSNR-targeted stopping.

mod step;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use step::{adam_step, gd_step, AdamHyper, AdamState};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::DenseNet;

pub const PSNR_CAP_DB: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Gd { lr: f64 },
    Adam(AdamHyper),
}

impl Optimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Gd { .. } => "gd",
            Optimizer::Adam(_) => "adam",
        }
    }

    pub fn lr(&self) -> f64 {
        match self {
            Optimizer::Gd { lr } => *lr,
            Optimizer::Adam(h) => h.lr,
        }
    }

    pub fn with_lr(self, lr: f64) -> Self {
        match self {
            Optimizer::Gd { .. } => Optimizer::Gd { lr },
            Optimizer::Adam(h) => Optimizer::Adam(AdamHyper { lr, ..h }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub max_steps: usize,
    #[serde(default)]
    pub target_psnr_db: Option<f64>,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_log_every() -> usize {
    100
}

impl TrainConfig {
    pub fn adam(lr: f64, max_steps: usize) -> Self {
        Self {
            optimizer: Optimizer::Adam(AdamHyper { lr, ..AdamHyper::default() }),
            max_steps,
            target_psnr_db: None,
            log_every: default_log_every(),
            seed: 0,
        }
    }

    pub fn gd(lr: f64, max_steps: usize) -> Self {
        Self {
            optimizer: Optimizer::Gd { lr },
            ..Self::adam(lr, max_steps)
        }
    }

    pub fn with_target(mut self, db: f64) -> Self {
        self.target_psnr_db = Some(db);
        self
    }

    pub fn with_log_every(mut self, every: usize) -> Self {
        self.log_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.optimizer.lr();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {lr}")));
        }
        if let Optimizer::Adam(h) = self.optimizer {
            let beta_ok = |b: f64| (0.0..1.0).contains(&b);
            if !beta_ok(h.beta1) || !beta_ok(h.beta2) || !(h.eps > 0.0) {
                return Err(Error::config(format!("invalid adam hyperparameters {h:?}")));
            }
        }
        if self.max_steps == 0 || self.log_every == 0 {
            return Err(Error::config("max_steps and log_every must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceInfo {
    pub step: usize,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub optimizer: String,
    pub steps_run: usize,
    pub loss_trace: Vec<(usize, f64)>,
    pub psnr_trace: Vec<(usize, f64)>,
    pub reached_target: bool,
    pub final_loss: f64,
    pub final_psnr_db: f64,
    pub diverged: Option<DivergenceInfo>,
    /// Not serialized, so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrainReport {
    /// `Err(Divergence)` if the run stopped on non-finite values.
    pub fn check(&self) -> Result<()> {
        match &self.diverged {
            Some(d) => Err(Error::Divergence {
                step: d.step,
                location: d.location.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn best_psnr_db(&self) -> f64 {
        self.psnr_trace
            .iter()
            .map(|&(_, p)| p)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Loss at the current prediction together with its output-space gradient.
#[derive(Clone, Debug)]
pub struct Assessment {
    pub loss: f64,
    pub psnr_db: f64,
    pub grad: Matrix,
}

/// A training target: fixed network inputs and a loss on the network output.
pub trait Objective {
    fn inputs(&self) -> &Matrix;
    fn assess(&self, pred: &Matrix) -> Result<Assessment>;
}

/// `10·log₁₀(peak²/MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

pub fn psnr(pred: &Matrix, target: &Matrix, peak: f64) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape {
            op: "psnr",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    if !(peak > 0.0) {
        return Err(Error::config("psnr peak must be positive"));
    }
    let n = pred.data().len() as f64;
    let sse: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(psnr_from_mse(sse / n, peak))
}

/// Runs full-batch training until the target PSNR or the step budget is hit.
pub fn train_objective(
    net: &mut DenseNet,
    objective: &impl Objective,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = TrainReport {
        optimizer: cfg.optimizer.name().to_string(),
        steps_run: 0,
        loss_trace: Vec::new(),
        psnr_trace: Vec::new(),
        reached_target: false,
        final_loss: f64::NAN,
        final_psnr_db: f64::NAN,
        diverged: None,
        wall_time_s: 0.0,
    };
    let mut adam = match cfg.optimizer {
        Optimizer::Adam(_) => Some(AdamState::new(net)),
        Optimizer::Gd { .. } => None,
    };
    let target = cfg.target_psnr_db.unwrap_or(f64::INFINITY);

    for step in 0..=cfg.max_steps {
        let trace = net.trace(objective.inputs())?;
        let a = objective.assess(trace.prediction())?;
        if !a.loss.is_finite() {
            report.diverged = Some(DivergenceInfo {
                step,
                location: "loss".to_string(),
            });
            break;
        }
        report.steps_run = step;
        report.final_loss = a.loss;
        report.final_psnr_db = a.psnr_db;
        let reached = a.psnr_db >= target;
        let last = reached || step == cfg.max_steps;
        if step % cfg.log_every == 0 || last {
            report.loss_trace.push((step, a.loss));
            report.psnr_trace.push((step, a.psnr_db));
        }
        if last {
            report.reached_target = reached;
            break;
        }
        let grads = net.backward_from(&trace, a.grad)?;
        let stepped = match (&cfg.optimizer, adam.as_mut()) {
            (Optimizer::Gd { lr }, _) => gd_step(net, &grads, *lr, step),
            (Optimizer::Adam(h), Some(state)) => adam_step(net, &grads, state, h, step),
            (Optimizer::Adam(_), None) => unreachable!("adam state is created with the optimizer"),
        };
        if let Err(Error::Divergence { step, location }) = stepped {
            report.diverged = Some(DivergenceInfo { step, location });
            break;
        }
        stepped?;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
