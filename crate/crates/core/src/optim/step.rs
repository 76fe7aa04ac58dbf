use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{DenseNet, Gradients};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// First and second moment estimates, one buffer per parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet) -> Self {
        let zeros: Vec<Vec<f64>> = net.param_blocks().map(|b| vec![0.0; b.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

fn check_grads(net: &DenseNet, grads: &Gradients) -> Result<()> {
    if !grads.is_congruent(net) {
        return Err(Error::config("gradients do not match the network shape"));
    }
    Ok(())
}

fn divergence(step: usize, layer: usize, what: &str) -> Error {
    Error::Divergence {
        step,
        location: format!("{what} of layer {layer}"),
    }
}

/// `p ← p − lr·g` on every trainable parameter. `step` only labels errors.
pub fn gd_step(net: &mut DenseNet, grads: &Gradients, lr: f64, step: usize) -> Result<()> {
    check_grads(net, grads)?;
    if let Some(layer) = grads.first_nonfinite_layer() {
        return Err(divergence(step, layer, "gradient"));
    }
    for (p, g) in net.param_blocks_mut().zip(grads.blocks()) {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi -= lr * gi;
        }
    }
    match net.first_nonfinite_layer() {
        Some(layer) => Err(divergence(step, layer, "weights")),
        None => Ok(()),
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    net: &mut DenseNet,
    grads: &Gradients,
    state: &mut AdamState,
    hyper: &AdamHyper,
    step: usize,
) -> Result<()> {
    check_grads(net, grads)?;
    if let Some(layer) = grads.first_nonfinite_layer() {
        return Err(divergence(step, layer, "gradient"));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for (block, (p, g)) in net.param_blocks_mut().zip(grads.blocks()).enumerate() {
        let m = &mut state.m[block];
        let v = &mut state.v[block];
        for i in 0..p.len() {
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
            p[i] -= hyper.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + hyper.eps);
        }
        if !m.iter().chain(v.iter()).all(|x| x.is_finite()) {
            return Err(divergence(step, block / 2 + 1, "adam moments"));
        }
    }
    match net.first_nonfinite_layer() {
        Some(layer) => Err(divergence(step, layer, "weights")),
        None => Ok(()),
    }
}
