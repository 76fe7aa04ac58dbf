use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Activation, InitScheme};
use crate::error::{Error, Result};
use crate::linalg::{sample_gaussian, Matrix, RngState};

/// Frozen random Fourier feature lifting applied before the first layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeConfig {
    pub embed_dim: usize,
    pub sigma_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// `[n₀, n₁, …, n_L]`; `n₀` is the raw input dimension.
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub init: InitScheme,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub pe: Option<PeConfig>,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(widths: Vec<usize>, activation: Activation, init: InitScheme) -> Self {
        Self {
            widths,
            activation,
            init,
            bias: 0.0,
            pe: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_pe(mut self, pe: PeConfig) -> Self {
        self.pe = Some(pe);
        self
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len().saturating_sub(1)
    }

    /// Width of the input actually fed to layer 1.
    pub fn effective_input_dim(&self) -> usize {
        self.pe.map_or(self.widths[0], |pe| pe.embed_dim)
    }

    pub fn fan_in(&self, layer: usize) -> usize {
        if layer == 1 {
            self.effective_input_dim()
        } else {
            self.widths[layer - 1]
        }
    }

    /// Trainable parameters of a network built from this config.
    pub fn param_count(&self) -> usize {
        (1..=self.num_layers())
            .map(|l| (self.fan_in(l) + 1) * self.widths[l])
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::config(format!(
                "need at least one hidden layer, got widths {:?}",
                self.widths
            )));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(Error::config(format!("zero width in {:?}", self.widths)));
        }
        if !self.bias.is_finite() {
            return Err(Error::config("bias must be finite"));
        }
        if let Some(pe) = self.pe {
            if pe.embed_dim == 0 || pe.embed_dim % 2 != 0 {
                return Err(Error::config(format!(
                    "embed_dim must be even and positive, got {}",
                    pe.embed_dim
                )));
            }
            if !(pe.sigma_b > 0.0 && pe.sigma_b.is_finite()) {
                return Err(Error::config("sigma_b must be positive"));
            }
        }
        self.activation.validate()?;
        self.init.validate()
    }
}

/// Fully connected coordinate network `F_k = φ(F_{k-1} W_k + b_k)`, affine output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    config: NetworkConfig,
    pe_matrix: Option<Matrix>,
}

/// Per-layer parameter gradients, shaped like the owning network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub dweights: Vec<Matrix>,
    pub dbiases: Vec<Vec<f64>>,
}

/// Cached forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `F_0 … F_L`; `F_0` is the (embedded) input.
    pub outputs: Vec<Matrix>,
    /// `φ'(Z_k)` for hidden layers `k = 1 … L-1`.
    derivs: Vec<Matrix>,
}

impl Trace {
    pub fn prediction(&self) -> &Matrix {
        self.outputs.last().expect("trace holds at least the input")
    }
}

/// `[cos(2π xB), sin(2π xB)]` for one input row.
pub fn rff_embed(x_row: &[f64], b: &Matrix) -> Result<Vec<f64>> {
    if x_row.len() != b.rows() {
        return Err(Error::Shape {
            op: "rff_embed",
            left: (1, x_row.len()),
            right: b.shape(),
        });
    }
    let half = b.cols();
    let mut out = vec![0.0; 2 * half];
    for j in 0..half {
        let proj: f64 = x_row.iter().enumerate().map(|(i, &x)| x * b[(i, j)]).sum();
        let (s, c) = (TAU * proj).sin_cos();
        out[j] = c;
        out[half + j] = s;
    }
    Ok(out)
}

/// Row-wise [`rff_embed`] over a batch.
pub fn rff_embed_batch(x: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(x.rows(), 2 * b.cols());
    for r in 0..x.rows() {
        let e = rff_embed(x.row(r), b)?;
        out.row_mut(r).copy_from_slice(&e);
    }
    Ok(out)
}

/// `½ Σ (pred − y)²`.
pub fn loss_sum_sq(pred: &Matrix, y: &Matrix) -> Result<f64> {
    if pred.shape() != y.shape() {
        return Err(Error::Shape {
            op: "loss_sum_sq",
            left: pred.shape(),
            right: y.shape(),
        });
    }
    Ok(0.5
        * pred
            .data()
            .iter()
            .zip(y.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>())
}

impl DenseNet {
    /// Samples a fresh network; layer `l` draws from the child stream `layer-{l}`
    /// of `config.seed`, the embedding from `pe`.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        let rng = RngState::new(config.seed);
        Self::init_with(config, &rng)
    }

    pub fn init_with(config: NetworkConfig, rng: &RngState) -> Result<Self> {
        config.validate()?;
        let num_layers = config.num_layers();
        let pe_matrix = config.pe.map(|pe| {
            sample_gaussian(&mut rng.derive("pe"), config.widths[0], pe.embed_dim / 2, pe.sigma_b)
        });
        let mut weights = Vec::with_capacity(num_layers);
        let mut biases = Vec::with_capacity(num_layers);
        for layer in 1..=num_layers {
            let fan_in = config.fan_in(layer);
            let fan_out = config.widths[layer];
            let law = config.init.law(layer, num_layers, fan_in, fan_out);
            let mut stream = rng.derive(&format!("layer-{layer}"));
            weights.push(law.sample(&mut stream, fan_in, fan_out));
            biases.push(vec![config.bias; fan_out]);
        }
        Ok(Self {
            weights,
            biases,
            config,
            pe_matrix,
        })
    }

    /// Reassembles a network from stored parameters, checking every shape.
    pub fn from_parts(
        config: NetworkConfig,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        pe_matrix: Option<Matrix>,
    ) -> Result<Self> {
        config.validate()?;
        let num_layers = config.num_layers();
        if weights.len() != num_layers || biases.len() != num_layers {
            return Err(Error::config(format!(
                "expected {num_layers} layers, got {} weights and {} biases",
                weights.len(),
                biases.len()
            )));
        }
        for layer in 1..=num_layers {
            let want = (config.fan_in(layer), config.widths[layer]);
            let w = &weights[layer - 1];
            if w.shape() != want {
                return Err(Error::Shape {
                    op: "DenseNet::from_parts",
                    left: want,
                    right: w.shape(),
                });
            }
            if biases[layer - 1].len() != want.1 {
                return Err(Error::Shape {
                    op: "DenseNet::from_parts",
                    left: (1, want.1),
                    right: (1, biases[layer - 1].len()),
                });
            }
        }
        match (&config.pe, &pe_matrix) {
            (None, None) => {}
            (Some(pe), Some(b)) if b.shape() == (config.widths[0], pe.embed_dim / 2) => {}
            _ => return Err(Error::config("embedding matrix does not match the pe config")),
        }
        Ok(Self {
            weights,
            biases,
            config,
            pe_matrix,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn pe_matrix(&self) -> Option<&Matrix> {
        self.pe_matrix.as_ref()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Trainable parameter count `Σ (n_{l-1} n_l + n_l)`; the frozen embedding is excluded.
    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.rows() * w.cols() + b.len())
            .sum()
    }

    /// Mutable views of every trainable parameter block, layer by layer (weights, then bias).
    pub fn param_blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
    }

    pub fn param_blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(self.biases.iter())
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
    }

    fn embed(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.config.widths[0] {
            return Err(Error::Shape {
                op: "forward",
                left: x.shape(),
                right: (x.rows(), self.config.widths[0]),
            });
        }
        match &self.pe_matrix {
            Some(b) => rff_embed_batch(x, b),
            None => Ok(x.clone()),
        }
    }

    fn affine(&self, layer: usize, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul(&self.weights[layer])?;
        let bias = &self.biases[layer];
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    /// Layer outputs `[F_0, …, F_L]`.
    pub fn forward(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        let act = self.config.activation;
        let mut outputs = vec![self.embed(x)?];
        let last = self.num_layers() - 1;
        for layer in 0..=last {
            let mut z = self.affine(layer, outputs.last().unwrap())?;
            if layer < last {
                z.data_mut().iter_mut().for_each(|v| *v = act.activate(*v));
            }
            outputs.push(z);
        }
        Ok(outputs)
    }

    /// Network output `F_L` only.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.pop().expect("at least one layer"))
    }

    /// Forward pass that also caches activation derivatives.
    pub fn trace(&self, x: &Matrix) -> Result<Trace> {
        let act = self.config.activation;
        let mut outputs = vec![self.embed(x)?];
        let mut derivs = Vec::with_capacity(self.num_layers() - 1);
        let last = self.num_layers() - 1;
        for layer in 0..=last {
            let mut z = self.affine(layer, outputs.last().unwrap())?;
            if layer < last {
                let mut d = Matrix::zeros(z.rows(), z.cols());
                for (v, dv) in z.data_mut().iter_mut().zip(d.data_mut()) {
                    let (f, fp) = act.value_and_prime(*v);
                    *v = f;
                    *dv = fp;
                }
                derivs.push(d);
            }
            outputs.push(z);
        }
        Ok(Trace { outputs, derivs })
    }

    /// Backpropagates `∂loss/∂F_L` through a cached trace.
    pub fn backward_from(&self, trace: &Trace, d_out: Matrix) -> Result<Gradients> {
        let pred = trace.prediction();
        if d_out.shape() != pred.shape() {
            return Err(Error::Shape {
                op: "backward",
                left: pred.shape(),
                right: d_out.shape(),
            });
        }
        let num_layers = self.num_layers();
        let mut dweights = vec![Matrix::zeros(0, 0); num_layers];
        let mut dbiases = vec![Vec::new(); num_layers];
        let mut delta = d_out;
        for layer in (0..num_layers).rev() {
            dweights[layer] = trace.outputs[layer].matmul_tn(&delta)?;
            dbiases[layer] = column_sums(&delta);
            if layer > 0 {
                let mut up = delta.matmul_nt(&self.weights[layer])?;
                for (u, d) in up.data_mut().iter_mut().zip(trace.derivs[layer - 1].data()) {
                    *u *= d;
                }
                delta = up;
            }
        }
        Ok(Gradients { dweights, dbiases })
    }

    /// Sum-of-squares loss and its exact gradient.
    pub fn backward(&self, x: &Matrix, y: &Matrix) -> Result<(f64, Gradients)> {
        let trace = self.trace(x)?;
        let pred = trace.prediction();
        let loss = loss_sum_sq(pred, y)?;
        let residual = pred.sub(y)?;
        Ok((loss, self.backward_from(&trace, residual)?))
    }

    /// Index of the first layer (1-based) holding a non-finite parameter.
    pub fn first_nonfinite_layer(&self) -> Option<usize> {
        self.weights
            .iter()
            .zip(&self.biases)
            .position(|(w, b)| !w.is_finite() || b.iter().any(|v| !v.is_finite()))
            .map(|i| i + 1)
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (s, v) in sums.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
    sums
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            dweights: net
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            dbiases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Number of scalar gradient entries.
    pub fn len(&self) -> usize {
        self.blocks().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same block order as [`DenseNet::param_blocks_mut`].
    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.dweights
            .iter()
            .zip(self.dbiases.iter())
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.dweights
            .iter_mut()
            .zip(self.dbiases.iter_mut())
            .flat_map(|(w, b)| [w.data_mut(), b.as_mut_slice()])
    }

    /// 1-based layer of the first non-finite entry.
    pub fn first_nonfinite_layer(&self) -> Option<usize> {
        self.dweights
            .iter()
            .zip(&self.dbiases)
            .position(|(w, b)| !w.is_finite() || b.iter().any(|v| !v.is_finite()))
            .map(|i| i + 1)
    }

    pub fn is_congruent(&self, net: &DenseNet) -> bool {
        self.dweights.len() == net.weights.len()
            && self
                .dweights
                .iter()
                .zip(&net.weights)
                .all(|(g, w)| g.shape() == w.shape())
            && self
                .dbiases
                .iter()
                .zip(&net.biases)
                .all(|(g, b)| g.len() == b.len())
    }
}
