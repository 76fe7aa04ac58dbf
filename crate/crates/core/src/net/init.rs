//! Weight initialization schemes.
//!
//! Layers are numbered `1..=L`; `fan_in = n_{l-1}`, `fan_out = n_l`. The two
//! shrunken-last-layer schemes keep the standard per-layer law everywhere
//! except the output layer:
//!
//! | scheme | hidden layers | output layer |
//! |---|---|---|
//! | `Init1` | `N(0, 1/fan_in)` | `N(0, 2/fan_in^{3/2})` |
//! | `Init2` | `U(±1/√fan_in)` | `U(±1/fan_in^{3/4})` |
//! | `CustomLastExponent { p, gain }` | `N(0, 1/fan_in)` | `N(0, gain/fan_in^p)` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sample_gaussian, sample_uniform, Matrix, RngState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitScheme {
    LecunNormal,
    XavierNormal,
    KaimingNormal,
    LecunUniform,
    XavierUniform,
    KaimingUniform,
    Init1,
    Init2,
    CustomLastExponent { p: f64, gain: f64 },
}

/// Distribution of one weight entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightLaw {
    Normal { std: f64 },
    Uniform { bound: f64 },
}

impl WeightLaw {
    pub fn variance(&self) -> f64 {
        match *self {
            WeightLaw::Normal { std } => std * std,
            WeightLaw::Uniform { bound } => bound * bound / 3.0,
        }
    }

    pub fn sample(&self, rng: &mut RngState, rows: usize, cols: usize) -> Matrix {
        match *self {
            WeightLaw::Normal { std } => sample_gaussian(rng, rows, cols, std),
            WeightLaw::Uniform { bound } => sample_uniform(rng, rows, cols, bound),
        }
    }
}

impl InitScheme {
    pub const ALL_STANDARD: [InitScheme; 8] = [
        InitScheme::LecunNormal,
        InitScheme::XavierNormal,
        InitScheme::KaimingNormal,
        InitScheme::LecunUniform,
        InitScheme::XavierUniform,
        InitScheme::KaimingUniform,
        InitScheme::Init1,
        InitScheme::Init2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::LecunNormal => "lecun_normal",
            InitScheme::XavierNormal => "xavier_normal",
            InitScheme::KaimingNormal => "kaiming_normal",
            InitScheme::LecunUniform => "lecun_uniform",
            InitScheme::XavierUniform => "xavier_uniform",
            InitScheme::KaimingUniform => "kaiming_uniform",
            InitScheme::Init1 => "init1",
            InitScheme::Init2 => "init2",
            InitScheme::CustomLastExponent { .. } => "custom_last_exponent",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitScheme::CustomLastExponent { p, gain } = *self {
            if !(p >= 1.0 && p.is_finite()) || !(gain >= 0.0 && gain.is_finite()) {
                return Err(Error::config(format!(
                    "custom_last_exponent needs p >= 1 and gain >= 0, got p={p}, gain={gain}"
                )));
            }
        }
        Ok(())
    }

    /// Law for layer `layer` (1-based) of a network with `num_layers` weight layers.
    pub fn law(&self, layer: usize, num_layers: usize, fan_in: usize, fan_out: usize) -> WeightLaw {
        let fi = fan_in as f64;
        let fo = fan_out as f64;
        let last = layer == num_layers;
        let lecun = WeightLaw::Normal { std: (1.0 / fi).sqrt() };
        match *self {
            InitScheme::LecunNormal => lecun,
            InitScheme::XavierNormal => WeightLaw::Normal {
                std: (2.0 / (fi + fo)).sqrt(),
            },
            InitScheme::KaimingNormal => WeightLaw::Normal { std: (2.0 / fi).sqrt() },
            InitScheme::LecunUniform => WeightLaw::Uniform {
                bound: (3.0 / fi).sqrt(),
            },
            InitScheme::XavierUniform => WeightLaw::Uniform {
                bound: (6.0 / (fi + fo)).sqrt(),
            },
            InitScheme::KaimingUniform => WeightLaw::Uniform {
                bound: (6.0 / fi).sqrt(),
            },
            InitScheme::Init1 => {
                if last {
                    WeightLaw::Normal {
                        std: (2.0 / fi.powf(1.5)).sqrt(),
                    }
                } else {
                    lecun
                }
            }
            InitScheme::Init2 => {
                if last {
                    WeightLaw::Uniform {
                        bound: 1.0 / fi.powf(0.75),
                    }
                } else {
                    WeightLaw::Uniform {
                        bound: 1.0 / fi.sqrt(),
                    }
                }
            }
            InitScheme::CustomLastExponent { p, gain } => {
                if last {
                    WeightLaw::Normal {
                        std: (gain / fi.powf(p)).sqrt(),
                    }
                } else {
                    lecun
                }
            }
        }
    }
}
