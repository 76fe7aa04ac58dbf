use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise hidden-layer nonlinearity.
///
/// `Sinc` is the normalized form `sin(ωx)/(ωx)` with value 1 at the origin.
/// `Gaussian` is `exp(-x²/(2w²))` where `w` is the bump width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Activation {
    Sine { omega: f64 },
    Sinc { omega: f64 },
    Gaussian { width: f64 },
    GaborWavelet { omega: f64, s: f64 },
    Relu,
    Identity,
}

impl Activation {
    pub const DEFAULT_SINE: Activation = Activation::Sine { omega: 30.0 };
    pub const DEFAULT_SINC: Activation = Activation::Sinc { omega: 30.0 };
    pub const DEFAULT_GAUSSIAN: Activation = Activation::Gaussian { width: 0.1 };
    pub const DEFAULT_GABOR: Activation = Activation::GaborWavelet { omega: 30.0, s: 1.0 };

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Sine { .. } => "sine",
            Activation::Sinc { .. } => "sinc",
            Activation::Gaussian { .. } => "gaussian",
            Activation::GaborWavelet { .. } => "gabor_wavelet",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            Activation::Sine { omega } | Activation::Sinc { omega } => ok(omega),
            Activation::Gaussian { width } => ok(width),
            Activation::GaborWavelet { omega, s } => ok(omega) && ok(s),
            Activation::Relu | Activation::Identity => true,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{} activation needs positive finite parameters, got {self:?}",
                self.name()
            )))
        }
    }

    #[inline]
    pub fn activate(&self, x: f64) -> f64 {
        match *self {
            Activation::Sine { omega } => (omega * x).sin(),
            Activation::Sinc { .. } => self.value_and_prime(x).0,
            Activation::Gaussian { width } => (-0.5 * x * x * (1.0 / (width * width))).exp(),
            Activation::GaborWavelet { omega, s } => {
                (omega * x).sin_cos().1 * (-0.5 * x * x * (1.0 / (s * s))).exp()
            }
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn activate_prime(&self, x: f64) -> f64 {
        self.value_and_prime(x).1
    }

    /// `(φ(x), φ'(x))`, sharing the transcendental evaluations.
    #[inline]
    pub fn value_and_prime(&self, x: f64) -> (f64, f64) {
        match *self {
            Activation::Sine { omega } => {
                let (s, c) = (omega * x).sin_cos();
                (s, omega * c)
            }
            Activation::Sinc { omega } => {
                let u = omega * x;
                if u.abs() < 1e-2 {
                    let u2 = u * u;
                    let value = 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0));
                    let prime = -u / 3.0 * (1.0 - u2 / 10.0 * (1.0 - u2 / 28.0));
                    (value, omega * prime)
                } else {
                    let (s, c) = u.sin_cos();
                    let value = s / u;
                    (value, omega * (c - value) / u)
                }
            }
            Activation::Gaussian { width } => {
                let inv = 1.0 / (width * width);
                let g = (-0.5 * x * x * inv).exp();
                (g, -x * inv * g)
            }
            Activation::GaborWavelet { omega, s } => {
                let inv = 1.0 / (s * s);
                let env = (-0.5 * x * x * inv).exp();
                let (sn, cs) = (omega * x).sin_cos();
                (cs * env, (-omega * sn - x * inv * cs) * env)
            }
            Activation::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Identity => (x, 1.0),
        }
    }
}
