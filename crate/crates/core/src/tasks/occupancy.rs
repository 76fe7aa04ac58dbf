use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, RngState};

/// Analytic solid in the `[-1, 1]³` box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum OccupancyScene {
    Sphere { center: [f64; 3], radius: f64 },
    /// Ring around the z axis through `center`.
    Torus { center: [f64; 3], major: f64, minor: f64 },
    Union { parts: Vec<OccupancyScene> },
}

/// Standard deviation of the near-surface jitter, in box units.
const SHELL_STD: f64 = 0.05;

impl OccupancyScene {
    pub fn sphere() -> Self {
        OccupancyScene::Sphere {
            center: [0.0; 3],
            radius: 0.6,
        }
    }

    pub fn torus() -> Self {
        OccupancyScene::Torus {
            center: [0.0; 3],
            major: 0.55,
            minor: 0.2,
        }
    }

    pub fn sphere_torus() -> Self {
        OccupancyScene::Union {
            parts: vec![Self::sphere(), Self::torus()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            OccupancyScene::Sphere { radius, .. } => *radius > 0.0,
            OccupancyScene::Torus { major, minor, .. } => *minor > 0.0 && major > minor,
            OccupancyScene::Union { parts } => {
                for p in parts {
                    p.validate()?;
                }
                !parts.is_empty()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid occupancy scene {self:?}")))
        }
    }

    /// Signed distance (negative inside) for the primitives; for unions the minimum.
    pub fn sdf(&self, p: [f64; 3]) -> f64 {
        match self {
            OccupancyScene::Sphere { center, radius } => dist(sub(p, *center)) - radius,
            OccupancyScene::Torus { center, major, minor } => {
                let q = sub(p, *center);
                let ring = (q[0] * q[0] + q[1] * q[1]).sqrt() - major;
                (ring * ring + q[2] * q[2]).sqrt() - minor
            }
            OccupancyScene::Union { parts } => parts
                .iter()
                .map(|s| s.sdf(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn occupancy(&self, p: [f64; 3]) -> f64 {
        if self.sdf(p) <= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn surface_point(&self, rng: &mut RngState) -> [f64; 3] {
        match self {
            OccupancyScene::Sphere { center, radius } => {
                let (a, b) = rng.normal_pair();
                let d = [a, b, rng.normal()];
                let n = dist(d).max(f64::MIN_POSITIVE);
                [0, 1, 2].map(|i| center[i] + radius * d[i] / n)
            }
            OccupancyScene::Torus { center, major, minor } => {
                let (u, v) = (TAU * rng.uniform(), TAU * rng.uniform());
                let r = major + minor * v.cos();
                [
                    center[0] + r * u.cos(),
                    center[1] + r * u.sin(),
                    center[2] + minor * v.sin(),
                ]
            }
            OccupancyScene::Union { parts } => {
                let k = rng.below(parts.len());
                parts[k].surface_point(rng)
            }
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dist(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Half the points uniform in the box, half jittered around the surface; labels in `{0, 1}`.
pub fn make_occupancy_dataset(scene: &OccupancyScene, n: usize, rng: &mut RngState) -> Result<Dataset> {
    scene.validate()?;
    if n == 0 {
        return Err(Error::config("occupancy dataset needs at least one point"));
    }
    let mut x = Matrix::zeros(n, 3);
    let mut y = Matrix::zeros(n, 1);
    for i in 0..n {
        let p = if i % 2 == 0 {
            [0, 1, 2].map(|_| 2.0 * rng.uniform() - 1.0)
        } else {
            let s = scene.surface_point(rng);
            [0, 1, 2].map(|k| (s[k] + SHELL_STD * rng.normal()).clamp(-1.0, 1.0))
        };
        x.row_mut(i).copy_from_slice(&p);
        y[(i, 0)] = scene.occupancy(p);
    }
    Dataset::new(x, y, false)
}
