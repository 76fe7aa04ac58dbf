//! Datasets, image I/O, the super-resolution operator, occupancy scenes and quality metrics.

mod curve;
mod image;
mod metrics;
mod occupancy;
mod pnm;

pub use curve::{curve_fn, make_curve_dataset};
pub use image::{
    downsample4x, downsample4x_adjoint, downsample4x_rows, grid_coordinates, make_image_dataset,
    synth_image, upsample4x_nearest, ImageGrid, SuperResObjective, SynthKind,
};
pub use metrics::{iou, ssim};
pub use occupancy::{make_occupancy_dataset, OccupancyScene};
pub use pnm::{decode_pnm, encode_pnm, load_image, save_image, PnmEncoding};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optim::{psnr_from_mse, Assessment, Objective};

/// Regression pairs `X` (N×n₀) → `Y` (N×n_L).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    /// Rows of `x` have unit Euclidean norm.
    pub normalized: bool,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix, normalized: bool) -> Result<Self> {
        if x.rows() != y.rows() || x.rows() == 0 {
            return Err(Error::Shape {
                op: "Dataset::new",
                left: x.shape(),
                right: y.shape(),
            });
        }
        Ok(Self { x, y, normalized })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.cols()
    }

    /// Same samples in a different order.
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(order),
            y: self.y.select_rows(order),
            normalized: self.normalized,
        }
    }
}

impl Objective for Dataset {
    fn inputs(&self) -> &Matrix {
        &self.x
    }

    /// Sum-of-squares loss; PSNR from the per-entry mean with peak 1.
    fn assess(&self, pred: &Matrix) -> Result<Assessment> {
        let grad = pred.sub(&self.y)?;
        let sse: f64 = grad.data().iter().map(|r| r * r).sum();
        Ok(Assessment {
            loss: 0.5 * sse,
            psnr_db: psnr_from_mse(sse / grad.data().len() as f64, 1.0),
            grad,
        })
    }
}
