use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, RngState};
use crate::optim::{psnr_from_mse, Assessment, Objective};

/// Interleaved row-major pixels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    /// Values are clamped into `[0, 1]`; NaN becomes 0.
    pub fn new(width: usize, height: usize, channels: usize, mut pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::config(format!(
                "image must be non-empty with 1 or 3 channels, got {width}x{height}x{channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::config(format!(
                "expected {} pixel values, got {}",
                width * height * channels,
                pixels.len()
            )));
        }
        for p in &mut pixels {
            *p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// One row per pixel (row-major pixel order), one column per channel.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.width * self.height, self.channels, self.pixels.clone())
            .expect("pixel buffer matches its shape")
    }

    pub fn from_matrix(width: usize, height: usize, m: &Matrix) -> Result<Self> {
        if m.rows() != width * height {
            return Err(Error::Shape {
                op: "ImageGrid::from_matrix",
                left: (width * height, m.cols()),
                right: m.shape(),
            });
        }
        Self::new(width, height, m.cols(), m.data().to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthKind {
    /// Sum of random plane waves with 1/f amplitudes.
    Bands { components: usize },
    /// Alternating 0/1 squares of side `block`.
    Checker { block: usize },
    /// Sum of random Gaussian bumps.
    Blobs { count: usize },
}

fn min_max_normalize(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.5 };
    }
}

/// Deterministic procedural `size × size` image.
pub fn synth_image(kind: SynthKind, size: usize, channels: usize, rng: &mut RngState) -> Result<ImageGrid> {
    if size < 8 {
        return Err(Error::config(format!("synthetic images need size >= 8, got {size}")));
    }
    let n = size as f64;
    let mut planes: Vec<Vec<f64>> = Vec::with_capacity(channels);
    match kind {
        SynthKind::Bands { components } => {
            if components == 0 || components > 16 {
                return Err(Error::config("bands need between 1 and 16 components"));
            }
            for _ in 0..channels {
                let waves: Vec<[f64; 4]> = (0..components)
                    .map(|_| {
                        let freq = (10f64.ln() * rng.uniform()).exp();
                        let angle = TAU * rng.uniform();
                        let phase = TAU * rng.uniform();
                        [freq * angle.cos(), freq * angle.sin(), phase, 1.0 / freq]
                    })
                    .collect();
                let mut plane = vec![0.0; size * size];
                for r in 0..size {
                    for c in 0..size {
                        let (u, v) = (c as f64 / n, r as f64 / n);
                        plane[r * size + c] = waves
                            .iter()
                            .map(|w| w[3] * (TAU * (w[0] * u + w[1] * v) + w[2]).sin())
                            .sum();
                    }
                }
                min_max_normalize(&mut plane);
                planes.push(plane);
            }
        }
        SynthKind::Checker { block } => {
            if block == 0 {
                return Err(Error::config("checker block must be positive"));
            }
            let plane: Vec<f64> = (0..size * size)
                .map(|i| (((i / size) / block + (i % size) / block) % 2) as f64)
                .collect();
            planes = vec![plane; channels];
        }
        SynthKind::Blobs { count } => {
            if count == 0 {
                return Err(Error::config("blobs need a positive count"));
            }
            for _ in 0..channels {
                let blobs: Vec<[f64; 4]> = (0..count)
                    .map(|_| {
                        let radius = 0.04 + 0.16 * rng.uniform();
                        [rng.uniform(), rng.uniform(), radius, 0.5 + rng.uniform()]
                    })
                    .collect();
                let mut plane = vec![0.0; size * size];
                for r in 0..size {
                    for c in 0..size {
                        let (u, v) = (c as f64 / n, r as f64 / n);
                        plane[r * size + c] = blobs
                            .iter()
                            .map(|b| {
                                let d2 = (u - b[0]).powi(2) + (v - b[1]).powi(2);
                                b[3] * (-d2 / (2.0 * b[2] * b[2])).exp()
                            })
                            .sum();
                    }
                }
                min_max_normalize(&mut plane);
                planes.push(plane);
            }
        }
    }
    let mut pixels = vec![0.0; size * size * channels];
    for (ch, plane) in planes.iter().enumerate() {
        for (i, v) in plane.iter().enumerate() {
            pixels[i * channels + ch] = *v;
        }
    }
    ImageGrid::new(size, size, channels, pixels)
}

/// Pixel-center coordinates in `[-1, 1]²` as `(x, y)` = (column, row), row-major pixel order.
pub fn grid_coordinates(width: usize, height: usize) -> Matrix {
    let axis = |i: usize, n: usize| {
        if n == 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (n - 1) as f64
        }
    };
    Matrix::from_fn(width * height, 2, |p, c| {
        if c == 0 {
            axis(p % width, width)
        } else {
            axis(p / width, height)
        }
    })
}

/// `n` distinct pixels sampled without replacement; inputs are their coordinates.
pub fn make_image_dataset(img: &ImageGrid, n: usize, rng: &mut RngState) -> Result<Dataset> {
    let total = img.width * img.height;
    if n == 0 || n > total {
        return Err(Error::config(format!("cannot sample {n} pixels from an image with {total}")));
    }
    let coords = grid_coordinates(img.width, img.height);
    let idx = if n == total {
        (0..total).collect()
    } else {
        rng.sample_indices(total, n)
    };
    Dataset::new(coords.select_rows(&idx), img.to_matrix().select_rows(&idx), false)
}

fn check_divisible(width: usize, height: usize) -> Result<()> {
    if width % 4 != 0 || height % 4 != 0 || width == 0 || height == 0 {
        return Err(Error::config(format!(
            "4x downsampling needs dimensions divisible by 4, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Block-mean operator `A` on pixel-row matrices (`width·height × C` → `width/4·height/4 × C`).
pub fn downsample4x_rows(m: &Matrix, width: usize, height: usize) -> Result<Matrix> {
    check_divisible(width, height)?;
    if m.rows() != width * height {
        return Err(Error::Shape {
            op: "downsample4x",
            left: (width * height, m.cols()),
            right: m.shape(),
        });
    }
    let (w, h, ch) = (width / 4, height / 4, m.cols());
    let mut out = Matrix::zeros(w * h, ch);
    for r in 0..height {
        for c in 0..width {
            let dst = out.row_mut((r / 4) * w + c / 4);
            for (d, s) in dst.iter_mut().zip(m.row(r * width + c)) {
                *d += s;
            }
        }
    }
    out.data_mut().iter_mut().for_each(|v| *v /= 16.0);
    Ok(out)
}

/// `Aᵀ`: spreads each low-resolution value as `v/16` over its 4×4 block.
pub fn downsample4x_adjoint(low: &Matrix, width: usize, height: usize) -> Result<Matrix> {
    check_divisible(width, height)?;
    let w = width / 4;
    if low.rows() != w * (height / 4) {
        return Err(Error::Shape {
            op: "downsample4x_adjoint",
            left: (w * (height / 4), low.cols()),
            right: low.shape(),
        });
    }
    Ok(Matrix::from_fn(width * height, low.cols(), |p, ch| {
        let (r, c) = (p / width, p % width);
        low[((r / 4) * w + c / 4, ch)] / 16.0
    }))
}

pub fn downsample4x(img: &ImageGrid) -> Result<ImageGrid> {
    let low = downsample4x_rows(&img.to_matrix(), img.width, img.height)?;
    ImageGrid::from_matrix(img.width / 4, img.height / 4, &low)
}

pub fn upsample4x_nearest(img: &ImageGrid) -> ImageGrid {
    let (w, h) = (img.width * 4, img.height * 4);
    let m = Matrix::from_fn(w * h, img.channels, |p, ch| img.get(p / w / 4, (p % w) / 4, ch));
    ImageGrid::from_matrix(w, h, &m).expect("upsampled shape is consistent")
}

/// `½‖A·f(grid) − y_low‖²` with the full high-resolution grid as network input.
#[derive(Clone, Debug)]
pub struct SuperResObjective {
    coords: Matrix,
    low: Matrix,
    width: usize,
    height: usize,
}

impl SuperResObjective {
    pub fn new(low: &ImageGrid) -> Self {
        let (width, height) = (low.width * 4, low.height * 4);
        Self {
            coords: grid_coordinates(width, height),
            low: low.to_matrix(),
            width,
            height,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

impl Objective for SuperResObjective {
    fn inputs(&self) -> &Matrix {
        &self.coords
    }

    fn assess(&self, pred: &Matrix) -> Result<Assessment> {
        let residual = downsample4x_rows(pred, self.width, self.height)?.sub(&self.low)?;
        let sse: f64 = residual.data().iter().map(|r| r * r).sum();
        Ok(Assessment {
            loss: 0.5 * sse,
            psnr_db: psnr_from_mse(sse / residual.data().len() as f64, 1.0),
            grad: downsample4x_adjoint(&residual, self.width, self.height)?,
        })
    }
}
