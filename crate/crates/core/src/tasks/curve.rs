use std::f64::consts::PI;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `sin 2πx + sin 6πx + sin 10πx`.
pub fn curve_fn(x: f64) -> f64 {
    (2.0 * PI * x).sin() + (6.0 * PI * x).sin() + (10.0 * PI * x).sin()
}

/// `n` uniformly spaced samples on `[-1, 1]`, targets min-max rescaled to `[0, 1]`.
///
/// With `normalized`, each input `x` is lifted to `(x, 1)/√(1+x²)` so rows have
/// unit norm while staying distinct; otherwise the input is the bare `x`.
pub fn make_curve_dataset(n: usize, normalized: bool) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::config(format!("curve dataset needs at least 2 points, got {n}")));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| curve_fn(x)).collect();
    let lo = fs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y = Matrix::from_fn(n, 1, |r, _| (fs[r] - lo) / span);
    let x = if normalized {
        Matrix::from_fn(n, 2, |r, c| {
            let norm = (1.0 + xs[r] * xs[r]).sqrt();
            if c == 0 {
                xs[r] / norm
            } else {
                1.0 / norm
            }
        })
    } else {
        Matrix::from_fn(n, 1, |r, _| xs[r])
    };
    Dataset::new(x, y, normalized)
}
