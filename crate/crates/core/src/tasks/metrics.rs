use super::ImageGrid;
use crate::error::{Error, Result};

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn gaussian_taps() -> [f64; WINDOW] {
    let mid = (WINDOW / 2) as f64;
    let mut taps = [0.0; WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *t = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable valid-mode filtering with the SSIM window.
fn filter_valid(plane: &[f64], width: usize, height: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (width - WINDOW + 1, height - WINDOW + 1);
    let mut horiz = vec![0.0; ow * height];
    for r in 0..height {
        for c in 0..ow {
            horiz[r * ow + c] = (0..WINDOW).map(|k| taps[k] * plane[r * width + c + k]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..WINDOW).map(|k| taps[k] * horiz[(r + k) * ow + c]).sum();
        }
    }
    out
}

/// Mean windowed SSIM (11×11 Gaussian window, σ = 1.5, dynamic range 1), averaged over channels.
pub fn ssim(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    let shape = |g: &ImageGrid| (g.width(), g.height(), g.channels());
    if shape(a) != shape(b) {
        return Err(Error::Shape {
            op: "ssim",
            left: (a.height(), a.width() * a.channels()),
            right: (b.height(), b.width() * b.channels()),
        });
    }
    let (w, h, ch) = shape(a);
    if w < WINDOW || h < WINDOW {
        return Err(Error::config(format!("ssim needs images of at least {WINDOW}x{WINDOW}")));
    }
    let taps = gaussian_taps();
    let mut total = 0.0;
    for c in 0..ch {
        let x: Vec<f64> = (0..w * h).map(|p| a.pixels()[p * ch + c]).collect();
        let y: Vec<f64> = (0..w * h).map(|p| b.pixels()[p * ch + c]).collect();
        let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).collect::<Vec<_>>();
        let mx = filter_valid(&x, w, h, &taps);
        let my = filter_valid(&y, w, h, &taps);
        let sxx = filter_valid(&prod(&x, &x), w, h, &taps);
        let syy = filter_valid(&prod(&y, &y), w, h, &taps);
        let sxy = filter_valid(&prod(&x, &y), w, h, &taps);
        let mut acc = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            acc += ((2.0 * ux * uy + C1) * (2.0 * cov + C2))
                / ((ux * ux + uy * uy + C1) * (vx + vy + C2));
        }
        total += acc / mx.len() as f64;
    }
    Ok(total / ch as f64)
}

/// `|pred ≥ τ ∧ truth| / |pred ≥ τ ∨ truth|`; an empty union scores 1.
pub fn iou(pred: &[f64], truth: &[f64], threshold: f64) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape {
            op: "iou",
            left: (pred.len(), 1),
            right: (truth.len(), 1),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        let (a, b) = (p >= threshold, t >= 0.5);
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}
