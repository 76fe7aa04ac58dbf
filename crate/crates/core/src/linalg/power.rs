use super::matrix::dot;
use super::{Matrix, RngState};

/// Result of a power-iteration run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const START_SEED: u64 = 0x5eed_cafe;

/// Largest singular value by power iteration on the smaller Gram matrix.
///
/// Stops once the eigen-residual `‖Gx − μx‖` drops below `tol · μ`. A zero
/// matrix returns `0` and counts as converged.
pub fn spectral_norm(a: &Matrix, tol: f64, max_iters: usize) -> SpectralNorm {
    let (m, n) = a.shape();
    // Gram side: AᵀA (n×n) when the matrix is tall, AAᵀ otherwise.
    let tall = m >= n;
    let k = if tall { n } else { m };
    if k == 0 {
        return SpectralNorm {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }

    let mut rng = RngState::new(START_SEED);
    let mut x: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
    normalize(&mut x);

    let mut mid = vec![0.0; if tall { m } else { n }];
    let mut z = vec![0.0; k];
    let mut mu = 0.0;
    for it in 1..=max_iters {
        if tall {
            mul(a, &x, &mut mid);
            mul_t(a, &mid, &mut z);
        } else {
            mul_t(a, &x, &mut mid);
            mul(a, &mid, &mut z);
        }
        mu = dot(&x, &z);
        let znorm = dot(&z, &z).sqrt();
        if znorm == 0.0 {
            return SpectralNorm {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let resid = z
            .iter()
            .zip(&x)
            .map(|(zi, xi)| (zi - mu * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi = zi / znorm);
        if resid <= tol * mu {
            return SpectralNorm {
                value: mu.max(0.0).sqrt(),
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralNorm {
        value: mu.max(0.0).sqrt(),
        iterations: max_iters,
        converged: false,
    }
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// out = A · x
fn mul(a: &Matrix, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(a.row(r), x);
    }
}

/// out = Aᵀ · y
fn mul_t(a: &Matrix, y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, &yr) in y.iter().enumerate() {
        if yr != 0.0 {
            super::matrix::axpy(yr, a.row(r), out);
        }
    }
}
