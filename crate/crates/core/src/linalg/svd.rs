//! Thin SVD by one-sided (Hestenes) Jacobi.
//!
//! The input is always processed in its tall orientation. Strictly tall
//! inputs are first reduced with a Householder QR so the Jacobi sweeps run on
//! the small triangular factor; the left vectors are then mapped back
//! through `Q`.

use super::matrix::{axpy, dot};
use super::Matrix;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 60;
pub const ROTATION_TOL: f64 = 1e-12;

/// `a = u · diag(s) · vᵀ`, with `s` sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for (x, s) in us.row_mut(r).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul_nt(&self.v).expect("svd factors are congruent")
    }
}

/// Column-major scratch: `n` columns of length `m`.
struct Columns {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Columns {
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    fn pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(i < j);
        let (lo, hi) = self.data.split_at_mut(j * self.m);
        (&mut lo[i * self.m..(i + 1) * self.m], &mut hi[..self.m])
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Columns { m: n, n, data }
    }
}

/// Tall (`m ≥ n`) column-major view of `a` plus whether it was transposed.
fn tall_columns(a: &Matrix) -> (Columns, bool) {
    let (rows, cols) = a.shape();
    if rows >= cols {
        (
            Columns {
                m: rows,
                n: cols,
                data: a.transpose().into_data(),
            },
            false,
        )
    } else {
        // Rows of a row-major `a` are exactly the columns of `aᵀ`.
        (
            Columns {
                m: cols,
                n: rows,
                data: a.data().to_vec(),
            },
            true,
        )
    }
}

struct Householder {
    /// Reflector vectors, `v_k` supported on rows `k..m`, scaled so `H = I - v vᵀ`.
    vs: Vec<Vec<f64>>,
}

/// In-place QR of a tall column set. Returns the `n × n` factor `R` as columns.
fn householder_qr(t: &mut Columns) -> (Columns, Householder) {
    let (m, n) = (t.m, t.n);
    let mut vs = Vec::with_capacity(n);
    for k in 0..n {
        let x = &t.col(k)[k..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        if norm == 0.0 {
            vs.push(vec![0.0; m - k]);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm_sq = dot(&v, &v);
        if vnorm_sq > 0.0 {
            let scale = (2.0 / vnorm_sq).sqrt();
            v.iter_mut().for_each(|e| *e *= scale);
        }
        {
            let ck = t.col_mut(k);
            ck[k] = alpha;
            ck[k + 1..].iter_mut().for_each(|e| *e = 0.0);
        }
        for j in k + 1..n {
            let cj = &mut t.col_mut(j)[k..];
            let proj = dot(&v, cj);
            axpy(-proj, &v, cj);
        }
        vs.push(v);
    }
    let mut r = Columns {
        m: n,
        n,
        data: vec![0.0; n * n],
    };
    for j in 0..n {
        let src = &t.col(j)[..=j];
        r.col_mut(j)[..=j].copy_from_slice(src);
    }
    (r, Householder { vs })
}

impl Householder {
    /// Applies `Q = H_0 H_1 … H_{n-1}` to the columns of `x` (each of length `m`).
    fn apply_q(&self, x: &mut Columns) {
        for j in 0..x.n {
            let col = x.col_mut(j);
            for (k, v) in self.vs.iter().enumerate().rev() {
                let seg = &mut col[k..];
                let proj = dot(v, seg);
                if proj != 0.0 {
                    axpy(-proj, v, seg);
                }
            }
        }
    }
}

/// Orthogonalizes the columns of `g` in place, rotating `v` alongside when given.
fn jacobi(g: &mut Columns, mut v: Option<&mut Columns>) -> Result<()> {
    let n = g.n;
    if n < 2 {
        return Ok(());
    }
    let mut norms: Vec<f64> = (0..n).map(|j| dot(g.col(j), g.col(j))).collect();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (gi, gj) = g.pair_mut(i, j);
                let gamma = dot(gi, gj);
                if gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(gi, gj, c, s);
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
                if let Some(v) = v.as_deref_mut() {
                    let (vi, vj) = v.pair_mut(i, j);
                    rotate(vi, vj, c, s);
                }
            }
        }
        if !rotated {
            return Ok(());
        }
        // Refresh cached norms so rounding in the incremental updates cannot accumulate.
        for (j, nrm) in norms.iter_mut().enumerate() {
            *nrm = dot(g.col(j), g.col(j));
        }
    }
    let mut residual = 0.0f64;
    for i in 0..n - 1 {
        for j in i + 1..n {
            let denom = (norms[i] * norms[j]).sqrt();
            if denom > 0.0 {
                residual = residual.max(dot(g.col(i), g.col(j)).abs() / denom);
            }
        }
    }
    Err(Error::SvdNoConvergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Fills zero columns of `u` (listed in `missing`) with an orthonormal complement.
fn complete_orthonormal(u: &mut Columns, missing: &[usize]) {
    let m = u.m;
    let filled: Vec<usize> = (0..u.n).filter(|j| !missing.contains(j)).collect();
    let mut basis: Vec<usize> = filled;
    for &j in missing {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for e in 0..m {
            let mut cand = vec![0.0; m];
            cand[e] = 1.0;
            for _ in 0..2 {
                for &b in &basis {
                    let proj = dot(u.col(b), &cand);
                    axpy(-proj, u.col(b), &mut cand);
                }
            }
            let nrm = dot(&cand, &cand).sqrt();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(cand);
            }
            if best_norm > 0.5 {
                break;
            }
        }
        let cand = best.expect("column count never exceeds the ambient dimension");
        u.col_mut(j)
            .iter_mut()
            .zip(&cand)
            .for_each(|(d, c)| *d = c / best_norm);
        basis.push(j);
    }
}

/// Thin SVD: for an `m × n` input, `u` is `m × k`, `s` has `k = min(m, n)`
/// entries and `v` is `n × k`.
pub fn svd(a: &Matrix) -> Result<Svd> {
    let (mut t, transposed) = tall_columns(a);
    let (m, n) = (t.m, t.n);
    let mut v = Columns::identity(n);

    let (g, q) = if m > n {
        let (r, q) = householder_qr(&mut t);
        (r, Some(q))
    } else {
        (t, None)
    };
    let mut g = g;
    jacobi(&mut g, Some(&mut v))?;

    let sigma: Vec<f64> = (0..n).map(|j| dot(g.col(j), g.col(j)).sqrt()).collect();
    let mut missing = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            g.col_mut(j).iter_mut().for_each(|x| *x /= s);
        } else {
            missing.push(j);
        }
    }

    // Left vectors in the tall space (m × n).
    let mut u_tall = match &q {
        Some(q) => {
            let mut lifted = Columns {
                m,
                n,
                data: vec![0.0; m * n],
            };
            for j in 0..n {
                lifted.col_mut(j)[..n].copy_from_slice(g.col(j));
            }
            q.apply_q(&mut lifted);
            lifted
        }
        None => g,
    };
    if !missing.is_empty() {
        complete_orthonormal(&mut u_tall, &missing);
    }

    let order = descending_order(&sigma);
    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let u_m = Matrix::from_fn(m, n, |r, c| u_tall.col(order[c])[r]);
    let v_m = Matrix::from_fn(n, n, |r, c| v.col(order[c])[r]);

    Ok(if transposed {
        Svd { u: v_m, s, v: u_m }
    } else {
        Svd { u: u_m, s, v: v_m }
    })
}

/// Singular values only, sorted descending; skips all vector accumulation.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let (mut t, _) = tall_columns(a);
    let mut g = if t.m > t.n {
        householder_qr(&mut t).0
    } else {
        t
    };
    jacobi(&mut g, None)?;
    let mut s: Vec<f64> = (0..g.n).map(|j| dot(g.col(j), g.col(j)).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Smallest singular value (the `min(m, n)`-th).
pub fn sigma_min(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?.last().copied().unwrap_or(0.0))
}
