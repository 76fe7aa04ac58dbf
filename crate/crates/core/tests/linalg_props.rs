use nflab_core::linalg::{
    matmul, sample_gaussian, sigma_min, singular_values, spectral_norm, svd, Matrix, RngState,
};
use nflab_core::net::{DenseNet, InitScheme, NetworkConfig, WeightLaw};
use nflab_core::Activation;
use proptest::prelude::*;

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    sample_gaussian(&mut RngState::new(seed), rows, cols, 1.0)
}

fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

fn orthogonality_residual(q: &Matrix) -> f64 {
    let g = q.matmul_tn(q).unwrap();
    g.sub(&Matrix::identity(q.cols())).unwrap().frobenius_norm()
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations.
fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off.sqrt() < 1e-15 * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn matmul_matches_naive_oracle() {
    let a = random(7, 5, 1);
    let b = random(5, 3, 2);
    assert!(matmul(&a, &b).unwrap().sub(&naive_matmul(&a, &b)).unwrap().max_abs() <= 1e-12);
    for (m, k, n) in [(9, 13, 1), (1, 6, 4), (17, 3, 11)] {
        let a = random(m, k, 3);
        let b = random(k, n, 4);
        let want = naive_matmul(&a, &b);
        assert!(a.matmul(&b).unwrap().sub(&want).unwrap().max_abs() <= 1e-12);
        assert!(a.transpose().matmul_tn(&b).unwrap().sub(&want).unwrap().max_abs() <= 1e-12);
        assert!(a.matmul_nt(&b.transpose()).unwrap().sub(&want).unwrap().max_abs() <= 1e-12);
    }
}

#[test]
fn svd_of_random_50_by_20() {
    let a = random(50, 20, 3);
    let d = svd(&a).unwrap();
    assert!(d.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-9 * a.frobenius_norm());
    assert!(orthogonality_residual(&d.u) <= 1e-9);
    assert!(orthogonality_residual(&d.v) <= 1e-9);
}

#[test]
fn sigma_min_matches_gram_eigen_oracle() {
    let a = random(300, 50, 8);
    let sm = sigma_min(&a).unwrap();
    let sv = singular_values(&a).unwrap();
    assert_eq!(sm, *sv.last().unwrap());
    let ev = symmetric_eigenvalues(&a.matmul_tn(&a).unwrap());
    assert!((sm - ev[0].sqrt()).abs() <= 1e-8 * sm.max(1.0), "{sm} vs {}", ev[0].sqrt());
}

#[test]
fn lecun_first_layer_variance() {
    let law = InitScheme::LecunNormal.law(1, 3, 2, 1000);
    let w = law.sample(&mut RngState::new(77), 1000, 1000);
    let n = w.data().len() as f64;
    let mean = w.data().iter().sum::<f64>() / n;
    let var = w.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 0.5).abs() <= 0.005, "{var}");
}

#[test]
fn init_variance_law_for_every_scheme_and_layer() {
    let schemes = InitScheme::ALL_STANDARD
        .into_iter()
        .chain([InitScheme::CustomLastExponent { p: 2.0, gain: 3.0 }]);
    let widths = vec![16, 128, 64, 8];
    for scheme in schemes {
        for layer in 1..=3 {
            let (fan_in, fan_out) = (widths[layer - 1], widths[layer]);
            let expected = match scheme {
                InitScheme::LecunNormal | InitScheme::LecunUniform => 1.0 / fan_in as f64,
                InitScheme::XavierNormal | InitScheme::XavierUniform => 2.0 / (fan_in + fan_out) as f64,
                InitScheme::KaimingNormal | InitScheme::KaimingUniform => 2.0 / fan_in as f64,
                InitScheme::Init1 if layer == 3 => 2.0 / (fan_in as f64).powf(1.5),
                InitScheme::Init1 => 1.0 / fan_in as f64,
                InitScheme::Init2 if layer == 3 => (fan_in as f64).powf(-1.5) / 3.0,
                InitScheme::Init2 => 1.0 / (3.0 * fan_in as f64),
                InitScheme::CustomLastExponent { p, gain } if layer == 3 => gain / (fan_in as f64).powf(p),
                InitScheme::CustomLastExponent { .. } => 1.0 / fan_in as f64,
            };
            let mut pooled = Vec::with_capacity(1_000_000);
            let mut seed = 0u64;
            while pooled.len() < 1_000_000 {
                let cfg = NetworkConfig::new(widths.clone(), Activation::Relu, scheme).with_seed(seed);
                let net = DenseNet::init(cfg).unwrap();
                pooled.extend_from_slice(net.weights()[layer - 1].data());
                seed += 1;
            }
            let n = pooled.len() as f64;
            let var = pooled.iter().map(|v| v * v).sum::<f64>() / n;
            assert!(
                (var / expected - 1.0).abs() <= 0.02,
                "{scheme:?} layer {layer}: {var} vs {expected}"
            );
        }
    }
}

#[test]
fn weight_law_variances() {
    assert_eq!(WeightLaw::Normal { std: 0.5 }.variance(), 0.25);
    assert_eq!(WeightLaw::Uniform { bound: 3.0 }.variance(), 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_is_associative(m in 1usize..8, k in 1usize..8, l in 1usize..8, n in 1usize..8, seed in any::<u64>()) {
        let a = random(m, k, seed);
        let b = random(k, l, seed ^ 1);
        let c = random(l, n, seed ^ 2);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        let rel = left.sub(&right).unwrap().frobenius_norm() / left.frobenius_norm().max(1e-300);
        prop_assert!(rel <= 1e-9);
    }

    #[test]
    fn svd_factors_are_orthonormal(rows in 1usize..24, cols in 1usize..24, seed in any::<u64>()) {
        let a = random(rows, cols, seed);
        let d = svd(&a).unwrap();
        prop_assert!(orthogonality_residual(&d.u) <= 1e-9);
        prop_assert!(orthogonality_residual(&d.v) <= 1e-9);
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.s.iter().all(|&s| s >= 0.0));
        prop_assert!(d.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-9 * a.frobenius_norm());
    }

    #[test]
    fn spectral_norm_matches_svd(rows in 1usize..40, cols in 1usize..40, seed in any::<u64>()) {
        let a = random(rows, cols, seed);
        let s1 = singular_values(&a).unwrap()[0];
        let p = spectral_norm(&a, 1e-12, 100_000);
        prop_assert!((p.value - s1).abs() <= 1e-8 * s1);
        prop_assert!(sigma_min(&a).unwrap() <= p.value * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_norm_is_sandwiched_by_column_norms(n_in in 2usize..64, n_out in 1usize..6, seed in any::<u64>(), scheme_idx in 0usize..8) {
        let scheme = InitScheme::ALL_STANDARD[scheme_idx];
        let w = scheme.law(2, 2, n_in, n_out).sample(&mut RngState::new(seed), n_in, n_out);
        let norms = w.column_norms();
        let lo = norms.iter().copied().fold(0.0, f64::max);
        let hi = norms.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = spectral_norm(&w, 1e-12, 100_000).value;
        prop_assert!(s >= lo * (1.0 - 1e-9) && s <= hi * (1.0 + 1e-9));
    }

    #[test]
    fn derived_streams_are_uncorrelated(seed in any::<u64>()) {
        let root = RngState::new(seed);
        let a = sample_gaussian(&mut root.derive("left"), 1, 100_000, 1.0);
        let b = sample_gaussian(&mut root.derive("right"), 1, 100_000, 1.0);
        let n = 100_000.0;
        let (ma, mb) = (a.data().iter().sum::<f64>() / n, b.data().iter().sum::<f64>() / n);
        let cov = a.data().iter().zip(b.data()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va = a.data().iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb = b.data().iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        prop_assert!((cov / (va * vb).sqrt()).abs() < 0.01);
    }
}
