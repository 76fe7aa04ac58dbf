use nflab_core::linalg::{Matrix, RngState};
use nflab_core::net::{Activation, DenseNet, Gradients, InitScheme, NetworkConfig, PeConfig};
use nflab_core::optim::{adam_step, gd_step, train_objective, AdamHyper, AdamState, TrainConfig};
use nflab_core::tasks::{make_curve_dataset, Dataset};
use proptest::prelude::*;

fn scalar_net(w: f64) -> DenseNet {
    let cfg = NetworkConfig::new(vec![1, 1, 1], Activation::Identity, InitScheme::LecunNormal);
    let mut net = DenseNet::init(cfg).unwrap();
    net.param_blocks_mut().next().unwrap()[0] = w;
    net
}

fn weight(net: &DenseNet) -> f64 {
    net.weights()[0][(0, 0)]
}

fn gradient_of(net: &DenseNet, g: f64) -> Gradients {
    let mut grads = Gradients::zeros_like(net);
    grads.blocks_mut().next().unwrap()[0] = g;
    grads
}

#[test]
fn gd_on_scalar_quadratic() {
    let mut net = scalar_net(0.0);
    for t in 0..200 {
        let g = gradient_of(&net, weight(&net) - 3.0);
        gd_step(&mut net, &g, 0.1, t).unwrap();
        if t == 0 {
            assert!((weight(&net) - 0.3).abs() <= 1e-15);
        }
        let closed_form = 3.0 * (1.0 - 0.9f64.powi(t as i32 + 1));
        assert!((weight(&net) - closed_form).abs() <= 1e-12);
    }
    assert!((weight(&net) - 3.0).abs() <= 1e-8);
}

#[test]
fn adam_matches_scalar_reimplementation() {
    let hyper = AdamHyper {
        lr: 0.05,
        beta1: 0.8,
        beta2: 0.99,
        eps: 1e-8,
    };
    let grad = |w: f64| w.sin() + 0.3 * w - 0.5;
    let mut net = scalar_net(2.0);
    let mut state = AdamState::new(&net);
    let (mut w, mut m, mut v) = (2.0f64, 0.0f64, 0.0f64);
    for t in 1..=100 {
        let g = gradient_of(&net, grad(weight(&net)));
        adam_step(&mut net, &g, &mut state, &hyper, t).unwrap();
        let g = grad(w);
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
        let mh = m / (1.0 - hyper.beta1.powi(t as i32));
        let vh = v / (1.0 - hyper.beta2.powi(t as i32));
        w -= hyper.lr * mh / (vh.sqrt() + hyper.eps);
        assert!((weight(&net) - w).abs() <= 1e-12, "step {t}");
    }
    assert_eq!(state.steps_taken(), 100);
}

#[test]
fn adam_first_step_is_signed_lr() {
    let cfg = NetworkConfig::new(vec![2, 4, 3], Activation::DEFAULT_SINE, InitScheme::LecunNormal);
    let mut net = DenseNet::init(cfg).unwrap();
    let before = net.clone();
    let x = Matrix::from_fn(5, 2, |r, c| (r * 2 + c) as f64 / 10.0 - 0.4);
    let y = Matrix::filled(5, 3, 0.5);
    let (_, grads) = net.backward(&x, &y).unwrap();
    let hyper = AdamHyper::default();
    adam_step(&mut net, &grads, &mut AdamState::new(&before), &hyper, 0).unwrap();
    for ((a, b), g) in net
        .param_blocks()
        .flatten()
        .zip(before.param_blocks().flatten())
        .zip(grads.blocks().flatten())
    {
        let moved = b - a;
        let expect = hyper.lr * g.signum() * g.abs() / (g.abs() + hyper.eps);
        assert!((moved - expect).abs() <= 1e-15, "{moved} vs {expect}");
    }
}

fn flat(net: &DenseNet) -> Vec<f64> {
    net.param_blocks().flatten().copied().collect()
}

/// Normal-equations optimum of `½‖[X 1]θ − y‖²` by Gaussian elimination.
fn least_squares_min(x: &Matrix, y: &Matrix) -> f64 {
    let n = x.cols() + 1;
    let row = |r: usize| -> Vec<f64> { x.row(r).iter().copied().chain([1.0]).collect() };
    let mut a = vec![vec![0.0; n + 1]; n];
    for r in 0..x.rows() {
        let z = row(r);
        for i in 0..n {
            for j in 0..n {
                a[i][j] += z[i] * z[j];
            }
            a[i][n] += z[i] * y[(r, 0)];
        }
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    let theta: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    (0..x.rows())
        .map(|r| {
            let pred: f64 = row(r).iter().zip(&theta).map(|(z, t)| z * t).sum();
            0.5 * (pred - y[(r, 0)]).powi(2)
        })
        .sum()
}

#[test]
fn linear_net_reaches_least_squares_optimum() {
    let mut rng = RngState::new(31);
    let x = Matrix::from_fn(40, 3, |_, _| rng.normal());
    let y = Matrix::from_fn(40, 1, |r, _| x[(r, 0)] - 2.0 * x[(r, 2)] + 0.3 * rng.normal());
    let data = Dataset::new(x.clone(), y.clone(), false).unwrap();
    let oracle = least_squares_min(&x, &y);
    let cfg = NetworkConfig::new(vec![3, 4, 1], Activation::Identity, InitScheme::XavierNormal).with_seed(1);
    let mut net = DenseNet::init(cfg).unwrap();
    let report = train_objective(&mut net, &data, &TrainConfig::gd(2e-3, 20_000)).unwrap();
    assert!(report.diverged.is_none());
    assert!((report.final_loss - oracle).abs() <= 1e-10, "{} vs {oracle}", report.final_loss);
    assert!(report.final_loss >= oracle - 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gd_strictly_decreases_positive_definite_quadratic(seed in any::<u64>(), frac in 0.05f64..0.95) {
        let cfg = NetworkConfig::new(vec![2, 3, 2], Activation::DEFAULT_SINE, InitScheme::LecunNormal).with_seed(seed);
        let mut net = DenseNet::init(cfg).unwrap();
        let d = flat(&net).len();
        let mut rng = RngState::new(seed).derive("quadratic");
        let b = Matrix::from_fn(d, d, |_, _| rng.normal());
        let h = b.matmul_tn(&b).unwrap().add(&Matrix::identity(d).scale(0.1)).unwrap();
        let lambda_max = nflab_core::linalg::spectral_norm(&h, 1e-12, 100_000).value;
        let lr = frac * 2.0 / lambda_max;
        let loss = |theta: &[f64]| {
            let t = Matrix::new(d, 1, theta.to_vec()).unwrap();
            0.5 * t.matmul_tn(&h.matmul(&t).unwrap()).unwrap()[(0, 0)]
        };
        let mut prev = loss(&flat(&net));
        for step in 0..50 {
            let theta = Matrix::new(d, 1, flat(&net)).unwrap();
            let g = h.matmul(&theta).unwrap();
            let mut grads = Gradients::zeros_like(&net);
            let mut k = 0;
            for block in grads.blocks_mut() {
                for v in block.iter_mut() {
                    *v = g[(k, 0)];
                    k += 1;
                }
            }
            gd_step(&mut net, &grads, lr, step).unwrap();
            let now = loss(&flat(&net));
            prop_assert!(now < prev || prev < 1e-280, "step {}: {} -> {}", step, prev, now);
            prev = now;
        }
    }
}

#[test]
fn target_met_at_init_takes_zero_steps() {
    let mut net = DenseNet::init(NetworkConfig::new(vec![1, 8, 1], Activation::DEFAULT_SINE, InitScheme::LecunNormal)).unwrap();
    let x = Matrix::from_fn(10, 1, |r, _| r as f64 / 10.0);
    let y = net.predict(&x).unwrap();
    let before = net.clone();
    let data = Dataset::new(x, y, false).unwrap();
    let report = train_objective(&mut net, &data, &TrainConfig::adam(1e-3, 100).with_target(35.0)).unwrap();
    assert_eq!(report.steps_run, 0);
    assert!(report.reached_target);
    assert_eq!(report.psnr_trace, vec![(0, 200.0)]);
    assert_eq!(net, before);
}

#[test]
fn reached_target_iff_some_logged_psnr_crosses() {
    let data = make_curve_dataset(32, true).unwrap();
    let cfg = NetworkConfig::new(vec![2, 256, 1], Activation::DEFAULT_GAUSSIAN, InitScheme::Init1);
    let mut net = DenseNet::init(cfg).unwrap();
    let report = train_objective(&mut net, &data, &TrainConfig::adam(1e-3, 3000).with_target(30.0).with_log_every(50)).unwrap();
    assert_eq!(report.reached_target, report.psnr_trace.iter().any(|p| p.1 >= 30.0));
    assert!(report.reached_target);
    let steps: Vec<usize> = report.psnr_trace.iter().map(|p| p.0).collect();
    assert!(steps.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(*steps.last().unwrap(), report.steps_run);
}

#[test]
fn training_replays_bitwise() {
    let data = make_curve_dataset(50, true).unwrap();
    let cfg = NetworkConfig::new(vec![2, 64, 64, 1], Activation::DEFAULT_SINC, InitScheme::Init1).with_seed(8);
    let run = || {
        let mut net = DenseNet::init(cfg.clone()).unwrap();
        let report = train_objective(&mut net, &data, &TrainConfig::adam(1e-3, 300).with_log_every(7)).unwrap();
        (serde_json::to_string(&report).unwrap(), net)
    };
    let (a, na) = run();
    let (b, nb) = run();
    assert_eq!(a, b);
    assert_eq!(na, nb);
}

#[test]
fn embedding_stays_frozen() {
    let data = make_curve_dataset(40, false).unwrap();
    let cfg = NetworkConfig::new(vec![1, 32, 1], Activation::Relu, InitScheme::LecunNormal)
        .with_pe(PeConfig { embed_dim: 16, sigma_b: 4.0 });
    let mut net = DenseNet::init(cfg).unwrap();
    let pe = net.pe_matrix().unwrap().clone();
    let w0 = net.weights()[0].clone();
    train_objective(&mut net, &data, &TrainConfig::adam(1e-2, 100)).unwrap();
    assert_eq!(net.pe_matrix().unwrap(), &pe);
    assert_ne!(net.weights()[0], w0);
}

#[test]
fn huge_learning_rate_reports_divergence() {
    let data = make_curve_dataset(40, true).unwrap();
    let cfg = NetworkConfig::new(vec![2, 64, 1], Activation::Relu, InitScheme::KaimingNormal);
    let mut net = DenseNet::init(cfg).unwrap();
    let report = train_objective(&mut net, &data, &TrainConfig::gd(1e150, 50).with_log_every(1)).unwrap();
    let info = report.diverged.clone().expect("run should diverge");
    assert!(report.check().is_err());
    assert!(report.final_loss.is_finite());
    assert!(info.step <= 50);
    assert!(report.loss_trace.iter().all(|p| p.1.is_finite()));
}

/// Fraction of seeds whose GD loss never rises after the first 100 steps.
fn monotone_fraction(n: usize, width: usize, seeds: u64, steps: usize, lr: f64) -> f64 {
    let data = make_curve_dataset(n, true).unwrap();
    let ok = (0..seeds)
        .filter(|&s| {
            let cfg = NetworkConfig::new(vec![2, width, 1], Activation::DEFAULT_GAUSSIAN, InitScheme::LecunNormal).with_seed(s);
            let mut net = DenseNet::init(cfg).unwrap();
            let r = train_objective(&mut net, &data, &TrainConfig::gd(lr, steps).with_log_every(1)).unwrap();
            r.diverged.is_none() && r.loss_trace[100..].windows(2).all(|w| w[1].1 <= w[0].1)
        })
        .count();
    ok as f64 / seeds as f64
}

#[test]
fn overparameterized_gd_is_monotone() {
    assert!(monotone_fraction(32, 128, 20, 600, 1e-3) >= 0.95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_gradient_adam_is_a_fixed_point(seed in any::<u64>(), steps in 1usize..30) {
        let cfg = NetworkConfig::new(vec![2, 5, 1], Activation::DEFAULT_GABOR, InitScheme::Init2).with_seed(seed);
        let mut net = DenseNet::init(cfg).unwrap();
        let before = net.clone();
        let mut state = AdamState::new(&net);
        let zero = Gradients::zeros_like(&net);
        for t in 0..steps {
            adam_step(&mut net, &zero, &mut state, &AdamHyper::default(), t).unwrap();
        }
        prop_assert_eq!(net, before);
    }
}
