mod common;

use common::*;
use proptest::prelude::*;
use udatext::classifiers::{softmax, train_logreg, FeatureMatrix, LogRegParams};
use udatext::uda::*;

fn pairs_from(data: &FeatureMatrix, noise: f64, seed: u64) -> Vec<UnlabeledPair> {
    let mut r = rng(seed);
    (0..data.n_rows())
        .map(|i| {
            let x = data.row(i).to_vec();
            let jitter = random_vec(&mut r, x.len(), noise);
            UnlabeledPair {
                id: format!("u{i}"),
                augmented: x.iter().zip(&jitter).map(|(a, b)| a + b).collect(),
                original: x,
            }
        })
        .collect()
}

fn logits(theta: &[f64], k: usize, d: usize, x: &[f64]) -> Vec<f64> {
    (0..k)
        .map(|c| theta[c * d..(c + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + theta[k * d + c])
        .collect()
}

#[test]
fn zero_lambda_without_tsa_reproduces_logreg() {
    let labeled = blobs(4, 9, 5, 1.5, 3);
    let unlabeled = pairs_from(&blobs(4, 20, 5, 1.5, 4), 0.3, 1);
    let params = LogRegParams {
        l2: 1e-3,
        epochs: 7,
        lr: 0.05,
        batch_size: 8,
        seed: 42,
    };
    let reference = train_logreg(&labeled, &params).unwrap();
    let steps = params.epochs * labeled.n_rows().div_ceil(params.batch_size);
    for pool in [unlabeled.as_slice(), &[]] {
        let cfg = UdaConfig {
            schedule: TsaSchedule::None,
            total_steps: steps,
            lambda: if pool.is_empty() { 1.0 } else { 0.0 },
            sup_batch: params.batch_size,
            lr: params.lr,
            l2: params.l2,
            seed: params.seed,
            ..Default::default()
        };
        let uda = train_uda(&labeled, pool, &cfg).unwrap();
        assert_eq!(uda.weights, reference.weights);
        assert_eq!(uda.bias, reference.bias);
    }
}

#[test]
fn total_loss_gradient_matches_finite_differences() {
    let mut r = rng(5);
    for trial in 0..20u64 {
        let labeled = random_labels(3, 4, 3, trial);
        let unlabeled = pairs_from(&random_labels(3, 4, 3, trial + 100), 0.5, trial);
        let (k, d) = (3, 4);
        let theta = random_vec(&mut r, k * d + k, 1.0);
        let cfg = UdaConfig {
            lambda: 0.7,
            temperature: 0.4,
            l2: 0.05,
            ..Default::default()
        };
        let sup_rows = [0, 1, 2];
        let unsup_rows = [0, 1, 2];
        let eta = 1.0;
        let (loss, grad) = uda_loss_grad(&theta, &labeled, &sup_rows, &unlabeled, &unsup_rows, eta, &cfg).unwrap();

        // independent oracle with the sharpened targets frozen at theta
        let targets: Vec<Vec<f64>> = unlabeled
            .iter()
            .map(|p| sharpen(&softmax(&logits(&theta, k, d, &p.original)), cfg.temperature))
            .collect();
        let oracle = |t: &[f64]| {
            let sup: f64 = sup_rows
                .iter()
                .map(|&i| -softmax(&logits(t, k, d, labeled.row(i)))[labeled.labels()[i]].ln())
                .sum::<f64>()
                / 3.0;
            let reg = 0.5 * cfg.l2 * t[..k * d].iter().map(|w| w * w).sum::<f64>();
            let cons: f64 = unsup_rows
                .iter()
                .map(|&j| {
                    let p = softmax(&logits(t, k, d, &unlabeled[j].augmented));
                    targets[j].iter().zip(&p).map(|(q, p)| q * (q / p).ln()).sum::<f64>()
                })
                .sum::<f64>()
                / 3.0;
            sup + reg + cfg.lambda * cons
        };
        assert!((oracle(&theta) - loss).abs() < 1e-12);
        let num = numeric_grad(oracle, &theta, 1e-5);
        let err = rel_error(&grad, &num);
        assert!(err <= 1e-4, "trial {trial}: {err}");
    }
}

#[test]
fn tsa_masks_confident_examples() {
    let labeled = separable(6, 1);
    let mut theta = vec![0.0; 2 * 2 + 2];
    theta[0] = -5.0;
    theta[2] = 5.0;
    let cfg = UdaConfig {
        lambda: 0.0,
        ..Default::default()
    };
    let rows: Vec<usize> = (0..6).collect();
    let (loss, grad) = uda_loss_grad(&theta, &labeled, &rows, &[], &[], 0.5, &cfg).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));
    let (loss, _) = uda_loss_grad(&theta, &labeled, &rows, &[], &[], 1.0, &cfg).unwrap();
    assert!(loss > 0.0);
}

#[test]
fn training_is_deterministic_and_checks_dimensions() {
    let labeled = blobs(3, 5, 4, 1.0, 1);
    let unlabeled = pairs_from(&blobs(3, 10, 4, 1.0, 2), 0.2, 3);
    let cfg = UdaConfig {
        total_steps: 50,
        sup_batch: 5,
        unsup_batch: 10,
        ..Default::default()
    };
    let a = train_uda(&labeled, &unlabeled, &cfg).unwrap();
    let b = train_uda(&labeled, &unlabeled, &cfg).unwrap();
    assert_eq!(a, b);
    let mut bad = unlabeled.clone();
    bad[3].augmented.pop();
    assert!(train_uda(&labeled, &bad, &cfg).is_err());
    assert!(train_uda(&labeled, &unlabeled, &UdaConfig { total_steps: 0, ..cfg }).is_err());
}

#[test]
fn diverging_learning_rate_is_a_numeric_failure() {
    let labeled = blobs(3, 5, 4, 1e150, 1);
    let cfg = UdaConfig {
        total_steps: 20,
        lr: 1e300,
        schedule: TsaSchedule::None,
        ..Default::default()
    };
    match train_uda(&labeled, &[], &cfg) {
        Err(e) => assert_eq!(e.exit_code(), 3, "{e}"),
        Ok(_) => panic!("expected a numeric failure"),
    }
}

proptest! {
    #[test]
    fn thresholds_are_monotone_and_bounded(k in 2usize..100, total in 1usize..500) {
        for schedule in [TsaSchedule::None, TsaSchedule::Linear, TsaSchedule::Exp, TsaSchedule::Log] {
            let mut prev = 0.0;
            for t in 0..=total {
                let eta = tsa_threshold(schedule, t, total, k).unwrap();
                prop_assert!(eta >= prev);
                prop_assert!(eta >= 1.0 / k as f64 - 1e-15 && eta <= 1.0 + 1e-15);
                prev = eta;
            }
        }
    }

    #[test]
    fn consistency_is_nonnegative(seed in 0u64..10_000, tau in 0.1f64..2.0) {
        let mut r = rng(seed);
        let p: Vec<Vec<f64>> = (0..4).map(|_| softmax(&random_vec(&mut r, 5, 3.0))).collect();
        let q: Vec<Vec<f64>> = (0..4).map(|_| softmax(&random_vec(&mut r, 5, 3.0))).collect();
        prop_assert!(consistency_loss(&p, &q, tau, 0.0).unwrap() >= 0.0);
        prop_assert!(consistency_loss(&p, &p, 1.0, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn unmasked_tsa_loss_is_mean_cross_entropy(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let probs: Vec<Vec<f64>> = (0..6).map(|_| softmax(&random_vec(&mut r, 4, 3.0))).collect();
        let labels: Vec<usize> = (0..6).map(|i| i % 4).collect();
        let (loss, kept) = supervised_tsa_loss(&probs, &labels, 1.0);
        let mean = probs.iter().zip(&labels).map(|(p, &y)| -p[y].ln()).sum::<f64>() / 6.0;
        prop_assert!(kept.iter().all(|&k| k));
        prop_assert!((loss - mean).abs() <= 1e-12);
    }
}
