use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::error::FscoError;
use crate::tensor::Tensor;

fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let v = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::matrix(rows, cols, v).unwrap()
}

fn single(w: &[f64], rows: usize, cols: usize, b: &[f64], act: Activation) -> Network {
    let layer = DenseLayer::new(
        Tensor::matrix(rows, cols, w.to_vec()).unwrap(),
        Tensor::new(vec![b.len()], b.to_vec()).unwrap(),
        act,
    )
    .unwrap();
    Network::new(vec![layer]).unwrap()
}

#[test]
fn identity_layer_passes_input_through() {
    let mut net = single(&[1., 0., 0., 1.], 2, 2, &[0., 0.], Activation::Identity);
    let y = net.forward(&Tensor::matrix(1, 2, vec![3., 4.]).unwrap()).unwrap();
    assert_eq!(y.data(), &[3., 4.]);
}

#[test]
fn zero_sigmoid_layer_gives_half() {
    let net = single(&[0., 0.], 1, 2, &[0.], Activation::Sigmoid);
    let y = net.predict(&Tensor::matrix(1, 2, vec![-7.5, 123.0]).unwrap()).unwrap();
    assert_eq!(y.data(), &[0.5]);
}

/// Straight-line recomputation of a 2-layer net, independent of the tensor kernels.
#[test]
fn two_layer_forward_matches_hand_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = Network::mlp(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], &mut rng).unwrap();
    let x = randn(&mut rng, 4, 3);
    let y = net.predict(&x).unwrap();

    let l0 = &net.layers()[0];
    let l1 = &net.layers()[1];
    for b in 0..4 {
        let mut h = [0.0; 4];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut z = l0.biases().data()[j];
            for k in 0..3 {
                z += l0.weights().at(j, k) * x.at(b, k);
            }
            *hj = z.tanh();
        }
        for o in 0..2 {
            let mut z = l1.biases().data()[o];
            for (j, hj) in h.iter().enumerate() {
                z += l1.weights().at(o, j) * hj;
            }
            let expect = 1.0 / (1.0 + (-z).exp());
            assert!((y.at(b, o) - expect).abs() < 1e-14);
        }
    }
}

#[test]
fn forward_rejects_wrong_width() {
    let net = single(&[1., 0.], 1, 2, &[0.], Activation::Identity);
    let err = net.predict(&Tensor::matrix(1, 3, vec![0.; 3]).unwrap()).unwrap_err();
    assert!(matches!(err, FscoError::Dimension(_)));
}

#[test]
fn forward_flags_non_finite_output() {
    let mut net = single(&[1e300], 1, 1, &[0.], Activation::Identity);
    let err = net.forward(&Tensor::matrix(1, 1, vec![1e300]).unwrap()).unwrap_err();
    assert!(err.is_numeric());
}

#[test]
fn one_parameter_squared_error_gradient() {
    let mut net = single(&[2.0], 1, 1, &[0.0], Activation::Identity);
    let x = Tensor::matrix(1, 1, vec![1.0]).unwrap();
    let y = net.forward(&x).unwrap();
    let (_, g) = mse_loss(&y, &Tensor::zeros(&[1, 1])).unwrap();
    let grads = net.backward(&g).unwrap();
    assert_eq!(grads.layers[0].weights.data(), &[4.0]);
}

#[test]
fn zero_loss_gradient_gives_zero_grads() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = Network::mlp(&[4, 5, 3], &[Activation::Relu, Activation::Tanh], &mut rng).unwrap();
    let x = randn(&mut rng, 6, 4);
    net.forward(&x).unwrap();
    let grads = net.backward(&Tensor::zeros(&[6, 3])).unwrap();
    assert_eq!(grads.max_abs(), 0.0);
}

#[test]
fn backward_requires_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = Network::mlp(&[2, 2], &[Activation::Identity], &mut rng).unwrap();
    let err = net.backward(&Tensor::zeros(&[1, 2])).unwrap_err();
    assert!(matches!(err, FscoError::State(_)));
    // the cache is single-use
    net.forward(&Tensor::zeros(&[1, 2])).unwrap();
    net.backward(&Tensor::zeros(&[1, 2])).unwrap();
    assert!(matches!(net.backward(&Tensor::zeros(&[1, 2])), Err(FscoError::State(_))));
}

#[test]
fn widths_5_7_4_2_match_finite_differences() {
    for act in Activation::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let net = Network::mlp(&[5, 7, 4, 2], &[act, act, Activation::Identity], &mut rng).unwrap();
        let x = randn(&mut rng, 3, 5);
        let t = randn(&mut rng, 3, 2);
        let report = finite_diff_report(&net, &x, &t, 1e-5).unwrap();
        assert!(report.max_relative_error < 1e-6, "{act}: {report:?}");
        assert!(report.checked > net.parameter_count() / 2);
    }
}

#[test]
fn corrupted_gradient_is_caught() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = Network::mlp(&[3, 6, 2], &[Activation::Tanh, Activation::Identity], &mut rng).unwrap();
    let x = randn(&mut rng, 4, 3);
    let t = randn(&mut rng, 4, 2);
    let y = net.forward(&x).unwrap();
    let (_, g) = mse_loss(&y, &t).unwrap();
    let mut grads = net.backward(&g).unwrap();
    let biggest = grads
        .flat_mut()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    *biggest *= 2.0;
    let report = compare_with_numeric(&net, &x, &t, 1e-5, &grads).unwrap();
    assert!(report.max_relative_error > 0.5);
}

#[test]
fn empty_network_checks_to_zero() {
    let net = Network::new(vec![]).unwrap();
    let x = Tensor::zeros(&[2, 3]);
    assert_eq!(finite_diff_check(&net, &x, &x, 1e-5).unwrap(), 0.0);
}

#[test]
fn apply_update_is_plain_descent() {
    let mut net = single(&[1.0], 1, 1, &[0.0], Activation::Identity);
    let mut grads = GradientSet::zeros_like(&net);
    grads.layers[0].weights.data_mut()[0] = 0.5;
    net.apply_update(&grads, 0.002).unwrap();
    assert!((net.layers()[0].weights().data()[0] - 0.999).abs() < 1e-15);
    assert_eq!(net.layers()[0].biases().data()[0], 0.0);
}

#[test]
fn apply_update_rejects_bad_inputs() {
    let mut net = single(&[1.0], 1, 1, &[0.0], Activation::Identity);
    let grads = GradientSet::zeros_like(&net);
    assert!(matches!(net.apply_update(&grads, 0.0), Err(FscoError::Argument(_))));
    assert!(matches!(net.apply_update(&grads, -1.0), Err(FscoError::Argument(_))));
    let before: Vec<f64> = net.params().collect();
    net.apply_update(&grads, 0.1).unwrap();
    assert_eq!(before, net.params().collect::<Vec<_>>());

    let other = single(&[1., 2.], 1, 2, &[0.], Activation::Identity);
    let bad = GradientSet::zeros_like(&other);
    assert!(matches!(net.apply_update(&bad, 0.1), Err(FscoError::Dimension(_))));
}

#[test]
fn parameter_count_sums_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = Network::mlp(&[6, 64, 64, 1], &[Activation::Relu, Activation::Relu, Activation::Sigmoid], &mut rng)
        .unwrap();
    assert_eq!(net.parameter_count(), 6 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
    assert_eq!(net.params().count(), net.parameter_count());
}

#[test]
fn mismatched_layers_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = DenseLayer::glorot(2, 3, Activation::Relu, &mut rng).unwrap();
    let b = DenseLayer::glorot(4, 1, Activation::Relu, &mut rng).unwrap();
    assert!(Network::new(vec![a, b]).is_err());
}

#[test]
fn glorot_respects_its_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let l = DenseLayer::glorot(30, 10, Activation::Tanh, &mut rng).unwrap();
    let lim = (6.0f64 / 40.0).sqrt();
    assert!(l.weights().data().iter().all(|w| w.abs() <= lim));
    assert!(l.biases().data().iter().all(|&b| b == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn update_then_negated_update_restores(seed in any::<u64>(), eta in 1e-6f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::mlp(&[3, 4, 2], &[Activation::LeakyRelu, Activation::Identity], &mut rng).unwrap();
        let before = net.clone();
        let mut grads = GradientSet::zeros_like(&net);
        for g in grads.flat_mut() {
            *g = StandardNormal.sample(&mut rng);
        }
        net.apply_update(&grads, eta).unwrap();
        grads.flat_mut().for_each(|g| *g = -*g);
        net.apply_update(&grads, eta).unwrap();
        prop_assert!(net.max_param_diff(&before) <= 1e-12);
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>()) {
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::mlp(&[4, 8, 3], &[Activation::Sigmoid, Activation::Tanh], &mut rng).unwrap();
            let x = randn(&mut rng, 5, 4);
            net.predict(&x).unwrap()
        };
        let (a, b) = (build(), build());
        prop_assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn random_nets_pass_gradient_check(seed in any::<u64>(), act_idx in 0usize..5) {
        let act = Activation::ALL[act_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::mlp(&[4, 6, 3], &[act, Activation::Sigmoid], &mut rng).unwrap();
        let x = randn(&mut rng, 3, 4);
        let t = randn(&mut rng, 3, 3);
        prop_assert!(finite_diff_check(&net, &x, &t, 1e-5).unwrap() < 1e-4);
    }
}
