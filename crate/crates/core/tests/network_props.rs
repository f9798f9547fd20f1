use composed_core::composed::{composed_loss, FrozenDenoiser};
use composed_core::relu_net::{central_difference, max_relative_error, LossKind, ReluNet2};
use composed_core::valid_set::ValidSet;
use proptest::prelude::*;

/// True when every hidden pre-activation of `net` at `xs` is away from the kink.
fn off_kinks(net: &ReluNet2, xs: &[Vec<f64>], margin: f64) -> bool {
    let (d, h) = (net.input_dim(), net.hidden());
    xs.iter().all(|x| {
        (0..h).all(|j| {
            let z: f64 = net.b1()[j] + (0..d).map(|i| net.w1()[j * d + i] * x[i]).sum::<f64>();
            z.abs() > margin
        })
    })
}

fn batch(d: usize, k: usize) -> impl Strategy<Value = Vec<(Vec<f64>, Vec<f64>)>> {
    prop::collection::vec((prop::collection::vec(-2.0f64..2.0, d), prop::collection::vec(-2.0f64..2.0, k)), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_nearest(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..12),
        q in prop::collection::vec(-8.0f64..8.0, 2),
    ) {
        let v = ValidSet::new(pts).unwrap();
        let (i, p) = v.project(&q).unwrap();
        let p = p.to_vec();
        prop_assert_eq!(v.project(&p).unwrap().1, p.as_slice());
        let d = |a: &[f64]| a.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        for other in v.points() {
            prop_assert!(d(&p) <= d(other) + 1e-12);
        }
        prop_assert_eq!(v.point(i), p.as_slice());
    }

    #[test]
    fn backprop_matches_finite_differences(seed in 0u64..10_000, b in batch(2, 2)) {
        let net = ReluNet2::random(2, 6, 2, seed);
        let xs: Vec<Vec<f64>> = b.iter().map(|(x, _)| x.clone()).collect();
        prop_assume!(off_kinks(&net, &xs, 1e-3));
        let (_, grad) = net.loss_grad(&b, LossKind::SquaredError).unwrap();
        let mut probe = net.clone();
        let fd = central_difference(
            |p| {
                probe.set_params(p).unwrap();
                probe.loss(&b, LossKind::SquaredError).unwrap()
            },
            &net.to_vec(),
            1e-6,
        );
        prop_assert!(max_relative_error(&grad.to_vec(), &fd) < 1e-4);
    }

    #[test]
    fn composed_gradient_matches_finite_differences(
        seed in 0u64..10_000,
        b in batch(1, 1),
        lambda in 0.0f64..2.0,
    ) {
        let base = ReluNet2::random(1, 5, 1, seed);
        let pi = FrozenDenoiser::freeze(ReluNet2::random(1, 7, 1, seed + 1), vec![0.3], vec![1.5]).unwrap();
        let xs: Vec<Vec<f64>> = b.iter().map(|(x, _)| x.clone()).collect();
        prop_assume!(off_kinks(&base, &xs, 1e-3));
        let mids: Vec<Vec<f64>> = xs.iter().map(|x| vec![(base.eval(x)[0] - 0.3) / 1.5]).collect();
        prop_assume!(off_kinks(pi.net(), &mids, 1e-3));
        let exact = composed_loss(&base, &pi, &b, lambda).unwrap();
        let mut probe = base.clone();
        let fd = central_difference(
            |p| {
                probe.set_params(p).unwrap();
                composed_loss(&probe, &pi, &b, lambda).unwrap().total
            },
            &base.to_vec(),
            1e-6,
        );
        prop_assert!(max_relative_error(&exact.grad.to_vec(), &fd) < 1e-4);
        pi.verify().unwrap();
    }

    #[test]
    fn complexity_is_half_squared_weight_norm(seed in 0u64..10_000) {
        let net = ReluNet2::random(3, 4, 2, seed);
        let expected = 0.5 * (net.w1().iter().chain(net.w2()).map(|w| w * w).sum::<f64>());
        prop_assert!((net.complexity() - expected).abs() < 1e-12);
    }
}

#[test]
fn identity_denoiser_reduces_composed_to_direct_loss() {
    let base = ReluNet2::random(1, 4, 1, 7);
    let b = vec![(vec![0.5], vec![1.0]), (vec![-1.0], vec![0.0])];
    let l = composed_loss(&base, &FrozenDenoiser::identity(1), &b, 0.0).unwrap();
    assert!((l.composed - l.direct).abs() < 1e-12);
    assert!((l.composed - base.loss(&b, LossKind::SquaredError).unwrap()).abs() < 1e-12);
}
