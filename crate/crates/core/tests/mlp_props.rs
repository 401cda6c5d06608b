use proptest::prelude::*;
use superaccel::landscape::finite_diff_gradient;
use superaccel::linalg::sup_norm;
use superaccel::mlp::{as_landscape, forward, init_params, loss_and_grad, LabeledDataset, MlpParams, MlpSpec};
use superaccel::rng::SeededRng;

fn random_data(n: usize, dim: usize, classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = SeededRng::new(seed);
    let images = (0..n * dim).map(|_| rng.uniform_open()).collect();
    let mut labels = vec![0.0; n * classes];
    for i in 0..n {
        let c = ((rng.uniform_open() * classes as f64) as usize).min(classes - 1);
        labels[i * classes + c] = 1.0;
    }
    LabeledDataset::new(images, labels, dim, classes).unwrap()
}

fn architecture() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=20, prop::collection::vec(1usize..=10, 0..=2), 1usize..=5).prop_map(|(i, hidden, o)| {
        let mut sizes = vec![i];
        sizes.extend(hidden);
        sizes.push(o);
        sizes
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn backprop_matches_finite_differences(sizes in architecture(), seed in any::<u64>(), n in 1usize..6) {
        let spec = MlpSpec::new(&sizes, seed).unwrap();
        let params = init_params(&spec).unwrap();
        let data = random_data(n, sizes[0], *sizes.last().unwrap(), seed ^ 0x5a5a);
        let (_, grad) = loss_and_grad(&params, &data, None).unwrap();
        let l = as_landscape(&params.layout, &data, None).unwrap();
        let fd = finite_diff_gradient(&l, &params.flat, 1e-5).unwrap();
        let err = grad.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6 * sup_norm(&grad), "{sizes:?}: err {err} vs {}", sup_norm(&grad));
    }

    #[test]
    fn flatten_round_trip(sizes in architecture(), seed in any::<u64>()) {
        let spec = MlpSpec::new(&sizes, seed).unwrap();
        let params = init_params(&spec).unwrap();
        let expected: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        prop_assert_eq!(params.flat.len(), expected);
        prop_assert_eq!(MlpParams::flatten(&spec, &params.unflatten()).unwrap(), params.clone());
        prop_assert_eq!(MlpParams::from_flat(&spec, params.flat.clone()).unwrap(), params);
    }

    #[test]
    fn loss_is_bounded(seed in any::<u64>(), scale in 0.1f64..50.0) {
        let spec = MlpSpec::new(&[8, 6, 10], seed).unwrap();
        let mut params = init_params(&spec).unwrap();
        params.flat.iter_mut().for_each(|w| *w *= scale);
        let data = random_data(7, 8, 10, seed);
        let (loss, _) = loss_and_grad(&params, &data, None).unwrap();
        prop_assert!((0.0..=5.0).contains(&loss));
        let out = forward(&params, &data.images).unwrap();
        prop_assert!(out.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn shuffle_is_a_permutation(seed in any::<u64>(), n in 1usize..500, batch in 1usize..64) {
        let mut rng = SeededRng::new(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..3 {
            rng.shuffle(&mut order);
            let mut seen = vec![0u8; n];
            for chunk in order.chunks(batch) {
                for &i in chunk {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
