use besovnet::calculus::add;
use besovnet::compiler::wavelet_network;
use besovnet::expansion::{analyze, synthesize, LambdaIndex, SampledField};
use besovnet::harness::{nterm_sweep, TargetKind, TargetSpec};
use besovnet::network::{random_network, Layer};
use besovnet::{AffineMap, BiorthWaveletSystem, Network};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYSTEMS: [(usize, usize); 4] = [(2, 2), (3, 3), (2, 4), (4, 2)];

/// Reorders the neurons of hidden layer `l` and the matching columns of layer `l + 1`.
fn permute_hidden(net: &Network, l: usize, perm: &[usize]) -> Network {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    let (a, b) = (&layers[l], &layers[l + 1]);
    let entries_a = a.map.entries().iter().map(|&(i, j, v)| (perm[i], j, v)).collect();
    let mut bias_a = vec![0.0; perm.len()];
    for (i, &t) in perm.iter().enumerate() {
        bias_a[t] = a.map.bias()[i];
    }
    let acts_a = a.activations.as_ref().map(|acts| {
        let mut out = acts.clone();
        for (i, &t) in perm.iter().enumerate() {
            out[t] = acts[i];
        }
        out
    });
    let entries_b = b.map.entries().iter().map(|&(i, j, v)| (i, perm[j], v)).collect();
    let map_a = AffineMap::new(a.map.rows(), a.map.cols(), entries_a, bias_a).unwrap();
    let map_b = AffineMap::new(b.map.rows(), b.map.cols(), entries_b, b.map.bias().to_vec()).unwrap();
    layers[l] = Layer { map: map_a, activations: acts_a };
    layers[l + 1].map = map_b;
    Network::new(net.r_class(), layers).unwrap()
}

fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eval_is_finite_and_deterministic(seed in any::<u64>(), r in 1u32..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, 2, 2, 5, r);
        let xs = points(&mut rng, 64);
        let a = net.eval_batch(&xs).unwrap();
        prop_assert!(a.iter().all(|v| v.is_finite()));
        prop_assert_eq!(&a, &net.eval_batch(&xs).unwrap());
        prop_assert_eq!(&a, &net.eval_batch_seq(&xs).unwrap());
    }

    #[test]
    fn hidden_permutation_keeps_weights_and_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, 2, 1, 4, 1);
        prop_assume!(net.depth() >= 2);
        let l = rng.gen_range(0..net.depth() - 1);
        let mut perm: Vec<usize> = (0..net.layers()[l].map.rows()).collect();
        perm.shuffle(&mut rng);
        let p = permute_hidden(&net, l, &perm);
        prop_assert_eq!(p.weight_count(), net.weight_count());
        let xs = points(&mut rng, 64);
        let (a, b) = (net.eval_batch(&xs).unwrap(), p.eval_batch(&xs).unwrap());
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn serialization_keeps_depth_weights_and_bits(seed in any::<u64>(), r in 1u32..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, 3, 2, 5, r);
        let back = Network::from_json_str(&net.to_json_string().unwrap()).unwrap();
        prop_assert_eq!(back.depth(), net.depth());
        prop_assert_eq!(back.weight_count(), net.weight_count());
        let xs = points(&mut rng, 30);
        prop_assert_eq!(back.eval_batch(&xs).unwrap(), net.eval_batch(&xs).unwrap());
    }

    #[test]
    fn add_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b, c] = [0, 1, 2].map(|_| random_network(&mut rng, 2, 1, 4, 1));
        let nested = add(&[add(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let flat = add(&[a, b, c]).unwrap();
        let xs = points(&mut rng, 64);
        for (u, v) in nested.eval_batch(&xs).unwrap().iter().zip(&flat.eval_batch(&xs).unwrap()) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn perfect_reconstruction_1d(seed in any::<u64>(), s in 0usize..4) {
        let sys = BiorthWaveletSystem::cdf(SYSTEMS[s].0, SYSTEMS[s].1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (res, margin) = (256usize, 24usize);
        let values: Vec<f64> = (0..res)
            .map(|i| if i < margin || i > res - margin { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let f = SampledField::new(1, 0.0, 1.0, res, values).unwrap();
        let back = synthesize(&analyze(&f, &sys, 2).unwrap(), &sys, 0.0, 1.0, res).unwrap();
        let err = f.sub(&back).unwrap().lp_norm(f64::INFINITY);
        prop_assert!(err <= 1e-10, "reconstruction error {err:e}");
    }

    #[test]
    fn nterm_error_non_increasing(
        seed in any::<u64>(),
        alpha in 0.8f64..3.0,
        p in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)],
    ) {
        let mut spec = TargetSpec::new(TargetKind::RandomSeries, alpha, p, 1).unwrap();
        spec.seed = seed;
        spec.j_max = 8;
        spec.theta = 1.0;
        let report = nterm_sweep(&spec, &[1, 4, 16, 64, 256]).unwrap();
        for w in report.rows.windows(2) {
            prop_assert!(w[1].error <= w[0].error + 1e-10, "{:?}", report.rows);
        }
    }
}

#[test]
fn perfect_reconstruction_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let res = 64usize;
    for (l, ld) in SYSTEMS {
        let sys = BiorthWaveletSystem::cdf(l, ld).unwrap();
        let values: Vec<f64> = (0..res * res)
            .map(|i| {
                let (a, b) = (i / res, i % res);
                let interior = [a, b].iter().all(|v| (20..=44).contains(v));
                if interior { rng.gen_range(-1.0..1.0) } else { 0.0 }
            })
            .collect();
        let f = SampledField::new(2, 0.0, 1.0, res, values).unwrap();
        let back = synthesize(&analyze(&f, &sys, 1).unwrap(), &sys, 0.0, 1.0, res).unwrap();
        assert!(f.sub(&back).unwrap().lp_norm(f64::INFINITY) <= 1e-10);
    }
}

#[test]
fn partition_of_unity() {
    for (l, ld) in SYSTEMS {
        let sys = BiorthWaveletSystem::cdf(l, ld).unwrap();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let sum: f64 = (-8..=8).map(|k| sys.phi().eval(x - k as f64)).sum();
            assert!((sum - 1.0).abs() <= 1e-12, "CDF({l},{ld}) at {x}: {sum}");
        }
    }
}

#[test]
fn repu_weights_fixed_relu_weights_grow_in_accuracy() {
    let sys = BiorthWaveletSystem::cdf(3, 3).unwrap();
    let lambda = LambdaIndex::new(vec![1, 1], 2, vec![1, 1]).unwrap();
    let count = |eps: f64, r| wavelet_network(&lambda, &sys, eps, 2.0, r).unwrap().weight_count();
    let epsilons = [1e-2, 1e-3, 1e-4, 1e-5];
    let repu: Vec<usize> = epsilons.iter().map(|&e| count(e, 2)).collect();
    let relu: Vec<usize> = epsilons.iter().map(|&e| count(e, 1)).collect();
    assert!(repu.iter().all(|&w| w == repu[0]), "{repu:?}");
    assert!(relu.windows(2).all(|w| w[0] < w[1]), "{relu:?}");
    let logs: Vec<f64> = epsilons.iter().map(|e| (1.0 / e).ln()).collect();
    let ws: Vec<f64> = relu.iter().map(|&w| w as f64).collect();
    let fit = besovnet::harness::fit_line(&logs, &ws).unwrap();
    assert!(fit.r_squared >= 0.95, "R² {}", fit.r_squared);
}
