use mpskit::canonical::{canonical_residuals, gauge_to_canonical};
use mpskit::circuit::{fidelity, random_circuit, route_long_range};
use mpskit::compress::{check_tail_bound, truncate};
use mpskit::generation::generation_schedule_with_ancilla;
use mpskit::io::{mps_from_json, mps_to_json};
use mpskit::linalg::{self, cr, Mat, C64};
use mpskit::mps::{amplitude, index_to_string, to_dense, Chain, ObcMps, DEFAULT_DENSE_CAP};
use mpskit::{AnyMps, SiteTensor, TiMps};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_obc(seed: u64, n: usize, d: usize, bond: usize) -> ObcMps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![1usize; n + 1];
    for (k, dim) in dims.iter_mut().enumerate().take(n).skip(1) {
        *dim = bond.min(d.pow(k.min(n - k) as u32));
    }
    let sites = (0..n)
        .map(|k| {
            let mats: Vec<Mat> = (0..d).map(|_| linalg::random_complex(&mut rng, dims[k], dims[k + 1])).collect();
            SiteTensor::from_matrices(&mats).unwrap()
        })
        .collect();
    ObcMps::new(sites, cr(1.0)).unwrap()
}

fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauge_insertions_leave_state_unchanged(seed in any::<u64>(), n in 2usize..7, d in 2usize..4, bond in 1usize..5) {
        let m = random_obc(seed, n, d, bond);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut sites = m.sites().to_vec();
        for k in 0..n - 1 {
            let dim = sites[k].d_right();
            let x = linalg::random_complex(&mut rng, dim, dim);
            let xi = linalg::inv(&x).unwrap();
            sites[k] = sites[k].mul_right(&x).unwrap();
            sites[k + 1] = sites[k + 1].mul_left(&xi).unwrap();
        }
        let g = ObcMps::new(sites, m.prefactor()).unwrap();
        let a = to_dense(&m, DEFAULT_DENSE_CAP).unwrap();
        let b = to_dense(&g, DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(max_rel(a.as_slice().unwrap(), b.as_slice().unwrap()) < 1e-10);
    }

    #[test]
    fn canonical_form_is_exact_and_equivalent(seed in any::<u64>(), n in 1usize..8, d in 2usize..4, bond in 1usize..6) {
        let m = random_obc(seed, n, d, bond);
        let (c, _) = gauge_to_canonical(&m).unwrap();
        let r = canonical_residuals(&c).unwrap();
        prop_assert!(r.isometry < 1e-10 && r.lambda_recursion < 1e-10 && r.trace_error < 1e-10);
        prop_assert!(r.sorted && r.min_lambda > 0.0);
        let a = to_dense(&m, DEFAULT_DENSE_CAP).unwrap();
        let b = to_dense(&c, DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(max_rel(a.as_slice().unwrap(), b.as_slice().unwrap()) < 1e-10);
    }

    #[test]
    fn ti_amplitudes_are_cyclic(seed in any::<u64>(), n in 2usize..7, dim in 1usize..4, idx in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats: Vec<Mat> = (0..2).map(|_| linalg::random_complex(&mut rng, dim, dim)).collect();
        let t = TiMps::new(SiteTensor::from_matrices(&mats).unwrap(), n, cr(1.0)).unwrap();
        let s = index_to_string(idx % (1 << n), 2, n);
        let mut rotated = s.clone();
        rotated.rotate_left(1);
        let a = amplitude(&t, &s).unwrap();
        let b = amplitude(&t, &rotated).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn truncation_error_within_tail_bound(seed in any::<u64>(), n in 2usize..9, keep in 1usize..8) {
        let m = random_obc(seed, n, 2, 8);
        let (_, rep) = truncate(&m, keep).unwrap();
        prop_assert!(rep.measured <= rep.bound + 1e-12);
    }

    #[test]
    fn renyi_tail_bound_holds(raw in prop::collection::vec(1e-6f64..1.0, 1..40), alpha in 0.05f64..0.99, keep in 1usize..40) {
        let t: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|x| x / t).collect();
        p.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let c = check_tail_bound(&p, alpha, keep.min(p.len())).unwrap();
        prop_assert!(c.holds, "{:?}", c);
    }

    #[test]
    fn routing_preserves_circuit_action(seed in any::<u64>(), n in 3usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, 3, n).unwrap();
        let r = route_long_range(&c).unwrap();
        prop_assert!(r.gates.iter().all(|g| g.distance() <= 1));
        let a = c.dense_output(DEFAULT_DENSE_CAP).unwrap();
        let b = r.dense_output(DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(1.0 - fidelity(&a, &b) < 1e-10);
    }

    #[test]
    fn generation_schedule_replays_state(seed in any::<u64>(), n in 1usize..6, d in 2usize..4, bond in 1usize..4) {
        let m = random_obc(seed, n, d, bond);
        let s = generation_schedule_with_ancilla(&m).unwrap();
        prop_assert!(1.0 - s.replay_fidelity < 1e-9);
    }

    #[test]
    fn mpsjson_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..6, d in 2usize..4, bond in 1usize..4) {
        let m = AnyMps::Obc(random_obc(seed, n, d, bond).with_prefactor(C64::new(0.3, -1.7)));
        let back = mps_from_json(&mps_to_json(&m).unwrap()).unwrap();
        let (AnyMps::Obc(a), AnyMps::Obc(b)) = (&m, &back) else { panic!("kind changed") };
        prop_assert_eq!(a.prefactor(), b.prefactor());
        for (x, y) in a.sites().iter().zip(b.sites()) {
            prop_assert_eq!(x, y);
        }
    }
}
