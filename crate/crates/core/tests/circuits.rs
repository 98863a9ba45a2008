use mpskit::circuit::*;
use mpskit::generation::*;
use mpskit::linalg::{self, cr, Mat, C64};
use mpskit::mps::{self, to_dense, Chain, ObcMps, DEFAULT_DENSE_CAP};
use mpskit::states::sigma_x;
use mpskit::tensor::SiteTensor;
use mpskit::{build_state, MpsError, StateName};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_circuits_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for trial in 0..12 {
        let n = rng.random_range(8..=10);
        let c = random_circuit(&mut rng, n, 6, 2 * n).unwrap();
        let r = simulate(&c, 1 << 10).unwrap();
        let a = to_dense(r.state.as_ref().unwrap(), DEFAULT_DENSE_CAP).unwrap();
        let b = c.dense_output(DEFAULT_DENSE_CAP).unwrap();
        let f = fidelity(&a, &b);
        assert!(1.0 - f < 1e-10, "trial {trial}: {f}");
        assert!(r.stats.involvement.iter().all(|&k| k <= 6 + 3));
    }
}

#[test]
fn truncated_simulation_accounting() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let c = random_circuit(&mut rng, 8, 6, 16).unwrap();
        let exact = c.dense_output(DEFAULT_DENSE_CAP).unwrap();
        for d_max in [2, 4, 8] {
            let r = simulate(&c, d_max).unwrap();
            assert!(r.max_bond <= d_max);
            let a = to_dense(r.state.as_ref().unwrap(), DEFAULT_DENSE_CAP).unwrap();
            let infid = 1.0 - fidelity(&a, &exact);
            assert!(infid <= 2.0 * r.discarded_weight + 1e-10, "D={d_max}: {infid} vs {}", r.discarded_weight);
        }
    }
}

#[test]
fn routed_eight_qubit_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c = random_circuit(&mut rng, 8, 6, 16).unwrap();
    let routed = route_long_range(&c).unwrap();
    let expected: usize = c.gates.iter().map(|g| if g.distance() > 1 { 2 * g.distance() - 1 } else { 1 }).sum();
    assert_eq!(routed.gates.len(), expected);
    for col in [0usize, 3, 77, 255] {
        let mut e = Array1::<C64>::zeros(256);
        e[col] = cr(1.0);
        let a = c.apply_dense(&e).unwrap();
        let b = routed.apply_dense(&e).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < 1e-10));
    }
}

#[test]
fn ghz_circuit_bond_two() {
    let r = simulate(&ghz_circuit(8).unwrap(), 64).unwrap();
    assert_eq!(r.max_bond, 2);
    let target = to_dense(&build_state(StateName::Ghz, 8).unwrap(), DEFAULT_DENSE_CAP).unwrap();
    let a = to_dense(r.state.as_ref().unwrap(), DEFAULT_DENSE_CAP).unwrap();
    assert!(1.0 - fidelity(&a, &target) < 1e-12);
}

#[test]
fn gate_growth_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sites: Vec<SiteTensor> = [1, 3, 3, 3, 1]
        .windows(2)
        .map(|w| SiteTensor::from_matrices(&[linalg::random_complex(&mut rng, w[0], w[1]), linalg::random_complex(&mut rng, w[0], w[1])]).unwrap())
        .collect();
    let m = ObcMps::new(sites, cr(1.0)).unwrap();
    let g = Gate::new(linalg::haar_unitary(&mut rng, 4), vec![1, 2], 2).unwrap();
    let (out, _) = apply_gate(&m, &g, 64).unwrap();
    assert!(out.max_bond() <= 12);
    assert!(apply_gate(&m, &Gate::new(linalg::haar_unitary(&mut rng, 4), vec![0, 2], 2).unwrap(), 64).is_err());
}

#[test]
fn ghz_sampling() {
    let g = build_state(StateName::Ghz, 10).unwrap().to_obc().unwrap();
    let t = sample_measurements(&g, &vec![Mat::eye(2); 10], 10_000, 2024).unwrap();
    assert_eq!(t.counts.len(), 2);
    let f0 = t.frequency("0000000000");
    let f1 = t.frequency("1111111111");
    assert!((f0 + f1 - 1.0).abs() < 1e-12);
    let sigma = (0.25f64 / 10_000.0).sqrt();
    assert!((f0 - 0.5).abs() <= 3.0 * sigma, "{f0}");
}

#[test]
fn unnormalized_input_is_sampled() {
    let g = build_state(StateName::Ghz, 4).unwrap().to_obc().unwrap().with_prefactor(cr(3.0));
    let t = sample_measurements(&g, &vec![Mat::eye(2); 4], 100, 1).unwrap();
    let expect = mps::norm_sqr(&g).unwrap();
    assert!((t.input_norm_sqr - expect).abs() < 1e-9 * expect);
    assert!(expect > 2.0);
    assert_eq!(t.counts.values().sum::<usize>(), 100);
}

#[test]
fn sampling_matches_exact_marginals() {
    // X basis on a cluster: single-site X outcomes are uniform
    let c = linear_cluster(6).unwrap();
    let h = hadamard();
    let t = sample_measurements(&c, &vec![h; 6], 4000, 3).unwrap();
    let psi = to_dense(&c, 64).unwrap();
    let rotated = (0..6).fold(psi, |v, k| mps::apply_local(&v, 2, 6, &hadamard(), &[k]).unwrap());
    for (key, &count) in &t.counts {
        let idx = usize::from_str_radix(key, 2).unwrap();
        let p = rotated[idx].norm_sqr();
        let f = count as f64 / 4000.0;
        let sigma = (p * (1.0 - p) / 4000.0).sqrt();
        assert!((f - p).abs() <= 5.0 * sigma + 1e-12, "{key}: {f} vs {p}");
    }
}

#[test]
fn cluster_x_measurement_conditional_state() {
    let cl = build_state(StateName::Cluster, 8).unwrap().to_obc().unwrap();
    let dense = to_dense(&cl, DEFAULT_DENSE_CAP).unwrap();
    let nrm: f64 = dense.iter().map(|z| z.norm_sqr()).sum();
    let h = hadamard();
    for outcome in 0..2 {
        let (p, post) = measure_site(&cl, 3, &h, outcome).unwrap();
        let col = h.column(outcome).to_owned().insert_axis(ndarray::Axis(1));
        let proj = col.dot(&linalg::dag(&col));
        let expect = mps::apply_local(&dense, 2, 8, &proj, &[3]).unwrap();
        let pe: f64 = expect.iter().map(|z| z.norm_sqr()).sum::<f64>() / nrm;
        assert!((p - pe).abs() < 1e-12);
        let got = to_dense(&post, DEFAULT_DENSE_CAP).unwrap();
        assert!(1.0 - fidelity(&got, &expect) < 1e-10);
        assert!((mps::norm_sqr(&post).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn mbqc_z_plan_statistics() {
    let cl = linear_cluster(8).unwrap();
    let plan = MeasurementPlan {
        steps: (0..8).map(|k| MeasureStep { site: k, angle: 0.0, sign_from: vec![], shift_from: vec![], outcome: None, z_basis: true }).collect(),
        corrections: vec![],
    };
    let dense = to_dense(&cl, 256).unwrap();
    for seed in 0..5 {
        let t = simulate_measurement_based(&cl, &plan, seed).unwrap();
        let td = simulate_measurement_based_dense(&dense, 8, &plan, seed).unwrap();
        for (a, b) in t.records.iter().zip(&td.records) {
            assert_eq!(a.outcome, b.outcome);
            assert!((a.probability - 0.5).abs() < 1e-10);
            assert!((b.probability - 0.5).abs() < 1e-10);
        }
        assert!(t.max_bond <= 2);
    }
}

#[test]
fn mbqc_teleportation_random_outcomes() {
    let angles = [0.7, 1.9, -0.4];
    let r = 1.0 / 2f64.sqrt();
    let mut expect = Array1::from(vec![cr(r), cr(r)]);
    for phi in angles {
        expect = hadamard().dot(&phase(-phi).dot(&expect));
    }
    let plan = MeasurementPlan {
        steps: vec![
            MeasureStep { site: 0, angle: angles[0], sign_from: vec![], shift_from: vec![], outcome: None, z_basis: false },
            MeasureStep { site: 1, angle: angles[1], sign_from: vec![0], shift_from: vec![], outcome: None, z_basis: false },
            MeasureStep { site: 2, angle: angles[2], sign_from: vec![1], shift_from: vec![], outcome: None, z_basis: false },
        ],
        corrections: vec![Correction { site: 3, x_from: vec![0, 2], z_from: vec![1] }],
    };
    let cl = linear_cluster(4).unwrap();
    let dense = to_dense(&cl, 16).unwrap();
    for seed in 0..16 {
        let t = simulate_measurement_based(&cl, &plan, seed).unwrap();
        let td = simulate_measurement_based_dense(&dense, 4, &plan, seed).unwrap();
        let out = t.output.as_ref().unwrap();
        assert!(1.0 - fidelity(out, td.output.as_ref().unwrap()) < 1e-9);
        assert!(1.0 - fidelity(out, &expect) < 1e-9);
        assert_eq!(t.output_sites, vec![3]);
    }
}

#[test]
fn schedules_with_ancilla() {
    for (name, n) in [(StateName::W, 5), (StateName::Ghz, 6), (StateName::Aklt, 6), (StateName::Aklt, 4)] {
        let m = build_state(name, n).unwrap().to_obc().unwrap();
        let s = generation_schedule_with_ancilla(&m).unwrap();
        assert_eq!(s.steps.len(), n);
        assert!(1.0 - s.replay_fidelity < 1e-9, "{name}: {}", s.replay_fidelity);
        assert!(s.steps.iter().all(|st| st.isometry_residual < 1e-10 && linalg::unitarity_residual(&st.unitary) < 1e-10));
        assert!(ancilla_leakage(&s).unwrap() < 1e-10);
        // independent check of the replayed amplitudes
        let target = to_dense(&m, DEFAULT_DENSE_CAP).unwrap();
        assert!(1.0 - fidelity(&replay(&s).unwrap(), &target) < 1e-9);
    }
}

#[test]
fn schedules_without_ancilla() {
    let cl = linear_cluster(8).unwrap();
    let s = generation_schedule_no_ancilla(&cl).unwrap();
    assert_eq!(s.steps.len(), 7);
    assert!(s.steps.iter().all(|st| st.sites.len() == 2));
    assert!(1.0 - s.replay_fidelity < 1e-9);
    let g = build_state(StateName::Ghz, 6).unwrap().to_obc().unwrap();
    assert!(1.0 - generation_schedule_no_ancilla(&g).unwrap().replay_fidelity < 1e-9);
    // a product state needs no entangling work but still replays
    let p = ObcMps::product(&vec![vec![cr(0.6), cr(0.8)]; 4]).unwrap();
    assert!(1.0 - generation_schedule_no_ancilla(&p).unwrap().replay_fidelity < 1e-12);
}

#[test]
fn rank_three_rejected_without_ancilla() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let sites: Vec<SiteTensor> = [1, 2, 3, 3, 3, 2, 1]
        .windows(2)
        .map(|w| SiteTensor::from_matrices(&[linalg::random_complex(&mut rng, w[0], w[1]), linalg::random_complex(&mut rng, w[0], w[1])]).unwrap())
        .collect();
    let m = ObcMps::new(sites, cr(1.0)).unwrap();
    assert!(matches!(generation_schedule_no_ancilla(&m), Err(MpsError::OutsideClass(_))));
    let s = generation_schedule_with_ancilla(&m).unwrap();
    assert_eq!(s.ancilla_dim, 3);
    assert!(1.0 - s.replay_fidelity < 1e-9);
}

#[test]
fn single_site_gate_on_mps() {
    let m = linear_cluster(3).unwrap();
    let g = Gate::new(sigma_x(), vec![2], 2).unwrap();
    let (out, w) = apply_gate(&m, &g, 4).unwrap();
    assert_eq!(w, 0.0);
    let a = mps::apply_local(&to_dense(&m, 8).unwrap(), 2, 3, &sigma_x(), &[2]).unwrap();
    assert!(1.0 - fidelity(&a, &to_dense(&out, 8).unwrap()) < 1e-12);
    assert_eq!(out.n_sites(), 3);
}
