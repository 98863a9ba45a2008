use mpskit::canonical::tensor_blocks;
use mpskit::compress::*;
use mpskit::hamiltonian::{self, transverse_ising, Boundary, LocalHamiltonian};
use mpskit::linalg::{self, C64};
use mpskit::mps::{from_dense, to_dense, DEFAULT_DENSE_CAP};
use mpskit::parent::parent_hamiltonian;
use mpskit::states;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    linalg::random_complex(rng, len, 1).iter().copied().collect()
}

fn ed_ground(h: &LocalHamiltonian) -> (f64, Vec<C64>) {
    let (w, v) = linalg::eigh(&hamiltonian::dense_matrix(h, DEFAULT_DENSE_CAP).unwrap()).unwrap();
    (w[0], v.column(0).to_vec())
}

#[test]
fn truncation_bound_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for _ in 0..20 {
        let psi = random_state(&mut rng, 1 << 10);
        let m = from_dense(&psi, 2, 1e-14).unwrap();
        let dense = to_dense(&m, DEFAULT_DENSE_CAP).unwrap();
        let nrm: f64 = dense.iter().map(|z| z.norm_sqr()).sum();
        let mut prev: Option<Vec<f64>> = None;
        for d in 1..=32 {
            let (_, rep) = truncate(&m, d).unwrap();
            assert!(rep.measured <= rep.bound + 1e-9, "D={d}: {} > {}", rep.measured, rep.bound);
            if let Some(p) = &prev {
                assert!(rep.tails.iter().zip(p).all(|(a, b)| *a <= *b + 1e-15));
            }
            prev = Some(rep.tails.clone());
            // cross-check against the unrenormalised truncation, densely
            if d == 4 {
                let canon = mpskit::canonical::gauge_to_canonical(&m).unwrap().0;
                let (out, rep) = truncate(&canon, d).unwrap();
                let v = to_dense(&out, DEFAULT_DENSE_CAP).unwrap().mapv(|z| z / rep.renormalization);
                let err: f64 = dense.iter().zip(v.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / nrm;
                assert!((err - rep.measured).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn full_bond_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = from_dense(&random_state(&mut rng, 1 << 6), 2, 1e-14).unwrap();
    let (out, rep) = truncate(&m, 8).unwrap();
    assert_eq!(rep.bound, 0.0);
    assert!(rep.measured < 1e-14);
    let a = to_dense(&m, DEFAULT_DENSE_CAP).unwrap();
    let b = to_dense(&out, DEFAULT_DENSE_CAP).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < 1e-12));
}

#[test]
fn renyi_tail_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..200 {
        let len = rng.random_range(1..=64);
        let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powi(4)).collect();
        let t: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / t).collect();
        for alpha in [0.3, 0.5, 0.9] {
            for d in 1..=len {
                assert!(check_tail_bound(&p, alpha, d).unwrap().holds);
            }
        }
        let a = renyi_entropy(&p, 0.3).unwrap();
        let b = renyi_entropy(&p, 0.9).unwrap();
        let c = renyi_entropy(&p, 1.0).unwrap();
        assert!(a >= b - 1e-12 && b >= c - 1e-12);
    }
}

#[test]
fn dmrg_transverse_ising() {
    let h = transverse_ising(10, 1.0, Boundary::Obc).unwrap();
    let (e0, gs) = ed_ground(&h);
    let run = dmrg_ground_state(&h, 16, 20, 1e-12, 7).unwrap();
    assert!((run.final_energy() - e0).abs() < 1e-8, "{} vs {e0}", run.final_energy());
    assert!(run.sweeps <= 20);
    assert!(run.max_increase() <= 1e-12);
    assert!(run.final_energy() >= e0 - 1e-9);
    // no worse than the truncated exact ground state
    let (cut, _) = truncate(&from_dense(&gs, 2, 1e-14).unwrap(), 16).unwrap();
    let e_cut = hamiltonian::energy(&h, &to_dense(&cut, DEFAULT_DENSE_CAP).unwrap()).unwrap();
    assert!(run.final_energy() <= e_cut + 1e-8);
}

#[test]
fn dmrg_complete_ansatz() {
    let h = transverse_ising(8, 0.6, Boundary::Obc).unwrap();
    let (e0, _) = ed_ground(&h);
    let run = dmrg_ground_state(&h, 16, 20, 1e-13, 2).unwrap();
    assert!((run.final_energy() - e0).abs() < 1e-10);
}

#[test]
fn dmrg_aklt_parent() {
    let blocks = tensor_blocks(&states::aklt_tensor()).unwrap();
    let h = parent_hamiltonian(&blocks, 2, 8, Boundary::Obc, DEFAULT_DENSE_CAP).unwrap();
    let run = dmrg_ground_state(&h, 4, 20, 1e-12, 11).unwrap();
    assert!(run.final_energy() <= 1e-9, "{}", run.final_energy());
    assert!(run.max_increase() <= 1e-12);
}

#[test]
fn scaling_probe_tables() {
    let gapped = |n: usize| transverse_ising(n, 2.0, Boundary::Obc);
    let t = critical_scaling_probe(&gapped, &[4, 6, 8, 10], 1e-3).unwrap();
    let ds: Vec<usize> = t.rows.iter().map(|r| r.d_l).collect();
    assert!(ds.windows(2).all(|w| w[0] == w[1]), "{ds:?}");

    let critical = |n: usize| transverse_ising(n, 1.0, Boundary::Obc);
    let t = critical_scaling_probe(&critical, &[4, 6, 8, 10], 1e-3).unwrap();
    let ds: Vec<usize> = t.rows.iter().map(|r| r.d_l).collect();
    assert!(ds.windows(2).all(|w| w[0] <= w[1]), "{ds:?}");
    assert!(t.slope.is_some());

    let product = |n: usize| {
        LocalHamiltonian::new(linalg::zeros(4, 4), 2, n, Boundary::Obc)?.with_onsite(states::sigma_z().mapv(|z| -z))
    };
    let t = critical_scaling_probe(&product, &[4, 6, 8, 10], 1e-3).unwrap();
    assert!(t.rows.iter().all(|r| r.d_l == 1));
}
