use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, MpsError, Result};
use crate::hamiltonian::{Boundary, LocalHamiltonian};
use crate::linalg::{self, cr, dag, kron, Mat, C64};
use crate::mps::ObcMps;
use crate::tensor::SiteTensor;

/// Matrix product operator: `w[k][a][b]` is the operator on site `k`
/// connecting bond states `a` and `b` (`None` for zero).
#[derive(Clone, Debug)]
pub struct Mpo {
    pub d: usize,
    pub w: Vec<Vec<Vec<Option<Mat>>>>,
}

impl Mpo {
    /// Nearest-neighbour open chain `Σ h_{j,j+1} + Σ f_j`. The two-site term
    /// is split as `h = Σ_k L_k ⊗ R_k` by an operator SVD.
    pub fn from_local(h: &LocalHamiltonian) -> Result<Self> {
        if h.l != 2 {
            return invalid("the variational solver needs a two-site term (regroup first)");
        }
        if h.boundary != Boundary::Obc {
            return invalid("the variational solver works on open chains");
        }
        let d = h.d;
        let n = h.n_sites;
        // reshuffle h[(i1 i2),(j1 j2)] into m[(i1 j1),(i2 j2)]
        let mut m = Mat::zeros((d * d, d * d));
        for i1 in 0..d {
            for i2 in 0..d {
                for j1 in 0..d {
                    for j2 in 0..d {
                        m[[i1 * d + j1, i2 * d + j2]] = h.term[[i1 * d + i2, j1 * d + j2]];
                    }
                }
            }
        }
        let (u, sv, vt) = linalg::svd_thin(&m)?;
        let r = linalg::rank_of(&sv, 1e-14);
        let unflat = |v: ndarray::ArrayView1<C64>| Mat::from_shape_fn((d, d), |(a, b)| v[a * d + b]);
        let lops: Vec<Mat> = (0..r).map(|k| unflat(u.column(k)).mapv(|z| z * sv[k].sqrt())).collect();
        let rops: Vec<Mat> = (0..r).map(|k| unflat(vt.row(k)).mapv(|z| z * sv[k].sqrt())).collect();
        let chi = r + 2;
        let last = chi - 1;
        let mut bulk: Vec<Vec<Option<Mat>>> = vec![vec![None; chi]; chi];
        bulk[0][0] = Some(Mat::eye(d));
        bulk[last][last] = Some(Mat::eye(d));
        for k in 0..r {
            bulk[0][1 + k] = Some(lops[k].clone());
            bulk[1 + k][last] = Some(rops[k].clone());
        }
        bulk[0][last] = h.onsite.clone();
        let mut w = Vec::with_capacity(n);
        for k in 0..n {
            let rows: Vec<usize> = if k == 0 { vec![0] } else { (0..chi).collect() };
            let cols: Vec<usize> = if k + 1 == n { vec![last] } else { (0..chi).collect() };
            w.push(rows.iter().map(|&a| cols.iter().map(|&b| bulk[a][b].clone()).collect()).collect());
        }
        Ok(Mpo { d, w })
    }

    pub fn n_sites(&self) -> usize {
        self.w.len()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalRun {
    #[serde(rename = "D")]
    pub bond: usize,
    pub sweeps: usize,
    /// Energy after every half-sweep.
    pub energies: Vec<f64>,
    /// Energy after every local solve.
    #[serde(skip)]
    pub local_energies: Vec<f64>,
    #[serde(skip)]
    pub state: ObcMps,
    pub converged: bool,
}

impl VariationalRun {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("at least one half-sweep")
    }

    /// Largest increase between consecutive local solves.
    pub fn max_increase(&self) -> f64 {
        self.local_energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("half_sweep,energy\n");
        for (i, e) in self.energies.iter().enumerate() {
            s.push_str(&format!("{},{:.17e}\n", i + 1, e));
        }
        s
    }
}

type Env = Vec<Mat>;

fn extend_left(env: &Env, a: &SiteTensor, w: &[Vec<Option<Mat>>]) -> Env {
    let d = a.d();
    let cols = w[0].len();
    let mut out = vec![Mat::zeros((a.d_right(), a.d_right())); cols];
    let adag: Vec<Mat> = (0..d).map(|i| dag(&a.mat(i).to_owned())).collect();
    for (wa, row) in w.iter().enumerate() {
        let la: Vec<Mat> = (0..d).map(|i| adag[i].dot(&env[wa])).collect();
        for (wb, op) in row.iter().enumerate() {
            let Some(op) = op else { continue };
            for i in 0..d {
                for j in 0..d {
                    let v = op[[i, j]];
                    if v != cr(0.0) {
                        out[wb] = &out[wb] + &la[i].dot(&a.mat(j)).mapv(|z| z * v);
                    }
                }
            }
        }
    }
    out
}

fn extend_right(env: &Env, a: &SiteTensor, w: &[Vec<Option<Mat>>]) -> Env {
    let d = a.d();
    let mut out = vec![Mat::zeros((a.d_left(), a.d_left())); w.len()];
    let aconj: Vec<Mat> = (0..d).map(|i| a.mat(i).mapv(|z| z.conj())).collect();
    for (wa, row) in w.iter().enumerate() {
        for (wb, op) in row.iter().enumerate() {
            let Some(op) = op else { continue };
            let ra: Vec<Mat> = (0..d).map(|i| aconj[i].dot(&env[wb])).collect();
            for i in 0..d {
                for j in 0..d {
                    let v = op[[i, j]];
                    if v != cr(0.0) {
                        out[wa] = &out[wa] + &ra[i].dot(&a.mat(j).t()).mapv(|z| z * v);
                    }
                }
            }
        }
    }
    out
}

/// Dense effective Hamiltonian on the `(i, α, β)` site space.
fn effective(left: &Env, right: &Env, w: &[Vec<Option<Mat>>], d: usize, dl: usize, dr: usize) -> Mat {
    let blk = dl * dr;
    let mut h = Mat::zeros((d * blk, d * blk));
    for (wa, row) in w.iter().enumerate() {
        for (wb, op) in row.iter().enumerate() {
            let Some(op) = op else { continue };
            let k = kron(&left[wa], &right[wb]);
            for i in 0..d {
                for j in 0..d {
                    let v = op[[i, j]];
                    if v != cr(0.0) {
                        let mut b = h.slice_mut(ndarray::s![i * blk..(i + 1) * blk, j * blk..(j + 1) * blk]);
                        b.zip_mut_with(&k, |x, y| *x += v * y);
                    }
                }
            }
        }
    }
    h
}

const LOCAL_DIM_MAX: usize = 4096;

/// Single-site alternating minimisation of `⟨ψ|H|ψ⟩` over open chains of bond
/// dimension `bond`. Each local problem is solved exactly by dense
/// diagonalisation in the mixed canonical gauge.
pub fn dmrg_ground_state(h: &LocalHamiltonian, bond: usize, max_sweeps: usize, tol_e: f64, seed: u64) -> Result<VariationalRun> {
    if bond < 1 || max_sweeps < 1 {
        return invalid("bond dimension and sweep count must be positive");
    }
    if crate::hamiltonian::hermiticity_residual(&h.term) > 1e-10 {
        return invalid("term is not Hermitian");
    }
    let mpo = Mpo::from_local(h)?;
    let n = mpo.n_sites();
    let d = mpo.d;
    if n < 2 {
        return invalid("need at least two sites");
    }
    let dims: Vec<usize> = (0..=n)
        .map(|k| {
            let edge = k.min(n - k) as u32;
            d.checked_pow(edge).unwrap_or(usize::MAX).min(bond)
        })
        .collect();
    if (0..n).any(|k| d * dims[k] * dims[k + 1] > LOCAL_DIM_MAX) {
        return invalid(format!("local problem exceeds {LOCAL_DIM_MAX} dimensions"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<SiteTensor> = (0..n)
        .map(|k| {
            let mats: Vec<Mat> = (0..d).map(|_| linalg::random_complex(&mut rng, dims[k], dims[k + 1])).collect();
            SiteTensor::from_matrices(&mats)
        })
        .collect::<Result<_>>()?;
    // right-normalise everything but site 0
    for k in (1..n).rev() {
        let (u, sv, vt) = linalg::svd_thin(&sites[k].unfold_right())?;
        sites[k] = SiteTensor::from_unfold_right(&vt, d)?;
        let mut us = u;
        for j in 0..sv.len() {
            us.column_mut(j).mapv_inplace(|x| x * sv[j]);
        }
        sites[k - 1] = sites[k - 1].mul_right(&us)?;
    }
    let nrm = linalg::fro_norm(&sites[0].unfold_right());
    sites[0] = sites[0].scaled(cr(1.0 / nrm));

    let unit = || vec![Mat::eye(1)];
    let mut right: Vec<Env> = vec![Vec::new(); n + 1];
    right[n] = unit();
    for k in (1..n).rev() {
        right[k] = extend_right(&right[k + 1], &sites[k], &mpo.w[k]);
    }
    let mut left: Vec<Env> = vec![Vec::new(); n + 1];
    left[0] = unit();

    let mut energies = Vec::new();
    let mut local = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let solve = |left: &Env, right: &Env, k: usize, t: &SiteTensor| -> Result<(f64, SiteTensor)> {
        let heff = effective(left, right, &mpo.w[k], d, t.d_left(), t.d_right());
        let (w, v) = linalg::eigh(&heff)?;
        if !w[0].is_finite() {
            return Err(MpsError::Numerical("local eigenproblem diverged".into()));
        }
        let data = ndarray::Array3::from_shape_vec((d, t.d_left(), t.d_right()), v.column(0).to_vec())
            .map_err(|e| MpsError::Numerical(e.to_string()))?;
        Ok((w[0], SiteTensor::new(data)?))
    };
    let mut prev_sweep = f64::INFINITY;
    for _ in 0..max_sweeps {
        sweeps += 1;
        for k in 0..n - 1 {
            let (e, t) = solve(&left[k], &right[k + 1], k, &sites[k])?;
            local.push(e);
            let (u, sv, vt) = linalg::svd_thin(&t.unfold_left())?;
            sites[k] = SiteTensor::from_unfold_left(&u, d)?;
            let mut svt = vt;
            for j in 0..sv.len() {
                svt.row_mut(j).mapv_inplace(|x| x * sv[j]);
            }
            sites[k + 1] = sites[k + 1].mul_left(&svt)?;
            left[k + 1] = extend_left(&left[k], &sites[k], &mpo.w[k]);
        }
        energies.push(*local.last().expect("n >= 2"));
        for k in (1..n).rev() {
            let (e, t) = solve(&left[k], &right[k + 1], k, &sites[k])?;
            local.push(e);
            let (u, sv, vt) = linalg::svd_thin(&t.unfold_right())?;
            sites[k] = SiteTensor::from_unfold_right(&vt, d)?;
            let mut us = u;
            for j in 0..sv.len() {
                us.column_mut(j).mapv_inplace(|x| x * sv[j]);
            }
            sites[k - 1] = sites[k - 1].mul_right(&us)?;
            right[k] = extend_right(&right[k + 1], &sites[k], &mpo.w[k]);
        }
        let e = *local.last().expect("n >= 2");
        energies.push(e);
        if (prev_sweep - e).abs() <= tol_e * e.abs().max(1.0) {
            converged = true;
            break;
        }
        prev_sweep = e;
    }
    let state = ObcMps::new(sites, cr(1.0))?;
    Ok(VariationalRun { bond, sweeps, energies, local_energies: local, state, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{self, transverse_ising};
    use crate::mps::{to_dense, DEFAULT_DENSE_CAP};

    #[test]
    fn mpo_matches_dense() {
        let h = transverse_ising(4, 0.8, Boundary::Obc).unwrap();
        let mpo = Mpo::from_local(&h).unwrap();
        // contract the MPO into a dense matrix
        let mut acc: Vec<Mat> = vec![Mat::eye(1)];
        for w in &mpo.w {
            let cols = w[0].len();
            let mut next = vec![Mat::zeros((acc[0].nrows() * 2, acc[0].ncols() * 2)); cols];
            for (a, row) in w.iter().enumerate() {
                for (b, op) in row.iter().enumerate() {
                    if let Some(op) = op {
                        next[b] = &next[b] + &kron(&acc[a], op);
                    }
                }
            }
            acc = next;
        }
        let dense = hamiltonian::dense_matrix(&h, 1 << 10).unwrap();
        assert!(linalg::fro_norm(&(&acc[0] - &dense)) < 1e-12);
    }

    #[test]
    fn small_tfim_exact() {
        let h = transverse_ising(6, 1.0, Boundary::Obc).unwrap();
        let run = dmrg_ground_state(&h, 8, 10, 1e-12, 1).unwrap();
        let (w, _) = linalg::eigh(&hamiltonian::dense_matrix(&h, 1 << 10).unwrap()).unwrap();
        assert!((run.final_energy() - w[0]).abs() < 1e-10);
        assert!(run.max_increase() < 1e-12);
        let psi = to_dense(&run.state, DEFAULT_DENSE_CAP).unwrap();
        assert!((hamiltonian::energy(&h, &psi).unwrap() - w[0]).abs() < 1e-10);
    }
}
