use ndarray::s;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, MpsError, Result};
use crate::linalg::{self, cr, dag, eye, fro_norm, Mat, C64};
use crate::mps::{self, CanonicalFlag, Chain, ObcMps, TiMps};
use crate::tensor::SiteTensor;

/// Relative cutoff on bond spectra below which a direction counts as zero.
const LAMBDA_TOL: f64 = 1e-13;

/// Gauge matrices relating input `A` and output `B`: `B[k] = y[k] A[k] z[k+1]`
/// with `y[k] z[k] = 𝟙`. Entries `0` and `N` are the 1x1 boundary factors.
#[derive(Clone, Debug)]
pub struct GaugeRecord {
    pub y: Vec<Mat>,
    pub z: Vec<Mat>,
}

impl GaugeRecord {
    /// Largest ‖y_k z_k − 𝟙‖_F.
    pub fn inverse_residual(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.z)
            .map(|(y, z)| fro_norm(&(y.dot(z) - eye(y.nrows()))))
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `y[k] A[k] z[k+1]` from `B[k]`.
    pub fn reconstruction_residual(&self, input: &ObcMps, output: &ObcMps) -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, (a, b)) in input.sites().iter().zip(output.sites()).enumerate() {
            let t = a.sandwich(&self.y[k], &self.z[k + 1])?;
            worst = worst.max(t.max_abs_diff(b));
        }
        Ok(worst)
    }
}

/// Bring an open chain to full canonical form.
///
/// Right-to-left SVD sweep so that Σ_i A_i A_i† = 𝟙 on every site, then a
/// left-to-right sweep diagonalising Λ^[m] = Σ_i A_i† Λ^[m−1] A_i and
/// projecting out the kernel of any singular Λ^[m]. Site phases follow the
/// crate convention and are compensated in the prefactor.
pub fn gauge_to_canonical(mps: &ObcMps) -> Result<(ObcMps, GaugeRecord)> {
    let n = mps.n_sites();
    let d = mps.phys_dim();
    let mut cur: Vec<SiteTensor> = mps.sites().to_vec();
    let mut y: Vec<Mat> = (0..=n).map(|k| eye(mps.bond_dims()[k])).collect();
    let mut z = y.clone();

    for k in (1..n).rev() {
        let m = cur[k].unfold_right();
        let (u, sv, vt) = linalg::svd_thin(&m)?;
        let r = linalg::rank_of(&sv, linalg::TOL_RANK);
        if r == 0 {
            return invalid("cannot canonicalise the zero state");
        }
        cur[k] = SiteTensor::from_unfold_right(&vt.slice(s![..r, ..]).to_owned(), d)?;
        let mut zk = u.slice(s![.., ..r]).to_owned();
        let mut yk = dag(&zk);
        for j in 0..r {
            zk.column_mut(j).mapv_inplace(|x| x * sv[j]);
            yk.row_mut(j).mapv_inplace(|x| x / sv[j]);
        }
        cur[k - 1] = cur[k - 1].mul_right(&zk)?;
        y[k] = yk;
        z[k] = zk;
    }
    let c0 = fro_norm(&cur[0].unfold_right());
    if c0 == 0.0 {
        return invalid("cannot canonicalise the zero state");
    }
    cur[0] = cur[0].scaled(cr(1.0 / c0));

    let mut schmidt = Vec::with_capacity(n.saturating_sub(1));
    let mut lam_prev = eye(1);
    for m in 0..n.saturating_sub(1) {
        let r = cur[m].dual_map(&lam_prev);
        let (w, v) = linalg::eigh(&r)?;
        let order: Vec<usize> = (0..w.len()).rev().collect();
        let wmax = w.last().copied().unwrap_or(0.0);
        let keep: Vec<usize> = order.iter().copied().filter(|&j| w[j] > LAMBDA_TOL * wmax).collect();
        if keep.is_empty() {
            return invalid("cannot canonicalise the zero state");
        }
        let mut p = v.select(ndarray::Axis(1), &keep);
        // fix column phases against the accumulated gauge so canonical inputs
        // come back unchanged
        let total = z[m + 1].dot(&p);
        for j in 0..p.ncols() {
            let col = total.column(j);
            let max = col.iter().fold(0.0f64, |a, x| a.max(x.norm()));
            if let Some(pick) = col.iter().find(|x| x.norm() >= max * (1.0 - 1e-12)) {
                if pick.norm() > 0.0 {
                    let ph = pick.conj() / pick.norm();
                    p.column_mut(j).mapv_inplace(|x| x * ph);
                }
            }
        }
        cur[m] = cur[m].mul_right(&p)?;
        cur[m + 1] = cur[m + 1].mul_left(&dag(&p))?;
        z[m + 1] = z[m + 1].dot(&p);
        y[m + 1] = dag(&p).dot(&y[m + 1]);
        let lam: Vec<f64> = keep.iter().map(|&j| w[j]).collect();
        lam_prev = Mat::from_diag(&ndarray::Array1::from_iter(lam.iter().map(|&x| cr(x))));
        schmidt.push(lam);
    }

    // per-site scalars f_k (B[k] = f_k y A z) absorbed as y[k] *= a_k, z[k] /= a_k
    let mut f: Vec<C64> = vec![cr(1.0); n];
    f[0] = cr(1.0 / c0);
    for k in 0..n {
        let ph = cur[k].phase_anchor();
        cur[k] = cur[k].scaled(ph.conj());
        f[k] *= ph.conj();
    }
    let mut a = vec![cr(1.0); n + 1];
    for k in (0..n).rev() {
        a[k] = f[k] * a[k + 1];
    }
    for k in 0..=n {
        y[k].mapv_inplace(|x| x * a[k]);
        z[k].mapv_inplace(|x| x / a[k]);
    }
    let prefactor = mps.prefactor() / a[0];
    for lam in schmidt.iter_mut() {
        let t: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|x| *x /= t);
    }
    let out = ObcMps::new(cur, prefactor)?.with_canonical(Some(schmidt), CanonicalFlag::FullCanonical)?;
    Ok((out, GaugeRecord { y, z }))
}

/// Residuals of the canonical conditions: max over sites of
/// ‖Σ A A† − 𝟙‖, max over bonds of ‖Σ A† Λ A − Λ‖, and the smallest bond
/// value (positive when every Λ is full rank).
#[derive(Clone, Copy, Debug)]
pub struct CanonicalResiduals {
    pub isometry: f64,
    pub lambda_recursion: f64,
    pub trace_error: f64,
    pub min_lambda: f64,
    pub sorted: bool,
}

pub fn canonical_residuals(mps: &ObcMps) -> Result<CanonicalResiduals> {
    let Some(schmidt) = mps.schmidt() else {
        return Err(MpsError::InvalidInput("state carries no bond spectra".into()));
    };
    let mut iso = 0.0f64;
    let mut rec = 0.0f64;
    let mut tr = 0.0f64;
    let mut min_l = f64::INFINITY;
    let mut sorted = true;
    let mut prev = eye(1);
    let n = mps.n_sites();
    for k in 0..n {
        let s = &mps.sites()[k];
        iso = iso.max(s.isometry_residual());
        let next = if k + 1 < n {
            let lam = &schmidt[k];
            sorted &= lam.windows(2).all(|w| w[0] >= w[1]);
            min_l = min_l.min(lam.iter().copied().fold(f64::INFINITY, f64::min));
            tr = tr.max((lam.iter().sum::<f64>() - 1.0).abs());
            Mat::from_diag(&ndarray::Array1::from_iter(lam.iter().map(|&x| cr(x))))
        } else {
            eye(1)
        };
        rec = rec.max(fro_norm(&(s.dual_map(&prev) - &next)));
        prev = next;
    }
    Ok(CanonicalResiduals { isometry: iso, lambda_recursion: rec, trace_error: tr, min_lambda: min_l, sorted })
}

/// Check translation invariance of an open chain's amplitudes: every string
/// when `d^N <= 4096`, otherwise `samples` random strings.
pub fn is_translation_invariant(chain: &dyn Chain, samples: usize, seed: u64, tol: f64) -> Result<bool> {
    let n = chain.n_sites();
    let d = chain.phys_dim();
    let total = mps::dense_len(d, n);
    let mut strings: Vec<Vec<usize>> = Vec::new();
    if total <= 4096 {
        for idx in 0..total as usize {
            strings.push(mps::index_to_string(idx, d, n));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            strings.push((0..n).map(|_| rng.random_range(0..d)).collect());
        }
    }
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for s in &strings {
        let a = mps::amplitude(chain, s)?;
        let mut t = s.clone();
        t.rotate_left(1);
        let b = mps::amplitude(chain, &t)?;
        scale = scale.max(a.norm());
        worst = worst.max((a - b).norm());
    }
    Ok(worst <= tol * scale.max(f64::MIN_POSITIVE))
}

/// Site-independent representation of an open chain via block-cyclic
/// matrices of size `N * D` (every bond zero-padded to the largest `D`).
pub fn ti_from_obc(mps: &ObcMps, require_pbc_state: bool) -> Result<TiMps> {
    let n = mps.n_sites();
    if n < 2 {
        return invalid("need at least 2 sites");
    }
    if require_pbc_state && !is_translation_invariant(mps, 256, 0x7157, 1e-10)? {
        return invalid("state is not translation invariant");
    }
    let dmax = mps.max_bond();
    let d = mps.phys_dim();
    let big = n * dmax;
    let scale = (n as f64).powf(-1.0 / n as f64);
    let mut mats = vec![Mat::zeros((big, big)); d];
    for (k, site) in mps.sites().iter().enumerate() {
        let padded = site.padded(dmax, dmax)?;
        let r0 = k * dmax;
        let c0 = ((k + 1) % n) * dmax;
        for (i, m) in mats.iter_mut().enumerate() {
            m.slice_mut(s![r0..r0 + dmax, c0..c0 + dmax]).assign(&padded.mat(i).mapv(|x| x * scale));
        }
    }
    TiMps::new(SiteTensor::from_matrices(&mats)?, n, mps.prefactor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_complex;
    use crate::mps::{from_dense, to_dense, DEFAULT_DENSE_CAP};
    use crate::states::{build_state, StateName};

    fn random_obc(seed: u64, n: usize, d: usize, bond: usize) -> ObcMps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sites = Vec::new();
        for k in 0..n {
            let dl = if k == 0 { 1 } else { bond };
            let dr = if k + 1 == n { 1 } else { bond };
            let mats: Vec<Mat> = (0..d).map(|_| random_complex(&mut rng, dl, dr)).collect();
            sites.push(SiteTensor::from_matrices(&mats).unwrap());
        }
        ObcMps::new(sites, cr(0.3)).unwrap()
    }

    fn max_diff(a: &dyn Chain, b: &dyn Chain) -> f64 {
        let x = to_dense(a, DEFAULT_DENSE_CAP).unwrap();
        let y = to_dense(b, DEFAULT_DENSE_CAP).unwrap();
        let scale = x.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn gauge_preserves_state_and_records() {
        let m = random_obc(4, 6, 2, 3);
        let (c, rec) = gauge_to_canonical(&m).unwrap();
        assert!(max_diff(&m, &c) < 1e-12);
        assert!(rec.inverse_residual() < 1e-10);
        assert!(rec.reconstruction_residual(&m, &c).unwrap() < 1e-10);
        let r = canonical_residuals(&c).unwrap();
        assert!(r.isometry < 1e-10 && r.lambda_recursion < 1e-10 && r.min_lambda > 0.0);
    }

    #[test]
    fn canonical_input_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi: Vec<C64> = random_complex(&mut rng, 64, 1).iter().copied().collect();
        let m = from_dense(&psi, 2, 1e-12).unwrap();
        let (c, rec) = gauge_to_canonical(&m).unwrap();
        for (a, b) in m.sites().iter().zip(c.sites()) {
            assert!(a.max_abs_diff(b) < 1e-10, "{}", a.max_abs_diff(b));
        }
        for (y, z) in rec.y.iter().zip(&rec.z) {
            assert!(linalg::unitarity_residual(y) < 1e-10);
            assert!(fro_norm(&(dag(y) - z)) < 1e-10);
        }
    }

    #[test]
    fn zero_bond_direction_is_removed() {
        let m = random_obc(5, 4, 2, 2);
        let mut sites = m.sites().to_vec();
        // pad bond 2 with a direction that is never reached from the left
        sites[1] = sites[1].padded(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mats: Vec<Mat> = (0..2)
            .map(|i| {
                let mut x = Mat::zeros((3, 2));
                x.slice_mut(s![..2, ..]).assign(&sites[2].mat(i));
                x.row_mut(2).assign(&random_complex(&mut rng, 1, 2).row(0));
                x
            })
            .collect();
        sites[2] = SiteTensor::from_matrices(&mats).unwrap();
        let padded = ObcMps::new(sites, m.prefactor()).unwrap();
        let (c, _) = gauge_to_canonical(&padded).unwrap();
        assert!(max_diff(&padded, &c) < 1e-12);
        assert_eq!(c.bond_dims()[2], 2);
    }

    #[test]
    fn w_block_cyclic() {
        for n in 3..=5 {
            let w = build_state(StateName::W, n).unwrap();
            let (obc, _) = gauge_to_canonical(&w.to_obc().unwrap()).unwrap();
            assert_eq!(obc.max_bond(), 2);
            let ti = ti_from_obc(&obc, true).unwrap();
            assert_eq!(ti.bond(), 2 * n);
            assert!(max_diff(&w, &ti) < 1e-12);
        }
    }

    #[test]
    fn non_ti_rejected() {
        let m = random_obc(6, 4, 2, 2);
        assert!(ti_from_obc(&m, true).is_err());
        assert!(ti_from_obc(&m, false).is_ok());
    }
}
