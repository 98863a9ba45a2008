//! Recover a site-independent tensor `B` from a full-canonical open chain by
//! solving `A^[j]_i Z_{j+1} = Z_j (B_i ⊗ 𝟙)` on a window of bulk sites, with
//! `Y_j = Z_j⁺`. The bilinear system is attacked by alternating least squares
//! from random starts; failure means "not found", never "does not exist".

use ndarray::s;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::linalg::{self, cr, dag, eye, fro_norm, kron, Mat, C64};
use crate::mps::{self, Chain, ObcMps, TiMps};
use crate::tensor::SiteTensor;
use crate::transfer;

#[derive(Clone, Debug)]
pub struct ExtractionOptions {
    /// First site and number of sites of the consistency window; by default
    /// sites `l0 .. N-l0`.
    pub window: Option<(usize, usize)>,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub verify_samples: usize,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self { window: None, restarts: 32, max_iter: 500, tol: 1e-10, seed: 0, verify_samples: 200 }
    }
}

struct Window<'a> {
    sites: Vec<&'a SiteTensor>,
    dims: Vec<usize>,
    big: usize,
    small: usize,
    d: usize,
}

impl Window<'_> {
    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for &dj in &self.dims {
            off.push(off.last().unwrap() + dj * self.big);
        }
        off
    }

    fn unpack(&self, w: &[C64]) -> Vec<Mat> {
        let off = self.offsets();
        self.dims
            .iter()
            .enumerate()
            .map(|(t, &dj)| Mat::from_shape_fn((dj, self.big), |(a, c)| w[off[t] + a * self.big + c]))
            .collect()
    }

    /// Homogeneous linear system in the stacked W's for fixed B.
    fn w_system(&self, b: &[Mat]) -> Mat {
        let off = self.offsets();
        let nunk = *off.last().unwrap();
        let nrows: usize = self.sites.iter().enumerate().map(|(t, _)| self.d * self.dims[t] * self.big).sum();
        let mut m = Mat::zeros((nrows, nunk));
        let mut row = 0;
        let id = eye(self.small);
        for (t, site) in self.sites.iter().enumerate() {
            for (i, bi) in b.iter().enumerate() {
                let k = kron(bi, &id);
                let a = site.mat(i);
                for r in 0..self.dims[t] {
                    for c in 0..self.big {
                        // (A W_{t+1})[r,c]
                        for bb in 0..self.dims[t + 1] {
                            m[[row, off[t + 1] + bb * self.big + c]] += a[[r, bb]];
                        }
                        // -(W_t K)[r,c]
                        for e in 0..self.big {
                            m[[row, off[t] + r * self.big + e]] -= k[[e, c]];
                        }
                        row += 1;
                    }
                }
            }
        }
        m
    }

    /// Least-squares B for fixed W's.
    fn b_step(&self, ws: &[Mat]) -> Result<Vec<Mat>> {
        let dd = self.small;
        let rows: usize = (0..self.sites.len()).map(|t| self.dims[t] * dd).sum();
        let mut g = Mat::zeros((rows, dd));
        let mut h = Mat::zeros((rows, dd * self.d));
        let mut r0 = 0;
        for (t, site) in self.sites.iter().enumerate() {
            let wt = &ws[t];
            let aw: Vec<Mat> = (0..self.d).map(|i| site.mat(i).dot(&ws[t + 1])).collect();
            for q in 0..dd {
                for a in 0..self.dims[t] {
                    for p in 0..dd {
                        g[[r0 + a, p]] = wt[[a, p * dd + q]];
                    }
                    for (i, awi) in aw.iter().enumerate() {
                        for p in 0..dd {
                            h[[r0 + a, i * dd + p]] = awi[[a, p * dd + q]];
                        }
                    }
                }
                r0 += self.dims[t];
            }
        }
        let sol = linalg::lstsq(&g, &h)?;
        Ok((0..self.d).map(|i| sol.slice(s![.., i * dd..(i + 1) * dd]).to_owned()).collect())
    }

    fn residual(&self, ws: &[Mat], b: &[Mat]) -> f64 {
        let id = eye(self.small);
        let mut acc = 0.0;
        let mut wn = 0.0;
        for (t, site) in self.sites.iter().enumerate() {
            for (i, bi) in b.iter().enumerate() {
                let lhs = site.mat(i).dot(&ws[t + 1]);
                let rhs = ws[t].dot(&kron(bi, &id));
                acc += fro_norm(&(lhs - rhs)).powi(2);
            }
        }
        for w in ws {
            wn += fro_norm(w).powi(2);
        }
        (acc / wn.max(f64::MIN_POSITIVE)).sqrt()
    }
}

/// Try to find a `target_d x target_d` tensor reproducing `mps`.
pub fn solve_ti_extraction(mps: &ObcMps, target_d: usize, l0: usize, opts: &ExtractionOptions) -> Result<Option<TiMps>> {
    let n = mps.n_sites();
    let dims = mps.bond_dims();
    let (start, len) = match opts.window {
        Some(w) => w,
        None => (l0, n.saturating_sub(2 * l0)),
    };
    if len == 0 || start + len > n || target_d == 0 {
        return invalid(format!("empty or out-of-range consistency window ({start}, {len}) for {n} sites"));
    }
    let big = target_d * target_d;
    let win = Window {
        sites: (start..start + len).map(|k| &mps.sites()[k]).collect(),
        dims: dims[start..=start + len].to_vec(),
        big,
        small: target_d,
        d: mps.phys_dim(),
    };
    if win.dims.iter().any(|&dj| dj < big) {
        // Y_j Z_j = 𝟙 on a D²-dimensional space needs bonds of at least D²
        log::info!("window bonds {:?} are below D² = {big}; no solution of the system", win.dims);
        return Ok(None);
    }
    for r in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64).wrapping_mul(0x9e37_79b9));
        let mut b: Vec<Mat> = (0..win.d).map(|_| linalg::random_complex(&mut rng, target_d, target_d)).collect();
        let bn = b.iter().map(|m| fro_norm(m).powi(2)).sum::<f64>().sqrt();
        b.iter_mut().for_each(|m| m.mapv_inplace(|z| z / bn * (target_d as f64).sqrt()));
        let mut converged = None;
        for _ in 0..opts.max_iter {
            let (wv, _) = linalg::smallest_right_singular(&win.w_system(&b), 1)?;
            let ws = win.unpack(&wv.column(0).to_vec());
            b = win.b_step(&ws)?;
            let res = win.residual(&ws, &b);
            if !res.is_finite() {
                break;
            }
            if res < opts.tol {
                converged = Some(ws);
                break;
            }
        }
        let Some(ws) = converged else { continue };
        let full_rank = ws.iter().all(|w| linalg::rank(w, 1e-8).map(|rk| rk == big).unwrap_or(false));
        if !full_rank {
            continue;
        }
        let tensor = SiteTensor::from_matrices(&b)?;
        let tensor = match normalize_gauge(&tensor) {
            Ok(t) => t,
            Err(_) => continue,
        };
        if let Some(ti) = verify(mps, &tensor, opts, r as u64)? {
            return Ok(Some(ti));
        }
    }
    Ok(None)
}

/// Gauge so that Σ B B† = 𝟙 (fixed point at the identity, radius 1).
fn normalize_gauge(t: &SiteTensor) -> Result<SiteTensor> {
    let a = transfer::analyze(t)?;
    let sx = linalg::herm_fn(&a.fixed_point, |w| w.max(0.0).sqrt())?;
    let isx = linalg::pinv(&sx, 1e-12)?;
    Ok(t.sandwich(&isx, &sx)?.scaled(cr(1.0 / a.spectral_radius.sqrt())))
}

fn verify(mps: &ObcMps, b: &SiteTensor, opts: &ExtractionOptions, salt: u64) -> Result<Option<TiMps>> {
    let n = mps.n_sites();
    let d = mps.phys_dim();
    let candidate = TiMps::new(b.clone(), n, cr(1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xa5a5 ^ salt);
    let mut pairs = Vec::with_capacity(opts.verify_samples);
    for _ in 0..opts.verify_samples {
        let s: Vec<usize> = (0..n).map(|_| rng.random_range(0..d)).collect();
        pairs.push((mps::amplitude(mps, &s)?, mps::amplitude(&candidate, &s)?));
    }
    let num: C64 = pairs.iter().map(|(a, t)| t.conj() * a).sum();
    let den: f64 = pairs.iter().map(|(_, t)| t.norm_sqr()).sum();
    let amax = pairs.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max);
    if den == 0.0 || amax == 0.0 {
        return Ok(None);
    }
    let c = num / den;
    let worst = pairs.iter().map(|(a, t)| (a - c * t).norm()).fold(0.0, f64::max);
    if worst > 1e-8 * amax {
        return Ok(None);
    }
    Ok(Some(candidate.with_prefactor(c)))
}

/// Look for a unitary `U` and phase `φ` with `B_i = φ U A_i U†` for all `i`.
/// Returns `(U, φ, residual)` for the best candidate phase.
pub fn simultaneous_similarity(a: &SiteTensor, b: &SiteTensor) -> Result<Option<(Mat, C64, f64)>> {
    if a.d() != b.d() || a.d_left() != b.d_left() || !a.is_square() || !b.is_square() {
        return Ok(None);
    }
    let dim = a.d_left();
    let d = a.d();
    // phase candidates from the shortest nonvanishing trace
    let mut phases = vec![cr(1.0)];
    'outer: for l in 1..=4usize {
        let count = d.pow(l as u32);
        if count > 4096 {
            break;
        }
        for idx in 0..count {
            let s = mps::index_to_string(idx, d, l);
            let prod = |t: &SiteTensor| s.iter().fold(eye(dim), |acc, &i| acc.dot(&t.mat(i)));
            let ta = linalg::trace(&prod(a));
            let tb = linalg::trace(&prod(b));
            if ta.norm() > 1e-8 && tb.norm() > 1e-8 {
                let ratio = tb / ta;
                let base = ratio.arg() / l as f64;
                phases = (0..l)
                    .map(|k| C64::from_polar(1.0, base + 2.0 * std::f64::consts::PI * k as f64 / l as f64))
                    .collect();
                break 'outer;
            }
        }
    }
    let mut best: Option<(Mat, C64, f64)> = None;
    for ph in phases {
        // U A_i − φ̄ B_i U = 0, linear in vec(U)
        let mut m = Mat::zeros((d * dim * dim, dim * dim));
        for i in 0..d {
            let ai = a.mat(i).to_owned();
            let bi = b.mat(i).mapv(|z| z * ph.conj());
            let blk = kron(&eye(dim), &ai.t().to_owned()) - kron(&bi, &eye(dim));
            m.slice_mut(s![i * dim * dim..(i + 1) * dim * dim, ..]).assign(&blk);
        }
        let (v, _) = linalg::smallest_right_singular(&m, 1)?;
        let mut u = linalg::unvec(v.column(0).to_owned().as_slice().unwrap(), dim);
        let c = (linalg::trace(&u.dot(&dag(&u))).re / dim as f64).sqrt();
        u.mapv_inplace(|z| z / c);
        let mut res = linalg::unitarity_residual(&u);
        for i in 0..d {
            let lhs = b.mat(i).to_owned();
            let rhs = u.dot(&a.mat(i)).dot(&dag(&u)).mapv(|z| z * ph);
            res = res.max(fro_norm(&(lhs - rhs)));
        }
        if best.as_ref().is_none_or(|x| res < x.2) {
            best = Some((u, ph, res));
        }
    }
    Ok(best)
}
