use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, mismatch, Result};
use crate::linalg::{self, cr, dag, Mat};
use crate::mps::{self, Chain, ObcMps};
use crate::tensor::SiteTensor;

use super::sim::{apply_physical, right_sweep};
use super::UNITARITY_TOL;

#[derive(Clone, Debug, Serialize)]
pub struct SampleTable {
    pub seed: u64,
    pub shots: usize,
    /// One outcome string per shot, in shot order.
    #[serde(skip)]
    pub outcomes: Vec<Vec<usize>>,
    /// Outcome strings (digits joined) with their counts.
    pub counts: BTreeMap<String, usize>,
    /// Squared norm of the input before normalization.
    pub input_norm_sqr: f64,
}

impl SampleTable {
    pub fn frequency(&self, key: &str) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.shots as f64
    }
}

fn outcome_key(o: &[usize]) -> String {
    o.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(if o.iter().any(|&i| i > 9) { "," } else { "" })
}

/// Draw `shots` outcome strings, measuring site `k` in the orthonormal basis
/// given by the columns of `bases[k]`. Each shot samples site by site from
/// conditional marginals of the right-normalized chain; shot `s` uses stream
/// `s` of a ChaCha8 generator seeded with `seed`.
pub fn sample_measurements(mps: &ObcMps, bases: &[Mat], shots: usize, seed: u64) -> Result<SampleTable> {
    let n = mps.n_sites();
    let d = mps.phys_dim();
    if bases.len() != n {
        return mismatch(format!("{} bases for {n} sites", bases.len()));
    }
    let mut sites = mps.sites().to_vec();
    sites[0] = sites[0].scaled(mps.prefactor());
    right_sweep(&mut sites)?;
    let norm_sqr = linalg::fro_norm(&sites[0].unfold_right()).powi(2);
    if norm_sqr == 0.0 {
        return invalid("cannot sample the zero state");
    }
    if (norm_sqr - 1.0).abs() > 1e-10 {
        log::warn!("sampling input has squared norm {norm_sqr}; normalizing");
    }
    sites[0] = sites[0].scaled(cr(1.0 / norm_sqr.sqrt()));
    let rotated: Vec<SiteTensor> = sites
        .iter()
        .zip(bases)
        .map(|(s, u)| {
            if u.dim() != (d, d) || linalg::unitarity_residual(u) > UNITARITY_TOL {
                return invalid("measurement basis must be a d x d unitary");
            }
            apply_physical(s, &dag(u))
        })
        .collect::<Result<_>>()?;

    let mut outcomes = Vec::with_capacity(shots);
    let mut counts = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for shot in 0..shots {
        rng.set_stream(shot as u64);
        rng.set_word_pos(0);
        let mut v = linalg::eye(1);
        let mut out = Vec::with_capacity(n);
        for site in &rotated {
            let cands: Vec<Mat> = (0..d).map(|i| v.dot(&site.mat(i))).collect();
            let w: Vec<f64> = cands.iter().map(|c| linalg::fro_norm(c).powi(2)).collect();
            let total: f64 = w.iter().sum();
            let mut x = rng.random::<f64>() * total;
            let mut pick = d - 1;
            for (i, wi) in w.iter().enumerate() {
                if x < *wi {
                    pick = i;
                    break;
                }
                x -= wi;
            }
            while w[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            let nv = w[pick].sqrt();
            v = cands[pick].mapv(|z| z / nv);
            out.push(pick);
        }
        *counts.entry(outcome_key(&out)).or_insert(0) += 1;
        outcomes.push(out);
    }
    Ok(SampleTable { seed, shots, outcomes, counts, input_norm_sqr: norm_sqr })
}

/// Project site `site` onto basis vector `outcome` (a column of `basis`).
/// Returns the outcome probability and the normalized post-measurement state.
pub fn measure_site(mps: &ObcMps, site: usize, basis: &Mat, outcome: usize) -> Result<(f64, ObcMps)> {
    let n = mps.n_sites();
    let d = mps.phys_dim();
    if site >= n || outcome >= d {
        return invalid(format!("site {site} / outcome {outcome} out of range"));
    }
    if basis.dim() != (d, d) || linalg::unitarity_residual(basis) > UNITARITY_TOL {
        return invalid("measurement basis must be a d x d unitary");
    }
    let col = basis.column(outcome).to_owned().insert_axis(ndarray::Axis(1));
    let proj = col.dot(&dag(&col));
    let before = mps::norm_sqr(mps)?;
    if before == 0.0 {
        return invalid("cannot measure the zero state");
    }
    let mut sites = mps.sites().to_vec();
    sites[site] = apply_physical(&sites[site], &proj)?;
    let post = ObcMps::new(sites, mps.prefactor())?;
    let after = mps::norm_sqr(&post)?;
    let p = after / before;
    if after == 0.0 {
        return Ok((0.0, post));
    }
    let scale = post.prefactor() / after.sqrt();
    Ok((p, post.with_prefactor(scale)))
}
