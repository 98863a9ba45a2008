//! Bond-dimension truncation with its error certificate, Rényi entropies and
//! tail bounds, variational ground states and the size-scaling probe.

mod dmrg;
mod scaling;

pub use dmrg::{dmrg_ground_state, Mpo, VariationalRun};
pub use scaling::{critical_scaling_probe, ScalingRow, ScalingTable};

use ndarray::s;
use serde::Serialize;

use crate::canonical::gauge_to_canonical;
use crate::error::{invalid, Result};
use crate::linalg::cr;
use crate::mps::{self, CanonicalFlag, Chain, ObcMps};
use crate::tensor::SiteTensor;

#[derive(Clone, Debug, Serialize)]
pub struct TruncationReport {
    #[serde(rename = "D")]
    pub d_max: usize,
    /// ε_k(D) for every cut k = 1..N−1.
    pub tails: Vec<f64>,
    /// 2 Σ_k ε_k(D).
    pub bound: f64,
    /// ‖ψ − ψ_D‖² for the normalised input and the unrenormalised truncation.
    pub measured: f64,
    /// Factor applied to the truncated chain to restore the input norm.
    pub renormalization: f64,
    pub bond_dims: Vec<usize>,
}

/// Σ_{i ≥ D} of a descending spectrum.
pub fn tail(spectrum: &[f64], d: usize) -> f64 {
    spectrum.iter().skip(d).sum()
}

/// Keep the `d_max` largest Schmidt values at every cut of the full
/// canonical form. The returned chain is renormalised to the input norm and
/// put back in canonical form.
pub fn truncate(mps: &ObcMps, d_max: usize) -> Result<(ObcMps, TruncationReport)> {
    if d_max < 1 {
        return invalid("bond dimension must be at least 1");
    }
    let canon = if mps.flag() == CanonicalFlag::FullCanonical && mps.schmidt().is_some() {
        mps.clone()
    } else {
        gauge_to_canonical(mps)?.0
    };
    let schmidt = canon.schmidt().expect("canonical chain carries spectra").to_vec();
    let tails: Vec<f64> = schmidt.iter().map(|l| tail(l, d_max)).collect();
    let bound = 2.0 * tails.iter().sum::<f64>();
    let n = canon.n_sites();
    let keep: Vec<usize> = (0..=n)
        .map(|k| if k == 0 || k == n { 1 } else { schmidt[k - 1].len().min(d_max) })
        .collect();
    let sites: Vec<SiteTensor> = canon
        .sites()
        .iter()
        .enumerate()
        .map(|(k, t)| SiteTensor::new(t.data().slice(s![.., ..keep[k], ..keep[k + 1]]).to_owned()))
        .collect::<Result<_>>()?;
    let cut = ObcMps::new(sites, canon.prefactor())?;
    let nrm_in = mps::norm_sqr(&canon)?;
    let nrm_cut = mps::norm_sqr(&cut)?;
    let ov = mps::overlap(&canon, &cut)?;
    let measured = ((nrm_in + nrm_cut - 2.0 * ov.re) / nrm_in).max(0.0);
    let renorm = (nrm_in / nrm_cut).sqrt();
    let out = gauge_to_canonical(&cut.clone().with_prefactor(cut.prefactor() * cr(renorm)))?.0;
    let report =
        TruncationReport { d_max, tails, bound, measured, renormalization: renorm, bond_dims: out.bond_dims() };
    Ok((out, report))
}

fn check_spectrum(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= -1e-14) || !x.is_finite()) {
        return invalid("spectrum must be a nonempty vector of nonnegative numbers");
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return invalid(format!("spectrum sums to {total}, not 1"));
    }
    Ok(())
}

/// `S^α = log(Σ p_i^α)/(1−α)`, with `α = 1` the von Neumann entropy.
pub fn renyi_entropy(spectrum: &[f64], alpha: f64) -> Result<f64> {
    check_spectrum(spectrum)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid("alpha must be positive");
    }
    let p = spectrum.iter().map(|&x| x.max(0.0));
    if (alpha - 1.0).abs() < 1e-14 {
        return Ok(-p.filter(|&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>());
    }
    let s: f64 = p.filter(|&x| x > 0.0).map(|x| x.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

/// Upper bound `((1−α)/α)(S^α − log(D/(1−α)))` on `log ε(D)`.
pub fn renyi_tail_bound(s_alpha: f64, alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid("alpha must lie in (0, 1)");
    }
    if d < 1 {
        return invalid("D must be at least 1");
    }
    Ok((1.0 - alpha) / alpha * (s_alpha - (d as f64 / (1.0 - alpha)).ln()))
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCheck {
    pub log_tail: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Compare the exact `log ε(D)` of a spectrum with the Rényi bound.
pub fn check_tail_bound(spectrum: &[f64], alpha: f64, d: usize) -> Result<TailCheck> {
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let s = renyi_entropy(&sorted, alpha)?;
    let bound = renyi_tail_bound(s, alpha, d)?;
    let eps = tail(&sorted, d);
    let log_tail = if eps > 0.0 { eps.ln() } else { f64::NEG_INFINITY };
    Ok(TailCheck { log_tail, bound, margin: bound - log_tail, holds: log_tail <= bound + 1e-12 })
}
