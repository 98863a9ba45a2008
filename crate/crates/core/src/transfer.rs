//! Spectral analysis of the transfer map E(X) = Σ_i A_i X A_i†.
//!
//! The map is represented by the `D² x D²` matrix Σ_i A_i ⊗ conj(A_i) acting on
//! row-major vectorised matrices. Eigenvalues are reported for the map as
//! given; everything else (ν₂, fixed points, periodicity) refers to the map
//! rescaled to spectral radius 1.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{MpsError, Result};
use crate::linalg::{self, cr, dag, eye, fro_norm, unvec, vec_of, Mat, C64};
use crate::tensor::SiteTensor;

/// Default peripheral-spectrum tolerance, relative to the spectral radius.
pub const TAU_SPEC: f64 = 1e-9;

/// Eigenvalues closer than this to 1 (after rescaling) count as fixed points.
const FIXED_TOL: f64 = 1e-8;

/// Phase-clustering tolerance (radians) for peripheral eigenvalues.
const PHASE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "p")]
pub enum Classification {
    ErgodicPure,
    Periodic(usize),
    Reducible,
}

#[derive(Clone, Debug)]
pub struct CpMapAnalysis {
    pub spectral_radius: f64,
    pub eigenvalues: Vec<C64>,
    pub nu2: f64,
    pub fixed_point: Mat,
    pub dual_fixed_point: Mat,
    pub fixed_space_dim: usize,
    pub peripheral_count: usize,
    pub classification: Classification,
    pub tau_spec: f64,
}

/// Spectral projector of `e` onto its (semisimple) eigenvalue `z` of
/// multiplicity `k`: R (L† R)⁻¹ L† from the right and left eigenspaces.
fn spectral_projector(e: &Mat, z: C64, k: usize) -> Result<Mat> {
    let n = e.nrows();
    let shifted = e - &eye(n).mapv(|x| x * z);
    let (r, _) = linalg::smallest_right_singular(&shifted, k)?;
    let (l, _) = linalg::smallest_right_singular(&dag(&shifted), k)?;
    let g = dag(&l).dot(&r);
    Ok(r.dot(&linalg::inv(&g)?).dot(&dag(&l)))
}

fn hermitize(m: &Mat) -> Mat {
    (m + &dag(m)).mapv(|z| z * 0.5)
}

pub fn analyze(tensor: &SiteTensor) -> Result<CpMapAnalysis> {
    analyze_with(tensor, TAU_SPEC)
}

pub fn analyze_with(tensor: &SiteTensor, tau_spec: f64) -> Result<CpMapAnalysis> {
    if !tensor.is_square() {
        return Err(MpsError::DimensionMismatch("transfer analysis needs a square tensor".into()));
    }
    let dim = tensor.d_left();
    let e = tensor.transfer_matrix();
    let (vals, _) = linalg::eig_sorted(&e)?;
    let radius = vals.first().map_or(0.0, |z| z.norm());
    if !(radius > 0.0) {
        return Err(MpsError::InvalidInput("transfer map is nilpotent (spectral radius 0)".into()));
    }
    let scaled: Vec<C64> = vals.iter().map(|z| z / radius).collect();
    let nu2 = scaled.get(1).map_or(0.0, |z| z.norm());
    let peripheral_count = scaled.iter().filter(|z| z.norm() >= 1.0 - tau_spec).count();
    let fixed: Vec<usize> = (0..scaled.len()).filter(|&j| (scaled[j] - cr(1.0)).norm() <= FIXED_TOL).collect();
    if fixed.is_empty() {
        return Err(MpsError::Numerical("rescaled transfer map has no eigenvalue 1".into()));
    }
    let proj = spectral_projector(&e.mapv(|z| z / radius), cr(1.0), fixed.len())?;
    let one = vec_of(&eye(dim));
    let x = hermitize(&unvec(proj.dot(&one).as_slice().unwrap(), dim));
    let y = hermitize(&unvec(dag(&proj).dot(&one).as_slice().unwrap(), dim));
    let ty = linalg::trace(&y).re;
    let y = if ty.abs() > 0.0 { y.mapv(|z| z / ty) } else { y };

    let (xw, _) = linalg::eigh(&x)?;
    let xmax = xw.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let full_rank = xw.iter().all(|&w| w > 1e-10 * xmax);
    let classification = if fixed.len() > 1 || !full_rank {
        Classification::Reducible
    } else if peripheral_count == 1 {
        Classification::ErgodicPure
    } else {
        Classification::Periodic(peripheral_count)
    };
    Ok(CpMapAnalysis {
        spectral_radius: radius,
        eigenvalues: vals,
        nu2,
        fixed_point: x,
        dual_fixed_point: y,
        fixed_space_dim: fixed.len(),
        peripheral_count,
        classification,
        tau_spec,
    })
}

/// ξ = −1/ln ν₂ together with ν₂; defined for ergodic maps only.
pub fn correlation_length(a: &CpMapAnalysis) -> Result<(f64, f64)> {
    if a.classification != Classification::ErgodicPure {
        return Err(MpsError::OutsideClass(format!(
            "correlation length needs an ergodic map, got {:?}",
            a.classification
        )));
    }
    let xi = if a.nu2 < 1e-14 { 0.0 } else { -1.0 / a.nu2.ln() };
    Ok((xi, a.nu2))
}

/// Orthogonal-sum decomposition 𝟙 = Σ_k P_k with A_j P_k = P_{k−1} A_j
/// (indices mod p) for a single-block tensor.
///
/// The projectors are computed in the gauge where Σ A_i A_i† = 𝟙 and mapped
/// back; they are orthogonal whenever the input already has that property.
pub fn peripheral_projectors(tensor: &SiteTensor) -> Result<(usize, Vec<Mat>)> {
    let a = analyze(tensor)?;
    if a.classification == Classification::Reducible {
        return Err(MpsError::OutsideClass("peripheral projectors need a single block".into()));
    }
    let dim = tensor.d_left();
    let p = a.peripheral_count;
    if p == 1 {
        return Ok((1, vec![eye(dim)]));
    }
    let sqrt_x = linalg::herm_fn(&a.fixed_point, |w| w.max(0.0).sqrt())?;
    let inv_sqrt_x = linalg::herm_fn(&a.fixed_point, |w| 1.0 / w.sqrt())?;
    let unital = tensor
        .sandwich(&inv_sqrt_x, &sqrt_x)?
        .scaled(cr(1.0 / a.spectral_radius.sqrt()));

    let e = unital.transfer_matrix();
    let (vals, _) = linalg::eig_sorted(&e)?;
    let omega = C64::from_polar(1.0, 2.0 * PI / p as f64);
    // peripheral phases must sit on the p-th roots of unity
    for z in vals.iter().take(p) {
        let k = (z.arg() * p as f64 / (2.0 * PI)).round();
        let ang = z.arg() - 2.0 * PI * k / p as f64;
        if ang.abs() > PHASE_TOL {
            return Err(MpsError::Numerical(format!("peripheral eigenvalue {z} is not a {p}-th root of unity")));
        }
    }
    let j = (0..p)
        .min_by(|&i, &j| (vals[i] - omega).norm().partial_cmp(&(vals[j] - omega).norm()).unwrap())
        .unwrap();
    if (vals[j] - omega).norm() > 1e-6 {
        return Err(MpsError::Numerical("no transfer eigenvalue at exp(2πi/p)".into()));
    }
    let shifted = &e - &eye(dim * dim).mapv(|x| x * omega);
    let (v, _) = linalg::smallest_right_singular(&shifted, 1)?;
    let mut u = unvec(v.column(0).to_owned().as_slice().unwrap(), dim);
    let c = (linalg::trace(&u.dot(&dag(&u))).re / dim as f64).sqrt();
    u.mapv_inplace(|z| z / c);
    let mut up = eye(dim);
    for _ in 0..p {
        up = up.dot(&u);
    }
    let cp = linalg::trace(&up) / dim as f64;
    let root = C64::from_polar(1.0, cp.arg() / p as f64);
    u.mapv_inplace(|z| z / root);
    if linalg::unitarity_residual(&u) > 1e-6 {
        return Err(MpsError::Numerical("peripheral eigenoperator is not unitary".into()));
    }
    let powers: Vec<Mat> = {
        let mut v = vec![eye(dim)];
        for m in 1..p {
            v.push(v[m - 1].dot(&u));
        }
        v
    };
    let mut projs: Vec<Mat> = (0..p)
        .map(|k| {
            let mut acc = Mat::zeros((dim, dim));
            for (m, um) in powers.iter().enumerate() {
                let ph = omega.powi(-((k * m) as i32));
                acc = acc + um.mapv(|z| z * ph / p as f64);
            }
            acc
        })
        .collect();
    let mats = unital.matrices();
    let intertwines = |ps: &[Mat]| -> f64 {
        let mut worst = 0.0f64;
        for k in 0..p {
            let prev = &ps[(k + p - 1) % p];
            for m in &mats {
                worst = worst.max(fro_norm(&(m.dot(&ps[k]) - prev.dot(m))));
            }
        }
        worst
    };
    if intertwines(&projs) > 1e-8 {
        let rev: Vec<Mat> = (0..p).map(|k| projs[(p - k) % p].clone()).collect();
        if intertwines(&rev) > 1e-8 {
            return Err(MpsError::Numerical("peripheral projectors do not intertwine the tensor".into()));
        }
        projs = rev;
    }
    let back: Vec<Mat> = projs.iter().map(|pk| sqrt_x.dot(pk).dot(&inv_sqrt_x)).collect();
    Ok((p, back))
}

/// Largest violation of A_j P_k = P_{k−1} A_j.
pub fn intertwining_residual(tensor: &SiteTensor, projs: &[Mat]) -> f64 {
    let p = projs.len();
    let mut worst = 0.0f64;
    for k in 0..p {
        let prev = &projs[(k + p - 1) % p];
        for i in 0..tensor.d() {
            let m = tensor.mat(i).to_owned();
            worst = worst.max(fro_norm(&(m.dot(&projs[k]) - prev.dot(&m))));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;

    fn normalized_aklt() -> SiteTensor {
        states::aklt_tensor().scaled(cr(1.0 / 3f64.sqrt()))
    }

    #[test]
    fn aklt_spectrum() {
        let a = analyze(&normalized_aklt()).unwrap();
        assert!((a.eigenvalues[0] - cr(1.0)).norm() < 1e-12);
        for z in &a.eigenvalues[1..] {
            assert!((z - cr(-1.0 / 3.0)).norm() < 1e-12);
        }
        assert_eq!(a.classification, Classification::ErgodicPure);
        assert!(fro_norm(&(a.fixed_point.clone() - eye(2))) < 1e-10);
        let (xi, nu2) = correlation_length(&a).unwrap();
        assert!((nu2 - 1.0 / 3.0).abs() < 1e-12);
        assert!((xi - 1.0 / 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn ghz_is_reducible() {
        let a = analyze(&states::ghz_tensor()).unwrap();
        assert!((a.spectral_radius - 4.0).abs() < 1e-12);
        assert_eq!(a.classification, Classification::Reducible);
        assert!(correlation_length(&a).is_err());
    }

    #[test]
    fn antiferro_projectors() {
        let t = states::ghz_antiferro_tensor();
        let (p, ps) = peripheral_projectors(&t).unwrap();
        assert_eq!(p, 2);
        assert!(intertwining_residual(&t, &ps) < 1e-10);
        for pk in &ps {
            assert!((linalg::trace(pk).re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mg_period_two() {
        let t = states::majumdar_ghosh_tensor();
        let (p, ps) = peripheral_projectors(&t).unwrap();
        assert_eq!(p, 2);
        assert!(intertwining_residual(&t, &ps) < 1e-8);
        let sum = ps.iter().fold(Mat::zeros((3, 3)), |acc, x| acc + x);
        assert!(fro_norm(&(sum - eye(3))) < 1e-10);
    }
}
