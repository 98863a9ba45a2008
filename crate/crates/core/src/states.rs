//! Built-in example states.
//!
//! Matrices are stored exactly as written for each model; the normalisation
//! lives in the chain prefactor. Physical index `k` labels the `k`-th matrix
//! listed below.
//!
//! | name | d | D | matrices |
//! |------|---|---|----------|
//! | aklt | 3 | 2 | σ^z, √2σ^+, −√2σ^− (m = 0, +1, −1) |
//! | majumdar_ghosh | 2 | 3 | A_0, A_1 below |
//! | ghz | 2 | 2 | 𝟙+σ^z, 𝟙−σ^z |
//! | ghz_antiferro | 2 | 2 | σ^+, σ^− |
//! | cluster | 2 | 2 | [[0,0],[1,1]], [[1,−1],[0,0]] |
//! | w | 2 | 2 | 𝟙, σ^+ on sites 1..N−1; σ^x, σ^+σ^x on site N |

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, MpsError, Result};
use crate::linalg::{cr, from_real, Mat, C64};
use crate::mps::{norm_sqr, AnyMps, Chain, PbcMps, TiMps};
use crate::tensor::SiteTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateName {
    Aklt,
    MajumdarGhosh,
    Ghz,
    GhzAntiferro,
    Cluster,
    W,
}

impl StateName {
    pub const ALL: [StateName; 6] = [
        StateName::Aklt,
        StateName::MajumdarGhosh,
        StateName::Ghz,
        StateName::GhzAntiferro,
        StateName::Cluster,
        StateName::W,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StateName::Aklt => "aklt",
            StateName::MajumdarGhosh => "majumdar_ghosh",
            StateName::Ghz => "ghz",
            StateName::GhzAntiferro => "ghz_antiferro",
            StateName::Cluster => "cluster",
            StateName::W => "w",
        }
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateName {
    type Err = MpsError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| MpsError::InvalidInput(format!("unknown state name '{s}'")))
    }
}

pub fn sigma_z() -> Mat {
    from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn sigma_x() -> Mat {
    from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> Mat {
    let mut m = Mat::zeros((2, 2));
    m[[0, 1]] = C64::new(0.0, -1.0);
    m[[1, 0]] = C64::new(0.0, 1.0);
    m
}

pub fn sigma_plus() -> Mat {
    from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
}

pub fn sigma_minus() -> Mat {
    from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
}

pub fn aklt_tensor() -> SiteTensor {
    let r2 = 2f64.sqrt();
    SiteTensor::from_matrices(&[sigma_z(), sigma_plus().mapv(|z| z * r2), sigma_minus().mapv(|z| z * -r2)])
        .expect("static tensor")
}

pub fn majumdar_ghosh_tensor() -> SiteTensor {
    SiteTensor::from_matrices(&[
        from_real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0], &[0.0, 0.0, 0.0]]),
        from_real(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]),
    ])
    .expect("static tensor")
}

pub fn ghz_tensor() -> SiteTensor {
    SiteTensor::from_matrices(&[from_real(&[&[2.0, 0.0], &[0.0, 0.0]]), from_real(&[&[0.0, 0.0], &[0.0, 2.0]])])
        .expect("static tensor")
}

pub fn ghz_antiferro_tensor() -> SiteTensor {
    SiteTensor::from_matrices(&[sigma_plus(), sigma_minus()]).expect("static tensor")
}

pub fn cluster_tensor() -> SiteTensor {
    SiteTensor::from_matrices(&[from_real(&[&[0.0, 0.0], &[1.0, 1.0]]), from_real(&[&[1.0, -1.0], &[0.0, 0.0]])])
        .expect("static tensor")
}

/// Spin-1 operators in the (m=0, m=+1, m=−1) ordering used by `aklt_tensor`.
pub fn spin1_ops() -> (Mat, Mat, Mat) {
    let r = 1.0 / 2f64.sqrt();
    // S^+ |0> = √2 |+1>, S^+ |−1> = √2 |0>
    let mut sp = Mat::zeros((3, 3));
    sp[[1, 0]] = cr(2f64.sqrt());
    sp[[0, 2]] = cr(2f64.sqrt());
    let sm = crate::linalg::dag(&sp);
    let sx = (&sp + &sm).mapv(|z| z * r * r);
    let sy = (&sp - &sm).mapv(|z| z * C64::new(0.0, -0.5));
    let sz = from_real(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0]]);
    (sx, sy, sz)
}

/// Build a named example state with `n` sites, normalised through its prefactor.
/// States with zero norm (the antiferromagnetic GHZ state on odd chains) keep
/// prefactor 1.
pub fn build_state(name: StateName, n: usize) -> Result<AnyMps> {
    if n < 2 {
        return invalid("n_sites must be at least 2");
    }
    let raw = match name {
        StateName::Aklt => AnyMps::Ti(TiMps::new(aklt_tensor(), n, cr(1.0))?),
        StateName::MajumdarGhosh => {
            if n < 4 || !n.is_multiple_of(2) {
                return invalid("majumdar_ghosh needs an even n_sites >= 4");
            }
            AnyMps::Ti(TiMps::new(majumdar_ghosh_tensor(), n, cr(1.0))?)
        }
        StateName::Ghz => AnyMps::Ti(TiMps::new(ghz_tensor(), n, cr(1.0))?),
        StateName::GhzAntiferro => AnyMps::Ti(TiMps::new(ghz_antiferro_tensor(), n, cr(1.0))?),
        StateName::Cluster => AnyMps::Ti(TiMps::new(cluster_tensor(), n, cr(1.0))?),
        StateName::W => {
            let bulk = SiteTensor::from_matrices(&[Mat::eye(2), sigma_plus()])?;
            let last = SiteTensor::from_matrices(&[sigma_x(), sigma_plus().dot(&sigma_x())])?;
            let mut sites = vec![bulk; n - 1];
            sites.push(last);
            AnyMps::Pbc(PbcMps::new(sites, cr(1.0))?)
        }
    };
    normalized(raw)
}

fn normalized(m: AnyMps) -> Result<AnyMps> {
    let nrm = norm_sqr(&m)?;
    if nrm <= 0.0 {
        return Ok(m);
    }
    let p = cr(1.0 / nrm.sqrt()) * m.prefactor();
    Ok(match m {
        AnyMps::Obc(x) => AnyMps::Obc(x.with_prefactor(p)),
        AnyMps::Ti(x) => AnyMps::Ti(x.with_prefactor(p)),
        AnyMps::Pbc(x) => AnyMps::Pbc(PbcMps::new(x.sites().to_vec(), p)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{amplitude, to_dense, DEFAULT_DENSE_CAP};

    #[test]
    fn w_amplitudes() {
        let w = build_state(StateName::W, 4).unwrap();
        let p = w.prefactor();
        assert!((amplitude(&w, &[1, 0, 0, 0]).unwrap() / p - cr(1.0)).norm() < 1e-14);
        assert!((amplitude(&w, &[0, 0, 1, 0]).unwrap() / p - cr(1.0)).norm() < 1e-14);
        assert!(amplitude(&w, &[0, 0, 0, 0]).unwrap().norm() < 1e-14);
        assert!(amplitude(&w, &[1, 1, 0, 0]).unwrap().norm() < 1e-14);
    }

    #[test]
    fn ghz_raw_amplitude() {
        let t = TiMps::new(ghz_tensor(), 3, cr(1.0)).unwrap();
        assert_eq!(amplitude(&t, &[0, 0, 0]).unwrap(), cr(8.0));
        assert_eq!(amplitude(&t, &[0, 1, 0]).unwrap(), cr(0.0));
    }

    #[test]
    fn all_states_normalised() {
        for name in StateName::ALL {
            let s = build_state(name, 6).unwrap();
            let v = to_dense(&s, DEFAULT_DENSE_CAP).unwrap();
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12, "{name}: {n}");
        }
    }

    #[test]
    fn spin1_algebra() {
        let (sx, sy, sz) = spin1_ops();
        let comm = sx.dot(&sy) - sy.dot(&sx);
        let target = sz.mapv(|z| z * C64::new(0.0, 1.0));
        assert!(crate::linalg::fro_norm(&(comm - target)) < 1e-14);
    }

    #[test]
    fn parse_names() {
        assert_eq!("ghz_antiferro".parse::<StateName>().unwrap(), StateName::GhzAntiferro);
        assert!("foo".parse::<StateName>().is_err());
    }
}
