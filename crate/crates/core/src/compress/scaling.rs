use serde::Serialize;

use crate::error::{invalid, MpsError, Result};
use crate::hamiltonian::{self, LocalHamiltonian, ED_MAX_DIM};
use crate::linalg;
use crate::mps::{self, from_dense};

use super::truncate;

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "D_L")]
    pub d_l: usize,
    /// Truncation error at `D_L`.
    pub error: f64,
    pub target: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingTable {
    pub eps0: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log D_L against log L.
    pub slope: Option<f64>,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("L,D_L,error,target\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.17e},{:.17e}\n", r.l, r.d_l, r.error, r.target));
        }
        s
    }
}

/// For each size, the smallest bond dimension whose truncation of the exact
/// ground state has error at most `eps0 / L` (bisection over `D`).
pub fn critical_scaling_probe(family: &dyn Fn(usize) -> Result<LocalHamiltonian>, sizes: &[usize], eps0: f64) -> Result<ScalingTable> {
    if !(eps0 > 0.0) {
        return invalid("eps0 must be positive");
    }
    let mut rows = Vec::new();
    for &l in sizes {
        let h = family(l)?;
        let dim = mps::check_cap(h.d, h.n_sites, ED_MAX_DIM)?;
        let (w, v) = linalg::eigh(&hamiltonian::dense_matrix(&h, dim)?)?;
        if w.len() > 1 && (w[1] - w[0]).abs() < 1e-10 * w[0].abs().max(1.0) {
            return Err(MpsError::OutsideClass(format!("ground state of size {l} is degenerate")));
        }
        let psi: Vec<_> = v.column(0).to_vec();
        let gs = from_dense(&psi, h.d, 1e-14)?;
        let target = eps0 / l as f64;
        let err = |d: usize| -> Result<f64> { Ok(truncate(&gs, d)?.1.measured) };
        let (mut lo, mut hi) = (1usize, gs.max_bond());
        if err(lo)? <= target {
            hi = lo;
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if err(mid)? <= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        rows.push(ScalingRow { l, d_l: hi, error: err(hi)?, target });
    }
    let slope = fit_slope(&rows);
    Ok(ScalingTable { eps0, rows, slope })
}

fn fit_slope(rows: &[ScalingRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.l as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.d_l as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
