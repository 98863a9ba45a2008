use serde::Serialize;

use crate::error::{mismatch, Result};
use crate::linalg::{self, Mat};
use crate::tensor::SiteTensor;

const SPAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    #[serde(rename = "L0")]
    pub l0: Option<usize>,
    /// `rank_curve[L-1]` is the dimension of span{A_{i_1}⋯A_{i_L}}.
    pub rank_curve: Vec<usize>,
}

/// Orthonormal rows spanning the given flattened matrices.
fn span_rows(rows: &Mat) -> Result<Mat> {
    Ok(linalg::dag(&linalg::orth(&linalg::dag(rows), SPAN_TOL)?))
}

/// Smallest `L <= l_max` for which products of `L` matrices span all `D x D`
/// matrices. The span is grown as span_L · {A_i}, so the cost stays
/// polynomial in `D` and `d`.
pub fn injectivity_length(tensor: &SiteTensor, l_max: usize) -> Result<InjectivityReport> {
    if !tensor.is_square() {
        return mismatch("injectivity needs a square tensor");
    }
    let dim = tensor.d_left();
    let full = dim * dim;
    let mats = tensor.matrices();
    let mut basis = {
        let mut rows = Mat::zeros((mats.len(), full));
        for (i, m) in mats.iter().enumerate() {
            rows.row_mut(i).assign(&linalg::vec_of(m));
        }
        span_rows(&rows)?
    };
    let mut curve = Vec::new();
    for l in 1..=l_max {
        if l > 1 {
            let mut rows = Mat::zeros((basis.nrows() * mats.len(), full));
            for r in 0..basis.nrows() {
                let x = linalg::unvec(basis.row(r).to_owned().as_slice().unwrap(), dim);
                for (i, m) in mats.iter().enumerate() {
                    rows.row_mut(r * mats.len() + i).assign(&linalg::vec_of(&x.dot(m)));
                }
            }
            basis = span_rows(&rows)?;
        }
        curve.push(basis.nrows());
        if basis.nrows() == full {
            return Ok(InjectivityReport { l0: Some(l), rank_curve: curve });
        }
        if basis.nrows() == 0 {
            break;
        }
    }
    Ok(InjectivityReport { l0: None, rank_curve: curve })
}

#[derive(Clone, Debug, Serialize)]
pub struct A0Report {
    pub applicable: bool,
    /// Which matrix was invertible: `"A_k"` or `"sum_i A_i A_i"`.
    pub candidate: Option<String>,
    #[serde(rename = "L0")]
    pub l0: Option<usize>,
    pub bound: usize,
    pub pass: bool,
    pub margin: Option<i64>,
}

fn invertible(m: &Mat) -> Result<bool> {
    let (_, s, _) = linalg::svd_thin(m)?;
    Ok(s.last().copied().unwrap_or(0.0) > 1e-10 * s.first().copied().unwrap_or(0.0))
}

/// When one of the matrices (or Σ_i A_i A_i) is invertible, the products
/// must become injective by length `D²`; measure `L0` and compare.
pub fn check_invertible_a0_bound(tensor: &SiteTensor) -> Result<A0Report> {
    if !tensor.is_square() {
        return mismatch("bound check needs a square tensor");
    }
    let dim = tensor.d_left();
    let bound = dim * dim;
    let mats = tensor.matrices();
    let mut candidate = None;
    for (k, m) in mats.iter().enumerate() {
        if invertible(m)? {
            candidate = Some(format!("A_{k}"));
            break;
        }
    }
    if candidate.is_none() {
        let sq = mats.iter().fold(Mat::zeros((dim, dim)), |acc, m| acc + m.dot(m));
        if invertible(&sq)? {
            candidate = Some("sum_i A_i A_i".to_string());
        }
    }
    if candidate.is_none() {
        return Ok(A0Report { applicable: false, candidate: None, l0: None, bound, pass: true, margin: None });
    }
    let rep = injectivity_length(tensor, bound)?;
    let pass = rep.l0.is_some_and(|l| l <= bound);
    Ok(A0Report {
        applicable: true,
        candidate,
        l0: rep.l0,
        bound,
        pass,
        margin: rep.l0.map(|l| bound as i64 - l as i64),
    })
}

/// Cyclic shift `A_0 = Σ_i |i+1 mod D⟩⟨i|` with `A_1 = |2⟩⟨D|` (1-based
/// labels), a tensor whose injectivity length grows quadratically in `D`.
pub fn shift_example(dim: usize) -> SiteTensor {
    let mut a0 = Mat::zeros((dim, dim));
    for i in 0..dim {
        a0[[(i + 1) % dim, i]] = linalg::cr(1.0);
    }
    let mut a1 = Mat::zeros((dim, dim));
    a1[[1 % dim, dim - 1]] = linalg::cr(1.0);
    SiteTensor::from_matrices(&[a0, a1]).expect("static tensor")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;

    #[test]
    fn aklt_length_two() {
        let r = injectivity_length(&states::aklt_tensor(), 6).unwrap();
        assert_eq!(r.l0, Some(2));
        assert_eq!(r.rank_curve, vec![3, 4]);
    }

    #[test]
    fn ghz_never_injective() {
        assert_eq!(injectivity_length(&states::ghz_tensor(), 10).unwrap().l0, None);
    }

    #[test]
    fn shift_exceeds_generic_estimate() {
        let r = injectivity_length(&shift_example(3), 20).unwrap();
        assert_eq!(r.l0, Some(6));
        let r = injectivity_length(&shift_example(4), 40).unwrap();
        assert_eq!(r.l0, Some(12));
    }

    #[test]
    fn no_candidate() {
        let r = check_invertible_a0_bound(&states::ghz_antiferro_tensor()).unwrap();
        assert!(!r.applicable);
    }
}
