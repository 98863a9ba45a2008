use ndarray::{Array1, Axis};
use serde::Serialize;

use crate::error::{MpsError, Result};
use crate::linalg::{self, cr, dag, eye, fro_norm, Mat};
use crate::mps::TiMps;
use crate::tensor::SiteTensor;
use crate::transfer;

/// Relative threshold deciding the support of a positive fixed point.
const SUPPORT_TOL: f64 = 1e-10;

/// Radii below this fraction of the largest one are treated as zero blocks.
const RADIUS_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct Block {
    pub weight: f64,
    pub tensor: SiteTensor,
    pub lambda: Vec<f64>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.tensor.d_left()
    }
}

/// Direct-sum decomposition `A ≅ scale · ⊕_j weight_j A^j` of a
/// translation-invariant tensor.
#[derive(Clone, Debug)]
pub struct CanonicalBlocks {
    pub scale: f64,
    pub blocks: Vec<Block>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlocksReport {
    pub b: usize,
    pub scale: f64,
    pub weights: Vec<f64>,
    pub sizes: Vec<usize>,
    pub lambda_spectra: Vec<Vec<f64>>,
}

impl CanonicalBlocks {
    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::size).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.weight).collect()
    }

    /// Block-diagonal tensor ⊕_j weight_j A^j (without the global scale).
    pub fn direct_sum(&self) -> Result<SiteTensor> {
        let mut it = self.blocks.iter();
        let first = it.next().ok_or_else(|| MpsError::InvalidInput("no blocks".into()))?;
        let mut acc = first.tensor.scaled(cr(first.weight));
        for b in it {
            acc = acc.direct_sum(&b.tensor.scaled(cr(b.weight)))?;
        }
        Ok(acc)
    }

    /// Chain of `n` sites equal to the decomposed input state (given the
    /// input's prefactor).
    pub fn reassemble(&self, n: usize, prefactor: crate::linalg::C64) -> Result<TiMps> {
        TiMps::new(self.direct_sum()?, n, prefactor * cr(self.scale.powi(n as i32)))
    }

    pub fn report(&self) -> BlocksReport {
        BlocksReport {
            b: self.count(),
            scale: self.scale,
            weights: self.weights(),
            sizes: self.sizes(),
            lambda_spectra: self.blocks.iter().map(|b| b.lambda.clone()).collect(),
        }
    }
}

/// Split a tensor into the diagonal blocks of an invariant-subspace flag.
fn compress_to(t: &SiteTensor, q: &Mat) -> Result<SiteTensor> {
    t.sandwich(&dag(q), q)
}

/// Returns (radius, unital block tensor) pairs for every irreducible piece.
fn split(t: &SiteTensor, depth: usize, out: &mut Vec<(f64, SiteTensor)>) -> Result<()> {
    let dim = t.d_left();
    if dim == 0 {
        return Ok(());
    }
    if depth > 64 {
        return Err(MpsError::Numerical("block splitting did not terminate".into()));
    }
    let a = match transfer::analyze(t) {
        Ok(a) => a,
        Err(MpsError::InvalidInput(_)) => return Ok(()), // nilpotent piece
        Err(e) => return Err(e),
    };
    let r = a.spectral_radius;
    let (xw, xv) = linalg::eigh(&a.fixed_point)?;
    let xmax = xw.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    let support: Vec<usize> = (0..dim).filter(|&j| xw[j] > SUPPORT_TOL * xmax).collect();
    if support.len() < dim {
        let rest: Vec<usize> = (0..dim).filter(|j| !support.contains(j)).collect();
        let q = xv.select(Axis(1), &support);
        let qp = xv.select(Axis(1), &rest);
        split(&compress_to(t, &q)?, depth + 1, out)?;
        split(&compress_to(t, &qp)?, depth + 1, out)?;
        return Ok(());
    }
    let sx = linalg::herm_fn(&a.fixed_point, |w| w.sqrt())?;
    let isx = linalg::herm_fn(&a.fixed_point, |w| 1.0 / w.sqrt())?;
    let unital = t.sandwich(&isx, &sx)?.scaled(cr(1.0 / r.sqrt()));
    if a.fixed_space_dim > 1 {
        // a second fixed point of the unital map splits it further
        let e = unital.transfer_matrix();
        let (fix, _) = linalg::smallest_right_singular(&(e - eye(dim * dim)), a.fixed_space_dim)?;
        let mut best: Option<Mat> = None;
        let mut best_norm = 0.0;
        for c in 0..fix.ncols() {
            let m = linalg::unvec(fix.column(c).to_owned().as_slice().unwrap(), dim);
            for h in [&m + &dag(&m), (&m - &dag(&m)).mapv(|z| z * linalg::c(0.0, -1.0))] {
                let trh = linalg::trace(&h) / dim as f64;
                let traceless = &h - &eye(dim).mapv(|z| z * trh);
                let nrm = fro_norm(&traceless);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = Some(traceless);
                }
            }
        }
        let y = best.ok_or_else(|| MpsError::Numerical("no non-trivial fixed point found".into()))?;
        let (yw, yv) = linalg::eigh(&y)?;
        let top = yw[dim - 1];
        let spread = top - yw[0];
        let lower: Vec<usize> = (0..dim).filter(|&j| top - yw[j] > 1e-6 * spread).collect();
        let upper: Vec<usize> = (0..dim).filter(|&j| top - yw[j] <= 1e-6 * spread).collect();
        if lower.is_empty() || upper.is_empty() {
            return Err(MpsError::Numerical("degenerate splitting fixed point".into()));
        }
        let scaled = unital.scaled(cr(r.sqrt()));
        split(&compress_to(&scaled, &yv.select(Axis(1), &lower))?, depth + 1, out)?;
        split(&compress_to(&scaled, &yv.select(Axis(1), &upper))?, depth + 1, out)?;
        return Ok(());
    }
    // single block: diagonalise the dual fixed point with a unitary
    let ua = transfer::analyze(&unital)?;
    let (_, lv) = linalg::eigh(&ua.dual_fixed_point)?;
    let order: Vec<usize> = (0..dim).rev().collect();
    let v = lv.select(Axis(1), &order);
    let block = unital.sandwich(&dag(&v), &v)?;
    out.push((r, block));
    Ok(())
}

/// Decompose a translation-invariant tensor into canonical blocks: each block
/// has Σ A A† = 𝟙, 𝟙 as its only fixed point and a diagonal, positive,
/// descending dual fixed point Λ.
pub fn ti_canonical_blocks(mps: &TiMps) -> Result<CanonicalBlocks> {
    tensor_blocks(mps.tensor())
}

pub fn tensor_blocks(t: &SiteTensor) -> Result<CanonicalBlocks> {
    let mut raw = Vec::new();
    split(t, 0, &mut raw)?;
    let rmax = raw.iter().map(|(r, _)| *r).fold(0.0f64, f64::max);
    if rmax <= 0.0 {
        return Err(MpsError::InvalidInput("tensor generates the zero map".into()));
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (r, tensor) in raw {
        if r <= RADIUS_TOL * rmax {
            continue;
        }
        let dim = tensor.d_left();
        let lam_m = transfer::analyze(&tensor)?.dual_fixed_point;
        let lambda: Vec<f64> = (0..dim).map(|j| lam_m[[j, j]].re).collect();
        blocks.push(Block { weight: (r / rmax).sqrt(), tensor, lambda });
    }
    blocks.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then(b.weight.partial_cmp(&a.weight).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| lex_cmp(&a.tensor, &b.tensor))
    });
    Ok(CanonicalBlocks { scale: rmax.sqrt(), blocks })
}

fn lex_cmp(a: &SiteTensor, b: &SiteTensor) -> std::cmp::Ordering {
    for (x, y) in a.data().iter().zip(b.data().iter()) {
        let o = x.re.partial_cmp(&y.re).unwrap_or(std::cmp::Ordering::Equal);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
        let o = x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Per-block residuals of the canonical block conditions.
#[derive(Clone, Copy, Debug)]
pub struct BlockResiduals {
    pub isometry: f64,
    pub dual_fixed: f64,
    pub off_diagonal: f64,
    pub min_lambda: f64,
    pub fixed_multiplicity: usize,
}

pub fn block_residuals(b: &Block) -> Result<BlockResiduals> {
    let dim = b.size();
    let lam = Mat::from_diag(&Array1::from_iter(b.lambda.iter().map(|&x| cr(x))));
    let a = transfer::analyze(&b.tensor)?;
    let mut off = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                off = off.max(a.dual_fixed_point[[i, j]].norm());
            }
        }
    }
    Ok(BlockResiduals {
        isometry: b.tensor.isometry_residual(),
        dual_fixed: fro_norm(&(b.tensor.dual_map(&lam) - &lam)),
        off_diagonal: off,
        min_lambda: b.lambda.iter().copied().fold(f64::INFINITY, f64::min),
        fixed_multiplicity: a.fixed_space_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{to_dense, DEFAULT_DENSE_CAP};
    use crate::states;

    fn max_diff(a: &TiMps, b: &TiMps) -> f64 {
        let x = to_dense(a, DEFAULT_DENSE_CAP).unwrap();
        let y = to_dense(b, DEFAULT_DENSE_CAP).unwrap();
        x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ghz_two_blocks() {
        let t = TiMps::new(states::ghz_tensor(), 5, cr(1.0)).unwrap();
        let b = ti_canonical_blocks(&t).unwrap();
        assert_eq!(b.sizes(), vec![1, 1]);
        assert!((b.weights()[0] - 1.0).abs() < 1e-12 && (b.weights()[1] - 1.0).abs() < 1e-12);
        assert!(max_diff(&t, &b.reassemble(5, cr(1.0)).unwrap()) < 1e-10);
    }

    #[test]
    fn aklt_one_block() {
        let t = TiMps::new(states::aklt_tensor(), 6, cr(1.0)).unwrap();
        let b = ti_canonical_blocks(&t).unwrap();
        assert_eq!(b.count(), 1);
        assert!((b.blocks[0].lambda[0] - 0.5).abs() < 1e-10);
        let r = block_residuals(&b.blocks[0]).unwrap();
        assert!(r.isometry < 1e-10 && r.dual_fixed < 1e-10 && r.fixed_multiplicity == 1);
        assert!(max_diff(&t, &b.reassemble(6, cr(1.0)).unwrap()) < 1e-10);
    }

    #[test]
    fn aklt_plus_scalar_block() {
        let aklt = states::aklt_tensor().scaled(cr(1.0 / 3f64.sqrt()));
        let one = SiteTensor::product(&[cr(0.6), cr(0.0), cr(0.8)]).unwrap().scaled(cr(0.5));
        let t = TiMps::new(aklt.direct_sum(&one).unwrap(), 4, cr(1.0)).unwrap();
        let b = ti_canonical_blocks(&t).unwrap();
        assert_eq!(b.sizes(), vec![2, 1]);
        assert!((b.weights()[1] - 0.5).abs() < 1e-10);
        assert!(max_diff(&t, &b.reassemble(4, cr(1.0)).unwrap()) < 1e-10);
    }
}
