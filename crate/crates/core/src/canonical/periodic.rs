use crate::error::Result;
use crate::linalg::{cr, Mat};
use crate::mps::{ObcMps, PbcMps};
use crate::tensor::SiteTensor;
use crate::transfer;

#[derive(Clone, Debug)]
pub enum PeriodicDecomposition {
    /// `p` divides `N`: the state is Σ_k ψ_k with each ψ_k invariant under
    /// translation by `p`.
    Components { p: usize, projectors: Vec<Mat>, components: Vec<ObcMps> },
    /// `p` does not divide `N`: every amplitude vanishes.
    ZeroState { p: usize, projectors: Vec<Mat> },
}

impl PeriodicDecomposition {
    pub fn period(&self) -> usize {
        match self {
            PeriodicDecomposition::Components { p, .. } | PeriodicDecomposition::ZeroState { p, .. } => *p,
        }
    }

    pub fn projectors(&self) -> &[Mat] {
        match self {
            PeriodicDecomposition::Components { projectors, .. }
            | PeriodicDecomposition::ZeroState { projectors, .. } => projectors,
        }
    }
}

/// Split the chain generated by one block into its `p`-periodic components.
/// Component `k` uses site tensors `P_{k+j} A_i P_{k+j+1}` (indices mod `p`).
pub fn periodic_decomposition(block: &SiteTensor, n_sites: usize) -> Result<PeriodicDecomposition> {
    let (p, projs) = transfer::peripheral_projectors(block)?;
    if !n_sites.is_multiple_of(p) {
        return Ok(PeriodicDecomposition::ZeroState { p, projectors: projs });
    }
    let mut components = Vec::with_capacity(p);
    for k in 0..p {
        let sites: Vec<SiteTensor> = (0..n_sites)
            .map(|j| block.sandwich(&projs[(k + j) % p], &projs[(k + j + 1) % p]))
            .collect::<Result<_>>()?;
        components.push(PbcMps::new(sites, cr(1.0))?.to_obc()?);
    }
    Ok(PeriodicDecomposition::Components { p, projectors: projs, components })
}
