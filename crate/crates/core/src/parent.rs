//! Parent Hamiltonians: the spaces G_L spanned by a chain's local
//! restrictions, the projector Hamiltonians built from them, ground-space
//! certificates, the Knabe finite-size gap test and regrouping.

use ndarray::{s, Array1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::canonical::{gauge_to_canonical, CanonicalBlocks};
use crate::error::{invalid, mismatch, MpsError, Result};
use crate::hamiltonian::{self, Boundary, ChainHamiltonian, Hamiltonian, LocalHamiltonian, Term, ED_MAX_DIM};
use crate::linalg::{self, cr, dag, eye, Mat, C64};
use crate::mps::{self, CanonicalFlag, Chain, ObcMps, TiMps};
use crate::tensor::SiteTensor;

const SPAN_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of ‖H‖ count as zero.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GSubspace {
    pub l: usize,
    pub d: usize,
    /// Orthonormal columns in the `d^L` dimensional window space.
    pub basis: Mat,
    pub block_dims: Vec<usize>,
    /// Whether the per-block spaces were found to be linearly independent.
    pub direct: bool,
}

impl GSubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> Mat {
        self.basis.dot(&dag(&self.basis))
    }
}

/// Matrix whose column span is {Σ tr(X A_{i_1}⋯A_{i_L}) |i_1⋯i_L⟩}: row `s`
/// holds the flattened product for string `s`.
fn window_generators(t: &SiteTensor, l: usize) -> Mat {
    let d = t.d();
    let mats = t.matrices();
    let mut prods = vec![eye(t.d_left())];
    for _ in 0..l {
        prods = prods.iter().flat_map(|p| mats.iter().map(move |a| p.dot(a))).collect();
    }
    let (dl, dr) = (t.d_left(), t.d_right());
    let mut g = Mat::zeros((d.pow(l as u32), dl * dr));
    for (sidx, p) in prods.iter().enumerate() {
        g.row_mut(sidx).assign(&Array1::from_iter(p.iter().copied()));
    }
    g
}

/// G_L of a list of square tensors (the blocks of a canonical form).
pub fn g_space_tensors(tensors: &[SiteTensor], l: usize, cap: usize) -> Result<GSubspace> {
    if l == 0 || tensors.is_empty() {
        return invalid("g_space needs L >= 1 and at least one tensor");
    }
    let d = tensors[0].d();
    if tensors.iter().any(|t| t.d() != d || !t.is_square()) {
        return mismatch("block tensors must be square with a common physical dimension");
    }
    let dim = mps::check_cap(d, l, cap)?;
    let mut block_dims = Vec::new();
    let mut all = Mat::zeros((dim, 0));
    for t in tensors {
        let g = window_generators(t, l);
        let o = linalg::orth(&g, SPAN_TOL)?;
        block_dims.push(o.ncols());
        all = ndarray::concatenate![ndarray::Axis(1), all, o];
    }
    let basis = linalg::orth(&all, SPAN_TOL)?;
    let direct = basis.ncols() == block_dims.iter().sum::<usize>();
    Ok(GSubspace { l, d, basis, block_dims, direct })
}

pub fn g_space(blocks: &CanonicalBlocks, l: usize, cap: usize) -> Result<GSubspace> {
    let ts: Vec<SiteTensor> = blocks.blocks.iter().map(|b| b.tensor.clone()).collect();
    g_space_tensors(&ts, l, cap)
}

/// Projector onto the orthogonal complement of G_L.
pub fn parent_term(g: &GSubspace) -> Mat {
    eye(g.basis.nrows()) - g.projector()
}

/// `H = Σ_j τ^j(𝟙 − P_{G_L})` on `n` sites.
pub fn parent_hamiltonian(blocks: &CanonicalBlocks, l: usize, n: usize, boundary: Boundary, cap: usize) -> Result<LocalHamiltonian> {
    let g = g_space(blocks, l, cap)?;
    LocalHamiltonian::new(parent_term(&g), g.d, n, boundary)
}

/// Same construction for a single tensor, without a block decomposition.
pub fn parent_hamiltonian_for_tensor(t: &SiteTensor, l: usize, n: usize, boundary: Boundary, cap: usize) -> Result<LocalHamiltonian> {
    let g = g_space_tensors(std::slice::from_ref(t), l, cap)?;
    LocalHamiltonian::new(parent_term(&g), g.d, n, boundary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundSpaceMethod {
    Dense,
    FrustrationFree,
}

#[derive(Clone, Debug)]
pub struct GroundSpace {
    pub dim: usize,
    /// Orthonormal kernel vectors as columns.
    pub basis: Mat,
    pub ground_energy: f64,
    /// Smallest eigenvalue above the kernel threshold.
    pub spectral_margin: Option<f64>,
    pub method: GroundSpaceMethod,
}

/// Kernel of `h`. Chains up to [`ED_MAX_DIM`] states are diagonalised
/// densely; longer chains with positive semidefinite terms use the exact
/// intersection of the term kernels, built site by site, and a Lanczos
/// estimate of the margin on the complement.
pub fn ground_space(h: &dyn Hamiltonian, cap: usize) -> Result<GroundSpace> {
    let (d, n) = (h.phys_dim(), h.n_sites());
    let dim = mps::check_cap(d, n, cap)?;
    if dim <= ED_MAX_DIM {
        return dense_ground_space(h, cap);
    }
    let terms = h.terms();
    for t in &terms {
        let (w, _) = linalg::eigh(&t.op)?;
        if w.first().copied().unwrap_or(0.0) < -1e-10 {
            return Err(MpsError::OutsideClass(format!(
                "{dim} states exceed dense diagonalisation and the terms are not positive semidefinite"
            )));
        }
    }
    let basis = intersect_kernels(d, n, &terms, cap)?;
    let kdim = basis.ncols();
    let apply = |v: &Array1<C64>| hamiltonian::apply(h, v);
    let low = lanczos_lowest(&apply, dim, &basis, 120, 0x6c61)?;
    let (ground_energy, margin) = if kdim > 0 { (0.0, low) } else { (low.unwrap_or(f64::NAN), None) };
    Ok(GroundSpace { dim: kdim, basis, ground_energy, spectral_margin: margin, method: GroundSpaceMethod::FrustrationFree })
}

fn dense_ground_space(h: &dyn Hamiltonian, cap: usize) -> Result<GroundSpace> {
    let m = hamiltonian::dense_matrix(h, cap)?;
    let (w, v) = linalg::eigh(&m)?;
    let norm = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let thr = KERNEL_TOL * norm.max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i].abs() <= thr).collect();
    let margin = w.iter().copied().filter(|&x| x > thr).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |y| y.min(x))));
    Ok(GroundSpace {
        dim: keep.len(),
        basis: v.select(ndarray::Axis(1), &keep),
        ground_energy: w[0],
        spectral_margin: margin,
        method: GroundSpaceMethod::Dense,
    })
}

/// Common kernel of positive semidefinite terms: grow an orthonormal basis of
/// the vectors on sites `0..k` annihilated by every term supported there,
/// then impose the terms that wrap around the chain.
fn intersect_kernels(d: usize, n: usize, terms: &[Term], cap: usize) -> Result<Mat> {
    let mut local: Vec<Vec<&Term>> = vec![Vec::new(); n];
    let mut wrapping: Vec<&Term> = Vec::new();
    for t in terms {
        let lo = *t.sites.iter().min().unwrap_or(&0);
        let hi = *t.sites.iter().max().unwrap_or(&0);
        let contiguous = t.sites.iter().enumerate().all(|(k, &s)| s == lo + k);
        if contiguous {
            local[hi].push(t);
        } else {
            wrapping.push(t);
        }
    }
    let mut basis = eye(1);
    for k in 0..n {
        let r = basis.ncols();
        let len = basis.nrows() * d;
        if (len as u128) * (r * d) as u128 > (cap as u128) * 16 {
            return Err(MpsError::CapExceeded { needed: (len as u128) * (r * d) as u128, cap: cap * 16 });
        }
        let mut ext = Mat::zeros((len, r * d));
        for c in 0..r {
            for i in 0..d {
                for row in 0..basis.nrows() {
                    ext[[row * d + i, c * d + i]] = basis[[row, c]];
                }
            }
        }
        basis = restrict(&ext, d, k + 1, &local[k])?;
        if basis.ncols() == 0 {
            return Ok(Mat::zeros((d.pow(n as u32), 0)));
        }
    }
    restrict(&basis, d, n, &wrapping)
}

/// Columns of `w` (orthonormal) combined to lie in the kernel of every term.
fn restrict(w: &Mat, d: usize, n: usize, terms: &[&Term]) -> Result<Mat> {
    if terms.is_empty() {
        return Ok(w.clone());
    }
    let r = w.ncols();
    let mut stacked = Mat::zeros((w.nrows() * terms.len(), r));
    for c in 0..r {
        let col = w.column(c).to_owned();
        for (j, t) in terms.iter().enumerate() {
            let v = mps::apply_local(&col, d, n, &t.op, &t.sites)?;
            stacked.slice_mut(s![j * w.nrows()..(j + 1) * w.nrows(), c]).assign(&v);
        }
    }
    let coeff = if stacked.nrows() >= r {
        let (_, sv, vt) = linalg::svd_thin(&stacked)?;
        let keep: Vec<usize> = (0..r).filter(|&i| sv[i] <= KERNEL_TOL).collect();
        dag(&vt.select(ndarray::Axis(0), &keep))
    } else {
        linalg::null_space(&stacked, KERNEL_TOL)?
    };
    Ok(w.dot(&coeff))
}

/// Lowest eigenvalue of a Hermitian operator on the orthogonal complement of
/// the columns of `deflate` (Lanczos with full reorthogonalisation).
pub fn lanczos_lowest(
    apply: &dyn Fn(&Array1<C64>) -> Result<Array1<C64>>,
    dim: usize,
    deflate: &Mat,
    max_iter: usize,
    seed: u64,
) -> Result<Option<f64>> {
    let project = |v: &mut Array1<C64>, basis: &[Array1<C64>]| {
        for c in 0..deflate.ncols() {
            let col = deflate.column(c);
            let ov: C64 = col.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v.zip_mut_with(&col, |x, y| *x -= ov * y);
        }
        for q in basis {
            let ov: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v.zip_mut_with(q, |x, y| *x -= ov * y);
        }
    };
    let free = dim.saturating_sub(deflate.ncols());
    if free == 0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Array1<C64> = linalg::random_complex(&mut rng, dim, 1).column(0).to_owned();
    project(&mut v, &[]);
    project(&mut v, &[]);
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Ok(None);
    }
    v.mapv_inplace(|z| z / nrm);
    let mut qs: Vec<Array1<C64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let iters = max_iter.min(free);
    for it in 0..iters {
        let q = qs.last().expect("nonempty").clone();
        let mut w = apply(&q)?;
        let a: C64 = q.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
        alpha.push(a.re);
        project(&mut w, &qs);
        project(&mut w, &qs);
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let done = b < 1e-12 || it + 1 == iters;
        if (it + 1) % 10 == 0 || done {
            let lo = tridiagonal_lowest(&alpha, &beta)?;
            if done || (lo - last).abs() < 1e-12 * lo.abs().max(1.0) {
                return Ok(Some(lo));
            }
            last = lo;
        }
        beta.push(b);
        qs.push(w.mapv(|z| z / b));
    }
    Ok(Some(tridiagonal_lowest(&alpha, &beta)?))
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let k = alpha.len();
    let mut t = Mat::zeros((k, k));
    for i in 0..k {
        t[[i, i]] = cr(alpha[i]);
        if i + 1 < k {
            t[[i, i + 1]] = cr(beta[i]);
            t[[i + 1, i]] = cr(beta[i]);
        }
    }
    Ok(linalg::eigh(&t)?.0[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct KnabeReport {
    pub n: usize,
    pub eps_n: f64,
    pub certified: bool,
}

/// Gap `ε_n` of the open chain `Σ_{i=1}^{n} P_{i,i+1}` on `n+1` sites and
/// whether it exceeds `1/n`.
pub fn knabe_check(term: &Mat, d: usize, n: usize, cap: usize) -> Result<KnabeReport> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if term.dim() != (d * d, d * d) {
        return mismatch("Knabe check needs a two-site term");
    }
    if linalg::fro_norm(&(term.dot(term) - term)) > 1e-10 || hamiltonian::hermiticity_residual(term) > 1e-10 {
        return invalid("term is not an orthogonal projector");
    }
    let dim = mps::check_cap(d, n + 1, cap)?;
    if dim > ED_MAX_DIM {
        return Err(MpsError::CapExceeded { needed: dim as u128, cap: ED_MAX_DIM });
    }
    let h = LocalHamiltonian::new(term.clone(), d, n + 1, Boundary::Obc)?;
    let gs = dense_ground_space(&h, cap)?;
    let eps = gs.spectral_margin.unwrap_or(0.0);
    Ok(KnabeReport { n, eps_n: eps, certified: eps > 1.0 / n as f64 })
}

pub fn regroup_tensor(t: &SiteTensor, p: usize) -> Result<SiteTensor> {
    if p == 0 {
        return invalid("block size must be positive");
    }
    let mut acc = t.clone();
    for _ in 1..p {
        acc = acc.merge(t)?;
    }
    Ok(acc)
}

pub fn regroup_ti(mps: &TiMps, p: usize) -> Result<TiMps> {
    if p == 0 || !mps.n_sites().is_multiple_of(p) {
        return invalid(format!("{} sites cannot be grouped in blocks of {p}", mps.n_sites()));
    }
    TiMps::new(regroup_tensor(mps.tensor(), p)?, mps.n_sites() / p, mps.prefactor())
}

pub fn regroup_obc(mps: &ObcMps, p: usize) -> Result<ObcMps> {
    if p == 0 || !mps.n_sites().is_multiple_of(p) {
        return invalid(format!("{} sites cannot be grouped in blocks of {p}", mps.n_sites()));
    }
    let sites: Vec<SiteTensor> = mps
        .sites()
        .chunks(p)
        .map(|c| c[1..].iter().try_fold(c[0].clone(), |acc, t| acc.merge(t)))
        .collect::<Result<_>>()?;
    ObcMps::new(sites, mps.prefactor())
}

/// Two-block form `h̃ = H_{[1..2p]}` of a translation-invariant Hamiltonian.
pub fn regroup_hamiltonian(h: &LocalHamiltonian, p: usize) -> Result<LocalHamiltonian> {
    if p < h.l {
        return invalid(format!("block size {p} is shorter than the interaction length {}", h.l));
    }
    if !h.n_sites.is_multiple_of(p) {
        return invalid(format!("{} sites cannot be grouped in blocks of {p}", h.n_sites));
    }
    if h.onsite.is_some() {
        return invalid("regrouping expects a Hamiltonian without onsite fields");
    }
    let window = LocalHamiltonian::new(h.term.clone(), h.d, 2 * p, Boundary::Obc)?;
    let tilde = hamiltonian::dense_matrix(&window, usize::MAX)?;
    LocalHamiltonian::new(tilde, h.d.pow(p as u32), h.n_sites / p, h.boundary)
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// Smallest eigenvalue of `H̃ − H`.
    pub lower_margin: f64,
    /// Smallest eigenvalue of `2H − H̃`.
    pub upper_margin: f64,
    pub holds: bool,
}

/// Dense check of `H ≤ H̃ ≤ 2H` for the regrouped Hamiltonian.
pub fn sandwich_check(h: &LocalHamiltonian, p: usize, cap: usize) -> Result<SandwichReport> {
    let big = hamiltonian::dense_matrix(h, cap.min(ED_MAX_DIM))?;
    let tilde = hamiltonian::dense_matrix(&regroup_hamiltonian(h, p)?, cap.min(ED_MAX_DIM))?;
    let lower = linalg::eigh(&(&tilde - &big))?.0[0];
    let upper = linalg::eigh(&(big.mapv(|z| z * 2.0) - &tilde))?.0[0];
    Ok(SandwichReport { lower_margin: lower, upper_margin: upper, holds: lower >= -1e-10 && upper >= -1e-10 })
}

/// Open-chain parent Hamiltonian of a chain regrouped into blocks.
#[derive(Clone, Debug)]
pub struct ObcParent {
    pub block_size: usize,
    pub regrouped: ObcMps,
    pub hamiltonian: ChainHamiltonian,
}

/// Whether the block's matrices span all `D_l x D_r` matrices.
fn spans_all(t: &SiteTensor) -> Result<bool> {
    let mut g = Mat::zeros((t.d(), t.d_left() * t.d_right()));
    for i in 0..t.d() {
        g.row_mut(i).assign(&Array1::from_iter(t.mat(i).iter().copied()));
    }
    Ok(linalg::rank(&g, SPAN_TOL)? == t.d_left() * t.d_right())
}

/// Terms `h_{j,j+1} = 𝟙 − P_j` where `P_j` projects onto
/// span{Σ (B^[j]_i B^[j+1]_k)_{αβ} |ik⟩}, after regrouping `block_size` sites.
pub fn obc_parent_hamiltonian(mps: &ObcMps, block_size: usize) -> Result<ObcParent> {
    let gauged = if mps.flag() == CanonicalFlag::FullCanonical { mps.clone() } else { gauge_to_canonical(mps)?.0 };
    let reg = regroup_obc(&gauged, block_size)?;
    let m = reg.n_sites();
    if m < 2 {
        return invalid("need at least two blocks");
    }
    for (j, b) in reg.sites().iter().enumerate() {
        if !spans_all(b)? {
            return Err(MpsError::OutsideClass(format!("block {j} is not injective ({}x{} bond)", b.d_left(), b.d_right())));
        }
    }
    let db = reg.phys_dim();
    let mut terms = Vec::with_capacity(m - 1);
    for j in 0..m - 1 {
        let pair = reg.sites()[j].merge(&reg.sites()[j + 1])?;
        let mut g = Mat::zeros((db * db, pair.d_left() * pair.d_right()));
        for i in 0..db * db {
            g.row_mut(i).assign(&Array1::from_iter(pair.mat(i).iter().copied()));
        }
        let o = linalg::orth(&g, SPAN_TOL)?;
        terms.push(Term { sites: vec![j, j + 1], op: eye(db * db) - o.dot(&dag(&o)) });
    }
    Ok(ObcParent { block_size, regrouped: reg, hamiltonian: ChainHamiltonian::new(db, m, terms)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParentCertificate {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub boundary: Boundary,
    pub kernel_dim: usize,
    pub block_count_b: usize,
    pub spectral_margin: Option<f64>,
    /// `b` when `L ≥ 3(b−1)(L₀+1)+1`, where the kernel must be exactly `b`-dimensional.
    pub expected_dim: Option<usize>,
    /// Largest `‖h_j ψ‖` over terms for the generating state.
    pub state_residual: Option<f64>,
    pub knabe: Option<KnabeReport>,
}

/// Build the parent Hamiltonian of `blocks` and certify its ground space.
/// `l0` is the largest injectivity length among the blocks (if known).
pub fn certify_parent(
    blocks: &CanonicalBlocks,
    l0: Option<usize>,
    l: usize,
    n: usize,
    boundary: Boundary,
    state: Option<&dyn Chain>,
    cap: usize,
) -> Result<(LocalHamiltonian, GroundSpace, ParentCertificate)> {
    let h = parent_hamiltonian(blocks, l, n, boundary, cap)?;
    let gs = ground_space(&h, cap)?;
    let b = blocks.count();
    let expected = l0.filter(|&l0| l > 3 * (b - 1) * (l0 + 1)).map(|_| b);
    if let Some(e) = expected {
        if e != gs.dim {
            return Err(MpsError::Numerical(format!("kernel dimension {} differs from block count {e}", gs.dim)));
        }
    }
    let state_residual = match state {
        Some(c) => {
            let psi = mps::to_dense(c, cap)?;
            Some(hamiltonian::term_residual(&h, &psi)?)
        }
        None => None,
    };
    let cert = ParentCertificate {
        n,
        l,
        boundary,
        kernel_dim: gs.dim,
        block_count_b: b,
        spectral_margin: gs.spectral_margin,
        expected_dim: expected,
        state_residual,
        knabe: None,
    };
    Ok((h, gs, cert))
}

/// Largest `‖h_j ψ_j‖` over the separate block states `ψ_j` of `blocks`.
pub fn block_states_residual(blocks: &CanonicalBlocks, h: &dyn Hamiltonian, cap: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for b in &blocks.blocks {
        let t = TiMps::new(b.tensor.clone(), h.n_sites(), cr(1.0))?;
        let psi = mps::to_dense(&t, cap)?;
        if psi.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        worst = worst.max(hamiltonian::term_residual(h, &psi)?);
    }
    Ok(worst)
}
