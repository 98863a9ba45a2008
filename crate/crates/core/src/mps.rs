//! MPS records and the contractions shared by every boundary type.
//!
//! All chains are evaluated with trace closure: an open chain is simply one
//! whose outer bonds have dimension 1, so a single set of routines serves
//! open, translation-invariant and site-dependent periodic chains.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, MpsError, Result};
use crate::linalg::{cr, dag, eye, zeros, Mat, C64};
use crate::tensor::SiteTensor;

/// Default cap on the number of amplitudes a dense conversion may allocate.
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

pub trait Chain {
    fn n_sites(&self) -> usize;
    fn site(&self, k: usize) -> &SiteTensor;
    fn prefactor(&self) -> C64;

    fn phys_dim(&self) -> usize {
        self.site(0).d()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalFlag {
    #[default]
    None,
    Left,
    FullCanonical,
}

#[derive(Clone, Debug)]
pub struct ObcMps {
    sites: Vec<SiteTensor>,
    prefactor: C64,
    schmidt: Option<Vec<Vec<f64>>>,
    flag: CanonicalFlag,
}

impl ObcMps {
    pub fn new(sites: Vec<SiteTensor>, prefactor: C64) -> Result<Self> {
        check_chain(&sites, true)?;
        Ok(Self { sites, prefactor, schmidt: None, flag: CanonicalFlag::None })
    }

    pub fn product(vectors: &[Vec<C64>]) -> Result<Self> {
        let sites = vectors.iter().map(|v| SiteTensor::product(v)).collect::<Result<Vec<_>>>()?;
        Self::new(sites, cr(1.0))
    }

    /// Attach canonical metadata. `schmidt[m]` is the spectrum on the bond to
    /// the right of site `m` (`m = 0..N-2`).
    pub fn with_canonical(mut self, schmidt: Option<Vec<Vec<f64>>>, flag: CanonicalFlag) -> Result<Self> {
        if let Some(s) = &schmidt {
            if s.len() + 1 != self.sites.len() {
                return mismatch(format!("{} Schmidt spectra for {} sites", s.len(), self.sites.len()));
            }
            for (m, lam) in s.iter().enumerate() {
                if lam.len() != self.sites[m].d_right() {
                    return mismatch(format!("Schmidt spectrum {m} has wrong length"));
                }
            }
        }
        self.schmidt = schmidt;
        self.flag = flag;
        Ok(self)
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<SiteTensor> {
        self.sites
    }

    pub fn schmidt(&self) -> Option<&[Vec<f64>]> {
        self.schmidt.as_deref()
    }

    pub fn flag(&self) -> CanonicalFlag {
        self.flag
    }

    pub fn with_prefactor(mut self, p: C64) -> Self {
        self.prefactor = p;
        self
    }

    /// Bond dimensions `D_1..D_{N+1}` (outer ones equal 1).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sites.iter().map(|s| s.d_left()).collect();
        v.push(self.sites.last().map_or(1, |s| s.d_right()));
        v
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }
}

impl Chain for ObcMps {
    fn n_sites(&self) -> usize {
        self.sites.len()
    }
    fn site(&self, k: usize) -> &SiteTensor {
        &self.sites[k]
    }
    fn prefactor(&self) -> C64 {
        self.prefactor
    }
}

/// Translation-invariant chain: one square tensor repeated `n_sites` times.
#[derive(Clone, Debug)]
pub struct TiMps {
    tensor: SiteTensor,
    n_sites: usize,
    prefactor: C64,
}

impl TiMps {
    pub fn new(tensor: SiteTensor, n_sites: usize, prefactor: C64) -> Result<Self> {
        if !tensor.is_square() {
            return mismatch("translation-invariant tensor must be square");
        }
        if n_sites < 2 {
            return invalid("translation-invariant chain needs at least 2 sites");
        }
        Ok(Self { tensor, n_sites, prefactor })
    }

    pub fn tensor(&self) -> &SiteTensor {
        &self.tensor
    }

    pub fn bond(&self) -> usize {
        self.tensor.d_left()
    }

    pub fn with_prefactor(mut self, p: C64) -> Self {
        self.prefactor = p;
        self
    }
}

impl Chain for TiMps {
    fn n_sites(&self) -> usize {
        self.n_sites
    }
    fn site(&self, _k: usize) -> &SiteTensor {
        &self.tensor
    }
    fn prefactor(&self) -> C64 {
        self.prefactor
    }
}

/// Periodic chain with site-dependent tensors, closed by a trace.
#[derive(Clone, Debug)]
pub struct PbcMps {
    sites: Vec<SiteTensor>,
    prefactor: C64,
}

impl PbcMps {
    pub fn new(sites: Vec<SiteTensor>, prefactor: C64) -> Result<Self> {
        check_chain(&sites, false)?;
        Ok(Self { sites, prefactor })
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    /// Open-boundary form: the closing bond index `a` is carried along as an
    /// extra block index, giving bond dimensions `D_1 * D_k` in the bulk.
    pub fn to_obc(&self) -> Result<ObcMps> {
        let n = self.sites.len();
        let d1 = self.sites[0].d_left();
        let mut out = Vec::with_capacity(n);
        for (k, t) in self.sites.iter().enumerate() {
            let mats: Vec<Mat> = (0..t.d())
                .map(|i| {
                    let a = t.mat(i).to_owned();
                    if n == 1 {
                        return Mat::from_elem((1, 1), crate::linalg::trace(&a));
                    }
                    if k == 0 {
                        // row (a) -> (a, beta) flattened
                        let mut m = zeros(1, d1 * t.d_right());
                        for a0 in 0..d1 {
                            for b in 0..t.d_right() {
                                m[[0, a0 * t.d_right() + b]] = a[[a0, b]];
                            }
                        }
                        m
                    } else if k == n - 1 {
                        let mut m = zeros(d1 * t.d_left(), 1);
                        for a0 in 0..d1 {
                            for b in 0..t.d_left() {
                                m[[a0 * t.d_left() + b, 0]] = a[[b, a0]];
                            }
                        }
                        m
                    } else {
                        crate::linalg::kron(&eye(d1), &a)
                    }
                })
                .collect();
            out.push(SiteTensor::from_matrices(&mats)?);
        }
        ObcMps::new(out, self.prefactor)
    }
}

impl Chain for PbcMps {
    fn n_sites(&self) -> usize {
        self.sites.len()
    }
    fn site(&self, k: usize) -> &SiteTensor {
        &self.sites[k]
    }
    fn prefactor(&self) -> C64 {
        self.prefactor
    }
}

/// Any of the three chain kinds.
#[derive(Clone, Debug)]
pub enum AnyMps {
    Obc(ObcMps),
    Ti(TiMps),
    Pbc(PbcMps),
}

impl AnyMps {
    pub fn as_chain(&self) -> &dyn Chain {
        match self {
            AnyMps::Obc(m) => m,
            AnyMps::Ti(m) => m,
            AnyMps::Pbc(m) => m,
        }
    }

    /// Open-boundary form of the same state (exact, possibly larger bonds).
    pub fn to_obc(&self) -> Result<ObcMps> {
        match self {
            AnyMps::Obc(m) => Ok(m.clone()),
            AnyMps::Ti(m) => {
                PbcMps::new(vec![m.tensor.clone(); m.n_sites], m.prefactor)?.to_obc()
            }
            AnyMps::Pbc(m) => m.to_obc(),
        }
    }
}

impl Chain for AnyMps {
    fn n_sites(&self) -> usize {
        self.as_chain().n_sites()
    }
    fn site(&self, k: usize) -> &SiteTensor {
        self.as_chain().site(k)
    }
    fn prefactor(&self) -> C64 {
        self.as_chain().prefactor()
    }
}

fn check_chain(sites: &[SiteTensor], open: bool) -> Result<()> {
    let Some(first) = sites.first() else {
        return invalid("chain needs at least one site");
    };
    let d = first.d();
    for (k, s) in sites.iter().enumerate() {
        if s.d() != d {
            return mismatch(format!("site {k} has d={} but site 0 has d={d}", s.d()));
        }
        if k + 1 < sites.len() && s.d_right() != sites[k + 1].d_left() {
            return mismatch(format!(
                "bond {k}: d_right={} but next d_left={}",
                s.d_right(),
                sites[k + 1].d_left()
            ));
        }
    }
    let last = sites.last().unwrap();
    if open {
        if first.d_left() != 1 || last.d_right() != 1 {
            return mismatch("open chain must start and end with bond dimension 1");
        }
    } else if first.d_left() != last.d_right() {
        return mismatch("periodic chain must close: first d_left != last d_right");
    }
    Ok(())
}

/// Per-site operators; `None` means identity.
#[derive(Clone, Debug)]
pub struct ProductObservable {
    ops: Vec<Option<Mat>>,
}

impl ProductObservable {
    pub fn identity(n: usize) -> Self {
        Self { ops: vec![None; n] }
    }

    pub fn from_ops(ops: Vec<Option<Mat>>) -> Self {
        Self { ops }
    }

    /// Place `op` at `site`, builder style.
    pub fn with(mut self, site: usize, op: Mat) -> Self {
        self.ops[site] = Some(op);
        self
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, k: usize) -> Option<&Mat> {
        self.ops[k].as_ref()
    }
}

fn check_index_string(chain: &dyn Chain, idx: &[usize]) -> Result<()> {
    if idx.len() != chain.n_sites() {
        return mismatch(format!("index string has length {}, chain has {} sites", idx.len(), chain.n_sites()));
    }
    let d = chain.phys_dim();
    if let Some(&bad) = idx.iter().find(|&&i| i >= d) {
        return invalid(format!("index {bad} outside alphabet of size {d}"));
    }
    Ok(())
}

/// Coefficient of `|i_1 ... i_N>`: prefactor times tr(A_{i_1} ... A_{i_N}).
pub fn amplitude(chain: &dyn Chain, idx: &[usize]) -> Result<C64> {
    check_index_string(chain, idx)?;
    Ok(chain.prefactor() * raw_amplitude(chain, idx))
}

pub(crate) fn raw_amplitude(chain: &dyn Chain, idx: &[usize]) -> C64 {
    let mut m = chain.site(0).mat(idx[0]).to_owned();
    for (k, &i) in idx.iter().enumerate().skip(1) {
        m = m.dot(&chain.site(k).mat(i));
    }
    crate::linalg::trace(&m)
}

/// Mixed environment contraction ⟨a|⊗S_k|b⟩ without prefactors.
///
/// The environment is a set of matrices indexed by the pair of closing bond
/// indices; for open chains that set has a single 1x1 element.
fn contract(a: &dyn Chain, b: &dyn Chain, obs: Option<&ProductObservable>) -> Result<C64> {
    let n = a.n_sites();
    if b.n_sites() != n {
        return mismatch("chains have different lengths");
    }
    if a.phys_dim() != b.phys_dim() {
        return mismatch("chains have different physical dimension");
    }
    let d = a.phys_dim();
    if let Some(o) = obs {
        if o.len() != n {
            return mismatch(format!("observable has {} sites, chain has {n}", o.len()));
        }
        for k in 0..n {
            if let Some(s) = o.op(k) {
                if s.dim() != (d, d) {
                    return mismatch(format!("operator at site {k} is {:?}, expected {d}x{d}", s.dim()));
                }
            }
        }
    }
    let da = a.site(0).d_left();
    let db = b.site(0).d_left();
    // env[(x, y)] is da_k x db_k, started from unit vectors on the closing bond.
    let mut env: Vec<Mat> = Vec::with_capacity(da * db);
    for x in 0..da {
        for y in 0..db {
            let mut m = zeros(da, db);
            m[[x, y]] = cr(1.0);
            env.push(m);
        }
    }
    for k in 0..n {
        let sa = a.site(k);
        let sb = b.site(k);
        let amats: Vec<Mat> = (0..d).map(|i| dag(&sa.mat(i).to_owned())).collect();
        let bmats: Vec<Mat> = match obs.and_then(|o| o.op(k)) {
            None => sb.matrices(),
            Some(s) => (0..d)
                .map(|i| {
                    let mut acc = zeros(sb.d_left(), sb.d_right());
                    for j in 0..d {
                        let sij = s[[i, j]];
                        if sij != cr(0.0) {
                            acc = acc + sb.mat(j).mapv(|z| z * sij);
                        }
                    }
                    acc
                })
                .collect(),
        };
        for e in env.iter_mut() {
            let mut next = zeros(sa.d_right(), sb.d_right());
            for i in 0..d {
                next = next + amats[i].dot(&*e).dot(&bmats[i]);
            }
            *e = next;
        }
    }
    let mut total = cr(0.0);
    for x in 0..da {
        for y in 0..db {
            total += env[x * db + y][[x, y]];
        }
    }
    Ok(total)
}

/// ⟨ψ|⊗_k S_k|ψ⟩ (not divided by the norm).
pub fn expectation(chain: &dyn Chain, obs: &ProductObservable) -> Result<C64> {
    let p = chain.prefactor();
    Ok(p.norm_sqr() * contract(chain, chain, Some(obs))?)
}

/// ⟨ψ|⊗_k S_k|ψ⟩ / ⟨ψ|ψ⟩.
pub fn normalized_expectation(chain: &dyn Chain, obs: &ProductObservable) -> Result<C64> {
    let n = norm_sqr(chain)?;
    if n <= 0.0 {
        return Err(MpsError::InvalidInput("zero state has no expectation values".into()));
    }
    Ok(expectation(chain, obs)? / n)
}

/// ⟨a|b⟩.
pub fn overlap(a: &dyn Chain, b: &dyn Chain) -> Result<C64> {
    Ok(a.prefactor().conj() * b.prefactor() * contract(a, b, None)?)
}

pub fn norm_sqr(chain: &dyn Chain) -> Result<f64> {
    Ok(overlap(chain, chain)?.re.max(0.0))
}

pub fn dense_len(d: usize, n: usize) -> u128 {
    (d as u128).saturating_pow(n as u32)
}

pub fn check_cap(d: usize, n: usize, cap: usize) -> Result<usize> {
    let needed = dense_len(d, n);
    if needed > cap as u128 {
        return Err(MpsError::CapExceeded { needed, cap });
    }
    Ok(needed as usize)
}

/// All `d^N` amplitudes, site 0 most significant.
pub fn to_dense(chain: &dyn Chain, cap: usize) -> Result<Array1<C64>> {
    let n = chain.n_sites();
    let d = chain.phys_dim();
    let total = check_cap(d, n, cap)?;
    let d0 = chain.site(0).d_left();
    // per closing index a0: matrix (prefix strings) x (current bond)
    let mut parts: Vec<Mat> = (0..d0)
        .map(|a0| {
            let mut m = zeros(1, d0);
            m[[0, a0]] = cr(1.0);
            m
        })
        .collect();
    for k in 0..n {
        let s = chain.site(k);
        for p in parts.iter_mut() {
            let rows = p.nrows();
            let mut next = zeros(rows * d, s.d_right());
            for r in 0..rows {
                let row = p.row(r);
                for i in 0..d {
                    let v = row.dot(&s.mat(i));
                    next.row_mut(r * d + i).assign(&v);
                }
            }
            *p = next;
        }
    }
    let pf = chain.prefactor();
    let mut out = Array1::zeros(total);
    for (a0, p) in parts.iter().enumerate() {
        for r in 0..total {
            out[r] += p[[r, a0]];
        }
    }
    out.mapv_inplace(|z| z * pf);
    Ok(out)
}

/// Decode a flat dense index into a string (site 0 most significant).
pub fn index_to_string(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

pub fn string_to_index(s: &[usize], d: usize) -> usize {
    s.iter().fold(0, |acc, &i| acc * d + i)
}

/// Full-canonical open chain from a dense vector by a right-to-left SVD sweep.
///
/// Sites satisfy Σ_i A_i A_i† = 𝟙, the bond spectra are the squared singular
/// values of the normalised state, and the norm and global phase go into the
/// prefactor. Singular values at or below `tol * s_max` are discarded.
pub fn from_dense(psi: &[C64], d: usize, tol: f64) -> Result<ObcMps> {
    if d < 2 {
        return invalid("physical dimension must be at least 2");
    }
    let len = psi.len();
    let mut n = 0usize;
    let mut p = 1usize;
    while p < len {
        p = p.checked_mul(d).ok_or_else(|| MpsError::InvalidInput("vector too long".into()))?;
        n += 1;
    }
    if p != len || n == 0 {
        return invalid(format!("length {len} is not a positive power of d={d}"));
    }
    let nrm = crate::linalg::vec_norm(psi);
    if nrm == 0.0 || !nrm.is_finite() {
        return invalid("cannot decompose the zero (or non-finite) vector");
    }
    let mut sites: Vec<SiteTensor> = Vec::with_capacity(n);
    let mut schmidt: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    // remaining left part, shape (d^k, r) with r the current right bond
    let mut rest = Mat::from_shape_fn((len, 1), |(r, _)| psi[r] / nrm);
    for _k in (1..n).rev() {
        let r = rest.ncols();
        let rows = rest.nrows() / d;
        // regroup (prefix, i, beta) -> rows prefix, cols (i, beta)
        let mut m = zeros(rows, d * r);
        for pre in 0..rows {
            for i in 0..d {
                for b in 0..r {
                    m[[pre, i * r + b]] = rest[[pre * d + i, b]];
                }
            }
        }
        let (u, s, vt) = crate::linalg::svd_thin(&m)?;
        let keep = crate::linalg::rank_of(&s, tol).max(1);
        let vt = vt.slice(ndarray::s![..keep, ..]).to_owned();
        sites.push(SiteTensor::from_unfold_right(&vt, d)?);
        schmidt.push(s[..keep].iter().map(|x| x * x).collect());
        let mut us = u.slice(ndarray::s![.., ..keep]).to_owned();
        for j in 0..keep {
            us.column_mut(j).mapv_inplace(|z| z * s[j]);
        }
        rest = us;
    }
    // first site: rest is (d, r); pull out its norm and phase
    let r = rest.ncols();
    let mut first = zeros(1, d * r);
    for i in 0..d {
        for b in 0..r {
            first[[0, i * r + b]] = rest[[i, b]];
        }
    }
    let fnorm = first.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    first.mapv_inplace(|z| z / fnorm);
    sites.push(SiteTensor::from_unfold_right(&first, d)?);
    sites.reverse();
    schmidt.reverse();
    let mut prefactor = cr(nrm * fnorm);
    for s in sites.iter_mut() {
        let ph = s.phase_anchor();
        *s = s.scaled(ph.conj());
        prefactor *= ph;
    }
    for lam in schmidt.iter_mut() {
        let t: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|x| *x /= t);
    }
    ObcMps::new(sites, prefactor)?.with_canonical(Some(schmidt), CanonicalFlag::FullCanonical)
}

/// Apply a `d^k x d^k` operator to sites `targets` of a dense state.
/// `targets[0]` is the most significant factor of the operator.
pub fn apply_local(psi: &Array1<C64>, d: usize, n: usize, op: &Mat, targets: &[usize]) -> Result<Array1<C64>> {
    let k = targets.len();
    let dim = d.pow(k as u32);
    if op.dim() != (dim, dim) {
        return mismatch(format!("operator is {:?}, expected {dim}x{dim}", op.dim()));
    }
    if psi.len() != d.pow(n as u32) {
        return mismatch("dense vector length does not match d^N");
    }
    let mut seen = vec![false; n];
    for &t in targets {
        if t >= n || seen[t] {
            return invalid(format!("bad target list {targets:?}"));
        }
        seen[t] = true;
    }
    let strides: Vec<usize> = targets.iter().map(|&t| d.pow((n - 1 - t) as u32)).collect();
    let mut out = Array1::zeros(psi.len());
    let mut sub = vec![0usize; k];
    for base in 0..psi.len() {
        // only visit bases where all target digits are zero
        if strides.iter().any(|&st| (base / st) % d != 0) {
            continue;
        }
        let offs: Vec<usize> = (0..dim)
            .map(|c| {
                let mut rem = c;
                for j in (0..k).rev() {
                    sub[j] = rem % d;
                    rem /= d;
                }
                base + sub.iter().zip(&strides).map(|(a, b)| a * b).sum::<usize>()
            })
            .collect();
        for (r, &or) in offs.iter().enumerate() {
            let mut acc = cr(0.0);
            for (c, &oc) in offs.iter().enumerate() {
                acc += op[[r, c]] * psi[oc];
            }
            out[or] = acc;
        }
    }
    Ok(out)
}

/// Dense ⟨ψ|⊗S_k|ψ⟩ for cross-checking.
pub fn dense_expectation(psi: &Array1<C64>, d: usize, n: usize, obs: &ProductObservable) -> Result<C64> {
    let mut phi = psi.clone();
    for k in 0..n {
        if let Some(s) = obs.op(k) {
            phi = apply_local(&phi, d, n, s, &[k])?;
        }
    }
    Ok(psi.iter().zip(phi.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Eigenvalues (descending) of the reduced density matrix of the first `m`
/// sites of a dense state, normalised to unit trace.
pub fn dense_cut_spectrum(psi: &Array1<C64>, d: usize, n: usize, m: usize) -> Result<Vec<f64>> {
    let rows = d.pow(m as u32);
    let cols = d.pow((n - m) as u32);
    let mat = Mat::from_shape_fn((rows, cols), |(r, c)| psi[r * cols + c]);
    let (_, s, _) = crate::linalg::svd_thin(&mat)?;
    let tot: f64 = s.iter().map(|x| x * x).sum();
    Ok(s.iter().map(|x| x * x / tot).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_complex, vec_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(seed: u64, len: usize) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_complex(&mut rng, len, 1).iter().copied().collect()
    }

    #[test]
    fn dense_roundtrip() {
        let psi = random_vec(1, 3usize.pow(5));
        let mps = from_dense(&psi, 3, 1e-12).unwrap();
        let back = to_dense(&mps, DEFAULT_DENSE_CAP).unwrap();
        let err: f64 = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert_eq!(mps.bond_dims(), vec![1, 3, 9, 9, 3, 1]);
    }

    #[test]
    fn bell_spectrum() {
        let h = 1.0 / 2f64.sqrt();
        let psi = vec![cr(h), cr(0.0), cr(0.0), cr(h)];
        let mps = from_dense(&psi, 2, 1e-12).unwrap();
        let lam = &mps.schmidt().unwrap()[0];
        assert!((lam[0] - 0.5).abs() < 1e-14 && (lam[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn pbc_to_obc_preserves_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sites: Vec<SiteTensor> = (0..4)
            .map(|_| {
                let mats: Vec<Mat> = (0..2).map(|_| random_complex(&mut rng, 2, 2)).collect();
                SiteTensor::from_matrices(&mats).unwrap()
            })
            .collect();
        let pbc = PbcMps::new(sites, cr(0.7)).unwrap();
        let a = to_dense(&pbc, 1 << 10).unwrap();
        let b = to_dense(&pbc.to_obc().unwrap(), 1 << 10).unwrap();
        assert!(vec_norm(&(a - b).to_vec()) < 1e-12);
    }

    #[test]
    fn overlap_matches_dense() {
        let psi = random_vec(2, 64);
        let phi = random_vec(3, 64);
        let a = from_dense(&psi, 2, 1e-12).unwrap();
        let b = from_dense(&phi, 2, 1e-12).unwrap();
        let exact: C64 = psi.iter().zip(&phi).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap(&a, &b).unwrap() - exact).norm() < 1e-11);
    }

    #[test]
    fn cap_is_enforced() {
        let mps = ObcMps::product(&vec![vec![cr(1.0), cr(0.0)]; 21]).unwrap();
        assert!(matches!(to_dense(&mps, DEFAULT_DENSE_CAP), Err(MpsError::CapExceeded { .. })));
    }

    #[test]
    fn apply_local_two_sites_reversed() {
        // X on site 2 of |000> via a 2-site operator 1 (x) X on targets [0, 2]
        let x = crate::linalg::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let op = crate::linalg::kron(&eye(2), &x);
        let mut psi = Array1::zeros(8);
        psi[0] = cr(1.0);
        let out = apply_local(&psi, 2, 3, &op, &[0, 2]).unwrap();
        assert_eq!(out[1], cr(1.0));
        let out = apply_local(&psi, 2, 3, &op, &[2, 0]).unwrap();
        assert_eq!(out[4], cr(1.0));
    }
}
