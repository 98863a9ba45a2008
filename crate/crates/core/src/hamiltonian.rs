//! Local Hamiltonians on finite chains and their dense realisation.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, MpsError, Result};
use crate::linalg::{self, cr, dag, fro_norm, kron, Mat, C64};
use crate::mps;
use crate::states::{self, sigma_x, sigma_y, sigma_z};

/// Largest Hilbert-space dimension diagonalised densely.
pub const ED_MAX_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Obc,
    Pbc,
}

impl std::str::FromStr for Boundary {
    type Err = MpsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obc" => Ok(Boundary::Obc),
            "pbc" => Ok(Boundary::Pbc),
            _ => Err(MpsError::InvalidInput(format!("unknown boundary '{s}'"))),
        }
    }
}

/// One operator acting on `sites` (first entry is the most significant factor).
#[derive(Clone, Debug)]
pub struct Term {
    pub sites: Vec<usize>,
    pub op: Mat,
}

pub trait Hamiltonian {
    fn n_sites(&self) -> usize;
    fn phys_dim(&self) -> usize;
    fn terms(&self) -> Vec<Term>;
}

/// Translation-invariant sum of an `L`-site term, plus an optional one-site
/// field on every site.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    pub l: usize,
    pub term: Mat,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub d: usize,
    pub onsite: Option<Mat>,
}

fn interaction_length(term: &Mat, d: usize) -> Result<usize> {
    if term.nrows() != term.ncols() || d < 2 {
        return mismatch("term must be square with d >= 2");
    }
    let mut l = 0;
    let mut dim = 1;
    while dim < term.nrows() {
        dim *= d;
        l += 1;
    }
    if dim != term.nrows() || l == 0 {
        return mismatch(format!("term size {} is not a power of d = {d}", term.nrows()));
    }
    Ok(l)
}

pub fn hermiticity_residual(m: &Mat) -> f64 {
    fro_norm(&(m - &dag(m)))
}

impl LocalHamiltonian {
    pub fn new(term: Mat, d: usize, n_sites: usize, boundary: Boundary) -> Result<Self> {
        let l = interaction_length(&term, d)?;
        if hermiticity_residual(&term) > 1e-10 * fro_norm(&term).max(1.0) {
            return invalid("term is not Hermitian");
        }
        if n_sites < l {
            return invalid(format!("{n_sites} sites cannot host a {l}-site term"));
        }
        if boundary == Boundary::Pbc && n_sites < 2 {
            return invalid("periodic chain needs at least 2 sites");
        }
        Ok(LocalHamiltonian { l, term, n_sites, boundary, d, onsite: None })
    }

    pub fn with_onsite(mut self, field: Mat) -> Result<Self> {
        if field.dim() != (self.d, self.d) || hermiticity_residual(&field) > 1e-10 {
            return invalid("onsite field must be a Hermitian d x d matrix");
        }
        self.onsite = Some(field);
        Ok(self)
    }

    /// Starting sites of the translated terms.
    pub fn positions(&self) -> Vec<usize> {
        match self.boundary {
            Boundary::Obc => (0..=self.n_sites - self.l).collect(),
            Boundary::Pbc => (0..self.n_sites).collect(),
        }
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        fro_norm(&(self.term.dot(&self.term) - &self.term)) <= tol
    }
}

impl Hamiltonian for LocalHamiltonian {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn phys_dim(&self) -> usize {
        self.d
    }

    fn terms(&self) -> Vec<Term> {
        let n = self.n_sites;
        let mut out: Vec<Term> = self
            .positions()
            .into_iter()
            .map(|j| Term { sites: (0..self.l).map(|k| (j + k) % n).collect(), op: self.term.clone() })
            .collect();
        if let Some(f) = &self.onsite {
            out.extend((0..n).map(|k| Term { sites: vec![k], op: f.clone() }));
        }
        out
    }
}

/// Sum of arbitrary (site-dependent) terms.
#[derive(Clone, Debug)]
pub struct ChainHamiltonian {
    pub d: usize,
    pub n_sites: usize,
    pub terms: Vec<Term>,
}

impl ChainHamiltonian {
    pub fn new(d: usize, n_sites: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            let dim = d.pow(t.sites.len() as u32);
            if t.op.dim() != (dim, dim) || t.sites.iter().any(|&s| s >= n_sites) {
                return mismatch(format!("term on {:?} does not fit the chain", t.sites));
            }
        }
        Ok(ChainHamiltonian { d, n_sites, terms })
    }
}

impl Hamiltonian for ChainHamiltonian {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn phys_dim(&self) -> usize {
        self.d
    }

    fn terms(&self) -> Vec<Term> {
        self.terms.clone()
    }
}

/// Offsets of the `d^k` basis states of the target sites relative to a base
/// index whose target digits are zero, and the list of such bases.
fn term_layout(d: usize, n: usize, sites: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let strides: Vec<usize> = sites.iter().map(|&t| d.pow((n - 1 - t) as u32)).collect();
    let k = sites.len();
    let dim = d.pow(k as u32);
    let offs = (0..dim)
        .map(|c| {
            let mut rem = c;
            let mut off = 0;
            for j in (0..k).rev() {
                off += (rem % d) * strides[j];
                rem /= d;
            }
            off
        })
        .collect();
    let total = d.pow(n as u32);
    let bases = (0..total).filter(|&b| strides.iter().all(|&st| (b / st) % d == 0)).collect();
    (offs, bases)
}

/// Dense matrix of `h` (dimension `d^N` must not exceed `cap`).
pub fn dense_matrix(h: &dyn Hamiltonian, cap: usize) -> Result<Mat> {
    let (d, n) = (h.phys_dim(), h.n_sites());
    let dim = mps::check_cap(d, n, cap)?;
    let mut out = Mat::zeros((dim, dim));
    for t in h.terms() {
        let (offs, bases) = term_layout(d, n, &t.sites);
        for b in bases {
            for (r, &or) in offs.iter().enumerate() {
                for (c, &oc) in offs.iter().enumerate() {
                    let v = t.op[[r, c]];
                    if v != cr(0.0) {
                        out[[b + or, b + oc]] += v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `H ψ` without forming the matrix.
pub fn apply(h: &dyn Hamiltonian, psi: &Array1<C64>) -> Result<Array1<C64>> {
    let (d, n) = (h.phys_dim(), h.n_sites());
    let mut out = Array1::zeros(psi.len());
    for t in h.terms() {
        out = out + mps::apply_local(psi, d, n, &t.op, &t.sites)?;
    }
    Ok(out)
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn energy(h: &dyn Hamiltonian, psi: &Array1<C64>) -> Result<f64> {
    let hp = apply(h, psi)?;
    let num: C64 = psi.iter().zip(hp.iter()).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        return invalid("zero vector");
    }
    Ok(num.re / den)
}

/// Largest `‖h_j ψ‖ / ‖ψ‖` over the individual terms.
pub fn term_residual(h: &dyn Hamiltonian, psi: &Array1<C64>) -> Result<f64> {
    let (d, n) = (h.phys_dim(), h.n_sites());
    let nrm = linalg::vec_norm(psi.as_slice().unwrap_or(&psi.to_vec()));
    if nrm == 0.0 {
        return invalid("zero vector");
    }
    let mut worst = 0.0f64;
    for t in h.terms() {
        let v = mps::apply_local(psi, d, n, &t.op, &t.sites)?;
        worst = worst.max(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / nrm);
    }
    Ok(worst)
}

/// `S·S` between two spin-1 sites.
pub fn spin1_heisenberg() -> Mat {
    let (sx, sy, sz) = states::spin1_ops();
    kron(&sx, &sx) + kron(&sy, &sy) + kron(&sz, &sz)
}

/// `S·S + (S·S)²/3` on two spin-1 sites.
pub fn aklt_interaction() -> Mat {
    let h = spin1_heisenberg();
    &h + &h.dot(&h).mapv(|z| z / 3.0)
}

fn pauli_dot(a: usize, b: usize, n: usize) -> Mat {
    let mut out = Mat::zeros((1 << n, 1 << n));
    for s in [sigma_x(), sigma_y(), sigma_z()] {
        let mut m = Mat::eye(1);
        for k in 0..n {
            let f = if k == a || k == b { s.clone() } else { Mat::eye(2) };
            m = kron(&m, &f);
        }
        out = out + m;
    }
    out
}

/// Three-site term `2σ_0·σ_1 + σ_0·σ_2` whose translates give the
/// Majumdar-Ghosh chain.
pub fn majumdar_ghosh_term() -> Mat {
    pauli_dot(0, 1, 3).mapv(|z| z * 2.0) + pauli_dot(0, 2, 3)
}

/// Projector onto total spin 3/2 of three spin-1/2 sites,
/// `(σ_0·σ_1 + σ_1·σ_2 + σ_0·σ_2 + 3)/6`. On a periodic chain
/// `Σ_i (2σ_i·σ_{i+1} + σ_i·σ_{i+2}) = 6 Σ_i P_i − 3N`.
pub fn majumdar_ghosh_projector() -> Mat {
    let s = pauli_dot(0, 1, 3) + pauli_dot(1, 2, 3) + pauli_dot(0, 2, 3);
    (s + Mat::eye(8).mapv(|z| z * 3.0)).mapv(|z| z / 6.0)
}

/// `(𝟙 + σ^z σ^x σ^z)/2`; its translates sum to `(Σ σ^z σ^x σ^z + N)/2`.
pub fn cluster_stabilizer_projector() -> Mat {
    let zxz = kron(&kron(&sigma_z(), &sigma_x()), &sigma_z());
    (Mat::eye(8) + zxz).mapv(|z| z * 0.5)
}

/// `−Σ σ^z σ^z − g Σ σ^x`.
pub fn transverse_ising(n: usize, g: f64, boundary: Boundary) -> Result<LocalHamiltonian> {
    LocalHamiltonian::new(kron(&sigma_z(), &sigma_z()).mapv(|z| -z), 2, n, boundary)?
        .with_onsite(sigma_x().mapv(|z| z * -g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matches_apply() {
        let h = transverse_ising(5, 0.7, Boundary::Pbc).unwrap();
        let m = dense_matrix(&h, 1 << 10).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let psi: Array1<C64> = linalg::random_complex(&mut rng, 32, 1).column(0).to_owned();
        let a = m.dot(&psi);
        let b = apply(&h, &psi).unwrap();
        assert!((a - b).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn mg_rewrite() {
        let n = 6;
        let a = LocalHamiltonian::new(majumdar_ghosh_term(), 2, n, Boundary::Pbc).unwrap();
        let b = LocalHamiltonian::new(majumdar_ghosh_projector(), 2, n, Boundary::Pbc).unwrap();
        let ma = dense_matrix(&a, 1 << 10).unwrap();
        let mb = dense_matrix(&b, 1 << 10).unwrap().mapv(|z| z * 6.0) - Mat::eye(64).mapv(|z| z * 3.0 * n as f64);
        assert!(fro_norm(&(ma - mb)) < 1e-10);
        assert!(b.is_projector(1e-12));
    }

    #[test]
    fn tfim_ground_energy() {
        let h = transverse_ising(10, 1.0, Boundary::Obc).unwrap();
        let (w, _) = linalg::eigh(&dense_matrix(&h, 1 << 10).unwrap()).unwrap();
        assert!((w[0] + 12.38148999965475).abs() < 1e-9);
    }
}
