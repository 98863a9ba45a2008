use ndarray::s;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{self, cr, Mat};
use crate::mps::{Chain, ObcMps};
use crate::tensor::SiteTensor;

use super::{hadamard, reversed, route_long_range, standard_gate, Circuit, Gate, LineStats};

/// Relative cutoff below which singular values are dropped after a gate.
const SV_CUTOFF: f64 = 1e-14;

/// Open chain held in mixed canonical form around `center`: sites left of it
/// are left-normalized, sites right of it right-normalized.
#[derive(Clone, Debug)]
pub struct MpsSimulator {
    sites: Vec<SiteTensor>,
    center: usize,
    d_max: usize,
    discarded: f64,
    max_bond: usize,
    flops: f64,
}

impl MpsSimulator {
    pub fn new(mps: &ObcMps, d_max: usize) -> Result<Self> {
        if d_max == 0 {
            return invalid("d_max must be at least 1");
        }
        let mut sites = mps.sites().to_vec();
        sites[0] = sites[0].scaled(mps.prefactor());
        right_sweep(&mut sites)?;
        let max_bond = sites.iter().map(|s| s.d_right()).max().unwrap_or(1);
        Ok(Self { sites, center: 0, d_max, discarded: 0.0, max_bond, flops: 0.0 })
    }

    /// `|0…0⟩` on `n` sites of dimension `d`.
    pub fn zero_state(n: usize, d: usize, d_max: usize) -> Result<Self> {
        let mut e0 = vec![cr(0.0); d];
        e0[0] = cr(1.0);
        Self::new(&ObcMps::product(&vec![e0; n])?, d_max)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Sum over all truncations of the discarded fraction of the squared norm.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    pub fn max_bond(&self) -> usize {
        self.max_bond
    }

    /// Rough count of complex multiply-adds spent on contractions and SVDs.
    pub fn flops(&self) -> f64 {
        self.flops
    }

    pub fn state(&self) -> Result<ObcMps> {
        ObcMps::new(self.sites.clone(), cr(1.0))
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let d = self.sites[0].d();
        match *gate.targets.as_slice() {
            [k] => {
                if k >= self.n_sites() {
                    return invalid(format!("target {k} out of range"));
                }
                self.sites[k] = apply_physical(&self.sites[k], &gate.matrix)?;
                let s = &self.sites[k];
                self.flops += (d * d * s.d_left() * s.d_right()) as f64;
                Ok(())
            }
            [a, b] => {
                if a.abs_diff(b) != 1 || a.max(b) >= self.n_sites() {
                    return invalid(format!("two-site gate on {a},{b} is not nearest-neighbour; route it first"));
                }
                if a < b {
                    self.apply_pair(a, &gate.matrix)
                } else {
                    self.apply_pair(b, &reversed(&gate.matrix, d))
                }
            }
            _ => invalid("gates act on one or two sites"),
        }
    }

    fn move_center(&mut self, to: usize) -> Result<()> {
        let d = self.sites[0].d();
        while self.center < to {
            let k = self.center;
            let (u, sv, vt) = linalg::svd_thin(&self.sites[k].unfold_left())?;
            let mut r = vt;
            for (j, x) in sv.iter().enumerate() {
                r.row_mut(j).mapv_inplace(|z| z * *x);
            }
            self.flops += svd_cost(&u, &r);
            self.sites[k] = SiteTensor::from_unfold_left(&u, d)?;
            self.sites[k + 1] = self.sites[k + 1].mul_left(&r)?;
            self.center += 1;
        }
        while self.center > to {
            let k = self.center;
            let (u, sv, vt) = linalg::svd_thin(&self.sites[k].unfold_right())?;
            let mut l = u;
            for (j, x) in sv.iter().enumerate() {
                l.column_mut(j).mapv_inplace(|z| z * *x);
            }
            self.flops += svd_cost(&l, &vt);
            self.sites[k] = SiteTensor::from_unfold_right(&vt, d)?;
            self.sites[k - 1] = self.sites[k - 1].mul_right(&l)?;
            self.center -= 1;
        }
        Ok(())
    }

    /// Two-site unitary on `(k, k+1)`, first factor on `k`.
    fn apply_pair(&mut self, k: usize, u: &Mat) -> Result<()> {
        let d = self.sites[0].d();
        self.move_center(k)?;
        let (a, b) = (&self.sites[k], &self.sites[k + 1]);
        let (dl, dr) = (a.d_left(), b.d_right());
        let merged = a.merge(b)?;
        // theta[(i, α), (j, β)] after the gate
        let mut theta = linalg::zeros(d * dl, d * dr);
        for i in 0..d {
            for j in 0..d {
                let mut blk = linalg::zeros(dl, dr);
                for p in 0..d * d {
                    let c = u[[i * d + j, p]];
                    if c.norm() != 0.0 {
                        blk.scaled_add(c, &merged.mat(p));
                    }
                }
                theta.slice_mut(s![i * dl..(i + 1) * dl, j * dr..(j + 1) * dr]).assign(&blk);
            }
        }
        self.flops += (d.pow(4) * dl * a.d_right() * dr) as f64;
        let (uu, sv, vt) = linalg::svd_thin(&theta)?;
        self.flops += svd_cost(&uu, &vt);
        let total: f64 = sv.iter().map(|x| x * x).sum();
        let r = linalg::rank_of(&sv, SV_CUTOFF).clamp(1, self.d_max);
        let kept: f64 = sv[..r].iter().map(|x| x * x).sum();
        if total > 0.0 {
            self.discarded += (total - kept) / total;
        }
        let scale = if kept > 0.0 { (total / kept).sqrt() } else { 1.0 };
        let left = uu.slice(s![.., ..r]).to_owned();
        let mut right = vt.slice(s![..r, ..]).to_owned();
        for j in 0..r {
            right.row_mut(j).mapv_inplace(|z| z * sv[j] * scale);
        }
        self.sites[k] = SiteTensor::from_unfold_left(&left, d)?;
        self.sites[k + 1] = SiteTensor::from_unfold_right(&right, d)?;
        self.center = k + 1;
        self.max_bond = self.max_bond.max(r);
        Ok(())
    }
}

fn svd_cost(a: &Mat, b: &Mat) -> f64 {
    let (m, k) = a.dim();
    let n = b.ncols();
    (m * n * k) as f64
}

/// Right-to-left SVD sweep; every site but the first becomes right-normalized
/// and the first carries the norm.
pub(crate) fn right_sweep(sites: &mut [SiteTensor]) -> Result<()> {
    let d = sites[0].d();
    for k in (1..sites.len()).rev() {
        let (u, sv, vt) = linalg::svd_thin(&sites[k].unfold_right())?;
        let r = linalg::rank_of(&sv, SV_CUTOFF).max(1);
        let mut l = u.slice(s![.., ..r]).to_owned();
        for j in 0..r {
            l.column_mut(j).mapv_inplace(|z| z * sv[j]);
        }
        sites[k] = SiteTensor::from_unfold_right(&vt.slice(s![..r, ..]).to_owned(), d)?;
        sites[k - 1] = sites[k - 1].mul_right(&l)?;
    }
    Ok(())
}

/// `A'_i = Σ_j U_ij A_j`.
pub(crate) fn apply_physical(site: &SiteTensor, u: &Mat) -> Result<SiteTensor> {
    let d = site.d();
    if u.dim() != (d, d) {
        return invalid("single-site operator has the wrong dimension");
    }
    let mats: Vec<Mat> = (0..d)
        .map(|i| {
            let mut m = linalg::zeros(site.d_left(), site.d_right());
            for j in 0..d {
                if u[[i, j]].norm() != 0.0 {
                    m.scaled_add(u[[i, j]], &site.mat(j));
                }
            }
            m
        })
        .collect();
    SiteTensor::from_matrices(&mats)
}

/// Apply one gate to an open chain, keeping at most `d_max` singular values on
/// the touched bond. Returns the new state and the discarded weight.
pub fn apply_gate(mps: &ObcMps, gate: &Gate, d_max: usize) -> Result<(ObcMps, f64)> {
    let mut sim = MpsSimulator::new(mps, d_max)?;
    sim.apply(gate)?;
    Ok((sim.state()?, sim.discarded_weight()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationResult {
    #[serde(skip)]
    pub state: Option<ObcMps>,
    pub n_qubits: usize,
    pub d_max: usize,
    pub gates_input: usize,
    pub gates_routed: usize,
    pub discarded_weight: f64,
    pub max_bond: usize,
    pub bond_dims: Vec<usize>,
    pub flops: f64,
    pub stats: LineStats,
}

/// Route the circuit, then run it on `|0…0⟩`.
pub fn simulate(circuit: &Circuit, d_max: usize) -> Result<SimulationResult> {
    let routed = route_long_range(circuit)?;
    let mut sim = MpsSimulator::zero_state(circuit.n_qubits, circuit.d, d_max)?;
    for g in &routed.gates {
        sim.apply(g)?;
    }
    let state = sim.state()?;
    Ok(SimulationResult {
        n_qubits: circuit.n_qubits,
        d_max,
        gates_input: circuit.gates.len(),
        gates_routed: routed.gates.len(),
        discarded_weight: sim.discarded_weight(),
        max_bond: sim.max_bond(),
        bond_dims: state.bond_dims(),
        flops: sim.flops(),
        stats: circuit.stats(),
        state: Some(state),
    })
}

/// Linear cluster state: `|+⟩` on every site followed by CZ on neighbours.
pub fn linear_cluster(n: usize) -> Result<ObcMps> {
    let r = 1.0 / 2f64.sqrt();
    let plus = vec![cr(r), cr(r)];
    let mut sim = MpsSimulator::new(&ObcMps::product(&vec![plus; n])?, 4)?;
    let cz = standard_gate("cz")?;
    for k in 0..n.saturating_sub(1) {
        sim.apply(&Gate::new(cz.clone(), vec![k, k + 1], 2)?)?;
    }
    sim.state()
}

/// Hadamard on line 0 followed by a CNOT ladder.
pub fn ghz_circuit(n: usize) -> Result<Circuit> {
    let mut gates = vec![Gate::new(hadamard(), vec![0], 2)?];
    for k in 0..n.saturating_sub(1) {
        gates.push(Gate::named("cnot", vec![k, k + 1])?);
    }
    Circuit::new(n, 2, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{fidelity, random_circuit};
    use crate::mps::{to_dense, DEFAULT_DENSE_CAP};
    use rand::SeedableRng;

    #[test]
    fn ghz_preparation() {
        let c = ghz_circuit(8).unwrap();
        let r = simulate(&c, 64).unwrap();
        assert_eq!(r.max_bond, 2);
        let v = to_dense(r.state.as_ref().unwrap(), DEFAULT_DENSE_CAP).unwrap();
        assert!((v[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v[255].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let c = random_circuit(&mut rng, 7, 4, 12).unwrap();
        let r = simulate(&c, 256).unwrap();
        let a = to_dense(r.state.as_ref().unwrap(), DEFAULT_DENSE_CAP).unwrap();
        let b = c.dense_output(DEFAULT_DENSE_CAP).unwrap();
        assert!(1.0 - fidelity(&a, &b) < 1e-10);
        assert!(r.discarded_weight < 1e-20);
    }

    #[test]
    fn identity_keeps_bonds() {
        let c = linear_cluster(5).unwrap();
        let g = Gate::new(Mat::eye(4), vec![1, 2], 2).unwrap();
        let (out, w) = apply_gate(&c, &g, 16).unwrap();
        assert_eq!(out.bond_dims(), c.bond_dims());
        assert_eq!(w, 0.0);
        let a = to_dense(&c, 1 << 10).unwrap();
        let b = to_dense(&out, 1 << 10).unwrap();
        assert!(1.0 - fidelity(&a, &b) < 1e-12);
    }
}
