//! Circuits on chains of qudits: gates, routing of long-range gates,
//! MPS-based simulation, measurement sampling and measurement-based
//! computation.

mod mbqc;
mod sample;
mod sim;

pub use mbqc::{simulate_measurement_based, simulate_measurement_based_dense, Correction, MeasureStep, MeasurementPlan, Transcript};
pub use sample::{measure_site, sample_measurements, SampleTable};
pub use sim::{apply_gate, ghz_circuit, linear_cluster, simulate, MpsSimulator, SimulationResult};
pub use mbqc::{equatorial_basis, MeasurementRecord};

use ndarray::Array1;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{self, c, cr, Mat, C64};
use crate::mps;

/// Largest allowed deviation of `U†U` from the identity.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Gate {
    pub name: Option<String>,
    pub matrix: Mat,
    /// Sites acted on; the first target is the most significant factor.
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(matrix: Mat, targets: Vec<usize>, d: usize) -> Result<Self> {
        let k = targets.len();
        if !(1..=2).contains(&k) {
            return invalid("gates act on one or two sites");
        }
        if k == 2 && targets[0] == targets[1] {
            return invalid("two-site gate needs distinct targets");
        }
        let dim = d.pow(k as u32);
        if matrix.dim() != (dim, dim) {
            return invalid(format!("gate matrix is {:?}, expected {dim}x{dim}", matrix.dim()));
        }
        if linalg::unitarity_residual(&matrix) > UNITARITY_TOL {
            return invalid("gate matrix is not unitary");
        }
        Ok(Gate { name: None, matrix, targets })
    }

    pub fn named(name: &str, targets: Vec<usize>) -> Result<Self> {
        let m = standard_gate(name)?;
        let mut g = Gate::new(m, targets, 2)?;
        g.name = Some(name.to_string());
        Ok(g)
    }

    pub fn distance(&self) -> usize {
        match self.targets.as_slice() {
            [a, b] => a.abs_diff(*b),
            _ => 0,
        }
    }
}

pub fn hadamard() -> Mat {
    let r = 1.0 / 2f64.sqrt();
    Mat::from_shape_vec((2, 2), vec![cr(r), cr(r), cr(r), cr(-r)]).expect("2x2")
}

pub fn swap_gate(d: usize) -> Mat {
    let mut m = Mat::zeros((d * d, d * d));
    for a in 0..d {
        for b in 0..d {
            m[[b * d + a, a * d + b]] = cr(1.0);
        }
    }
    m
}

fn controlled(u: &Mat) -> Mat {
    let mut m = Mat::eye(4);
    m.slice_mut(ndarray::s![2.., 2..]).assign(u);
    m
}

/// `diag(1, e^{iθ})`.
pub fn phase(theta: f64) -> Mat {
    Mat::from_diag(&Array1::from(vec![cr(1.0), c(theta.cos(), theta.sin())]))
}

/// Gates available by name in circuit files.
pub fn standard_gate(name: &str) -> Result<Mat> {
    use crate::states::{sigma_x, sigma_y, sigma_z};
    Ok(match name {
        "id" | "i" => Mat::eye(2),
        "h" => hadamard(),
        "x" => sigma_x(),
        "y" => sigma_y(),
        "z" => sigma_z(),
        "s" => phase(std::f64::consts::FRAC_PI_2),
        "t" => phase(std::f64::consts::FRAC_PI_4),
        "cnot" | "cx" => controlled(&sigma_x()),
        "cz" => controlled(&sigma_z()),
        "swap" => swap_gate(2),
        _ => return invalid(format!("unknown gate '{name}'")),
    })
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub d: usize,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LineStats {
    /// Gates acting on each line.
    pub involvement: Vec<usize>,
    /// Two-site gates whose span strictly passes over each line.
    pub crossing: Vec<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize, d: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return invalid("circuit needs at least one line");
        }
        for g in &gates {
            if g.targets.iter().any(|&t| t >= n_qubits) {
                return invalid(format!("gate targets {:?} outside {n_qubits} lines", g.targets));
            }
            if g.matrix.nrows() != d.pow(g.targets.len() as u32) {
                return invalid("gate dimension does not match the line dimension");
            }
        }
        Ok(Circuit { n_qubits, d, gates })
    }

    pub fn stats(&self) -> LineStats {
        let mut involvement = vec![0; self.n_qubits];
        let mut crossing = vec![0; self.n_qubits];
        for g in &self.gates {
            for &t in &g.targets {
                involvement[t] += 1;
            }
            if let [a, b] = g.targets.as_slice() {
                let (lo, hi) = ((*a).min(*b), (*a).max(*b));
                for c in crossing.iter_mut().take(hi).skip(lo + 1) {
                    *c += 1;
                }
            }
        }
        LineStats { involvement, crossing }
    }

    /// Dense `U|ψ⟩` for cross-checking.
    pub fn apply_dense(&self, psi: &Array1<C64>) -> Result<Array1<C64>> {
        let mut out = psi.clone();
        for g in &self.gates {
            out = mps::apply_local(&out, self.d, self.n_qubits, &g.matrix, &g.targets)?;
        }
        Ok(out)
    }

    /// Dense output on `|0…0⟩`.
    pub fn dense_output(&self, cap: usize) -> Result<Array1<C64>> {
        let dim = mps::check_cap(self.d, self.n_qubits, cap)?;
        let mut psi = Array1::zeros(dim);
        psi[0] = cr(1.0);
        self.apply_dense(&psi)
    }
}

/// Replace every two-site gate at distance `l > 1` by `l − 1` adjacent swaps,
/// the gate on neighbouring lines and `l − 1` swaps back (`2l − 1` gates).
pub fn route_long_range(circuit: &Circuit) -> Result<Circuit> {
    let d = circuit.d;
    let mut out = Vec::new();
    let swap = |a: usize, b: usize| -> Result<Gate> {
        let mut g = Gate::new(swap_gate(d), vec![a, b], d)?;
        g.name = Some("swap".into());
        Ok(g)
    };
    for g in &circuit.gates {
        let l = g.distance();
        if l <= 1 {
            out.push(g.clone());
            continue;
        }
        let (a, b) = (g.targets[0], g.targets[1]);
        // walk line `a` next to `b`
        let path: Vec<(usize, usize)> =
            if a < b { (a..b - 1).map(|k| (k, k + 1)).collect() } else { ((b + 2)..=a).rev().map(|k| (k - 1, k)).collect() };
        for &(p, q) in &path {
            out.push(swap(p, q)?);
        }
        let moved = if a < b { b - 1 } else { b + 1 };
        out.push(Gate { name: g.name.clone(), matrix: g.matrix.clone(), targets: vec![moved, b] });
        for &(p, q) in path.iter().rev() {
            out.push(swap(p, q)?);
        }
    }
    Circuit::new(circuit.n_qubits, d, out)
}

/// Two-site matrix with its factors exchanged (`SWAP U SWAP`).
pub(crate) fn reversed(u: &Mat, d: usize) -> Mat {
    let s = swap_gate(d);
    s.dot(u).dot(&s)
}

/// Haar-random circuit with at most `per_line` two-site gates touching each
/// line, mixing adjacent and long-range gates.
pub fn random_circuit<R: rand::Rng>(rng: &mut R, n: usize, per_line: usize, n_two: usize) -> Result<Circuit> {
    let mut gates = Vec::new();
    let mut load = vec![0usize; n];
    for k in 0..n {
        gates.push(Gate::new(linalg::haar_unitary(rng, 2), vec![k], 2)?);
    }
    let mut tries = 0;
    while gates.len() < n + n_two && tries < 100 * n_two.max(1) {
        tries += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || load[a] >= per_line || load[b] >= per_line {
            continue;
        }
        load[a] += 1;
        load[b] += 1;
        gates.push(Gate::new(linalg::haar_unitary(rng, 4), vec![a, b], 2)?);
        if rng.random_bool(0.3) {
            gates.push(Gate::new(linalg::haar_unitary(rng, 2), vec![a], 2)?);
        }
    }
    Circuit::new(n, 2, gates)
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    let ov: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    ov.norm_sqr() / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn routing_counts() {
        let g = Gate::named("cnot", vec![0, 3]).unwrap();
        let c = Circuit::new(5, 2, vec![g]).unwrap();
        let r = route_long_range(&c).unwrap();
        assert_eq!(r.gates.len(), 5);
        assert!(r.gates.iter().all(|g| g.distance() <= 1));
        let g = Gate::named("cnot", vec![4, 1]).unwrap();
        let c2 = Circuit::new(5, 2, vec![g]).unwrap();
        assert_eq!(route_long_range(&c2).unwrap().gates.len(), 5);
        let c3 = Circuit::new(5, 2, vec![Gate::named("cz", vec![2, 3]).unwrap()]).unwrap();
        assert_eq!(route_long_range(&c3).unwrap().gates.len(), 1);
    }

    #[test]
    fn routing_preserves_action() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let c = random_circuit(&mut rng, 6, 4, 10).unwrap();
        let r = route_long_range(&c).unwrap();
        let psi: Array1<C64> = linalg::random_complex(&mut rng, 64, 1).column(0).to_owned();
        let a = c.apply_dense(&psi).unwrap();
        let b = r.apply_dense(&psi).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn stats_count_crossings() {
        let c = Circuit::new(4, 2, vec![Gate::named("cz", vec![0, 3]).unwrap(), Gate::named("h", vec![1]).unwrap()]).unwrap();
        let s = c.stats();
        assert_eq!(s.involvement, vec![1, 1, 0, 1]);
        assert_eq!(s.crossing, vec![0, 1, 1, 0]);
    }
}
