use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{c, cr, Mat, C64};
use crate::mps::{self, Chain, ObcMps};
use crate::states::{sigma_x, sigma_z};

use super::measure_site;
use super::sim::apply_physical;

/// Measure `site` in the basis `(|0⟩ ± e^{iφ}|1⟩)/√2` (outcome 0 is `+`),
/// where `φ = ±angle` with the sign flipped by the parity of the outcomes at
/// `sign_from`, plus `π` times the parity of the outcomes at `shift_from`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureStep {
    pub site: usize,
    pub angle: f64,
    #[serde(default)]
    pub sign_from: Vec<usize>,
    #[serde(default)]
    pub shift_from: Vec<usize>,
    /// Postselected outcome instead of a random draw.
    #[serde(default)]
    pub outcome: Option<usize>,
    /// Measure in the computational basis instead (angle is ignored).
    #[serde(default)]
    pub z_basis: bool,
}

/// Byproduct correction `Z^{parity(z_from)} X^{parity(x_from)}` on `site`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Correction {
    pub site: usize,
    #[serde(default)]
    pub x_from: Vec<usize>,
    #[serde(default)]
    pub z_from: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct MeasurementPlan {
    #[serde(default)]
    pub steps: Vec<MeasureStep>,
    #[serde(default)]
    pub corrections: Vec<Correction>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasurementRecord {
    pub site: usize,
    /// Angle actually used after feed-forward.
    pub angle: f64,
    pub outcome: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub seed: u64,
    pub records: Vec<MeasurementRecord>,
    pub max_bond: usize,
    pub flops: f64,
    /// State after all measurements and corrections.
    #[serde(skip)]
    pub state: Option<ObcMps>,
    /// Unmeasured sites with measured ones projected onto their outcome vectors.
    #[serde(skip)]
    pub output: Option<Array1<C64>>,
    pub output_sites: Vec<usize>,
}

/// Columns `(|0⟩ + e^{iφ}|1⟩)/√2`, `(|0⟩ − e^{iφ}|1⟩)/√2`.
pub fn equatorial_basis(phi: f64) -> Mat {
    let r = 1.0 / 2f64.sqrt();
    let e = c(phi.cos(), phi.sin()) * r;
    Mat::from_shape_vec((2, 2), vec![cr(r), cr(r), e, -e]).expect("2x2")
}

fn parity(outcomes: &[Option<usize>], from: &[usize]) -> Result<usize> {
    let mut p = 0;
    for &s in from {
        match outcomes.get(s).copied().flatten() {
            Some(o) => p ^= o & 1,
            None => return invalid(format!("plan references the outcome of site {s} before it is measured")),
        }
    }
    Ok(p)
}

fn step_basis(step: &MeasureStep, phi: f64) -> Mat {
    if step.z_basis {
        Mat::eye(2)
    } else {
        equatorial_basis(phi)
    }
}

fn effective_angle(step: &MeasureStep, outcomes: &[Option<usize>]) -> Result<f64> {
    let sign = if parity(outcomes, &step.sign_from)? == 1 { -1.0 } else { 1.0 };
    let shift = parity(outcomes, &step.shift_from)? as f64 * std::f64::consts::PI;
    Ok(sign * step.angle + shift)
}

fn check_plan(plan: &MeasurementPlan, n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for s in &plan.steps {
        if s.site >= n || seen[s.site] {
            return invalid(format!("plan measures site {} twice or out of range", s.site));
        }
        if matches!(s.outcome, Some(o) if o > 1) {
            return invalid("forced outcomes are 0 or 1");
        }
        seen[s.site] = true;
    }
    for c in &plan.corrections {
        if c.site >= n || seen[c.site] {
            return invalid(format!("correction on site {} which is measured or out of range", c.site));
        }
    }
    Ok(())
}

fn correction_ops(plan: &MeasurementPlan, outcomes: &[Option<usize>]) -> Result<Vec<(usize, Mat)>> {
    let mut out = Vec::new();
    for c in &plan.corrections {
        let mut op = Mat::eye(2);
        if parity(outcomes, &c.x_from)? == 1 {
            op = sigma_x().dot(&op);
        }
        if parity(outcomes, &c.z_from)? == 1 {
            op = sigma_z().dot(&op);
        }
        out.push((c.site, op));
    }
    Ok(out)
}

fn draw(rng: &mut ChaCha8Rng, forced: Option<usize>, p0: f64) -> usize {
    let x: f64 = rng.random();
    forced.unwrap_or(if x < p0 { 0 } else { 1 })
}

/// Run an adaptive single-qubit measurement plan on a qubit chain.
pub fn simulate_measurement_based(resource: &ObcMps, plan: &MeasurementPlan, seed: u64) -> Result<Transcript> {
    let n = resource.n_sites();
    if resource.phys_dim() != 2 {
        return invalid("measurement-based simulation needs qubits");
    }
    check_plan(plan, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = resource.clone();
    let nrm = mps::norm_sqr(&state)?;
    if nrm == 0.0 {
        return invalid("resource state is zero");
    }
    state = state.with_prefactor(resource.prefactor() / nrm.sqrt());
    let mut outcomes: Vec<Option<usize>> = vec![None; n];
    let mut bras = Vec::new();
    let mut records = Vec::new();
    let bond = state.max_bond() as f64;
    let mut flops = 0.0;
    for step in &plan.steps {
        let phi = effective_angle(step, &outcomes)?;
        let basis = step_basis(step, phi);
        let (p0, s0) = measure_site(&state, step.site, &basis, 0)?;
        let o = draw(&mut rng, step.outcome, p0);
        let (p, post) = if o == 0 { (p0, s0) } else { measure_site(&state, step.site, &basis, 1)? };
        if p < 1e-14 {
            return invalid(format!("outcome {o} at site {} has probability {p}", step.site));
        }
        // two norm contractions per outcome
        flops += 4.0 * n as f64 * 2.0 * bond.powi(3);
        state = post;
        outcomes[step.site] = Some(o);
        bras.push((step.site, basis.column(o).to_owned()));
        records.push(MeasurementRecord { site: step.site, angle: phi, outcome: o, probability: p });
    }
    let mut sites = state.sites().to_vec();
    for (site, op) in correction_ops(plan, &outcomes)? {
        sites[site] = apply_physical(&sites[site], &op)?;
    }
    let state = ObcMps::new(sites, state.prefactor())?;
    let output_sites: Vec<usize> = (0..n).filter(|k| outcomes[*k].is_none()).collect();
    let output = if n <= 20 {
        let psi = mps::to_dense(&state, mps::DEFAULT_DENSE_CAP)?;
        Some(project_out(&psi, n, &bras))
    } else {
        None
    };
    Ok(Transcript { seed, records, max_bond: state.max_bond(), flops, state: Some(state), output, output_sites })
}

/// Dense reference of the same adaptive plan on a state vector.
pub fn simulate_measurement_based_dense(psi: &Array1<C64>, n: usize, plan: &MeasurementPlan, seed: u64) -> Result<Transcript> {
    check_plan(plan, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nrm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if nrm == 0.0 {
        return invalid("resource state is zero");
    }
    let mut state = psi.mapv(|z| z / nrm.sqrt());
    let mut outcomes: Vec<Option<usize>> = vec![None; n];
    let mut bras = Vec::new();
    let mut records = Vec::new();
    for step in &plan.steps {
        let phi = effective_angle(step, &outcomes)?;
        let basis = step_basis(step, phi);
        let branch = |o: usize| -> Result<(f64, Array1<C64>)> {
            let col = basis.column(o).to_owned().insert_axis(ndarray::Axis(1));
            let proj = col.dot(&crate::linalg::dag(&col));
            let v = mps::apply_local(&state, 2, n, &proj, &[step.site])?;
            let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            Ok((p, v))
        };
        let (p0, v0) = branch(0)?;
        let o = draw(&mut rng, step.outcome, p0);
        let (p, v) = if o == 0 { (p0, v0) } else { branch(1)? };
        if p < 1e-14 {
            return invalid(format!("outcome {o} at site {} has probability {p}", step.site));
        }
        state = v.mapv(|z| z / p.sqrt());
        outcomes[step.site] = Some(o);
        bras.push((step.site, basis.column(o).to_owned()));
        records.push(MeasurementRecord { site: step.site, angle: phi, outcome: o, probability: p });
    }
    for (site, op) in correction_ops(plan, &outcomes)? {
        state = mps::apply_local(&state, 2, n, &op, &[site])?;
    }
    let output_sites: Vec<usize> = (0..n).filter(|k| outcomes[*k].is_none()).collect();
    let output = project_out(&state, n, &bras);
    Ok(Transcript { seed, records, max_bond: 0, flops: 0.0, state: None, output: Some(output), output_sites })
}

/// Contract the listed qubits with the bras `⟨v|` and return the vector on the
/// remaining qubits (in site order).
fn project_out(psi: &Array1<C64>, n: usize, bras: &[(usize, Array1<C64>)]) -> Array1<C64> {
    let mut bra_of: Vec<Option<&Array1<C64>>> = vec![None; n];
    for (s, v) in bras {
        bra_of[*s] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|k| bra_of[*k].is_none()).collect();
    let mut out = Array1::zeros(1 << free.len());
    for (idx, amp) in psi.iter().enumerate() {
        let mut w = *amp;
        let mut sub = 0usize;
        for k in 0..n {
            let bit = (idx >> (n - 1 - k)) & 1;
            match bra_of[k] {
                Some(v) => w *= v[bit].conj(),
                None => sub = (sub << 1) | bit,
            }
        }
        out[sub] += w;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{fidelity, hadamard, linear_cluster, phase};

    fn teleport_plan(a: [f64; 3], outcomes: [usize; 3]) -> MeasurementPlan {
        MeasurementPlan {
            steps: vec![
                MeasureStep { site: 0, angle: a[0], sign_from: vec![], shift_from: vec![], outcome: Some(outcomes[0]), z_basis: false },
                MeasureStep { site: 1, angle: a[1], sign_from: vec![0], shift_from: vec![], outcome: Some(outcomes[1]), z_basis: false },
                MeasureStep { site: 2, angle: a[2], sign_from: vec![1], shift_from: vec![], outcome: Some(outcomes[2]), z_basis: false },
            ],
            corrections: vec![Correction { site: 3, x_from: vec![0, 2], z_from: vec![1] }],
        }
    }

    #[test]
    fn teleported_rotation() {
        let a = [0.3, -1.1, 2.4];
        let r = 1.0 / 2f64.sqrt();
        let mut expect = Array1::from(vec![cr(r), cr(r)]);
        for phi in a {
            expect = hadamard().dot(&phase(-phi).dot(&expect));
        }
        let cluster = linear_cluster(4).unwrap();
        let dense = mps::to_dense(&cluster, 16).unwrap();
        for bits in 0..8 {
            let o = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            let plan = teleport_plan(a, o);
            let t = simulate_measurement_based(&cluster, &plan, 0).unwrap();
            let out = t.output.unwrap();
            assert!(1.0 - fidelity(&out, &expect) < 1e-10, "outcomes {o:?}");
            let td = simulate_measurement_based_dense(&dense, 4, &plan, 0).unwrap();
            assert!(1.0 - fidelity(&td.output.unwrap(), &out) < 1e-10);
        }
    }

    #[test]
    fn empty_plan() {
        let cluster = linear_cluster(5).unwrap();
        let t = simulate_measurement_based(&cluster, &MeasurementPlan::default(), 1).unwrap();
        assert!(t.records.is_empty());
        let a = mps::to_dense(&cluster, 32).unwrap();
        assert!(1.0 - fidelity(&a, t.output.as_ref().unwrap()) < 1e-14);
    }

    #[test]
    fn unmeasured_reference_is_rejected() {
        let cluster = linear_cluster(3).unwrap();
        let plan = MeasurementPlan {
            steps: vec![MeasureStep { site: 0, angle: 0.0, sign_from: vec![2], shift_from: vec![], outcome: None, z_basis: false }],
            corrections: vec![],
        };
        assert!(simulate_measurement_based(&cluster, &plan, 0).is_err());
    }
}
