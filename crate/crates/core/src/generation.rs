//! Sequential generation schedules: unitaries that prepare an open-chain MPS
//! on `|0…0⟩`, either through a `D`-dimensional ancilla or, when every bond is
//! at most `d`, with the next site playing the ancilla.

use ndarray::{s, Array1};
use serde::Serialize;

use crate::canonical::gauge_to_canonical;
use crate::circuit::fidelity;
use crate::error::{invalid, MpsError, Result};
use crate::linalg::{self, cr, Mat, C64};
use crate::mps::{self, Chain, ObcMps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    WithAncilla,
    NoAncilla,
}

/// Only deterministic (unitary) schemes are emitted; probabilistic schemes
/// with Kraus branches describe the same class of states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Deterministic,
    Probabilistic,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleStep {
    /// Chain sites acted on. With an ancilla the operator acts on
    /// `ancilla ⊗ site`, ancilla first.
    pub sites: Vec<usize>,
    #[serde(serialize_with = "crate::io::ser_mat")]
    pub unitary: Mat,
    /// ‖V†V − 𝟙‖ of the isometry the unitary extends.
    pub isometry_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationSchedule {
    pub mode: ScheduleMode,
    pub scheme: SchemeKind,
    pub n_sites: usize,
    pub phys_dim: usize,
    /// Ancilla dimension `D` (1 when no ancilla is used).
    pub ancilla_dim: usize,
    pub bond_dims: Vec<usize>,
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub phi_initial: Vec<C64>,
    #[serde(serialize_with = "crate::io::ser_vec")]
    pub phi_final: Vec<C64>,
    pub steps: Vec<ScheduleStep>,
    /// Replay fidelity with the target (set by the constructors).
    pub replay_fidelity: f64,
}

/// Unit-norm right-normalized copy (`Σ_i A_i A_i† = 𝟙` on every site) with
/// minimal bonds.
fn normalized_canonical(mps: &ObcMps) -> Result<ObcMps> {
    let (canon, _) = gauge_to_canonical(mps)?;
    Ok(canon.with_prefactor(cr(1.0)))
}

fn unit(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![cr(0.0); d];
    v[k] = cr(1.0);
    v
}

/// Unitary on `a ⊗ b` (dimensions `da`, `db`) whose column `α·db` is
/// `iso[:, α]` for every isometry column `α`.
fn embed(iso: &Mat, db: usize) -> Result<(Mat, f64)> {
    let (n, k) = iso.dim();
    let resid = linalg::unitarity_residual(iso);
    if resid > 1e-10 {
        return Err(MpsError::Numerical(format!("step is not an isometry (residual {resid:.2e})")));
    }
    let full = linalg::complete_unitary(iso)?;
    let mut u = linalg::zeros(n, n);
    let targets: Vec<usize> = (0..k).map(|a| a * db).collect();
    let mut rest = k;
    for col in 0..n {
        if let Some(a) = targets.iter().position(|&t| t == col) {
            u.column_mut(col).assign(&full.column(a));
        } else {
            u.column_mut(col).assign(&full.column(rest));
            rest += 1;
        }
    }
    Ok((u, resid))
}

/// Deterministic scheme with a `D`-dimensional ancilla, `D` the largest bond.
/// Step `k` maps `|α⟩|0⟩ ↦ Σ_i (A^{[k]}_i)ᵀ|α⟩ ⊗ |i⟩`; the ancilla starts and
/// ends in `|0⟩`.
pub fn generation_schedule_with_ancilla(mps: &ObcMps) -> Result<GenerationSchedule> {
    let canon = normalized_canonical(mps)?;
    let n = canon.n_sites();
    let d = canon.phys_dim();
    let bonds = canon.bond_dims();
    let da = canon.max_bond();
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let site = canon.site(k);
        let (dl, dr) = (site.d_left(), site.d_right());
        // rows (β, i), columns α
        let mut iso = linalg::zeros(da * d, dl);
        for i in 0..d {
            let a = site.mat(i);
            for alpha in 0..dl {
                for beta in 0..dr {
                    iso[[beta * d + i, alpha]] = a[[alpha, beta]];
                }
            }
        }
        let (u, resid) = embed(&iso, d)?;
        steps.push(ScheduleStep { sites: vec![k], unitary: u, isometry_residual: resid });
    }
    let mut sched = GenerationSchedule {
        mode: ScheduleMode::WithAncilla,
        scheme: SchemeKind::Deterministic,
        n_sites: n,
        phys_dim: d,
        ancilla_dim: da,
        bond_dims: bonds,
        phi_initial: unit(da, 0),
        phi_final: unit(da, 0),
        steps,
        replay_fidelity: 0.0,
    };
    let target = mps::to_dense(mps, mps::DEFAULT_DENSE_CAP)?;
    sched.replay_fidelity = fidelity(&replay(&sched)?, &target);
    Ok(sched)
}

/// Scheme without ancilla for chains whose bonds are all at most `d`: step
/// `k` acts on sites `(k, k+1)` and maps `|α⟩|0⟩ ↦ Σ_i |i⟩ ⊗ (A^{[k]}_i)ᵀ|α⟩`;
/// the last step also writes the final site.
pub fn generation_schedule_no_ancilla(mps: &ObcMps) -> Result<GenerationSchedule> {
    let canon = normalized_canonical(mps)?;
    let n = canon.n_sites();
    let d = canon.phys_dim();
    let bonds = canon.bond_dims();
    if let Some(b) = bonds.iter().find(|&&b| b > d) {
        return Err(MpsError::OutsideClass(format!("bond dimension {b} exceeds the physical dimension {d}")));
    }
    // final site: |α⟩ ↦ Σ_i A^{[N]}_i[α, 0] |i⟩
    let last = canon.site(n - 1);
    let mut m = linalg::zeros(d, last.d_left());
    for i in 0..d {
        for alpha in 0..last.d_left() {
            m[[i, alpha]] = last.mat(i)[[alpha, 0]];
        }
    }
    let (u_last, r_last) = embed(&m, 1)?;
    let mut steps = Vec::with_capacity(n.saturating_sub(1).max(1));
    if n == 1 {
        steps.push(ScheduleStep { sites: vec![0], unitary: u_last.clone(), isometry_residual: r_last });
    }
    for k in 0..n.saturating_sub(1) {
        let site = canon.site(k);
        let (dl, dr) = (site.d_left(), site.d_right());
        // rows (i, β), columns α
        let mut iso = linalg::zeros(d * d, dl);
        for i in 0..d {
            let a = site.mat(i);
            for alpha in 0..dl {
                for beta in 0..dr {
                    iso[[i * d + beta, alpha]] = a[[alpha, beta]];
                }
            }
        }
        let (mut u, mut resid) = embed(&iso, d)?;
        if k == n - 2 {
            u = linalg::kron(&Mat::eye(d), &u_last).dot(&u);
            resid = resid.max(r_last);
        }
        steps.push(ScheduleStep { sites: vec![k, k + 1], unitary: u, isometry_residual: resid });
    }
    let mut sched = GenerationSchedule {
        mode: ScheduleMode::NoAncilla,
        scheme: SchemeKind::Deterministic,
        n_sites: n,
        phys_dim: d,
        ancilla_dim: 1,
        bond_dims: bonds,
        phi_initial: unit(1, 0),
        phi_final: unit(1, 0),
        steps,
        replay_fidelity: 0.0,
    };
    let target = mps::to_dense(mps, mps::DEFAULT_DENSE_CAP)?;
    sched.replay_fidelity = fidelity(&replay(&sched)?, &target);
    Ok(sched)
}

/// Dense replay on `|φ_I⟩ ⊗ |0…0⟩`; returns the chain state after projecting
/// the ancilla onto `φ_F`.
pub fn replay(sched: &GenerationSchedule) -> Result<Array1<C64>> {
    let (n, d) = (sched.n_sites, sched.phys_dim);
    let chain = mps::check_cap(d, n, mps::DEFAULT_DENSE_CAP)?;
    match sched.mode {
        ScheduleMode::NoAncilla => {
            let mut psi = Array1::zeros(chain);
            psi[0] = cr(1.0);
            for st in &sched.steps {
                psi = mps::apply_local(&psi, d, n, &st.unitary, &st.sites)?;
            }
            Ok(psi)
        }
        ScheduleMode::WithAncilla => {
            let da = sched.ancilla_dim;
            if sched.phi_initial.len() != da || sched.phi_final.len() != da {
                return invalid("ancilla states have the wrong dimension");
            }
            // psi[a, s] with a the ancilla index
            let mut psi = linalg::zeros(da, chain);
            for a in 0..da {
                psi[[a, 0]] = sched.phi_initial[a];
            }
            for st in &sched.steps {
                let k = st.sites[0];
                let stride = d.pow((n - 1 - k) as u32);
                let u = &st.unitary;
                let mut next = linalg::zeros(da, chain);
                for s in 0..chain {
                    let i = (s / stride) % d;
                    let base = s - i * stride;
                    for b in 0..da {
                        let mut acc = cr(0.0);
                        for a in 0..da {
                            for j in 0..d {
                                let z = psi[[a, base + j * stride]];
                                if z.norm() != 0.0 {
                                    acc += u[[b * d + i, a * d + j]] * z;
                                }
                            }
                        }
                        next[[b, s]] = acc;
                    }
                }
                psi = next;
            }
            let mut out = Array1::zeros(chain);
            for a in 0..da {
                let w = sched.phi_final[a].conj();
                out.scaled_add(w, &psi.slice(s![a, ..]));
            }
            Ok(out)
        }
    }
}

/// Weight the replayed joint state leaves outside `φ_F` on the ancilla.
pub fn ancilla_leakage(sched: &GenerationSchedule) -> Result<f64> {
    let out = replay(sched)?;
    Ok((1.0 - out.iter().map(|z| z.norm_sqr()).sum::<f64>()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, StateName};

    #[test]
    fn product_state_trivial_ancilla() {
        let r = 1.0 / 2f64.sqrt();
        let m = ObcMps::product(&[vec![cr(r), cr(r)], vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(1.0)]]).unwrap();
        let s = generation_schedule_with_ancilla(&m).unwrap();
        assert_eq!(s.ancilla_dim, 1);
        assert!(1.0 - s.replay_fidelity < 1e-12);
    }

    #[test]
    fn ghz_both_modes() {
        let g = build_state(StateName::Ghz, 6).unwrap().to_obc().unwrap();
        let a = generation_schedule_with_ancilla(&g).unwrap();
        assert_eq!(a.steps.len(), 6);
        assert!(1.0 - a.replay_fidelity < 1e-9);
        assert!(ancilla_leakage(&a).unwrap() < 1e-12);
        let b = generation_schedule_no_ancilla(&g).unwrap();
        assert_eq!(b.steps.len(), 5);
        assert!(1.0 - b.replay_fidelity < 1e-9);
    }

    #[test]
    fn embedding_is_unitary() {
        let w = build_state(StateName::W, 5).unwrap().to_obc().unwrap();
        let s = generation_schedule_with_ancilla(&w).unwrap();
        for st in &s.steps {
            assert!(linalg::unitarity_residual(&st.unitary) < 1e-10);
            assert!(st.isometry_residual < 1e-10);
        }
    }
}
