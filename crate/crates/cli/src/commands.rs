//! One adapter per subcommand: read inputs, call the library, write reports.

use std::path::{Path, PathBuf};

use mpskit::canonical::{self, ExtractionOptions, PeriodicDecomposition};
use mpskit::circuit::{self, MeasurementPlan};
use mpskit::compress;
use mpskit::generation;
use mpskit::hamiltonian::{self, Boundary, LocalHamiltonian};
use mpskit::io;
use mpskit::mps::{self, Chain};
use mpskit::parent;
use mpskit::transfer;
use mpskit::{AnyMps, Mat, StateName, TiMps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{complex_list, Output};
use crate::{CliError, Command, ExtractMethod, ModelArg, ModelArgs, ScheduleArg};

/// `Ok(Some(msg))` means the reports were written but a check failed.
type Outcome = Result<Option<String>, CliError>;

pub fn dispatch(cmd: &Command, cfg: &RunConfig, argv: &[String]) -> Result<(), CliError> {
    let mut out = Output::new(&cfg.out, cmd.name())?;
    let mut inputs = Vec::new();
    let failure = run_command(cmd, cfg, &mut out, &mut inputs)?;
    out.finish(cmd.name(), argv, cfg, &inputs)?;
    match failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn run_command(cmd: &Command, cfg: &RunConfig, out: &mut Output, inputs: &mut Vec<PathBuf>) -> Outcome {
    let mut load = |p: &PathBuf| -> Result<AnyMps, CliError> {
        inputs.push(p.clone());
        Ok(io::read_mps(p)?)
    };
    match cmd {
        Command::State { name, n } => state(out, name, *n),
        Command::Canon { input } => canon(out, cfg, &load(input)?),
        Command::TiExtract { input, method, bond, l0 } => ti_extract(out, cfg, &load(input)?, *method, *bond, *l0),
        Command::Blocks { input } => blocks(out, &load(input)?),
        Command::Periodic { input } => periodic(out, &load(input)?),
        Command::Spectrum { input } => spectrum(out, cfg, &load(input)?),
        Command::Injectivity { input, l_max } => injectivity(out, &load(input)?, *l_max),
        Command::ParentHam { input, l, n, boundary } => parent_ham(out, cfg, &load(input)?, *l, *n, (*boundary).into()),
        Command::Groundspace { model } => {
            let state = model.input.as_ref().map(&mut load).transpose()?;
            groundspace(out, cfg, model, state.as_ref())
        }
        Command::Knabe { input, regroup, n } => knabe(out, cfg, &load(input)?, *regroup, *n),
        Command::Compress { input, bond } => compress_cmd(out, &load(input)?, *bond),
        Command::Entropy { input, alpha, bond } => entropy(out, &load(input)?, alpha, *bond),
        Command::Dmrg { model, bond, sweeps } => {
            let state = model.input.as_ref().map(&mut load).transpose()?;
            dmrg(out, cfg, model, state.as_ref(), *bond, *sweeps)
        }
        Command::Simulate { input, bond } => {
            inputs.push(input.clone());
            simulate(out, input, *bond)
        }
        Command::Sample { input, shots, basis } => sample(out, cfg, &load(input)?, *shots, basis),
        Command::Mbqc { input, plan } => {
            let resource = load(input)?;
            inputs.push(plan.clone());
            mbqc(out, cfg, &resource, plan)
        }
        Command::Schedule { input, mode } => schedule(out, cfg, &load(input)?, *mode),
        Command::OracleCheck { input } => oracle_check(out, cfg, &load(input)?),
    }
}

fn validation<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Validation(msg.into()))
}

fn ti_of(m: &AnyMps) -> Result<&TiMps, CliError> {
    match m {
        AnyMps::Ti(t) => Ok(t),
        _ => validation("this subcommand needs a translation-invariant (kind \"ti\") chain"),
    }
}

fn state_name(s: &str) -> Result<StateName, CliError> {
    let canonical = match s {
        "mg" => "majumdar_ghosh",
        "af_ghz" | "ghz_af" => "ghz_antiferro",
        other => other,
    };
    Ok(canonical.parse()?)
}

fn state(out: &mut Output, name: &str, n: usize) -> Outcome {
    let m = mpskit::build_state(state_name(name)?, n)?;
    out.primary_text(&io::mps_to_json(&m)?)?;
    Ok(None)
}

fn canon(out: &mut Output, cfg: &RunConfig, m: &AnyMps) -> Outcome {
    let (c, record) = canonical::gauge_to_canonical(&m.to_obc()?)?;
    let r = canonical::canonical_residuals(&c)?;
    let file = out.extra_mps("state", &AnyMps::Obc(c.clone()))?;
    let worst = r.isometry.max(r.lambda_recursion).max(r.trace_error);
    let pass = worst <= cfg.tau_iso && r.sorted && r.min_lambda > 0.0;
    out.primary_json(&json!({
        "n_sites": c.n_sites(),
        "d": c.phys_dim(),
        "bond_dims": c.bond_dims(),
        "prefactor": [c.prefactor().re, c.prefactor().im],
        "schmidt": c.schmidt(),
        "residuals": {
            "isometry": r.isometry,
            "lambda_recursion": r.lambda_recursion,
            "trace_error": r.trace_error,
            "min_lambda": r.min_lambda,
            "sorted": r.sorted,
            "gauge_inverse": record.inverse_residual(),
        },
        "tau_iso": cfg.tau_iso,
        "pass": pass,
        "state_file": file,
    }))?;
    Ok((!pass).then(|| format!("canonical residual {worst:.3e} exceeds tau_iso {:.1e}", cfg.tau_iso)))
}

fn ti_extract(
    out: &mut Output,
    cfg: &RunConfig,
    m: &AnyMps,
    method: ExtractMethod,
    bond: Option<usize>,
    l0: usize,
) -> Outcome {
    let obc = m.to_obc()?;
    let found = match method {
        ExtractMethod::Restore => Some(canonical::ti_from_obc(&obc, false)?),
        ExtractMethod::Window => {
            let Some(bond) = bond else {
                return validation("--method window needs --bond");
            };
            let opts = ExtractionOptions { seed: cfg.seed, ..Default::default() };
            canonical::solve_ti_extraction(&obc, bond, l0, &opts)?
        }
    };
    let file = match &found {
        Some(t) => Some(out.extra_mps("state", &AnyMps::Ti(t.clone()))?),
        None => None,
    };
    out.primary_json(&json!({
        "method": format!("{method:?}").to_lowercase(),
        "found": found.is_some(),
        "bond": found.as_ref().map(|t| t.bond()),
        "state_file": file,
    }))?;
    Ok(None)
}

fn blocks(out: &mut Output, m: &AnyMps) -> Outcome {
    let b = canonical::ti_canonical_blocks(ti_of(m)?)?;
    out.primary_json(&b.report())?;
    Ok(None)
}

fn periodic(out: &mut Output, m: &AnyMps) -> Outcome {
    let t = ti_of(m)?;
    let b = canonical::ti_canonical_blocks(t)?;
    let mut per_block = Vec::new();
    let mut all_files = Vec::new();
    let mut period = 1;
    for (j, block) in b.blocks.iter().enumerate() {
        let dec = canonical::periodic_decomposition(&block.tensor, t.n_sites())?;
        period = period.max(dec.period());
        let mut files = Vec::new();
        if let PeriodicDecomposition::Components { components, .. } = &dec {
            for (k, comp) in components.iter().enumerate() {
                files.push(out.extra_mps(&format!("block{j}_component{k}"), &AnyMps::Obc(comp.clone()))?);
            }
        }
        all_files.extend(files.iter().cloned());
        per_block.push(json!({
            "block": j,
            "p": dec.period(),
            "zero_state": matches!(dec, PeriodicDecomposition::ZeroState { .. }),
            "component_files": files,
        }));
    }
    out.primary_json(&json!({ "p": period, "component_files": all_files, "blocks": per_block }))?;
    Ok(None)
}

fn spectrum(out: &mut Output, cfg: &RunConfig, m: &AnyMps) -> Outcome {
    let a = transfer::analyze_with(ti_of(m)?.tensor(), cfg.tau_spec)?;
    let xi = transfer::correlation_length(&a).ok().map(|(xi, _)| xi);
    out.primary_json(&json!({
        "radius": a.spectral_radius,
        "eigenvalues": complex_list(a.eigenvalues.iter().copied()),
        "nu2": a.nu2,
        "p": a.peripheral_count,
        "fixed_space_dim": a.fixed_space_dim,
        "classification": a.classification,
        "correlation_length": xi,
        "tau_spec": a.tau_spec,
    }))?;
    Ok(None)
}

fn injectivity(out: &mut Output, m: &AnyMps, l_max: Option<usize>) -> Outcome {
    let t = ti_of(m)?.tensor();
    let dim = t.d_left();
    let l_max = l_max.unwrap_or(dim * dim + 1);
    let rep = canonical::injectivity_length(t, l_max)?;
    let a0 = canonical::check_invertible_a0_bound(t)?;
    out.primary_json(&json!({ "L0": rep.l0, "rank_curve": rep.rank_curve, "l_max": l_max, "a0_bound": a0 }))?;
    Ok(None)
}

fn parent_ham(out: &mut Output, cfg: &RunConfig, m: &AnyMps, l: usize, n: Option<usize>, boundary: Boundary) -> Outcome {
    let t = ti_of(m)?;
    let n = n.unwrap_or(t.n_sites());
    let blocks = canonical::ti_canonical_blocks(t)?;
    let l0 = blocks
        .blocks
        .iter()
        .map(|b| canonical::injectivity_length(&b.tensor, 2 * b.size() * b.size() + 1).map(|r| r.l0))
        .collect::<Result<Option<Vec<_>>, _>>()?
        .and_then(|v| v.into_iter().max());
    let state = (n == t.n_sites()).then_some(t as &dyn Chain);
    let (h, _, cert) = parent::certify_parent(&blocks, l0, l, n, boundary, state, cfg.dense_cap)?;
    let term = out.extra_text("term", "json", &crate::output::to_json(&MatJson(&h.term))?)?;
    out.primary_json(&json!({ "d": h.d, "L": l, "L0": l0, "term_file": term, "certificate": cert }))?;
    Ok(None)
}

struct MatJson<'a>(&'a Mat);

impl serde::Serialize for MatJson<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        io::ser_mat(self.0, s)
    }
}

fn build_model(model: &ModelArgs, state: Option<&AnyMps>, cap: usize) -> Result<LocalHamiltonian, CliError> {
    let (n, b): (usize, Boundary) = (model.n, model.boundary.into());
    Ok(match model.model {
        ModelArg::Tfim => hamiltonian::transverse_ising(n, model.g, b)?,
        ModelArg::Aklt => {
            let p2 = (hamiltonian::aklt_interaction() + Mat::eye(9).mapv(|z| z * (2.0 / 3.0))).mapv(|z| z * 0.5);
            LocalHamiltonian::new(p2, 3, n, b)?
        }
        ModelArg::Mg => LocalHamiltonian::new(hamiltonian::majumdar_ghosh_projector(), 2, n, b)?,
        ModelArg::Cluster => LocalHamiltonian::new(hamiltonian::cluster_stabilizer_projector(), 2, n, b)?,
        ModelArg::Parent => {
            let Some(state) = state else {
                return validation("--model parent needs --in");
            };
            let blocks = canonical::ti_canonical_blocks(ti_of(state)?)?;
            parent::parent_hamiltonian(&blocks, model.l, n, b, cap)?
        }
    })
}

fn groundspace(out: &mut Output, cfg: &RunConfig, model: &ModelArgs, state: Option<&AnyMps>) -> Outcome {
    let h = build_model(model, state, cfg.dense_cap)?;
    let gs = parent::ground_space(&h, cfg.dense_cap)?;
    out.primary_json(&json!({
        "model": format!("{:?}", model.model).to_lowercase(),
        "n_sites": model.n,
        "boundary": Boundary::from(model.boundary),
        "dim": gs.dim,
        "ground_energy": gs.ground_energy,
        "spectral_margin": gs.spectral_margin,
        "method": gs.method,
    }))?;
    Ok(None)
}

fn knabe(out: &mut Output, cfg: &RunConfig, m: &AnyMps, regroup: usize, n: usize) -> Outcome {
    let t = parent::regroup_tensor(ti_of(m)?.tensor(), regroup)?;
    let g = parent::g_space_tensors(std::slice::from_ref(&t), 2, cfg.dense_cap)?;
    let rep = parent::knabe_check(&parent::parent_term(&g), t.d(), n, cfg.dense_cap)?;
    out.primary_json(&json!({ "regroup": regroup, "d": t.d(), "threshold": 1.0 / n as f64, "report": rep }))?;
    Ok(None)
}

fn compress_cmd(out: &mut Output, m: &AnyMps, bond: usize) -> Outcome {
    let (t, rep) = compress::truncate(&m.to_obc()?, bond)?;
    let file = out.extra_mps("state", &AnyMps::Obc(t))?;
    out.primary_json(&json!({ "report": rep, "holds": rep.measured <= rep.bound + 1e-12, "state_file": file }))?;
    Ok((rep.measured > rep.bound + 1e-12).then(|| "truncation error exceeds the certified bound".to_string()))
}

fn entropy(out: &mut Output, m: &AnyMps, alphas: &[f64], bond: Option<usize>) -> Outcome {
    let (c, _) = canonical::gauge_to_canonical(&m.to_obc()?)?;
    let spectra = c.schmidt().unwrap_or(&[]).to_vec();
    let mut cuts = Vec::new();
    let mut csv = String::from("cut,alpha,entropy\n");
    for (k, p) in spectra.iter().enumerate() {
        let mut ent = Vec::new();
        for &a in alphas {
            let s = compress::renyi_entropy(p, a)?;
            csv.push_str(&format!("{},{a},{s:.17e}\n", k + 1));
            let tail = match bond {
                Some(d) if a < 1.0 => Some(compress::check_tail_bound(p, a, d)?),
                _ => None,
            };
            ent.push(json!({ "alpha": a, "entropy": s, "tail_check": tail }));
        }
        cuts.push(json!({ "cut": k + 1, "schmidt": p, "entropies": ent }));
    }
    let table = out.extra_text("entropies", "csv", &csv)?;
    out.primary_json(&json!({ "bond": bond, "cuts": cuts, "table_file": table }))?;
    Ok(None)
}

fn dmrg(out: &mut Output, cfg: &RunConfig, model: &ModelArgs, state: Option<&AnyMps>, bond: usize, sweeps: usize) -> Outcome {
    let h = build_model(model, state, cfg.dense_cap)?;
    let run = compress::dmrg_ground_state(&h, bond, sweeps, cfg.tol_e, cfg.seed)?;
    let trace = out.extra_text("energies", "csv", &run.to_csv())?;
    let file = out.extra_mps("state", &AnyMps::Obc(run.state.clone()))?;
    out.primary_json(&json!({
        "model": format!("{:?}", model.model).to_lowercase(),
        "n_sites": model.n,
        "final_energy": run.final_energy(),
        "max_increase": run.max_increase(),
        "run": run,
        "trace_file": trace,
        "state_file": file,
    }))?;
    Ok(None)
}

fn simulate(out: &mut Output, input: &Path, bond: usize) -> Outcome {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
    let c = io::circuit_from_json(&text)?;
    let r = circuit::simulate(&c, bond)?;
    let file = match &r.state {
        Some(s) => Some(out.extra_mps("state", &AnyMps::Obc(s.clone()))?),
        None => None,
    };
    out.primary_json(&json!({ "result": r, "state_file": file }))?;
    Ok(None)
}

fn parse_bases(spec: &str, n: usize) -> Result<Vec<Mat>, CliError> {
    let letters: Vec<char> = spec.chars().collect();
    let letters = if letters.len() == 1 { vec![letters[0]; n] } else { letters };
    if letters.len() != n {
        return validation(format!("basis string has {} letters for {n} sites", letters.len()));
    }
    letters
        .iter()
        .map(|l| match l {
            'z' | 'Z' => Ok(Mat::eye(2)),
            'x' | 'X' => Ok(circuit::hadamard()),
            'y' | 'Y' => Ok(circuit::equatorial_basis(std::f64::consts::FRAC_PI_2)),
            other => validation(format!("unknown basis '{other}'")),
        })
        .collect()
}

fn sample(out: &mut Output, cfg: &RunConfig, m: &AnyMps, shots: usize, basis: &str) -> Outcome {
    let obc = m.to_obc()?;
    if obc.phys_dim() != 2 {
        return validation("basis letters apply to qubit chains only");
    }
    let bases = parse_bases(basis, obc.n_sites())?;
    let t = circuit::sample_measurements(&obc, &bases, shots, cfg.seed)?;
    let mut csv = String::from("shot,outcome\n");
    for (k, o) in t.outcomes.iter().enumerate() {
        let s: String = o.iter().map(|x| char::from_digit(*x as u32, 36).unwrap()).collect();
        csv.push_str(&format!("{k},{s}\n"));
    }
    let table = out.extra_text("outcomes", "csv", &csv)?;
    out.primary_json(&json!({ "basis": basis, "table": t, "outcomes_file": table }))?;
    Ok(None)
}

fn mbqc(out: &mut Output, cfg: &RunConfig, resource: &AnyMps, plan: &Path) -> Outcome {
    let text = std::fs::read_to_string(plan).map_err(|e| CliError::Validation(format!("{}: {e}", plan.display())))?;
    let plan: MeasurementPlan =
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", plan.display())))?;
    let t = circuit::simulate_measurement_based(&resource.to_obc()?, &plan, cfg.seed)?;
    let output = t.output.as_ref().map(|v| complex_list(v.iter().copied()));
    let file = match &t.state {
        Some(s) => Some(out.extra_mps("state", &AnyMps::Obc(s.clone()))?),
        None => None,
    };
    out.primary_json(&json!({ "transcript": t, "output": output, "state_file": file }))?;
    Ok(None)
}

fn schedule(out: &mut Output, cfg: &RunConfig, m: &AnyMps, mode: ScheduleArg) -> Outcome {
    let obc = m.to_obc()?;
    let s = match mode {
        ScheduleArg::Ancilla => generation::generation_schedule_with_ancilla(&obc)?,
        ScheduleArg::NoAncilla => generation::generation_schedule_no_ancilla(&obc)?,
    };
    out.primary_json(&s)?;
    let worst = s.steps.iter().map(|st| st.isometry_residual).fold(0.0, f64::max);
    Ok((worst > cfg.tau_iso || 1.0 - s.replay_fidelity > cfg.tau_iso.sqrt())
        .then(|| format!("schedule check failed: isometry {worst:.2e}, replay fidelity {}", s.replay_fidelity)))
}

fn oracle_check(out: &mut Output, cfg: &RunConfig, m: &AnyMps) -> Outcome {
    let (d, n) = (m.phys_dim(), m.n_sites());
    mps::check_cap(d, n, cfg.dense_cap)?;
    let psi = mps::to_dense(m.as_chain(), cfg.dense_cap)?;
    let dense_norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let mps_norm = mps::norm_sqr(m.as_chain())?;
    let scale = psi.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = psi.len().min(256);
    let mut amp_err = 0.0f64;
    for k in 0..samples {
        let idx = if samples == psi.len() { k } else { rng.random_range(0..psi.len()) };
        let a = mps::amplitude(m.as_chain(), &mps::index_to_string(idx, d, n))?;
        amp_err = amp_err.max((a - psi[idx]).norm() / scale);
    }

    let (canon, _) = canonical::gauge_to_canonical(&m.to_obc()?)?;
    let mut spec_err = 0.0f64;
    for (k, lam) in canon.schmidt().unwrap_or(&[]).iter().enumerate() {
        let exact = mps::dense_cut_spectrum(&psi, d, n, k + 1)?;
        for j in 0..exact.len().max(lam.len()) {
            let e = exact.get(j).copied().unwrap_or(0.0) - lam.get(j).copied().unwrap_or(0.0);
            spec_err = spec_err.max(e.abs());
        }
    }
    let rebuilt = mps::from_dense(psi.as_slice().unwrap(), d, cfg.tol_rank)?;
    let rebuilt_bonds: Vec<usize> = rebuilt.bond_dims();

    let norm_err = (dense_norm - mps_norm).abs() / dense_norm.max(f64::MIN_POSITIVE);
    let tol = cfg.tau_iso;
    let pass = amp_err <= tol && spec_err <= tol && norm_err <= tol && rebuilt_bonds == canon.bond_dims();
    out.primary_json(&json!({
        "d": d,
        "n_sites": n,
        "dense_len": psi.len(),
        "norm_sqr": { "chain": mps_norm, "dense": dense_norm, "relative_error": norm_err },
        "amplitude_samples": samples,
        "amplitude_max_error": amp_err,
        "schmidt_max_error": spec_err,
        "bond_dims": { "canonical": canon.bond_dims(), "from_dense": rebuilt_bonds },
        "tolerance": tol,
        "pass": pass,
    }))?;
    Ok((!pass).then(|| "chain disagrees with its dense vector".to_string()))
}
