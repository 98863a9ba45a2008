//! JSON interchange: `mpsjson v1` chains, `circjson v1` circuits and the
//! complex-matrix encoding used in reports.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written in shortest
//! round-trip form, so a write/read cycle reproduces every bit.

use std::fs;
use std::path::Path;

use ndarray::Array3;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::circuit::{standard_gate, Circuit, Gate};
use crate::error::{MpsError, Result};
use crate::linalg::{c, Mat, C64};
use crate::mps::{AnyMps, CanonicalFlag, Chain, ObcMps, PbcMps, TiMps};
use crate::tensor::SiteTensor;

pub const MPSJSON_FORMAT: &str = "mpsjson v1";
pub const CIRCJSON_FORMAT: &str = "circjson v1";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MpsError::Format(msg.into()))
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C64 {
    c(p[0], p[1])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorJson {
    pub d_left: usize,
    pub d_right: usize,
    /// `(i, α, β)` row-major.
    pub data: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpsJson {
    #[serde(default = "default_mps_format")]
    pub format: String,
    /// `obc`, `ti` or `pbc` (site-dependent periodic chain).
    pub kind: String,
    pub d: usize,
    pub n_sites: usize,
    pub prefactor: [f64; 2],
    pub tensors: Vec<TensorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<Vec<Vec<f64>>>,
}

fn default_mps_format() -> String {
    MPSJSON_FORMAT.to_string()
}

fn tensor_json(t: &SiteTensor) -> TensorJson {
    TensorJson { d_left: t.d_left(), d_right: t.d_right(), data: t.data().iter().map(|z| pair(*z)).collect() }
}

fn tensor_from_json(t: &TensorJson, d: usize) -> Result<SiteTensor> {
    if t.data.len() != d * t.d_left * t.d_right {
        return format_err(format!("tensor data has {} entries, expected {}", t.data.len(), d * t.d_left * t.d_right));
    }
    let arr = Array3::from_shape_vec((d, t.d_left, t.d_right), t.data.iter().map(|p| unpair(*p)).collect())
        .map_err(|e| MpsError::Format(e.to_string()))?;
    SiteTensor::new(arr).map_err(|e| MpsError::Format(e.to_string()))
}

impl MpsJson {
    pub fn from_mps(m: &AnyMps) -> Self {
        let (kind, tensors, schmidt) = match m {
            AnyMps::Obc(o) => ("obc", o.sites().iter().map(tensor_json).collect(), o.schmidt().map(|s| s.to_vec())),
            AnyMps::Ti(t) => ("ti", vec![tensor_json(t.tensor())], None),
            AnyMps::Pbc(p) => ("pbc", p.sites().iter().map(tensor_json).collect(), None),
        };
        MpsJson {
            format: MPSJSON_FORMAT.to_string(),
            kind: kind.to_string(),
            d: m.phys_dim(),
            n_sites: m.n_sites(),
            prefactor: pair(m.prefactor()),
            tensors,
            schmidt,
        }
    }

    pub fn to_mps(&self) -> Result<AnyMps> {
        if self.format != MPSJSON_FORMAT {
            return format_err(format!("unsupported format '{}'", self.format));
        }
        let pre = unpair(self.prefactor);
        let sites = self.tensors.iter().map(|t| tensor_from_json(t, self.d)).collect::<Result<Vec<_>>>()?;
        let wrap = |e: MpsError| MpsError::Format(e.to_string());
        match self.kind.as_str() {
            "obc" | "pbc" => {
                if sites.len() != self.n_sites {
                    return format_err(format!("{} tensors for {} sites", sites.len(), self.n_sites));
                }
                if self.kind == "pbc" {
                    return Ok(AnyMps::Pbc(PbcMps::new(sites, pre).map_err(wrap)?));
                }
                let mut m = ObcMps::new(sites, pre).map_err(wrap)?;
                if let Some(s) = &self.schmidt {
                    m = m.with_canonical(Some(s.clone()), CanonicalFlag::FullCanonical).map_err(wrap)?;
                }
                Ok(AnyMps::Obc(m))
            }
            "ti" => {
                let [t] = <[SiteTensor; 1]>::try_from(sites).map_err(|_| MpsError::Format("ti chain needs exactly one tensor".into()))?;
                Ok(AnyMps::Ti(TiMps::new(t, self.n_sites, pre).map_err(wrap)?))
            }
            k => format_err(format!("unknown kind '{k}'")),
        }
    }
}

pub fn mps_to_json(m: &AnyMps) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MpsJson::from_mps(m))?)
}

pub fn mps_from_json(s: &str) -> Result<AnyMps> {
    let doc: MpsJson = serde_json::from_str(s)?;
    doc.to_mps()
}

pub fn read_mps(path: &Path) -> Result<AnyMps> {
    let s = fs::read_to_string(path).map_err(|e| MpsError::InvalidInput(format!("{}: {e}", path.display())))?;
    mps_from_json(&s)
}

pub fn write_mps(path: &Path, m: &AnyMps) -> Result<()> {
    write_text(path, &mps_to_json(m)?)
}

pub fn write_text(path: &Path, s: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| MpsError::InvalidInput(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, s).map_err(|e| MpsError::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Rows of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    pub targets: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitJson {
    #[serde(default = "default_circ_format")]
    pub format: String,
    pub n_qubits: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    pub gates: Vec<GateJson>,
}

fn default_circ_format() -> String {
    CIRCJSON_FORMAT.to_string()
}

fn default_d() -> usize {
    2
}

fn rows_to_mat(rows: &[Vec<[f64; 2]>]) -> Result<Mat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return format_err("gate matrix must be square");
    }
    Ok(Mat::from_shape_fn((n, n), |(i, j)| unpair(rows[i][j])))
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<[f64; 2]>> {
    m.rows().into_iter().map(|r| r.iter().map(|z| pair(*z)).collect()).collect()
}

impl CircuitJson {
    pub fn from_circuit(c: &Circuit) -> Self {
        let gates = c
            .gates
            .iter()
            .map(|g| match &g.name {
                Some(n) if standard_gate(n).is_ok() && c.d == 2 => GateJson { name: Some(n.clone()), matrix: None, targets: g.targets.clone() },
                _ => GateJson { name: g.name.clone(), matrix: Some(mat_to_rows(&g.matrix)), targets: g.targets.clone() },
            })
            .collect();
        CircuitJson { format: CIRCJSON_FORMAT.to_string(), n_qubits: c.n_qubits, d: c.d, gates }
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        if self.format != CIRCJSON_FORMAT {
            return format_err(format!("unsupported format '{}'", self.format));
        }
        let mut gates = Vec::with_capacity(self.gates.len());
        for (k, g) in self.gates.iter().enumerate() {
            let m = match (&g.matrix, &g.name) {
                (Some(rows), _) => rows_to_mat(rows)?,
                (None, Some(name)) => standard_gate(name)?,
                (None, None) => return format_err(format!("gate {k} has neither name nor matrix")),
            };
            let mut gate = Gate::new(m, g.targets.clone(), self.d)?;
            gate.name = g.name.clone();
            gates.push(gate);
        }
        Circuit::new(self.n_qubits, self.d, gates)
    }
}

pub fn circuit_from_json(s: &str) -> Result<Circuit> {
    let doc: CircuitJson = serde_json::from_str(s)?;
    doc.to_circuit()
}

pub fn circuit_to_json(c: &Circuit) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CircuitJson::from_circuit(c))?)
}

/// `{rows, cols, data}` with `data` the row-major `[re, im]` pairs.
pub fn ser_mat<S: Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Matrix", 3)?;
    st.serialize_field("rows", &m.nrows())?;
    st.serialize_field("cols", &m.ncols())?;
    let data: Vec<[f64; 2]> = m.iter().map(|z| pair(*z)).collect();
    st.serialize_field("data", &data)?;
    st.end()
}

pub fn ser_vec<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let data: Vec<[f64; 2]> = v.iter().map(|z| pair(*z)).collect();
    data.serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, StateName};

    #[test]
    fn roundtrip_bits() {
        for name in StateName::ALL {
            let m = build_state(name, 6).unwrap();
            let back = mps_from_json(&mps_to_json(&m).unwrap()).unwrap();
            assert_eq!(back.n_sites(), 6);
            for k in 0..6 {
                assert_eq!(back.site(k), m.site(k));
            }
            assert_eq!(back.prefactor(), m.prefactor());
        }
    }

    #[test]
    fn irrational_values_survive() {
        let x = c(std::f64::consts::PI / 7.0, -1e-300);
        let t = SiteTensor::product(&[x, c(0.1, 0.2)]).unwrap();
        let m = AnyMps::Obc(ObcMps::new(vec![t.clone(), t], c(1.0 / 3.0, 0.0)).unwrap());
        let back = mps_from_json(&mps_to_json(&m).unwrap()).unwrap();
        assert_eq!(back.site(0), m.site(0));
        assert_eq!(back.prefactor(), m.prefactor());
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(mps_from_json("{"), Err(MpsError::Format(_))));
        let bad = r#"{"kind":"obc","d":2,"n_sites":1,"prefactor":[1,0],"tensors":[{"d_left":1,"d_right":1,"data":[[1,0]]}]}"#;
        assert!(matches!(mps_from_json(bad), Err(MpsError::Format(_))));
        let bad_kind = r#"{"kind":"mera","d":2,"n_sites":1,"prefactor":[1,0],"tensors":[]}"#;
        assert!(matches!(mps_from_json(bad_kind), Err(MpsError::Format(_))));
    }

    #[test]
    fn circuit_roundtrip() {
        let s = r#"{"n_qubits":3,"gates":[{"name":"h","targets":[0]},{"name":"cnot","targets":[0,2]},
            {"matrix":[[[0,0],[1,0]],[[1,0],[0,0]]],"targets":[1]}]}"#;
        let c = circuit_from_json(s).unwrap();
        assert_eq!(c.gates.len(), 3);
        let again = circuit_from_json(&circuit_to_json(&c).unwrap()).unwrap();
        for (a, b) in c.gates.iter().zip(&again.gates) {
            assert_eq!(a.matrix, b.matrix);
            assert_eq!(a.targets, b.targets);
        }
        assert!(circuit_from_json(r#"{"n_qubits":2,"gates":[{"name":"h","targets":[5]}]}"#).is_err());
    }
}
