//! TOML scenario files.
//!
//! ```toml
//! name = "dephasing"
//! observable = "(1,0) X"
//!
//! [model]
//! n_qubits = 1
//! hamiltonian = "(0.5,0) Z"
//!
//! [[model.jumps]]
//! rate = 1.5
//! op = "(1,0) Z"
//!
//! [ansatz]
//! z = [1.0, 1.0]
//! b_re = [[1.0, 1.0], [1.0, 1.0]]
//!
//! [[ansatz.circuits]]
//! init = "0"
//! gates = [{ generator = "(1,0) Z", sign = 1, param = "z1" }]
//!
//! [run]
//! t_final = 2.0
//! ```
//!
//! Operators use one `(re,im) LETTERS` term per line. Circuit gates are
//! listed leftmost first, so the last gate acts first on `init`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use opendyn_core::models::Scenario;
use opendyn_core::{AnsatzState, CMatrix, Circuit, Complex64, Jump, LindbladModel, PauliSum, Sign};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub observable: String,
    pub model: ModelSection,
    pub ansatz: AnsatzSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "RunSection::is_empty")]
    pub run: RunSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_qubits: usize,
    pub hamiltonian: String,
    #[serde(default)]
    pub jumps: Vec<JumpSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSection {
    pub rate: f64,
    pub op: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub z: Vec<f64>,
    pub b_re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_im: Option<Vec<Vec<f64>>>,
    pub circuits: Vec<CircuitSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    /// Initial computational basis state as a bitstring, qubit 0 first.
    pub init: String,
    #[serde(default)]
    pub gates: Vec<GateSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub generator: String,
    pub sign: i32,
    pub param: String,
}

/// Optional run settings; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub output_every: Option<usize>,
    pub integrator: Option<String>,
    pub estimator: Option<String>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub rel_cutoff: Option<f64>,
    pub zdot_solve: Option<String>,
    pub oracle: Option<bool>,
    pub oracle_dt: Option<f64>,
}

impl RunSection {
    pub fn is_empty(&self) -> bool {
        *self == RunSection::default()
    }
}

fn operator(text: &str, n: usize, what: &str) -> Result<PauliSum> {
    PauliSum::parse(text, Some(n)).with_context(|| format!("in {what}"))
}

fn matrix(re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>, n: usize) -> Result<CMatrix> {
    ensure!(re.len() == n && re.iter().all(|r| r.len() == n), "b_re must be {n}x{n}");
    if let Some(im) = im {
        ensure!(im.len() == n && im.iter().all(|r| r.len() == n), "b_im must be {n}x{n}");
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

fn parse_init(bits: &str, n: usize) -> Result<usize> {
    ensure!(bits.len() == n, "init {bits:?} must have {n} bits");
    usize::from_str_radix(bits, 2).with_context(|| format!("init {bits:?} is not a bitstring"))
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn build(&self) -> Result<Scenario> {
        let n = self.model.n_qubits;
        let h = operator(&self.model.hamiltonian, n, "model.hamiltonian")?;
        let jumps = self
            .model
            .jumps
            .iter()
            .enumerate()
            .map(|(j, s)| Ok(Jump { rate: s.rate, op: operator(&s.op, n, &format!("model.jumps[{j}]"))? }))
            .collect::<Result<Vec<_>>>()?;
        let model = LindbladModel::new(h, jumps)?;

        let mut circuits = Vec::new();
        for (k, cs) in self.ansatz.circuits.iter().enumerate() {
            let mut circ = Circuit::new(n, parse_init(&cs.init, n)?)?;
            for (g, gs) in cs.gates.iter().enumerate() {
                let generator = operator(&gs.generator, n, &format!("ansatz.circuits[{k}].gates[{g}]"))?;
                circ.push_gate(generator, Sign::from_i32(gs.sign)?, &gs.param)
                    .with_context(|| format!("ansatz.circuits[{k}].gates[{g}]"))?;
            }
            circuits.push(circ);
        }
        if circuits.is_empty() {
            bail!("ansatz needs at least one circuit");
        }
        let b = matrix(&self.ansatz.b_re, self.ansatz.b_im.as_ref(), circuits.len())?;
        let ansatz = AnsatzState::new(circuits, self.ansatz.z.clone(), b)?;
        let observable = operator(&self.observable, n, "observable")?;
        Ok(Scenario { name: self.name.clone(), model, ansatz, observable, params: self.params.clone() })
    }

    pub fn from_scenario(s: &Scenario) -> ScenarioFile {
        let text = |p: &PauliSum| p.to_string();
        let b = s.ansatz.b();
        let n = b.nrows();
        let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| b[(i, j)].im).collect()).collect();
        let circuits = s
            .ansatz
            .circuits()
            .iter()
            .map(|c| CircuitSection {
                init: format!("{:0width$b}", c.init(), width = c.n_qubits()),
                gates: c
                    .gates()
                    .iter()
                    .map(|g| GateSection {
                        generator: text(g.generator()),
                        sign: g.sign().value() as i32,
                        param: c.param_names()[g.param()].clone(),
                    })
                    .collect(),
            })
            .collect();
        ScenarioFile {
            name: s.name.clone(),
            observable: text(&s.observable),
            model: ModelSection {
                n_qubits: s.model.n_qubits(),
                hamiltonian: text(s.model.hamiltonian()),
                jumps: s.model.jumps().iter().map(|j| JumpSection { rate: j.rate, op: text(&j.op) }).collect(),
            },
            ansatz: AnsatzSection {
                z: s.ansatz.z().to_vec(),
                b_re: (0..n).map(|i| (0..n).map(|j| b[(i, j)].re).collect()).collect(),
                b_im: if im.iter().flatten().any(|v| *v != 0.0) { Some(im) } else { None },
                circuits,
            },
            params: s.params.clone(),
            run: RunSection::default(),
        }
    }
}
