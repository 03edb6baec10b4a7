//! Example open systems with their ansatz circuits, and the binary encoding
//! of truncated bosonic modes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::circuit::{Circuit, Sign};
use crate::dense::{CMatrix, ONE, ZERO};
use crate::error::{invalid, Result};
use crate::model::{Jump, LindbladModel};
use crate::pauli::{PauliSum, DENSE_QUBIT_CAP};
use crate::tdvp::AnsatzState;

/// Most Pauli terms a single gate generator may carry.
pub const GENERATOR_TERM_CAP: usize = 4;
/// Most gates a single circuit may carry.
pub const CIRCUIT_LENGTH_CAP: usize = 64;

pub const PRESETS: [&str; 4] = ["dephasing", "damping", "jaynes-cummings", "vibronic"];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn word(label: &str) -> PauliSum {
    PauliSum::from_labels(&[(ONE, label)]).expect("valid label")
}

/// `|i⟩⟨j|` on one qubit.
fn ket_bra1(i: usize, j: usize) -> PauliSum {
    let half = 0.5;
    let terms: [(Complex64, &str); 2] = match (i, j) {
        (0, 0) => [(c(half, 0.0), "I"), (c(half, 0.0), "Z")],
        (1, 1) => [(c(half, 0.0), "I"), (c(-half, 0.0), "Z")],
        (0, 1) => [(c(half, 0.0), "X"), (c(0.0, half), "Y")],
        _ => [(c(half, 0.0), "X"), (c(0.0, -half), "Y")],
    };
    PauliSum::from_labels(&terms).expect("valid label")
}

/// `|i⟩⟨j|` on `n` qubits, qubit 0 holding the most significant bit.
fn ket_bra(i: usize, j: usize, n: usize) -> PauliSum {
    let bit = |v: usize, q: usize| (v >> (n - 1 - q)) & 1;
    let mut acc = ket_bra1(bit(i, 0), bit(j, 0));
    for q in 1..n {
        acc = acc.tensor(&ket_bra1(bit(i, q), bit(j, q))).expect("within qubit limit");
    }
    acc
}

/// Qubits needed to hold `d` levels.
pub fn qubits_for(d: usize) -> usize {
    let mut q = 1;
    while (1usize << q) < d {
        q += 1;
    }
    q
}

/// Truncated ladder operators `(a, a†, N)` for a mode with `d_trunc` levels,
/// binary encoded on `⌈log₂ d_trunc⌉` qubits.
pub fn boson_ops(d_trunc: usize) -> Result<(PauliSum, PauliSum, PauliSum)> {
    if d_trunc < 2 {
        return Err(invalid(alloc::format!("d_trunc must be at least 2, got {d_trunc}")));
    }
    let q = qubits_for(d_trunc);
    if q > DENSE_QUBIT_CAP {
        return Err(crate::error::Error::Resource { n_qubits: q, cap: DENSE_QUBIT_CAP });
    }
    let mut adag = PauliSum::zero(q);
    for s in 0..d_trunc - 1 {
        let amp = num_traits::Float::sqrt((s + 1) as f64);
        adag = adag.add(&ket_bra(s + 1, s, q).scale(c(amp, 0.0)))?;
    }
    let adag = adag.simplified();
    let a = adag.dagger().simplified();
    let n = adag.multiply(&a)?;
    Ok((a, adag, n))
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub model: LindbladModel,
    pub ansatz: AnsatzState,
    pub observable: PauliSum,
    pub params: BTreeMap<String, f64>,
}

impl Scenario {
    /// One of [`PRESETS`] with its default parameters.
    pub fn preset(name: &str) -> Result<Scenario> {
        match name {
            "dephasing" => build_dephasing(1.0, 1.5),
            "damping" => build_amplitude_damping(1.0, 7.5),
            "jaynes-cummings" => build_jaynes_cummings(1.0, 2.0, 10.0, 4),
            "vibronic" => build_vibronic(0.007, 0.007, 0.05, 0.04, 1.0, 0.0, 2),
            _ => Err(invalid(alloc::format!("unknown scenario {name:?}; presets are {}", PRESETS.join(", ")))),
        }
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(invalid(alloc::format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

fn ones(n: usize) -> CMatrix {
    CMatrix::from_element(n, n, ONE)
}

fn single_gate_circuit(init: usize, generator: &str, param: &str) -> Result<Circuit> {
    Circuit::new(1, init)?.with_gate(word(generator), Sign::Plus, param)
}

/// `H = (ω₀/2)σ_z` with σ_z dephasing at rate `γ`; states `e^{iσ_z z_k}`
/// applied to `|0⟩` and `|1⟩`, `z = (1, 1)`, `B` all ones, observable σ_x.
pub fn build_dephasing(omega0: f64, gamma: f64) -> Result<Scenario> {
    check_rate("gamma", gamma)?;
    let h = word("Z").scale(c(omega0 / 2.0, 0.0));
    let model = LindbladModel::new(h, alloc::vec![Jump { rate: gamma, op: word("Z") }])?;
    let circuits = alloc::vec![single_gate_circuit(0, "Z", "z1")?, single_gate_circuit(1, "Z", "z2")?];
    let ansatz = AnsatzState::new(circuits, alloc::vec![1.0, 1.0], ones(2))?;
    Ok(Scenario {
        name: "dephasing".into(),
        model,
        ansatz,
        observable: word("X"),
        params: params(&[("omega0", omega0), ("gamma", gamma)]),
    })
}

/// `σ⁻ = |1⟩⟨0|`, lowering from the `σ_z = +1` state `|0⟩`.
pub fn sigma_minus() -> PauliSum {
    ket_bra1(1, 0)
}

/// `σ⁺ = |0⟩⟨1|`.
pub fn sigma_plus() -> PauliSum {
    ket_bra1(0, 1)
}

/// `H = (ω₀/2)σ_z` with `σ⁻` decay at rate `Γ`; states `e^{iσ_z z_1}|0⟩` and
/// `e^{iσ_x z_2}|1⟩`, `z = (0, π/4)`, `B` all ones, observable `H`.
pub fn build_amplitude_damping(omega0: f64, big_gamma: f64) -> Result<Scenario> {
    check_rate("Gamma", big_gamma)?;
    let h = word("Z").scale(c(omega0 / 2.0, 0.0));
    let model = LindbladModel::new(h.clone(), alloc::vec![Jump { rate: big_gamma, op: sigma_minus() }])?;
    let circuits = alloc::vec![single_gate_circuit(0, "Z", "z1")?, single_gate_circuit(1, "X", "z2")?];
    let z = alloc::vec![0.0, core::f64::consts::FRAC_PI_4];
    let ansatz = AnsatzState::new(circuits, z, ones(2))?;
    Ok(Scenario {
        name: "damping".into(),
        model,
        ansatz,
        observable: h,
        params: params(&[("omega0", omega0), ("Gamma", big_gamma)]),
    })
}

/// Pauli words of the binary-encoded number operator on `nb` qubits, with
/// unit coefficients: the identity followed by `Z` on each qubit from the
/// least significant one up.
fn number_words(nb: usize) -> Vec<PauliSum> {
    let mut out = alloc::vec![PauliSum::identity(nb)];
    for q in (0..nb).rev() {
        let mut label = alloc::vec!['I'; nb];
        label[q] = 'Z';
        out.push(word(&label.iter().collect::<String>()));
    }
    out
}

/// Photon number fixed for the initial oscillator state.
pub const JC_PHOTONS: usize = 2;

/// `H = ω_r a†a + (ω_r/2)σ_z + G(aσ⁺ + a†σ⁻)` with `σ⁻` decay at rate `γ`.
/// Oscillator qubits come first and the two-level system is the last qubit.
/// Both states start from `|n = 2⟩` with the TLS in `|0⟩` and `|1⟩`.
pub fn build_jaynes_cummings(omega_r: f64, g: f64, gamma: f64, d_trunc: usize) -> Result<Scenario> {
    check_rate("gamma", gamma)?;
    if d_trunc <= JC_PHOTONS {
        return Err(invalid(alloc::format!(
            "d_trunc must exceed the initial photon number {JC_PHOTONS}, got {d_trunc}"
        )));
    }
    let (a, adag, num) = boson_ops(d_trunc)?;
    let nb = qubits_for(d_trunc);
    let n = nb + 1;
    let id1 = PauliSum::identity(1);
    let osc = |op: &PauliSum| op.tensor(&id1).expect("within qubit limit");
    let tls = |op: &PauliSum| PauliSum::identity(nb).tensor(op).expect("within qubit limit");

    let h = osc(&num)
        .scale(c(omega_r, 0.0))
        .add(&tls(&word("Z")).scale(c(omega_r / 2.0, 0.0)))?
        .add(&a.tensor(&sigma_plus())?.add(&adag.tensor(&sigma_minus())?)?.scale(c(g, 0.0)))?
        .simplified();
    let model = LindbladModel::new(h, alloc::vec![Jump { rate: gamma, op: tls(&sigma_minus()).simplified() }])?;

    let mut circuits = Vec::new();
    for (k, param) in ["z1", "z2"].iter().enumerate() {
        let mut circ = Circuit::new(n, (JC_PHOTONS << 1) | k)?;
        circ.push_gate(tls(&word("Z")), Sign::Plus, param)?;
        for w in number_words(nb) {
            circ.push_gate(osc(&w), Sign::Plus, param)?;
        }
        circuits.push(circ);
    }
    let ansatz = AnsatzState::new(circuits, alloc::vec![0.0, 0.0], ones(2))?;
    Ok(Scenario {
        name: "jaynes-cummings".into(),
        model,
        ansatz,
        observable: osc(&num).simplified(),
        params: params(&[
            ("omega_r", omega_r),
            ("G", g),
            ("gamma", gamma),
            ("d_trunc", d_trunc as f64),
            ("n", JC_PHOTONS as f64),
        ]),
    })
}

/// Two modes coupled to a donor/acceptor pair (`|D⟩ = |0⟩`, `|A⟩ = |1⟩`):
///
/// `H = Σ_i (ω_i/2) a_i†a_i − d(a_1† + a_1)σ_z + c(a_2† + a_2)σ_x`,
///
/// jumps `L_1 = a_1 − κσ_z` (`κ = d/(ω_1√2)`) at rate `2h_1` and `L_2 = a_2`
/// at rate `2h_2`. Qubit layout is mode 1, mode 2, then the TLS. Both modes
/// start in vacuum.
#[allow(clippy::too_many_arguments)]
pub fn build_vibronic(
    omega1: f64,
    omega2: f64,
    d: f64,
    cc: f64,
    h1: f64,
    h2: f64,
    d_trunc: usize,
) -> Result<Scenario> {
    check_rate("h1", h1)?;
    check_rate("h2", h2)?;
    if omega1 == 0.0 {
        return Err(invalid("omega1 must be nonzero"));
    }
    let (a, adag, num) = boson_ops(d_trunc)?;
    let nb = qubits_for(d_trunc);
    let n = 2 * nb + 1;
    let mode = |i: usize, op: &PauliSum| op.embed(i * nb, n).expect("within register");
    let tls = |op: &PauliSum| op.embed(2 * nb, n).expect("within register");
    let x1 = mode(0, &a.add(&adag)?);
    let x2 = mode(1, &a.add(&adag)?);

    let h = mode(0, &num)
        .scale(c(omega1 / 2.0, 0.0))
        .add(&mode(1, &num).scale(c(omega2 / 2.0, 0.0)))?
        .sub(&x1.multiply(&tls(&word("Z")))?.scale(c(d, 0.0)))?
        .add(&x2.multiply(&tls(&word("X")))?.scale(c(cc, 0.0)))?
        .simplified();
    let kappa = d / (omega1 * core::f64::consts::SQRT_2);
    let l1 = mode(0, &a).sub(&tls(&word("Z")).scale(c(kappa, 0.0)))?.simplified();
    let l2 = mode(1, &a).simplified();
    let model = LindbladModel::new(h, alloc::vec![Jump { rate: 2.0 * h1, op: l1 }, Jump { rate: 2.0 * h2, op: l2 }])?;

    let mut circuits = Vec::new();
    for (k, (param, first)) in [("z1", "Z"), ("z2", "X")].iter().enumerate() {
        let mut circ = Circuit::new(n, k)?;
        circ.push_gate(tls(&word(first)), Sign::Plus, param)?;
        for w in number_words(nb) {
            let g = mode(0, &w).add(&mode(1, &w))?.simplified();
            circ.push_gate(g, Sign::Plus, param)?;
        }
        circuits.push(circ);
    }
    let ansatz = AnsatzState::new(circuits, alloc::vec![0.0, 0.0], ones(2))?;
    Ok(Scenario {
        name: "vibronic".into(),
        model,
        ansatz,
        observable: tls(&word("Z")),
        params: params(&[
            ("omega1", omega1),
            ("omega2", omega2),
            ("d", d),
            ("c", cc),
            ("h1", h1),
            ("h2", h2),
            ("d_trunc", d_trunc as f64),
        ]),
    })
}

/// Outcome of [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// Pauli terms in the simplified Hamiltonian.
    pub r: usize,
    /// Largest Pauli term count over the simplified jump operators.
    pub s: usize,
    /// Longest circuit.
    pub m: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the structural limits of a scenario. Never fails; problems are
/// listed in the report.
pub fn validate(scenario: &Scenario) -> ValidationReport {
    let mut v = Vec::new();
    let model = &scenario.model;
    let h = model.hamiltonian().simplified();
    if !h.is_hermitian(1e-12) {
        v.push("hamiltonian is not Hermitian".into());
    }
    let mut s = 0;
    for (j, jump) in model.jumps().iter().enumerate() {
        if !(jump.rate >= 0.0) || !jump.rate.is_finite() {
            v.push(alloc::format!("jump {j} has invalid rate {}", jump.rate));
        }
        s = s.max(jump.op.simplified().len());
    }
    let ansatz = &scenario.ansatz;
    if ansatz.n_qubits() != model.n_qubits() {
        v.push(alloc::format!(
            "ansatz has {} qubits but the model has {}",
            ansatz.n_qubits(),
            model.n_qubits()
        ));
    }
    let mut m = 0;
    for (k, circ) in ansatz.circuits().iter().enumerate() {
        m = m.max(circ.gates().len());
        if circ.gates().len() > CIRCUIT_LENGTH_CAP {
            v.push(alloc::format!("circuit {k} has {} gates (cap {CIRCUIT_LENGTH_CAP})", circ.gates().len()));
        }
        for (g, gate) in circ.gates().iter().enumerate() {
            if gate.generator().len() > GENERATOR_TERM_CAP {
                v.push(alloc::format!(
                    "circuit {k} gate {g} generator has {} terms (cap {GENERATOR_TERM_CAP})",
                    gate.generator().len()
                ));
            }
            if !gate.generator().is_hermitian(1e-12) {
                v.push(alloc::format!("circuit {k} gate {g} generator is not Hermitian"));
            }
        }
    }
    if scenario.observable.n_qubits() != model.n_qubits() {
        v.push("observable register does not match the model".into());
    } else if !scenario.observable.is_hermitian(1e-12) {
        v.push("observable is not Hermitian".into());
    }
    ValidationReport { violations: v, r: h.len(), s, m }
}

/// Dense `d × d` truncated creation operator.
pub fn dense_creation(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j + 1 { c(num_traits::Float::sqrt(i as f64), 0.0) } else { ZERO })
}
