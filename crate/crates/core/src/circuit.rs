//! Parametrized product-of-exponentials circuits on a dense statevector.
//!
//! A circuit with gates `[g_1, …, g_m]` prepares
//! `g_1 g_2 ⋯ g_m |init⟩`, where `g_α = exp(s_α · i · z_{p(α)} · G_α)` for a
//! Hermitian Pauli-sum generator `G_α`, a sign `s_α = ±1` and a parameter
//! slot `p(α)`. Slots may be shared by several gates.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dense::{CMatrix, I, ZERO};
use crate::error::{invalid, Error, Result};
use crate::pauli::{PauliSum, PauliWord, DENSE_QUBIT_CAP};

/// Exponent convention of a gate: `exp(+i z G)` or `exp(-i z G)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_i32(s: i32) -> Result<Sign> {
        match s {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(invalid(alloc::format!("gate sign must be +1 or -1, got {s}"))),
        }
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    /// Generator `c · P`, exponentiated as `cos(θc) + i sin(θc) P`.
    Word { coeff: f64, word: PauliWord },
    /// Generator restricted to its support qubits, diagonalized once.
    Dense {
        /// Basis-index bit positions of the support, most significant first.
        bits: Vec<u32>,
        eigvals: Vec<f64>,
        eigvecs: CMatrix,
    },
    /// Generator proportional to the identity.
    Phase { coeff: f64 },
}

#[derive(Clone, Debug)]
pub struct Gate {
    generator: PauliSum,
    sign: Sign,
    param: usize,
    kernel: Kernel,
}

impl Gate {
    pub fn new(generator: PauliSum, sign: Sign, param: usize) -> Result<Gate> {
        if !generator.is_hermitian(1e-12) {
            return Err(invalid("gate generator must be Hermitian"));
        }
        let g = generator.simplified();
        let n = g.n_qubits();
        let kernel = match g.terms() {
            [] => Kernel::Phase { coeff: 0.0 },
            [(c, w)] if w.is_identity() => Kernel::Phase { coeff: c.re },
            [(c, w)] => Kernel::Word { coeff: c.re, word: *w },
            terms => {
                let support = terms.iter().fold(0u64, |m, (_, w)| m | w.support_mask());
                if support == 0 {
                    Kernel::Phase { coeff: terms.iter().map(|(c, _)| c.re).sum() }
                } else {
                    // qubit q sits at bit n-1-q, so ascending qubits = descending bits
                    let bits: Vec<u32> = (0..n as u32).rev().filter(|b| support >> b & 1 == 1).collect();
                    let qubits: Vec<usize> = bits.iter().map(|b| n - 1 - *b as usize).collect();
                    let restricted = PauliSum::from_terms(
                        qubits.len(),
                        terms.iter().map(|(c, w)| {
                            let letters: Vec<_> = qubits.iter().map(|q| w.letter(*q)).collect();
                            (Complex64::new(c.re, 0.0), PauliWord::from_letters(&letters).expect("support fits"))
                        }),
                    )?;
                    let eig = restricted.to_dense()?.symmetric_eigen();
                    Kernel::Dense {
                        bits,
                        eigvals: eig.eigenvalues.iter().cloned().collect(),
                        eigvecs: eig.eigenvectors,
                    }
                }
            }
        };
        Ok(Gate { generator: g, sign, param, kernel })
    }

    pub fn generator(&self) -> &PauliSum {
        &self.generator
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn param(&self) -> usize {
        self.param
    }

    /// `v ← exp(sign · i · z · G) v`.
    fn apply(&self, z: f64, v: &mut [Complex64]) {
        let theta = self.sign.value() * z;
        match &self.kernel {
            Kernel::Phase { coeff } => {
                let ph = Complex64::from_polar(1.0, theta * coeff);
                v.iter_mut().for_each(|a| *a *= ph);
            }
            Kernel::Word { coeff, word } => {
                let (s, c) = num_traits::Float::sin_cos(theta * coeff);
                let old = v.to_vec();
                let is = Complex64::new(0.0, s);
                for a in v.iter_mut() {
                    *a *= c;
                }
                for (b, amp) in old.iter().enumerate() {
                    let (t, phase) = word.apply_to_basis(b);
                    v[t] += is * phase * amp;
                }
            }
            Kernel::Dense { bits, eigvals, eigvecs } => {
                let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    eigvals.len(),
                    eigvals.iter().map(|l| Complex64::from_polar(1.0, theta * l)),
                ));
                let u = eigvecs * phases * eigvecs.adjoint();
                apply_local(&u, bits, v);
            }
        }
    }
}

/// Apply a `2^k × 2^k` matrix to the qubits at basis-index bit positions
/// `bits` (most significant first).
fn apply_local(u: &CMatrix, bits: &[u32], v: &mut [Complex64]) {
    let k = bits.len();
    let local = 1usize << k;
    let mask: usize = bits.iter().fold(0, |m, b| m | 1 << b);
    let offsets: Vec<usize> = (0..local)
        .map(|r| {
            (0..k).fold(0usize, |acc, j| {
                if r >> (k - 1 - j) & 1 == 1 {
                    acc | 1 << bits[j]
                } else {
                    acc
                }
            })
        })
        .collect();
    let mut buf = alloc::vec![ZERO; local];
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        for (r, off) in offsets.iter().enumerate() {
            buf[r] = v[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            v[base | off] = (0..local).map(|c| u[(r, c)] * buf[c]).sum();
        }
    }
}

/// One weighted piece of a derivative state: `weight · |state⟩` with
/// `|state⟩` normalized.
#[derive(Clone, Debug)]
pub struct Component {
    pub weight: Complex64,
    pub state: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    init: usize,
    gates: Vec<Gate>,
    param_names: Vec<String>,
}

impl Circuit {
    /// Empty circuit starting from computational basis state `init`.
    pub fn new(n_qubits: usize, init: usize) -> Result<Circuit> {
        if n_qubits == 0 || n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::Resource { n_qubits, cap: DENSE_QUBIT_CAP });
        }
        if init >= 1 << n_qubits {
            return Err(Error::Index { index: init, len: 1 << n_qubits });
        }
        Ok(Circuit { n_qubits, init, gates: Vec::new(), param_names: Vec::new() })
    }

    /// Append a gate, applied before (to the right of) all existing gates.
    /// The parameter slot is created on first use of `param`.
    pub fn push_gate(&mut self, generator: PauliSum, sign: Sign, param: &str) -> Result<()> {
        if generator.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                what: "gate generator",
                expected: self.n_qubits,
                found: generator.n_qubits(),
            });
        }
        let slot = match self.param_names.iter().position(|p| p == param) {
            Some(s) => s,
            None => {
                self.param_names.push(param.to_string());
                self.param_names.len() - 1
            }
        };
        self.gates.push(Gate::new(generator, sign, slot)?);
        Ok(())
    }

    pub fn with_gate(mut self, generator: PauliSum, sign: Sign, param: &str) -> Result<Circuit> {
        self.push_gate(generator, sign, param)?;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn init(&self) -> usize {
        self.init
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    fn check_params(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n_params() {
            return Err(Error::Dimension { what: "circuit parameters", expected: self.n_params(), found: z.len() });
        }
        Ok(())
    }

    fn basis_state(&self) -> Vec<Complex64> {
        let mut v = alloc::vec![ZERO; self.dim()];
        v[self.init] = Complex64::new(1.0, 0.0);
        v
    }

    /// `|ψ(z)⟩ = g_1 ⋯ g_m |init⟩`.
    pub fn prepare(&self, z: &[f64]) -> Result<Vec<Complex64>> {
        self.check_params(z)?;
        let mut v = self.basis_state();
        for g in self.gates.iter().rev() {
            g.apply(z[g.param], &mut v);
        }
        Ok(v)
    }

    /// `∂|ψ⟩/∂z_slot` split into normalized pieces, one per (occurrence,
    /// generator term): `g_1⋯g_{α-1} · (s_α i c_t P_t) · g_α⋯g_m |init⟩`.
    pub fn derivative_components(&self, z: &[f64], slot: usize) -> Result<Vec<Component>> {
        self.check_params(z)?;
        if slot >= self.n_params() {
            return Err(Error::Index { index: slot, len: self.n_params() });
        }
        let m = self.gates.len();
        // suffix[α] = g_α ⋯ g_m |init⟩
        let mut suffix = Vec::with_capacity(m + 1);
        let mut v = self.basis_state();
        suffix.push(v.clone());
        for g in self.gates.iter().rev() {
            g.apply(z[g.param], &mut v);
            suffix.push(v.clone());
        }
        suffix.reverse();

        let mut out = Vec::new();
        for (alpha, gate) in self.gates.iter().enumerate() {
            if gate.param != slot {
                continue;
            }
            for (c, word) in gate.generator.terms() {
                let mut w = alloc::vec![ZERO; self.dim()];
                for (b, amp) in suffix[alpha].iter().enumerate() {
                    let (t, phase) = word.apply_to_basis(b);
                    w[t] += phase * amp;
                }
                for g in self.gates[..alpha].iter().rev() {
                    g.apply(z[g.param], &mut w);
                }
                out.push(Component { weight: I * gate.sign.value() * c, state: w });
            }
        }
        Ok(out)
    }

    /// `∂|ψ⟩/∂z_slot` (unnormalized), summed over every gate sharing the slot.
    pub fn derivative_state(&self, z: &[f64], slot: usize) -> Result<Vec<Complex64>> {
        let mut acc = alloc::vec![ZERO; self.dim()];
        for comp in self.derivative_components(z, slot)? {
            for (a, s) in acc.iter_mut().zip(&comp.state) {
                *a += comp.weight * s;
            }
        }
        Ok(acc)
    }
}

/// `O|v⟩` for a Pauli-sum operator.
pub fn apply_operator(v: &[Complex64], op: &PauliSum) -> Result<Vec<Complex64>> {
    op.apply(v)
}
