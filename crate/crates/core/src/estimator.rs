//! Overlaps and matrix elements between circuit states, evaluated exactly or
//! with emulated interference-circuit shot noise.
//!
//! In shot mode every unit-bounded quantity `v = ⟨φ|P|χ⟩` (states normalized,
//! `P` a Pauli word) is measured separately for its real and imaginary part.
//! Each part is a Hadamard-test outcome: `n_shots` draws of a ±1 variable
//! with `Pr(+1) = (1 + v)/2`, reported as `2·mean − 1`. The draw count is
//! sampled directly from the binomial distribution. A weighted sum of `M`
//! such quantities spends `n_shots` on each of them.
//!
//! Randomness is keyed: the stream for a quantity depends only on the seed,
//! the caller's [`Label`] and the position of the quantity inside the
//! element, so results do not depend on evaluation order.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{Circuit, Component};
use crate::dense::{inner, ZERO};
use crate::error::{invalid, Error, Result};
use crate::pauli::PauliSum;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    Exact,
    Shots { n_shots: u64, seed: u64 },
}

/// Identifies one estimated matrix element: evaluation counter, table id
/// and matrix indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Label {
    pub eval: u64,
    pub table: u32,
    pub row: u32,
    pub col: u32,
}

impl Label {
    pub fn new(eval: u64, table: u32, row: usize, col: usize) -> Label {
        Label { eval, table, row: row as u32, col: col as u32 }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn mix(h: u64, v: u64) -> u64 {
    splitmix64(h ^ splitmix64(v))
}

#[derive(Clone, Debug)]
pub struct Estimator {
    mode: EstimatorMode,
}

impl Estimator {
    pub fn new(mode: EstimatorMode) -> Result<Estimator> {
        if let EstimatorMode::Shots { n_shots: 0, .. } = mode {
            return Err(invalid("n_shots must be at least 1"));
        }
        Ok(Estimator { mode })
    }

    pub fn exact() -> Estimator {
        Estimator { mode: EstimatorMode::Exact }
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        self.mode == EstimatorMode::Exact
    }

    fn stream_key(seed: u64, label: Label, unit: u64, part: u64) -> u64 {
        let mut h = mix(seed, label.eval);
        h = mix(h, label.table as u64);
        h = mix(h, label.row as u64);
        h = mix(h, label.col as u64);
        h = mix(h, unit);
        mix(h, part)
    }

    fn hadamard_test(n_shots: u64, value: f64, key: u64) -> f64 {
        let p = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let hits = Binomial::new(n_shots, p).expect("p is clamped to [0, 1]").sample(&mut rng);
        2.0 * hits as f64 / n_shots as f64 - 1.0
    }

    /// Estimate a single unit-bounded quantity. `unit` distinguishes the
    /// quantities that make up one labelled element.
    pub fn sample(&self, value: Complex64, label: Label, unit: u64) -> Complex64 {
        match self.mode {
            EstimatorMode::Exact => value,
            EstimatorMode::Shots { n_shots, seed } => Complex64::new(
                Self::hadamard_test(n_shots, value.re, Self::stream_key(seed, label, unit, 0)),
                Self::hadamard_test(n_shots, value.im, Self::stream_key(seed, label, unit, 1)),
            ),
        }
    }

    /// `⟨bra| O |ket⟩` with `O = op` (identity when `None`) and both sides
    /// given as weighted sums of normalized states.
    pub fn element(
        &self,
        bra: &[Component],
        op: Option<&PauliSum>,
        ket: &[Component],
        label: Label,
    ) -> Result<Complex64> {
        let dim = bra
            .iter()
            .chain(ket)
            .map(|c| c.state.len())
            .next()
            .unwrap_or(0);
        for c in bra.iter().chain(ket) {
            if c.state.len() != dim {
                return Err(Error::Dimension { what: "estimator states", expected: dim, found: c.state.len() });
            }
        }
        if let Some(op) = op {
            if 1usize << op.n_qubits() != dim && dim != 0 {
                return Err(Error::Dimension { what: "estimator operator", expected: dim, found: 1 << op.n_qubits() });
            }
        }
        if self.is_exact() {
            let mut b = alloc::vec![ZERO; dim];
            for c in bra {
                b.iter_mut().zip(&c.state).for_each(|(x, s)| *x += c.weight * s);
            }
            let mut k = alloc::vec![ZERO; dim];
            for c in ket {
                k.iter_mut().zip(&c.state).for_each(|(x, s)| *x += c.weight * s);
            }
            let k = match op {
                Some(op) => op.apply(&k)?,
                None => k,
            };
            return Ok(inner(&b, &k));
        }

        let mut unit = 0u64;
        let mut total = ZERO;
        for bc in bra {
            for kc in ket {
                let w = bc.weight.conj() * kc.weight;
                match op {
                    None => {
                        let v = inner(&bc.state, &kc.state);
                        total += w * self.sample(v, label, unit);
                        unit += 1;
                    }
                    Some(op) => {
                        for (coeff, word) in op.terms() {
                            let mut pk = alloc::vec![ZERO; dim];
                            for (b, amp) in kc.state.iter().enumerate() {
                                let (t, phase) = word.apply_to_basis(b);
                                pk[t] += phase * amp;
                            }
                            let v = inner(&bc.state, &pk);
                            total += w * coeff * self.sample(v, label, unit);
                            unit += 1;
                        }
                    }
                }
            }
        }
        Ok(total)
    }
}

fn plain(state: Vec<Complex64>) -> Vec<Component> {
    alloc::vec![Component { weight: Complex64::new(1.0, 0.0), state }]
}

fn check_pair(a: &Circuit, b: &Circuit) -> Result<()> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Dimension { what: "circuit qubit count", expected: a.n_qubits(), found: b.n_qubits() });
    }
    Ok(())
}

/// `⟨ψ_a(z_a)|ψ_b(z_b)⟩`.
pub fn overlap(
    a: &Circuit,
    za: &[f64],
    b: &Circuit,
    zb: &[f64],
    est: &Estimator,
    label: Label,
) -> Result<Complex64> {
    check_pair(a, b)?;
    est.element(&plain(a.prepare(za)?), None, &plain(b.prepare(zb)?), label)
}

/// `⟨ψ_a|O|ψ_b⟩`, one estimate per Pauli term of `O`.
pub fn matrix_element(
    a: &Circuit,
    za: &[f64],
    op: &PauliSum,
    b: &Circuit,
    zb: &[f64],
    est: &Estimator,
    label: Label,
) -> Result<Complex64> {
    check_pair(a, b)?;
    est.element(&plain(a.prepare(za)?), Some(op), &plain(b.prepare(zb)?), label)
}

/// `⟨∂ψ_a/∂z_slot|O|ψ_b⟩` (`O` = identity when `None`), assembled from one
/// plain overlap per gate occurrence and generator term.
#[allow(clippy::too_many_arguments)]
pub fn derivative_element(
    a: &Circuit,
    za: &[f64],
    slot: usize,
    op: Option<&PauliSum>,
    b: &Circuit,
    zb: &[f64],
    est: &Estimator,
    label: Label,
) -> Result<Complex64> {
    check_pair(a, b)?;
    est.element(&a.derivative_components(za, slot)?, op, &plain(b.prepare(zb)?), label)
}
