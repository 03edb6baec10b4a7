//! Lindblad generators `𝓛(ρ) = -i[H, ρ] + Σ_j γ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dense::{CMatrix, I};
use crate::error::{invalid, Error, Result};
use crate::pauli::PauliSum;

#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub rate: f64,
    pub op: PauliSum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    n_qubits: usize,
    hamiltonian: PauliSum,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    /// Rates must be finite and nonnegative and every operator must live on
    /// the Hamiltonian's register. Hermiticity of `H` is reported by
    /// [`crate::models::validate`] rather than enforced here.
    pub fn new(hamiltonian: PauliSum, jumps: Vec<Jump>) -> Result<LindbladModel> {
        let n = hamiltonian.n_qubits();
        for j in &jumps {
            if j.op.n_qubits() != n {
                return Err(Error::Dimension { what: "jump operator", expected: n, found: j.op.n_qubits() });
            }
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(invalid(alloc::format!("jump rate must be finite and nonnegative, got {}", j.rate)));
            }
        }
        Ok(LindbladModel { n_qubits: n, hamiltonian, jumps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// `L_j† L_j` for every jump, simplified.
    pub fn jump_products(&self) -> Vec<PauliSum> {
        self.jumps
            .iter()
            .map(|j| j.op.dagger().multiply(&j.op).expect("same register"))
            .collect()
    }

    pub fn dense(&self) -> Result<DenseModel> {
        let h = self.hamiltonian.to_dense()?;
        let jumps = self
            .jumps
            .iter()
            .map(|j| {
                let l = j.op.to_dense()?;
                let ldl = l.adjoint() * &l;
                Ok(DenseJump { rate: j.rate, l, ldl })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseModel { h, jumps })
    }
}

#[derive(Clone, Debug)]
pub struct DenseJump {
    pub rate: f64,
    pub l: CMatrix,
    pub ldl: CMatrix,
}

/// Dense matrices of a [`LindbladModel`].
#[derive(Clone, Debug)]
pub struct DenseModel {
    pub h: CMatrix,
    pub jumps: Vec<DenseJump>,
}

impl DenseModel {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `𝓛(ρ)` evaluated term by term.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = (&self.h * rho - rho * &self.h) * (-I);
        let half = Complex64::new(0.5, 0.0);
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            let d = &j.l * rho * j.l.adjoint() - (&j.ldl * rho + rho * &j.ldl) * half;
            out += d * Complex64::new(j.rate, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{ONE, ZERO};

    fn op(label: &str) -> PauliSum {
        PauliSum::from_labels(&[(ONE, label)]).unwrap()
    }

    #[test]
    fn rejects_bad_rates_and_registers() {
        let bad = LindbladModel::new(op("Z"), alloc::vec![Jump { rate: -1.0, op: op("Z") }]);
        assert!(bad.is_err());
        let nan = LindbladModel::new(op("Z"), alloc::vec![Jump { rate: f64::NAN, op: op("Z") }]);
        assert!(nan.is_err());
        let mismatch = LindbladModel::new(op("Z"), alloc::vec![Jump { rate: 1.0, op: op("ZZ") }]);
        assert!(matches!(mismatch, Err(Error::Dimension { .. })));
    }

    #[test]
    fn dephasing_kills_coherence_at_twice_the_rate() {
        let m = LindbladModel::new(PauliSum::zero(1), alloc::vec![Jump { rate: 0.7, op: op("Z") }]).unwrap();
        let rho = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let out = m.dense().unwrap().apply(&rho);
        assert!((out - rho * Complex64::new(-1.4, 0.0)).norm() < 1e-15);
    }
}
