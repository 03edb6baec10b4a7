//! Dense reference integration of the Lindblad master equation.
//!
//! Vectorization stacks columns: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, so the
//! superoperator is
//!
//! `𝓛̂ = −i(I ⊗ H − Hᵀ ⊗ I) + Σ_j γ_j [L̄_j ⊗ L_j − ½(I ⊗ L_j†L_j + (L_j†L_j)ᵀ ⊗ I)]`.

use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::dense::{self, CMatrix, I};
use crate::error::{invalid, Error, Result};
use crate::model::LindbladModel;
use crate::ode::{self, Integrator};
use crate::pauli::PauliSum;

/// Largest register for which the superoperator is built (1024 × 1024).
pub const LIOUVILLIAN_QUBIT_CAP: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<DensityMatrix> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension { what: "density matrix", expected: m.nrows(), found: m.ncols() });
        }
        Ok(DensityMatrix(m))
    }

    pub fn pure(psi: &[Complex64]) -> DensityMatrix {
        DensityMatrix(dense::outer(psi, psi))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn normalized(&self) -> Result<DensityMatrix> {
        let tr = self.trace().re;
        if tr.abs() < 1e-12 {
            return Err(Error::DegenerateState { trace: tr });
        }
        Ok(DensityMatrix(&self.0 / Complex64::new(tr, 0.0)))
    }

    pub fn symmetrize(&mut self) {
        self.0 = dense::hermitian_part(&self.0);
    }

    /// `‖ρ − ρ†‖_F`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        dense::hermitian_min_eigenvalue(&self.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }
}

/// Dense superoperator of `model` in the column-stacking convention.
pub fn liouvillian_matrix(model: &LindbladModel) -> Result<CMatrix> {
    if model.n_qubits() > LIOUVILLIAN_QUBIT_CAP {
        return Err(Error::Resource { n_qubits: model.n_qubits(), cap: LIOUVILLIAN_QUBIT_CAP });
    }
    let dm = model.dense()?;
    let d = dm.dim();
    let id = CMatrix::identity(d, d);
    let mut sup = (id.kronecker(&dm.h) - dm.h.transpose().kronecker(&id)) * (-I);
    let half = Complex64::new(0.5, 0.0);
    for j in &dm.jumps {
        let term = j.l.map(|x| x.conj()).kronecker(&j.l)
            - (id.kronecker(&j.ldl) + j.ldl.transpose().kronecker(&id)) * half;
        sup += term * Complex64::new(j.rate, 0.0);
    }
    Ok(sup)
}

/// RK4 integration of `vec(ρ)`; returns `(t, ρ(t))` at `t = 0` and after
/// every `sample_every` steps. Each sample is Hermitian-symmetrized.
pub fn propagate(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if !(t_final > 0.0) || !(dt > 0.0) || sample_every == 0 {
        return Err(invalid("propagate needs t_final > 0, dt > 0 and sample_every >= 1"));
    }
    let d = rho0.dim();
    if d != 1 << model.n_qubits() {
        return Err(Error::Dimension { what: "initial density matrix", expected: 1 << model.n_qubits(), found: d });
    }
    let sup = liouvillian_matrix(model)?;
    let n_steps = num_traits::Float::floor(t_final / dt + 1e-9) as usize;
    let mut v = dense::vectorize(rho0.matrix());
    let mut out = Vec::with_capacity(n_steps / sample_every + 1);
    let mut sample = |t: f64, v: &[Complex64]| {
        let mut rho = DensityMatrix(dense::unvectorize(v, d));
        rho.symmetrize();
        out.push((t, rho));
    };
    sample(0.0, &v);
    for k in 1..=n_steps {
        v = ode::step(Integrator::Rk4, &v, dt, |_, y| {
            let y = DVector::from_column_slice(y);
            Ok((&sup * y).as_slice().to_vec())
        })?;
        let t = k as f64 * dt;
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite { what: "oracle density matrix", time: t });
        }
        if k % sample_every == 0 {
            sample(t, &v);
        }
    }
    Ok(out)
}

/// `(Re Tr(ρO), Im Tr(ρO))`; the imaginary part is a diagnostic.
pub fn oracle_expectation(rho: &DensityMatrix, op: &PauliSum) -> Result<(f64, f64)> {
    if rho.dim() != 1 << op.n_qubits() {
        return Err(Error::Dimension { what: "observable", expected: rho.dim(), found: 1 << op.n_qubits() });
    }
    let v = (rho.matrix() * op.to_dense()?).trace();
    Ok((v.re, v.im))
}

/// `Tr(ρ)`-normalized variant of [`oracle_expectation`].
pub fn normalized_expectation(rho: &DensityMatrix, op: &PauliSum) -> Result<f64> {
    let tr = rho.trace().re;
    if tr.abs() < 1e-12 {
        return Err(Error::DegenerateState { trace: tr });
    }
    Ok(oracle_expectation(rho, op)?.0 / tr)
}
