//! Variational equations of motion for the outer-product ansatz
//! `ρ = Σ_jk B_jk |ψ_j⟩⟨ψ_k|` and their fixed-step integration.
//!
//! Per derivative evaluation the pipeline is: overlaps `S` and their
//! regularized inverse, the metric `C` and force `Y`, the parameter velocity
//! `ż`, then `τ`, the projected generator `L_kℓ = ⟨ψ_k|𝓛(ρ)|ψ_ℓ⟩` and finally
//!
//! `Ḃ = S⁺ L S⁺ − (S⁺ τ B + B τ† S⁺)`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::circuit::{Circuit, Component};
use crate::dense::{self, CMatrix, RegularizedSolve, I, ONE, ZERO};
use crate::error::{invalid, Error, Result};
use crate::estimator::{Estimator, EstimatorMode, Label};
use crate::model::{DenseModel, LindbladModel};
use crate::ode::{self, Integrator};
use crate::pauli::PauliSum;

/// Registers above this size skip the dense residual diagnostic.
pub const RESIDUAL_QUBIT_CAP: usize = 8;

/// Tolerance on `‖B − B†‖` accepted when building a state.
pub const HERMITIAN_TOL: f64 = 1e-10;

const T_S: u32 = 0;
const T_H: u32 = 1;
const T_D: u32 = 2;
const T_DD: u32 = 3;
const T_DH: u32 = 4;
const T_JUMP: u32 = 16;

fn t_jump(j: usize, kind: u32) -> u32 {
    T_JUMP + 4 * j as u32 + kind
}

#[derive(Clone, Debug)]
pub struct AnsatzState {
    circuits: Vec<Circuit>,
    z: Vec<f64>,
    b: CMatrix,
}

impl AnsatzState {
    /// `z` concatenates the parameter slots of every circuit in order.
    pub fn new(circuits: Vec<Circuit>, z: Vec<f64>, b: CMatrix) -> Result<AnsatzState> {
        let n = circuits.len();
        if n == 0 {
            return Err(invalid("ansatz needs at least one circuit"));
        }
        let q = circuits[0].n_qubits();
        for c in &circuits {
            if c.n_qubits() != q {
                return Err(Error::Dimension { what: "ansatz circuit qubits", expected: q, found: c.n_qubits() });
            }
        }
        let m: usize = circuits.iter().map(Circuit::n_params).sum();
        if z.len() != m {
            return Err(Error::Dimension { what: "ansatz parameters", expected: m, found: z.len() });
        }
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::Dimension { what: "coefficient matrix", expected: n, found: b.nrows().max(b.ncols()) });
        }
        if (&b - b.adjoint()).norm() > HERMITIAN_TOL {
            return Err(invalid("coefficient matrix B must be Hermitian"));
        }
        if z.iter().any(|x| !x.is_finite()) || b.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite { what: "ansatz state", time: 0.0 });
        }
        Ok(AnsatzState { circuits, z, b })
    }

    pub fn n_states(&self) -> usize {
        self.circuits.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.circuits[0].n_qubits()
    }

    pub fn n_params(&self) -> usize {
        self.z.len()
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    /// Offset of circuit `k`'s first slot inside `z`.
    pub fn offset(&self, k: usize) -> usize {
        self.circuits[..k].iter().map(Circuit::n_params).sum()
    }

    pub fn circuit_params(&self, k: usize) -> &[f64] {
        let o = self.offset(k);
        &self.z[o..o + self.circuits[k].n_params()]
    }

    /// `(circuit, local slot)` for every global parameter index.
    pub fn param_owners(&self) -> Vec<(usize, usize)> {
        self.circuits
            .iter()
            .enumerate()
            .flat_map(|(k, c)| (0..c.n_params()).map(move |a| (k, a)))
            .collect()
    }

    pub fn states(&self) -> Result<Vec<Vec<Complex64>>> {
        (0..self.n_states()).map(|k| self.circuits[k].prepare(self.circuit_params(k))).collect()
    }

    fn with(&self, z: Vec<f64>, b: CMatrix) -> AnsatzState {
        AnsatzState { circuits: self.circuits.clone(), z, b }
    }
}

/// `Σ_jk B_jk |ψ_j⟩⟨ψ_k|` as a dense matrix.
pub fn density_matrix(state: &AnsatzState) -> Result<CMatrix> {
    let psi = state_matrix(&state.states()?);
    Ok(&psi * &state.b * psi.adjoint())
}

fn state_matrix(states: &[Vec<Complex64>]) -> CMatrix {
    let d = states[0].len();
    CMatrix::from_fn(d, states.len(), |i, k| states[k][i])
}

/// `Tr(ρ)` and `Tr(ρO)` from the exact matrix elements `⟨ψ_k|O|ψ_j⟩`.
pub fn trace_and_product(state: &AnsatzState, op: &PauliSum) -> Result<(Complex64, Complex64)> {
    if op.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension { what: "observable", expected: state.n_qubits(), found: op.n_qubits() });
    }
    let states = state.states()?;
    let applied = states.iter().map(|s| op.apply(s)).collect::<Result<Vec<_>>>()?;
    let mut tr = ZERO;
    let mut tro = ZERO;
    for (j, sj) in states.iter().enumerate() {
        for (k, sk) in states.iter().enumerate() {
            let bjk = state.b[(j, k)];
            tr += bjk * dense::inner(sk, sj);
            tro += bjk * dense::inner(sk, &applied[j]);
        }
    }
    Ok((tr, tro))
}

/// `Re Tr(ρO) / Re Tr(ρ)`.
pub fn expectation(state: &AnsatzState, op: &PauliSum) -> Result<f64> {
    let (tr, tro) = trace_and_product(state, op)?;
    if tr.re.abs() < 1e-12 {
        return Err(Error::DegenerateState { trace: tr.re });
    }
    Ok(tro.re / tr.re)
}

/// Lindblad generator with the jump products precomputed once.
/// Width, in standard errors, of the shots-mode singular-value floor.
pub const NOISE_SIGMAS: f64 = 5.0;

/// Largest `Σ|coeff|` over all gate generators, the bound on a derivative
/// state's norm per parameter.
fn generator_weight(state: &AnsatzState) -> f64 {
    state
        .circuits
        .iter()
        .flat_map(|c| c.gates())
        .map(|g| g.generator().terms().iter().map(|(c, _)| c.norm()).sum::<f64>())
        .fold(1.0, f64::max)
}

#[derive(Clone, Debug)]
struct Terms {
    h: PauliSum,
    jumps: Vec<(f64, PauliSum, PauliSum)>,
}

impl Terms {
    fn new(model: &LindbladModel) -> Terms {
        let jumps = model
            .jumps()
            .iter()
            .zip(model.jump_products())
            .filter(|(j, _)| j.rate != 0.0)
            .map(|(j, ldl)| (j.rate, j.op.clone(), ldl))
            .collect();
        Terms { h: model.hamiltonian().clone(), jumps }
    }
}

fn check_model(state: &AnsatzState, model: &LindbladModel) -> Result<()> {
    if model.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension { what: "model qubits", expected: state.n_qubits(), found: model.n_qubits() });
    }
    Ok(())
}

/// Matrix of estimated elements `⟨row_i|op|col_j⟩`. With `hermitian` set the
/// upper triangle is estimated and mirrored and the diagonal is taken real.
fn table(
    est: &Estimator,
    eval: u64,
    id: u32,
    rows: &[Vec<Component>],
    op: Option<&PauliSum>,
    cols: &[Vec<Component>],
    hermitian: bool,
) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.iter().enumerate() {
        let start = if hermitian { i } else { 0 };
        for (j, c) in cols.iter().enumerate().skip(start) {
            let v = est.element(r, op, c, Label::new(eval, id, i, j))?;
            if hermitian {
                if i == j {
                    m[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            } else {
                m[(i, j)] = v;
            }
        }
    }
    Ok(m)
}

fn plain_components(states: &[Vec<Complex64>]) -> Vec<Vec<Component>> {
    states.iter().map(|s| alloc::vec![Component { weight: ONE, state: s.clone() }]).collect()
}

fn derivative_components(state: &AnsatzState) -> Result<Vec<Vec<Component>>> {
    state
        .param_owners()
        .into_iter()
        .map(|(k, a)| state.circuits[k].derivative_components(state.circuit_params(k), a))
        .collect()
}

/// Elements of one bra family against the ansatz kets: plain overlaps and
/// the `H`, `L_j`, `L_j†L_j` insertions.
struct BraTables {
    plain: CMatrix,
    h: CMatrix,
    l: Vec<CMatrix>,
    ll: Vec<CMatrix>,
}

/// `⟨bra|𝓛(ρ)|ψ_ℓ⟩` from bra tables and the ket-side tables of the ansatz.
fn project_generator(bra: &BraTables, ket: &BraTables, b: &CMatrix, rates: &[f64]) -> CMatrix {
    let s = &ket.plain;
    let bs = b * s;
    let mut out = (&bra.h * &bs - &bra.plain * b * &ket.h) * (-I);
    let half = Complex64::new(0.5, 0.0);
    for (j, &rate) in rates.iter().enumerate() {
        let term = &bra.l[j] * b * ket.l[j].adjoint()
            - (&bra.ll[j] * &bs + &bra.plain * b * &ket.ll[j]) * half;
        out += term * Complex64::new(rate, 0.0);
    }
    out
}

fn ket_tables(
    terms: &Terms,
    plain: &[Vec<Component>],
    est: &Estimator,
    eval: u64,
) -> Result<BraTables> {
    let mut l = Vec::new();
    let mut ll = Vec::new();
    for (j, (_, op, ldl)) in terms.jumps.iter().enumerate() {
        l.push(table(est, eval, t_jump(j, 0), plain, Some(op), plain, false)?);
        ll.push(table(est, eval, t_jump(j, 1), plain, Some(ldl), plain, true)?);
    }
    Ok(BraTables {
        plain: table(est, eval, T_S, plain, None, plain, true)?,
        h: table(est, eval, T_H, plain, Some(&terms.h), plain, true)?,
        l,
        ll,
    })
}

fn derivative_tables(
    terms: &Terms,
    derivs: &[Vec<Component>],
    plain: &[Vec<Component>],
    est: &Estimator,
    eval: u64,
) -> Result<BraTables> {
    let mut l = Vec::new();
    let mut ll = Vec::new();
    for (j, (_, op, ldl)) in terms.jumps.iter().enumerate() {
        l.push(table(est, eval, t_jump(j, 2), derivs, Some(op), plain, false)?);
        ll.push(table(est, eval, t_jump(j, 3), derivs, Some(ldl), plain, false)?);
    }
    Ok(BraTables {
        plain: table(est, eval, T_D, derivs, None, plain, false)?,
        h: table(est, eval, T_DH, derivs, Some(&terms.h), plain, false)?,
        l,
        ll,
    })
}

fn rates(terms: &Terms) -> Vec<f64> {
    terms.jumps.iter().map(|j| j.0).collect()
}

/// `S_jk = ⟨ψ_j|ψ_k⟩`.
pub fn assemble_s(state: &AnsatzState, est: &Estimator, eval: u64) -> Result<CMatrix> {
    let plain = plain_components(&state.states()?);
    table(est, eval, T_S, &plain, None, &plain, true)
}

/// `L_kℓ = ⟨ψ_k|𝓛(ρ)|ψ_ℓ⟩`.
pub fn assemble_l(state: &AnsatzState, model: &LindbladModel, est: &Estimator, eval: u64) -> Result<CMatrix> {
    check_model(state, model)?;
    let terms = Terms::new(model);
    let plain = plain_components(&state.states()?);
    let ket = ket_tables(&terms, &plain, est, eval)?;
    Ok(project_generator(&ket, &ket, &state.b, &rates(&terms)))
}

/// Metric and force of the parameter equation `C ż = Y`, indexed by global
/// parameter. `s_inv` is the regularized inverse of `S`.
pub fn assemble_c_y(
    state: &AnsatzState,
    model: &LindbladModel,
    s_inv: &CMatrix,
    est: &Estimator,
    eval: u64,
) -> Result<(CMatrix, Vec<Complex64>)> {
    check_model(state, model)?;
    let n = state.n_states();
    if s_inv.nrows() != n || s_inv.ncols() != n {
        return Err(Error::Dimension { what: "inverse overlap matrix", expected: n, found: s_inv.nrows() });
    }
    let terms = Terms::new(model);
    let plain = plain_components(&state.states()?);
    let derivs = derivative_components(state)?;
    let ket = ket_tables(&terms, &plain, est, eval)?;
    let bra = derivative_tables(&terms, &derivs, &plain, est, eval)?;
    let dd = table(est, eval, T_DD, &derivs, None, &derivs, true)?;
    let rates = rates(&terms);
    let lmat = project_generator(&ket, &ket, &state.b, &rates);
    Ok(metric_and_force(state, &ket, &bra, &dd, s_inv, &lmat, &rates))
}

fn metric_and_force(
    state: &AnsatzState,
    ket: &BraTables,
    bra: &BraTables,
    dd: &CMatrix,
    s_inv: &CMatrix,
    lmat: &CMatrix,
    rates: &[f64],
) -> (CMatrix, Vec<Complex64>) {
    let owners = state.param_owners();
    let m = owners.len();
    let b = &state.b;
    let bsb = b * &ket.plain * b;
    let dm = &bra.plain;
    let metric = dd - dm * s_inv * dm.adjoint();
    let c = CMatrix::from_fn(m, m, |i, j| metric[(i, j)] * bsb[(owners[j].0, owners[i].0)]);
    let x = project_generator(bra, ket, b, rates) - dm * s_inv * lmat;
    let y = (0..m)
        .map(|i| {
            let k = owners[i].0;
            (0..state.n_states()).map(|l| x[(i, l)] * b[(l, k)]).sum()
        })
        .collect();
    (c, y)
}

fn tau_from(dm: &CMatrix, owners: &[(usize, usize)], z_dot: &[f64], n: usize) -> CMatrix {
    let mut tau = CMatrix::zeros(n, n);
    for (i, &(l, _)) in owners.iter().enumerate() {
        if z_dot[i] == 0.0 {
            continue;
        }
        for k in 0..n {
            tau[(k, l)] += dm[(i, k)].conj() * z_dot[i];
        }
    }
    tau
}

/// `τ_kℓ = ⟨ψ_k|ψ̇_ℓ⟩ = Σ_β ż_ℓβ ⟨ψ_k|∂ψ_ℓ/∂z_ℓβ⟩`.
pub fn assemble_tau(state: &AnsatzState, z_dot: &[f64], est: &Estimator, eval: u64) -> Result<CMatrix> {
    if z_dot.len() != state.n_params() {
        return Err(Error::Dimension { what: "parameter velocity", expected: state.n_params(), found: z_dot.len() });
    }
    let n = state.n_states();
    if z_dot.iter().all(|&v| v == 0.0) {
        return Ok(CMatrix::zeros(n, n));
    }
    let plain = plain_components(&state.states()?);
    let derivs = derivative_components(state)?;
    let dm = table(est, eval, T_D, &derivs, None, &plain, false)?;
    Ok(tau_from(&dm, &state.param_owners(), z_dot, n))
}

/// `Ḃ = S⁺ L S⁺ − (S⁺ τ B + B τ† S⁺)`.
pub fn b_dot(s_inv: &CMatrix, lmat: &CMatrix, tau: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = b.nrows();
    for (what, m) in [("inverse overlap matrix", s_inv), ("projected generator", lmat), ("tau", tau), ("coefficient matrix", b)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension { what, expected: n, found: m.nrows() });
        }
    }
    Ok(s_inv * lmat * s_inv - (s_inv * tau * b + b * tau.adjoint() * s_inv))
}

/// How the real parameter velocity is extracted from `C ż = Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZdotSolve {
    /// Solve `Re(C) ż = Re(Y)`, the stationarity condition for real `ż`.
    #[default]
    RealProjected,
    /// Solve the complex system and keep the real part of the solution.
    ComplexThenReal,
}

impl core::str::FromStr for ZdotSolve {
    type Err = Error;

    fn from_str(s: &str) -> Result<ZdotSolve> {
        match s {
            "real-projected" => Ok(ZdotSolve::RealProjected),
            "complex-then-real" => Ok(ZdotSolve::ComplexThenReal),
            _ => Err(invalid(alloc::format!("unknown parameter solve {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TdvpConfig {
    pub dt: f64,
    pub integrator: Integrator,
    pub rel_cutoff: f64,
    pub zdot_solve: ZdotSolve,
    pub estimator: Estimator,
    /// Compute the dense residual `‖ρ̇ − 𝓛(ρ)‖_F` (exact estimator only).
    pub residual: bool,
}

impl Default for TdvpConfig {
    fn default() -> TdvpConfig {
        TdvpConfig {
            dt: 1e-3,
            integrator: Integrator::Rk4,
            rel_cutoff: 1e-8,
            zdot_solve: ZdotSolve::RealProjected,
            estimator: Estimator::exact(),
            residual: true,
        }
    }
}

/// Everything assembled in one derivative evaluation.
#[derive(Clone, Debug)]
pub struct EomMatrices {
    pub s: CMatrix,
    pub s_inv: CMatrix,
    pub lmat: CMatrix,
    pub c: CMatrix,
    pub y: Vec<Complex64>,
    pub z_dot: Vec<f64>,
    pub tau: CMatrix,
    pub b_dot: CMatrix,
    pub discarded_s: usize,
    pub discarded_c: usize,
    /// `‖Im(C⁺Y)‖`.
    pub im_zdot: f64,
    pub residual_warning: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub im_zdot: f64,
    /// `‖ρ̇ − 𝓛(ρ)‖_F`; `None` in shots mode or above [`RESIDUAL_QUBIT_CAP`].
    pub residual: Option<f64>,
    pub trace: f64,
    /// Smallest eigenvalue of `ρ / Tr ρ`; NaN above [`RESIDUAL_QUBIT_CAP`].
    pub min_eigenvalue: f64,
    pub discarded_s: usize,
    pub discarded_c: usize,
    pub residual_warning: bool,
}

pub struct TdvpSolver {
    terms: Terms,
    dense: Option<DenseModel>,
    n_qubits: usize,
    config: TdvpConfig,
}

impl TdvpSolver {
    pub fn new(model: &LindbladModel, config: TdvpConfig) -> Result<TdvpSolver> {
        if !(config.dt > 0.0) || !config.dt.is_finite() {
            return Err(invalid(alloc::format!("dt must be positive, got {}", config.dt)));
        }
        if !(config.rel_cutoff >= 0.0) || !config.rel_cutoff.is_finite() {
            return Err(invalid(alloc::format!("rel_cutoff must be nonnegative, got {}", config.rel_cutoff)));
        }
        let dense = if config.residual && model.n_qubits() <= RESIDUAL_QUBIT_CAP {
            Some(model.dense()?)
        } else {
            None
        };
        Ok(TdvpSolver { terms: Terms::new(model), dense, n_qubits: model.n_qubits(), config })
    }

    pub fn config(&self) -> &TdvpConfig {
        &self.config
    }

    /// Run the full assembly pipeline for `state`; `eval` keys the shot
    /// streams.
    pub fn evaluate(&self, state: &AnsatzState, eval: u64) -> Result<EomMatrices> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Dimension { what: "model qubits", expected: state.n_qubits(), found: self.n_qubits });
        }
        let est = &self.config.estimator;
        let cut = self.config.rel_cutoff;
        let n = state.n_states();
        let rates = rates(&self.terms);
        let plain = plain_components(&state.states()?);
        let derivs = derivative_components(state)?;

        let ket = ket_tables(&self.terms, &plain, est, eval)?;
        let (s_inv, discarded_s) =
            dense::pseudo_inverse_with_floor(&ket.plain, cut, self.noise_floor(n, 1.0))?;
        let lmat = project_generator(&ket, &ket, &state.b, &rates);

        let bra = derivative_tables(&self.terms, &derivs, &plain, est, eval)?;
        let dd = table(est, eval, T_DD, &derivs, None, &derivs, true)?;
        let (c, y) = metric_and_force(state, &ket, &bra, &dd, &s_inv, &lmat, &rates);

        let c_scale = { let g = generator_weight(state); g * g } * (&state.b * &ket.plain * &state.b).camax();
        let floor_c = self.noise_floor(y.len(), c_scale);
        let (z_dot, discarded_c, im_zdot, warn) = self.solve_zdot(&c, &y, floor_c)?;
        let tau = tau_from(&bra.plain, &state.param_owners(), &z_dot, n);
        let bd = b_dot(&s_inv, &lmat, &tau, &state.b)?;
        Ok(EomMatrices {
            s: ket.plain,
            s_inv,
            lmat,
            c,
            y,
            z_dot,
            tau,
            b_dot: bd,
            discarded_s,
            discarded_c,
            im_zdot,
            residual_warning: warn,
        })
    }

    /// Singular values a sampled `dim`×`dim` matrix with entries of size
    /// `scale` cannot resolve: `NOISE_SIGMAS · scale · √dim / √n_shots`.
    /// Zero in exact mode.
    fn noise_floor(&self, dim: usize, scale: f64) -> f64 {
        match self.config.estimator.mode() {
            EstimatorMode::Exact => 0.0,
            EstimatorMode::Shots { n_shots, .. } => {
                NOISE_SIGMAS * scale * num_traits::Float::sqrt(dim as f64 / n_shots as f64)
            }
        }
    }

    fn solve_zdot(&self, c: &CMatrix, y: &[Complex64], floor: f64) -> Result<(Vec<f64>, usize, f64, bool)> {
        let m = y.len();
        if m == 0 {
            return Ok((Vec::new(), 0, 0.0, false));
        }
        let cut = self.config.rel_cutoff;
        let rhs = CMatrix::from_column_slice(m, 1, y);
        let complex = dense::solve_regularized_with_floor(c, &rhs, cut, floor)?;
        let im = num_traits::Float::sqrt(complex.solution.iter().map(|v| v.im * v.im).sum::<f64>());
        let RegularizedSolve { solution, discarded, residual_warning } = match self.config.zdot_solve {
            ZdotSolve::ComplexThenReal => complex,
            ZdotSolve::RealProjected => {
                let a = c.map(|v| Complex64::new(v.re, 0.0));
                let r = rhs.map(|v| Complex64::new(v.re, 0.0));
                dense::solve_regularized_with_floor(&a, &r, cut, floor)?
            }
        };
        Ok((solution.iter().map(|v| v.re).collect(), discarded, im, residual_warning))
    }

    fn diagnostics(&self, state: &AnsatzState, eom: &EomMatrices, t: f64) -> Result<StepDiagnostics> {
        let trace = (&state.b * &eom.s).trace().re;
        let small = state.n_qubits() <= RESIDUAL_QUBIT_CAP;
        let mut residual = None;
        let mut min_eigenvalue = f64::NAN;
        if small {
            let states = state.states()?;
            let psi = state_matrix(&states);
            let rho = &psi * &state.b * psi.adjoint();
            if trace.abs() >= 1e-12 {
                min_eigenvalue = dense::hermitian_min_eigenvalue(&(&rho / Complex64::new(trace, 0.0)));
            }
            if let (Some(dm), true) = (&self.dense, self.config.estimator.is_exact()) {
                let mut psi_dot = CMatrix::zeros(psi.nrows(), psi.ncols());
                for (i, &(k, a)) in state.param_owners().iter().enumerate() {
                    if eom.z_dot[i] == 0.0 {
                        continue;
                    }
                    let d = state.circuits[k].derivative_state(state.circuit_params(k), a)?;
                    for (r, v) in d.iter().enumerate() {
                        psi_dot[(r, k)] += v * eom.z_dot[i];
                    }
                }
                let b = &state.b;
                let rho_dot = &psi * &eom.b_dot * psi.adjoint()
                    + &psi_dot * b * psi.adjoint()
                    + &psi * b * psi_dot.adjoint();
                residual = Some((rho_dot - dm.apply(&rho)).norm());
            }
        }
        Ok(StepDiagnostics {
            t,
            im_zdot: eom.im_zdot,
            residual,
            trace,
            min_eigenvalue,
            discarded_s: eom.discarded_s,
            discarded_c: eom.discarded_c,
            residual_warning: eom.residual_warning,
        })
    }

    /// Diagnostics of `state` taken as the start of step `step_index`.
    pub fn diagnose(&self, state: &AnsatzState, step_index: u64) -> Result<StepDiagnostics> {
        let eom = self.evaluate(state, 4 * step_index)?;
        self.diagnostics(state, &eom, step_index as f64 * self.config.dt)
    }

    /// Advance `state` by one step. Returns the new state and the
    /// diagnostics of the starting point.
    pub fn step(&self, state: &AnsatzState, step_index: u64) -> Result<(AnsatzState, StepDiagnostics)> {
        let n = state.n_states();
        let t = step_index as f64 * self.config.dt;
        let mut first: Option<EomMatrices> = None;
        let y0 = pack(&state.b, &state.z);
        let y1 = ode::step(self.config.integrator, &y0, self.config.dt, |stage, y| {
            let (b, z) = unpack(y, n);
            let trial = state.with(z, b);
            let eom = self.evaluate(&trial, 4 * step_index + stage as u64)?;
            let out = pack(&eom.b_dot, &eom.z_dot);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "equations of motion", time: t });
            }
            if stage == 0 {
                first = Some(eom);
            }
            Ok(out)
        })?;
        let (b, z) = unpack(&y1, n);
        let b = dense::hermitian_part(&b);
        if z.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { what: "ansatz state", time: t + self.config.dt });
        }
        let eom = first.expect("every integrator evaluates stage 0");
        let diag = self.diagnostics(state, &eom, t)?;
        Ok((state.with(z, b), diag))
    }
}

fn pack(b: &CMatrix, z: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * b.len() + z.len());
    y.extend(b.iter().map(|v| v.re));
    y.extend(b.iter().map(|v| v.im));
    y.extend_from_slice(z);
    y
}

fn unpack(y: &[f64], n: usize) -> (CMatrix, Vec<f64>) {
    let nn = n * n;
    let b = CMatrix::from_fn(n, n, |i, j| Complex64::new(y[i + n * j], y[nn + i + n * j]));
    (b, y[2 * nn..].to_vec())
}

/// One step of the coupled system with a throwaway solver.
pub fn step(state: &AnsatzState, model: &LindbladModel, config: &TdvpConfig, step_index: u64) -> Result<AnsatzState> {
    let mut config = config.clone();
    config.residual = false;
    Ok(TdvpSolver::new(model, config)?.step(state, step_index)?.0)
}
