#![allow(dead_code)]

use opendyn_core::{CMatrix, Circuit, Complex64, Jump, LindbladModel, PauliSum, Sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_word(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect()
}

pub fn random_sum(rng: &mut ChaCha8Rng, n: usize, terms: usize, hermitian: bool) -> PauliSum {
    let labels: Vec<(Complex64, String)> = (0..terms)
        .map(|_| {
            let re = rng.random_range(-1.0..1.0);
            let im = if hermitian { 0.0 } else { rng.random_range(-1.0..1.0) };
            (c(re, im), random_word(rng, n))
        })
        .collect();
    let refs: Vec<(Complex64, &str)> = labels.iter().map(|(a, b)| (*a, b.as_str())).collect();
    PauliSum::from_labels(&refs).unwrap()
}

/// Random circuit with 1..=max_gates gates over `n_params` shared slots.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, max_gates: usize, n_params: usize) -> Circuit {
    let mut circ = Circuit::new(n, rng.random_range(0..1 << n)).unwrap();
    let gates = rng.random_range(1..=max_gates);
    for g in 0..gates {
        let terms = rng.random_range(1..=2);
        let mut generator = random_sum(rng, n, terms, true).simplified();
        if generator.is_empty() {
            generator = PauliSum::identity(n);
        }
        let sign = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let slot = if g < n_params { g } else { rng.random_range(0..n_params) };
        circ.push_gate(generator, sign, &format!("p{slot}")).unwrap();
    }
    circ
}

pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LindbladModel {
    let h = random_sum(rng, n, 3, true);
    let jumps = (0..2)
        .map(|_| Jump { rate: rng.random_range(0.1..2.0), op: random_sum(rng, n, 2, false) })
        .collect();
    LindbladModel::new(h, jumps).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `g_1 ⋯ g_m |init⟩` by dense matrix exponentials, with `∂/∂z_slot`
/// obtained by inserting `i s G` next to every gate that uses the slot.
pub fn brute_state(circ: &Circuit, z: &[f64], slot: Option<usize>) -> Vec<Complex64> {
    let dim = circ.dim();
    let mut init = CMatrix::zeros(dim, 1);
    init[(circ.init(), 0)] = c(1.0, 0.0);
    let unitary = |g: &opendyn_core::Gate| {
        let gen = g.generator().to_dense().unwrap();
        (gen * c(0.0, g.sign().value() * z[g.param()])).exp()
    };
    let mut total = CMatrix::zeros(dim, 1);
    let occurrences: Vec<Option<usize>> = match slot {
        None => vec![None],
        Some(s) => circ.gates().iter().enumerate().filter(|(_, g)| g.param() == s).map(|(a, _)| Some(a)).collect(),
    };
    for occ in occurrences {
        let mut v = init.clone();
        for (a, g) in circ.gates().iter().enumerate().rev() {
            v = unitary(g) * v;
            if occ == Some(a) {
                v = g.generator().to_dense().unwrap() * v * c(0.0, g.sign().value());
            }
        }
        total += v;
    }
    total.column(0).iter().cloned().collect()
}
