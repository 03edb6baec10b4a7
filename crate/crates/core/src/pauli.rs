//! Pauli words, their complex linear combinations, and dense realizations.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! computational-basis index, so the word `XZ` acts as `X ⊗ Z` and basis
//! index `0b10` is `|1⟩|0⟩`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::error::{Error, Result};

/// Coefficients at or below this magnitude are dropped by [`PauliSum::simplified`].
pub const DROP_TOL: f64 = 1e-12;

/// Largest register that may be realized as a dense matrix.
pub const DENSE_QUBIT_CAP: usize = 12;

/// Words are stored as 64-bit masks.
pub const MAX_QUBITS: usize = 64;

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// Tensor product of single-qubit Paulis in symplectic form.
///
/// Bit `n - 1 - q` of `x` / `z` holds the X / Z component on qubit `q`, which
/// lines the masks up with basis indices. The operator is
/// `i^{|x ∧ z|} X^x Z^z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> PauliWord {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliWord { n_qubits, x: 0, z: 0 }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<PauliWord> {
        let n = letters.len();
        if n > MAX_QUBITS {
            return Err(Error::Resource { n_qubits: n, cap: MAX_QUBITS });
        }
        let mut w = PauliWord::identity(n);
        for (q, p) in letters.iter().enumerate() {
            w.set(q, *p);
        }
        Ok(w)
    }

    /// Word acting as `p` on qubit `q` and as identity elsewhere.
    pub fn single(n_qubits: usize, q: usize, p: Pauli) -> PauliWord {
        assert!(q < n_qubits);
        let mut w = PauliWord::identity(n_qubits);
        w.set(q, p);
        w
    }

    fn bit(&self, q: usize) -> u64 {
        1u64 << (self.n_qubits - 1 - q)
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let b = self.bit(q);
        let (x, z) = p.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Pauli {
        let b = self.bit(q);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n_qubits).map(move |q| self.letter(q))
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Basis-index mask of the qubits the word acts on non-trivially.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    /// `P|b⟩ = phase · |target⟩`.
    #[inline]
    pub fn apply_to_basis(&self, b: usize) -> (usize, Complex64) {
        let y = (self.x & self.z).count_ones();
        let sign = ((b as u64) & self.z).count_ones();
        let k = (y + 2 * sign) % 4;
        ((b as u64 ^ self.x) as usize, I_POW[k as usize])
    }

    /// `self · other = phase · word`.
    pub fn mul(&self, other: &PauliWord) -> (Complex64, PauliWord) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let y1 = (self.x & self.z).count_ones();
        let y2 = (other.x & other.z).count_ones();
        let y3 = (x & z).count_ones();
        let swaps = (self.z & other.x).count_ones();
        let k = (y1 + y2 + 2 * swaps + 4 * MAX_QUBITS as u32 - y3) % 4;
        (I_POW[k as usize], PauliWord { n_qubits: self.n_qubits, x, z })
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &PauliWord) -> Result<PauliWord> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(Error::Resource { n_qubits: n, cap: MAX_QUBITS });
        }
        let shift = other.n_qubits as u32;
        let hi = |m: u64| if shift == 64 { 0 } else { m << shift };
        Ok(PauliWord {
            n_qubits: n,
            x: hi(self.x) | other.x,
            z: hi(self.z) | other.z,
        })
    }

    /// Place this word on qubits `offset..offset + self.n_qubits()` of an
    /// `n_total`-qubit register.
    pub fn embed(&self, offset: usize, n_total: usize) -> Result<PauliWord> {
        if offset + self.n_qubits > n_total {
            return Err(Error::Dimension {
                what: "pauli embedding",
                expected: n_total,
                found: offset + self.n_qubits,
            });
        }
        let left = PauliWord::identity(offset);
        let right = PauliWord::identity(n_total - offset - self.n_qubits);
        left.tensor(self)?.tensor(&right)
    }

    fn sort_key(&self) -> u128 {
        self.letters()
            .fold(0u128, |acc, p| acc * 4 + p as u128)
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.n_qubits
            .cmp(&other.n_qubits)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.letters() {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliWord> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: alloc::format!("unknown Pauli letter {c:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse { line: 0, msg: "empty Pauli word".to_string() });
        }
        PauliWord::from_letters(&letters)
    }
}

/// Complex linear combination of Pauli words on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(Complex64, PauliWord)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> PauliSum {
        PauliSum { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize) -> PauliSum {
        PauliSum::term(Complex64::new(1.0, 0.0), PauliWord::identity(n_qubits))
    }

    pub fn term(coeff: Complex64, word: PauliWord) -> PauliSum {
        PauliSum { n_qubits: word.n_qubits(), terms: alloc::vec![(coeff, word)] }
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliWord)>,
    ) -> Result<PauliSum> {
        let terms: Vec<_> = terms.into_iter().collect();
        for (_, w) in &terms {
            if w.n_qubits() != n_qubits {
                return Err(Error::Dimension {
                    what: "pauli word length",
                    expected: n_qubits,
                    found: w.n_qubits(),
                });
            }
        }
        Ok(PauliSum { n_qubits, terms })
    }

    /// Shorthand for `Σ coeff · word` with words given as letter strings.
    pub fn from_labels(terms: &[(Complex64, &str)]) -> Result<PauliSum> {
        let first = terms.first().ok_or_else(|| crate::error::invalid("no terms"))?;
        let n = first.1.len();
        PauliSum::from_terms(
            n,
            terms
                .iter()
                .map(|(c, s)| Ok((*c, s.parse::<PauliWord>()?)))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Complex64, PauliWord)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_same(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                what: "pauli sum qubit count",
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(PauliSum { n_qubits: self.n_qubits, terms }.simplified())
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(a, w)| (a * c, *w)).collect(),
        }
    }

    /// Operator product `self · other`, simplified.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                let (phase, w) = wa.mul(wb);
                terms.push((a * b * phase, w));
            }
        }
        Ok(PauliSum { n_qubits: self.n_qubits, terms }.simplified())
    }

    /// Adjoint. Pauli words are Hermitian, so only coefficients change.
    pub fn dagger(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(c, w)| (c.conj(), *w)).collect(),
        }
    }

    /// Merge like words and drop coefficients with `|c| <= tol`. Terms come
    /// out ordered by word.
    pub fn simplify(&self, tol: f64) -> PauliSum {
        let mut merged: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (c, w) in &self.terms {
            *merged.entry(*w).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        PauliSum {
            n_qubits: self.n_qubits,
            terms: merged
                .into_iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(w, c)| (c, w))
                .collect(),
        }
    }

    pub fn simplified(&self) -> PauliSum {
        self.simplify(DROP_TOL)
    }

    /// Hermitian iff every simplified coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0).terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                terms.push((a * b, wa.tensor(wb)?));
            }
        }
        Ok(PauliSum { n_qubits: self.n_qubits + other.n_qubits, terms }.simplified())
    }

    /// Place this operator on qubits `offset..` of an `n_total`-qubit register.
    pub fn embed(&self, offset: usize, n_total: usize) -> Result<PauliSum> {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| Ok((*c, w.embed(offset, n_total)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliSum { n_qubits: n_total, terms })
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::Resource { n_qubits: self.n_qubits, cap: DENSE_QUBIT_CAP });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (c, w) in &self.terms {
            for col in 0..dim {
                let (row, phase) = w.apply_to_basis(col);
                m[(row, col)] += c * phase;
            }
        }
        Ok(m)
    }

    /// `Σ coeff · P |v⟩` on a dense statevector.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if v.len() != dim {
            return Err(Error::Dimension { what: "statevector", expected: dim, found: v.len() });
        }
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); dim];
        for (c, w) in &self.terms {
            for (b, amp) in v.iter().enumerate() {
                let (t, phase) = w.apply_to_basis(b);
                out[t] += c * phase * amp;
            }
        }
        Ok(out)
    }

    /// Parse the line format `(<re>,<im>) <letters>`. Blank lines and lines
    /// starting with `#` are skipped. `n_qubits` is required only when the
    /// text may contain no terms.
    pub fn parse(text: &str, n_qubits: Option<usize>) -> Result<PauliSum> {
        let mut terms = Vec::new();
        let mut n = n_qubits;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let rest = line
                .strip_prefix('(')
                .ok_or_else(|| perr("expected '(' before the coefficient".into()))?;
            let close = rest.find(')').ok_or_else(|| perr("missing ')'".into()))?;
            let (re, im) = rest[..close]
                .split_once(',')
                .ok_or_else(|| perr("coefficient must be (re,im)".into()))?;
            let re: f64 = re.trim().parse().map_err(|_| perr(alloc::format!("bad number {re:?}")))?;
            let im: f64 = im.trim().parse().map_err(|_| perr(alloc::format!("bad number {im:?}")))?;
            let word: PauliWord = rest[close + 1..]
                .trim()
                .parse()
                .map_err(|e: Error| perr(e.to_string()))?;
            match n {
                None => n = Some(word.n_qubits()),
                Some(k) if k != word.n_qubits() => {
                    return Err(perr(alloc::format!(
                        "word {word} has {} qubits, expected {k}",
                        word.n_qubits()
                    )))
                }
                _ => {}
            }
            terms.push((Complex64::new(re, im), word));
        }
        let n = n.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "no terms and no qubit count given".into(),
        })?;
        Ok(PauliSum { n_qubits: n, terms })
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "({},{}) {}", c.re, c.im, w)?;
        }
        Ok(())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliSum> {
        PauliSum::parse(s, None)
    }
}
