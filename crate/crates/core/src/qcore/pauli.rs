//! Pauli strings, weighted Pauli sums, and the dense <-> Pauli conversions.
//!
//! A string's letter at position `q` acts on qubit `q` (bit `q` of the basis
//! index). Every Pauli string is a signed permutation:
//! `P|k> = i^{n_Y} (-1)^{popcount(k & z)} |k ^ x>` where `x` marks the X/Y
//! letters and `z` marks the Y/Z letters. Both conversions below work on that
//! form directly instead of building Kronecker products.
//!
//! Text form, one term per line:
//!
//! ```text
//! 0.5 X0
//! 0.5j Y0
//! -1.0 Z0 Z1
//! 0.25+0.1j I
//! ```
//!
//! `;` is accepted as an additional term separator so a sum fits in a single
//! command-line argument.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

use super::operator::{qubits_for_dim, Operator};
use crate::error::{Error, Result};

pub const DEFAULT_DROP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn signs(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// 2x2 matrix of a single Pauli.
pub fn pauli_matrix(p: Pauli) -> Operator {
    PauliString::new(vec![p]).to_operator()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::new(vec![Pauli::I; num_qubits])
    }

    /// String with the listed `(qubit, letter)` factors and identity elsewhere.
    pub fn from_factors(num_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; num_qubits];
        for &(q, p) in factors {
            if q >= num_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {num_qubits} qubits"
                )));
            }
            letters[q] = p;
        }
        Ok(Self::new(letters))
    }

    /// The `index`-th string in base-4 order: qubit `q` takes digit `q`
    /// with `0,1,2,3 -> I,X,Y,Z`.
    pub fn from_index(num_qubits: usize, index: usize) -> Self {
        Self::new(
            (0..num_qubits)
                .map(|q| Pauli::ALL[(index >> (2 * q)) & 3])
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for (q, &p) in self.letters.iter().enumerate() {
            if p.flips() {
                x |= 1 << q;
            }
            if p.signs() {
                z |= 1 << q;
            }
            if p == Pauli::Y {
                ny += 1;
            }
        }
        (x, z, ny)
    }

    pub fn to_operator(&self) -> Operator {
        let dim = 1usize << self.num_qubits();
        let mut op = Operator::zeros(dim);
        let (x, z, ny) = self.masks();
        let base = i_pow(ny);
        for k in 0..dim {
            op.set(k ^ x, k, signed(base, k & z));
        }
        op
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (q, &p) in self.letters.iter().enumerate() {
            if p == Pauli::I {
                continue;
            }
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.symbol(), q)?;
            first = false;
        }
        if first {
            f.write_str("I")?;
        }
        Ok(())
    }
}

fn i_pow(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn signed(z: C64, bits: usize) -> C64 {
    if bits.count_ones() % 2 == 1 {
        -z
    } else {
        z
    }
}

/// `Σ_k c_k P_k` with distinct strings and no negligible coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPauliSum {
    num_qubits: usize,
    terms: Vec<(C64, PauliString)>,
}

impl WeightedPauliSum {
    /// Merges repeated strings and drops terms below [`DEFAULT_DROP_TOL`].
    pub fn new(num_qubits: usize, terms: Vec<(C64, PauliString)>) -> Result<Self> {
        Self::with_drop_tolerance(num_qubits, terms, DEFAULT_DROP_TOL)
    }

    pub fn with_drop_tolerance(
        num_qubits: usize,
        terms: Vec<(C64, PauliString)>,
        drop_tol: f64,
    ) -> Result<Self> {
        let mut order: Vec<PauliString> = Vec::new();
        let mut merged: BTreeMap<PauliString, C64> = BTreeMap::new();
        for (c, s) in terms {
            if s.num_qubits() != num_qubits {
                return Err(Error::DimensionMismatch {
                    expected: num_qubits,
                    found: s.num_qubits(),
                });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let slot = merged.entry(s.clone()).or_insert_with(|| {
                order.push(s);
                C64::new(0.0, 0.0)
            });
            *slot += c;
        }
        let terms = order
            .into_iter()
            .filter_map(|s| {
                let c = merged[&s];
                (c.norm() >= drop_tol).then_some((c, s))
            })
            .collect();
        Ok(Self { num_qubits, terms })
    }

    /// Single term `1 · I...I`.
    pub fn identity(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: vec![(C64::new(1.0, 0.0), PauliString::identity(num_qubits))],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest imaginary part among the coefficients; zero for a Hermitian sum.
    pub fn max_imag(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: C64) -> Result<Self> {
        Self::new(
            self.num_qubits,
            self.terms.iter().map(|(c, s)| (c * factor, s.clone())).collect(),
        )
    }

    /// Parses the line-oriented text form (see module docs).
    pub fn parse(text: &str, num_qubits: usize) -> Result<Self> {
        let mut terms = Vec::new();
        let mut seen_any = false;
        for (line_no, line) in term_lines(text) {
            let mut tokens = line.split_whitespace();
            let Some(coeff_tok) = tokens.next() else {
                continue;
            };
            seen_any = true;
            let coeff = parse_coefficient(coeff_tok).ok_or_else(|| Error::Parse {
                line: line_no,
                token: coeff_tok.to_string(),
                message: "malformed coefficient".into(),
            })?;
            let mut letters = vec![Pauli::I; num_qubits];
            let mut used = vec![false; num_qubits];
            let mut factors = 0;
            let mut bare_identity = false;
            for tok in tokens {
                let err = |message: &str| Error::Parse {
                    line: line_no,
                    token: tok.to_string(),
                    message: message.into(),
                };
                if tok == "I" {
                    bare_identity = true;
                    continue;
                }
                let mut chars = tok.chars();
                let letter = chars
                    .next()
                    .and_then(Pauli::from_symbol)
                    .ok_or_else(|| err("expected a Pauli factor like X0"))?;
                let q: usize = chars
                    .as_str()
                    .parse()
                    .map_err(|_| err("expected a qubit index after the Pauli letter"))?;
                if q >= num_qubits {
                    return Err(err(&format!("qubit index out of range for {num_qubits} qubits")));
                }
                if used[q] {
                    return Err(err("qubit appears twice in one term"));
                }
                used[q] = true;
                letters[q] = letter;
                factors += 1;
            }
            if factors == 0 && !bare_identity {
                return Err(Error::Parse {
                    line: line_no,
                    token: coeff_tok.to_string(),
                    message: "term has no Pauli factors (write `I` for identity)".into(),
                });
            }
            terms.push((coeff, PauliString::new(letters)));
        }
        if !seen_any {
            return Err(Error::EmptyDecomposition);
        }
        Self::new(num_qubits, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|(c, s)| format!("{} {}", format_coefficient(*c), s))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn term_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split(['\n', ';'])
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// `<re>`, `<im>j`, or `<re>(+|-)<im>j`.
pub fn parse_coefficient(tok: &str) -> Option<C64> {
    let finite = |x: f64| x.is_finite().then_some(x);
    let Some(body) = tok.strip_suffix(['j', 'J']) else {
        return finite(tok.parse().ok()?).map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = finite(body[..i].parse().ok()?)?;
            let im = finite(body[i..].parse().ok()?)?;
            Some(C64::new(re, im))
        }
        None => finite(body.parse().ok()?).map(|im| C64::new(0.0, im)),
    }
}

pub fn format_coefficient(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}j", c.im)
    } else {
        let sign = if c.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{}{}j", c.re, sign, c.im.abs())
    }
}

/// Coefficients `Tr(P op) / 2^L` over all `4^L` strings, with the default
/// drop tolerance.
pub fn pauli_decompose(op: &Operator) -> Result<WeightedPauliSum> {
    pauli_decompose_with_tolerance(op, DEFAULT_DROP_TOL)
}

pub fn pauli_decompose_with_tolerance(op: &Operator, drop_tol: f64) -> Result<WeightedPauliSum> {
    let num_qubits = qubits_for_dim(op.dim()).ok_or(Error::NotPowerOfTwo(op.dim()))?;
    let dim = op.dim();
    let norm = 1.0 / dim as f64;
    let mut terms = Vec::new();
    for index in 0..dim * dim {
        let s = PauliString::from_index(num_qubits, index);
        let (x, z, ny) = s.masks();
        let base = i_pow(ny);
        // Tr(P op) = Σ_k phase(k) op[k][k ^ x]
        let tr: C64 = (0..dim).map(|k| signed(base, k & z) * op.get(k, k ^ x)).sum();
        let c = tr * norm;
        if c.norm() >= drop_tol {
            terms.push((c, s));
        }
    }
    Ok(WeightedPauliSum { num_qubits, terms })
}

pub fn pauli_reconstruct(sum: &WeightedPauliSum) -> Operator {
    let dim = 1usize << sum.num_qubits;
    let mut op = Operator::zeros(dim);
    for (c, s) in &sum.terms {
        let (x, z, ny) = s.masks();
        let base = i_pow(ny) * c;
        for k in 0..dim {
            let r = k ^ x;
            op.set(r, k, op.get(r, k) + signed(base, k & z));
        }
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single(sum: &WeightedPauliSum) -> Vec<(C64, String)> {
        sum.terms().iter().map(|(c, s)| (*c, s.to_string())).collect()
    }

    #[test]
    fn pauli_matrices_are_textbook() {
        let x = pauli_matrix(Pauli::X);
        let y = pauli_matrix(Pauli::Y);
        let z = pauli_matrix(Pauli::Z);
        assert_eq!(x, Operator::from_rows(&[[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]).unwrap());
        assert_eq!(y, Operator::from_rows(&[[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]]).unwrap());
        assert_eq!(z, Operator::diagonal(&[c(1., 0.), c(-1., 0.)]));
    }

    #[test]
    fn string_is_little_endian_tensor_product() {
        // X0 Z1 = Z ⊗ X with qubit 0 on the low bit
        let s = PauliString::from_factors(2, &[(0, Pauli::X), (1, Pauli::Z)]).unwrap();
        let expected = pauli_matrix(Pauli::X).kron_low(&pauli_matrix(Pauli::Z));
        assert_eq!(s.to_operator(), expected);
        assert_eq!(s.to_string(), "X0 Z1");
    }

    #[test]
    fn decompose_scaled_z() {
        // H = -(ω/2) Z with ω = -2
        let h = pauli_matrix(Pauli::Z).scale(c(1.0, 0.0));
        let sum = pauli_decompose(&h).unwrap();
        assert_eq!(single(&sum), vec![(c(1.0, 0.0), "Z0".to_string())]);
    }

    #[test]
    fn decompose_identity_two_qubits() {
        let sum = pauli_decompose(&Operator::identity(4)).unwrap();
        assert_eq!(single(&sum), vec![(c(1.0, 0.0), "I".to_string())]);
    }

    #[test]
    fn decompose_damping_number_operator() {
        // L^+L = (κ/2)(I - Z) with κ = 1
        let ldl = Operator::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let sum = pauli_decompose(&ldl).unwrap();
        assert_eq!(
            single(&sum),
            vec![(c(0.5, 0.0), "I".to_string()), (c(-0.5, 0.0), "Z0".to_string())]
        );
    }

    #[test]
    fn reconstruct_lowering_operator() {
        let sum = WeightedPauliSum::new(
            1,
            vec![
                (c(0.5, 0.0), PauliString::new(vec![Pauli::X])),
                (c(0.0, 0.5), PauliString::new(vec![Pauli::Y])),
            ],
        )
        .unwrap();
        let l = pauli_reconstruct(&sum);
        let expected = Operator::from_rows(&[[c(0., 0.), c(1., 0.)], [c(0., 0.), c(0., 0.)]]).unwrap();
        assert_eq!(l, expected);
    }

    #[test]
    fn empty_sum_is_zero() {
        let sum = WeightedPauliSum::new(2, vec![]).unwrap();
        assert_eq!(pauli_reconstruct(&sum), Operator::zeros(4));
    }

    #[test]
    fn decompose_rejects_non_power_of_two() {
        assert_eq!(
            pauli_decompose(&Operator::identity(3)).unwrap_err(),
            Error::NotPowerOfTwo(3)
        );
    }

    #[test]
    fn merges_duplicates_and_drops_small() {
        let z = PauliString::new(vec![Pauli::Z]);
        let sum = WeightedPauliSum::new(
            1,
            vec![
                (c(1.0, 0.0), z.clone()),
                (c(0.5, 0.0), z.clone()),
                (c(1e-14, 0.0), PauliString::new(vec![Pauli::X])),
            ],
        )
        .unwrap();
        assert_eq!(sum.terms(), &[(c(1.5, 0.0), z)]);
    }

    #[test]
    fn parses_grammar_examples() {
        let sum = WeightedPauliSum::parse("1.0 Z0", 1).unwrap();
        assert_eq!(pauli_reconstruct(&sum), pauli_matrix(Pauli::Z));

        let l = WeightedPauliSum::parse("0.5 X0\n0.5j Y0", 1).unwrap();
        assert_eq!(l.terms()[1].0, c(0.0, 0.5));

        let zz = WeightedPauliSum::parse("-1.0 Z0 Z1; 0.25+0.5j I", 2).unwrap();
        assert_eq!(zz.len(), 2);
        assert_eq!(zz.terms()[1], (c(0.25, 0.5), PauliString::identity(2)));
    }

    #[test]
    fn coefficient_forms() {
        assert_eq!(parse_coefficient("2"), Some(c(2.0, 0.0)));
        assert_eq!(parse_coefficient("-0.5j"), Some(c(0.0, -0.5)));
        assert_eq!(parse_coefficient("1e-3-2E+1j"), Some(c(1e-3, -20.0)));
        assert_eq!(parse_coefficient("-1.5+2j"), Some(c(-1.5, 2.0)));
        assert_eq!(parse_coefficient("-0.5j..."), None);
        assert_eq!(parse_coefficient("nan"), None);
        assert_eq!(parse_coefficient("j"), None);
    }

    #[test]
    fn parse_errors_name_token_and_line() {
        match WeightedPauliSum::parse("1.0 Z0\n-0.5j... X0", 1) {
            Err(Error::Parse { line, token, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "-0.5j...");
            }
            other => panic!("unexpected {other:?}"),
        }
        match WeightedPauliSum::parse("1.0 Z3", 2) {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "Z3"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(WeightedPauliSum::parse("1.0 Q0", 1), Err(Error::Parse { .. })));
        assert!(matches!(WeightedPauliSum::parse("1.0 X0 Z0", 1), Err(Error::Parse { .. })));
        assert!(matches!(WeightedPauliSum::parse("1.0", 1), Err(Error::Parse { .. })));
        assert!(matches!(WeightedPauliSum::parse("  \n", 1), Err(Error::EmptyDecomposition)));
    }

    #[test]
    fn text_round_trip() {
        let sum = WeightedPauliSum::parse("0.1+0.2j X0 Y2\n-3 I\n0.5j Z1", 3).unwrap();
        let again = WeightedPauliSum::parse(&sum.to_text(), 3).unwrap();
        assert_eq!(sum, again);
    }
}
