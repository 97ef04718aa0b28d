//! Signed n-qubit Pauli strings in symplectic (x, z) form.
//!
//! A string is `±P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}` with every factor Hermitian
//! (`Y` is stored as x=z=1, not as `XZ`). Bits are packed 64 qubits per
//! word. Text form is an optional sign followed by one of `IXYZ` per qubit,
//! qubit 0 first: `"-YYX"`, `"+XI"`, `"ZZZ"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("length mismatch: {left} vs {right} qubits")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid character {ch:?} at position {pos}")]
    InvalidChar { ch: char, pos: usize },
    #[error("empty Pauli string")]
    Empty,
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
}

pub type PauliResult<T> = Result<T, PauliError>;

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
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

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// True when the two factors commute.
    pub fn commutes_with(self, other: Pauli) -> bool {
        self == Pauli::I || other == Pauli::I || self == other
    }
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Phase exponent (power of i, mod 4) picked up word-by-word when
/// multiplying `a · b` as Hermitian factors.
#[inline]
fn word_phase(xa: u64, za: u64, xb: u64, zb: u64) -> i64 {
    let (xa_only, ya, za_only) = (xa & !za, xa & za, !xa & za);
    let (xb_only, yb, zb_only) = (xb & !zb, xb & zb, !xb & zb);
    // XY = iZ, YZ = iX, ZX = iY and the reverses give -i.
    let plus = (xa_only & yb) | (ya & zb_only) | (za_only & xb_only);
    let minus = (ya & xb_only) | (za_only & yb) | (xa_only & zb_only);
    plus.count_ones() as i64 - minus.count_ones() as i64
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

impl PauliString {
    /// `+I…I` on `n` qubits.
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
            negative: false,
        }
    }

    /// Single non-trivial factor `p` on `qubit`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(qubit, p);
        s
    }

    /// Embed the factors of `local` at positions `qubits` of an `n`-qubit string.
    pub fn embed(local: &PauliString, qubits: &[usize], n: usize) -> PauliResult<Self> {
        if local.len() != qubits.len() {
            return Err(PauliError::LengthMismatch {
                left: local.len(),
                right: qubits.len(),
            });
        }
        let mut s = Self::identity(n);
        for (i, &q) in qubits.iter().enumerate() {
            if q >= n {
                return Err(PauliError::QubitOutOfRange { qubit: q, n });
            }
            s.set(q, local.get(i));
        }
        s.negative = local.negative;
        Ok(s)
    }

    /// Factors at `qubits`, in order, keeping the sign.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut s = Self::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            s.set(i, self.get(q));
        }
        s.negative = self.negative;
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    #[inline]
    pub fn set(&mut self, q: usize, p: Pauli) {
        let (xb, zb) = p.bits();
        let (w, m) = (q >> 6, 1u64 << (q & 63));
        if xb {
            self.x[w] |= m;
        } else {
            self.x[w] &= !m;
        }
        if zb {
            self.z[w] |= m;
        } else {
            self.z[w] &= !m;
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// +1 or -1.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    pub fn negate(&mut self) {
        self.negative = !self.negative;
    }

    /// Same operator with a `+` sign.
    pub fn unsigned(&self) -> Self {
        let mut s = self.clone();
        s.negative = false;
        s
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// True when every factor is `I` (either sign).
    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    fn check_len(&self, other: &Self) -> PauliResult<()> {
        if self.n != other.n {
            Err(PauliError::LengthMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &Self) -> PauliResult<bool> {
        self.check_len(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones() & 1;
        }
        acc == 0
    }

    /// Product `a · b` as `i^k · P` with `P` unsigned-Hermitian; `k` is the
    /// full phase exponent mod 4 (sign bits included).
    pub fn multiply_phased(a: &Self, b: &Self) -> PauliResult<(u8, PauliString)> {
        a.check_len(b)?;
        let mut out = PauliString::identity(a.n);
        let mut k: i64 = 2 * (a.negative as i64 + b.negative as i64);
        for i in 0..a.x.len() {
            k += word_phase(a.x[i], a.z[i], b.x[i], b.z[i]);
            out.x[i] = a.x[i] ^ b.x[i];
            out.z[i] = a.z[i] ^ b.z[i];
        }
        Ok((k.rem_euclid(4) as u8, out))
    }

    /// Product `a · b` with its sign.
    ///
    /// For commuting inputs this is exact. Anticommuting inputs give `±i·P`;
    /// the returned string is `±P`, carrying the sign of the coefficient of
    /// `i`, so `multiply(a,b)` and `multiply(b,a)` always differ in sign
    /// exactly when `a` and `b` anticommute.
    pub fn multiply(a: &Self, b: &Self) -> PauliResult<PauliString> {
        let (k, mut p) = Self::multiply_phased(a, b)?;
        p.negative = k >= 2;
        Ok(p)
    }

    /// In-place `self ← other · self`, for commuting operands (tableau
    /// row operations). Returns false when they anticommute, in which case
    /// the sign is meaningless.
    pub(crate) fn left_mul_assign(&mut self, other: &Self) -> bool {
        let mut k: i64 = 2 * (self.negative as i64 + other.negative as i64);
        for i in 0..self.x.len() {
            k += word_phase(other.x[i], other.z[i], self.x[i], self.z[i]);
            self.x[i] ^= other.x[i];
            self.z[i] ^= other.z[i];
        }
        let k = k.rem_euclid(4);
        self.negative = k == 2;
        k % 2 == 0
    }

    /// Multiply by `other` ignoring the global phase (frames and error
    /// bookkeeping, where only the operator matters).
    pub fn mul_assign_unsigned(&mut self, other: &Self) {
        for i in 0..self.x.len() {
            self.x[i] ^= other.x[i];
            self.z[i] ^= other.z[i];
        }
    }

    /// Compose a single-qubit factor onto `q`, ignoring phase.
    pub fn toggle(&mut self, q: usize, p: Pauli) {
        let (xb, zb) = p.bits();
        let (w, m) = (q >> 6, 1u64 << (q & 63));
        if xb {
            self.x[w] ^= m;
        }
        if zb {
            self.z[w] ^= m;
        }
    }

    // --- Clifford conjugation P -> U P U^dagger ---------------------------

    #[inline]
    pub fn conj_h(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.negative ^= xb & zb;
        self.set(q, Pauli::from_bits(zb, xb));
    }

    #[inline]
    pub fn conj_s(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.negative ^= xb & zb;
        self.set(q, Pauli::from_bits(xb, zb ^ xb));
    }

    #[inline]
    pub fn conj_sdg(&mut self, q: usize) {
        let (xb, zb) = (self.x_bit(q), self.z_bit(q));
        self.negative ^= xb & !zb;
        self.set(q, Pauli::from_bits(xb, zb ^ xb));
    }

    #[inline]
    pub fn conj_x(&mut self, q: usize) {
        self.negative ^= self.z_bit(q);
    }

    #[inline]
    pub fn conj_y(&mut self, q: usize) {
        self.negative ^= self.x_bit(q) ^ self.z_bit(q);
    }

    #[inline]
    pub fn conj_z(&mut self, q: usize) {
        self.negative ^= self.x_bit(q);
    }

    #[inline]
    pub fn conj_cnot(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x_bit(c), self.z_bit(c), self.x_bit(t), self.z_bit(t));
        self.negative ^= xc & zt & !(xt ^ zc);
        self.set(t, Pauli::from_bits(xt ^ xc, zt));
        self.set(c, Pauli::from_bits(xc, zc ^ zt));
    }

    /// Apply a Pauli operator `p` by conjugation (sign flip when anticommuting).
    pub fn conj_pauli(&mut self, p: &PauliString) {
        if !self.commutes_unchecked(p) {
            self.negative = !self.negative;
        }
    }

    /// Complex conjugate: `Y* = -Y`, so the sign flips with each `Y`.
    pub fn conjugate(&self) -> Self {
        let mut s = self.clone();
        let ys: u32 = self
            .x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones())
            .sum();
        s.negative ^= ys % 2 == 1;
        s
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut s = Self::identity(self.n + other.n);
        for q in 0..self.n {
            s.set(q, self.get(q));
        }
        for q in 0..other.n {
            s.set(self.n + q, other.get(q));
        }
        s.negative = self.negative ^ other.negative;
        s
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        for q in 0..self.n {
            write!(f, "{}", self.get(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> PauliResult<Self> {
        let mut chars = s.chars().peekable();
        let mut negative = false;
        let mut offset = 0;
        match chars.peek() {
            Some('+') => {
                chars.next();
                offset = 1;
            }
            Some('-') | Some('\u{2212}') => {
                chars.next();
                negative = true;
                offset = 1;
            }
            _ => {}
        }
        let body: Vec<char> = chars.collect();
        if body.is_empty() {
            return Err(PauliError::Empty);
        }
        let mut p = PauliString::identity(body.len());
        for (i, &c) in body.iter().enumerate() {
            let f = Pauli::from_char(c).ok_or(PauliError::InvalidChar { ch: c, pos: i + offset })?;
            p.set(i, f);
        }
        p.negative = negative;
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All `4^n` unsigned Pauli strings on `n` qubits, in base-4 order
/// (qubit 0 least significant, I < X < Y < Z).
pub fn all_paulis(n: usize) -> impl Iterator<Item = PauliString> {
    let total = 1usize << (2 * n);
    (0..total).map(move |mut idx| {
        let mut p = PauliString::identity(n);
        for q in 0..n {
            p.set(q, Pauli::ALL[idx & 3]);
            idx >>= 2;
        }
        p
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_display_roundtrip() {
        for s in ["XYZ", "-YYX", "IIII", "-I", "ZXYIZ"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+XI").to_string(), "XI");
        assert_eq!(p("\u{2212}Z"), p("-Z"));
    }

    #[test]
    fn parse_errors() {
        assert_eq!("".parse::<PauliString>(), Err(PauliError::Empty));
        assert_eq!("-".parse::<PauliString>(), Err(PauliError::Empty));
        assert_eq!(
            "XQ".parse::<PauliString>(),
            Err(PauliError::InvalidChar { ch: 'Q', pos: 1 })
        );
    }

    #[test]
    fn product_example() {
        assert_eq!(PauliString::multiply(&p("XXX"), &p("ZZI")).unwrap(), p("-YYX"));
    }

    #[test]
    fn single_qubit_table() {
        // XY = iZ, YZ = iX, ZX = iY
        let (k, r) = PauliString::multiply_phased(&p("X"), &p("Y")).unwrap();
        assert_eq!((k, r), (1, p("Z")));
        let (k, r) = PauliString::multiply_phased(&p("Y"), &p("X")).unwrap();
        assert_eq!((k, r), (3, p("Z")));
        let (k, r) = PauliString::multiply_phased(&p("Z"), &p("X")).unwrap();
        assert_eq!((k, r), (1, p("Y")));
        let (k, _) = PauliString::multiply_phased(&p("-Y"), &p("Y")).unwrap();
        assert_eq!(k, 2);
    }

    #[test]
    fn commutation() {
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(!p("XI").commutes(&p("ZZ")).unwrap());
        assert_eq!(
            p("X").commutes(&p("XX")),
            Err(PauliError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn wide_strings_cross_word_boundary() {
        let mut a = PauliString::identity(130);
        let mut b = PauliString::identity(130);
        a.set(3, Pauli::X);
        a.set(70, Pauli::X);
        a.set(129, Pauli::Y);
        b.set(70, Pauli::Z);
        b.set(129, Pauli::Z);
        // X·Z = -iY, Y·Z = iX: total phase exponent 0 → +
        let (k, r) = PauliString::multiply_phased(&a, &b).unwrap();
        assert_eq!(k, 0);
        assert_eq!(r.get(70), Pauli::Y);
        assert_eq!(r.get(129), Pauli::X);
        assert!(a.commutes(&b).unwrap());
        assert_eq!(r.weight(), 3);
    }

    #[test]
    fn cnot_conjugation_table() {
        let cases = [
            ("XI", "XX"),
            ("IX", "IX"),
            ("ZI", "ZI"),
            ("IZ", "ZZ"),
            ("YI", "YX"),
            ("IY", "ZY"),
            ("YY", "-XZ"),
            ("XZ", "-YY"),
        ];
        for (i, o) in cases {
            let mut s = p(i);
            s.conj_cnot(0, 1);
            assert_eq!(s, p(o), "CNOT {i}");
        }
    }

    #[test]
    fn single_qubit_conjugations() {
        let mut s = p("Y");
        s.conj_h(0);
        assert_eq!(s, p("-Y"));
        let mut s = p("X");
        s.conj_s(0);
        assert_eq!(s, p("Y"));
        let mut s = p("X");
        s.conj_sdg(0);
        assert_eq!(s, p("-Y"));
        let mut s = p("Y");
        s.conj_sdg(0);
        assert_eq!(s, p("X"));
        let mut s = p("Z");
        s.conj_x(0);
        assert_eq!(s, p("-Z"));
    }

    #[test]
    fn conjugate_flips_on_odd_y() {
        assert_eq!(p("YX").conjugate(), p("-YX"));
        assert_eq!(p("YY").conjugate(), p("YY"));
    }

    #[test]
    fn serde_as_text() {
        let s = serde_json::to_string(&p("-XZ")).unwrap();
        assert_eq!(s, "\"-XZ\"");
        let back: PauliString = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p("-XZ"));
    }

    #[test]
    fn enumerate_all() {
        let v: Vec<_> = all_paulis(2).collect();
        assert_eq!(v.len(), 16);
        assert_eq!(v[0], p("II"));
        assert_eq!(v[1], p("XI"));
        assert_eq!(v[4], p("IX"));
    }
}
