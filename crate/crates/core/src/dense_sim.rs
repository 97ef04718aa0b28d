//! Statevector oracle for small circuits (at most 14 qubits).
//!
//! Qubit `q` is bit `q` of the basis index (little-endian). Measurement
//! branches are enumerated exactly, so circuit-level results are
//! probability-weighted sums rather than samples.

pub use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::circuits::{Circuit, FeedMode, Gate, Instruction};
use crate::noise::omega;
use crate::pauli::{Pauli, PauliString};
use crate::rng;

pub const MAX_QUBITS: usize = 14;
/// Noise terms beyond this count are sampled instead of enumerated.
pub const MAX_ENUMERATED_TERMS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("{0} qubits exceed the dense capacity of {MAX_QUBITS}")]
    Capacity(usize),
    #[error("dimension mismatch: {left} vs {right} qubits")]
    Dimension { left: usize, right: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("bad operands {qubits:?} for {n} qubits")]
    BadOperands { qubits: Vec<usize>, n: usize },
    #[error("circuits disagree on logical width: {0} vs {1}")]
    LogicalWidth(usize, usize),
    #[error("reference circuit must be measurement-free")]
    ReferenceNotUnitary,
    #[error("invalid circuit: {0}")]
    Circuit(#[from] crate::circuits::CircuitError),
}

pub type DenseResult<T> = Result<T, DenseError>;

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

const UNITARY_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(p: Pauli) -> Matrix2 {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    match p {
        Pauli::I => [[l, o], [o, l]],
        Pauli::X => [[o, l], [l, o]],
        Pauli::Y => [[o, c(0.0, -1.0)], [c(0.0, 1.0), o]],
        Pauli::Z => [[l, o], [o, -l]],
    }
}

pub fn gate_matrix(g: Gate) -> Option<Matrix2> {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    Some(match g {
        Gate::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Gate::S => [[l, o], [o, c(0.0, 1.0)]],
        Gate::Sdg => [[l, o], [o, c(0.0, -1.0)]],
        Gate::X => pauli_matrix(Pauli::X),
        Gate::Y => pauli_matrix(Pauli::Y),
        Gate::Z => pauli_matrix(Pauli::Z),
        Gate::T => [[l, o], [o, w]],
        Gate::Tdg => [[l, o], [o, w.conj()]],
        Gate::Cnot | Gate::Cz | Gate::Ccz => return None,
    })
}

fn unitarity_defect<const D: usize>(m: &[[Complex64; D]; D]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..D {
        for j in 0..D {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..D {
                s += m[k][i].conj() * m[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0>.
    pub fn new(n: usize) -> DenseResult<Self> {
        if n > MAX_QUBITS {
            return Err(DenseError::Capacity(n));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// State from raw amplitudes (normalized here).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> DenseResult<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n > MAX_QUBITS {
            return Err(DenseError::Capacity(n));
        }
        let mut s = Self { n, amps };
        s.normalize();
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        if s > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= s);
        }
    }

    fn check(&self, qubits: &[usize]) -> DenseResult<()> {
        let distinct = qubits.iter().enumerate().all(|(i, q)| !qubits[..i].contains(q));
        if qubits.iter().any(|&q| q >= self.n) || !distinct {
            return Err(DenseError::BadOperands {
                qubits: qubits.to_vec(),
                n: self.n,
            });
        }
        Ok(())
    }

    fn apply_1q_raw(&mut self, m: &Matrix2, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Arbitrary single-qubit unitary.
    pub fn apply_1q(&mut self, m: &Matrix2, q: usize) -> DenseResult<()> {
        self.check(&[q])?;
        let d = unitarity_defect(m);
        if d > UNITARY_TOL {
            return Err(DenseError::NotUnitary(d));
        }
        self.apply_1q_raw(m, q);
        Ok(())
    }

    /// Arbitrary two-qubit unitary; local basis index is `b0 + 2 b1` for
    /// bits of `q0`, `q1`.
    pub fn apply_2q(&mut self, m: &Matrix4, q0: usize, q1: usize) -> DenseResult<()> {
        self.check(&[q0, q1])?;
        let d = unitarity_defect(m);
        if d > UNITARY_TOL {
            return Err(DenseError::NotUnitary(d));
        }
        let (b0, b1) = (1usize << q0, 1usize << q1);
        for i in 0..self.amps.len() {
            if i & (b0 | b1) == 0 {
                let idx = [i, i | b0, i | b1, i | b0 | b1];
                let v = idx.map(|j| self.amps[j]);
                for (r, &j) in idx.iter().enumerate() {
                    self.amps[j] = (0..4).map(|k| m[r][k] * v[k]).sum();
                }
            }
        }
        Ok(())
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (bc, bt) = (1usize << c, 1usize << t);
        for i in 0..self.amps.len() {
            if i & bc != 0 && i & bt == 0 {
                self.amps.swap(i, i | bt);
            }
        }
    }

    /// Phase −1 on basis states where all `qubits` are 1 (CZ, CCZ, …).
    pub fn controlled_z(&mut self, qubits: &[usize]) {
        let mask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
    }

    pub fn apply_gate(&mut self, g: Gate, qubits: &[usize]) -> DenseResult<()> {
        self.check(qubits)?;
        if qubits.len() != g.arity() {
            return Err(DenseError::BadOperands {
                qubits: qubits.to_vec(),
                n: self.n,
            });
        }
        match g {
            Gate::Cnot => self.cnot(qubits[0], qubits[1]),
            Gate::Cz | Gate::Ccz => self.controlled_z(qubits),
            _ => self.apply_1q_raw(&gate_matrix(g).expect("single-qubit"), qubits[0]),
        }
        Ok(())
    }

    pub fn apply_pauli1(&mut self, q: usize, p: Pauli) {
        if p != Pauli::I {
            self.apply_1q_raw(&pauli_matrix(p), q);
        }
    }

    /// Apply a signed Pauli string as an operator.
    pub fn apply_pauli(&mut self, p: &PauliString) -> DenseResult<()> {
        if p.len() != self.n {
            return Err(DenseError::Dimension {
                left: p.len(),
                right: self.n,
            });
        }
        for q in 0..self.n {
            self.apply_pauli1(q, p.get(q));
        }
        if p.is_negative() {
            self.amps.iter_mut().for_each(|a| *a = -*a);
        }
        Ok(())
    }

    /// `<ψ|P|ψ>` (real for Hermitian P).
    pub fn expectation(&self, p: &PauliString) -> DenseResult<f64> {
        let mut t = self.clone();
        t.apply_pauli(p)?;
        Ok(inner(&self.amps, &t.amps).re)
    }

    /// Probability of reading 1 on `q`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Project `q` onto `outcome` and renormalize; returns the branch
    /// probability (the state is left unnormalized-zero if it is 0).
    pub fn project(&mut self, q: usize, outcome: bool) -> f64 {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) != outcome {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let p = self.norm_sqr();
        self.normalize();
        p
    }

    /// Sampled Z measurement.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> bool {
        let outcome = rng.gen::<f64>() < self.prob_one(q);
        self.project(q, outcome);
        outcome
    }

    /// Distribution over all basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ other` with `self` on the low qubits.
    pub fn tensor(&self, other: &StateVector) -> DenseResult<StateVector> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(DenseError::Capacity(n));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n, amps })
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|<a|b>|²`.
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> DenseResult<f64> {
    if a.n != b.n {
        return Err(DenseError::Dimension { left: a.n, right: b.n });
    }
    Ok(inner(&a.amps, &b.amps).norm_sqr())
}

// ---------------------------------------------------------------------------
// Circuit execution with exact branching

/// One measurement branch of a circuit run.
#[derive(Debug, Clone)]
pub struct Branch {
    pub prob: f64,
    pub state: StateVector,
    pub records: Vec<bool>,
}

/// Flat list of a circuit's noise terms: (instruction, full Pauli, λ).
pub fn noise_sites(circuit: &Circuit) -> Vec<(usize, PauliString, f64)> {
    let n = circuit.n_qubits();
    let mut out = Vec::new();
    for (i, ins) in circuit.instructions().iter().enumerate() {
        if let Instruction::Noise { qubits, channel } = ins {
            for (p, &l) in channel.terms() {
                out.push((i, PauliString::embed(p, qubits, n).expect("validated"), l));
            }
        }
    }
    out
}

/// Run `circuit` on the low qubits of `init` (extra high qubits are
/// passive references), enumerating every measurement branch. `fired[k]`
/// says whether the k-th noise term (in [`noise_sites`] order) applies.
/// In post-processing mode the Pauli frame is applied at the end, so each
/// branch holds the logical state.
pub fn run_branches(circuit: &Circuit, init: StateVector, fired: &[bool]) -> DenseResult<Vec<Branch>> {
    circuit.validate()?;
    if init.n < circuit.n_qubits() {
        return Err(DenseError::Dimension {
            left: circuit.n_qubits(),
            right: init.n,
        });
    }
    let mut out = Vec::new();
    let frame = PauliString::identity(init.n);
    let start = Walker {
        prob: 1.0,
        state: init,
        records: vec![false; circuit.n_records()],
        frame,
        noise_k: 0,
    };
    walk(circuit, 0, start, fired, &mut out)?;
    Ok(out)
}

struct Walker {
    prob: f64,
    state: StateVector,
    records: Vec<bool>,
    frame: PauliString,
    noise_k: usize,
}

const BRANCH_EPS: f64 = 1e-14;

fn walk(c: &Circuit, from: usize, mut w: Walker, fired: &[bool], out: &mut Vec<Branch>) -> DenseResult<()> {
    let post = c.mode() == FeedMode::PostProcess;
    let ins = c.instructions();
    for (idx, instr) in ins.iter().enumerate().skip(from) {
        match instr {
            Instruction::Gate { gate, qubits } => {
                w.state.apply_gate(*gate, qubits)?;
                if post {
                    crate::stab_sim::conj_frame(&mut w.frame, *gate, qubits);
                }
            }
            Instruction::Measure { qubit, record } => {
                let p1 = w.state.prob_one(*qubit);
                let frame_x = post && w.frame.x_bit(*qubit);
                for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                    if p < BRANCH_EPS {
                        continue;
                    }
                    let mut st = w.state.clone();
                    st.project(*qubit, outcome);
                    let mut records = w.records.clone();
                    records[*record] = outcome ^ frame_x;
                    let next = Walker {
                        prob: w.prob * p,
                        state: st,
                        records,
                        frame: w.frame.clone(),
                        noise_k: w.noise_k,
                    };
                    walk(c, idx + 1, next, fired, out)?;
                }
                return Ok(());
            }
            Instruction::Reset { qubit } => {
                let p1 = w.state.prob_one(*qubit);
                w.frame.set(*qubit, Pauli::I);
                for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                    if p < BRANCH_EPS {
                        continue;
                    }
                    let mut st = w.state.clone();
                    st.project(*qubit, outcome);
                    if outcome {
                        st.apply_pauli1(*qubit, Pauli::X);
                    }
                    let next = Walker {
                        prob: w.prob * p,
                        state: st,
                        records: w.records.clone(),
                        frame: w.frame.clone(),
                        noise_k: w.noise_k,
                    };
                    walk(c, idx + 1, next, fired, out)?;
                }
                return Ok(());
            }
            Instruction::Conditional { pauli, qubit, parity } => {
                if parity.iter().fold(false, |a, &r| a ^ w.records[r]) {
                    if post {
                        w.frame.toggle(*qubit, *pauli);
                    } else {
                        w.state.apply_pauli1(*qubit, *pauli);
                    }
                }
            }
            Instruction::Barrier { .. } => {}
            Instruction::Noise { qubits, channel } => {
                for (p, _) in channel.terms() {
                    if fired.get(w.noise_k).copied().unwrap_or(false) {
                        for (i, &q) in qubits.iter().enumerate() {
                            w.state.apply_pauli1(q, p.get(i));
                        }
                    }
                    w.noise_k += 1;
                }
            }
        }
    }
    if post {
        let mut f = w.frame.unsigned();
        f.set_negative(false);
        w.state.apply_pauli(&f)?;
    }
    out.push(Branch {
        prob: w.prob,
        state: w.state,
        records: w.records,
    });
    Ok(())
}

/// Exact distribution over measurement records (sorted by record bits).
pub fn record_distribution(circuit: &Circuit) -> DenseResult<Vec<(Vec<bool>, f64)>> {
    let init = StateVector::new(circuit.n_qubits())?;
    let mut dist: std::collections::BTreeMap<Vec<bool>, f64> = Default::default();
    for b in run_branches(circuit, init, &[])? {
        *dist.entry(b.records).or_default() += b.prob;
    }
    Ok(dist.into_iter().collect())
}

/// Noiseless output state of a circuit whose logical output does not
/// depend on the branch (all branches agree on `outputs` up to phase).
/// Returns the branch states.
pub fn output_branches(circuit: &Circuit) -> DenseResult<Vec<Branch>> {
    run_branches(circuit, StateVector::new(circuit.n_qubits())?, &[])
}

/// Choi state `(U ⊗ I)|Φ>` of a measurement-free circuit, as amplitudes
/// indexed by `(output bits) + 2^k (reference bits)`.
fn ideal_choi(ideal: &Circuit) -> DenseResult<Vec<Complex64>> {
    if ideal
        .instructions()
        .iter()
        .any(|i| !matches!(i, Instruction::Gate { .. } | Instruction::Barrier { .. }))
    {
        return Err(DenseError::ReferenceNotUnitary);
    }
    let k = ideal.inputs().len();
    let branches = run_branches(ideal, choi_input(ideal, k)?, &[])?;
    let st = &branches[0].state;
    Ok(collapse(st, ideal.outputs(), ideal.n_qubits(), k, |i, a| (i, a))
        .into_iter()
        .map(|(_, a)| a)
        .collect())
}

/// Maximally entangled pairs between the circuit's inputs and `k`
/// reference qubits appended after its own qubits.
fn choi_input(circuit: &Circuit, k: usize) -> DenseResult<StateVector> {
    let n = circuit.n_qubits();
    let mut st = StateVector::new(n + k)?;
    for (j, &q) in circuit.inputs().iter().enumerate() {
        st.apply_gate(Gate::H, &[n + j])?;
        st.cnot(n + j, q);
    }
    Ok(st)
}

/// Reorganize amplitudes of a pure state: for every basis index return
/// (choi index, rest index) pairs. Helper for the fidelity contraction.
fn collapse<T>(
    st: &StateVector,
    outputs: &[usize],
    n: usize,
    k: usize,
    mut f: impl FnMut(usize, Complex64) -> T,
) -> Vec<T> {
    // only valid when all non-output, non-reference qubits are |0>
    let mut out = Vec::with_capacity(1 << (2 * k));
    for choi in 0..1usize << (2 * k) {
        let mut idx = 0usize;
        for (j, &q) in outputs.iter().enumerate() {
            if choi >> j & 1 == 1 {
                idx |= 1 << q;
            }
        }
        for j in 0..k {
            if choi >> (k + j) & 1 == 1 {
                idx |= 1 << (n + j);
            }
        }
        out.push(f(choi, st.amps[idx]));
    }
    out
}

/// `Σ_rest |<Φ_U| ψ[·, rest]>|²` for one pure branch.
fn choi_overlap(phi: &[Complex64], st: &StateVector, outputs: &[usize], n: usize, k: usize) -> f64 {
    let total = st.n;
    let mut choi_bits: Vec<usize> = outputs.to_vec();
    choi_bits.extend(n..n + k);
    let rest_bits: Vec<usize> = (0..total).filter(|q| !choi_bits.contains(q)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); 1 << rest_bits.len()];
    for (i, a) in st.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut ci = 0usize;
        for (j, &q) in choi_bits.iter().enumerate() {
            ci |= (i >> q & 1) << j;
        }
        let mut ri = 0usize;
        for (j, &q) in rest_bits.iter().enumerate() {
            ri |= (i >> q & 1) << j;
        }
        acc[ri] += phi[ci].conj() * a;
    }
    acc.iter().map(|z| z.norm_sqr()).sum()
}

/// How the noise ensemble was averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    Exact,
    Sampled(usize),
}

/// Process fidelity between the noiseless `ideal` channel and the (possibly
/// noisy, possibly dynamic) `noisy` circuit, both mapping `inputs` to
/// `outputs`. Noise is averaged exactly for at most
/// [`MAX_ENUMERATED_TERMS`] terms, otherwise over `samples` draws.
pub fn channel_process_fidelity(
    ideal: &Circuit,
    noisy: &Circuit,
    samples: usize,
    seed: u64,
) -> DenseResult<(f64, Averaging)> {
    let k = ideal.inputs().len();
    if noisy.inputs().len() != k || noisy.outputs().len() != ideal.outputs().len() {
        return Err(DenseError::LogicalWidth(k, noisy.inputs().len()));
    }
    if noisy.n_qubits() + k > MAX_QUBITS {
        return Err(DenseError::Capacity(noisy.n_qubits() + k));
    }
    let phi = ideal_choi(ideal)?;
    let init = choi_input(noisy, k)?;
    let n = noisy.n_qubits();
    let sites = noise_sites(noisy);
    let eval = |fired: &[bool]| -> DenseResult<f64> {
        let mut f = 0.0;
        for b in run_branches(noisy, init.clone(), fired)? {
            f += b.prob * choi_overlap(&phi, &b.state, noisy.outputs(), n, k);
        }
        Ok(f)
    };
    if sites.len() <= MAX_ENUMERATED_TERMS {
        let omegas: Vec<f64> = sites.iter().map(|s| omega(s.2).expect("validated")).collect();
        let mut total = 0.0;
        let mut fired = vec![false; sites.len()];
        for mask in 0u64..(1u64 << sites.len()) {
            let mut w = 1.0;
            for (j, &om) in omegas.iter().enumerate() {
                fired[j] = mask >> j & 1 == 1;
                w *= if fired[j] { om } else { 1.0 - om };
            }
            if w > 0.0 {
                total += w * eval(&fired)?;
            }
        }
        Ok((total, Averaging::Exact))
    } else {
        let mut rng = rng::stream(seed, &[0xD5]);
        let mut total = 0.0;
        for _ in 0..samples.max(1) {
            let fired: Vec<bool> = sites
                .iter()
                .map(|s| rng.gen::<f64>() < omega(s.2).expect("validated"))
                .collect();
            total += eval(&fired)?;
        }
        Ok((total / samples.max(1) as f64, Averaging::Sampled(samples.max(1))))
    }
}

// ---------------------------------------------------------------------------
// Superoperators

/// Single- or two-qubit superoperator in the Pauli transfer matrix basis,
/// `R[i][j] = Tr(P_i E(P_j)) / d`, with Paulis in `all_paulis` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ptm {
    pub n: usize,
    pub r: Vec<Vec<f64>>,
}

/// Dense `d×d` complex matrix, row-major.
pub type DenseMatrix = Vec<Vec<Complex64>>;

pub fn pauli_string_matrix(p: &PauliString) -> DenseMatrix {
    let n = p.len();
    let d = 1usize << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for col in 0..d {
        // P|col> = phase |row>
        let mut row = col;
        let mut ph = Complex64::new(if p.is_negative() { -1.0 } else { 1.0 }, 0.0);
        for q in 0..n {
            let bit = col >> q & 1;
            let pm = pauli_matrix(p.get(q));
            let out_bit = if pm[0][bit] != Complex64::new(0.0, 0.0) { 0 } else { 1 };
            ph *= pm[out_bit][bit];
            row = (row & !(1 << q)) | (out_bit << q);
        }
        m[row][col] = ph;
    }
    m
}

fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let d = a.len();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

fn dagger(a: &DenseMatrix) -> DenseMatrix {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| a[j][i].conj()).collect()).collect()
}

fn trace(a: &DenseMatrix) -> Complex64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// A channel given by Kraus operators on `n` qubits.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    pub n: usize,
    pub ops: Vec<DenseMatrix>,
}

impl KrausChannel {
    pub fn apply(&self, rho: &DenseMatrix) -> DenseMatrix {
        let d = rho.len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        for k in &self.ops {
            let t = matmul(&matmul(k, rho), &dagger(k));
            for i in 0..d {
                for j in 0..d {
                    out[i][j] += t[i][j];
                }
            }
        }
        out
    }

    pub fn ptm(&self) -> Ptm {
        let paulis: Vec<PauliString> = crate::pauli::all_paulis(self.n).collect();
        let mats: Vec<DenseMatrix> = paulis.iter().map(pauli_string_matrix).collect();
        let d = (1usize << self.n) as f64;
        let r = mats
            .iter()
            .map(|pi| {
                mats.iter()
                    .map(|pj| trace(&matmul(pi, &self.apply(pj))).re / d)
                    .collect()
            })
            .collect();
        Ptm { n: self.n, r }
    }

    /// Amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let k0 = vec![vec![Complex64::new(1.0, 0.0), z], vec![z, Complex64::new((1.0 - gamma).sqrt(), 0.0)]];
        let k1 = vec![vec![z, Complex64::new(gamma.sqrt(), 0.0)], vec![z, z]];
        Self { n: 1, ops: vec![k0, k1] }
    }

    /// Product of `Γ_P^λ` written as a mixture of Pauli unitaries.
    pub fn from_pauli_lindblad(ch: &crate::noise::PauliLindbladChannel) -> Self {
        let n = ch.n_qubits();
        let d = 1usize << n;
        let id: DenseMatrix = (0..d)
            .map(|i| (0..d).map(|j| Complex64::new((i == j) as u8 as f64, 0.0)).collect())
            .collect();
        let mut ops = vec![id];
        for (p, &l) in ch.terms() {
            let w = omega(l).expect("valid");
            let pm = pauli_string_matrix(p);
            let mut next = Vec::new();
            for k in &ops {
                next.push(scale(k, (1.0 - w).sqrt()));
                next.push(scale(&matmul(&pm, k), w.sqrt()));
            }
            ops = next;
        }
        Self { n, ops }
    }
}

fn scale(a: &DenseMatrix, s: f64) -> DenseMatrix {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

impl Ptm {
    /// Pauli twirl: keep the diagonal.
    pub fn twirled(&self) -> Ptm {
        let d = self.r.len();
        let r = (0..d)
            .map(|i| (0..d).map(|j| if i == j { self.r[i][j] } else { 0.0 }).collect())
            .collect();
        Ptm { n: self.n, r }
    }

    pub fn compose(&self, after: &Ptm) -> Ptm {
        let d = self.r.len();
        let r = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| after.r[i][k] * self.r[k][j]).sum()).collect())
            .collect();
        Ptm { n: self.n, r }
    }

    /// Process fidelity with the identity: `Tr(R)/d²`.
    pub fn process_fidelity(&self) -> f64 {
        let d2 = self.r.len() as f64;
        (0..self.r.len()).map(|i| self.r[i][i]).sum::<f64>() / d2
    }

    pub fn max_abs_diff(&self, other: &Ptm) -> f64 {
        self.r
            .iter()
            .flatten()
            .zip(other.r.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
