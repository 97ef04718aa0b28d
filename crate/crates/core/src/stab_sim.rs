//! CHP-style stabilizer tableau and a shot executor for dynamic circuits.
//!
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers; each row is a
//! signed [`PauliString`]. The executor handles mid-circuit measurement,
//! parity-conditioned Pauli corrections (applied, or composed into a Pauli
//! frame in post-processing mode) and stochastic Pauli-Lindblad noise.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{Circuit, CircuitError, FeedMode, Gate, Instruction};
use crate::noise::omega;
use crate::pauli::{Pauli, PauliString};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("gate {gate:?} expects {expected} distinct qubits")]
    BadOperands { gate: Gate, expected: usize },
    #[error("{0:?} is not a Clifford gate")]
    NonClifford(Gate),
    #[error("record {0} read before it was written")]
    UnwrittenRecord(usize),
    #[error("negative noise rate {0}")]
    NegativeRate(f64),
    #[error("invalid circuit: {0}")]
    Circuit(#[from] CircuitError),
}

pub type SimResult<T> = Result<T, SimError>;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerState {
    n: usize,
    rows: Vec<PauliString>,
}

impl StabilizerState {
    /// |0…0>.
    pub fn new(n: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::X));
        }
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::Z));
        }
        Self { n, rows }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.rows[self.n..]
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.rows[..self.n]
    }

    fn check(&self, q: usize) -> SimResult<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(SimError::QubitOutOfRange { qubit: q, n: self.n })
        }
    }

    pub fn h(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_h(q));
    }

    pub fn s(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_s(q));
    }

    pub fn sdg(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_sdg(q));
    }

    pub fn x(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_x(q));
    }

    pub fn y(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_y(q));
    }

    pub fn z(&mut self, q: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_z(q));
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.rows.iter_mut().for_each(|r| r.conj_cnot(c, t));
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cnot(a, b);
        self.h(b);
    }

    /// Apply a Clifford gate with bounds and operand checks.
    pub fn apply(&mut self, gate: Gate, qubits: &[usize]) -> SimResult<()> {
        if !gate.is_clifford() {
            return Err(SimError::NonClifford(gate));
        }
        if qubits.len() != gate.arity() || (qubits.len() == 2 && qubits[0] == qubits[1]) {
            return Err(SimError::BadOperands {
                gate,
                expected: gate.arity(),
            });
        }
        for &q in qubits {
            self.check(q)?;
        }
        let q = qubits[0];
        match gate {
            Gate::H => self.h(q),
            Gate::S => self.s(q),
            Gate::Sdg => self.sdg(q),
            Gate::X => self.x(q),
            Gate::Y => self.y(q),
            Gate::Z => self.z(q),
            Gate::Cnot => self.cnot(q, qubits[1]),
            Gate::Cz => self.cz(q, qubits[1]),
            Gate::T | Gate::Tdg | Gate::Ccz => unreachable!(),
        }
        Ok(())
    }

    pub fn apply_pauli1(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::I => {}
            Pauli::X => self.x(q),
            Pauli::Y => self.y(q),
            Pauli::Z => self.z(q),
        }
    }

    /// Apply an n-qubit Pauli operator (global phase ignored).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        self.rows.iter_mut().for_each(|r| r.conj_pauli(p));
    }

    /// Deterministic Z outcome of `q`, if there is one, without collapsing.
    pub fn peek_z(&self, q: usize) -> Option<bool> {
        let n = self.n;
        if self.rows[n..].iter().any(|r| r.x_bit(q)) {
            return None;
        }
        let mut scratch = PauliString::identity(n);
        for i in 0..n {
            if self.rows[i].x_bit(q) {
                scratch.left_mul_assign(&self.rows[i + n]);
            }
        }
        Some(scratch.is_negative())
    }

    /// True when `+Z_q` is in the stabilizer group.
    pub fn is_zero(&self, q: usize) -> bool {
        self.peek_z(q) == Some(false)
    }

    /// Z measurement; `choose` supplies the bit when the outcome is random.
    /// Returns (outcome, was_random).
    pub fn measure_with(&mut self, q: usize, choose: impl FnOnce() -> bool) -> (bool, bool) {
        let n = self.n;
        let Some(p) = (n..2 * n).find(|&i| self.rows[i].x_bit(q)) else {
            return (self.peek_z(q).expect("deterministic"), false);
        };
        let pivot = self.rows[p].clone();
        for i in 0..2 * n {
            if i != p && self.rows[i].x_bit(q) {
                self.rows[i].left_mul_assign(&pivot);
            }
        }
        let outcome = choose();
        self.rows[p - n] = pivot;
        let mut zq = PauliString::single(n, q, Pauli::Z);
        zq.set_negative(outcome);
        self.rows[p] = zq;
        (outcome, true)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> (bool, bool) {
        self.measure_with(q, || rng.gen::<bool>())
    }

    /// Measurement with every random outcome forced to `value`.
    pub fn measure_forced(&mut self, q: usize, value: bool) -> (bool, bool) {
        self.measure_with(q, || value)
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) {
        if self.measure(q, rng).0 {
            self.x(q);
        }
    }

    /// Expectation value of a signed Pauli: +1, -1, or 0 when it is not
    /// (up to sign) in the stabilizer group.
    pub fn expectation(&self, p: &PauliString) -> SimResult<i8> {
        if p.len() != self.n {
            return Err(SimError::QubitOutOfRange {
                qubit: p.len(),
                n: self.n,
            });
        }
        let n = self.n;
        if self.rows[n..].iter().any(|r| !r.commutes_unchecked(p)) {
            return Ok(0);
        }
        let mut scratch = PauliString::identity(n);
        for i in 0..n {
            if !self.rows[i].commutes_unchecked(p) {
                scratch.left_mul_assign(&self.rows[i + n]);
            }
        }
        debug_assert_eq!(scratch.unsigned(), p.unsigned());
        Ok(if scratch.is_negative() == p.is_negative() { 1 } else { -1 })
    }

    /// Check the symplectic tableau invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let s = &self.rows[n + i];
                if !s.commutes_unchecked(&self.rows[n + j]) {
                    return Err(format!("stabilizers {i} and {j} anticommute"));
                }
                if !self.rows[i].commutes_unchecked(&self.rows[j]) {
                    return Err(format!("destabilizers {i} and {j} anticommute"));
                }
                let anti = !self.rows[i].commutes_unchecked(&self.rows[n + j]);
                if anti != (i == j) {
                    return Err(format!("destabilizer {i} / stabilizer {j} pairing broken"));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shot execution

/// A noise event that fired during a shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledError {
    /// Index of the noise instruction.
    pub instruction: usize,
    /// Scheduled time of the injection.
    pub time: f64,
    /// Full-width Pauli that was applied.
    pub pauli: PauliString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    /// Measurement records (frame-corrected in post-processing mode).
    pub classical_bits: Vec<bool>,
    /// Pending corrections in post-processing mode.
    pub pauli_frame: Option<PauliString>,
    pub sampled_errors: Vec<SampledError>,
}

impl ShotResult {
    /// Expectation of `p` on the logical state (the physical state with the
    /// frame applied).
    pub fn logical_expectation(&self, state: &StabilizerState, p: &PauliString) -> SimResult<i8> {
        let e = state.expectation(p)?;
        Ok(match &self.pauli_frame {
            Some(f) if !f.commutes_unchecked(p) => -e,
            _ => e,
        })
    }
}

/// Stream tags under a shot's seed path.
const MEAS_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Run one shot with measurement and noise randomness drawn from the
/// per-shot streams of `(master_seed, shot)`. Returns the final physical
/// state with the shot record.
pub fn run_shot(circuit: &Circuit, master_seed: u64, shot: u64) -> SimResult<(StabilizerState, ShotResult)> {
    let mut meas_rng = rng::stream(master_seed, &[shot, MEAS_STREAM]);
    let mut noise_rng = rng::stream(master_seed, &[shot, NOISE_STREAM]);
    run_shot_with(
        circuit,
        StabilizerState::new(circuit.n_qubits()),
        &mut |_| meas_rng.gen::<bool>(),
        &mut noise_rng,
    )
}

/// Run one shot from an explicit initial state. `outcome(i)` supplies the
/// bit of instruction `i` whenever a measurement or reset is random.
pub fn run_shot_with<R: Rng>(
    circuit: &Circuit,
    mut st: StabilizerState,
    outcome: &mut dyn FnMut(usize) -> bool,
    noise_rng: &mut R,
) -> SimResult<(StabilizerState, ShotResult)> {
    let n = circuit.n_qubits();
    let post = circuit.mode() == FeedMode::PostProcess;
    let mut frame = PauliString::identity(n);
    let mut bits = vec![false; circuit.n_records()];
    let mut written = vec![false; circuit.n_records()];
    let mut sampled = Vec::new();
    // only needed to time-stamp faults; most shots fire none
    let mut slots = None;
    for (idx, ins) in circuit.instructions().iter().enumerate() {
        match ins {
            Instruction::Gate { gate, qubits } => {
                st.apply(*gate, qubits)?;
                if post {
                    conj_frame(&mut frame, *gate, qubits);
                }
            }
            Instruction::Measure { qubit, record } => {
                let (raw, _) = st.measure_with(*qubit, || outcome(idx));
                bits[*record] = raw ^ (post && frame.x_bit(*qubit));
                written[*record] = true;
            }
            Instruction::Reset { qubit } => {
                if st.measure_with(*qubit, || outcome(idx)).0 {
                    st.x(*qubit);
                }
                frame.set(*qubit, Pauli::I);
            }
            Instruction::Conditional {
                pauli,
                qubit,
                parity,
            } => {
                let mut fire = false;
                for &r in parity {
                    if !written[r] {
                        return Err(SimError::UnwrittenRecord(r));
                    }
                    fire ^= bits[r];
                }
                if fire {
                    if post {
                        frame.toggle(*qubit, *pauli);
                    } else {
                        st.apply_pauli1(*qubit, *pauli);
                    }
                }
            }
            Instruction::Barrier { .. } => {}
            Instruction::Noise { qubits, channel } => {
                for (p, &lambda) in channel.terms() {
                    if lambda < 0.0 {
                        return Err(SimError::NegativeRate(lambda));
                    }
                    if noise_rng.gen::<f64>() < omega(lambda).expect("nonnegative") {
                        let full = PauliString::embed(p, qubits, n).expect("validated width");
                        st.apply_pauli(&full);
                        sampled.push(SampledError {
                            instruction: idx,
                            time: slots.get_or_insert_with(|| circuit.schedule())[idx].start,
                            pauli: full,
                        });
                    }
                }
            }
        }
    }
    Ok((
        st,
        ShotResult {
            classical_bits: bits,
            pauli_frame: post.then_some(frame),
            sampled_errors: sampled,
        },
    ))
}

/// Conjugate a Pauli frame through a Clifford gate.
pub(crate) fn conj_frame(frame: &mut PauliString, gate: Gate, q: &[usize]) {
    match gate {
        Gate::H => frame.conj_h(q[0]),
        Gate::S => frame.conj_s(q[0]),
        Gate::Sdg => frame.conj_sdg(q[0]),
        Gate::Cnot => frame.conj_cnot(q[0], q[1]),
        Gate::Cz => {
            frame.conj_h(q[1]);
            frame.conj_cnot(q[0], q[1]);
            frame.conj_h(q[1]);
        }
        // Paulis only change the frame's sign, which is a global phase
        Gate::X | Gate::Y | Gate::Z => {}
        Gate::T | Gate::Tdg | Gate::Ccz => {}
    }
}

/// Run `shots` independent shots in parallel; shot `i` uses the streams of
/// `(master_seed, i)`, so results do not depend on the worker count.
pub fn run_shots(circuit: &Circuit, shots: u64, master_seed: u64) -> SimResult<Vec<ShotResult>> {
    circuit.validate()?;
    if !circuit.is_clifford() {
        let g = circuit
            .instructions()
            .iter()
            .find_map(|i| match i {
                Instruction::Gate { gate, .. } if !gate.is_clifford() => Some(*gate),
                _ => None,
            })
            .expect("non-Clifford gate present");
        return Err(SimError::NonClifford(g));
    }
    (0..shots)
        .into_par_iter()
        .map(|s| run_shot(circuit, master_seed, s).map(|(_, r)| r))
        .collect()
}

/// Exact distribution over measurement records of a noiseless Clifford
/// circuit, by enumerating both outcomes of every random measurement.
/// Exponential in the number of random measurements.
pub fn record_distribution(circuit: &Circuit) -> SimResult<Vec<(Vec<bool>, f64)>> {
    circuit.validate()?;
    let c = circuit.without_noise();
    let mut dist: std::collections::BTreeMap<Vec<bool>, f64> = Default::default();
    // each entry: forced outcomes for the random measurements seen so far
    let mut stack: Vec<Vec<bool>> = vec![Vec::new()];
    while let Some(forced) = stack.pop() {
        let mut k = 0;
        let mut overflow = false;
        let mut noise = rng::stream(0, &[]);
        let (_, shot) = run_shot_with(
            &c,
            StabilizerState::new(c.n_qubits()),
            &mut |_| {
                let b = forced.get(k).copied();
                k += 1;
                b.unwrap_or_else(|| {
                    overflow = true;
                    false
                })
            },
            &mut noise,
        )?;
        if overflow {
            // a random outcome beyond the forced prefix: branch on it
            for b in [false, true] {
                let mut f = forced.clone();
                f.push(b);
                stack.push(f);
            }
        } else {
            *dist.entry(shot.classical_bits).or_default() += 0.5f64.powi(forced.len() as i32);
        }
    }
    Ok(dist.into_iter().collect())
}

/// `U P U†` for a measurement-free Clifford circuit `U`, with exact sign.
pub fn conjugate_by_circuit(circuit: &Circuit, p: &PauliString) -> SimResult<PauliString> {
    let mut q = p.clone();
    for ins in circuit.instructions() {
        match ins {
            Instruction::Gate { gate, qubits } => match gate {
                Gate::X => q.conj_x(qubits[0]),
                Gate::Y => q.conj_y(qubits[0]),
                Gate::Z => q.conj_z(qubits[0]),
                g if g.is_clifford() => conj_frame(&mut q, *g, qubits),
                g => return Err(SimError::NonClifford(*g)),
            },
            Instruction::Barrier { .. } | Instruction::Noise { .. } => {}
            _ => return Err(SimError::Circuit(CircuitError::InvalidSize {
                family: "conjugate_by_circuit",
                reason: "circuit must be measurement-free".into(),
            })),
        }
    }
    Ok(q)
}

impl StabilizerState {
    /// Projective measurement of a signed Pauli observable by basis
    /// rotation and Z measurements of its support; returns ±1. The state is
    /// consumed by the collapse.
    pub fn measure_observable<R: Rng + ?Sized>(&mut self, p: &PauliString, rng: &mut R) -> SimResult<i8> {
        if p.len() != self.n {
            return Err(SimError::QubitOutOfRange { qubit: p.len(), n: self.n });
        }
        let mut parity = p.is_negative();
        for q in p.support() {
            match p.get(q) {
                Pauli::X => self.h(q),
                Pauli::Y => {
                    self.sdg(q);
                    self.h(q);
                }
                _ => {}
            }
            parity ^= self.measure(q, rng).0;
        }
        Ok(if parity { -1 } else { 1 })
    }
}
