//! Circuit IR, builders for the long-range gate families, the ASAP
//! scheduler and the idle/gate/measurement tally.
//!
//! Time is measured in CNOT durations. Single-qubit gates, barriers,
//! feed-forward Paulis and noise placeholders take zero time; a measurement
//! occupies its qubit for `mu` (the measurement + feed-forward block) in
//! feed-forward mode and for 0 in post-processing mode, where corrections are
//! tracked classically and nothing waits on them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::PauliLindbladChannel;
use crate::pauli::Pauli;
use crate::stab_sim::StabilizerState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("instruction {index}: qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, qubit: usize, n: usize },
    #[error("instruction {index}: {gate:?} acts on {expected} qubits, got {got}")]
    Arity {
        index: usize,
        gate: Gate,
        expected: usize,
        got: usize,
    },
    #[error("instruction {index}: qubit {qubit} repeated")]
    DuplicateQubit { index: usize, qubit: usize },
    #[error("instruction {index}: record {record} read before it is written")]
    UnwrittenRecord { index: usize, record: usize },
    #[error("instruction {index}: record {record} written twice")]
    RecordRewritten { index: usize, record: usize },
    #[error("instruction {index}: noise channel acts on {width} qubits but is placed on {placed}")]
    NoiseWidth {
        index: usize,
        width: usize,
        placed: usize,
    },
    #[error("instruction {index}: conditional correction must be X, Y or Z")]
    IdentityCorrection { index: usize },
    #[error("{family}: {reason}")]
    InvalidSize { family: &'static str, reason: String },
    #[error("measurement duration mu must be finite and nonnegative, got {0}")]
    InvalidMu(f64),
}

pub type CircuitResult<T> = Result<T, CircuitError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    T,
    Tdg,
    Cnot,
    Cz,
    Ccz,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cz => 2,
            Gate::Ccz => 3,
            _ => 1,
        }
    }

    pub fn is_clifford(self) -> bool {
        !matches!(self, Gate::T | Gate::Tdg | Gate::Ccz)
    }

    /// Schedule duration in CNOT units.
    pub fn duration(self) -> f64 {
        if self.arity() > 1 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedMode {
    /// Corrections are applied in-circuit after waiting for the outcomes.
    #[default]
    FeedForward,
    /// Corrections are composed into a Pauli frame and applied classically.
    PostProcess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    Gate {
        gate: Gate,
        qubits: Vec<usize>,
    },
    /// Z-basis measurement writing classical record `record`.
    Measure { qubit: usize, record: usize },
    /// Measure-then-conditionally-X; writes no record.
    Reset { qubit: usize },
    /// Apply `pauli` to `qubit` iff the XOR of `parity` records is 1.
    Conditional {
        pauli: Pauli,
        qubit: usize,
        parity: Vec<usize>,
    },
    /// Scheduling fence: nothing on `qubits` after it starts before it.
    Barrier { qubits: Vec<usize> },
    /// Stochastic Pauli-Lindblad channel acting on `qubits` (local indexing).
    Noise {
        qubits: Vec<usize>,
        channel: PauliLindbladChannel,
    },
}

impl Instruction {
    /// Qubits this instruction operates on (barriers and noise do not count).
    pub fn touched(&self) -> &[usize] {
        match self {
            Instruction::Gate { qubits, .. } => qubits,
            Instruction::Measure { qubit, .. }
            | Instruction::Reset { qubit }
            | Instruction::Conditional { qubit, .. } => std::slice::from_ref(qubit),
            Instruction::Barrier { .. } | Instruction::Noise { .. } => &[],
        }
    }

    fn all_qubits(&self) -> &[usize] {
        match self {
            Instruction::Barrier { qubits } | Instruction::Noise { qubits, .. } => qubits,
            _ => self.touched(),
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Instruction::Gate { gate: Gate::Cnot, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    n_qubits: usize,
    n_records: usize,
    instructions: Vec<Instruction>,
    mu: f64,
    mode: FeedMode,
    /// Qubits carrying the logical input, in order.
    inputs: Vec<usize>,
    /// Where the logical qubits end up, in the same order as `inputs`.
    outputs: Vec<usize>,
    /// Qubits that start in unknown (non-|0>) states but are not part of
    /// the logical operation.
    spectators: Vec<usize>,
}

impl Circuit {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mode(&self) -> FeedMode {
        self.mode
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn spectators(&self) -> &[usize] {
        &self.spectators
    }

    /// Duration of a measurement block.
    pub fn meas_duration(&self) -> f64 {
        match self.mode {
            FeedMode::FeedForward => self.mu,
            FeedMode::PostProcess => 0.0,
        }
    }

    pub fn is_clifford(&self) -> bool {
        self.instructions.iter().all(|i| match i {
            Instruction::Gate { gate, .. } => gate.is_clifford(),
            _ => true,
        })
    }

    pub fn has_noise(&self) -> bool {
        self.instructions
            .iter()
            .any(|i| matches!(i, Instruction::Noise { .. }))
    }

    /// Copy with `instructions` replaced; re-validated.
    pub fn with_instructions(&self, instructions: Vec<Instruction>) -> CircuitResult<Circuit> {
        let mut c = self.clone();
        c.instructions = instructions;
        c.validate()?;
        Ok(c)
    }

    /// Copy with `prefix` inserted before the first instruction.
    pub fn with_prefix(&self, prefix: Vec<Instruction>) -> CircuitResult<Circuit> {
        let mut ins = prefix;
        ins.extend(self.instructions.iter().cloned());
        self.with_instructions(ins)
    }

    /// Copy acting on `n` qubits, the extra ones passive (reference qubits).
    pub fn clone_with_width(&self, n: usize) -> CircuitResult<Circuit> {
        let mut c = self.clone();
        c.n_qubits = n.max(self.n_qubits);
        c.validate()?;
        Ok(c)
    }

    /// Copy with every feed-forward correction removed.
    pub fn without_corrections(&self) -> Circuit {
        let mut c = self.clone();
        c.instructions
            .retain(|i| !matches!(i, Instruction::Conditional { .. }));
        c
    }

    /// Copy with every noise placeholder removed.
    pub fn without_noise(&self) -> Circuit {
        let mut c = self.clone();
        c.instructions.retain(|i| !matches!(i, Instruction::Noise { .. }));
        c
    }

    pub fn validate(&self) -> CircuitResult<()> {
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(CircuitError::InvalidMu(self.mu));
        }
        let n = self.n_qubits;
        let mut written = vec![false; self.n_records];
        for (index, ins) in self.instructions.iter().enumerate() {
            let qs = ins.all_qubits();
            for &q in qs {
                if q >= n {
                    return Err(CircuitError::QubitOutOfRange { index, qubit: q, n });
                }
            }
            if !matches!(ins, Instruction::Barrier { .. }) {
                let mut seen = BTreeSet::new();
                for &q in qs {
                    if !seen.insert(q) {
                        return Err(CircuitError::DuplicateQubit { index, qubit: q });
                    }
                }
            }
            match ins {
                Instruction::Gate { gate, qubits } if qubits.len() != gate.arity() => {
                    return Err(CircuitError::Arity {
                        index,
                        gate: *gate,
                        expected: gate.arity(),
                        got: qubits.len(),
                    })
                }
                Instruction::Measure { record, .. } => {
                    match written.get_mut(*record) {
                        Some(w) if *w => {
                            return Err(CircuitError::RecordRewritten {
                                index,
                                record: *record,
                            })
                        }
                        Some(w) => *w = true,
                        None => {
                            return Err(CircuitError::UnwrittenRecord {
                                index,
                                record: *record,
                            })
                        }
                    }
                }
                Instruction::Conditional { pauli, parity, .. } => {
                    if *pauli == Pauli::I {
                        return Err(CircuitError::IdentityCorrection { index });
                    }
                    for &r in parity {
                        if !written.get(r).copied().unwrap_or(false) {
                            return Err(CircuitError::UnwrittenRecord { index, record: r });
                        }
                    }
                }
                Instruction::Noise { qubits, channel } if channel.n_qubits() != qubits.len() => {
                    return Err(CircuitError::NoiseWidth {
                        index,
                        width: channel.n_qubits(),
                        placed: qubits.len(),
                    });
                }
                _ => {}
            }
        }
        for &q in self.inputs.iter().chain(&self.outputs).chain(&self.spectators) {
            if q >= n {
                return Err(CircuitError::QubitOutOfRange {
                    index: usize::MAX,
                    qubit: q,
                    n,
                });
            }
        }
        Ok(())
    }

    /// ASAP schedule: per-instruction start time and duration.
    pub fn schedule(&self) -> Vec<Slot> {
        let mut free = vec![0.0f64; self.n_qubits];
        let mut ready = vec![0.0f64; self.n_records];
        let tm = self.meas_duration();
        let start_of = |free: &[f64], qs: &[usize]| qs.iter().map(|&q| free[q]).fold(0.0, f64::max);
        self.instructions
            .iter()
            .map(|ins| match ins {
                Instruction::Gate { gate, qubits } => {
                    let s = start_of(&free, qubits);
                    let d = gate.duration();
                    for &q in qubits {
                        free[q] = s + d;
                    }
                    Slot { start: s, duration: d }
                }
                Instruction::Measure { qubit, record } => {
                    let s = free[*qubit];
                    free[*qubit] = s + tm;
                    ready[*record] = s + tm;
                    Slot { start: s, duration: tm }
                }
                Instruction::Reset { qubit } => {
                    let s = free[*qubit];
                    free[*qubit] = s + tm;
                    Slot { start: s, duration: tm }
                }
                Instruction::Conditional { qubit, parity, .. } => {
                    let s = parity.iter().map(|&r| ready[r]).fold(free[*qubit], f64::max);
                    free[*qubit] = s;
                    Slot { start: s, duration: 0.0 }
                }
                Instruction::Barrier { qubits } => {
                    let s = start_of(&free, qubits);
                    for &q in qubits {
                        free[q] = s;
                    }
                    Slot { start: s, duration: 0.0 }
                }
                Instruction::Noise { qubits, .. } => Slot {
                    start: start_of(&free, qubits),
                    duration: 0.0,
                },
            })
            .collect()
    }

    /// End time of the last instruction.
    pub fn makespan(&self) -> f64 {
        self.schedule()
            .iter()
            .map(|s| s.start + s.duration)
            .fold(0.0, f64::max)
    }

    /// JSON document: header fields plus the instruction list with schedule.
    pub fn to_json(&self) -> serde_json::Value {
        let slots = self.schedule();
        let ins: Vec<serde_json::Value> = self
            .instructions
            .iter()
            .zip(&slots)
            .map(|(i, s)| {
                let mut v = serde_json::to_value(i).expect("instruction serializes");
                v["start"] = s.start.into();
                v["duration"] = s.duration.into();
                v
            })
            .collect();
        serde_json::json!({
            "name": self.name,
            "n_qubits": self.n_qubits,
            "n_records": self.n_records,
            "mu": self.mu,
            "mode": self.mode,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "spectators": self.spectators,
            "instructions": ins,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub start: f64,
    pub duration: f64,
}

// ---------------------------------------------------------------------------
// Builder

pub struct CircuitBuilder {
    c: Circuit,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>, n_qubits: usize) -> Self {
        Self {
            c: Circuit {
                name: name.into(),
                n_qubits,
                n_records: 0,
                instructions: Vec::new(),
                mu: 0.0,
                mode: FeedMode::FeedForward,
                inputs: Vec::new(),
                outputs: Vec::new(),
                spectators: Vec::new(),
            },
        }
    }

    pub fn mu(mut self, mu: f64) -> Self {
        self.c.mu = mu;
        self
    }

    pub fn mode(mut self, mode: FeedMode) -> Self {
        self.c.mode = mode;
        self
    }

    /// Logical qubits; outputs default to the same positions.
    pub fn io(mut self, inputs: Vec<usize>, outputs: Vec<usize>) -> Self {
        self.c.inputs = inputs;
        self.c.outputs = outputs;
        self
    }

    pub fn spectators(mut self, spectators: Vec<usize>) -> Self {
        self.c.spectators = spectators;
        self
    }

    pub fn push(&mut self, ins: Instruction) -> &mut Self {
        if let Instruction::Measure { record, .. } = ins {
            self.c.n_records = self.c.n_records.max(record + 1);
        }
        self.c.instructions.push(ins);
        self
    }

    pub fn gate(&mut self, gate: Gate, qubits: &[usize]) -> &mut Self {
        self.push(Instruction::Gate {
            gate,
            qubits: qubits.to_vec(),
        })
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::H, &[q])
    }

    pub fn t(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::T, &[q])
    }

    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::Tdg, &[q])
    }

    pub fn cnot(&mut self, c: usize, t: usize) -> &mut Self {
        self.gate(Gate::Cnot, &[c, t])
    }

    /// Z measurement; returns the record index.
    pub fn measure(&mut self, q: usize) -> usize {
        let r = self.c.n_records;
        self.push(Instruction::Measure { qubit: q, record: r });
        r
    }

    /// X measurement (H then Z measurement); returns the record index.
    pub fn measure_x(&mut self, q: usize) -> usize {
        self.h(q);
        self.measure(q)
    }

    pub fn conditional(&mut self, pauli: Pauli, q: usize, parity: Vec<usize>) -> &mut Self {
        self.push(Instruction::Conditional {
            pauli,
            qubit: q,
            parity,
        })
    }

    pub fn barrier_all(&mut self) -> &mut Self {
        let qubits = (0..self.c.n_qubits).collect();
        self.push(Instruction::Barrier { qubits })
    }

    pub fn build(self) -> CircuitResult<Circuit> {
        self.c.validate()?;
        Ok(self.c)
    }
}

fn check_mu(mu: f64) -> CircuitResult<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(CircuitError::InvalidMu(mu))
    }
}

/// Emit layered CNOT slots separated by full barriers so the schedule
/// reproduces the designed layering exactly.
fn emit_slots(b: &mut CircuitBuilder, slots: &[Vec<(usize, usize)>]) {
    for (i, slot) in slots.iter().enumerate() {
        debug_assert!(!slot.is_empty(), "empty slot {i} would collapse the schedule");
        if i > 0 {
            b.barrier_all();
        }
        for &(c, t) in slot {
            b.cnot(c, t);
        }
    }
}

/// Measurement-based CNOT from `c` to `t` through the ancilla `chain`
/// (ordered from `c` towards `t`): Bell pairs plus two CNOT layers, then
/// Z/X measurements of the chain. Returns the record sets whose parities
/// drive the X correction on `t` and the Z correction on `c`.
fn teleported_cnot(b: &mut CircuitBuilder, c: usize, chain: &[usize], t: usize) -> (Vec<usize>, Vec<usize>) {
    let k = chain.len();
    if k == 0 {
        b.cnot(c, t);
        return (Vec::new(), Vec::new());
    }
    // z_meas: measured in Z, parity flips the target; x_meas: measured in X,
    // parity is a phase kick on the control.
    let (z_meas, x_meas): (Vec<usize>, Vec<usize>);
    if k % 2 == 0 {
        for i in 0..k / 2 {
            b.h(chain[2 * i]);
            b.cnot(chain[2 * i], chain[2 * i + 1]);
        }
        b.cnot(c, chain[0]);
        for i in 0..k / 2 - 1 {
            b.cnot(chain[2 * i + 1], chain[2 * i + 2]);
        }
        b.cnot(chain[k - 1], t);
        z_meas = (0..k).step_by(2).map(|i| chain[i]).collect();
        x_meas = (1..k).step_by(2).map(|i| chain[i]).collect();
    } else {
        b.cnot(c, chain[0]);
        for i in 0..(k - 1) / 2 {
            b.h(chain[2 * i + 1]);
            b.cnot(chain[2 * i + 1], chain[2 * i + 2]);
        }
        for i in 0..(k - 1) / 2 {
            b.cnot(chain[2 * i], chain[2 * i + 1]);
        }
        b.cnot(chain[k - 1], t);
        z_meas = (1..k).step_by(2).map(|i| chain[i]).collect();
        x_meas = (0..k).step_by(2).map(|i| chain[i]).collect();
    }
    let mut x_par = Vec::new();
    let mut z_par = Vec::new();
    for &q in chain {
        if z_meas.contains(&q) {
            x_par.push(b.measure(q));
        } else {
            debug_assert!(x_meas.contains(&q));
            z_par.push(b.measure_x(q));
        }
    }
    (x_par, z_par)
}

// ---------------------------------------------------------------------------
// Families

/// Dynamic long-range CNOT from qubit 0 to qubit `n+1` through `n`
/// ancillas: `n+1` CNOTs in two layers, `n` measurements, one Z correction
/// on the control and one X correction on the target.
pub fn long_range_cnot_dynamic(n_ancillas: usize, mode: FeedMode, mu: f64) -> CircuitResult<Circuit> {
    if n_ancillas < 1 {
        return Err(CircuitError::InvalidSize {
            family: "long_range_cnot_dynamic",
            reason: "needs at least one ancilla".into(),
        });
    }
    check_mu(mu)?;
    let n = n_ancillas;
    let (c, t) = (0, n + 1);
    let chain: Vec<usize> = (1..=n).collect();
    let mut b = CircuitBuilder::new(format!("cnot_dynamic_{n}"), n + 2)
        .mu(mu)
        .mode(mode)
        .io(vec![c, t], vec![c, t]);
    let (x_par, z_par) = teleported_cnot(&mut b, c, &chain, t);
    b.barrier_all();
    b.conditional(Pauli::Z, c, z_par);
    b.conditional(Pauli::X, t, x_par);
    b.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitaryVariant {
    /// Fan-out along the whole chain, CNOT, uncompute.
    Ia,
    /// Fan-out on the control half, state swapped in on the target half.
    Ib,
    /// State swapped in from both ends.
    Ic,
    /// SWAP-based routing through occupied intermediate qubits.
    II,
}

impl std::str::FromStr for UnitaryVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Ia" | "ia" => Ok(Self::Ia),
            "Ib" | "ib" => Ok(Self::Ib),
            "Ic" | "ic" => Ok(Self::Ic),
            "II" | "ii" => Ok(Self::II),
            _ => Err(format!("unknown unitary variant {s:?}")),
        }
    }
}

/// Swap-into-|0> hop moving a state from `from` to the empty qubit `to`.
fn move_hop(from: usize, to: usize) -> [(usize, usize); 2] {
    [(from, to), (to, from)]
}

/// Unitary long-range CNOT. `size` is the ancilla count for Ia/Ib/Ic and
/// the number of occupied intermediate qubits for II.
pub fn long_range_cnot_unitary(variant: UnitaryVariant, size: usize) -> CircuitResult<Circuit> {
    if size < 1 {
        return Err(CircuitError::InvalidSize {
            family: "long_range_cnot_unitary",
            reason: "size must be at least 1".into(),
        });
    }
    let n = size;
    let (c, t) = (0usize, n + 1);
    let name = format!("cnot_{variant:?}_{n}");
    let mut slots: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut outputs = vec![c, t];
    let mut spectators = Vec::new();
    match variant {
        UnitaryVariant::Ia => {
            for k in 0..n {
                slots.push(vec![(k, k + 1)]);
            }
            slots.push(vec![(n, n + 1)]);
            for j in 1..=n {
                slots.push(vec![(n - j, n - j + 1)]);
            }
        }
        UnitaryVariant::Ib => {
            // control side fans out over hc hops, target side is moved hops_t
            // hops; both finish right before the middle CNOT at slot m
            let hc = n.div_ceil(2);
            let ht = n / 2;
            let m = hc.max(2 * ht);
            let back = hc.max(2 * ht);
            slots.resize(m + 1 + back, Vec::new());
            for k in 0..hc {
                slots[m - hc + k].push((k, k + 1));
            }
            for j in 1..=hc {
                slots[m + j].push((hc - j, hc - j + 1));
            }
            let t0 = m - 2 * ht;
            for j in 1..=ht {
                let [a, b2] = move_hop(n + 2 - j, n + 1 - j);
                slots[t0 + 2 * (j - 1)].push(a);
                slots[t0 + 2 * (j - 1) + 1].push(b2);
            }
            slots[m].push((hc, hc + 1));
            for j in 1..=ht {
                let [a, b2] = move_hop(hc + j, hc + j + 1);
                slots[m + 1 + 2 * (j - 1)].push(a);
                slots[m + 1 + 2 * (j - 1) + 1].push(b2);
            }
        }
        UnitaryVariant::Ic => {
            let hc = n.div_ceil(2);
            let ht = n / 2;
            let m = 2 * hc;
            slots.resize(m + 1 + 2 * hc, Vec::new());
            for j in 1..=hc {
                let [a, b2] = move_hop(j - 1, j);
                slots[2 * (j - 1)].push(a);
                slots[2 * (j - 1) + 1].push(b2);
                let [a, b2] = move_hop(hc - j + 1, hc - j);
                slots[m + 1 + 2 * (j - 1)].push(a);
                slots[m + 2 + 2 * (j - 1)].push(b2);
            }
            let t0 = m - 2 * ht;
            for j in 1..=ht {
                let [a, b2] = move_hop(n + 2 - j, n + 1 - j);
                slots[t0 + 2 * (j - 1)].push(a);
                slots[t0 + 2 * (j - 1) + 1].push(b2);
                let [a, b2] = move_hop(hc + j, hc + j + 1);
                slots[m + 1 + 2 * (j - 1)].push(a);
                slots[m + 2 + 2 * (j - 1)].push(b2);
            }
            slots[m].push((hc, hc + 1));
        }
        UnitaryVariant::II => {
            // qubits 1..=n hold other data; control and target are swapped
            // towards each other and meet in the middle, then stay there
            let a = n.div_ceil(2);
            let bsw = n / 2;
            let m = 3 * a;
            slots.resize(m + 1, Vec::new());
            for k in 1..=a {
                let (p, q) = (k - 1, k);
                for (s, g) in [(p, q), (q, p), (p, q)].into_iter().enumerate() {
                    slots[3 * (k - 1) + s].push(g);
                }
            }
            let t0 = m - 3 * bsw;
            for k in 1..=bsw {
                let (p, q) = (n + 2 - k, n + 1 - k);
                for (s, g) in [(p, q), (q, p), (p, q)].into_iter().enumerate() {
                    slots[t0 + 3 * (k - 1) + s].push(g);
                }
            }
            slots[m].push((a, a + 1));
            outputs = vec![a, a + 1];
            spectators = (1..=n).collect();
        }
    }
    let mut b = CircuitBuilder::new(name, n + 2)
        .io(vec![c, t], outputs)
        .spectators(spectators);
    emit_slots(&mut b, &slots);
    b.build()
}

/// Unitary GHZ preparation on a line, fanned out from the middle.
pub fn ghz_unitary(n: usize) -> CircuitResult<Circuit> {
    if n < 2 {
        return Err(CircuitError::InvalidSize {
            family: "ghz_unitary",
            reason: "needs n >= 2".into(),
        });
    }
    let l = n.div_ceil(2) - 1;
    let r = l + 1;
    let mut b = CircuitBuilder::new(format!("ghz_unitary_{n}"), n).io(vec![], (0..n).collect());
    b.h(l);
    b.cnot(l, r);
    for k in 1..n {
        if k <= l {
            b.cnot(l - k + 1, l - k);
        }
        if r + k < n {
            b.cnot(r + k - 1, r + k);
        }
    }
    b.build()
}

/// Dynamic GHZ preparation in constant depth: Bell pairs, one fusion layer
/// with measurements, parity-conditioned X fix-ups plus resets, then a final
/// CNOT layer re-attaching the measured qubits (and the fresh last qubit).
pub fn ghz_dynamic(n: usize, mode: FeedMode, mu: f64) -> CircuitResult<Circuit> {
    if n < 2 {
        return Err(CircuitError::InvalidSize {
            family: "ghz_dynamic",
            reason: "needs n >= 2".into(),
        });
    }
    check_mu(mu)?;
    // even n: holders q0,q2,..,q_{n-2}, fresh q_{n-1};
    // odd n: holders q0,q2,..,q_{n-1}, no fresh qubit
    let pairs = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
    let mut b = CircuitBuilder::new(format!("ghz_dynamic_{n}"), n)
        .mu(mu)
        .mode(mode)
        .io(vec![], (0..n).collect());
    for j in 0..pairs {
        b.h(2 * j + 1);
        b.cnot(2 * j + 1, 2 * j + 2);
    }
    b.barrier_all();
    b.h(0);
    for j in 0..pairs {
        b.cnot(2 * j, 2 * j + 1);
    }
    let recs: Vec<usize> = (0..pairs).map(|j| b.measure(2 * j + 1)).collect();
    for k in 1..=pairs {
        b.conditional(Pauli::X, 2 * k, recs[..k].to_vec());
    }
    for (j, &r) in recs.iter().enumerate() {
        b.conditional(Pauli::X, 2 * j + 1, vec![r]);
    }
    let last = if n % 2 == 0 { n / 2 } else { pairs };
    for j in 0..last {
        b.cnot(2 * j, 2 * j + 1);
    }
    b.build()
}

/// Dynamic CCZ between three system qubits A, B, C on a chain with
/// `n_ancillas` bus qubits (split between the A and C arms) plus one merge
/// ancilla `m` adjacent to the arm ends and B.
///
/// Layout: `A=0, arm_A=1..=ja, B=ja+1, arm_C=ja+2..=n+1, C=n+2, m=n+3`.
/// Step one fans the Z values of A and C out to copies next to B; step two
/// accumulates the CCZ phase polynomial on `m` with T gates and measures the
/// copies and `m` in X, kicking Z corrections back onto A, B and C.
pub fn ccz_dynamic(n_ancillas: usize, mu: f64) -> CircuitResult<Circuit> {
    if n_ancillas < 1 {
        return Err(CircuitError::InvalidSize {
            family: "ccz_dynamic",
            reason: "needs at least one ancilla".into(),
        });
    }
    check_mu(mu)?;
    let n = n_ancillas;
    let ja = n.div_ceil(2);
    let jc = n / 2;
    let (qa, qb, qc, m) = (0, ja + 1, n + 2, n + 3);
    let arm_a: Vec<usize> = (1..=ja).collect();
    let arm_c: Vec<usize> = (0..jc).map(|i| n + 1 - i).collect();
    let mut b = CircuitBuilder::new(format!("ccz_dynamic_{n}"), n + 4)
        .mu(mu)
        .io(vec![qa, qb, qc], vec![qa, qb, qc]);

    // fan-outs: the last arm qubit becomes a Z-copy of its system qubit
    let copy_a = *arm_a.last().expect("ja >= 1");
    let (xa, za) = teleported_cnot(&mut b, qa, &arm_a[..ja - 1], copy_a);
    let (copy_c, xc, zc) = if jc > 0 {
        let copy_c = *arm_c.last().expect("jc >= 1");
        let (xc, zc) = teleported_cnot(&mut b, qc, &arm_c[..jc - 1], copy_c);
        (copy_c, xc, zc)
    } else {
        (qc, Vec::new(), Vec::new())
    };
    b.barrier_all();
    b.conditional(Pauli::X, copy_a, xa);
    if jc > 0 {
        b.conditional(Pauli::X, copy_c, xc);
    }

    // (-1)^{xyz} = w^{x + y + z - x^y - x^z - y^z + x^y^z},  w = e^{i pi/4}
    b.t(qa).t(qb).t(qc);
    b.cnot(qb, m); // y
    b.cnot(copy_a, m); // x^y
    b.tdg(m);
    b.cnot(copy_c, m); // x^y^z
    b.t(m);
    b.cnot(qb, m); // x^z
    b.tdg(m);
    b.cnot(copy_a, m); // z
    b.cnot(qb, m); // y^z
    b.tdg(m);

    let ra = b.measure_x(copy_a);
    let rc = if jc > 0 { Some(b.measure_x(copy_c)) } else { None };
    let rm = b.measure_x(m);
    let mut par_a = za;
    par_a.push(ra);
    let mut par_c = zc;
    par_c.extend(rc);
    par_c.push(rm);
    b.barrier_all();
    b.conditional(Pauli::Z, qa, par_a);
    b.conditional(Pauli::Z, qb, vec![rm]);
    b.conditional(Pauli::Z, qc, par_c);
    b.build()
}

/// Direct CNOT on two qubits (reference for equivalence checks).
pub fn ideal_cnot() -> Circuit {
    let mut b = CircuitBuilder::new("cnot", 2).io(vec![0, 1], vec![0, 1]);
    b.cnot(0, 1);
    b.build().expect("valid")
}

/// Direct CCZ on three qubits.
pub fn ideal_ccz() -> Circuit {
    let mut b = CircuitBuilder::new("ccz", 3).io(vec![0, 1, 2], vec![0, 1, 2]);
    b.gate(Gate::Ccz, &[0, 1, 2]);
    b.build().expect("valid")
}

/// Identity channel on `k` qubits.
pub fn ideal_identity(k: usize) -> Circuit {
    let q: Vec<usize> = (0..k).collect();
    CircuitBuilder::new("identity", k)
        .io(q.clone(), q)
        .build()
        .expect("valid")
}

// ---------------------------------------------------------------------------
// Tally

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InstructionTally {
    /// Summed idle time of non-|0> qubits, CNOT units.
    pub t_idle: f64,
    pub n_cnot: usize,
    pub n_meas: usize,
    /// Makespan of the schedule in CNOT units (`2 + mu` for the dynamic CNOT).
    pub two_qubit_depth: f64,
    /// Number of distinct CNOT start times.
    pub cnot_layers: usize,
    pub n_feed_forward: usize,
    /// Number of distinct times at which corrections fire.
    pub feed_forward_steps: usize,
}

/// A stretch of time during which `qubit` holds a non-|0> state and no
/// instruction acts on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleInterval {
    pub qubit: usize,
    pub start: f64,
    pub end: f64,
    /// Index of the next instruction acting on the qubit, `None` for the
    /// tail before circuit end.
    pub before: Option<usize>,
}

impl IdleInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Per instruction, per touched qubit: is the qubit provably |0> right
/// after the instruction?
///
/// Clifford circuits get an exact analysis: logical and spectator qubits are
/// maximally entangled with reference qubits, the circuit is run twice with
/// every random outcome forced to 0 and then to 1, and a qubit counts as
/// zero when `+Z_q` stabilizes the state in both runs. Other circuits fall
/// back to the conservative rule (zero until first touched, and again after
/// a reset or a measurement whose own outcome drives an X on it).
fn zero_after(c: &Circuit) -> Vec<Vec<bool>> {
    if c.is_clifford() {
        let a = zero_after_forced(c, false);
        let b = zero_after_forced(c, true);
        a.into_iter()
            .zip(b)
            .map(|(x, y)| x.into_iter().zip(y).map(|(p, q)| p && q).collect())
            .collect()
    } else {
        let mut pending_reset: Vec<Option<usize>> = vec![None; c.n_qubits()];
        c.instructions()
            .iter()
            .map(|ins| match ins {
                Instruction::Reset { .. } => vec![true],
                Instruction::Measure { qubit, record } => {
                    pending_reset[*qubit] = Some(*record);
                    vec![false]
                }
                Instruction::Conditional {
                    pauli: Pauli::X,
                    qubit,
                    parity,
                } => {
                    let z = pending_reset[*qubit].is_some_and(|r| parity == &vec![r]);
                    pending_reset[*qubit] = None;
                    vec![z]
                }
                other => {
                    for &q in other.touched() {
                        pending_reset[q] = None;
                    }
                    vec![false; other.touched().len()]
                }
            })
            .collect()
    }
}

fn zero_after_forced(c: &Circuit, forced: bool) -> Vec<Vec<bool>> {
    let live: Vec<usize> = c
        .inputs()
        .iter()
        .chain(c.spectators())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = c.n_qubits();
    let mut st = StabilizerState::new(n + live.len());
    for (i, &q) in live.iter().enumerate() {
        st.h(n + i);
        st.cnot(n + i, q);
    }
    let mut records = vec![false; c.n_records()];
    c.instructions()
        .iter()
        .map(|ins| {
            match ins {
                Instruction::Gate { gate, qubits } => {
                    st.apply(*gate, qubits).expect("clifford gate on valid qubits");
                }
                Instruction::Measure { qubit, record } => {
                    records[*record] = st.measure_forced(*qubit, forced).0;
                }
                Instruction::Reset { qubit } => {
                    if st.measure_forced(*qubit, forced).0 {
                        st.x(*qubit);
                    }
                }
                Instruction::Conditional {
                    pauli,
                    qubit,
                    parity,
                } => {
                    if parity.iter().fold(false, |acc, &r| acc ^ records[r]) {
                        st.apply_pauli1(*qubit, *pauli);
                    }
                }
                Instruction::Barrier { .. } | Instruction::Noise { .. } => {}
            }
            ins.touched().iter().map(|&q| st.is_zero(q)).collect()
        })
        .collect()
}

/// All idle intervals of non-|0> qubits. A measured qubit that is never
/// touched again is discarded and accrues no tail.
pub fn idle_intervals(c: &Circuit) -> Vec<IdleInterval> {
    const EPS: f64 = 1e-12;
    let slots = c.schedule();
    let makespan = slots.iter().map(|s| s.start + s.duration).fold(0.0, f64::max);
    let zero = zero_after(c);
    let n = c.n_qubits();
    let mut nonzero = vec![false; n];
    for &q in c.inputs().iter().chain(c.spectators()) {
        nonzero[q] = true;
    }
    let mut last_end = vec![0.0f64; n];
    let mut discarded = vec![false; n];
    let mut out = Vec::new();
    for (i, ins) in c.instructions().iter().enumerate() {
        let s = slots[i];
        for (k, &q) in ins.touched().iter().enumerate() {
            if nonzero[q] && s.start - last_end[q] > EPS {
                out.push(IdleInterval {
                    qubit: q,
                    start: last_end[q],
                    end: s.start,
                    before: Some(i),
                });
            }
            last_end[q] = s.start + s.duration;
            nonzero[q] = !zero[i][k];
            discarded[q] = matches!(ins, Instruction::Measure { .. });
        }
    }
    for q in 0..n {
        if nonzero[q] && !discarded[q] && makespan - last_end[q] > EPS {
            out.push(IdleInterval {
                qubit: q,
                start: last_end[q],
                end: makespan,
                before: None,
            });
        }
    }
    out
}

pub fn tally(c: &Circuit) -> InstructionTally {
    let slots = c.schedule();
    let mut t = InstructionTally {
        t_idle: idle_intervals(c).iter().map(IdleInterval::duration).sum::<f64>() + 0.0,
        two_qubit_depth: slots.iter().map(|s| s.start + s.duration).fold(0.0, f64::max),
        ..Default::default()
    };
    let mut cnot_times = Vec::new();
    let mut ff_times = Vec::new();
    for (ins, s) in c.instructions().iter().zip(&slots) {
        match ins {
            Instruction::Gate { gate: Gate::Cnot, .. } => {
                t.n_cnot += 1;
                cnot_times.push(s.start);
            }
            Instruction::Measure { .. } | Instruction::Reset { .. } => t.n_meas += 1,
            Instruction::Conditional { .. } => {
                t.n_feed_forward += 1;
                ff_times.push(s.start);
            }
            _ => {}
        }
    }
    t.cnot_layers = distinct(&mut cnot_times);
    t.feed_forward_steps = distinct(&mut ff_times);
    t
}

fn distinct(v: &mut [f64]) -> usize {
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for &x in v.iter() {
        if x - last > 1e-9 {
            count += 1;
            last = x;
        }
    }
    count
}
