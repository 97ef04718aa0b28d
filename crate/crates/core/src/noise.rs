//! Pauli-Lindblad noise: channels, twirl coefficients, forward propagation of
//! Pauli faults through dynamic Clifford circuits, noise attachment and the
//! additive error budget with its crossover search.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{self, Circuit, CircuitError, FeedMode, Gate, Instruction, InstructionTally, UnitaryVariant};
use crate::pauli::{Pauli, PauliError, PauliString};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("negative or NaN rate {0}")]
    NegativeRate(f64),
    #[error("time constants must be positive (t1 = {t1}, t2 = {t2})")]
    NonPositiveTimeConstant { t1: f64, t2: f64 },
    #[error("negative duration {0}")]
    NegativeTime(f64),
    #[error("depolarizing parameter q = {0} outside (0, 1]")]
    QOutOfRange(f64),
    #[error("process fidelity {f} or dimension {d} out of range")]
    FidelityOutOfRange { f: f64, d: usize },
    #[error("cannot propagate through non-Clifford {0:?}")]
    Unsupported(Gate),
    #[error("unknown budget family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("{0}")]
    Pauli(#[from] PauliError),
    #[error("{0}")]
    Circuit(#[from] CircuitError),
}

pub type NoiseResult<T> = Result<T, NoiseError>;

/// Flip probability of `Γ_P^λ`.
pub fn omega(lambda: f64) -> NoiseResult<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(NoiseError::NegativeRate(lambda));
    }
    Ok(if lambda.is_infinite() {
        0.5
    } else {
        -0.5 * (-2.0 * lambda).exp_m1()
    })
}

// ---------------------------------------------------------------------------
// Channels

/// Product of commuting generators `Γ_P^{λ_P}`. Terms are keyed by the
/// unsigned Pauli, kept in text order; identity terms are dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct PauliLindbladChannel {
    n: usize,
    terms: Vec<(PauliString, f64)>,
}

impl PauliLindbladChannel {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn single(p: PauliString, lambda: f64) -> NoiseResult<Self> {
        let mut c = Self::new(p.len());
        c.add(p, lambda)?;
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.terms.iter().map(|(p, l)| (p, l))
    }

    pub fn rate(&self, p: &PauliString) -> f64 {
        let key = p.unsigned();
        self.terms.iter().find(|(q, _)| *q == key).map_or(0.0, |t| t.1)
    }

    /// Σ_P λ_P.
    pub fn total_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum()
    }

    /// Compose with `Γ_p^λ`; rates of equal Paulis add.
    pub fn add(&mut self, p: PauliString, lambda: f64) -> NoiseResult<()> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(NoiseError::NegativeRate(lambda));
        }
        if p.len() != self.n {
            return Err(PauliError::LengthMismatch {
                left: self.n,
                right: p.len(),
            }
            .into());
        }
        if p.is_identity() || lambda == 0.0 {
            return Ok(());
        }
        let key = p.unsigned();
        if let Some(t) = self.terms.iter_mut().find(|(q, _)| *q == key) {
            t.1 += lambda;
        } else {
            self.terms.push((key, lambda));
            self.terms.sort_by_cached_key(|(q, _)| q.to_string());
        }
        Ok(())
    }

    /// Channel composition.
    pub fn merge(&mut self, other: &Self) -> NoiseResult<()> {
        for (p, &l) in other.terms() {
            self.add(p.clone(), l)?;
        }
        Ok(())
    }

    /// Every rate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> NoiseResult<Self> {
        let mut c = Self::new(self.n);
        for (p, &l) in self.terms() {
            c.add(p.clone(), l * s)?;
        }
        Ok(c)
    }
}

impl TryFrom<BTreeMap<String, f64>> for PauliLindbladChannel {
    type Error = NoiseError;

    fn try_from(map: BTreeMap<String, f64>) -> NoiseResult<Self> {
        let mut it = map.into_iter().peekable();
        let Some((first, _)) = it.peek() else {
            return Ok(Self::new(0));
        };
        let n = first.trim_start_matches(['+', '-']).chars().count();
        let mut c = Self::new(n);
        for (k, l) in it {
            c.add(k.parse()?, l)?;
        }
        Ok(c)
    }
}

impl From<PauliLindbladChannel> for BTreeMap<String, f64> {
    fn from(c: PauliLindbladChannel) -> Self {
        c.terms.into_iter().map(|(p, l)| (p.to_string(), l)).collect()
    }
}

/// Twirled amplitude damping plus dephasing over duration `t`:
/// rates `{X: t/4T1, Y: t/4T1, Z: t/2T2}`.
pub fn damping_to_pauli(t: f64, t1: f64, t2: f64) -> NoiseResult<PauliLindbladChannel> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(NoiseError::NonPositiveTimeConstant { t1, t2 });
    }
    if t.is_nan() || t < 0.0 {
        return Err(NoiseError::NegativeTime(t));
    }
    let mut c = PauliLindbladChannel::new(1);
    c.add(PauliString::single(1, 0, Pauli::X), t / (4.0 * t1))?;
    c.add(PauliString::single(1, 0, Pauli::Y), t / (4.0 * t1))?;
    if t2.is_finite() {
        c.add(PauliString::single(1, 0, Pauli::Z), t / (2.0 * t2))?;
    }
    Ok(c)
}

/// Uniform rate giving an `n`-qubit depolarizing channel with parameter
/// `q = exp(-4^n λ)`.
pub fn depolarizing_rate(n: usize, q: f64) -> NoiseResult<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(NoiseError::QOutOfRange(q));
    }
    Ok(-q.ln() / 4f64.powi(n as i32))
}

pub fn depolarizing_channel(n: usize, q: f64) -> NoiseResult<PauliLindbladChannel> {
    let lambda = depolarizing_rate(n, q)?;
    let mut c = PauliLindbladChannel::new(n);
    for p in crate::pauli::all_paulis(n).skip(1) {
        c.add(p, lambda)?;
    }
    Ok(c)
}

/// Eigenvalue `c_Q` of the channel on Pauli `Q`.
pub fn twirl_coefficient(channel: &PauliLindbladChannel, q: &PauliString) -> NoiseResult<f64> {
    let mut s = 0.0;
    for (p, &l) in channel.terms() {
        if !p.commutes(q)? {
            s += l;
        }
    }
    Ok((-2.0 * s).exp())
}

/// Exact process fidelity `c_{I}` of a Pauli-Lindblad channel: the
/// probability that the sampled Pauli product is the identity.
pub fn channel_process_fidelity(channel: &PauliLindbladChannel) -> NoiseResult<f64> {
    let n = channel.n_qubits();
    let d2 = 4f64.powi(n as i32);
    let mut s = 0.0;
    for q in crate::pauli::all_paulis(n) {
        s += twirl_coefficient(channel, &q)?;
    }
    Ok(s / d2)
}

/// Lower bound `exp(-Σλ)` on the process fidelity.
pub fn fidelity_lower_bound(channel: &PauliLindbladChannel) -> f64 {
    (-channel.total_rate()).exp()
}

/// Average gate fidelity from process fidelity: `(d F + 1)/(d + 1)`.
pub fn gate_fidelity_from_process(f_proc: f64, d: usize) -> NoiseResult<f64> {
    if !(0.0..=1.0).contains(&f_proc) || d < 2 {
        return Err(NoiseError::FidelityOutOfRange { f: f_proc, d });
    }
    Ok(gate_fidelity_unchecked(f_proc, d))
}

/// Same conversion without range checks, for raw Monte-Carlo estimates
/// that may stray outside [0, 1].
pub fn gate_fidelity_unchecked(f_proc: f64, d: usize) -> f64 {
    (d as f64 * f_proc + 1.0) / (d as f64 + 1.0)
}

// ---------------------------------------------------------------------------
// Propagation

/// A Pauli fault pushed to the end of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    /// Net operator on all qubits at circuit end, relative to the fault-free
    /// run with the same (flipped) outcomes. In post-processing mode it acts
    /// on the logical state (physical state with the frame applied).
    pub pauli: PauliString,
    /// Which measurement records the fault flips.
    pub flipped: Vec<bool>,
}

impl Propagated {
    /// Discard every qubit outside `keep` (for example the outputs).
    pub fn restrict_to(&self, keep: &[usize]) -> PauliString {
        self.pauli.unsigned().restrict(keep)
    }
}

/// Push `faults` — `(position, pauli)` pairs, each acting just before
/// instruction `position` — to the end of `circuit`.
///
/// Rules: Clifford gates conjugate; a measurement flips its record iff the
/// fault anticommutes with `Z_q` and afterwards the fault's factor on the
/// measured qubit is `X` (flipped) or `I`; resets clear the factor; a
/// conditional whose parity contains an odd number of flipped records
/// multiplies its Pauli in. Phases are dropped.
pub fn propagate_many(circuit: &Circuit, faults: &[(usize, PauliString)]) -> NoiseResult<Propagated> {
    let n = circuit.n_qubits();
    let mut e = PauliString::identity(n);
    let mut flipped = vec![false; circuit.n_records()];
    let mut pending: Vec<&(usize, PauliString)> = faults.iter().collect();
    pending.sort_by_key(|f| f.0);
    let mut next = 0;
    for (idx, ins) in circuit.instructions().iter().enumerate() {
        while next < pending.len() && pending[next].0 <= idx {
            let p = &pending[next].1;
            if p.len() != n {
                return Err(PauliError::LengthMismatch { left: n, right: p.len() }.into());
            }
            e.mul_assign_unsigned(p);
            next += 1;
        }
        match ins {
            Instruction::Gate { gate, qubits } => {
                if !gate.is_clifford() {
                    // Diagonal gates commute with Z-type faults.
                    if qubits.iter().all(|&q| !e.x_bit(q)) {
                        continue;
                    }
                    return Err(NoiseError::Unsupported(*gate));
                }
                crate::stab_sim::conj_frame(&mut e, *gate, qubits);
            }
            Instruction::Measure { qubit, record } => {
                let f = e.x_bit(*qubit);
                flipped[*record] = f;
                e.set(*qubit, if f { Pauli::X } else { Pauli::I });
            }
            Instruction::Reset { qubit } => e.set(*qubit, Pauli::I),
            Instruction::Conditional { pauli, qubit, parity } => {
                if parity.iter().fold(false, |a, &r| a ^ flipped[r]) {
                    e.toggle(*qubit, *pauli);
                }
            }
            Instruction::Barrier { .. } | Instruction::Noise { .. } => {}
        }
    }
    for f in &pending[next..] {
        e.mul_assign_unsigned(&f.1);
    }
    Ok(Propagated {
        pauli: e.unsigned(),
        flipped,
    })
}

/// Propagate one fault inserted before instruction `position`.
pub fn propagate(circuit: &Circuit, position: usize, pauli: &PauliString) -> NoiseResult<Propagated> {
    propagate_many(circuit, &[(position, pauli.clone())])
}

/// Every noise term of a noisy circuit as (end-of-circuit fault, λ).
pub fn propagated_terms(circuit: &Circuit) -> NoiseResult<Vec<(Propagated, f64)>> {
    let n = circuit.n_qubits();
    let mut out = Vec::new();
    for (idx, ins) in circuit.instructions().iter().enumerate() {
        if let Instruction::Noise { qubits, channel } = ins {
            for (p, &l) in channel.terms() {
                let full = PauliString::embed(p, qubits, n)?;
                out.push((propagate(circuit, idx + 1, &full)?, l));
            }
        }
    }
    Ok(out)
}

/// Exact process fidelity of a noisy Clifford circuit against its noiseless
/// action, restricted to the circuit's outputs (everything else discarded).
/// Valid when the noiseless circuit implements a unitary on the logical
/// qubits. Cost is `4^k · terms` for `k` outputs.
pub fn exact_process_fidelity(circuit: &Circuit) -> NoiseResult<f64> {
    let outs = circuit.outputs().to_vec();
    let terms: Vec<(PauliString, f64)> = propagated_terms(circuit)?
        .into_iter()
        .map(|(p, l)| (p.restrict_to(&outs), l))
        .collect();
    let k = outs.len();
    let mut s = 0.0;
    for q in crate::pauli::all_paulis(k) {
        let mut r = 0.0;
        for (p, l) in &terms {
            if !p.commutes_unchecked(&q) {
                r += l;
            }
        }
        s += (-2.0 * r).exp();
    }
    Ok(s / 4f64.powi(k as i32))
}

/// Exact GHZ state fidelity of a noisy Clifford GHZ circuit: the average,
/// over all `2^n` stabilizers `S`, of `Π exp(-2λ)` across faults that
/// anticommute with `S`. Qubits in `ghz` carry the state.
pub fn exact_ghz_fidelity(circuit: &Circuit, ghz: &[usize]) -> NoiseResult<f64> {
    let n = ghz.len();
    // A fault's effect on the fidelity only depends on its commutation with
    // the generators X…X and Z_i Z_{i+1}; encode that as a syndrome word.
    let syndromes: Vec<(u64, f64)> = propagated_terms(circuit)?
        .into_iter()
        .map(|(p, l)| (ghz_syndrome(&p.restrict_to(ghz)), l))
        .collect();
    assert!(n <= 24, "exact GHZ fidelity limited to 24 qubits");
    let mut s = 0.0;
    for mask in 0u64..(1u64 << n) {
        let mut r = 0.0;
        for &(syn, l) in &syndromes {
            if (syn & mask).count_ones() % 2 == 1 {
                r += l;
            }
        }
        s += (-2.0 * r).exp();
    }
    Ok(s / (1u64 << n) as f64)
}

/// Bit 0: anticommutes with X…X; bit i (1 ≤ i < n): anticommutes with
/// `Z_{i-1} Z_i`. Matches the generator order of the certifier's group.
pub(crate) fn ghz_syndrome(p: &PauliString) -> u64 {
    let n = p.len();
    let mut s = 0u64;
    let zs = (0..n).filter(|&q| p.z_bit(q)).count();
    if zs % 2 == 1 {
        s |= 1;
    }
    for i in 1..n {
        if p.x_bit(i - 1) ^ p.x_bit(i) {
            s |= 1 << i;
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Parameters and attachment

/// Rates per CNOT time, per CNOT and per measurement, the measurement +
/// feed-forward duration `mu`, and optional relaxation times (CNOT units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    #[serde(default)]
    pub lambda_idle: f64,
    #[serde(default)]
    pub lambda_cnot: f64,
    #[serde(default)]
    pub lambda_meas: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::noiseless(0.0)
    }
}

impl NoiseParams {
    pub fn new(lambda_idle: f64, lambda_cnot: f64, lambda_meas: f64, mu: f64) -> Self {
        Self {
            lambda_idle,
            lambda_cnot,
            lambda_meas,
            mu,
            t1: None,
            t2: None,
        }
    }

    pub fn noiseless(mu: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, mu)
    }

    pub fn validate(&self) -> NoiseResult<()> {
        for (name, value) in [
            ("lambda_idle", self.lambda_idle),
            ("lambda_cnot", self.lambda_cnot),
            ("lambda_meas", self.lambda_meas),
            ("mu", self.mu),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(NoiseError::InvalidParam { name, value });
            }
        }
        for (name, v) in [("t1", self.t1), ("t2", self.t2)] {
            if let Some(value) = v {
                if !(value > 0.0) {
                    return Err(NoiseError::InvalidParam { name, value });
                }
            }
        }
        Ok(())
    }

    /// `T2 > 2 T1` is unphysical; reported, not rejected.
    pub fn physicality_warning(&self) -> Option<String> {
        match (self.t1, self.t2) {
            (Some(t1), Some(t2)) if t2 > 2.0 * t1 => Some(format!("T2 = {t2} exceeds 2·T1 = {}", 2.0 * t1)),
            _ => None,
        }
    }

    /// Idle channel over duration `t` on one qubit.
    pub fn idle_channel(&self, t: f64) -> NoiseResult<PauliLindbladChannel> {
        match (self.t1, self.t2) {
            (Some(t1), Some(t2)) => damping_to_pauli(t, t1, t2),
            _ => PauliLindbladChannel::single(PauliString::single(1, 0, Pauli::Z), t * self.lambda_idle),
        }
    }

    /// Total idle rate per unit time (what the budget multiplies `t_idle` by).
    pub fn idle_rate(&self) -> f64 {
        match (self.t1, self.t2) {
            (Some(t1), Some(t2)) => 0.5 / t1 + 0.5 / t2,
            _ => self.lambda_idle,
        }
    }
}

/// Which Paulis the gate and measurement rates act as.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseShape {
    pub cnot_pauli: PauliString,
    pub meas_pauli: Pauli,
}

impl Default for NoiseShape {
    fn default() -> Self {
        Self {
            cnot_pauli: "YY".parse().expect("literal"),
            meas_pauli: Pauli::X,
        }
    }
}

/// Insert noise placeholders: idle channels before the next operation of
/// each idle interval (tails at the end), `λ_cnot` after each CNOT and
/// `λ_meas` before each measurement or reset. The schedule and tally are
/// unchanged because noise takes no time.
pub fn attach_noise(circuit: &Circuit, params: &NoiseParams, shape: &NoiseShape) -> NoiseResult<Circuit> {
    params.validate()?;
    let base = circuit.without_noise();
    let idle = circuits::idle_intervals(&base);
    let mut before: BTreeMap<usize, Vec<Instruction>> = BTreeMap::new();
    let mut tail = Vec::new();
    for iv in &idle {
        let ch = params.idle_channel(iv.duration())?;
        if ch.is_empty() {
            continue;
        }
        let ins = Instruction::Noise {
            qubits: vec![iv.qubit],
            channel: ch,
        };
        match iv.before {
            Some(i) => before.entry(i).or_default().push(ins),
            None => tail.push(ins),
        }
    }
    let cnot_ch = PauliLindbladChannel::single(shape.cnot_pauli.clone(), params.lambda_cnot)?;
    let meas_ch = PauliLindbladChannel::single(PauliString::single(1, 0, shape.meas_pauli), params.lambda_meas)?;
    let mut out = Vec::new();
    for (i, ins) in base.instructions().iter().enumerate() {
        if let Some(v) = before.remove(&i) {
            out.extend(v);
        }
        match ins {
            Instruction::Measure { qubit, .. } | Instruction::Reset { qubit } if !meas_ch.is_empty() => {
                out.push(Instruction::Noise {
                    qubits: vec![*qubit],
                    channel: meas_ch.clone(),
                });
                out.push(ins.clone());
            }
            Instruction::Gate {
                gate: Gate::Cnot,
                qubits,
            } if !cnot_ch.is_empty() => {
                out.push(ins.clone());
                out.push(Instruction::Noise {
                    qubits: qubits.clone(),
                    channel: cnot_ch.clone(),
                });
            }
            _ => out.push(ins.clone()),
        }
    }
    out.extend(tail);
    Ok(base.with_instructions(out)?)
}

// ---------------------------------------------------------------------------
// Error budget

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CnotDynamic,
    #[serde(rename = "cnot_Ia")]
    CnotIa,
    #[serde(rename = "cnot_Ib")]
    CnotIb,
    #[serde(rename = "cnot_Ic")]
    CnotIc,
    #[serde(rename = "cnot_II")]
    CnotII,
    #[serde(rename = "cnot_II_normed")]
    CnotIINormed,
    GhzUnitary,
    GhzDynamic,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::CnotDynamic,
        Family::CnotIa,
        Family::CnotIb,
        Family::CnotIc,
        Family::CnotII,
        Family::CnotIINormed,
        Family::GhzUnitary,
        Family::GhzDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CnotDynamic => "cnot_dynamic",
            Family::CnotIa => "cnot_Ia",
            Family::CnotIb => "cnot_Ib",
            Family::CnotIc => "cnot_Ic",
            Family::CnotII => "cnot_II",
            Family::CnotIINormed => "cnot_II_normed",
            Family::GhzUnitary => "ghz_unitary",
            Family::GhzDynamic => "ghz_dynamic",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Family::CnotDynamic | Family::GhzDynamic)
    }

    pub fn unitary_variant(self) -> Option<UnitaryVariant> {
        match self {
            Family::CnotIa => Some(UnitaryVariant::Ia),
            Family::CnotIb => Some(UnitaryVariant::Ib),
            Family::CnotIc => Some(UnitaryVariant::Ic),
            Family::CnotII => Some(UnitaryVariant::II),
            _ => None,
        }
    }

    /// Closed-form tally; `size` is the ancilla count (ñ for II, the GHZ
    /// width for GHZ families).
    pub fn closed_form(self, size: usize, mu: f64) -> InstructionTally {
        let n = size as f64;
        let (t_idle, n_cnot, n_meas, depth) = match self {
            Family::CnotDynamic => (2.0 * mu + 2.0, n + 1.0, n, 2.0 + mu),
            Family::CnotIa => (n * n + 2.0 * n, 2.0 * n + 1.0, 0.0, 2.0 * n + 1.0),
            Family::CnotIb => (n * n / 4.0 + n, 3.0 * n + 1.0, 0.0, 2.0 * n + 1.0),
            Family::CnotIc => (0.0, 4.0 * n + 1.0, 0.0, 2.0 * n + 1.0),
            Family::CnotII => (0.75 * n * n - 1.5 * n, 3.0 * n + 1.0, 0.0, 1.5 * n + 1.0),
            Family::CnotIINormed => (
                (3.0 * n * n / 16.0 - 15.0 * n / 8.0 + 45.0 / 16.0).max(0.0),
                1.5 * n - 2.0,
                0.0,
                0.75 * n - 1.25,
            ),
            Family::GhzUnitary => (n * n / 4.0 - 1.5 * n + 2.0, n - 1.0, 0.0, n - 1.0),
            Family::GhzDynamic => (1.0 + mu * n / 2.0, 1.5 * n - 2.0, n / 2.0 - 1.0, 3.0 + mu),
        };
        InstructionTally {
            t_idle,
            n_cnot: n_cnot.round().max(0.0) as usize,
            n_meas: n_meas.round().max(0.0) as usize,
            two_qubit_depth: depth,
            ..Default::default()
        }
    }

    /// Closed-form counts as reals (odd sizes give fractional values for
    /// some families).
    pub fn closed_form_counts(self, size: usize) -> (f64, f64) {
        let n = size as f64;
        match self {
            Family::CnotDynamic => (n + 1.0, n),
            Family::CnotIa => (2.0 * n + 1.0, 0.0),
            Family::CnotIb | Family::CnotII => (3.0 * n + 1.0, 0.0),
            Family::CnotIc => (4.0 * n + 1.0, 0.0),
            Family::CnotIINormed => (1.5 * n - 2.0, 0.0),
            Family::GhzUnitary => (n - 1.0, 0.0),
            Family::GhzDynamic => (1.5 * n - 2.0, n / 2.0 - 1.0),
        }
    }

    pub fn min_size(self) -> usize {
        match self {
            Family::GhzUnitary => 2,
            Family::GhzDynamic => 4,
            Family::CnotIINormed => 3,
            _ => 1,
        }
    }

    /// Build the circuit this family's closed form describes.
    pub fn build(self, size: usize, mode: FeedMode, mu: f64) -> NoiseResult<Circuit> {
        Ok(match self {
            Family::CnotDynamic => circuits::long_range_cnot_dynamic(size, mode, mu)?,
            Family::CnotIa | Family::CnotIb | Family::CnotIc | Family::CnotII => {
                circuits::long_range_cnot_unitary(self.unitary_variant().expect("unitary"), size)?
            }
            Family::CnotIINormed => {
                if size < 5 || (size - 3) % 2 != 0 {
                    return Err(CircuitError::InvalidSize {
                        family: "cnot_II_normed",
                        reason: format!("n = {size} is not 2ñ+3 with ñ ≥ 1"),
                    }
                    .into());
                }
                circuits::long_range_cnot_unitary(UnitaryVariant::II, (size - 3) / 2)?
            }
            Family::GhzUnitary => circuits::ghz_unitary(size)?,
            Family::GhzDynamic => circuits::ghz_dynamic(size, mode, mu)?,
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = NoiseError;

    fn from_str(s: &str) -> NoiseResult<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| NoiseError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub family: Family,
    pub size: usize,
    pub tally: InstructionTally,
    pub lambda_tot: f64,
    pub fidelity_lower_bound: f64,
}

/// `λ_tot = t_idle λ_idle + N_cnot λ_cnot + N_meas λ_meas` from the
/// family's closed form; bound `exp(-λ_tot)`.
pub fn budget(family: Family, size: usize, params: &NoiseParams) -> NoiseResult<ErrorBudget> {
    params.validate()?;
    if size < family.min_size() {
        return Err(CircuitError::InvalidSize {
            family: "budget",
            reason: format!("{family} needs size ≥ {}", family.min_size()),
        }
        .into());
    }
    let tally = family.closed_form(size, params.mu);
    let (n_cnot, n_meas) = family.closed_form_counts(size);
    let lambda_tot = budget_lambda(tally.t_idle, n_cnot, n_meas, params);
    Ok(ErrorBudget {
        family,
        size,
        tally,
        lambda_tot,
        fidelity_lower_bound: (-lambda_tot).exp(),
    })
}

/// Budget from a scheduler tally instead of the closed form.
pub fn budget_from_tally(tally: &InstructionTally, params: &NoiseParams) -> f64 {
    budget_lambda(tally.t_idle, tally.n_cnot as f64, tally.n_meas as f64, params)
}

fn budget_lambda(t_idle: f64, n_cnot: f64, n_meas: f64, p: &NoiseParams) -> f64 {
    t_idle * p.idle_rate() + n_cnot * p.lambda_cnot + n_meas * p.lambda_meas
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub n: usize,
    /// Dynamic-family bound at `n`.
    pub fidelity: f64,
    /// Best competing bound at `n`.
    pub competitor: f64,
}

/// Smallest admissible size at which the `dynamic` bound strictly exceeds
/// the best of `unitary`, scanning sizes up to `n_max`. GHZ families scan
/// even sizes only.
pub fn crossover(
    dynamic: Family,
    unitary: &[Family],
    params: &NoiseParams,
    n_max: usize,
) -> NoiseResult<Option<Crossover>> {
    let even_only = matches!(dynamic, Family::GhzDynamic);
    let start = unitary
        .iter()
        .map(|f| f.min_size())
        .chain([dynamic.min_size()])
        .max()
        .unwrap_or(1);
    for n in start..=n_max {
        if even_only && n % 2 == 1 {
            continue;
        }
        let d = budget(dynamic, n, params)?.fidelity_lower_bound;
        let mut best = f64::NEG_INFINITY;
        for &u in unitary {
            best = best.max(budget(u, n, params)?.fidelity_lower_bound);
        }
        if d > best {
            return Ok(Some(Crossover {
                n,
                fidelity: d,
                competitor: best,
            }));
        }
    }
    Ok(None)
}

pub const CROSSOVER_N_MAX: usize = 10_000;
