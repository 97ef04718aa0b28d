//! Monte-Carlo certification: GHZ state fidelity from random stabilizers and
//! two-qubit process fidelity from random Pauli-eigenstate inputs.
//!
//! Both estimators average `m` i.i.d. samples (with replacement) of
//! `measured / ideal` for relevant Pauli operators; the standard error is the
//! sample standard deviation over `√m`. Nothing is clipped: a noisy
//! estimate may leave [0, 1].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{ideal_cnot, Circuit};
use crate::noise::gate_fidelity_unchecked;
use crate::pauli::{Pauli, PauliString};
use crate::rng;
use crate::stab_sim::{self, conjugate_by_circuit, SimError, StabilizerState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("need at least one sample and one shot per sample")]
    NoSamples,
    #[error("GHZ width {0} must be at least 2")]
    GhzTooSmall(usize),
    #[error("source has {got} logical qubits, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type CertifyResult<T> = Result<T, CertifyError>;

// ---------------------------------------------------------------------------
// GHZ stabilizer group

/// The `2^n` stabilizers of `(|0…0> + |1…1>)/√2`, indexed by a generator
/// selection mask over `X…X, Z0Z1, Z1Z2, …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzStabilizers {
    n: usize,
}

pub fn ghz_stabilizer_group(n: usize) -> CertifyResult<GhzStabilizers> {
    if n < 2 {
        return Err(CertifyError::GhzTooSmall(n));
    }
    Ok(GhzStabilizers { n })
}

impl GhzStabilizers {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> Vec<PauliString> {
        let n = self.n;
        let mut g = vec![PauliString::identity(n)];
        for q in 0..n {
            g[0].set(q, Pauli::X);
        }
        for i in 1..n {
            let mut z = PauliString::identity(n);
            z.set(i - 1, Pauli::Z);
            z.set(i, Pauli::Z);
            g.push(z);
        }
        g
    }

    /// Product of the generators selected by `mask` (bit `i` = generator `i`).
    pub fn element(&self, mask: &[bool]) -> PauliString {
        let mut s = PauliString::identity(self.n);
        for (g, &on) in self.generators().iter().zip(mask) {
            if on {
                s = PauliString::multiply(&s, g).expect("same width");
            }
        }
        s
    }

    /// Element for an integer mask (`n ≤ 64`).
    pub fn element_at(&self, mask: u64) -> PauliString {
        let bits: Vec<bool> = (0..self.n).map(|i| mask >> i & 1 == 1).collect();
        self.element(&bits)
    }

    /// Lazily enumerate all `2^n` elements (`n ≤ 63`).
    pub fn iter(&self) -> impl Iterator<Item = PauliString> + '_ {
        assert!(self.n < 64, "enumeration limited to 63 qubits");
        (0..1u64 << self.n).map(move |m| self.element_at(m))
    }

    /// Uniformly random element.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliString {
        let bits: Vec<bool> = (0..self.n).map(|_| rng.gen()).collect();
        self.element(&bits)
    }
}

// ---------------------------------------------------------------------------
// Shot providers

/// Input preparation for one logical qubit: the +1 eigenstate of a signed
/// single-qubit Pauli, or a random computational state for the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prep {
    pub pauli: Pauli,
    pub negative: bool,
}

/// Something that can be prepared (with optional input states), run once,
/// and measured in a Pauli basis.
pub trait ShotProvider: Sync {
    /// Logical input qubits (in order).
    fn n_inputs(&self) -> usize;
    /// Logical output qubits.
    fn n_outputs(&self) -> usize;
    /// One shot: prepare `prep` on the inputs, run, measure the signed
    /// observable `obs` on the outputs. Randomness comes only from the
    /// streams under `(seed, path)`.
    fn measure(&self, prep: &[Prep], obs: &PauliString, seed: u64, path: &[u64]) -> CertifyResult<i8>;
}

/// A (possibly noisy, possibly dynamic) Clifford circuit simulated on the
/// stabilizer engine.
#[derive(Debug, Clone)]
pub struct CircuitSource {
    pub circuit: Circuit,
}

impl CircuitSource {
    pub fn new(circuit: Circuit) -> Self {
        Self { circuit }
    }
}

impl ShotProvider for CircuitSource {
    fn n_inputs(&self) -> usize {
        self.circuit.inputs().len()
    }

    fn n_outputs(&self) -> usize {
        self.circuit.outputs().len()
    }

    fn measure(&self, prep: &[Prep], obs: &PauliString, seed: u64, path: &[u64]) -> CertifyResult<i8> {
        let c = &self.circuit;
        if prep.len() != c.inputs().len() {
            return Err(CertifyError::Dimension {
                expected: c.inputs().len(),
                got: prep.len(),
            });
        }
        if obs.len() != c.outputs().len() {
            return Err(CertifyError::Dimension {
                expected: c.outputs().len(),
                got: obs.len(),
            });
        }
        let key = rng::derive_seed(seed, path);
        let mut prep_rng = rng::stream(key, &[2]);
        let mut st = StabilizerState::new(c.n_qubits());
        for (&q, p) in c.inputs().iter().zip(prep) {
            prepare(&mut st, q, p, &mut prep_rng);
        }
        let mut meas_rng = rng::stream(key, &[0]);
        let mut noise_rng = rng::stream(key, &[1]);
        let (mut st, shot) = stab_sim::run_shot_with(c, st, &mut |_| meas_rng.gen::<bool>(), &mut noise_rng)?;
        let mut full = PauliString::embed(obs, c.outputs(), c.n_qubits()).expect("validated widths");
        if let Some(frame) = &shot.pauli_frame {
            if !frame.commutes(&full).expect("same width") {
                full.negate();
            }
        }
        let mut obs_rng = rng::stream(key, &[3]);
        Ok(st.measure_observable(&full, &mut obs_rng)?)
    }
}

fn prepare<R: Rng + ?Sized>(st: &mut StabilizerState, q: usize, p: &Prep, rng: &mut R) {
    match p.pauli {
        Pauli::I => {
            if rng.gen::<bool>() {
                st.x(q);
            }
        }
        Pauli::Z => {
            if p.negative {
                st.x(q);
            }
        }
        Pauli::X => {
            if p.negative {
                st.x(q);
            }
            st.h(q);
        }
        Pauli::Y => {
            if p.negative {
                st.x(q);
            }
            st.h(q);
            st.s(q);
        }
    }
}

// ---------------------------------------------------------------------------
// Estimates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerSample {
    pub sample_index: usize,
    pub stabilizer: PauliString,
    pub ideal_value: i8,
    pub measured_value: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSample {
    pub sample_index: usize,
    /// `P_i P_j` as text.
    pub input: String,
    /// `P_k P_l` as text.
    pub output: String,
    /// `ρ_ijkl`.
    pub ideal_value: i8,
    /// Sign-corrected ratio measured / ideal for the prepared eigenstate.
    pub measured_value: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate<S> {
    pub value: f64,
    pub std_err: f64,
    pub m: usize,
    pub shots_per_sample: u64,
    pub samples: Vec<S>,
}

/// Shots needed for per-sample precision `eps` on a ±1 observable.
pub fn shots_for_precision(eps: f64) -> u64 {
    (1.0 / (eps * eps)).ceil().max(1.0) as u64
}

fn mean_and_stderr(xs: &[f64], shots: u64) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let se = if xs.len() > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        // a single sample: binomial spread of its ±1 shots
        ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt()
    };
    (mean, se)
}

/// Direct fidelity estimate of a GHZ state on the source's outputs.
pub fn estimate_ghz_fidelity(
    source: &dyn ShotProvider,
    n: usize,
    m_samples: usize,
    shots_per_sample: u64,
    seed: u64,
) -> CertifyResult<Estimate<StabilizerSample>> {
    if m_samples == 0 || shots_per_sample == 0 {
        return Err(CertifyError::NoSamples);
    }
    if source.n_outputs() != n {
        return Err(CertifyError::Dimension {
            expected: n,
            got: source.n_outputs(),
        });
    }
    let group = ghz_stabilizer_group(n)?;
    let prep = vec![
        Prep {
            pauli: Pauli::I,
            negative: false
        };
        source.n_inputs()
    ];
    let samples: Vec<StabilizerSample> = (0..m_samples)
        .into_par_iter()
        .map(|k| {
            let mut pick = rng::stream(seed, &[k as u64, u64::MAX]);
            let s = group.sample(&mut pick);
            let mut acc = 0i64;
            for j in 0..shots_per_sample {
                acc += source.measure(&prep, &s, seed, &[k as u64, j])? as i64;
            }
            Ok(StabilizerSample {
                sample_index: k,
                stabilizer: s,
                ideal_value: 1,
                measured_value: acc as f64 / shots_per_sample as f64,
                shots: shots_per_sample,
            })
        })
        .collect::<CertifyResult<_>>()?;
    let xs: Vec<f64> = samples.iter().map(|s| s.measured_value).collect();
    let (value, std_err) = mean_and_stderr(&xs, shots_per_sample);
    Ok(Estimate {
        value,
        std_err,
        m: m_samples,
        shots_per_sample,
        samples,
    })
}

/// One relevant Pauli tuple of a two-qubit Clifford's Choi state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportTuple {
    pub input: PauliString,
    pub output: PauliString,
    pub value: i8,
}

/// Support of a measurement-free two-qubit Clifford: `P_k⊗P_l = ρ U (P_i⊗P_j) U†`.
pub fn process_support(ideal: &Circuit) -> CertifyResult<Vec<SupportTuple>> {
    let k = ideal.inputs().len();
    let mut out = Vec::new();
    for p in crate::pauli::all_paulis(k) {
        let full = PauliString::embed(&p, ideal.inputs(), ideal.n_qubits()).expect("widths");
        let img = conjugate_by_circuit(ideal, &full)?.restrict(ideal.outputs());
        out.push(SupportTuple {
            input: p,
            value: img.sign(),
            output: img.unsigned(),
        });
    }
    Ok(out)
}

/// The 16 relevant tuples of the CNOT: `-1` for `YY→XZ` and `XZ→YY`.
pub fn cnot_process_support() -> Vec<SupportTuple> {
    process_support(&ideal_cnot()).expect("CNOT is Clifford")
}

/// Process-fidelity estimate against the ideal measurement-free Clifford
/// `ideal` (the CNOT for [`estimate_cnot_gate_fidelity`]).
pub fn estimate_process_fidelity(
    source: &dyn ShotProvider,
    ideal: &Circuit,
    m_samples: usize,
    shots_per_sample: u64,
    seed: u64,
) -> CertifyResult<Estimate<ProcessSample>> {
    if m_samples == 0 || shots_per_sample == 0 {
        return Err(CertifyError::NoSamples);
    }
    let k = ideal.inputs().len();
    if source.n_inputs() != k || source.n_outputs() != ideal.outputs().len() {
        return Err(CertifyError::Dimension {
            expected: k,
            got: source.n_inputs(),
        });
    }
    let support = process_support(ideal)?;
    let samples: Vec<ProcessSample> = (0..m_samples)
        .into_par_iter()
        .map(|s| {
            let mut pick = rng::stream(seed, &[s as u64, u64::MAX]);
            let tuple = &support[pick.gen_range(0..support.len())];
            // eigenstate of the conjugated input with random eigenvalues;
            // identity factors get a random basis state and no sign
            let conj = tuple.input.conjugate();
            let mut prep = Vec::with_capacity(k);
            let mut prepared = PauliString::identity(k);
            for q in 0..k {
                let p = conj.get(q);
                if p == Pauli::I {
                    prep.push(Prep {
                        pauli: Pauli::I,
                        negative: false,
                    });
                } else {
                    let eig_neg: bool = pick.gen();
                    prep.push(Prep {
                        pauli: p,
                        negative: eig_neg,
                    });
                    prepared.set(q, p);
                    if eig_neg {
                        prepared.negate();
                    }
                }
            }
            // the single Y-count sign of the conjugate cancels in the ratio
            let full = PauliString::embed(&prepared, ideal.inputs(), ideal.n_qubits()).expect("widths");
            let ideal_out = conjugate_by_circuit(ideal, &full)?.restrict(ideal.outputs());
            let obs = ideal_out.unsigned();
            let ideal_value = ideal_out.sign() as f64;
            let mut acc = 0i64;
            for j in 0..shots_per_sample {
                acc += source.measure(&prep, &obs, seed, &[s as u64, j])? as i64;
            }
            Ok(ProcessSample {
                sample_index: s,
                input: tuple.input.to_string(),
                output: tuple.output.to_string(),
                ideal_value: tuple.value,
                measured_value: acc as f64 / shots_per_sample as f64 / ideal_value,
                shots: shots_per_sample,
            })
        })
        .collect::<CertifyResult<_>>()?;
    let xs: Vec<f64> = samples.iter().map(|s| s.measured_value).collect();
    let (value, std_err) = mean_and_stderr(&xs, shots_per_sample);
    Ok(Estimate {
        value,
        std_err,
        m: m_samples,
        shots_per_sample,
        samples,
    })
}

/// Gate-fidelity estimate `(4 F̃_proc + 1)/5` for a CNOT source.
pub fn estimate_cnot_gate_fidelity(
    source: &dyn ShotProvider,
    m_samples: usize,
    shots_per_sample: u64,
    seed: u64,
) -> CertifyResult<Estimate<ProcessSample>> {
    let mut e = estimate_process_fidelity(source, &ideal_cnot(), m_samples, shots_per_sample, seed)?;
    e.value = gate_fidelity_unchecked(e.value, 4);
    e.std_err *= 4.0 / 5.0;
    Ok(e)
}

/// Noiseless sanity: every GHZ stabilizer is +1 on the logical output.
/// Returns the number of violated generators.
pub fn ghz_generator_violations(circuit: &Circuit, seed: u64) -> CertifyResult<usize> {
    let n = circuit.outputs().len();
    let group = ghz_stabilizer_group(n)?;
    let (st, shot) = stab_sim::run_shot(circuit, seed, 0)?;
    let mut bad = 0;
    for g in group.generators() {
        let full = PauliString::embed(&g, circuit.outputs(), circuit.n_qubits()).expect("widths");
        if shot.logical_expectation(&st, &full)? != 1 {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Clifford channel check on the stabilizer engine: each logical input
/// is maximally entangled with a reference qubit, the circuit runs once
/// (random outcomes), and every `U (P ⊗ P*) U†` Choi stabilizer must read +1.
/// Returns the number of failing stabilizers (0 means the channels agree).
pub fn clifford_choi_violations(circuit: &Circuit, ideal: &Circuit, seed: u64) -> CertifyResult<usize> {
    let k = ideal.inputs().len();
    let n = circuit.n_qubits();
    let mut st = StabilizerState::new(n + k);
    for (j, &q) in circuit.inputs().iter().enumerate() {
        st.h(n + j);
        st.cnot(n + j, q);
    }
    let mut meas = rng::stream(seed, &[0]);
    let mut noise = rng::stream(seed, &[1]);
    let wide = circuit.clone_with_width(n + k).map_err(SimError::from)?;
    let (st, shot) = stab_sim::run_shot_with(&wide, st, &mut |_| meas.gen::<bool>(), &mut noise)?;
    let mut bad = 0;
    for j in 0..k {
        for p in [Pauli::X, Pauli::Z] {
            let local = PauliString::single(k, j, p);
            let full_in = PauliString::embed(&local, ideal.inputs(), ideal.n_qubits()).expect("widths");
            let img = conjugate_by_circuit(ideal, &full_in)?.restrict(ideal.outputs());
            let mut obs = PauliString::embed(&img, circuit.outputs(), n + k).expect("widths");
            obs.set(n + j, p);
            if shot.logical_expectation(&st, &obs)? != 1 {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

/// Input/output check on all `6^k` products of single-qubit Pauli
/// eigenstates: the outputs must be stabilized by the images of the input
/// stabilizers. Returns the number of failing (input, stabilizer) pairs.
pub fn eigenstate_io_violations(circuit: &Circuit, ideal: &Circuit, seed: u64) -> CertifyResult<usize> {
    let k = ideal.inputs().len();
    let eig = [
        (Pauli::X, false),
        (Pauli::X, true),
        (Pauli::Y, false),
        (Pauli::Y, true),
        (Pauli::Z, false),
        (Pauli::Z, true),
    ];
    let total = 6usize.pow(k as u32);
    let n = circuit.n_qubits();
    let mut bad = 0;
    for idx in 0..total {
        let choice: Vec<(Pauli, bool)> = (0..k).map(|j| eig[idx / 6usize.pow(j as u32) % 6]).collect();
        let mut st = StabilizerState::new(n);
        let mut prep_rng = rng::stream(seed, &[idx as u64, 2]);
        for (&q, &(p, neg)) in circuit.inputs().iter().zip(&choice) {
            prepare(&mut st, q, &Prep { pauli: p, negative: neg }, &mut prep_rng);
        }
        let mut meas = rng::stream(seed, &[idx as u64, 0]);
        let mut noise = rng::stream(seed, &[idx as u64, 1]);
        let (st, shot) = stab_sim::run_shot_with(circuit, st, &mut |_| meas.gen::<bool>(), &mut noise)?;
        for (j, &(p, neg)) in choice.iter().enumerate() {
            let mut local = PauliString::single(k, j, p);
            if neg {
                local.negate();
            }
            let full_in = PauliString::embed(&local, ideal.inputs(), ideal.n_qubits()).expect("widths");
            let img = conjugate_by_circuit(ideal, &full_in)?.restrict(ideal.outputs());
            let obs = PauliString::embed(&img, circuit.outputs(), n).expect("widths");
            if shot.logical_expectation(&st, &obs)? != 1 {
                bad += 1;
            }
        }
    }
    Ok(bad)
}
