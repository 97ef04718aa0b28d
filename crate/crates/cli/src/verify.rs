//! Noiseless equivalence suite: every builder against its ideal target.

use dyncirc::certify::{clifford_choi_violations, eigenstate_io_violations, ghz_generator_violations};
use dyncirc::circuits::{
    ccz_dynamic, ghz_dynamic, ghz_unitary, ideal_ccz, ideal_cnot, long_range_cnot_dynamic, long_range_cnot_unitary,
};
use dyncirc::dense_sim::{channel_process_fidelity, output_branches, state_fidelity, StateVector};
use dyncirc::{Circuit, FeedMode, UnitaryVariant};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliResult;

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub family: String,
    pub size: usize,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
    /// The circuit, serialized only when the check fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<serde_json::Value>,
}

/// Sizes the suite covers.
#[derive(Debug, Clone)]
pub struct VerifyPlan {
    pub cnot_dense: Vec<usize>,
    pub cnot_stabilizer: Vec<usize>,
    pub unitary_dense: Vec<usize>,
    pub ghz_dense: Vec<usize>,
    pub ghz_stabilizer: Vec<usize>,
    pub ccz_dense: Vec<usize>,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        Self {
            cnot_dense: (1..=8).collect(),
            cnot_stabilizer: vec![16, 32, 99],
            unitary_dense: (1..=6).collect(),
            ghz_dense: (4..=12).step_by(2).collect(),
            ghz_stabilizer: vec![16, 32, 64, 101],
            ccz_dense: (1..=4).collect(),
        }
    }
}

enum Job {
    Choi(Circuit, Circuit),
    StabilizerIo(Circuit, Circuit, u64),
    GhzDense(Circuit),
    GhzStabilizer(Circuit, u64),
}

fn mode_tag(m: FeedMode) -> &'static str {
    match m {
        FeedMode::FeedForward => "ff",
        FeedMode::PostProcess => "pp",
    }
}

fn ghz_target(c: &Circuit) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = vec![num_complex_zero(); 1 << c.n_qubits()];
    let all: usize = c.outputs().iter().map(|&q| 1 << q).sum();
    a[0].re = h;
    a[all].re = h;
    StateVector::from_amplitudes(a).expect("power of two")
}

fn num_complex_zero() -> dyncirc::dense_sim::Complex64 {
    dyncirc::dense_sim::Complex64::new(0.0, 0.0)
}

fn run(family: String, size: usize, job: Job) -> CliResult<Check> {
    let (check, circuit, result): (&'static str, Circuit, Result<(), String>) = match job {
        Job::Choi(c, ideal) => {
            let (f, _) = channel_process_fidelity(&ideal, &c, 1, 0)?;
            let r = if (f - 1.0).abs() < TOL { Ok(()) } else { Err(format!("F = {f}")) };
            ("dense_choi", c, r)
        }
        Job::StabilizerIo(c, ideal, seed) => {
            let io = eigenstate_io_violations(&c, &ideal, seed)?;
            let choi = clifford_choi_violations(&c, &ideal, seed)?;
            let r = if io + choi == 0 {
                Ok(())
            } else {
                Err(format!("{io} eigenstate and {choi} Choi violations"))
            };
            ("stabilizer_io", c, r)
        }
        Job::GhzDense(c) => {
            let target = ghz_target(&c);
            let mut worst: f64 = 1.0;
            for b in output_branches(&c)? {
                worst = worst.min(state_fidelity(&target, &b.state)?);
            }
            let r = if (worst - 1.0).abs() < TOL { Ok(()) } else { Err(format!("F = {worst}")) };
            ("dense_state", c, r)
        }
        Job::GhzStabilizer(c, seed) => {
            let v = ghz_generator_violations(&c, seed)?;
            let r = if v == 0 { Ok(()) } else { Err(format!("{v} generators violated")) };
            ("stabilizer_generators", c, r)
        }
    };
    Ok(Check {
        family,
        size,
        check,
        passed: result.is_ok(),
        detail: result.err().unwrap_or_else(|| "F = 1".into()),
        instance: None,
    }
    .with_instance(&circuit))
}

impl Check {
    fn with_instance(mut self, c: &Circuit) -> Self {
        if !self.passed {
            self.instance = Some(c.to_json());
        }
        self
    }
}

pub fn verify(plan: &VerifyPlan, seed: u64) -> CliResult<Vec<Check>> {
    let modes = [FeedMode::FeedForward, FeedMode::PostProcess];
    let mut jobs: Vec<(String, usize, Job)> = Vec::new();
    for &n in &plan.cnot_dense {
        for m in modes {
            let c = long_range_cnot_dynamic(n, m, 1.0)?;
            jobs.push((format!("cnot_dynamic_{}", mode_tag(m)), n, Job::Choi(c, ideal_cnot())));
        }
    }
    for &n in &plan.cnot_stabilizer {
        for m in modes {
            let c = long_range_cnot_dynamic(n, m, 1.0)?;
            jobs.push((format!("cnot_dynamic_{}", mode_tag(m)), n, Job::StabilizerIo(c, ideal_cnot(), seed)));
        }
    }
    for v in [UnitaryVariant::Ia, UnitaryVariant::Ib, UnitaryVariant::Ic, UnitaryVariant::II] {
        for &n in &plan.unitary_dense {
            let c = long_range_cnot_unitary(v, n)?;
            jobs.push((format!("cnot_{v:?}"), n, Job::Choi(c, ideal_cnot())));
        }
    }
    for &n in &plan.ghz_dense {
        jobs.push(("ghz_unitary".into(), n, Job::GhzDense(ghz_unitary(n)?)));
        for m in modes {
            jobs.push((format!("ghz_dynamic_{}", mode_tag(m)), n, Job::GhzDense(ghz_dynamic(n, m, 1.0)?)));
        }
    }
    for &n in &plan.ghz_stabilizer {
        jobs.push(("ghz_unitary".into(), n, Job::GhzStabilizer(ghz_unitary(n)?, seed)));
        for m in modes {
            jobs.push((format!("ghz_dynamic_{}", mode_tag(m)), n, Job::GhzStabilizer(ghz_dynamic(n, m, 1.0)?, seed)));
        }
    }
    for &n in &plan.ccz_dense {
        jobs.push(("ccz_dynamic".into(), n, Job::Choi(ccz_dynamic(n, 1.0)?, ideal_ccz())));
    }
    jobs.into_par_iter().map(|(f, n, j)| run(f, n, j)).collect()
}
