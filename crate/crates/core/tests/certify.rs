//! Monte-Carlo certifiers against exact fidelities.

use dyncirc::certify::{
    estimate_cnot_gate_fidelity, estimate_ghz_fidelity, estimate_process_fidelity, CertifyResult, CircuitSource, Prep,
    ShotProvider,
};
use dyncirc::circuits::{ghz_dynamic, ghz_unitary, ideal_cnot, long_range_cnot_dynamic, CircuitBuilder};
use dyncirc::dense_sim::channel_process_fidelity as dense_process_fidelity;
use dyncirc::noise::{attach_noise, exact_ghz_fidelity, exact_process_fidelity, gate_fidelity_unchecked, NoiseShape};
use dyncirc::{Circuit, FeedMode, Instruction, NoiseParams, PauliLindbladChannel, PauliString};

fn with_noise_after(c: &Circuit, qubits: Vec<usize>, ch: PauliLindbladChannel) -> Circuit {
    let mut ins = c.instructions().to_vec();
    ins.push(Instruction::Noise { qubits, channel: ch });
    c.with_instructions(ins).unwrap()
}

fn cnot_with(qubits: Vec<usize>, ch: PauliLindbladChannel, before: bool) -> Circuit {
    let mut b = CircuitBuilder::new("cnot_noisy", 2).io(vec![0, 1], vec![0, 1]);
    let noise = Instruction::Noise { qubits, channel: ch };
    if before {
        b.push(noise.clone());
    }
    b.cnot(0, 1);
    if !before {
        b.push(noise);
    }
    b.build().unwrap()
}

fn within(est: f64, se: f64, exact: f64, k: f64) -> bool {
    (est - exact).abs() <= k * se.max(1e-12)
}

#[test]
fn ghz_with_flipped_qubit_is_one_half() {
    let c = with_noise_after(
        &ghz_unitary(6).unwrap(),
        vec![0],
        PauliLindbladChannel::single("X".parse().unwrap(), f64::INFINITY).unwrap(),
    );
    assert_eq!(exact_ghz_fidelity(&c, &(0..6).collect::<Vec<_>>()).unwrap(), 0.5);
    let e = estimate_ghz_fidelity(&CircuitSource::new(c), 6, 2000, 20, 1).unwrap();
    assert!(within(e.value, e.std_err, 0.5, 3.0), "{} ± {}", e.value, e.std_err);
}

#[test]
fn noisy_ghz_matches_exact() {
    let params = NoiseParams::new(0.01, 0.02, 0.02, 2.0);
    for c in [ghz_unitary(8).unwrap(), ghz_dynamic(8, FeedMode::FeedForward, 2.0).unwrap(), ghz_dynamic(8, FeedMode::PostProcess, 2.0).unwrap()] {
        let noisy = attach_noise(&c, &params, &NoiseShape::default()).unwrap();
        let exact = exact_ghz_fidelity(&noisy, noisy.outputs()).unwrap();
        let e = estimate_ghz_fidelity(&CircuitSource::new(noisy), 8, 1000, 50, 2).unwrap();
        assert!(within(e.value, e.std_err, exact, 3.0), "{}: {} ± {} vs {exact}", c.name, e.value, e.std_err);
    }
}

#[test]
fn infinite_noise_gate_fidelity_is_four_tenths() {
    let mut ch = PauliLindbladChannel::single("ZI".parse().unwrap(), f64::INFINITY).unwrap();
    ch.add("IX".parse().unwrap(), f64::INFINITY).unwrap();
    let c = cnot_with(vec![0, 1], ch, false);
    let e = estimate_cnot_gate_fidelity(&CircuitSource::new(c), 1000, 10, 3).unwrap();
    assert!(within(e.value, e.std_err, 0.4, 3.0), "{} ± {}", e.value, e.std_err);
}

#[test]
fn control_dephasing_matches_dense() {
    let c = cnot_with(vec![0], PauliLindbladChannel::single("Z".parse().unwrap(), 0.1).unwrap(), true);
    let (f, _) = dense_process_fidelity(&ideal_cnot(), &c, 1, 0).unwrap();
    let exact = gate_fidelity_unchecked(f, 4);
    let e = estimate_cnot_gate_fidelity(&CircuitSource::new(c), 2000, 20, 4).unwrap();
    assert!(within(e.value, e.std_err, exact, 3.0), "{} ± {} vs {exact}", e.value, e.std_err);
}

#[test]
fn noisy_dynamic_cnot_matches_exact() {
    let params = NoiseParams::new(0.01, 0.02, 0.02, 2.0);
    for mode in [FeedMode::FeedForward, FeedMode::PostProcess] {
        let noisy = attach_noise(&long_range_cnot_dynamic(4, mode, 2.0).unwrap(), &params, &NoiseShape::default()).unwrap();
        let exact = exact_process_fidelity(&noisy).unwrap();
        let e = estimate_process_fidelity(&CircuitSource::new(noisy), &ideal_cnot(), 1000, 50, 5).unwrap();
        assert!(within(e.value, e.std_err, exact, 3.0), "{mode:?}: {} ± {} vs {exact}", e.value, e.std_err);
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

#[test]
fn estimators_are_unbiased() {
    let params = NoiseParams::new(0.02, 0.03, 0.03, 1.0);
    let ghz = attach_noise(&ghz_dynamic(4, FeedMode::PostProcess, 1.0).unwrap(), &params, &NoiseShape::default()).unwrap();
    let ghz_exact = exact_ghz_fidelity(&ghz, ghz.outputs()).unwrap();
    let cnot = attach_noise(&long_range_cnot_dynamic(2, FeedMode::FeedForward, 1.0).unwrap(), &params, &NoiseShape::default()).unwrap();
    let cnot_exact = exact_process_fidelity(&cnot).unwrap();
    let (gs, cs) = (CircuitSource::new(ghz), CircuitSource::new(cnot));
    let reps = 200;
    let g: Vec<f64> = (0..reps).map(|r| estimate_ghz_fidelity(&gs, 4, 32, 4, 1000 + r).unwrap().value).collect();
    let c: Vec<f64> = (0..reps)
        .map(|r| estimate_process_fidelity(&cs, &ideal_cnot(), 32, 4, 5000 + r).unwrap().value)
        .collect();
    for (xs, exact, what) in [(g, ghz_exact, "ghz"), (c, cnot_exact, "cnot")] {
        let (mean, std) = mean_std(&xs);
        let se = std / (reps as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "{what}: mean {mean} vs {exact} (se {se})");
    }
}

#[test]
fn error_scales_as_inverse_root_m() {
    let params = NoiseParams::new(0.02, 0.03, 0.03, 1.0);
    let ghz = CircuitSource::new(
        attach_noise(&ghz_unitary(4).unwrap(), &params, &NoiseShape::default()).unwrap(),
    );
    let reps = 300u64;
    let stds: Vec<f64> = [64usize, 256, 1024]
        .iter()
        .map(|&m| {
            let xs: Vec<f64> = (0..reps)
                .map(|r| estimate_ghz_fidelity(&ghz, 4, m, 1, r * 7919 + m as u64).unwrap().value)
                .collect();
            mean_std(&xs).1
        })
        .collect();
    for w in stds.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "std ratio {ratio} ({stds:?})");
    }
}

/// Always reports −1: the estimate must come out negative, not clipped.
struct Adversary;

impl ShotProvider for Adversary {
    fn n_inputs(&self) -> usize {
        2
    }
    fn n_outputs(&self) -> usize {
        2
    }
    fn measure(&self, _: &[Prep], _: &PauliString, _: u64, _: &[u64]) -> CertifyResult<i8> {
        Ok(-1)
    }
}

#[test]
fn estimates_are_not_clipped() {
    let e = estimate_process_fidelity(&Adversary, &ideal_cnot(), 64, 4, 0).unwrap();
    assert!(e.value < 0.0);
    // ideal values of the CNOT support are ±1, so every sample is ∓1
    assert!(e.samples.iter().all(|s| s.measured_value.abs() == 1.0));
    let g = estimate_ghz_fidelity(&Adversary, 2, 16, 4, 0).unwrap();
    assert_eq!(g.value, -1.0);
    let gate = estimate_cnot_gate_fidelity(&Adversary, 64, 4, 0).unwrap();
    assert!((gate.value - gate_fidelity_unchecked(e.value, 4)).abs() < 1e-12);
}

#[test]
fn single_sample_uses_binomial_error() {
    let c = with_noise_after(
        &ghz_unitary(3).unwrap(),
        vec![0],
        PauliLindbladChannel::single("X".parse().unwrap(), f64::INFINITY).unwrap(),
    );
    let src = CircuitSource::new(c);
    let mut spread = false;
    for seed in 0..20 {
        let e = estimate_ghz_fidelity(&src, 3, 1, 400, seed).unwrap();
        assert!((e.std_err - ((1.0 - e.value * e.value) / 400.0).sqrt()).abs() < 1e-12);
        spread |= e.std_err > 0.0;
    }
    // half of the stabilizers anticommute with the flip and give random ±1
    assert!(spread);
}
