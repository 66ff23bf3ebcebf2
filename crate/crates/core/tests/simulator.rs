mod common;

use common::*;
use disttrace::circuit::{Gate, Input, OneQubit, QubitKind, Step};
use disttrace::compiler::{compile, fixtures, Readout, Scheme, Strategy, Variant};
use disttrace::pauli::PauliHistogram;
use disttrace::sim::{
    classical_fidelity, fanout_errors, inject_sampled_error, run_pauli_frame, run_statevector, state_fidelity,
    FidelityConfig, NoiseModel, RunConfig,
};
use disttrace::state::{PartySpec, PartyState};
use disttrace::{Basis, Circuit, Error};
use num_complex::Complex64 as C;

fn small_run(threads: Option<usize>, seed: u64) -> String {
    let mut r = rng(3);
    let spec = random_spec(3, 1, &mut r);
    let c = compile(&spec, Scheme::new(Variant::Teledata), &Readout::basis(Basis::X)).unwrap();
    let cfg = RunConfig { shots: 300, seed, threads, ..RunConfig::default() };
    run_statevector(&c, &NoiseModel::from_p(0.01).with_bell(0.02), &cfg).unwrap().to_csv()
}

#[test]
fn runs_are_reproducible() {
    let a = small_run(Some(1), 7);
    assert_eq!(a, small_run(Some(1), 7));
    assert_eq!(a, small_run(Some(3), 7));
    assert_ne!(a, small_run(Some(1), 8));
    let h1 = fanout_errors(4, 0.01, 20_000, 5, Some(1)).unwrap();
    let h2 = fanout_errors(4, 0.01, 20_000, 5, Some(2)).unwrap();
    assert_eq!(h1.to_csv(), h2.to_csv());
}

#[test]
fn fanout_top_error_is_z_on_control() {
    for m in [4, 6, 8] {
        for p in [0.001, 0.003, 0.005] {
            let h = fanout_errors(m, p, 100_000, 1, None).unwrap();
            let (top, _) = h.top_error().unwrap();
            let want = format!("Z{}", "I".repeat(m));
            assert_eq!(top.to_string(), want, "m={m} p={p}");
        }
    }
}

/// Fanout on m targets with each operand maximally entangled with a reference qubit.
/// The output fidelity is then exactly the probability that the net Pauli error is the identity.
fn choi_fanout(m: usize) -> (Circuit, Vec<disttrace::QubitId>, Vec<C>) {
    let mut c = fixtures::fanout(m).unwrap();
    let data = disttrace::sim::data_qubits(&c);
    let refs: Vec<_> = data.iter().map(|_| c.add_qubit(0, QubitKind::Data)).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = PartyState::Pure(vec![C::new(h, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(h, 0.0)]);
    c.inputs = data.iter().zip(&refs).map(|(d, r)| Input { qubits: vec![*d, *r], state: bell.clone() }).collect();
    let w = data.len();
    let dim = 1 << (2 * w);
    let amp = C::new((1.0 / (1 << w) as f64).sqrt(), 0.0);
    let mut ideal = vec![C::new(0.0, 0.0); dim];
    for d in 0..(1usize << w) {
        let out = if d & 1 == 1 { d ^ (((1 << m) - 1) << 1) } else { d };
        ideal[out | (d << w)] = amp;
    }
    let mut all = data;
    all.extend(refs);
    (c, all, ideal)
}

#[test]
fn frame_and_statevector_agree_on_fanout() {
    for p in [0.001, 0.005] {
        let h = fanout_errors(4, p, 100_000, 11, None).unwrap();
        let frame_err = 1.0 - h.identity_probability();
        let frame_se = (frame_err * (1.0 - frame_err) / h.shots as f64).sqrt();
        let (c, all, ideal) = choi_fanout(4);
        let (f, se) = state_fidelity(&c, &NoiseModel::from_p(p), &ideal, &all, 30_000, 12, None).unwrap();
        let sv_err = 1.0 - f;
        let sigma = (frame_se * frame_se + se * se).sqrt();
        assert!((sv_err - frame_err).abs() <= 3.0 * sigma, "p={p}: frame {frame_err} vs statevector {sv_err} ± {sigma}");
    }
}

#[test]
fn noiseless_frame_is_clean() {
    let h = fanout_errors(5, 0.0, 1000, 0, Some(1)).unwrap();
    assert_eq!(h.identity_probability(), 1.0);
    let c = fixtures::teleport();
    let h = run_pauli_frame(&c, &NoiseModel::noiseless().with_bell(1.0), 4000, 2, None, None).unwrap();
    // The source is measured, so only the destination carries the Bell error.
    assert!(h.counts.keys().all(|p| p.0[0] == disttrace::pauli::Pauli::I || p.0[1] == disttrace::pauli::Pauli::I));
    assert!(h.identity_probability() > 0.2 && h.identity_probability() < 0.3);
}

#[test]
fn frame_rejects_non_clifford() {
    let mut c = Circuit::with_qpus(1, 1);
    let q = c.add_qubit(0, QubitKind::Data);
    let l = c.open(1, Step::Other);
    c.put(l, Gate::single(OneQubit::T, q)).unwrap();
    assert!(matches!(run_pauli_frame(&c, &NoiseModel::noiseless(), 10, 0, None, None), Err(Error::Engine(_))));
}

#[test]
fn macros_need_permission() {
    let c = fixtures::cswap_lowered(1, Strategy::Teledata, false).unwrap();
    let r = run_statevector(&c, &NoiseModel::noiseless(), &RunConfig { shots: 4, ..RunConfig::default() });
    assert!(matches!(r, Err(Error::Abstraction(_))));
    let ok = RunConfig { shots: 4, allow_macros: true, ..RunConfig::default() };
    run_statevector(&c, &NoiseModel::noiseless(), &ok).unwrap();
}

#[test]
fn capacity_is_reported() {
    let spec = PartySpec::uniform(4, 6, PartyState::zero(6)).unwrap();
    let c = compile(&spec, Scheme::new(Variant::Naive), &Readout::basis(Basis::X)).unwrap();
    let r = run_statevector(&c, &NoiseModel::noiseless(), &RunConfig { shots: 2, ..RunConfig::default() });
    assert!(matches!(r, Err(Error::Capacity(_))));
}

#[test]
fn bad_noise_is_rejected() {
    let c = fixtures::teleport();
    let bad = NoiseModel { p2: 1.5, ..NoiseModel::noiseless() };
    assert!(run_statevector(&c, &bad, &RunConfig::default()).is_err());
}

#[test]
fn injection_checks() {
    let c = fixtures::cswap_lowered(1, Strategy::Teledata, false).unwrap();
    let site = c.layers.iter().position(|l| l.gates.iter().any(|g| matches!(g, Gate::Fanout { .. }))).unwrap();
    let fan = c.layers[site].gates.iter().find_map(|g| match g {
        Gate::Fanout { targets, .. } => Some(targets.len()),
        _ => None,
    });
    let mut h = PauliHistogram::default();
    assert!(matches!(inject_sampled_error(&c, site, &h), Err(Error::Injection(_))));
    h.record("ZZZZZZZZZZZZ".parse().unwrap());
    assert!(matches!(inject_sampled_error(&c, site, &h), Err(Error::Injection(_))));
    let h = fanout_errors(fan.unwrap(), 0.01, 1000, 0, Some(1)).unwrap();
    assert!(matches!(inject_sampled_error(&c, 0, &h), Err(Error::Injection(_))));
    let out = inject_sampled_error(&c, site, &h).unwrap();
    assert_eq!(out.layers.len(), c.layers.len() + 1);
    assert!(out.layers[site + 1].gates.iter().all(|g| matches!(g, Gate::PauliChannel { .. })));
    assert_eq!(out.depth(), c.depth());
}

#[test]
fn classical_fidelity_noiseless_is_one() {
    let cfg = FidelityConfig { shots_per_input: 16, histogram_shots: 1000, ..FidelityConfig::default() };
    for s in [Strategy::Telegate, Strategy::Teledata] {
        let r = classical_fidelity(1, s, 0.0, &cfg).unwrap();
        assert_eq!(r.fidelity, 1.0);
        assert_eq!(r.inputs, 8);
    }
}

#[test]
fn ensemble_members_are_recorded() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mix = PartyState::Ensemble(vec![
        (0.5, vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]),
        (0.5, vec![C::new(h, 0.0), C::new(h, 0.0)]),
    ]);
    let spec = PartySpec::uniform(2, 1, mix).unwrap();
    let c = compile(&spec, Scheme::new(Variant::Teledata), &Readout::basis(Basis::X)).unwrap();
    let r = run_statevector(&c, &NoiseModel::noiseless(), &RunConfig { shots: 400, trajectories: Some(40), ..RunConfig::default() })
        .unwrap();
    assert_eq!(r.trajectories.len(), 40);
    assert_eq!(r.shots(), 400);
    assert!(r.trajectories.iter().all(|t| t.members.len() == 2 && t.members.iter().all(|m| *m < 2)));
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), 401);
}
