mod common;

use common::*;
use disttrace::bounds::*;
use disttrace::circuit::{Gate, Layer, Step};
use disttrace::compiler::{fixtures, Variant};
use disttrace::pauli::{Pauli, PauliString};
use disttrace::resources::closed_form;
use disttrace::sim::{state_fidelity, NoiseModel};
use disttrace::state::PartyState;
use disttrace::Circuit;
use num_complex::Complex64 as C;

/// The gadget with a fixed Pauli on the transmitted Bell half.
fn with_bell_pauli(c: &Circuit, p: Pauli) -> Circuit {
    let mut out = c.clone();
    let half = c.layers[0]
        .gates
        .iter()
        .find_map(|g| match g {
            Gate::BellPrep { halves, .. } => Some(halves[1]),
            _ => None,
        })
        .unwrap();
    let mut l = Layer::new(Step::Other);
    l.gates.push(Gate::PauliChannel { qubits: vec![half], table: vec![(PauliString(vec![p]), 1.0)] });
    out.layers.insert(1, l);
    out
}

/// Exact output fidelity when the pair is replaced by the maximally mixed state with probability `p`.
fn exact_fidelity(c: &Circuit, ideal: &[C], data: &[disttrace::QubitId], p: f64) -> f64 {
    let f = |pl| state_fidelity(&with_bell_pauli(c, pl), &NoiseModel::noiseless(), ideal, data, 8, 0, Some(1)).unwrap().0;
    (1.0 - p) * f(Pauli::I) + p / 4.0 * [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].into_iter().map(f).sum::<f64>()
}

fn cnot_case(a: Vec<C>, b: Vec<C>) -> (Circuit, Vec<C>, Vec<disttrace::QubitId>) {
    let ideal = permute(&kron(&[&a, &b]), |i| if i & 1 == 1 { i ^ 2 } else { i });
    let c = fixtures::with_inputs(fixtures::telegate_cnot(), vec![PartyState::Pure(a), PartyState::Pure(b)]);
    let data = disttrace::sim::data_qubits(&c);
    (c, ideal, data)
}

#[test]
fn telegate_cnot_respects_the_bound() {
    let mut r = rng(31);
    for p in [0.05, 0.1, 0.2] {
        let bound = bell_fidelity_bounds(p).unwrap().f_cnot;
        for _ in 0..30 {
            let (c, ideal, data) = cnot_case(random_vector(2, &mut r), random_vector(2, &mut r));
            assert!(exact_fidelity(&c, &ideal, &data, p) >= bound - 1e-12);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (c, ideal, data) = cnot_case(vec![C::new(h, 0.0), C::new(h, 0.0)], vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        assert!((exact_fidelity(&c, &ideal, &data, p) - bound).abs() < 1e-9);
    }
}

#[test]
fn noisy_simulation_matches_the_exact_channel() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (c, ideal, data) = cnot_case(vec![C::new(h, 0.0), C::new(h, 0.0)], vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]);
    let p = 0.2;
    let (f, se) = state_fidelity(&c, &NoiseModel::noiseless().with_bell(p), &ideal, &data, 100_000, 4, None).unwrap();
    let exact = exact_fidelity(&c, &ideal, &data, p);
    assert!((f - exact).abs() <= 5.0 * se, "{f} ± {se} vs {exact}");
}

#[test]
fn state_teleport_bound_is_tight_for_pure_inputs() {
    let mut r = rng(32);
    for p in [0.05, 0.1, 0.2] {
        let bound = bell_fidelity_bounds(p).unwrap().f_state;
        for _ in 0..20 {
            let v = random_vector(2, &mut r);
            let c = fixtures::with_inputs(fixtures::teleport(), vec![PartyState::Pure(v.clone())]);
            let dest = c.parties[1].clone();
            let f = exact_fidelity(&c, &v, &dest, p);
            assert!((f - bound).abs() < 1e-9, "{f} vs {bound}");
        }
    }
}

#[test]
fn exponents_follow_bell_counts() {
    for n in 1..=10 {
        for v in [Variant::Telegate, Variant::Teledata] {
            assert_eq!(exponent(v, n).unwrap(), closed_form(v, n, 4).unwrap().bell_pairs);
        }
    }
}

#[test]
fn k_max_is_monotone() {
    for v in [Variant::Telegate, Variant::Teledata] {
        let mut last = usize::MAX;
        for p in [1e-7, 1e-6, 1e-5, 1e-4] {
            let k = k_max(1e-3, 50, p, v).unwrap().k_max;
            assert!(k <= last);
            last = k;
        }
        let mut last = usize::MAX;
        for n in [1, 10, 100, 1000] {
            let k = k_max(1e-3, n, 1e-6, v).unwrap().k_max;
            assert!(k <= last);
            last = k;
        }
    }
    assert_eq!(k_max(1e-3, 100, 1e-6, Variant::Teledata).unwrap().k_max, 7);
    assert!(k_max(1.5, 1, 0.1, Variant::Telegate).is_err());
    assert!(k_max(0.1, 1, 0.1, Variant::Naive).is_err());
}

#[test]
fn overall_fidelity_decreases_with_k() {
    let mut last = 1.0;
    for k in 1..20 {
        let f = overall_fidelity(k, 0.02, 0.05).unwrap();
        assert!(f <= last);
        last = f;
    }
}

#[test]
fn csv_grid() {
    let csv = k_bound_csv(&[1e-6, 1e-5], &[1e-3], &[Variant::Telegate, Variant::Teledata], &[10, 100]).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "p,epsilon,scheme,n,k_max,k_linear");
    assert_eq!(lines.len(), 9);
    assert!(lines.contains(&"0.000001,0.001,telegate,100,5,5"));
}
