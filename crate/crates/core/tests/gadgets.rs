mod common;

use common::*;
use disttrace::compiler::{fixtures, Strategy};
use disttrace::sim::{state_fidelity, swap_expected, NoiseModel};
use disttrace::Circuit;
use num_complex::Complex64 as C;

const TOL: f64 = 1e-9;

/// Checks the circuit maps the product input to `ideal` on its parties, over several branches.
fn check(c: Circuit, states: Vec<Vec<C>>, ideal: &[C], seed: u64) {
    let c = fixtures::with_inputs(c, states.into_iter().map(disttrace::state::PartyState::Pure).collect());
    let data = disttrace::sim::data_qubits(&c);
    let (f, _) = state_fidelity(&c, &NoiseModel::noiseless(), ideal, &data, 24, seed, Some(1)).unwrap();
    assert!(f >= 1.0 - TOL, "fidelity {f}");
}

#[test]
fn teleport_moves_the_state() {
    let mut r = rng(1);
    for s in 0..5 {
        let v = random_vector(2, &mut r);
        let c = fixtures::with_inputs(fixtures::teleport(), vec![disttrace::state::PartyState::Pure(v.clone())]);
        let dest = c.parties[1].clone();
        let (f, _) = state_fidelity(&c, &NoiseModel::noiseless(), &v, &dest, 24, s, Some(1)).unwrap();
        assert!(f >= 1.0 - TOL, "fidelity {f}");
    }
}

#[test]
fn telegate_cnot_matches_cnot() {
    let mut r = rng(2);
    for s in 0..5 {
        let a = random_vector(2, &mut r);
        let b = random_vector(2, &mut r);
        let ideal = permute(&kron(&[&a, &b]), |i| if i & 1 == 1 { i ^ 2 } else { i });
        check(fixtures::telegate_cnot(), vec![a, b], &ideal, s);
    }
}

fn cswap_ideal(n: usize, c: &[C], x: &[C], y: &[C]) -> Vec<C> {
    permute(&kron(&[c, x, y]), |i| swap_expected(i, n))
}

fn check_cswap(make: impl Fn(usize) -> Circuit, n: usize, seed: u64) {
    let mut r = rng(seed);
    for s in 0..3 {
        let c = random_vector(2, &mut r);
        let x = random_vector(1 << n, &mut r);
        let y = random_vector(1 << n, &mut r);
        let ideal = cswap_ideal(n, &c, &x, &y);
        check(make(n), vec![c, x, y], &ideal, seed * 10 + s);
    }
}

#[test]
fn teleported_toffoli_shell() {
    for n in 1..=2 {
        check_cswap(|n| fixtures::cswap_teleported(n, Strategy::Telegate).unwrap(), n, 3);
        check_cswap(|n| fixtures::cswap_teleported(n, Strategy::Teledata).unwrap(), n, 4);
    }
}

#[test]
fn parallel_toffoli_rewrite_with_macros() {
    for n in 1..=3 {
        check_cswap(|n| fixtures::cswap_lowered(n, Strategy::Teledata, false).unwrap(), n, 5);
    }
    for n in 1..=2 {
        check_cswap(|n| fixtures::cswap_lowered(n, Strategy::Telegate, false).unwrap(), n, 6);
    }
}

#[test]
fn cswap_lowerings_fully_expanded() {
    for n in 1..=2 {
        check_cswap(|n| fixtures::cswap_lowered(n, Strategy::Telegate, true).unwrap(), n, 7);
        check_cswap(|n| fixtures::cswap_lowered(n, Strategy::Teledata, true).unwrap(), n, 8);
    }
}

#[test]
fn fanout_gadget_on_superpositions() {
    let mut r = rng(9);
    for m in 1..=4 {
        let c = random_vector(2, &mut r);
        let t = random_vector(1 << m, &mut r);
        let mask = ((1 << m) - 1) << 1;
        let ideal = permute(&kron(&[&c, &t]), |i| if i & 1 == 1 { i ^ mask } else { i });
        check(fixtures::fanout(m).unwrap(), vec![c, t], &ideal, m as u64);
    }
}

#[test]
fn fanout_gadget_branch_exhaustive() {
    // Every basis input, every sampled measurement branch.
    for m in 1..=4 {
        for x in 0..(1usize << (m + 1)) {
            let mut c = vec![C::new(0.0, 0.0); 2];
            c[x & 1] = C::new(1.0, 0.0);
            let mut t = vec![C::new(0.0, 0.0); 1 << m];
            t[x >> 1] = C::new(1.0, 0.0);
            let out = if x & 1 == 1 { x ^ (((1 << m) - 1) << 1) } else { x };
            let mut ideal = vec![C::new(0.0, 0.0); 1 << (m + 1)];
            ideal[out] = C::new(1.0, 0.0);
            check(fixtures::fanout(m).unwrap(), vec![c, t], &ideal, x as u64);
        }
    }
}

#[test]
fn ghz_preparation() {
    for k in 2..=7 {
        let c = fixtures::ghz(k).unwrap();
        let g = c.parties.len();
        assert_eq!(g, k.div_ceil(2));
        let data = disttrace::sim::data_qubits(&c);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut ideal = vec![C::new(0.0, 0.0); 1 << g];
        ideal[0] = C::new(h, 0.0);
        ideal[(1 << g) - 1] = C::new(h, 0.0);
        let (f, _) = state_fidelity(&c, &NoiseModel::noiseless(), &ideal, &data, 24, k as u64, Some(1)).unwrap();
        assert!(f >= 1.0 - TOL, "k={k}: fidelity {f}");
        assert_eq!(c.depth(), disttrace::compiler::GHZ_DEPTH);
    }
}
