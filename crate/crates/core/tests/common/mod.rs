#![allow(dead_code)]

use num_complex::Complex64 as C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use disttrace::state::{PartySpec, PartyState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-ish random vector: Gaussian components, normalised.
pub fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<C> {
    let mut g = || {
        // Box-Muller
        let u: f64 = rng.gen_range(1e-12..1.0);
        let v: f64 = rng.gen();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let v: Vec<C> = (0..dim).map(|_| C::new(g(), g())).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

pub fn random_pure<R: Rng>(n: usize, rng: &mut R) -> PartyState {
    PartyState::Pure(random_vector(1 << n, rng))
}

/// Either a random pure state or a two-member ensemble.
pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> PartyState {
    if rng.gen_bool(0.5) {
        random_pure(n, rng)
    } else {
        let w: f64 = rng.gen_range(0.1..0.9);
        PartyState::Ensemble(vec![(w, random_vector(1 << n, rng)), (1.0 - w, random_vector(1 << n, rng))])
    }
}

pub fn random_spec<R: Rng>(k: usize, n: usize, rng: &mut R) -> PartySpec {
    let states = (0..k).map(|_| random_state(n, rng)).collect();
    PartySpec::new(k, n, states).unwrap()
}

/// Tensor product, first factor on the lowest bits.
pub fn kron(parts: &[&[C]]) -> Vec<C> {
    let mut out = vec![C::new(1.0, 0.0)];
    for p in parts {
        let mut next = vec![C::new(0.0, 0.0); out.len() * p.len()];
        for (j, b) in p.iter().enumerate() {
            for (i, a) in out.iter().enumerate() {
                next[i + out.len() * j] = a * b;
            }
        }
        out = next;
    }
    out
}

/// Applies a basis permutation: amplitude at `i` moves to `f(i)`.
pub fn permute(v: &[C], f: impl Fn(usize) -> usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); v.len()];
    for (i, a) in v.iter().enumerate() {
        out[f(i)] += a;
    }
    out
}

pub fn pure(s: &PartyState) -> &[C] {
    match s {
        PartyState::Pure(v) => v,
        PartyState::Ensemble(_) => panic!("expected a pure state"),
    }
}

/// Random unitary (row-major) from the QR decomposition of a Gaussian matrix.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> Vec<C> {
    let cols: Vec<C> = (0..d).flat_map(|_| random_vector(d, rng)).collect();
    let m = nalgebra::DMatrix::from_column_slice(d, d, &cols);
    let q = m.qr().q();
    let mut out = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            out.push(q[(r, c)]);
        }
    }
    out
}
