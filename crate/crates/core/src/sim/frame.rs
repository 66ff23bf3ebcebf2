//! Pauli-frame sampling of Clifford circuits: tracks only the deviation from the ideal run.

use rand::Rng;

use crate::circuit::{Basis, OneQubit};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

use super::noise::{any_pauli, depolarize, NoiseModel};
use super::ops::{Op, Program};

pub(crate) fn check_clifford(prog: &Program) -> Result<()> {
    for op in &prog.ops {
        let bad = match op {
            Op::One(g, _) => !g.is_clifford(),
            Op::Toffoli(..) | Op::CSwap(..) => true,
            _ => false,
        };
        if bad {
            return Err(Error::Engine("the Pauli-frame engine only runs Clifford circuits".into()));
        }
    }
    Ok(())
}

pub(crate) struct Frame {
    x: Vec<bool>,
    z: Vec<bool>,
    /// Flips of recorded bits relative to the ideal run.
    flips: Vec<bool>,
}

impl Frame {
    pub fn new(qubits: usize, bits: usize) -> Self {
        Frame { x: vec![false; qubits], z: vec![false; qubits], flips: vec![false; bits] }
    }

    fn xor(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        self.x[q] ^= x;
        self.z[q] ^= z;
    }

    fn noise<R: Rng>(&mut self, rng: &mut R, p: f64, qs: &[usize]) {
        if let Some(e) = depolarize(rng, p, qs.len()) {
            for (&q, &pl) in qs.iter().zip(&e) {
                self.xor(q, pl);
            }
        }
    }

    fn cnot(&mut self, c: usize, t: usize) {
        self.x[t] ^= self.x[c];
        self.z[c] ^= self.z[t];
    }

    fn parity(&self, bits: &[usize]) -> bool {
        bits.iter().fold(false, |a, b| a ^ self.flips[*b])
    }

    pub fn run<R: Rng>(&mut self, prog: &Program, noise: &NoiseModel, rng: &mut R) {
        for op in &prog.ops {
            match op {
                Op::One(g, q) => {
                    match g {
                        OneQubit::H => std::mem::swap(&mut self.x[*q], &mut self.z[*q]),
                        OneQubit::S | OneQubit::Sdg => self.z[*q] ^= self.x[*q],
                        _ => {}
                    }
                    self.noise(rng, noise.p1, &[*q]);
                }
                Op::Cnot(c, t) => {
                    self.cnot(*c, *t);
                    self.noise(rng, noise.p2, &[*c, *t]);
                }
                Op::Fanout(c, ts) => {
                    for t in ts {
                        self.cnot(*c, *t);
                    }
                }
                Op::Toffoli(..) | Op::CSwap(..) => unreachable!("rejected by check_clifford"),
                Op::Measure { q, basis, bit, .. } => {
                    let (x, z) = (self.x[*q], self.z[*q]);
                    let anti = match basis {
                        Basis::Z => x,
                        Basis::X => z,
                        Basis::Y => x ^ z,
                    };
                    let flip = noise.p_meas > 0.0 && rng.gen::<f64>() < noise.p_meas;
                    self.flips[*bit] = anti ^ flip;
                    match basis {
                        Basis::Z => self.z[*q] = false,
                        Basis::X => self.x[*q] = false,
                        Basis::Y if x && z => {
                            self.x[*q] = false;
                            self.z[*q] = false;
                        }
                        Basis::Y => {}
                    }
                }
                Op::Reset(q) => {
                    self.x[*q] = false;
                    self.z[*q] = false;
                }
                Op::Bell(a, b) => {
                    for q in [*a, *b] {
                        self.x[q] = false;
                        self.z[q] = false;
                    }
                    if noise.p_bell > 0.0 && rng.gen::<f64>() < noise.p_bell {
                        let p = any_pauli(rng);
                        self.xor(*b, p);
                    }
                }
                Op::Correct { q, x, z } => {
                    if self.parity(x) {
                        self.x[*q] ^= true;
                    }
                    if self.parity(z) {
                        self.z[*q] ^= true;
                    }
                }
                Op::Channel { qs, cum, paulis } => {
                    let u = rng.gen::<f64>();
                    let i = cum.partition_point(|c| *c <= u).min(paulis.len() - 1);
                    for (&q, &pl) in qs.iter().zip(&paulis[i]) {
                        self.xor(q, pl);
                    }
                }
            }
        }
    }

    pub fn residual(&self, data: &[usize]) -> PauliString {
        PauliString(data.iter().map(|&q| Pauli::from_bits(self.x[q], self.z[q])).collect())
    }
}
