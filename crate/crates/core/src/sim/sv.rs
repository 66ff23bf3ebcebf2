//! Dense statevector engine with qubits allocated on first use and dropped after measurement.

use num_complex::Complex64 as C;
use rand::Rng;

use crate::circuit::{Basis, OneQubit};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

use super::noise::{any_pauli, depolarize, NoiseModel};
use super::ops::{Op, Program};

const ZERO: C = C { re: 0.0, im: 0.0 };
const ONE: C = C { re: 1.0, im: 0.0 };

#[derive(Clone, Debug)]
enum Slot {
    /// Not in the vector; in this single-qubit state.
    Stored([C; 2]),
    Live(usize),
    /// Half of a pending Bell pair. The flag marks the transmitted half.
    Bell { partner: usize, transmitted: bool },
    /// Member of a pending input group.
    Input(usize),
}

pub(crate) struct Engine<'a> {
    amps: Vec<C>,
    slots: Vec<Slot>,
    /// Registry index held at each bit position.
    live: Vec<usize>,
    groups: Vec<(Vec<usize>, &'a [C])>,
    cap: usize,
    noise: NoiseModel,
    pub bits: Vec<bool>,
}

fn matrix(g: OneQubit) -> [[C; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C::new(0.0, 1.0);
    let t = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    match g {
        OneQubit::H => [[C::new(h, 0.0), C::new(h, 0.0)], [C::new(h, 0.0), C::new(-h, 0.0)]],
        OneQubit::X => [[ZERO, ONE], [ONE, ZERO]],
        OneQubit::Y => [[ZERO, -i], [i, ZERO]],
        OneQubit::Z => [[ONE, ZERO], [ZERO, -ONE]],
        OneQubit::S => [[ONE, ZERO], [ZERO, i]],
        OneQubit::Sdg => [[ONE, ZERO], [ZERO, -i]],
        OneQubit::T => [[ONE, ZERO], [ZERO, t]],
        OneQubit::Tdg => [[ONE, ZERO], [ZERO, t.conj()]],
    }
}

fn apply_matrix(m: [[C; 2]; 2], v: [C; 2]) -> [C; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub(crate) fn pauli_gate(p: Pauli) -> Option<OneQubit> {
    match p {
        Pauli::I => None,
        Pauli::X => Some(OneQubit::X),
        Pauli::Y => Some(OneQubit::Y),
        Pauli::Z => Some(OneQubit::Z),
    }
}

impl<'a> Engine<'a> {
    /// `inputs` pairs registry indices with the chosen pure vector of each input group.
    pub fn new(num_qubits: usize, inputs: Vec<(Vec<usize>, &'a [C])>, cap: usize, noise: NoiseModel, num_bits: usize) -> Self {
        let mut slots = vec![Slot::Stored([ONE, ZERO]); num_qubits];
        for (g, (qs, _)) in inputs.iter().enumerate() {
            for &q in qs {
                slots[q] = Slot::Input(g);
            }
        }
        Engine { amps: vec![ONE], slots, live: Vec::new(), groups: inputs, cap, noise, bits: vec![false; num_bits] }
    }

    #[cfg(test)]
    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    /// Appends qubits `qs` in joint state `v` (qs[0] is the lowest bit of v's index).
    fn add_block(&mut self, qs: &[usize], v: &[C]) -> Result<()> {
        if self.live.len() + qs.len() > self.cap {
            return Err(Error::Capacity(format!(
                "{} live qubits exceed the cap of {}",
                self.live.len() + qs.len(),
                self.cap
            )));
        }
        let len = self.amps.len();
        let mut out = vec![ZERO; len * v.len()];
        for (j, vj) in v.iter().enumerate() {
            if *vj == ZERO {
                continue;
            }
            for (i, a) in self.amps.iter().enumerate() {
                out[i + len * j] = a * vj;
            }
        }
        self.amps = out;
        for &q in qs {
            self.slots[q] = Slot::Live(self.live.len());
            self.live.push(q);
        }
        Ok(())
    }

    fn ensure<R: Rng>(&mut self, q: usize, rng: &mut R) -> Result<usize> {
        match self.slots[q].clone() {
            Slot::Live(p) => return Ok(p),
            Slot::Stored(v) => self.add_block(&[q], &v)?,
            Slot::Bell { partner, transmitted } => {
                let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                self.add_block(&[q, partner], &[h, ZERO, ZERO, h])?;
                let sent = if transmitted { q } else { partner };
                if self.noise.p_bell > 0.0 && rng.gen::<f64>() < self.noise.p_bell {
                    if let Some(g) = pauli_gate(any_pauli(rng)) {
                        self.gate(g, sent, rng)?;
                    }
                }
            }
            Slot::Input(g) => {
                let (qs, v) = self.groups[g].clone();
                self.add_block(&qs, v)?;
            }
        }
        match self.slots[q] {
            Slot::Live(p) => Ok(p),
            _ => unreachable!("qubit was just allocated"),
        }
    }

    fn gate<R: Rng>(&mut self, g: OneQubit, q: usize, rng: &mut R) -> Result<()> {
        let p = self.ensure(q, rng)?;
        let m = matrix(g);
        let bit = 1usize << p;
        if m[0][1] == ZERO && m[1][0] == ZERO {
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a *= if i & bit == 0 { m[0][0] } else { m[1][1] };
            }
        } else {
            for i in 0..self.amps.len() {
                if i & bit == 0 {
                    let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                    self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
        Ok(())
    }

    /// Swaps the amplitudes of basis pairs (i, i ^ flip) where `mask` bits of i equal `want`.
    fn permute(&mut self, mask: usize, want: usize, flip: usize) {
        for i in 0..self.amps.len() {
            if i & mask == want {
                self.amps.swap(i, i ^ flip);
            }
        }
    }

    fn cnot<R: Rng>(&mut self, c: usize, t: usize, rng: &mut R) -> Result<()> {
        let pc = self.ensure(c, rng)?;
        let pt = self.ensure(t, rng)?;
        self.permute((1 << pc) | (1 << pt), 1 << pc, 1 << pt);
        Ok(())
    }

    fn pauli_noise<R: Rng>(&mut self, p: f64, qs: &[usize], rng: &mut R) -> Result<()> {
        if let Some(e) = depolarize(rng, p, qs.len()) {
            for (&q, &pl) in qs.iter().zip(&e) {
                if let Some(g) = pauli_gate(pl) {
                    self.gate(g, q, rng)?;
                }
            }
        }
        Ok(())
    }

    /// Projects bit position `p` onto a sampled outcome and removes it from the vector.
    fn collapse<R: Rng>(&mut self, p: usize, rng: &mut R) -> bool {
        let bit = 1usize << p;
        let p1: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        let total: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let outcome = rng.gen::<f64>() * total < p1;
        let norm = if outcome { p1 } else { total - p1 }.sqrt();
        let last = self.live.len() - 1;
        let mut out = vec![ZERO; self.amps.len() / 2];
        let keep = if outcome { bit } else { 0 };
        for (i, a) in self.amps.iter().enumerate() {
            if i & bit != keep {
                continue;
            }
            // The last qubit moves into the freed position.
            let mut j = i & !bit;
            if p != last {
                let top = (j >> last) & 1;
                j = (j & !(1 << last)) | (top << p);
            }
            out[j] = a / norm;
        }
        self.amps = out;
        let q = self.live.swap_remove(p);
        if p != last {
            let moved = self.live[p];
            self.slots[moved] = Slot::Live(p);
        }
        self.slots[q] = Slot::Stored([ONE, ZERO]);
        outcome
    }

    /// Rotates a measurement basis onto Z.
    fn to_z<R: Rng>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<()> {
        match basis {
            Basis::Z => Ok(()),
            Basis::X => self.gate(OneQubit::H, q, rng),
            Basis::Y => {
                self.gate(OneQubit::Sdg, q, rng)?;
                self.gate(OneQubit::H, q, rng)
            }
        }
    }

    fn measure<R: Rng>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<bool> {
        self.to_z(q, basis, rng)?;
        let p = self.ensure(q, rng)?;
        let o = self.collapse(p, rng);
        let z = if o { [ZERO, ONE] } else { [ONE, ZERO] };
        let post = match basis {
            Basis::Z => z,
            Basis::X => apply_matrix(matrix(OneQubit::H), z),
            Basis::Y => apply_matrix(matrix(OneQubit::S), apply_matrix(matrix(OneQubit::H), z)),
        };
        self.slots[q] = Slot::Stored(post);
        Ok(o)
    }

    fn discard<R: Rng>(&mut self, q: usize, rng: &mut R) {
        match self.slots[q].clone() {
            Slot::Live(p) => {
                self.collapse(p, rng);
            }
            Slot::Bell { partner, .. } => self.slots[partner] = Slot::Stored([ONE, ZERO]),
            Slot::Input(g) => {
                // Materialize so the rest of the group keeps its reduced state.
                let (qs, v) = self.groups[g].clone();
                if self.add_block(&qs, v).is_ok() {
                    if let Slot::Live(p) = self.slots[q] {
                        self.collapse(p, rng);
                    }
                }
            }
            Slot::Stored(_) => {}
        }
        self.slots[q] = Slot::Stored([ONE, ZERO]);
    }

    fn parity(&self, bits: &[usize]) -> bool {
        bits.iter().fold(false, |acc, b| acc ^ self.bits[*b])
    }

    /// Executes one op. Terminal measurements are skipped and handled by the caller.
    pub fn step<R: Rng>(&mut self, op: &Op, rng: &mut R) -> Result<()> {
        let n = self.noise;
        match op {
            Op::One(g, q) => {
                self.gate(*g, *q, rng)?;
                self.pauli_noise(n.p1, &[*q], rng)?;
            }
            Op::Cnot(c, t) => {
                self.cnot(*c, *t, rng)?;
                self.pauli_noise(n.p2, &[*c, *t], rng)?;
            }
            Op::Toffoli(a, b, t) => {
                let (pa, pb, pt) = (self.ensure(*a, rng)?, self.ensure(*b, rng)?, self.ensure(*t, rng)?);
                let m = (1 << pa) | (1 << pb);
                self.permute(m | (1 << pt), m, 1 << pt);
                self.pauli_noise(n.p2, &[*a, *b, *t], rng)?;
            }
            Op::CSwap(c, l, r) => {
                let pc = self.ensure(*c, rng)?;
                for (x, y) in l.iter().zip(r) {
                    let (px, py) = (self.ensure(*x, rng)?, self.ensure(*y, rng)?);
                    self.permute((1 << pc) | (1 << px) | (1 << py), (1 << pc) | (1 << px), (1 << px) | (1 << py));
                }
            }
            Op::Fanout(c, ts) => {
                for t in ts {
                    self.cnot(*c, *t, rng)?;
                }
            }
            Op::Measure { terminal: true, .. } => {}
            Op::Measure { q, basis, bit, .. } => {
                let o = self.measure(*q, *basis, rng)?;
                let flip = n.p_meas > 0.0 && rng.gen::<f64>() < n.p_meas;
                self.bits[*bit] = o ^ flip;
            }
            Op::Reset(q) => self.discard(*q, rng),
            Op::Bell(a, b) => {
                self.discard(*a, rng);
                self.discard(*b, rng);
                self.slots[*a] = Slot::Bell { partner: *b, transmitted: false };
                self.slots[*b] = Slot::Bell { partner: *a, transmitted: true };
            }
            Op::Correct { q, x, z } => {
                if self.parity(x) {
                    self.gate(OneQubit::X, *q, rng)?;
                }
                if self.parity(z) {
                    self.gate(OneQubit::Z, *q, rng)?;
                }
            }
            Op::Channel { qs, cum, paulis } => {
                let u = rng.gen::<f64>();
                let i = cum.partition_point(|c| *c <= u).min(paulis.len() - 1);
                for (&q, &pl) in qs.iter().zip(&paulis[i]) {
                    if let Some(g) = pauli_gate(pl) {
                        self.gate(g, q, rng)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn run<R: Rng>(&mut self, prog: &Program, rng: &mut R) -> Result<()> {
        for op in &prog.ops {
            self.step(op, rng)?;
        }
        Ok(())
    }

    /// Joint outcome distribution of the terminal measurements, in program order.
    /// Index bit j is the outcome of the j-th terminal measurement.
    pub fn terminal_distribution<R: Rng>(&mut self, prog: &Program, rng: &mut R) -> Result<(Vec<usize>, Vec<f64>)> {
        let mut positions = Vec::new();
        let mut bits = Vec::new();
        for op in &prog.ops {
            if let Op::Measure { q, basis, bit, terminal: true } = op {
                self.to_z(*q, *basis, rng)?;
                positions.push(*q);
                bits.push(*bit);
            }
        }
        if positions.len() > 24 {
            return Err(Error::Capacity(format!("{} terminal measurements", positions.len())));
        }
        let pos: Vec<usize> = positions.iter().map(|&q| self.ensure(q, rng)).collect::<Result<_>>()?;
        let mut probs = vec![0.0; 1 << pos.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut j = 0;
            for (t, &p) in pos.iter().enumerate() {
                j |= ((i >> p) & 1) << t;
            }
            probs[j] += a.norm_sqr();
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok((bits, probs))
    }

    /// ⟨v|ρ|v⟩ for the reduced state ρ of `qs` (qs[0] the lowest index bit of `v`).
    pub fn overlap<R: Rng>(&mut self, qs: &[usize], v: &[C], rng: &mut R) -> Result<f64> {
        let pos: Vec<usize> = qs.iter().map(|&q| self.ensure(q, rng)).collect::<Result<_>>()?;
        let mask: usize = pos.iter().map(|p| 1usize << p).sum();
        let sub = |i: usize| pos.iter().enumerate().fold(0, |acc, (t, &p)| acc | (((i >> p) & 1) << t));
        // Project each environment branch onto v.
        let mut by_env: std::collections::BTreeMap<usize, C> = std::collections::BTreeMap::new();
        let mut total = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if *a != ZERO {
                *by_env.entry(i & !mask).or_insert(ZERO) += v[sub(i)].conj() * a;
                total += a.norm_sqr();
            }
        }
        Ok(by_env.values().map(|x| x.norm_sqr()).sum::<f64>() / total)
    }

    #[cfg(test)]
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}
