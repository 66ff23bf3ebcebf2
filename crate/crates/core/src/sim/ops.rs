//! Circuit flattened to registry indices for the engines.

use crate::circuit::{Basis, Circuit, Gate, Level, OneQubit};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

#[derive(Clone, Debug)]
pub(crate) enum Op {
    One(OneQubit, usize),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
    CSwap(usize, Vec<usize>, Vec<usize>),
    Fanout(usize, Vec<usize>),
    Measure { q: usize, basis: Basis, bit: usize, terminal: bool },
    Reset(usize),
    Bell(usize, usize),
    Correct { q: usize, x: Vec<usize>, z: Vec<usize> },
    Channel { qs: Vec<usize>, cum: Vec<f64>, paulis: Vec<Vec<Pauli>> },
}

impl Op {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Op::One(_, q) | Op::Measure { q, .. } | Op::Reset(q) | Op::Correct { q, .. } => vec![*q],
            Op::Cnot(a, b) | Op::Bell(a, b) => vec![*a, *b],
            Op::Toffoli(a, b, c) => vec![*a, *b, *c],
            Op::CSwap(c, l, r) => std::iter::once(*c).chain(l.iter().copied()).chain(r.iter().copied()).collect(),
            Op::Fanout(c, t) => std::iter::once(*c).chain(t.iter().copied()).collect(),
            Op::Channel { qs, .. } => qs.clone(),
        }
    }
}

pub(crate) struct Program {
    pub ops: Vec<Op>,
    pub num_qubits: usize,
    pub num_bits: usize,
}

/// Flattens layers in order. Measurements whose qubit is never touched again and whose bit is
/// never read are marked terminal so the statevector engine can sample them in bulk.
pub(crate) fn flatten(c: &Circuit, allow_macros: bool) -> Result<Program> {
    if !allow_macros && (c.level == Level::Macro || c.has_macros()) {
        return Err(Error::Abstraction("circuit still holds macro gates; expand it first".into()));
    }
    let idx = c.index_map();
    let ix = |q: &crate::circuit::QubitId| -> Result<usize> {
        idx.get(q).copied().ok_or_else(|| Error::InvalidCircuit(format!("unregistered qubit {q}")))
    };
    let mut ops = Vec::new();
    for g in c.gates() {
        ops.push(match g {
            Gate::Single { gate, qubit } => Op::One(*gate, ix(qubit)?),
            Gate::Cnot { control, target } => Op::Cnot(ix(control)?, ix(target)?),
            Gate::Toffoli { controls, target } => Op::Toffoli(ix(&controls[0])?, ix(&controls[1])?, ix(target)?),
            Gate::CSwap { control, left, right } => Op::CSwap(
                ix(control)?,
                left.iter().map(ix).collect::<Result<_>>()?,
                right.iter().map(ix).collect::<Result<_>>()?,
            ),
            Gate::Fanout { control, targets } => {
                Op::Fanout(ix(control)?, targets.iter().map(ix).collect::<Result<_>>()?)
            }
            Gate::Measure { qubit, basis, bit } => {
                Op::Measure { q: ix(qubit)?, basis: *basis, bit: bit.0 as usize, terminal: false }
            }
            Gate::Reset { qubit } => Op::Reset(ix(qubit)?),
            Gate::BellPrep { halves, .. } => Op::Bell(ix(&halves[0])?, ix(&halves[1])?),
            Gate::PauliCorrect { qubit, x_if, z_if } => Op::Correct {
                q: ix(qubit)?,
                x: x_if.iter().map(|b| b.0 as usize).collect(),
                z: z_if.iter().map(|b| b.0 as usize).collect(),
            },
            Gate::PauliChannel { qubits, table } => {
                let total: f64 = table.iter().map(|(_, w)| w).sum();
                if total <= 0.0 {
                    return Err(Error::InvalidCircuit("PauliChannel with zero total weight".into()));
                }
                let mut acc = 0.0;
                let cum = table
                    .iter()
                    .map(|(_, w)| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                Op::Channel {
                    qs: qubits.iter().map(ix).collect::<Result<_>>()?,
                    cum,
                    paulis: table.iter().map(|(p, _)| p.0.clone()).collect(),
                }
            }
        });
    }
    let mut touched = vec![false; c.qubits.len()];
    let mut read = vec![false; c.num_bits as usize];
    for op in ops.iter_mut().rev() {
        if let Op::Measure { q, bit, terminal, .. } = op {
            *terminal = !touched[*q] && !read[*bit];
        }
        if let Op::Correct { x, z, .. } = op {
            for b in x.iter().chain(z.iter()) {
                read[*b] = true;
            }
        }
        for q in op.qubits() {
            touched[q] = true;
        }
    }
    Ok(Program { ops, num_qubits: c.qubits.len(), num_bits: c.num_bits as usize })
}
