//! Rewrites a block of Toffolis that share one control into constant depth.
//!
//! Per (x, t) pair the core applies, in ten layers,
//!
//! ```text
//! F(c;x) H(t) | F(c;t) | Tdg(t) | CX(x,t) | Tdg(t) | F(c;t) | Tdg(x) T(t) | CX(x,t) | F(c;x) T(t) | T(x) H(t)
//! ```
//!
//! where F is a Fanout over all pairs at once. That is CCZ(c,x,t) times Tdg on c per pair, so the
//! control gets a T^n fix slotted into layers where it is otherwise idle.

use crate::circuit::{BlockForm, BlockGroup, Circuit, Gate, Layer, OneQubit, QubitId, Step};
use crate::error::{Error, Result};

use super::lower::shell;

pub const CORE_DEPTH: usize = 10;

/// Phase gates that multiply to T^n.
pub fn t_power(n: usize) -> Vec<OneQubit> {
    use OneQubit::*;
    match n % 8 {
        0 => vec![],
        1 => vec![T],
        2 => vec![S],
        3 => vec![S, T],
        4 => vec![Z],
        5 => vec![Z, T],
        6 => vec![Sdg],
        _ => vec![Tdg],
    }
}

fn check_run(c: &Circuit, group: &BlockGroup, run: &[Layer], first: usize) -> Result<()> {
    let n = group.members.iter().map(|m| m.pairs.len()).max().unwrap_or(0);
    let extra = if group.form == BlockForm::Ccz { 2 } else { 0 };
    if run.len() != n + extra {
        return Err(Error::Lowering(format!("block {} spans {} layers, expected {}", group.id, run.len(), n + extra)));
    }
    let core = if group.form == BlockForm::Ccz { &run[1..run.len() - 1] } else { run };
    for (j, layer) in core.iter().enumerate() {
        for g in &layer.gates {
            let Gate::Toffoli { controls, target } = g else {
                return Err(Error::Lowering(format!("layer {} of block {} holds a {}", first + j, group.id, g.name())));
            };
            let ok = group
                .members
                .iter()
                .any(|m| m.control == controls[0] && m.pairs.get(j) == Some(&(controls[1], *target)));
            if !ok {
                return Err(Error::Lowering(format!(
                    "Toffoli in layer {} does not share its block's control",
                    first + j
                )));
            }
        }
    }
    let _ = c;
    Ok(())
}

/// Core layers for one group. Layer 0 and 8 carry the macro Fanouts on x, 1 and 5 on t.
fn core(group: &BlockGroup) -> Vec<Layer> {
    let toffoli = group.form == BlockForm::Toffoli;
    let steps = [
        Step::Fanout,
        Step::Fanout,
        Step::ToffoliLocal,
        Step::ToffoliLocal,
        Step::ToffoliLocal,
        Step::Fanout,
        Step::ToffoliLocal,
        Step::ToffoliLocal,
        Step::Fanout,
        Step::ToffoliLocal,
    ];
    let mut layers: Vec<Layer> = steps.iter().map(|s| Layer::new(*s)).collect();
    let one = |g, q| Gate::single(g, q);
    for m in &group.members {
        let xs: Vec<QubitId> = m.pairs.iter().map(|p| p.0).collect();
        let ts: Vec<QubitId> = m.pairs.iter().map(|p| p.1).collect();
        layers[0].gates.push(Gate::Fanout { control: m.control, targets: xs.clone() });
        layers[1].gates.push(Gate::Fanout { control: m.control, targets: ts.clone() });
        layers[5].gates.push(Gate::Fanout { control: m.control, targets: ts.clone() });
        layers[8].gates.push(Gate::Fanout { control: m.control, targets: xs.clone() });
        for (x, t) in xs.iter().zip(&ts) {
            if toffoli {
                layers[0].gates.push(one(OneQubit::H, *t));
            }
            layers[2].gates.push(one(OneQubit::Tdg, *t));
            layers[3].gates.push(Gate::cnot(*x, *t));
            layers[4].gates.push(one(OneQubit::Tdg, *t));
            layers[6].gates.push(one(OneQubit::Tdg, *x));
            layers[6].gates.push(one(OneQubit::T, *t));
            layers[7].gates.push(Gate::cnot(*x, *t));
            if toffoli {
                layers[8].gates.push(one(OneQubit::T, *t));
            }
            layers[9].gates.push(one(OneQubit::T, *x));
            layers[9].gates.push(one(if toffoli { OneQubit::H } else { OneQubit::T }, *t));
        }
        for (slot, g) in [2, 4].into_iter().zip(t_power(m.pairs.len())) {
            layers[slot].gates.push(one(g, m.control));
        }
    }
    layers
}

fn fits(gates: &[Gate], layer: &Layer) -> bool {
    gates.iter().all(|g| {
        !matches!(g, Gate::Measure { .. }) && g.qubits().iter().all(|q| !layer.touches(*q))
    })
}

pub fn rewrite(c: &Circuit) -> Result<Circuit> {
    let mut out = shell(c);
    out.blocks.clear();
    let mut i = 0;
    while i < c.layers.len() {
        let Some(id) = c.layers[i].block else {
            out.layers.push(c.layers[i].clone());
            i += 1;
            continue;
        };
        let group = c
            .blocks
            .iter()
            .find(|g| g.id == id)
            .ok_or_else(|| Error::Lowering(format!("layer {i} refers to unknown block {id}")))?;
        let end = (i..c.layers.len()).find(|&j| c.layers[j].block != Some(id)).unwrap_or(c.layers.len());
        check_run(c, group, &c.layers[i..end], i)?;
        let mut layers = core(group);
        // Sink a trailing single-qubit fix layer into the first core layer when nothing collides.
        if let Some(prev) = out.layers.last() {
            let movable = !prev.gates.is_empty()
                && prev.block.is_none()
                && prev.gates.iter().all(|g| matches!(g, Gate::PauliCorrect { .. } | Gate::Single { .. }))
                && fits(&prev.gates, &layers[0]);
            if movable {
                let prev = out.layers.pop().unwrap();
                layers[0].gates.extend(prev.gates);
            }
        }
        out.layers.extend(layers);
        i = end;
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_power_covers_residues() {
        let phase = |g: &OneQubit| match g {
            OneQubit::T => 1,
            OneQubit::S => 2,
            OneQubit::Z => 4,
            OneQubit::Sdg => 6,
            OneQubit::Tdg => 7,
            _ => unreachable!(),
        };
        for n in 0..20 {
            let p: usize = t_power(n).iter().map(phase).sum();
            assert_eq!(p % 8, n % 8);
            assert!(t_power(n).len() <= 2);
        }
    }
}
