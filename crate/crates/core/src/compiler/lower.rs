//! CSwap lowering passes. Each streams the layers of a macro circuit into a fresh one.

use std::collections::HashMap;

use crate::circuit::{BlockForm, BlockGroup, BlockMember, Circuit, Gate, Layer, OneQubit, QubitId, QubitKind, Step};
use crate::error::{Error, Result};

use super::gadgets::{bell_pair, telegate_cnot, teleport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Gates travel: the remote register stays home and every interaction is a teleported gate.
    Telegate,
    /// Data travels: the remote register is teleported in, swapped locally and sent back.
    Teledata,
    /// All registers already share a QPU.
    Local,
}

struct Swap {
    control: QubitId,
    x: Vec<QubitId>,
    y: Vec<QubitId>,
}

/// Copies everything but the layers into a new circuit.
pub(crate) fn shell(c: &Circuit) -> Circuit {
    let mut out = c.clone();
    out.layers.clear();
    out
}

fn swaps_of(layer: &Layer, i: usize) -> Result<Option<Vec<Swap>>> {
    let cs = layer.gates.iter().filter(|g| matches!(g, Gate::CSwap { .. })).count();
    if cs == 0 {
        return Ok(None);
    }
    if cs != layer.gates.len() {
        return Err(Error::Lowering(format!("layer {i} mixes CSwap with other gates")));
    }
    let mut out = Vec::new();
    for g in &layer.gates {
        if let Gate::CSwap { control, left, right } = g {
            if left.iter().any(|q| q.qpu != control.qpu) {
                return Err(Error::Lowering(format!("CSwap left register is not local to its control in layer {i}")));
            }
            out.push(Swap { control: *control, x: left.clone(), y: right.clone() });
        }
    }
    Ok(Some(out))
}

pub fn lower(c: &Circuit, strategy: Strategy) -> Result<Circuit> {
    let mut out = shell(c);
    let mut incoming: HashMap<usize, Vec<QubitId>> = HashMap::new();
    for (i, layer) in c.layers.iter().enumerate() {
        let Some(swaps) = swaps_of(layer, i)? else {
            out.layers.push(layer.clone());
            continue;
        };
        for s in &swaps {
            let remote = s.y.iter().any(|q| q.qpu != s.control.qpu);
            let mixed = s.y.iter().any(|q| q.qpu != s.y[0].qpu);
            match strategy {
                Strategy::Local if remote => {
                    return Err(Error::Lowering(format!("CSwap in layer {i} is not local")));
                }
                Strategy::Telegate | Strategy::Teledata if !remote || mixed => {
                    return Err(Error::Lowering(format!(
                        "CSwap in layer {i} needs a right register on one other QPU"
                    )));
                }
                _ => {}
            }
        }
        match strategy {
            Strategy::Telegate => telegate_round(&mut out, &swaps),
            Strategy::Teledata => teledata_round(&mut out, &swaps, &mut incoming),
            Strategy::Local => local_round(&mut out, &swaps),
        }
    }
    out.validate()?;
    Ok(out)
}

fn new_group(out: &mut Circuit, form: BlockForm, members: Vec<BlockMember>) -> u32 {
    let id = out.blocks.len() as u32;
    out.blocks.push(BlockGroup { id, form, members });
    id
}

fn open_block(out: &mut Circuit, count: usize, id: u32) -> usize {
    let base = out.open(count, Step::ToffoliLocal);
    for l in &mut out.layers[base..] {
        l.block = Some(id);
    }
    base
}

fn widest(swaps: &[Swap]) -> usize {
    swaps.iter().map(|s| s.x.len()).max().unwrap_or(0)
}

fn telegate_round(out: &mut Circuit, swaps: &[Swap]) {
    struct Halves {
        cnot1: Vec<(QubitId, QubitId)>,
        tof: Vec<(QubitId, QubitId)>,
        cnot2: Vec<(QubitId, QubitId)>,
    }
    let mut pairs = Vec::new();
    let mut halves = Vec::new();
    for s in swaps {
        let (a, b) = (s.control.qpu, s.y[0].qpu);
        let mut h = Halves { cnot1: vec![], tof: vec![], cnot2: vec![] };
        for _ in &s.x {
            // (half with the CNOT control y on b, half with the target x on a)
            let (yb, xa, g) = bell_pair(out, b, a);
            pairs.push(g);
            h.cnot1.push((yb, xa));
            let (ta, tb, g) = bell_pair(out, a, b);
            pairs.push(g);
            h.tof.push((ta, tb));
            let (yb, xa, g) = bell_pair(out, b, a);
            pairs.push(g);
            h.cnot2.push((yb, xa));
        }
        halves.push(h);
    }
    out.bell_layer(Step::CnotTeleport, pairs);

    let t1 = out.open(3, Step::CnotTeleport);
    for (s, h) in swaps.iter().zip(&halves) {
        for l in 0..s.x.len() {
            telegate_cnot(out, t1, s.y[l], s.x[l], h.cnot1[l].0, h.cnot1[l].1);
        }
    }

    // Teleported Toffoli onto y: the target half on A stands in for y.
    let s1 = out.open(3, Step::ToffoliTeleport);
    for (s, h) in swaps.iter().zip(&halves) {
        for l in 0..s.x.len() {
            let (ta, tb) = h.tof[l];
            out.place(s1, Gate::cnot(tb, s.y[l]));
            out.place(s1, Gate::single(OneQubit::H, ta));
            let m = out.new_bit();
            out.place(s1 + 1, Gate::measure(tb, crate::circuit::Basis::X, m));
            out.place(s1 + 2, Gate::correct(ta, vec![m], vec![]));
        }
    }
    let members = swaps
        .iter()
        .zip(&halves)
        .map(|(s, h)| BlockMember {
            control: s.control,
            pairs: s.x.iter().zip(&h.tof).map(|(x, t)| (*x, t.0)).collect(),
        })
        .collect();
    let id = new_group(out, BlockForm::Ccz, members);
    let n = widest(swaps);
    let blk = open_block(out, n + 2, id);
    for (s, h) in swaps.iter().zip(&halves) {
        for l in 0..s.x.len() {
            let ta = h.tof[l].0;
            out.place(blk, Gate::single(OneQubit::H, ta));
            out.place(blk + 1 + l, Gate::Toffoli { controls: [s.control, s.x[l]], target: ta });
            out.place(blk + n + 1, Gate::single(OneQubit::H, ta));
        }
    }
    let s6 = out.open(2, Step::ToffoliTeleport);
    for (s, h) in swaps.iter().zip(&halves) {
        for l in 0..s.x.len() {
            let m = out.new_bit();
            out.place(s6, Gate::measure(h.tof[l].0, crate::circuit::Basis::X, m));
            out.place(s6 + 1, Gate::correct(s.y[l], vec![m], vec![]));
        }
    }

    let t2 = out.open(3, Step::CnotTeleport);
    for (s, h) in swaps.iter().zip(&halves) {
        for l in 0..s.x.len() {
            telegate_cnot(out, t2, s.y[l], s.x[l], h.cnot2[l].0, h.cnot2[l].1);
        }
    }
}

fn teledata_round(out: &mut Circuit, swaps: &[Swap], incoming: &mut HashMap<usize, Vec<QubitId>>) {
    let mut ins = Vec::new();
    let mut pairs = Vec::new();
    let mut sent = Vec::new();
    for s in swaps {
        let a = s.control.qpu;
        let b = s.y[0].qpu;
        let need = s.x.len();
        let pool = incoming.entry(a).or_default();
        while pool.len() < need {
            pool.push(out.add_qubit(a, QubitKind::Ancilla));
        }
        let anc = pool[..need].to_vec();
        let mut halves = Vec::new();
        for &q in &anc {
            let bh = out.add_qubit(b, QubitKind::BellHalf);
            pairs.push(Gate::BellPrep { halves: [q, bh], span: a.abs_diff(b) as u32 });
            halves.push(bh);
        }
        ins.push(anc);
        sent.push(halves);
    }
    out.bell_layer(Step::DataTeleport, pairs);
    let d = out.open(3, Step::DataTeleport);
    for (i, s) in swaps.iter().enumerate() {
        for l in 0..s.x.len() {
            teleport(out, d, s.y[l], sent[i][l], ins[i][l]);
            out.place(d + 2, Gate::Reset { qubit: s.y[l] });
        }
    }
    let c1 = out.open(1, Step::LocalCnot);
    for (i, s) in swaps.iter().enumerate() {
        for l in 0..s.x.len() {
            out.place(c1, Gate::cnot(ins[i][l], s.x[l]));
        }
    }
    let members = swaps
        .iter()
        .zip(&ins)
        .map(|(s, anc)| BlockMember { control: s.control, pairs: s.x.iter().copied().zip(anc.iter().copied()).collect() })
        .collect();
    let id = new_group(out, BlockForm::Toffoli, members);
    let blk = open_block(out, widest(swaps), id);
    for (i, s) in swaps.iter().enumerate() {
        for l in 0..s.x.len() {
            out.place(blk + l, Gate::Toffoli { controls: [s.control, s.x[l]], target: ins[i][l] });
        }
    }
    let c2 = out.open(1, Step::LocalCnot);
    for (i, s) in swaps.iter().enumerate() {
        for l in 0..s.x.len() {
            out.place(c2, Gate::cnot(ins[i][l], s.x[l]));
        }
    }
    let mut pairs = Vec::new();
    let mut back = Vec::new();
    for s in swaps {
        let a = s.control.qpu;
        let mut h = Vec::new();
        for &y in &s.y {
            let bh = out.add_qubit(a, QubitKind::BellHalf);
            pairs.push(Gate::BellPrep { halves: [bh, y], span: a.abs_diff(y.qpu) as u32 });
            h.push(bh);
        }
        back.push(h);
    }
    out.bell_layer(Step::DataTeleport, pairs);
    let d = out.open(3, Step::DataTeleport);
    for (i, s) in swaps.iter().enumerate() {
        for l in 0..s.x.len() {
            teleport(out, d, ins[i][l], back[i][l], s.y[l]);
            out.place(d + 2, Gate::Reset { qubit: ins[i][l] });
        }
    }
}

fn local_round(out: &mut Circuit, swaps: &[Swap]) {
    let c1 = out.open(1, Step::LocalCnot);
    for s in swaps {
        for (x, y) in s.x.iter().zip(&s.y) {
            out.place(c1, Gate::cnot(*y, *x));
        }
    }
    let members = swaps
        .iter()
        .map(|s| BlockMember { control: s.control, pairs: s.x.iter().copied().zip(s.y.iter().copied()).collect() })
        .collect();
    let id = new_group(out, BlockForm::Toffoli, members);
    let blk = open_block(out, widest(swaps), id);
    for s in swaps {
        for (l, (x, y)) in s.x.iter().zip(&s.y).enumerate() {
            out.place(blk + l, Gate::Toffoli { controls: [s.control, *x], target: *y });
        }
    }
    let c2 = out.open(1, Step::LocalCnot);
    for s in swaps {
        for (x, y) in s.x.iter().zip(&s.y) {
            out.place(c2, Gate::cnot(*y, *x));
        }
    }
}
