//! Baseline: teleport register slices so every QPU holds one slice of every party, run the
//! swap test locally on each QPU, and teleport the slices home.

use crate::circuit::{new_circuit, Gate, Input, Level, QubitKind, Step};
use crate::error::Result;
use crate::state::PartySpec;

use super::{add_readout, check_readout, gadgets, interleave, Readout};

pub fn naive_macro(spec: &PartySpec, readout: &Readout) -> Result<crate::circuit::Circuit> {
    check_readout(spec, readout)?;
    let (k, n) = (spec.k, spec.n);
    let mut c = new_circuit(k, n)?;
    c.level = Level::Macro;
    let s = n.div_ceil(k);
    let active = n.div_ceil(s);
    let home: Vec<Vec<_>> = (0..k).map(|p| (0..n).map(|_| c.add_qubit(p, QubitKind::Data)).collect()).collect();
    c.parties = home.clone();
    c.inputs = home.iter().zip(&spec.states).map(|(q, st)| Input { qubits: q.clone(), state: st.clone() }).collect();

    // Where slice l of party p is worked on, and the Bell halves that move it there.
    let mut work = home.clone();
    let mut out_pairs = Vec::new();
    let mut moves = Vec::new();
    for p in 0..k {
        for l in 0..n {
            let j = l / s;
            if j == p {
                continue;
            }
            let dest = c.add_qubit(j, QubitKind::Data);
            let half = c.add_qubit(p, QubitKind::BellHalf);
            out_pairs.push(Gate::BellPrep { halves: [half, dest], span: p.abs_diff(j) as u32 });
            moves.push((p, l, half, dest));
            work[p][l] = dest;
        }
    }
    c.bell_layer(Step::Distribution, out_pairs);
    let d = c.open(3, Step::Distribution);
    for &(p, l, half, dest) in &moves {
        gadgets::teleport(&mut c, d, home[p][l], half, dest);
    }

    let roots = gadgets::ghz_prep(&mut c, &(0..active).collect::<Vec<_>>());
    let w = k.div_ceil(2);
    let controls: Vec<Vec<_>> = roots
        .iter()
        .map(|&r| {
            let mut v = vec![r];
            v.extend((1..w).map(|_| c.add_qubit(r.qpu, QubitKind::Ghz)));
            v
        })
        .collect();
    if w > 1 {
        let f = c.open(1, Step::Fanout);
        for cs in &controls {
            c.place(f, Gate::Fanout { control: cs[0], targets: cs[1..].to_vec() });
        }
    }

    let order = interleave(k);
    let reg = |j: usize, pos: usize| -> Vec<_> { (j * s..((j + 1) * s).min(n)).map(|l| work[order[pos]][l]).collect() };
    let r1 = c.open(1, Step::CSwap);
    let r2 = if k > 2 { c.open(1, Step::CSwap) } else { usize::MAX };
    for (j, cs) in controls.iter().enumerate() {
        for (i, &g) in cs.iter().enumerate() {
            if 2 * i + 1 < k {
                c.place(r1, Gate::CSwap { control: g, left: reg(j, 2 * i), right: reg(j, 2 * i + 1) });
            }
            if i >= 1 {
                c.place(r2, Gate::CSwap { control: g, left: reg(j, 2 * i), right: reg(j, 2 * i - 1) });
            }
        }
    }

    let mut back_pairs = Vec::new();
    let mut backs = Vec::new();
    for &(p, l, _, dest) in &moves {
        let half = c.add_qubit(dest.qpu, QubitKind::BellHalf);
        back_pairs.push(Gate::BellPrep { halves: [half, home[p][l]], span: p.abs_diff(dest.qpu) as u32 });
        backs.push((dest, half, home[p][l]));
    }
    c.bell_layer(Step::Distribution, back_pairs);
    let d = c.open(3, Step::Distribution);
    for &(src, half, dest) in &backs {
        gadgets::teleport(&mut c, d, src, half, dest);
    }

    let ghz: Vec<_> = controls.into_iter().flatten().collect();
    add_readout(&mut c, &ghz, &home[0], readout);
    c.validate()?;
    Ok(c)
}
