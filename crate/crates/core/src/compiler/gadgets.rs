//! Fixed-layout gadgets. Each writes into layers the caller has already opened.

use crate::circuit::{Basis, Circuit, Gate, OneQubit, QubitId, QubitKind, Step};

/// Moves the state of `src` into `dest`. `src_half` and `dest` must already share a Bell pair.
/// Uses layers `base..base + 3`. Returns (x-basis bit of src, z-basis bit of src_half).
pub(crate) fn teleport(c: &mut Circuit, base: usize, src: QubitId, src_half: QubitId, dest: QubitId) -> (crate::circuit::Cbit, crate::circuit::Cbit) {
    let ms = c.new_bit();
    let mb = c.new_bit();
    c.place(base, Gate::cnot(src, src_half));
    c.place(base + 1, Gate::measure(src, Basis::X, ms));
    c.place(base + 1, Gate::measure(src_half, Basis::Z, mb));
    c.place(base + 2, Gate::correct(dest, vec![mb], vec![ms]));
    (ms, mb)
}

/// CNOT between QPUs. `control_half` sits with the control, `target_half` with the target,
/// and the two halves share a Bell pair. Uses layers `base..base + 3`.
pub(crate) fn telegate_cnot(
    c: &mut Circuit,
    base: usize,
    control: QubitId,
    target: QubitId,
    control_half: QubitId,
    target_half: QubitId,
) {
    let ma = c.new_bit();
    let mb = c.new_bit();
    c.place(base, Gate::cnot(control, control_half));
    c.place(base, Gate::cnot(target_half, target));
    c.place(base + 1, Gate::measure(control_half, Basis::Z, ma));
    c.place(base + 1, Gate::measure(target_half, Basis::X, mb));
    c.place(base + 2, Gate::correct(target, vec![ma], vec![]));
    c.place(base + 2, Gate::correct(control, vec![], vec![mb]));
}

/// Fresh Bell pair between two QPUs; returns the halves and the BellPrep gate.
pub(crate) fn bell_pair(c: &mut Circuit, qa: usize, qb: usize) -> (QubitId, QubitId, Gate) {
    let a = c.add_qubit(qa, QubitKind::BellHalf);
    let b = c.add_qubit(qb, QubitKind::BellHalf);
    (a, b, Gate::BellPrep { halves: [a, b], span: qa.abs_diff(qb) as u32 })
}

pub const GHZ_DEPTH: usize = 9;

/// GHZ state with one qubit per host, in a fixed 9-layer schedule.
///
/// Consecutive hosts must be at distance 1 or 2 on the line. At distance 2 the QPU in between
/// holds a helper qubit that is entangled with the left host and later measured out in X.
///
/// Layer plan: H on every host; telegate CNOT host -> helper (1-3); local copy host -> w (2);
/// telegate CNOT helper-or-host -> next w (4-6); measure w in Z and helpers in X (7);
/// prefix-parity X fixes and one Z fix (8).
pub(crate) fn ghz_prep(c: &mut Circuit, hosts: &[usize]) -> Vec<QubitId> {
    assert!(!hosts.is_empty());
    let g: Vec<QubitId> = hosts.iter().map(|&q| c.add_qubit(q, QubitKind::Ghz)).collect();
    let mut bells = Vec::new();
    let mut helpers = Vec::new();
    let mut w = vec![None; hosts.len()];
    let mut pair_halves = Vec::new();
    let mut fuse_halves = Vec::new();
    for i in 0..hosts.len() - 1 {
        let (a, b) = (hosts[i], hosts[i + 1]);
        assert!(b > a && b - a <= 2, "GHZ hosts must be 1 or 2 apart");
        w[i + 1] = Some(c.add_qubit(b, QubitKind::Ancilla));
        let source = if b - a == 2 {
            let h = c.add_qubit(a + 1, QubitKind::Ancilla);
            let (p0, p1, bp) = bell_pair(c, a, a + 1);
            bells.push(bp);
            pair_halves.push((i, h, p0, p1));
            helpers.push(h);
            h
        } else {
            g[i]
        };
        let (f0, f1, bf) = bell_pair(c, source.qpu, b);
        bells.push(bf);
        fuse_halves.push((source, i + 1, f0, f1));
    }
    c.bell_layer(Step::GhzPrep, bells);
    let base = c.open(GHZ_DEPTH, Step::GhzPrep);
    for &q in &g {
        c.place(base, Gate::single(OneQubit::H, q));
    }
    for &(i, h, p0, p1) in &pair_halves {
        telegate_cnot(c, base + 1, g[i], h, p0, p1);
    }
    for (i, wi) in w.iter().enumerate() {
        if let Some(wi) = wi {
            c.place(base + 2, Gate::cnot(g[i], *wi));
        }
    }
    for &(src, j, f0, f1) in &fuse_halves {
        telegate_cnot(c, base + 4, src, w[j].unwrap(), f0, f1);
    }
    let mut parity = Vec::new();
    for (i, wi) in w.iter().enumerate() {
        if let Some(wi) = wi {
            let m = c.new_bit();
            c.place(base + 7, Gate::measure(*wi, Basis::Z, m));
            parity.push(m);
            c.place(base + 8, Gate::correct(g[i], parity.clone(), vec![]));
        }
    }
    let zfix: Vec<_> = helpers
        .iter()
        .map(|&h| {
            let s = c.new_bit();
            c.place(base + 7, Gate::measure(h, Basis::X, s));
            s
        })
        .collect();
    if !zfix.is_empty() {
        c.place(base + 8, Gate::correct(g[0], vec![], zfix));
    }
    g
}

pub const FANOUT_DEPTH: usize = 7;

/// Constant-depth Fanout in a fixed 7-layer schedule, using `anc.len() == targets.len()` ancillas.
///
/// Ancilla 0 copies the control. Following ancillas form Bell pairs (head, tail); each pair is
/// fused to the previous copy by a CNOT and a Z measurement of the head, which turns the tail
/// into a copy up to a prefix-parity X fix. Each copy feeds at most two targets. Copies are then
/// measured in X and their parity becomes a Z fix on the control. For even m the last ancilla
/// is spare. All ancillas end reset.
pub(crate) fn fanout(c: &mut Circuit, base: usize, control: QubitId, targets: &[QubitId], anc: &[QubitId]) {
    let m = targets.len();
    assert_eq!(anc.len(), m);
    assert!(m >= 1);
    // (copy qubit, number of head bits that fix it)
    let mut copies: Vec<(QubitId, usize)> = vec![(anc[0], 0)];
    let mut heads = Vec::new();
    c.place(base, Gate::cnot(control, anc[0]));
    let mut j = 1;
    while j + 1 < m {
        let (head, tail) = (anc[j], anc[j + 1]);
        let prev = copies.last().unwrap().0;
        c.place(base, Gate::single(OneQubit::H, head));
        c.place(base + 1, Gate::cnot(head, tail));
        c.place(base + 2, Gate::cnot(prev, head));
        let hb = c.new_bit();
        c.place(base + 3, Gate::measure(head, Basis::Z, hb));
        heads.push(hb);
        copies.push((tail, heads.len()));
        j += 2;
    }
    assert!(2 * copies.len() >= m);
    for (t, &target) in targets.iter().enumerate() {
        let (round, ci) = if t < copies.len() { (0, t) } else { (1, t - copies.len()) };
        let (copy, nfix) = copies[ci];
        c.place(base + 3 + round, Gate::cnot(copy, target));
        if nfix > 0 {
            c.place(base + 5, Gate::correct(target, heads[..nfix].to_vec(), vec![]));
        }
    }
    let zbits: Vec<_> = copies
        .iter()
        .map(|&(copy, _)| {
            let b = c.new_bit();
            c.place(base + 5, Gate::measure(copy, Basis::X, b));
            b
        })
        .collect();
    c.place(base + 6, Gate::correct(control, vec![], zbits));
    for &a in anc {
        c.place(base + 6, Gate::Reset { qubit: a });
    }
}
