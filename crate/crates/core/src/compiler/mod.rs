//! Builds the distributed multivariate swap test and lowers it to physical gates.
//!
//! The macro circuit places one party per QPU on a line, interleaved so that every CSwap acts
//! on neighbours, and applies two rounds of CSwaps controlled by a GHZ state. Passes then lower
//! the CSwaps (telegate, teledata or local), rewrite the Toffoli blocks into Fanouts and expand
//! the Fanouts.

pub mod fanout;
pub(crate) mod gadgets;
pub mod lower;
mod naive;
pub mod toffoli;

use std::fmt;
use std::str::FromStr;

use crate::circuit::{new_circuit, Basis, Circuit, Gate, Input, Level, OneQubit, QubitId, QubitKind, Step};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::state::{PartySpec, PartyState};

pub use gadgets::{FANOUT_DEPTH, GHZ_DEPTH};
pub use lower::Strategy;
pub use naive::naive_macro;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Telegate,
    Teledata,
    Naive,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "telegate" => Ok(Variant::Telegate),
            "teledata" => Ok(Variant::Teledata),
            "naive" => Ok(Variant::Naive),
            _ => Err(Error::InvalidParameter(format!("unknown scheme {s:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Telegate => "telegate",
            Variant::Teledata => "teledata",
            Variant::Naive => "naive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub variant: Variant,
    /// Expand Fanout macros into physical gates. Off leaves them in place.
    pub fanout_expansion: bool,
}

impl Scheme {
    pub fn new(variant: Variant) -> Self {
        Scheme { variant, fanout_expansion: true }
    }

    pub fn passes(&self) -> Vec<Pass> {
        let mut p = match self.variant {
            Variant::Telegate => vec![Pass::SwapTest, Pass::Lower(Strategy::Telegate)],
            Variant::Teledata => vec![Pass::SwapTest, Pass::Lower(Strategy::Teledata)],
            Variant::Naive => vec![Pass::Naive, Pass::Lower(Strategy::Local)],
        };
        p.push(Pass::ParallelToffoli);
        if self.fanout_expansion {
            p.push(Pass::ExpandFanout);
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pass {
    /// Builds the interleaved macro circuit.
    SwapTest,
    /// Builds the distribute-then-compute-locally macro circuit.
    Naive,
    Lower(Strategy),
    ParallelToffoli,
    ExpandFanout,
}

impl Pass {
    pub fn name(&self) -> &'static str {
        match self {
            Pass::SwapTest => "swap_test",
            Pass::Naive => "naive",
            Pass::Lower(Strategy::Telegate) => "lower_telegate",
            Pass::Lower(Strategy::Teledata) => "lower_teledata",
            Pass::Lower(Strategy::Local) => "lower_local",
            Pass::ParallelToffoli => "parallel_toffoli",
            Pass::ExpandFanout => "expand_fanout",
        }
    }

    /// Parses a comma-separated pipeline such as `swap_test,lower_teledata,parallel_toffoli`.
    pub fn parse_list(s: &str) -> Result<Vec<Pass>> {
        let all = [
            Pass::SwapTest,
            Pass::Naive,
            Pass::Lower(Strategy::Telegate),
            Pass::Lower(Strategy::Teledata),
            Pass::Lower(Strategy::Local),
            Pass::ParallelToffoli,
            Pass::ExpandFanout,
        ];
        let passes = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                all.iter()
                    .find(|a| a.name() == p)
                    .copied()
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown pass {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match passes.first() {
            Some(Pass::SwapTest | Pass::Naive) => {}
            _ => return Err(Error::InvalidParameter("pipeline must start with swap_test or naive".into())),
        }
        if passes[1..].iter().any(|p| matches!(p, Pass::SwapTest | Pass::Naive)) {
            return Err(Error::InvalidParameter("a builder pass may only come first".into()));
        }
        Ok(passes)
    }
}

/// What the readout measures.
#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    /// X estimates the real part of the trace, Y the imaginary part.
    pub basis: Basis,
    /// Pauli observable on the first party, measured alongside the GHZ qubits.
    pub observable: Option<PauliString>,
}

impl Readout {
    pub fn basis(basis: Basis) -> Self {
        Readout { basis, observable: None }
    }
}

/// Party placed at each line position: 0, k-1, 1, k-2, ...
pub fn interleave(k: usize) -> Vec<usize> {
    (0..k).map(|p| if p % 2 == 0 { p / 2 } else { k - 1 - (p - 1) / 2 }).collect()
}

/// Runs a pipeline and returns the circuit after every pass.
pub fn compile_passes(spec: &PartySpec, readout: &Readout, passes: &[Pass]) -> Result<Vec<(Pass, Circuit)>> {
    let mut out: Vec<(Pass, Circuit)> = Vec::new();
    for &p in passes {
        let next = match (p, out.last()) {
            (Pass::SwapTest, None) => swap_test_macro(spec, readout)?,
            (Pass::Naive, None) => naive_macro(spec, readout)?,
            (Pass::SwapTest | Pass::Naive, Some(_)) | (_, None) => {
                return Err(Error::InvalidParameter("a builder pass must come first, once".into()));
            }
            (Pass::Lower(s), Some((_, c))) => lower::lower(c, s)?,
            (Pass::ParallelToffoli, Some((_, c))) => toffoli::rewrite(c)?,
            (Pass::ExpandFanout, Some((_, c))) => fanout::expand(c)?,
        };
        out.push((p, next));
    }
    Ok(out)
}

pub fn compile(spec: &PartySpec, scheme: Scheme, readout: &Readout) -> Result<Circuit> {
    let mut all = compile_passes(spec, readout, &scheme.passes())?;
    Ok(all.pop().expect("pipeline is never empty").1)
}

pub(crate) fn check_readout(spec: &PartySpec, readout: &Readout) -> Result<()> {
    spec.validate()?;
    if readout.basis == Basis::Z {
        return Err(Error::InvalidParameter("swap-test readout basis must be X or Y".into()));
    }
    if let Some(o) = &readout.observable {
        if o.len() != spec.n {
            return Err(Error::InvalidParameter(format!("observable {o} has {} letters, expected {}", o.len(), spec.n)));
        }
    }
    Ok(())
}

/// Two readout layers: GHZ qubits in the product basis, plus the observable on `data`.
pub(crate) fn add_readout(c: &mut Circuit, ghz: &[QubitId], data: &[QubitId], readout: &Readout) {
    let r = c.open(2, Step::Readout);
    for (i, &g) in ghz.iter().enumerate() {
        let b = c.new_bit();
        if i == 0 && readout.basis == Basis::Y {
            c.place(r, Gate::single(OneQubit::Sdg, g));
            c.place(r + 1, Gate::measure(g, Basis::X, b));
        } else {
            c.place(r, Gate::single(OneQubit::H, g));
            c.place(r + 1, Gate::measure(g, Basis::Z, b));
        }
        c.readout.push(b);
    }
    if let Some(o) = &readout.observable {
        for (&q, p) in data.iter().zip(&o.0) {
            let basis = match p {
                Pauli::I => continue,
                Pauli::X => {
                    c.place(r, Gate::single(OneQubit::H, q));
                    Basis::Z
                }
                Pauli::Y => {
                    c.place(r, Gate::single(OneQubit::Sdg, q));
                    Basis::X
                }
                Pauli::Z => Basis::Z,
            };
            let b = c.new_bit();
            c.place(r + 1, Gate::measure(q, basis, b));
            c.readout.push(b);
        }
    }
}

/// Interleaved macro circuit: GHZ prep, two CSwap rounds, readout.
pub fn swap_test_macro(spec: &PartySpec, readout: &Readout) -> Result<Circuit> {
    check_readout(spec, readout)?;
    let (k, n) = (spec.k, spec.n);
    let mut c = new_circuit(k, n)?;
    c.level = Level::Macro;
    let order = interleave(k);
    let mut regs = vec![Vec::new(); k];
    for (pos, &party) in order.iter().enumerate() {
        regs[pos] = (0..n).map(|_| c.add_qubit(pos, QubitKind::Data)).collect();
        let _ = party;
    }
    c.parties = (0..k).map(|p| regs[order.iter().position(|&x| x == p).unwrap()].clone()).collect();
    c.inputs = c
        .parties
        .iter()
        .zip(&spec.states)
        .map(|(q, s)| Input { qubits: q.clone(), state: s.clone() })
        .collect();
    let hosts: Vec<usize> = (0..k).step_by(2).collect();
    let ghz = gadgets::ghz_prep(&mut c, &hosts);
    let r1 = c.open(1, Step::CSwap);
    for (i, &g) in ghz.iter().enumerate() {
        if 2 * i + 1 < k {
            c.place(r1, Gate::CSwap { control: g, left: regs[2 * i].clone(), right: regs[2 * i + 1].clone() });
        }
    }
    // With two parties the second round is empty and is left out.
    if k > 2 {
        let r2 = c.open(1, Step::CSwap);
        for (i, &g) in ghz.iter().enumerate().skip(1) {
            c.place(r2, Gate::CSwap { control: g, left: regs[2 * i].clone(), right: regs[2 * i - 1].clone() });
        }
    }
    let first = c.parties[0].clone();
    add_readout(&mut c, &ghz, &first, readout);
    c.validate()?;
    Ok(c)
}

/// Ready-made small circuits for gadget tests and noise characterisation.
pub mod fixtures {
    use super::*;

    /// One CSwap macro between QPU 0 (control and left register) and QPU 1.
    /// Parties are `[control]`, left, right. Nothing is measured.
    pub fn cswap_macro(n: usize) -> Result<Circuit> {
        let mut c = new_circuit(2, n)?;
        c.level = Level::Macro;
        let control = c.add_qubit(0, QubitKind::Data);
        let x: Vec<_> = (0..n).map(|_| c.add_qubit(0, QubitKind::Data)).collect();
        let y: Vec<_> = (0..n).map(|_| c.add_qubit(1, QubitKind::Data)).collect();
        let l = c.open(1, Step::CSwap);
        c.place(l, Gate::CSwap { control, left: x.clone(), right: y.clone() });
        c.parties = vec![vec![control], x, y];
        Ok(c)
    }

    /// `cswap_macro` lowered only: Toffoli blocks stay as plain Toffoli layers.
    pub fn cswap_teleported(n: usize, strategy: Strategy) -> Result<Circuit> {
        lower::lower(&cswap_macro(n)?, strategy)
    }

    /// `cswap_macro` lowered and rewritten; Fanouts are expanded when `expand` is set.
    pub fn cswap_lowered(n: usize, strategy: Strategy, expand: bool) -> Result<Circuit> {
        let c = toffoli::rewrite(&lower::lower(&cswap_macro(n)?, strategy)?)?;
        if expand {
            fanout::expand(&c)
        } else {
            Ok(c)
        }
    }

    /// A Fanout from one control onto `m` targets, expanded. Parties are `[control]` and the targets.
    pub fn fanout(m: usize) -> Result<Circuit> {
        if m == 0 {
            return Err(Error::InvalidParameter("Fanout needs at least one target".into()));
        }
        let mut c = Circuit::with_qpus(1, m);
        c.level = Level::Macro;
        let control = c.add_qubit(0, QubitKind::Data);
        let targets: Vec<_> = (0..m).map(|_| c.add_qubit(0, QubitKind::Data)).collect();
        let l = c.open(1, Step::Fanout);
        c.place(l, Gate::Fanout { control, targets: targets.clone() });
        c.parties = vec![vec![control], targets];
        fanout::expand(&c)
    }

    /// The same Fanout left as a macro.
    pub fn fanout_macro(m: usize) -> Circuit {
        let mut c = Circuit::with_qpus(1, m);
        c.level = Level::Macro;
        let control = c.add_qubit(0, QubitKind::Data);
        let targets: Vec<_> = (0..m).map(|_| c.add_qubit(0, QubitKind::Data)).collect();
        let l = c.open(1, Step::Fanout);
        c.place(l, Gate::Fanout { control, targets: targets.clone() });
        c.parties = vec![vec![control], targets];
        c
    }

    /// Teleports one qubit from QPU 0 to QPU 1. Parties are `[source]`, `[destination]`.
    pub fn teleport() -> Circuit {
        let mut c = Circuit::with_qpus(2, 1);
        let src = c.add_qubit(0, QubitKind::Data);
        let half = c.add_qubit(0, QubitKind::BellHalf);
        let dest = c.add_qubit(1, QubitKind::Data);
        c.bell_layer(Step::DataTeleport, vec![Gate::BellPrep { halves: [half, dest], span: 1 }]);
        let base = c.open(3, Step::DataTeleport);
        gadgets::teleport(&mut c, base, src, half, dest);
        c.parties = vec![vec![src], vec![dest]];
        c
    }

    /// CNOT from QPU 0 to QPU 1 through one Bell pair. Parties are `[control]`, `[target]`.
    pub fn telegate_cnot() -> Circuit {
        let mut c = Circuit::with_qpus(2, 1);
        let control = c.add_qubit(0, QubitKind::Data);
        let target = c.add_qubit(1, QubitKind::Data);
        let (a, b, g) = gadgets::bell_pair(&mut c, 0, 1);
        c.bell_layer(Step::CnotTeleport, vec![g]);
        let base = c.open(3, Step::CnotTeleport);
        gadgets::telegate_cnot(&mut c, base, control, target, a, b);
        c.parties = vec![vec![control], vec![target]];
        c
    }

    /// GHZ preparation alone on `k` QPUs using the swap-test host layout. Parties are the GHZ qubits.
    pub fn ghz(k: usize) -> Result<Circuit> {
        let mut c = new_circuit(k, 1)?;
        let hosts: Vec<usize> = (0..k).step_by(2).collect();
        let g = gadgets::ghz_prep(&mut c, &hosts);
        c.parties = g.into_iter().map(|q| vec![q]).collect();
        Ok(c)
    }

    /// Inputs for a fixture from one state per party.
    pub fn with_inputs(mut c: Circuit, states: Vec<PartyState>) -> Circuit {
        c.inputs = c.parties.iter().cloned().zip(states).map(|(qubits, state)| Input { qubits, state }).collect();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, n: usize) -> PartySpec {
        PartySpec::uniform(k, n, PartyState::zero(n)).unwrap()
    }

    #[test]
    fn interleave_order() {
        assert_eq!(interleave(2), vec![0, 1]);
        assert_eq!(interleave(5), vec![0, 4, 1, 3, 2]);
        assert_eq!(interleave(6), vec![0, 5, 1, 4, 2, 3]);
    }

    #[test]
    fn macro_cswaps_act_on_neighbours() {
        for k in 2..8 {
            let c = swap_test_macro(&spec(k, 2), &Readout::basis(Basis::X)).unwrap();
            let swaps: Vec<_> = c.gates().filter(|g| matches!(g, Gate::CSwap { .. })).collect();
            assert_eq!(swaps.len(), k - 1);
            for g in swaps {
                if let Gate::CSwap { left, right, .. } = g {
                    assert_eq!(left[0].qpu.abs_diff(right[0].qpu), 1);
                }
            }
        }
    }

    #[test]
    fn pipeline_parsing() {
        let p = Pass::parse_list("swap_test,lower_teledata,parallel_toffoli,expand_fanout").unwrap();
        assert_eq!(p.len(), 4);
        assert!(Pass::parse_list("lower_teledata").is_err());
        assert!(Pass::parse_list("swap_test,bogus").is_err());
        assert!(Pass::parse_list("swap_test,naive").is_err());
    }

    #[test]
    fn z_readout_is_rejected() {
        assert!(swap_test_macro(&spec(2, 1), &Readout::basis(Basis::Z)).is_err());
    }
}
