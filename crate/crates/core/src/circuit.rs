//! Distributed circuit IR: qubit registry, layered gates, classical bits and the depth metric.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::state::PartyState;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QubitKind {
    Data,
    Ghz,
    Ancilla,
    BellHalf,
}

impl QubitKind {
    fn tag(self) -> &'static str {
        match self {
            QubitKind::Data => "data",
            QubitKind::Ghz => "ghz",
            QubitKind::Ancilla => "anc",
            QubitKind::BellHalf => "bell",
        }
    }
}

/// A qubit, written `qpu:kind:index` in the text format (e.g. `2:anc:0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId {
    pub qpu: usize,
    pub kind: QubitKind,
    pub local_index: usize,
}

impl QubitId {
    pub fn new(qpu: usize, kind: QubitKind, local_index: usize) -> Self {
        QubitId { qpu, kind, local_index }
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.qpu, self.kind.tag(), self.local_index)
    }
}

impl FromStr for QubitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad qubit id {s:?}"));
        let mut it = s.split(':');
        let qpu = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let kind = match it.next().ok_or_else(bad)? {
            "data" => QubitKind::Data,
            "ghz" => QubitKind::Ghz,
            "anc" => QubitKind::Ancilla,
            "bell" => QubitKind::BellHalf,
            _ => return Err(bad()),
        };
        let local_index = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(QubitId { qpu, kind, local_index })
    }
}

impl Serialize for QubitId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QubitId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cbit(pub u32);

/// XOR of classical bits. Empty means constant 0.
pub type Parity = Vec<Cbit>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OneQubit {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
}

impl OneQubit {
    pub fn is_clifford(self) -> bool {
        !matches!(self, OneQubit::T | OneQubit::Tdg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Gate {
    Single {
        gate: OneQubit,
        qubit: QubitId,
    },
    Cnot {
        control: QubitId,
        target: QubitId,
    },
    Toffoli {
        controls: [QubitId; 2],
        target: QubitId,
    },
    /// Controlled swap of two equal-width registers.
    CSwap {
        control: QubitId,
        left: Vec<QubitId>,
        right: Vec<QubitId>,
    },
    Fanout {
        control: QubitId,
        targets: Vec<QubitId>,
    },
    Measure {
        qubit: QubitId,
        basis: Basis,
        bit: Cbit,
    },
    Reset {
        qubit: QubitId,
    },
    /// Fresh |Φ+⟩ on two qubits. `span` is the number of line links the pair covers.
    BellPrep {
        halves: [QubitId; 2],
        #[serde(default = "one")]
        span: u32,
    },
    /// Applies X^(xor of x_if) Z^(xor of z_if).
    PauliCorrect {
        qubit: QubitId,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        x_if: Parity,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        z_if: Parity,
    },
    /// Stochastic Pauli drawn from `table` each shot. Used to black-box a noisy macro.
    PauliChannel {
        qubits: Vec<QubitId>,
        table: Vec<(PauliString, f64)>,
    },
}

fn one() -> u32 {
    1
}

impl Gate {
    pub fn single(gate: OneQubit, qubit: QubitId) -> Gate {
        Gate::Single { gate, qubit }
    }

    pub fn cnot(control: QubitId, target: QubitId) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn measure(qubit: QubitId, basis: Basis, bit: Cbit) -> Gate {
        Gate::Measure { qubit, basis, bit }
    }

    pub fn correct(qubit: QubitId, x_if: Parity, z_if: Parity) -> Gate {
        Gate::PauliCorrect { qubit, x_if, z_if }
    }

    pub fn bell(a: QubitId, b: QubitId) -> Gate {
        Gate::BellPrep { halves: [a, b], span: 1 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Single { gate, .. } => match gate {
                OneQubit::H => "H",
                OneQubit::X => "X",
                OneQubit::Y => "Y",
                OneQubit::Z => "Z",
                OneQubit::S => "S",
                OneQubit::Sdg => "Sdg",
                OneQubit::T => "T",
                OneQubit::Tdg => "Tdg",
            },
            Gate::Cnot { .. } => "CNOT",
            Gate::Toffoli { .. } => "Toffoli",
            Gate::CSwap { .. } => "CSwap",
            Gate::Fanout { .. } => "Fanout",
            Gate::Measure { .. } => "Measure",
            Gate::Reset { .. } => "Reset",
            Gate::BellPrep { .. } => "BellPrep",
            Gate::PauliCorrect { .. } => "PauliCorrect",
            Gate::PauliChannel { .. } => "PauliChannel",
        }
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        match self {
            Gate::Single { qubit, .. }
            | Gate::Measure { qubit, .. }
            | Gate::Reset { qubit }
            | Gate::PauliCorrect { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], *target],
            Gate::CSwap { control, left, right } => {
                let mut v = vec![*control];
                v.extend(left);
                v.extend(right);
                v
            }
            Gate::Fanout { control, targets } => {
                let mut v = vec![*control];
                v.extend(targets);
                v
            }
            Gate::BellPrep { halves, .. } => halves.to_vec(),
            Gate::PauliChannel { qubits, .. } => qubits.clone(),
        }
    }

    /// Classical bits this gate reads.
    pub fn reads(&self) -> Vec<Cbit> {
        match self {
            Gate::PauliCorrect { x_if, z_if, .. } => x_if.iter().chain(z_if).copied().collect(),
            _ => Vec::new(),
        }
    }

    pub fn writes(&self) -> Option<Cbit> {
        match self {
            Gate::Measure { bit, .. } => Some(*bit),
            _ => None,
        }
    }

    pub fn is_macro(&self) -> bool {
        matches!(self, Gate::CSwap { .. } | Gate::Fanout { .. })
    }

    /// Gates that occupy no time step: pre-shared entanglement and noise annotations.
    pub fn is_free(&self) -> bool {
        matches!(self, Gate::BellPrep { .. } | Gate::PauliChannel { .. })
    }

    pub fn is_clifford(&self) -> bool {
        match self {
            Gate::Single { gate, .. } => gate.is_clifford(),
            Gate::Toffoli { .. } | Gate::CSwap { .. } => false,
            _ => true,
        }
    }
}

/// Which protocol step a layer belongs to. Used for per-step resource reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    GhzPrep,
    Distribution,
    CnotTeleport,
    ToffoliTeleport,
    DataTeleport,
    LocalCnot,
    CSwap,
    ToffoliLocal,
    Fanout,
    Readout,
    Other,
}

impl Step {
    pub fn label(self) -> &'static str {
        match self {
            Step::GhzPrep => "ghz_prep",
            Step::Distribution => "distribution",
            Step::CnotTeleport => "cnot_teleport",
            Step::ToffoliTeleport => "toffoli_teleport",
            Step::DataTeleport => "data_teleport",
            Step::LocalCnot => "local_cnot",
            Step::CSwap => "cswap",
            Step::ToffoliLocal => "toffoli_non_fanout",
            Step::Fanout => "fanout",
            Step::Readout => "readout",
            Step::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub step: Step,
    /// Marks layers belonging to a pending shared-control Toffoli block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<u32>,
    pub gates: Vec<Gate>,
}

impl Layer {
    pub fn new(step: Step) -> Self {
        Layer { step, block: None, gates: Vec::new() }
    }

    /// A layer made only of free gates costs no depth. An empty layer is an idle step and counts.
    pub fn counts_for_depth(&self) -> bool {
        self.gates.is_empty() || self.gates.iter().any(|g| !g.is_free())
    }

    pub fn touches(&self, q: QubitId) -> bool {
        self.gates.iter().any(|g| g.qubits().contains(&q))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Macro,
    Physical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockForm {
    /// n Toffoli layers.
    Toffoli,
    /// An H layer on the targets, n Toffoli layers, an H layer on the targets.
    Ccz,
}

/// A group of shared-control Toffoli blocks that run in the same layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGroup {
    pub id: u32,
    pub form: BlockForm,
    pub members: Vec<BlockMember>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMember {
    pub control: QubitId,
    /// (second control, target) per Toffoli.
    pub pairs: Vec<(QubitId, QubitId)>,
}

/// Initial state of a group of qubits. Not a layer: preparation is outside the depth budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub qubits: Vec<QubitId>,
    pub state: PartyState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    NewLayer,
    Earliest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub format_version: u32,
    /// QPUs on a line: QPU i links to i-1 and i+1.
    pub qpus: usize,
    pub n: usize,
    pub level: Level,
    pub qubits: Vec<QubitId>,
    pub num_bits: u32,
    pub layers: Vec<Layer>,
    #[serde(default)]
    pub inputs: Vec<Input>,
    /// Bits whose parity is the estimator sample.
    #[serde(default)]
    pub readout: Vec<Cbit>,
    /// Data register of each party, by party index.
    #[serde(default)]
    pub parties: Vec<Vec<QubitId>>,
    #[serde(default)]
    pub blocks: Vec<BlockGroup>,
    /// Ancilla pool reserved for Fanout expansion, per QPU.
    #[serde(default)]
    pub fanout_pool: Vec<Vec<QubitId>>,
}

pub fn new_circuit(k: usize, n: usize) -> Result<Circuit> {
    if k < 2 || n < 1 {
        return Err(Error::InvalidParameter(format!("need k >= 2 and n >= 1, got k={k}, n={n}")));
    }
    Ok(Circuit::with_qpus(k, n))
}

impl Circuit {
    /// Unchecked constructor, also used for single-QPU fixtures.
    pub fn with_qpus(qpus: usize, n: usize) -> Circuit {
        Circuit {
            format_version: FORMAT_VERSION,
            qpus,
            n,
            level: Level::Physical,
            qubits: Vec::new(),
            num_bits: 0,
            layers: Vec::new(),
            inputs: Vec::new(),
            readout: Vec::new(),
            parties: Vec::new(),
            blocks: Vec::new(),
            fanout_pool: vec![Vec::new(); qpus],
        }
    }

    pub fn add_qubit(&mut self, qpu: usize, kind: QubitKind) -> QubitId {
        let idx = self.qubits.iter().filter(|q| q.qpu == qpu && q.kind == kind).count();
        let q = QubitId::new(qpu, kind, idx);
        self.qubits.push(q);
        q
    }

    pub fn new_bit(&mut self) -> Cbit {
        let b = Cbit(self.num_bits);
        self.num_bits += 1;
        b
    }

    /// Fanout ancilla pool of `qpu`, grown to at least `m` qubits.
    pub fn pool(&mut self, qpu: usize, m: usize) -> Vec<QubitId> {
        while self.fanout_pool[qpu].len() < m {
            let q = self.add_qubit(qpu, QubitKind::Ancilla);
            self.fanout_pool[qpu].push(q);
        }
        self.fanout_pool[qpu][..m].to_vec()
    }

    /// Appends `count` empty layers and returns the index of the first.
    pub fn open(&mut self, count: usize, step: Step) -> usize {
        let base = self.layers.len();
        self.layers.extend((0..count).map(|_| Layer::new(step)));
        base
    }

    /// Places a gate in a specific layer, rejecting operand collisions.
    pub fn put(&mut self, layer: usize, gate: Gate) -> Result<()> {
        let l = self
            .layers
            .get_mut(layer)
            .ok_or_else(|| Error::Schedule(format!("layer {layer} does not exist")))?;
        let ops = gate.qubits();
        for g in &l.gates {
            if g.qubits().iter().any(|q| ops.contains(q)) {
                return Err(Error::Schedule(format!(
                    "{} collides with {} in layer {layer}",
                    gate.name(),
                    g.name()
                )));
            }
        }
        l.gates.push(gate);
        Ok(())
    }

    /// Like `put` but panics on collision. Compiler fragments use it where collisions are bugs.
    pub(crate) fn place(&mut self, layer: usize, gate: Gate) {
        if let Err(e) = self.put(layer, gate) {
            panic!("fragment layout bug: {e}");
        }
    }

    /// Adds a layer holding only BellPrep gates (depth zero).
    pub(crate) fn bell_layer(&mut self, step: Step, pairs: Vec<Gate>) {
        if pairs.is_empty() {
            return;
        }
        let l = self.open(1, step);
        for g in pairs {
            self.place(l, g);
        }
    }

    pub fn append(&mut self, gate: Gate, schedule: Schedule) -> Result<usize> {
        let registered: BTreeSet<QubitId> = self.qubits.iter().copied().collect();
        for q in gate.qubits() {
            if !registered.contains(&q) {
                return Err(Error::InvalidCircuit(format!("qubit {q} is not registered")));
            }
        }
        let layer = match schedule {
            Schedule::NewLayer => self.layers.len(),
            Schedule::Earliest => {
                let ops = gate.qubits();
                let reads = gate.reads();
                let mut earliest = 0;
                for (i, l) in self.layers.iter().enumerate() {
                    let busy = l.gates.iter().any(|g| {
                        g.qubits().iter().any(|q| ops.contains(q))
                            || g.writes().is_some_and(|b| reads.contains(&b))
                    });
                    if busy {
                        earliest = i + 1;
                    }
                }
                earliest
            }
        };
        if layer == self.layers.len() {
            let step = self.layers.last().map_or(Step::Other, |l| l.step);
            self.open(1, step);
        }
        self.put(layer, gate)?;
        Ok(layer)
    }

    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.counts_for_depth()).count()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flat_map(|l| l.gates.iter())
    }

    pub fn has_macros(&self) -> bool {
        self.gates().any(Gate::is_macro)
    }

    pub fn index_map(&self) -> HashMap<QubitId, usize> {
        self.qubits.iter().enumerate().map(|(i, q)| (*q, i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCircuit(m));
        let registry = self.index_map();
        if registry.len() != self.qubits.len() {
            return bad("duplicate qubit id".into());
        }
        for q in &self.qubits {
            if q.qpu >= self.qpus {
                return bad(format!("qubit {q} sits on a QPU outside the line"));
            }
        }
        let mut written = vec![false; self.num_bits as usize];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut writes_here = Vec::new();
            for g in &layer.gates {
                let ops = g.qubits();
                if ops.is_empty() {
                    return bad(format!("{} without operands in layer {i}", g.name()));
                }
                for q in &ops {
                    if !registry.contains_key(q) {
                        return bad(format!("unregistered qubit {q} in layer {i}"));
                    }
                    if !seen.insert(*q) {
                        return bad(format!("qubit {q} used twice in layer {i}"));
                    }
                }
                let spans = ops.iter().any(|q| q.qpu != ops[0].qpu);
                let remote_ok = matches!(g, Gate::BellPrep { .. })
                    || (self.level == Level::Macro && matches!(g, Gate::CSwap { .. }));
                if spans && !remote_ok {
                    return bad(format!("{} spans QPUs in layer {i}", g.name()));
                }
                match g {
                    Gate::CSwap { left, right, .. } if left.len() != right.len() || left.is_empty() => {
                        return bad(format!("CSwap with unequal registers in layer {i}"));
                    }
                    Gate::Fanout { targets, .. } if targets.is_empty() => {
                        return bad(format!("Fanout without targets in layer {i}"));
                    }
                    Gate::BellPrep { halves, .. } if halves[0] == halves[1] => {
                        return bad(format!("BellPrep on a single qubit in layer {i}"));
                    }
                    Gate::PauliChannel { qubits, table } => {
                        if table.iter().any(|(p, w)| p.len() != qubits.len() || !(0.0..=1.0).contains(w)) {
                            return bad(format!("malformed PauliChannel in layer {i}"));
                        }
                    }
                    _ => {}
                }
                if self.level == Level::Physical && g.is_macro() {
                    return bad(format!("macro {} in a physical circuit", g.name()));
                }
                for b in g.reads() {
                    if b.0 >= self.num_bits || !written[b.0 as usize] {
                        return bad(format!("bit {} read before it is measured (layer {i})", b.0));
                    }
                }
                if let Some(b) = g.writes() {
                    if b.0 >= self.num_bits || written[b.0 as usize] || writes_here.contains(&b) {
                        return bad(format!("bit {} written twice or out of range", b.0));
                    }
                    writes_here.push(b);
                }
            }
            for b in writes_here {
                written[b.0 as usize] = true;
            }
        }
        for b in &self.readout {
            if b.0 >= self.num_bits {
                return bad(format!("readout bit {} out of range", b.0));
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn deserialize(text: &str) -> Result<Circuit> {
        let c: Circuit = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if c.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format_version {}", c.format_version)));
        }
        if c.fanout_pool.len() != c.qpus {
            return Err(Error::Parse("fanout_pool length does not match qpus".into()));
        }
        c.validate()?;
        Ok(c)
    }

    /// Qubits of a QPU in registry order.
    pub fn on_qpu(&self, qpu: usize) -> Vec<QubitId> {
        self.qubits.iter().copied().filter(|q| q.qpu == qpu).collect()
    }
}
