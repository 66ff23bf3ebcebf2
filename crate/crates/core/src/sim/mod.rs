//! Noisy execution: a statevector engine for arbitrary circuits and a Pauli-frame sampler for
//! Clifford ones.
//!
//! Work is split into trajectories. Each trajectory draws its own ensemble members, noise and
//! mid-circuit outcomes, then samples its share of shots from the exact distribution of the
//! final measurements. Trajectory `i` uses ChaCha8 stream `i` of the run seed, so results do not
//! depend on the thread count.

mod frame;
mod noise;
mod ops;
mod sv;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Basis, Cbit, Circuit, Gate, Input, Layer, QubitId, Step};
use crate::compiler::{fixtures, Strategy};
use crate::error::{Error, Result};
use crate::pauli::{PauliHistogram, PauliString};
use crate::state::PartyState;

pub use noise::NoiseModel;

pub const DEFAULT_QUBIT_CAP: usize = 24;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub shots: u64,
    pub seed: u64,
    /// Independent trajectories. `None` picks: one per shot under noise, 64 for noiseless pure
    /// inputs and 4096 for noiseless ensembles.
    pub trajectories: Option<usize>,
    pub qubit_cap: usize,
    /// Simulate Fanout and CSwap macros directly (ideal, noiseless).
    pub allow_macros: bool,
    pub threads: Option<usize>,
    /// Bits to report per shot. `None` uses the circuit readout, or every bit if it has none.
    pub record: Option<Vec<Cbit>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            shots: 1000,
            seed: 0,
            trajectories: None,
            qubit_cap: DEFAULT_QUBIT_CAP,
            allow_macros: false,
            threads: None,
            record: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub index: usize,
    /// Ensemble member drawn for each input group.
    pub members: Vec<usize>,
    /// One mask per shot; bit j is the j-th recorded bit.
    pub outcomes: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotResult {
    pub record: Vec<Cbit>,
    pub seed: u64,
    pub trajectories: Vec<TrajectoryResult>,
}

impl ShotResult {
    pub fn shots(&self) -> u64 {
        self.trajectories.iter().map(|t| t.outcomes.len() as u64).sum()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = u64> + '_ {
        self.trajectories.iter().flat_map(|t| t.outcomes.iter().copied())
    }

    fn bitstring(&self, mask: u64) -> String {
        (0..self.record.len()).map(|j| if mask >> j & 1 == 1 { '1' } else { '0' }).collect()
    }

    /// Outcome counts keyed by bit string (recorded bits in order, first bit leftmost).
    pub fn counts(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        for o in self.outcomes() {
            *m.entry(self.bitstring(o)).or_insert(0) += 1;
        }
        m
    }

    /// One row per shot: trajectory, shot, bits, ensemble members.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trajectory", "shot", "bits", "members"]).expect("in-memory csv write");
        let mut shot = 0u64;
        for t in &self.trajectories {
            let members = t.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ");
            for &o in &t.outcomes {
                w.write_record([t.index.to_string(), shot.to_string(), self.bitstring(o), members.clone()])
                    .expect("in-memory csv write");
                shot += 1;
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }
}

/// Runs `f` on a pool with the given thread count, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("thread count must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn input_groups(c: &Circuit) -> Result<Vec<(Vec<usize>, &Input)>> {
    let idx = c.index_map();
    c.inputs
        .iter()
        .map(|inp| {
            if inp.state.dim() != 1 << inp.qubits.len() {
                return Err(Error::InvalidCircuit("input state dimension does not match its qubits".into()));
            }
            let qs = inp
                .qubits
                .iter()
                .map(|q| idx.get(q).copied().ok_or_else(|| Error::InvalidCircuit(format!("unregistered input qubit {q}"))))
                .collect::<Result<_>>()?;
            Ok((qs, inp))
        })
        .collect()
}

fn draw_inputs<'a, R: Rng>(groups: &'a [(Vec<usize>, &Input)], rng: &mut R) -> (Vec<(Vec<usize>, &'a [Complex64])>, Vec<usize>) {
    let mut members = Vec::new();
    let chosen = groups
        .iter()
        .map(|(qs, inp)| {
            let m = inp.state.sample(rng);
            members.push(m);
            (qs.clone(), inp.state.member(m))
        })
        .collect();
    (chosen, members)
}

pub fn run_statevector(c: &Circuit, noise: &NoiseModel, cfg: &RunConfig) -> Result<ShotResult> {
    noise.validate()?;
    let prog = ops::flatten(c, cfg.allow_macros)?;
    let record = match &cfg.record {
        Some(r) => r.clone(),
        None if !c.readout.is_empty() => c.readout.clone(),
        None => (0..c.num_bits).map(Cbit).collect(),
    };
    if record.len() > 64 {
        return Err(Error::InvalidParameter("at most 64 bits can be recorded".into()));
    }
    if record.iter().any(|b| b.0 >= c.num_bits) {
        return Err(Error::InvalidParameter("recorded bit out of range".into()));
    }
    let groups = input_groups(c)?;
    let pure = c.inputs.iter().all(|i| i.state.is_pure_input());
    let wanted = cfg.trajectories.unwrap_or(if !noise.is_noiseless() {
        cfg.shots as usize
    } else if pure {
        64
    } else {
        4096
    });
    let t_count = wanted.clamp(1, cfg.shots.max(1) as usize);
    let shots = cfg.shots;
    let one = |t: usize| -> Result<TrajectoryResult> {
        let mut rng = stream(cfg.seed, t as u64);
        let (chosen, members) = draw_inputs(&groups, &mut rng);
        let mut e = sv::Engine::new(prog.num_qubits, chosen, cfg.qubit_cap, *noise, prog.num_bits);
        e.run(&prog, &mut rng)?;
        let (tbits, probs) = e.terminal_distribution(&prog, &mut rng)?;
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        let count = shots / t_count as u64 + u64::from((t as u64) < shots % t_count as u64);
        let slot: Vec<Option<usize>> = record.iter().map(|b| tbits.iter().position(|x| *x == b.0 as usize)).collect();
        let outcomes = (0..count)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let j = cum.partition_point(|c| *c <= u).min(probs.len() - 1);
                let mut mask = 0u64;
                for (r, b) in record.iter().enumerate() {
                    let v = match slot[r] {
                        Some(t) => {
                            let flip = noise.p_meas > 0.0 && rng.gen::<f64>() < noise.p_meas;
                            (j >> t & 1 == 1) ^ flip
                        }
                        None => e.bits[b.0 as usize],
                    };
                    mask |= u64::from(v) << r;
                }
                mask
            })
            .collect();
        Ok(TrajectoryResult { index: t, members, outcomes })
    };
    let trajectories = with_threads(cfg.threads, || (0..t_count).into_par_iter().map(one).collect::<Result<Vec<_>>>())??;
    Ok(ShotResult { record, seed: cfg.seed, trajectories })
}

/// Data qubits for residual reporting: the circuit's parties, flattened in order.
pub fn data_qubits(c: &Circuit) -> Vec<QubitId> {
    c.parties.iter().flatten().copied().collect()
}

const FRAME_CHUNK: u64 = 4096;

/// Samples the residual Pauli error on `data` (default: the parties) over `shots` runs.
pub fn run_pauli_frame(
    c: &Circuit,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    data: Option<&[QubitId]>,
    threads: Option<usize>,
) -> Result<PauliHistogram> {
    noise.validate()?;
    let prog = ops::flatten(c, true)?;
    frame::check_clifford(&prog)?;
    let idx = c.index_map();
    let data: Vec<QubitId> = data.map_or_else(|| data_qubits(c), |d| d.to_vec());
    let data: Vec<usize> = data
        .iter()
        .map(|q| idx.get(q).copied().ok_or_else(|| Error::InvalidParameter(format!("unknown data qubit {q}"))))
        .collect::<Result<_>>()?;
    let chunks = shots.div_ceil(FRAME_CHUNK);
    let run_chunk = |ci: u64| {
        let mut rng = stream(seed, ci);
        let mut h = PauliHistogram::default();
        let n = FRAME_CHUNK.min(shots - ci * FRAME_CHUNK);
        for _ in 0..n {
            let mut f = frame::Frame::new(prog.num_qubits, prog.num_bits);
            f.run(&prog, noise, &mut rng);
            h.record(f.residual(&data));
        }
        h
    };
    let parts = with_threads(threads, || (0..chunks).into_par_iter().map(run_chunk).collect::<Vec<_>>())?;
    let mut h = PauliHistogram::default();
    for p in &parts {
        h.merge(p);
    }
    Ok(h)
}

/// Error histogram of the expanded m-target Fanout under `NoiseModel::from_p(p)`.
/// Strings list the control first, then the targets.
pub fn fanout_errors(m: usize, p: f64, shots: u64, seed: u64, threads: Option<usize>) -> Result<PauliHistogram> {
    let c = fixtures::fanout(m)?;
    run_pauli_frame(&c, &NoiseModel::from_p(p), shots, seed, None, threads)
}

fn histogram_width(h: &PauliHistogram) -> Result<usize> {
    let w = h.counts.keys().next().map(PauliString::len).ok_or_else(|| Error::Injection("empty histogram".into()))?;
    if h.counts.keys().any(|p| p.len() != w) {
        return Err(Error::Injection("histogram strings differ in length".into()));
    }
    Ok(w)
}

/// Adds, right after layer `site`, a Pauli channel drawn from `hist` on the operands of every
/// macro in that layer (control first, then targets).
pub fn inject_sampled_error(c: &Circuit, site: usize, hist: &PauliHistogram) -> Result<Circuit> {
    let layer = c.layers.get(site).ok_or_else(|| Error::Injection(format!("layer {site} does not exist")))?;
    let width = histogram_width(hist)?;
    let macros: Vec<&Gate> = layer.gates.iter().filter(|g| g.is_macro()).collect();
    if macros.is_empty() {
        return Err(Error::Injection(format!("layer {site} holds no macro gate")));
    }
    let mut noise = Layer::new(layer.step);
    for g in macros {
        let qubits = g.qubits();
        if qubits.len() != width {
            return Err(Error::Injection(format!(
                "{} at layer {site} has {} operands but the histogram covers {width}",
                g.name(),
                qubits.len()
            )));
        }
        noise.gates.push(Gate::PauliChannel { qubits, table: hist.table() });
    }
    let mut out = c.clone();
    out.layers.insert(site + 1, noise);
    Ok(out)
}

/// Injects per-width Fanout histograms after every Fanout macro.
pub fn inject_fanout_noise(c: &Circuit, hist: &dyn Fn(usize) -> Result<PauliHistogram>) -> Result<Circuit> {
    let mut out = c.clone();
    let mut cache: BTreeMap<usize, PauliHistogram> = BTreeMap::new();
    for site in (0..c.layers.len()).rev() {
        let mut noise = Layer::new(c.layers[site].step);
        for g in &c.layers[site].gates {
            if let Gate::Fanout { targets, .. } = g {
                let m = targets.len();
                if !cache.contains_key(&m) {
                    cache.insert(m, hist(m)?);
                }
                noise.gates.push(Gate::PauliChannel { qubits: g.qubits(), table: cache[&m].table() });
            }
        }
        if !noise.gates.is_empty() {
            out.layers.insert(site + 1, noise);
        }
    }
    Ok(out)
}

/// Mean and standard error of the overlap between the final state of `data` and `ideal`.
pub fn state_fidelity(
    c: &Circuit,
    noise: &NoiseModel,
    ideal: &[Complex64],
    data: &[QubitId],
    trajectories: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<(f64, f64)> {
    noise.validate()?;
    if ideal.len() != 1 << data.len() {
        return Err(Error::InvalidParameter("ideal state does not match the data qubits".into()));
    }
    let prog = ops::flatten(c, true)?;
    let groups = input_groups(c)?;
    let idx = c.index_map();
    let dq: Vec<usize> = data.iter().map(|q| idx[q]).collect();
    let one = |t: usize| -> Result<f64> {
        let mut rng = stream(seed, t as u64);
        let (chosen, _) = draw_inputs(&groups, &mut rng);
        let mut e = sv::Engine::new(prog.num_qubits, chosen, DEFAULT_QUBIT_CAP, *noise, prog.num_bits);
        for op in &prog.ops {
            e.step(&force_measure(op), &mut rng)?;
        }
        e.overlap(&dq, ideal, &mut rng)
    };
    let fs = with_threads(threads, || (0..trajectories).into_par_iter().map(one).collect::<Result<Vec<_>>>())??;
    Ok(mean_stderr(&fs))
}

fn force_measure(op: &ops::Op) -> ops::Op {
    match op {
        ops::Op::Measure { q, basis, bit, .. } => ops::Op::Measure { q: *q, basis: *basis, bit: *bit, terminal: false },
        o => o.clone(),
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug)]
pub struct FidelityConfig {
    pub shots_per_input: u64,
    /// Shots share a trajectory in groups of this size.
    pub shots_per_trajectory: u64,
    /// Pauli-frame shots per Fanout histogram.
    pub histogram_shots: u64,
    pub max_inputs: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig {
            shots_per_input: 512,
            shots_per_trajectory: 8,
            histogram_shots: 100_000,
            max_inputs: 300,
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub stderr: f64,
    pub inputs: usize,
    pub shots: u64,
}

/// Fraction of shots where a lowered CSwap returns the exact classical answer.
///
/// Fanouts stay macros and are followed by the Pauli channel sampled from the expanded gadget at
/// noise `p`; every other gate sees `NoiseModel::from_p(p)`. Inputs are computational-basis
/// states of control and both registers, all of them if there are at most `max_inputs`.
pub fn classical_fidelity(n: usize, strategy: Strategy, p: f64, cfg: &FidelityConfig) -> Result<FidelityReport> {
    let base = fixtures::cswap_lowered(n, strategy, false)?;
    let hseed = cfg.seed ^ 0x5eed_f00d;
    let threads = cfg.threads;
    let mut c = inject_fanout_noise(&base, &|m| fanout_errors(m, p, cfg.histogram_shots, hseed + m as u64, threads))?;
    let data = data_qubits(&c);
    let l = c.open(1, Step::Readout);
    c.readout.clear();
    for &q in &data {
        let b = c.new_bit();
        c.put(l, Gate::measure(q, Basis::Z, b))?;
        c.readout.push(b);
    }
    let width = 2 * n + 1;
    let total = 1usize << width;
    let inputs: Vec<usize> = if total <= cfg.max_inputs {
        (0..total).collect()
    } else {
        let mut rng = stream(cfg.seed, u64::MAX);
        rand::seq::index::sample(&mut rng, total, cfg.max_inputs).into_vec()
    };
    let noise = NoiseModel::from_p(p);
    let mut hits = Vec::new();
    let mut shots = 0;
    for (i, &x) in inputs.iter().enumerate() {
        let mut ci = c.clone();
        ci.inputs = data
            .iter()
            .enumerate()
            .map(|(j, q)| {
                let mut v = vec![Complex64::new(0.0, 0.0); 2];
                v[x >> j & 1] = Complex64::new(1.0, 0.0);
                Input { qubits: vec![*q], state: PartyState::Pure(v) }
            })
            .collect();
        let expected = swap_expected(x, n);
        let cfg_i = RunConfig {
            shots: cfg.shots_per_input,
            seed: cfg.seed.wrapping_add(i as u64 + 1),
            trajectories: Some((cfg.shots_per_input / cfg.shots_per_trajectory.max(1)).max(1) as usize),
            allow_macros: true,
            threads,
            ..RunConfig::default()
        };
        let r = run_statevector(&ci, &noise, &cfg_i)?;
        for t in &r.trajectories {
            let ok = t.outcomes.iter().filter(|&&o| o == expected as u64).count();
            hits.push(ok as f64 / t.outcomes.len().max(1) as f64);
        }
        shots += r.shots();
    }
    let (fidelity, stderr) = mean_stderr(&hits);
    Ok(FidelityReport { fidelity, stderr, inputs: inputs.len(), shots })
}

/// Output bits of CSWAP on a basis input: bit 0 control, then left register, then right.
pub fn swap_expected(x: usize, n: usize) -> usize {
    if x & 1 == 0 {
        return x;
    }
    let mask = (1 << n) - 1;
    let left = (x >> 1) & mask;
    let right = (x >> (1 + n)) & mask;
    1 | (right << 1) | (left << (1 + n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_expected_truth_table() {
        assert_eq!(swap_expected(0b010, 1), 0b010);
        assert_eq!(swap_expected(0b011, 1), 0b101);
        assert_eq!(swap_expected(0b00111, 2), 0b11001);
    }

    #[test]
    fn mean_and_error() {
        let (m, s) = mean_stderr(&[1.0, 1.0, 1.0]);
        assert_eq!((m, s), (1.0, 0.0));
        let (m, _) = mean_stderr(&[0.0, 1.0]);
        assert_eq!(m, 0.5);
    }
}
