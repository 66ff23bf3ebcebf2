//! `disttrace` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use disttrace::bounds;
use disttrace::compiler::{compile, compile_passes, Pass, Readout, Scheme, Variant};
use disttrace::estimator::{
    entanglement_spectrum, estimate_trace, oracle_trace, renyi_entropy, virtual_expectation, EstimateConfig,
};
use disttrace::pauli::PauliString;
use disttrace::resources::{account, closed_form, compare, comparison_csv, comparison_table};
use disttrace::sim::{fanout_errors, run_statevector, NoiseModel, RunConfig, DEFAULT_QUBIT_CAP};
use disttrace::state::PartySpec;
use disttrace::{Basis, Circuit, Error};

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "disttrace", version, about = "Distributed multi-party SWAP-test compiler, simulator and resource model")]
struct Cli {
    /// Worker threads for shot-level parallelism. Results do not depend on it.
    #[arg(long, global = true, env = "DISTTRACE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a swap-test circuit and write it in the circuit text format.
    Compile(CompileArgs),
    /// Run a circuit on the statevector simulator and write per-shot CSV.
    Simulate(SimulateArgs),
    /// Estimate Tr(rho_1 ... rho_k), a Rényi entropy, a spectrum or a virtual expectation.
    Estimate(EstimateArgs),
    /// Count per-QPU resources of a compiled circuit, or compare schemes in closed form.
    Resources(ResourcesArgs),
    /// Emit k-bound curves as CSV over a grid of (p, epsilon, scheme, n).
    Bound(BoundArgs),
    /// Sample the Pauli-error histogram of the expanded Fanout gadget.
    FanoutErrors(FanoutArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Telegate,
    Teledata,
    Naive,
}

impl From<SchemeArg> for Variant {
    fn from(s: SchemeArg) -> Variant {
        match s {
            SchemeArg::Telegate => Variant::Telegate,
            SchemeArg::Teledata => Variant::Teledata,
            SchemeArg::Naive => Variant::Naive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    X,
    Y,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Number of QPUs (one party each).
    #[arg(long)]
    k: usize,
    /// Qubits per party.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "teledata")]
    scheme: SchemeArg,
    /// Party states, e.g. `0:|0>,1:|+>,2:[0.6,0.8i]`. Unlisted parties start in |0...0>.
    #[arg(long, conflicts_with = "states_file")]
    states: Option<String>,
    /// File holding the party-state list.
    #[arg(long)]
    states_file: Option<PathBuf>,
    /// Keep Fanout macros instead of expanding them.
    #[arg(long)]
    no_fanout_expansion: bool,
}

impl ProblemArgs {
    fn spec(&self) -> Result<PartySpec, Error> {
        let text = match (&self.states, &self.states_file) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => fs::read_to_string(p)?,
            (None, None) => String::new(),
        };
        PartySpec::parse(self.k, self.n, &text)
    }

    fn scheme(&self) -> Scheme {
        Scheme { variant: self.scheme.into(), fanout_expansion: !self.no_fanout_expansion }
    }

    fn echo(&self) -> Value {
        json!({
            "k": self.k,
            "n": self.n,
            "scheme": Variant::from(self.scheme).to_string(),
            "states": self.states,
            "states_file": self.states_file,
            "fanout_expansion": !self.no_fanout_expansion,
        })
    }
}

#[derive(Args, Debug, Clone)]
struct NoiseArgs {
    /// Single-parameter noise: p/10 on one-qubit gates, p on two-qubit gates and measurements.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    p_meas: Option<f64>,
    /// Depolarizing probability of each Bell pair.
    #[arg(long)]
    p_bell: Option<f64>,
}

impl NoiseArgs {
    fn model(&self) -> Result<NoiseModel, Error> {
        let mut m = self.p.map(NoiseModel::from_p).unwrap_or_default();
        if let Some(v) = self.p1 {
            m.p1 = v;
        }
        if let Some(v) = self.p2 {
            m.p2 = v;
        }
        if let Some(v) = self.p_meas {
            m.p_meas = v;
        }
        if let Some(v) = self.p_bell {
            m.p_bell = v;
        }
        m.validate()?;
        Ok(m)
    }
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "x")]
    basis: BasisArg,
    /// Pauli observable measured on the first party, e.g. `ZI`.
    #[arg(long)]
    observable: Option<String>,
    /// Comma-separated pass list, e.g. `swap_test,lower_teledata,parallel_toffoli`.
    /// Overrides --scheme.
    #[arg(long)]
    passes: Option<String>,
    /// Output file; stdout if absent.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Circuit file to run. Without it the circuit is compiled from --k/--n/--scheme.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long, required_unless_present = "circuit")]
    k: Option<usize>,
    #[arg(long, required_unless_present = "circuit")]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "teledata")]
    scheme: SchemeArg,
    #[arg(long)]
    states: Option<String>,
    #[arg(long, value_enum, default_value = "x")]
    basis: BasisArg,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
    qubit_cap: usize,
    /// Per-shot CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Task {
    Trace,
    Renyi,
    Spectrum,
    Virtual,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "trace")]
    task: Task,
    /// Rényi order, or the largest power-sum order for `spectrum`.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Observable for `virtual`.
    #[arg(long)]
    observable: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
    qubit_cap: usize,
    /// Skip the Y-basis run.
    #[arg(long)]
    real_only: bool,
    /// Also report the exact value.
    #[arg(long)]
    oracle: bool,
    /// Print the closed-form scheme comparison for (n, k) as a table and CSV instead.
    #[arg(long)]
    compare: bool,
    /// Append the JSON record to this file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResourcesArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "teledata")]
    scheme: SchemeArg,
    /// Closed-form comparison of all schemes instead of accounting one compiled circuit.
    #[arg(long)]
    compare: bool,
    /// Write the comparison CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Bell depolarizing probabilities, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-6")]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3")]
    epsilon: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "telegate,teledata")]
    scheme: Vec<SchemeArg>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FanoutArgs {
    /// Number of Fanout targets.
    #[arg(long)]
    targets: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn basis(b: BasisArg) -> Basis {
    match b {
        BasisArg::X => Basis::X,
        BasisArg::Y => Basis::Y,
    }
}

/// Writes `text` to `path`, or stdout. With a path, the job config goes next to it.
fn emit(path: &Option<PathBuf>, text: &str, config: &Value) -> Result<(), Error> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            fs::write(sidecar(p), serde_json::to_string_pretty(config).expect("json") + "\n")?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn sidecar(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = cli.threads;
    match cli.command {
        Command::Compile(a) => {
            let spec = a.problem.spec()?;
            let observable = a.observable.as_deref().map(str::parse::<PauliString>).transpose()?;
            let readout = Readout { basis: basis(a.basis), observable };
            let c = match &a.passes {
                Some(p) => {
                    let passes = Pass::parse_list(p)?;
                    compile_passes(&spec, &readout, &passes)?.pop().expect("non-empty pass list").1
                }
                None => compile(&spec, a.problem.scheme(), &readout)?,
            };
            c.validate()?;
            let text = c.serialize() + "\n";
            let config = json!({"command": "compile", "problem": a.problem.echo(), "passes": a.passes,
                "basis": format!("{:?}", a.basis), "observable": a.observable});
            emit(&a.dump, &text, &config)?;
            eprintln!("depth {} over {} layers, {} qubits", c.depth(), c.layers.len(), c.qubits.len());
        }
        Command::Simulate(a) => {
            let c = match &a.circuit {
                Some(p) => Circuit::deserialize(&fs::read_to_string(p)?)?,
                None => {
                    let (k, n) = (a.k.expect("clap enforces --k"), a.n.expect("clap enforces --n"));
                    let spec = PartySpec::parse(k, n, a.states.as_deref().unwrap_or(""))?;
                    compile(&spec, Scheme::new(a.scheme.into()), &Readout::basis(basis(a.basis)))?
                }
            };
            let noise = a.noise.model()?;
            let cfg = RunConfig {
                shots: a.shots,
                seed: a.seed,
                trajectories: a.trajectories,
                qubit_cap: a.qubit_cap,
                allow_macros: c.has_macros(),
                threads,
                record: None,
            };
            let r = run_statevector(&c, &noise, &cfg)?;
            let config = json!({"command": "simulate", "circuit": a.circuit, "k": a.k, "n": a.n,
                "scheme": Variant::from(a.scheme).to_string(), "states": a.states, "noise": noise,
                "shots": a.shots, "seed": a.seed, "trajectories": a.trajectories});
            emit(&a.out, &r.to_csv(), &config)?;
        }
        Command::Estimate(a) => {
            if a.compare {
                let rows = compare(a.problem.n, a.problem.k)?;
                print!("{}", comparison_table(&rows));
                println!();
                print!("{}", comparison_csv(a.problem.n, a.problem.k, &rows));
                return Ok(());
            }
            let spec = a.problem.spec()?;
            let cfg = EstimateConfig {
                scheme: a.problem.scheme(),
                noise: a.noise.model()?,
                shots: a.shots,
                seed: a.seed,
                trajectories: a.trajectories,
                threads,
                qubit_cap: a.qubit_cap,
                imaginary: !a.real_only,
            };
            let rho = &spec.states[0];
            let n = a.problem.n;
            let result = match a.task {
                Task::Trace => {
                    let mut v = serde_json::to_value(estimate_trace(&spec, &cfg)?).expect("json");
                    if a.oracle {
                        let o = oracle_trace(&spec)?;
                        v["oracle"] = json!({"re": o.re, "im": o.im});
                    }
                    v
                }
                Task::Renyi => serde_json::to_value(renyi_entropy(rho, n, a.order, &cfg)?).expect("json"),
                Task::Spectrum => serde_json::to_value(entanglement_spectrum(rho, n, a.order, &cfg)?).expect("json"),
                Task::Virtual => {
                    let obs: PauliString = a
                        .observable
                        .as_deref()
                        .ok_or_else(|| Error::InvalidParameter("--task virtual needs --observable".into()))?
                        .parse()?;
                    serde_json::to_value(virtual_expectation(rho, n, &obs, a.problem.k, &cfg)?).expect("json")
                }
            };
            let record = json!({
                "config": {"command": "estimate", "problem": a.problem.echo(), "task": format!("{:?}", a.task).to_lowercase(),
                    "order": a.order, "observable": a.observable, "noise": cfg.noise, "shots": a.shots,
                    "seed": a.seed, "trajectories": a.trajectories, "real_only": a.real_only},
                "result": result,
            });
            let line = serde_json::to_string(&record).expect("json") + "\n";
            match &a.out {
                Some(p) => {
                    use std::io::Write;
                    fs::OpenOptions::new().create(true).append(true).open(p)?.write_all(line.as_bytes())?;
                }
                None => print!("{line}"),
            }
        }
        Command::Resources(a) => {
            if a.compare {
                let rows = compare(a.n, a.k)?;
                print!("{}", comparison_table(&rows));
                let config = json!({"command": "resources", "compare": true, "k": a.k, "n": a.n});
                if a.csv.is_some() {
                    emit(&a.csv, &comparison_csv(a.n, a.k, &rows), &config)?;
                }
                return Ok(());
            }
            let variant: Variant = a.scheme.into();
            let spec = PartySpec::parse(a.k, a.n, "")?;
            let c = compile(&spec, Scheme::new(variant), &Readout::basis(Basis::X))?;
            let report = account(&c)?;
            let record = json!({
                "config": {"command": "resources", "k": a.k, "n": a.n, "scheme": variant.to_string()},
                "compiled": report,
                "closed_form": closed_form(variant, a.n, a.k)?,
            });
            println!("{}", serde_json::to_string(&record).expect("json"));
        }
        Command::Bound(a) => {
            let variants: Vec<Variant> = a.scheme.iter().map(|s| (*s).into()).collect();
            let csv = bounds::k_bound_csv(&a.p, &a.epsilon, &variants, &a.n)?;
            let config = json!({"command": "bound", "p": a.p, "epsilon": a.epsilon,
                "scheme": variants.iter().map(|v| v.to_string()).collect::<Vec<_>>(), "n": a.n});
            emit(&a.out, &csv, &config)?;
        }
        Command::FanoutErrors(a) => {
            let h = fanout_errors(a.targets, a.p, a.shots, a.seed, threads)?;
            let config = json!({"command": "fanout-errors", "targets": a.targets, "p": a.p,
                "shots": a.shots, "seed": a.seed});
            emit(&a.out, &h.to_csv(), &config)?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::InvalidParameter(_) | Error::Parse(_) => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("disttrace: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
