//! Command-line front end.
//!
//! Every command writes one JSON document (or a flat CSV rendering of it).
//! Failures print `{"error": {...}}` on stderr and exit with 2 (parse), 3
//! (domain) or 4 (numerics).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::estimator::{swap_network_estimate, tomography_simulate, Shots};
use crate::measures::{ckw_report, measure_report};
use crate::qstate::{
    named_state, partial_trace, random_mixed, random_pure, random_sl2c, random_su2, ComplexMatrix, DensityMatrix,
    NamedState, PureState,
};
use crate::slocc::{boost, filter_state, rotation, LocalOperation};
use crate::stokes::{
    density_from_stokes, euclidean_purity, invariant_via_spinflip, minkowski_invariant, spin_flip, stokes_tensor,
    MultiIndex, StokesTensor,
};

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qstokes",
    version,
    about = "Multi-qubit Stokes tensors, SLOCC invariants and entanglement measures"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Named state (bell:phi+, ghz:3, w:3, schmidt:0.9, mixed:max:2, basis:01,
    /// random:pure:N:SEED, random:mixed:N:RANK:SEED) or file:PATH to a JSON document.
    #[arg(long, global = true)]
    pub state: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the full generalized Stokes tensor.
    Stokes,
    /// Minkowskian scalar of the state or of a reduced pair.
    Invariant {
        /// Reduce to this pair first, e.g. 1,2.
        #[arg(long, conflicts_with = "all_pairs")]
        pair: Option<String>,
        /// Report every pair of qubits.
        #[arg(long)]
        all_pairs: bool,
    },
    /// Purity, polarization and entanglement measures (plus the pair decomposition for three-qubit pure states).
    Measures,
    /// Apply a unimodular local filter and report the invariant before and after renormalization.
    Filter {
        /// Comma-separated items: boost:Q:a2=V, rot:Q:x=ANGLE, su2:Q:SEED, sl2c:Q:SEED; or file:PATH.
        #[arg(long)]
        ops: String,
    },
    /// Swap-network estimate of Tr(ρₐρ_b); without --state-b, ρ_b is the spin flip of ρₐ.
    Swapnet {
        #[arg(long)]
        state_b: Option<String>,
    },
    /// Simulated Pauli tomography; --shots is per setting.
    Tomo {
        /// Use exact outcome probabilities (same as --shots 0).
        #[arg(long)]
        exact: bool,
    },
    /// Emit the state document (pure amplitudes when possible).
    State {
        /// Always emit the density-matrix form.
        #[arg(long)]
        density: bool,
    },
}

/// Failure of a CLI run with its exit code category.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Parse { .. } | Error::Io(_) | Error::BadStateName(_) => EXIT_PARSE,
            Error::NegativeTangle(_) | Error::IdentityViolation { .. } | Error::NoConvergence(_) => EXIT_NUMERIC,
            _ => EXIT_DOMAIN,
        };
        CliError { code, error }
    }
}

impl CliError {
    pub fn to_json(&self) -> Value {
        let kind = match self.code {
            EXIT_PARSE => "PARSE",
            EXIT_NUMERIC => "NUMERIC",
            _ => "DOMAIN",
        };
        json!({ "error": { "kind": kind, "code": self.code, "message": self.error.to_string() } })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(text: &str, position: usize, what: &str) -> crate::Result<T> {
    text.parse()
        .map_err(|_| parse_err(position, format!("expected {what}, found {text:?}")))
}

/// Splits on ':' and remembers where each field starts.
fn fields(spec: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for part in spec.split(':') {
        out.push((start, part));
        start += part.len() + 1;
    }
    out
}

/// Parsed state argument.
#[derive(Debug, Clone)]
pub enum LoadedState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl LoadedState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            LoadedState::Pure(p) => p.density(),
            LoadedState::Mixed(d) => d.clone(),
        }
    }
}

pub fn parse_state(spec: &str) -> crate::Result<LoadedState> {
    if let Some(path) = spec.strip_prefix("file:") {
        return load_state_file(Path::new(path));
    }
    let parts = fields(spec);
    let (_, head) = parts[0];
    let arg = |i: usize| -> crate::Result<(usize, &str)> {
        parts
            .get(i)
            .copied()
            .ok_or_else(|| parse_err(spec.len(), format!("{head} needs more fields")))
    };
    let expect_len = |len: usize| -> crate::Result<()> {
        if parts.len() > len {
            Err(parse_err(parts[len].0, "unexpected trailing field"))
        } else {
            Ok(())
        }
    };
    let pure = |name: NamedState| Ok(LoadedState::Pure(named_state(&name)?));
    match head {
        "bell" => {
            expect_len(2)?;
            let (pos, which) = arg(1)?;
            let name = match which {
                "phi+" => NamedState::BellPhiPlus,
                "phi-" => NamedState::BellPhiMinus,
                "psi+" => NamedState::BellPsiPlus,
                "psi-" => NamedState::BellPsiMinus,
                _ => return Err(parse_err(pos, format!("unknown Bell state {which:?}"))),
            };
            pure(name)
        }
        "ghz" | "w" => {
            expect_len(2)?;
            let (pos, n) = arg(1)?;
            let n = parse_num(n, pos, "qubit count")?;
            pure(if head == "ghz" {
                NamedState::Ghz(n)
            } else {
                NamedState::W(n)
            })
        }
        "schmidt" => {
            expect_len(2)?;
            let (pos, c2) = arg(1)?;
            let c2: f64 = parse_num(c2, pos, "cos²θ")?;
            if !(0.0..=1.0).contains(&c2) {
                return Err(parse_err(pos, format!("cos²θ = {c2} outside [0, 1]")));
            }
            pure(NamedState::SchmidtPair(c2.sqrt().acos()))
        }
        "basis" => {
            expect_len(2)?;
            pure(NamedState::Basis(arg(1)?.1.to_string()))
        }
        "mixed" => {
            expect_len(3)?;
            let (pos, kind) = arg(1)?;
            if kind != "max" {
                return Err(parse_err(pos, format!("unknown mixed state {kind:?}")));
            }
            let (pos, n) = arg(2)?;
            Ok(LoadedState::Mixed(DensityMatrix::maximally_mixed(parse_num(
                n,
                pos,
                "qubit count",
            )?)?))
        }
        "random" => {
            let (pos, kind) = arg(1)?;
            match kind {
                "pure" => {
                    expect_len(4)?;
                    let (p, n) = arg(2)?;
                    let (q, seed) = arg(3)?;
                    Ok(LoadedState::Pure(random_pure(
                        parse_num(n, p, "qubit count")?,
                        parse_num(seed, q, "seed")?,
                    )?))
                }
                "mixed" => {
                    expect_len(5)?;
                    let (p, n) = arg(2)?;
                    let (r, rank) = arg(3)?;
                    let (q, seed) = arg(4)?;
                    Ok(LoadedState::Mixed(random_mixed(
                        parse_num(n, p, "qubit count")?,
                        parse_num(rank, r, "rank")?,
                        parse_num(seed, q, "seed")?,
                    )?))
                }
                _ => Err(parse_err(pos, format!("unknown random state {kind:?}"))),
            }
        }
        _ => Err(parse_err(0, format!("unknown state {head:?}"))),
    }
}

fn read_json(path: &Path) -> crate::Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(e.column(), format!("{}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(value: Value) -> crate::Result<T> {
    serde_json::from_value(value).map_err(|e| parse_err(0, e.to_string()))
}

/// Accepts pure-state, density-matrix and Stokes-tensor documents.
pub fn load_state_file(path: &Path) -> crate::Result<LoadedState> {
    let value = read_json(path)?;
    if value.get("amplitudes").is_some() {
        Ok(LoadedState::Pure(from_value(value)?))
    } else if value.get("matrix").is_some() {
        Ok(LoadedState::Mixed(from_value(value)?))
    } else if value.get("values").is_some() {
        let tensor: StokesTensor = from_value(json!({ "n": value["n"], "values": value["values"] }))?;
        let rebuilt = density_from_stokes(&tensor)?;
        if !rebuilt.psd_ok || !rebuilt.density.is_normalized() {
            return Err(Error::NotPositiveSemidefinite(f64::NAN));
        }
        Ok(LoadedState::Mixed(rebuilt.density))
    } else {
        Err(parse_err(0, "document has none of amplitudes, matrix, values"))
    }
}

/// Parses the `--ops` grammar into a local operation on `n` qubits.
pub fn parse_ops(spec: &str, n: usize) -> crate::Result<LocalOperation> {
    if let Some(path) = spec.strip_prefix("file:") {
        let op: LocalOperation = from_value(read_json(Path::new(path))?)?;
        return Ok(op);
    }
    let mut ops = vec![ComplexMatrix::identity(2); n];
    let mut offset = 0;
    for item in spec.split(',') {
        let parts: Vec<(usize, &str)> = fields(item).into_iter().map(|(p, s)| (p + offset, s)).collect();
        offset += item.len() + 1;
        if parts.len() != 3 {
            return Err(parse_err(
                parts[0].0,
                format!("expected KIND:QUBIT:ARG, found {item:?}"),
            ));
        }
        let (qpos, qubit) = parts[1];
        let qubit: usize = parse_num(qubit, qpos, "qubit index")?;
        if qubit == 0 || qubit > n {
            return Err(parse_err(qpos, format!("qubit {qubit} outside 1..={n}")));
        }
        let (apos, argument) = parts[2];
        let key_value = |key_pos: usize| -> crate::Result<(&str, f64)> {
            let (k, v) = argument
                .split_once('=')
                .ok_or_else(|| parse_err(key_pos, format!("expected KEY=VALUE, found {argument:?}")))?;
            Ok((k, parse_num(v, key_pos + k.len() + 1, "number")?))
        };
        let op = match parts[0].1 {
            "boost" => match key_value(apos)? {
                ("a2", v) => boost(v)?,
                (k, _) => return Err(parse_err(apos, format!("boost expects a2=, found {k}="))),
            },
            "rot" => {
                let (axis, angle) = key_value(apos)?;
                let axis = match axis {
                    "x" => 1,
                    "y" => 2,
                    "z" => 3,
                    _ => return Err(parse_err(apos, format!("unknown axis {axis:?}"))),
                };
                rotation(axis, angle)?
            }
            "su2" => random_su2(parse_num(argument, apos, "seed")?),
            "sl2c" => random_sl2c(parse_num(argument, apos, "seed")?),
            other => return Err(parse_err(parts[0].0, format!("unknown operation {other:?}"))),
        };
        ops[qubit - 1] = &op * &ops[qubit - 1];
    }
    LocalOperation::new(ops)
}

fn parse_pair(text: &str, n: usize) -> crate::Result<[usize; 2]> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| parse_err(0, format!("expected I,J, found {text:?}")))?;
    let i: usize = parse_num(a.trim(), 0, "qubit index")?;
    let j: usize = parse_num(b.trim(), a.len() + 1, "qubit index")?;
    if i == j || i == 0 || j == 0 || i > n || j > n {
        return Err(Error::BadSubsystem(format!("pair {i},{j} invalid for {n} qubits")));
    }
    Ok([i.min(j), i.max(j)])
}

#[derive(Serialize)]
struct InvariantRecord {
    n: usize,
    qubits: Vec<usize>,
    invariant: f64,
    invariant_via_spinflip: f64,
    euclidean_purity: f64,
}

fn invariant_record(rho: &DensityMatrix, qubits: Vec<usize>) -> crate::Result<InvariantRecord> {
    let s = stokes_tensor(rho)?;
    Ok(InvariantRecord {
        n: rho.n_qubits(),
        qubits,
        invariant: minkowski_invariant(&s),
        invariant_via_spinflip: invariant_via_spinflip(rho),
        euclidean_purity: euclidean_purity(&s),
    })
}

fn stokes_document(s: &StokesTensor) -> Value {
    let components: Map<String, Value> = s.labeled().map(|(label, v)| (label, json!(v))).collect();
    json!({ "n": s.n_qubits(), "values": s.values(), "components": components })
}

fn require_state(global: &GlobalArgs) -> crate::Result<LoadedState> {
    let spec = global
        .state
        .as_deref()
        .ok_or_else(|| parse_err(0, "--state is required"))?;
    parse_state(spec)
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

/// Runs one command and returns the JSON document it produces.
pub fn execute(cli: &Cli) -> CliResult<Value> {
    let global = &cli.global;
    let state = require_state(global)?;
    let rho = state.density();
    let value = match &cli.command {
        Command::Stokes => stokes_document(&stokes_tensor(&rho)?),
        Command::Invariant { pair, all_pairs } => {
            let n = rho.n_qubits();
            if *all_pairs {
                let mut records = Vec::new();
                for i in 1..=n {
                    for j in i + 1..=n {
                        records.push(invariant_record(&partial_trace(&rho, &[i, j])?, vec![i, j])?);
                    }
                }
                json!({ "pairs": records })
            } else if let Some(pair) = pair {
                let pair = parse_pair(pair, n)?;
                to_json(&invariant_record(&partial_trace(&rho, &pair)?, pair.to_vec())?)
            } else {
                to_json(&invariant_record(&rho, (1..=n).collect())?)
            }
        }
        Command::Measures => {
            let mut doc = to_json(&measure_report(&rho)?);
            let pure = match &state {
                LoadedState::Pure(p) => Some(p.clone()),
                LoadedState::Mixed(d) => d.as_pure(1e-10),
            };
            if let Some(psi) = pure.filter(|p| p.n_qubits() == 3) {
                doc["ckw"] = to_json(&ckw_report(&psi)?);
            }
            doc
        }
        Command::Filter { ops } => {
            let op = parse_ops(ops, rho.n_qubits())?;
            to_json(&filter_state(&rho, &op)?)
        }
        Command::Swapnet { state_b } => {
            let shots = global.shots.unwrap_or(100_000);
            let other = match state_b {
                Some(spec) => parse_state(spec)?.density(),
                None => spin_flip(&rho),
            };
            to_json(&swap_network_estimate(&rho, &other, shots, global.seed)?)
        }
        Command::Tomo { exact } => {
            let shots = match global.shots {
                Some(0) => Shots::Infinite,
                _ if *exact => Shots::Infinite,
                Some(k) => Shots::PerSetting(k),
                None => Shots::PerSetting(10_000),
            };
            to_json(&tomography_simulate(&rho, shots, global.seed)?)
        }
        Command::State { density } => match (&state, density) {
            (LoadedState::Pure(p), false) => to_json(p),
            _ => to_json(&rho),
        },
    };
    Ok(value)
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, rows);
            }
        }
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// CSV rendering; Stokes tensors become one row per base-4 multi-index.
pub fn render_csv(command: &Command, value: &Value) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if let (Command::Stokes, Some(values)) = (command, value["values"].as_array()) {
        let n = value["n"].as_u64().unwrap_or(1) as usize;
        writer
            .write_record(["index", "label", "value"])
            .expect("in-memory write");
        for (m, v) in values.iter().enumerate() {
            let idx = MultiIndex::from_flat(m, n);
            let digits: String = idx.digits().iter().map(|d| char::from(b'0' + d)).collect();
            writer
                .write_record([digits, idx.label(), v.to_string()])
                .expect("in-memory write");
        }
    } else {
        let mut rows = Vec::new();
        flatten("", value, &mut rows);
        writer.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in rows {
            writer.write_record([k, v]).expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn render(cli: &Cli, value: &Value) -> String {
    match cli.global.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
            text.push('\n');
            text
        }
        Format::Csv => render_csv(&cli.command, value),
    }
}

/// Parses `args`, runs the command and writes the output; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = execute(&cli).and_then(|value| {
        let text = render(&cli, &value);
        match &cli.global.out {
            Some(path) => {
                fs::write(path, text).map_err(|e| CliError::from(Error::Io(format!("{}: {e}", path.display()))))
            }
            None => {
                let _ = std::io::stdout().write_all(text.as_bytes());
                Ok(())
            }
        }
    });
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.code
        }
    }
}
