//! Command-line front end: JSON experiment configs in, CSV/JSON tables out.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 divergence flagged, 4 inequality violated.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fields::{Dimension, ScalarField, Shape};
use crate::functionals::{
    dirichlet_energy, entropy_l2, f_functional, i_delta, i_delta_p, j_delta_energy, j_energy,
    l2_norm_sq, log_moment_lp, lp_integral, EnergyParams, EngineSpec, KernelSpec, MonotoneEnvelope,
};
use crate::inequalities::{sweep_family, InequalityId, InequalityReport};
use crate::limits::{delta_sweep, estimate_qn};
use crate::quadrature::Estimate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "WORKERS";

#[derive(Debug, Parser)]
#[command(name = "nlsi", version, about = "Nonlocal functionals and log-Sobolev inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate functionals: one row per (field, functional, δ).
    Eval(CommonArgs),
    /// Run inequality checkers on every (field, δ).
    Check(CommonArgs),
    /// Sweep I_δ over the δ-grid for every field.
    Sweep(CommonArgs),
    /// Family constants with held-out validation.
    Constants(CommonArgs),
    /// Pooled Q_N estimate over the configured fields.
    Qn(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory that relative output paths resolve against.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Treat soft warnings (excluded instances, inconsistent Q_N, unstable
    /// grids) as failures.
    #[arg(long)]
    strict: bool,
}

/// δ values: either `delta` or a strictly decreasing `deltas` grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub envelope: Option<MonotoneEnvelope>,
}

/// Functionals understood by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalId {
    IDelta,
    IDeltaP,
    FFunctional,
    L2NormSq,
    DirichletEnergy,
    EntropyL2,
    LpIntegral { p: f64 },
    LogMomentLp { p: f64 },
    JEnergy { omega: f64 },
    JDeltaEnergy { omega: f64 },
}

impl FunctionalId {
    fn name(&self) -> &'static str {
        match self {
            FunctionalId::IDelta => "i_delta",
            FunctionalId::IDeltaP => "i_delta_p",
            FunctionalId::FFunctional => "f_functional",
            FunctionalId::L2NormSq => "l2_norm_sq",
            FunctionalId::DirichletEnergy => "dirichlet_energy",
            FunctionalId::EntropyL2 => "entropy_l2",
            FunctionalId::LpIntegral { .. } => "lp_integral",
            FunctionalId::LogMomentLp { .. } => "log_moment_lp",
            FunctionalId::JEnergy { .. } => "j_energy",
            FunctionalId::JDeltaEnergy { .. } => "j_delta_energy",
        }
    }

    fn parameter(&self) -> Option<f64> {
        match self {
            FunctionalId::LpIntegral { p } | FunctionalId::LogMomentLp { p } => Some(*p),
            FunctionalId::JEnergy { omega } | FunctionalId::JDeltaEnergy { omega } => Some(*omega),
            _ => None,
        }
    }

    fn uses_delta(&self) -> bool {
        matches!(
            self,
            FunctionalId::IDelta | FunctionalId::IDeltaP | FunctionalId::JDeltaEnergy { .. }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

/// A declarative experiment. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub fields: Vec<Shape>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub engine: EngineSpec,
    /// Functionals for `eval`; defaults to `i_delta`.
    #[serde(default)]
    pub functionals: Vec<FunctionalId>,
    #[serde(default)]
    pub checks: Vec<InequalityId>,
    /// Constant at which `check` evaluates builder-based inequalities.
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A validated config ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub fields: Vec<ScalarField>,
    pub deltas: Vec<f64>,
    pub p: f64,
    pub envelope: Option<MonotoneEnvelope>,
    pub engine: EngineSpec,
    pub functionals: Vec<FunctionalId>,
    pub checks: Vec<InequalityId>,
    pub constant: Option<f64>,
    pub output: OutputConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Precondition(format!("config: {e}")))
    }

    /// Schema and value checks; no computation happens before this passes.
    pub fn validate(self, seed_override: Option<u64>, workers: Option<usize>) -> crate::Result<Experiment> {
        let dim = Dimension::new(self.dim)?;
        let fields = self
            .fields
            .into_iter()
            .map(|s| ScalarField::new(dim, s))
            .collect::<crate::Result<Vec<_>>>()?;
        let deltas = match (self.kernel.delta, self.kernel.deltas) {
            (Some(_), Some(_)) => {
                return Err(Error::Precondition("kernel: give either delta or deltas".into()))
            }
            (Some(d), None) => vec![d],
            (None, Some(ds)) => ds,
            (None, None) => Vec::new(),
        };
        let p = self.kernel.p.unwrap_or(2.0);
        for &d in &deltas {
            KernelSpec::new(d).with_p(p).validate()?;
        }
        if let Some(e) = &self.kernel.envelope {
            e.validate()?;
        }
        let mut engine = self.engine;
        let seed = seed_override.or(self.seed).unwrap_or(engine.mc.master_seed);
        engine.mc.master_seed = seed;
        engine.mc.workers = workers;
        engine.mc.validate()?;
        engine.radial.validate()?;
        if let Some(c) = self.constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Precondition("constant must be positive and finite".into()));
            }
        }
        let functionals = if self.functionals.is_empty() {
            vec![FunctionalId::IDelta]
        } else {
            self.functionals
        };
        Ok(Experiment {
            fields,
            deltas,
            p,
            envelope: self.kernel.envelope,
            engine,
            functionals,
            checks: self.checks,
            constant: self.constant,
            output: self.output,
            seed,
        })
    }
}

fn workers_from_env() -> Result<Option<usize>, String> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")),
            Ok(w) => Ok(Some(w)),
        },
    }
}

/// Outcome of a subcommand before its files are written.
struct Tables {
    csv: Vec<u8>,
    json: Vec<u8>,
    code: i32,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), Failure>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn require_deltas(x: &Experiment, what: &str) -> Result<(), Failure> {
    if x.deltas.is_empty() {
        Err(Failure::Config(format!("{what} needs kernel.delta or kernel.deltas")))
    } else {
        Ok(())
    }
}

const EVAL_HEADER: [&str; 12] = [
    "field_index",
    "field",
    "functional",
    "parameter",
    "delta",
    "value",
    "stderr",
    "tail_bound",
    "discretization",
    "method",
    "n_effective",
    "diverged",
];

#[derive(Serialize)]
struct EvalRow {
    field_index: usize,
    field: String,
    functional: String,
    parameter: Option<f64>,
    delta: Option<f64>,
    estimate: Estimate,
}

fn eval_one(x: &Experiment, u: &ScalarField, f: &FunctionalId, delta: Option<f64>) -> crate::Result<Estimate> {
    let e = &x.engine;
    let d = delta.unwrap_or(f64::NAN);
    match f {
        FunctionalId::IDelta => i_delta(u, d, e),
        FunctionalId::IDeltaP => i_delta_p(u, &KernelSpec::new(d).with_p(x.p), e),
        FunctionalId::FFunctional => {
            let env = x
                .envelope
                .as_ref()
                .ok_or_else(|| Error::Precondition("f_functional needs kernel.envelope".into()))?;
            f_functional(u, env, x.p, e)
        }
        FunctionalId::L2NormSq => l2_norm_sq(u, e),
        FunctionalId::DirichletEnergy => dirichlet_energy(u, e),
        FunctionalId::EntropyL2 => entropy_l2(u, e),
        FunctionalId::LpIntegral { p } => lp_integral(u, *p, e),
        FunctionalId::LogMomentLp { p } => log_moment_lp(u, *p, e),
        FunctionalId::JEnergy { omega } => j_energy(u, EnergyParams { omega: *omega }, e),
        FunctionalId::JDeltaEnergy { omega } => {
            j_delta_energy(u, EnergyParams { omega: *omega }, d, e)
        }
    }
}

fn diverged_estimate() -> Estimate {
    Estimate {
        value: f64::NAN,
        diverged: true,
        ..Estimate::zero()
    }
}

fn cmd_eval(x: &Experiment) -> Result<Tables, Failure> {
    if x.functionals.iter().any(FunctionalId::uses_delta) {
        require_deltas(x, "a δ-dependent functional")?;
    }
    let mut rows = Vec::new();
    for (i, u) in x.fields.iter().enumerate() {
        for f in &x.functionals {
            let ds: Vec<Option<f64>> = if f.uses_delta() {
                x.deltas.iter().map(|&d| Some(d)).collect()
            } else {
                vec![None]
            };
            for d in ds {
                let estimate = match eval_one(x, u, f, d) {
                    Ok(e) => e,
                    Err(Error::Divergent(_)) => diverged_estimate(),
                    Err(e) => return Err(e.into()),
                };
                rows.push(EvalRow {
                    field_index: i,
                    field: u.label(),
                    functional: f.name().to_string(),
                    parameter: f.parameter(),
                    delta: d,
                    estimate,
                });
            }
        }
    }
    let csv = csv_bytes(&EVAL_HEADER, |w| {
        for r in &rows {
            let e = &r.estimate;
            w.write_record([
                r.field_index.to_string(),
                r.field.clone(),
                r.functional.clone(),
                opt(r.parameter),
                opt(r.delta),
                num(e.value),
                num(e.stderr),
                num(e.tail_bound),
                num(e.discretization),
                e.method.as_str().to_string(),
                e.n_effective.to_string(),
                e.diverged.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let code = if rows.iter().any(|r| r.estimate.diverged) {
        EXIT_DIVERGENCE
    } else {
        EXIT_OK
    };
    Ok(Tables {
        csv,
        json: serde_json::to_vec_pretty(&rows)?,
        code,
    })
}

const CHECK_HEADER: [&str; 14] = [
    "inequality_id",
    "field_index",
    "field",
    "delta",
    "lhs",
    "rhs",
    "deficit",
    "constant",
    "admissible_constant",
    "stat_margin",
    "numerical_error",
    "tolerance",
    "degenerate",
    "holds",
];

fn cmd_check(x: &Experiment) -> Result<Tables, Failure> {
    if x.checks.iter().any(InequalityId::uses_delta) {
        require_deltas(x, "a δ-dependent check")?;
    }
    let mut rows: Vec<(usize, Option<f64>, InequalityReport)> = Vec::new();
    for id in &x.checks {
        for (i, u) in x.fields.iter().enumerate() {
            let ds: Vec<Option<f64>> = if id.uses_delta() {
                x.deltas.iter().map(|&d| Some(d)).collect()
            } else {
                vec![None]
            };
            for d in ds {
                let mut r = id.check(u, d.unwrap_or(f64::NAN), &x.engine)?;
                if let (Some(c), Some(_)) = (x.constant, r.rhs_builder) {
                    r = r.at_constant(c);
                }
                rows.push((i, d, r));
            }
        }
    }
    let csv = csv_bytes(&CHECK_HEADER, |w| {
        for (i, d, r) in &rows {
            w.write_record([
                r.inequality_id.clone(),
                i.to_string(),
                r.inputs.field.clone(),
                opt(*d),
                num(r.lhs),
                opt(r.rhs),
                opt(r.deficit),
                opt(r.constant),
                opt(r.admissible_constant),
                num(r.stat_margin),
                num(r.numerical_error),
                num(r.tolerance()),
                r.degenerate.to_string(),
                r.holds().to_string(),
            ])?;
        }
        Ok(())
    })?;
    let reports: Vec<&InequalityReport> = rows.iter().map(|(_, _, r)| r).collect();
    let code = if reports.iter().any(|r| !r.holds()) {
        EXIT_VIOLATION
    } else if reports.iter().any(|r| r.degenerate) {
        EXIT_DIVERGENCE
    } else {
        EXIT_OK
    };
    Ok(Tables {
        csv,
        json: serde_json::to_vec_pretty(&reports)?,
        code,
    })
}

fn divergence_code(e: &Error) -> Option<i32> {
    matches!(e, Error::Divergent(_)).then_some(EXIT_DIVERGENCE)
}

fn cmd_sweep(x: &Experiment) -> Result<Tables, Failure> {
    require_deltas(x, "sweep")?;
    let mut sweeps = Vec::new();
    for u in &x.fields {
        match delta_sweep(u, &x.deltas, &x.engine) {
            Ok(s) => sweeps.push(s),
            Err(e) => {
                if let Some(code) = divergence_code(&e) {
                    eprintln!("nlsi: {e}");
                    return Ok(Tables {
                        csv: csv_bytes(&SWEEP_HEADER, |_| Ok(()))?,
                        json: b"[]".to_vec(),
                        code,
                    });
                }
                return Err(e.into());
            }
        }
    }
    let csv = csv_bytes(&SWEEP_HEADER, |w| {
        for (i, s) in sweeps.iter().enumerate() {
            for ((d, e), r) in s.deltas.iter().zip(&s.values).zip(&s.ratios) {
                w.write_record([
                    i.to_string(),
                    x.fields[i].label(),
                    num(*d),
                    num(e.value),
                    num(e.stderr),
                    num(*r),
                    num(e.tail_bound),
                ])?;
            }
        }
        Ok(())
    })?;
    Ok(Tables {
        csv,
        json: serde_json::to_vec_pretty(&sweeps)?,
        code: EXIT_OK,
    })
}

const SWEEP_HEADER: [&str; 7] = [
    "field_index",
    "field",
    "delta",
    "value",
    "stderr",
    "ratio",
    "tail_bound",
];

const CONSTANTS_HEADER: [&str; 8] = [
    "inequality_id",
    "family_constant",
    "sup_all",
    "instances",
    "held_out",
    "excluded",
    "held_out_ok",
    "seed",
];

fn cmd_constants(x: &Experiment, strict: bool) -> Result<Tables, Failure> {
    let mut sweeps = Vec::new();
    for id in &x.checks {
        sweeps.push((id, sweep_family(&x.fields, &x.deltas, id, &x.engine, x.seed)?));
    }
    let csv = csv_bytes(&CONSTANTS_HEADER, |w| {
        for (id, s) in &sweeps {
            let name = serde_json::to_value(id)
                .ok()
                .and_then(|v| match v {
                    serde_json::Value::String(s) => Some(s),
                    serde_json::Value::Object(m) => m.keys().next().cloned(),
                    _ => None,
                })
                .unwrap_or_default();
            w.write_record([
                name,
                opt(s.family_constant),
                opt(s.sup_all),
                s.reports.len().to_string(),
                s.held_out.len().to_string(),
                s.excluded.len().to_string(),
                s.held_out_ok.to_string(),
                x.seed.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let code = if sweeps.iter().any(|(_, s)| !s.held_out_ok) {
        EXIT_VIOLATION
    } else if strict && sweeps.iter().any(|(_, s)| !s.excluded.is_empty()) {
        EXIT_DIVERGENCE
    } else {
        EXIT_OK
    };
    let json: Vec<_> = sweeps.iter().map(|(_, s)| s).collect();
    Ok(Tables {
        csv,
        json: serde_json::to_vec_pretty(&json)?,
        code,
    })
}

const QN_HEADER: [&str; 8] = [
    "dim",
    "estimate",
    "error",
    "derived",
    "relative_deviation",
    "inconsistent",
    "fields",
    "derived_provenance",
];

fn cmd_qn(x: &Experiment, strict: bool) -> Result<Tables, Failure> {
    require_deltas(x, "qn")?;
    let q = match estimate_qn(&x.fields, &x.deltas, &x.engine) {
        Ok(q) => q,
        Err(e) => {
            if let Some(code) = divergence_code(&e) {
                eprintln!("nlsi: {e}");
                return Ok(Tables {
                    csv: csv_bytes(&QN_HEADER, |_| Ok(()))?,
                    json: b"null".to_vec(),
                    code,
                });
            }
            return Err(e.into());
        }
    };
    let csv = csv_bytes(&QN_HEADER, |w| {
        w.write_record([
            q.dim.to_string(),
            num(q.estimate),
            num(q.error),
            num(q.derived),
            num(q.relative_deviation),
            q.inconsistent.to_string(),
            q.sweeps.len().to_string(),
            q.derived_provenance.clone(),
        ])?;
        Ok(())
    })?;
    let code = if strict && q.inconsistent {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    };
    Ok(Tables {
        csv,
        json: serde_json::to_vec_pretty(&q)?,
        code,
    })
}

/// Write via a sibling temp file and an atomic rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn resolve(out_dir: Option<&Path>, configured: Option<&PathBuf>, default: String) -> PathBuf {
    let p = configured.cloned().unwrap_or_else(|| PathBuf::from(default));
    match out_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p,
    }
}

fn execute(name: &str, args: &CommonArgs) -> i32 {
    let workers = match workers_from_env() {
        Ok(w) => w,
        Err(m) => {
            eprintln!("nlsi: {m}");
            return EXIT_CONFIG;
        }
    };
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("nlsi: cannot read {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let x = match ExperimentConfig::from_json(&text).and_then(|c| c.validate(args.seed, workers)) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("nlsi: {e}");
            return EXIT_CONFIG;
        }
    };
    let tables = match name {
        "eval" => cmd_eval(&x),
        "check" => cmd_check(&x),
        "sweep" => cmd_sweep(&x),
        "constants" => cmd_constants(&x, args.strict),
        _ => cmd_qn(&x, args.strict),
    };
    let t = match tables {
        Ok(t) => t,
        Err(Failure::Config(m)) => {
            eprintln!("nlsi: {m}");
            return EXIT_CONFIG;
        }
        Err(Failure::Io(m)) => {
            eprintln!("nlsi: {m}");
            return EXIT_IO;
        }
    };
    let out_dir = args.out_dir.as_deref();
    let csv_path = resolve(out_dir, x.output.csv.as_ref(), format!("{name}.csv"));
    let json_path = resolve(out_dir, x.output.json.as_ref(), format!("{name}.json"));
    for (p, b) in [(&csv_path, &t.csv), (&json_path, &t.json)] {
        if let Err(e) = write_atomic(p, b) {
            eprintln!("nlsi: cannot write {}: {e}", p.display());
            return EXIT_IO;
        }
    }
    t.code
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Eval(a) => execute("eval", a),
        Command::Check(a) => execute("check", a),
        Command::Sweep(a) => execute("sweep", a),
        Command::Constants(a) => execute("constants", a),
        Command::Qn(a) => execute("qn", a),
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> String {
        format!(
            r#"{{"dim": 3, "fields": [{{"gaussian": {{"center": [0,0,0], "rate": 1.0, "amplitude": 1.0}}}}]{extra}}}"#
        )
    }

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(&cfg("")).unwrap();
        let x = c.validate(Some(9), Some(1)).unwrap();
        assert_eq!(x.seed, 9);
        assert_eq!(x.engine.mc.workers, Some(1));
        assert_eq!(x.functionals, vec![FunctionalId::IDelta]);
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        assert!(ExperimentConfig::from_json(&cfg(r#", "bogus": 1"#)).is_err());
        assert!(ExperimentConfig::from_json(&cfg(r#", "kernel": {"delta": 0.1, "x": 2}"#)).is_err());
        assert!(ExperimentConfig::from_json(&cfg(r#", "engine": {"mc": {"n": 3}}"#)).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let c = ExperimentConfig::from_json(&cfg(r#", "kernel": {"delta": -1}"#)).unwrap();
        assert!(c.validate(None, None).is_err());
        let c = ExperimentConfig::from_json(r#"{"dim": 3, "fields": [{"gaussian": {"center": [0,0], "rate": 1, "amplitude": 1}}]}"#).unwrap();
        assert!(c.validate(None, None).is_err());
    }

    #[test]
    fn functional_and_check_ids_parse() {
        let c = ExperimentConfig::from_json(&cfg(
            r#", "functionals": ["entropy_l2", {"lp_integral": {"p": 3}}],
                "checks": ["gauss_lsi", {"nonlocal_sobolev": {"lambda": 1}},
                           {"envelope_lsi": {"envelope": {"power_law": {"q": 3}}}},
                           {"diamagnetic": {"potential": "zero"}}]"#,
        ))
        .unwrap();
        assert_eq!(c.functionals.len(), 2);
        assert_eq!(c.checks.len(), 4);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("nlsi-cli-{}", std::process::id()));
        let p = dir.join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(dir).unwrap();
    }
}
