//! The `hllab` command line.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 domain error, 4 a
//! certified violation of a theorem bound. Results go to standard output
//! (or `--output`), diagnostics to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{HlError, Result};
use crate::exponents::{
    bound_best, classify_regime, critical_exponent, subset_parameter_s, Exponent, PVector,
    RegimeTag, SubsetMode,
};
use crate::ksz::{growth_probe, DEFAULT_PROBE_STARTS, DEFAULT_TRIALS};
use crate::norms::{
    sup_norm, sup_norm_alternating, sup_norm_vertex_exact, NormConfig, NormResult,
    DEFAULT_MAX_ITERS, DEFAULT_STARTS, DEFAULT_TOL, DEFAULT_VERTEX_BUDGET_LOG2,
};
use crate::par;
use crate::scalar::{Field, Scalar};
use crate::search::{
    lower_bound_search, SearchConfig, DEFAULT_FINAL_STARTS, DEFAULT_RANDOM_SEED_FORMS,
    DEFAULT_RESTARTS, DEFAULT_STEPS, DEFAULT_STEP_SIZE,
};
use crate::seed::derive_seed;
use crate::tensor::{random_tensor, AnyTensor, CoeffTensor, Distribution};
use crate::verify::{
    batch_verify, resolve_constant, summarize, verify_inequality, verify_khinchine_step,
    BoundChoice, Ensemble, Verdict, VerificationRecord,
};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "HLLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hllab",
    version,
    about = "Hardy-Littlewood inequalities for multilinear forms"
)]
struct Cli {
    /// Worker threads (default: all available, or $HLLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NormMethodArg {
    Auto,
    Alternating,
    Vertex,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regime and critical exponent of p.
    Exponent {
        #[arg(long)]
        p: String,
    },
    /// Constant bounds for p.
    Bound {
        #[arg(long)]
        p: String,
        /// classical, universal, main or best.
        #[arg(long, default_value = "best")]
        rule: String,
        /// Subset mode: indices or values.
        #[arg(long, default_value = "indices")]
        mode: String,
        /// Let non-minimal subset bounds compete in the best rule.
        #[arg(long)]
        allow_extrapolated: bool,
    },
    /// Sup norm of one form.
    Norm {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        source: TensorSource,
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long, value_enum, default_value = "auto")]
        method: NormMethodArg,
    },
    /// Check an inequality on one form (--input) or a seeded ensemble (--count).
    Verify {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        source: TensorSource,
        /// Ensemble size; omit to check a single form.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "best")]
        rule: String,
        #[arg(long, default_value = "indices")]
        mode: String,
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the Khinchine-step inequality; --p lists p_1..p_s, the last
    /// slot is l_inf.
    KhinchineStep {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        source: TensorSource,
        /// Use the n×n identity matrix as the form.
        #[arg(long)]
        identity: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Lower-bound search for the optimal constant.
    Search {
        #[arg(long)]
        p: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_STEP_SIZE)]
        step_size: f64,
        #[arg(long, default_value_t = DEFAULT_RANDOM_SEED_FORMS)]
        random_seeds: usize,
        #[arg(long, default_value_t = DEFAULT_FINAL_STARTS)]
        final_starts: usize,
        #[arg(long, default_value = "indices")]
        mode: String,
        /// Extra starting tensors in the tensor JSON format.
        #[arg(long)]
        seed_file: Vec<PathBuf>,
        #[command(flatten)]
        norm: NormArgs,
        /// Write the best tensor here, and its record to <output>.record.json.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Growth of the best ratio in n for a fixed exponent q.
    Probe {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8, 16])]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        #[arg(long, default_value_t = DEFAULT_PROBE_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DistArg {
    Signs,
    Gaussian,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Signs => Distribution::Signs,
            DistArg::Gaussian => Distribution::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
struct TensorSource {
    /// Tensor JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Per-mode sizes of a random form, e.g. 3,3,3.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    #[arg(long, value_enum, default_value = "real")]
    field: FieldArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct NormArgs {
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    starts: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET_LOG2)]
    vertex_budget: u32,
    /// Never use the exact vertex oracle.
    #[arg(long)]
    no_oracles: bool,
}

impl NormArgs {
    fn config(&self, seed: u64) -> NormConfig {
        NormConfig {
            starts: self.starts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            vertex_budget_log2: self.vertex_budget,
            use_oracles: !self.no_oracles,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: &'a Value,
    result: R,
}

struct Ctx<'a> {
    command: &'static str,
    seed: Option<u64>,
    config: Value,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit<R: Serialize>(&mut self, result: R) -> Result<()> {
        let env = Envelope {
            version: VERSION,
            command: self.command,
            seed: self.seed,
            config: &self.config,
            result,
        };
        writeln!(self.out, "{}", serde_json::to_string(&env)?)?;
        Ok(())
    }
}

fn parse_p(s: &str) -> Result<PVector> {
    s.parse()
}

fn parse_slots(s: &str) -> Result<Vec<Exponent>> {
    s.split(',').map(str::parse).collect()
}

fn exit_code(e: &HlError) -> i32 {
    match e {
        HlError::Domain(_)
        | HlError::Range { .. }
        | HlError::Unsupported(_)
        | HlError::BudgetExceeded { .. } => EXIT_DOMAIN,
        _ => EXIT_USAGE,
    }
}

fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
    })
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let threads = resolve_threads(cli.threads);
    let command = cli.command;
    let result = par::with_threads(threads, || {
        let mut buf = Vec::new();
        let r = dispatch(command, &mut buf);
        (r, buf)
    });
    let (outcome, buf) = result;
    let _ = stdout.write_all(&buf);
    match outcome {
        Ok(Verdict::CertifiedViolation) => {
            let _ = writeln!(stderr, "error: certified violation of a theorem bound");
            EXIT_VIOLATION
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn witness_json<S: Scalar>(w: &[Vec<S>]) -> Value {
    Value::Array(
        w.iter()
            .map(|x| {
                Value::Array(
                    x.iter()
                        .map(|&v| match S::FIELD {
                            Field::Real => json!(v.re()),
                            Field::Complex => json!([v.re(), v.im()]),
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn norm_json<S: Scalar>(n: &NormResult<S>) -> Value {
    let mut v = serde_json::to_value(n.info()).unwrap_or(Value::Null);
    v["witness"] = witness_json(&n.witness);
    v
}

fn load_any(path: &Path) -> Result<AnyTensor> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HlError::invalid(format!("cannot read {}: {e}", path.display())))?;
    AnyTensor::from_json(&text)
}

fn verdict_of(records: &[VerificationRecord]) -> Verdict {
    if records
        .iter()
        .any(|r| r.verdict == Verdict::CertifiedViolation)
    {
        Verdict::CertifiedViolation
    } else if records.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    }
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_records(
    ctx: &mut Ctx<'_>,
    records: &[VerificationRecord],
    summary: Option<Value>,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<()> {
    let mut sink = open_output(output, &mut *ctx.out)?;
    match format {
        Format::Json => {
            for r in records {
                let env = Envelope {
                    version: VERSION,
                    command: ctx.command,
                    seed: ctx.seed,
                    config: &ctx.config,
                    result: r.line(),
                };
                writeln!(sink, "{}", serde_json::to_string(&env)?)?;
            }
            if let Some(s) = summary {
                let env = Envelope {
                    version: VERSION,
                    command: ctx.command,
                    seed: ctx.seed,
                    config: &ctx.config,
                    result: json!({ "summary": s }),
                };
                writeln!(sink, "{}", serde_json::to_string(&env)?)?;
            }
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut sink);
            w.write_record([
                "tensor_id",
                "seed",
                "lhs",
                "rho",
                "norm",
                "norm_method",
                "certified",
                "constant",
                "bound_source",
                "ratio",
                "verdict",
                "slack",
            ])?;
            for r in records {
                let l = r.line();
                let text = |v: Value| match v {
                    Value::String(s) => s,
                    Value::Null => String::new(),
                    other => other.to_string(),
                };
                w.write_record([
                    l.tensor_id.map(|i| i.to_string()).unwrap_or_default(),
                    l.seed.map(|s| s.to_string()).unwrap_or_default(),
                    l.lhs.to_string(),
                    l.rho.to_string(),
                    l.norm.to_string(),
                    text(serde_json::to_value(l.norm_method)?),
                    l.certified.to_string(),
                    l.constant.to_string(),
                    text(serde_json::to_value(l.bound_source)?),
                    l.ratio.map(|x| x.to_string()).unwrap_or_default(),
                    text(serde_json::to_value(l.verdict)?),
                    l.slack.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<Verdict> {
    match command {
        Command::Exponent { p } => cmd_exponent(&p, out),
        Command::Bound {
            p,
            rule,
            mode,
            allow_extrapolated,
        } => cmd_bound(&p, &rule, &mode, allow_extrapolated, out),
        Command::Norm {
            p,
            source,
            norm,
            method,
        } => cmd_norm(&p, &source, &norm, method, out),
        Command::Verify {
            p,
            source,
            count,
            rule,
            mode,
            norm,
            format,
            output,
        } => cmd_verify(
            &p, &source, count, &rule, &mode, &norm, format, &output, out,
        ),
        Command::KhinchineStep {
            p,
            source,
            identity,
            count,
            norm,
            format,
            output,
        } => cmd_khinchine(&p, &source, identity, count, &norm, format, &output, out),
        cmd @ Command::Search { .. } => cmd_search(cmd, out),
        cmd @ Command::Probe { .. } => cmd_probe(cmd, out),
    }
}

fn cmd_exponent(p: &str, out: &mut dyn Write) -> Result<Verdict> {
    let pv = parse_p(p)?;
    let regime = classify_regime(&pv);
    if regime.tag == RegimeTag::Invalid {
        return Err(HlError::domain(format!(
            "p = ({pv}) has |1/p| = {}; admissible tuples satisfy 0 <= |1/p| < 1",
            regime.recip_sum
        )));
    }
    let rho = critical_exponent(&pv)?;
    let mut ctx = Ctx {
        command: "exponent",
        seed: None,
        config: json!({ "p": pv }),
        out,
    };
    ctx.emit(json!({
        "p": pv,
        "m": pv.m(),
        "recip_sum": regime.recip_sum,
        "regime": regime.tag,
        "bh_admissible": regime.bh_admissible,
        "rho": rho,
    }))?;
    Ok(Verdict::Holds)
}

fn cmd_bound(
    p: &str,
    rule: &str,
    mode: &str,
    allow_extrapolated: bool,
    out: &mut dyn Write,
) -> Result<Verdict> {
    let pv = parse_p(p)?;
    let choice: BoundChoice = rule.parse()?;
    let mode: SubsetMode = mode.parse()?;
    let (constant, source) = if choice == BoundChoice::Best {
        let b = bound_best(&pv, mode, allow_extrapolated)?;
        (b.value, b.source)
    } else {
        resolve_constant(&pv, choice, mode)?
    };
    let best = bound_best(&pv, mode, allow_extrapolated)?;
    let subset = if classify_regime(&pv).tag == RegimeTag::DsRange {
        subset_parameter_s(&pv, mode)
            .ok()
            .map(serde_json::to_value)
            .transpose()?
    } else {
        None
    };
    let mut ctx = Ctx {
        command: "bound",
        seed: None,
        config: json!({
            "p": pv,
            "rule": choice,
            "mode": mode,
            "allow_extrapolated": allow_extrapolated,
        }),
        out,
    };
    ctx.emit(json!({
        "constant": constant,
        "bound_source": source,
        "ties": best.ties,
        "candidates": best.candidates,
        "subset": subset,
    }))?;
    Ok(Verdict::Holds)
}

fn source_config(source: &TensorSource, extra: Value) -> Value {
    let mut v = json!({
        "input": source.input.as_ref().map(|p| p.display().to_string()),
        "dims": source.dims,
        "dist": source.dist,
        "field": source.field,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

fn norm_config_json(n: &NormArgs) -> Value {
    json!({
        "starts": n.starts,
        "max_iters": n.max_iters,
        "tol": n.tol,
        "vertex_budget_log2": n.vertex_budget,
        "use_oracles": !n.no_oracles,
    })
}

fn single_tensor(source: &TensorSource) -> Result<AnyTensor> {
    if let Some(path) = &source.input {
        return load_any(path);
    }
    if source.dims.is_empty() {
        return Err(HlError::invalid(
            "give --input FILE or --dims for a random form",
        ));
    }
    let dist = source.dist.into();
    Ok(match Field::from(source.field) {
        Field::Real => random_tensor::<f64>(&source.dims, dist, source.seed)?.into(),
        Field::Complex => random_tensor::<Complex64>(&source.dims, dist, source.seed)?.into(),
    })
}

fn cmd_norm(
    p: &str,
    source: &TensorSource,
    norm: &NormArgs,
    method: NormMethodArg,
    out: &mut dyn Write,
) -> Result<Verdict> {
    let slots = parse_slots(p)?;
    let tensor = single_tensor(source)?;
    let cfg = norm.config(derive_seed(source.seed, &[1]));
    fn go<S: Scalar>(
        t: &CoeffTensor<S>,
        slots: &[Exponent],
        cfg: &NormConfig,
        method: NormMethodArg,
    ) -> Result<NormResult<S>> {
        match method {
            NormMethodArg::Auto => sup_norm(t, slots, cfg),
            NormMethodArg::Alternating => sup_norm_alternating(t, slots, cfg),
            NormMethodArg::Vertex => {
                if slots.len() != t.order() || !slots.iter().all(|e| e.is_infinite()) {
                    return Err(HlError::domain("vertex enumeration needs every p_k = inf"));
                }
                sup_norm_vertex_exact(t, cfg.vertex_budget_log2)
            }
        }
    }
    let result = match &tensor {
        AnyTensor::Real(t) => norm_json(&go(t, &slots, &cfg, method)?),
        AnyTensor::Complex(t) => norm_json(&go(t, &slots, &cfg, method)?),
    };
    let mut config = source_config(source, norm_config_json(norm));
    config["p"] = json!(slots);
    config["method"] = json!(method);
    let mut ctx = Ctx {
        command: "norm",
        seed: Some(source.seed),
        config,
        out,
    };
    ctx.emit(result)?;
    Ok(Verdict::Holds)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    p: &str,
    source: &TensorSource,
    count: Option<usize>,
    rule: &str,
    mode: &str,
    norm: &NormArgs,
    format: Format,
    output: &Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<Verdict> {
    let pv = parse_p(p)?;
    let choice: BoundChoice = rule.parse()?;
    let mode: SubsetMode = mode.parse()?;
    let mut config = source_config(source, norm_config_json(norm));
    config["p"] = json!(pv);
    config["rule"] = json!(choice);
    config["mode"] = json!(mode);
    config["count"] = json!(count);
    config["format"] = json!(format);
    let mut ctx = Ctx {
        command: "verify",
        seed: Some(source.seed),
        config,
        out,
    };

    let (records, summary) = match count {
        Some(count) => {
            if source.input.is_some() {
                return Err(HlError::invalid("--count draws an ensemble; drop --input"));
            }
            let dims = if source.dims.is_empty() {
                vec![2; pv.m()]
            } else {
                source.dims.clone()
            };
            let ens = Ensemble {
                dist: source.dist.into(),
                dims,
                count,
                seed: source.seed,
            };
            let cfg = norm.config(source.seed);
            let s = match Field::from(source.field) {
                Field::Real => batch_verify::<f64>(&ens, &pv, choice, mode, &cfg)?,
                Field::Complex => batch_verify::<Complex64>(&ens, &pv, choice, mode, &cfg)?,
            };
            let summary = serde_json::to_value(&s)?;
            (s.records, Some(summary))
        }
        None => {
            let tensor = single_tensor(source)?;
            let cfg = norm.config(derive_seed(source.seed, &[1]));
            let rec = match &tensor {
                AnyTensor::Real(t) => verify_inequality(t, &pv, choice, mode, &cfg)?,
                AnyTensor::Complex(t) => verify_inequality(t, &pv, choice, mode, &cfg)?,
            };
            (vec![rec], None)
        }
    };
    write_records(&mut ctx, &records, summary, format, output)?;
    Ok(verdict_of(&records))
}

#[allow(clippy::too_many_arguments)]
fn cmd_khinchine(
    p: &str,
    source: &TensorSource,
    identity: Option<usize>,
    count: Option<usize>,
    norm: &NormArgs,
    format: Format,
    output: &Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<Verdict> {
    let slots = parse_slots(p)?;
    let mut config = source_config(source, norm_config_json(norm));
    config["p"] = json!(slots);
    config["identity"] = json!(identity);
    config["count"] = json!(count);
    config["format"] = json!(format);
    let mut ctx = Ctx {
        command: "khinchine-step",
        seed: Some(source.seed),
        config,
        out,
    };

    fn batch<S: Scalar>(
        slots: &[Exponent],
        source: &TensorSource,
        dims: &[usize],
        count: usize,
        norm: &NormArgs,
    ) -> Result<Vec<VerificationRecord>> {
        par::map_indexed(count, |i| {
            let tseed = crate::verify::ensemble_tensor_seed(source.seed, i);
            let t: CoeffTensor<S> = random_tensor(dims, source.dist.into(), tseed)?;
            let cfg = norm.config(derive_seed(source.seed, &[i as u64, 1]));
            let mut r = verify_khinchine_step(&t, slots, &cfg)?;
            r.seed = Some(tseed);
            r.tensor_id = Some(i);
            Ok(r)
        })
        .into_iter()
        .collect()
    }

    let (records, summary) = match (identity, count) {
        (Some(n), _) => {
            let t = CoeffTensor::<f64>::identity(n)?;
            let cfg = norm.config(derive_seed(source.seed, &[1]));
            (vec![verify_khinchine_step(&t, &slots, &cfg)?], None)
        }
        (None, Some(count)) => {
            if count < 1 {
                return Err(HlError::invalid("batch needs count >= 1"));
            }
            let dims = if source.dims.is_empty() {
                vec![2; slots.len() + 1]
            } else {
                source.dims.clone()
            };
            let recs = match Field::from(source.field) {
                Field::Real => batch::<f64>(&slots, source, &dims, count, norm)?,
                Field::Complex => batch::<Complex64>(&slots, source, &dims, count, norm)?,
            };
            let (constant, src) = (recs[0].constant, recs[0].bound_source);
            let s = summarize(recs, constant, src);
            let summary = serde_json::to_value(&s)?;
            (s.records, Some(summary))
        }
        (None, None) => {
            let tensor = single_tensor(source)?;
            let cfg = norm.config(derive_seed(source.seed, &[1]));
            let rec = match &tensor {
                AnyTensor::Real(t) => verify_khinchine_step(t, &slots, &cfg)?,
                AnyTensor::Complex(t) => verify_khinchine_step(t, &slots, &cfg)?,
            };
            (vec![rec], None)
        }
    };
    write_records(&mut ctx, &records, summary, format, output)?;
    Ok(verdict_of(&records))
}

fn cmd_search(cmd: Command, out: &mut dyn Write) -> Result<Verdict> {
    let Command::Search {
        p,
        n,
        field,
        seed,
        restarts,
        steps,
        step_size,
        random_seeds,
        final_starts,
        mode,
        seed_file,
        norm,
        output,
    } = cmd
    else {
        unreachable!()
    };
    let pv = parse_p(&p)?;
    let mode: SubsetMode = mode.parse()?;
    let cfg = SearchConfig {
        restarts,
        steps,
        step_size,
        seed,
        norm_cfg: norm.config(seed),
        random_seed_forms: random_seeds,
        final_starts,
        mode,
    };
    let files: Vec<AnyTensor> = seed_file
        .iter()
        .map(|f| load_any(f))
        .collect::<Result<_>>()?;

    fn go<S: Scalar>(
        pv: &PVector,
        n: usize,
        cfg: &SearchConfig,
        extra: Vec<CoeffTensor<S>>,
    ) -> Result<(Value, AnyTensor, Verdict)>
    where
        AnyTensor: From<CoeffTensor<S>>,
    {
        let o = lower_bound_search(pv, n, cfg, &extra)?;
        let b = &o.best;
        let record = json!({
            "ratio": b.ratio,
            "lhs": b.lhs,
            "p": pv,
            "n": n,
            "bound": o.bound,
            "bound_source": o.bound_source,
            "verdict": o.verdict,
            "certified": b.norm.certified_exact,
            "seed_label": b.seed_label,
            "start_index": b.start_index,
            "iterations": b.iterations,
            "accepted_steps": b.accepted_steps,
            "norm": norm_json(&b.norm),
            "starts": o.all.iter().map(|r| json!({
                "seed_label": r.seed_label,
                "ratio": r.ratio,
                "certified": r.norm.certified_exact,
            })).collect::<Vec<_>>(),
        });
        Ok((record, AnyTensor::from(b.tensor.clone()), o.verdict))
    }

    let wrong_field = || HlError::invalid("seed file field differs from --field");
    let (mut record, best, verdict) = match Field::from(field) {
        Field::Real => {
            let extra = files
                .into_iter()
                .map(|t| match t {
                    AnyTensor::Real(t) => Ok(t),
                    _ => Err(wrong_field()),
                })
                .collect::<Result<Vec<_>>>()?;
            go::<f64>(&pv, n, &cfg, extra)?
        }
        Field::Complex => {
            let extra = files
                .into_iter()
                .map(|t| match t {
                    AnyTensor::Complex(t) => Ok(t),
                    _ => Err(wrong_field()),
                })
                .collect::<Result<Vec<_>>>()?;
            go::<Complex64>(&pv, n, &cfg, extra)?
        }
    };
    if let Some(path) = &output {
        best.save(path)?;
        let mut side = path.clone().into_os_string();
        side.push(".record.json");
        std::fs::write(&side, serde_json::to_string(&record)? + "\n")?;
    }
    record["tensor"] = best.to_json_value()?;

    let mut config = norm_config_json(&norm);
    let extra = json!({
        "p": pv,
        "n": n,
        "field": field,
        "restarts": restarts,
        "steps": steps,
        "step_size": step_size,
        "random_seeds": random_seeds,
        "final_starts": final_starts,
        "mode": mode,
        "seed_file": seed_file.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
        "output": output.as_ref().map(|f| f.display().to_string()),
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut config, extra) {
        a.extend(b);
    }
    let mut ctx = Ctx {
        command: "search",
        seed: Some(seed),
        config,
        out,
    };
    ctx.emit(record)?;
    Ok(verdict)
}

fn cmd_probe(cmd: Command, out: &mut dyn Write) -> Result<Verdict> {
    let Command::Probe {
        p,
        q,
        n_list,
        trials,
        seed,
        field,
        starts,
        max_iters,
        tol,
        format,
        output,
    } = cmd
    else {
        unreachable!()
    };
    let pv = parse_p(&p)?;
    let cfg = NormConfig {
        starts,
        max_iters,
        tol,
        seed,
        ..NormConfig::default()
    };
    let table = match Field::from(field) {
        Field::Real => growth_probe::<f64>(&pv, q, &n_list, trials, seed, &cfg)?,
        Field::Complex => growth_probe::<Complex64>(&pv, q, &n_list, trials, seed, &cfg)?,
    };
    let config = json!({
        "p": pv,
        "q": q,
        "n_list": n_list,
        "trials": trials,
        "field": field,
        "starts": starts,
        "max_iters": max_iters,
        "tol": tol,
        "format": format,
        "output": output.as_ref().map(|f| f.display().to_string()),
    });
    let mut ctx = Ctx {
        command: "probe",
        seed: Some(seed),
        config,
        out,
    };
    match format {
        Format::Csv => {
            let sink = open_output(&output, &mut *ctx.out)?;
            table.write_csv(sink)?;
        }
        Format::Json => match &output {
            Some(path) => {
                let mut buf = Vec::new();
                let mut file_ctx = Ctx {
                    command: ctx.command,
                    seed: ctx.seed,
                    config: ctx.config.clone(),
                    out: &mut buf,
                };
                file_ctx.emit(&table)?;
                std::fs::write(path, buf)?;
            }
            None => ctx.emit(&table)?,
        },
    }
    Ok(Verdict::Holds)
}
