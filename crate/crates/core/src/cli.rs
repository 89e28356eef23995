//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on input errors (bad flags, parse errors,
//! unbound variables, undefined operations, malformed job lines), 3 when an
//! analysis aborts with an empty meet.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{ArgGroup, Parser};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::dot::to_dot;
use crate::error::{Error, Result};
use crate::expr::{format_rational, is_identifier, parse, parse_rational, DomainEnv, Rational};
use crate::interval::{round_outward, Interval};
use crate::rules::{load_manifest, rule_set, Rule};
use crate::runner::{analyze_with_graph, Report, RunConfig, RunStats, StopReason, Witness};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "egraph-bounds",
    version,
    about = "Tighten interval bounds of real expressions by equality saturation"
)]
#[command(group(ArgGroup::new("job").required(true).args(["expr", "input"])))]
pub struct Args {
    /// Expression as an s-expression, e.g. "(/ x (+ x y))"
    #[arg(long, value_name = "S")]
    pub expr: Option<String>,
    /// Variable domain; endpoints may be integers, decimals or p/q
    #[arg(long = "var", value_name = "NAME=LO:HI", requires = "expr")]
    pub vars: Vec<String>,
    /// Batch file with one JSON job per line
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Rule manifest replacing the built-in catalog
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// Saturation iteration limit [default: 30]
    #[arg(long = "max-iters", value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: Option<u64>,
    /// E-node limit [default: 50000]
    #[arg(long = "max-nodes", value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub max_nodes: Option<u64>,
    /// Time budget per analysis in seconds [default: 10]
    #[arg(long, value_name = "SECS", value_parser = parse_timeout)]
    pub timeout: Option<f64>,
    /// Emit JSON reports instead of text
    #[arg(long)]
    pub json: bool,
    /// Write the saturated e-graph in Graphviz format
    #[arg(long = "dump-dot", value_name = "FILE", requires = "expr")]
    pub dump_dot: Option<PathBuf>,
}

fn parse_timeout(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

/// Limits that a job line or the command line may override.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub max_iters: Option<usize>,
    pub max_nodes: Option<usize>,
    pub timeout: Option<f64>,
}

impl ConfigOverrides {
    fn or(&self, fallback: &ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            max_iters: self.max_iters.or(fallback.max_iters),
            max_nodes: self.max_nodes.or(fallback.max_nodes),
            timeout: self.timeout.or(fallback.timeout),
        }
    }

    fn apply(&self, rules: &[Rule]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default().with_rules(rules.to_vec());
        if let Some(n) = self.max_iters {
            cfg.max_iterations = n;
        }
        if let Some(n) = self.max_nodes {
            if n == 0 {
                return Err(Error::Input("max_nodes must be positive".into()));
            }
            cfg.max_nodes = n;
        }
        if let Some(t) = self.timeout {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Input("timeout must be a positive number".into()));
            }
            cfg.time_limit = Duration::from_secs_f64(t);
        }
        Ok(cfg)
    }
}

/// One analysis request: expression text, variable domains and limits.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub expr: String,
    #[serde(default, deserialize_with = "deserialize_vars")]
    pub vars: BTreeMap<String, (Rational, Rational)>,
    #[serde(default)]
    pub config: ConfigOverrides,
}

fn deserialize_vars<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<String, (Rational, Rational)>, D::Error> {
    let raw: BTreeMap<String, [serde_json::Value; 2]> = BTreeMap::deserialize(d)?;
    raw.into_iter()
        .map(|(name, [lo, hi])| {
            let lo = endpoint(&lo).map_err(D::Error::custom)?;
            let hi = endpoint(&hi).map_err(D::Error::custom)?;
            Ok((name, (lo, hi)))
        })
        .collect()
}

fn endpoint(v: &serde_json::Value) -> std::result::Result<Rational, String> {
    let text = match v {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        other => return Err(format!("endpoint must be a number or string, got {other}")),
    };
    match parse_rational(&text) {
        Some(Ok(r)) => Ok(r),
        Some(Err(e)) => Err(e.to_string()),
        None => Err(format!("`{text}` is not a rational number")),
    }
}

impl JobSpec {
    pub fn parse_line(line: &str) -> Result<JobSpec> {
        serde_json::from_str(line).map_err(|e| Error::Input(format!("malformed job: {e}")))
    }

    pub fn domain(&self) -> Result<DomainEnv> {
        let mut env = DomainEnv::new();
        for (name, (lo, hi)) in &self.vars {
            if !is_identifier(name) {
                return Err(Error::Input(format!("invalid variable name `{name}`")));
            }
            env.insert(name, rational_domain(name, lo, hi)?);
        }
        Ok(env)
    }
}

fn rational_domain(name: &str, lo: &Rational, hi: &Rational) -> Result<Interval> {
    if lo > hi {
        return Err(Error::InvalidInterval(format!(
            "domain of {name}: {} exceeds {}",
            format_rational(lo),
            format_rational(hi)
        )));
    }
    Ok(round_outward(lo, hi))
}

/// Parses `NAME=LO:HI`.
pub fn parse_var(spec: &str) -> Result<(String, Rational, Rational)> {
    let bad = || Error::Input(format!("expected NAME=LO:HI, got `{spec}`"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let name = name.trim();
    if !is_identifier(name) {
        return Err(Error::Input(format!("invalid variable name `{name}`")));
    }
    let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
    let num = |t: &str| match parse_rational(t.trim()) {
        Some(r) => r,
        None => Err(Error::Input(format!("`{}` is not a rational number", t.trim()))),
    };
    Ok((name.to_string(), num(lo)?, num(hi)?))
}

/// A finished analysis together with the domains it ran on.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub env: DomainEnv,
    pub report: Report,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyMeet { .. } => 3,
        _ => 2,
    }
}

pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let rules = match &args.rules {
        Some(path) => match load_manifest(path) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return 2;
            }
        },
        None => rule_set(),
    };
    let overrides = ConfigOverrides {
        max_iters: args.max_iters.map(|n| n as usize),
        max_nodes: args.max_nodes.map(|n| n as usize),
        timeout: args.timeout,
    };
    match &args.input {
        Some(path) => run_batch(path, &rules, &overrides, args.json, out, err),
        None => run_single(&args, &rules, &overrides, out, err),
    }
}

fn run_single(
    args: &Args,
    rules: &[Rule],
    overrides: &ConfigOverrides,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    let result = (|| {
        let mut vars = BTreeMap::new();
        for spec in &args.vars {
            let (name, lo, hi) = parse_var(spec)?;
            vars.insert(name, (lo, hi));
        }
        let job = JobSpec {
            expr: args.expr.clone().unwrap_or_default(),
            vars,
            config: ConfigOverrides::default(),
        };
        let (outcome, dot) = run_job(&job, rules, overrides, args.dump_dot.is_some())?;
        if let (Some(path), Some(dot)) = (&args.dump_dot, dot) {
            std::fs::write(path, dot)
                .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(outcome)
    })();
    match result {
        Ok(outcome) => {
            let text = if args.json {
                report_to_json(&outcome)
            } else {
                format_text(&outcome)
            };
            let _ = writeln!(out, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run_job(
    job: &JobSpec,
    rules: &[Rule],
    overrides: &ConfigOverrides,
    want_dot: bool,
) -> Result<(Outcome, Option<String>)> {
    let expr = parse(&job.expr)?;
    let env = job.domain()?;
    let cfg = job.config.or(overrides).apply(rules)?;
    let (report, g, root) = analyze_with_graph(&expr, &env, &cfg)?;
    let dot = want_dot.then(|| to_dot(&g, Some(root)));
    Ok((Outcome { env, report }, dot))
}

/// Runs every job line of `path`, in parallel, reporting in input order.
pub fn run_batch(
    path: &Path,
    rules: &[Rule],
    overrides: &ConfigOverrides,
    json: bool,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let results: Vec<(usize, Result<Outcome>)> = lines
        .par_iter()
        .map(|&(n, line)| {
            let r = JobSpec::parse_line(line)
                .and_then(|job| run_job(&job, rules, overrides, false))
                .map(|(o, _)| o);
            (n, r)
        })
        .collect();

    let mut code = 0;
    let mut rows = Vec::new();
    for (n, result) in &results {
        match result {
            Ok(outcome) => {
                if json {
                    let _ = writeln!(out, "{}", report_to_json(outcome));
                } else {
                    let _ = writeln!(out, "{}\n", format_text(outcome));
                }
                rows.push(summary_row(outcome));
            }
            Err(e) => {
                let _ = writeln!(err, "error: line {n}: {e}");
                code = code.max(exit_code(e));
                rows.push([format!("line {n}"), "error".into(), "error".into(), "-".into()]);
            }
        }
    }
    if !json {
        let _ = write!(out, "{}", summary_table(&rows));
    }
    code
}

fn format_percent(change: Option<f64>) -> String {
    match change {
        Some(c) => format!("{}%", ((c * 100.0).round() as i64)),
        None => "undefined".into(),
    }
}

fn summary_row(o: &Outcome) -> [String; 4] {
    [
        o.report.expr.to_string(),
        o.report.initial.to_string(),
        o.report.improved.to_string(),
        format_percent(o.report.width_change),
    ]
}

/// Table with the columns Expression, Initial, Improved, Width Change.
pub fn summary_table(rows: &[[String; 4]]) -> String {
    let header = ["Expression", "Initial", "Improved", "Width Change"];
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 4]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut s = line(header);
    s.push_str(&line(widths.map(|w| "-".repeat(w)).each_ref().map(String::as_str)));
    for row in rows {
        s.push_str(&line(row.each_ref().map(String::as_str)));
    }
    s
}

pub fn format_text(o: &Outcome) -> String {
    let r = &o.report;
    let vars: Vec<String> = o.env.iter().map(|(n, d)| format!("{n} in {d}")).collect();
    let witness = |w: &Witness| {
        let tag = if w.attained { "attains bound" } else { "meet-only" };
        format!("{}  {}  ({tag})", w.expr, w.interval)
    };
    let s = &r.stats;
    format!(
        "expression:    {}\n\
         domain:        {}\n\
         initial:       {}\n\
         improved:      {}\n\
         width change:  {}\n\
         witness lo:    {}\n\
         witness hi:    {}\n\
         stop reason:   {}\n\
         stats:         {} iterations, {} classes, {} nodes, {} applications, {:.3} s",
        r.expr,
        if vars.is_empty() { "(none)".into() } else { vars.join(", ") },
        r.initial,
        r.improved,
        format_percent(r.width_change),
        witness(&r.witness_lo),
        witness(&r.witness_hi),
        r.stop_reason.name(),
        s.iterations,
        s.classes,
        s.nodes,
        s.applications,
        s.wall_time.as_secs_f64(),
    )
}

/// A float written with 17 significant digits, or `"inf"`/`"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsonFloat(pub f64);

impl Serialize for JsonFloat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for JsonFloat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(JsonFloat)
                .ok_or_else(|| D::Error::custom("number out of range")),
            serde_json::Value::String(s) if s == "inf" => Ok(JsonFloat(f64::INFINITY)),
            serde_json::Value::String(s) if s == "-inf" => Ok(JsonFloat(f64::NEG_INFINITY)),
            other => Err(D::Error::custom(format!("expected a float, got {other}"))),
        }
    }
}

type JsonInterval = [JsonFloat; 2];

fn json_interval(iv: &Interval) -> JsonInterval {
    [JsonFloat(iv.lo()), JsonFloat(iv.hi())]
}

fn from_json_interval(iv: &JsonInterval) -> Result<Interval> {
    Interval::new(iv[0].0, iv[1].0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonWitness {
    pub expr: String,
    pub interval: JsonInterval,
    pub attained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonStats {
    pub iterations: usize,
    pub classes: usize,
    pub nodes: usize,
    pub applications: usize,
    pub wall_time_us: u64,
}

/// The JSON report layout, version [`SCHEMA_VERSION`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub schema: u32,
    pub expr: String,
    pub vars: BTreeMap<String, JsonInterval>,
    pub initial: JsonInterval,
    pub improved: JsonInterval,
    /// Fraction, not percent; `null` when undefined.
    pub width_change: Option<JsonFloat>,
    pub witness_lo: JsonWitness,
    pub witness_hi: JsonWitness,
    pub stop_reason: String,
    pub stats: JsonStats,
}

impl JsonReport {
    pub fn from_outcome(o: &Outcome) -> JsonReport {
        let r = &o.report;
        let witness = |w: &Witness| JsonWitness {
            expr: w.expr.to_string(),
            interval: json_interval(&w.interval),
            attained: w.attained,
        };
        JsonReport {
            schema: SCHEMA_VERSION,
            expr: r.expr.to_string(),
            vars: o
                .env
                .iter()
                .map(|(n, d)| (n.to_string(), json_interval(d)))
                .collect(),
            initial: json_interval(&r.initial),
            improved: json_interval(&r.improved),
            width_change: r.width_change.map(JsonFloat),
            witness_lo: witness(&r.witness_lo),
            witness_hi: witness(&r.witness_hi),
            stop_reason: r.stop_reason.name().to_string(),
            stats: JsonStats {
                iterations: r.stats.iterations,
                classes: r.stats.classes,
                nodes: r.stats.nodes,
                applications: r.stats.applications,
                wall_time_us: r.stats.wall_time.as_micros() as u64,
            },
        }
    }

    pub fn to_outcome(&self) -> Result<Outcome> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Input(format!("unsupported schema {}", self.schema)));
        }
        let witness = |w: &JsonWitness| -> Result<Witness> {
            Ok(Witness {
                expr: parse(&w.expr)?,
                interval: from_json_interval(&w.interval)?,
                attained: w.attained,
            })
        };
        let mut env = DomainEnv::new();
        for (n, d) in &self.vars {
            env.insert(n, from_json_interval(d)?);
        }
        let report = Report {
            expr: parse(&self.expr)?,
            initial: from_json_interval(&self.initial)?,
            improved: from_json_interval(&self.improved)?,
            width_change: self.width_change.map(|f| f.0),
            witness_lo: witness(&self.witness_lo)?,
            witness_hi: witness(&self.witness_hi)?,
            stop_reason: StopReason::from_name(&self.stop_reason).ok_or_else(|| {
                Error::Input(format!("unknown stop reason `{}`", self.stop_reason))
            })?,
            stats: RunStats {
                iterations: self.stats.iterations,
                classes: self.stats.classes,
                nodes: self.stats.nodes,
                applications: self.stats.applications,
                wall_time: Duration::from_micros(self.stats.wall_time_us),
            },
        };
        Ok(Outcome { env, report })
    }
}

pub fn report_to_json(o: &Outcome) -> String {
    serde_json::to_string(&JsonReport::from_outcome(o)).expect("report serializes")
}

pub fn report_from_json(text: &str) -> Result<Outcome> {
    let parsed: JsonReport =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed report: {e}")))?;
    parsed.to_outcome()
}

/// Builds a job from `(name, lo, hi)` triples written as on the command line.
pub fn job(expr: &str, vars: &[(&str, &str, &str)]) -> Result<JobSpec> {
    let mut map = BTreeMap::new();
    for (n, lo, hi) in vars {
        let (name, lo, hi) = parse_var(&format!("{n}={lo}:{hi}"))?;
        map.insert(name, (lo, hi));
    }
    Ok(JobSpec {
        expr: expr.to_string(),
        vars: map,
        config: ConfigOverrides::default(),
    })
}

/// Runs one job with the given rules and default limits.
pub fn run_spec(job: &JobSpec, rules: &[Rule]) -> Result<Outcome> {
    run_job(job, rules, &ConfigOverrides::default(), false).map(|(o, _)| o)
}
