//! Command-line front end.
//!
//! Exit codes: 0 verified or ok, 1 counterexample or violation found, 2 error,
//! 3 indeterminate.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::charge::{self, GrowthSpec, PSequence, PSequenceFile};
use crate::extension;
use crate::lang;
use crate::lemmas;
use crate::numerics::parse_bigint;
use crate::snz::{self, Overall, SearchOptions, Strategy};

pub const SCHEMA: &str = "snzlab/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "snzlab", version, about = "Integer-valued charges on clopen sets of Cantor space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// exhaustive | mitm
    #[arg(long, default_value = "exhaustive")]
    pub strategy: String,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Wall-clock budget for the whole run; unlimited when omitted.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Lexicographically least counterexample, zeroed timing.
    #[arg(long)]
    pub deterministic: bool,
}

impl SearchArgs {
    fn options(&self) -> Result<SearchOptions, String> {
        let mut o = SearchOptions::default();
        o.strategy = self.strategy.parse::<Strategy>().map_err(|e| e.to_string())?;
        if let Some(j) = self.jobs {
            o.jobs = j as usize;
        }
        o.budget = self.budget_ms.map(Duration::from_millis);
        o.deterministic = self.deterministic;
        Ok(o)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the charge of a clopen-set expression.
    Measure {
        expr: Option<String>,
        #[arg(long, conflicts_with = "expr")]
        expr_file: Option<PathBuf>,
        /// p-sequence file, or an inline list such as 1,-1,2
        #[arg(long)]
        p: String,
        #[arg(long)]
        json: bool,
    },
    /// Check levels 0..=t-max and emit a certificate.
    VerifySnz {
        #[arg(long)]
        p: String,
        #[arg(long)]
        t_max: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a p-sequence file.
    GenPseq {
        #[arg(long, required = true)]
        greedy: bool,
        #[arg(long)]
        t_horizon: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare |p_k| against g(k) times the sum of earlier magnitudes.
    CheckGrowth {
        #[arg(long)]
        p: String,
        /// paper | pow2poly:S:D | geometric:B | const:C
        #[arg(long)]
        g: String,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Exact lemma checks at size t (and s when given).
    CheckLemmas {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        s: Option<usize>,
    },
    /// Strictly increasing chain of truncated sets indexed by rationals.
    DemoChain {
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=64))]
        len: u64,
    },
    /// A set whose charge is forced to 0 once the evens get charge e.
    DemoEvens {
        #[arg(long, allow_hyphen_values = true)]
        e: i64,
    },
    /// The pigeonhole obstruction for disjoint pieces of charge a.
    DemoObstruction {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Comma-separated charges of E_1, ..., E_{|a|+1}.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

fn parse_list(text: &str) -> Result<Vec<BigInt>, Failure> {
    let inner = text
        .trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches([')', ']']);
    inner
        .split(',')
        .map(|x| parse_bigint(x).map_err(Failure::from))
        .collect()
}

/// A path to a p-file, or an inline list when no such file exists.
fn load_p(spec: &str) -> Result<Vec<BigInt>, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        let file: PSequenceFile = serde_json::from_str(&text)?;
        Ok(file.into_sequence()?.terms().to_vec())
    } else {
        parse_list(spec).map_err(|_| Failure(format!("{spec}: not a p-file or an inline list")))
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn with_schema(v: serde_json::Value) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), SCHEMA.into());
    if let serde_json::Value::Object(m) = v {
        obj.extend(m);
    }
    serde_json::Value::Object(obj)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Measure {
            expr,
            expr_file,
            p,
            json,
        } => {
            let text = match (expr, expr_file) {
                (Some(e), None) => e,
                (None, Some(f)) => fs::read_to_string(f)?,
                _ => return Err(Failure("give an expression or --expr-file".into())),
            };
            let p = PSequence::explicit(load_p(&p)?)?;
            let u = lang::eval_str(&text)?;
            let w = charge::weight_vector(&u, None, &Default::default())?;
            let value = w.evaluate(p.terms())?;
            if json {
                let v = json!({
                    "schema": SCHEMA,
                    "set": lang::print(&u),
                    "t": w.t(),
                    "w": w.weights().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "charge": value.to_string(),
                });
                writeln!(out, "{}", to_json(&v)?)?;
            } else {
                writeln!(out, "{value}")?;
            }
            Ok(EXIT_OK)
        }
        Command::VerifySnz {
            p,
            t_max,
            search,
            out: path,
        } => {
            let opts = search.options()?;
            let p = load_p(&p)?;
            let (cert, _) = snz::verify_range(&p, t_max, &opts)?;
            let code = match cert.overall() {
                Overall::Verified => EXIT_OK,
                Overall::Counterexample => EXIT_FOUND,
                Overall::Indeterminate => EXIT_INDETERMINATE,
            };
            emit(out, path.as_deref(), &to_json(&cert)?)?;
            Ok(code)
        }
        Command::GenPseq {
            greedy: _,
            t_horizon,
            search,
            out: path,
        } => {
            let opts = search.options()?;
            let p = match PSequence::greedy(t_horizon, &opts) {
                Ok(p) => p,
                Err(charge::ChargeError::Search(snz::SnzError::BudgetExhausted(msg))) => {
                    writeln!(out, "indeterminate: {msg}")?;
                    return Ok(EXIT_INDETERMINATE);
                }
                Err(e) => return Err(e.into()),
            };
            let file = PSequenceFile::from_sequence(&p, opts.strategy.name());
            emit(out, path.as_deref(), &to_json(&file)?)?;
            Ok(EXIT_OK)
        }
        Command::CheckGrowth { p, g, k_max } => {
            let p = load_p(&p)?;
            let g: GrowthSpec = g.parse()?;
            let k_max = k_max.unwrap_or(p.len() - 1);
            let report = charge::check_growth(&p, &g, k_max)?;
            let v = with_schema(serde_json::to_value(&report)?);
            writeln!(out, "{}", to_json(&v)?)?;
            Ok(if report.all_hold() { EXIT_OK } else { EXIT_FOUND })
        }
        Command::CheckLemmas { t, s } => {
            let reports = lemmas::check_all(t, s);
            let ok = reports.iter().all(|r| r.passed());
            let v = json!({ "schema": SCHEMA, "reports": reports });
            writeln!(out, "{}", to_json(&v)?)?;
            Ok(if ok { EXIT_OK } else { EXIT_FOUND })
        }
        Command::DemoChain { len } => {
            let demo = extension::demo_chain(len);
            writeln!(
                out,
                "A_r = {{i <= {} : q_i < r}} for r = 0, 1/{len}, ..., 1",
                demo.truncation
            )?;
            for link in &demo.links {
                match &link.new_index {
                    Some(i) => writeln!(out, "r = {}: {} elements, gains index {i}", link.r, link.size)?,
                    None => writeln!(out, "r = {}: {} elements", link.r, link.size)?,
                }
            }
            writeln!(
                out,
                "each step adds a nonempty set, so a strictly nonzero charge changes at every step"
            )?;
            writeln!(out, "{}", to_json(&with_schema(serde_json::to_value(&demo)?))?)?;
            Ok(EXIT_OK)
        }
        Command::DemoEvens { e } => {
            let w = extension::evens_extension_witness(e);
            writeln!(out, "mu(E) = {e} forces mu({}) = {}", w.description, w.derivation)?;
            writeln!(out, "{}", to_json(&with_schema(serde_json::to_value(&w)?))?)?;
            Ok(EXIT_OK)
        }
        Command::DemoObstruction { a, values } => {
            let a = parse_bigint(&a)?;
            let values = parse_list(&values)?;
            let o = extension::build_obstruction(&a, &values)?;
            write!(out, "{o}")?;
            writeln!(out, "{}", to_json(&with_schema(serde_json::to_value(&o)?))?)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}
