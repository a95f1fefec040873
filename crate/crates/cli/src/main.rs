//! `potiso`: command-line driver for specs, conditions, audits and generic
//! runs. Every report is a JSON document on stdout carrying
//! `schema_version`. Exit status: 0 success, 1 violations or findings, 2
//! input errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use potiso_core::ccc::{amalgamate, antichain_audit, signature};
use potiso_core::density::{extend, generic_build};
use potiso_core::oracle::{
    agreement_audit, bruteforce_validate, exhaustive_amalgamation_audit,
    exhaustive_extension_audit, truncation_automorphisms, BoundedUniverse, SCHEMA_VERSION,
};
use potiso_core::{CccError, Condition, Coord, Element, Mode, SubstructureSpec};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "potiso",
    version,
    about = "Finite partial isomorphisms between amenable tree structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide amenability of a substructure spec
    CheckAmenable {
        spec: PathBuf,
        /// Longest constraint word searched
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Validate a condition file
    Validate { condition: PathBuf },
    /// Print the signature of a condition
    Classify { condition: PathBuf },
    /// Amalgamate two same-class conditions
    Amalgamate { p: PathBuf, q: PathBuf },
    /// Extend a condition by one domain point
    Extend {
        condition: PathBuf,
        /// Element literal, e.g. `eta=[|0] odd={0:1}`
        element: String,
        /// Also write the extended condition to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the back-and-forth builder between two specs
    Generic {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        mode: Mode,
        /// Write the resulting condition (and copies of both specs) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive audits over bounded universes
    Audit {
        #[command(subcommand)]
        kind: AuditKind,
    },
    /// Count automorphisms of the depth-d binary truncation
    Automorphisms {
        #[arg(long)]
        depth: usize,
        /// Also require even coordinates to be fixed
        #[arg(long)]
        tagged: bool,
        #[arg(long, default_value_t = 1 << 20)]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum AuditKind {
    /// Union validity for every same-signature pair
    Amalgamation(UniverseArgs),
    /// One-point extension of every condition by every point
    Extension(UniverseArgs),
    /// validate versus brute-force validation on every candidate map
    Agreement(UniverseArgs),
    /// Antichain audit of the `.cond` files in a directory
    Antichain { dir: PathBuf },
}

/// Unset bounds default to the standard universe of the chosen mode.
#[derive(Args)]
struct UniverseArgs {
    #[arg(long, default_value = "qtree")]
    mode: Mode,
    /// Comma-separated coordinate values
    #[arg(long)]
    coords: Option<String>,
    #[arg(long)]
    prefix_max: Option<usize>,
    #[arg(long)]
    tails: Option<String>,
    #[arg(long)]
    support_max: Option<usize>,
    #[arg(long)]
    odd_index_max: Option<usize>,
    #[arg(long)]
    dom_max: Option<usize>,
    /// Include the designated all-ones points (fer only)
    #[arg(long)]
    designated: bool,
    #[arg(long, default_value_t = 5_000_000)]
    budget: usize,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "input",
            message: message.into(),
        }
    }

    fn precondition(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "precondition",
            message: message.into(),
        }
    }

    fn finding(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "contract-violation",
            message: message.into(),
        }
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn report(mut v: Value, ok: bool) -> Outcome {
    if let Value::Object(m) = &mut v {
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    Ok((v, ok))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialise")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_spec(path: &Path) -> Result<SubstructureSpec, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    SubstructureSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_spec(path: &Path) -> Result<SubstructureSpec, Failure> {
    parse_spec(path).map_err(Failure::input)
}

/// Spec references inside a condition file are relative to that file.
fn load_condition(path: &Path) -> Result<Condition, Failure> {
    let text = read(path)?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Condition::parse(&text, |r| parse_spec(&dir.join(r)))
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Writes `out` plus `<stem>.source.spec` and `<stem>.target.spec` beside
/// it, so the condition file is self-contained.
fn write_condition(out: &Path, p: &Condition) -> Result<Value, Failure> {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("condition");
    let dir = out.parent().unwrap_or(Path::new(""));
    let (src, tgt) = (format!("{stem}.source.spec"), format!("{stem}.target.spec"));
    let io = |e: std::io::Error| Failure::input(format!("{}: {e}", out.display()));
    fs::write(dir.join(&src), p.source().to_text()).map_err(io)?;
    fs::write(dir.join(&tgt), p.target().to_text()).map_err(io)?;
    fs::write(out, p.to_text(&src, &tgt)).map_err(io)?;
    Ok(json!([
        out.display().to_string(),
        dir.join(src).display().to_string(),
        dir.join(tgt).display().to_string()
    ]))
}

fn coord_list(s: &str) -> Result<Vec<Coord>, Failure> {
    s.split(',')
        .map(|c| {
            Coord::from_str(c.trim()).map_err(|e| Failure::input(format!("coordinate `{c}`: {e}")))
        })
        .collect()
}

impl UniverseArgs {
    fn universe(&self) -> Result<BoundedUniverse, Failure> {
        let mut u = match self.mode {
            Mode::Qtree => BoundedUniverse::standard_qtree(),
            Mode::Fer => BoundedUniverse::standard_fer(),
        };
        if let Some(c) = &self.coords {
            u.coords = coord_list(c)?;
        }
        if let Some(t) = &self.tails {
            u.tails = coord_list(t)?;
        }
        u.max_prefix = self.prefix_max.unwrap_or(u.max_prefix);
        u.max_support = self.support_max.unwrap_or(u.max_support);
        u.max_odd_index = self.odd_index_max.unwrap_or(u.max_odd_index);
        u.max_domain = self.dom_max.unwrap_or(u.max_domain);
        u.include_designated = self.designated;
        u.check().map_err(|e| Failure::input(e.to_string()))?;
        Ok(u)
    }
}

fn oracle_failure(e: potiso_core::OracleError) -> Failure {
    Failure::precondition(e.to_string())
}

fn check_amenable(spec: &Path, depth: usize) -> Outcome {
    let s = load_spec(spec)?;
    let rep = s
        .is_amenable(depth)
        .map_err(|e| Failure::precondition(e.to_string()))?;
    report(
        json!({"command": "check-amenable", "verdict": rep.verdict, "certificate": rep.certificate}),
        rep.verdict,
    )
}

fn validate(path: &Path) -> Outcome {
    let p = load_condition(path)?;
    let v = p.validate();
    let brute = bruteforce_validate(&p, None).map_err(oracle_failure)?;
    if brute != v.valid {
        return Err(Failure::finding(format!(
            "validate says {} but brute force says {brute}",
            v.valid
        )));
    }
    report(to_value(&v), v.valid)
}

fn classify(path: &Path) -> Outcome {
    let p = load_condition(path)?;
    report(
        json!({"command": "classify", "signature": signature(&p)}),
        true,
    )
}

fn amalgamate_cmd(p: &Path, q: &Path) -> Outcome {
    let (p, q) = (load_condition(p)?, load_condition(q)?);
    match amalgamate(&p, &q) {
        Ok(u) => report(
            json!({"command": "amalgamate", "valid": u.is_valid(), "union": u}),
            true,
        ),
        Err(CccError::ContractViolation(m)) => Err(Failure::finding(m)),
        Err(e) => Err(Failure::precondition(e.to_string())),
    }
}

fn extend_cmd(path: &Path, element: &str, out: Option<&Path>) -> Outcome {
    let p = load_condition(path)?;
    let a = Element::parse(p.source().mode, element)
        .map_err(|e| Failure::input(format!("element `{element}`: {e}")))?;
    let (q, trace) = extend(&p, &a).map_err(|e| Failure::precondition(e.to_string()))?;
    let valid = q.is_valid();
    if !valid {
        return Err(Failure::finding(format!(
            "extension is invalid: {:?}",
            q.validate().violation
        )));
    }
    let mut v = json!({"command": "extend", "valid": valid, "condition": q, "trace": trace});
    if let Some(out) = out {
        v["written"] = write_condition(out, &q)?;
    }
    report(v, true)
}

fn generic(source: &Path, target: &Path, steps: usize, mode: Mode, out: Option<&Path>) -> Outcome {
    let (a, c) = (load_spec(source)?, load_spec(target)?);
    if a.mode != mode || c.mode != mode {
        return Err(Failure::input(format!(
            "--mode {mode} does not match the specs ({} and {})",
            a.mode, c.mode
        )));
    }
    let run = generic_build(Arc::new(a), Arc::new(c), steps)
        .map_err(|e| Failure::precondition(e.to_string()))?;
    let valid = run.condition.is_valid();
    let brute = bruteforce_validate(&run.condition, None).map_err(oracle_failure)?;
    let mut v = json!({
        "command": "generic",
        "steps": steps,
        "valid": valid,
        "bruteforce_valid": brute,
        "condition": run.condition,
        "trace": run.steps,
    });
    if let Some(out) = out {
        v["written"] = write_condition(out, &run.condition)?;
    }
    report(v, valid && brute)
}

fn antichain(dir: &Path) -> Outcome {
    let entries =
        fs::read_dir(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cond"))
        .collect();
    files.sort();
    let conds = files
        .iter()
        .map(|f| load_condition(f))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = antichain_audit(&conds);
    let names: Vec<String> = files
        .iter()
        .map(|f| {
            f.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let ok = rep.violations.is_empty();
    report(
        json!({"audit": "antichain", "files": names, "report": rep}),
        ok,
    )
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::CheckAmenable { spec, depth } => check_amenable(&spec, depth),
        Command::Validate { condition } => validate(&condition),
        Command::Classify { condition } => classify(&condition),
        Command::Amalgamate { p, q } => amalgamate_cmd(&p, &q),
        Command::Extend {
            condition,
            element,
            out,
        } => extend_cmd(&condition, &element, out.as_deref()),
        Command::Generic {
            source,
            target,
            steps,
            mode,
            out,
        } => generic(&source, &target, steps, mode, out.as_deref()),
        Command::Audit { kind } => match kind {
            AuditKind::Amalgamation(a) => {
                let rep = exhaustive_amalgamation_audit(&a.universe()?, a.budget)
                    .map_err(oracle_failure)?;
                let ok = rep.violations.is_empty();
                Ok((to_value(&rep), ok))
            }
            AuditKind::Extension(a) => {
                let rep =
                    exhaustive_extension_audit(&a.universe()?, a.budget).map_err(oracle_failure)?;
                let ok = rep.failures.is_empty() && rep.uncovered_cases.is_empty();
                Ok((to_value(&rep), ok))
            }
            AuditKind::Agreement(a) => {
                let rep = agreement_audit(&a.universe()?, a.budget).map_err(oracle_failure)?;
                let ok = rep.disagreements.is_empty();
                Ok((to_value(&rep), ok))
            }
            AuditKind::Antichain { dir } => antichain(&dir),
        },
        Command::Automorphisms {
            depth,
            tagged,
            budget,
        } => {
            let rep = truncation_automorphisms(depth, tagged, budget).map_err(oracle_failure)?;
            Ok((to_value(&rep), true))
        }
    }
}

fn print(v: &Value) {
    // A closed pipe on stdout is not worth a panic.
    let _ = writeln!(
        std::io::stdout().lock(),
        "{}",
        serde_json::to_string_pretty(v).expect("json")
    );
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((v, ok)) => {
            print(&v);
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("potiso: {}", f.message);
            print(&json!({
                "schema_version": SCHEMA_VERSION,
                "error": {"kind": f.kind, "message": f.message},
            }));
            ExitCode::from(f.code)
        }
    }
}
