//! `tcq`: command-line front end for TCQ satisfiability and entailment.
//!
//! Every command prints a verdict on the first line, followed by optional
//! `key: value` lines. With `--json` the same report is a single JSON object
//! `{"command", "verdict", "engine"?, "details": {key: value}}`.
//!
//! Exit codes: 0 for a decision (any verdict), 1 for input errors (I/O,
//! parsing, validation), 2 for UNKNOWN (a resource limit was hit) and 3 when
//! `--engine both` yields two different decisions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use tcq_core::boolkrom::{self, Mode};
use tcq_core::model::{Individual, Tcq, Tkb, World};
use tcq_core::oracle::{self, OracleResult};
use tcq_core::rewrite;
use tcq_core::rsat::Problem;
use tcq_core::solver::{self, SolverOptions};
use tcq_core::syntax;
use tcq_core::{dllite, Error};

#[derive(Parser)]
#[command(name = "tcq", version, about = "Temporal conjunctive queries over DL-Lite horn knowledge bases")]
struct Cli {
    /// Print the report as one JSON object.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Inputs {
    /// Ontology file.
    ontology: PathBuf,
    /// ABox sequence file.
    aboxes: PathBuf,
    /// Query file.
    query: PathBuf,
}

#[derive(clap::Args)]
struct Decide {
    #[command(flatten)]
    inputs: Inputs,
    /// Decision procedure; `both` runs the two and fails on disagreement.
    #[arg(long, value_enum, default_value_t = Engine::Solver)]
    engine: Engine,
    /// Worker threads of the solver.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Print the witness of a satisfiable instance (or a non-entailment).
    #[arg(long)]
    certificate: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Solver,
    Rewrite,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReduceMode {
    Entail,
    Sat,
}

#[derive(Subcommand)]
enum Command {
    /// Is the query satisfiable with respect to the TKB at its last time point?
    Sat(Decide),
    /// Is the query entailed by the TKB at its last time point?
    Entail(Decide),
    /// Is every ABox consistent with the ontology (atemporal check)?
    Consistent {
        ontology: PathBuf,
        aboxes: PathBuf,
    },
    /// Tuples of individuals for the `?x` answer variables whose grounding
    /// is entailed.
    Answers(Decide),
    /// Decide by rewriting and print the first-order rewritings.
    Rewrite {
        #[command(flatten)]
        inputs: Inputs,
        /// Rewrite for entailment (the negated query) instead.
        #[arg(long)]
        entail: bool,
    },
    /// Replace Boolean and qualified inclusions by negated CQs over a krom
    /// ontology.
    Bool2krom {
        #[command(flatten)]
        inputs: Inputs,
        /// Shape of the resulting query.
        #[arg(long, value_enum, default_value_t = ReduceMode::Entail)]
        mode: ReduceMode,
        /// Write `reduced.onto`, `reduced.tkb` and `reduced.tcq` here instead
        /// of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounded brute-force model search.
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        /// Largest domain size.
        #[arg(long, default_value_t = 2)]
        domain: usize,
        /// Longest stem (default: number of ABoxes).
        #[arg(long)]
        stem: Option<usize>,
        /// Longest loop.
        #[arg(long = "loop", default_value_t = 2)]
        period: usize,
    },
}

/// A failed run: an exit code and a message.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceLimit(_) | Error::BoundsTooLarge(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// What a command reports.
struct Report {
    command: &'static str,
    verdict: String,
    engine: Option<&'static str>,
    details: Vec<(String, Value)>,
    unknown: bool,
}

impl Report {
    fn new(command: &'static str, verdict: impl Into<String>) -> Self {
        Report {
            command,
            verdict: verdict.into(),
            engine: None,
            details: Vec::new(),
            unknown: false,
        }
    }

    fn add(&mut self, key: &str, value: impl Into<Value>) {
        self.details.push((key.to_string(), value.into()));
    }

    fn print(&self, as_json: bool) {
        if as_json {
            let mut obj = Map::new();
            obj.insert("command".into(), json!(self.command));
            obj.insert("verdict".into(), json!(self.verdict));
            if let Some(e) = self.engine {
                obj.insert("engine".into(), json!(e));
            }
            let details: Map<String, Value> = self.details.iter().cloned().collect();
            obj.insert("details".into(), Value::Object(details));
            println!("{}", Value::Object(obj));
            return;
        }
        println!("{}", self.verdict);
        if let Some(e) = self.engine {
            println!("engine: {e}");
        }
        for (k, v) in &self.details {
            match v {
                Value::String(s) if s.contains('\n') => {
                    println!("{k}:");
                    for line in s.lines() {
                        println!("  {line}");
                    }
                }
                Value::String(s) => println!("{k}: {s}"),
                Value::Array(items) => {
                    let parts: Vec<String> = items
                        .iter()
                        .map(|x| x.as_str().map(String::from).unwrap_or_else(|| x.to_string()))
                        .collect();
                    println!("{}", format!("{k}: {}", parts.join(" ")).trim_end());
                }
                _ => println!("{k}: {v}"),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn load(inputs: &Inputs) -> Result<(Tkb, Tcq), Failure> {
    let onto = read(&inputs.ontology)?;
    let aboxes = read(&inputs.aboxes)?;
    let query = read(&inputs.query)?;
    let (mut tkb, extended) = syntax::parse_kb(&onto, &aboxes)?;
    if !extended.is_empty() {
        return Err(Failure {
            code: 1,
            message: format!(
                "the ontology contains {} inclusion(s) beyond DL-Lite horn; use `tcq bool2krom` to translate them",
                extended.len()
            ),
        });
    }
    let phi = syntax::parse_tcq(&query, &mut tkb.signature)?;
    Ok((tkb, phi))
}

fn world_list(ws: &[World]) -> Value {
    Value::Array(ws.iter().map(|w| json!(w.to_string())).collect())
}

fn bit_set(bits: u64, m: usize) -> String {
    World(bits & ((1u64 << m) - 1)).to_string()
}

/// Witness lines of the solver.
fn solver_certificate(r: &mut Report, tkb: &Tkb, phi: &Tcq, c: &solver::Certificate) -> Result<(), Failure> {
    let p = Problem::new(tkb, phi)?;
    let m = p.m();
    r.add("positions", world_list(&c.worlds));
    r.add("loop_start", c.lasso.loop_start);
    r.add("q_r", bit_set(c.tuple.q_r, m));
    r.add("q_rn", bit_set(c.tuple.q_rn, m));
    let a_r: Vec<Value> = c
        .tuple
        .a_r
        .iter()
        .map(|a| json!(show_assertion(&p, a)))
        .collect();
    r.add("a_r", Value::Array(a_r));
    let r_f: Vec<Value> = c
        .tuple
        .r_f
        .iter()
        .map(|&(s, a)| json!(format!("exists {}({})", p.sig.show_role(s), p.names.show(&p.sig, a))))
        .collect();
    r.add("r_f", Value::Array(r_f));
    Ok(())
}

fn show_assertion(p: &Problem, a: &tcq_core::model::Assertion) -> String {
    p.sig.show_assertion_with(a, &|x| p.names.show(&p.sig, x))
}

fn rewrite_certificate(r: &mut Report, tkb: &Tkb, phi: &Tcq, w: &rewrite::RewriteWitness) -> Result<(), Failure> {
    let p = Problem::new(tkb, phi)?;
    let m = p.m();
    r.add("worlds", world_list(&w.worlds));
    r.add("positions", world_list(&w.sequence));
    r.add("q_r", bit_set(w.skeleton.q_r, m));
    r.add("q_rn", bit_set(w.q_rn, m));
    let b: Vec<Value> = w.skeleton.bphi.iter().map(|a| json!(show_assertion(&p, a))).collect();
    r.add("b_phi", Value::Array(b));
    Ok(())
}

/// One decision by one engine: `Some(true)` for SAT (or NOT ENTAILED when
/// `negated`), with the certificate lines it produced.
fn run_engine(
    engine: Engine,
    tkb: &Tkb,
    phi: &Tcq,
    negated: bool,
    jobs: usize,
    certificate: bool,
) -> Result<(Option<bool>, Option<String>, Report), Failure> {
    let mut r = Report::new("", "");
    let opts = SolverOptions {
        jobs,
        ..SolverOptions::default()
    };
    let (found, why) = match engine {
        Engine::Solver => {
            let v = if negated {
                match solver::entails_with(tkb, phi, &opts)? {
                    solver::Entailment::Entailed => solver::Verdict::Unsat,
                    solver::Entailment::NotEntailed(c) => solver::Verdict::Sat(c),
                    solver::Entailment::Unknown(s) => solver::Verdict::Unknown(s),
                }
            } else {
                solver::satisfiable_with(tkb, phi, &opts)?
            };
            match v {
                solver::Verdict::Sat(c) => {
                    if certificate {
                        solver_certificate(&mut r, tkb, phi, &c)?;
                    }
                    (Some(true), None)
                }
                solver::Verdict::Unsat => (Some(false), None),
                solver::Verdict::Unknown(s) => (None, Some(s)),
            }
        }
        Engine::Rewrite => {
            let p = Problem::new(tkb, phi)?;
            match rewrite::solve_problem(&p, negated, &rewrite::RewriteOptions::default())? {
                rewrite::Outcome::Sat(w) => {
                    if certificate {
                        rewrite_certificate(&mut r, tkb, phi, &w)?;
                    }
                    (Some(true), None)
                }
                rewrite::Outcome::Unsat => (Some(false), None),
                rewrite::Outcome::Unknown(s) => (None, Some(s)),
            }
        }
        Engine::Both => unreachable!("callers split `both`"),
    };
    Ok((found, why, r))
}

/// Runs the requested engines; `found` means SAT, or NOT ENTAILED when
/// `negated`.
fn decide(d: &Decide, tkb: &Tkb, phi: &Tcq, negated: bool) -> Result<(Option<bool>, Report), Failure> {
    let engines = match d.engine {
        Engine::Both => vec![Engine::Solver, Engine::Rewrite],
        e => vec![e],
    };
    let mut results = Vec::new();
    for e in engines {
        results.push((e, run_engine(e, tkb, phi, negated, d.jobs, d.certificate)?));
    }
    let decided: Vec<bool> = results.iter().filter_map(|(_, (f, _, _))| *f).collect();
    if decided.windows(2).any(|w| w[0] != w[1]) {
        return Err(Failure {
            code: 3,
            message: "the solver and the rewriting engine disagree".into(),
        });
    }
    let mut report = Report::new("", "");
    report.engine = Some(match d.engine {
        Engine::Solver => "solver",
        Engine::Rewrite => "rewrite",
        Engine::Both => "both",
    });
    let mut certified = false;
    for (e, (f, why, r)) in results {
        if let Some(why) = why {
            let name = if e == Engine::Solver { "solver" } else { "rewrite" };
            report.add(&format!("{name}_unknown"), why);
        }
        // The certificate of the first engine that decided.
        if f.is_some() && !certified {
            report.details.extend(r.details);
            certified = true;
        }
    }
    Ok((decided.first().copied(), report))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Sat(d) => {
            let (tkb, phi) = load(&d.inputs)?;
            let (found, mut r) = decide(d, &tkb, &phi, false)?;
            r.command = "sat";
            r.verdict = match found {
                Some(true) => "SAT",
                Some(false) => "UNSAT",
                None => "UNKNOWN",
            }
            .into();
            r.unknown = found.is_none();
            Ok(r)
        }
        Command::Entail(d) => {
            let (tkb, phi) = load(&d.inputs)?;
            let (found, mut r) = decide(d, &tkb, &phi, true)?;
            r.command = "entail";
            r.verdict = match found {
                Some(true) => "NOT-ENTAILED",
                Some(false) => "ENTAILED",
                None => "UNKNOWN",
            }
            .into();
            r.unknown = found.is_none();
            Ok(r)
        }
        Command::Consistent { ontology, aboxes } => {
            let (tkb, extended) = syntax::parse_kb(&read(ontology)?, &read(aboxes)?)?;
            if !extended.is_empty() {
                return Err(Failure {
                    code: 1,
                    message: "the ontology contains inclusions beyond DL-Lite horn".into(),
                });
            }
            let mut bad = Vec::new();
            for (i, a) in tkb.aboxes.iter().enumerate() {
                if !dllite::is_consistent(&tkb.signature, &tkb.ontology, a)? {
                    bad.push(json!(i));
                }
            }
            let mut r = Report::new("consistent", if bad.is_empty() { "CONSISTENT" } else { "INCONSISTENT" });
            r.add("time_points", tkb.aboxes.len());
            r.add("inconsistent_at", Value::Array(bad));
            Ok(r)
        }
        Command::Answers(d) => {
            let (tkb, phi) = load(&d.inputs)?;
            let vars = phi.answer_vars();
            let mut cands: BTreeSet<Individual> = tkb.abox_individuals();
            cands.extend(phi.individuals());
            let cands: Vec<Individual> = cands.into_iter().collect();
            let total = cands.len().checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
            if total > 1 << 16 {
                return Err(Error::ResourceLimit(format!("{total} candidate tuples")).into());
            }
            let mut answers = Vec::new();
            let mut unknown = Vec::new();
            for code in 0..total {
                let mut c = code;
                let mut assignment = BTreeMap::new();
                let mut tuple = Vec::new();
                for v in &vars {
                    let a = cands[c % cands.len()];
                    c /= cands.len();
                    assignment.insert(v.clone(), a);
                    tuple.push(tkb.signature.individual_name(a));
                }
                let grounded = phi.ground(&assignment);
                let text = format!("({})", tuple.join(","));
                match decide(d, &tkb, &grounded, true)?.0 {
                    Some(false) => answers.push(json!(text)),
                    Some(true) => {}
                    None => unknown.push(json!(text)),
                }
            }
            let mut r = Report::new("answers", if unknown.is_empty() { "ANSWERS" } else { "UNKNOWN" });
            r.unknown = !unknown.is_empty();
            r.add("variables", Value::Array(vars.iter().map(|v| json!(v)).collect()));
            r.add("count", answers.len());
            r.add("answers", Value::Array(answers));
            if !unknown.is_empty() {
                r.add("undecided", Value::Array(unknown));
            }
            Ok(r)
        }
        Command::Rewrite { inputs, entail } => {
            let (tkb, phi) = load(inputs)?;
            let (outcome, text) = rewrite::render(&tkb, &phi, *entail)?;
            let verdict = match (outcome.decided(), entail) {
                (Some(true), false) => "SAT",
                (Some(false), false) => "UNSAT",
                (Some(true), true) => "NOT-ENTAILED",
                (Some(false), true) => "ENTAILED",
                (None, _) => "UNKNOWN",
            };
            let mut r = Report::new("rewrite", verdict);
            r.unknown = outcome.decided().is_none();
            r.engine = Some("rewrite");
            if let rewrite::Outcome::Unknown(why) = &outcome {
                r.add("rewrite_unknown", why.clone());
            }
            r.add("formulas", text);
            Ok(r)
        }
        Command::Bool2krom { inputs, mode, out } => {
            let onto = read(&inputs.ontology)?;
            let (mut tkb, extended) = syntax::parse_kb(&onto, &read(&inputs.aboxes)?)?;
            let phi = syntax::parse_tcq(&read(&inputs.query)?, &mut tkb.signature)?;
            let mode = match mode {
                ReduceMode::Entail => Mode::Entailment,
                ReduceMode::Sat => Mode::Satisfiability,
            };
            let red = boolkrom::reduce_bool_to_krom(&tkb, &extended, &phi, mode)?;
            eprintln!("warning: the reduced ontology is krom, not horn; the solvers of this tool do not accept it");
            let sig = &red.tkb.signature;
            let onto_text = syntax::print_ontology(sig, &red.tkb.ontology, &[]);
            let tkb_text = syntax::print_tkb(sig, &red.tkb.aboxes);
            let tcq_text = syntax::print_tcq(sig, &red.phi) + "\n";
            let mut r = Report::new("bool2krom", "REDUCED");
            r.add("rows", red.rows.len());
            match out {
                Some(dir) => {
                    let write = |name: &str, text: &str| -> Result<(), Failure> {
                        let path = dir.join(name);
                        std::fs::write(&path, text).map_err(|e| Failure {
                            code: 1,
                            message: format!("{}: {e}", path.display()),
                        })
                    };
                    std::fs::create_dir_all(dir).map_err(|e| Failure {
                        code: 1,
                        message: format!("{}: {e}", dir.display()),
                    })?;
                    write("reduced.onto", &onto_text)?;
                    write("reduced.tkb", &tkb_text)?;
                    write("reduced.tcq", &tcq_text)?;
                    r.add("written", dir.display().to_string());
                }
                None => {
                    r.add("ontology", onto_text);
                    r.add("aboxes", tkb_text);
                    r.add("query", tcq_text);
                }
            }
            Ok(r)
        }
        Command::Oracle {
            inputs,
            domain,
            stem,
            period,
        } => {
            let (tkb, phi) = load(inputs)?;
            let stem = stem.unwrap_or(tkb.aboxes.len());
            let mut r = match oracle::bounded_tcq_sat(&phi, &tkb, *domain, stem, *period)? {
                OracleResult::Found(l) => {
                    let mut r = Report::new("oracle", "FOUND");
                    r.add("domain", l.domain);
                    r.add("positions", l.interps.len());
                    r.add("loop_start", l.loop_start);
                    r
                }
                OracleResult::NotFoundWithinBounds => Report::new("oracle", "NOT-FOUND-WITHIN-BOUNDS"),
            };
            r.add("bounds", format!("domain {domain}, stem {stem}, loop {period}"));
            Ok(r)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            r.print(cli.json);
            ExitCode::from(if r.unknown { 2 } else { 0 })
        }
        Err(f) => {
            if cli.json {
                println!("{}", json!({"error": f.message, "exit_code": f.code}));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
