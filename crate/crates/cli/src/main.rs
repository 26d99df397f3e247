use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use foxpal::coloring::{self, determinant, ColoringError, DEFAULT_ENUMERATION_BUDGET};
use foxpal::elimination::default_coloring;
use foxpal::{corpus, rules};
use foxpal::{
    eliminate_all, parse_pd, verify_report, ArcId, Color, Coloring, Diagram, DiagramJson, EliminationError,
    EliminationReport, Modulus,
};

const USAGE: u8 = 1;
const VERIFY: u8 = 2;
const BUDGET: u8 = 3;
const MATH: u8 = 4;

#[derive(Parser)]
#[command(name = "foxpal", version, about = "Fox colorings and palette reduction for link diagrams")]
struct Cli {
    /// Print summaries as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the colorings of a diagram modulo p.
    Solve {
        /// File (PD text or diagram JSON), corpus name, or inline PD code.
        diagram: String,
        #[arg(short)]
        p: u32,
        /// Also list every coloring.
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
    },
    /// Print the determinant.
    Det { diagram: String },
    /// Remove 2k, 2k-1 and k from a coloring and write the trace.
    Eliminate {
        diagram: String,
        #[arg(short)]
        p: u32,
        /// Starting coloring: a file or inline JSON, either `{p, assignment}`
        /// or a list of arc colors.
        #[arg(long)]
        coloring: Option<String>,
        #[arg(short, long, default_value = "report.json")]
        output: PathBuf,
    },
    /// Re-derive the case tables and sweep the rule catalog.
    Audit {
        #[arg(long, default_value_t = 11)]
        p_min: u32,
        #[arg(long, default_value_t = 101)]
        p_max: u32,
    },
    /// Replay a report and check every step.
    Verify { report: PathBuf },
    /// Bundled diagrams.
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
    /// Rewrite-rule catalog.
    Rule {
        #[command(subcommand)]
        cmd: RuleCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    List,
}

#[derive(Subcommand)]
enum RuleCmd {
    /// Write the catalog as JSON.
    Export {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

struct Fail {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Into<String>) -> Fail {
    Fail { code, msg: msg.into() }
}

type Out = Result<(String, Value), Fail>;

fn load_diagram(arg: &str) -> Result<Diagram, Fail> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{arg}: {e}")))?;
        if text.trim_start().starts_with('{') {
            let raw: DiagramJson = serde_json::from_str(&text).map_err(|e| fail(USAGE, format!("{arg}: {e}")))?;
            return Diagram::from_raw(&raw).map_err(|e| fail(USAGE, format!("{arg}: {e}")));
        }
        return parse_pd(&text).map_err(|e| fail(USAGE, format!("{arg}: {e}")));
    }
    if let Some(e) = corpus::lookup(arg) {
        return Ok(e.diagram());
    }
    if arg.contains('[') {
        return parse_pd(arg).map_err(|e| fail(USAGE, e.to_string()));
    }
    Err(fail(USAGE, format!("{arg}: no such file or corpus entry")))
}

fn modulus(p: u32) -> Result<Modulus, Fail> {
    Modulus::new(p).map_err(|e| fail(MATH, e.to_string()))
}

fn load_coloring(arg: &str, p: u32) -> Result<Coloring, Fail> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| fail(USAGE, format!("{arg}: {e}")))?
    } else {
        arg.to_string()
    };
    let bad = |e: serde_json::Error| fail(USAGE, format!("coloring: {e}"));
    if text.trim_start().starts_with('[') {
        let colors: Vec<u32> = serde_json::from_str(&text).map_err(bad)?;
        let assignment = colors.into_iter().enumerate().map(|(i, c)| (ArcId(i as u32), Color(c))).collect();
        return Ok(Coloring { p, assignment });
    }
    serde_json::from_str(&text).map_err(bad)
}

fn colors(c: &Coloring) -> Vec<u32> {
    c.assignment.values().map(|x| x.0).collect()
}

fn solve(diagram: &str, p: u32, list: bool, budget: u64) -> Out {
    let d = load_diagram(diagram)?;
    let m = modulus(p)?;
    let space = coloring::solve(&d, m);
    let mut text = format!(
        "p={p}: {} arcs, dimension {}, {} colorings",
        d.derive_arcs().len(),
        space.dimension,
        space.count()
    );
    let mut v = json!({ "space": space, "count": space.count().to_string() });
    if list {
        let all = coloring::enumerate(&d, m, budget).map_err(|e| match e {
            ColoringError::BudgetExceeded { .. } => fail(BUDGET, e.to_string()),
            e => fail(USAGE, e.to_string()),
        })?;
        for c in &all {
            text.push_str(&format!("\n{:?}", colors(c)));
        }
        v["colorings"] = json!(all.iter().map(colors).collect::<Vec<_>>());
    }
    Ok((text, v))
}

fn det(diagram: &str) -> Out {
    let d = load_diagram(diagram)?;
    let det = determinant(&d);
    Ok((det.to_string(), json!({ "determinant": det.to_string() })))
}

fn eliminate(diagram: &str, p: u32, col: Option<&str>, output: &Path) -> Out {
    let d = load_diagram(diagram)?;
    let m = Modulus::for_elimination(p).map_err(|e| fail(MATH, e.to_string()))?;
    let c = match col {
        Some(s) => load_coloring(s, p)?,
        None => default_coloring(&d, m)
            .ok_or_else(|| fail(MATH, format!("the diagram has only trivial colorings mod {p}")))?,
    };
    let report = eliminate_all(&d, &c).map_err(|e| match e {
        EliminationError::Modulus(_) | EliminationError::TrivialColoring => fail(MATH, e.to_string()),
        e => fail(USAGE, e.to_string()),
    })?;
    let body = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    std::fs::write(output, body).map_err(|e| fail(USAGE, format!("{}: {e}", output.display())))?;
    let s = &report.statistics;
    let palette: Vec<u32> = report.final_palette.iter().map(|c| c.0).collect();
    let text = format!(
        "p={p}: palette {:?} -> {palette:?}, {} steps, crossings {} -> {}; wrote {}",
        c.palette().iter().map(|c| c.0).collect::<Vec<_>>(),
        s.steps,
        s.crossings_in,
        s.crossings_out,
        output.display()
    );
    let v = json!({ "output": output, "final_palette": palette, "statistics": s });
    Ok((text, v))
}

fn primes(lo: u32, hi: u32) -> impl Iterator<Item = u32> {
    (lo..=hi).filter(|&n| foxpal::modular::is_prime(n))
}

fn audit(p_min: u32, p_max: u32) -> Out {
    if p_min <= 7 {
        return Err(fail(MATH, "the audit needs primes p > 7"));
    }
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for p in primes(p_min, p_max) {
        let a = rules::audit_tables(p).map_err(|e| fail(MATH, e.to_string()))?;
        let s = rules::soundness(p);
        let failed: Vec<_> = a.failures().cloned().collect();
        ok &= failed.is_empty() && s.ok();
        lines.push(format!(
            "p={p}: {} rows, {} failed; {} bindings, {} violations",
            a.rows.len(),
            failed.len(),
            s.bindings,
            s.violations.len()
        ));
        for f in &failed {
            lines.push(format!("  {} row {}: {} ({})", f.table, f.row, f.equality, f.detail));
        }
        for v in &s.violations {
            lines.push(format!("  {} a={} b={} l={:?}: {} {}", v.rule, v.a, v.b, v.l, v.label, v.kind));
        }
        rows.push(json!({ "p": p, "rows": a.rows.len(), "failures": failed, "bindings": s.bindings, "violations": s.violations }));
    }
    let v = json!({ "ok": ok, "primes": rows });
    if !ok {
        return Err(fail(VERIFY, lines.join("\n")));
    }
    Ok((lines.join("\n"), v))
}

fn verify(path: &Path) -> Out {
    let text = std::fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))?;
    let report: EliminationReport =
        serde_json::from_str(&text).map_err(|e| fail(VERIFY, format!("malformed report: {e}")))?;
    let verdict = verify_report(&report.input_diagram, &report.input_coloring, &report);
    let mut lines = vec![if verdict.ok { "ok".to_string() } else { format!("{} failures", verdict.failures.len()) }];
    for f in &verdict.failures {
        let at = f.step.map_or("report".to_string(), |s| format!("step {s}"));
        lines.push(format!("  {at}: {}", f.reason));
    }
    if !verdict.ok {
        return Err(fail(VERIFY, lines.join("\n")));
    }
    Ok((lines.join("\n"), json!(verdict)))
}

fn corpus_list() -> Out {
    let entries = corpus::corpus();
    let text = entries
        .iter()
        .map(|e| format!("{:<14} det {:<4} {} crossings  {}", e.name, e.determinant, e.diagram().crossing_count(), e.notes))
        .collect::<Vec<_>>()
        .join("\n");
    Ok((text, json!(entries)))
}

fn rule_export(output: Option<&Path>) -> Out {
    let rules = rules::export();
    let body = serde_json::to_string_pretty(&rules).expect("rules serialize") + "\n";
    match output {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))?;
            Ok((format!("{} rules written to {}", rules.len(), path.display()), json!({ "rules": rules.len() })))
        }
        None => Ok((body.trim_end().to_string(), json!(rules))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let out = match &cli.cmd {
        Cmd::Solve { diagram, p, list, budget } => solve(diagram, *p, *list, *budget),
        Cmd::Det { diagram } => det(diagram),
        Cmd::Eliminate { diagram, p, coloring, output } => eliminate(diagram, *p, coloring.as_deref(), output),
        Cmd::Audit { p_min, p_max } => audit(*p_min, *p_max),
        Cmd::Verify { report } => verify(report),
        Cmd::Corpus { cmd: CorpusCmd::List } => corpus_list(),
        Cmd::Rule { cmd: RuleCmd::Export { output } } => rule_export(output.as_deref()),
    };
    match out {
        Ok((text, v)) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if cli.json {
                println!("{}", json!({ "error": f.msg, "exit_code": f.code }));
            } else {
                eprintln!("error: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}
