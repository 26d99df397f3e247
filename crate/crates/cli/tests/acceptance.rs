//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Expected counts and determinants were computed independently
//! (exhaustive assignment search, integer cofactor expansion) and frozen here.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foxpal::coloring::{determinant, enumerate, first_nontrivial, solve, DEFAULT_ENUMERATION_BUDGET};
use foxpal::corpus::{corpus, lookup};
use foxpal::diagram::enumerate_moves;
use foxpal::oracle::{brute_force_colorings, DEFAULT_BUDGET};
use foxpal::rules::{audit_tables, soundness};
use foxpal::{
    apply_move, eliminate_all, verify_report, Color, Coloring, Diagram, EliminationError, EliminationReport, Modulus,
};

type Verdict = Result<String, String>;

fn primes(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).filter(|&n| foxpal::modular::is_prime(n)).collect()
}

fn sorted(cs: &[Coloring]) -> Vec<Vec<u32>> {
    let mut v: Vec<Vec<u32>> = cs.iter().map(|c| c.assignment.values().map(|x| x.0).collect()).collect();
    v.sort();
    v
}

fn within(t: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let e = t.elapsed();
    if e > limit {
        return Err(format!("{what} took {e:.2?}, limit {limit:?}"));
    }
    Ok(())
}

fn solver_matches_brute_force() -> Verdict {
    let t = Instant::now();
    for (name, p, want) in [("trefoil", 3, 9), ("trefoil", 5, 5), ("figure-eight", 5, 25)] {
        let d = lookup(name).unwrap().diagram();
        let bf = brute_force_colorings(&d.to_json(), p, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let la = enumerate(&d, Modulus::new(p).unwrap(), DEFAULT_ENUMERATION_BUDGET).map_err(|e| e.to_string())?;
        if sorted(&bf) != sorted(&la) {
            return Err(format!("{name} p={p}: solver and brute force disagree"));
        }
        if bf.len() != want {
            return Err(format!("{name} p={p}: {} colorings, expected {want}", bf.len()));
        }
    }
    within(t, Duration::from_secs(1), "enumeration")?;
    Ok(format!("9/5/25 colorings, identical sets, {:.2?}", t.elapsed()))
}

fn determinants() -> Verdict {
    let t = Instant::now();
    for (name, want) in [("trefoil", 3), ("figure-eight", 5), ("T(2,11)", 11), ("T(2,13)", 13)] {
        let got = determinant(&lookup(name).unwrap().diagram());
        if got.to_string() != want.to_string() {
            return Err(format!("{name}: determinant {got}, expected {want}"));
        }
    }
    within(t, Duration::from_secs(1), "determinants")?;
    Ok(format!("3, 5, 11, 13 in {:.2?}", t.elapsed()))
}

fn table_audit() -> Verdict {
    let t = Instant::now();
    let mut rows = 0;
    for p in primes(11, 101) {
        let rep = audit_tables(p).map_err(|e| e.to_string())?;
        if let Some(f) = rep.failures().next() {
            return Err(format!("p={p}: {} row {} {} failed: {}", f.table, f.row, f.equality, f.detail));
        }
        rows += rep.rows.len();
    }
    within(t, Duration::from_secs(60), "audit")?;
    Ok(format!("{rows} rows over 21 primes, 0 failures, {:.2?}", t.elapsed()))
}

fn rule_soundness() -> Verdict {
    let t = Instant::now();
    let mut bindings = 0;
    for p in primes(11, 101) {
        let rep = soundness(p);
        if let Some(v) = rep.violations.first() {
            return Err(format!("p={p}: {} violations, first {} {} {}", rep.violations.len(), v.rule, v.label, v.kind));
        }
        bindings += rep.bindings;
    }
    within(t, Duration::from_secs(300), "soundness sweep")?;
    Ok(format!("{bindings} bindings, 0 violations, {:.2?}", t.elapsed()))
}

/// `x -> s*x + t`, which maps colorings to colorings.
fn affine(c: &Coloring, s: u32, t: u32) -> Coloring {
    let assignment = c.assignment.iter().map(|(a, x)| (*a, Color((s * x.0 + t) % c.p))).collect();
    Coloring { p: c.p, assignment }
}

const RUNS: [(&str, u32); 4] = [("T(2,11)", 11), ("T(2,13)", 13), ("6_2", 11), ("6_3", 13)];

fn end_to_end(reports: &mut Vec<(Diagram, Coloring, EliminationReport)>) -> Verdict {
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    for (name, p) in RUNS {
        let d = lookup(name).unwrap().diagram();
        let m = Modulus::new(p).unwrap();
        let base = first_nontrivial(&d, m).ok_or(format!("{name}: no non-trivial coloring"))?;
        let forbidden: BTreeSet<u32> = m.forbidden().iter().map(|c| c.0).collect();
        // the default coloring, and an image of it that uses all three forbidden colors
        let mut starts = vec![base.clone()];
        let uses_all = |c: &Coloring| forbidden.iter().all(|f| c.assignment.values().any(|x| x.0 == *f));
        if let Some(c) = (1..p).flat_map(|s| (0..p).map(move |t| (s, t))).map(|(s, t)| affine(&base, s, t)).find(uses_all) {
            starts.push(c);
        }
        for c in starts {
            let t = Instant::now();
            let rep = eliminate_all(&d, &c).map_err(|e| format!("{name} p={p}: {e}"))?;
            within(t, Duration::from_secs(30), &format!("{name} p={p}"))?;
            slowest = slowest.max(t.elapsed());
            let palette: BTreeSet<u32> = rep.output_coloring.assignment.values().map(|x| x.0).collect();
            if !palette.is_disjoint(&forbidden) || palette.len() < 2 {
                return Err(format!("{name} p={p}: final palette {palette:?}"));
            }
            let v = verify_report(&d.to_json(), &c, &rep);
            if !v.ok {
                return Err(format!("{name} p={p}: verify_report failed: {:?}", v.failures.first()));
            }
            reports.push((d.clone(), c, rep));
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, palettes avoid {{10,9,5}} / {{12,11,6}}, all verified, slowest {slowest:.2?}"))
}

fn invariants(d: &Diagram) -> (String, Vec<usize>) {
    let dims = [3, 5, 7, 11, 13].map(|p| solve(d, Modulus::new(p).unwrap()).dimension);
    (determinant(d).to_string(), dims.to_vec())
}

fn move_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut total = 0;
    for e in corpus() {
        let mut d = e.diagram();
        let want = invariants(&d);
        let mut applied = 0;
        while applied < 100 {
            let moves = enumerate_moves(&d);
            // favour shrinking moves so diagrams stay small
            let shrink: Vec<_> = moves.iter().filter(|m| matches!(m.name(), "R1-" | "R2-" | "R3")).collect();
            let mv = if !shrink.is_empty() && rng.gen_bool(0.5) {
                shrink.choose(&mut rng).unwrap()
            } else {
                moves.choose(&mut rng).unwrap()
            };
            let Ok(a) = apply_move(&d, mv) else { continue };
            d = a.diagram;
            applied += 1;
            if invariants(&d) != want {
                return Err(format!("{}: invariants changed after {} ({applied} moves)", e.name, mv.name()));
            }
        }
        total += applied;
    }
    Ok(format!("{total} moves over 7 diagrams, determinant and dimensions at p=3..13 unchanged"))
}

fn hypotheses() -> Verdict {
    let dir = std::env::temp_dir();
    let exe = env!("CARGO_BIN_EXE_foxpal");
    let out = dir.join("foxpal-acceptance-report.json");
    let out = out.to_str().unwrap();
    let trivial = format!("{:?}", vec![4; 11]);
    let cases: [(&str, Vec<&str>); 4] = [
        ("p=7", vec!["eliminate", "trefoil", "-p", "7", "-o", out]),
        ("p=9", vec!["eliminate", "trefoil", "-p", "9", "-o", out]),
        ("p=15", vec!["eliminate", "T(2,11)", "-p", "15", "-o", out]),
        ("trivial p=11", vec!["eliminate", "T(2,11)", "-p", "11", "--coloring", &trivial, "-o", out]),
    ];
    for (what, args) in cases {
        let o = Command::new(exe).args(&args).output().map_err(|e| e.to_string())?;
        if o.status.code() != Some(4) {
            return Err(format!("{what}: exit {:?}, expected 4", o.status.code()));
        }
    }
    for p in [7, 9, 21] {
        let d = lookup("trefoil").unwrap().diagram();
        let c = Coloring { p, assignment: d.derive_arcs().iter().map(|a| (a.id, Color(a.id.0 % 2))).collect() };
        if !matches!(eliminate_all(&d, &c), Err(EliminationError::Modulus(_))) {
            return Err(format!("library accepted p={p}"));
        }
    }
    let d = lookup("T(2,11)").unwrap().diagram();
    let c = Coloring { p: 11, assignment: d.derive_arcs().iter().map(|a| (a.id, Color(4))).collect() };
    if eliminate_all(&d, &c) != Err(EliminationError::TrivialColoring) {
        return Err("library accepted a trivial coloring at p=11".into());
    }
    Ok("p=7, p=9, p=15 and a trivial coloring at p=11 all exit 4".into())
}

#[derive(Debug, Clone, Copy)]
enum Mutation {
    Color,
    Hash,
    DeleteMove,
}

/// Apply one random mutation of the given kind; `false` if the report has
/// nothing of that kind to mutate.
fn mutate(r: &mut EliminationReport, kind: Mutation, rng: &mut ChaCha8Rng) -> bool {
    let p = r.modulus.p();
    let mut steps: Vec<_> = r.traces.iter_mut().flat_map(|t| t.steps.iter_mut()).collect();
    if steps.is_empty() {
        return false;
    }
    match kind {
        Mutation::Color => {
            let n = steps.len();
            let i = rng.gen_range(0..=n);
            let c = if i == n { &mut r.output_coloring } else { &mut steps[i].coloring_after };
            let keys: Vec<_> = c.assignment.keys().copied().collect();
            let arc = *keys.choose(rng).unwrap();
            let x = c.assignment.get_mut(&arc).unwrap();
            x.0 = (x.0 + rng.gen_range(1..p)) % p;
        }
        Mutation::Hash => {
            let s = steps.choose_mut(rng).unwrap();
            let h = if rng.gen_bool(0.5) { &mut s.diagram_hash_before } else { &mut s.diagram_hash_after };
            let pos = rng.gen_range(0..h.len());
            let old = h.as_bytes()[pos];
            let new = *b"0123456789abcdef".iter().filter(|&&b| b != old).collect::<Vec<_>>().choose(rng).unwrap();
            h.replace_range(pos..pos + 1, &(*new as char).to_string());
        }
        Mutation::DeleteMove => {
            let s = steps.choose_mut(rng).unwrap();
            let i = rng.gen_range(0..s.moves.len());
            s.moves.remove(i);
        }
    }
    true
}

fn fault_detection(reports: &[(Diagram, Coloring, EliminationReport)]) -> Verdict {
    if reports.is_empty() {
        return Err("no reports to mutate".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut made, mut caught) = (0, 0);
    let mut missed = Vec::new();
    for round in 0..80 {
        let (d, c, rep) = &reports[round % reports.len()];
        let dj = d.to_json();
        for kind in [Mutation::Color, Mutation::Hash, Mutation::DeleteMove] {
            let mut bad = rep.clone();
            if !mutate(&mut bad, kind, &mut rng) {
                continue;
            }
            made += 1;
            if verify_report(&dj, c, &bad).ok {
                missed.push(format!("{kind:?} in report {}", round % reports.len()));
            } else {
                caught += 1;
            }
        }
    }
    if made < 200 {
        return Err(format!("only {made} mutants generated"));
    }
    if caught != made {
        return Err(format!("{caught}/{made} detected; missed {:?}", &missed[..missed.len().min(3)]));
    }
    Ok(format!("{caught}/{made} mutants detected"))
}

fn main() -> ExitCode {
    let mut reports = Vec::new();
    let results: Vec<(&str, Verdict)> = vec![
        ("solver matches brute force", solver_matches_brute_force()),
        ("determinant regression", determinants()),
        ("table audit 11..101", table_audit()),
        ("rule soundness 11..101", rule_soundness()),
        ("end-to-end elimination", end_to_end(&mut reports)),
        ("invariance under moves", move_invariance()),
        ("hypothesis enforcement", hypotheses()),
        ("fault detection", fault_detection(&reports)),
    ];
    let mut ok = true;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                ok = false;
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
