//! Independent checks. Everything here works on the serialized forms
//! (`DiagramJson`, arc colorings) with its own arc derivation and its own
//! arithmetic; only move replay goes through the diagram module.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coloring::{enumerate_space, solve, Coloring};
use crate::diagram::{apply_move, ArcId, Diagram, DiagramJson};
use crate::elimination::{EliminationReport, Measure};
use crate::modular::{Color, Modulus};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{needed} assignments exceed the budget of {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("{0} is not an odd prime")]
    NotPrime(u32),
    #[error("malformed diagram: {0}")]
    Diagram(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// Index of the step over all traces; `None` for report-level checks.
    pub step: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub ok: bool,
    pub failures: Vec<Failure>,
}

fn odd_prime(p: u32) -> bool {
    p > 2 && !p.is_multiple_of(2) && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Arcs of a serialized diagram: edges glued through over-ports, numbered
/// by smallest edge id, free loops last.
struct ArcMap {
    of_edge: BTreeMap<u32, u32>,
    count: u32,
}

fn arc_map(d: &DiagramJson) -> ArcMap {
    let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<u32, u32>, e: u32) -> u32 {
        let mut r = e;
        while parent[&r] != r {
            r = parent[&r];
        }
        parent.insert(e, r);
        r
    }
    for x in &d.crossings {
        for e in x.ports {
            parent.entry(e.0).or_insert(e.0);
        }
    }
    for x in &d.crossings {
        let a = find(&mut parent, x.ports[x.over[0] as usize].0);
        let b = find(&mut parent, x.ports[x.over[1] as usize].0);
        let (lo, hi) = (a.min(b), a.max(b));
        parent.insert(hi, lo);
    }
    let edges: Vec<u32> = parent.keys().copied().collect();
    // Roots are the smallest edge of each class, so ordering by root orders
    // by smallest edge.
    let roots: BTreeSet<u32> = edges.iter().map(|&e| find(&mut parent, e)).collect();
    let index: BTreeMap<u32, u32> = roots.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
    let of_edge = edges.iter().map(|&e| (e, index[&find(&mut parent, e)])).collect();
    ArcMap { of_edge, count: roots.len() as u32 + d.free_loops }
}

/// Is `c` a valid, total coloring of `d`?
pub fn check_json(d: &DiagramJson, c: &Coloring) -> Result<(), String> {
    let arcs = arc_map(d);
    let want: BTreeSet<u32> = (0..arcs.count).collect();
    let have: BTreeSet<u32> = c.assignment.keys().map(|a| a.0).collect();
    if want != have {
        return Err(format!("coloring covers arcs {have:?}, diagram has {}", arcs.count));
    }
    let p = c.p as u64;
    if let Some((a, v)) = c.assignment.iter().find(|(_, v)| v.0 as u64 >= p) {
        return Err(format!("arc {} has color {} outside 0..{p}", a.0, v.0));
    }
    for x in &d.crossings {
        let col = |port: u8| c.assignment[&ArcId(arcs.of_edge[&x.ports[port as usize].0])].0 as u64;
        let o = col(x.over[0]);
        let u = (x.over[0] + 1) % 2;
        let (u1, u2) = (col(u), col(u + 2));
        if (u1 + u2) % p != (2 * o) % p {
            return Err(format!("Fox relation violated at crossing {}: {u1}+{u2} != 2*{o} mod {p}", x.id.0));
        }
    }
    Ok(())
}

fn edge_colors(d: &DiagramJson, c: &Coloring) -> BTreeMap<u32, u32> {
    let arcs = arc_map(d);
    arcs.of_edge.iter().map(|(&e, a)| (e, c.assignment.get(&ArcId(*a)).map_or(u32::MAX, |v| v.0))).collect()
}

/// Colors of the free loops, in arc order.
fn loop_colors(d: &DiagramJson, c: &Coloring) -> Vec<u32> {
    let arcs = arc_map(d);
    (arcs.count - d.free_loops..arcs.count).map(|a| c.assignment.get(&ArcId(a)).map_or(u32::MAX, |v| v.0)).collect()
}

fn measure_json(d: &DiagramJson, c: &Coloring, target: u32) -> Measure {
    let ec = edge_colors(d, c);
    let mut m = Measure::default();
    for x in &d.crossings {
        let col = |port: u8| ec[&x.ports[port as usize].0];
        let o = col(x.over[0]);
        let u = (x.over[0] + 1) % 2;
        let (u1, u2) = (col(u), col(u + 2));
        if o == target && u1 == target && u2 == target {
            m.mono += 1;
            continue;
        }
        m.over += usize::from(o == target);
        m.under += usize::from(u1 == target) + usize::from(u2 == target);
    }
    m
}

/// Every valid coloring of `d` mod `p`, by testing all `p^arcs` assignments.
pub fn brute_force_colorings(d: &DiagramJson, p: u32, budget: u64) -> Result<Vec<Coloring>, OracleError> {
    if !odd_prime(p) {
        return Err(OracleError::NotPrime(p));
    }
    let arcs = arc_map(d);
    let n = arcs.count;
    let needed = (p as u128).checked_pow(n);
    if needed.is_none_or(|x| x > budget as u128) {
        let needed = num_bigint::BigUint::from(p).pow(n).to_string();
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    let rel: Vec<[usize; 3]> = d
        .crossings
        .iter()
        .map(|x| {
            let a = |port: u8| arcs.of_edge[&x.ports[port as usize].0] as usize;
            let u = (x.over[0] + 1) % 2;
            [a(x.over[0]), a(u), a(u + 2)]
        })
        .collect();
    let mut out = Vec::new();
    let mut v = vec![0u32; n as usize];
    loop {
        if rel.iter().all(|&[o, u1, u2]| (v[u1] + v[u2]) % p == (2 * v[o]) % p) {
            let assignment = v.iter().enumerate().map(|(i, &c)| (ArcId(i as u32), Color(c))).collect();
            out.push(Coloring { p, assignment });
        }
        // odometer, last arc fastest
        let mut i = v.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            v[i] += 1;
            if v[i] < p {
                break;
            }
            v[i] = 0;
        }
    }
}

/// A non-trivial coloring of `d` itself avoiding `{2k, 2k-1, k}`, searched
/// over the whole coloring space. `None` says nothing about what a changed
/// diagram could carry.
pub fn fixed_diagram_witness(d: &Diagram, p: u32, budget: u64) -> Result<Option<Coloring>, OracleError> {
    let m = Modulus::new(p).map_err(|_| OracleError::NotPrime(p))?;
    let bad = m.forbidden();
    let space = solve(d, m);
    let found = enumerate_space(&space, budget, |c| !c.is_trivial() && !c.palette().iter().any(|x| bad.contains(x)))
        .map_err(|e| match e {
            crate::coloring::ColoringError::BudgetExceeded { needed, budget } => OracleError::BudgetExceeded { needed, budget },
            other => OracleError::Diagram(other.to_string()),
        })?;
    let dj = d.to_json();
    Ok(found.into_iter().find(|c| check_json(&dj, c).is_ok()))
}

struct Verdict {
    failures: Vec<Failure>,
}

impl Verdict {
    fn fail(&mut self, step: Option<usize>, reason: impl Into<String>) {
        self.failures.push(Failure { step, reason: reason.into() });
    }
}

fn components(d: &DiagramJson) -> Result<usize, String> {
    Diagram::from_raw(d).map(|d| d.component_count()).map_err(|e| e.to_string())
}

/// Replay `report` from the given input and re-check everything it claims.
pub fn verify_report(input_d: &DiagramJson, input_c: &Coloring, report: &EliminationReport) -> VerificationVerdict {
    let mut v = Verdict { failures: Vec::new() };
    replay(input_d, input_c, report, &mut v);
    VerificationVerdict { ok: v.failures.is_empty(), failures: v.failures }
}

fn replay(input_d: &DiagramJson, input_c: &Coloring, report: &EliminationReport, v: &mut Verdict) {
    let p = report.modulus.p();
    if !odd_prime(p) || p <= 7 {
        v.fail(None, format!("modulus {p} is not a prime above 7"));
        return;
    }
    let k = (p - 1) / 2;
    let order = [p - 1, p - 2, k];
    if report.forbidden.iter().map(|c| c.0).collect::<Vec<_>>() != order {
        v.fail(None, "forbidden colors are not [2k, 2k-1, k]");
    }
    if report.input_diagram != *input_d {
        v.fail(None, "input diagram does not match the report");
    }
    if report.input_coloring != *input_c {
        v.fail(None, "input coloring does not match the report");
    }
    if input_c.p != p {
        v.fail(None, "input coloring has a different modulus");
    }
    if let Err(e) = check_json(input_d, input_c) {
        v.fail(None, format!("input: {e}"));
    }
    if input_c.assignment.values().collect::<BTreeSet<_>>().len() <= 1 {
        v.fail(None, "input coloring is trivial");
    }
    let Ok(mut d) = Diagram::from_raw(input_d) else {
        v.fail(None, "input diagram is malformed");
        return;
    };
    if report.traces.len() != 3 {
        v.fail(None, format!("{} traces, expected 3", report.traces.len()));
    }
    let mut dj = d.to_json();
    let mut col = input_c.clone();
    let mut gi = 0;
    for (ti, trace) in report.traces.iter().enumerate() {
        let Some(&target) = order.get(ti) else { break };
        if trace.target.0 != target {
            v.fail(None, format!("trace {ti} removes {}, expected {target}", trace.target.0));
        }
        let removed = &order[..ti];
        if trace.already_removed.iter().map(|c| c.0).collect::<Vec<_>>() != removed {
            v.fail(None, format!("trace {ti} lists the wrong removed colors"));
        }
        let mut cur = measure_json(&dj, &col, target);
        if cur != trace.measure_before {
            v.fail(None, format!("trace {ti}: measure mismatch (recomputed {cur}, claimed {})", trace.measure_before));
        }
        for step in &trace.steps {
            let at = Some(gi);
            gi += 1;
            if step.diagram_hash_before != d.hash_hex() {
                v.fail(at, "hash chain broken (before)");
            }
            if step.moves.is_empty() {
                v.fail(at, "step has no moves");
            }
            for mv in &step.moves {
                match apply_move(&d, mv) {
                    Ok(a) => d = a.diagram,
                    Err(e) => {
                        v.fail(at, format!("move rejected: {e}"));
                        return;
                    }
                }
            }
            if step.diagram_hash_after != d.hash_hex() {
                v.fail(at, "hash chain broken (after)");
            }
            let next_dj = d.to_json();
            let c = &step.coloring_after;
            if c.p != p {
                v.fail(at, "coloring has a different modulus");
            }
            if let Err(e) = check_json(&next_dj, c) {
                v.fail(at, e);
                dj = next_dj;
                col = c.clone();
                continue;
            }
            let before = edge_colors(&dj, &col);
            let after = edge_colors(&next_dj, c);
            if let Some(e) = after.keys().find(|e| before.get(e).is_some_and(|x| *x != after[e])) {
                v.fail(at, format!("color changed on surviving edge {e}"));
            }
            if !loop_colors(&next_dj, c).starts_with(&loop_colors(&dj, &col)) {
                v.fail(at, "color changed on a free loop");
            }
            if let Some(x) = c.assignment.values().find(|x| removed.contains(&x.0)) {
                v.fail(at, format!("removed color {} reappeared", x.0));
            }
            let m = measure_json(&next_dj, c, target);
            if m != step.measure_after {
                v.fail(at, format!("measure mismatch (recomputed {m}, claimed {})", step.measure_after));
            }
            if m >= cur {
                v.fail(at, format!("measure did not decrease ({cur} to {m})"));
            }
            cur = m;
            dj = next_dj;
            col = c.clone();
        }
        if cur != Measure::default() {
            v.fail(None, format!("color {target} still present after trace {ti} ({cur})"));
        }
    }
    if report.output_diagram != dj {
        v.fail(None, "output diagram does not match the replay");
    }
    if report.output_coloring != col {
        v.fail(None, "output coloring does not match the last step");
    }
    if let Err(e) = check_json(&report.output_diagram, &report.output_coloring) {
        v.fail(None, format!("output: {e}"));
    }
    let palette: BTreeSet<u32> = report.output_coloring.assignment.values().map(|c| c.0).collect();
    if palette.iter().any(|c| order.contains(c)) {
        v.fail(None, "final palette meets {2k, 2k-1, k}");
    }
    if palette.len() <= 1 {
        v.fail(None, "output coloring is trivial");
    }
    if report.final_palette.iter().map(|c| c.0).collect::<BTreeSet<_>>() != palette {
        v.fail(None, "final palette does not match the output coloring");
    }
    match (components(input_d), components(&report.output_diagram)) {
        (Ok(a), Ok(b)) if a == b => {}
        (Ok(a), Ok(b)) => v.fail(None, format!("component count changed from {a} to {b}")),
        (Err(e), _) | (_, Err(e)) => v.fail(None, e),
    }
    let s = &report.statistics;
    if s.crossings_in != input_d.crossings.len()
        || s.crossings_out != report.output_diagram.crossings.len()
        || s.crossings_added != s.crossings_out as i64 - s.crossings_in as i64
        || s.steps != gi
    {
        v.fail(None, "statistics do not match the replay");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::enumerate;
    use crate::corpus;
    use crate::diagram::parse_pd;
    use crate::elimination::eliminate_all;

    fn sorted(mut v: Vec<Coloring>) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = v.drain(..).map(|c| c.assignment.values().map(|x| x.0).collect()).collect();
        out.sort();
        out
    }

    #[test]
    fn trefoil_counts() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        let all = brute_force_colorings(&d.to_json(), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(all.len(), 9);
        let trivial = all.iter().filter(|c| c.is_trivial()).count();
        assert_eq!(trivial, 3);
    }

    #[test]
    fn agrees_with_solver() {
        for e in corpus::corpus() {
            let d = e.diagram();
            if d.derive_arcs().len() > 5 {
                continue;
            }
            for p in [3, 5, 7, 11, 13] {
                let m = Modulus::new(p).unwrap();
                let bf = brute_force_colorings(&d.to_json(), p, DEFAULT_BUDGET).unwrap();
                let la = enumerate(&d, m, DEFAULT_BUDGET).unwrap();
                assert_eq!(sorted(bf), sorted(la), "{} p={p}", e.name);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        assert!(matches!(brute_force_colorings(&d.to_json(), 3, 26), Err(OracleError::BudgetExceeded { .. })));
        assert_eq!(brute_force_colorings(&d.to_json(), 9, 1000), Err(OracleError::NotPrime(9)));
    }

    #[test]
    fn witness_filters() {
        // trefoil at 11 has only trivial colorings
        let d = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        assert_eq!(fixed_diagram_witness(&d, 11, DEFAULT_BUDGET).unwrap(), None);
        let t11 = corpus::lookup("T(2,11)").unwrap().diagram();
        if let Some(c) = fixed_diagram_witness(&t11, 11, DEFAULT_BUDGET).unwrap() {
            assert!(!c.is_trivial());
            assert!(c.assignment.values().all(|x| ![10, 9, 5].contains(&x.0)));
            check_json(&t11.to_json(), &c).unwrap();
        }
    }

    #[test]
    fn report_round_trip_and_tampering() {
        let e = corpus::lookup("T(2,11)").unwrap();
        let d = e.diagram();
        let m = Modulus::new(11).unwrap();
        let c = crate::elimination::default_coloring(&d, m).unwrap();
        let rep = eliminate_all(&d, &c).unwrap();
        let dj = d.to_json();
        assert!(verify_report(&dj, &c, &rep).ok, "{:?}", verify_report(&dj, &c, &rep).failures);

        let mut bad = rep.clone();
        let step = bad.traces.iter_mut().find(|t| !t.steps.is_empty()).unwrap().steps.first_mut().unwrap();
        let arc = *step.coloring_after.assignment.keys().next().unwrap();
        let x = step.coloring_after.assignment[&arc];
        step.coloring_after.assignment.insert(arc, Color((x.0 + 1) % 11));
        let verdict = verify_report(&dj, &c, &bad);
        assert!(!verdict.ok);
        assert_eq!(verdict.failures[0].step, Some(0));

        let mut bad = rep.clone();
        let t = bad.traces.iter_mut().find(|t| !t.steps.is_empty()).unwrap();
        t.steps[0].moves.clear();
        let verdict = verify_report(&dj, &c, &bad);
        assert!(verdict.failures.iter().any(|f| f.reason.contains("hash chain broken")), "{verdict:?}");
    }
}
