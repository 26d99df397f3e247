//! Mechanical audit of the case tables: each row names an equality that
//! must not occur and its consequence; every consequence is re-derived by
//! exhaustive residue computation at the given prime.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::expr::{AffineExpr, Class, Env, Equation};
use super::{domain_memo, lookup, Binding, Role, TargetColor};
use crate::modular::is_prime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("{0} is not prime")]
    NonPrime(u32),
    #[error("modulus {0} is too small (need p > 7)")]
    ModulusTooSmall(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// The table's modulus class does not contain `p`.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRow {
    pub table: String,
    pub row: usize,
    pub equality: String,
    pub consequence: String,
    pub status: RowStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub p: u32,
    pub rows: Vec<AuditRow>,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != RowStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Fail)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct Branch {
    class: Option<Class>,
    eq: Equation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Then {
    Implies(Vec<Branch>),
    Excluded(Equation),
    Pattern { label: AffineExpr, value: AffineExpr },
    Modulus(u32),
    Admissible { expr: AffineExpr, value: AffineExpr },
}

#[derive(Debug, Clone, Deserialize)]
struct SymRow {
    eq: Equation,
    then: Then,
}

#[derive(Debug, Clone, Deserialize)]
struct Reduction {
    l: i64,
    figure: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Reason {
    L(i64),
    Ineq(Vec<String>),
    Degenerate(bool),
    Modulus(u32),
    Reduction(Reduction),
}

#[derive(Debug, Clone, Deserialize)]
struct LRow {
    lhs: AffineExpr,
    rhs: AffineExpr,
    reason: Reason,
}

#[derive(Debug, Clone, Deserialize)]
struct Exception {
    l: i64,
    figures: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    Symbolic { class: Option<Class>, context: Vec<Equation>, rows: Vec<SymRow> },
    L { class: Class, rows: Vec<LRow> },
    Chain { class: Class, l_min: i64, elements: Vec<AffineExpr>, relations: Vec<String>, exceptions: Vec<Exception> },
}

#[derive(Debug, Clone, Deserialize)]
struct Table {
    id: String,
    figure: String,
    target: TargetColor,
    #[serde(flatten)]
    body: Body,
}

#[derive(Deserialize)]
struct TablesFile {
    tables: Vec<Table>,
}

fn tables() -> &'static [Table] {
    static TABLES: OnceLock<Vec<Table>> = OnceLock::new();
    TABLES.get_or_init(|| {
        let f: TablesFile = serde_json::from_str(include_str!("../../data/tables.json")).expect("embedded tables parse");
        f.tables
    })
}

pub fn table_count() -> usize {
    tables().len()
}

/// Does a prime `n >= 11` exist at this value? Such a modulus would be a
/// real case, so a row may not dismiss it.
fn real_modulus(n: i64) -> bool {
    n >= 11 && n <= u32::MAX as i64 && is_prime(n as u32)
}

struct Ctx {
    p: u32,
    bad: Vec<i64>,
}

type Sol = BTreeSet<(i64, i64)>;

fn uses_b(eqs: &[&AffineExpr]) -> bool {
    eqs.iter().any(|e| e.uses_b())
}

/// Residue pairs `(a, b)` mod `n` satisfying every equation.
fn solutions(n: u32, l: Option<i64>, with_b: bool, eqs: &[AffineExpr]) -> Option<Sol> {
    let mut out = Sol::new();
    let bs: Vec<i64> = if with_b { (0..n as i64).collect() } else { vec![0] };
    for a in 0..n as i64 {
        for &b in &bs {
            let env = Env::new(n, a, b, l);
            let mut ok = true;
            for e in eqs {
                if e.eval(env)? != 0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.insert((a, b));
            }
        }
    }
    Some(out)
}

fn fmt_sol(s: &Sol, with_b: bool) -> String {
    let items: Vec<String> = s
        .iter()
        .take(6)
        .map(|(a, b)| if with_b { format!("(a={a},b={b})") } else { format!("a={a}") })
        .collect();
    let more = if s.len() > 6 { ", ..." } else { "" };
    format!("{{{}{more}}}", items.join(", "))
}

fn symbolic_row(
    cx: &Ctx,
    table: &Table,
    class: Option<Class>,
    context: &[Equation],
    row: &SymRow,
) -> Result<String, String> {
    let p = cx.p;
    let l = class.and_then(|c| c.l(p));
    let mut all: Vec<&AffineExpr> = Vec::new();
    let diffs: Vec<AffineExpr> = context.iter().map(|e| e.diff()).collect();
    all.extend(diffs.iter());
    let row_diff = row.eq.diff();
    all.push(&row_diff);
    let extra: Vec<AffineExpr> = match &row.then {
        Then::Implies(bs) => bs.iter().map(|b| b.eq.diff()).collect(),
        Then::Excluded(e) => vec![e.diff()],
        Then::Pattern { label, value } => vec![*label - *value],
        Then::Admissible { expr, .. } => vec![*expr],
        Then::Modulus(_) => vec![],
    };
    all.extend(extra.iter());
    let with_b = uses_b(&all);
    let mut lhs_eqs = diffs.clone();
    lhs_eqs.push(row_diff);
    let undefined = || "expression needs l outside a modulus class".to_string();
    let sol = solutions(p, l, with_b, &lhs_eqs).ok_or_else(undefined)?;
    let is_bad = |v: &AffineExpr, l: Option<i64>| -> Result<bool, String> {
        let r = v.eval(Env::new(p, 0, 0, l)).ok_or_else(undefined)?;
        Ok(cx.bad.contains(&r))
    };
    match &row.then {
        Then::Implies(branches) => {
            let live: Vec<&Branch> =
                branches.iter().filter(|b| b.class.is_none_or(|c| c.l(p).is_some())).collect();
            let [br] = live.as_slice() else {
                return Err(format!("{} branches apply at p={p}", live.len()));
            };
            let bl = br.class.and_then(|c| c.l(p)).or(l);
            let mut rhs_eqs = diffs.clone();
            rhs_eqs.push(br.eq.diff());
            let cons = solutions(p, bl, with_b, &rhs_eqs).ok_or_else(undefined)?;
            if sol != cons {
                return Err(format!("solutions {} but consequence gives {}", fmt_sol(&sol, with_b), fmt_sol(&cons, with_b)));
            }
            Ok(format!("equivalent to {} ({} solutions)", br.eq, sol.len()))
        }
        Then::Excluded(eq) => {
            let mut rhs_eqs = diffs.clone();
            rhs_eqs.push(eq.diff());
            let cons = solutions(p, l, with_b, &rhs_eqs).ok_or_else(undefined)?;
            if sol != cons {
                return Err(format!("solutions {} but {eq} gives {}", fmt_sol(&sol, with_b), fmt_sol(&cons, with_b)));
            }
            if eq.lhs != (AffineExpr { a: 1, ..AffineExpr::ZERO }) || !is_bad(&eq.rhs, l)? {
                return Err(format!("{eq} is not a forbidden value of a"));
            }
            Ok(format!("forces {eq}, a forbidden color"))
        }
        Then::Pattern { label, value } => {
            let mut rhs_eqs = diffs.clone();
            rhs_eqs.push(*label - *value);
            let cons = solutions(p, l, with_b, &rhs_eqs).ok_or_else(undefined)?;
            if sol != cons {
                return Err(format!("solutions {} but {label}={value} gives {}", fmt_sol(&sol, with_b), fmt_sol(&cons, with_b)));
            }
            if !is_bad(value, l)? {
                return Err(format!("{value} is not forbidden"));
            }
            let fig = lookup(&table.figure).ok_or_else(|| format!("no rule {}", table.figure))?;
            if !fig.labels_with(Role::Pattern).any(|e| e == label) {
                return Err(format!("{label} is not a pattern arc of {}", table.figure));
            }
            Ok(format!("forces pattern arc {label} to {value}"))
        }
        Then::Modulus(n) => {
            if !sol.is_empty() {
                return Err(format!("solvable at p={p}: {}", fmt_sol(&sol, with_b)));
            }
            if real_modulus(*n as i64) {
                return Err(format!("{n} is a prime above 7"));
            }
            let ln = match class {
                Some(c) => Some(c.l(*n).ok_or_else(|| format!("{n} not in class {c}"))?),
                None => None,
            };
            let at_n = solutions(*n, ln, with_b, &lhs_eqs).ok_or_else(undefined)?;
            if at_n.is_empty() {
                return Err(format!("not solvable mod {n} either"));
            }
            Ok(format!("only possible for 2k+1={n}"))
        }
        Then::Admissible { expr, value } => {
            let want = value.eval(Env::new(p, 0, 0, l)).ok_or_else(undefined)?;
            if cx.bad.contains(&want) {
                return Err(format!("admissible value {value} is forbidden"));
            }
            for &(a, b) in &sol {
                let got = expr.eval(Env::new(p, a, b, l)).ok_or_else(undefined)?;
                if got != want {
                    return Err(format!("{expr}={got} at a={a}, b={b}, not {value}"));
                }
            }
            Ok(format!("{expr}={value}, admissible"))
        }
    }
}

/// Integer roots `l` of `lhs = rhs`, reading bare negative constants
/// literally and also as residues (`-1` as `p-1`).
fn integer_roots(class: Class, lhs: AffineExpr, rhs: AffineExpr) -> Vec<i64> {
    let lift = |e: AffineExpr| -> Vec<AffineExpr> {
        if e.is_numeric() && e.c < 0 {
            vec![e, e + AffineExpr { l: class.m as i64, c: class.r as i64, ..AffineExpr::ZERO }]
        } else {
            vec![e]
        }
    };
    let mut out = Vec::new();
    for x in lift(lhs) {
        for y in lift(rhs) {
            let d = x - y;
            // 2d = dl*l + dc with k = (m*l + r - 1)/2
            let dl = 2 * d.l + d.k * class.m as i64;
            let dc = 2 * d.c + d.k * (class.r as i64 - 1);
            if dl != 0 && dc % dl == 0 {
                out.push(-dc / dl);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn l_row(cx: &Ctx, class: Class, l: i64, row: &LRow) -> Result<String, String> {
    let p = cx.p;
    let env = Env::new(p, 0, 0, Some(l));
    let differ = (row.lhs - row.rhs).eval(env).unwrap() != 0;
    let roots = integer_roots(class, row.lhs, row.rhs);
    match &row.reason {
        Reason::L(v) => {
            if !roots.contains(v) {
                return Err(format!("l={v} is not a root (roots {roots:?})"));
            }
            if real_modulus(class.p_of(*v)) {
                return Err(format!("l={v} gives the prime {}", class.p_of(*v)));
            }
            if !differ {
                return Err(format!("equality holds at p={p}"));
            }
            Ok(format!("only at l={v}, p={}", class.p_of(*v)))
        }
        Reason::Ineq(chain) => {
            if !differ {
                return Err(format!("equality holds at p={p}"));
            }
            chain_holds(class, l, chain)?;
            Ok(format!("{} at l={l}", chain.join(" ")))
        }
        Reason::Degenerate(claimed) => {
            if !claimed {
                return Err("malformed row".into());
            }
            if let Some(v) = roots.iter().find(|v| **v >= 1) {
                return Err(format!("integer root l={v}"));
            }
            if !differ {
                return Err(format!("equality holds at p={p}"));
            }
            Ok("no admissible l".into())
        }
        Reason::Modulus(n) => {
            let n = *n as i64;
            let m = class.m as i64;
            let r = class.r as i64;
            if (n - r) % m != 0 || n < r {
                return Err(format!("{n} is not in class {class}"));
            }
            let ln = (n - r) / m;
            let en = Env::new(n as u32, 0, 0, Some(ln));
            if (row.lhs - row.rhs).eval(en).unwrap() != 0 {
                return Err(format!("equality fails mod {n}"));
            }
            if real_modulus(n) {
                return Err(format!("{n} is a prime above 7"));
            }
            if !differ {
                return Err(format!("equality holds at p={p}"));
            }
            Ok(format!("only for 2k+1={n}"))
        }
        Reason::Reduction(red) => {
            if differ == (l == red.l) {
                return Err(format!("equality at p={p} does not match l={}", red.l));
            }
            let n = class.p_of(red.l);
            let fig = lookup(&red.figure).ok_or_else(|| format!("no rule {}", red.figure))?;
            if !fig.instances.iter().any(|i| i.modulus == Some(n as u32)) {
                return Err(format!("{} is not a fix-up for p={n}", red.figure));
            }
            Ok(format!("reduction to {} (l={}, p={n})", red.figure, red.l))
        }
    }
}

fn rel_holds(x: i64, rel: &str, y: i64) -> Result<bool, String> {
    Ok(match rel {
        "<" => x < y,
        "<=" => x <= y,
        ">" => x > y,
        ">=" => x >= y,
        "=" => x == y,
        other => return Err(format!("unknown relation {other}")),
    })
}

fn chain_holds(class: Class, l: i64, chain: &[String]) -> Result<(), String> {
    let mut vals = Vec::new();
    for (i, tok) in chain.iter().enumerate() {
        if i % 2 == 0 {
            let e: AffineExpr = tok.parse().map_err(|e| format!("{e}"))?;
            vals.push(e.int_in_l(class, l).ok_or_else(|| format!("{tok} is not an integer"))?);
        }
    }
    for (i, rel) in chain.iter().skip(1).step_by(2).enumerate() {
        if !rel_holds(vals[i], rel, vals[i + 1])? {
            return Err(format!("{} {rel} {} fails at l={l}", chain[2 * i], chain[2 * i + 2]));
        }
    }
    Ok(())
}

/// Values a chain uses as fixed posts rather than new arcs.
fn is_boundary(class: Class, e: &AffineExpr) -> bool {
    let k = AffineExpr { k: 1, ..AffineExpr::ZERO };
    [AffineExpr::constant(-1), AffineExpr::constant(-2), k, AffineExpr::ZERO]
        .iter()
        .any(|v| (*e - *v).is_identically_zero(Some(class)))
}

#[allow(clippy::too_many_arguments)]
fn chain_table(
    cx: &Ctx,
    class: Class,
    l: i64,
    l_min: i64,
    elements: &[AffineExpr],
    relations: &[String],
    exceptions: &[Exception],
    notes: &mut Vec<String>,
    id: &str,
) -> Result<String, String> {
    let p = cx.p;
    if l < l_min {
        return Err(format!("l={l} below the table's minimum {l_min}"));
    }
    let env = Env::new(p, 0, 0, Some(l));
    let hits: Vec<String> = elements
        .iter()
        .filter(|e| !is_boundary(class, e))
        .filter_map(|e| {
            let v = e.eval(env).unwrap();
            cx.bad.contains(&v).then(|| format!("{e}={v}"))
        })
        .collect();
    for (i, rel) in relations.iter().enumerate() {
        let x = elements[i].int_in_l(class, l);
        let y = elements[i + 1].int_in_l(class, l);
        if let (Some(x), Some(y)) = (x, y) {
            if !rel_holds(x, rel, y)? {
                notes.push(format!("{id}: {} {rel} {} is false as integers at l={l} (p={p})", elements[i], elements[i + 1]));
            }
        }
    }
    match exceptions.iter().find(|x| x.l == l) {
        Some(exc) => {
            if hits.is_empty() {
                return Err(format!("exception at l={l} but no element is forbidden"));
            }
            for f in &exc.figures {
                let rule = lookup(f).ok_or_else(|| format!("no rule {f}"))?;
                if !rule.instances.iter().any(|i| i.modulus == Some(p)) {
                    return Err(format!("{f} is not a fix-up for p={p}"));
                }
            }
            Ok(format!("l={l}: {} handled by {}", hits.join(", "), exc.figures.join(", ")))
        }
        None if hits.is_empty() => Ok(format!("all {} labels clear at l={l}", elements.len())),
        None => Err(format!("forbidden labels {} at l={l}", hits.join(", "))),
    }
}

/// Re-derive every table row at the prime `p`.
pub fn audit_tables(p: u32) -> Result<AuditReport, AuditError> {
    if !is_prime(p) {
        return Err(AuditError::NonPrime(p));
    }
    if p <= 7 {
        return Err(AuditError::ModulusTooSmall(p));
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut memo: HashMap<String, Vec<Binding>> = HashMap::new();
    let mut vacuous = Vec::new();
    for t in tables() {
        let cx = Ctx { p, bad: t.target.forbidden(p) };
        let mut push = |row: usize, equality: String, consequence: String, r: Option<Result<String, String>>| {
            let (status, detail) = match r {
                None => (RowStatus::NotApplicable, String::new()),
                Some(Ok(d)) => (RowStatus::Pass, d),
                Some(Err(d)) => (RowStatus::Fail, d),
            };
            rows.push(AuditRow { table: t.id.clone(), row, equality, consequence, status, detail });
        };
        match &t.body {
            Body::Symbolic { class, context, rows: rs } => {
                let applies = class.is_none_or(|c| c.l(p).is_some());
                for (i, r) in rs.iter().enumerate() {
                    let res = applies.then(|| symbolic_row(&cx, t, *class, context, r));
                    push(i, r.eq.to_string(), describe_then(&r.then), res);
                }
            }
            Body::L { class, rows: rs } => {
                let l = class.l(p);
                for (i, r) in rs.iter().enumerate() {
                    let res = l.map(|l| l_row(&cx, *class, l, r));
                    push(i, format!("{}={}", r.lhs, r.rhs), describe_reason(&r.reason), res);
                }
            }
            Body::Chain { class, l_min, elements, relations, exceptions } => {
                // A chain describes one rule's arcs; if no binding reaches
                // that rule at p (an upstream arc would already carry a
                // forbidden color), there is nothing to check.
                let occurs = lookup(&t.figure).is_some_and(|r| !domain_memo(r, p, &mut memo).is_empty());
                let res = class.l(p).map(|l| {
                    if occurs {
                        chain_table(&cx, *class, l, *l_min, elements, relations, exceptions, &mut notes, &t.id)
                    } else {
                        vacuous.push(t.id.clone());
                        Ok(format!("{} does not arise at p={p}", t.figure))
                    }
                });
                let chain: Vec<String> = elements.iter().map(|e| e.to_string()).collect();
                push(0, chain.join(" < "), format!("labels avoid forbidden colors for {class}"), res);
            }
        }
    }
    if !vacuous.is_empty() {
        notes.push(format!("vacuous at p={p}: {}", vacuous.join(", ")));
    }
    Ok(AuditReport { p, rows, notes })
}

fn describe_then(t: &Then) -> String {
    match t {
        Then::Implies(bs) => bs
            .iter()
            .map(|b| match b.class {
                Some(c) => format!("{} when p={c}", b.eq),
                None => b.eq.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" or "),
        Then::Excluded(e) => format!("{e} (contradiction)"),
        Then::Pattern { label, value } => format!("{label}={value} (contradiction)"),
        Then::Modulus(n) => format!("2k+1={n} (contradiction)"),
        Then::Admissible { expr, value } => format!("{expr}={value} (admissible)"),
    }
}

fn describe_reason(r: &Reason) -> String {
    match r {
        Reason::L(v) => format!("l={v} (contradiction)"),
        Reason::Ineq(c) => c.join(" "),
        Reason::Degenerate(_) => "no l (contradiction)".into(),
        Reason::Modulus(n) => format!("2k+1={n} (contradiction)"),
        Reason::Reduction(r) => format!("l={} and reduction to {}", r.l, r.figure),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row<'a>(rep: &'a AuditReport, table: &str, eq: &str) -> &'a AuditRow {
        rep.rows
            .iter()
            .find(|r| r.table == table && r.equality == eq)
            .unwrap_or_else(|| panic!("{table} {eq}"))
    }

    #[test]
    fn rejects_bad_moduli() {
        assert_eq!(audit_tables(15), Err(AuditError::NonPrime(15)));
        assert_eq!(audit_tables(7), Err(AuditError::ModulusTooSmall(7)));
    }

    #[test]
    fn first_row_at_eleven() {
        let rep = audit_tables(11).unwrap();
        let r = row(&rep, "Ta:fig:red3bis", "2a-b=-1");
        assert_eq!(r.status, RowStatus::Pass, "{}", r.detail);
    }

    #[test]
    fn class_split_at_thirteen() {
        // 13 = 3*4 + 1, so a = l - 1 = 3 and 3*3 + 2 = 11 = 2k-1
        let rep = audit_tables(13).unwrap();
        let r = row(&rep, "Ta:fig:red6b2a+1", "3a+2=2k-1");
        assert_eq!(r.status, RowStatus::Pass, "{}", r.detail);
        assert!(r.detail.contains("a=l-1"), "{}", r.detail);
    }

    #[test]
    fn reduction_not_contradiction() {
        let rep = audit_tables(11).unwrap();
        let r = row(&rep, "Ta:fig:red50d", "3l+4=4l+2");
        assert_eq!(r.status, RowStatus::Pass, "{}", r.detail);
        assert!(r.consequence.contains("reduction to fig:50e"));
        assert!(!r.consequence.contains("contradiction"));
    }

    #[test]
    fn passes_at_small_primes() {
        for p in [11, 13, 17, 19, 23] {
            let rep = audit_tables(p).unwrap();
            let bad: Vec<_> = rep.failures().map(|r| format!("{} {}: {}", r.table, r.equality, r.detail)).collect();
            assert!(bad.is_empty(), "p={p}: {bad:#?}");
        }
    }
}
