//! The rewrite-rule catalog and its mechanical checks.
//!
//! Each case of the construction is one [`RewriteRule`]: a target color, a
//! phase, the conditions under which it is reached from its parent case,
//! and its arc labels as affine expressions. Rules form a tree: the root
//! for a (target, phase) pair handles every binding except those its
//! children take over.

mod audit;
mod expr;
mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use audit::{audit_tables, table_count, AuditError, AuditReport, AuditRow, RowStatus};
pub use expr::{AffineExpr, Class, Env, Equation, ExprError};
pub use sweep::{soundness, SoundnessReport, Violation};

use crate::coloring::Coloring;
use crate::diagram::{CrossingId, Diagram, EdgeId, HalfEdge, Move};
use crate::elimination::{macros, search, MacroKind, Phase, State};
use crate::modular::{Color, Modulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetColor {
    #[serde(rename = "2k")]
    TwoK,
    #[serde(rename = "2k-1")]
    TwoKMinusOne,
    #[serde(rename = "k")]
    K,
}

impl TargetColor {
    pub const ALL: [TargetColor; 3] = [TargetColor::TwoK, TargetColor::TwoKMinusOne, TargetColor::K];

    pub fn expr(self) -> AffineExpr {
        match self {
            TargetColor::TwoK => AffineExpr::constant(-1),
            TargetColor::TwoKMinusOne => AffineExpr::constant(-2),
            TargetColor::K => AffineExpr { k: 1, ..AffineExpr::ZERO },
        }
    }

    pub fn color(self, m: Modulus) -> Color {
        match self {
            TargetColor::TwoK => m.color(-1),
            TargetColor::TwoKMinusOne => m.color(-2),
            TargetColor::K => Color(m.k()),
        }
    }

    /// Colors removed before this one.
    pub fn removed(self, m: Modulus) -> Vec<Color> {
        match self {
            TargetColor::TwoK => vec![],
            TargetColor::TwoKMinusOne => vec![m.color(-1)],
            TargetColor::K => vec![m.color(-1), m.color(-2)],
        }
    }

    pub fn removed_exprs(self) -> Vec<AffineExpr> {
        match self {
            TargetColor::TwoK => vec![],
            TargetColor::TwoKMinusOne => vec![AffineExpr::constant(-1)],
            TargetColor::K => vec![AffineExpr::constant(-1), AffineExpr::constant(-2)],
        }
    }

    /// Removed colors plus the target itself, as residues.
    pub fn forbidden(self, p: u32) -> Vec<i64> {
        let p = p as i64;
        let mut out = vec![p - 1];
        match self {
            TargetColor::TwoK => {}
            TargetColor::TwoKMinusOne => out.push(p - 2),
            TargetColor::K => {
                out.push(p - 2);
                out.push((p - 1) / 2);
            }
        }
        out
    }

    pub fn of(m: Modulus, c: Color) -> Option<TargetColor> {
        TargetColor::ALL.into_iter().find(|t| t.color(m) == c)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            TargetColor::TwoK => "2k",
            TargetColor::TwoKMinusOne => "2k-1",
            TargetColor::K => "k",
        }
    }
}

/// How a rule is carried out by the engine's macros. `None` marks cases
/// whose move sequence is not reproduced; the engine reaches those cases by
/// search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    Cover,
    UnderSlide,
    CoverThenSlide,
    None,
}

/// One way of reaching a rule from its parent case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub parent: Option<String>,
    pub class: Option<Class>,
    pub modulus: Option<u32>,
    pub when: Vec<Equation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Identically the target color.
    Target,
    /// An arc present before the rewrite.
    Pattern,
    /// A new arc; must avoid the target and the removed colors.
    Replacement,
    /// Shows a forbidden value that the case steers around.
    Avoided,
    /// Drawn but not part of the claim being checked.
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub expr: AffineExpr,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub id: String,
    pub target: TargetColor,
    pub phase: Phase,
    pub instances: Vec<Instance>,
    pub realization: Realization,
    pub modulus_label: Option<String>,
    pub labels: Vec<Label>,
    /// New crossings as `[over, under, under]`.
    pub crossings: Vec<[AffineExpr; 3]>,
}

impl RewriteRule {
    pub fn is_root(&self) -> bool {
        self.instances.iter().any(|i| i.parent.is_none())
    }

    pub fn is_fixup(&self) -> bool {
        self.instances.iter().any(|i| i.modulus.is_some())
    }

    pub fn labels_with(&self, role: Role) -> impl Iterator<Item = &AffineExpr> {
        self.labels.iter().filter(move |l| l.role == role).map(|l| &l.expr)
    }

    pub fn uses_b(&self) -> bool {
        self.phase == Phase::Under
    }

    /// Are the pattern arcs free of forbidden colors at this binding?
    pub fn pattern_valid(&self, p: u32, bd: Binding) -> bool {
        let bad = self.target.forbidden(p);
        self.labels_with(Role::Pattern).all(|e| match e.eval(bd.env(p)) {
            Some(v) => !bad.contains(&v),
            None => false,
        })
    }

    pub fn guards(&self) -> Vec<Guard> {
        let mut out = Vec::new();
        for inst in &self.instances {
            for eq in &inst.when {
                out.push(Guard { congruence: *eq, modulus_class: inst.class, modulus: inst.modulus, polarity: Polarity::Require });
            }
            if inst.when.is_empty() && (inst.class.is_some() || inst.modulus.is_some()) {
                let zero = AffineExpr::ZERO;
                out.push(Guard {
                    congruence: Equation { lhs: zero, rhs: zero },
                    modulus_class: inst.class,
                    modulus: inst.modulus,
                    polarity: Polarity::Require,
                });
            }
        }
        let mut bad = self.target.removed_exprs();
        bad.push(self.target.expr());
        for e in self.labels_with(Role::Pattern) {
            for v in &bad {
                out.push(Guard { congruence: Equation { lhs: *e, rhs: *v }, modulus_class: None, modulus: None, polarity: Polarity::Forbid });
            }
        }
        for (_, inst) in index().children(&self.id) {
            for eq in &inst.when {
                out.push(Guard { congruence: *eq, modulus_class: inst.class, modulus: inst.modulus, polarity: Polarity::Forbid });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Require,
    Forbid,
}

/// A congruence that must hold (or must fail) for a rule to be used,
/// optionally restricted to `p = m*l + r` or to one fixed modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Guard {
    pub congruence: Equation,
    pub modulus_class: Option<Class>,
    pub modulus: Option<u32>,
    pub polarity: Polarity,
}

/// Parameter values for one use of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding {
    pub a: i64,
    pub b: i64,
    pub l: Option<i64>,
}

impl Binding {
    pub fn env(self, p: u32) -> Env {
        Env::new(p, self.a, self.b, self.l)
    }
}

impl Instance {
    /// The binding as seen by the child, if this instance's conditions hold.
    pub fn admits(&self, p: u32, bd: Binding) -> Option<Binding> {
        if self.modulus.is_some_and(|n| n != p) {
            return None;
        }
        let l = match self.class {
            Some(c) => Some(c.l(p)?),
            None => bd.l,
        };
        let bd = Binding { l, ..bd };
        for eq in &self.when {
            if !eq.holds(bd.env(p))? {
                return None;
            }
        }
        Some(bd)
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleExport {
    pub rule_id: String,
    pub figure: String,
    pub target_color: TargetColor,
    pub phase: Phase,
    pub guards: Vec<Guard>,
    pub replacement_labels: Vec<AffineExpr>,
}

struct Index {
    rules: Vec<RewriteRule>,
    by_id: HashMap<String, usize>,
    children: HashMap<String, Vec<(usize, usize)>>,
}

impl Index {
    fn children<'a>(&'a self, id: &str) -> impl Iterator<Item = (&'a RewriteRule, &'a Instance)> + 'a {
        self.children
            .get(id)
            .into_iter()
            .flatten()
            .map(|&(r, i)| (&self.rules[r], &self.rules[r].instances[i]))
    }
}

#[derive(Deserialize)]
struct CatalogFile {
    rules: Vec<RewriteRule>,
}

fn index() -> &'static Index {
    static INDEX: OnceLock<Index> = OnceLock::new();
    INDEX.get_or_init(|| {
        let file: CatalogFile =
            serde_json::from_str(include_str!("../../data/catalog.json")).expect("embedded catalog parses");
        let rules = file.rules;
        let by_id = rules.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        let mut children: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (ri, r) in rules.iter().enumerate() {
            for (ii, inst) in r.instances.iter().enumerate() {
                if let Some(parent) = &inst.parent {
                    children.entry(parent.clone()).or_default().push((ri, ii));
                }
            }
        }
        Index { rules, by_id, children }
    })
}

/// Every rule, in catalog order.
pub fn catalog() -> &'static [RewriteRule] {
    &index().rules
}

pub fn lookup(id: &str) -> Option<&'static RewriteRule> {
    let ix = index();
    ix.by_id.get(id).map(|&i| &ix.rules[i])
}

pub fn root(target: TargetColor, phase: Phase) -> &'static RewriteRule {
    catalog()
        .iter()
        .find(|r| r.is_root() && r.target == target && r.phase == phase)
        .expect("one root per target and phase")
}

/// Rules reached directly from `id`, with the instance that links them.
pub fn children(id: &str) -> Vec<(&'static RewriteRule, &'static Instance)> {
    index().children(id).collect()
}

pub fn export() -> Vec<RuleExport> {
    catalog()
        .iter()
        .map(|r| RuleExport {
            rule_id: r.id.clone(),
            figure: r.id.trim_start_matches("fig:").to_string(),
            target_color: r.target,
            phase: r.phase,
            guards: r.guards(),
            replacement_labels: r.labels_with(Role::Replacement).copied().collect(),
        })
        .collect()
}

/// All bindings at `p` that reach `rule` (before its own children take any
/// over). Roots range over every `a` (and every `b` in the under phase).
pub fn domain(rule: &RewriteRule, p: u32) -> Vec<Binding> {
    let mut memo = HashMap::new();
    domain_memo(rule, p, &mut memo)
}

pub(crate) fn domain_memo(rule: &RewriteRule, p: u32, memo: &mut HashMap<String, Vec<Binding>>) -> Vec<Binding> {
    if let Some(d) = memo.get(&rule.id) {
        return d.clone();
    }
    let mut out = Vec::new();
    for inst in &rule.instances {
        match &inst.parent {
            None => {
                let bs: Vec<i64> = if rule.uses_b() { (0..p as i64).collect() } else { vec![0] };
                for a in 0..p as i64 {
                    for &b in &bs {
                        if let Some(bd) = inst.admits(p, Binding { a, b, l: None }) {
                            out.push(bd);
                        }
                    }
                }
            }
            Some(parent) => {
                let parent = lookup(parent).expect("parent in catalog");
                for bd in domain_memo(parent, p, memo) {
                    if let Some(bd) = inst.admits(p, bd) {
                        out.push(bd);
                    }
                }
            }
        }
    }
    out.retain(|bd| rule.pattern_valid(p, *bd));
    out.sort();
    out.dedup();
    memo.insert(rule.id.clone(), out.clone());
    out
}

/// The first child of `rule` whose conditions hold at `bd`.
pub fn redirect(rule: &RewriteRule, p: u32, bd: Binding) -> Option<(&'static RewriteRule, Binding)> {
    index().children(&rule.id).find_map(|(child, inst)| inst.admits(p, bd).map(|b| (child, b)))
}

/// The deepest rule reached from the root for `(target, phase)` by
/// following child conditions.
pub fn descend(target: TargetColor, phase: Phase, p: u32, a: i64, b: i64) -> (&'static RewriteRule, Binding) {
    let mut rule = root(target, phase);
    let mut bd = Binding { a, b, l: None };
    while let Some((child, next)) = redirect(rule, p, bd) {
        rule = child;
        bd = next;
    }
    (rule, bd)
}

fn realizes(r: Realization, kind: MacroKind) -> bool {
    matches!((r, kind), (Realization::Cover, MacroKind::Cover) | (Realization::UnderSlide, MacroKind::UnderSlide))
}

/// Name the case a single engine rewrite falls under. A lone macro whose
/// binding lands on a rule realized by that macro gets the rule's id;
/// anything else (chains of macros, or a case the catalog realizes with a
/// different move sequence) is a search detour.
pub fn classify(m: Modulus, t: Color, phase: Phase, kinds: &[MacroKind], binding: &BTreeMap<String, u32>) -> String {
    let detour = || "search:detour".to_string();
    let (Some(target), [kind]) = (TargetColor::of(m, t), kinds) else {
        return detour();
    };
    let Some(&a) = binding.get("a") else {
        return detour();
    };
    if binding.contains_key("reach") {
        return detour();
    }
    let b = binding.get("b").copied().unwrap_or(0);
    let (rule, _) = descend(target, phase, m.p(), a as i64, b as i64);
    if realizes(rule.realization, *kind) {
        rule.id.clone()
    } else {
        detour()
    }
}

/// Where a rule is to be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSite {
    /// Cover `crossing` with a finger of `finger`, entering at `corner`.
    Cover { crossing: CrossingId, corner: u8, finger: HalfEdge },
    /// Slide across the under-edge `edge`.
    Slide { edge: EdgeId, side: usize, first_on_top: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("rule {0} is not applicable at this site")]
    GuardViolated(String),
    #[error("rule {0} has no move sequence at this site")]
    NoRealization(String),
}

fn site_binding(rule: &RewriteRule, st: &State, site: RuleSite) -> Option<(Binding, MacroKind)> {
    let m = st.c.modulus;
    let t = rule.target.color(m);
    match site {
        RuleSite::Cover { crossing, corner, finger } => {
            let cr = st.d.crossing(crossing)?;
            if corner > 3 || !st.d.has_edge(finger.edge) || cr.ports.contains(&finger.edge) {
                return None;
            }
            let (o, [u1, u2]) = st.crossing_colors(crossing);
            let mono = o == t && u1 == t && u2 == t;
            let phase = match (mono, o == t) {
                (true, _) => Phase::Mono,
                (false, true) => Phase::Over,
                _ => return None,
            };
            (phase == rule.phase).then_some(())?;
            let a = st.color_of(finger.edge);
            Some((Binding { a: a.0 as i64, b: 0, l: None }, MacroKind::Cover))
        }
        RuleSite::Slide { edge, side, first_on_top } => {
            if rule.phase != Phase::Under || side > 1 || !st.d.has_edge(edge) || st.color_of(edge) != t {
                return None;
            }
            let [p, q] = st.d.endpoints(edge)?;
            if st.d.is_over(p) || st.d.is_over(q) {
                return None;
            }
            let bind = search::slide_binding(st, edge, side, first_on_top);
            Some((Binding { a: bind["a"] as i64, b: bind["b"] as i64, l: None }, MacroKind::UnderSlide))
        }
    }
}

/// Does `rule` govern this site: the site has the rule's shape and phase,
/// carries the target color, and the binding reaches exactly this rule
/// with its pattern arcs clear of forbidden colors?
pub fn applicable(rule: &RewriteRule, d: &Diagram, c: &Coloring, site: RuleSite) -> bool {
    let Ok(m) = Modulus::new(c.p) else {
        return false;
    };
    let Ok(st) = State::from_coloring(d, c, m) else {
        return false;
    };
    let Some((bd, kind)) = site_binding(rule, &st, site) else {
        return false;
    };
    if !realizes(rule.realization, kind) {
        return false;
    }
    let (reached, bd) = descend(rule.target, rule.phase, m.p(), bd.a, bd.b);
    reached.id == rule.id && rule.pattern_valid(m.p(), bd)
}

/// Carry out `rule` at `site`.
pub fn apply(rule: &RewriteRule, d: &Diagram, c: &Coloring, site: RuleSite) -> Result<(Diagram, Coloring, Vec<Move>), ApplyError> {
    if !applicable(rule, d, c, site) {
        return Err(ApplyError::GuardViolated(rule.id.clone()));
    }
    let m = Modulus::new(c.p).expect("checked by applicable");
    let st = State::from_coloring(d, c, m).expect("checked by applicable");
    let banned = rule.target.removed(m);
    let run = match site {
        RuleSite::Cover { crossing, corner, finger } => macros::cover(&st, crossing, corner, finger, &banned),
        RuleSite::Slide { edge, side, first_on_top } => macros::under_slide(&st, edge, side, first_on_top, &banned),
    };
    let run = run.ok_or_else(|| ApplyError::NoRealization(rule.id.clone()))?;
    let coloring = run.state.arc_coloring();
    Ok((run.state.d, coloring, run.moves))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_a_forest() {
        let rules = catalog();
        assert!(rules.len() > 90);
        for t in TargetColor::ALL {
            for ph in [Phase::Mono, Phase::Over, Phase::Under] {
                let n = rules.iter().filter(|r| r.is_root() && r.target == t && r.phase == ph).count();
                assert_eq!(n, 1, "{t:?} {ph:?}");
            }
        }
        for r in rules {
            for inst in &r.instances {
                if let Some(p) = &inst.parent {
                    let parent = lookup(p).unwrap_or_else(|| panic!("{}: parent {p}", r.id));
                    assert_eq!(parent.target, r.target, "{}", r.id);
                }
            }
        }
    }

    #[test]
    fn spec_lookups() {
        let eps1 = lookup("fig:eps1").unwrap();
        assert_eq!(eps1.target, TargetColor::TwoK);
        assert_eq!(eps1.phase, Phase::Mono);
        let repl: Vec<String> = eps1.labels_with(Role::Replacement).map(|e| e.to_string()).collect();
        assert_eq!(repl, ["2a+1"]);
        let eps2 = lookup("fig:eps2").unwrap();
        let repl: Vec<String> = eps2.labels_with(Role::Replacement).map(|e| e.to_string()).collect();
        assert!(repl.contains(&"-a-2".to_string()) && repl.contains(&"3a+2".to_string()), "{repl:?}");
        // red6 forbids the four sub-instances
        let red6 = lookup("fig:red6").unwrap();
        let forbid: Vec<String> = red6
            .guards()
            .iter()
            .filter(|g| g.polarity == Polarity::Forbid && g.modulus_class.is_none())
            .map(|g| g.congruence.to_string())
            .collect();
        for s in ["b=2a+1", "b=2a+2", "b=a+k", "b=a"] {
            assert!(forbid.contains(&s.to_string()), "{s} in {forbid:?}");
        }
    }

    #[test]
    fn crossings_are_fox_identities() {
        for r in catalog() {
            let class = r.instances.iter().find_map(|i| i.class);
            for [o, u1, u2] in &r.crossings {
                let d = *u1 + *u2 - *o * 2;
                if r.is_fixup() {
                    continue;
                }
                assert!(d.is_identically_zero(class), "{}: {o} {u1} {u2}", r.id);
            }
        }
    }

    #[test]
    fn descend_follows_conditions() {
        // p = 13 = 3*4 + 1; 3a+2 = 2k-1 gives a = l-1 = 3
        let (r, bd) = descend(TargetColor::TwoKMinusOne, Phase::Under, 13, 3, 7);
        assert_eq!(r.id, "fig:red8");
        assert_eq!(bd.l, Some(4));
        let (r, _) = descend(TargetColor::TwoK, Phase::Mono, 11, 3, 0);
        assert_eq!(r.id, "fig:eps1");
    }

    #[test]
    fn export_is_json() {
        let v = serde_json::to_value(export()).unwrap();
        assert_eq!(v[0]["ruleId"], "fig:eps1");
        assert!(v[0]["guards"].is_array());
    }

    fn sites(st: &State) -> Vec<RuleSite> {
        let mut out = Vec::new();
        for x in st.d.crossings() {
            for (corner, finger, _) in macros::cover_fingers(st, x.id, Color(u32::MAX)) {
                out.push(RuleSite::Cover { crossing: x.id, corner, finger });
            }
        }
        for edge in st.d.edge_ids() {
            for side in 0..2 {
                for first_on_top in [false, true] {
                    out.push(RuleSite::Slide { edge, side, first_on_top });
                }
            }
        }
        out
    }

    #[test]
    fn apply_keeps_colorings_valid() {
        let mut applied = BTreeMap::new();
        let mut refused = 0;
        for (name, p) in [("T(2,11)", 11), ("6_2", 11)] {
            let d = crate::corpus::lookup(name).unwrap().diagram();
            let m = Modulus::new(p).unwrap();
            let c = crate::coloring::first_nontrivial(&d, m).unwrap();
            let rep = crate::elimination::eliminate_all(&d, &c).unwrap();
            let mut states = vec![(d.clone(), c.clone())];
            let mut cur = d;
            for step in rep.traces.iter().flat_map(|t| &t.steps) {
                for mv in &step.moves {
                    cur = crate::diagram::apply_move(&cur, mv).unwrap().diagram;
                }
                states.push((cur.clone(), step.coloring_after.clone()));
            }
            for (d, c) in states.iter().step_by(3) {
                let st = State::from_coloring(d, c, m).unwrap();
                for site in sites(&st) {
                    for rule in catalog() {
                        if !applicable(rule, d, c, site) {
                            if refused < 20 {
                                assert_eq!(apply(rule, d, c, site), Err(ApplyError::GuardViolated(rule.id.clone())));
                            }
                            refused += 1;
                            continue;
                        }
                        let Ok((nd, nc, moves)) = apply(rule, d, c, site) else { continue };
                        assert!(!moves.is_empty());
                        crate::oracle::check_json(&nd.to_json(), &nc).unwrap();
                        let banned = rule.target.removed(m);
                        assert!(nc.assignment.values().all(|x| !banned.contains(x)), "{}", rule.id);
                        *applied.entry(rule.id.clone()).or_insert(0) += 1;
                    }
                }
            }
        }
        assert!(refused > 0);
        assert!(applied.len() >= 2, "{applied:?}");
    }
}
