//! Exhaustive check of every rule at one modulus: for every binding a rule
//! keeps (after its children take theirs), new arcs avoid the forbidden
//! colors and new crossings satisfy the Fox relation.

use std::collections::HashMap;

use serde::Serialize;

use super::{catalog, domain_memo, lookup, redirect, AffineExpr, Binding, RewriteRule, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: String,
    pub a: i64,
    pub b: i64,
    pub l: Option<i64>,
    pub label: String,
    pub value: Option<i64>,
    pub kind: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SoundnessReport {
    pub p: u32,
    pub rules: usize,
    pub bindings: usize,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl SoundnessReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_rule(rule: &RewriteRule, p: u32, bindings: &[Binding], rep: &mut SoundnessReport) {
    let bad = rule.target.forbidden(p);
    let pp = p as i64;
    let mut noted = Vec::new();
    for &bd in bindings {
        if redirect(rule, p, bd).is_some() {
            continue;
        }
        rep.bindings += 1;
        let env = bd.env(p);
        let mut fail = |label: String, value: Option<i64>, kind: &str| {
            rep.violations.push(Violation { rule: rule.id.clone(), a: bd.a, b: bd.b, l: bd.l, label, value, kind: kind.into() });
        };
        for e in rule.labels_with(Role::Replacement) {
            match e.eval(env) {
                None => fail(e.to_string(), None, "unevaluable"),
                Some(v) if bad.contains(&v) => fail(e.to_string(), Some(v), "forbidden color"),
                _ => {}
            }
        }
        for [o, u1, u2] in &rule.crossings {
            let d = *u1 + *u2 - *o * 2;
            match d.eval(env) {
                Some(0) => {}
                v => fail(format!("[{o}; {u1}, {u2}]"), v, "fox relation"),
            }
        }
        for e in rule.labels_with(Role::Avoided) {
            let Some(v) = e.eval(env) else {
                fail(e.to_string(), None, "unevaluable");
                continue;
            };
            if !bad.contains(&v) {
                fail(e.to_string(), Some(v), "avoided label is not forbidden");
            }
        }
        for e in rule.labels_with(Role::Context) {
            if let Some(v) = e.eval(env) {
                if bad.contains(&v) && !noted.contains(&e.to_string()) {
                    noted.push(e.to_string());
                    let l = bd.l.map(|l| format!(", l={l}")).unwrap_or_default();
                    rep.notes.push(format!(
                        "{}: context label {e} = {v} (p-{}) at a={}, b={}{l}",
                        rule.id,
                        pp - v,
                        bd.a,
                        bd.b
                    ));
                }
            }
        }
    }
}

/// An avoided label should echo a forbidden value some parent arc would
/// have taken; report the ones that echo nothing.
fn check_avoided(rule: &RewriteRule, p: u32, memo: &mut HashMap<String, Vec<Binding>>, rep: &mut SoundnessReport) {
    let avoided: Vec<&AffineExpr> = rule.labels_with(Role::Avoided).collect();
    if avoided.is_empty() {
        return;
    }
    let mut shown = vec![false; avoided.len()];
    let mut reached = false;
    for inst in &rule.instances {
        let Some(parent) = inst.parent.as_deref().and_then(lookup) else {
            shown.iter_mut().for_each(|s| *s = true);
            continue;
        };
        for bd in domain_memo(parent, p, memo) {
            let Some(bd) = inst.admits(p, bd) else { continue };
            reached = true;
            let env = bd.env(p);
            for (i, e) in avoided.iter().enumerate() {
                let v = e.eval(env);
                if v.is_some() && parent.labels_with(Role::Replacement).any(|r| r.eval(env) == v) {
                    shown[i] = true;
                }
            }
        }
    }
    if !reached {
        return;
    }
    for (e, ok) in avoided.iter().zip(shown) {
        if !ok {
            rep.notes.push(format!("{}: avoided label {e} matches no new arc of the parent case at p={p}", rule.id));
        }
    }
}

/// Check every catalog rule at prime `p`.
pub fn soundness(p: u32) -> SoundnessReport {
    let mut rep = SoundnessReport { p, ..Default::default() };
    let mut memo = HashMap::new();
    for rule in catalog() {
        let bindings = domain_memo(rule, p, &mut memo);
        rep.rules += 1;
        check_rule(rule, p, &bindings, &mut rep);
        check_avoided(rule, p, &mut memo, &mut rep);
        for e in rule.labels_with(Role::Replacement) {
            let in_triple = rule.crossings.iter().any(|t| t.contains(e));
            if !in_triple && p == 11 {
                rep.notes.push(format!("{}: replacement {e} is on no inferred crossing", rule.id));
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sound_at_eleven() {
        let rep = soundness(11);
        assert!(rep.ok(), "{:#?}", &rep.violations[..rep.violations.len().min(10)]);
        assert!(rep.bindings > 0);
    }
}
