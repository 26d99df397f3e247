//! Step selection: which occurrence to attack and with which rewrite.
//!
//! Sites are tried in id order. For each site the direct rewrites (one
//! macro) are tried first, then two-macro sequences whose first macro
//! prepares the neighborhood. The first candidate that strictly lowers the
//! measure wins; the catalog then names the step.

use std::collections::BTreeMap;

use crate::diagram::{CrossingId, EdgeId, Endpoint};
use crate::modular::Color;
use crate::rules::classify;

use super::macros::{self, MacroRun};
use super::{measure, Measure, Phase, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Macros per step: 1 is direct rewrites only; each extra level adds
    /// one preparatory macro.
    pub depth: usize,
    /// Lower bound on the per-color step budget.
    pub min_steps: usize,
    /// Preparatory rewrites tried per site at depth 2.
    pub max_prep: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { depth: 3, min_steps: 64, max_prep: 96 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Site {
    Crossing(CrossingId),
    Edge(EdgeId),
}

/// Faces crossed at most by a far finger.
const FAR: usize = 3;

pub(super) struct Found {
    pub state: State,
    pub moves: Vec<crate::diagram::Move>,
    pub rule_id: String,
    pub binding: BTreeMap<String, u32>,
    pub measure_before: Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroKind {
    Cover,
    UnderSlide,
    Finger,
}

struct Candidate {
    run: MacroRun,
    kind: MacroKind,
    binding: BTreeMap<String, u32>,
}

pub fn sites(st: &State, target: Color, phase: Phase) -> Vec<Site> {
    let mut out = Vec::new();
    match phase {
        Phase::Mono | Phase::Over => {
            for x in st.d.crossings() {
                let (o, [u1, u2]) = st.crossing_colors(x.id);
                let mono = o == target && u1 == target && u2 == target;
                if (phase == Phase::Mono && mono) || (phase == Phase::Over && !mono && o == target) {
                    out.push(Site::Crossing(x.id));
                }
            }
        }
        Phase::Under => {
            for e in st.d.edge_ids() {
                if st.color_of(e) != target {
                    continue;
                }
                let [p, q] = st.d.endpoints(e).unwrap();
                if !st.d.is_over(p) && !st.d.is_over(q) {
                    out.push(Site::Edge(e));
                }
            }
        }
    }
    out
}

fn covers(st: &State, x: CrossingId, avoid: Color, banned: &[Color]) -> Vec<Candidate> {
    let mut out = Vec::new();
    let (o, [u1, u2]) = st.crossing_colors(x);
    for (corner, finger, a) in macros::cover_fingers(st, x, avoid) {
        if let Some(run) = macros::cover(st, x, corner, finger, banned) {
            let binding = BTreeMap::from([
                ("a".to_string(), a.0),
                ("o".to_string(), o.0),
                ("u1".to_string(), u1.0),
                ("u2".to_string(), u2.0),
            ]);
            out.push(Candidate { run, kind: MacroKind::Cover, binding });
        }
    }
    out
}

/// Over colors at the two ends of an under-edge, ordered as in `under_slide`.
pub(crate) fn slide_binding(st: &State, t: EdgeId, side: usize, first_on_top: bool) -> BTreeMap<String, u32> {
    let ht = st.d.half_edges(t)[side];
    let x2 = ht.to.crossing;
    let x1 = st.d.tail(ht).crossing;
    let (a1, _) = st.crossing_colors(x1);
    let (b2, _) = st.crossing_colors(x2);
    let (a, b) = if first_on_top { (a1, b2) } else { (b2, a1) };
    BTreeMap::from([("a".to_string(), a.0), ("b".to_string(), b.0)])
}

fn slides(st: &State, t: EdgeId, banned: &[Color]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for side in 0..2 {
        for top in [true, false] {
            if let Some(run) = macros::under_slide(st, t, side, top, banned) {
                let binding = slide_binding(st, t, side, top);
                out.push(Candidate { run, kind: MacroKind::UnderSlide, binding });
            }
        }
    }
    out
}

fn direct(st: &State, site: Site, target: Color, banned: &[Color]) -> Vec<Candidate> {
    match site {
        Site::Crossing(x) => covers(st, x, target, banned),
        Site::Edge(e) if st.d.has_edge(e) => slides(st, e, banned),
        Site::Edge(_) => Vec::new(),
    }
}

fn site_crossings(st: &State, site: Site) -> Vec<CrossingId> {
    match site {
        Site::Crossing(x) => vec![x],
        Site::Edge(e) => st.d.endpoints(e).map(|eps| eps.map(|ep| ep.crossing).to_vec()).unwrap_or_default(),
    }
}

/// Preparatory rewrites around `centre`: covers of those crossings and their
/// neighbors (any finger color), under-slides of nearby under-under edges of
/// any color, and single R2 pushes inside the faces at `centre`.
fn preparations(st: &State, centre: &[CrossingId], banned: &[Color], limit: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut around: Vec<CrossingId> = centre.iter().copied().filter(|x| st.d.crossing(*x).is_some()).collect();
    let inner = around.clone();
    for &x in &inner {
        for (port, &e) in st.d.crossing(x).unwrap().ports.iter().enumerate() {
            let y = st.d.other_end(e, Endpoint::new(x, port as u8)).crossing;
            if !around.contains(&y) {
                around.push(y);
            }
        }
    }
    let full = |out: &Vec<Candidate>| out.len() >= limit;
    for &x in &around {
        for c in covers(st, x, Color(u32::MAX), banned) {
            out.push(c);
            if full(&out) {
                return out;
            }
        }
    }
    // Fingers from up to `FAR` faces away, only in colors that keep the
    // covered crossing clear of banned colors.
    for &x in &inner {
        let (o, [u1, u2]) = st.crossing_colors(x);
        let m = st.c.modulus;
        let clean = |c: Color| [o, u1, u2].iter().all(|&y| !banned.contains(&m.reflect(c, y)));
        for (corner, s, path, col) in macros::far_fingers(st, x, FAR, &[o, u1, u2]) {
            if !clean(col) {
                continue;
            }
            if let Some(run) = macros::far_cover(st, x, corner, s, &path, banned) {
                let binding = BTreeMap::from([
                    ("a".to_string(), col.0),
                    ("o".to_string(), o.0),
                    ("u1".to_string(), u1.0),
                    ("u2".to_string(), u2.0),
                    ("reach".to_string(), path.len() as u32),
                ]);
                out.push(Candidate { run, kind: MacroKind::Cover, binding });
                if full(&out) {
                    return out;
                }
            }
        }
    }
    let mut slid = Vec::new();
    for &x in &around {
        for &e in &st.d.crossing(x).unwrap().ports {
            let [p, q] = st.d.endpoints(e).unwrap();
            if st.d.is_over(p) || st.d.is_over(q) || slid.contains(&e) {
                continue;
            }
            slid.push(e);
            for c in slides(st, e, banned) {
                out.push(c);
                if full(&out) {
                    return out;
                }
            }
        }
    }
    let mut pushed = Vec::new();
    for &x in &inner {
        for &e in &st.d.crossing(x).unwrap().ports {
            if pushed.contains(&e) {
                continue;
            }
            pushed.push(e);
            for h in st.d.half_edges(e) {
                for s in st.d.face(h).iter().skip(1) {
                    if s.edge == e {
                        continue;
                    }
                    for over in [true, false] {
                        if let Some(run) = macros::finger(st, *s, h, over, banned) {
                            let binding = BTreeMap::from([
                                ("f".to_string(), st.color_of(s.edge).0),
                                ("c".to_string(), st.color_of(e).0),
                            ]);
                            out.push(Candidate { run, kind: MacroKind::Finger, binding });
                            if full(&out) {
                                return out;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn finish(
    st: &State,
    target: Color,
    current: Measure,
    phase: Phase,
    chain: &[&Candidate],
) -> Found {
    let last = chain.last().unwrap();
    let moves = chain.iter().flat_map(|c| c.run.moves.clone()).collect();
    let kinds: Vec<MacroKind> = chain.iter().map(|c| c.kind).collect();
    let mut binding = last.binding.clone();
    binding.insert("t".to_string(), target.0);
    for (i, prep) in chain[..chain.len() - 1].iter().enumerate() {
        for (k, v) in &prep.binding {
            binding.insert(format!("prep{i}.{k}"), *v);
        }
    }
    let rule_id = classify(st.c.modulus, target, phase, &kinds, &binding);
    Found { state: last.run.state.clone(), moves, rule_id, binding, measure_before: current }
}

struct Ctx<'a> {
    root: &'a State,
    target: Color,
    banned: &'a [Color],
    current: Measure,
    phase: Phase,
    limits: &'a SearchLimits,
    seen: std::collections::HashSet<u64>,
}

impl Ctx<'_> {
    fn better(&self, s: &State) -> bool {
        measure(&s.d, &s.c, self.target) < self.current
    }

    /// Prepared states: try direct rewrites at sites touching `near`, then
    /// recurse with one more preparation.
    fn explore(&mut self, st: &State, near: &[CrossingId], chain: &mut Vec<Candidate>, left: usize) -> Option<Found> {
        let ph = measure(&st.d, &st.c, self.target).phase()?;
        for s2 in sites(st, self.target, ph) {
            if !site_crossings(st, s2).iter().any(|x| near.contains(x)) {
                continue;
            }
            for c in direct(st, s2, self.target, self.banned) {
                if self.better(&c.run.state) {
                    let refs: Vec<&Candidate> = chain.iter().chain(std::iter::once(&c)).collect();
                    return Some(finish(self.root, self.target, self.current, self.phase, &refs));
                }
            }
        }
        if left == 0 {
            return None;
        }
        let width = if left > 1 { self.limits.max_prep } else { self.limits.max_prep / 3 };
        for prep in preparations(st, near, self.banned, width) {
            let key = prep.run.state.d.stable_hash() ^ colors_key(&prep.run.state);
            if !self.seen.insert(key) {
                continue;
            }
            let mut near2 = near.to_vec();
            near2.extend(prep.run.state.d.crossings().map(|c| c.id).filter(|c| c.0 >= st.d.next_crossing_id()));
            let next = prep.run.state.clone();
            chain.push(prep);
            if let Some(f) = self.explore(&next, &near2, chain, left - 1) {
                return Some(f);
            }
            chain.pop();
        }
        None
    }
}

fn colors_key(s: &State) -> u64 {
    let mut h = fnv::FnvHasher::default();
    use std::hash::{Hash, Hasher};
    for (e, c) in &s.c.edges {
        (e.0, c.0).hash(&mut h);
    }
    h.finish()
}

pub(super) fn find_step(
    st: &State,
    target: Color,
    banned: &[Color],
    current: Measure,
    limits: &SearchLimits,
) -> Option<Found> {
    let phase = current.phase()?;
    let todo = sites(st, target, phase);
    for &site in &todo {
        for c in direct(st, site, target, banned) {
            if measure(&c.run.state.d, &c.run.state.c, target) < current {
                return Some(finish(st, target, current, phase, &[&c]));
            }
        }
    }
    let mut ctx = Ctx {
        root: st,
        target,
        banned,
        current,
        phase,
        limits,
        seen: Default::default(),
    };
    for depth in 1..limits.depth {
        for &site in &todo {
            ctx.seen.clear();
            let near = site_crossings(st, site);
            if let Some(f) = ctx.explore(st, &near, &mut Vec::new(), depth) {
                return Some(f);
            }
        }
    }
    None
}
