//! Color removal by Reidemeister rewriting.
//!
//! For each forbidden color `t` (in the order `2k`, `2k-1`, `k`) the engine
//! repeatedly picks an occurrence of `t` and rewrites the diagram near it.
//! Occurrences are counted by a [`Measure`] which every step must strictly
//! decrease; colors already removed may never reappear, not even between the
//! moves of a single step.

pub(crate) mod macros;
pub(crate) mod search;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{first_nontrivial, Coloring, ColoringError, EdgeColoring};
use crate::diagram::{apply_move, CrossingId, Diagram, DiagramJson, EdgeId, Move, MoveError};
use crate::modular::{Color, Modulus, ModulusError};

pub use search::{MacroKind, SearchLimits, Site};

pub const TRACE_SCHEMA: &str = "trace-v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EliminationError {
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error("coloring is trivial; a non-trivial coloring is required")]
    TrivialColoring,
    #[error("input coloring uses an already removed color {0}")]
    RemovedColorPresent(Color),
    #[error("{0} is not one of the colors 2k, 2k-1, k")]
    NotForbidden(Color),
    #[error("no rewrite found for color {target} at measure {measure}: {detail}")]
    SearchExhausted { target: Color, measure: Measure, detail: String },
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Move(#[from] MoveError),
}

/// The colors `[2k, 2k-1, k]` in removal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenSet {
    pub colors: [Color; 3],
}

impl ForbiddenSet {
    pub fn new(m: Modulus) -> Self {
        ForbiddenSet { colors: m.forbidden() }
    }

    pub fn contains(&self, c: Color) -> bool {
        self.colors.contains(&c)
    }

    /// Colors that come before `target` in removal order.
    pub fn before(&self, target: Color) -> Vec<Color> {
        self.colors.iter().take_while(|&&c| c != target).copied().collect()
    }
}

/// Occurrences of a color: monochromatic crossings, then over-arcs at
/// non-monochromatic crossings, then under-arc slots at non-monochromatic
/// crossings. Compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Measure {
    pub mono: usize,
    pub over: usize,
    pub under: usize,
}

impl Measure {
    pub fn is_zero(&self) -> bool {
        *self == Measure::default()
    }

    pub fn phase(&self) -> Option<Phase> {
        if self.mono > 0 {
            Some(Phase::Mono)
        } else if self.over > 0 {
            Some(Phase::Over)
        } else if self.under > 0 {
            Some(Phase::Under)
        } else {
            None
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.mono, self.over, self.under)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Mono,
    Over,
    Under,
}

pub fn measure(d: &Diagram, c: &EdgeColoring, target: Color) -> Measure {
    let mut m = Measure::default();
    for x in d.crossings() {
        let col = |p: u8| c.edges[&x.ports[p as usize]];
        let o = col(x.over[0]);
        let [u1, u2] = x.under_ports().map(col);
        if o == target && u1 == target && u2 == target {
            m.mono += 1;
            continue;
        }
        if o == target {
            m.over += 1;
        }
        m.under += usize::from(u1 == target) + usize::from(u2 == target);
    }
    m
}

/// One rewrite step in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule_id: String,
    pub binding: BTreeMap<String, u32>,
    pub moves: Vec<Move>,
    pub diagram_hash_before: String,
    pub diagram_hash_after: String,
    pub coloring_after: Coloring,
    pub measure_after: Measure,
}

/// The steps removing one color.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub target: Color,
    pub already_removed: Vec<Color>,
    pub measure_before: Measure,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statistics {
    pub crossings_in: usize,
    pub crossings_out: usize,
    pub crossings_added: i64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub schema: String,
    pub modulus: Modulus,
    pub forbidden: Vec<Color>,
    pub input_diagram: DiagramJson,
    pub input_coloring: Coloring,
    pub output_diagram: DiagramJson,
    pub output_coloring: Coloring,
    pub traces: Vec<Trace>,
    pub final_palette: Vec<Color>,
    pub statistics: Statistics,
}

/// A diagram together with an edge coloring, the engine's working state.
#[derive(Debug, Clone)]
pub struct State {
    pub d: Diagram,
    pub c: EdgeColoring,
}

impl State {
    pub fn from_coloring(d: &Diagram, c: &Coloring, m: Modulus) -> Result<Self, ColoringError> {
        let arcs = d.derive_arcs();
        Ok(State { d: d.clone(), c: EdgeColoring::from_arcs(d, &arcs, c, m)? })
    }

    pub fn arc_coloring(&self) -> Coloring {
        self.c.to_arcs(&self.d.derive_arcs())
    }

    /// Apply one move, refusing any color in `banned`.
    pub fn step(&self, mv: &Move, banned: &[Color]) -> Result<State, StepError> {
        let applied = apply_move(&self.d, mv).map_err(StepError::Move)?;
        let c = self.c.transport(&applied).map_err(StepError::Coloring)?;
        if let Some(bad) = c.edges.values().chain(&c.loops).find(|x| banned.contains(x)) {
            return Err(StepError::Banned(*bad));
        }
        Ok(State { d: applied.diagram, c })
    }

    pub fn color_of(&self, e: EdgeId) -> Color {
        self.c.edges[&e]
    }

    pub fn crossing_colors(&self, x: CrossingId) -> (Color, [Color; 2]) {
        let cr = self.d.crossing(x).expect("crossing exists");
        let col = |p: u8| self.c.edges[&cr.ports[p as usize]];
        (col(cr.over[0]), cr.under_ports().map(col))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepError {
    Move(MoveError),
    Coloring(ColoringError),
    Banned(Color),
}

/// Options for an elimination run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub limits: SearchLimits,
}

/// Remove `target` from the coloring `c` of `d`.
pub fn eliminate_color(
    d: &Diagram,
    c: &Coloring,
    target: Color,
    already_removed: &[Color],
    m: Modulus,
) -> Result<(Diagram, Coloring, Trace), EliminationError> {
    eliminate_color_with(d, c, target, already_removed, m, Options::default())
}

pub fn eliminate_color_with(
    d: &Diagram,
    c: &Coloring,
    target: Color,
    already_removed: &[Color],
    m: Modulus,
    opts: Options,
) -> Result<(Diagram, Coloring, Trace), EliminationError> {
    let m = Modulus::for_elimination(m.p())?;
    if !ForbiddenSet::new(m).contains(target) {
        return Err(EliminationError::NotForbidden(target));
    }
    if c.is_trivial() {
        return Err(EliminationError::TrivialColoring);
    }
    let mut state = State::from_coloring(d, c, m)?;
    if let Some(bad) = state.c.palette().into_iter().find(|x| already_removed.contains(x)) {
        return Err(EliminationError::RemovedColorPresent(bad));
    }
    let start = measure(&state.d, &state.c, target);
    let mut trace = Trace {
        target,
        already_removed: already_removed.to_vec(),
        measure_before: start,
        steps: Vec::new(),
    };
    let bound = (d.crossing_count().max(1) * m.p() as usize).max(opts.limits.min_steps);
    let mut current = start;
    while !current.is_zero() {
        if trace.steps.len() >= bound {
            return Err(EliminationError::SearchExhausted {
                target,
                measure: current,
                detail: format!("step bound {bound} reached"),
            });
        }
        let found = search::find_step(&state, target, already_removed, current, &opts.limits)
            .ok_or_else(|| EliminationError::SearchExhausted {
                target,
                measure: current,
                detail: "no measure-decreasing rewrite within the search limits".into(),
            })?;
        let before = state.d.hash_hex();
        state = found.state;
        current = measure(&state.d, &state.c, target);
        debug_assert!(current < found.measure_before);
        trace.steps.push(TraceStep {
            rule_id: found.rule_id,
            binding: found.binding,
            moves: found.moves,
            diagram_hash_before: before,
            diagram_hash_after: state.d.hash_hex(),
            coloring_after: state.arc_coloring(),
            measure_after: current,
        });
    }
    let out = state.arc_coloring();
    if out.is_trivial() {
        return Err(EliminationError::TrivialColoring);
    }
    Ok((state.d, out, trace))
}

/// Remove `2k`, then `2k-1`, then `k`.
pub fn eliminate_all(d: &Diagram, c: &Coloring) -> Result<EliminationReport, EliminationError> {
    eliminate_all_with(d, c, Options::default())
}

pub fn eliminate_all_with(
    d: &Diagram,
    c: &Coloring,
    opts: Options,
) -> Result<EliminationReport, EliminationError> {
    let m = Modulus::for_elimination(c.p)?;
    if c.is_trivial() {
        return Err(EliminationError::TrivialColoring);
    }
    let forbidden = ForbiddenSet::new(m);
    let mut cur_d = d.clone();
    let mut cur_c = c.clone();
    let mut traces = Vec::new();
    for (i, &target) in forbidden.colors.iter().enumerate() {
        let removed = &forbidden.colors[..i];
        let (nd, nc, trace) = eliminate_color_with(&cur_d, &cur_c, target, removed, m, opts)?;
        cur_d = nd;
        cur_c = nc;
        traces.push(trace);
    }
    let steps = traces.iter().map(|t| t.steps.len()).sum();
    let final_palette: BTreeSet<Color> = cur_c.palette();
    Ok(EliminationReport {
        schema: TRACE_SCHEMA.to_string(),
        modulus: m,
        forbidden: forbidden.colors.to_vec(),
        input_diagram: d.to_json(),
        input_coloring: c.clone(),
        output_diagram: cur_d.to_json(),
        output_coloring: cur_c,
        traces,
        final_palette: final_palette.into_iter().collect(),
        statistics: Statistics {
            crossings_in: d.crossing_count(),
            crossings_out: cur_d.crossing_count(),
            crossings_added: cur_d.crossing_count() as i64 - d.crossing_count() as i64,
            steps,
        },
    })
}

/// The starting coloring used when none is given: the first non-trivial
/// basis combination.
pub fn default_coloring(d: &Diagram, m: Modulus) -> Option<Coloring> {
    first_nontrivial(d, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::lookup;

    fn run(name: &str, p: u32) -> EliminationReport {
        let d = lookup(name).unwrap().diagram();
        let m = Modulus::new(p).unwrap();
        let c = default_coloring(&d, m).unwrap();
        match eliminate_all(&d, &c) {
            Ok(r) => {
                let od = Diagram::from_raw(&r.output_diagram).unwrap();
                let st = State::from_coloring(&od, &r.output_coloring, m).unwrap();
                st.c.check(&od).unwrap();
                r
            }
            Err(e) => panic!("{name} p={p}: {e}"),
        }
    }

    #[test]
    fn torus_11() {
        let r = run("T(2,11)", 11);
        assert!(r.final_palette.iter().all(|c| !r.forbidden.contains(c)));
    }

    #[test]
    fn torus_13() {
        let r = run("T(2,13)", 13);
        assert!(r.final_palette.iter().all(|c| !r.forbidden.contains(c)));
    }

    #[test]
    fn six_crossing() {
        run("6_2", 11);
        run("6_3", 13);
    }
}
