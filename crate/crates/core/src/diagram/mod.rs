//! Combinatorial link diagrams.
//!
//! A diagram is a 4-valent map: every crossing has four port slots in
//! counterclockwise order, two opposite ports carry the over-strand and the
//! other two the under-strand, and every port holds exactly one edge. Each
//! edge joins two `(crossing, port)` endpoints. Zero-crossing components are
//! counted separately in `free_loops`.
//!
//! Diagrams are values: the Reidemeister moves in [`moves`] are the only way
//! to derive a new diagram from an existing one, and they always return a
//! fresh value.

mod iso;
pub mod moves;
pub mod pd;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use iso::is_isomorphic;
pub use moves::{apply_move, enumerate_moves, Move, MoveError};
pub use pd::{parse_pd, PdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CrossingId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub u32);

impl fmt::Display for CrossingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arc{}", self.0)
    }
}

/// One port slot of one crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub crossing: CrossingId,
    pub port: u8,
}

impl Endpoint {
    pub fn new(crossing: CrossingId, port: u8) -> Self {
        Endpoint { crossing, port }
    }

    /// The port on the other side of the crossing along the same strand.
    pub fn across(self) -> Endpoint {
        Endpoint { crossing: self.crossing, port: (self.port + 2) % 4 }
    }

    /// The next port clockwise, which is where a face traversal exits.
    pub fn turn(self) -> Endpoint {
        Endpoint { crossing: self.crossing, port: (self.port + 3) % 4 }
    }
}

/// An edge together with the endpoint it runs into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfEdge {
    pub edge: EdgeId,
    pub to: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub id: CrossingId,
    pub ports: [EdgeId; 4],
    /// The two (opposite) ports carrying the over-strand.
    pub over: [u8; 2],
}

impl Crossing {
    pub fn is_over(&self, port: u8) -> bool {
        port % 2 == self.over[0] % 2
    }

    pub fn under_ports(&self) -> [u8; 2] {
        let u = (self.over[0] + 1) % 2;
        [u, u + 2]
    }
}

/// Serialized form of a diagram: `{crossings:[{id, ports, over}], free_loops}`.
///
/// This form can hold malformed data; [`validate_raw`] reports what is wrong
/// with it and [`Diagram::from_raw`] refuses it unless it is well formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub crossings: Vec<Crossing>,
    #[serde(default)]
    pub free_loops: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    DuplicateCrossing { crossing: CrossingId },
    BadOverPorts { crossing: CrossingId },
    /// An edge label used at a number of ports other than two.
    UnpairedEdge { edge: EdgeId, uses: usize },
    /// Warning only: the diagram falls apart into several pieces.
    Disconnected { pieces: usize },
}

impl Defect {
    pub fn is_warning(&self) -> bool {
        matches!(self, Defect::Disconnected { .. })
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::DuplicateCrossing { crossing } => write!(f, "crossing {crossing} appears twice"),
            Defect::BadOverPorts { crossing } => {
                write!(f, "crossing {crossing} does not have two opposite over ports")
            }
            Defect::UnpairedEdge { edge, uses } => {
                write!(f, "edge {edge} occupies {uses} ports (expected 2)")
            }
            Defect::Disconnected { pieces } => {
                write!(f, "disconnected diagram ({pieces} pieces); the link may be split")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("invalid diagram: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Defect>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    crossings: BTreeMap<CrossingId, Crossing>,
    /// Endpoints of every edge, kept sorted.
    edges: BTreeMap<EdgeId, [Endpoint; 2]>,
    free_loops: u32,
    next_crossing: u32,
    next_edge: u32,
}

/// A maximal strand: runs from an under-crossing to an under-crossing,
/// passing over everything in between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: ArcId,
    pub edges: Vec<EdgeId>,
    pub is_closed: bool,
}

/// The arcs of a diagram with a reverse lookup from edges.
#[derive(Debug, Clone)]
pub struct Arcs {
    arcs: Vec<Arc>,
    by_edge: BTreeMap<EdgeId, ArcId>,
}

impl Arcs {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.iter()
    }

    pub fn get(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0 as usize]
    }

    pub fn of_edge(&self, e: EdgeId) -> ArcId {
        self.by_edge[&e]
    }

    pub fn into_vec(self) -> Vec<Arc> {
        self.arcs
    }
}

/// The arcs incident to one crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingArcs {
    pub over: ArcId,
    pub under: [ArcId; 2],
}

pub fn validate_raw(raw: &DiagramJson) -> Vec<Defect> {
    let mut defects = Vec::new();
    let mut seen = BTreeSet::new();
    let mut uses: BTreeMap<EdgeId, usize> = BTreeMap::new();
    for c in &raw.crossings {
        if !seen.insert(c.id) {
            defects.push(Defect::DuplicateCrossing { crossing: c.id });
        }
        let [a, b] = c.over;
        if a > 3 || b > 3 || (a + 2) % 4 != b {
            defects.push(Defect::BadOverPorts { crossing: c.id });
        }
        for e in c.ports {
            *uses.entry(e).or_default() += 1;
        }
    }
    for (edge, n) in uses {
        if n != 2 {
            defects.push(Defect::UnpairedEdge { edge, uses: n });
        }
    }
    if defects.is_empty() {
        // Only meaningful once the pairing is consistent.
        let d = Diagram::build(raw);
        let pieces = d.pieces();
        if pieces > 1 {
            defects.push(Defect::Disconnected { pieces });
        }
    }
    defects
}

/// Structural check of a diagram value; only warnings can come back since
/// a `Diagram` is well formed by construction.
pub fn validate(d: &Diagram) -> Vec<Defect> {
    validate_raw(&d.to_json())
}

impl Diagram {
    pub fn empty_loops(free_loops: u32) -> Self {
        Diagram {
            crossings: BTreeMap::new(),
            edges: BTreeMap::new(),
            free_loops,
            next_crossing: 0,
            next_edge: 0,
        }
    }

    pub fn from_raw(raw: &DiagramJson) -> Result<Self, DiagramError> {
        let defects: Vec<Defect> =
            validate_raw(raw).into_iter().filter(|d| !d.is_warning()).collect();
        if !defects.is_empty() {
            return Err(DiagramError::Invalid(defects));
        }
        Ok(Self::build(raw))
    }

    fn build(raw: &DiagramJson) -> Self {
        let mut crossings = BTreeMap::new();
        let mut edges: BTreeMap<EdgeId, Vec<Endpoint>> = BTreeMap::new();
        for c in &raw.crossings {
            let mut c = c.clone();
            c.over.sort();
            for (port, e) in c.ports.iter().enumerate() {
                edges.entry(*e).or_default().push(Endpoint::new(c.id, port as u8));
            }
            crossings.insert(c.id, c);
        }
        let edges: BTreeMap<EdgeId, [Endpoint; 2]> = edges
            .into_iter()
            .map(|(e, mut v)| {
                v.sort();
                (e, [v[0], v[1]])
            })
            .collect();
        let next_crossing = crossings.keys().next_back().map_or(0, |c: &CrossingId| c.0 + 1);
        let next_edge = edges.keys().next_back().map_or(0, |e: &EdgeId| e.0 + 1);
        Diagram { crossings, edges, free_loops: raw.free_loops, next_crossing, next_edge }
    }

    pub fn to_json(&self) -> DiagramJson {
        DiagramJson {
            crossings: self.crossings.values().cloned().collect(),
            free_loops: self.free_loops,
        }
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn free_loops(&self) -> u32 {
        self.free_loops
    }

    /// The id the next created crossing will get.
    pub fn next_crossing_id(&self) -> u32 {
        self.next_crossing
    }

    pub fn crossings(&self) -> impl Iterator<Item = &Crossing> {
        self.crossings.values()
    }

    pub fn crossing(&self, id: CrossingId) -> Option<&Crossing> {
        self.crossings.get(&id)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn endpoints(&self, e: EdgeId) -> Option<[Endpoint; 2]> {
        self.edges.get(&e).copied()
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn edge_at(&self, ep: Endpoint) -> EdgeId {
        self.crossings[&ep.crossing].ports[ep.port as usize]
    }

    pub fn is_over(&self, ep: Endpoint) -> bool {
        self.crossings[&ep.crossing].is_over(ep.port)
    }

    /// The endpoint of `e` that is not `from`.
    pub fn other_end(&self, e: EdgeId, from: Endpoint) -> Endpoint {
        let [a, b] = self.edges[&e];
        if a == from {
            b
        } else {
            debug_assert_eq!(b, from);
            a
        }
    }

    pub fn half_edges(&self, e: EdgeId) -> [HalfEdge; 2] {
        let [a, b] = self.edges[&e];
        [HalfEdge { edge: e, to: a }, HalfEdge { edge: e, to: b }]
    }

    pub fn tail(&self, h: HalfEdge) -> Endpoint {
        self.other_end(h.edge, h.to)
    }

    pub fn reverse(&self, h: HalfEdge) -> HalfEdge {
        HalfEdge { edge: h.edge, to: self.tail(h) }
    }

    pub fn contains_half_edge(&self, h: HalfEdge) -> bool {
        self.edges.get(&h.edge).is_some_and(|eps| eps.contains(&h.to))
    }

    /// The half-edge following `h` around the face on its left.
    pub fn next_in_face(&self, h: HalfEdge) -> HalfEdge {
        let out = h.to.turn();
        let e = self.edge_at(out);
        HalfEdge { edge: e, to: self.other_end(e, out) }
    }

    /// The boundary cycle of the face on the left of `h`, starting at `h`.
    pub fn face(&self, h: HalfEdge) -> Vec<HalfEdge> {
        let mut cycle = vec![h];
        let mut cur = self.next_in_face(h);
        while cur != h {
            cycle.push(cur);
            cur = self.next_in_face(cur);
        }
        cycle
    }

    /// Every face, each listed once and rotated to start at its least half-edge.
    pub fn faces(&self) -> Vec<Vec<HalfEdge>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in self.edges.keys() {
            for h in self.half_edges(*e) {
                if seen.contains(&h) {
                    continue;
                }
                let f = self.face(h);
                seen.extend(f.iter().copied());
                out.push(f);
            }
        }
        out
    }

    pub fn derive_arcs(&self) -> Arcs {
        let mut found: Vec<Vec<EdgeId>> = Vec::new();
        let mut closed_flags = Vec::new();
        let mut visited: BTreeSet<EdgeId> = BTreeSet::new();
        for c in self.crossings.values() {
            for port in c.under_ports() {
                let start = Endpoint::new(c.id, port);
                let first = self.edge_at(start);
                if visited.contains(&first) {
                    continue;
                }
                let mut edges = vec![first];
                let mut at = self.other_end(first, start);
                while self.is_over(at) {
                    let out = at.across();
                    let e = self.edge_at(out);
                    edges.push(e);
                    at = self.other_end(e, out);
                }
                visited.extend(edges.iter().copied());
                found.push(edges);
                closed_flags.push(false);
            }
        }
        // Components that never pass under anything.
        for (&e, &[a, _]) in &self.edges {
            if visited.contains(&e) {
                continue;
            }
            let mut edges = vec![e];
            let mut at = self.other_end(e, a);
            loop {
                let out = at.across();
                let next = self.edge_at(out);
                if next == e {
                    break;
                }
                edges.push(next);
                at = self.other_end(next, out);
            }
            visited.extend(edges.iter().copied());
            found.push(edges);
            closed_flags.push(true);
        }
        let mut order: Vec<usize> = (0..found.len()).collect();
        order.sort_by_key(|&i| found[i].iter().min().copied());
        let mut arcs = Vec::with_capacity(found.len() + self.free_loops as usize);
        let mut by_edge = BTreeMap::new();
        for (idx, i) in order.into_iter().enumerate() {
            let id = ArcId(idx as u32);
            for e in &found[i] {
                by_edge.insert(*e, id);
            }
            arcs.push(Arc { id, edges: std::mem::take(&mut found[i]), is_closed: closed_flags[i] });
        }
        for _ in 0..self.free_loops {
            let id = ArcId(arcs.len() as u32);
            arcs.push(Arc { id, edges: Vec::new(), is_closed: true });
        }
        Arcs { arcs, by_edge }
    }

    pub fn crossing_arcs(&self, arcs: &Arcs, id: CrossingId) -> CrossingArcs {
        let c = &self.crossings[&id];
        let [u0, u1] = c.under_ports();
        CrossingArcs {
            over: arcs.of_edge(c.ports[c.over[0] as usize]),
            under: [arcs.of_edge(c.ports[u0 as usize]), arcs.of_edge(c.ports[u1 as usize])],
        }
    }

    /// Number of link components, free loops included.
    pub fn component_count(&self) -> usize {
        let mut visited = BTreeSet::new();
        let mut count = 0;
        for (&e, &[a, _]) in &self.edges {
            if visited.contains(&e) {
                continue;
            }
            count += 1;
            visited.insert(e);
            let mut at = self.other_end(e, a);
            loop {
                let out = at.across();
                let next = self.edge_at(out);
                if next == e {
                    break;
                }
                visited.insert(next);
                at = self.other_end(next, out);
            }
        }
        count + self.free_loops as usize
    }

    /// Connected pieces of the underlying 4-valent graph, free loops included.
    pub fn pieces(&self) -> usize {
        let mut seen = BTreeSet::new();
        let mut pieces = 0;
        for &start in self.crossings.keys() {
            if !seen.insert(start) {
                continue;
            }
            pieces += 1;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for (port, e) in self.crossings[&x].ports.iter().enumerate() {
                    let y = self.other_end(*e, Endpoint::new(x, port as u8)).crossing;
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        pieces + self.free_loops as usize
    }

    /// Canonical serialization: the JSON form with crossings in id order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json()).expect("diagram serialization cannot fail")
    }

    /// Stable 64-bit FNV-1a hash of the canonical serialization.
    pub fn stable_hash(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(&self.canonical_bytes());
        h.finish()
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.stable_hash())
    }

    // --- mutation helpers, used only by `moves` ---

    fn alloc_crossing(&mut self, over_parity: u8) -> CrossingId {
        let id = CrossingId(self.next_crossing);
        self.next_crossing += 1;
        let placeholder = EdgeId(u32::MAX);
        self.crossings.insert(
            id,
            Crossing { id, ports: [placeholder; 4], over: [over_parity, over_parity + 2] },
        );
        id
    }

    fn connect(&mut self, a: Endpoint, b: Endpoint) -> EdgeId {
        let e = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.attach(e, a, b);
        e
    }

    fn attach(&mut self, e: EdgeId, a: Endpoint, b: Endpoint) {
        let mut eps = [a, b];
        eps.sort();
        self.edges.insert(e, eps);
        for ep in eps {
            self.crossings.get_mut(&ep.crossing).expect("endpoint crossing exists").ports
                [ep.port as usize] = e;
        }
    }

    fn drop_edge(&mut self, e: EdgeId) {
        self.edges.remove(&e);
    }

    fn drop_crossing(&mut self, id: CrossingId) {
        self.crossings.remove(&id);
    }

    #[cfg(debug_assertions)]
    fn debug_check(&self) {
        for (e, eps) in &self.edges {
            for ep in eps {
                assert_eq!(self.edge_at(*ep), *e, "port/edge tables disagree at {ep:?}");
            }
        }
        for c in self.crossings.values() {
            for (port, e) in c.ports.iter().enumerate() {
                let eps = self.edges.get(e).unwrap_or_else(|| panic!("dangling {e} at {}", c.id));
                assert!(eps.contains(&Endpoint::new(c.id, port as u8)));
            }
        }
    }

    #[cfg(not(debug_assertions))]
    fn debug_check(&self) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trefoil() -> Diagram {
        parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap()
    }

    #[test]
    fn trefoil_has_three_arcs_each_two_edges() {
        let d = trefoil();
        let arcs = d.derive_arcs();
        assert_eq!(arcs.len(), 3);
        for a in arcs.iter() {
            assert_eq!(a.edges.len(), 2);
            assert!(!a.is_closed);
        }
        let mut all: Vec<EdgeId> = arcs.iter().flat_map(|a| a.edges.clone()).collect();
        all.sort();
        assert_eq!(all, (1..=6).map(EdgeId).collect::<Vec<_>>());
    }

    #[test]
    fn one_crossing_twist_is_one_arc() {
        let d = parse_pd("X[1,2,2,1]").unwrap();
        let arcs = d.derive_arcs();
        assert_eq!(arcs.len(), 1);
        assert_eq!(d.component_count(), 1);
    }

    #[test]
    fn zero_crossing_loop_is_one_closed_arc() {
        let d = Diagram::empty_loops(1);
        let arcs = d.derive_arcs();
        assert_eq!(arcs.len(), 1);
        assert!(arcs.get(ArcId(0)).is_closed);
        assert!(arcs.get(ArcId(0)).edges.is_empty());
    }

    #[test]
    fn trefoil_faces_satisfy_euler() {
        let d = trefoil();
        // V - E + F = 2 for a connected planar map.
        assert_eq!(d.crossing_count() as i64 - d.edge_count() as i64 + d.faces().len() as i64, 2);
    }

    #[test]
    fn validate_reports_defects() {
        assert!(validate(&trefoil()).is_empty());
        let mut raw = trefoil().to_json();
        raw.crossings[0].ports[0] = EdgeId(4);
        let defects = validate_raw(&raw);
        assert!(defects.iter().any(|d| matches!(d, Defect::UnpairedEdge { edge: EdgeId(4), uses: 3 })));
        assert!(Diagram::from_raw(&raw).is_err());

        let two = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3] X[7,10,8,11] X[9,12,10,7] X[11,8,12,9]")
            .unwrap();
        assert_eq!(validate(&two), vec![Defect::Disconnected { pieces: 2 }]);
    }

    #[test]
    fn json_round_trip_and_hash_stability() {
        let d = trefoil();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let back = Diagram::from_raw(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.stable_hash(), d.stable_hash());
    }

    #[test]
    fn components_of_hopf_link() {
        let d = parse_pd("X[4,1,3,2] X[2,3,1,4]").unwrap();
        assert_eq!(d.component_count(), 2);
        assert_eq!(d.derive_arcs().len(), 2);
    }
}
