//! Composite rewrites built from primitive moves.
//!
//! - `cover`: pass a finger of some strand over a whole crossing `X`. Two
//!   R2 pushes and one R3; every color at `X` changes from `x` to `2a - x`
//!   where `a` is the finger's color.
//! - `under_slide`: for an edge `T` that runs under `A` at one end and under
//!   `B` at the other, push `A` over `B` next to `T` and slide across the
//!   triangle. New colors `2a - b` and `2a - 2b + t`.
//! - `finger`: a single R2 push.

use crate::diagram::moves::r3_admissible;
use crate::diagram::{CrossingId, EdgeId, Endpoint, HalfEdge, Move};
use crate::modular::Color;

use super::State;

#[derive(Debug, Clone)]
pub struct MacroRun {
    pub moves: Vec<Move>,
    pub state: State,
}

struct Builder<'a> {
    state: State,
    moves: Vec<Move>,
    banned: &'a [Color],
}

impl<'a> Builder<'a> {
    fn new(s: &State, banned: &'a [Color]) -> Self {
        Builder { state: s.clone(), moves: Vec::new(), banned }
    }

    fn push(&mut self, mv: Move) -> Option<()> {
        self.state = self.state.step(&mv, self.banned).ok()?;
        self.moves.push(mv);
        Some(())
    }

    fn finish(self) -> MacroRun {
        MacroRun { moves: self.moves, state: self.state }
    }
}

/// Crossings created by the move most recently applied: new ids are
/// allocated from a counter, so they are exactly those at or above `mark`.
fn created_since(s: &State, mark: u32) -> Vec<CrossingId> {
    s.d.crossings().map(|c| c.id).filter(|c| c.0 >= mark).collect()
}

fn next_crossing_mark(s: &State) -> u32 {
    s.d.next_crossing_id()
}

/// The R3 site: a triangle touching every crossing in `must`, with at least
/// one corner in `fresh`.
fn triangle_through(s: &State, must: &[CrossingId], fresh: &[CrossingId]) -> Option<HalfEdge> {
    let anchor = must[0];
    let cr = s.d.crossing(anchor)?;
    for (port, &e) in cr.ports.iter().enumerate() {
        let h = HalfEdge { edge: e, to: Endpoint::new(anchor, port as u8) };
        let face = s.d.face(h);
        if face.len() != 3 {
            continue;
        }
        let corners: Vec<CrossingId> = face.iter().map(|x| x.to.crossing).collect();
        if must.iter().all(|m| corners.contains(m))
            && corners.iter().any(|c| fresh.contains(c))
            && r3_admissible(&s.d, h)
        {
            return Some(h);
        }
    }
    None
}

/// Cover crossing `x`; the finger `s` must lie on the face to the left of
/// the edge arriving at `x` through port `corner`.
pub fn cover(st: &State, x: CrossingId, corner: u8, s: HalfEdge, banned: &[Color]) -> Option<MacroRun> {
    let cr = st.d.crossing(x)?;
    let e1 = HalfEdge { edge: cr.ports[corner as usize], to: Endpoint::new(x, corner) };
    if s.edge == e1.edge {
        return None;
    }
    let mut b = Builder::new(st, banned);
    let mark = next_crossing_mark(&b.state);
    b.push(Move::R2Push { finger: s, target: e1, finger_over: true })?;
    let first = created_since(&b.state, mark);
    // The far end of the tip now borders the face around the next corner.
    let next_port = (corner + 1) % 4;
    let e0 = b.state.d.edge_at(Endpoint::new(x, next_port));
    let h0 = HalfEdge { edge: e0, to: Endpoint::new(x, next_port) };
    let tip = b
        .state
        .d
        .face(h0)
        .into_iter()
        .find(|h| first.contains(&h.to.crossing) && first.contains(&b.state.d.tail(*h).crossing))?;
    let mark2 = next_crossing_mark(&b.state);
    b.push(Move::R2Push { finger: tip, target: h0, finger_over: true })?;
    let second = created_since(&b.state, mark2);
    let fresh: Vec<CrossingId> = first.iter().chain(&second).copied().collect();
    let tri = triangle_through(&b.state, &[x], &fresh)?;
    b.push(Move::R3Slide { face: tri })?;
    Some(b.finish())
}

/// Slide across the under-edge `t`. `side` picks which of its two faces is
/// used; `first_on_top` puts the over-strand at the face's predecessor end
/// on top.
pub fn under_slide(st: &State, t: EdgeId, side: usize, first_on_top: bool, banned: &[Color]) -> Option<MacroRun> {
    let ht = st.d.half_edges(t)[side];
    let x2 = ht.to.crossing;
    let x1 = st.d.tail(ht).crossing;
    if x1 == x2 {
        return None;
    }
    let face = st.d.face(ht);
    if face.len() < 3 {
        return None;
    }
    let ea = *face.last().unwrap();
    let eb = face[1];
    if ea.edge == eb.edge || ea.edge == t || eb.edge == t {
        return None;
    }
    let mut b = Builder::new(st, banned);
    let mark = next_crossing_mark(&b.state);
    let push = if first_on_top {
        Move::R2Push { finger: ea, target: eb, finger_over: true }
    } else {
        Move::R2Push { finger: eb, target: ea, finger_over: true }
    };
    b.push(push)?;
    let fresh = created_since(&b.state, mark);
    let tri = triangle_through(&b.state, &[x1, x2], &fresh)?;
    b.push(Move::R3Slide { face: tri })?;
    Some(b.finish())
}

pub fn finger(st: &State, s: HalfEdge, t: HalfEdge, over: bool, banned: &[Color]) -> Option<MacroRun> {
    let mut b = Builder::new(st, banned);
    b.push(Move::R2Push { finger: s, target: t, finger_over: over })?;
    Some(b.finish())
}

/// Finger half-edges for covering `x`: for each corner, the half-edges of the
/// face at that corner, nearest first, one per distinct color.
pub fn cover_fingers(st: &State, x: CrossingId, avoid: Color) -> Vec<(u8, HalfEdge, Color)> {
    let Some(cr) = st.d.crossing(x) else { return Vec::new() };
    let mut out = Vec::new();
    for corner in 0..4u8 {
        let e1 = HalfEdge { edge: cr.ports[corner as usize], to: Endpoint::new(x, corner) };
        let face = st.d.face(e1);
        let mut seen = Vec::new();
        // Nearest to the corner first, in either direction.
        let n = face.len();
        let mut order: Vec<(usize, HalfEdge)> = (1..n).map(|i| (i.min(n - i), face[i])).collect();
        order.sort_by_key(|(dist, _)| *dist);
        for (_, h) in order {
            if h.edge == e1.edge || h.edge == cr.ports[((corner + 3) % 4) as usize] {
                continue;
            }
            let col = st.color_of(h.edge);
            if col == avoid || seen.contains(&col) {
                continue;
            }
            seen.push(col);
            out.push((corner, h, col));
        }
    }
    out
}

/// Cover `x` with a finger brought in from farther away: `s` is pushed over
/// each edge of `path` in turn (each a half-edge of the face the tip is
/// currently in, in the original diagram), then the tip covers `x` at
/// `corner`.
pub fn far_cover(
    st: &State,
    x: CrossingId,
    corner: u8,
    s: HalfEdge,
    path: &[EdgeId],
    banned: &[Color],
) -> Option<MacroRun> {
    let mut b = Builder::new(st, banned);
    let mut finger = s;
    for &g in path {
        // The half-edge of `g` that shares a face with the current finger.
        let face = b.state.d.face(finger);
        let target = *face.iter().find(|h| h.edge == g)?;
        let mark = next_crossing_mark(&b.state);
        b.push(Move::R2Push { finger, target, finger_over: true })?;
        let fresh = created_since(&b.state, mark);
        let tip = b.state.d.edge_at(Endpoint::new(*fresh.iter().min()?, 2));
        // Continue from the tip's side facing away from the new bigon.
        finger = b.state.d.half_edges(tip).into_iter().find(|h| b.state.d.face(*h).len() != 2)?;
    }
    let run = cover(&b.state, x, corner, finger, banned)?;
    b.moves.extend(run.moves);
    Some(MacroRun { moves: b.moves, state: run.state })
}

/// Far fingers for `x`: for each corner, a breadth-first walk over faces
/// (through edges not incident to `x`) up to `radius` steps, yielding one
/// source half-edge per new color with the edges crossed on the way.
pub fn far_fingers(st: &State, x: CrossingId, radius: usize, skip: &[Color]) -> Vec<(u8, HalfEdge, Vec<EdgeId>, Color)> {
    use std::collections::{BTreeMap, VecDeque};
    let Some(cr) = st.d.crossing(x) else { return Vec::new() };
    let own: Vec<EdgeId> = cr.ports.to_vec();
    // Face index per half-edge.
    let faces = st.d.faces();
    let mut index: BTreeMap<HalfEdge, usize> = BTreeMap::new();
    for (i, f) in faces.iter().enumerate() {
        for h in f {
            index.insert(*h, i);
        }
    }
    let mut out = Vec::new();
    for corner in 0..4u8 {
        let e1 = HalfEdge { edge: cr.ports[corner as usize], to: Endpoint::new(x, corner) };
        let start = index[&e1];
        // prev[f] = (face we came from, edge crossed)
        let mut prev: BTreeMap<usize, (usize, EdgeId)> = BTreeMap::new();
        let mut dist = BTreeMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        let mut seen: Vec<Color> = skip.to_vec();
        while let Some(f) = queue.pop_front() {
            let d = dist[&f];
            if d > 0 {
                for h in &faces[f] {
                    let col = st.color_of(h.edge);
                    if seen.contains(&col) {
                        continue;
                    }
                    // Reconstruct the crossed edges, nearest to the source first.
                    let mut path = Vec::new();
                    let mut cur = f;
                    while cur != start {
                        let (p, g) = prev[&cur];
                        path.push(g);
                        cur = p;
                    }
                    if path.contains(&h.edge) {
                        continue;
                    }
                    seen.push(col);
                    out.push((corner, *h, path, col));
                }
            }
            if d == radius {
                continue;
            }
            for h in &faces[f] {
                if own.contains(&h.edge) {
                    continue;
                }
                let g = index[&st.d.reverse(*h)];
                if let std::collections::btree_map::Entry::Vacant(v) = dist.entry(g) {
                    v.insert(d + 1);
                    prev.insert(g, (f, h.edge));
                    queue.push_back(g);
                }
            }
        }
    }
    out
}
