//! Reidemeister moves on [`Diagram`] values.
//!
//! Every move names its site by stable ids (half-edges, crossings). New
//! crossings and edges get fresh ids from the diagram's monotone counters,
//! so replaying a move list against the same start always produces the same
//! diagrams.
//!
//! Port conventions for new crossings: `S = 0, E = 1, N = 2, W = 3`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CrossingId, Diagram, EdgeId, Endpoint, HalfEdge};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("anchor not found: {0}")]
    AnchorNotFound(String),
    #[error("move not applicable: {0}")]
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Move {
    /// Add a kink on `edge`; `over` picks which of the two twists.
    R1Add { edge: HalfEdge, over: bool },
    /// Undo a kink at `crossing`.
    R1Remove { crossing: CrossingId },
    /// Push `finger` across `target`; both must border the face to the left
    /// of `finger`. The finger becomes the over-strand iff `finger_over`.
    R2Push { finger: HalfEdge, target: HalfEdge, finger_over: bool },
    /// Remove the bigon to the left of `face`.
    R2Pull { face: HalfEdge },
    /// Slide a strand across the triangle to the left of `face`.
    R3Slide { face: HalfEdge },
}

impl Move {
    pub fn name(&self) -> &'static str {
        match self {
            Move::R1Add { .. } => "R1+",
            Move::R1Remove { .. } => "R1-",
            Move::R2Push { .. } => "R2+",
            Move::R2Pull { .. } => "R2-",
            Move::R3Slide { .. } => "R3",
        }
    }
}

/// The result of a move together with what it created.
#[derive(Debug, Clone)]
pub struct Applied {
    pub diagram: Diagram,
    pub created_crossings: Vec<CrossingId>,
    pub created_edges: Vec<EdgeId>,
    /// `(new, old)`: new edges that continue an old edge on the same arc.
    pub inherit: Vec<(EdgeId, EdgeId)>,
    /// One old edge for each strand that closed up into a new free loop.
    pub new_loops: Vec<EdgeId>,
}

pub fn apply_move(d: &Diagram, mv: &Move) -> Result<Applied, MoveError> {
    let applied = match mv {
        Move::R1Add { edge, over } => r1_add(d, *edge, *over),
        Move::R1Remove { crossing } => r1_remove(d, *crossing),
        Move::R2Push { finger, target, finger_over } => r2_push(d, *finger, *target, *finger_over),
        Move::R2Pull { face } => r2_pull(d, *face),
        Move::R3Slide { face } => r3_slide(d, *face),
    }?;
    applied.diagram.debug_check();
    Ok(applied)
}

fn require_half_edge(d: &Diagram, h: HalfEdge) -> Result<(), MoveError> {
    if d.contains_half_edge(h) {
        Ok(())
    } else {
        Err(MoveError::AnchorNotFound(format!("half-edge {} -> {:?}", h.edge, h.to)))
    }
}

fn r1_add(d: &Diagram, h: HalfEdge, over: bool) -> Result<Applied, MoveError> {
    require_half_edge(d, h)?;
    let u = d.tail(h);
    let v = h.to;
    let mut nd = d.clone();
    nd.drop_edge(h.edge);
    let k = nd.alloc_crossing(if over { 0 } else { 1 });
    let a = nd.connect(u, Endpoint::new(k, 0));
    let lp = nd.connect(Endpoint::new(k, 2), Endpoint::new(k, 3));
    let b = nd.connect(Endpoint::new(k, 1), v);
    Ok(Applied {
        diagram: nd,
        created_crossings: vec![k],
        created_edges: vec![a, lp, b],
        inherit: vec![(a, h.edge), (b, h.edge)],
        new_loops: Vec::new(),
    })
}

fn r1_remove(d: &Diagram, x: CrossingId) -> Result<Applied, MoveError> {
    let c = d.crossing(x).ok_or_else(|| MoveError::AnchorNotFound(format!("crossing {x}")))?;
    let has_kink = (0..4u8).any(|p| {
        let e = c.ports[p as usize];
        d.other_end(e, Endpoint::new(x, p)) == Endpoint::new(x, (p + 1) % 4)
    });
    if !has_kink {
        return Err(MoveError::NotApplicable(format!("no kink at {x}")));
    }
    Ok(contract(d, &BTreeSet::from([x])))
}

fn r2_push(d: &Diagram, s: HalfEdge, t: HalfEdge, finger_over: bool) -> Result<Applied, MoveError> {
    require_half_edge(d, s)?;
    require_half_edge(d, t)?;
    if s.edge == t.edge {
        return Err(MoveError::NotApplicable("finger and target are the same edge".into()));
    }
    if !d.face(s).contains(&t) {
        return Err(MoveError::NotApplicable("finger and target do not share a face".into()));
    }
    let (sa, sb) = (d.tail(s), s.to);
    let (ea, eb) = (d.tail(t), t.to);
    let mut nd = d.clone();
    nd.drop_edge(s.edge);
    nd.drop_edge(t.edge);
    let parity = if finger_over { 0 } else { 1 };
    let l = nd.alloc_crossing(parity);
    let r = nd.alloc_crossing(parity);
    let f_in = nd.connect(sa, Endpoint::new(l, 0));
    let tip = nd.connect(Endpoint::new(l, 2), Endpoint::new(r, 2));
    let f_out = nd.connect(Endpoint::new(r, 0), sb);
    let t_in = nd.connect(ea, Endpoint::new(r, 1));
    let bottom = nd.connect(Endpoint::new(r, 3), Endpoint::new(l, 1));
    let t_out = nd.connect(Endpoint::new(l, 3), eb);
    Ok(Applied {
        diagram: nd,
        created_crossings: vec![l, r],
        created_edges: vec![f_in, tip, f_out, t_in, bottom, t_out],
        inherit: vec![(f_in, s.edge), (f_out, s.edge), (t_in, t.edge), (t_out, t.edge)],
        new_loops: Vec::new(),
    })
}

fn r2_pull(d: &Diagram, h: HalfEdge) -> Result<Applied, MoveError> {
    require_half_edge(d, h)?;
    let face = d.face(h);
    if face.len() != 2 {
        return Err(MoveError::NotApplicable(format!("face has {} sides, not 2", face.len())));
    }
    let (x, y) = (face[1].to.crossing, face[0].to.crossing);
    if x == y {
        return Err(MoveError::NotApplicable("bigon closes on a single crossing".into()));
    }
    let over_both = |e: EdgeId| d.endpoints(e).unwrap().iter().all(|&ep| d.is_over(ep));
    if !over_both(face[0].edge) && !over_both(face[1].edge) {
        return Err(MoveError::NotApplicable("bigon is a clasp".into()));
    }
    Ok(contract(d, &BTreeSet::from([x, y])))
}

/// Delete `gone` and splice each strand straight through where it was.
fn contract(d: &Diagram, gone: &BTreeSet<CrossingId>) -> Applied {
    let inside = |ep: Endpoint| gone.contains(&ep.crossing);
    let mut nd = d.clone();
    let mut internal: BTreeSet<EdgeId> = BTreeSet::new();
    let mut external: Vec<(Endpoint, EdgeId)> = Vec::new();
    for &x in gone {
        for (port, &e) in d.crossing(x).unwrap().ports.iter().enumerate() {
            let here = Endpoint::new(x, port as u8);
            let there = d.other_end(e, here);
            if inside(there) {
                internal.insert(e);
            } else {
                external.push((here, e));
            }
        }
    }
    let mut done: BTreeSet<EdgeId> = BTreeSet::new();
    let mut used_internal: BTreeSet<EdgeId> = BTreeSet::new();
    let mut created_edges = Vec::new();
    let mut inherit = Vec::new();
    for &(start, f1) in &external {
        if done.contains(&f1) {
            continue;
        }
        let z1 = d.other_end(f1, start);
        let mut at = start;
        let (z2, f2) = loop {
            let out = at.across();
            let e = d.edge_at(out);
            let next = d.other_end(e, out);
            if inside(next) {
                used_internal.insert(e);
                at = next;
            } else {
                break (next, e);
            }
        };
        done.insert(f1);
        done.insert(f2);
        nd.drop_edge(f1);
        nd.drop_edge(f2);
        let keep = f1.min(f2);
        nd.attach(keep, z1, z2);
        if f1 != f2 {
            inherit.push((keep, f1.max(f2)));
        }
        created_edges.push(keep);
    }
    // Whatever internal strands were never reached close up on themselves.
    let mut loose: BTreeSet<EdgeId> = internal.difference(&used_internal).copied().collect();
    let mut new_loops = Vec::new();
    while let Some(&e) = loose.iter().next() {
        new_loops.push(e);
        let [a, _] = d.endpoints(e).unwrap();
        let mut at = d.other_end(e, a);
        loose.remove(&e);
        loop {
            let out = at.across();
            let next = d.edge_at(out);
            if next == e {
                break;
            }
            loose.remove(&next);
            at = d.other_end(next, out);
        }
    }
    for e in &internal {
        nd.drop_edge(*e);
    }
    for &x in gone {
        nd.drop_crossing(x);
    }
    nd.free_loops += new_loops.len() as u32;
    Applied { diagram: nd, created_crossings: Vec::new(), created_edges, inherit, new_loops }
}

/// Triangle data for an R3 site, named after the move's local picture:
/// `face = [e1 (C->A), e2 (A->B), e3 (B->C)]`.
struct Triangle {
    a: CrossingId,
    b: CrossingId,
    c: CrossingId,
    edges: [EdgeId; 3],
    /// `(crossing, inward port)` for strands 1, 2, 3 at their two crossings.
    s1: [Endpoint; 2],
    s2: [Endpoint; 2],
    s3: [Endpoint; 2],
}

fn triangle(d: &Diagram, h: HalfEdge) -> Result<Triangle, MoveError> {
    require_half_edge(d, h)?;
    let face = d.face(h);
    if face.len() != 3 {
        return Err(MoveError::NotApplicable(format!("face has {} sides, not 3", face.len())));
    }
    let [h1, h2, h3] = [face[0], face[1], face[2]];
    let (a, b, c) = (h1.to.crossing, h2.to.crossing, h3.to.crossing);
    if a == b || b == c || a == c {
        return Err(MoveError::NotApplicable("triangle repeats a crossing".into()));
    }
    if h1.edge == h2.edge || h2.edge == h3.edge || h1.edge == h3.edge {
        return Err(MoveError::NotApplicable("triangle repeats an edge".into()));
    }
    Ok(Triangle {
        a,
        b,
        c,
        edges: [h1.edge, h2.edge, h3.edge],
        s1: [h1.to, d.tail(h1)],
        s2: [d.tail(h2), h2.to],
        s3: [d.tail(h3), h3.to],
    })
}

/// Whether some strand of the triangle passes over both of its crossings.
pub fn r3_admissible(d: &Diagram, face: HalfEdge) -> bool {
    triangle(d, face).is_ok_and(|t| strand_over(d, &t))
}

fn strand_over(d: &Diagram, t: &Triangle) -> bool {
    [t.s1, t.s2, t.s3].iter().any(|s| s.iter().all(|&ep| d.is_over(ep)))
}

fn r3_slide(d: &Diagram, h: HalfEdge) -> Result<Applied, MoveError> {
    let t = triangle(d, h)?;
    if !strand_over(d, &t) {
        return Err(MoveError::NotApplicable("no strand is over at both triangle crossings".into()));
    }
    debug_assert!(t.s1[0].crossing == t.a && t.s1[1].crossing == t.c);
    debug_assert!(t.s2[0].crossing == t.a && t.s2[1].crossing == t.b);
    debug_assert!(t.s3[0].crossing == t.b && t.s3[1].crossing == t.c);
    let (a1, c1) = (t.s1[0], t.s1[1]);
    let (a2, b2) = (t.s2[0], t.s2[1]);
    let (b3, c3) = (t.s3[0], t.s3[1]);
    let remap: BTreeMap<Endpoint, Endpoint> = BTreeMap::from([
        (a1.across(), c1),
        (c1.across(), a1),
        (a2.across(), b2),
        (b2.across(), a2),
        (b3.across(), c3),
        (c3.across(), b3),
    ]);
    let externals: BTreeSet<EdgeId> = remap.keys().map(|&ep| d.edge_at(ep)).collect();
    let mut nd = d.clone();
    for e in t.edges {
        nd.drop_edge(e);
    }
    for f in externals {
        let [p, q] = d.endpoints(f).unwrap();
        let p2 = remap.get(&p).copied().unwrap_or(p);
        let q2 = remap.get(&q).copied().unwrap_or(q);
        nd.attach(f, p2, q2);
    }
    let n1 = nd.connect(a1.across(), c1.across());
    let n2 = nd.connect(a2.across(), b2.across());
    let n3 = nd.connect(b3.across(), c3.across());
    let _ = (t.a, t.b, t.c);
    Ok(Applied {
        diagram: nd,
        created_crossings: Vec::new(),
        created_edges: vec![n1, n2, n3],
        inherit: Vec::new(),
        new_loops: Vec::new(),
    })
}

/// Every move that applies somewhere in `d`, in a deterministic order.
/// R2 pushes are limited to finger/target pairs adjacent in their face
/// (the target directly follows the finger) to keep the list linear in size.
pub fn enumerate_moves(d: &Diagram) -> Vec<Move> {
    let mut out = Vec::new();
    for e in d.edge_ids() {
        for h in d.half_edges(e) {
            out.push(Move::R1Add { edge: h, over: true });
            out.push(Move::R1Add { edge: h, over: false });
        }
    }
    for c in d.crossings() {
        if r1_remove(d, c.id).is_ok() {
            out.push(Move::R1Remove { crossing: c.id });
        }
    }
    for face in d.faces() {
        let h = face[0];
        match face.len() {
            2 if r2_pull(d, h).is_ok() => out.push(Move::R2Pull { face: h }),
            3 if r3_admissible(d, h) => out.push(Move::R3Slide { face: h }),
            _ => {}
        }
        if face.len() >= 2 {
            for i in 0..face.len() {
                let s = face[i];
                let t = face[(i + 1) % face.len()];
                if s.edge != t.edge {
                    out.push(Move::R2Push { finger: s, target: t, finger_over: true });
                    out.push(Move::R2Push { finger: s, target: t, finger_over: false });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{is_isomorphic, parse_pd, validate};

    fn euler(d: &Diagram) -> i64 {
        d.crossing_count() as i64 - d.edge_count() as i64 + d.faces().len() as i64
    }

    fn trefoil() -> Diagram {
        parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap()
    }

    #[test]
    fn r1_add_then_remove_round_trips() {
        let d = trefoil();
        for e in d.edge_ids().collect::<Vec<_>>() {
            for h in d.half_edges(e) {
                for over in [true, false] {
                    let a = apply_move(&d, &Move::R1Add { edge: h, over }).unwrap();
                    assert_eq!(a.diagram.crossing_count(), 4);
                    assert_eq!(euler(&a.diagram), 2);
                    assert_eq!(a.diagram.derive_arcs().len(), 4);
                    let k = a.created_crossings[0];
                    let b = apply_move(&a.diagram, &Move::R1Remove { crossing: k }).unwrap();
                    assert!(is_isomorphic(&b.diagram, &d));
                }
            }
        }
    }

    #[test]
    fn r2_push_then_pull_round_trips() {
        let d = trefoil();
        for face in d.faces() {
            for (i, &s) in face.iter().enumerate() {
                for (j, &t) in face.iter().enumerate() {
                    if i == j || s.edge == t.edge {
                        continue;
                    }
                    for fo in [true, false] {
                        let mv = Move::R2Push { finger: s, target: t, finger_over: fo };
                        let a = apply_move(&d, &mv).unwrap();
                        assert_eq!(a.diagram.crossing_count(), 5);
                        assert_eq!(euler(&a.diagram), 2, "push {mv:?}");
                        assert!(validate(&a.diagram).is_empty());
                        let tip = a.created_edges[1];
                        let bigon = a
                            .diagram
                            .half_edges(tip)
                            .into_iter()
                            .find(|&h| a.diagram.face(h).len() == 2)
                            .expect("push creates a bigon");
                        let b = apply_move(&a.diagram, &Move::R2Pull { face: bigon }).unwrap();
                        assert!(is_isomorphic(&b.diagram, &d), "pull after {mv:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn r2_pull_rejects_clasp() {
        // Hopf link: both bigons are clasps.
        let d = parse_pd("X[4,1,3,2] X[2,3,1,4]").unwrap();
        for f in d.faces() {
            assert!(apply_move(&d, &Move::R2Pull { face: f[0] }).is_err());
        }
    }

    #[test]
    fn r3_is_an_involution() {
        let d = trefoil();
        let mut checked = 0;
        for face in d.faces() {
            for fo in [true, false] {
                let mv = Move::R2Push { finger: face[0], target: face[1], finger_over: fo };
                let Ok(a) = apply_move(&d, &mv) else { continue };
                for f in a.diagram.faces() {
                    if f.len() != 3 || !r3_admissible(&a.diagram, f[0]) {
                        continue;
                    }
                    let b = apply_move(&a.diagram, &Move::R3Slide { face: f[0] }).unwrap();
                    assert_eq!(euler(&b.diagram), 2);
                    assert_eq!(b.diagram.crossing_count(), 5);
                    // Slide back across the triangle made from the new edges.
                    let n1 = b.created_edges[0];
                    let back = b
                        .diagram
                        .half_edges(n1)
                        .into_iter()
                        .find(|&h| {
                            let fc = b.diagram.face(h);
                            fc.len() == 3 && fc.iter().all(|x| b.created_edges.contains(&x.edge))
                        })
                        .expect("slide leaves a triangle");
                    let c = apply_move(&b.diagram, &Move::R3Slide { face: back }).unwrap();
                    assert!(is_isomorphic(&c.diagram, &a.diagram));
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn infinity_curl_contracts_to_a_free_loop() {
        let d = parse_pd("X[1,2,2,1]").unwrap();
        let a = apply_move(&d, &Move::R1Remove { crossing: CrossingId(0) }).unwrap();
        assert_eq!(a.diagram.crossing_count(), 0);
        assert_eq!(a.diagram.free_loops(), 1);
    }

    #[test]
    fn missing_anchor() {
        let d = trefoil();
        let err = apply_move(&d, &Move::R1Remove { crossing: CrossingId(99) }).unwrap_err();
        assert!(matches!(err, MoveError::AnchorNotFound(_)));
        let err = apply_move(&d, &Move::R1Remove { crossing: CrossingId(0) }).unwrap_err();
        assert!(matches!(err, MoveError::NotApplicable(_)));
    }
}
