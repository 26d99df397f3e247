use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{CrossingId, Diagram, Endpoint};

/// Orientation-preserving isomorphism of diagrams, ignoring ids.
pub fn is_isomorphic(a: &Diagram, b: &Diagram) -> bool {
    if a.crossing_count() != b.crossing_count()
        || a.edge_count() != b.edge_count()
        || a.free_loops() != b.free_loops()
    {
        return false;
    }
    let mut used_b: BTreeSet<CrossingId> = BTreeSet::new();
    let mut done_a: BTreeSet<CrossingId> = BTreeSet::new();
    for seed in a.crossings().map(|c| c.id).collect::<Vec<_>>() {
        if done_a.contains(&seed) {
            continue;
        }
        let mut matched = None;
        'search: for y in b.crossings().map(|c| c.id) {
            if used_b.contains(&y) {
                continue;
            }
            for rot in 0..4u8 {
                if let Some(map) = extend(a, b, seed, y, rot) {
                    if map.values().all(|(z, _)| !used_b.contains(z)) {
                        matched = Some(map);
                        break 'search;
                    }
                }
            }
        }
        let Some(map) = matched else { return false };
        for (x, (y, _)) in map {
            done_a.insert(x);
            used_b.insert(y);
        }
    }
    true
}

/// Grow a port-preserving map of the component of `x0` sending `x0` to
/// `y0` with its ports shifted by `rot`.
fn extend(
    a: &Diagram,
    b: &Diagram,
    x0: CrossingId,
    y0: CrossingId,
    rot: u8,
) -> Option<BTreeMap<CrossingId, (CrossingId, u8)>> {
    let mut map: BTreeMap<CrossingId, (CrossingId, u8)> = BTreeMap::new();
    let mut inverse: BTreeMap<CrossingId, CrossingId> = BTreeMap::new();
    map.insert(x0, (y0, rot));
    inverse.insert(y0, x0);
    let mut queue = VecDeque::from([x0]);
    while let Some(x) = queue.pop_front() {
        let (y, r) = map[&x];
        for port in 0..4u8 {
            let pa = Endpoint::new(x, port);
            let pb = Endpoint::new(y, (port + r) % 4);
            if a.is_over(pa) != b.is_over(pb) {
                return None;
            }
            let qa = a.other_end(a.edge_at(pa), pa);
            let qb = b.other_end(b.edge_at(pb), pb);
            let r2 = (qb.port + 4 - qa.port) % 4;
            match map.get(&qa.crossing) {
                Some(&(yy, rr)) => {
                    if yy != qb.crossing || rr != r2 {
                        return None;
                    }
                }
                None => {
                    if inverse.contains_key(&qb.crossing) {
                        return None;
                    }
                    map.insert(qa.crossing, (qb.crossing, r2));
                    inverse.insert(qb.crossing, qa.crossing);
                    queue.push_back(qa.crossing);
                }
            }
        }
    }
    Some(map)
}
