//! Fox colorings: arc assignments with `u1 + u2 = 2o (mod p)` at every crossing.
//!
//! Colorings are exposed per arc ([`Coloring`]) and carried per edge inside
//! the engine ([`EdgeColoring`]), since edge ids survive moves and arc ids do
//! not.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::moves::Applied;
use crate::diagram::{ArcId, Arcs, CrossingId, Diagram, EdgeId, Endpoint};
use crate::modular::{Color, Modulus};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error("coloring violates the Fox condition at crossing {0}")]
    Violation(CrossingId),
    #[error("enumeration needs {needed} colorings, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("coloring is for p={got}, expected p={expected}")]
    WrongModulus { got: u32, expected: u32 },
    #[error("coloring does not cover the diagram: {0}")]
    Shape(String),
    #[error("no color for arc {0}")]
    MissingColor(ArcId),
}

/// An arc coloring in its serialized shape `{p, assignment:{arcId:color}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub p: u32,
    pub assignment: BTreeMap<ArcId, Color>,
}

impl Coloring {
    pub fn palette(&self) -> BTreeSet<Color> {
        self.assignment.values().copied().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.palette().len() <= 1
    }
}

/// The solution space `{p, dimension, basis}`; basis vectors are indexed by arc.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSpace {
    pub p: u32,
    pub dimension: usize,
    pub basis: Vec<Vec<u32>>,
}

impl SolutionSpace {
    /// `sum coeffs[i] * basis[i]` as a coloring.
    pub fn combine(&self, coeffs: &[u32]) -> Coloring {
        let n = self.basis.first().map_or(0, Vec::len);
        let p = self.p as u64;
        let mut assignment = BTreeMap::new();
        for arc in 0..n {
            let v = coeffs
                .iter()
                .zip(&self.basis)
                .fold(0u64, |acc, (&c, b)| (acc + c as u64 * b[arc] as u64) % p);
            assignment.insert(ArcId(arc as u32), Color(v as u32));
        }
        Coloring { p: self.p, assignment }
    }

    pub fn count(&self) -> BigInt {
        BigInt::from(self.p).pow(self.dimension as u32)
    }
}

/// Colors on edges and free loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    pub modulus: Modulus,
    pub edges: BTreeMap<EdgeId, Color>,
    pub loops: Vec<Color>,
}

impl EdgeColoring {
    pub fn from_arcs(d: &Diagram, arcs: &Arcs, c: &Coloring, m: Modulus) -> Result<Self, ColoringError> {
        if c.p != m.p() {
            return Err(ColoringError::WrongModulus { got: c.p, expected: m.p() });
        }
        if c.assignment.len() != arcs.len() {
            return Err(ColoringError::Shape(format!(
                "{} arcs colored, diagram has {}",
                c.assignment.len(),
                arcs.len()
            )));
        }
        let mut edges = BTreeMap::new();
        let mut loops = Vec::new();
        for arc in arcs.iter() {
            let col = *c
                .assignment
                .get(&arc.id)
                .ok_or_else(|| ColoringError::Shape(format!("{} has no color", arc.id)))?;
            if col.0 >= m.p() {
                return Err(ColoringError::Shape(format!("color {col} out of range")));
            }
            if arc.edges.is_empty() {
                loops.push(col);
            }
            for e in &arc.edges {
                edges.insert(*e, col);
            }
        }
        let ec = EdgeColoring { modulus: m, edges, loops };
        ec.check(d)?;
        Ok(ec)
    }

    pub fn to_arcs(&self, arcs: &Arcs) -> Coloring {
        let mut loops = self.loops.iter();
        let assignment = arcs
            .iter()
            .map(|a| {
                let c = match a.edges.first() {
                    Some(e) => self.edges[e],
                    None => *loops.next().expect("one color per free loop"),
                };
                (a.id, c)
            })
            .collect();
        Coloring { p: self.modulus.p(), assignment }
    }

    pub fn at(&self, ep: Endpoint, d: &Diagram) -> Color {
        self.edges[&d.edge_at(ep)]
    }

    pub fn check(&self, d: &Diagram) -> Result<(), ColoringError> {
        for c in d.crossings() {
            if !check_crossing(d, self, c.id) {
                return Err(ColoringError::Violation(c.id));
            }
        }
        Ok(())
    }

    pub fn palette(&self) -> BTreeSet<Color> {
        self.edges.values().chain(&self.loops).copied().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.palette().len() <= 1
    }

    /// Carry the coloring across a move: surviving edges keep their colors,
    /// continuing edges inherit, and the rest follow from the crossing
    /// relations.
    pub fn transport(&self, applied: &Applied) -> Result<EdgeColoring, ColoringError> {
        let d = &applied.diagram;
        let m = self.modulus;
        let mut edges: BTreeMap<EdgeId, Color> = BTreeMap::new();
        for e in d.edge_ids() {
            if let Some(&c) = self.edges.get(&e) {
                if !applied.created_edges.contains(&e) {
                    edges.insert(e, c);
                }
            }
        }
        for &(new, old) in &applied.inherit {
            edges.insert(new, self.edges[&old]);
        }
        // Contractions reuse one of the spliced ids; both halves carry one color.
        for &e in &applied.created_edges {
            if let (std::collections::btree_map::Entry::Vacant(slot), Some(&c)) = (edges.entry(e), self.edges.get(&e)) {
                slot.insert(c);
            }
        }
        let half = m.inv(Color(2)).expect("p is odd");
        loop {
            let mut changed = false;
            for c in d.crossings() {
                let get = |p: u8| edges.get(&c.ports[p as usize]).copied();
                let [o1, o2] = c.over;
                let [u1, u2] = c.under_ports();
                let mut over = get(o1).or(get(o2));
                if over.is_none() {
                    if let (Some(a), Some(b)) = (get(u1), get(u2)) {
                        over = Some(m.mul(m.add(a, b), half));
                    }
                }
                let mut set = |p: u8, v: Color, edges: &mut BTreeMap<EdgeId, Color>| {
                    let e = c.ports[p as usize];
                    if let std::collections::btree_map::Entry::Vacant(slot) = edges.entry(e) {
                        slot.insert(v);
                        changed = true;
                    }
                };
                if let Some(o) = over {
                    set(o1, o, &mut edges);
                    set(o2, o, &mut edges);
                    let (a, b) = (edges.get(&c.ports[u1 as usize]).copied(), edges.get(&c.ports[u2 as usize]).copied());
                    match (a, b) {
                        (Some(a), None) => set(u2, m.reflect(o, a), &mut edges),
                        (None, Some(b)) => set(u1, m.reflect(o, b), &mut edges),
                        _ => {}
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if edges.len() != d.edge_count() {
            return Err(ColoringError::Shape("coloring does not propagate across the move".into()));
        }
        let mut loops = self.loops.clone();
        loops.extend(applied.new_loops.iter().map(|e| self.edges[e]));
        let out = EdgeColoring { modulus: m, edges, loops };
        out.check(d)?;
        Ok(out)
    }
}

pub fn check_crossing(d: &Diagram, c: &EdgeColoring, id: CrossingId) -> bool {
    let Some(x) = d.crossing(id) else { return false };
    let m = c.modulus;
    let col = |p: u8| c.edges[&x.ports[p as usize]];
    let [o1, o2] = x.over;
    let [u1, u2] = x.under_ports();
    col(o1) == col(o2) && m.add(col(u1), col(u2)) == m.add(col(o1), col(o1))
}

/// The Fox condition `u1 + u2 = 2o` on residues mod `p`.
pub fn fox_holds(p: u32, o: Color, u1: Color, u2: Color) -> bool {
    let p = p as u64;
    (u1.0 as u64 + u2.0 as u64) % p == (2 * o.0 as u64) % p
}

/// Check one crossing of an arc coloring.
pub fn check_arc_crossing(d: &Diagram, arcs: &Arcs, c: &Coloring, id: CrossingId) -> Result<bool, ColoringError> {
    let Some(x) = d.crossing(id) else {
        return Ok(false);
    };
    let col = |port: u8| {
        let a = arcs.of_edge(x.ports[port as usize]);
        c.assignment.get(&a).copied().ok_or(ColoringError::MissingColor(a))
    };
    let [u1, u2] = x.under_ports();
    Ok(fox_holds(c.p, col(x.over[0])?, col(u1)?, col(u2)?))
}

/// Coloring matrix: one row per crossing, one column per arc.
pub fn coloring_matrix(d: &Diagram, arcs: &Arcs) -> Vec<Vec<i64>> {
    d.crossings()
        .map(|c| {
            let mut row = vec![0i64; arcs.len()];
            let ca = d.crossing_arcs(arcs, c.id);
            row[ca.over.0 as usize] += 2;
            for u in ca.under {
                row[u.0 as usize] -= 1;
            }
            row
        })
        .collect()
}

/// A basis of all colorings modulo `p`, by row reduction of the coloring matrix.
pub fn solve(d: &Diagram, m: Modulus) -> SolutionSpace {
    let arcs = d.derive_arcs();
    let p = m.p() as i64;
    let mut rows: Vec<Vec<i64>> = coloring_matrix(d, &arcs)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.rem_euclid(p)).collect())
        .collect();
    let n = arcs.len();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(r, pr);
        let inv = m.inv(Color(rows[r][col] as u32)).unwrap().0 as i64;
        for v in rows[r].iter_mut() {
            *v = *v * inv % p;
        }
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[col] != 0 {
                let f = row[col];
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x = (*x - f * y).rem_euclid(p);
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&fc| {
            let mut v = vec![0i64; n];
            v[fc] = 1;
            for (i, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = (-rows[i][fc]).rem_euclid(p);
            }
            v.into_iter().map(|x| x as u32).collect()
        })
        .collect::<Vec<Vec<u32>>>();
    SolutionSpace { p: m.p(), dimension: basis.len(), basis }
}

/// All colorings, refused when there are more than `budget` of them.
pub fn enumerate(d: &Diagram, m: Modulus, budget: u64) -> Result<Vec<Coloring>, ColoringError> {
    enumerate_space(&solve(d, m), budget, |_| true)
}

/// Every coloring in the span that passes `filter`, each exactly once, in
/// lexicographic order of the coefficient vector (first coefficient fastest).
pub fn enumerate_space(
    space: &SolutionSpace,
    budget: u64,
    filter: impl Fn(&Coloring) -> bool,
) -> Result<Vec<Coloring>, ColoringError> {
    let needed = space.count();
    if needed > BigInt::from(budget) {
        return Err(ColoringError::BudgetExceeded { needed: needed.to_string(), budget });
    }
    let total: u64 = needed.try_into().expect("within budget");
    let mut out = Vec::new();
    let mut coeffs = vec![0u32; space.dimension];
    for _ in 0..total {
        let c = space.combine(&coeffs);
        if filter(&c) {
            out.push(c);
        }
        for c in coeffs.iter_mut() {
            *c += 1;
            if *c < space.p {
                break;
            }
            *c = 0;
        }
    }
    Ok(out)
}

/// The first non-trivial coloring in basis order, if any.
pub fn first_nontrivial(d: &Diagram, m: Modulus) -> Option<Coloring> {
    let space = solve(d, m);
    let mut coeffs = vec![0u32; space.dimension];
    // Combinations in lexicographic order of the coefficient vector, small
    // coefficients first; one nonzero coefficient suffices unless every basis
    // vector is constant.
    for i in 0..space.dimension {
        coeffs.iter_mut().for_each(|c| *c = 0);
        coeffs[i] = 1;
        let c = space.combine(&coeffs);
        if !c.is_trivial() {
            return Some(c);
        }
    }
    None
}

/// `|det|` of a first minor of the coloring matrix.
pub fn determinant(d: &Diagram) -> BigInt {
    let arcs = d.derive_arcs();
    let n = d.crossing_count();
    if n == 0 {
        return if arcs.len() <= 1 { BigInt::one() } else { BigInt::zero() };
    }
    if arcs.len() != n {
        return BigInt::zero();
    }
    let full = coloring_matrix(d, &arcs);
    let minor: Vec<Vec<BigInt>> =
        full.iter().skip(1).map(|row| row.iter().skip(1).map(|&v| BigInt::from(v)).collect()).collect();
    bareiss(minor).abs()
}

/// Fraction-free Gaussian elimination.
pub fn bareiss(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_pd;

    fn m(p: u32) -> Modulus {
        Modulus::new(p).unwrap()
    }

    const TREFOIL: &str = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]";
    const FIGURE_EIGHT: &str = "X[4,2,5,1] X[8,6,1,5] X[6,3,7,4] X[2,7,3,8]";

    #[test]
    fn trefoil_counts() {
        let d = parse_pd(TREFOIL).unwrap();
        assert_eq!(solve(&d, m(3)).dimension, 2);
        assert_eq!(solve(&d, m(5)).dimension, 1);
        assert_eq!(enumerate(&d, m(3), 100).unwrap().len(), 9);
        assert_eq!(enumerate(&d, m(5), 100).unwrap().len(), 5);
        assert_eq!(determinant(&d), BigInt::from(3));
    }

    #[test]
    fn filtered_enumeration() {
        let d = parse_pd(TREFOIL).unwrap();
        let space = solve(&d, m(3));
        assert_eq!(enumerate_space(&space, 100, |c| !c.is_trivial()).unwrap().len(), 6);
        let avoid = enumerate_space(&space, 100, |c| !c.palette().iter().any(|x| x.0 == 2 || x.0 == 1)).unwrap();
        assert_eq!(avoid.len(), 1);
        assert!(avoid[0].assignment.values().all(|x| x.0 == 0));
    }

    #[test]
    fn fox_examples() {
        assert!(fox_holds(11, Color(3), Color(3), Color(3)));
        assert!(fox_holds(11, Color(7), Color(3), Color(0)));
        assert!(!fox_holds(11, Color(0), Color(1), Color(2)));
    }

    #[test]
    fn missing_color_reported() {
        let d = parse_pd(TREFOIL).unwrap();
        let arcs = d.derive_arcs();
        let mut c = enumerate(&d, m(3), 100).unwrap().pop().unwrap();
        let x = d.crossings().next().unwrap().id;
        assert_eq!(check_arc_crossing(&d, &arcs, &c, x), Ok(true));
        c.assignment.clear();
        assert!(matches!(check_arc_crossing(&d, &arcs, &c, x), Err(ColoringError::MissingColor(_))));
    }

    #[test]
    fn figure_eight_counts() {
        let d = parse_pd(FIGURE_EIGHT).unwrap();
        assert_eq!(determinant(&d), BigInt::from(5));
        assert_eq!(enumerate(&d, m(5), 1000).unwrap().len(), 25);
        assert_eq!(enumerate(&d, m(3), 1000).unwrap().len(), 3);
    }

    #[test]
    fn every_enumerated_coloring_is_valid() {
        let d = parse_pd(TREFOIL).unwrap();
        let arcs = d.derive_arcs();
        for c in enumerate(&d, m(3), 100).unwrap() {
            EdgeColoring::from_arcs(&d, &arcs, &c, m(3)).unwrap();
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = parse_pd(TREFOIL).unwrap();
        assert!(matches!(enumerate(&d, m(3), 8), Err(ColoringError::BudgetExceeded { .. })));
    }

    #[test]
    fn nontrivial_choice() {
        let d = parse_pd(TREFOIL).unwrap();
        let c = first_nontrivial(&d, m(3)).unwrap();
        assert_eq!(c.palette().len(), 3);
        assert!(first_nontrivial(&d, m(5)).is_none());
    }

    #[test]
    fn determinant_edge_cases() {
        assert_eq!(determinant(&Diagram::empty_loops(1)), BigInt::one());
        assert_eq!(determinant(&Diagram::empty_loops(2)), BigInt::zero());
        assert_eq!(determinant(&parse_pd("X[1,2,2,1]").unwrap()), BigInt::one());
        // Hopf link.
        assert_eq!(determinant(&parse_pd("X[4,1,3,2] X[2,3,1,4]").unwrap()), BigInt::from(2));
    }

    #[test]
    fn bareiss_small() {
        let a = vec![
            vec![BigInt::from(2), BigInt::from(-1)],
            vec![BigInt::from(-1), BigInt::from(2)],
        ];
        assert_eq!(bareiss(a), BigInt::from(3));
        let z = vec![vec![BigInt::zero(), BigInt::one()], vec![BigInt::one(), BigInt::zero()]];
        assert_eq!(bareiss(z), BigInt::from(-1));
    }
}
