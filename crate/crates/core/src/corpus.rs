//! Bundled knot diagrams. Determinants are recomputed whenever an entry is
//! loaded; nothing here is trusted from tables.

use num_bigint::BigInt;
use serde::Serialize;

use crate::coloring::determinant;
use crate::diagram::{parse_pd, Diagram, PdError};

#[derive(Debug, Clone, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub pd: String,
    pub determinant: BigInt,
    pub notes: String,
}

impl CorpusEntry {
    pub fn diagram(&self) -> Diagram {
        parse_pd(&self.pd).expect("corpus PD codes parse")
    }
}

/// PD code of the closed 2-braid with `n` crossings.
pub fn torus_2(n: u32) -> String {
    let m = 2 * n;
    let wrap = |x: u32| (x - 1) % m + 1;
    (1..=n)
        .map(|i| format!("X[{},{},{},{}]", 2 * i - 1, wrap(2 * i + n - 1), 2 * i, wrap(2 * i + n)))
        .collect::<Vec<_>>()
        .join(" ")
}

const RAW: &[(&str, &str, &str)] = &[
    ("trefoil", "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]", "3_1"),
    ("figure-eight", "X[4,2,5,1] X[8,6,1,5] X[6,3,7,4] X[2,7,3,8]", "4_1"),
    ("6_2", "X[1,4,2,5] X[5,10,6,11] X[3,9,4,8] X[9,3,10,2] X[7,12,8,1] X[11,6,12,7]", "six crossings"),
    ("6_3", "X[4,2,5,1] X[8,4,9,3] X[12,9,1,10] X[10,5,11,6] X[6,11,7,12] X[2,8,3,7]", "six crossings"),
];

fn entry(name: &str, pd: String, notes: &str) -> Result<CorpusEntry, PdError> {
    let d = parse_pd(&pd)?;
    Ok(CorpusEntry { name: name.to_string(), determinant: determinant(&d), pd, notes: notes.to_string() })
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for (name, pd, notes) in RAW.iter().take(2) {
        out.push(entry(name, pd.to_string(), notes).unwrap());
    }
    for n in [7, 11, 13] {
        out.push(entry(&format!("T(2,{n})"), torus_2(n), "closed 2-braid").unwrap());
    }
    for (name, pd, notes) in RAW.iter().skip(2) {
        out.push(entry(name, pd.to_string(), notes).unwrap());
    }
    out
}

pub fn lookup(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name.eq_ignore_ascii_case(name))
}
