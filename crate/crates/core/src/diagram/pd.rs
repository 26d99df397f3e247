//! Planar-diagram codes: `X[a,b,c,d] X[...] ...`.
//!
//! Each `X[a,b,c,d]` lists the four edge labels around a crossing
//! counterclockwise, starting from the incoming under-edge. Every label
//! must appear exactly twice. An optional `PD[...]` wrapper is accepted.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Crossing, CrossingId, Diagram, DiagramJson, EdgeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdError {
    #[error("empty PD code")]
    EmptyInput,
    #[error("malformed PD token `{0}`")]
    MalformedToken(String),
    #[error("edge label {label} appears {count} time(s); every label must appear exactly twice")]
    DanglingEdge { label: u32, count: usize },
}

pub fn parse_pd(input: &str) -> Result<Diagram, PdError> {
    let mut body = input.trim();
    if let Some(inner) = body.strip_prefix("PD[").and_then(|s| s.strip_suffix(']')) {
        body = inner.trim();
    }
    if body.is_empty() {
        return Err(PdError::EmptyInput);
    }
    let mut crossings = Vec::new();
    let mut rest = body;
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        if rest.is_empty() {
            break;
        }
        let end = match rest.find(']') {
            Some(i) => i + 1,
            None => return Err(PdError::MalformedToken(rest.to_string())),
        };
        let token = &rest[..end];
        rest = &rest[end..];
        let labels = parse_token(token)?;
        crossings.push(Crossing {
            id: CrossingId(crossings.len() as u32),
            ports: labels.map(EdgeId),
            over: [1, 3],
        });
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for c in &crossings {
        for e in c.ports {
            *counts.entry(e.0).or_default() += 1;
        }
    }
    if let Some((&label, &count)) = counts.iter().find(|(_, &n)| n != 2) {
        return Err(PdError::DanglingEdge { label, count });
    }
    let raw = DiagramJson { crossings, free_loops: 0 };
    Ok(Diagram::from_raw(&raw).expect("pairing already checked"))
}

fn parse_token(token: &str) -> Result<[u32; 4], PdError> {
    let malformed = || PdError::MalformedToken(token.trim().to_string());
    let inner = token
        .trim()
        .strip_prefix('X')
        .and_then(|s| s.trim_start().strip_prefix('['))
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(malformed)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(malformed());
    }
    let mut out = [0u32; 4];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| malformed())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors() {
        assert_eq!(parse_pd("").unwrap_err(), PdError::EmptyInput);
        assert_eq!(parse_pd("  PD[ ] ").unwrap_err(), PdError::EmptyInput);
        assert!(matches!(parse_pd("X[1,2,3]"), Err(PdError::MalformedToken(_))));
        assert!(matches!(parse_pd("X[1,2,3,x]"), Err(PdError::MalformedToken(_))));
        assert!(matches!(parse_pd("Y[1,2,3,4]"), Err(PdError::MalformedToken(_))));
        assert_eq!(
            parse_pd("X[1,2,3,4]").unwrap_err(),
            PdError::DanglingEdge { label: 1, count: 1 }
        );
    }

    #[test]
    fn wrapper_and_commas() {
        let a = parse_pd("PD[X[1,4,2,5], X[3,6,4,1], X[5,2,6,3]]").unwrap();
        let b = parse_pd("X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.crossing_count(), 3);
    }
}
