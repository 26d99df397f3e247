//! Benchmark inputs shared by the benches in `benches/`.

use foxpal::corpus::lookup;
use foxpal::elimination::default_coloring;
use foxpal::{Coloring, Diagram, Modulus};

/// The elimination runs: corpus knots at their own determinant.
pub fn elimination_cases() -> Vec<(String, Diagram, Coloring)> {
    [("T(2,11)", 11), ("T(2,13)", 13), ("6_2", 11), ("6_3", 13)]
        .into_iter()
        .map(|(name, p)| {
            let d = lookup(name).expect("corpus entry").diagram();
            let c = default_coloring(&d, Modulus::new(p).unwrap()).expect("non-trivial coloring");
            (format!("{name}@{p}"), d, c)
        })
        .collect()
}
