//! Fox colorings of link diagrams modulo an odd prime, and a procedure that
//! rewrites a colored diagram by Reidemeister moves until the colors
//! `2k`, `2k-1` and `k` (with `p = 2k + 1`) no longer occur.
//!
//! Layout:
//! - [`diagram`]: PD parsing, arcs, faces and the Reidemeister moves.
//! - [`coloring`]: the coloring matrix, solution spaces and determinants.
//! - [`rules`]: the rewrite-rule catalog and the case-analysis audit.
//! - [`elimination`]: the color-removal engine and its traces.
//! - [`oracle`]: independent checkers used by tests and by `verify`.
//! - [`corpus`]: a few named knots.

pub mod coloring;
pub mod corpus;
pub mod diagram;
pub mod elimination;
pub mod modular;
pub mod oracle;
pub mod rules;

pub use coloring::{Coloring, ColoringError, EdgeColoring, SolutionSpace};
pub use diagram::{
    apply_move, parse_pd, validate, Arc, ArcId, Crossing, CrossingId, Defect, Diagram,
    DiagramJson, EdgeId, Endpoint, HalfEdge, Move, MoveError, PdError,
};
pub use elimination::{eliminate_all, eliminate_color, EliminationError, EliminationReport};
pub use modular::{Color, Modulus, ModulusError};
pub use oracle::{verify_report, VerificationVerdict};
pub use rules::{audit_tables, catalog, AffineExpr, AuditError, RewriteRule};
