//! Alpha-complex filtrations, persistent homology in dimensions 0 and 1,
//! and the topological summary functions built on persistence diagrams.
//!
//! Filtration values are ball radii `r` (not squared radii): a simplex is
//! present at scale `r` when the restricted balls `B_r(x_i)` of its vertices
//! share a point.

mod delaunay;
mod filtration;
mod persistence;
mod summaries;

pub use delaunay::{delaunay, Triangulation};
pub use filtration::{alpha_filtration, Filtration, Simplex};
pub use persistence::{persistence, PersistenceDiagram, PersistencePair};
pub use summaries::{apf, betti_curve, euler_curve, nd0, rank_function};
