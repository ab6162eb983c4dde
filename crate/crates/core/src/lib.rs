//! Determinant-maximizing completions of unit-diagonal matrices with a
//! fixed value on the edges of a graph, and the surrounding toolkit:
//! witness matrices for bipartite graphs, exact power series of the
//! maximal determinant, and Gram-matrix densities on high-dimensional
//! spheres.

pub mod conjecture;
pub mod graphs;
pub mod linalg;
pub mod maxdet;
pub mod series;
pub mod sphere;
pub mod witness;

pub use graphs::{make_family, Graph};
pub use linalg::SymMatrix;
