//! Shortest paths through the Rips complex of a metric graph.
//!
//! Vertex labels propagate through simplices rather than along edges: a
//! vertex's tentative distance can come from a virtual wavefront source
//! reconstructed from any clique it belongs to, which removes the
//! direction-dependent bias that plain graph search has on meshes.

pub mod bench;
pub mod geometry;
pub mod graph;
pub mod oracle;
pub mod reconstruct;
pub mod rips;
pub mod search;
pub mod through;

pub use geometry::{Embedding, GeometryError, Method};
pub use graph::{GraphError, GraphFormat, MetricGraph, VertexId};
pub use rips::{is_simplex, maximal_simplices, RipsError, Simplex};

// The guide's snippets run as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/realization.md")]
    mod realization {}
    #[doc = include_str!("../../../book/src/through.md")]
    mod through {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
