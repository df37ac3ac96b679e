//! Assembly graph construction and superbubble enumeration.
//!
//! Reads are turned into a de Bruijn graph over solid k-mers
//! ([`debruijn`]), compacted into a unipath graph ([`unipath`]), and searched
//! for superbubbles ([`superbubble`]). [`oracle`] checks the defining
//! conditions by brute force, [`randgen`] provides test graphs and the
//! branching-process cost model, and [`stats`] summarizes the results.

pub mod debruijn;
pub mod edgelist;
pub mod error;
pub mod fastx;
pub mod graph;
pub mod oracle;
pub mod randgen;
pub mod report;
pub mod stats;
pub mod superbubble;
pub mod unipath;

pub use error::{Error, Result};
pub use graph::{DirectedMultigraph, EdgeId, GraphBuilder, VertexId};
pub use superbubble::{enumerate_superbubbles, Superbubble};
