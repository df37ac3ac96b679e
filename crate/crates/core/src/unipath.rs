//! Unipath compaction: every maximal chain through vertices with in- and
//! out-degree exactly one becomes a single edge whose label is the
//! concatenation of the chain's labels.
//!
//! Kept vertices are those that branch (indegree or outdegree above one),
//! sources and sinks (so hanging chains keep their ends), and, for each
//! cycle made only of degree-(1,1) vertices, its lowest-id vertex, which then
//! carries a self-loop labeled with the whole cycle.

use crate::debruijn::DeBruijnGraph;
use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, EdgeId, GraphBuilder, VertexId};

#[derive(Clone, Debug)]
pub struct UnipathGraph {
    pub graph: DirectedMultigraph,
    origin: Vec<VertexId>,
    names: Option<Vec<Vec<u8>>>,
    spans: Vec<usize>,
}

impl UnipathGraph {
    /// Vertex id in the graph that was compacted.
    pub fn origin(&self, v: VertexId) -> VertexId {
        self.origin[v.index()]
    }

    pub fn name(&self, v: VertexId) -> Option<&[u8]> {
        self.names.as_ref().map(|n| n[v.index()].as_slice())
    }

    pub fn names(&self) -> Option<&[Vec<u8>]> {
        self.names.as_deref()
    }

    /// Number of original edges folded into `e`.
    pub fn span(&self, e: EdgeId) -> usize {
        self.spans[e.index()]
    }
}

/// Label length of `e`; one character per collapsed de Bruijn edge.
pub fn edge_label_length(g: &UnipathGraph, e: EdgeId) -> Result<usize> {
    Ok(g.graph.try_edge(e)?.label.len())
}

pub fn compact_debruijn(dbg: &DeBruijnGraph) -> UnipathGraph {
    compact(&dbg.graph, Some(dbg.names())).expect("name table matches graph")
}

pub fn compact(g: &DirectedMultigraph, names: Option<&[Vec<u8>]>) -> Result<UnipathGraph> {
    let n = g.vertex_count();
    if let Some(names) = names {
        if names.len() != n {
            return Err(Error::usage(format!(
                "name table has {} entries for {} vertices",
                names.len(),
                n
            )));
        }
    }

    let passthrough = |v: VertexId| g.in_degree(v) == 1 && g.out_degree(v) == 1;
    let mut kept: Vec<bool> = g.vertices().map(|v| !passthrough(v)).collect();

    // chain vertices reachable from a kept vertex
    let mut on_chain = vec![false; n];
    for u in g.vertices().filter(|u| kept[u.index()]) {
        for &first in g.out_targets(u) {
            let mut w = first;
            while !kept[w.index()] && !on_chain[w.index()] {
                on_chain[w.index()] = true;
                w = g.out_targets(w)[0];
            }
        }
    }
    // whatever remains lies on isolated cycles; keep each cycle's minimum
    for v in 0..n {
        if kept[v] || on_chain[v] {
            continue;
        }
        kept[v] = true;
        let mut w = g.out_targets(VertexId::from_index(v))[0];
        while w.index() != v {
            on_chain[w.index()] = true;
            w = g.out_targets(w)[0];
        }
    }

    let mut new_id = vec![u32::MAX; n];
    let mut origin = Vec::new();
    for v in g.vertices().filter(|v| kept[v.index()]) {
        new_id[v.index()] = origin.len() as u32;
        origin.push(v);
    }

    let mut b = GraphBuilder::new(origin.len());
    let mut spans = Vec::new();
    let mut label = Vec::new();
    for &u in &origin {
        for e in g.out_edges(u) {
            label.clear();
            label.extend_from_slice(e.label);
            let mut span = 1;
            let mut w = e.target;
            while !kept[w.index()] {
                let next = g.edge(g.out_edge_ids(w)[0]);
                label.extend_from_slice(next.label);
                span += 1;
                w = next.target;
            }
            b.add_edge(
                VertexId(new_id[u.index()]),
                VertexId(new_id[w.index()]),
                &label,
            )?;
            spans.push(span);
        }
    }

    Ok(UnipathGraph {
        graph: b.build(),
        names: names.map(|names| origin.iter().map(|v| names[v.index()].clone()).collect()),
        origin,
        spans,
    })
}
