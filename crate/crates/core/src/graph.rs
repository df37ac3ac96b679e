//! Directed multigraph over dense integer vertices.
//!
//! Edges keep their insertion order both globally (edge ids) and inside every
//! adjacency list, so iteration is deterministic. Self-loops and parallel
//! edges are allowed. The structure is immutable once built; use
//! [`GraphBuilder`] to construct one.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index, `0 <= id < vertex_count`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        debug_assert!(i <= u32::MAX as usize);
        VertexId(i as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Position of an edge in insertion order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Borrowed view of one edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EdgeRef<'a> {
    pub id: EdgeId,
    pub source: VertexId,
    pub target: VertexId,
    pub label: &'a [u8],
}

#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vertex_count: usize,
    sources: Vec<VertexId>,
    targets: Vec<VertexId>,
    label_offsets: Vec<usize>,
    label_bytes: Vec<u8>,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> Self {
        GraphBuilder {
            vertex_count,
            label_offsets: vec![0],
            ..Default::default()
        }
    }

    pub fn with_capacity(vertex_count: usize, edges: usize) -> Self {
        let mut label_offsets = Vec::with_capacity(edges + 1);
        label_offsets.push(0);
        GraphBuilder {
            vertex_count,
            sources: Vec::with_capacity(edges),
            targets: Vec::with_capacity(edges),
            label_offsets,
            label_bytes: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.vertex_count += 1;
        VertexId::from_index(self.vertex_count - 1)
    }

    pub fn ensure_vertices(&mut self, count: usize) {
        self.vertex_count = self.vertex_count.max(count);
    }

    pub fn add_edge(&mut self, source: VertexId, target: VertexId, label: &[u8]) -> Result<EdgeId> {
        for v in [source, target] {
            if v.index() >= self.vertex_count {
                return Err(Error::usage(format!(
                    "vertex {v} out of range (vertex count {})",
                    self.vertex_count
                )));
            }
        }
        if self.sources.len() >= u32::MAX as usize {
            return Err(Error::usage("too many edges"));
        }
        let id = EdgeId(self.sources.len() as u32);
        self.sources.push(source);
        self.targets.push(target);
        self.label_bytes.extend_from_slice(label);
        self.label_offsets.push(self.label_bytes.len());
        Ok(id)
    }

    pub fn build(self) -> DirectedMultigraph {
        let n = self.vertex_count;
        let m = self.sources.len();

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in 0..m {
            out_offsets[self.sources[e].index() + 1] += 1;
            in_offsets[self.targets[e].index() + 1] += 1;
        }
        for v in 0..n {
            out_offsets[v + 1] += out_offsets[v];
            in_offsets[v + 1] += in_offsets[v];
        }

        let mut out_fill = out_offsets.clone();
        let mut in_fill = in_offsets.clone();
        let mut out_edges = vec![EdgeId(0); m];
        let mut out_targets = vec![VertexId(0); m];
        let mut in_edges = vec![EdgeId(0); m];
        let mut in_sources = vec![VertexId(0); m];
        // Edge ids ascend, so each adjacency list stays in insertion order.
        for e in 0..m {
            let (s, t) = (self.sources[e].index(), self.targets[e].index());
            let slot = out_fill[s];
            out_edges[slot] = EdgeId(e as u32);
            out_targets[slot] = self.targets[e];
            out_fill[s] += 1;
            let slot = in_fill[t];
            in_edges[slot] = EdgeId(e as u32);
            in_sources[slot] = self.sources[e];
            in_fill[t] += 1;
        }

        DirectedMultigraph {
            vertex_count: n,
            sources: self.sources,
            targets: self.targets,
            label_offsets: self.label_offsets,
            label_bytes: self.label_bytes,
            out_offsets,
            out_edges,
            out_targets,
            in_offsets,
            in_edges,
            in_sources,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct DirectedMultigraph {
    vertex_count: usize,
    sources: Vec<VertexId>,
    targets: Vec<VertexId>,
    label_offsets: Vec<usize>,
    label_bytes: Vec<u8>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    out_targets: Vec<VertexId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
    in_sources: Vec<VertexId>,
}

impl fmt::Debug for DirectedMultigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices: {}", self.vertex_count)?;
        for e in self.edges() {
            writeln!(
                f,
                "{} -> {} {}",
                e.source,
                e.target,
                String::from_utf8_lossy(e.label)
            )?;
        }
        Ok(())
    }
}

impl DirectedMultigraph {
    /// Unlabeled graph from `(source, target)` pairs.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut b = GraphBuilder::new(vertex_count);
        for (u, v) in edges {
            b.add_edge(VertexId(u), VertexId(v), b"")?;
        }
        Ok(b.build())
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.sources.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count).map(VertexId::from_index)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.index() < self.vertex_count {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "vertex {v} out of range (vertex count {})",
                self.vertex_count
            )))
        }
    }

    pub fn outdeg(&self, v: VertexId) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self.out_degree(v))
    }

    pub fn indeg(&self, v: VertexId) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self.in_degree(v))
    }

    /// Targets of every outgoing edge of `v`, multiplicity preserved.
    pub fn children(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check_vertex(v)?;
        Ok(self.out_targets(v))
    }

    /// Sources of every incoming edge of `v`, multiplicity preserved.
    pub fn parents(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check_vertex(v)?;
        Ok(self.in_sources(v))
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> Result<bool> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.contains_edge(u, v))
    }

    // Unchecked accessors below panic on an out-of-range vertex, like slice
    // indexing. They back the hot loops.

    #[inline]
    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_offsets[v.index() + 1] - self.out_offsets[v.index()]
    }

    #[inline]
    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_offsets[v.index() + 1] - self.in_offsets[v.index()]
    }

    #[inline]
    pub fn out_targets(&self, v: VertexId) -> &[VertexId] {
        &self.out_targets[self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]]
    }

    /// Every out-adjacency row, concatenated in vertex order.
    #[inline]
    pub fn out_targets_flat(&self) -> &[VertexId] {
        &self.out_targets
    }

    #[inline]
    pub fn in_sources(&self, v: VertexId) -> &[VertexId] {
        &self.in_sources[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn out_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn in_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        if self.out_degree(u) <= self.in_degree(v) {
            self.out_targets(u).contains(&v)
        } else {
            self.in_sources(v).contains(&u)
        }
    }

    pub fn edge(&self, e: EdgeId) -> EdgeRef<'_> {
        let i = e.index();
        EdgeRef {
            id: e,
            source: self.sources[i],
            target: self.targets[i],
            label: &self.label_bytes[self.label_offsets[i]..self.label_offsets[i + 1]],
        }
    }

    pub fn try_edge(&self, e: EdgeId) -> Result<EdgeRef<'_>> {
        if e.index() < self.edge_count() {
            Ok(self.edge(e))
        } else {
            Err(Error::usage(format!(
                "edge {} out of range (edge count {})",
                e.0,
                self.edge_count()
            )))
        }
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        (0..self.edge_count()).map(move |i| self.edge(EdgeId(i as u32)))
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        self.out_edge_ids(v).iter().map(move |&e| self.edge(e))
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        self.in_edge_ids(v).iter().map(move |&e| self.edge(e))
    }

    pub fn is_labeled(&self) -> bool {
        !self.label_bytes.is_empty()
    }

    /// Multiset of `(source, target)` pairs seen from the out-lists, sorted.
    pub fn out_pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut pairs: Vec<_> = self
            .vertices()
            .flat_map(|v| self.out_targets(v).iter().map(move |&t| (v, t)))
            .collect();
        pairs.sort_unstable();
        pairs
    }

    /// Multiset of `(source, target)` pairs seen from the in-lists, sorted.
    pub fn in_pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut pairs: Vec<_> = self
            .vertices()
            .flat_map(|v| self.in_sources(v).iter().map(move |&s| (s, v)))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(u32, u32)]) -> DirectedMultigraph {
        DirectedMultigraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<VertexId> {
        v.iter().map(|&x| VertexId(x)).collect()
    }

    #[test]
    fn outdeg_counts_parallel_edges() {
        let par = g(2, &[(0, 1), (0, 1)]);
        assert_eq!(par.outdeg(VertexId(0)).unwrap(), 2);
        assert_eq!(par.outdeg(VertexId(1)).unwrap(), 0);
        let path = g(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(path.outdeg(VertexId(2)).unwrap(), 1);
    }

    #[test]
    fn children_and_parents() {
        let fork = g(3, &[(0, 1), (0, 2)]);
        assert_eq!(fork.children(VertexId(0)).unwrap(), ids(&[1, 2]).as_slice());
        let par = g(2, &[(0, 1), (0, 1)]);
        assert_eq!(par.children(VertexId(0)).unwrap(), ids(&[1, 1]).as_slice());
        assert_eq!(par.parents(VertexId(1)).unwrap(), ids(&[0, 0]).as_slice());
        assert!(par.parents(VertexId(0)).unwrap().is_empty());
        let lone = g(1, &[]);
        assert!(lone.children(VertexId(0)).unwrap().is_empty());
        let join = g(3, &[(0, 2), (1, 2)]);
        assert_eq!(join.parents(VertexId(2)).unwrap(), ids(&[0, 1]).as_slice());
    }

    #[test]
    fn has_edge_cases() {
        let one = g(2, &[(0, 1)]);
        assert!(one.has_edge(VertexId(0), VertexId(1)).unwrap());
        assert!(!one.has_edge(VertexId(1), VertexId(0)).unwrap());
        let selfloop = g(1, &[(0, 0)]);
        assert!(selfloop.has_edge(VertexId(0), VertexId(0)).unwrap());
    }

    #[test]
    fn invalid_vertex_is_usage_error() {
        let one = g(2, &[(0, 1)]);
        for r in [
            one.outdeg(VertexId(2)).map(|_| ()),
            one.indeg(VertexId(7)).map(|_| ()),
            one.children(VertexId(2)).map(|_| ()),
            one.parents(VertexId(2)).map(|_| ()),
            one.has_edge(VertexId(0), VertexId(2)).map(|_| ()),
        ] {
            assert!(matches!(r, Err(Error::Usage(_))));
        }
        let mut b = GraphBuilder::new(1);
        assert!(matches!(
            b.add_edge(VertexId(0), VertexId(1), b""),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn adjacency_keeps_insertion_order() {
        let mut b = GraphBuilder::new(4);
        b.add_edge(VertexId(2), VertexId(3), b"A").unwrap();
        b.add_edge(VertexId(0), VertexId(3), b"CC").unwrap();
        b.add_edge(VertexId(2), VertexId(1), b"").unwrap();
        b.add_edge(VertexId(2), VertexId(3), b"T").unwrap();
        let gr = b.build();
        assert_eq!(gr.out_targets(VertexId(2)), ids(&[3, 1, 3]).as_slice());
        assert_eq!(gr.in_sources(VertexId(3)), ids(&[2, 0, 2]).as_slice());
        let labels: Vec<_> = gr
            .out_edges(VertexId(2))
            .map(|e| e.label.to_vec())
            .collect();
        assert_eq!(labels, vec![b"A".to_vec(), b"".to_vec(), b"T".to_vec()]);
        assert_eq!(gr.edge(EdgeId(1)).label, b"CC");
        assert!(gr.try_edge(EdgeId(4)).is_err());
    }
}
