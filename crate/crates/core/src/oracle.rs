//! Brute-force superbubble checker.
//!
//! Evaluates the four defining conditions of an entrance/exit pair directly
//! with graph searches: reachability, matching, acyclicity and minimality.
//! Nothing here is shared with the fast detector; it exists to be obviously
//! correct on small graphs.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, VertexId};
use crate::superbubble::Superbubble;

/// Default vertex bound for [`enumerate_brute_force`].
pub const DEFAULT_MAX_VERTICES: usize = 16;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Vertices reachable from `start` (following edges in `direction`) without
/// passing through `barrier`: the barrier is included when reached but never
/// expanded.
pub fn reachable_without_passing(
    g: &DirectedMultigraph,
    start: VertexId,
    barrier: VertexId,
    direction: Direction,
) -> Result<BTreeSet<VertexId>> {
    g.check_vertex(start)?;
    g.check_vertex(barrier)?;
    if start == barrier {
        return Err(Error::usage("start and barrier must differ"));
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if v == barrier {
            continue;
        }
        let next = match direction {
            Direction::Forward => g.out_targets(v),
            Direction::Backward => g.in_sources(v),
        };
        for &u in next {
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    Ok(seen)
}

/// Both matching-condition sets for a candidate pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilitySets {
    /// Reachable from `s` without passing through `t`.
    pub to_set: BTreeSet<VertexId>,
    /// Reaching `t` without passing through `s`.
    pub from_set: BTreeSet<VertexId>,
}

pub fn reachability_sets(
    g: &DirectedMultigraph,
    s: VertexId,
    t: VertexId,
) -> Result<ReachabilitySets> {
    Ok(ReachabilitySets {
        to_set: reachable_without_passing(g, s, t, Direction::Forward)?,
        from_set: reachable_without_passing(g, t, s, Direction::Backward)?,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub reachability: bool,
    pub matching: bool,
    pub acyclicity: bool,
    pub minimality: bool,
}

impl Verdict {
    pub fn is_superbubble(&self) -> bool {
        self.reachability && self.matching && self.acyclicity && self.minimality
    }
}

fn reaches(g: &DirectedMultigraph, s: VertexId, t: VertexId) -> bool {
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![s];
    seen[s.index()] = true;
    while let Some(v) = stack.pop() {
        for &u in g.out_targets(v) {
            if u == t {
                return true;
            }
            if !seen[u.index()] {
                seen[u.index()] = true;
                stack.push(u);
            }
        }
    }
    false
}

/// Kahn's algorithm restricted to `set`; self-loops count as cycles.
fn induced_is_acyclic(g: &DirectedMultigraph, set: &BTreeSet<VertexId>) -> bool {
    let mut indeg: Vec<usize> = vec![0; g.vertex_count()];
    for &v in set {
        indeg[v.index()] = g.in_sources(v).iter().filter(|u| set.contains(u)).count();
    }
    let mut ready: Vec<VertexId> = set
        .iter()
        .copied()
        .filter(|v| indeg[v.index()] == 0)
        .collect();
    let mut removed = 0;
    while let Some(v) = ready.pop() {
        removed += 1;
        for &u in g.out_targets(v) {
            if set.contains(&u) {
                indeg[u.index()] -= 1;
                if indeg[u.index()] == 0 {
                    ready.push(u);
                }
            }
        }
    }
    removed == set.len()
}

/// Reachability, matching and acyclicity, plus the set `U`.
fn first_three(
    g: &DirectedMultigraph,
    s: VertexId,
    t: VertexId,
) -> Result<(bool, bool, bool, BTreeSet<VertexId>)> {
    let sets = reachability_sets(g, s, t)?;
    let reachability = reaches(g, s, t);
    let matching = sets.to_set == sets.from_set;
    let acyclicity = induced_is_acyclic(g, &sets.to_set);
    Ok((reachability, matching, acyclicity, sets.to_set))
}

pub fn is_superbubble(g: &DirectedMultigraph, s: VertexId, t: VertexId) -> Result<Verdict> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if s == t {
        return Err(Error::usage("entrance and exit must differ"));
    }
    let (reachability, matching, acyclicity, u) = first_three(g, s, t)?;
    let mut minimality = true;
    for &other in u.iter().filter(|&&x| x != s && x != t) {
        let (r, m, a, _) = first_three(g, s, other)?;
        if r && m && a {
            minimality = false;
            break;
        }
    }
    Ok(Verdict {
        reachability,
        matching,
        acyclicity,
        minimality,
    })
}

pub fn enumerate_brute_force(g: &DirectedMultigraph) -> Result<Vec<Superbubble>> {
    enumerate_brute_force_bounded(g, DEFAULT_MAX_VERTICES)
}

/// Tests every ordered pair; refuses graphs above `max_vertices`.
pub fn enumerate_brute_force_bounded(
    g: &DirectedMultigraph,
    max_vertices: usize,
) -> Result<Vec<Superbubble>> {
    if g.vertex_count() > max_vertices {
        return Err(Error::usage(format!(
            "brute force limited to {max_vertices} vertices, graph has {}",
            g.vertex_count()
        )));
    }
    let mut out = Vec::new();
    for s in g.vertices() {
        for t in g.vertices().filter(|&t| t != s) {
            if is_superbubble(g, s, t)?.is_superbubble() {
                let u = reachable_without_passing(g, s, t, Direction::Forward)?;
                out.push(Superbubble {
                    entrance: s,
                    exit: t,
                    interior: u.into_iter().filter(|&x| x != s && x != t).collect(),
                });
            }
        }
    }
    Ok(out)
}
