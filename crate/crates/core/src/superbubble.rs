//! Superbubble enumeration.
//!
//! For every candidate entrance `s` a topological-sort style search grows the
//! region reachable from `s`. A vertex joins the frontier once every one of
//! its parents has been visited. The search stops as soon as the frontier
//! holds a single vertex `t` that is also the only seen-but-unvisited vertex;
//! `t` is then the exit unless an edge `t -> s` closes a cycle. The search
//! gives up when it visits a childless vertex (tip), reaches `s` again
//! (cycle), or runs out of frontier.
//!
//! Each vertex can be the entrance of at most one superbubble, so running the
//! search from every vertex enumerates them all. Runs cost time proportional
//! to the region they explore; per-vertex labels are invalidated between runs
//! with a run stamp instead of being cleared.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Superbubble {
    pub entrance: VertexId,
    pub exit: VertexId,
    /// Sorted ascending.
    pub interior: Vec<VertexId>,
}

impl Superbubble {
    /// Number of vertices including entrance and exit.
    pub fn size(&self) -> usize {
        self.interior.len() + 2
    }

    /// Entrance, interior and exit, ascending by id.
    pub fn vertex_set(&self) -> BTreeSet<VertexId> {
        self.interior
            .iter()
            .copied()
            .chain([self.entrance, self.exit])
            .collect()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v == self.entrance || v == self.exit || self.interior.binary_search(&v).is_ok()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// Visited a vertex with no children.
    Tip,
    /// Reached the entrance again.
    Cycle,
    /// Frontier emptied before an exit showed up.
    FrontierExhausted,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ExitSearch {
    Found(VertexId),
    NotFound(AbortReason),
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortCounts {
    pub tip: u64,
    pub cycle: u64,
    pub frontier_exhausted: u64,
}

impl AbortCounts {
    fn record(&mut self, reason: AbortReason) {
        match reason {
            AbortReason::Tip => self.tip += 1,
            AbortReason::Cycle => self.cycle += 1,
            AbortReason::FrontierExhausted => self.frontier_exhausted += 1,
        }
    }

    fn add(&mut self, other: &AbortCounts) {
        self.tip += other.tip;
        self.cycle += other.cycle;
        self.frontier_exhausted += other.frontier_exhausted;
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u32)]
enum Mark {
    Unlabeled = 0,
    Seen = 1,
    Visited = 2,
}

const MARK_BITS: u32 = 2;
const MARK_MASK: u32 = (1 << MARK_BITS) - 1;
const MAX_RUN: u32 = u32::MAX >> MARK_BITS;

/// Everything a search reads about one vertex, in 16 bytes, so touching a
/// child costs one cache line.
#[derive(Copy, Clone, Debug)]
struct Slot {
    /// `run << MARK_BITS | mark`; mark and `parent_edges` are stale unless the
    /// run matches the current one.
    tag: u32,
    in_degree: u32,
    /// Visited in-edges so far; parallel edges count individually.
    parent_edges: u32,
    /// Start of the vertex's row in the flat out-adjacency array.
    out_begin: u32,
}

impl Slot {
    #[inline]
    fn mark(&self) -> Mark {
        match self.tag & MARK_MASK {
            0 => Mark::Unlabeled,
            1 => Mark::Seen,
            _ => Mark::Visited,
        }
    }

    #[inline]
    fn set_mark(&mut self, m: Mark) {
        self.tag = (self.tag & !MARK_MASK) | m as u32;
    }
}

/// Reusable per-worker scratch space for exit searches, bound to the graph
/// it was created for.
#[derive(Clone, Debug)]
pub struct DetectionState {
    /// One slot per vertex plus a sentinel closing the last row.
    slots: Vec<Slot>,
    run: u32,
    frontier: BinaryHeap<Reverse<VertexId>>,
    seen_pending: usize,
    visited: Vec<VertexId>,
    pushes: usize,
    total_visited: u64,
    check_invariants: bool,
}

impl DetectionState {
    pub fn new(g: &DirectedMultigraph) -> Self {
        let mut slots = Vec::with_capacity(g.vertex_count() + 1);
        let mut begin = 0u32;
        for v in g.vertices() {
            slots.push(Slot {
                tag: 0,
                in_degree: g.in_degree(v) as u32,
                parent_edges: 0,
                out_begin: begin,
            });
            begin += g.out_degree(v) as u32;
        }
        slots.push(Slot {
            tag: 0,
            in_degree: 0,
            parent_edges: 0,
            out_begin: begin,
        });
        DetectionState {
            slots,
            run: 0,
            frontier: BinaryHeap::new(),
            seen_pending: 0,
            visited: Vec::new(),
            pushes: 0,
            total_visited: 0,
            check_invariants: false,
        }
    }

    /// Verify the search invariants after every visit (slow; for testing).
    pub fn with_invariant_checks(mut self, on: bool) -> Self {
        self.check_invariants = on;
        self
    }

    /// Vertices visited over every run so far.
    pub fn total_visited(&self) -> u64 {
        self.total_visited
    }

    /// Vertices visited by the most recent run, in visiting order.
    pub fn visited_this_run(&self) -> &[VertexId] {
        &self.visited
    }

    /// Frontier insertions during the most recent run.
    pub fn pushes_this_run(&self) -> usize {
        self.pushes
    }

    fn vertex_count(&self) -> usize {
        self.slots.len() - 1
    }

    fn begin_run(&mut self) {
        if self.run == MAX_RUN {
            for slot in &mut self.slots {
                slot.tag = 0;
            }
            self.run = 0;
        }
        self.run += 1;
        self.frontier.clear();
        self.visited.clear();
        self.seen_pending = 0;
        self.pushes = 0;
    }

    #[inline]
    fn mark_of(&self, v: VertexId) -> Mark {
        let slot = &self.slots[v.index()];
        if slot.tag >> MARK_BITS == self.run {
            slot.mark()
        } else {
            Mark::Unlabeled
        }
    }

    #[inline]
    fn touch(&mut self, v: VertexId) -> &mut Slot {
        let run = self.run;
        let slot = &mut self.slots[v.index()];
        if slot.tag >> MARK_BITS != run {
            slot.tag = run << MARK_BITS;
            slot.parent_edges = 0;
        }
        slot
    }

    #[inline]
    fn children<'g>(&self, g: &'g DirectedMultigraph, v: VertexId) -> &'g [VertexId] {
        let i = v.index();
        &g.out_targets_flat()
            [self.slots[i].out_begin as usize..self.slots[i + 1].out_begin as usize]
    }
}

/// Non-binding cache prefetch of the line holding `x`.
#[inline(always)]
fn prefetch<T>(x: &T) {
    #[cfg(target_arch = "x86_64")]
    {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        // SAFETY: prefetching is a hint and never faults; sse is baseline on x86_64.
        unsafe { _mm_prefetch::<_MM_HINT_T0>((x as *const T).cast::<i8>()) };
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = x;
}

/// Prefetch pipeline over upcoming entrances: at distance `FAR` their
/// children's slots, at `MID` the children's adjacency rows, at `NEAR` the
/// slots of grandchildren reached through children of indegree one, the only
/// children a search can visit next.
const PREFETCH_FAR: usize = 24;
const PREFETCH_MID: usize = 12;
const PREFETCH_NEAR: usize = 6;

impl DetectionState {
    #[inline]
    fn prefetch_far(&self, g: &DirectedMultigraph, v: VertexId) {
        for &u in self.children(g, v) {
            prefetch(&self.slots[u.index()]);
        }
    }

    #[inline]
    fn prefetch_mid(&self, g: &DirectedMultigraph, v: VertexId) {
        let flat = g.out_targets_flat();
        for &u in self.children(g, v) {
            if let Some(x) = flat.get(self.slots[u.index()].out_begin as usize) {
                prefetch(x);
            }
        }
    }

    #[inline]
    fn prefetch_near(&self, g: &DirectedMultigraph, v: VertexId) {
        for &u in self.children(g, v) {
            if self.slots[u.index()].in_degree == 1 {
                for &w in self.children(g, u) {
                    prefetch(&self.slots[w.index()]);
                }
            }
        }
    }

    fn prefetch_ahead(&self, g: &DirectedMultigraph, i: usize, end: usize) {
        if i + PREFETCH_FAR < end {
            self.prefetch_far(g, VertexId::from_index(i + PREFETCH_FAR));
        }
        if i + PREFETCH_MID < end {
            self.prefetch_mid(g, VertexId::from_index(i + PREFETCH_MID));
        }
        if i + PREFETCH_NEAR < end {
            self.prefetch_near(g, VertexId::from_index(i + PREFETCH_NEAR));
        }
    }
}

/// Number of vertices visited across all runs made with `state`.
pub fn visited_count(state: &DetectionState) -> u64 {
    state.total_visited()
}

/// Looks for the exit matching entrance `s`.
///
/// The next vertex taken from the frontier is always the one with the smallest
/// id, which makes runs reproducible.
pub fn find_exit(
    g: &DirectedMultigraph,
    s: VertexId,
    state: &mut DetectionState,
) -> Result<ExitSearch> {
    g.check_vertex(s)?;
    if state.vertex_count() != g.vertex_count()
        || state.slots[g.vertex_count()].out_begin as usize != g.edge_count()
    {
        return Err(Error::usage(format!(
            "detection state sized for {} vertices, graph has {}",
            state.vertex_count(),
            g.vertex_count()
        )));
    }
    state.begin_run();
    state.touch(s);
    state.frontier.push(Reverse(s));
    state.pushes += 1;

    while let Some(Reverse(v)) = state.frontier.pop() {
        let slot = state.touch(v);
        let was_seen = slot.mark() == Mark::Seen;
        slot.set_mark(Mark::Visited);
        if was_seen {
            state.seen_pending -= 1;
        }
        state.visited.push(v);
        state.total_visited += 1;

        let children = state.children(g, v);
        if children.is_empty() {
            return Ok(ExitSearch::NotFound(AbortReason::Tip));
        }
        for &u in children {
            if u == s {
                return Ok(ExitSearch::NotFound(AbortReason::Cycle));
            }
            let slot = state.touch(u);
            match slot.mark() {
                Mark::Unlabeled => {
                    slot.set_mark(Mark::Seen);
                    state.seen_pending += 1;
                }
                Mark::Seen => {}
                // Only `s` can be a visited child; handled above.
                Mark::Visited => {
                    return Err(Error::invariant(format!(
                        "child {u} of {v} already visited in run from {s}"
                    )))
                }
            }
            let slot = &mut state.slots[u.index()];
            slot.parent_edges += 1;
            if slot.parent_edges == slot.in_degree {
                state.frontier.push(Reverse(u));
                state.pushes += 1;
            }
        }

        if state.check_invariants {
            check_search_invariants(g, s, state)?;
        }

        if state.frontier.len() == 1 && state.seen_pending == 1 {
            let Reverse(t) = *state.frontier.peek().expect("frontier has one vertex");
            return Ok(if g.contains_edge(t, s) {
                ExitSearch::NotFound(AbortReason::Cycle)
            } else {
                ExitSearch::Found(t)
            });
        }
    }
    Ok(ExitSearch::NotFound(AbortReason::FrontierExhausted))
}

/// Checks, against plain graph searches, that
/// * the vertices reachable from `s` without passing through a seen vertex
///   are exactly the visited and seen ones, and
/// * the vertices that reach a visited or frontier vertex without passing
///   through `s` are exactly the visited and frontier ones,
///
/// plus the bookkeeping identities of the state.
fn check_search_invariants(
    g: &DirectedMultigraph,
    s: VertexId,
    state: &DetectionState,
) -> Result<()> {
    let n = g.vertex_count();
    let mark = |v: VertexId| state.mark_of(v);
    let in_frontier: BTreeSet<VertexId> = state.frontier.iter().map(|r| r.0).collect();

    let seen: BTreeSet<VertexId> = g.vertices().filter(|&v| mark(v) == Mark::Seen).collect();
    if seen.len() != state.seen_pending {
        return Err(Error::invariant("seen counter out of sync"));
    }
    if !in_frontier.is_subset(&seen) {
        return Err(Error::invariant("frontier vertex not labeled seen"));
    }

    // forward: expand only non-seen vertices
    let mut reach_to = vec![false; n];
    let mut queue = VecDeque::from([s]);
    reach_to[s.index()] = true;
    while let Some(v) = queue.pop_front() {
        if mark(v) == Mark::Seen {
            continue;
        }
        for &u in g.out_targets(v) {
            if !reach_to[u.index()] {
                reach_to[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    for v in g.vertices() {
        if reach_to[v.index()] != (mark(v) != Mark::Unlabeled) {
            return Err(Error::invariant(format!(
                "forward region mismatch at {v} in run from {s}"
            )));
        }
    }

    // backward from visited ∪ frontier, never expanding s
    let mut reach_from = vec![false; n];
    let mut queue: VecDeque<VertexId> = g
        .vertices()
        .filter(|v| mark(*v) == Mark::Visited || in_frontier.contains(v))
        .collect();
    for v in &queue {
        reach_from[v.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        if v == s {
            continue;
        }
        for &u in g.in_sources(v) {
            if !reach_from[u.index()] {
                reach_from[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    for v in g.vertices() {
        let expected = mark(v) == Mark::Visited || in_frontier.contains(&v);
        if reach_from[v.index()] != expected {
            return Err(Error::invariant(format!(
                "backward region mismatch at {v} in run from {s}"
            )));
        }
    }
    Ok(())
}

/// Runs [`find_exit`] from `s` and materializes the superbubble on success.
pub fn superbubble_from(
    g: &DirectedMultigraph,
    s: VertexId,
    state: &mut DetectionState,
) -> Result<std::result::Result<Superbubble, AbortReason>> {
    Ok(match find_exit(g, s, state)? {
        ExitSearch::Found(t) => {
            let mut interior: Vec<VertexId> =
                state.visited.iter().copied().filter(|&v| v != s).collect();
            interior.sort_unstable();
            Ok(Superbubble {
                entrance: s,
                exit: t,
                interior,
            })
        }
        ExitSearch::NotFound(reason) => Err(reason),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    /// Sorted by entrance.
    pub bubbles: Vec<Superbubble>,
    pub visited_total: u64,
    pub aborts: AbortCounts,
}

#[derive(Clone, Debug, Default)]
pub struct DetectOptions {
    pub check_invariants: bool,
    /// Entrances per parallel work unit; 0 picks a default.
    pub chunk_size: usize,
}

/// Enumerates every superbubble with a single worker.
pub fn enumerate_superbubbles(g: &DirectedMultigraph) -> Enumeration {
    enumerate_with(g, &DetectOptions::default()).expect("no invariant checks requested")
}

pub fn enumerate_with(g: &DirectedMultigraph, opts: &DetectOptions) -> Result<Enumeration> {
    let mut state = DetectionState::new(g).with_invariant_checks(opts.check_invariants);
    enumerate_range(g, 0..g.vertex_count(), &mut state)
}

fn enumerate_range(
    g: &DirectedMultigraph,
    range: std::ops::Range<usize>,
    state: &mut DetectionState,
) -> Result<Enumeration> {
    let before = state.total_visited;
    let mut out = Enumeration::default();
    let end = range.end;
    for i in range {
        state.prefetch_ahead(g, i, end);
        match superbubble_from(g, VertexId::from_index(i), state)? {
            Ok(sb) => out.bubbles.push(sb),
            Err(reason) => out.aborts.record(reason),
        }
    }
    out.visited_total = state.total_visited - before;
    Ok(out)
}

/// Parallel enumeration on the current rayon pool. Output is identical to
/// [`enumerate_with`] for any worker count.
pub fn enumerate_parallel(g: &DirectedMultigraph, opts: &DetectOptions) -> Result<Enumeration> {
    let n = g.vertex_count();
    let chunk = if opts.chunk_size == 0 {
        1 << 14
    } else {
        opts.chunk_size
    };
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(chunk)
        .map(|lo| lo..(lo + chunk).min(n))
        .collect();
    let parts: Vec<Result<Enumeration>> = chunks
        .into_par_iter()
        .map_init(
            || DetectionState::new(g).with_invariant_checks(opts.check_invariants),
            |state, range| enumerate_range(g, range, state),
        )
        .collect();

    let mut out = Enumeration::default();
    for part in parts {
        let part = part?;
        out.bubbles.extend(part.bubbles);
        out.visited_total += part.visited_total;
        out.aborts.add(&part.aborts);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(u32, u32)]) -> DirectedMultigraph {
        DirectedMultigraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    fn v(x: u32) -> VertexId {
        VertexId(x)
    }

    fn sb(s: u32, t: u32, interior: &[u32]) -> Superbubble {
        Superbubble {
            entrance: v(s),
            exit: v(t),
            interior: interior.iter().map(|&x| v(x)).collect(),
        }
    }

    // s=0, a=1, b=2, t=3
    fn bubble() -> DirectedMultigraph {
        g(4, &[(0, 1), (0, 2), (1, 3), (2, 3)])
    }

    #[test]
    fn simple_bubble_exit() {
        let gr = bubble();
        let mut st = DetectionState::new(&gr).with_invariant_checks(true);
        assert_eq!(
            find_exit(&gr, v(0), &mut st).unwrap(),
            ExitSearch::Found(v(3))
        );
        let found = superbubble_from(&gr, v(0), &mut st).unwrap().unwrap();
        assert_eq!(found, sb(0, 3, &[1, 2]));
    }

    #[test]
    fn two_cycle_and_tip() {
        let cyc = g(2, &[(0, 1), (1, 0)]);
        let mut st = DetectionState::new(&cyc);
        assert_eq!(
            find_exit(&cyc, v(0), &mut st).unwrap(),
            ExitSearch::NotFound(AbortReason::Cycle)
        );
        let tip = g(2, &[(0, 1)]);
        let mut st = DetectionState::new(&tip);
        // 0 -> 1 alone is a single-edge pair; the tip shows when starting at the sink
        assert_eq!(
            find_exit(&tip, v(1), &mut st).unwrap(),
            ExitSearch::NotFound(AbortReason::Tip)
        );
        // s -> a (childless) and s -> b -> t: a is visited first and is a tip
        let gr = g(4, &[(0, 1), (0, 2), (2, 3)]);
        let mut st = DetectionState::new(&gr);
        assert_eq!(
            find_exit(&gr, v(0), &mut st).unwrap(),
            ExitSearch::NotFound(AbortReason::Tip)
        );
    }

    #[test]
    fn exit_with_back_edge_is_cycle() {
        // 0 -> {1,2} -> 3 -> 0
        let gr = g(4, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 0)]);
        let mut st = DetectionState::new(&gr).with_invariant_checks(true);
        assert_eq!(
            find_exit(&gr, v(0), &mut st).unwrap(),
            ExitSearch::NotFound(AbortReason::Cycle)
        );
    }

    #[test]
    fn frontier_exhaustion() {
        // 0 -> 1, 2 -> 1: vertex 1 never has all parents visited
        let gr = g(3, &[(0, 1), (2, 1)]);
        let mut st = DetectionState::new(&gr);
        assert_eq!(
            find_exit(&gr, v(0), &mut st).unwrap(),
            ExitSearch::NotFound(AbortReason::FrontierExhausted)
        );
    }

    #[test]
    fn invalid_entrance() {
        let gr = bubble();
        let mut st = DetectionState::new(&gr);
        assert!(matches!(
            find_exit(&gr, v(4), &mut st),
            Err(Error::Usage(_))
        ));
        let mut wrong = DetectionState::new(&g(3, &[]));
        assert!(matches!(
            find_exit(&gr, v(0), &mut wrong),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn enumerate_empty_and_bubble() {
        let empty = g(0, &[]);
        let e = enumerate_superbubbles(&empty);
        assert!(e.bubbles.is_empty());
        assert_eq!(e.visited_total, 0);

        let e = enumerate_superbubbles(&bubble());
        assert_eq!(e.bubbles, vec![sb(0, 3, &[1, 2])]);
    }

    #[test]
    fn visited_count_matches_hand_trace() {
        // s=0: visit 0 (S={1,2}), visit 1, visit 2 -> S={3}, return. 3 visits.
        // a=1: visit 1 -> S={}, seen {3}; 3 has parent 2 unvisited -> exhausted. 1 visit.
        // b=2: same as a. 1 visit.
        // t=3: visit 3, no children -> tip. 1 visit.
        let gr = bubble();
        let mut st = DetectionState::new(&gr);
        for s in 0..4 {
            find_exit(&gr, v(s), &mut st).unwrap();
        }
        assert_eq!(visited_count(&st), 6);
        assert_eq!(enumerate_superbubbles(&gr).visited_total, 6);
    }

    #[test]
    fn chained_bubbles_share_middle_vertex() {
        // s=0 -> {1,2} -> m=3 -> {4,5} -> t=6
        let gr = g(
            7,
            &[
                (0, 1),
                (0, 2),
                (1, 3),
                (2, 3),
                (3, 4),
                (3, 5),
                (4, 6),
                (5, 6),
            ],
        );
        let e = enumerate_superbubbles(&gr);
        assert_eq!(e.bubbles, vec![sb(0, 3, &[1, 2]), sb(3, 6, &[4, 5])]);
    }

    #[test]
    fn tree_has_no_superbubbles() {
        let gr = g(7, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]);
        assert!(enumerate_superbubbles(&gr).bubbles.is_empty());
    }

    #[test]
    fn single_edge_and_parallel_edges() {
        // 0 -> 1 single edge: entrance 0, exit 1, empty interior
        let e = enumerate_superbubbles(&g(2, &[(0, 1)]));
        assert_eq!(e.bubbles, vec![sb(0, 1, &[])]);
        // parallel edges form an ordinary bubble of size 2
        let e = enumerate_superbubbles(&g(2, &[(0, 1), (0, 1)]));
        assert_eq!(e.bubbles, vec![sb(0, 1, &[])]);
        assert_eq!(e.bubbles[0].size(), 2);
        // self-loop on the candidate exit kills it
        let e = enumerate_superbubbles(&g(2, &[(0, 1), (1, 1)]));
        assert!(e.bubbles.is_empty());
    }

    #[test]
    fn parallel_matches_sequential() {
        let gr = g(
            7,
            &[
                (0, 1),
                (0, 2),
                (1, 3),
                (2, 3),
                (3, 4),
                (3, 5),
                (4, 6),
                (5, 6),
            ],
        );
        let seq = enumerate_superbubbles(&gr);
        let opts = DetectOptions {
            check_invariants: true,
            chunk_size: 2,
        };
        assert_eq!(enumerate_parallel(&gr, &opts).unwrap(), seq);
    }
}
