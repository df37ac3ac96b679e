//! Random graph generators and the branching-process cost model.
//!
//! The cost of one exit search away from any superbubble is modeled as a
//! Galton-Watson tree: every node is "good" (indegree one) with probability
//! `p`, and a good node has `i` children with probability `p_i`. With
//! `r = p * sum(i * p_i) < 1` the expected tree size is `1 / (1 - r)`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, GraphBuilder, VertexId};
use crate::oracle;
use crate::superbubble::Superbubble;

const PROB_TOLERANCE: f64 = 1e-9;

/// Largest child count drawn by the graph generators.
pub const MAX_GENERATED_CHILDREN: usize = 8;

/// Default cap on simulated tree size.
pub const DEFAULT_MAX_NODES: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingModel {
    p: f64,
    /// `child_dist[i]` is the probability of `i` children.
    child_dist: Vec<f64>,
    r: f64,
}

impl BranchingModel {
    pub fn new(p: f64, child_dist: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::usage(format!("p must lie in [0, 1], got {p}")));
        }
        if child_dist
            .iter()
            .any(|&x| !(0.0..=1.0).contains(&x) || x.is_nan())
        {
            return Err(Error::usage("child probabilities must lie in [0, 1]"));
        }
        let total: f64 = child_dist.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::usage(format!(
                "child probabilities sum to {total}, expected 1"
            )));
        }
        let r = offspring_mean(p, &child_dist);
        Ok(BranchingModel { p, child_dist, r })
    }

    /// Parses a `"i:p_i,..."` child distribution.
    pub fn with_dist_str(p: f64, dist: &str) -> Result<Self> {
        Self::new(p, parse_child_dist(dist)?)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn child_dist(&self) -> &[f64] {
        &self.child_dist
    }

    /// Mean offspring per node.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Re-checks the invariants, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        let fresh = BranchingModel::new(self.p, self.child_dist.clone())?;
        if (fresh.r - self.r).abs() > PROB_TOLERANCE {
            return Err(Error::usage(format!(
                "stored r {} disagrees with recomputed {}",
                self.r, fresh.r
            )));
        }
        Ok(())
    }

    fn sample_children<R: Rng>(&self, rng: &mut R, cumulative: &[f64]) -> u64 {
        if !rng.gen_bool(self.p) {
            return 0;
        }
        let u: f64 = rng.gen();
        match cumulative.iter().position(|&c| u < c) {
            Some(i) => i as u64,
            // rounding left u above the last cumulative value
            None => self.child_dist.iter().rposition(|&x| x > 0.0).unwrap_or(0) as u64,
        }
    }

    fn cumulative(&self) -> Vec<f64> {
        self.child_dist
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }
}

fn offspring_mean(p: f64, child_dist: &[f64]) -> f64 {
    p * child_dist
        .iter()
        .enumerate()
        .map(|(i, &pi)| i as f64 * pi)
        .sum::<f64>()
}

pub fn parse_child_dist(spec: &str) -> Result<Vec<f64>> {
    let mut dist: Vec<f64> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (i, p) = item
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("expected i:p, got {item:?}")))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("bad child count {i:?}")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("bad probability {p:?}")))?;
        if i > 1024 {
            return Err(Error::usage(format!("child count {i} too large")));
        }
        if dist.len() <= i {
            dist.resize(i + 1, 0.0);
        }
        dist[i] += p;
    }
    if dist.is_empty() {
        return Err(Error::usage("empty child distribution"));
    }
    Ok(dist)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeSize {
    Finite(u64),
    Truncated,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExpectedSize {
    Finite(f64),
    Infinite,
}

pub fn expected_tree_size(model: &BranchingModel) -> ExpectedSize {
    if model.r < 1.0 {
        ExpectedSize::Finite(1.0 / (1.0 - model.r))
    } else {
        ExpectedSize::Infinite
    }
}

/// Grows one tree from `seed`; gives up past `max_nodes` nodes.
pub fn simulate_gw_tree(model: &BranchingModel, seed: u64, max_nodes: u64) -> Result<TreeSize> {
    model.validate()?;
    if max_nodes < 1 {
        return Err(Error::usage("max_nodes must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(grow_tree(model, &model.cumulative(), &mut rng, max_nodes))
}

fn grow_tree<R: Rng>(
    model: &BranchingModel,
    cumulative: &[f64],
    rng: &mut R,
    max_nodes: u64,
) -> TreeSize {
    let mut pending: u64 = 1;
    let mut size: u64 = 0;
    while pending > 0 {
        pending -= 1;
        size += 1;
        if size > max_nodes {
            return TreeSize::Truncated;
        }
        pending += model.sample_children(rng, cumulative);
    }
    TreeSize::Finite(size)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwSummary {
    pub trials: u64,
    pub truncated: u64,
    /// Over the non-truncated trials.
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub r: f64,
    pub expected: ExpectedSize,
}

/// Monte-Carlo over `trials` independent trees. Trial `i` draws from stream
/// `i` of a generator keyed by `seed`, and sums are kept in integers, so the
/// result is the same for every pool size.
pub fn run_gw_trials(
    model: &BranchingModel,
    trials: u64,
    seed: u64,
    max_nodes: u64,
) -> Result<GwSummary> {
    model.validate()?;
    if max_nodes < 1 {
        return Err(Error::usage("max_nodes must be at least 1"));
    }
    if trials == 0 {
        return Err(Error::usage("need at least one trial"));
    }
    let cumulative = model.cumulative();
    let (count, sum, sum_sq, truncated) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            match grow_tree(model, &cumulative, &mut rng, max_nodes) {
                TreeSize::Finite(n) => (1u64, n as u128, (n as u128) * (n as u128), 0u64),
                TreeSize::Truncated => (0, 0, 0, 1),
            }
        })
        .reduce(
            || (0, 0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
        );
    let (mean, variance) = if count == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mean = sum as f64 / count as f64;
        let variance = if count > 1 {
            // exact integer numerator: n*sum_sq - sum^2
            let num = count as u128 * sum_sq - sum * sum;
            num as f64 / (count as f64 * (count - 1) as f64)
        } else {
            0.0
        };
        (mean, variance)
    };
    Ok(GwSummary {
        trials,
        truncated,
        mean,
        variance,
        standard_error: (variance / count as f64).sqrt(),
        r: model.r,
        expected: expected_tree_size(model),
    })
}

/// `p` is the share of vertices with indegree one and `p_i` the share with
/// outdegree `i`, both over all vertices.
pub fn estimate_model_from_graph(g: &DirectedMultigraph) -> Result<BranchingModel> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::usage("cannot estimate a model from an empty graph"));
    }
    let indeg_one = g.vertices().filter(|&v| g.in_degree(v) == 1).count();
    let max_out = g.vertices().map(|v| g.out_degree(v)).max().unwrap_or(0);
    let mut counts = vec![0usize; max_out + 1];
    for v in g.vertices() {
        counts[g.out_degree(v)] += 1;
    }
    let p = indeg_one as f64 / n as f64;
    let mut dist: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    // absorb float dust so the distribution sums to one
    let drift = 1.0 - dist.iter().sum::<f64>();
    if let Some(last) = dist.iter_mut().rev().find(|x| **x > 0.0) {
        *last += drift;
    }
    BranchingModel::new(p, dist)
}

/// `edges` uniformly random edges over `n` vertices; self-loops and parallel
/// edges occur naturally. With probability `forward_bias` an edge is
/// oriented from the lower to the higher id, which makes superbubbles common.
pub fn random_multigraph(
    n: usize,
    edges: usize,
    forward_bias: f64,
    seed: u64,
) -> DirectedMultigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::with_capacity(n, edges);
    if n > 0 {
        for _ in 0..edges {
            let mut u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n);
            if u > v && rng.gen_bool(forward_bias.clamp(0.0, 1.0)) {
                std::mem::swap(&mut u, &mut v);
            }
            b.add_edge(VertexId::from_index(u), VertexId::from_index(v), b"")
                .expect("ids in range");
        }
    }
    b.build()
}

/// Every vertex draws its outdegree from `out_dist` (capped at
/// [`MAX_GENERATED_CHILDREN`]) and picks uniformly random targets.
pub fn random_out_degree_graph(
    n: usize,
    out_dist: &[f64],
    seed: u64,
) -> Result<DirectedMultigraph> {
    let dist = &out_dist[..out_dist.len().min(MAX_GENERATED_CHILDREN + 1)];
    let model = BranchingModel::new(1.0, dist.to_vec())?;
    let cumulative = model.cumulative();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::with_capacity(n, n * 2);
    if n > 0 {
        for u in 0..n {
            let d = model.sample_children(&mut rng, &cumulative);
            for _ in 0..d {
                let v = rng.gen_range(0..n);
                b.add_edge(VertexId::from_index(u), VertexId::from_index(v), b"")?;
            }
        }
    }
    Ok(b.build())
}

/// One planted region. Local vertex 0 is the entrance and `size - 1` the exit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantedBubble {
    pub size: usize,
    /// Probability of each optional forward edge in a random interior DAG.
    #[serde(default = "default_edge_prob")]
    pub edge_prob: f64,
    /// Share the entrance with the previous bubble's exit.
    #[serde(default)]
    pub chain_to_previous: bool,
    /// Fixed interior DAG over local ids instead of a random one.
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
}

fn default_edge_prob() -> f64 {
    0.25
}

fn default_parent_range() -> (usize, usize) {
    (2, 3)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Background(usize),
    Planted { bubble: usize, vertex: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedGraphSpec {
    pub background_vertices: usize,
    /// Inclusive range of distinct parents per background vertex; min >= 2.
    #[serde(default = "default_parent_range")]
    pub background_parents: (usize, usize),
    #[serde(default)]
    pub planted: Vec<PlantedBubble>,
    /// Additional edges; must not touch interiors or open up a region.
    #[serde(default)]
    pub extra_edges: Vec<(Endpoint, Endpoint)>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PlantedGraph {
    pub graph: DirectedMultigraph,
    /// Every superbubble of `graph`, sorted by entrance.
    pub truth: Vec<Superbubble>,
    /// `(entrance, exit)` of each requested bubble, in spec order.
    pub planted: Vec<(VertexId, VertexId)>,
}

/// Builds a graph with known superbubbles.
///
/// Every background vertex and every region entrance gets at least two
/// distinct parents, none of them inside a region, and edges leave a region
/// only from its exit. An exit search starting outside a region then stops
/// after its first step, and one starting inside never leaves the region, so
/// the superbubbles of the whole graph are exactly those of the isolated
/// regions, which are computed with the brute-force oracle.
pub fn generate_planted_graph(spec: &PlantedGraphSpec) -> Result<PlantedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (pmin, pmax) = spec.background_parents;
    if pmin < 2 || pmax < pmin {
        return Err(Error::usage(
            "background_parents must satisfy 2 <= min <= max",
        ));
    }

    // Regions: maximal runs of chained bubbles.
    let mut regions: Vec<Vec<usize>> = Vec::new();
    for (i, pb) in spec.planted.iter().enumerate() {
        if pb.size < 2 {
            return Err(Error::usage(format!("bubble {i}: size must be at least 2")));
        }
        if pb.chain_to_previous && i > 0 {
            regions.last_mut().expect("previous bubble").push(i);
        } else {
            regions.push(vec![i]);
        }
    }

    // Local layout: ids [0, region_size) per region, bubbles laid out in order.
    let mut region_edges: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut region_sizes: Vec<usize> = Vec::new();
    // (region, local id) of every bubble vertex
    let mut bubble_local: Vec<Vec<(usize, usize)>> = vec![Vec::new(); spec.planted.len()];
    for (ri, members) in regions.iter().enumerate() {
        let mut edges = Vec::new();
        let mut next_local = 0usize;
        let mut entrance = 0usize;
        for &bi in members {
            let pb = &spec.planted[bi];
            let dag = match &pb.edges {
                Some(e) => validate_explicit_dag(bi, pb.size, e)?,
                None => random_bubble_dag(pb.size, pb.edge_prob, &mut rng)?,
            };
            // local k of bubble -> region id
            let base = if next_local == 0 { 0 } else { next_local - 1 };
            let map = |k: usize| if k == 0 { entrance } else { base + k };
            for (a, b) in dag {
                edges.push((map(a), map(b)));
            }
            bubble_local[bi] = (0..pb.size).map(|k| (ri, map(k))).collect();
            next_local = base + pb.size;
            entrance = base + pb.size - 1;
        }
        region_edges.push(edges);
        region_sizes.push(next_local);
    }

    // Global numbering before shuffling: regions first, then background.
    let mut region_base = Vec::with_capacity(regions.len());
    let mut total = 0usize;
    for &sz in &region_sizes {
        region_base.push(total);
        total += sz;
    }
    let bg_base = total;
    let n = total + spec.background_vertices;

    let entrances: Vec<usize> = region_base.clone();
    let exits: Vec<usize> = region_base
        .iter()
        .zip(&region_sizes)
        .map(|(&b, &s)| b + s - 1)
        .collect();

    let bg = spec.background_vertices;
    if bg > 0 && !regions.is_empty() && bg < pmin {
        return Err(Error::usage(format!(
            "background of {bg} vertices cannot give entrances {pmin} distinct parents"
        )));
    }
    if bg > 0 && bg - 1 + exits.len() < pmin {
        return Err(Error::usage(format!(
            "background of {bg} vertices cannot give each vertex {pmin} distinct parents"
        )));
    }

    let resolve = |ep: &Endpoint| -> Result<usize> {
        match *ep {
            Endpoint::Background(i) if i < bg => Ok(bg_base + i),
            Endpoint::Background(i) => {
                Err(Error::usage(format!("background vertex {i} out of range")))
            }
            Endpoint::Planted { bubble, vertex } => {
                let locals = bubble_local
                    .get(bubble)
                    .ok_or_else(|| Error::usage(format!("no planted bubble {bubble}")))?;
                let &(ri, local) = locals.get(vertex).ok_or_else(|| {
                    Error::usage(format!("bubble {bubble} has no vertex {vertex}"))
                })?;
                Ok(region_base[ri] + local)
            }
        }
    };
    let region_of = |v: usize| -> Option<usize> {
        (v < bg_base).then(|| region_base.partition_point(|&b| b <= v) - 1)
    };

    let mut global_edges: Vec<(usize, usize)> = Vec::new();
    for (ri, edges) in region_edges.iter().enumerate() {
        global_edges.extend(
            edges
                .iter()
                .map(|&(a, b)| (region_base[ri] + a, region_base[ri] + b)),
        );
    }

    if bg > 0 {
        let mut pool: Vec<usize> = (bg_base..n).chain(exits.iter().copied()).collect();
        let mut exit_has_child = vec![false; exits.len()];
        for y in bg_base..n {
            let want = rng.gen_range(pmin..=pmax).min(pool.len() - 1);
            let mut parents = BTreeSet::new();
            while parents.len() < want {
                let x = *pool.choose(&mut rng).expect("non-empty pool");
                if x != y {
                    parents.insert(x);
                }
            }
            for x in parents {
                if let Some(ei) = exits.iter().position(|&e| e == x) {
                    exit_has_child[ei] = true;
                }
                global_edges.push((x, y));
            }
        }
        for (ei, &t) in exits.iter().enumerate() {
            if !exit_has_child[ei] {
                global_edges.push((t, bg_base + rng.gen_range(0..bg)));
            }
        }
        pool.truncate(bg);
        for &s in &entrances {
            let want = rng.gen_range(pmin..=pmax).min(bg);
            let parents: Vec<usize> = pool.choose_multiple(&mut rng, want).copied().collect();
            for x in parents {
                global_edges.push((x, s));
            }
        }
    }

    if bg == 0 && !spec.extra_edges.is_empty() {
        return Err(Error::usage("extra edges need a background"));
    }
    for (a, b) in &spec.extra_edges {
        let (u, v) = (resolve(a)?, resolve(b)?);
        let ok_source = match region_of(u) {
            None => true,
            Some(ri) => u == exits[ri],
        };
        let ok_target = match region_of(v) {
            None => true,
            Some(ri) => v == entrances[ri] && region_of(u) != Some(ri),
        };
        if !ok_source || !ok_target {
            return Err(Error::usage(format!(
                "extra edge {a:?} -> {b:?} would break a planted region"
            )));
        }
        global_edges.push((u, v));
    }

    // Ground truth from the isolated regions.
    let mut truth_local: Vec<Superbubble> = Vec::new();
    for (ri, edges) in region_edges.iter().enumerate() {
        let region = DirectedMultigraph::from_edges(
            region_sizes[ri],
            edges.iter().map(|&(a, b)| (a as u32, b as u32)),
        )?;
        let shift = |v: VertexId| VertexId::from_index(region_base[ri] + v.index());
        for sb in oracle::enumerate_brute_force_bounded(&region, region_sizes[ri])? {
            truth_local.push(Superbubble {
                entrance: shift(sb.entrance),
                exit: shift(sb.exit),
                interior: sb.interior.into_iter().map(shift).collect(),
            });
        }
    }

    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(&mut rng);
    let relabel = |v: usize| VertexId(perm[v]);

    let mut b = GraphBuilder::with_capacity(n, global_edges.len());
    for &(u, v) in &global_edges {
        b.add_edge(relabel(u), relabel(v), b"")?;
    }
    let mut truth: Vec<Superbubble> = truth_local
        .into_iter()
        .map(|sb| {
            let mut interior: Vec<VertexId> =
                sb.interior.iter().map(|v| relabel(v.index())).collect();
            interior.sort_unstable();
            Superbubble {
                entrance: relabel(sb.entrance.index()),
                exit: relabel(sb.exit.index()),
                interior,
            }
        })
        .collect();
    truth.sort_unstable();

    let planted = bubble_local
        .iter()
        .map(|locals| {
            let (ri, s) = locals[0];
            let (_, t) = *locals.last().expect("size >= 2");
            (relabel(region_base[ri] + s), relabel(region_base[ri] + t))
        })
        .collect();

    Ok(PlantedGraph {
        graph: b.build(),
        truth,
        planted,
    })
}

fn bubble_is_valid(size: usize, edges: &[(usize, usize)]) -> Result<bool> {
    let g = DirectedMultigraph::from_edges(size, edges.iter().map(|&(a, b)| (a as u32, b as u32)))?;
    Ok(oracle::is_superbubble(&g, VertexId(0), VertexId::from_index(size - 1))?.is_superbubble())
}

fn validate_explicit_dag(
    bi: usize,
    size: usize,
    edges: &[(usize, usize)],
) -> Result<Vec<(usize, usize)>> {
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= size || b >= size) {
        return Err(Error::usage(format!(
            "bubble {bi}: edge ({a}, {b}) out of range"
        )));
    }
    if !bubble_is_valid(size, edges)? {
        return Err(Error::usage(format!(
            "bubble {bi}: edges do not form a superbubble from 0 to {}",
            size - 1
        )));
    }
    Ok(edges.to_vec())
}

/// Random DAG on `size` vertices in which `(0, size - 1)` is a superbubble.
fn random_bubble_dag<R: Rng>(
    size: usize,
    edge_prob: f64,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if size == 2 {
        return Ok(vec![(0, 1), (0, 1)]);
    }
    let last = size - 1;
    for _ in 0..10_000 {
        let mut edges = BTreeSet::new();
        for v in 1..last {
            edges.insert((rng.gen_range(0..v), v));
            edges.insert((v, rng.gen_range(v + 1..=last)));
        }
        for a in 0..last {
            for b in a + 1..=last {
                if rng.gen_bool(edge_prob.clamp(0.0, 1.0)) {
                    edges.insert((a, b));
                }
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        if bubble_is_valid(size, &edges)? {
            return Ok(edges);
        }
    }
    Err(Error::usage(format!(
        "could not draw a bubble of size {size} with edge probability {edge_prob}"
    )))
}
