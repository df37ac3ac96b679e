//! Superbubble statistics: size histogram and entrance-to-exit path lengths.

use std::collections::HashMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, VertexId};
use crate::superbubble::Superbubble;

pub const BUCKET_LABELS: [&str; 8] = [
    "2", "3-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60+",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SizeHistogram {
    pub counts: [u64; 8],
}

impl SizeHistogram {
    pub fn bucket_of(size: usize) -> usize {
        match size {
            0..=2 => 0,
            3..=9 => 1,
            _ => (size / 10 + 1).min(7),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, label: &str) -> Option<u64> {
        BUCKET_LABELS
            .iter()
            .position(|&l| l == label)
            .map(|i| self.counts[i])
    }
}

impl Serialize for SizeHistogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(BUCKET_LABELS.len()))?;
        for (label, count) in BUCKET_LABELS.iter().zip(self.counts) {
            map.serialize_entry(label, &count)?;
        }
        map.end()
    }
}

pub fn size_histogram(bubbles: &[Superbubble]) -> SizeHistogram {
    let mut h = SizeHistogram::default();
    for sb in bubbles {
        h.counts[SizeHistogram::bucket_of(sb.size())] += 1;
    }
    h
}

/// Sequence length of an edge; unlabeled edges count one.
#[inline]
pub fn edge_weight(label: &[u8]) -> u64 {
    if label.is_empty() {
        1
    } else {
        label.len() as u64
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathExtremes {
    pub shortest: u64,
    pub longest: u64,
}

impl PathExtremes {
    pub fn ratio(&self) -> f64 {
        self.longest as f64 / self.shortest as f64
    }
}

/// Shortest and longest entrance-to-exit path length inside `sb`, by dynamic
/// programming over a topological order of the induced subgraph. Parallel
/// edges are weighed individually.
pub fn path_length_extremes(g: &DirectedMultigraph, sb: &Superbubble) -> Result<PathExtremes> {
    for v in sb.vertex_set() {
        g.check_vertex(v)?;
    }
    let members: Vec<VertexId> = sb.vertex_set().into_iter().collect();
    let local: HashMap<VertexId, usize> =
        members.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // Kahn order over induced edges
    let mut indeg = vec![0usize; members.len()];
    for &v in &members {
        for &u in g.out_targets(v) {
            if let Some(&j) = local.get(&u) {
                indeg[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..members.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(members.len());
    while let Some(i) = ready.pop() {
        order.push(i);
        for &u in g.out_targets(members[i]) {
            if let Some(&j) = local.get(&u) {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    if order.len() != members.len() {
        return Err(Error::invariant(format!(
            "superbubble <{}, {}> induces a cyclic subgraph",
            sb.entrance, sb.exit
        )));
    }

    let mut shortest: Vec<Option<u64>> = vec![None; members.len()];
    let mut longest: Vec<Option<u64>> = vec![None; members.len()];
    shortest[local[&sb.entrance]] = Some(0);
    longest[local[&sb.entrance]] = Some(0);
    let exit = local[&sb.exit];
    for i in order {
        // paths continue only through non-exit vertices
        if i == exit {
            continue;
        }
        let (Some(lo), Some(hi)) = (shortest[i], longest[i]) else {
            continue;
        };
        for e in g.out_edges(members[i]) {
            if let Some(&j) = local.get(&e.target) {
                let w = edge_weight(e.label);
                shortest[j] = Some(shortest[j].map_or(lo + w, |x| x.min(lo + w)));
                longest[j] = Some(longest[j].map_or(hi + w, |x| x.max(hi + w)));
            }
        }
    }
    match (shortest[exit], longest[exit]) {
        (Some(shortest), Some(longest)) => Ok(PathExtremes { shortest, longest }),
        _ => Err(Error::invariant(format!(
            "exit {} unreachable inside superbubble",
            sb.exit
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathStat {
    pub entrance: VertexId,
    pub exit: VertexId,
    pub size: usize,
    pub shortest: u64,
    pub longest: u64,
    pub ratio: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct RatioSummary {
    pub threshold: f64,
    pub min_size: usize,
    pub qualifying: u64,
    pub total: u64,
    /// `qualifying / total`, or 0 when nothing reaches `min_size`.
    pub fraction: f64,
}

/// Among superbubbles of at least `min_size` vertices, how many have a
/// longest/shortest ratio strictly below `threshold`.
pub fn ratio_classification(
    stats: &[PathStat],
    threshold: f64,
    min_size: usize,
) -> Result<RatioSummary> {
    if threshold.is_nan() || threshold <= 1.0 {
        return Err(Error::usage(format!(
            "threshold must exceed 1, got {threshold}"
        )));
    }
    let eligible = stats.iter().filter(|s| s.size >= min_size);
    let (mut qualifying, mut total) = (0u64, 0u64);
    for s in eligible {
        total += 1;
        if s.ratio < threshold {
            qualifying += 1;
        }
    }
    Ok(RatioSummary {
        threshold,
        min_size,
        qualifying,
        total,
        fraction: if total == 0 {
            0.0
        } else {
            qualifying as f64 / total as f64
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperbubbleReport {
    pub superbubbles: usize,
    pub histogram: SizeHistogram,
    pub ratio_summary: RatioSummary,
    /// One row per superbubble of at least `min_size` vertices.
    pub ratio_table: Vec<PathStat>,
    pub visited_total: Option<u64>,
    pub wall_time_seconds: Option<f64>,
}

pub fn build_report(
    g: &DirectedMultigraph,
    bubbles: &[Superbubble],
    threshold: f64,
    min_size: usize,
) -> Result<SuperbubbleReport> {
    let mut table = Vec::new();
    for sb in bubbles.iter().filter(|sb| sb.size() >= min_size) {
        let ext = path_length_extremes(g, sb)?;
        table.push(PathStat {
            entrance: sb.entrance,
            exit: sb.exit,
            size: sb.size(),
            shortest: ext.shortest,
            longest: ext.longest,
            ratio: ext.ratio(),
        });
    }
    Ok(SuperbubbleReport {
        superbubbles: bubbles.len(),
        histogram: size_histogram(bubbles),
        ratio_summary: ratio_classification(&table, threshold, min_size)?,
        ratio_table: table,
        visited_total: None,
        wall_time_seconds: None,
    })
}
