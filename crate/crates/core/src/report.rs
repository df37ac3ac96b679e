//! Superbubble list formats.
//!
//! TSV: `entrance<TAB>exit<TAB>size<TAB>interior` with the interior as
//! comma-separated ids, preceded by a `#` header line.
//! JSON: [`DetectionReport`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::superbubble::{AbortCounts, Superbubble};

pub const TSV_HEADER: &str = "#entrance\texit\tsize\tinterior";

pub fn write_tsv<W: Write>(bubbles: &[Superbubble], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TSV_HEADER}")?;
    for sb in bubbles {
        write!(w, "{}\t{}\t{}\t", sb.entrance, sb.exit, sb.size())?;
        for (i, v) in sb.interior.iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_tsv<R: BufRead>(r: R) -> Result<Vec<Superbubble>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::input(lineno, e.to_string()))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::input(
                lineno,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let id = |s: &str| -> Result<VertexId> {
            s.trim()
                .parse::<u32>()
                .map(VertexId)
                .map_err(|_| Error::input(lineno, format!("bad vertex id {s:?}")))
        };
        let entrance = id(cols[0])?;
        let exit = id(cols[1])?;
        let size: usize = cols[2]
            .trim()
            .parse()
            .map_err(|_| Error::input(lineno, format!("bad size {:?}", cols[2])))?;
        let mut interior = cols[3]
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(id)
            .collect::<Result<Vec<_>>>()?;
        interior.sort_unstable();
        let sb = Superbubble {
            entrance,
            exit,
            interior,
        };
        if sb.size() != size {
            return Err(Error::input(
                lineno,
                format!(
                    "size column {size} disagrees with {} listed vertices",
                    sb.size()
                ),
            ));
        }
        out.push(sb);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleRecord {
    pub entrance: VertexId,
    pub exit: VertexId,
    pub size: usize,
    pub interior: Vec<VertexId>,
}

impl From<&Superbubble> for BubbleRecord {
    fn from(sb: &Superbubble) -> Self {
        BubbleRecord {
            entrance: sb.entrance,
            exit: sb.exit,
            size: sb.size(),
            interior: sb.interior.clone(),
        }
    }
}

impl From<BubbleRecord> for Superbubble {
    fn from(r: BubbleRecord) -> Self {
        Superbubble {
            entrance: r.entrance,
            exit: r.exit,
            interior: r.interior,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub vertices: usize,
    pub edges: usize,
    pub min_size: usize,
    pub visited_total: u64,
    pub aborts: AbortCounts,
    pub wall_time_seconds: f64,
    pub superbubbles: Vec<BubbleRecord>,
}
