//! Graph file formats.
//!
//! Text edge list: one `u<TAB>v<TAB>label` record per line (label optional),
//! `#` starts a comment, and an optional `#vertices N` header fixes the vertex
//! count. Without the header the count is `1 + max id`.
//!
//! Binary: magic `SBG1`, then little-endian `u64` vertex and edge counts,
//! then per edge `u32 source, u32 target, u32 label_len, label bytes`.
//!
//! Vertex name side tables are `id<TAB>name` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{DirectedMultigraph, GraphBuilder, VertexId};

pub const BINARY_MAGIC: &[u8; 4] = b"SBG1";
const VERTICES_HEADER: &str = "#vertices";

fn is_label_byte(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'T')
}

pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<DirectedMultigraph> {
    let mut declared: Option<(usize, usize)> = None;
    let mut edges: Vec<(u32, u32, Vec<u8>, usize)> = Vec::new();
    let mut max_id: Option<u32> = None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::input(lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(VERTICES_HEADER) {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::input(lineno, format!("bad vertex count header {line:?}")))?;
            if declared.is_some() {
                return Err(Error::input(lineno, "duplicate #vertices header"));
            }
            declared = Some((n, lineno));
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let mut id = |name: &str| -> Result<u32> {
            let col = cols
                .next()
                .ok_or_else(|| Error::input(lineno, format!("missing {name} column")))?;
            col.trim()
                .parse::<u32>()
                .map_err(|_| Error::input(lineno, format!("bad {name} id {col:?}")))
        };
        let u = id("source")?;
        let v = id("target")?;
        let label = cols.next().unwrap_or("").trim().as_bytes().to_vec();
        if cols.next().is_some() {
            return Err(Error::input(lineno, "too many columns"));
        }
        if let Some(bad) = label.iter().find(|&&b| !is_label_byte(b)) {
            return Err(Error::input(
                lineno,
                format!("label contains non-ACGT character {:?}", *bad as char),
            ));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, label, lineno));
    }

    let vertex_count = match declared {
        Some((n, header_line)) => {
            if let Some(m) = max_id {
                if m as usize >= n {
                    return Err(Error::input(
                        header_line,
                        format!("header declares {n} vertices but id {m} is used"),
                    ));
                }
            }
            n
        }
        None => max_id.map_or(0, |m| m as usize + 1),
    };

    let mut b = GraphBuilder::with_capacity(vertex_count, edges.len());
    for (u, v, label, lineno) in edges {
        b.add_edge(VertexId(u), VertexId(v), &label)
            .map_err(|e| Error::input(lineno, e.to_string()))?;
    }
    Ok(b.build())
}

pub fn write_edge_list<W: Write>(g: &DirectedMultigraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{VERTICES_HEADER} {}", g.vertex_count())?;
    for e in g.edges() {
        if e.label.is_empty() {
            writeln!(w, "{}\t{}", e.source, e.target)?;
        } else {
            write!(w, "{}\t{}\t", e.source, e.target)?;
            w.write_all(e.label)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()
}

pub fn write_binary<W: Write>(g: &DirectedMultigraph, mut w: W) -> std::io::Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(g.vertex_count() as u64).to_le_bytes())?;
    w.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    for e in g.edges() {
        w.write_all(&e.source.0.to_le_bytes())?;
        w.write_all(&e.target.0.to_le_bytes())?;
        w.write_all(&(e.label.len() as u32).to_le_bytes())?;
        w.write_all(e.label)?;
    }
    w.flush()
}

/// Reads a binary graph; the stream must start at the magic.
pub fn read_binary<R: Read>(mut r: R) -> Result<DirectedMultigraph> {
    let truncated = || Error::input_nolines("truncated binary graph");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| truncated())?;
    if &magic != BINARY_MAGIC {
        return Err(Error::input_nolines("missing SBG1 magic"));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf).map_err(|_| truncated())?;
    let n = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf).map_err(|_| truncated())?;
    let m = u64::from_le_bytes(u64buf) as usize;

    let mut b = GraphBuilder::with_capacity(n, m.min(1 << 24));
    let mut u32buf = [0u8; 4];
    let mut label = Vec::new();
    for _ in 0..m {
        let mut next = || -> Result<u32> {
            r.read_exact(&mut u32buf).map_err(|_| truncated())?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let s = next()?;
        let t = next()?;
        let len = next()? as usize;
        label.resize(len, 0);
        r.read_exact(&mut label).map_err(|_| truncated())?;
        b.add_edge(VertexId(s), VertexId(t), &label)
            .map_err(|e| Error::input_nolines(e.to_string()))?;
    }
    Ok(b.build())
}

/// Reads either format, detected by the `SBG1` magic.
pub fn read_graph(path: &Path) -> Result<DirectedMultigraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.starts_with(BINARY_MAGIC) {
        read_binary(reader)
    } else {
        parse_edge_list(reader)
    }
}

/// Writes binary when the path ends in `.sbg`, text otherwise.
pub fn write_graph(path: &Path, g: &DirectedMultigraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let w = BufWriter::new(file);
    let res = if path.extension().is_some_and(|x| x == "sbg") {
        write_binary(g, w)
    } else {
        write_edge_list(g, w)
    };
    res.map_err(|e| Error::io(path, e))
}

/// `<graph path>.names`
pub fn names_path(graph_path: &Path) -> PathBuf {
    let mut s = graph_path.as_os_str().to_owned();
    s.push(".names");
    PathBuf::from(s)
}

pub fn write_names(path: &Path, names: &[Vec<u8>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        for (i, name) in names.iter().enumerate() {
            write!(w, "{i}\t")?;
            w.write_all(name)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Reads a names table; ids must be dense and in order.
pub fn read_names(path: &Path) -> Result<Vec<Vec<u8>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut names = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::input(lineno, "expected id<TAB>name"))?;
        let id: usize = id
            .parse()
            .map_err(|_| Error::input(lineno, format!("bad id {id:?}")))?;
        if id != names.len() {
            return Err(Error::input(
                lineno,
                format!("expected id {}, found {id}", names.len()),
            ));
        }
        names.push(name.as_bytes().to_vec());
    }
    Ok(names)
}
