//! k-mer counting, solid k-mer selection and de Bruijn graph construction.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fastx::ReadSet;
use crate::graph::{DirectedMultigraph, GraphBuilder, VertexId};

/// Largest k stored as a packed 2-bit integer.
pub const MAX_PACKED_K: usize = 32;

#[inline]
fn base_code(b: u8) -> Option<u64> {
    match b {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

const BASES: [u8; 4] = *b"ACGT";

fn unpack(code: u64, k: usize) -> Vec<u8> {
    (0..k)
        .map(|i| BASES[((code >> (2 * (k - 1 - i))) & 3) as usize])
        .collect()
}

fn pack(kmer: &[u8]) -> Option<u64> {
    kmer.iter()
        .try_fold(0u64, |acc, &b| base_code(b).map(|c| (acc << 2) | c))
}

pub fn reverse_complement(seq: &[u8]) -> Vec<u8> {
    seq.iter()
        .rev()
        .map(|&b| match b {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            b'T' => b'A',
            other => other,
        })
        .collect()
}

#[derive(Clone, Debug)]
enum Counts {
    Packed(HashMap<u64, u64>),
    Bytes(HashMap<Vec<u8>, u64>),
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        match (&mut self, other) {
            (Counts::Packed(a), Counts::Packed(b)) => {
                for (key, c) in b {
                    *a.entry(key).or_insert(0) += c;
                }
            }
            (Counts::Bytes(a), Counts::Bytes(b)) => {
                for (key, c) in b {
                    *a.entry(key).or_insert(0) += c;
                }
            }
            _ => unreachable!("count tables of one run share a key representation"),
        }
        self
    }
}

/// Multiset of k-mers seen across a read set.
#[derive(Clone, Debug)]
pub struct KmerCountTable {
    k: usize,
    canonical: bool,
    counts: Counts,
}

impl KmerCountTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Number of distinct k-mers.
    pub fn len(&self) -> usize {
        match &self.counts {
            Counts::Packed(m) => m.len(),
            Counts::Bytes(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total number of k-mer occurrences.
    pub fn total(&self) -> u64 {
        match &self.counts {
            Counts::Packed(m) => m.values().sum(),
            Counts::Bytes(m) => m.values().sum(),
        }
    }

    pub fn get(&self, kmer: &[u8]) -> u64 {
        if kmer.len() != self.k {
            return 0;
        }
        match &self.counts {
            Counts::Packed(m) => pack(kmer).and_then(|c| m.get(&c).copied()).unwrap_or(0),
            Counts::Bytes(m) => m.get(kmer).copied().unwrap_or(0),
        }
    }

    /// `(k-mer, count)` pairs in lexicographic k-mer order.
    pub fn to_sorted_vec(&self) -> Vec<(Vec<u8>, u64)> {
        let mut v: Vec<(Vec<u8>, u64)> = match &self.counts {
            Counts::Packed(m) => m.iter().map(|(&c, &n)| (unpack(c, self.k), n)).collect(),
            Counts::Bytes(m) => m.iter().map(|(s, &n)| (s.clone(), n)).collect(),
        };
        v.sort_unstable();
        v
    }

    fn count_read(&self, read: &[u8], counts: &mut Counts) {
        let k = self.k;
        match counts {
            Counts::Packed(map) => {
                let mask = if k == 32 {
                    u64::MAX
                } else {
                    (1u64 << (2 * k)) - 1
                };
                let rc_shift = 2 * (k - 1);
                let (mut fwd, mut rev, mut run) = (0u64, 0u64, 0usize);
                for &b in read {
                    let Some(c) = base_code(b) else {
                        run = 0;
                        continue;
                    };
                    fwd = ((fwd << 2) | c) & mask;
                    rev = (rev >> 2) | ((3 - c) << rc_shift);
                    run += 1;
                    if run >= k {
                        let key = if self.canonical { fwd.min(rev) } else { fwd };
                        *map.entry(key).or_insert(0) += 1;
                    }
                }
            }
            Counts::Bytes(map) => {
                let mut run = 0usize;
                for (i, &b) in read.iter().enumerate() {
                    if base_code(b).is_none() {
                        run = 0;
                        continue;
                    }
                    run += 1;
                    if run >= k {
                        let window = read[i + 1 - k..=i].to_ascii_uppercase();
                        let key = if self.canonical {
                            let rc = reverse_complement(&window);
                            window.min(rc)
                        } else {
                            window
                        };
                        *map.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
    }

    fn empty_counts(&self) -> Counts {
        if self.k <= MAX_PACKED_K {
            Counts::Packed(HashMap::new())
        } else {
            Counts::Bytes(HashMap::new())
        }
    }
}

/// Counts every length-`k` window that contains only `A/C/G/T`.
pub fn count_kmers(reads: &ReadSet, k: usize) -> Result<KmerCountTable> {
    count_kmers_with(reads, k, false)
}

/// As [`count_kmers`]; with `canonical` each k-mer is folded onto the
/// lexicographic minimum of itself and its reverse complement.
///
/// Reads are split across the current rayon pool and the partial tables
/// merged, so the result does not depend on the worker count.
pub fn count_kmers_with(reads: &ReadSet, k: usize, canonical: bool) -> Result<KmerCountTable> {
    if k < 2 {
        return Err(Error::usage(format!("k must be at least 2, got {k}")));
    }
    let mut table = KmerCountTable {
        k,
        canonical,
        counts: Counts::Packed(HashMap::new()),
    };
    table.counts = table.empty_counts();
    let counts = reads
        .reads
        .par_iter()
        .fold(
            || table.empty_counts(),
            |mut acc, read| {
                table.count_read(read, &mut acc);
                acc
            },
        )
        .reduce(|| table.empty_counts(), Counts::merge);
    table.counts = counts;
    Ok(table)
}

/// k-mers occurring at least `d` times, in lexicographic order.
pub fn solid_kmers(table: &KmerCountTable, d: u64) -> Result<BTreeSet<Vec<u8>>> {
    if d < 1 {
        return Err(Error::usage("solidity threshold d must be at least 1"));
    }
    Ok(table
        .to_sorted_vec()
        .into_iter()
        .filter(|&(_, c)| c >= d)
        .map(|(kmer, _)| kmer)
        .collect())
}

/// de Bruijn graph whose vertices are (k-1)-mers, numbered in lexicographic
/// order, and whose edges are solid k-mers labeled with their last base.
#[derive(Clone, Debug)]
pub struct DeBruijnGraph {
    pub graph: DirectedMultigraph,
    names: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, VertexId>,
    k: usize,
}

impl DeBruijnGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self, v: VertexId) -> &[u8] {
        &self.names[v.index()]
    }

    pub fn names(&self) -> &[Vec<u8>] {
        &self.names
    }

    pub fn vertex(&self, name: &[u8]) -> Option<VertexId> {
        self.index.get(name).copied()
    }
}

pub fn build_debruijn<I, S>(solid: I, k: usize) -> Result<DeBruijnGraph>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    if k < 2 {
        return Err(Error::usage(format!("k must be at least 2, got {k}")));
    }
    let mut kmers: Vec<Vec<u8>> = Vec::new();
    for kmer in solid {
        let kmer = kmer.as_ref();
        if kmer.len() != k {
            return Err(Error::usage(format!(
                "k-mer {:?} has length {}, expected {k}",
                String::from_utf8_lossy(kmer),
                kmer.len()
            )));
        }
        if let Some(&b) = kmer
            .iter()
            .find(|&&b| !matches!(b, b'A' | b'C' | b'G' | b'T'))
        {
            return Err(Error::usage(format!(
                "k-mer {:?} contains non-ACGT character {:?}",
                String::from_utf8_lossy(kmer),
                b as char
            )));
        }
        kmers.push(kmer.to_vec());
    }
    kmers.sort_unstable();
    kmers.dedup();

    let mut names: Vec<Vec<u8>> = kmers
        .iter()
        .flat_map(|km| [km[..k - 1].to_vec(), km[1..].to_vec()])
        .collect();
    names.sort_unstable();
    names.dedup();
    let index: HashMap<Vec<u8>, VertexId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), VertexId::from_index(i)))
        .collect();

    let mut b = GraphBuilder::with_capacity(names.len(), kmers.len());
    for km in &kmers {
        let u = index[&km[..k - 1]];
        let v = index[&km[1..]];
        b.add_edge(u, v, &km[k - 1..])?;
    }
    Ok(DeBruijnGraph {
        graph: b.build(),
        names,
        index,
        k,
    })
}
