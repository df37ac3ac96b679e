//! Minimal FASTA/FASTQ reader. The format is picked from the first
//! non-blank character; sequences are upper-cased and qualities dropped.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReadSet {
    pub reads: Vec<Vec<u8>>,
}

impl ReadSet {
    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }

    pub fn total_bases(&self) -> usize {
        self.reads.iter().map(Vec::len).sum()
    }
}

impl<S: AsRef<[u8]>> FromIterator<S> for ReadSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        ReadSet {
            reads: iter
                .into_iter()
                .map(|s| s.as_ref().to_ascii_uppercase())
                .collect(),
        }
    }
}

pub fn read_fastx_file(path: &Path) -> Result<ReadSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_fastx(BufReader::new(file))
}

pub fn read_fastx<R: BufRead>(reader: R) -> Result<ReadSet> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .peekable();

    // skip leading blank lines and sniff the format
    let format = loop {
        match lines.peek() {
            None => return Ok(ReadSet::default()),
            Some((n, Err(e))) => return Err(Error::input(*n, e.to_string())),
            Some((_, Ok(l))) if l.trim().is_empty() => {
                lines.next();
            }
            Some((n, Ok(l))) => match l.as_bytes()[0] {
                b'>' => break Format::Fasta,
                b'@' => break Format::Fastq,
                c => {
                    return Err(Error::input(
                        *n,
                        format!("expected '>' or '@' record start, found {:?}", c as char),
                    ))
                }
            },
        }
    };

    let mut next_line = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((n, Ok(l))) => Ok(Some((n, l.trim_end().to_string()))),
            Some((n, Err(e))) => Err(Error::input(n, e.to_string())),
        }
    };

    let mut reads = Vec::new();
    match format {
        Format::Fasta => {
            let mut current: Option<Vec<u8>> = None;
            while let Some((n, line)) = next_line()? {
                if line.is_empty() {
                    continue;
                }
                if line.starts_with('>') {
                    reads.extend(current.take());
                    current = Some(Vec::new());
                } else {
                    let seq = current
                        .as_mut()
                        .ok_or_else(|| Error::input(n, "sequence line before header"))?;
                    push_sequence(seq, &line, n)?;
                }
            }
            reads.extend(current);
        }
        Format::Fastq => {
            while let Some((n, header)) = next_line()? {
                if header.is_empty() {
                    continue;
                }
                if !header.starts_with('@') {
                    return Err(Error::input(n, "expected '@' record header"));
                }
                let mut seq = Vec::new();
                loop {
                    match next_line()? {
                        None => return Err(Error::input(n, "record ends before '+' separator")),
                        Some((_, l)) if l.starts_with('+') => break,
                        Some((m, l)) => push_sequence(&mut seq, &l, m)?,
                    }
                }
                let mut qual_len = 0;
                while qual_len < seq.len() {
                    match next_line()? {
                        None => return Err(Error::input(n, "quality shorter than sequence")),
                        Some((_, l)) => qual_len += l.len(),
                    }
                }
                if qual_len != seq.len() {
                    return Err(Error::input(
                        n,
                        "quality length differs from sequence length",
                    ));
                }
                reads.push(seq);
            }
        }
    }
    Ok(ReadSet { reads })
}

enum Format {
    Fasta,
    Fastq,
}

fn push_sequence(seq: &mut Vec<u8>, line: &str, lineno: usize) -> Result<()> {
    for &b in line.trim().as_bytes() {
        if !b.is_ascii_alphabetic() {
            return Err(Error::input(
                lineno,
                format!("invalid sequence character {:?}", b as char),
            ));
        }
        seq.push(b.to_ascii_uppercase());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<String>> {
        read_fastx(s.as_bytes()).map(|r| {
            r.reads
                .into_iter()
                .map(|x| String::from_utf8(x).unwrap())
                .collect()
        })
    }

    #[test]
    fn fasta_fastq_and_wrapping() {
        assert_eq!(parse(">r1\nacgt\n").unwrap(), vec!["ACGT"]);
        assert_eq!(parse("@r1\nACGT\n+\nIIII\n").unwrap(), vec!["ACGT"]);
        assert_eq!(parse(">r1\nAC\nGT\n").unwrap(), vec!["ACGT"]);
        assert_eq!(
            parse(">a\nAC\n>b desc\nNNG\n\n>c\n").unwrap(),
            vec!["AC", "NNG", ""]
        );
        assert_eq!(
            parse("@a\nAC\n+a\n@I\n@b\nGGT\n+\nIII\n").unwrap(),
            vec!["AC", "GGT"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("\n\n").unwrap().is_empty());
    }

    #[test]
    fn malformed_records_report_lines() {
        let line_of = |s: &str| match parse(s) {
            Err(Error::Input { line, .. }) => line,
            other => panic!("{s:?} -> {other:?}"),
        };
        assert_eq!(line_of("ACGT\n"), Some(1));
        assert_eq!(line_of(">r\nAC GT\n"), Some(2));
        assert_eq!(line_of("@r\nACGT\nIIII\n"), Some(1));
        assert_eq!(line_of("@r\nACGT\n+\nII\n"), Some(1));
        assert_eq!(line_of("@r\nACGT\n+\nIIII\nACGT\n"), Some(5));
    }
}
