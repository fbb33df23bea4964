use std::fmt::Write as _;
use std::path::Path;

use super::{RawSignal, Sequence, Strand, Truth};
use crate::{Error, Result};

const FASTA_WIDTH: usize = 80;

pub fn parse_fasta(text: &str) -> Result<Vec<Sequence>> {
    let mut records = Vec::new();
    let mut current: Option<(String, String, usize)> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, bases, at)) = current.take() {
                records.push(finish_record(id, bases, at)?);
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            current = Some((id, String::new(), i + 1));
        } else if !line.is_empty() {
            match current.as_mut() {
                Some((_, bases, _)) => bases.push_str(line),
                None => return Err(Error::parse(i + 1, "sequence data before first header")),
            }
        }
    }
    if let Some((id, bases, at)) = current {
        records.push(finish_record(id, bases, at)?);
    }
    Ok(records)
}

fn finish_record(id: String, bases: String, line: usize) -> Result<Sequence> {
    Sequence::new(id, bases).map_err(|e| Error::parse(line, e.to_string()))
}

pub fn read_fasta(path: impl AsRef<Path>) -> Result<Vec<Sequence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fasta(&text)
}

pub fn format_fasta(records: &[Sequence]) -> String {
    let mut out = String::new();
    for r in records {
        out.push('>');
        out.push_str(&r.id);
        out.push('\n');
        for chunk in r.as_bytes().chunks(FASTA_WIDTH) {
            out.push_str(std::str::from_utf8(chunk).expect("ASCII"));
            out.push('\n');
        }
    }
    out
}

pub fn write_fasta(records: &[Sequence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_fasta(records)).map_err(|e| Error::io(path, e))
}

/// Serializes signals to the text container:
///
/// ```text
/// #read <id> <truth_ref> <truth_pos> <strand>
/// 81.52 80.97 95.10 ...
/// ```
///
/// Reads without ground truth use `*` for the three truth fields.
pub fn format_signals(signals: &[RawSignal]) -> String {
    let mut out = String::new();
    for s in signals {
        match &s.truth {
            Some(t) => writeln!(
                out,
                "#read {} {} {} {}",
                s.read_id,
                t.reference_id,
                t.start,
                t.strand.symbol()
            ),
            None => writeln!(out, "#read {} * * *", s.read_id),
        }
        .unwrap();
        let mut first = true;
        for x in &s.samples {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{x:.2}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_signals(text: &str) -> Result<Vec<RawSignal>> {
    let mut out: Vec<RawSignal> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#read") {
            let f: Vec<&str> = rest.split_whitespace().collect();
            let (id, truth) = match f.as_slice() {
                [id] | [id, "*", "*", "*"] => (*id, None),
                [id, r, pos, strand] => {
                    let start = pos
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad truth position {pos:?}")))?;
                    let strand = match *strand {
                        "+" => Strand::Forward,
                        "-" => Strand::Reverse,
                        s => return Err(Error::parse(lineno, format!("bad strand {s:?}"))),
                    };
                    (
                        *id,
                        Some(Truth {
                            reference_id: r.to_string(),
                            start,
                            strand,
                        }),
                    )
                }
                _ => return Err(Error::parse(lineno, "malformed #read header")),
            };
            out.push(RawSignal {
                read_id: id.to_string(),
                samples: Vec::new(),
                truth,
            });
        } else {
            let cur = out
                .last_mut()
                .ok_or_else(|| Error::parse(lineno, "samples before first #read header"))?;
            for tok in line.split_whitespace() {
                cur.samples.push(
                    tok.parse()
                        .map_err(|_| Error::parse(lineno, format!("bad sample {tok:?}")))?,
                );
            }
        }
    }
    if let Some(empty) = out.iter().find(|s| s.samples.is_empty()) {
        return Err(Error::InvalidArgument(format!(
            "read {} has no samples",
            empty.read_id
        )));
    }
    Ok(out)
}

pub fn read_signals(path: impl AsRef<Path>) -> Result<Vec<RawSignal>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signals(&text)
}

pub fn write_signals(signals: &[RawSignal], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_signals(signals)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fasta_wraps_at_80_and_round_trips() {
        let a = Sequence::new("chr1", "ACGT".repeat(50)).unwrap();
        let b = Sequence::new("chr2", "GGA").unwrap();
        let text = format_fasta(&[a.clone(), b.clone()]);
        assert!(text.lines().all(|l| l.len() <= 80));
        assert_eq!(text.lines().nth(1).unwrap().len(), 80);
        assert_eq!(parse_fasta(&text).unwrap(), vec![a, b]);
    }

    #[test]
    fn fasta_header_keeps_first_token_and_uppercases() {
        let r = parse_fasta(">seq1 some description\nacg\ntt\n").unwrap();
        assert_eq!(r[0].id, "seq1");
        assert_eq!(r[0].bases, "ACGTT");
        assert!(parse_fasta("ACGT\n").is_err());
        assert!(parse_fasta(">x\nACNT\n").is_err());
    }

    #[test]
    fn signal_container_round_trip() {
        let sigs = vec![
            RawSignal {
                read_id: "r0".into(),
                samples: vec![80.25, 95.0, 101.13],
                truth: Some(Truth {
                    reference_id: "ref".into(),
                    start: 1234,
                    strand: Strand::Reverse,
                }),
            },
            RawSignal {
                read_id: "r1".into(),
                samples: vec![70.0],
                truth: None,
            },
        ];
        let text = format_signals(&sigs);
        assert!(text.starts_with("#read r0 ref 1234 -\n80.25 95.00 101.13\n"));
        assert_eq!(parse_signals(&text).unwrap(), sigs);
    }

    #[test]
    fn signal_container_errors() {
        assert!(parse_signals("1.0 2.0\n").is_err());
        assert!(parse_signals("#read a ref x +\n1.0\n").is_err());
        assert!(parse_signals("#read a\n").is_err());
        assert!(parse_signals("#read a\n1.0 foo\n").is_err());
    }
}
