//! PAF-like mapping table: one row per read.

use std::fmt::Write as _;
use std::path::Path;

use super::{MapStatus, MappingResult};
use crate::{Error, Result};

pub const HEADER: &str = "#read_id\tread_len\tstatus\tref_id\tref_start\tref_end\tn_anchors\tscore";

/// A mapping row as stored on disk. `read_len` counts events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRecord {
    pub read_id: String,
    pub read_len: u32,
    pub status: MapStatus,
    pub ref_id: String,
    pub ref_start: u32,
    pub ref_end: u32,
    pub n_anchors: u32,
    pub score: i64,
}

impl From<&MappingResult> for MappingRecord {
    fn from(r: &MappingResult) -> Self {
        MappingRecord {
            read_id: r.read_id.clone(),
            read_len: r.read_events,
            status: r.status,
            ref_id: r.ref_id.clone(),
            ref_start: r.ref_pos,
            ref_end: r.ref_end,
            n_anchors: r.chain_anchors,
            score: r.score,
        }
    }
}

pub fn format_mappings(records: &[MappingRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let (ref_id, start, end) = match r.status {
            MapStatus::Mapped => (r.ref_id.as_str(), r.ref_start.to_string(), r.ref_end.to_string()),
            MapStatus::Unmapped => ("*", "*".to_string(), "*".to_string()),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.read_id,
            r.read_len,
            r.status.as_str(),
            ref_id,
            start,
            end,
            r.n_anchors,
            r.score
        )
        .unwrap();
    }
    out
}

fn field<T: std::str::FromStr>(v: &str, line: usize, name: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("bad {name} '{v}'")))
}

pub fn parse_mappings(text: &str) -> Result<Vec<MappingRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(Error::parse(ln, format!("expected 8 columns, found {}", f.len())));
        }
        let status = match f[2] {
            "mapped" => MapStatus::Mapped,
            "unmapped" => MapStatus::Unmapped,
            s => return Err(Error::parse(ln, format!("bad status '{s}'"))),
        };
        let (ref_start, ref_end) = match status {
            MapStatus::Mapped => (field(f[4], ln, "ref_start")?, field(f[5], ln, "ref_end")?),
            MapStatus::Unmapped => (0, 0),
        };
        out.push(MappingRecord {
            read_id: f[0].to_string(),
            read_len: field(f[1], ln, "read_len")?,
            status,
            ref_id: if f[3] == "*" { String::new() } else { f[3].to_string() },
            ref_start,
            ref_end,
            n_anchors: field(f[6], ln, "n_anchors")?,
            score: field(f[7], ln, "score")?,
        });
    }
    Ok(out)
}

pub fn write_mappings(path: impl AsRef<Path>, records: &[MappingRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mappings(records)).map_err(|e| Error::io(path, e))
}

pub fn read_mappings(path: impl AsRef<Path>) -> Result<Vec<MappingRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mappings(&text)
}
