use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::{base_code, rng, BASES};
use crate::{Error, Result};

pub const MAX_K: usize = 8;

/// Expected current level per k-mer.
///
/// `levels[i]` holds `(mean, std_dev)` in pA for the k-mer whose base-4
/// rank (A=0, C=1, G=2, T=3, most significant base first) is `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreModel {
    k: usize,
    levels: Vec<(f64, f64)>,
}

impl PoreModel {
    pub fn new(k: usize, levels: Vec<(f64, f64)>) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidArgument(format!("k = {k} outside 1..={MAX_K}")));
        }
        let expected = 1usize << (2 * k);
        if levels.len() != expected {
            return Err(Error::IncompleteTable {
                expected,
                found: levels.len(),
            });
        }
        for (i, &(mean, sd)) in levels.iter().enumerate() {
            if !(mean > 0.0 && mean < 300.0) || !(sd >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "k-mer {} has level ({mean}, {sd}) outside (0, 300) pA / sd >= 0",
                    kmer_string(i, k)
                )));
            }
        }
        Ok(PoreModel { k, levels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn levels(&self) -> &[(f64, f64)] {
        &self.levels
    }

    pub fn mean(&self, rank: usize) -> f64 {
        self.levels[rank].0
    }

    /// Rank of the k-mer starting at `seq[0]`. `seq` must be validated.
    pub fn rank(&self, kmer: &[u8]) -> Option<usize> {
        debug_assert_eq!(kmer.len(), self.k);
        kmer.iter().try_fold(0usize, |acc, &b| {
            base_code(b).map(|c| (acc << 2) | c as usize)
        })
    }

    /// Expected level of every k-mer of `seq`, in order.
    pub fn expected_levels(&self, seq: &[u8]) -> Result<Vec<f64>> {
        if seq.len() < self.k {
            return Err(Error::SequenceTooShort {
                len: seq.len(),
                k: self.k,
            });
        }
        let mask = (1usize << (2 * self.k)) - 1;
        let mut rank = 0usize;
        let mut out = Vec::with_capacity(seq.len() - self.k + 1);
        for (i, &b) in seq.iter().enumerate() {
            let c = base_code(b).ok_or(Error::InvalidBase {
                base: b as char,
                offset: i,
            })?;
            rank = ((rank << 2) | c as usize) & mask;
            if i + 1 >= self.k {
                out.push(self.levels[rank].0);
            }
        }
        Ok(out)
    }
}

pub fn kmer_string(rank: usize, k: usize) -> String {
    (0..k)
        .rev()
        .map(|i| BASES[(rank >> (2 * i)) & 3] as char)
        .collect()
}

/// Reads a pore model TSV with a header naming `kmer`, `level_mean` and
/// `level_stdv` columns (other columns are ignored).
pub fn load_pore_model(path: impl AsRef<Path>) -> Result<PoreModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pore_model(&text)
}

pub fn parse_pore_model(text: &str) -> Result<PoreModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty pore model"))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::parse(1, format!("missing column {name:?}")))
    };
    let (ck, cm, cs) = (col("kmer")?, col("level_mean")?, col("level_stdv")?);

    let mut k = None;
    let mut table: HashMap<usize, (f64, f64)> = HashMap::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let get = |i: usize| {
            fields
                .get(i)
                .copied()
                .ok_or_else(|| Error::parse(lineno, "too few columns"))
        };
        let kmer = get(ck)?.to_ascii_uppercase();
        let kk = *k.get_or_insert(kmer.len());
        if kmer.len() != kk {
            return Err(Error::parse(
                lineno,
                format!("k-mer {kmer:?} has length {}, expected {kk}", kmer.len()),
            ));
        }
        if kk == 0 || kk > MAX_K {
            return Err(Error::parse(lineno, format!("k = {kk} outside 1..={MAX_K}")));
        }
        let rank = kmer
            .bytes()
            .try_fold(0usize, |acc, b| base_code(b).map(|c| (acc << 2) | c as usize))
            .ok_or_else(|| Error::parse(lineno, format!("invalid k-mer {kmer:?}")))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("bad number {s:?}")))
        };
        let level = (num(get(cm)?)?, num(get(cs)?)?);
        if table.insert(rank, level).is_some() {
            return Err(Error::DuplicateKmer(kmer));
        }
    }
    let k = k.ok_or(Error::IncompleteTable {
        expected: 0,
        found: 0,
    })?;
    let expected = 1usize << (2 * k);
    if table.len() != expected {
        return Err(Error::IncompleteTable {
            expected,
            found: table.len(),
        });
    }
    let levels = (0..expected).map(|r| table[&r]).collect();
    PoreModel::new(k, levels)
}

pub fn write_pore_model(model: &PoreModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("kmer\tlevel_mean\tlevel_stdv\n");
    for (rank, (mean, sd)) in model.levels.iter().enumerate() {
        writeln!(out, "{}\t{mean}\t{sd}", kmer_string(rank, model.k)).unwrap();
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Synthetic pore model: means uniform in [60, 130] pA, std-dev 2.0 pA.
pub fn synth_pore_model(k: usize, seed: u64) -> Result<PoreModel> {
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={MAX_K}")));
    }
    let mut rng = rng(seed);
    let levels = (0..1usize << (2 * k))
        .map(|_| (rng.random_range(60.0..=130.0), 2.0))
        .collect();
    PoreModel::new(k, levels)
}
