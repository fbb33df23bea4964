//! Nucleotide to signal bridge and synthetic data generation.
//!
//! All generators draw from [`rng`], a ChaCha8 stream seeded from a single
//! `u64`. ChaCha8 is specified bit-for-bit independently of platform, so a
//! fixed seed reproduces identical references, reads and signals everywhere.

mod io;
mod pore;
mod synth;

pub use io::{
    format_fasta, format_signals, parse_fasta, parse_signals, read_fasta, read_signals,
    write_fasta, write_signals,
};
pub use pore::{load_pore_model, parse_pore_model, synth_pore_model, write_pore_model, PoreModel};
pub use synth::{
    generate_read_set, generate_reference, sample_reads, sequence_to_signal, DwellModel,
    ReadSetOptions, SampledRead, SignalParams, MOTIF_LEN,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Seeded generator used by every synthetic data path.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 2-bit code of a nucleotide (A=0, C=1, G=2, T=3).
#[inline]
pub fn base_code(b: u8) -> Option<u8> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

pub const BASES: [u8; 4] = *b"ACGT";

/// A named nucleotide sequence over `{A, C, G, T}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    pub bases: String,
}

impl Sequence {
    /// Builds a sequence, upper-casing the input and rejecting anything
    /// outside the four-letter alphabet.
    pub fn new(id: impl Into<String>, bases: impl AsRef<str>) -> Result<Self> {
        let bases = bases.as_ref().to_ascii_uppercase();
        if let Some((offset, base)) = bases
            .bytes()
            .enumerate()
            .find(|(_, b)| base_code(*b).is_none())
        {
            return Err(Error::InvalidBase {
                base: base as char,
                offset,
            });
        }
        Ok(Sequence {
            id: id.into(),
            bases,
        })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.bases.as_bytes()
    }

    pub fn reverse_complement(&self) -> Sequence {
        let bases = self
            .bases
            .bytes()
            .rev()
            .map(|b| match b {
                b'A' => 'T',
                b'C' => 'G',
                b'G' => 'C',
                _ => 'A',
            })
            .collect();
        Sequence {
            id: self.id.clone(),
            bases,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strand {
    Forward,
    Reverse,
}

impl Strand {
    pub fn symbol(self) -> char {
        match self {
            Strand::Forward => '+',
            Strand::Reverse => '-',
        }
    }
}

/// Ground-truth origin of a simulated read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    pub reference_id: String,
    pub start: u32,
    pub strand: Strand,
}

/// Raw current samples of one read, in picoamperes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignal {
    pub read_id: String,
    pub samples: Vec<f64>,
    pub truth: Option<Truth>,
}

/// Size descriptor of a synthetic dataset, named after a real one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPreset {
    pub name: String,
    pub genome_size: usize,
    pub read_count: usize,
    pub mean_read_length: usize,
}

impl DatasetPreset {
    pub fn new(
        name: impl Into<String>,
        genome_size: usize,
        read_count: usize,
        mean_read_length: usize,
    ) -> Result<Self> {
        if genome_size < 1000 {
            return Err(Error::InvalidArgument(format!(
                "genome_size {genome_size} < 1000"
            )));
        }
        Ok(DatasetPreset {
            name: name.into(),
            genome_size,
            read_count,
            mean_read_length,
        })
    }

    /// Presets scaled from the evaluation datasets. Genome sizes match the
    /// real organisms for the small genomes; the large ones are shrunk to
    /// desk scale and keep only their relative ordering.
    pub fn builtin() -> Vec<DatasetPreset> {
        let p = |n: &str, g, r, l| DatasetPreset {
            name: n.to_string(),
            genome_size: g,
            read_count: r,
            mean_read_length: l,
        };
        vec![
            p("d1-like", 29_903, 500, 430),
            p("d2-like", 500_000, 1_000, 1_000),
            p("d3-like", 1_200_000, 1_000, 1_000),
            p("d4-like", 2_000_000, 1_000, 1_000),
            p("d5-like", 4_000_000, 1_000, 1_000),
        ]
    }

    pub fn by_name(name: &str) -> Result<DatasetPreset> {
        Self::builtin()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| {
                let names: Vec<_> = Self::builtin().into_iter().map(|p| p.name).collect();
                Error::InvalidArgument(format!(
                    "unknown preset {name:?}; available presets: {}",
                    names.join(", ")
                ))
            })
    }
}
