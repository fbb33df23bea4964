//! Hash table from seed hashes to reference positions.
//!
//! A seed is `n` consecutive event bucket codes. The codes are packed
//! big-end-first into a 64-bit word, `bucket_bits` bits each, the word is
//! passed through the murmur3 `fmix64` finalizer and truncated to its low
//! 32 bits. When `n * bucket_bits > 64` the codes are packed in 64-bit
//! chunks that are chained through the finalizer: `h = fmix64(h ^ chunk)`.
//!
//! Optionally, runs of identical codes are collapsed before windowing so
//! that k-mers whose levels land in the same bucket (and therefore cannot
//! be told apart in the signal) produce the same symbol stream on the
//! reference and read side.

use std::collections::HashMap;

use crate::event_pipeline::{EventSequence, FixedPointFormat, QuantizationParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeedHash(pub u32);

/// murmur3 64-bit finalizer (a bijection on `u64`).
#[inline]
pub fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

pub fn hash_codes(codes: &[u16], bucket_bits: u8) -> SeedHash {
    let per_word = (64 / bucket_bits as usize).max(1);
    let mut h = 0u64;
    for chunk in codes.chunks(per_word) {
        let packed = chunk
            .iter()
            .fold(0u64, |acc, &c| (acc << bucket_bits) | c as u64);
        h = fmix64(h ^ packed);
    }
    SeedHash(h as u32)
}

/// How event codes are grouped into seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedScheme {
    pub n_events: usize,
    pub collapse_runs: bool,
    /// Bits per seed symbol. Event codes are coarsened to this many bits
    /// (dropping low bits) before hashing; `None` keeps them whole.
    pub seed_bits: Option<u8>,
}

/// Mapping defaults: five events per seed, 4-bit symbols, runs collapsed.
impl Default for SeedScheme {
    fn default() -> Self {
        SeedScheme {
            n_events: 5,
            collapse_runs: true,
            seed_bits: Some(4),
        }
    }
}

impl SeedScheme {
    pub fn new(n_events: usize, collapse_runs: bool) -> Result<Self> {
        if !(2..=16).contains(&n_events) {
            return Err(Error::InvalidArgument(format!(
                "n_events_per_seed {n_events} outside 2..=16"
            )));
        }
        Ok(SeedScheme {
            n_events,
            collapse_runs,
            seed_bits: None,
        })
    }

    pub fn with_seed_bits(mut self, bits: Option<u8>) -> Result<Self> {
        if let Some(b) = bits {
            if !(1..=10).contains(&b) {
                return Err(Error::InvalidArgument(format!("seed_bits {b} outside 1..=10")));
            }
        }
        self.seed_bits = bits;
        Ok(self)
    }

    /// Symbol width used when hashing codes of `bucket_bits` bits.
    pub fn symbol_bits(&self, bucket_bits: u8) -> u8 {
        self.seed_bits.map_or(bucket_bits, |b| b.min(bucket_bits))
    }
}

/// One `(position, hash)` per window. `positions[i]` is reported for a
/// window whose first symbol comes from code `i`.
pub fn seed_windows(
    codes: &[u16],
    positions: &[u32],
    scheme: SeedScheme,
    bucket_bits: u8,
) -> Vec<(u32, SeedHash)> {
    debug_assert_eq!(codes.len(), positions.len());
    let n = scheme.n_events;
    let bits = scheme.symbol_bits(bucket_bits);
    let drop = bucket_bits - bits;
    let coarse: Vec<u16>;
    let codes = if drop > 0 {
        coarse = codes.iter().map(|&c| c >> drop).collect();
        &coarse[..]
    } else {
        codes
    };
    if scheme.collapse_runs {
        let mut sym = Vec::with_capacity(codes.len());
        let mut pos = Vec::with_capacity(codes.len());
        for (i, &c) in codes.iter().enumerate() {
            if sym.last() != Some(&c) {
                sym.push(c);
                pos.push(positions[i]);
            }
        }
        windows(&sym, &pos, n, bits)
    } else {
        windows(codes, positions, n, bits)
    }
}

fn windows(codes: &[u16], positions: &[u32], n: usize, bits: u8) -> Vec<(u32, SeedHash)> {
    if codes.len() < n {
        return Vec::new();
    }
    codes
        .windows(n)
        .zip(positions)
        .map(|(w, &p)| (p, hash_codes(w, bits)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceIndex {
    pub reference_id: String,
    pub reference_length: u32,
    pub scheme: SeedScheme,
    pub quant: QuantizationParams,
    pub format: FixedPointFormat,
    table: HashMap<SeedHash, Vec<u32>>,
    n_windows: u64,
    size_bytes: u64,
}

pub fn build_index(ref_events: &EventSequence, scheme: SeedScheme) -> Result<ReferenceIndex> {
    let n = scheme.n_events;
    if ref_events.len() < n {
        return Err(Error::TooFewEvents {
            len: ref_events.len(),
            min: n,
        });
    }
    let codes = ref_events.seed_codes();
    let positions: Vec<u32> = ref_events.events.iter().map(|e| e.start_index).collect();
    let reference_length = ref_events
        .events
        .last()
        .map(|e| e.start_index + e.length)
        .unwrap_or(0);
    let mut table: HashMap<SeedHash, Vec<u32>> = HashMap::new();
    let seeds = seed_windows(&codes, &positions, scheme, ref_events.params.bucket_bits());
    let n_windows = seeds.len() as u64;
    for (pos, h) in seeds {
        table.entry(h).or_default().push(pos);
    }
    let mut index = ReferenceIndex {
        reference_id: ref_events.read_id.clone(),
        reference_length,
        scheme,
        quant: ref_events.params,
        format: ref_events.format,
        table,
        n_windows,
        size_bytes: 0,
    };
    index.size_bytes = index.compute_size();
    Ok(index)
}

const MAGIC: &[u8; 4] = b"RMIX";
pub const FORMAT_VERSION: u16 = 1;
// magic + version + total length
const PREAMBLE: usize = 4 + 2 + 8;

impl ReferenceIndex {
    /// Positions stored under `h`, ascending. Empty on a miss.
    pub fn query(&self, h: SeedHash) -> &[u32] {
        self.table.get(&h).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn freq(&self, h: SeedHash) -> u32 {
        self.query(h).len() as u32
    }

    pub fn distinct_hashes(&self) -> usize {
        self.table.len()
    }

    /// Number of windows inserted (the sum of all frequencies).
    pub fn n_windows(&self) -> u64 {
        self.n_windows
    }

    pub fn size_bytes(&self) -> u64 {
        self.size_bytes
    }

    pub fn iter(&self) -> impl Iterator<Item = (SeedHash, &[u32])> {
        self.table.iter().map(|(h, p)| (*h, p.as_slice()))
    }

    fn compute_size(&self) -> u64 {
        let header = 1 + 1 + 1 + 4 + 2 + self.reference_id.len() as u64;
        let quant = 1 + 1 + 8 + 8;
        let postings = 4 + 8 * self.table.len() as u64 + 4 * self.n_windows;
        PREAMBLE as u64 + 3 * 4 + header + quant + postings + 4
    }

    /// Little-endian, versioned layout:
    ///
    /// ```text
    /// "RMIX" | version u16 | total_len u64
    /// len u32 | header:   n_events u8, collapse u8, seed_bits u8 (0 = whole codes), ref_len u32, id_len u16, id
    /// len u32 | quant:    bucket_bits u8, frac_bits u8, shift f64, scale f64
    /// len u32 | postings: n_hashes u32, { hash u32, count u32, pos u32 * count } ascending by hash
    /// crc32 of everything above
    /// ```
    pub fn serialize(&self) -> Vec<u8> {
        let mut header = Vec::new();
        header.push(self.scheme.n_events as u8);
        header.push(self.scheme.collapse_runs as u8);
        header.push(self.scheme.seed_bits.unwrap_or(0));
        header.extend(self.reference_length.to_le_bytes());
        header.extend((self.reference_id.len() as u16).to_le_bytes());
        header.extend(self.reference_id.as_bytes());

        let mut quant = Vec::with_capacity(18);
        quant.push(self.quant.bucket_bits());
        quant.push(self.format.fractional_bits());
        quant.extend(self.quant.shift.to_le_bytes());
        quant.extend(self.quant.scale.to_le_bytes());

        let mut keys: Vec<&SeedHash> = self.table.keys().collect();
        keys.sort_unstable();
        let mut postings = Vec::with_capacity(4 + 8 * keys.len() + 4 * self.n_windows as usize);
        postings.extend((keys.len() as u32).to_le_bytes());
        for h in keys {
            let pos = &self.table[h];
            postings.extend(h.0.to_le_bytes());
            postings.extend((pos.len() as u32).to_le_bytes());
            for p in pos {
                postings.extend(p.to_le_bytes());
            }
        }

        let total = self.size_bytes as usize;
        let mut out = Vec::with_capacity(total);
        out.extend(MAGIC);
        out.extend(FORMAT_VERSION.to_le_bytes());
        out.extend((total as u64).to_le_bytes());
        for section in [&header, &quant, &postings] {
            out.extend((section.len() as u32).to_le_bytes());
            out.extend(section.iter());
        }
        let crc = crc32fast::hash(&out);
        out.extend(crc.to_le_bytes());
        debug_assert_eq!(out.len(), total);
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < PREAMBLE {
            return Err(Error::Truncated);
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let total = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        if (bytes.len() as u64) < total || total < PREAMBLE as u64 + 4 {
            return Err(Error::Truncated);
        }
        if bytes.len() as u64 > total {
            return Err(Error::InvalidArgument("trailing bytes after index".into()));
        }
        let body_end = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }

        let mut r = Reader {
            buf: &bytes[PREAMBLE..body_end],
        };
        let mut header = Reader {
            buf: r.section()?,
        };
        let n_events = header.u8()? as usize;
        let collapse = header.u8()? != 0;
        let seed_bits = match header.u8()? {
            0 => None,
            b => Some(b),
        };
        let reference_length = header.u32()?;
        let id_len = header.u16()? as usize;
        let reference_id = String::from_utf8(header.take(id_len)?.to_vec())
            .map_err(|_| Error::InvalidArgument("reference id is not UTF-8".into()))?;

        let mut q = Reader {
            buf: r.section()?,
        };
        let bucket_bits = q.u8()?;
        let format = FixedPointFormat::new(q.u8()?)?;
        let shift = q.f64()?;
        let scale = q.f64()?;
        let quant = QuantizationParams::new(bucket_bits, shift, scale)?;

        let mut p = Reader {
            buf: r.section()?,
        };
        let n_hashes = p.u32()? as usize;
        let mut table = HashMap::with_capacity(n_hashes);
        let mut n_windows = 0u64;
        let mut prev: Option<u32> = None;
        for _ in 0..n_hashes {
            let h = p.u32()?;
            if prev.is_some_and(|x| x >= h) {
                return Err(Error::InvalidArgument("postings not sorted by hash".into()));
            }
            prev = Some(h);
            let count = p.u32()? as usize;
            let raw = p.take(count * 4)?;
            let pos: Vec<u32> = raw
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            n_windows += count as u64;
            table.insert(SeedHash(h), pos);
        }
        let index = ReferenceIndex {
            reference_id,
            reference_length,
            scheme: SeedScheme::new(n_events, collapse)?.with_seed_bits(seed_bits)?,
            quant,
            format,
            table,
            n_windows,
            size_bytes: bytes.len() as u64,
        };
        if index.compute_size() != index.size_bytes {
            return Err(Error::InvalidArgument("section lengths inconsistent".into()));
        }
        Ok(index)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::deserialize(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn section(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }
}
