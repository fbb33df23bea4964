use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{rng, DatasetPreset, PoreModel, RawSignal, Sequence, Strand, Truth, BASES};
use crate::{Error, Result};

/// Length of the repeat motif planted by [`generate_reference`].
pub const MOTIF_LEN: usize = 500;

fn random_bases(rng: &mut impl Rng, n: usize, out: &mut Vec<u8>) {
    out.extend((0..n).map(|_| BASES[rng.random_range(0..4)]));
}

/// Random reference in which roughly `repeat_fraction` of the bases are
/// copies of one random [`MOTIF_LEN`]-base motif, placed in disjoint
/// motif-aligned slots. Everything else is i.i.d. uniform.
pub fn generate_reference(length: usize, repeat_fraction: f64, seed: u64) -> Result<Sequence> {
    if length < 1000 {
        return Err(Error::InvalidArgument(format!(
            "reference length {length} < 1000"
        )));
    }
    if !(0.0..=1.0).contains(&repeat_fraction) {
        return Err(Error::InvalidArgument(format!(
            "repeat_fraction {repeat_fraction} outside [0, 1]"
        )));
    }
    let mut rng = rng(seed);
    let mut motif = Vec::with_capacity(MOTIF_LEN);
    random_bases(&mut rng, MOTIF_LEN, &mut motif);

    let slots = length / MOTIF_LEN;
    let copies = ((repeat_fraction * length as f64) / MOTIF_LEN as f64).round() as usize;
    let copies = copies.min(slots);
    let mut is_repeat = vec![false; slots];
    for s in sample(&mut rng, slots, copies) {
        is_repeat[s] = true;
    }

    let mut bases = Vec::with_capacity(length);
    for repeat in is_repeat {
        if repeat {
            bases.extend_from_slice(&motif);
        } else {
            random_bases(&mut rng, MOTIF_LEN, &mut bases);
        }
    }
    let rest = length - bases.len();
    random_bases(&mut rng, rest, &mut bases);

    Ok(Sequence {
        id: format!("synth_ref_{seed}"),
        bases: String::from_utf8(bases).expect("ASCII bases"),
    })
}

/// How many samples each k-mer occupies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DwellModel {
    /// Exactly `samples_per_event_mean` samples (rounded).
    Fixed,
    /// Geometric on `1..` with the configured mean, clamped to `[1, 4 * mean]`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub samples_per_event_mean: f64,
    pub dwell: DwellModel,
    pub noise_std: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        SignalParams {
            samples_per_event_mean: 10.0,
            dwell: DwellModel::Geometric,
            noise_std: 2.0,
        }
    }
}

fn dwell(rng: &mut impl Rng, params: &SignalParams) -> usize {
    let mean = params.samples_per_event_mean;
    match params.dwell {
        DwellModel::Fixed => mean.round().max(1.0) as usize,
        DwellModel::Geometric => {
            if mean <= 1.0 {
                return 1;
            }
            // Inverse-CDF draw of Geometric(p = 1/mean) on {1, 2, ...}.
            let p = 1.0 / mean;
            let u: f64 = rng.random::<f64>();
            let d = 1.0 + ((1.0 - u).ln() / (1.0 - p).ln()).floor();
            (d as usize).clamp(1, (4.0 * mean).floor() as usize)
        }
    }
}

/// Samples are rounded to 0.01 pA so that the text container reproduces
/// them exactly.
fn round_sample(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Simulates the current trace of `seq` passing through the pore.
pub fn sequence_to_signal(
    seq: &Sequence,
    model: &PoreModel,
    params: &SignalParams,
    seed: u64,
) -> Result<RawSignal> {
    if !(params.samples_per_event_mean >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "samples_per_event_mean {} < 1",
            params.samples_per_event_mean
        )));
    }
    if !(params.noise_std >= 0.0) {
        return Err(Error::InvalidArgument("negative noise_std".into()));
    }
    let levels = model.expected_levels(seq.as_bytes())?;
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, params.noise_std)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut samples = Vec::with_capacity(levels.len() * params.samples_per_event_mean as usize);
    for level in levels {
        for _ in 0..dwell(&mut rng, params) {
            let x = if params.noise_std > 0.0 {
                level + noise.sample(&mut rng)
            } else {
                level
            };
            samples.push(round_sample(x));
        }
    }
    Ok(RawSignal {
        read_id: seq.id.clone(),
        samples,
        truth: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReadSetOptions {
    pub signal: SignalParams,
    /// Draw half of the reads from the reverse strand.
    pub reverse_strand: bool,
}


/// A read drawn from the reference before signal conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRead {
    /// Bases as sequenced, already reverse-complemented for `-` reads.
    pub sequence: Sequence,
    pub truth: Truth,
    pub length: usize,
    pub signal_seed: u64,
}

/// Draws `preset.read_count` reads from `reference`.
///
/// Start positions are uniform over `[0, L - mean_read_length]`; lengths
/// are `Normal(mean, mean / 10)` clamped to `[k + 10, L - start]`.
pub fn sample_reads(
    reference: &Sequence,
    preset: &DatasetPreset,
    k: usize,
    reverse_strand: bool,
    seed: u64,
) -> Result<Vec<SampledRead>> {
    let len = reference.len();
    let mean = preset.mean_read_length;
    let min_len = k + 10;
    if mean > len || mean < min_len {
        return Err(Error::InvalidArgument(format!(
            "preset {} mean read length {mean} incompatible with reference length {len} (minimum {min_len})",
            preset.name
        )));
    }
    let mut rng = rng(seed);
    let len_dist = Normal::new(mean as f64, mean as f64 / 10.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(preset.read_count);
    for i in 0..preset.read_count {
        let start = rng.random_range(0..=len - mean);
        let length = (len_dist.sample(&mut rng).round().max(0.0) as usize)
            .clamp(min_len, len - start);
        let strand = if reverse_strand && rng.random_bool(0.5) {
            Strand::Reverse
        } else {
            Strand::Forward
        };
        let signal_seed = rng.random::<u64>();
        let mut sequence = Sequence {
            id: format!("read_{i}"),
            bases: reference.bases[start..start + length].to_string(),
        };
        if strand == Strand::Reverse {
            sequence = sequence.reverse_complement();
        }
        out.push(SampledRead {
            sequence,
            truth: Truth {
                reference_id: reference.id.clone(),
                start: start as u32,
                strand,
            },
            length,
            signal_seed,
        });
    }
    Ok(out)
}

/// Samples reads with [`sample_reads`] and converts each one into a raw
/// signal carrying its true origin.
pub fn generate_read_set(
    reference: &Sequence,
    preset: &DatasetPreset,
    model: &PoreModel,
    opts: &ReadSetOptions,
    seed: u64,
) -> Result<Vec<RawSignal>> {
    sample_reads(reference, preset, model.k(), opts.reverse_strand, seed)?
        .into_iter()
        .map(|read| {
            let mut raw = sequence_to_signal(&read.sequence, model, &opts.signal, read.signal_seed)?;
            raw.truth = Some(read.truth);
            Ok(raw)
        })
        .collect()
}
