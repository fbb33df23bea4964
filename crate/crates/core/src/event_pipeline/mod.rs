//! Raw samples to quantized fixed-point events.
//!
//! Reads are processed in this order: per-read normalization and bucketing
//! of every sample, then 16-bit fixed-point conversion of the bucket
//! centers, then t-test segmentation into events. Reference sequences go
//! through the pore model and the same bucketing so both sides produce
//! comparable codes.

mod detect;
mod fixed;
mod quantize;

pub use detect::{detect_events, detect_then_quantize, DetectorParams};
pub use fixed::FixedPointFormat;
pub use quantize::{
    normalize_and_quantize, robust_shift_scale, QuantizationParams, QuantizedStream, CLAMP_SIGMA,
    MAD_SCALE, MIN_SIGNAL_LEN,
};

use std::fmt::Write as _;

use crate::signal_model::{PoreModel, RawSignal, Sequence};
use crate::{Error, Result};

/// Numeric mode of the event pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Fixed,
    Float,
}

impl std::str::FromStr for Arithmetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Arithmetic::Fixed),
            "float" => Ok(Arithmetic::Float),
            _ => Err(Error::InvalidArgument(format!(
                "arithmetic mode {s:?} (expected fixed or float)"
            ))),
        }
    }
}

/// Whether quantization runs before or after event detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PipelineOrder {
    #[default]
    QuantizeFirst,
    DetectFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// Mean of the event in normalized units, as a 16-bit fixed-point code.
    pub mean_code: i16,
    pub length: u32,
    pub start_index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub read_id: String,
    pub events: Vec<Event>,
    pub params: QuantizationParams,
    pub format: FixedPointFormat,
}

impl EventSequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Bucket index of every event mean; these are the symbols hashed into
    /// seeds.
    pub fn seed_codes(&self) -> Vec<u16> {
        self.events
            .iter()
            .map(|e| self.params.bucket_of_z(self.format.from_fixed(e.mean_code)))
            .collect()
    }

    /// Event mean mapped back to pA.
    pub fn mean_pa(&self, i: usize) -> f64 {
        self.format.from_fixed(self.events[i].mean_code) * self.params.scale + self.params.shift
    }

    /// Debug dump: `index start length code`, tab separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("index\tstart\tlength\tcode\n");
        for (i, e) in self.events.iter().enumerate() {
            writeln!(out, "{i}\t{}\t{}\t{}", e.start_index, e.length, e.mean_code).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventConfig {
    pub bucket_bits: u8,
    pub format: FixedPointFormat,
    pub detector: DetectorParams,
    pub arithmetic: Arithmetic,
    pub order: PipelineOrder,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            bucket_bits: 6,
            format: FixedPointFormat::default(),
            detector: DetectorParams::default(),
            arithmetic: Arithmetic::Fixed,
            order: PipelineOrder::QuantizeFirst,
        }
    }
}

/// Full read-side pipeline: normalization, quantization and segmentation.
pub fn events_from_raw(raw: &RawSignal, cfg: &EventConfig) -> Result<EventSequence> {
    let (events, params) = match cfg.order {
        PipelineOrder::QuantizeFirst => {
            let stream = normalize_and_quantize(raw, cfg.bucket_bits)?;
            let events = detect_events(&stream, &cfg.detector, cfg.format, cfg.arithmetic)?;
            (events, stream.params)
        }
        PipelineOrder::DetectFirst => {
            let params = quantize::normalization_params(raw, cfg.bucket_bits)?;
            let events = detect_then_quantize(&raw.samples, &params, &cfg.detector, cfg.format)?;
            (events, params)
        }
    };
    Ok(EventSequence {
        read_id: raw.read_id.clone(),
        events,
        params,
        format: cfg.format,
    })
}

/// Normalization for a reference: the same robust statistic reads use,
/// applied to the reference's expected k-mer levels.
pub fn reference_quant_params(
    seq: &Sequence,
    model: &PoreModel,
    bucket_bits: u8,
) -> Result<QuantizationParams> {
    let levels = model.expected_levels(seq.as_bytes())?;
    let (shift, scale) = robust_shift_scale(&levels)?;
    QuantizationParams::new(bucket_bits, shift, scale)
}

/// One event per k-mer of `seq`, coded through the bucketing in `params`.
pub fn reference_to_events(
    seq: &Sequence,
    model: &PoreModel,
    params: &QuantizationParams,
    format: FixedPointFormat,
) -> Result<EventSequence> {
    let levels = model.expected_levels(seq.as_bytes())?;
    let events = levels
        .iter()
        .enumerate()
        .map(|(i, &level)| Event {
            mean_code: format.to_fixed(params.center_z(params.bucket(level))),
            length: 1,
            start_index: i as u32,
        })
        .collect();
    Ok(EventSequence {
        read_id: seq.id.clone(),
        events,
        params: *params,
        format,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{
        parse_pore_model, sequence_to_signal, synth_pore_model, DwellModel, SignalParams,
    };

    fn k1() -> PoreModel {
        parse_pore_model("kmer\tlevel_mean\tlevel_stdv\nA\t80.0\t1\nC\t95.0\t1\nG\t110.0\t1\nT\t65.0\t1\n")
            .unwrap()
    }

    #[test]
    fn reference_codes_follow_level_order() {
        let seq = Sequence::new("s", "ACGT").unwrap();
        let model = k1();
        let params = QuantizationParams::new(6, 87.5, 16.0).unwrap();
        let ev = reference_to_events(&seq, &model, &params, FixedPointFormat::default()).unwrap();
        assert_eq!(ev.len(), 4);
        let c: Vec<i16> = ev.events.iter().map(|e| e.mean_code).collect();
        // T < A < C < G
        assert!(c[3] < c[0] && c[0] < c[1] && c[1] < c[2]);
        assert!(ev.events.iter().enumerate().all(|(i, e)| e.length == 1 && e.start_index == i as u32));
    }

    #[test]
    fn reference_errors_and_determinism() {
        let model = synth_pore_model(6, 1).unwrap();
        let params = QuantizationParams::new(6, 95.0, 20.0).unwrap();
        let short = Sequence::new("s", "ACG").unwrap();
        assert!(reference_to_events(&short, &model, &params, FixedPointFormat::default()).is_err());
        let seq = Sequence::new("s", "ACGTTGCAACGTAGGA").unwrap();
        let a = reference_to_events(&seq, &model, &params, FixedPointFormat::default()).unwrap();
        let b = reference_to_events(&seq, &model, &params, FixedPointFormat::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reference_and_read_codes_agree_without_noise() {
        let model = synth_pore_model(4, 5).unwrap();
        let seq = crate::signal_model::generate_reference(2000, 0.0, 1).unwrap();
        let params = reference_quant_params(&seq, &model, 6).unwrap();
        let reference = reference_to_events(&seq, &model, &params, FixedPointFormat::default()).unwrap();
        let signal = sequence_to_signal(
            &seq,
            &model,
            &SignalParams {
                samples_per_event_mean: 10.0,
                dwell: DwellModel::Fixed,
                noise_std: 0.0,
            },
            0,
        )
        .unwrap();
        let read = events_from_raw(&signal, &EventConfig::default()).unwrap();
        // Per-read statistics see each level exactly ten times, so they
        // match the reference-level statistics up to sample rounding.
        assert!((read.params.shift - params.shift).abs() <= 0.01);
        assert!((read.params.scale - params.scale).abs() <= 0.02);
        // Collapsing runs of equal reference codes gives the read codes.
        let mut ref_runs = reference.seed_codes();
        ref_runs.dedup();
        assert_eq!(read.seed_codes(), ref_runs);
    }

    #[test]
    fn tsv_dump() {
        let seq = Sequence::new("s", "ACGT").unwrap();
        let params = QuantizationParams::new(6, 87.5, 16.0).unwrap();
        let ev = reference_to_events(&seq, &k1(), &params, FixedPointFormat::default()).unwrap();
        let tsv = ev.to_tsv();
        assert_eq!(tsv.lines().count(), 5);
        assert!(tsv.starts_with("index\tstart\tlength\tcode\n0\t0\t1\t"));
    }

    #[test]
    fn arithmetic_parses() {
        assert_eq!("fixed".parse::<Arithmetic>().unwrap(), Arithmetic::Fixed);
        assert_eq!("float".parse::<Arithmetic>().unwrap(), Arithmetic::Float);
        assert!("double".parse::<Arithmetic>().is_err());
    }
}
