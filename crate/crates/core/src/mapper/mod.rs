//! Online mapping of one raw signal against a [`ReferenceIndex`].
//!
//! `map_read` runs: event pipeline, seed generation, frequency filter,
//! index query, seed-and-vote, bucketized sort, chaining. Every step
//! records its operation counts into an [`OperationTrace`].

mod chain;
mod filter;
mod output;

pub use chain::{chain, chain_with_stats, gap_cost, can_follow, Chain, ChainParams, SCORE_FRAC_BITS, SCORE_ONE};
pub use filter::{frequency_filter, seed_and_vote};
pub use output::{format_mappings, parse_mappings, read_mappings, write_mappings, MappingRecord};

use std::cmp::Ordering;

use crate::event_pipeline::{events_from_raw, EventConfig, EventSequence};
use crate::reference_index::{seed_windows, ReferenceIndex, SeedHash};
use crate::signal_model::RawSignal;
use crate::sortnet::{sort_and_merge, SortStats};
use crate::trace::{
    OpClass, OperationTrace, Step, ANCHOR_BYTES, CODE_BYTES, EVENT_BYTES, RAW_SAMPLE_BYTES,
    RESULT_BYTES, SEED_BYTES,
};
use crate::{Error, Result};

/// A seed hit: read event index and reference base offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Anchor {
    pub read_pos: u32,
    pub ref_pos: u32,
}

/// Anchors order by reference position, then read position.
impl Ord for Anchor {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.ref_pos, self.read_pos).cmp(&(o.ref_pos, o.read_pos))
    }
}

impl PartialOrd for Anchor {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed {
    pub read_pos: u32,
    pub hash: SeedHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterParams {
    pub thresh_freq: u32,
    pub thresh_voting: u32,
    pub voting_window: u32,
}

/// Genome size at which the large-genome filter preset takes over.
pub const LARGE_GENOME_BASES: u64 = 50_000_000;

impl FilterParams {
    pub const SMALL_GENOME: FilterParams = FilterParams {
        thresh_freq: 2000,
        thresh_voting: 5,
        voting_window: 256,
    };
    pub const LARGE_GENOME: FilterParams = FilterParams {
        thresh_freq: 20000,
        thresh_voting: 2,
        voting_window: 256,
    };

    pub fn for_genome_size(bases: u64) -> FilterParams {
        if bases >= LARGE_GENOME_BASES {
            Self::LARGE_GENOME
        } else {
            Self::SMALL_GENOME
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresh_freq < 1 || self.thresh_voting < 1 || self.voting_window < 2 {
            return Err(Error::InvalidArgument(format!("invalid filter parameters {self:?}")));
        }
        Ok(())
    }
}

pub fn generate_seeds(events: &EventSequence, index: &ReferenceIndex) -> Vec<Seed> {
    let codes = events.seed_codes();
    let positions: Vec<u32> = (0..codes.len() as u32).collect();
    seed_windows(&codes, &positions, index.scheme, events.params.bucket_bits())
        .into_iter()
        .map(|(read_pos, hash)| Seed { read_pos, hash })
        .collect()
}

pub fn collect_anchors(index: &ReferenceIndex, seeds: &[Seed]) -> Vec<Anchor> {
    seeds
        .iter()
        .flat_map(|s| {
            index.query(s.hash).iter().map(move |&ref_pos| Anchor {
                read_pos: s.read_pos,
                ref_pos,
            })
        })
        .collect()
}

/// Bases per detected event (Q8) used when mapping. Segmentation merges
/// short dwells and near-equal neighbours, so a read yields roughly 1.8
/// bases per event.
pub const DEFAULT_EVENTS_TO_BASES: i64 = 460;

#[derive(Debug, Clone, PartialEq)]
pub struct MapParams {
    pub events: EventConfig,
    pub filters: FilterParams,
    pub use_frequency_filter: bool,
    pub use_vote_filter: bool,
    pub chain: ChainParams,
    /// Minimum Q8 chain score for a mapping; `None` means three anchors'
    /// worth of weight.
    pub min_score: Option<i64>,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            events: EventConfig::default(),
            filters: FilterParams::SMALL_GENOME,
            use_frequency_filter: true,
            use_vote_filter: true,
            chain: ChainParams {
                events_to_bases: DEFAULT_EVENTS_TO_BASES,
                ..ChainParams::default()
            },
            min_score: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapStatus {
    Mapped,
    Unmapped,
}

impl MapStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MapStatus::Mapped => "mapped",
            MapStatus::Unmapped => "unmapped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub read_id: String,
    pub status: MapStatus,
    pub ref_id: String,
    /// Estimated reference offset of the read's first base.
    pub ref_pos: u32,
    pub ref_end: u32,
    /// Q8 chain score.
    pub score: i64,
    pub read_events: u32,
    /// Anchors entering chaining.
    pub n_anchors_considered: u32,
    pub chain_anchors: u32,
    pub trace: OperationTrace,
}

/// Per-read counters collected while mapping; turned into a trace at the
/// end so byte volumes chain exactly.
#[derive(Default)]
struct Counts {
    samples: u64,
    events: u64,
    seeds: u64,
    kept_seeds: u64,
    anchors: u64,
    voted: u64,
    touched_windows: u64,
    dp_scans: u64,
    chain_len: u64,
    boundary_tests: u64,
    n_events_per_seed: u64,
    sort: SortStats,
    nonempty_buckets: u64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

impl Counts {
    /// Operation counts of the arithmetic cost model. The per-element op
    /// mixes are estimates of the instruction sequences each step needs.
    fn into_trace(self, index_bytes: u64) -> OperationTrace {
        let mut t = OperationTrace::default();
        t.reads = 1;
        t.raw_bytes = self.samples * RAW_SAMPLE_BYTES;
        t.index_bytes = index_bytes;
        t.result_bytes = RESULT_BYTES;
        let n = self.samples;

        let q = t.step_mut(Step::Quantize);
        // Median and MAD by selection, then shift, scale, clamp, bucket.
        q.add_ops(OpClass::Compare, 2 * n * ceil_log2(n) + 2 * n);
        q.add_ops(OpClass::Add, 2 * n + 2 * n);
        q.add_ops(OpClass::Multiply, 2 * n);
        q.bytes_in = n * RAW_SAMPLE_BYTES;
        q.bytes_out = n * CODE_BYTES;
        q.work_items = n;

        let e = t.step_mut(Step::SignalToEvent);
        let b = self.boundary_tests;
        e.add_ops(OpClass::Add, 2 * n + 8 * b + 2 * self.events);
        e.add_ops(OpClass::Multiply, n + 4 * b);
        e.add_ops(OpClass::Divide, b + self.events);
        e.add_ops(OpClass::Compare, 3 * b);
        e.bytes_in = n * CODE_BYTES;
        e.bytes_out = self.events * EVENT_BYTES;
        e.work_items = n;

        let h = t.step_mut(Step::HashGen);
        h.add_ops(OpClass::Add, self.seeds * (2 * self.n_events_per_seed + 6));
        h.add_ops(OpClass::Multiply, 2 * self.seeds);
        h.add_ops(OpClass::Compare, self.events);
        h.bytes_in = self.events * EVENT_BYTES;
        h.bytes_out = self.seeds * SEED_BYTES;
        h.work_items = self.seeds;

        let f = t.step_mut(Step::FreqFilter);
        f.add_ops(OpClass::Lookup, self.seeds);
        f.add_ops(OpClass::Compare, self.seeds);
        f.bytes_in = self.seeds * SEED_BYTES;
        f.bytes_out = self.kept_seeds * SEED_BYTES;
        f.work_items = self.seeds;

        let g = t.step_mut(Step::Query);
        g.add_ops(OpClass::Lookup, self.kept_seeds);
        g.add_ops(OpClass::Add, self.anchors);
        g.bytes_in = self.kept_seeds * SEED_BYTES;
        g.bytes_out = self.anchors * ANCHOR_BYTES;
        g.work_items = self.kept_seeds;

        let v = t.step_mut(Step::Vote);
        v.add_ops(OpClass::Add, 2 * self.anchors);
        v.add_ops(OpClass::Compare, 4 * self.anchors + self.touched_windows);
        v.bytes_in = self.anchors * ANCHOR_BYTES;
        v.bytes_out = self.voted * ANCHOR_BYTES;
        v.work_items = self.anchors;

        let bk = t.step_mut(Step::Bucketize);
        bk.add_ops(OpClass::Multiply, self.voted);
        bk.add_ops(OpClass::Divide, self.voted);
        bk.add_ops(OpClass::Compare, 3 * self.voted);
        bk.bytes_in = self.voted * ANCHOR_BYTES;
        bk.bytes_out = self.voted * ANCHOR_BYTES;
        bk.work_items = self.voted;

        let s = t.step_mut(Step::Sort);
        s.add_ops(OpClass::SortStage, self.sort.network_stages);
        s.add_ops(OpClass::Comparator, self.sort.comparators_fired);
        s.add_ops(OpClass::MergeStep, self.sort.merge_steps);
        s.bytes_in = self.voted * ANCHOR_BYTES;
        s.bytes_out = self.voted * ANCHOR_BYTES;
        s.work_items = self.nonempty_buckets;

        let c = t.step_mut(Step::Chain);
        c.add_ops(OpClass::Add, 4 * self.dp_scans + self.voted + self.chain_len);
        c.add_ops(OpClass::Compare, 4 * self.dp_scans + 2 * self.voted);
        c.bytes_in = self.voted * ANCHOR_BYTES;
        c.bytes_out = RESULT_BYTES;
        c.work_items = self.voted.max(1);
        t
    }
}

impl MappingResult {
    fn unmapped(raw: &RawSignal, index: &ReferenceIndex, counts: Counts) -> MappingResult {
        let read_events = counts.events as u32;
        let n_anchors = counts.voted as u32;
        MappingResult {
            read_id: raw.read_id.clone(),
            status: MapStatus::Unmapped,
            ref_id: index.reference_id.clone(),
            ref_pos: 0,
            ref_end: 0,
            score: 0,
            read_events,
            n_anchors_considered: n_anchors,
            chain_anchors: 0,
            trace: counts.into_trace(index.size_bytes()),
        }
    }
}

/// Maps one read. Reads too short to segment or seed come back unmapped.
pub fn map_read(raw: &RawSignal, index: &ReferenceIndex, params: &MapParams) -> Result<MappingResult> {
    params.filters.validate()?;
    let mut counts = Counts {
        samples: raw.samples.len() as u64,
        n_events_per_seed: index.scheme.n_events as u64,
        ..Default::default()
    };
    let mut cfg = params.events;
    cfg.bucket_bits = index.quant.bucket_bits();
    cfg.format = index.format;

    let events = match events_from_raw(raw, &cfg) {
        Ok(ev) => ev,
        Err(Error::SignalTooShort { .. }) => {
            return Ok(MappingResult::unmapped(raw, index, counts));
        }
        Err(e) => return Err(e),
    };
    let w = cfg.detector.window as u64;
    counts.boundary_tests = (counts.samples + 1).saturating_sub(2 * w);
    counts.events = events.len() as u64;

    let seeds = generate_seeds(&events, index);
    counts.seeds = seeds.len() as u64;
    let seeds = if params.use_frequency_filter {
        frequency_filter(index, &seeds, params.filters.thresh_freq)
    } else {
        seeds
    };
    counts.kept_seeds = seeds.len() as u64;

    let anchors = collect_anchors(index, &seeds);
    counts.anchors = anchors.len() as u64;
    let anchors = if params.use_vote_filter {
        seed_and_vote(&anchors, &params.filters)
    } else {
        anchors
    };
    counts.voted = anchors.len() as u64;
    counts.touched_windows = 2 * counts.anchors;

    let (sorted, bucket_stats) = sort_and_merge(&anchors, index.reference_length.max(1))?;
    for s in bucket_stats {
        if s.elements > 0 {
            counts.nonempty_buckets += 1;
        }
        counts.sort += s;
    }

    let weight = index.scheme.n_events as i64 * SCORE_ONE;
    let (best, scans) = chain_with_stats(&sorted, weight, &params.chain)?;
    counts.dp_scans = scans;
    counts.chain_len = best.anchors.len() as u64;

    let min_score = params.min_score.unwrap_or(3 * weight);
    if best.anchors.is_empty() || best.score < min_score {
        return Ok(MappingResult::unmapped(raw, index, counts));
    }
    let first = best.anchors[0];
    let offset = (first.read_pos as i64 * params.chain.events_to_bases) >> SCORE_FRAC_BITS;
    let ref_pos = (best.ref_start as i64 - offset).max(0) as u32;
    Ok(MappingResult {
        read_id: raw.read_id.clone(),
        status: MapStatus::Mapped,
        ref_id: index.reference_id.clone(),
        ref_pos,
        ref_end: (best.ref_end + index.scheme.n_events as u32).min(index.reference_length),
        score: best.score,
        read_events: events.len() as u32,
        n_anchors_considered: anchors.len() as u32,
        chain_anchors: best.anchors.len() as u32,
        trace: counts.into_trace(index.size_bytes()),
    })
}

/// Sum of the traces of `results`.
pub fn combined_trace<'a>(results: impl IntoIterator<Item = &'a MappingResult>) -> OperationTrace {
    let mut t = OperationTrace::default();
    for r in results {
        t.merge(&r.trace);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_pipeline::{
        reference_quant_params, reference_to_events, Event, FixedPointFormat, QuantizationParams,
    };
    use crate::reference_index::{build_index, hash_codes, SeedScheme};
    use crate::signal_model::{
        generate_reference, rng, sequence_to_signal, synth_pore_model, PoreModel, Sequence,
        SignalParams,
    };
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};
    use std::sync::OnceLock;

    fn seq_from_codes(codes: &[u16]) -> EventSequence {
        let params = QuantizationParams::new(6, 0.0, 1.0).unwrap();
        let format = FixedPointFormat::default();
        EventSequence {
            read_id: "r".into(),
            events: codes
                .iter()
                .enumerate()
                .map(|(i, &c)| Event {
                    mean_code: format.to_fixed(params.center_z(c)),
                    length: 1,
                    start_index: i as u32,
                })
                .collect(),
            params,
            format,
        }
    }

    fn plain(n: usize) -> SeedScheme {
        SeedScheme::new(n, false).unwrap()
    }

    #[test]
    fn seeds_one_per_window() {
        let ev = seq_from_codes(&[3, 9, 27, 40, 12]);
        let idx = build_index(&ev, plain(3)).unwrap();
        let seeds = generate_seeds(&ev, &idx);
        assert_eq!(seeds.iter().map(|s| s.read_pos).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(seeds[0].hash, hash_codes(&[3, 9, 27], 6));
    }

    #[test]
    fn identical_runs_hash_identically() {
        let ev = seq_from_codes(&[5, 6, 7, 5, 6, 7]);
        let idx = build_index(&ev, plain(3)).unwrap();
        let seeds = generate_seeds(&ev, &idx);
        assert_eq!(seeds[0].hash, seeds[3].hash);
    }

    #[test]
    fn verbatim_reference_events_always_hit() {
        let mut r = rng(4);
        let codes: Vec<u16> = (0..300).map(|_| rand::Rng::random_range(&mut r, 0..64)).collect();
        let ev = seq_from_codes(&codes);
        for scheme in [plain(4), SeedScheme::default()] {
            let idx = build_index(&ev, scheme).unwrap();
            let read = seq_from_codes(&codes[100..200]);
            for s in generate_seeds(&read, &idx) {
                assert!(idx.freq(s.hash) > 0);
            }
        }
    }

    #[test]
    fn anchors_mirror_query() {
        let ev = seq_from_codes(&[1, 2, 3, 1, 2, 3, 9, 9, 9]);
        let idx = build_index(&ev, plain(3)).unwrap();
        let repeated = Seed { read_pos: 7, hash: hash_codes(&[1, 2, 3], 6) };
        let unique = Seed { read_pos: 2, hash: hash_codes(&[9, 9, 9], 6) };
        let missing = Seed { read_pos: 0, hash: hash_codes(&[60, 61, 62], 6) };
        assert_eq!(
            collect_anchors(&idx, &[repeated]),
            vec![Anchor { read_pos: 7, ref_pos: 0 }, Anchor { read_pos: 7, ref_pos: 3 }]
        );
        assert_eq!(collect_anchors(&idx, &[unique]), vec![Anchor { read_pos: 2, ref_pos: 6 }]);
        assert!(collect_anchors(&idx, &[missing]).is_empty());
    }

    #[test]
    fn anchor_order() {
        let a = Anchor { read_pos: 9, ref_pos: 1 };
        let b = Anchor { read_pos: 0, ref_pos: 2 };
        let c = Anchor { read_pos: 1, ref_pos: 2 };
        assert!(a < b && b < c);
    }

    #[test]
    fn filter_presets() {
        assert_eq!(FilterParams::for_genome_size(29_903), FilterParams::SMALL_GENOME);
        assert_eq!(FilterParams::for_genome_size(3_100_000_000), FilterParams::LARGE_GENOME);
        assert_eq!(
            (FilterParams::SMALL_GENOME.thresh_freq, FilterParams::SMALL_GENOME.thresh_voting),
            (2000, 5)
        );
        let bad = FilterParams { voting_window: 1, ..FilterParams::SMALL_GENOME };
        assert!(bad.validate().is_err());
    }

    struct Fixture {
        reference: Sequence,
        model: PoreModel,
        index: ReferenceIndex,
    }

    fn fixture() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| {
            let reference = generate_reference(8000, 0.0, 11).unwrap();
            let model = synth_pore_model(6, 2).unwrap();
            let q = reference_quant_params(&reference, &model, 6).unwrap();
            let ev = reference_to_events(&reference, &model, &q, FixedPointFormat::default()).unwrap();
            let index = build_index(&ev, SeedScheme::default()).unwrap();
            Fixture { reference, model, index }
        })
    }

    fn read_at(f: &Fixture, start: usize, len: usize, noise: f64, seed: u64) -> RawSignal {
        let seq = Sequence::new("q", &f.reference.bases[start..start + len]).unwrap();
        let params = SignalParams { noise_std: noise, ..SignalParams::default() };
        sequence_to_signal(&seq, &f.model, &params, seed).unwrap()
    }

    #[test]
    fn zero_noise_read_maps_to_origin() {
        let f = fixture();
        let raw = read_at(f, 5000, 430, 0.0, 1);
        let m = map_read(&raw, &f.index, &MapParams::default()).unwrap();
        assert_eq!(m.status, MapStatus::Mapped);
        assert!(m.score > 0);
        assert!((m.ref_pos as i64 - 5000).abs() <= 256, "ref_pos {}", m.ref_pos);
        assert!(m.trace.conservation_violation().is_none());
    }

    #[test]
    fn noise_signals_stay_unmapped() {
        let f = fixture();
        let mut r = rng(21);
        let dist = Normal::new(95.0, 20.0).unwrap();
        let unmapped = (0..100)
            .filter(|i| {
                let raw = RawSignal {
                    read_id: format!("noise{i}"),
                    samples: (0..4300).map(|_| dist.sample(&mut r)).collect(),
                    truth: None,
                };
                map_read(&raw, &f.index, &MapParams::default()).unwrap().status == MapStatus::Unmapped
            })
            .count();
        assert!(unmapped >= 95, "{unmapped}");
    }

    #[test]
    fn short_reads_are_unmapped_not_errors() {
        let f = fixture();
        for n in [0, 5, 31, 40] {
            let raw = RawSignal {
                read_id: "s".into(),
                samples: (0..n).map(|i| 80.0 + (i % 7) as f64 * 5.0).collect(),
                truth: None,
            };
            let m = map_read(&raw, &f.index, &MapParams::default()).unwrap();
            assert_eq!(m.status, MapStatus::Unmapped);
            assert!(m.trace.conservation_violation().is_none());
        }
    }

    #[test]
    fn disabling_filters_never_shrinks_anchor_set() {
        let f = fixture();
        let raw = read_at(f, 1200, 430, 2.0, 5);
        let on = map_read(&raw, &f.index, &MapParams::default()).unwrap();
        let off = MapParams {
            use_frequency_filter: false,
            use_vote_filter: false,
            ..MapParams::default()
        };
        let off = map_read(&raw, &f.index, &off).unwrap();
        assert!(on.n_anchors_considered <= off.n_anchors_considered);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn trace_bytes_are_conserved(start in 0usize..7000, len in 20usize..300, noise in 0.0f64..4.0, seed: u64) {
            let f = fixture();
            let len = len.min(f.reference.len() - start);
            prop_assume!(len >= 6);
            let raw = read_at(f, start, len, noise, seed);
            let m = map_read(&raw, &f.index, &MapParams::default()).unwrap();
            prop_assert_eq!(m.trace.conservation_violation(), None);
            prop_assert_eq!(m.trace.raw_bytes, raw.samples.len() as u64 * RAW_SAMPLE_BYTES);
            if m.status == MapStatus::Mapped {
                prop_assert!(m.score > 0 && m.ref_pos < f.index.reference_length);
            }
        }
    }
}
