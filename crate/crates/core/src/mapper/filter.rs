use std::collections::HashMap;

use super::{Anchor, FilterParams, Seed};
use crate::reference_index::ReferenceIndex;

/// Keeps seeds whose hash occurs at most `thresh_freq` times in the
/// reference. Seeds missing from the index are kept.
pub fn frequency_filter(index: &ReferenceIndex, seeds: &[Seed], thresh_freq: u32) -> Vec<Seed> {
    seeds
        .iter()
        .filter(|s| index.freq(s.hash) <= thresh_freq)
        .copied()
        .collect()
}

/// Windows of `voting_window` bases with stride `voting_window / 2` tile
/// the reference; window `j` covers `[j * stride, j * stride + width)`.
fn windows_of(ref_pos: u32, stride: u32) -> impl Iterator<Item = u32> {
    let last = ref_pos / stride;
    [Some(last), last.checked_sub(1)].into_iter().flatten()
}

/// Seed-and-vote filtering.
///
/// Every anchor votes for each window containing its reference position.
/// A window's vote count is the number of distinct read positions among
/// its anchors. Windows below `thresh_voting` are dropped; an anchor
/// survives when any of its windows survives. Survivors keep input order.
pub fn seed_and_vote(anchors: &[Anchor], params: &FilterParams) -> Vec<Anchor> {
    if params.thresh_voting <= 1 {
        return anchors.to_vec();
    }
    let stride = (params.voting_window / 2).max(1);
    let mut voters: HashMap<u32, Vec<u32>> = HashMap::new();
    for a in anchors {
        for w in windows_of(a.ref_pos, stride) {
            voters.entry(w).or_default().push(a.read_pos);
        }
    }
    let passing: HashMap<u32, bool> = voters
        .into_iter()
        .map(|(w, mut reads)| {
            reads.sort_unstable();
            reads.dedup();
            (w, reads.len() as u32 >= params.thresh_voting)
        })
        .collect();
    anchors
        .iter()
        .filter(|a| windows_of(a.ref_pos, stride).any(|w| passing[&w]))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_pipeline::{Event, EventSequence, FixedPointFormat, QuantizationParams};
    use crate::mapper::collect_anchors;
    use crate::reference_index::{build_index, hash_codes, SeedScheme};
    use proptest::prelude::*;

    fn a(read_pos: u32, ref_pos: u32) -> Anchor {
        Anchor { read_pos, ref_pos }
    }

    fn params(thresh_voting: u32) -> FilterParams {
        FilterParams {
            thresh_freq: 2000,
            thresh_voting,
            voting_window: 256,
        }
    }

    fn index(codes: &[u16]) -> ReferenceIndex {
        let q = QuantizationParams::new(6, 0.0, 1.0).unwrap();
        let f = FixedPointFormat::default();
        let ev = EventSequence {
            read_id: "r".into(),
            events: codes
                .iter()
                .enumerate()
                .map(|(i, &c)| Event {
                    mean_code: f.to_fixed(q.center_z(c)),
                    length: 1,
                    start_index: i as u32,
                })
                .collect(),
            params: q,
            format: f,
        };
        build_index(&ev, SeedScheme::new(2, false).unwrap()).unwrap()
    }

    #[test]
    fn five_votes_pass_threshold_five() {
        let anchors: Vec<Anchor> = (0..5).map(|i| a(i, 300 + 10 * i)).collect();
        assert_eq!(seed_and_vote(&anchors, &params(5)), anchors);
        assert!(seed_and_vote(&anchors[..4], &params(5)).is_empty());
        assert_eq!(seed_and_vote(&anchors[..4], &params(1)), &anchors[..4]);
    }

    #[test]
    fn duplicate_read_positions_vote_once() {
        let anchors: Vec<Anchor> = (0..5).map(|i| a(7, 300 + 10 * i)).collect();
        assert!(seed_and_vote(&anchors, &params(2)).is_empty());
    }

    #[test]
    fn half_overlapping_windows() {
        // 130 lies in windows 0 ([0,256)) and 1 ([128,384)); 300 in 1 and 2.
        assert_eq!(windows_of(130, 128).collect::<Vec<_>>(), [1, 0]);
        assert_eq!(windows_of(5, 128).collect::<Vec<_>>(), [0]);
        // Window 1 collects four anchors from both sides.
        let anchors = [a(0, 130), a(1, 140), a(2, 300), a(3, 310), a(4, 1000)];
        let out = seed_and_vote(&anchors, &params(4));
        assert_eq!(out, &anchors[..4]);
    }

    #[test]
    fn frequency_filter_examples() {
        let idx = index(&[5, 5, 5, 5, 1, 2]);
        let hot = crate::mapper::Seed { read_pos: 0, hash: hash_codes(&[5, 5], 6) };
        let cold = crate::mapper::Seed { read_pos: 1, hash: hash_codes(&[1, 2], 6) };
        let absent = crate::mapper::Seed { read_pos: 2, hash: hash_codes(&[9, 9], 6) };
        let seeds = [hot, cold, absent];
        assert_eq!(frequency_filter(&idx, &seeds, 2), [cold, absent]);
        assert_eq!(frequency_filter(&idx, &seeds, u32::MAX), seeds);
        let anchors = collect_anchors(&idx, &seeds);
        assert_eq!(anchors, [a(0, 0), a(0, 1), a(0, 2), a(1, 4)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn vote_is_subset_idempotent_and_monotone(
            raw in prop::collection::vec((0u32..60, 0u32..3000), 0..150),
            t in 1u32..8,
            window in 2u32..600,
        ) {
            let anchors: Vec<Anchor> = raw.iter().map(|&(q, r)| a(q, r)).collect();
            let p = FilterParams { thresh_freq: 1, thresh_voting: t, voting_window: window };
            let once = seed_and_vote(&anchors, &p);
            prop_assert!(once.iter().all(|x| anchors.contains(x)));
            prop_assert_eq!(&seed_and_vote(&once, &p), &once);
            let stricter = seed_and_vote(&anchors, &FilterParams { thresh_voting: t + 1, ..p });
            prop_assert!(stricter.len() <= once.len());
            prop_assert!(stricter.iter().all(|x| once.contains(x)));
        }

        #[test]
        fn frequency_is_subset_idempotent_and_monotone(
            codes in prop::collection::vec(0u16..4, 2..120),
            probes in prop::collection::vec((0u16..4, 0u16..4), 0..60),
            t in 0u32..10,
        ) {
            let idx = index(&codes);
            let seeds: Vec<crate::mapper::Seed> = probes
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| crate::mapper::Seed { read_pos: i as u32, hash: hash_codes(&[x, y], 6) })
                .collect();
            let once = frequency_filter(&idx, &seeds, t);
            prop_assert!(once.iter().all(|s| seeds.contains(s)));
            prop_assert_eq!(&frequency_filter(&idx, &once, t), &once);
            let looser = frequency_filter(&idx, &seeds, t + 1);
            prop_assert!(once.iter().all(|s| looser.contains(s)));
        }
    }
}
