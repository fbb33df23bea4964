//! Hierarchical sort used ahead of chaining.
//!
//! Anchors are split into eight buckets covering disjoint reference
//! regions. Each bucket is cut into blocks of at most [`MAX_BLOCK`]
//! elements that go through a bitonic sorting network; blocks of one bucket
//! are then combined by a single streaming k-way merge. Bucket outputs are
//! concatenated in region order.
//!
//! The network is data oblivious, so every statistic in [`SortStats`]
//! depends only on input sizes.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::AddAssign;

use crate::mapper::Anchor;
use crate::{Error, Result};

pub const MAX_BLOCK: usize = 128;
pub const N_BUCKETS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SortStats {
    /// Comparators whose two inputs were both real elements.
    pub comparators_fired: u64,
    /// Comparators touching at least one padding sentinel.
    pub sentinel_comparators: u64,
    pub network_stages: u64,
    pub merge_steps: u64,
    pub elements: u64,
    pub blocks: u64,
    pub merges: u64,
    /// Largest merge fan-in seen.
    pub max_fan_in: u64,
}

impl AddAssign for SortStats {
    fn add_assign(&mut self, o: Self) {
        self.comparators_fired += o.comparators_fired;
        self.sentinel_comparators += o.sentinel_comparators;
        self.network_stages += o.network_stages;
        self.merge_steps += o.merge_steps;
        self.elements += o.elements;
        self.blocks += o.blocks;
        self.merges += o.merges;
        self.max_fan_in = self.max_fan_in.max(o.max_fan_in);
    }
}

impl SortStats {
    pub fn total_comparators(&self) -> u64 {
        self.comparators_fired + self.sentinel_comparators
    }
}

/// Stage count of a bitonic network on `2^m` inputs: `m (m + 1) / 2`.
pub fn bitonic_stages(padded: usize) -> u64 {
    let m = padded.trailing_zeros() as u64;
    m * (m + 1) / 2
}

/// Sorts at most 128 items with the canonical bitonic network, padding to
/// the next power of two with `+inf` sentinels.
pub fn bitonic_sort_block<T: Ord + Copy>(items: &[T]) -> Result<(Vec<T>, SortStats)> {
    if items.len() > MAX_BLOCK {
        return Err(Error::BlockTooLarge(items.len()));
    }
    let mut stats = SortStats {
        elements: items.len() as u64,
        blocks: 1,
        ..Default::default()
    };
    if items.is_empty() {
        return Ok((Vec::new(), stats));
    }
    let n = items.len().next_power_of_two();
    // `None` sorts after every `Some`, acting as +inf.
    let mut v: Vec<Option<T>> = items.iter().copied().map(Some).collect();
    v.resize(n, None);
    let key = |x: &Option<T>| (x.is_none(), *x);

    let mut size = 2;
    while size <= n {
        let mut stride = size / 2;
        while stride > 0 {
            stats.network_stages += 1;
            for i in 0..n {
                let j = i ^ stride;
                if j <= i {
                    continue;
                }
                if v[i].is_some() && v[j].is_some() {
                    stats.comparators_fired += 1;
                } else {
                    stats.sentinel_comparators += 1;
                }
                let ascending = i & size == 0;
                if (key(&v[i]) > key(&v[j])) == ascending {
                    v.swap(i, j);
                }
            }
            stride /= 2;
        }
        size *= 2;
    }
    let out = v.into_iter().take(items.len()).map(|x| x.expect("sentinels sort last")).collect();
    Ok((out, stats))
}

/// One-pass k-way merge of individually sorted runs. Equal keys are
/// emitted in run order.
pub fn stream_merge<T: Ord + Copy>(runs: &[Vec<T>]) -> Result<(Vec<T>, SortStats)> {
    let mut offset = 0;
    for run in runs {
        if let Some(i) = run.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::Unsorted(offset + i + 1));
        }
        offset += run.len();
    }
    let total: usize = runs.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let mut heap: BinaryHeap<Reverse<(T, usize, usize)>> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .map(|(k, r)| Reverse((r[0], k, 0)))
        .collect();
    while let Some(Reverse((x, k, i))) = heap.pop() {
        out.push(x);
        if let Some(&next) = runs[k].get(i + 1) {
            heap.push(Reverse((next, k, i + 1)));
        }
    }
    let stats = SortStats {
        merge_steps: total as u64,
        merges: 1,
        max_fan_in: runs.len() as u64,
        ..Default::default()
    };
    Ok((out, stats))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bucket {
    pub region_index: usize,
    pub items: Vec<Anchor>,
}

/// Bucket `r` of eight holds `ref_pos` in `[r * L / 8, (r + 1) * L / 8)`.
pub fn bucket_of(ref_pos: u32, reference_length: u32) -> usize {
    let b = (ref_pos as u64 * N_BUCKETS as u64) / reference_length.max(1) as u64;
    (b as usize).min(N_BUCKETS - 1)
}

pub fn bucketize(anchors: &[Anchor], reference_length: u32) -> [Bucket; N_BUCKETS] {
    let mut buckets: [Bucket; N_BUCKETS] = std::array::from_fn(|r| Bucket {
        region_index: r,
        items: Vec::new(),
    });
    for a in anchors {
        buckets[bucket_of(a.ref_pos, reference_length)].items.push(*a);
    }
    buckets
}

/// Bucketize, block-sort, merge per bucket, concatenate.
pub fn sort_and_merge(
    anchors: &[Anchor],
    reference_length: u32,
) -> Result<(Vec<Anchor>, [SortStats; N_BUCKETS])> {
    let mut stats = [SortStats::default(); N_BUCKETS];
    let mut out = Vec::with_capacity(anchors.len());
    for bucket in bucketize(anchors, reference_length) {
        let st = &mut stats[bucket.region_index];
        let mut runs = Vec::new();
        for block in bucket.items.chunks(MAX_BLOCK) {
            let (sorted, s) = bitonic_sort_block(block)?;
            *st += s;
            runs.push(sorted);
        }
        match runs.len() {
            0 => {}
            1 => out.extend(runs.pop().unwrap()),
            _ => {
                let (merged, s) = stream_merge(&runs)?;
                *st += s;
                out.extend(merged);
            }
        }
    }
    Ok((out, stats))
}
