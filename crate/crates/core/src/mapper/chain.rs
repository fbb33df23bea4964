//! Colinear chaining by bounded-scan dynamic programming.
//!
//! Scores are Q8 fixed point (`1 << 8` is one unit) and only additions,
//! subtractions and comparisons are used:
//!
//! ```text
//! f(i) = w + max(0, max_j { f(j) - |(r_i - r_j) - (q_i - q_j) * e2b| })
//! ```
//!
//! over predecessors `j` with `r_j < r_i`, `q_j < q_i` and both gaps at most
//! `max_gap`, scanning at most `max_skip` predecessors per anchor.

use super::Anchor;
use crate::{Error, Result};

pub const SCORE_FRAC_BITS: u32 = 8;
pub const SCORE_ONE: i64 = 1 << SCORE_FRAC_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub max_gap: u32,
    pub max_skip: usize,
    /// Bases per read event, Q8.
    pub events_to_bases: i64,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            max_gap: 500,
            max_skip: 25,
            events_to_bases: SCORE_ONE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Chain {
    pub anchors: Vec<Anchor>,
    /// Q8 chain score.
    pub score: i64,
    pub ref_start: u32,
    pub ref_end: u32,
}

impl Chain {
    pub fn score_f64(&self) -> f64 {
        self.score as f64 / SCORE_ONE as f64
    }
}

/// Gap cost between consecutive chain members `j` then `i`, Q8.
#[inline]
pub fn gap_cost(j: &Anchor, i: &Anchor, events_to_bases: i64) -> i64 {
    let dr = (i.ref_pos as i64 - j.ref_pos as i64) * SCORE_ONE;
    let dq = (i.read_pos as i64 - j.read_pos as i64) * events_to_bases;
    (dr - dq).abs()
}

/// Whether `i` may directly follow `j` in a chain.
#[inline]
pub fn can_follow(j: &Anchor, i: &Anchor, max_gap: u32) -> bool {
    j.ref_pos < i.ref_pos
        && j.read_pos < i.read_pos
        && i.ref_pos - j.ref_pos <= max_gap
        && i.read_pos - j.read_pos <= max_gap
}

/// Best chain over `anchors`, which must be sorted by `(ref_pos, read_pos)`.
/// `weight` is the Q8 score of a single anchor.
///
/// Ties on score go to the chain with the smaller reference start, then to
/// the one with more anchors. Also returns the number of predecessor
/// checks performed.
pub fn chain_with_stats(
    anchors: &[Anchor],
    weight: i64,
    params: &ChainParams,
) -> Result<(Chain, u64)> {
    if let Some(i) = anchors.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::Unsorted(i + 1));
    }
    let n = anchors.len();
    if n == 0 {
        return Ok((Chain::default(), 0));
    }
    let mut f = vec![0i64; n];
    let mut pred = vec![usize::MAX; n];
    let mut start = vec![0u32; n];
    let mut count = vec![0u32; n];
    let mut scanned = 0u64;
    // Candidate order: higher score, then smaller start, then more anchors.
    let better = |s: i64, st: u32, c: u32, bs: i64, bst: u32, bc: u32| {
        (s, std::cmp::Reverse(st), c) > (bs, std::cmp::Reverse(bst), bc)
    };

    for i in 0..n {
        let ai = &anchors[i];
        let (mut best, mut best_j) = (0i64, usize::MAX);
        let (mut best_start, mut best_count) = (ai.ref_pos, 0u32);
        for j in (i.saturating_sub(params.max_skip)..i).rev() {
            let aj = &anchors[j];
            if ai.ref_pos - aj.ref_pos > params.max_gap {
                break;
            }
            scanned += 1;
            if !can_follow(aj, ai, params.max_gap) {
                continue;
            }
            let s = f[j] - gap_cost(aj, ai, params.events_to_bases);
            if s < 0 {
                continue;
            }
            if better(s, start[j], count[j], best, best_start, best_count) {
                best = s;
                best_j = j;
                best_start = start[j];
                best_count = count[j];
            }
        }
        f[i] = weight + best;
        pred[i] = best_j;
        start[i] = best_start;
        count[i] = best_count + 1;
    }

    let mut end = 0;
    for i in 1..n {
        if better(f[i], start[i], count[i], f[end], start[end], count[end]) {
            end = i;
        }
    }
    let mut members = Vec::with_capacity(count[end] as usize);
    let mut i = end;
    loop {
        members.push(anchors[i]);
        if pred[i] == usize::MAX {
            break;
        }
        i = pred[i];
    }
    members.reverse();
    let chain = Chain {
        score: f[end],
        ref_start: members[0].ref_pos,
        ref_end: members.last().unwrap().ref_pos,
        anchors: members,
    };
    Ok((chain, scanned))
}

pub fn chain(anchors: &[Anchor], weight: i64, params: &ChainParams) -> Result<Chain> {
    chain_with_stats(anchors, weight, params).map(|(c, _)| c)
}
