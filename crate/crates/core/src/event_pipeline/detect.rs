//! Welch t-test segmentation.
//!
//! For every candidate boundary `i` the samples `[i - w, i)` and `[i, i + w)`
//! are compared with
//!
//! ```text
//! t^2 = (m1 - m2)^2 / ((v1 + v2) / w)
//! ```
//!
//! where `v` is the unbiased sample variance, floored at the quantization
//! noise variance of one bucket (`1/12` in bucket units). Boundaries are
//! the local maxima of `t` above the threshold, kept at least
//! `min_event_len` samples apart.
//!
//! In [`Arithmetic::Fixed`] mode the statistic is evaluated on integer
//! bucket indices with exact prefix sums and compared as a Q16 integer.

use super::{Arithmetic, Event, FixedPointFormat, QuantizationParams, QuantizedStream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub window: usize,
    pub threshold_t: f64,
    pub min_event_len: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            window: 6,
            threshold_t: 4.0,
            min_event_len: 3,
        }
    }
}

impl DetectorParams {
    fn check(&self, len: usize) -> Result<()> {
        if self.window < 3 {
            return Err(Error::InvalidArgument(format!(
                "window {} < 3",
                self.window
            )));
        }
        if !(self.threshold_t >= 0.0) {
            return Err(Error::InvalidArgument("negative t threshold".into()));
        }
        if len < 2 * self.window {
            return Err(Error::SignalTooShort {
                len,
                min: 2 * self.window,
            });
        }
        Ok(())
    }
}

const Q16: f64 = 65536.0;

/// `t^2` in Q16 for every boundary position, computed from integer codes.
/// Entries outside `[w, n - w]` are zero.
fn scores_fixed(codes: &[u16], w: usize) -> Vec<u64> {
    let n = codes.len();
    let mut s = vec![0i64; n + 1];
    let mut q = vec![0i64; n + 1];
    for (i, &c) in codes.iter().enumerate() {
        let c = c as i64;
        s[i + 1] = s[i] + c;
        q[i + 1] = q[i] + c * c;
    }
    let wi = w as i64;
    // Six times the variance floor: 2 * w * (w - 1) / 12.
    let floor6 = wi * (wi - 1);
    let mut out = vec![0u64; n + 1];
    for i in w..=n - w {
        let s1 = s[i] - s[i - w];
        let s2 = s[i + w] - s[i];
        let q1 = q[i] - q[i - w];
        let q2 = q[i + w] - q[i];
        let d = (wi * q1 - s1 * s1) + (wi * q2 - s2 * s2);
        let d6 = (6 * d).max(floor6) as u128;
        let diff = (s1 - s2).unsigned_abs() as u128;
        let num = 6 * diff * diff * (wi as u128 - 1);
        out[i] = ((num << 16) / d6).min(u64::MAX as u128) as u64;
    }
    out
}

/// `t^2` for every boundary position over real values, with the variance
/// floored at `var_floor`.
fn scores_float(values: &[f64], w: usize, var_floor: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n + 1];
    let wf = w as f64;
    let stats = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / wf;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (wf - 1.0);
        (m, v.max(var_floor))
    };
    for i in w..=n - w {
        let (m1, v1) = stats(&values[i - w..i]);
        let (m2, v2) = stats(&values[i..i + w]);
        out[i] = (m1 - m2).powi(2) / ((v1 + v2) / wf);
    }
    out
}

/// Boundary positions from a score profile: local maxima above
/// `threshold`, at least `min_len` apart and from both ends.
fn pick_boundaries<T: PartialOrd + Copy>(scores: &[T], threshold: T, min_len: usize) -> Vec<usize> {
    let n = scores.len() - 1;
    let mut kept: Vec<usize> = Vec::new();
    for i in 1..n {
        let s = scores[i];
        if !(s > threshold && s > scores[i - 1] && s >= scores[i + 1]) {
            continue;
        }
        if i < min_len || n - i < min_len {
            continue;
        }
        match kept.last_mut() {
            Some(last) if i - *last < min_len => {
                if s > scores[*last] {
                    *last = i;
                }
            }
            _ => kept.push(i),
        }
    }
    kept
}

fn events_from_boundaries(
    n: usize,
    boundaries: &[usize],
    mut mean_code: impl FnMut(usize, usize) -> i16,
) -> Vec<Event> {
    let mut events = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for &end in boundaries.iter().chain(std::iter::once(&n)) {
        events.push(Event {
            mean_code: mean_code(start, end),
            length: (end - start) as u32,
            start_index: start as u32,
        });
        start = end;
    }
    events
}

/// Segments a quantized stream into events.
///
/// Each event's `mean_code` is the fixed-point mean of its samples'
/// bucket centers.
pub fn detect_events(
    stream: &QuantizedStream,
    det: &DetectorParams,
    format: FixedPointFormat,
    arithmetic: Arithmetic,
) -> Result<Vec<Event>> {
    let n = stream.codes.len();
    det.check(n)?;
    let params = &stream.params;
    let w = det.window;
    let events = match arithmetic {
        Arithmetic::Fixed => {
            let scores = scores_fixed(&stream.codes, w);
            let thr = (det.threshold_t * det.threshold_t * Q16).round() as u64;
            let boundaries = pick_boundaries(&scores, thr, det.min_event_len);
            let center: Vec<i64> = (0..params.levels())
                .map(|b| format.to_fixed(params.center_z(b)) as i64)
                .collect();
            let mut prefix = vec![0i64; n + 1];
            for (i, &c) in stream.codes.iter().enumerate() {
                prefix[i + 1] = prefix[i] + center[c as usize];
            }
            events_from_boundaries(n, &boundaries, |a, b| {
                let sum = prefix[b] - prefix[a];
                let len = (b - a) as i64;
                // Nearest integer, ties away from zero.
                let q = (2 * sum + sum.signum() * len) / (2 * len);
                q.clamp(i16::MIN as i64, i16::MAX as i64) as i16
            })
        }
        Arithmetic::Float => {
            let values: Vec<f64> = stream.codes.iter().map(|&c| params.center_z(c)).collect();
            let floor = params.bucket_width_z().powi(2) / 12.0;
            let scores = scores_float(&values, w, floor);
            let thr = det.threshold_t * det.threshold_t;
            let boundaries = pick_boundaries(&scores, thr, det.min_event_len);
            events_from_boundaries(n, &boundaries, |a, b| {
                let mean = values[a..b].iter().sum::<f64>() / (b - a) as f64;
                format.to_fixed(mean)
            })
        }
    };
    Ok(events)
}

/// Event detection on normalized (unquantized) samples, quantizing each
/// event mean afterwards: the conventional ordering, kept for comparison.
pub fn detect_then_quantize(
    samples: &[f64],
    params: &QuantizationParams,
    det: &DetectorParams,
    format: FixedPointFormat,
) -> Result<Vec<Event>> {
    det.check(samples.len())?;
    let z: Vec<f64> = samples
        .iter()
        .map(|&x| params.normalize(x).clamp(-super::CLAMP_SIGMA, super::CLAMP_SIGMA))
        .collect();
    let floor = params.bucket_width_z().powi(2) / 12.0;
    let scores = scores_float(&z, det.window, floor);
    let boundaries = pick_boundaries(
        &scores,
        det.threshold_t * det.threshold_t,
        det.min_event_len,
    );
    Ok(events_from_boundaries(z.len(), &boundaries, |a, b| {
        let mean = z[a..b].iter().sum::<f64>() / (b - a) as f64;
        format.to_fixed(params.center_z(params.bucket_of_z(mean)))
    }))
}
