use crate::signal_model::RawSignal;
use crate::{Error, Result};

/// Normalized values are clamped to `[-CLAMP_SIGMA, +CLAMP_SIGMA]` before
/// bucketing.
pub const CLAMP_SIGMA: f64 = 4.0;

/// Consistency constant turning the median absolute deviation into a
/// standard-deviation estimate for Gaussian data.
pub const MAD_SCALE: f64 = 1.4826;

pub const MIN_SIGNAL_LEN: usize = 32;

/// Per-signal affine normalization plus uniform bucketing of the clamped
/// range into `2^bucket_bits` levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationParams {
    bucket_bits: u8,
    pub shift: f64,
    pub scale: f64,
}

impl QuantizationParams {
    pub fn new(bucket_bits: u8, shift: f64, scale: f64) -> Result<Self> {
        if !(2..=10).contains(&bucket_bits) {
            return Err(Error::InvalidArgument(format!(
                "bucket_bits {bucket_bits} outside 2..=10"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid normalization shift {shift}, scale {scale}"
            )));
        }
        Ok(QuantizationParams {
            bucket_bits,
            shift,
            scale,
        })
    }

    pub fn bucket_bits(&self) -> u8 {
        self.bucket_bits
    }

    pub fn levels(&self) -> u16 {
        1 << self.bucket_bits
    }

    /// Width of one bucket in normalized units.
    pub fn bucket_width_z(&self) -> f64 {
        2.0 * CLAMP_SIGMA / self.levels() as f64
    }

    /// Width of one bucket in pA.
    pub fn bucket_width_pa(&self) -> f64 {
        self.bucket_width_z() * self.scale
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }

    pub fn bucket_of_z(&self, z: f64) -> u16 {
        let z = z.clamp(-CLAMP_SIGMA, CLAMP_SIGMA);
        let b = ((z + CLAMP_SIGMA) / self.bucket_width_z()).floor() as i64;
        b.clamp(0, self.levels() as i64 - 1) as u16
    }

    pub fn bucket(&self, x: f64) -> u16 {
        self.bucket_of_z(self.normalize(x))
    }

    /// Normalized value at the center of bucket `b`.
    pub fn center_z(&self, b: u16) -> f64 {
        -CLAMP_SIGMA + (b as f64 + 0.5) * self.bucket_width_z()
    }

    /// Bucket center mapped back to pA.
    pub fn center_pa(&self, b: u16) -> f64 {
        self.center_z(b) * self.scale + self.shift
    }
}

/// Bucket indices of a normalized signal together with the normalization
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedStream {
    pub codes: Vec<u16>,
    pub params: QuantizationParams,
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust location/scale of `samples`: median and `1.4826 * MAD`, falling
/// back to the population standard deviation when the MAD vanishes.
pub fn robust_shift_scale(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::SignalTooShort { len: 0, min: 1 });
    }
    let mut buf = samples.to_vec();
    let median = median_in_place(&mut buf);
    for (d, &x) in buf.iter_mut().zip(samples) {
        *d = (x - median).abs();
    }
    let mad = median_in_place(&mut buf);
    let mut scale = MAD_SCALE * mad;
    if scale == 0.0 {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        scale = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::ZeroDispersion);
    }
    Ok((median, scale))
}

/// Normalizes `raw` by its own median/MAD and buckets every sample.
pub fn normalize_and_quantize(raw: &RawSignal, bucket_bits: u8) -> Result<QuantizedStream> {
    let params = normalization_params(raw, bucket_bits)?;
    let codes = raw.samples.iter().map(|&x| params.bucket(x)).collect();
    Ok(QuantizedStream { codes, params })
}

pub(crate) fn normalization_params(raw: &RawSignal, bucket_bits: u8) -> Result<QuantizationParams> {
    if raw.samples.len() < MIN_SIGNAL_LEN {
        return Err(Error::SignalTooShort {
            len: raw.samples.len(),
            min: MIN_SIGNAL_LEN,
        });
    }
    let (shift, scale) = robust_shift_scale(&raw.samples)?;
    QuantizationParams::new(bucket_bits, shift, scale)
}
