use crate::{Error, Result};

/// Signed 16-bit two's-complement fixed point with `fractional_bits`
/// fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    fractional_bits: u8,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        FixedPointFormat { fractional_bits: 8 }
    }
}

impl FixedPointFormat {
    pub const TOTAL_BITS: u8 = 16;

    pub fn new(fractional_bits: u8) -> Result<Self> {
        if fractional_bits > 15 {
            return Err(Error::InvalidArgument(format!(
                "fractional_bits {fractional_bits} outside 0..=15"
            )));
        }
        Ok(FixedPointFormat { fractional_bits })
    }

    pub fn fractional_bits(self) -> u8 {
        self.fractional_bits
    }

    fn one(self) -> f64 {
        (1u32 << self.fractional_bits) as f64
    }

    /// Smallest representable value, `-2^(15-f)`.
    pub fn min_value(self) -> f64 {
        i16::MIN as f64 / self.one()
    }

    /// Largest representable value, `2^(15-f) - 2^-f`.
    pub fn max_value(self) -> f64 {
        i16::MAX as f64 / self.one()
    }

    /// Converts with round-half-to-even, saturating at the range ends.
    pub fn to_fixed(self, x: f64) -> i16 {
        self.to_fixed_checked(x, true)
            .expect("saturating conversion cannot overflow")
    }

    /// Converts with round-half-to-even. Out-of-range values saturate when
    /// `saturate` is set and are an error otherwise.
    pub fn to_fixed_checked(self, x: f64, saturate: bool) -> Result<i16> {
        if x.is_nan() {
            return Err(Error::InvalidArgument("NaN has no fixed-point code".into()));
        }
        let scaled = (x * self.one()).round_ties_even();
        if scaled > i16::MAX as f64 || scaled < i16::MIN as f64 {
            if !saturate {
                return Err(Error::FixedOverflow {
                    value: x,
                    fractional_bits: self.fractional_bits,
                });
            }
            return Ok(if scaled > 0.0 { i16::MAX } else { i16::MIN });
        }
        Ok(scaled as i16)
    }

    pub fn from_fixed(self, code: i16) -> f64 {
        code as f64 / self.one()
    }
}
