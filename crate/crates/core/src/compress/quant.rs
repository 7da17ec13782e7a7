//! Symmetric mid-tread uniform quantizer.

use crate::error::{Error, Result};
use crate::plan::check_bits;

/// Codes and scale of one quantized tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub codes: Vec<i64>,
    pub scale: f64,
    pub bits: u8,
}

impl Quantized {
    pub fn dequantize(&self) -> Vec<f64> {
        dequantize(&self.codes, self.scale)
    }
}

/// Largest code magnitude at `bits`: `2^(bits-1) - 1`.
pub fn qmax(bits: u8) -> i64 {
    (1i64 << (bits - 1)) - 1
}

/// `scale = max|w| / qmax`, `code = clamp(round(w / scale))`.
///
/// An all-zero tensor gets scale 0 and all-zero codes.
pub fn quantize_uniform(tensor: &[f64], bits: u8) -> Result<Quantized> {
    check_bits(bits)?;
    if tensor.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("cannot quantize non-finite values".into()));
    }
    let max_abs = tensor.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = max_abs / qmax(bits) as f64;
    Ok(Quantized { codes: codes_for(tensor, bits, scale), scale, bits })
}

/// Codes of `tensor` against a fixed `scale`.
pub(crate) fn codes_for(tensor: &[f64], bits: u8, scale: f64) -> Vec<i64> {
    let q = qmax(bits);
    if scale == 0.0 {
        return vec![0; tensor.len()];
    }
    tensor.iter().map(|w| ((w / scale).round() as i64).clamp(-q, q)).collect()
}

pub fn dequantize(codes: &[i64], scale: f64) -> Vec<f64> {
    codes.iter().map(|&c| c as f64 * scale).collect()
}

/// Whether `tensor` already lies on the grid `code * scale` at `bits`.
pub(crate) fn on_grid(tensor: &[f64], bits: u8, scale: f64) -> bool {
    let q = qmax(bits) as f64;
    if scale == 0.0 {
        return tensor.iter().all(|&v| v == 0.0);
    }
    tensor.iter().all(|&v| {
        let c = (v / scale).round();
        c.abs() <= q && c * scale == v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_four_bit_example() {
        let q = quantize_uniform(&[0.3, -0.6, 0.9], 4).unwrap();
        assert_eq!(q.scale, 0.9 / 7.0);
        assert_eq!(q.codes, vec![2, -5, 7]);
        let d = q.dequantize();
        assert!((d[0] - 0.257_142_857_142_857).abs() < 1e-12);
        assert!((d[1] + 0.642_857_142_857_143).abs() < 1e-12);
        assert!((d[2] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_is_mid_tread() {
        let q = quantize_uniform(&[0.0, 1.0], 2).unwrap();
        assert_eq!(q.codes[0], 0);
        assert_eq!(q.dequantize()[0], 0.0);
    }

    #[test]
    fn all_zero_tensor_has_zero_scale() {
        let q = quantize_uniform(&[0.0; 4], 8).unwrap();
        assert_eq!(q.scale, 0.0);
        assert_eq!(q.codes, vec![0; 4]);
    }

    #[test]
    fn bit_range_checked() {
        assert!(quantize_uniform(&[1.0], 1).is_err());
        assert!(quantize_uniform(&[1.0], 33).is_err());
        assert!(quantize_uniform(&[f64::NAN], 8).is_err());
    }

    #[test]
    fn dequantized_values_stay_on_grid() {
        let q = quantize_uniform(&[0.11, -0.73, 0.5, 0.02], 6).unwrap();
        assert!(on_grid(&q.dequantize(), 6, q.scale));
        assert_eq!(codes_for(&q.dequantize(), 6, q.scale), q.codes);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(5000))]
        #[test]
        fn rounding_error_at_most_half_step(
            values in prop::collection::vec(-10.0f64..10.0, 1..64),
            bits in 2u8..=32,
        ) {
            let q = quantize_uniform(&values, bits).unwrap();
            for (w, d) in values.iter().zip(q.dequantize()) {
                prop_assert!((w - d).abs() <= q.scale / 2.0, "w={w} d={d} scale={}", q.scale);
            }
        }
    }
}
