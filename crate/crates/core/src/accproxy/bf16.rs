//! bfloat16 storage format and the approximate mantissa-multiply product.
//!
//! A [`Bf16`] is the top half of an IEEE-754 binary32: 1 sign bit, 8
//! exponent bits, 7 explicit mantissa bits. Conversion from `f32` truncates
//! the low 16 mantissa bits (no rounding); conversion back shifts the bits
//! into the high half, so a round trip through `f32` is lossless.
//!
//! [`bf16_approx_product`] mirrors the MAC multiplier datapath: signs XOR,
//! exponents add exactly, and the significand product (hidden bit included)
//! runs through a configurable integer multiplier. The full product is
//! widened to `f32` with a single rounding at the very end, so an EXACT
//! multiplier reproduces plain binary32 multiplication of the two operands
//! bit for bit.

use crate::approxmul::{approx_multiply, MultiplierSpec};
use crate::error::Result;

/// A bfloat16 value stored as raw bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bf16(u16);

impl Bf16 {
    pub const ZERO: Bf16 = Bf16(0x0000);

    pub fn from_bits(bits: u16) -> Self {
        Bf16(bits)
    }

    pub fn to_bits(self) -> u16 {
        self.0
    }

    /// Truncating conversion: keeps the high 16 bits of the binary32
    /// encoding. NaN payloads that would truncate to an infinity encoding
    /// get a quiet bit forced so NaN-ness is preserved.
    pub fn from_f32(x: f32) -> Self {
        let bits = (x.to_bits() >> 16) as u16;
        if x.is_nan() && bits & 0x007f == 0 {
            return Bf16(bits | 0x0040);
        }
        Bf16(bits)
    }

    pub fn to_f32(self) -> f32 {
        f32::from_bits((self.0 as u32) << 16)
    }

    pub fn sign(self) -> bool {
        self.0 & 0x8000 != 0
    }

    /// Biased 8-bit exponent field.
    pub fn biased_exponent(self) -> u32 {
        ((self.0 >> 7) & 0xff) as u32
    }

    /// Explicit 7-bit mantissa field.
    pub fn mantissa(self) -> u32 {
        (self.0 & 0x7f) as u32
    }

    pub fn is_nan(self) -> bool {
        self.biased_exponent() == 0xff && self.mantissa() != 0
    }

    pub fn is_infinite(self) -> bool {
        self.biased_exponent() == 0xff && self.mantissa() == 0
    }

    pub fn is_zero(self) -> bool {
        self.0 & 0x7fff == 0
    }

    /// Integer significand (hidden bit included for normals) and the power
    /// of two `s` such that `|value| = significand * 2^s`.
    fn decompose(self) -> (u64, i32) {
        let e = self.biased_exponent();
        let m = self.mantissa() as u64;
        if e == 0 {
            // Subnormal: value = 0.mantissa * 2^-126.
            (m, -126 - 7)
        } else {
            ((1 << 7) | m, e as i32 - 127 - 7)
        }
    }
}

/// Exact power of two as `f64`, valid for normal exponents.
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Multiplies two bfloat16 operands through an approximate significand
/// multiplier and widens the result to `f32`.
///
/// Signs combine by XOR and exponents add exactly. Both significands
/// (hidden bit included) are aligned to the multiplier width — widths above
/// 8 zero-pad from the right, widths below 8 drop low significand bits —
/// and the integer product is scaled back in one exact step, so the only
/// rounding is the final `f64 -> f32` conversion. Zeros produce a signed
/// zero, out-of-range magnitudes produce a signed infinity, NaN operands
/// propagate NaN, and infinity times zero is NaN.
pub fn bf16_approx_product(spec: &MultiplierSpec, x: Bf16, w: Bf16) -> Result<f32> {
    if x.is_nan() || w.is_nan() {
        return Ok(f32::NAN);
    }
    let sign = x.sign() ^ w.sign();
    let signed = |v: f32| if sign { -v } else { v };
    if x.is_infinite() || w.is_infinite() {
        if x.is_zero() || w.is_zero() {
            return Ok(f32::NAN);
        }
        return Ok(signed(f32::INFINITY));
    }
    if x.is_zero() || w.is_zero() {
        return Ok(signed(0.0));
    }

    let (mut sig_x, mut scale_x) = x.decompose();
    let (mut sig_w, mut scale_w) = w.decompose();
    // Align the 8-bit significand to the multiplier operand width.
    let width = spec.width as i32;
    if width >= 8 {
        sig_x <<= (width - 8) as u32;
        sig_w <<= (width - 8) as u32;
        scale_x -= width - 8;
        scale_w -= width - 8;
    } else {
        sig_x >>= (8 - width) as u32;
        sig_w >>= (8 - width) as u32;
        scale_x += 8 - width;
        scale_w += 8 - width;
    }

    let product = approx_multiply(spec, sig_x, sig_w)?;
    if product == 0 {
        return Ok(signed(0.0));
    }
    // product < 2^32 and the scale stays well inside f64's normal range, so
    // this is exact; the final cast is the single rounding step.
    let magnitude = product as f64 * pow2(scale_x + scale_w);
    Ok(signed(magnitude as f32))
}
