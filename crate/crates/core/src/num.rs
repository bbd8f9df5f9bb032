//! Helpers around [`rug::Float`], the configurable-precision real used throughout.

use rug::Float;

pub use rug::Float as Real;

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const MIN_PRECISION_BITS: u32 = 64;

pub fn real(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

pub fn int(prec: u32, v: i64) -> Float {
    Float::with_val(prec, v)
}

/// Decimal string that reads back to the same value at the same precision.
pub fn exact_string(x: &Float) -> String {
    x.to_string_radix(10, None)
}

pub fn parse_real(prec: u32, s: &str) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(prec, p))
}

/// `|a - b| / |b|`, or `|a - b|` when `b` is zero, as an `f64`.
pub fn rel_diff(a: &Float, b: &Float) -> f64 {
    let prec = a.prec().max(b.prec());
    let diff = Float::with_val(prec, a - b).abs();
    if b.is_zero() {
        diff.to_f64()
    } else {
        (diff / b.clone().abs()).to_f64()
    }
}

/// Round to `prec` bits (round-to-nearest).
pub fn round_to(x: &Float, prec: u32) -> Float {
    Float::with_val(prec, x)
}

/// `2^-bits` as an `f64`, the unit roundoff scale for a precision.
pub fn epsilon(bits: u32) -> f64 {
    2f64.powi(-(bits.min(1000) as i32))
}
