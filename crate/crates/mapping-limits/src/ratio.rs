//! Small helpers around `BigRational`: literals, parsing, and dyadic draws.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;

/// Shorthand rational constructor for tests and small constants.
pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parse `a/b`, a bare integer, or a decimal such as `0.05` (kept exact).
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let numer: BigInt = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let denom: BigInt = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        if denom.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(BigRational::new(numer, denom));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let int_part = if int_part.is_empty() || int_part == "-" {
            format!("{int_part}0")
        } else {
            int_part.to_string()
        };
        let whole: BigInt = int_part
            .parse()
            .map_err(|_| format!("bad decimal in `{s}`"))?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal in `{s}`"));
        }
        let frac: BigInt = frac_part.parse().unwrap();
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let signed_frac = if s.starts_with('-') { -frac } else { frac };
        return Ok(BigRational::new(whole * &scale + signed_frac, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad rational `{s}`"))?;
    Ok(BigRational::from_integer(n))
}

/// Render as `num/den` with an explicit denominator (used in structure files).
pub fn format_ratio_explicit(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Render for reports: integers without a denominator, otherwise `num/den`.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{r}")
}

/// Decimal rendering with a fixed number of digits (round half away from zero).
pub fn format_decimal(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r * BigRational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let neg = rounded.is_negative();
    let abs = rounded.abs();
    let (q, rem) = (abs.clone() / &scale, abs % &scale);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{q}")
    } else {
        format!("{sign}{q}.{rem:0>width$}", width = digits)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Number of dyadic bits used by [`dyadic`] draws.
pub const DYADIC_BITS: u32 = 53;

/// Uniform dyadic rational k/2^bits in [0,1), exact.
pub fn dyadic(rng: &mut dyn RngCore, bits: u32) -> BigRational {
    assert!(bits >= 1 && bits <= 64, "dyadic precision out of range");
    let raw = rng.next_u64();
    let k = if bits == 64 { raw } else { raw >> (64 - bits) };
    BigRational::new(BigInt::from(k), BigInt::one() << bits as usize)
}
