//! Rendering and parsing of numbers in documents and CSV files.
//!
//! Values within relative distance 5e-15 of a rational `p/q` with
//! `q <= 10^6` and `|p| <= 10^6 q / max(1, |x|)` are written as `p/q` (or
//! `p`), everything else as a decimal with 12 significant digits. The
//! denominator cap shrinks with the magnitude because large values are
//! otherwise close to some fraction almost always.

use crate::expr::{parse_rational, rational_to_f64};

const MAX_DENOM: i64 = 1_000_000;
const RATIONAL_TOL: f64 = 5e-15;

/// Best rational approximation `p/q` of `x` with `q <= max_denom`, via
/// continued fractions. Returns `None` for non-finite input.
pub fn approximate_rational(x: f64, max_denom: i64) -> Option<(i64, i64)> {
    if !x.is_finite() || x.abs() > 1e15 {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_denom {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-18 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 == 0 {
        None
    } else {
        Some((h1, k1))
    }
}

/// Renders a number as an exact rational string when it is one, else as a
/// decimal with 12 significant digits.
pub fn render(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let max_denom = (MAX_DENOM as f64 / x.abs().max(1.0)).floor() as i64;
    if let Some((p, q)) = approximate_rational(x, max_denom.max(1)) {
        if (p as f64 / q as f64 - x).abs() <= RATIONAL_TOL * x.abs() {
            return if q == 1 { p.to_string() } else { format!("{p}/{q}") };
        }
    }
    render_decimal(x)
}

/// Decimal with 12 significant digits, trailing zeros trimmed.
pub fn render_decimal(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 11 - mag;
    if !(0..=40).contains(&decimals) {
        return format!("{x:.11e}");
    }
    let s = format!("{:.*}", decimals as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Parses `p/q`, integers, decimals, or scientific notation.
pub fn parse_number(text: &str) -> Option<f64> {
    match parse_rational(text) {
        Some(r) => Some(rational_to_f64(&r)),
        None => text.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}
