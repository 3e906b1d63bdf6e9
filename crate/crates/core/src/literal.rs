//! Numeric literals accepted in model files, schedules and CLI flags:
//! decimals (`0.25`, `1e-3`) and exact rationals (`1/3`).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid numeric literal `{0}`")]
pub struct LiteralError(pub String);

/// Parses a decimal or `num/den` literal.
///
/// Rationals are parsed as exact integers and converted with a single
/// correctly-rounded division, so `1/3` yields the `f64` nearest to one
/// third.
pub fn parse_number(s: &str) -> Result<f64, LiteralError> {
    let s = s.trim();
    let err = || LiteralError(s.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| err())?;
        let den: i64 = den.trim().parse().map_err(|_| err())?;
        // beyond 2^53 the integer-to-float conversion is no longer exact
        const EXACT: i64 = 1 << 53;
        if den <= 0 || num.abs() > EXACT || den > EXACT {
            return Err(err());
        }
        Ok(num as f64 / den as f64)
    } else {
        let v: f64 = s.parse().map_err(|_| err())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err())
        }
    }
}

/// Parses a comma-separated list of literals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, LiteralError> {
    s.split(',').map(parse_number).collect()
}
