//! Canonical math-answer values and equivalence.
//!
//! The parse grammar is deliberately bounded: integers, signed decimals,
//! percentages, simple `a/b` fractions, `\frac{a}{b}` markup, and
//! scientific notation, with `$ … $`, `\( … \)`, `\[ … \]`, and
//! `\boxed{…}` wrappers stripped. Everything else canonicalizes to a
//! normalized symbol compared by string equality. No general symbolic
//! algebra.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::RewardError;

/// Canonical form of a math answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MathValue {
    /// Reduced fraction: denominator > 0, gcd(|numerator|, denominator) = 1.
    ExactRational { numerator: i64, denominator: i64 },
    Float(f64),
    NormalizedSymbol(String),
}

/// A parsed math answer plus the surface text it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMathValue {
    pub variant: MathValue,
    pub source: String,
}

impl CanonicalMathValue {
    pub fn rational(numerator: i64, denominator: i64) -> Self {
        let (n, d) = reduce(numerator as i128, denominator as i128)
            .expect("rational out of range for i64");
        Self {
            variant: MathValue::ExactRational {
                numerator: n,
                denominator: d,
            },
            source: format!("{numerator}/{denominator}"),
        }
    }

    pub fn float(value: f64) -> Self {
        Self {
            variant: MathValue::Float(value),
            source: value.to_string(),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self.variant {
            MathValue::ExactRational {
                numerator,
                denominator,
            } => Some(numerator as f64 / denominator as f64),
            MathValue::Float(v) => Some(v),
            MathValue::NormalizedSymbol(_) => None,
        }
    }
}

/// Parse a math answer into canonical form.
///
/// Unparseable non-blank input becomes a [`MathValue::NormalizedSymbol`];
/// only blank input (after wrapper stripping) is an error.
pub fn normalize_math_answer(text: &str) -> Result<CanonicalMathValue, RewardError> {
    let source = text.to_string();
    let normalized: String = text.nfc().collect();
    let stripped = strip_wrappers(normalized.trim());
    if stripped.is_empty() {
        return Err(RewardError::Empty);
    }
    let variant = parse_numeric(stripped)
        .unwrap_or_else(|| MathValue::NormalizedSymbol(normalize_symbol(stripped)));
    Ok(CanonicalMathValue { variant, source })
}

/// Equivalence under the canonical forms.
///
/// Rational–rational compares exactly; symbol–symbol by string equality;
/// any comparison involving a float uses relative tolerance `tol`
/// (absolute when either side is zero). Symbols never equal numerics.
pub fn math_equivalent(a: &CanonicalMathValue, b: &CanonicalMathValue, tol: f64) -> bool {
    use MathValue::*;
    match (&a.variant, &b.variant) {
        (
            ExactRational {
                numerator: n1,
                denominator: d1,
            },
            ExactRational {
                numerator: n2,
                denominator: d2,
            },
        ) => n1 == n2 && d1 == d2,
        (NormalizedSymbol(x), NormalizedSymbol(y)) => x == y,
        (NormalizedSymbol(_), _) | (_, NormalizedSymbol(_)) => false,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => floats_close(x, y, tol),
            _ => false,
        },
    }
}

fn floats_close(x: f64, y: f64, tol: f64) -> bool {
    if x == y {
        return true;
    }
    if !x.is_finite() || !y.is_finite() {
        return false;
    }
    if x == 0.0 || y == 0.0 {
        return (x - y).abs() <= tol;
    }
    (x - y).abs() <= tol * x.abs().max(y.abs())
}

/// Peel `$…$`, `\(...\)`, `\[...\]`, and `\boxed{…}` (plus whitespace)
/// until nothing more comes off.
fn strip_wrappers(mut s: &str) -> &str {
    loop {
        let before = s;
        s = s.trim();
        for (open, close) in [("$$", "$$"), ("$", "$"), ("\\(", "\\)"), ("\\[", "\\]")] {
            if s.len() >= open.len() + close.len() && s.starts_with(open) && s.ends_with(close) {
                s = &s[open.len()..s.len() - close.len()];
            }
        }
        if let Some(inner) = s.strip_prefix("\\boxed{").and_then(|r| r.strip_suffix('}')) {
            s = inner;
        }
        if s == before {
            return s;
        }
    }
}

fn parse_numeric(s: &str) -> Option<MathValue> {
    if let Some(body) = s.strip_suffix('%') {
        let value = parse_plain_number(body.trim_end())?;
        return divide_by(value, 100);
    }
    if let Some(value) = parse_frac_markup(s) {
        return Some(value);
    }
    if let Some(value) = parse_slash_fraction(s) {
        return Some(value);
    }
    parse_plain_number(s)
}

fn parse_frac_markup(s: &str) -> Option<MathValue> {
    let rest = s.strip_prefix("\\frac{")?;
    let close = rest.find('}')?;
    let numerator: i128 = rest[..close].trim().parse().ok()?;
    let rest = rest[close + 1..].strip_prefix('{')?;
    let denominator: i128 = rest.strip_suffix('}')?.trim().parse().ok()?;
    rational_value(numerator, denominator)
}

fn parse_slash_fraction(s: &str) -> Option<MathValue> {
    let (num, den) = s.split_once('/')?;
    if num.contains('/') || den.contains('/') {
        return None;
    }
    let numerator: i128 = num.trim().parse().ok()?;
    let denominator: i128 = den.trim().parse().ok()?;
    rational_value(numerator, denominator)
}

/// Integer, decimal, or scientific-notation literal, kept exact where the
/// value fits an i64 rational; anything wider falls back to a float.
fn parse_plain_number(s: &str) -> Option<MathValue> {
    let cleaned = strip_digit_group_commas(s);
    let bytes = cleaned.as_bytes();
    let mut pos = 0usize;
    let negative = match bytes.first() {
        Some(b'-') => {
            pos += 1;
            true
        }
        Some(b'+') => {
            pos += 1;
            false
        }
        _ => false,
    };
    let int_start = pos;
    while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
        pos += 1;
    }
    let int_digits = &cleaned[int_start..pos];
    let mut frac_digits = "";
    if bytes.get(pos) == Some(&b'.') {
        pos += 1;
        let frac_start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        frac_digits = &cleaned[frac_start..pos];
    }
    if int_digits.is_empty() && frac_digits.is_empty() {
        return None;
    }
    let mut exponent: i32 = 0;
    if matches!(bytes.get(pos), Some(b'e') | Some(b'E')) {
        let exp_start = pos + 1;
        let mut exp_end = exp_start;
        if matches!(bytes.get(exp_end), Some(b'-') | Some(b'+')) {
            exp_end += 1;
        }
        while bytes.get(exp_end).is_some_and(u8::is_ascii_digit) {
            exp_end += 1;
        }
        exponent = cleaned[exp_start..exp_end].parse().ok()?;
        pos = exp_end;
    }
    if pos != cleaned.len() {
        return None;
    }

    let exact = (|| -> Option<MathValue> {
        let mantissa: i128 = format!("{int_digits}{frac_digits}").parse().ok()?;
        let mantissa = if negative { -mantissa } else { mantissa };
        let scale = exponent.checked_sub(i32::try_from(frac_digits.len()).ok()?)?;
        let (numerator, denominator) = if scale >= 0 {
            (mantissa.checked_mul(pow10(scale as u32)?)?, 1)
        } else {
            (mantissa, pow10(scale.unsigned_abs())?)
        };
        rational_value(numerator, denominator)
    })();
    exact.or_else(|| cleaned.parse::<f64>().ok().map(MathValue::Float))
}

/// Remove commas used as digit-group separators ("1,234"); any other comma
/// makes the text non-numeric.
fn strip_digit_group_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(char::is_ascii_digit)
        {
            continue;
        }
        out.push(c);
    }
    out
}

fn pow10(exp: u32) -> Option<i128> {
    10i128.checked_pow(exp)
}

fn divide_by(value: MathValue, divisor: i128) -> Option<MathValue> {
    match value {
        MathValue::ExactRational {
            numerator,
            denominator,
        } => rational_value(
            numerator as i128,
            (denominator as i128).checked_mul(divisor)?,
        ),
        MathValue::Float(v) => Some(MathValue::Float(v / divisor as f64)),
        MathValue::NormalizedSymbol(_) => None,
    }
}

fn rational_value(numerator: i128, denominator: i128) -> Option<MathValue> {
    let (n, d) = reduce(numerator, denominator)?;
    Some(MathValue::ExactRational {
        numerator: n,
        denominator: d,
    })
}

fn reduce(numerator: i128, denominator: i128) -> Option<(i64, i64)> {
    if denominator == 0 {
        return None;
    }
    let sign = if (numerator < 0) != (denominator < 0) && numerator != 0 {
        -1
    } else {
        1
    };
    let (n, d) = (numerator.unsigned_abs(), denominator.unsigned_abs());
    let g = n.gcd(&d).max(1);
    let n = i64::try_from(n / g).ok()? * sign;
    let d = i64::try_from(d / g).ok()?;
    Some((n, d))
}

/// Lowercase, drop whitespace, and strip math markup characters.
fn normalize_symbol(s: &str) -> String {
    s.nfc()
        .flat_map(char::to_lowercase)
        .filter(|c| !c.is_whitespace() && !matches!(c, '$' | '\\' | '{' | '}'))
        .collect()
}
