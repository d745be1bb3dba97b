//! Fixed-precision decimal numbers encoded as digit lists.
//!
//! Naturals: `n` is the list of `n` empty lists. Reals: a list of exactly
//! `prec = int_digits + frac_digits` digit nats (each ≤ 9), least significant
//! digit at the front, so `head` is the most significant digit. With
//! `int_digits = frac_digits = 2`, `1.5` is written `"01.50"` and encodes to
//! `<0, 5, 1, 0>`.
//!
//! All arithmetic is total: off-domain operands and overflow yield the
//! in-band `fault` constant rather than an error.

use thiserror::Error;

use crate::eval::EvalError;
use crate::value::{HfList, Value};

/// Global decimal layout for an engine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericConfig {
    pub int_digits: u32,
    pub frac_digits: u32,
}

impl NumericConfig {
    /// `prec = int_digits + frac_digits` must be at least 1.
    pub fn new(int_digits: u32, frac_digits: u32) -> Result<NumericConfig, RealParseError> {
        if int_digits + frac_digits == 0 {
            return Err(RealParseError::ZeroPrecision);
        }
        Ok(NumericConfig {
            int_digits,
            frac_digits,
        })
    }

    pub fn prec(&self) -> usize {
        (self.int_digits + self.frac_digits) as usize
    }
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            int_digits: 2,
            frac_digits: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealParseError {
    #[error("precision must be at least one digit")]
    ZeroPrecision,
    #[error("`{0}` is not a decimal numeral")]
    InvalidNumeral(String),
    #[error("integer part of `{text}` needs more than {max} digits")]
    IntegerTooWide { text: String, max: u32 },
    #[error("fractional part of `{text}` needs more than {max} digits")]
    FractionTooWide { text: String, max: u32 },
}

/// The nat `n` as a value.
pub fn nat_of(n: usize) -> Value {
    Value::nat(n)
}

/// True of lists all of whose elements are `<>`.
pub fn is_nat(v: &Value) -> bool {
    v.as_nat().is_some()
}

/// The digit 0..=9 denoted by `v`, if any.
fn digit_of(v: &Value) -> Option<u8> {
    match v.as_nat() {
        Some(d) if d <= 9 => Some(d as u8),
        _ => None,
    }
}

/// True of lists of exactly `prec` digit nats.
pub fn is_real(v: &Value, cfg: &NumericConfig) -> bool {
    match v.as_list() {
        Some(l) => l.len() == cfg.prec() && l.iter_back().all(|d| digit_of(d).is_some()),
        None => false,
    }
}

/// Parses a decimal numeral (`"01.50"`, `"7"`, `".25"`) into a real value.
/// Short parts are zero-padded to the configured widths; parts that need
/// more digits than the configuration allows are rejected.
pub fn encode_real(text: &str, cfg: &NumericConfig) -> Result<Value, RealParseError> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(RealParseError::InvalidNumeral(text.to_string()));
    }
    let int_trimmed = int_part.trim_start_matches('0');
    if int_trimmed.len() > cfg.int_digits as usize {
        return Err(RealParseError::IntegerTooWide {
            text: text.to_string(),
            max: cfg.int_digits,
        });
    }
    let frac_trimmed = frac_part.trim_end_matches('0');
    if frac_trimmed.len() > cfg.frac_digits as usize {
        return Err(RealParseError::FractionTooWide {
            text: text.to_string(),
            max: cfg.frac_digits,
        });
    }

    // Most significant first: padded integer digits, then padded fraction.
    let mut digits = vec![0u8; cfg.int_digits as usize - int_trimmed.len()];
    digits.extend(int_trimmed.bytes().map(|b| b - b'0'));
    digits.extend(frac_trimmed.bytes().map(|b| b - b'0'));
    digits.resize(cfg.prec(), 0u8);

    // Stored least significant first, so the head is the leading digit.
    Ok(Value::List(
        digits
            .iter()
            .rev()
            .map(|&d| Value::nat(d as usize))
            .collect(),
    ))
}

/// Renders a real value back to its canonical numeral.
pub fn decode_real(v: &Value, cfg: &NumericConfig) -> Option<String> {
    if !is_real(v, cfg) {
        return None;
    }
    let digits: Vec<u8> = v
        .as_list()
        .expect("reals are lists")
        .iter_back()
        .map(|d| digit_of(d).expect("reals hold digits"))
        .collect();
    let mut out = String::with_capacity(cfg.prec() + 1);
    for (i, d) in digits.iter().enumerate() {
        if i == cfg.int_digits as usize {
            out.push('.');
        }
        out.push((b'0' + d) as char);
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Eq,
    Gt,
    /// At least one operand is not a real of the configured precision.
    NotComparable,
}

/// Compares two reals digit-wise from the most significant position.
pub fn compare(x: &Value, y: &Value, cfg: &NumericConfig) -> Comparison {
    if !is_real(x, cfg) || !is_real(y, cfg) {
        return Comparison::NotComparable;
    }
    let xs = x.as_list().expect("real");
    let ys = y.as_list().expect("real");
    for (dx, dy) in xs.iter_back().zip(ys.iter_back()) {
        let dx = digit_of(dx).expect("digit");
        let dy = digit_of(dy).expect("digit");
        if dx < dy {
            return Comparison::Lt;
        }
        if dx > dy {
            return Comparison::Gt;
        }
    }
    Comparison::Eq
}

/// Schoolbook addition; `fault` on off-domain operands or overflow past the
/// most significant digit.
pub fn add(x: &Value, y: &Value, cfg: &NumericConfig) -> Value {
    if !is_real(x, cfg) || !is_real(y, cfg) {
        return Value::fault();
    }
    let xs = x.as_list().expect("real").to_vec();
    let ys = y.as_list().expect("real").to_vec();
    let mut out = HfList::new();
    let mut carry = 0u8;
    for (dx, dy) in xs.iter().zip(ys.iter()) {
        let sum = digit_of(dx).expect("digit") + digit_of(dy).expect("digit") + carry;
        out = out.cons(Value::nat((sum % 10) as usize));
        carry = sum / 10;
    }
    if carry != 0 {
        return Value::fault();
    }
    Value::List(out)
}

/// Least element of a nonempty list of reals; `fault` otherwise.
pub fn min_list(t: &Value, cfg: &NumericConfig) -> Value {
    extremum(t, cfg, Comparison::Lt)
}

/// Greatest element of a nonempty list of reals; `fault` otherwise.
pub fn max_list(t: &Value, cfg: &NumericConfig) -> Value {
    extremum(t, cfg, Comparison::Gt)
}

fn extremum(t: &Value, cfg: &NumericConfig, keep: Comparison) -> Value {
    let l = match t.as_list() {
        Some(l) if !l.is_empty() => l,
        _ => return Value::fault(),
    };
    if l.iter_back().any(|e| !is_real(e, cfg)) {
        return Value::fault();
    }
    let mut best = l.head();
    for e in l.to_vec() {
        if compare(&e, &best, cfg) == keep {
            best = e;
        }
    }
    best
}

/// 1-based element access from the front; `fault` in-band when `i` is not a
/// nat or lies outside `1..=len(x)`.
pub fn index(x: &Value, i: &Value) -> Result<Value, EvalError> {
    let l = x
        .as_list()
        .ok_or_else(|| EvalError::atom_operand("index", x))?;
    let pos = match i.as_nat() {
        Some(p) => p,
        None => return Ok(Value::fault()),
    };
    match l.get(pos) {
        Some(e) => Ok(e.clone()),
        None => Ok(Value::fault()),
    }
}
