//! The advice language and its compilation into opinions.
//!
//! Advice files hold one `[x, y], v` entry per line with `v` in `-2..=2`.
//! Blank lines are skipped and `#` starts a comment that runs to the end of
//! the line. An empty file is a valid, empty advice list.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::opinion::{Opinion, OpinionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdviceError {
    #[error("advice parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
}

/// A judgment `v` about the cell at column `x`, row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Advice {
    pub x: usize,
    pub y: usize,
    pub value: i8,
}

impl fmt::Display for Advice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}], {}", self.x, self.y, self.value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdviceList(pub Vec<Advice>);

impl AdviceList {
    pub fn parse(text: &str) -> Result<Self, AdviceError> {
        parse_advice(text)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Advice> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical rendering, one `[x, y], v` per line.
    pub fn render(&self) -> String {
        self.0.iter().map(|a| format!("{a}\n")).collect()
    }
}

impl FromStr for AdviceList {
    type Err = AdviceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_advice(s)
    }
}

impl<'a> IntoIterator for &'a AdviceList {
    type Item = &'a Advice;
    type IntoIter = std::slice::Iter<'a, Advice>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

struct LineParser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl LineParser {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, AdviceError> {
        Err(AdviceError::Parse {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<(), AdviceError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.error(format!("expected '{want}', found '{c}'")),
            None => self.error(format!("expected '{want}', found end of line")),
        }
    }

    fn integer(&mut self) -> Result<usize, AdviceError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected a non-negative integer");
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().or_else(|_| {
            self.pos = start;
            self.error(format!("integer '{digits}' is too large"))
        })
    }

    fn value(&mut self) -> Result<i8, AdviceError> {
        self.skip_ws();
        let start = self.pos;
        let negative = self.peek() == Some('-');
        if negative {
            self.pos += 1;
        }
        let digit_start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if digit_start == self.pos {
            return self.error("expected an advice value in -2..2");
        }
        let digits: String = self.chars[digit_start..self.pos].iter().collect();
        match digits.parse::<i8>() {
            Ok(v) if v <= 2 && digits.len() == 1 => Ok(if negative { -v } else { v }),
            _ => {
                self.pos = start;
                let sign = if negative { "-" } else { "" };
                self.error(format!("advice value {sign}{digits} is outside -2..2"))
            }
        }
    }

    fn advice(&mut self) -> Result<Advice, AdviceError> {
        self.expect('[')?;
        let x = self.integer()?;
        self.expect(',')?;
        let y = self.integer()?;
        self.expect(']')?;
        self.expect(',')?;
        let value = self.value()?;
        self.skip_ws();
        if let Some(c) = self.peek() {
            return self.error(format!("unexpected trailing '{c}'"));
        }
        Ok(Advice { x, y, value })
    }
}

/// Parses an advice document into an ordered list.
pub fn parse_advice(text: &str) -> Result<AdviceList, AdviceError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        out.push(LineParser::new(content, i + 1).advice()?);
    }
    Ok(AdviceList(out))
}

/// Length of the ordinal advice scale; only odd lengths are accepted so the
/// scale has a neutral midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdviceScale {
    n: u32,
}

impl Default for AdviceScale {
    fn default() -> Self {
        Self { n: 5 }
    }
}

impl AdviceScale {
    pub fn new(n: u32) -> Result<Self, AdviceError> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(AdviceError::InvalidInput(format!(
                "advice scale length must be odd and at least 3, got {n}"
            )));
        }
        Ok(Self { n })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.n
    }

    /// Largest advice value on the scale.
    pub fn max_value(&self) -> i32 {
        (self.n as i32 - 1) / 2
    }

    /// Ordinal `j = v + (n + 1) / 2`, in `1..=n`.
    pub fn ordinal(&self, value: i32) -> Result<u32, AdviceError> {
        let j = value + (self.n as i32 + 1) / 2;
        if j < 1 || j > self.n as i32 {
            return Err(AdviceError::InvalidInput(format!(
                "advice value {value} is outside the scale of length {}",
                self.n
            )));
        }
        Ok(j as u32)
    }
}

/// Distance-based uncertainty calibration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSpec {
    pub u_max: f64,
    pub delta_max: f64,
    pub tau: Option<f64>,
}

impl DiscountSpec {
    pub fn new(u_max: f64, delta_max: f64, tau: Option<f64>) -> Result<Self, AdviceError> {
        if !(0.0..=1.0).contains(&u_max) {
            return Err(AdviceError::InvalidInput(format!("u_max {u_max} is outside [0, 1]")));
        }
        if delta_max.is_nan() || delta_max <= 0.0 || delta_max.is_infinite() {
            return Err(AdviceError::InvalidInput(format!(
                "maximum distance {delta_max} must be positive"
            )));
        }
        if let Some(t) = tau {
            if !(t > 0.0 && t < 1.0) {
                return Err(AdviceError::InvalidInput(format!("threshold {t} is outside (0, 1)")));
            }
        }
        Ok(Self { u_max, delta_max, tau })
    }

    fn check_delta(&self, delta: f64) -> Result<(), AdviceError> {
        if !(0.0..=self.delta_max).contains(&delta) {
            return Err(AdviceError::InvalidInput(format!(
                "distance {delta} is outside [0, {}]",
                self.delta_max
            )));
        }
        Ok(())
    }

    /// Dispatches on whether a threshold is configured.
    pub fn uncertainty(&self, delta: f64) -> Result<f64, AdviceError> {
        match self.tau {
            Some(_) => thresholded_discount(delta, self),
            None => linear_discount(delta, self),
        }
    }
}

/// Uniform prior over `action_count` actions.
pub fn base_rate(action_count: usize) -> Result<f64, AdviceError> {
    if action_count == 0 {
        return Err(AdviceError::InvalidInput("action count must be positive".into()));
    }
    Ok(1.0 / action_count as f64)
}

/// `u = (delta / delta_max) * u_max`.
pub fn linear_discount(delta: f64, spec: &DiscountSpec) -> Result<f64, AdviceError> {
    spec.check_delta(delta)?;
    Ok((delta / spec.delta_max * spec.u_max).min(spec.u_max))
}

/// Like [`linear_discount`] but reaches `u_max` already at `tau * delta_max`.
pub fn thresholded_discount(delta: f64, spec: &DiscountSpec) -> Result<f64, AdviceError> {
    spec.check_delta(delta)?;
    let tau = spec.tau.ok_or_else(|| {
        AdviceError::InvalidInput("thresholded discount needs a threshold".into())
    })?;
    if delta <= tau * spec.delta_max {
        Ok((delta / (tau * spec.delta_max) * spec.u_max).min(spec.u_max))
    } else {
        Ok(spec.u_max)
    }
}

/// Compiles one advice into an opinion with uncertainty `u`.
///
/// The mass `1 - u` is split between belief and disbelief in proportion
/// `(j - 1) : (n - j)` where `j` is the ordinal of the advice value.
pub fn compile_opinion(
    advice: &Advice,
    scale: AdviceScale,
    u: f64,
    action_count: usize,
) -> Result<Opinion, AdviceError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(AdviceError::InvalidInput(format!("uncertainty {u} is outside [0, 1]")));
    }
    let a = base_rate(action_count)?;
    let n = scale.len() as f64;
    let j = scale.ordinal(advice.value as i32)? as f64;
    let committed = 1.0 - u;
    let b = (j - 1.0) / (n - 1.0) * committed;
    let d = committed - b;
    Ok(Opinion::new(b, d, u, a)?)
}
