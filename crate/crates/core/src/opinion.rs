//! Binomial subjective-logic opinions and Belief Constraint Fusion.
//!
//! An [`Opinion`] is a point on the belief/disbelief/uncertainty simplex
//! together with a base rate. Every constructor validates the simplex
//! constraint, so any `Opinion` value in hand is well formed.

use std::fmt;

use thiserror::Error;

/// Tolerance on `b + d + u = 1` accepted at construction.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpinionError {
    #[error("opinion constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("total conflict between dogmatic opinions {0} and {1}")]
    TotalConflict(Opinion, Opinion),
    #[error("cannot fuse an empty collection of opinions")]
    EmptyInput,
}

/// A binomial opinion `(belief, disbelief, uncertainty, base_rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opinion {
    b: f64,
    d: f64,
    u: f64,
    a: f64,
}

impl Opinion {
    /// Validates and builds an opinion. Masses within [`SIMPLEX_TOLERANCE`]
    /// of summing to one are rescaled so they sum to one exactly.
    pub fn new(b: f64, d: f64, u: f64, a: f64) -> Result<Self, OpinionError> {
        for (name, value) in [("b", b), ("d", d), ("u", u), ("a", a)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(OpinionError::ConstraintViolation(format!(
                    "{name} = {value} is outside [0, 1]"
                )));
            }
        }
        let sum = b + d + u;
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(OpinionError::ConstraintViolation(format!(
                "b + d + u = {sum}, expected 1"
            )));
        }
        if sum == 1.0 {
            return Ok(Self { b, d, u, a });
        }
        let (b, d, u) = (b / sum, d / sum, u / sum);
        Ok(Self {
            b: b.min(1.0),
            d: d.min(1.0),
            u: u.min(1.0),
            a,
        })
    }

    /// The fully uncertain opinion with the given base rate.
    pub fn vacuous(a: f64) -> Result<Self, OpinionError> {
        Self::new(0.0, 0.0, 1.0, a)
    }

    /// Dogmatic opinion `(p, 1 - p, 0, p)` equivalent to the probability `p`.
    pub fn from_probability(p: f64) -> Result<Self, OpinionError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(OpinionError::ConstraintViolation(format!(
                "probability {p} is outside [0, 1]"
            )));
        }
        Ok(Self {
            b: p,
            d: 1.0 - p,
            u: 0.0,
            a: p,
        })
    }

    pub fn belief(&self) -> f64 {
        self.b
    }

    pub fn disbelief(&self) -> f64 {
        self.d
    }

    pub fn uncertainty(&self) -> f64 {
        self.u
    }

    pub fn base_rate(&self) -> f64 {
        self.a
    }

    pub fn is_dogmatic(&self) -> bool {
        self.u == 0.0
    }

    /// Projected probability `b + a * u`.
    pub fn projected_probability(&self) -> f64 {
        (self.b + self.a * self.u).clamp(0.0, 1.0)
    }

    /// Belief Constraint Fusion of two opinions.
    ///
    /// Harmony `b1 u2 + b2 u1 + b1 b2` and conflict `b1 d2 + b2 d1` are
    /// computed first; belief and uncertainty are rescaled by
    /// `1 / (1 - conflict)` and disbelief takes the remainder.
    pub fn bcf_fuse(&self, other: &Opinion) -> Result<Opinion, OpinionError> {
        let (b1, d1, u1, a1) = (self.b, self.d, self.u, self.a);
        let (b2, d2, u2, a2) = (other.b, other.d, other.u, other.a);

        let harmony = b1 * u2 + b2 * u1 + b1 * b2;
        let conflict = b1 * d2 + b2 * d1;
        let scale = 1.0 - conflict;
        if scale <= 0.0 {
            return Err(OpinionError::TotalConflict(*self, *other));
        }

        let b = (harmony / scale).clamp(0.0, 1.0);
        let u = (u1 * u2 / scale).clamp(0.0, 1.0);
        let d = (1.0 - (b + u)).clamp(0.0, 1.0);

        let a = if u1 == 1.0 && u2 == 1.0 {
            (a1 + a2) / 2.0
        } else {
            ((a1 * (1.0 - u1) + a2 * (1.0 - u2)) / (2.0 - u1 - u2)).clamp(0.0, 1.0)
        };

        Opinion::new(b, d, u, a)
    }
}

impl fmt::Display for Opinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.b, self.d, self.u, self.a)
    }
}

/// Free-function form of [`Opinion::new`].
pub fn opinion_new(b: f64, d: f64, u: f64, a: f64) -> Result<Opinion, OpinionError> {
    Opinion::new(b, d, u, a)
}

pub fn projected_probability(o: &Opinion) -> f64 {
    o.projected_probability()
}

pub fn opinion_from_probability(p: f64) -> Result<Opinion, OpinionError> {
    Opinion::from_probability(p)
}

pub fn bcf_fuse(o1: &Opinion, o2: &Opinion) -> Result<Opinion, OpinionError> {
    o1.bcf_fuse(o2)
}

/// Fuses any number of opinions with BCF.
///
/// Belief masses are the left fold of [`bcf_fuse`]. The base rate uses the
/// n-ary form `sum(a_i (1 - u_i)) / sum(1 - u_i)` (plain mean when every input
/// is vacuous), which coincides with the pairwise formula for two inputs and
/// does not depend on input order.
pub fn bcf_fuse_many<'a, I>(opinions: I) -> Result<Opinion, OpinionError>
where
    I: IntoIterator<Item = &'a Opinion>,
{
    let mut iter = opinions.into_iter();
    let first = *iter.next().ok_or(OpinionError::EmptyInput)?;
    let mut weighted = first.a * (1.0 - first.u);
    let mut weight = 1.0 - first.u;
    let mut rate_sum = first.a;
    let mut count = 1usize;
    let mut acc = first;
    for o in iter {
        acc = acc.bcf_fuse(o)?;
        weighted += o.a * (1.0 - o.u);
        weight += 1.0 - o.u;
        rate_sum += o.a;
        count += 1;
    }
    if count > 1 {
        acc.a = if weight > 0.0 {
            (weighted / weight).clamp(0.0, 1.0)
        } else {
            rate_sum / count as f64
        };
    }
    Ok(acc)
}
