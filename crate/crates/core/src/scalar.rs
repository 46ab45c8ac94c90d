//! Exact scalar arithmetic: big rationals and extended values `a + b*sqrt(d)`
//! with a distinguished `+inf`, ordered without any floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Reduced arbitrary-precision rational, denominator always positive.
pub type Rat = BigRational;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ScalarError {
    #[error("mixed quadratic contexts: d={0} vs d={1}")]
    ContextMismatch(u64, u64),
    #[error("empty argument list")]
    EmptyList,
    #[error("cannot scale an infinite value by {0}")]
    BadInfiniteScale(String),
    #[error("invalid rational literal: {0}")]
    BadRational(String),
    #[error("quadratic context d must be squarefree and >= 1, got {0}")]
    BadContext(u64),
}

/// Builds a rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(n: i64) -> Rat {
    BigRational::from(BigInt::from(n))
}

/// Parses "n" or "n/d".
pub fn rat_from_str(s: &str) -> Result<Rat, ScalarError> {
    let s = s.trim();
    let bad = || ScalarError::BadRational(s.to_string());
    match s.split_once('/') {
        None => s.parse::<BigInt>().map(BigRational::from).map_err(|_| bad()),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
    }
}

/// Renders "n" or "n/d".
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_squarefree(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut n = d;
    let mut q = 2u64;
    while q * q <= n {
        if n % q == 0 {
            n /= q;
            if n % q == 0 {
                return false;
            }
        }
        q += 1;
    }
    true
}

/// Value in the codomain of every valuation: `a + b*sqrt(d)` or `+inf`.
///
/// `d` is a per-computation squarefree context; purely rational values are
/// normalized to `d = 1` (with `b = 0`) and mix freely with any context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtValue {
    Finite { a: Rat, b: Rat, d: u64 },
    Infinite,
}

impl ExtValue {
    pub fn from_rat(a: Rat) -> Self {
        ExtValue::Finite { a, b: Rat::zero(), d: 1 }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(rat_int(n))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    /// `a + b*sqrt(d)`; normalizes `b = 0` down to the trivial context.
    pub fn quadratic(a: Rat, b: Rat, d: u64) -> Result<Self, ScalarError> {
        if !is_squarefree(d) {
            return Err(ScalarError::BadContext(d));
        }
        if b.is_zero() || d == 1 {
            if d == 1 && !b.is_zero() {
                // sqrt(1) = 1 folds into the rational part
                return Ok(ExtValue::Finite { a: a + b, b: Rat::zero(), d: 1 });
            }
            return Ok(ExtValue::Finite { a, b: Rat::zero(), d: 1 });
        }
        Ok(ExtValue::Finite { a, b, d })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtValue::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtValue::Finite { a, b, .. } if a.is_zero() && b.is_zero())
    }

    /// The rational part when the value is finite and purely rational.
    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            ExtValue::Finite { a, b, .. } if b.is_zero() => Some(a),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rat().is_some()
    }

    fn unify_ctx(x: u64, y: u64) -> Result<u64, ScalarError> {
        match (x, y) {
            (1, d) | (d, 1) => Ok(d),
            (a, b) if a == b => Ok(a),
            (a, b) => Err(ScalarError::ContextMismatch(a, b)),
        }
    }

    /// Exact sum; `Infinite` absorbs.
    pub fn checked_add(&self, other: &ExtValue) -> Result<ExtValue, ScalarError> {
        match (self, other) {
            (ExtValue::Infinite, _) | (_, ExtValue::Infinite) => Ok(ExtValue::Infinite),
            (ExtValue::Finite { a: a1, b: b1, d: d1 }, ExtValue::Finite { a: a2, b: b2, d: d2 }) => {
                let d = Self::unify_ctx(*d1, *d2)?;
                ExtValue::quadratic(a1 + a2, b1 + b2, d)
            }
        }
    }

    pub fn checked_sub(&self, other: &ExtValue) -> Result<ExtValue, ScalarError> {
        match other {
            ExtValue::Infinite => Err(ScalarError::BadInfiniteScale("-inf".into())),
            ExtValue::Finite { a, b, d } => {
                self.checked_add(&ExtValue::Finite { a: -a.clone(), b: -b.clone(), d: *d })
            }
        }
    }

    /// Exact scalar multiple. Scaling `Infinite` requires a positive factor.
    pub fn scale(&self, n: &Rat) -> Result<ExtValue, ScalarError> {
        match self {
            ExtValue::Infinite => {
                if n.is_positive() {
                    Ok(ExtValue::Infinite)
                } else {
                    Err(ScalarError::BadInfiniteScale(rat_to_string(n)))
                }
            }
            ExtValue::Finite { a, b, d } => ExtValue::quadratic(a * n, b * n, *d),
        }
    }

    /// Sign of `a + b*sqrt(d)` decided by integer arithmetic.
    fn sign(a: &Rat, b: &Rat, d: u64) -> Ordering {
        if b.is_zero() {
            return a.cmp(&Rat::zero());
        }
        if a.is_zero() {
            return b.cmp(&Rat::zero());
        }
        let sa = a.is_positive();
        let sb = b.is_positive();
        if sa && sb {
            return Ordering::Greater;
        }
        if !sa && !sb {
            return Ordering::Less;
        }
        // Opposite signs: compare a^2 with b^2 * d, then attribute the sign.
        let a2 = a * a;
        let b2d = b * b * rat_int(d as i64);
        match a2.cmp(&b2d) {
            Ordering::Equal => Ordering::Equal, // only possible when d is a square, i.e. d = 1
            Ordering::Greater => {
                if sa {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            Ordering::Less => {
                if sb {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    /// Total order consistent with the real embedding with `sqrt(d) > 0`.
    pub fn checked_cmp(&self, other: &ExtValue) -> Result<Ordering, ScalarError> {
        match (self, other) {
            (ExtValue::Infinite, ExtValue::Infinite) => Ok(Ordering::Equal),
            (ExtValue::Infinite, _) => Ok(Ordering::Greater),
            (_, ExtValue::Infinite) => Ok(Ordering::Less),
            (ExtValue::Finite { a: a1, b: b1, d: d1 }, ExtValue::Finite { a: a2, b: b2, d: d2 }) => {
                let d = Self::unify_ctx(*d1, *d2)?;
                Ok(Self::sign(&(a1 - a2), &(b1 - b2), d))
            }
        }
    }

    /// Minimum under the total order; errors on an empty slice.
    pub fn min_of(values: &[ExtValue]) -> Result<ExtValue, ScalarError> {
        let mut it = values.iter();
        let mut best = it.next().ok_or(ScalarError::EmptyList)?.clone();
        for v in it {
            if v.checked_cmp(&best)? == Ordering::Less {
                best = v.clone();
            }
        }
        Ok(best)
    }
}

impl PartialOrd for ExtValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Mixed-`d` comparisons are an internal invariant breach; callers unify
/// contexts at the API boundary.
impl Ord for ExtValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.checked_cmp(other)
            .expect("extended values compared across incompatible quadratic contexts")
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::Infinite => write!(f, "inf"),
            ExtValue::Finite { a, b, d } => {
                if b.is_zero() {
                    write!(f, "{}", rat_to_string(a))
                } else if a.is_zero() {
                    write!(f, "{}*sqrt({})", rat_to_string(b), d)
                } else {
                    write!(f, "{} + {}*sqrt({})", rat_to_string(a), rat_to_string(b), d)
                }
            }
        }
    }
}
