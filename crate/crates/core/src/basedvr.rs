//! The base valued field: Q with the p-adic valuation, uniformizer p and
//! residue field GF(p). The trait keeps the door open for other bases
//! (e.g. t-adic on k(t)) without touching the valuation machinery.

use crate::finitefield::{is_prime, FieldTower};
use crate::scalar::{is_squarefree, ExtValue, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum BaseError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("quadratic context d must be squarefree and >= 1, got {0}")]
    BadContext(u64),
    #[error("cannot reduce {0}: valuation is {1}, not 0")]
    NotAUnit(String, String),
}

/// Minimal surface a base DVR must provide.
pub trait ValuedBase {
    fn value(&self, a: &Rat) -> ExtValue;
    fn reduce(&self, a: &Rat) -> Result<u64, BaseError>;
    fn uniformizer(&self) -> Rat;
    fn residue_char(&self) -> u64;
}

/// `Q` with the p-adic valuation, normalized so `v(p) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseDVR {
    p: u64,
    d: u64,
}

impl BaseDVR {
    pub fn new(p: u64, d: u64) -> Result<Self, BaseError> {
        if !is_prime(p) {
            return Err(BaseError::NotPrime(p));
        }
        if !is_squarefree(d) {
            return Err(BaseError::BadContext(d));
        }
        Ok(BaseDVR { p, d })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn quad_ctx(&self) -> u64 {
        self.d
    }

    /// p-adic order of an integer; None for 0.
    fn int_order(&self, n: &BigInt) -> Option<i64> {
        if n.is_zero() {
            return None;
        }
        let p = BigInt::from(self.p);
        let mut n = n.abs();
        let mut ord = 0i64;
        loop {
            let (q, r) = n.div_rem(&p);
            if !r.is_zero() {
                return Some(ord);
            }
            ord += 1;
            n = q;
        }
    }

    /// p-adic order as a plain integer; None for 0.
    pub fn int_value(&self, a: &Rat) -> Option<i64> {
        let num = self.int_order(a.numer())?;
        let den = self.int_order(a.denom()).expect("denominator nonzero");
        Some(num - den)
    }

    /// Residue field as a one-level tower.
    pub fn residue_field(&self) -> FieldTower {
        FieldTower::new(self.p).expect("p validated at construction")
    }
}

impl ValuedBase for BaseDVR {
    fn value(&self, a: &Rat) -> ExtValue {
        match self.int_value(a) {
            None => ExtValue::Infinite,
            Some(v) => ExtValue::from_int(v),
        }
    }

    fn reduce(&self, a: &Rat) -> Result<u64, BaseError> {
        match self.int_value(a) {
            Some(0) => {}
            v => {
                let vs = v.map(|x| x.to_string()).unwrap_or_else(|| "inf".into());
                return Err(BaseError::NotAUnit(a.to_string(), vs));
            }
        }
        let p = BigInt::from(self.p);
        let num = a.numer().mod_floor(&p).to_u64().unwrap();
        let den = a.denom().mod_floor(&p).to_u64().unwrap();
        Ok(num * mod_inv(den, self.p) % self.p)
    }

    fn uniformizer(&self) -> Rat {
        Rat::from(BigInt::from(self.p))
    }

    fn residue_char(&self) -> u64 {
        self.p
    }
}

fn mod_inv(a: u64, p: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible mod p");
    ((t % p as i128 + p as i128) % p as i128) as u64
}
