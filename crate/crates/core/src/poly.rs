//! Dense univariate polynomials over the rationals, with division, gcd and
//! the phi-adic expansion every valuation computation is built on.

use crate::scalar::{rat_from_str, rat_int, rat_to_string, Rat};
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("phi must be monic")]
    NotMonic,
    #[error("phi must have degree >= 1")]
    ConstantModulus,
    #[error("cannot parse polynomial at byte {0}: {1}")]
    Parse(usize, String),
}

/// Coefficients ascending; the stored leading coefficient is nonzero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<Rat>,
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly::constant(rat_int(1))
    }

    pub fn x() -> Self {
        QPoly { coeffs: vec![rat_int(0), rat_int(1)] }
    }

    pub fn constant(c: Rat) -> Self {
        QPoly { coeffs: vec![c] }.trimmed()
    }

    pub fn from_coeffs(coeffs: Vec<Rat>) -> Self {
        QPoly { coeffs }.trimmed()
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        QPoly::from_coeffs(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    /// X^n
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![rat_int(0); n + 1];
        coeffs[n] = rat_int(1);
        QPoly { coeffs }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn deg(&self) -> usize {
        self.degree().expect("degree of zero polynomial")
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(|| rat_int(0))
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + other.coeff(i));
        }
        QPoly { coeffs: out }.trimmed()
    }

    pub fn neg(&self) -> QPoly {
        QPoly { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect() }
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![rat_int(0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly { coeffs: out }.trimmed()
    }

    pub fn mul_scalar(&self, c: &Rat) -> QPoly {
        if c.is_zero() {
            return QPoly::zero();
        }
        QPoly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn pow(&self, mut n: u64) -> QPoly {
        let mut base = self.clone();
        let mut acc = QPoly::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Euclidean division: `self = q * g + r` with `deg r < deg g`.
    pub fn divmod(&self, g: &QPoly) -> Result<(QPoly, QPoly), PolyError> {
        if g.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let dg = g.deg();
        let lead = g.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() < dg + 1 {
            return Ok((QPoly::zero(), self.clone()));
        }
        let mut quo = vec![rat_int(0); rem.len() - dg];
        for i in (dg..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = &rem[i] / &lead;
            quo[i - dg] = q.clone();
            for (j, gc) in g.coeffs.iter().enumerate() {
                let idx = i - dg + j;
                let t = &q * gc;
                rem[idx] -= t;
            }
        }
        Ok((QPoly { coeffs: quo }.trimmed(), QPoly { coeffs: rem }.trimmed()))
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.leading().unwrap().clone();
        a.mul_scalar(&lead.recip())
    }

    pub fn derivative(&self) -> QPoly {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * rat_int(i as i64))
            .collect();
        QPoly { coeffs }.trimmed()
    }

    /// Splits off the content: returns `(c, p)` with `self = c * p`, `p`
    /// having coprime integer coefficients and positive leading coefficient.
    pub fn content_normalize(&self) -> (Rat, QPoly) {
        use num_bigint::BigInt;
        use num_integer::Integer;
        if self.is_zero() {
            return (rat_int(0), QPoly::zero());
        }
        let mut den_lcm = BigInt::from(1);
        for c in &self.coeffs {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let scaled: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den_lcm / c.denom()))
            .collect();
        let mut num_gcd = BigInt::from(0);
        for s in &scaled {
            num_gcd = num_gcd.gcd(s);
        }
        if scaled.last().unwrap().is_negative() {
            num_gcd = -num_gcd;
        }
        let prim = QPoly::from_coeffs(
            scaled.iter().map(|s| Rat::from(s / &num_gcd)).collect(),
        );
        (Rat::new(num_gcd, den_lcm), prim)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = rat_int(0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// `self(X + c)`.
    pub fn shift_arg(&self, c: &Rat) -> QPoly {
        let sub = QPoly::from_coeffs(vec![c.clone(), rat_int(1)]);
        let mut acc = QPoly::zero();
        for coeff in self.coeffs.iter().rev() {
            acc = acc.mul(&sub).add(&QPoly::constant(coeff.clone()));
        }
        acc
    }

    pub fn is_squarefree(&self) -> bool {
        if self.is_zero() {
            return false;
        }
        let g = self.gcd(&self.derivative());
        g.degree() == Some(0)
    }
}

/// Expansion `f = sum a_i * phi^i` with `deg a_i < deg phi`; returns
/// `[a_0, a_1, ...]` (empty for `f = 0`).
pub fn phi_expand(f: &QPoly, phi: &QPoly) -> Result<Vec<QPoly>, PolyError> {
    if phi.is_constant() {
        return Err(PolyError::ConstantModulus);
    }
    if !phi.is_monic() {
        return Err(PolyError::NotMonic);
    }
    let mut out = Vec::new();
    let mut rest = f.clone();
    while !rest.is_zero() {
        let (q, r) = rest.divmod(phi)?;
        out.push(r);
        rest = q;
    }
    Ok(out)
}

/// Recombines a phi-adic expansion.
pub fn phi_recombine(coeffs: &[QPoly], phi: &QPoly) -> QPoly {
    let mut acc = QPoly::zero();
    for a in coeffs.iter().rev() {
        acc = acc.mul(phi).add(a);
    }
    acc
}

impl QPoly {
    fn fmt_term(i: usize, c: &Rat, first: bool, out: &mut String) {
        let neg = c.is_negative();
        let abs = if neg { -c.clone() } else { c.clone() };
        if first {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let coeff_str = rat_to_string(&abs);
        match i {
            0 => out.push_str(&coeff_str),
            _ => {
                if !abs.is_one() {
                    out.push_str(&coeff_str);
                }
                out.push('x');
                if i > 1 {
                    out.push_str(&format!("^{i}"));
                }
            }
        }
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QPoly({self})")
    }
}

/// Text form of a polynomial in `x`: signed terms `c`, `x^k`, `c x^k`,
/// `c*x^k`, with integer or `p/q` coefficients.
pub fn parse_poly(input: &str) -> Result<QPoly, PolyError> {
    Parser { bytes: input.as_bytes(), pos: 0 }.parse()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse(self.pos, msg.to_string())
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<QPoly, PolyError> {
        let mut acc = QPoly::zero();
        let mut first = true;
        loop {
            let sign = match self.peek() {
                None if first => return Err(self.err("empty input")),
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    1
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1
                }
                Some(_) if first => 1,
                Some(c) => return Err(self.err(&format!("expected '+' or '-', got '{}'", c as char))),
            };
            let term = self.parse_term()?;
            acc = if sign > 0 { acc.add(&term) } else { acc.sub(&term) };
            first = false;
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<QPoly, PolyError> {
        let coeff = match self.peek() {
            Some(c) if c.is_ascii_digit() => Some(self.parse_rational()?),
            _ => None,
        };
        if let Some(b'*') = self.peek() {
            if coeff.is_none() {
                return Err(self.err("'*' without a coefficient"));
            }
            self.pos += 1;
        }
        let power = match self.peek() {
            Some(b'x') | Some(b'X') => {
                self.pos += 1;
                match self.peek() {
                    Some(b'^') => {
                        self.pos += 1;
                        Some(self.parse_uint()? as usize)
                    }
                    _ => Some(1),
                }
            }
            _ => None,
        };
        match (coeff, power) {
            (None, None) => Err(self.err("expected a coefficient or 'x'")),
            (Some(c), None) => Ok(QPoly::constant(c)),
            (None, Some(k)) => Ok(QPoly::monomial(k)),
            (Some(c), Some(k)) => Ok(QPoly::monomial(k).mul_scalar(&c)),
        }
    }

    fn parse_uint(&mut self) -> Result<u64, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("integer too large"))
    }

    fn parse_rational(&mut self) -> Result<Rat, PolyError> {
        let num = self.parse_uint()?;
        if let Some(b'/') = self.peek() {
            self.pos += 1;
            let den = self.parse_uint()?;
            if den == 0 {
                return Err(self.err("zero denominator"));
            }
            rat_from_str(&format!("{num}/{den}")).map_err(|e| self.err(&e.to_string()))
        } else {
            Ok(rat_int(num as i64))
        }
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut out = String::new();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            QPoly::fmt_term(i, c, first, &mut out);
            first = false;
        }
        write!(f, "{out}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    #[test]
    fn divmod_basics() {
        let f = QPoly::from_ints(&[1, 0, 1]); // x^2 + 1
        let g = QPoly::x();
        let (q, r) = f.divmod(&g).unwrap();
        assert_eq!(q, QPoly::x());
        assert_eq!(r, QPoly::one());
        assert_eq!(f.divmod(&QPoly::zero()), Err(PolyError::DivisionByZero));
    }

    #[test]
    fn gcd_and_mul() {
        let f = QPoly::from_ints(&[-1, 0, 1]); // x^2 - 1
        let g = QPoly::from_ints(&[-1, 1]); // x - 1
        assert_eq!(f.gcd(&g), g);
        let h = QPoly::from_ints(&[1, 1]).mul(&g);
        assert_eq!(h, f);
    }

    #[test]
    fn phi_expand_examples() {
        // x^3 = x*(x^2+1) - x
        let f = QPoly::monomial(3);
        let phi = QPoly::from_ints(&[1, 0, 1]);
        let e = phi_expand(&f, &phi).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0], QPoly::from_ints(&[0, -1]));
        assert_eq!(e[1], QPoly::x());
        assert_eq!(phi_recombine(&e, &phi), f);

        let e = phi_expand(&phi, &phi).unwrap();
        assert_eq!(e, vec![QPoly::zero(), QPoly::one()]);

        let small = QPoly::from_ints(&[7, 3]);
        assert_eq!(phi_expand(&small, &phi).unwrap(), vec![small.clone()]);

        let nonmonic = QPoly::from_ints(&[1, 2]);
        assert_eq!(phi_expand(&f, &nonmonic), Err(PolyError::NotMonic));
        assert_eq!(phi_expand(&f, &QPoly::one()), Err(PolyError::ConstantModulus));
    }

    #[test]
    fn phi_expand_uniqueness_spot_check() {
        let f = QPoly::from_ints(&[4, 2, 5, 1, 3]);
        let phi = QPoly::from_ints(&[2, 1, 1]);
        let e = phi_expand(&f, &phi).unwrap();
        assert_eq!(phi_recombine(&e, &phi), f);
        // perturbing any coefficient breaks the identity
        for i in 0..e.len() {
            let mut bad = e.clone();
            bad[i] = bad[i].add(&QPoly::one());
            assert_ne!(phi_recombine(&bad, &phi), f);
        }
    }

    #[test]
    fn content_normalization() {
        let f = QPoly::from_coeffs(vec![rat(2, 3), rat(4, 3)]);
        let (c, p) = f.content_normalize();
        assert_eq!(p, QPoly::from_ints(&[1, 2]));
        assert_eq!(p.mul_scalar(&c), f);
    }

    #[test]
    fn parser_accepts_documented_grammar() {
        let cases = [
            ("x^3+2x+4", QPoly::from_ints(&[4, 2, 0, 1])),
            ("x^2 - x - 1", QPoly::from_ints(&[-1, -1, 1])),
            ("1/2x^2", QPoly::from_coeffs(vec![rat(0, 1), rat(0, 1), rat(1, 2)])),
            ("1/2*x^2", QPoly::from_coeffs(vec![rat(0, 1), rat(0, 1), rat(1, 2)])),
            ("-x", QPoly::from_ints(&[0, -1])),
            ("7", QPoly::from_ints(&[7])),
            ("x^10 - 2/3 x^5 + 7", {
                let mut c = vec![rat_int(0); 11];
                c[0] = rat_int(7);
                c[5] = rat(-2, 3);
                c[10] = rat_int(1);
                QPoly::from_coeffs(c)
            }),
        ];
        for (text, want) in cases {
            assert_eq!(parse_poly(text).unwrap(), want, "{text}");
        }
        assert!(parse_poly("").is_err());
        assert!(parse_poly("x +").is_err());
        assert!(parse_poly("2**x").is_err());
        assert!(parse_poly("1/0").is_err());
    }

    fn arb_poly() -> impl Strategy<Value = QPoly> {
        prop::collection::vec((-40i64..40, 1i64..6), 0..7)
            .prop_map(|cs| QPoly::from_coeffs(cs.into_iter().map(|(n, d)| rat(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn expand_round_trip(f in arb_poly(), k in 1usize..4) {
            let mut phi = QPoly::monomial(k);
            phi = phi.add(&QPoly::from_ints(&[1, 1]));
            if phi.is_monic() && phi.deg() >= 1 {
                let e = phi_expand(&f, &phi).unwrap();
                prop_assert_eq!(phi_recombine(&e, &phi), f.clone());
                for a in &e {
                    prop_assert!(a.is_zero() || a.deg() < phi.deg());
                }
                if !f.is_zero() {
                    prop_assert_eq!(e.len() - 1, f.deg() / phi.deg());
                }
            }
        }

        #[test]
        fn display_parse_round_trip(f in arb_poly()) {
            let text = f.to_string();
            prop_assert_eq!(parse_poly(&text).unwrap(), f);
        }

        #[test]
        fn divmod_invariant(f in arb_poly(), g in arb_poly()) {
            if !g.is_zero() {
                let (q, r) = f.divmod(&g).unwrap();
                prop_assert_eq!(q.mul(&g).add(&r), f);
                prop_assert!(r.is_zero() || r.deg() < g.deg());
            }
        }
    }
}
