//! Arithmetic in GF(p) and towers GF(p)(y_1, ..., y_k), with univariate
//! factorization over any tower level.
//!
//! Towers stay as chains of extensions rather than one absolute extension,
//! so embeddings of lower levels are the identity on representations.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("zero polynomial has no factorization")]
    ZeroPolynomial,
    #[error("constant polynomial")]
    ConstantPolynomial,
    #[error("defining polynomial is reducible")]
    ReducibleModulus,
    #[error("defining polynomial must be monic of degree >= 1")]
    BadModulus,
    #[error("element has no inverse (zero)")]
    ZeroInverse,
    #[error("level {0} out of range (tower has {1} levels)")]
    BadLevel(usize, usize),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut q = 2u64;
    while q * q <= n {
        if n % q == 0 {
            return false;
        }
        q += 1;
    }
    true
}

/// Element of a tower level. Level 0 is `Fp`; level `j >= 1` is a polynomial
/// in the level-`j` generator with level-`j-1` coefficients, trailing
/// coefficient nonzero (canonical form).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FFElem {
    Fp(u64),
    Ext(Vec<FFElem>),
}

impl FFElem {
    pub fn is_zero(&self) -> bool {
        match self {
            FFElem::Fp(c) => *c == 0,
            FFElem::Ext(v) => v.is_empty(),
        }
    }
}

impl fmt::Debug for FFElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FFElem::Fp(c) => write!(f, "{c}"),
            FFElem::Ext(v) => {
                write!(f, "[")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c:?}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Polynomial over one tower level, ascending coefficients, trimmed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FFPoly {
    pub level: usize,
    pub coeffs: Vec<FFElem>,
}

impl FFPoly {
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn deg(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> FFElem {
        self.coeffs.get(i).cloned().unwrap_or(if self.level == 0 {
            FFElem::Fp(0)
        } else {
            FFElem::Ext(Vec::new())
        })
    }
}

impl fmt::Debug for FFPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FFPoly(level {}; {:?})", self.level, self.coeffs)
    }
}

/// Chain GF(p) = L0 <= L1 <= ... with `moduli[j]` the defining polynomial of
/// level `j+1` over level `j` (monic, irreducible, verified at extension).
#[derive(Clone, PartialEq, Eq)]
pub struct FieldTower {
    p: u64,
    moduli: Vec<FFPoly>,
}

impl fmt::Debug for FieldTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldTower(p={}, levels={})", self.p, self.level_count())
    }
}

impl FieldTower {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(FieldTower { p, moduli: Vec::new() })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Number of levels including the prime field.
    pub fn level_count(&self) -> usize {
        self.moduli.len() + 1
    }

    pub fn top_level(&self) -> usize {
        self.moduli.len()
    }

    pub fn modulus_of(&self, level: usize) -> &FFPoly {
        &self.moduli[level - 1]
    }

    pub fn level_degree(&self, level: usize) -> usize {
        if level == 0 {
            1
        } else {
            self.moduli[level - 1].deg()
        }
    }

    /// Product of the level degrees up to `level`.
    pub fn total_degree_at(&self, level: usize) -> u64 {
        (1..=level).map(|l| self.level_degree(l) as u64).product()
    }

    pub fn total_degree(&self) -> u64 {
        self.total_degree_at(self.top_level())
    }

    /// Field size at a level (saturating; only used for small-field paths).
    pub fn size_at(&self, level: usize) -> u128 {
        let mut s: u128 = 1;
        for _ in 0..self.total_degree_at(level) {
            s = s.saturating_mul(self.p as u128);
        }
        s
    }

    /// Adds one level defined by `psi`, which must be monic irreducible over
    /// the current top level.
    pub fn extend(&self, psi: &FFPoly) -> Result<FieldTower, FieldError> {
        if psi.is_zero() || psi.deg() < 1 {
            return Err(FieldError::BadModulus);
        }
        if psi.level != self.top_level() {
            return Err(FieldError::BadLevel(psi.level, self.level_count()));
        }
        if !self.is_monic(psi) {
            return Err(FieldError::BadModulus);
        }
        if psi.deg() > 1 && !self.is_irreducible(psi)? {
            return Err(FieldError::ReducibleModulus);
        }
        let mut t = self.clone();
        t.moduli.push(psi.clone());
        Ok(t)
    }

    // ---- element construction ----

    pub fn zero(&self, level: usize) -> FFElem {
        if level == 0 {
            FFElem::Fp(0)
        } else {
            FFElem::Ext(Vec::new())
        }
    }

    pub fn from_u64(&self, level: usize, c: u64) -> FFElem {
        let c = c % self.p;
        if level == 0 {
            FFElem::Fp(c)
        } else if c == 0 {
            FFElem::Ext(Vec::new())
        } else {
            FFElem::Ext(vec![self.from_u64(level - 1, c)])
        }
    }

    pub fn one(&self, level: usize) -> FFElem {
        self.from_u64(level, 1)
    }

    /// Generator `y_level` of a level (level >= 1).
    pub fn gen(&self, level: usize) -> FFElem {
        assert!(level >= 1, "level 0 has no generator");
        FFElem::Ext(vec![self.zero(level - 1), self.one(level - 1)])
    }

    /// Identity embedding of a lower-level element.
    pub fn promote(&self, e: &FFElem, from: usize, to: usize) -> FFElem {
        assert!(from <= to);
        let mut out = e.clone();
        for _ in from..to {
            out = if out.is_zero() { FFElem::Ext(Vec::new()) } else { FFElem::Ext(vec![out]) };
        }
        out
    }

    fn trim(v: &mut Vec<FFElem>) {
        while v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
    }

    /// Coefficients of a level-`level` element over the level below, padded
    /// to the level degree.
    pub fn coeffs_over_prev(&self, level: usize, e: &FFElem) -> Vec<FFElem> {
        assert!(level >= 1);
        let f = self.level_degree(level);
        let mut out = match e {
            FFElem::Ext(v) => v.clone(),
            FFElem::Fp(_) => panic!("level-0 element at level {level}"),
        };
        out.resize(f, self.zero(level - 1));
        out
    }

    pub fn from_coeffs_over_prev(&self, level: usize, coeffs: Vec<FFElem>) -> FFElem {
        assert!(level >= 1);
        let mut v = coeffs;
        Self::trim(&mut v);
        FFElem::Ext(v)
    }

    // ---- element arithmetic ----

    pub fn add(&self, level: usize, a: &FFElem, b: &FFElem) -> FFElem {
        match (a, b) {
            (FFElem::Fp(x), FFElem::Fp(y)) => FFElem::Fp((x + y) % self.p),
            (FFElem::Ext(x), FFElem::Ext(y)) => {
                let n = x.len().max(y.len());
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let xa = x.get(i).cloned().unwrap_or_else(|| self.zero(level - 1));
                    let xb = y.get(i).cloned().unwrap_or_else(|| self.zero(level - 1));
                    out.push(self.add(level - 1, &xa, &xb));
                }
                Self::trim(&mut out);
                FFElem::Ext(out)
            }
            _ => panic!("level mismatch in tower addition"),
        }
    }

    pub fn neg(&self, level: usize, a: &FFElem) -> FFElem {
        match a {
            FFElem::Fp(x) => FFElem::Fp((self.p - x) % self.p),
            FFElem::Ext(v) => FFElem::Ext(v.iter().map(|c| self.neg(level - 1, c)).collect()),
        }
    }

    pub fn sub(&self, level: usize, a: &FFElem, b: &FFElem) -> FFElem {
        self.add(level, a, &self.neg(level, b))
    }

    pub fn mul(&self, level: usize, a: &FFElem, b: &FFElem) -> FFElem {
        match (a, b) {
            (FFElem::Fp(x), FFElem::Fp(y)) => FFElem::Fp(x * y % self.p),
            (FFElem::Ext(x), FFElem::Ext(y)) => {
                if x.is_empty() || y.is_empty() {
                    return FFElem::Ext(Vec::new());
                }
                let mut out = vec![self.zero(level - 1); x.len() + y.len() - 1];
                for (i, xa) in x.iter().enumerate() {
                    for (j, xb) in y.iter().enumerate() {
                        let t = self.mul(level - 1, xa, xb);
                        out[i + j] = self.add(level - 1, &out[i + j], &t);
                    }
                }
                self.reduce_vec(level, out)
            }
            _ => panic!("level mismatch in tower multiplication"),
        }
    }

    fn reduce_vec(&self, level: usize, mut v: Vec<FFElem>) -> FFElem {
        let m = &self.moduli[level - 1];
        let d = m.deg();
        while v.len() > d {
            let top = v.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let k = v.len() - d;
            // v -= top * m * X^k  (m monic, so this cancels the top term)
            for (i, mc) in m.coeffs.iter().take(d).enumerate() {
                let t = self.mul(level - 1, &top, mc);
                v[k + i] = self.sub(level - 1, &v[k + i], &t);
            }
        }
        Self::trim(&mut v);
        FFElem::Ext(v)
    }

    pub fn inv(&self, level: usize, a: &FFElem) -> Result<FFElem, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        match a {
            FFElem::Fp(x) => Ok(FFElem::Fp(mod_inv(*x, self.p))),
            FFElem::Ext(_) => {
                // extended Euclid against the level modulus
                let m = self.moduli[level - 1].clone();
                let a_poly = FFPoly {
                    level: level - 1,
                    coeffs: match a {
                        FFElem::Ext(v) => v.clone(),
                        _ => unreachable!(),
                    },
                };
                let (g, _, t) = self.poly_ext_gcd(&m, &a_poly);
                debug_assert_eq!(g.deg(), 0, "modulus must be irreducible");
                let ginv = self.inv(level - 1, &g.coeffs[0])?;
                let scaled: Vec<FFElem> =
                    t.coeffs.iter().map(|c| self.mul(level - 1, c, &ginv)).collect();
                Ok(self.reduce_vec(level, scaled))
            }
        }
    }

    pub fn elem_pow(&self, level: usize, a: &FFElem, mut n: u64) -> FFElem {
        let mut base = a.clone();
        let mut acc = self.one(level);
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(level, &acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(level, &base, &base);
            }
        }
        acc
    }

    /// All elements of a level, in a deterministic order. Caller bounds size.
    pub fn enumerate_elems(&self, level: usize) -> Vec<FFElem> {
        if level == 0 {
            return (0..self.p).map(FFElem::Fp).collect();
        }
        let prev = self.enumerate_elems(level - 1);
        let d = self.level_degree(level);
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let coeffs: Vec<FFElem> = idx.iter().map(|&i| prev[i].clone()).collect();
            out.push(self.from_coeffs_over_prev(level, coeffs));
            let mut j = 0;
            loop {
                if j == d {
                    return out;
                }
                idx[j] += 1;
                if idx[j] < prev.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    pub fn random_elem(&self, level: usize, rng: &mut StdRng) -> FFElem {
        if level == 0 {
            return FFElem::Fp(rng.gen_range(0..self.p));
        }
        let d = self.level_degree(level);
        let coeffs = (0..d).map(|_| self.random_elem(level - 1, rng)).collect();
        self.from_coeffs_over_prev(level, coeffs)
    }

    // ---- polynomial arithmetic over a level ----

    pub fn poly_zero(&self, level: usize) -> FFPoly {
        FFPoly { level, coeffs: Vec::new() }
    }

    pub fn poly_one(&self, level: usize) -> FFPoly {
        FFPoly { level, coeffs: vec![self.one(level)] }
    }

    pub fn poly_gen(&self, level: usize) -> FFPoly {
        FFPoly { level, coeffs: vec![self.zero(level), self.one(level)] }
    }

    pub fn poly_from_coeffs(&self, level: usize, coeffs: Vec<FFElem>) -> FFPoly {
        let mut v = coeffs;
        Self::trim(&mut v);
        FFPoly { level, coeffs: v }
    }

    pub fn poly_constant(&self, level: usize, c: FFElem) -> FFPoly {
        self.poly_from_coeffs(level, vec![c])
    }

    pub fn is_monic(&self, f: &FFPoly) -> bool {
        f.coeffs.last().map(|c| *c == self.one(f.level)).unwrap_or(false)
    }

    pub fn poly_add(&self, a: &FFPoly, b: &FFPoly) -> FFPoly {
        debug_assert_eq!(a.level, b.level);
        let n = a.coeffs.len().max(b.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.add(a.level, &a.coeff(i), &b.coeff(i)));
        }
        self.poly_from_coeffs(a.level, out)
    }

    pub fn poly_neg(&self, a: &FFPoly) -> FFPoly {
        FFPoly {
            level: a.level,
            coeffs: a.coeffs.iter().map(|c| self.neg(a.level, c)).collect(),
        }
    }

    pub fn poly_sub(&self, a: &FFPoly, b: &FFPoly) -> FFPoly {
        self.poly_add(a, &self.poly_neg(b))
    }

    pub fn poly_mul(&self, a: &FFPoly, b: &FFPoly) -> FFPoly {
        debug_assert_eq!(a.level, b.level);
        if a.is_zero() || b.is_zero() {
            return self.poly_zero(a.level);
        }
        let mut out = vec![self.zero(a.level); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, xa) in a.coeffs.iter().enumerate() {
            for (j, xb) in b.coeffs.iter().enumerate() {
                let t = self.mul(a.level, xa, xb);
                out[i + j] = self.add(a.level, &out[i + j], &t);
            }
        }
        self.poly_from_coeffs(a.level, out)
    }

    pub fn poly_mul_scalar(&self, a: &FFPoly, c: &FFElem) -> FFPoly {
        let coeffs = a.coeffs.iter().map(|x| self.mul(a.level, x, c)).collect();
        self.poly_from_coeffs(a.level, coeffs)
    }

    pub fn poly_divmod(&self, a: &FFPoly, b: &FFPoly) -> Result<(FFPoly, FFPoly), FieldError> {
        debug_assert_eq!(a.level, b.level);
        if b.is_zero() {
            return Err(FieldError::ZeroPolynomial);
        }
        let db = b.deg();
        let lead_inv = self.inv(b.level, b.coeffs.last().unwrap())?;
        let mut rem = a.coeffs.clone();
        if rem.len() < db + 1 {
            return Ok((self.poly_zero(a.level), a.clone()));
        }
        let mut quo = vec![self.zero(a.level); rem.len() - db];
        for i in (db..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = self.mul(a.level, &rem[i], &lead_inv);
            for (j, bc) in b.coeffs.iter().enumerate() {
                let t = self.mul(a.level, &q, bc);
                rem[i - db + j] = self.sub(a.level, &rem[i - db + j], &t);
            }
            quo[i - db] = q;
        }
        Ok((self.poly_from_coeffs(a.level, quo), self.poly_from_coeffs(a.level, rem)))
    }

    pub fn poly_monic(&self, a: &FFPoly) -> FFPoly {
        if a.is_zero() {
            return a.clone();
        }
        let inv = self.inv(a.level, a.coeffs.last().unwrap()).unwrap();
        self.poly_mul_scalar(a, &inv)
    }

    pub fn poly_gcd(&self, a: &FFPoly, b: &FFPoly) -> FFPoly {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let (_, r) = self.poly_divmod(&x, &y).unwrap();
            x = y;
            y = r;
        }
        self.poly_monic(&x)
    }

    /// Returns `(g, s, t)` with `s*a + t*b = g`.
    fn poly_ext_gcd(&self, a: &FFPoly, b: &FFPoly) -> (FFPoly, FFPoly, FFPoly) {
        let level = a.level;
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (self.poly_one(level), self.poly_zero(level));
        let (mut t0, mut t1) = (self.poly_zero(level), self.poly_one(level));
        while !r1.is_zero() {
            let (q, r) = self.poly_divmod(&r0, &r1).unwrap();
            let s = self.poly_sub(&s0, &self.poly_mul(&q, &s1));
            let t = self.poly_sub(&t0, &self.poly_mul(&q, &t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
            t0 = t1;
            t1 = t;
        }
        (r0, s0, t0)
    }

    pub fn poly_pow_mod(&self, a: &FFPoly, n: &BigUint, m: &FFPoly) -> FFPoly {
        let mut base = self.poly_divmod(a, m).unwrap().1;
        let mut acc = self.poly_one(a.level);
        let mut n = n.clone();
        while !n.is_zero() {
            if n.bit(0) {
                acc = self.poly_divmod(&self.poly_mul(&acc, &base), m).unwrap().1;
            }
            n >>= 1;
            if !n.is_zero() {
                base = self.poly_divmod(&self.poly_mul(&base, &base), m).unwrap().1;
            }
        }
        acc
    }

    pub fn poly_derivative(&self, a: &FFPoly) -> FFPoly {
        if a.coeffs.len() <= 1 {
            return self.poly_zero(a.level);
        }
        let coeffs = a
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let k = self.from_u64(a.level, i as u64);
                self.mul(a.level, c, &k)
            })
            .collect();
        self.poly_from_coeffs(a.level, coeffs)
    }

    pub fn poly_eval(&self, a: &FFPoly, x: &FFElem) -> FFElem {
        let mut acc = self.zero(a.level);
        for c in a.coeffs.iter().rev() {
            acc = self.add(a.level, &self.mul(a.level, &acc, x), c);
        }
        acc
    }

    /// Substitutes `g` for the variable of `f`, reducing mod `m`.
    fn poly_compose_mod(&self, f: &FFPoly, g: &FFPoly, m: &FFPoly) -> FFPoly {
        let mut acc = self.poly_zero(f.level);
        for c in f.coeffs.iter().rev() {
            acc = self.poly_mul(&acc, g);
            acc = self.poly_add(&acc, &self.poly_constant(f.level, c.clone()));
            acc = self.poly_divmod(&acc, m).unwrap().1;
        }
        acc
    }

    /// Field size of the level as a big integer.
    fn q_big(&self, level: usize) -> BigUint {
        BigUint::from(self.p).pow(self.total_degree_at(level) as u32)
    }

    /// Rabin irreducibility test for monic `f` of degree >= 1.
    pub fn is_irreducible(&self, f: &FFPoly) -> Result<bool, FieldError> {
        if f.is_zero() {
            return Err(FieldError::ZeroPolynomial);
        }
        if f.deg() == 0 {
            return Err(FieldError::ConstantPolynomial);
        }
        if f.deg() == 1 {
            return Ok(true);
        }
        let level = f.level;
        let f = self.poly_monic(f);
        let n = f.deg();
        let q = self.q_big(level);
        let x = self.poly_gen(level);
        // frob = x^q mod f, iterated by modular composition
        let frob = self.poly_pow_mod(&x, &q, &f);
        let mut power = x.clone(); // x^(q^i) mod f
        let mut composed = Vec::with_capacity(n + 1);
        for _ in 0..n {
            power = self.poly_compose_mod(&power, &frob, &f);
            composed.push(power.clone());
        }
        // x^(q^n) == x mod f
        if !self.poly_sub(&composed[n - 1], &x).is_zero() {
            return Ok(false);
        }
        // gcd(x^(q^(n/r)) - x, f) = 1 for every prime r | n
        let mut m = n;
        let mut primes = Vec::new();
        let mut d = 2;
        while d * d <= m {
            if m % d == 0 {
                primes.push(d);
                while m % d == 0 {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        for r in primes {
            let k = n / r;
            let g = self.poly_gcd(&self.poly_sub(&composed[k - 1], &x), &f);
            if g.deg() != 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Factorization into monic irreducibles with multiplicities, plus the
    /// leading unit: `f = unit * prod fi^mi`.
    pub fn factor(&self, f: &FFPoly, seed: u64) -> Result<(FFElem, Vec<(FFPoly, u32)>), FieldError> {
        if f.is_zero() {
            return Err(FieldError::ZeroPolynomial);
        }
        let unit = f.coeffs.last().unwrap().clone();
        let f = self.poly_monic(f);
        if f.deg() == 0 {
            return Ok((unit, Vec::new()));
        }
        let mut rng = StdRng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let mut out: Vec<(FFPoly, u32)> = Vec::new();
        for (g, mult) in self.squarefree_decomposition(&f) {
            for h in self.factor_squarefree(&g, &mut rng) {
                out.push((h, mult));
            }
        }
        out.sort_by(|a, b| (a.0.deg(), &a.0.coeffs).cmp(&(b.0.deg(), &b.0.coeffs)));
        // merge equal factors (possible across squarefree parts of a
        // non-squarefree input in characteristic p)
        let mut merged: Vec<(FFPoly, u32)> = Vec::new();
        for (h, m) in out {
            if let Some(last) = merged.last_mut() {
                if last.0 == h {
                    last.1 += m;
                    continue;
                }
            }
            merged.push((h, m));
        }
        Ok((unit, merged))
    }

    /// Yun-style squarefree decomposition in characteristic p: returns
    /// pairs `(gi, mi)` with `f = prod gi^mi`, each `gi` squarefree.
    fn squarefree_decomposition(&self, f: &FFPoly) -> Vec<(FFPoly, u32)> {
        if f.deg() == 0 {
            return Vec::new();
        }
        let deriv = self.poly_derivative(f);
        if deriv.is_zero() {
            // f = g(x^p); take p-th root coefficientwise
            let root = self.pth_root_poly(f);
            return self
                .squarefree_decomposition(&root)
                .into_iter()
                .map(|(g, m)| (g, m * self.p as u32))
                .collect();
        }
        let mut out = Vec::new();
        let mut c = self.poly_gcd(f, &deriv);
        let mut w = self.poly_divmod(f, &c).unwrap().0;
        let mut i = 1u32;
        while w.deg() > 0 {
            let y = self.poly_gcd(&w, &c);
            let part = self.poly_divmod(&w, &y).unwrap().0;
            if part.deg() > 0 {
                out.push((part, i));
            }
            c = self.poly_divmod(&c, &y).unwrap().0;
            w = y;
            i += 1;
        }
        if c.deg() > 0 {
            // remaining p-th power part
            let root = self.pth_root_poly(&c);
            for (g, m) in self.squarefree_decomposition(&root) {
                out.push((g, m * self.p as u32));
            }
        }
        out
    }

    fn pth_root_elem(&self, level: usize, a: &FFElem) -> FFElem {
        // x -> x^(q/p) inverts Frobenius on GF(q)
        let total = self.total_degree_at(level);
        if total == 1 {
            return a.clone();
        }
        let mut exp = 1u64;
        for _ in 0..(total - 1) {
            exp = exp.saturating_mul(self.p);
        }
        self.elem_pow(level, a, exp)
    }

    fn pth_root_poly(&self, f: &FFPoly) -> FFPoly {
        let p = self.p as usize;
        let mut coeffs = Vec::new();
        for (i, c) in f.coeffs.iter().enumerate() {
            if i % p == 0 {
                coeffs.push(self.pth_root_elem(f.level, c));
            } else {
                debug_assert!(c.is_zero(), "derivative zero but x-powers not multiples of p");
            }
        }
        self.poly_from_coeffs(f.level, coeffs)
    }

    /// Factors a monic squarefree polynomial.
    fn factor_squarefree(&self, f: &FFPoly, rng: &mut StdRng) -> Vec<FFPoly> {
        if f.deg() == 0 {
            return Vec::new();
        }
        if f.deg() == 1 {
            return vec![f.clone()];
        }
        // deterministic path for tiny fields
        if self.size_at(f.level) <= (1 << 16) && f.deg() <= 8 {
            return self.factor_exhaustive(f);
        }
        let mut out = Vec::new();
        for (g, d) in self.distinct_degree_split(f) {
            self.equal_degree_split(&g, d, rng, &mut out);
        }
        out
    }

    /// Trial division by enumerating monic candidates of increasing degree.
    fn factor_exhaustive(&self, f: &FFPoly) -> Vec<FFPoly> {
        let level = f.level;
        let mut rest = f.clone();
        let mut out = Vec::new();
        let mut d = 1usize;
        while rest.deg() >= 2 * d {
            for cand in self.enumerate_monic(level, d) {
                if rest.deg() < 2 * d {
                    break;
                }
                let (q, r) = self.poly_divmod(&rest, &cand).unwrap();
                if r.is_zero() {
                    out.push(cand.clone());
                    rest = q;
                    // squarefree input: each factor appears once
                }
            }
            d += 1;
        }
        if rest.deg() > 0 {
            out.push(rest);
        }
        out
    }

    fn enumerate_monic(&self, level: usize, d: usize) -> Vec<FFPoly> {
        let elems = self.enumerate_elems(level);
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let mut coeffs: Vec<FFElem> = idx.iter().map(|&i| elems[i].clone()).collect();
            coeffs.push(self.one(level));
            out.push(FFPoly { level, coeffs });
            let mut j = 0;
            loop {
                if j == d {
                    return out;
                }
                idx[j] += 1;
                if idx[j] < elems.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    /// All monic irreducibles of a given degree, deterministic order.
    pub fn enumerate_monic_irreducible(&self, level: usize, d: usize) -> Vec<FFPoly> {
        self.enumerate_monic(level, d)
            .into_iter()
            .filter(|f| d == 1 || self.is_irreducible(f).unwrap())
            .collect()
    }

    pub fn random_monic(&self, level: usize, d: usize, rng: &mut StdRng) -> FFPoly {
        let mut coeffs: Vec<FFElem> = (0..d).map(|_| self.random_elem(level, rng)).collect();
        coeffs.push(self.one(level));
        FFPoly { level, coeffs }
    }

    pub fn random_monic_irreducible(&self, level: usize, d: usize, rng: &mut StdRng) -> FFPoly {
        loop {
            let f = self.random_monic(level, d, rng);
            if d == 1 || self.is_irreducible(&f).unwrap() {
                return f;
            }
        }
    }

    fn distinct_degree_split(&self, f: &FFPoly) -> Vec<(FFPoly, usize)> {
        let level = f.level;
        let q = self.q_big(level);
        let x = self.poly_gen(level);
        let mut rest = f.clone();
        let mut out = Vec::new();
        let mut power = self.poly_divmod(&x, f).unwrap().1; // x^(q^d) mod f, d below
        let frob = self.poly_pow_mod(&x, &q, f);
        let mut d = 0usize;
        while rest.deg() > 0 {
            d += 1;
            if rest.deg() < 2 * d {
                out.push((rest.clone(), rest.deg()));
                break;
            }
            power = self.poly_compose_mod(&power, &frob, f);
            let g = self.poly_gcd(&self.poly_sub(&power, &x), &rest);
            if g.deg() > 0 {
                out.push((g.clone(), d));
                rest = self.poly_divmod(&rest, &g).unwrap().0;
            }
        }
        out
    }

    /// Cantor-Zassenhaus split of a product of degree-`d` irreducibles.
    fn equal_degree_split(&self, f: &FFPoly, d: usize, rng: &mut StdRng, out: &mut Vec<FFPoly>) {
        if f.deg() == 0 {
            return;
        }
        if f.deg() == d {
            out.push(self.poly_monic(f));
            return;
        }
        let level = f.level;
        let split = loop {
            let t = self.random_monic(level, 2 * d.max(1), rng);
            let g = if self.p == 2 {
                // trace map over GF(2^m)
                let m = self.total_degree_at(level) as usize * d;
                let mut tr = self.poly_divmod(&t, f).unwrap().1;
                let mut sq = tr.clone();
                for _ in 1..m {
                    sq = self.poly_divmod(&self.poly_mul(&sq, &sq), f).unwrap().1;
                    tr = self.poly_add(&tr, &sq);
                }
                self.poly_gcd(&tr, f)
            } else {
                let e = (self.q_big(level).pow(d as u32) - BigUint::one()) / BigUint::from(2u32);
                let te = self.poly_pow_mod(&t, &e, f);
                let shifted = self.poly_sub(&te, &self.poly_one(level));
                self.poly_gcd(&shifted, f)
            };
            if g.deg() > 0 && g.deg() < f.deg() {
                break g;
            }
        };
        let rest = self.poly_divmod(f, &split).unwrap().0;
        self.equal_degree_split(&split, d, rng, out);
        self.equal_degree_split(&rest, d, rng, out);
    }
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // extended Euclid on i128
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible");
    ((t % p as i128 + p as i128) % p as i128) as u64
}

/// Factorization over a tower level: monic irreducible factors paired with
/// multiplicities, `f = unit * prod fi^mi`.
pub fn ff_factor(
    tower: &FieldTower,
    f: &FFPoly,
    seed: u64,
) -> Result<(FFElem, Vec<(FFPoly, u32)>), FieldError> {
    tower.factor(f, seed)
}

pub fn ff_is_irreducible(tower: &FieldTower, f: &FFPoly) -> Result<bool, FieldError> {
    tower.is_irreducible(f)
}

pub fn tower_extend(tower: &FieldTower, psi: &FFPoly) -> Result<FieldTower, FieldError> {
    tower.extend(psi)
}
