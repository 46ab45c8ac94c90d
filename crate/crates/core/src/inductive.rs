//! Inductive valuations on Q[X]: stage lists (phi_i, mu_i) over a p-adic
//! base, the min-rule value computation, graded reduction to residual
//! polynomials, equivalence-divisibility, key testing and lifting,
//! augmentation and the partial order on valuation overrings.
//!
//! The residual of a nonzero f is tracked as a pair (key_order, R): the
//! initial form of f factors as unit * in(phi_k)^key_order * R(Y) with
//! R monic and R(0) != 0, where Y is the residue class of phi_k^e / Pi_k
//! for a canonical monomial Pi_k in p and the earlier keys. Divisibility,
//! keyhood and lifting are all read off this pair.

use crate::basedvr::{BaseDVR, BaseError, ValuedBase};
use crate::finitefield::{FFElem, FFPoly, FieldError, FieldTower};
use crate::poly::{phi_expand, PolyError, QPoly};
use crate::scalar::{rat_int, ExtValue, Rat, ScalarError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum ValError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error("a valuation needs at least one stage")]
    EmptyStages,
    #[error("stage 1 key must be a monic linear polynomial")]
    FirstStageNotLinear,
    #[error("key polynomial must be monic")]
    KeyNotMonic,
    #[error("key polynomial must have integral coefficients under the base valuation")]
    KeyNotIntegral,
    #[error("stage 1 value must be >= 0")]
    MuNegative,
    #[error("stage 1 value must be finite")]
    MuInfinite,
    #[error("non-final stage values must be rational and finite")]
    InternalMuNotRational,
    #[error("key degrees must strictly increase across stages")]
    DegreeNotIncreasing,
    #[error("assigned value {given} does not exceed the current value {current}")]
    MuNotAbove { given: String, current: String },
    #[error("polynomial is not a key over this valuation")]
    NotAKey,
    #[error("operation requires a commensurable valuation")]
    NotCommensurable,
    #[error("zero polynomial not allowed here")]
    ZeroArgument,
    #[error("residual must be irreducible over the top residue level")]
    PsiNotIrreducible,
    #[error("residual Y is the distinguished monomial of the last key; lift a different factor")]
    PsiIsDistinguished,
    #[error("valuations live over different bases")]
    BaseMismatch,
    #[error("internal invariant breached: {0}")]
    Internal(String),
}

/// One augmentation step: assign value `mu` to the key `phi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub phi: QPoly,
    pub mu: ExtValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// All stage values rational: the valuation ring is a DVR.
    Commensurable,
    /// Final value irrational: rank one, not discrete.
    Incommensurable,
    /// Final value infinite: multiples of the last key get value infinity.
    Pseudo,
}

/// Laurent monomial p^pi * phi_1^keys[0] * phi_2^keys[1] * ... used for
/// value normalization in the graded reduction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Monomial {
    pi: i64,
    keys: Vec<i64>,
}

impl Monomial {
    fn combine(parts: &[(&Monomial, i64)]) -> Monomial {
        let mut out = Monomial::default();
        for (m, n) in parts {
            out.pi += m.pi * n;
            if out.keys.len() < m.keys.len() {
                out.keys.resize(m.keys.len(), 0);
            }
            for (i, k) in m.keys.iter().enumerate() {
                out.keys[i] += k * n;
            }
        }
        out
    }

    /// Splits off the exponent at key slot `idx`.
    fn split_slot(&self, idx: usize) -> (i64, Monomial) {
        let q = self.keys.get(idx).copied().unwrap_or(0);
        let mut rest = self.clone();
        if idx < rest.keys.len() {
            rest.keys[idx] = 0;
            while rest.keys.last() == Some(&0) {
                rest.keys.pop();
            }
        }
        (q, rest)
    }

    fn value(&self, mus: &[Rat]) -> Rat {
        let mut v = rat_int(self.pi);
        for (i, k) in self.keys.iter().enumerate() {
            if *k != 0 {
                v += &mus[i] * rat_int(*k);
            }
        }
        v
    }
}

/// Per-stage derived data for a rational stage value.
#[derive(Debug, Clone, PartialEq, Eq)]
struct StageData {
    /// Relative ramification: least e >= 1 with e*mu in the previous group.
    e: u64,
    /// Monomial in p and the earlier keys of value e*mu.
    norm: Monomial,
}

/// Residual polynomial of f: `in(f) = unit * in(phi_k)^key_order * poly(Y)`
/// with `poly` monic, `poly(0) != 0`, coefficients at the given tower level.
/// `unit` is the leading coefficient of the raw reduction before the monic
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ResiduePoly {
    pub level: usize,
    pub key_order: u64,
    pub poly: FFPoly,
    pub unit: FFElem,
    pub value: ExtValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preceq {
    Proven,
    Unknown,
}

/// A MacLane inductive valuation: base DVR plus a finite stage list with
/// strictly increasing key degrees. Immutable after construction; the
/// residue tower is built eagerly.
#[derive(Debug, Clone)]
pub struct InductiveValuation {
    base: BaseDVR,
    stages: Vec<Stage>,
    data: Vec<StageData>,
    mus: Vec<Rat>,
    tower: FieldTower,
    kind: Kind,
}

impl PartialEq for InductiveValuation {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.stages == other.stages
    }
}

impl InductiveValuation {
    /// First-stage valuation `v(X) = mu` (mu >= 0, finite; irrational allowed).
    pub fn first_stage(base: &BaseDVR, mu: ExtValue) -> Result<Self, ValError> {
        if mu.is_infinite() {
            return Err(ValError::MuInfinite);
        }
        if mu < ExtValue::zero() {
            return Err(ValError::MuNegative);
        }
        Self::from_stages(base, vec![Stage { phi: QPoly::x(), mu }])
    }

    /// Builds and fully validates a stage list.
    pub fn from_stages(base: &BaseDVR, stages: Vec<Stage>) -> Result<Self, ValError> {
        if stages.is_empty() {
            return Err(ValError::EmptyStages);
        }
        let first = &stages[0];
        if first.phi.degree() != Some(1) || !first.phi.is_monic() {
            return Err(ValError::FirstStageNotLinear);
        }
        let mut v = InductiveValuation {
            base: base.clone(),
            stages: Vec::new(),
            data: Vec::new(),
            mus: Vec::new(),
            tower: base.residue_field(),
            kind: Kind::Commensurable,
        };
        let count = stages.len();
        for (idx, stage) in stages.into_iter().enumerate() {
            let last = idx + 1 == count;
            v.push_stage(stage, last)?;
        }
        Ok(v)
    }

    fn push_stage(&mut self, stage: Stage, last: bool) -> Result<(), ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::InternalMuNotRational);
        }
        if !stage.phi.is_monic() {
            return Err(ValError::KeyNotMonic);
        }
        if !self.is_integral(&stage.phi) {
            return Err(ValError::KeyNotIntegral);
        }
        let first = self.stages.is_empty();
        if first {
            if stage.phi.degree() != Some(1) {
                return Err(ValError::FirstStageNotLinear);
            }
            if stage.mu < ExtValue::zero() {
                return Err(ValError::MuNegative);
            }
        } else {
            let prev_deg = self.last_key().deg();
            if stage.phi.deg() <= prev_deg {
                return Err(ValError::DegreeNotIncreasing);
            }
            // phi must be a key over the current prefix, with matching
            // degree accounting; this also rules out equivalence-divisibility
            // by the previous key.
            let rp = self.residual(&stage.phi)?;
            let e = self.data.last().unwrap().e;
            let ok = rp.key_order == 0
                && rp.poly.deg() >= 1
                && self.tower.is_irreducible(&rp.poly)?
                && stage.phi.deg() as u64 == e * rp.poly.deg() as u64 * prev_deg as u64;
            if !ok {
                return Err(ValError::NotAKey);
            }
            let current = self.value(&stage.phi);
            if stage.mu.checked_cmp(&current)? != Ordering::Greater {
                return Err(ValError::MuNotAbove {
                    given: stage.mu.to_string(),
                    current: current.to_string(),
                });
            }
            // the residual of the new key defines the next tower level
            self.tower = self.tower.extend(&rp.poly)?;
        }
        match stage.mu.as_rat() {
            Some(mu) => {
                let e = self.relative_ram(mu);
                let target = mu * rat_int(e as i64);
                let norm = self.solve_monomial(self.stages.len(), &target)?;
                self.data.push(StageData { e, norm });
                self.mus.push(mu.clone());
            }
            None => {
                if !last {
                    return Err(ValError::InternalMuNotRational);
                }
                self.kind = if stage.mu.is_infinite() {
                    Kind::Pseudo
                } else {
                    Kind::Incommensurable
                };
            }
        }
        self.stages.push(stage);
        Ok(())
    }

    // ---- accessors ----

    pub fn base(&self) -> &BaseDVR {
        &self.base
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn last_key(&self) -> &QPoly {
        &self.stages.last().unwrap().phi
    }

    pub fn last_mu(&self) -> &ExtValue {
        &self.stages.last().unwrap().mu
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn is_commensurable(&self) -> bool {
        self.kind == Kind::Commensurable
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    /// Degree of the top residue level over GF(p).
    pub fn residue_total_degree(&self) -> u64 {
        self.tower.total_degree()
    }

    /// Relative ramification of the last stage.
    pub fn last_ram(&self) -> Result<u64, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        Ok(self.data.last().unwrap().e)
    }

    pub fn is_integral(&self, f: &QPoly) -> bool {
        f.coeffs()
            .iter()
            .all(|c| c.is_zero() || self.base.int_value(c).unwrap_or(0) >= 0)
    }

    fn group_denom(&self, upto: usize) -> BigInt {
        let mut e = BigInt::one();
        for mu in &self.mus[..upto] {
            e = e.lcm(mu.denom());
        }
        e
    }

    fn relative_ram(&self, mu: &Rat) -> u64 {
        let scaled = mu * Rat::from(self.group_denom(self.mus.len()));
        let den = scaled.denom();
        u64::try_from(den).expect("desk-scale ramification")
    }

    /// Integer exponents with `pi + sum keys[j]*mu_j = target`, keys
    /// canonical in [0, e_j).
    fn solve_monomial(&self, upto: usize, target: &Rat) -> Result<Monomial, ValError> {
        let mut t = target.clone();
        let mut keys = vec![0i64; upto];
        for j in (0..upto).rev() {
            let e = self.data[j].e;
            let denom = self.group_denom(j);
            let mut found = false;
            for b in 0..e {
                let rest = &t - &self.mus[j] * rat_int(b as i64);
                if (Rat::from(denom.clone()) * &rest).denom().is_one() {
                    keys[j] = b as i64;
                    t = rest;
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(ValError::Internal(format!(
                    "value {target} is not in the stage-{upto} value group"
                )));
            }
        }
        if !t.denom().is_one() {
            return Err(ValError::Internal(format!(
                "value {target} is not in the stage-{upto} value group"
            )));
        }
        let pi = i64::try_from(t.numer()).map_err(|_| {
            ValError::Internal("monomial exponent out of range".into())
        })?;
        Ok(Monomial { pi, keys })
    }

    // ---- value computation ----

    /// Value of f under the full stage list.
    pub fn value(&self, f: &QPoly) -> ExtValue {
        self.value_prefix(self.stages.len(), f)
    }

    /// Value under the valuation given by the first `upto` stages
    /// (`upto = 0` is the base valuation on constants).
    fn value_prefix(&self, upto: usize, f: &QPoly) -> ExtValue {
        if f.is_zero() {
            return ExtValue::Infinite;
        }
        if upto == 0 {
            assert!(f.is_constant(), "base valuation applied to a non-constant");
            return self.base.value(&f.coeff(0));
        }
        let stage = &self.stages[upto - 1];
        let expansion = phi_expand(f, &stage.phi).expect("keys are monic of degree >= 1");
        let mut best = ExtValue::Infinite;
        for (i, a) in expansion.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term = match (&stage.mu, i) {
                (ExtValue::Infinite, 0) => self.value_prefix(upto - 1, a),
                (ExtValue::Infinite, _) => ExtValue::Infinite,
                (mu, _) => self
                    .value_prefix(upto - 1, a)
                    .checked_add(&mu.scale(&rat_int(i as i64)).expect("i >= 0"))
                    .expect("stage values share the base quadratic context"),
            };
            if term < best {
                best = term;
            }
        }
        best
    }

    /// Like `value`, also reporting the per-term breakdown of the top stage.
    pub fn value_trace(&self, f: &QPoly) -> (ExtValue, Vec<String>) {
        let mut lines = Vec::new();
        if f.is_zero() {
            return (ExtValue::Infinite, vec!["v(0) = inf".into()]);
        }
        let k = self.stages.len();
        let stage = &self.stages[k - 1];
        let expansion = phi_expand(f, &stage.phi).expect("monic key");
        lines.push(format!(
            "expansion of {} in phi_{} = {} has {} terms",
            f,
            k,
            stage.phi,
            expansion.len()
        ));
        let mut best = ExtValue::Infinite;
        for (i, a) in expansion.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let va = self.value_prefix(k - 1, a);
            let term = match (&stage.mu, i) {
                (ExtValue::Infinite, 0) => va.clone(),
                (ExtValue::Infinite, _) => ExtValue::Infinite,
                (mu, _) => va
                    .checked_add(&mu.scale(&rat_int(i as i64)).unwrap())
                    .unwrap(),
            };
            lines.push(format!(
                "  term {i}: a_{i} = {a}, v(a_{i}) = {va}, v(a_{i} phi^{i}) = {term}"
            ));
            if term < best {
                best = term;
            }
        }
        lines.push(format!("v(f) = {best}"));
        (best, lines)
    }

    // ---- graded reduction ----

    /// Residue of the value-zero twisted element
    /// `f * p^twist.pi * prod_j phi_j^twist.keys[j]` under the `upto`-stage
    /// prefix valuation; the result is a nonzero element of tower level
    /// `upto`.
    fn unit_residue(&self, upto: usize, f: &QPoly, twist: &Monomial) -> Result<FFElem, ValError> {
        debug_assert!(!f.is_zero());
        if upto == 0 {
            if !f.is_constant() {
                return Err(ValError::Internal("non-constant at base residue".into()));
            }
            debug_assert!(twist.keys.iter().all(|&k| k == 0));
            let mut a = f.coeff(0);
            let p = Rat::from(BigInt::from(self.base.p()));
            match twist.pi.cmp(&0) {
                Ordering::Greater => {
                    for _ in 0..twist.pi {
                        a *= &p;
                    }
                }
                Ordering::Less => {
                    for _ in 0..(-twist.pi) {
                        a /= &p;
                    }
                }
                Ordering::Equal => {}
            }
            let r = self.base.reduce(&a)?;
            return Ok(FFElem::Fp(r));
        }
        let stage = &self.stages[upto - 1];
        let e = self.data[upto - 1].e as i64;
        let mu = &self.mus[upto - 1];
        let norm = self.data[upto - 1].norm.clone();
        let (q, twist_rest) = twist.split_slot(upto - 1);
        let rest_value = twist_rest.value(&self.mus);
        let expansion = phi_expand(f, &stage.phi)?;
        let mut terms: Vec<(i64, &QPoly, Rat)> = Vec::new();
        let mut best: Option<Rat> = None;
        for (i, a) in expansion.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let va = self
                .value_prefix(upto - 1, a)
                .as_rat()
                .cloned()
                .ok_or_else(|| ValError::Internal("irrational prefix value".into()))?;
            let net = i as i64 + q;
            let total = &va + mu * rat_int(net) + &rest_value;
            match &best {
                None => best = Some(total.clone()),
                Some(b) if total < *b => best = Some(total.clone()),
                _ => {}
            }
            terms.push((net, a, total));
        }
        let best = best.ok_or(ValError::ZeroArgument)?;
        if !best.is_zero() {
            return Err(ValError::Internal(format!(
                "unit residue of an element of value {best}"
            )));
        }
        let mut acc = self.tower.zero(upto);
        let y = self.tower.gen(upto);
        for (net, a, total) in terms {
            if total != best {
                continue;
            }
            if net.rem_euclid(e) != 0 {
                return Err(ValError::Internal("minimal term escapes the ramification class".into()));
            }
            let m = net.div_euclid(e);
            let sub_twist = Monomial::combine(&[(&twist_rest, 1), (&norm, m)]);
            let c = self.unit_residue(upto - 1, a, &sub_twist)?;
            let c = self.tower.promote(&c, upto - 1, upto);
            let ypow = if m >= 0 {
                self.tower.elem_pow(upto, &y, m as u64)
            } else {
                let yi = self.tower.inv(upto, &y)?;
                self.tower.elem_pow(upto, &yi, (-m) as u64)
            };
            acc = self.tower.add(upto, &acc, &self.tower.mul(upto, &c, &ypow));
        }
        if acc.is_zero() {
            return Err(ValError::Internal("vanishing unit residue".into()));
        }
        Ok(acc)
    }

    /// Residual data of a nonzero f: value, key order and the monic residual
    /// polynomial over the top tower level.
    pub fn residual(&self, f: &QPoly) -> Result<ResiduePoly, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        if f.is_zero() {
            return Err(ValError::ZeroArgument);
        }
        let k = self.stages.len();
        let top = &self.stages[k - 1];
        let e = self.data[k - 1].e as i64;
        let mu = &self.mus[k - 1];
        let norm = &self.data[k - 1].norm;
        let level = k - 1;

        let expansion = phi_expand(f, &top.phi)?;
        let mut vals: Vec<Option<Rat>> = Vec::with_capacity(expansion.len());
        let mut best: Option<Rat> = None;
        for (i, a) in expansion.iter().enumerate() {
            if a.is_zero() {
                vals.push(None);
                continue;
            }
            let va = self
                .value_prefix(k - 1, a)
                .as_rat()
                .cloned()
                .ok_or_else(|| ValError::Internal("irrational prefix value".into()))?;
            let total = &va + mu * rat_int(i as i64);
            match &best {
                None => best = Some(total.clone()),
                Some(b) if total < *b => best = Some(total.clone()),
                _ => {}
            }
            vals.push(Some(total));
        }
        let gamma = best.ok_or(ValError::ZeroArgument)?;
        let min_idx: Vec<usize> = vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| (v.as_ref() == Some(&gamma)).then_some(i))
            .collect();
        let i_min = *min_idx.first().unwrap() as i64;
        let i_max = *min_idx.last().unwrap() as i64;
        let r = i_min.rem_euclid(e);
        for &i in &min_idx {
            if (i as i64).rem_euclid(e) != r {
                return Err(ValError::Internal(
                    "minimal terms straddle ramification classes".into(),
                ));
            }
        }
        let s_min = (i_min - r) / e;
        let s_max = (i_max - r) / e;
        let key_order = (r + e * s_min) as u64;
        // normalizer of value gamma - r*mu over p and the earlier keys
        let n0 = self.solve_monomial(k - 1, &(&gamma - mu * rat_int(r)))?;
        let mut coeffs = Vec::with_capacity((s_max - s_min + 1) as usize);
        for s in s_min..=s_max {
            let i = (r + s * e) as usize;
            if vals[i].as_ref() == Some(&gamma) {
                let twist = Monomial::combine(&[(norm, s), (&n0, -1)]);
                coeffs.push(self.unit_residue(k - 1, &expansion[i], &twist)?);
            } else {
                coeffs.push(self.tower.zero(level));
            }
        }
        let raw = self.tower.poly_from_coeffs(level, coeffs);
        let unit = raw.coeffs.last().cloned().ok_or_else(|| {
            ValError::Internal("empty residual".into())
        })?;
        let poly = self.tower.poly_monic(&raw);
        if poly.is_zero() || poly.coeff(0).is_zero() {
            return Err(ValError::Internal("residual lost its constant term".into()));
        }
        Ok(ResiduePoly {
            level,
            key_order,
            poly,
            unit,
            value: ExtValue::from_rat(gamma),
        })
    }

    /// Effective equivalence-divisibility: g divides f in the graded sense.
    pub fn is_equiv_divisible(&self, f: &QPoly, g: &QPoly) -> Result<bool, ValError> {
        if f.is_zero() || g.is_zero() {
            return Err(ValError::ZeroArgument);
        }
        let rf = self.residual(f)?;
        let rg = self.residual(g)?;
        if rf.key_order < rg.key_order {
            return Ok(false);
        }
        let (_, rem) = self.tower.poly_divmod(&rf.poly, &rg.poly)?;
        Ok(rem.is_zero())
    }

    /// Constructs a polynomial witness `c` with `v(f - g c) > v(f)` whenever
    /// g equivalence-divides f; used to cross-validate the residual test.
    pub fn equiv_witness(&self, f: &QPoly, g: &QPoly) -> Result<Option<QPoly>, ValError> {
        if !self.is_equiv_divisible(f, g)? {
            return Ok(None);
        }
        let rf = self.residual(f)?;
        let rg = self.residual(g)?;
        let (quot, _) = self.tower.poly_divmod(&rf.poly, &rg.poly)?;
        let gamma = rf
            .value
            .checked_sub(&rg.value)?
            .as_rat()
            .cloned()
            .ok_or_else(|| ValError::Internal("finite values expected".into()))?;
        let order = rf.key_order - rg.key_order;
        let vf = self.value(f);
        let c1 = self.lift_residual(order, &quot, &gamma)?;
        let d1 = f.sub(&g.mul(&c1));
        if d1.is_zero() || self.value(&d1) > vf {
            return Ok(Some(c1));
        }
        // measure the unit discrepancy between in(f) and in(g c1) and fold
        // its inverse into the lifted coefficients
        let level = self.stages.len() - 1;
        let rgc = self.residual(&g.mul(&c1))?;
        let w = self.tower.mul(level, &rgc.unit, &self.tower.inv(level, &rf.unit)?);
        let w_inv = self.tower.inv(level, &w)?;
        let scaled = self.tower.poly_mul_scalar(&quot, &w_inv);
        let c = self.lift_residual(order, &scaled, &gamma)?;
        let d = f.sub(&g.mul(&c));
        if d.is_zero() || self.value(&d) > vf {
            return Ok(Some(c));
        }
        Err(ValError::Internal("equivalence witness did not verify".into()))
    }

    // ---- lifting ----

    /// Inverse of `unit_residue`: a polynomial of degree < deg(stage `upto`
    /// key), of value `twist.value`, whose unit residue against `twist` is `c`.
    fn unit_lift(&self, upto: usize, c: &FFElem, twist: &Monomial) -> Result<QPoly, ValError> {
        if c.is_zero() {
            return Ok(QPoly::zero());
        }
        if upto == 0 {
            debug_assert!(twist.keys.iter().all(|&k| k == 0));
            let cv = match c {
                FFElem::Fp(x) => *x,
                _ => return Err(ValError::Internal("level mismatch at base lift".into())),
            };
            let p = Rat::from(BigInt::from(self.base.p()));
            let mut a = rat_int(cv as i64);
            match twist.pi.cmp(&0) {
                Ordering::Greater => {
                    for _ in 0..twist.pi {
                        a *= &p;
                    }
                }
                Ordering::Less => {
                    for _ in 0..(-twist.pi) {
                        a /= &p;
                    }
                }
                Ordering::Equal => {}
            }
            return Ok(QPoly::constant(a));
        }
        let stage = &self.stages[upto - 1];
        let e = self.data[upto - 1].e as i64;
        let norm = self.data[upto - 1].norm.clone();
        let f_dim = self.tower.level_degree(upto) as i64;
        let (q, twist_rest) = twist.split_slot(upto - 1);
        // window of key exponents te + q inside [0, e*f_dim)
        let s_min = {
            let a = -q;
            let d = a.div_euclid(e);
            if a.rem_euclid(e) > 0 {
                d + 1
            } else {
                d
            }
        };
        let y = self.tower.gen(upto);
        let shifted = if s_min >= 0 {
            let yi = self.tower.inv(upto, &y)?;
            let ypow = self.tower.elem_pow(upto, &yi, s_min as u64);
            self.tower.mul(upto, c, &ypow)
        } else {
            let ypow = self.tower.elem_pow(upto, &y, (-s_min) as u64);
            self.tower.mul(upto, c, &ypow)
        };
        let coeffs = self.tower.coeffs_over_prev(upto, &shifted);
        debug_assert_eq!(coeffs.len() as i64, f_dim);
        let mut acc = QPoly::zero();
        for (t, ct) in coeffs.iter().enumerate() {
            if ct.is_zero() {
                continue;
            }
            let s_abs = s_min + t as i64;
            let i = s_abs * e + q;
            if i < 0 || i >= e * f_dim {
                return Err(ValError::Internal("lift exponent escaped its window".into()));
            }
            // the term phi^i * L' reads back as c_t * y^s_abs when L' lifts
            // c_t against Q' / norm^s_abs
            let sub_twist = Monomial::combine(&[(&twist_rest, 1), (&norm, -s_abs)]);
            let l = self.unit_lift(upto - 1, ct, &sub_twist)?;
            acc = acc.add(&stage.phi.pow(i as u64).mul(&l));
        }
        Ok(acc)
    }

    /// Lifts residual data `(key_order, R)` to a polynomial of value `gamma`,
    /// using the same canonical normalizer the reduction uses, so that
    /// reading the result back yields exactly `(key_order, R)`.
    fn lift_residual(&self, key_order: u64, r_poly: &FFPoly, gamma: &Rat) -> Result<QPoly, ValError> {
        let k = self.stages.len();
        let top = &self.stages[k - 1];
        let e = self.data[k - 1].e as i64;
        let mu = &self.mus[k - 1];
        let norm = self.data[k - 1].norm.clone();
        let r = (key_order as i64).rem_euclid(e);
        let s0 = (key_order as i64 - r) / e;
        let n0 = self.solve_monomial(k - 1, &(gamma - mu * rat_int(r)))?;
        let mut acc = QPoly::zero();
        for (t, ct) in r_poly.coeffs.iter().enumerate() {
            if ct.is_zero() {
                continue;
            }
            let s_abs = s0 + t as i64;
            let i = (r + s_abs * e) as u64;
            // coefficient t is read against norm^s_abs * n0^{-1}; lift
            // against the inverse twist so the read-back is exact
            let twist = Monomial::combine(&[(&n0, 1), (&norm, -s_abs)]);
            let l = self.unit_lift(k - 1, ct, &twist)?;
            acc = acc.add(&top.phi.pow(i).mul(&l));
        }
        if acc.is_zero() {
            return Err(ValError::Internal("lift of nonzero residual vanished".into()));
        }
        Ok(acc)
    }

    /// `key_lift` without the residual round-trip verification; the caller
    /// validates whichever candidate it keeps.
    pub fn key_lift_fast(&self, psi: &FFPoly) -> Result<QPoly, ValError> {
        self.key_lift_inner(psi, false)
    }

    /// Monic key polynomial with residual `psi` (monic irreducible over the
    /// top tower level, distinct from the distinguished monomial Y).
    pub fn key_lift(&self, psi: &FFPoly) -> Result<QPoly, ValError> {
        self.key_lift_inner(psi, true)
    }

    fn key_lift_inner(&self, psi: &FFPoly, verify: bool) -> Result<QPoly, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        if psi.is_zero() || psi.degree() == Some(0) {
            return Err(ValError::PsiNotIrreducible);
        }
        let k = self.stages.len();
        if psi.level != k - 1 {
            return Err(ValError::Internal(format!(
                "psi lives at level {}, expected {}",
                psi.level,
                k - 1
            )));
        }
        if !self.tower.is_monic(psi) || !self.tower.is_irreducible(psi)? {
            return Err(ValError::PsiNotIrreducible);
        }
        if psi.coeff(0).is_zero() {
            return Err(ValError::PsiIsDistinguished);
        }
        let top = &self.stages[k - 1];
        let e = self.data[k - 1].e;
        let mu = &self.mus[k - 1];
        let norm = &self.data[k - 1].norm;
        let m = psi.deg() as u64;
        let gamma = mu * rat_int((m * e) as i64);
        let mut acc = top.phi.pow(m * e);
        for t in 0..m {
            let ct = psi.coeff(t as usize);
            if ct.is_zero() {
                continue;
            }
            // coefficient t sits against the twist norm^(m - t) of value
            // (m - t) e mu
            let twist = Monomial::combine(&[(norm, (m - t) as i64)]);
            let l = self.unit_lift(k - 1, &ct, &twist)?;
            acc = acc.add(&top.phi.pow(t * e).mul(&l));
        }
        // contract checks: monic, integral, residual round-trip
        if !acc.is_monic() {
            return Err(ValError::Internal("key lift lost monicity".into()));
        }
        if !self.is_integral(&acc) {
            return Err(ValError::Internal(
                "key lift produced non-integral coefficients".into(),
            ));
        }
        debug_assert_eq!(self.value(&acc).as_rat(), Some(&gamma));
        if verify {
            let rp = self.residual(&acc)?;
            if rp.key_order != 0 || rp.poly != *psi {
                return Err(ValError::Internal("key lift residual round-trip failed".into()));
            }
        }
        Ok(acc)
    }

    /// Key test: monic, equivalence-prime, of minimal degree in its class,
    /// and not equivalence-divisible by the current last key.
    pub fn is_key(&self, phi: &QPoly) -> Result<bool, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        if phi.is_zero() || !phi.is_monic() {
            return Err(ValError::KeyNotMonic);
        }
        if phi.is_constant() {
            return Ok(false);
        }
        let rp = self.residual(phi)?;
        if rp.key_order != 0 || rp.poly.deg() < 1 {
            return Ok(false);
        }
        let e = self.data.last().unwrap().e;
        let expected = e * rp.poly.deg() as u64 * self.last_key().deg() as u64;
        if phi.deg() as u64 != expected {
            return Ok(false);
        }
        Ok(self.tower.is_irreducible(&rp.poly)?)
    }

    /// Augmentation `(self, phi, mu)`. Equal key degree replaces the last
    /// stage; strictly larger degree appends a stage. `mu = inf` yields a
    /// pseudo-valuation, irrational `mu` an incommensurable one.
    pub fn augment(&self, phi: &QPoly, mu: ExtValue) -> Result<InductiveValuation, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        if !phi.is_monic() {
            return Err(ValError::KeyNotMonic);
        }
        if !self.is_integral(phi) {
            return Err(ValError::KeyNotIntegral);
        }
        if !self.is_key(phi)? {
            return Err(ValError::NotAKey);
        }
        let current = self.value(phi);
        if mu.checked_cmp(&current)? != Ordering::Greater {
            return Err(ValError::MuNotAbove {
                given: mu.to_string(),
                current: current.to_string(),
            });
        }
        let mut stages = self.stages.clone();
        if phi.deg() == self.last_key().deg() {
            stages.pop();
        }
        stages.push(Stage { phi: phi.clone(), mu });
        Self::from_stages(&self.base, stages)
    }

    /// Raises the value assigned to the existing last key.
    pub fn raise_last(&self, mu: ExtValue) -> Result<InductiveValuation, ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        let current = self.last_mu();
        if mu.checked_cmp(current)? != Ordering::Greater {
            return Err(ValError::MuNotAbove {
                given: mu.to_string(),
                current: current.to_string(),
            });
        }
        let mut stages = self.stages.clone();
        stages.last_mut().unwrap().mu = mu;
        Self::from_stages(&self.base, stages)
    }

    /// Sufficient comparison for the overring order: proven when every stage
    /// key of self keeps at least its assigned value under `other`.
    pub fn preceq(&self, other: &InductiveValuation) -> Result<Preceq, ValError> {
        if self.base != *other.base() {
            return Err(ValError::BaseMismatch);
        }
        for stage in &self.stages {
            let w = other.value(&stage.phi);
            if w.checked_cmp(&stage.mu)? == Ordering::Less {
                return Ok(Preceq::Unknown);
            }
        }
        Ok(Preceq::Proven)
    }

    /// Semantic equality: mutual `preceq`.
    pub fn same_valuation(&self, other: &InductiveValuation) -> Result<bool, ValError> {
        Ok(self.preceq(other)? == Preceq::Proven && other.preceq(self)? == Preceq::Proven)
    }

    /// `(e, generators)`: the value group is (1/e) Z, generated by 1 and the
    /// stage values.
    pub fn value_group_data(&self) -> Result<(u64, Vec<Rat>), ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        let mut e = BigInt::one();
        for mu in &self.mus {
            e = e.lcm(mu.denom());
        }
        let mut gens = vec![rat_int(1)];
        gens.extend(self.mus.iter().cloned());
        Ok((u64::try_from(&e).map_err(|_| ValError::Internal("huge ramification".into()))?, gens))
    }

    /// Ramification index of the value group over Z.
    pub fn ram_index(&self) -> Result<u64, ValError> {
        Ok(self.value_group_data()?.0)
    }

    /// Integer exponents `(a, [b_1, ...])` with `a + sum b_i mu_i = target`
    /// and each `b_i` canonical in `[0, e_i)`.
    pub fn monomial_of_value(&self, target: &Rat) -> Result<(i64, Vec<i64>), ValError> {
        if self.kind != Kind::Commensurable {
            return Err(ValError::NotCommensurable);
        }
        let m = self.solve_monomial(self.stages.len(), target)?;
        let mut keys = m.keys;
        keys.resize(self.stages.len(), 0);
        Ok((m.pi, keys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn base2() -> BaseDVR {
        BaseDVR::new(2, 1).unwrap()
    }

    fn v_stages(p: u64, stages: Vec<(QPoly, ExtValue)>) -> InductiveValuation {
        let base = BaseDVR::new(p, 1).unwrap();
        InductiveValuation::from_stages(
            &base,
            stages.into_iter().map(|(phi, mu)| Stage { phi, mu }).collect(),
        )
        .unwrap()
    }

    fn ev(n: i64, d: i64) -> ExtValue {
        ExtValue::from_rat(rat(n, d))
    }

    #[test]
    fn values_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<InductiveValuation>();
        assert_send_sync::<ResiduePoly>();
        assert_send_sync::<crate::finitefield::FieldTower>();
        assert_send_sync::<ExtValue>();
        assert_send_sync::<QPoly>();
    }

    #[test]
    fn first_stage_examples() {
        let v = InductiveValuation::first_stage(&base2(), ev(1, 1)).unwrap();
        assert_eq!(v.value(&QPoly::x()), ev(1, 1));
        assert_eq!(v.value(&QPoly::from_ints(&[2])), ev(1, 1));
        assert_eq!(v.value(&QPoly::from_ints(&[2, 1])), ev(1, 1));

        let v = InductiveValuation::first_stage(&base2(), ev(1, 2)).unwrap();
        assert_eq!(v.value(&QPoly::from_ints(&[2, 0, 1])), ev(1, 1));
        // x^3 + 2x + 4 has value min(3/2, 3/2, 2) = 3/2
        assert_eq!(v.value(&QPoly::from_ints(&[4, 2, 0, 1])), ev(3, 2));

        assert!(InductiveValuation::first_stage(&base2(), ev(-1, 2)).is_err());
        assert!(InductiveValuation::first_stage(&base2(), ExtValue::Infinite).is_err());
    }

    #[test]
    fn incommensurable_first_stage() {
        let base = BaseDVR::new(2, 2).unwrap();
        let mu = ExtValue::quadratic(rat_int(0), rat_int(1), 2).unwrap();
        let v = InductiveValuation::first_stage(&base, mu.clone()).unwrap();
        assert_eq!(v.kind(), Kind::Incommensurable);
        let want = mu.scale(&rat_int(2)).unwrap();
        assert_eq!(v.value(&QPoly::monomial(2)), want);
        assert!(v.residual(&QPoly::x()).is_err());
    }

    #[test]
    fn two_stage_value_example() {
        let phi = QPoly::from_ints(&[4, 2, 1]);
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1)), (phi.clone(), ev(3, 1))]);
        assert_eq!(v.value(&phi), ev(3, 1));
        let f = phi.mul(&phi).add(&QPoly::from_ints(&[8]));
        assert_eq!(v.value(&f), ev(3, 1));
        assert_eq!(v.value(&QPoly::one()), ev(0, 1));
    }

    #[test]
    fn residual_frozen_examples() {
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        // x^2 + 2x + 4 reduces to Y^2 + Y + 1
        let rp = v.residual(&QPoly::from_ints(&[4, 2, 1])).unwrap();
        assert_eq!(rp.key_order, 0);
        assert_eq!(rp.value, ev(2, 1));
        let t = v.tower();
        let want = t.poly_from_coeffs(
            0,
            vec![t.one(0), t.one(0), t.one(0)],
        );
        assert_eq!(rp.poly, want);
        assert!(t.is_irreducible(&rp.poly).unwrap());

        // the last key is the distinguished degree-one monomial
        let rp = v.residual(&QPoly::x()).unwrap();
        assert_eq!(rp.key_order, 1);
        assert_eq!(rp.poly.deg(), 0);

        // a unit constant reduces to a constant
        let rp = v.residual(&QPoly::from_ints(&[3])).unwrap();
        assert_eq!(rp.key_order, 0);
        assert_eq!(rp.poly.deg(), 0);

        // x + 2 reduces to Y + 1
        let rp = v.residual(&QPoly::from_ints(&[2, 1])).unwrap();
        assert_eq!(rp.key_order, 0);
        assert_eq!(rp.poly, t.poly_from_coeffs(0, vec![t.one(0), t.one(0)]));

        // x^2 + 2 is an equivalence unit here (value 1 from the constant term)
        let rp = v.residual(&QPoly::from_ints(&[2, 0, 1])).unwrap();
        assert_eq!(rp.key_order, 0);
        assert_eq!(rp.poly.deg(), 0);
    }

    #[test]
    fn equiv_divisibility_examples() {
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        let x = QPoly::x();
        let x2 = QPoly::monomial(2);
        let xp2 = QPoly::from_ints(&[2, 1]);
        assert!(v.is_equiv_divisible(&x, &x).unwrap());
        assert!(v.is_equiv_divisible(&x2, &x).unwrap());
        assert!(!v.is_equiv_divisible(&xp2, &x).unwrap());
        // witnesses verify numerically
        let c = v.equiv_witness(&x2, &x).unwrap().unwrap();
        let diff = x2.sub(&x.mul(&c));
        assert!(diff.is_zero() || v.value(&diff) > v.value(&x2));
        assert!(v.equiv_witness(&xp2, &x).unwrap().is_none());
    }

    #[test]
    fn is_key_examples() {
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        assert!(v.is_key(&QPoly::from_ints(&[4, 2, 1])).unwrap());
        // the current key itself is refused as a next key
        assert!(!v.is_key(&QPoly::x()).unwrap());
        // equivalence units are not keys
        assert!(!v.is_key(&QPoly::from_ints(&[2, 0, 1])).unwrap());
        // non-monic input is a precondition error
        assert!(v.is_key(&QPoly::from_ints(&[1, 2])).is_err());
    }

    #[test]
    fn key_lift_frozen_examples() {
        // over [(x, 1)] at p = 2, lift of Y^2 + Y + 1 is x^2 + 2x + 4
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        let t = v.tower();
        let psi = t.poly_from_coeffs(0, vec![t.one(0), t.one(0), t.one(0)]);
        let phi = v.key_lift(&psi).unwrap();
        assert_eq!(phi, QPoly::from_ints(&[4, 2, 1]));
        assert!(v.is_key(&phi).unwrap());

        // over [(x, 1)] at p = 3, lift of Y + 1 is x + 3
        let v = v_stages(3, vec![(QPoly::x(), ev(1, 1))]);
        let t = v.tower();
        let psi = t.poly_from_coeffs(0, vec![t.one(0), t.one(0)]);
        let phi = v.key_lift(&psi).unwrap();
        assert_eq!(phi, QPoly::from_ints(&[3, 1]));

        // over [(x, 1/2)] at p = 2 (e = 2), lift of Y + 1 is x^2 + 2
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 2))]);
        let t = v.tower();
        let psi = t.poly_from_coeffs(0, vec![t.one(0), t.one(0)]);
        let phi = v.key_lift(&psi).unwrap();
        assert_eq!(phi, QPoly::from_ints(&[2, 0, 1]));

        // Y itself is refused
        let y = t.poly_gen(0);
        assert_eq!(v.key_lift(&y), Err(ValError::PsiIsDistinguished));
    }

    #[test]
    fn augment_examples() {
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        let phi = QPoly::from_ints(&[4, 2, 1]);
        let w = v.augment(&phi, ev(3, 1)).unwrap();
        assert_eq!(w.stage_count(), 2);
        assert_eq!(w.value(&phi), ev(3, 1));
        // strictness of the raise
        assert!(matches!(
            v.augment(&phi, ev(2, 1)),
            Err(ValError::MuNotAbove { .. })
        ));
        // infinite assignment gives a pseudo-valuation
        let w = v.augment(&phi, ExtValue::Infinite).unwrap();
        assert_eq!(w.kind(), Kind::Pseudo);
        let h = QPoly::from_ints(&[1, 3, 1]);
        assert_eq!(w.value(&phi.mul(&h)), ExtValue::Infinite);
        assert_eq!(w.value(&QPoly::from_ints(&[8])), ev(3, 1));
        assert_eq!(w.value(&h), v.value(&h));
    }

    #[test]
    fn equal_degree_replacement() {
        // over the Gauss valuation at p = 5, x + 2 is a key of equal degree;
        // augmenting replaces the first stage
        let v = v_stages(5, vec![(QPoly::x(), ev(0, 1))]);
        let phi = QPoly::from_ints(&[2, 1]);
        assert!(v.is_key(&phi).unwrap());
        let w = v.augment(&phi, ev(1, 1)).unwrap();
        assert_eq!(w.stage_count(), 1);
        assert_eq!(w.last_key(), &phi);
        assert_eq!(w.value(&phi), ev(1, 1));
        assert_eq!(w.value(&QPoly::x()), ev(0, 1));
    }

    #[test]
    fn preceq_examples() {
        let v_half = v_stages(2, vec![(QPoly::x(), ev(1, 2))]);
        let v_one = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        assert_eq!(v_half.preceq(&v_one).unwrap(), Preceq::Proven);
        assert_eq!(v_half.preceq(&v_half).unwrap(), Preceq::Proven);
        assert_eq!(v_one.preceq(&v_half).unwrap(), Preceq::Unknown);
        let other_base = v_stages(3, vec![(QPoly::x(), ev(1, 1))]);
        assert!(v_one.preceq(&other_base).is_err());
    }

    #[test]
    fn value_group_examples() {
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 2))]);
        assert_eq!(v.value_group_data().unwrap().0, 2);
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        assert_eq!(v.value_group_data().unwrap().0, 1);
        let v = v_stages(
            2,
            vec![(QPoly::x(), ev(1, 1)), (QPoly::from_ints(&[4, 2, 1]), ev(7, 3))],
        );
        assert_eq!(v.value_group_data().unwrap().0, 3);
    }

    #[test]
    fn invalid_stage_lists_rejected() {
        let base = base2();
        // degree must strictly increase
        let err = InductiveValuation::from_stages(
            &base,
            vec![
                Stage { phi: QPoly::x(), mu: ev(0, 1) },
                Stage { phi: QPoly::from_ints(&[1, 1]), mu: ev(1, 1) },
            ],
        );
        assert_eq!(err.unwrap_err(), ValError::DegreeNotIncreasing);
        // non-key second stage
        let err = InductiveValuation::from_stages(
            &base,
            vec![
                Stage { phi: QPoly::x(), mu: ev(1, 1) },
                Stage { phi: QPoly::from_ints(&[2, 0, 1]), mu: ev(3, 1) },
            ],
        );
        assert_eq!(err.unwrap_err(), ValError::NotAKey);
        // non-final irrational value
        let s2 = ExtValue::quadratic(rat_int(0), rat_int(1), 2).unwrap();
        let base_d2 = BaseDVR::new(2, 2).unwrap();
        let err = InductiveValuation::from_stages(
            &base_d2,
            vec![
                Stage { phi: QPoly::x(), mu: s2 },
                Stage { phi: QPoly::from_ints(&[4, 2, 1]), mu: ev(9, 1) },
            ],
        );
        assert!(err.is_err());
    }

    #[test]
    fn equiv_divisibility_witnesses_on_random_samples() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(31);
        for p in [2u64, 3, 5] {
            let v1 = v_stages(p, vec![(QPoly::x(), ev(1, 2))]);
            let v2 = v_stages(
                2,
                vec![(QPoly::x(), ev(1, 1)), (QPoly::from_ints(&[4, 2, 1]), ev(3, 1))],
            );
            for v in [&v1, &v2] {
                if v.base().p() != p && v.stage_count() == 1 {
                    continue;
                }
                let mut positives = 0;
                for _ in 0..60 {
                    let f = QPoly::from_coeffs(
                        (0..rng.gen_range(1..7))
                            .map(|_| rat_int(rng.gen_range(-9..9)))
                            .collect(),
                    );
                    let g = QPoly::from_coeffs(
                        (0..rng.gen_range(1..5))
                            .map(|_| rat_int(rng.gen_range(-9..9)))
                            .collect(),
                    );
                    if f.is_zero() || g.is_zero() {
                        continue;
                    }
                    // products are always divisible by their factors and the
                    // witness must verify numerically
                    let prod = f.mul(&g);
                    assert!(v.is_equiv_divisible(&prod, &g).unwrap());
                    let c = v.equiv_witness(&prod, &g).unwrap().expect("witness exists");
                    let diff = prod.sub(&g.mul(&c));
                    assert!(
                        diff.is_zero() || v.value(&diff) > v.value(&prod),
                        "witness failed for ({prod}) / ({g})"
                    );
                    if v.is_equiv_divisible(&f, &g).unwrap() {
                        positives += 1;
                        let c = v.equiv_witness(&f, &g).unwrap().expect("witness exists");
                        let diff = f.sub(&g.mul(&c));
                        assert!(diff.is_zero() || v.value(&diff) > v.value(&f));
                    } else {
                        assert!(v.equiv_witness(&f, &g).unwrap().is_none());
                    }
                }
                let _ = positives;
            }
        }
    }

    #[test]
    fn residual_multiplicative_on_samples() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let v = v_stages(
            2,
            vec![(QPoly::x(), ev(1, 1)), (QPoly::from_ints(&[4, 2, 1]), ev(3, 1))],
        );
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..40 {
            let f = QPoly::from_coeffs(
                (0..rng.gen_range(1..6)).map(|_| rat_int(rng.gen_range(-8..8))).collect(),
            );
            let g = QPoly::from_coeffs(
                (0..rng.gen_range(1..6)).map(|_| rat_int(rng.gen_range(-8..8))).collect(),
            );
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let rf = v.residual(&f).unwrap();
            let rg = v.residual(&g).unwrap();
            let rfg = v.residual(&f.mul(&g)).unwrap();
            assert_eq!(rfg.key_order, rf.key_order + rg.key_order);
            let prod = v.tower().poly_mul(&rf.poly, &rg.poly);
            assert_eq!(rfg.poly, v.tower().poly_monic(&prod));
        }
    }

    #[test]
    fn key_round_trip_on_random_residuals() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(9);
        for p in [2u64, 3, 5] {
            let v0 = v_stages(p, vec![(QPoly::x(), ev(1, 1))]);
            for d in 1..=3usize {
                let psi = v0.tower().random_monic_irreducible(0, d, &mut rng);
                if psi.coeff(0).is_zero() {
                    continue;
                }
                let phi = v0.key_lift(&psi).unwrap();
                assert!(v0.is_key(&phi).unwrap(), "p={p} d={d}");
                let rp = v0.residual(&phi).unwrap();
                assert_eq!(rp.poly, psi);
            }
        }
    }

    /// Direct min-rule for the augmentation (v_old, phi, mu), with no
    /// folding of equal-degree stages.
    fn unfolded_value(
        v_old: &InductiveValuation,
        phi: &QPoly,
        mu: &ExtValue,
        f: &QPoly,
    ) -> ExtValue {
        if f.is_zero() {
            return ExtValue::Infinite;
        }
        let mut best = ExtValue::Infinite;
        for (i, a) in phi_expand(f, phi).unwrap().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term = v_old
                .value(a)
                .checked_add(&mu.scale(&rat_int(i as i64)).unwrap())
                .unwrap();
            if term < best {
                best = term;
            }
        }
        best
    }

    #[test]
    fn equal_degree_replacement_matches_unfolded_augmentation() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(53);

        // depth one: replace the linear key over a Gauss stage
        let v = v_stages(5, vec![(QPoly::x(), ev(0, 1))]);
        let phi = QPoly::from_ints(&[2, 1]);
        let mu = ev(2, 1);
        let folded = v.augment(&phi, mu.clone()).unwrap();
        for _ in 0..60 {
            let f = QPoly::from_coeffs(
                (0..rng.gen_range(1..7)).map(|_| rat_int(rng.gen_range(-25..25))).collect(),
            );
            if f.is_zero() {
                continue;
            }
            assert_eq!(folded.value(&f), unfolded_value(&v, &phi, &mu, &f), "f={f}");
        }

        // depth two: replace the quadratic key of a two-stage valuation
        let v = v_stages(
            2,
            vec![(QPoly::x(), ev(1, 1)), (QPoly::from_ints(&[4, 2, 1]), ev(3, 1))],
        );
        let t = v.tower();
        // a linear residual distinct from the distinguished monomial gives
        // an equal-degree replacement key
        let psi = t.poly_from_coeffs(1, vec![t.gen(1), t.one(1)]);
        let phi = v.key_lift(&psi).unwrap();
        assert_eq!(phi.deg(), 2);
        let mu = ev(4, 1);
        let folded = v.augment(&phi, mu.clone()).unwrap();
        assert_eq!(folded.stage_count(), 2);
        for _ in 0..60 {
            let f = QPoly::from_coeffs(
                (0..rng.gen_range(1..8)).map(|_| rat_int(rng.gen_range(-25..25))).collect(),
            );
            if f.is_zero() {
                continue;
            }
            assert_eq!(folded.value(&f), unfolded_value(&v, &phi, &mu, &f), "f={f}");
        }
    }

    #[test]
    fn pseudo_valuation_is_multiplicative() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let v = v_stages(2, vec![(QPoly::x(), ev(1, 1))]);
        let phi = QPoly::from_ints(&[4, 2, 1]);
        let pseudo = v.augment(&phi, ExtValue::Infinite).unwrap();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..80 {
            let f = QPoly::from_coeffs(
                (0..rng.gen_range(1..7)).map(|_| rat_int(rng.gen_range(-20..20))).collect(),
            );
            let g = QPoly::from_coeffs(
                (0..rng.gen_range(1..7)).map(|_| rat_int(rng.gen_range(-20..20))).collect(),
            );
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let sum = pseudo
                .value(&f)
                .checked_add(&pseudo.value(&g))
                .unwrap();
            assert_eq!(pseudo.value(&f.mul(&g)), sum, "f={f}, g={g}");
        }
        // multiples of the key, and only those, take value infinity
        assert_eq!(pseudo.value(&phi.mul(&QPoly::from_ints(&[3, 1]))), ExtValue::Infinite);
        assert!(!pseudo.value(&phi.add(&QPoly::one())).is_infinite());
    }

    #[test]
    fn incommensurable_valuation_is_multiplicative() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let base = BaseDVR::new(3, 2).unwrap();
        let mu = ExtValue::quadratic(rat_int(0), rat_int(1), 2).unwrap();
        let v = InductiveValuation::first_stage(&base, mu).unwrap();
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..80 {
            let f = QPoly::from_coeffs(
                (0..rng.gen_range(1..6)).map(|_| rat_int(rng.gen_range(-20..20))).collect(),
            );
            let g = QPoly::from_coeffs(
                (0..rng.gen_range(1..6)).map(|_| rat_int(rng.gen_range(-20..20))).collect(),
            );
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let sum = v.value(&f).checked_add(&v.value(&g)).unwrap();
            assert_eq!(v.value(&f.mul(&g)), sum, "f={f}, g={g}");
            let min = ExtValue::min_of(&[v.value(&f), v.value(&g)]).unwrap();
            assert!(v.value(&f.add(&g)) >= min);
        }
    }

    #[test]
    fn three_stage_tower_round_trip() {
        // p = 2: [(x, 1), (x^2+2x+4, 3), (third key, ...)]
        let v2 = v_stages(
            2,
            vec![(QPoly::x(), ev(1, 1)), (QPoly::from_ints(&[4, 2, 1]), ev(3, 1))],
        );
        assert_eq!(v2.residue_total_degree(), 2);
        // lift a quadratic residual over GF(4): gives a degree-4 key
        let t = v2.tower();
        let mut found = None;
        for psi in t.enumerate_monic_irreducible(1, 2) {
            if !psi.coeff(0).is_zero() {
                found = Some(psi);
                break;
            }
        }
        let psi = found.expect("irreducible quadratic over GF(4) with nonzero constant term");
        let phi = v2.key_lift(&psi).unwrap();
        assert_eq!(phi.deg(), 4);
        assert!(v2.is_key(&phi).unwrap());
        let rp = v2.residual(&phi).unwrap();
        assert_eq!(rp.poly, psi);
        let cur = v2.value(&phi).as_rat().cloned().unwrap();
        let v3 = v2
            .augment(&phi, ExtValue::from_rat(&cur + rat(1, 2)))
            .unwrap();
        assert_eq!(v3.stage_count(), 3);
        assert_eq!(v3.residue_total_degree(), 4);
        // values only grow
        for f in [
            QPoly::from_ints(&[1, 1]),
            QPoly::from_ints(&[3, 0, 7, 1]),
            QPoly::from_ints(&[2, 4, 6, 0, 1, 1]),
        ] {
            assert!(v3.value(&f) >= v2.value(&f));
            if f.deg() < 4 {
                assert_eq!(v3.value(&f), v2.value(&f));
            }
        }
    }
}
