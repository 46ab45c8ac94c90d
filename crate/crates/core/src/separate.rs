//! Separation certificates: given two distinct commensurable inductive
//! valuations over the same base, build a common lower ("floor") inductive
//! valuation and a witness element of floor-value zero on which the two
//! inputs disagree, so their centers in the floor's polynomial ring differ.

use crate::inductive::{InductiveValuation, Kind, Preceq, Stage, ValError};
use crate::poly::QPoly;
use crate::scalar::{rat_int, ExtValue, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum SeparateError {
    #[error(transparent)]
    Val(#[from] ValError),
    #[error("valuations live over different bases")]
    BaseMismatch,
    #[error("separation requires commensurable valuations")]
    NotCommensurable,
    #[error("the two valuations are identical")]
    IdenticalValuations,
    #[error("duplicate valuations in the input list")]
    Duplicate,
    #[error("internal invariant breached: {0}")]
    Internal(String),
}

/// Monomial denominator `p^pi_exp * prod key^exp`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessDenominator {
    pub pi_exp: i64,
    pub key_exps: Vec<(QPoly, i64)>,
}

/// A common lower valuation plus a witness `phi^m / denominator` with
/// floor-value 0; exactly one of the two inputs keeps it at value 0, the
/// other pushes it strictly positive.
#[derive(Debug, Clone)]
pub struct SeparationCertificate {
    pub floor: InductiveValuation,
    pub witness_key: QPoly,
    pub witness_power: u64,
    pub witness_den: WitnessDenominator,
    pub w1_value: ExtValue,
    pub w2_value: ExtValue,
}

impl SeparationCertificate {
    /// Value of the witness under an arbitrary valuation, via
    /// multiplicativity over the numerator and denominator factors.
    pub fn witness_value(&self, v: &InductiveValuation) -> Result<ExtValue, SeparateError> {
        let num = v
            .value(&self.witness_key)
            .scale(&rat_int(self.witness_power as i64))
            .map_err(|e| SeparateError::Internal(e.to_string()))?;
        let mut den = ExtValue::from_int(self.witness_den.pi_exp);
        for (key, exp) in &self.witness_den.key_exps {
            if *exp == 0 {
                continue;
            }
            let kv = v
                .value(key)
                .scale(&rat_int(*exp))
                .map_err(|e| SeparateError::Internal(e.to_string()))?;
            den = den
                .checked_add(&kv)
                .map_err(|e| SeparateError::Internal(e.to_string()))?;
        }
        num.checked_sub(&den)
            .map_err(|e| SeparateError::Internal(e.to_string()))
    }
}

fn lex_key(phi: &QPoly) -> String {
    format!("{:04}:{}", phi.deg(), phi)
}

/// Builds a separation certificate for two distinct commensurable inductive
/// valuations over the same base.
pub fn separate(
    w1: &InductiveValuation,
    w2: &InductiveValuation,
) -> Result<SeparationCertificate, SeparateError> {
    if w1.base() != w2.base() {
        return Err(SeparateError::BaseMismatch);
    }
    if w1.kind() != Kind::Commensurable || w2.kind() != Kind::Commensurable {
        return Err(SeparateError::NotCommensurable);
    }
    if w1.preceq(w2)? == Preceq::Proven && w2.preceq(w1)? == Preceq::Proven {
        return Err(SeparateError::IdenticalValuations);
    }

    // candidate keys: every stage key of either input; the minimal-degree
    // one on which the two valuations disagree drives the construction
    let mut cands: Vec<(QPoly, Option<usize>, Option<usize>)> = Vec::new();
    for (i, st) in w1.stages().iter().enumerate() {
        cands.push((st.phi.clone(), Some(i), None));
    }
    for (j, st) in w2.stages().iter().enumerate() {
        if let Some(c) = cands.iter_mut().find(|c| c.0 == st.phi) {
            c.2 = Some(j);
        } else {
            cands.push((st.phi.clone(), None, Some(j)));
        }
    }
    cands.sort_by_key(|c| lex_key(&c.0));
    let mut pick: Option<(QPoly, Option<usize>, Option<usize>, Rat, Rat)> = None;
    for (phi, i1, i2) in cands {
        let a = w1
            .value(&phi)
            .as_rat()
            .cloned()
            .ok_or_else(|| SeparateError::Internal("finite key value expected".into()))?;
        let b = w2
            .value(&phi)
            .as_rat()
            .cloned()
            .ok_or_else(|| SeparateError::Internal("finite key value expected".into()))?;
        if a != b {
            pick = Some((phi, i1, i2, a, b));
            break;
        }
    }
    let (phi, i1, i2, alpha, beta) =
        pick.ok_or_else(|| SeparateError::Internal("distinct valuations agree on all keys".into()))?;
    let low = alpha.clone().min(beta.clone());

    // floor: truncate the valuation that attains the low value through phi,
    // or augment the other one's prefix by (phi, low)
    let (owner, owner_idx) = if alpha <= beta {
        (w1, i1)
    } else {
        (w2, i2)
    };
    let floor = match owner_idx {
        Some(s) => {
            // phi is a stage key of the low side: plain truncation
            InductiveValuation::from_stages(owner.base(), owner.stages()[..=s].to_vec())?
        }
        None => {
            // phi belongs to the other side's chain; graft it onto that
            // chain's prefix at the low value
            let other_idx = if alpha <= beta { i2 } else { i1 };
            let donor = if alpha <= beta { w2 } else { w1 };
            let t = other_idx
                .ok_or_else(|| SeparateError::Internal("key belongs to neither chain".into()))?;
            if t == 0 {
                InductiveValuation::from_stages(
                    donor.base(),
                    vec![Stage { phi: phi.clone(), mu: ExtValue::from_rat(low.clone()) }],
                )?
            } else {
                let prefix = donor.stages()[..t].to_vec();
                let prefix_val = InductiveValuation::from_stages(donor.base(), prefix.clone())?;
                let below = prefix_val
                    .value(&phi)
                    .as_rat()
                    .cloned()
                    .ok_or_else(|| SeparateError::Internal("finite prefix value".into()))?;
                match below.cmp(&low) {
                    Ordering::Less => {
                        let mut stages = prefix;
                        stages.push(Stage { phi: phi.clone(), mu: ExtValue::from_rat(low.clone()) });
                        InductiveValuation::from_stages(donor.base(), stages)?
                    }
                    Ordering::Equal => prefix_val,
                    Ordering::Greater => {
                        return Err(SeparateError::Internal(
                            "prefix already exceeds the low value".into(),
                        ))
                    }
                }
            }
        }
    };

    // witness phi^m / N with N a monomial over p and the floor keys below
    // phi, chosen so both inputs agree on N
    let prefix_stages: Vec<Stage> = floor
        .stages()
        .iter()
        .filter(|st| st.phi != phi)
        .cloned()
        .collect();
    let (m, pi_exp, key_exps) = if prefix_stages.is_empty() {
        let m = u64::try_from(low.denom())
            .map_err(|_| SeparateError::Internal("huge denominator".into()))?;
        let scaled = &low * rat_int(m as i64);
        let a = i64::try_from(scaled.numer())
            .map_err(|_| SeparateError::Internal("huge exponent".into()))?;
        (m, a, Vec::new())
    } else {
        let prefix_val = InductiveValuation::from_stages(floor.base(), prefix_stages.clone())?;
        let mut denom_lcm = BigInt::one();
        for st in &prefix_stages {
            let mu = st
                .mu
                .as_rat()
                .ok_or_else(|| SeparateError::Internal("rational prefix expected".into()))?;
            denom_lcm = denom_lcm.lcm(mu.denom());
        }
        // least m with m*low in the prefix value group
        let m = u64::try_from((&low * Rat::from(denom_lcm)).denom())
            .map_err(|_| SeparateError::Internal("huge denominator".into()))?;
        let target = &low * rat_int(m as i64);
        let (pi_exp, key_exps_raw) = prefix_val.monomial_of_value(&target)?;
        let key_exps: Vec<(QPoly, i64)> = prefix_stages
            .iter()
            .map(|st| st.phi.clone())
            .zip(key_exps_raw)
            .filter(|(_, e)| *e != 0)
            .collect();
        (m, pi_exp, key_exps)
    };

    let cert = SeparationCertificate {
        floor,
        witness_key: phi,
        witness_power: m,
        witness_den: WitnessDenominator { pi_exp, key_exps },
        w1_value: ExtValue::zero(),
        w2_value: ExtValue::zero(),
    };
    // re-verify everything through value() on the actual inputs
    let fv = cert.witness_value(&cert.floor)?;
    if !fv.is_zero() {
        return Err(SeparateError::Internal(format!(
            "witness has floor value {fv}, expected 0"
        )));
    }
    let v1 = cert.witness_value(w1)?;
    let v2 = cert.witness_value(w2)?;
    let ok = (v1.is_zero() && v2 > ExtValue::zero()) || (v2.is_zero() && v1 > ExtValue::zero());
    if !ok {
        return Err(SeparateError::Internal(format!(
            "witness values ({v1}, {v2}) do not separate"
        )));
    }
    if cert.floor.preceq(w1)? != Preceq::Proven || cert.floor.preceq(w2)? != Preceq::Proven {
        return Err(SeparateError::Internal("floor does not sit below both inputs".into()));
    }
    Ok(SeparationCertificate { w1_value: v1, w2_value: v2, ..cert })
}

/// Certificates for every unordered pair of a list of pairwise distinct
/// commensurable valuations; `None` on the diagonal.
pub fn pairwise_report(
    list: &[InductiveValuation],
) -> Result<Vec<Vec<Option<SeparationCertificate>>>, SeparateError> {
    for i in 0..list.len() {
        for j in (i + 1)..list.len() {
            if list[i].same_valuation(&list[j])? {
                return Err(SeparateError::Duplicate);
            }
        }
    }
    let mut out: Vec<Vec<Option<SeparationCertificate>>> = Vec::with_capacity(list.len());
    for i in 0..list.len() {
        let mut row = Vec::with_capacity(list.len());
        for j in 0..list.len() {
            if i == j {
                row.push(None);
            } else {
                row.push(Some(separate(&list[i], &list[j])?));
            }
        }
        out.push(row);
    }
    Ok(out)
}
