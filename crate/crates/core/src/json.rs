//! Stable JSON encodings for the library types: rationals as "num/den"
//! strings, extended values as strings or {a, b, d} objects with "inf" for
//! infinity, polynomials as ascending coefficient arrays, valuations as
//! {base, stages} descriptors. Every encoder has a matching decoder and the
//! pair round-trips exactly.

use crate::approx::ExtensionLeaf;
use crate::basedvr::BaseDVR;
use crate::finitefield::{FFElem, FFPoly};
use crate::inductive::{InductiveValuation, ResiduePoly, Stage};
use crate::poly::{parse_poly, QPoly};
use crate::propcheck::SuiteReport;
use crate::scalar::{rat_from_str, rat_to_string, ExtValue, Rat};
use crate::separate::SeparationCertificate;
use num_traits::Zero;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum JsonError {
    #[error("field {0}: {1}")]
    Field(String, String),
    #[error("{0}")]
    Bad(String),
}

fn bad(field: &str, msg: impl Into<String>) -> JsonError {
    JsonError::Field(field.to_string(), msg.into())
}

// ---- scalars ----

pub fn rat_to_json(r: &Rat) -> Value {
    Value::String(rat_to_string(r))
}

pub fn rat_from_json(v: &Value, field: &str) -> Result<Rat, JsonError> {
    match v {
        Value::String(s) => rat_from_str(s).map_err(|e| bad(field, e.to_string())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rat::from(num_bigint::BigInt::from(i)))
            } else {
                Err(bad(field, "non-integer numbers are not accepted; use \"n/d\""))
            }
        }
        _ => Err(bad(field, "expected a rational as string or integer")),
    }
}

pub fn extvalue_to_json(v: &ExtValue) -> Value {
    match v {
        ExtValue::Infinite => Value::String("inf".into()),
        ExtValue::Finite { a, b, d } => {
            if b.is_zero() {
                rat_to_json(a)
            } else {
                json!({ "a": rat_to_string(a), "b": rat_to_string(b), "d": d })
            }
        }
    }
}

pub fn extvalue_from_json(v: &Value, field: &str) -> Result<ExtValue, JsonError> {
    match v {
        Value::String(s) if s == "inf" => Ok(ExtValue::Infinite),
        Value::String(_) | Value::Number(_) => Ok(ExtValue::from_rat(rat_from_json(v, field)?)),
        Value::Object(m) => {
            let a = rat_from_json(m.get("a").ok_or_else(|| bad(field, "missing a"))?, field)?;
            let b = rat_from_json(m.get("b").ok_or_else(|| bad(field, "missing b"))?, field)?;
            let d = m
                .get("d")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(field, "missing or invalid d"))?;
            ExtValue::quadratic(a, b, d).map_err(|e| bad(field, e.to_string()))
        }
        _ => Err(bad(field, "expected \"inf\", a rational, or {a, b, d}")),
    }
}

// ---- polynomials ----

pub fn qpoly_to_json(f: &QPoly) -> Value {
    Value::Array(f.coeffs().iter().map(rat_to_json).collect())
}

/// Accepts a coefficient array (canonical) or expression text like
/// "x^3 + 2x + 4" (convenience).
pub fn qpoly_from_json(v: &Value, field: &str) -> Result<QPoly, JsonError> {
    match v {
        Value::Array(items) => {
            let mut coeffs = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                coeffs.push(rat_from_json(item, &format!("{field}[{i}]"))?);
            }
            Ok(QPoly::from_coeffs(coeffs))
        }
        Value::String(s) => parse_poly(s).map_err(|e| bad(field, e.to_string())),
        _ => Err(bad(field, "expected a coefficient array or polynomial text")),
    }
}

// ---- finite field elements ----

pub fn ffelem_to_json(e: &FFElem) -> Value {
    match e {
        FFElem::Fp(c) => json!(c),
        FFElem::Ext(v) => Value::Array(v.iter().map(ffelem_to_json).collect()),
    }
}

pub fn ffpoly_to_json(f: &FFPoly) -> Value {
    json!({
        "level": f.level,
        "coeffs": f.coeffs.iter().map(ffelem_to_json).collect::<Vec<_>>(),
    })
}

fn ffelem_from_json(v: &Value, level: usize, field: &str) -> Result<FFElem, JsonError> {
    match (v, level) {
        (Value::Number(n), 0) => n
            .as_u64()
            .map(FFElem::Fp)
            .ok_or_else(|| bad(field, "expected a nonnegative residue")),
        (Value::Array(items), l) if l >= 1 => {
            let mut coeffs = Vec::with_capacity(items.len());
            for item in items {
                coeffs.push(ffelem_from_json(item, l - 1, field)?);
            }
            while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
                coeffs.pop();
            }
            Ok(FFElem::Ext(coeffs))
        }
        (Value::Number(n), l) => {
            // allow plain residues at any level
            let c = n
                .as_u64()
                .ok_or_else(|| bad(field, "expected a nonnegative residue"))?;
            let mut e = FFElem::Fp(c);
            for _ in 0..l {
                e = if e.is_zero() { FFElem::Ext(Vec::new()) } else { FFElem::Ext(vec![e]) };
            }
            Ok(e)
        }
        _ => Err(bad(field, "expected nested coefficient arrays")),
    }
}

pub fn ffpoly_from_json(v: &Value, level: usize, field: &str) -> Result<FFPoly, JsonError> {
    let items = match v {
        Value::Array(items) => items.as_slice(),
        Value::Object(m) => m
            .get("coeffs")
            .and_then(Value::as_array)
            .map(|a| a.as_slice())
            .ok_or_else(|| bad(field, "missing coeffs"))?,
        _ => return Err(bad(field, "expected a coefficient array")),
    };
    let mut coeffs = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        coeffs.push(ffelem_from_json(item, level, &format!("{field}[{i}]"))?);
    }
    while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
        coeffs.pop();
    }
    Ok(FFPoly { level, coeffs })
}

// ---- valuations ----

pub fn valuation_to_json(v: &InductiveValuation) -> Value {
    json!({
        "base": { "p": v.base().p(), "d": v.base().quad_ctx() },
        "stages": v
            .stages()
            .iter()
            .map(|s| json!({ "phi": qpoly_to_json(&s.phi), "mu": extvalue_to_json(&s.mu) }))
            .collect::<Vec<_>>(),
    })
}

fn stage_from_json(v: &Value, field: &str) -> Result<Stage, JsonError> {
    match v {
        Value::Object(m) => {
            let phi = qpoly_from_json(
                m.get("phi").ok_or_else(|| bad(field, "missing phi"))?,
                &format!("{field}.phi"),
            )?;
            let mu = extvalue_from_json(
                m.get("mu").ok_or_else(|| bad(field, "missing mu"))?,
                &format!("{field}.mu"),
            )?;
            Ok(Stage { phi, mu })
        }
        Value::Array(items) => {
            // compact forms [phi, mu] and [phi, deg, mu]
            let (phi_v, deg_check, mu_v) = match items.as_slice() {
                [p, m] => (p, None, m),
                [p, d, m] => (p, d.as_u64(), m),
                _ => return Err(bad(field, "expected [phi, mu] or [phi, deg, mu]")),
            };
            let phi = qpoly_from_json(phi_v, &format!("{field}.phi"))?;
            if let Some(d) = deg_check {
                if phi.degree() != Some(d as usize) {
                    return Err(bad(
                        &format!("{field}.deg"),
                        format!("declared degree {d} but phi has degree {:?}", phi.degree()),
                    ));
                }
            }
            let mu = extvalue_from_json(mu_v, &format!("{field}.mu"))?;
            Ok(Stage { phi, mu })
        }
        _ => Err(bad(field, "expected a stage object or array")),
    }
}

/// Reads a valuation descriptor. `default_base` supplies {p, d} when the
/// descriptor is a bare stage list.
pub fn valuation_from_json(
    v: &Value,
    default_base: Option<&BaseDVR>,
    field: &str,
) -> Result<InductiveValuation, JsonError> {
    let (base, stages_v) = match v {
        Value::Object(m) => {
            let base = match m.get("base") {
                Some(Value::Object(b)) => {
                    let p = b
                        .get("p")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| bad(&format!("{field}.base.p"), "missing prime"))?;
                    let d = b.get("d").and_then(Value::as_u64).unwrap_or(1);
                    BaseDVR::new(p, d).map_err(|e| bad(&format!("{field}.base"), e.to_string()))?
                }
                None => default_base
                    .cloned()
                    .ok_or_else(|| bad(&format!("{field}.base"), "missing base and no --p given"))?,
                _ => return Err(bad(&format!("{field}.base"), "expected an object")),
            };
            let stages = m
                .get("stages")
                .and_then(Value::as_array)
                .ok_or_else(|| bad(&format!("{field}.stages"), "missing stage list"))?;
            (base, stages.clone())
        }
        Value::Array(stages) => {
            let base = default_base
                .cloned()
                .ok_or_else(|| bad(field, "bare stage list needs --p for the base"))?;
            (base, stages.clone())
        }
        _ => return Err(bad(field, "expected a valuation descriptor")),
    };
    let mut stages = Vec::new();
    for (i, sv) in stages_v.iter().enumerate() {
        stages.push(stage_from_json(sv, &format!("{field}.stages[{i}]"))?);
    }
    InductiveValuation::from_stages(&base, stages).map_err(|e| bad(field, e.to_string()))
}

// ---- results ----

pub fn residue_to_json(r: &ResiduePoly) -> Value {
    json!({
        "level": r.level,
        "key_order": r.key_order,
        "poly": r.poly.coeffs.iter().map(ffelem_to_json).collect::<Vec<_>>(),
        "unit": ffelem_to_json(&r.unit),
        "value": extvalue_to_json(&r.value),
    })
}

pub fn leaf_to_json(l: &ExtensionLeaf) -> Value {
    let mut m = Map::new();
    m.insert("e".into(), json!(l.e));
    m.insert("f".into(), json!(l.f));
    m.insert("g_value".into(), extvalue_to_json(&l.g_value));
    m.insert("complete".into(), json!(l.complete));
    if let Value::Object(desc) = valuation_to_json(&l.approximant) {
        m.insert("stages".into(), desc["stages"].clone());
    }
    Value::Object(m)
}

pub fn certificate_to_json(c: &SeparationCertificate) -> Value {
    json!({
        "floor": valuation_to_json(&c.floor),
        "witness": {
            "key": qpoly_to_json(&c.witness_key),
            "power": c.witness_power,
            "den": {
                "pi_exp": c.witness_den.pi_exp,
                "key_exps": c
                    .witness_den
                    .key_exps
                    .iter()
                    .map(|(k, e)| json!([qpoly_to_json(k), e]))
                    .collect::<Vec<_>>(),
            },
        },
        "w1_value": extvalue_to_json(&c.w1_value),
        "w2_value": extvalue_to_json(&c.w2_value),
    })
}

pub fn report_to_json(r: &SuiteReport) -> Value {
    json!({
        "suite": r.suite,
        "seed": r.seed,
        "samples": r.samples,
        "failures": r.failures,
        "counterexample": r.counterexample,
    })
}
