//! Constructive approximation of valuations: Newton polygons of key
//! expansions, reconstruction of a black-box valuation by inductive
//! augmentation, and the branching computation of all extensions of the
//! p-adic valuation to Q[X]/(g) with ramification and residue data.

use crate::basedvr::{BaseDVR, ValuedBase};
use crate::finitefield::FieldError;
use crate::inductive::{InductiveValuation, Kind, Stage, ValError};
use crate::poly::{phi_expand, PolyError, QPoly};
use crate::scalar::{rat_int, ExtValue, Rat, ScalarError};
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum ApproxError {
    #[error(transparent)]
    Val(#[from] ValError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("polynomial must be monic")]
    NonMonic,
    #[error("polynomial must have integral coefficients under the base valuation")]
    NonIntegral,
    #[error("polynomial must be squarefree (gcd with derivative is nonconstant)")]
    NotSquarefree,
    #[error("polynomial must have degree >= 1")]
    ConstantPolynomial,
    #[error("Newton diagram needs at least two finite points")]
    DegenerateDiagram,
    #[error("Newton diagram points must be rational")]
    IrrationalDiagram,
    #[error("oracle query budget exhausted")]
    BudgetExceeded,
    #[error("oracle violates valuation axioms: {0}")]
    OracleInconsistent(String),
    #[error("internal invariant breached: {0}")]
    Internal(String),
}

/// One principal segment of a Newton diagram: the value drops by `rate`
/// per unit step over `length` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonSlope {
    pub rate: Rat,
    pub length: u64,
}

/// Principal (descending) part of the lower convex hull of the points
/// `(i, values[i])`, skipping infinite entries. Slopes are reported as
/// positive descent rates, steepest first; lengths are horizontal extents.
pub fn newton_slopes(values: &[ExtValue]) -> Result<Vec<NewtonSlope>, ApproxError> {
    let mut pts: Vec<(i64, Rat)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match v {
            ExtValue::Infinite => continue,
            _ => match v.as_rat() {
                Some(r) => pts.push((i as i64, r.clone())),
                None => return Err(ApproxError::IrrationalDiagram),
            },
        }
    }
    if pts.len() < 2 {
        return Err(ApproxError::DegenerateDiagram);
    }
    // lower convex hull, left to right
    let mut hull: Vec<(i64, Rat)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // drop b when it sits on or above the segment a-p
            let lhs = (&b.1 - &a.1) * rat_int(p.0 - a.0);
            let rhs = (&p.1 - &a.1) * rat_int(b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let run = w[1].0 - w[0].0;
        let rise = &w[1].1 - &w[0].1;
        if rise.is_negative() {
            out.push(NewtonSlope {
                rate: -rise / rat_int(run),
                length: run as u64,
            });
        }
    }
    Ok(out)
}

/// Query interface for a valuation extending the base valuation.
pub trait ValuationOracle {
    fn query(&mut self, f: &QPoly) -> ExtValue;
}

impl ValuationOracle for InductiveValuation {
    fn query(&mut self, f: &QPoly) -> ExtValue {
        self.value(f)
    }
}

impl<F: FnMut(&QPoly) -> ExtValue> ValuationOracle for F {
    fn query(&mut self, f: &QPoly) -> ExtValue {
        self(f)
    }
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    pub max_stages: u32,
    pub max_queries: usize,
    /// Cap on the degree of candidate key polynomials in the search.
    pub max_key_degree: usize,
    /// Cap on enumerated residual candidates per degree.
    pub max_candidates: usize,
    /// Verification sample size for the Exact claim.
    pub verify_samples: usize,
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            max_stages: 32,
            max_queries: 10_000,
            max_key_degree: 8,
            max_candidates: 20_000,
            verify_samples: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxStatus {
    /// The result reproduces every oracle answer tested.
    Exact,
    /// Stage, query or search budget reached first.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub valuation: InductiveValuation,
    pub status: ApproxStatus,
    pub queries: usize,
    /// Last-stage value after the seed stage and after every augmentation.
    pub mu_history: Vec<ExtValue>,
}

struct Budget<'a> {
    oracle: &'a mut dyn ValuationOracle,
    used: usize,
    cap: usize,
}

impl<'a> Budget<'a> {
    fn query(&mut self, f: &QPoly) -> Result<ExtValue, ApproxError> {
        if self.used >= self.cap {
            return Err(ApproxError::BudgetExceeded);
        }
        self.used += 1;
        Ok(self.oracle.query(f))
    }
}

/// Rational strictly between `lo` and `hi` (`hi` may be irrational).
fn rational_between(lo: &Rat, hi: &ExtValue) -> Rat {
    let mut c = lo + rat_int(1);
    loop {
        if ExtValue::from_rat(c.clone()).checked_cmp(hi).unwrap() == Ordering::Less {
            return c;
        }
        c = (lo + &c) / rat_int(2);
    }
}

/// Reconstructs a valuation from oracle queries by the inductive process:
/// raise the last key while the oracle values it higher, otherwise hunt for
/// a minimal-degree key polynomial on which the oracle exceeds the current
/// valuation, augment, and repeat.
pub fn approximate(
    oracle: &mut dyn ValuationOracle,
    base: &BaseDVR,
    cfg: &ApproxConfig,
) -> Result<ApproxResult, ApproxError> {
    let mut q = Budget { oracle, used: 0, cap: cfg.max_queries };
    let x = QPoly::x();

    // spot-check the oracle axioms on cheap probes
    let one = q.query(&QPoly::one())?;
    if !one.is_zero() {
        return Err(ApproxError::OracleInconsistent("value of 1 is not 0".into()));
    }
    let p_rat = base.uniformizer();
    let vp = q.query(&QPoly::constant(p_rat.clone()))?;
    if vp != ExtValue::from_int(1) {
        return Err(ApproxError::OracleInconsistent(
            "uniformizer does not have value 1".into(),
        ));
    }
    let wx = q.query(&x)?;
    if wx.checked_cmp(&ExtValue::zero())? == Ordering::Less {
        return Err(ApproxError::OracleInconsistent("value of X is negative".into()));
    }

    let mut v = if wx.is_infinite() {
        let stages = vec![Stage { phi: x.clone(), mu: ExtValue::Infinite }];
        InductiveValuation::from_stages(base, stages)?
    } else if wx.is_rational() {
        InductiveValuation::first_stage(base, wx.clone())?
    } else {
        let mu = rational_between(&Rat::zero(), &wx);
        InductiveValuation::first_stage(base, ExtValue::from_rat(mu))?
    };

    let mut stages_used = 0u32;
    let mut mu_history = vec![v.last_mu().clone()];
    while stages_used < cfg.max_stages && v.kind() != Kind::Pseudo {
        // direction 1: the oracle values the current key higher
        let phi = v.last_key().clone();
        let cur = v.value(&phi);
        let w_phi = match q.query(&phi) {
            Ok(w) => w,
            Err(ApproxError::BudgetExceeded) => {
                return finish(v, ApproxStatus::Truncated, q.used, mu_history)
            }
            Err(e) => return Err(e),
        };
        match w_phi.checked_cmp(&cur)? {
            Ordering::Less => {
                return Err(ApproxError::OracleInconsistent(format!(
                    "oracle values {phi} at {w_phi}, below the constructed {cur}"
                )))
            }
            Ordering::Greater => {
                let next = if w_phi.is_infinite() {
                    ExtValue::Infinite
                } else if w_phi.is_rational() {
                    w_phi.clone()
                } else {
                    let lo = cur.as_rat().cloned().ok_or_else(|| {
                        ApproxError::Internal("commensurable stage expected".into())
                    })?;
                    ExtValue::from_rat(rational_between(&lo, &w_phi))
                };
                v = v.raise_last(next)?;
                mu_history.push(v.last_mu().clone());
                stages_used += 1;
                continue;
            }
            Ordering::Equal => {}
        }

        // direction 2: search for a key of minimal degree the oracle raises
        let level = v.stage_count() - 1;
        let e = v.last_ram()? as usize;
        let key_deg = v.last_key().deg();
        let mut found: Option<(QPoly, ExtValue)> = None;
        let mut d = 1usize;
        'search: loop {
            let cand_deg = e * d * key_deg;
            if cand_deg > cfg.max_key_degree {
                break;
            }
            let count_bound = v.tower().size_at(level).saturating_pow(d as u32);
            if count_bound > cfg.max_candidates as u128 {
                break;
            }
            for psi in v.tower().enumerate_monic_irreducible(level, d) {
                if psi.coeff(0).is_zero() {
                    continue;
                }
                let cand = v.key_lift_fast(&psi)?;
                let cur = v.value(&cand);
                let w = match q.query(&cand) {
                    Ok(w) => w,
                    Err(ApproxError::BudgetExceeded) => {
                        return finish(v, ApproxStatus::Truncated, q.used, mu_history)
                    }
                    Err(e) => return Err(e),
                };
                match w.checked_cmp(&cur)? {
                    Ordering::Less => {
                        return Err(ApproxError::OracleInconsistent(format!(
                            "oracle values {cand} at {w}, below the constructed {cur}"
                        )))
                    }
                    Ordering::Greater => {
                        found = Some((cand, w));
                        break 'search;
                    }
                    Ordering::Equal => {}
                }
            }
            d += 1;
        }
        let Some((phi_new, w_new)) = found else {
            break;
        };
        let mu = if w_new.is_infinite() {
            ExtValue::Infinite
        } else if w_new.is_rational() {
            w_new.clone()
        } else {
            let lo = v
                .value(&phi_new)
                .as_rat()
                .cloned()
                .ok_or_else(|| ApproxError::Internal("commensurable stage expected".into()))?;
            ExtValue::from_rat(rational_between(&lo, &w_new))
        };
        v = v.augment(&phi_new, mu)?;
        mu_history.push(v.last_mu().clone());
        stages_used += 1;
    }

    if stages_used >= cfg.max_stages {
        return finish(v, ApproxStatus::Truncated, q.used, mu_history);
    }

    // verification sample: agreement here backs the Exact claim
    let mut rng = StdRng::seed_from_u64(cfg.seed ^ 0x5eed);
    let max_deg = cfg.max_key_degree.max(2 * v.last_key().deg());
    for _ in 0..cfg.verify_samples {
        let f = random_integral_poly(&mut rng, max_deg);
        if f.is_zero() {
            continue;
        }
        let w = match q.query(&f) {
            Ok(w) => w,
            Err(ApproxError::BudgetExceeded) => {
                return finish(v, ApproxStatus::Truncated, q.used, mu_history)
            }
            Err(e) => return Err(e),
        };
        if w != v.value(&f) {
            return finish(v, ApproxStatus::Truncated, q.used, mu_history);
        }
    }
    finish(v, ApproxStatus::Exact, q.used, mu_history)
}

fn finish(
    valuation: InductiveValuation,
    status: ApproxStatus,
    queries: usize,
    mu_history: Vec<ExtValue>,
) -> Result<ApproxResult, ApproxError> {
    Ok(ApproxResult { valuation, status, queries, mu_history })
}

fn random_integral_poly(rng: &mut StdRng, max_deg: usize) -> QPoly {
    let d = rng.gen_range(0..=max_deg);
    QPoly::from_coeffs((0..=d).map(|_| rat_int(rng.gen_range(-40..40))).collect())
}

/// One branch of the extension computation: an approximant valuation whose
/// residual of g is a single irreducible factor of multiplicity one, with
/// ramification index `e` and residue degree `f`.
#[derive(Debug, Clone)]
pub struct ExtensionLeaf {
    pub approximant: InductiveValuation,
    pub e: u64,
    pub f: u64,
    pub g_value: ExtValue,
    pub complete: bool,
}

/// All extensions of the base valuation to Q[X]/(g) for monic, integral,
/// squarefree g: one leaf per extension, with `sum e_t f_t = deg g`
/// enforced as a hard postcondition.
pub fn extensions(
    base: &BaseDVR,
    g: &QPoly,
    seed: u64,
) -> Result<Vec<ExtensionLeaf>, ApproxError> {
    if g.is_zero() || g.is_constant() {
        return Err(ApproxError::ConstantPolynomial);
    }
    if !g.is_monic() {
        return Err(ApproxError::NonMonic);
    }
    let gauss = InductiveValuation::first_stage(base, ExtValue::zero())?;
    if !gauss.is_integral(g) {
        return Err(ApproxError::NonIntegral);
    }
    if !g.is_squarefree() {
        return Err(ApproxError::NotSquarefree);
    }

    let mut leaves: Vec<ExtensionLeaf> = Vec::new();
    // every state owns exactly the factors living at its last key's assigned
    // value; the slopes of a key are dispatched once, when the key enters
    let mut queue: Vec<(InductiveValuation, QPoly)> = Vec::new();
    // the seed also owns the content at its own value level (unit roots)
    let seed_target = dispatch_key_direction(&gauss, None, g, &mut leaves, &mut queue, g)?;
    queue.push((gauss, seed_target));

    let mut steps = 0usize;
    while let Some((v, target)) = queue.pop() {
        steps += 1;
        if steps > 10_000 {
            return Err(ApproxError::Internal("branching did not terminate".into()));
        }
        if target.is_constant() {
            continue;
        }
        let rp = v.residual(&target)?;
        let (_, factors) = crate::finitefield::ff_factor(v.tower(), &rp.poly, seed)?;
        // key_order >= 1 marks content at steeper slopes of the last key,
        // owned by sibling states dispatched when that key entered
        if rp.key_order == 0 && factors.len() == 1 && factors[0].1 == 1 {
            let e = v.ram_index()?;
            let f = v.residue_total_degree() * factors[0].0.deg() as u64;
            leaves.push(ExtensionLeaf {
                approximant: v.clone(),
                e,
                f,
                g_value: v.value(g),
                complete: true,
            });
            continue;
        }
        for (psi, _mult) in &factors {
            if psi.deg() == 0 {
                continue;
            }
            let phi = v.key_lift(psi)?;
            dispatch_key_direction(&v, Some(&phi), &target, &mut leaves, &mut queue, g)?;
        }
    }

    leaves.sort_by(|a, b| {
        (a.e, a.f, signature(&a.approximant)).cmp(&(b.e, b.f, signature(&b.approximant)))
    });
    let total: u64 = leaves.iter().map(|l| l.e * l.f).sum();
    if total != g.deg() as u64 {
        return Err(ApproxError::Internal(format!(
            "extension degrees sum to {total}, expected {}",
            g.deg()
        )));
    }
    Ok(leaves)
}

/// Enters the direction of one key: captures an exact key factor of the
/// target as a finished leaf, then creates one child per Newton slope of the
/// remaining target that exceeds the key's current value. `phi = None`
/// enters the direction of the state's own last key (seed dispatch).
fn dispatch_key_direction(
    v: &InductiveValuation,
    phi: Option<&QPoly>,
    target: &QPoly,
    leaves: &mut Vec<ExtensionLeaf>,
    queue: &mut Vec<(InductiveValuation, QPoly)>,
    g: &QPoly,
) -> Result<QPoly, ApproxError> {
    let own_key = phi.is_none();
    let phi = phi.unwrap_or_else(|| v.last_key()).clone();
    let cur = v
        .value(&phi)
        .as_rat()
        .cloned()
        .ok_or_else(|| ApproxError::Internal("commensurable branch expected".into()))?;
    let mut dir_target = target.clone();
    let (quot, rem) = dir_target.divmod(&phi)?;
    let exact_factor = rem.is_zero();
    if exact_factor {
        dir_target = quot;
    }
    let mut slopes = Vec::new();
    if !dir_target.is_constant() {
        let expansion = phi_expand(&dir_target, &phi)?;
        if expansion.len() >= 2 {
            let values: Vec<ExtValue> = expansion.iter().map(|a| v.value(a)).collect();
            slopes = newton_slopes(&values)?;
        }
    }
    if exact_factor {
        // the key itself is a factor of the (squarefree) target; park its
        // leaf strictly beyond every sibling slope so distinct leaves stay
        // distinct valuations
        let mut mu = &cur + rat_int(1);
        for slope in &slopes {
            if slope.rate >= mu {
                mu = &slope.rate + rat_int(1);
            }
        }
        let approximant = if own_key {
            v.raise_last(ExtValue::from_rat(mu))?
        } else {
            v.augment(&phi, ExtValue::from_rat(mu))?
        };
        let e = prefix_ram(&approximant)?;
        let f = approximant.residue_total_degree();
        leaves.push(ExtensionLeaf {
            g_value: approximant.value(g),
            approximant,
            e,
            f,
            complete: true,
        });
    }
    for slope in slopes {
        if slope.rate > cur {
            let child = if own_key {
                v.raise_last(ExtValue::from_rat(slope.rate.clone()))?
            } else {
                v.augment(&phi, ExtValue::from_rat(slope.rate.clone()))?
            };
            queue.push((child, dir_target.clone()));
        }
    }
    Ok(dir_target)
}

/// Ramification of the value group of the stage prefix (all but the last mu).
fn prefix_ram(v: &InductiveValuation) -> Result<u64, ApproxError> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut e = BigInt::from(1);
    for stage in &v.stages()[..v.stage_count() - 1] {
        let mu = stage
            .mu
            .as_rat()
            .ok_or_else(|| ApproxError::Internal("rational prefix expected".into()))?;
        e = e.lcm(mu.denom());
    }
    u64::try_from(&e).map_err(|_| ApproxError::Internal("huge ramification".into()))
}

fn signature(v: &InductiveValuation) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for stage in v.stages() {
        let _ = write!(s, "[{}@{}]", stage.phi, stage.mu);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn ev(n: i64, d: i64) -> ExtValue {
        ExtValue::from_rat(rat(n, d))
    }

    fn base(p: u64) -> BaseDVR {
        BaseDVR::new(p, 1).unwrap()
    }

    /// Brute-force lower hull: for every start point take the steepest
    /// segment below which no point falls.
    fn brute_hull_slopes(pts: &[(i64, Rat)]) -> Vec<NewtonSlope> {
        let mut out = Vec::new();
        let mut x = pts.iter().map(|p| p.0).min().unwrap();
        let x_end = pts.iter().map(|p| p.0).max().unwrap();
        let at = |x0: i64| pts.iter().find(|p| p.0 == x0).cloned();
        while x < x_end {
            let (sx, sy) = at(x).unwrap();
            let mut best: Option<(i64, Rat)> = None;
            for cand in pts.iter().filter(|p| p.0 > sx) {
                let rate = (&sy - &cand.1) / rat_int(cand.0 - sx);
                let admissible = pts
                    .iter()
                    .filter(|p| p.0 > sx)
                    .all(|p| p.1 >= &sy - &rate * rat_int(p.0 - sx));
                if admissible {
                    let better = match &best {
                        None => true,
                        Some((bx, r)) => rate > *r || (rate == *r && cand.0 > *bx),
                    };
                    if better {
                        best = Some((cand.0, rate));
                    }
                }
            }
            let (bx, rate) = best.unwrap();
            if rate.is_positive() {
                out.push(NewtonSlope { rate, length: (bx - x) as u64 });
            } else {
                break;
            }
            x = bx;
        }
        out
    }

    #[test]
    fn newton_frozen_examples() {
        // (0,1), (2,0): one slope 1/2 of length 2
        let vals = vec![ev(1, 1), ExtValue::Infinite, ev(0, 1)];
        assert_eq!(
            newton_slopes(&vals).unwrap(),
            vec![NewtonSlope { rate: rat(1, 2), length: 2 }]
        );
        // (0,2), (1,0), (2,0): principal slope 2 of length 1
        let vals = vec![ev(2, 1), ev(0, 1), ev(0, 1)];
        assert_eq!(
            newton_slopes(&vals).unwrap(),
            vec![NewtonSlope { rate: rat(2, 1), length: 1 }]
        );
        // (0,3), (1,1), (3,0): slopes 2 (length 1) then 1/2 (length 2)
        let vals = vec![ev(3, 1), ev(1, 1), ExtValue::Infinite, ev(0, 1)];
        let got = newton_slopes(&vals).unwrap();
        assert_eq!(
            got,
            vec![
                NewtonSlope { rate: rat(2, 1), length: 1 },
                NewtonSlope { rate: rat(1, 2), length: 2 },
            ]
        );
        // brute-force hull agreement
        let pts = vec![(0, rat(3, 1)), (1, rat(1, 1)), (3, rat(0, 1))];
        assert_eq!(got, brute_hull_slopes(&pts));
        // degenerate diagrams
        assert_eq!(newton_slopes(&[ev(1, 1)]), Err(ApproxError::DegenerateDiagram));
    }

    #[test]
    fn newton_matches_brute_force_on_random_diagrams() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..80 {
            let n = rng.gen_range(2..8);
            let vals: Vec<ExtValue> = (0..n)
                .map(|_| {
                    if rng.gen_ratio(1, 6) {
                        ExtValue::Infinite
                    } else {
                        ev(rng.gen_range(0..12), rng.gen_range(1..4))
                    }
                })
                .collect();
            let pts: Vec<(i64, Rat)> = vals
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.as_rat().map(|r| (i as i64, r.clone())))
                .collect();
            if pts.len() < 2 {
                continue;
            }
            assert_eq!(newton_slopes(&vals).unwrap(), brute_hull_slopes(&pts));
        }
    }

    fn ef_multiset(leaves: &[ExtensionLeaf]) -> Vec<(u64, u64)> {
        let mut v: Vec<(u64, u64)> = leaves.iter().map(|l| (l.e, l.f)).collect();
        v.sort();
        v
    }

    #[test]
    fn extensions_frozen_examples() {
        // 2 ramifies in Q(i)
        let leaves = extensions(&base(2), &QPoly::from_ints(&[1, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(2, 1)]);
        // x^2 + 1 splits at 5
        let leaves = extensions(&base(5), &QPoly::from_ints(&[1, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(1, 1), (1, 1)]);
        // x^3 - x - 1 is irreducible mod 2
        let leaves = extensions(&base(2), &QPoly::from_ints(&[-1, -1, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(1, 3)]);
        // x^4 + 1 at 2: the eighth cyclotomic field is totally ramified
        let leaves = extensions(&base(2), &QPoly::from_ints(&[1, 0, 0, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(4, 1)]);
        // x^3 - 2: totally ramified at 3; a line and an inert quadratic at 5
        let leaves = extensions(&base(3), &QPoly::from_ints(&[-2, 0, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(3, 1)]);
        let leaves = extensions(&base(5), &QPoly::from_ints(&[-2, 0, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(1, 1), (1, 2)]);
        // exact key factor capture: x (x^2 + 1) at 5
        let leaves = extensions(&base(5), &QPoly::from_ints(&[0, 1, 0, 1]), 0).unwrap();
        assert_eq!(ef_multiset(&leaves), vec![(1, 1), (1, 1), (1, 1)]);
    }

    #[test]
    fn extensions_rejects_bad_inputs() {
        let b = base(2);
        assert!(matches!(
            extensions(&b, &QPoly::from_ints(&[1, 2]), 0),
            Err(ApproxError::NonMonic)
        ));
        let half = QPoly::from_coeffs(vec![rat(1, 2), rat_int(1)]);
        assert!(matches!(extensions(&b, &half, 0), Err(ApproxError::NonIntegral)));
        let sq = QPoly::from_ints(&[1, 2, 1]); // (x+1)^2
        assert!(matches!(extensions(&b, &sq, 0), Err(ApproxError::NotSquarefree)));
        assert!(matches!(
            extensions(&b, &QPoly::one(), 0),
            Err(ApproxError::ConstantPolynomial)
        ));
    }

    #[test]
    fn approximate_first_stage_oracle() {
        let b = base(2);
        let mut hidden = InductiveValuation::first_stage(&b, ev(1, 1)).unwrap();
        let got = approximate(&mut hidden, &b, &ApproxConfig::default()).unwrap();
        assert_eq!(got.status, ApproxStatus::Exact);
        assert_eq!(got.valuation.stage_count(), 1);
        assert_eq!(got.valuation.value(&QPoly::x()), ev(1, 1));
    }

    #[test]
    fn approximate_hidden_two_stage() {
        let b = base(2);
        let v1 = InductiveValuation::first_stage(&b, ev(1, 1)).unwrap();
        let hidden = v1.augment(&QPoly::from_ints(&[4, 2, 1]), ev(3, 1)).unwrap();
        let mut oracle = hidden.clone();
        let got = approximate(&mut oracle, &b, &ApproxConfig::default()).unwrap();
        assert_eq!(got.status, ApproxStatus::Exact);
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..200 {
            let f = QPoly::from_coeffs(
                (0..=rng.gen_range(0..10usize))
                    .map(|_| rat_int(rng.gen_range(-30..30)))
                    .collect(),
            );
            assert_eq!(got.valuation.value(&f), hidden.value(&f));
        }
    }

    #[test]
    fn approximate_pseudo_oracle() {
        let b = base(2);
        let v1 = InductiveValuation::first_stage(&b, ev(1, 1)).unwrap();
        let hidden = v1
            .augment(&QPoly::from_ints(&[4, 2, 1]), ExtValue::Infinite)
            .unwrap();
        let mut oracle = hidden.clone();
        let got = approximate(&mut oracle, &b, &ApproxConfig::default()).unwrap();
        assert_eq!(got.status, ApproxStatus::Exact);
        assert_eq!(got.valuation.kind(), Kind::Pseudo);
        assert_eq!(
            got.valuation.value(&QPoly::from_ints(&[4, 2, 1])),
            ExtValue::Infinite
        );
    }

    #[test]
    fn approximate_incommensurable_sandwich() {
        let b = BaseDVR::new(2, 2).unwrap();
        let sqrt2 = ExtValue::quadratic(rat_int(0), rat_int(1), 2).unwrap();
        let hidden = InductiveValuation::first_stage(&b, sqrt2.clone()).unwrap();
        let mut oracle = hidden.clone();
        let cfg = ApproxConfig { max_stages: 8, ..ApproxConfig::default() };
        let got = approximate(&mut oracle, &b, &cfg).unwrap();
        assert_eq!(got.status, ApproxStatus::Truncated);
        let mu = got.valuation.last_mu().clone();
        assert!(mu.is_rational());
        assert!(mu < sqrt2);
    }

    #[test]
    fn approximate_detects_inconsistent_oracle() {
        let b = base(2);
        let mut bogus = |f: &QPoly| -> ExtValue {
            if f.is_constant() {
                ExtValue::from_int(7)
            } else {
                ExtValue::zero()
            }
        };
        let got = approximate(&mut bogus, &b, &ApproxConfig::default());
        assert!(matches!(got, Err(ApproxError::OracleInconsistent(_))));
    }
}
