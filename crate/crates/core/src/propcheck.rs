//! Seeded generators for inductive valuations and machine-checked property
//! suites over them, shared by the test corpus and the CLI self-test.
//!
//! Valuations are generated by construction: random irreducible residuals
//! are lifted to keys and augmented with random admissible values, so every
//! emitted object passes its own invariants without rejection storms.

use crate::basedvr::BaseDVR;
use crate::inductive::{InductiveValuation, Kind, Preceq};
use crate::poly::QPoly;
use crate::scalar::{rat, rat_int, ExtValue, Rat};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BugKind {
    /// Corrupts the checked value function by one unit on odd-degree inputs,
    /// as if a stage value comparison were off by one.
    MuOffByOne,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub p_set: Vec<u64>,
    pub max_stages: u32,
    pub max_degree: u32,
    pub max_coeff_height: u32,
    pub sample_count: u32,
    pub inject_bug: Option<BugKind>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            p_set: vec![2, 3, 5],
            max_stages: 3,
            max_degree: 8,
            max_coeff_height: 50,
            sample_count: 200,
            inject_bug: None,
        }
    }
}

/// Random rational in [0, hi] with a small denominator.
fn small_rat(rng: &mut StdRng, hi: i64, max_den: i64) -> Rat {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(0..=hi * den);
    rat(num, den)
}

/// Random integral polynomial, coefficients bounded by the height cap.
pub fn gen_poly(cfg: &GenConfig, rng: &mut StdRng, max_deg: usize) -> QPoly {
    let h = cfg.max_coeff_height as i64;
    let d = rng.gen_range(0..=max_deg);
    QPoly::from_coeffs((0..=d).map(|_| rat_int(rng.gen_range(-h..=h))).collect())
}

fn gen_nonzero_poly(cfg: &GenConfig, rng: &mut StdRng, max_deg: usize) -> QPoly {
    loop {
        let f = gen_poly(cfg, rng, max_deg);
        if !f.is_zero() {
            return f;
        }
    }
}

/// Draws a commensurable inductive valuation by construction.
pub fn gen_inductive(cfg: &GenConfig, rng: &mut StdRng) -> InductiveValuation {
    let p = cfg.p_set[rng.gen_range(0..cfg.p_set.len())];
    let base = BaseDVR::new(p, 1).expect("configured primes are prime");
    let mu1 = ExtValue::from_rat(small_rat(rng, 2, 3));
    let mut v = InductiveValuation::first_stage(&base, mu1).expect("nonnegative first value");
    let target = rng.gen_range(1..=cfg.max_stages.max(1));
    while (v.stage_count() as u32) < target {
        match try_augment(cfg, rng, &v) {
            Some(w) => v = w,
            None => break,
        }
    }
    v
}

/// One random augmentation step on top of `v`, if the degree budget allows.
pub fn try_augment(
    cfg: &GenConfig,
    rng: &mut StdRng,
    v: &InductiveValuation,
) -> Option<InductiveValuation> {
    if v.kind() != Kind::Commensurable {
        return None;
    }
    let e = v.last_ram().ok()? as u32;
    let key_deg = v.last_key().deg() as u32;
    let level = v.stage_count() - 1;
    let mut choices: Vec<u32> = Vec::new();
    for d in 1..=3u32 {
        let new_deg = e * d * key_deg;
        if new_deg > key_deg && new_deg <= cfg.max_degree {
            choices.push(d);
        }
    }
    if choices.is_empty() {
        return None;
    }
    let d = choices[rng.gen_range(0..choices.len())] as usize;
    if v.tower().size_at(level).saturating_pow(d as u32) > 1 << 16 {
        return None;
    }
    let psi = loop {
        let cand = v.tower().random_monic_irreducible(level, d, rng);
        if !cand.coeff(0).is_zero() {
            break cand;
        }
    };
    let phi = v.key_lift(&psi).ok()?;
    let cur = v.value(&phi).as_rat().cloned()?;
    let bump = {
        let den = rng.gen_range(1..=3);
        rat(rng.gen_range(1..=4 * den), den)
    };
    v.augment(&phi, ExtValue::from_rat(cur + bump)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Axioms,
    Monotonicity,
    Residual,
    Comparison,
    Maximality,
    KeyLift,
}

impl Suite {
    pub fn all() -> &'static [Suite] {
        &[
            Suite::Axioms,
            Suite::Monotonicity,
            Suite::Residual,
            Suite::Comparison,
            Suite::Maximality,
            Suite::KeyLift,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Monotonicity => "monotonicity",
            Suite::Residual => "residual",
            Suite::Comparison => "comparison",
            Suite::Maximality => "maximality",
            Suite::KeyLift => "keylift",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::all().iter().copied().find(|s| s.name() == name)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub samples: u32,
    pub failures: u32,
    /// Minimized description of the first failure, when any.
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn suite_rng(cfg: &GenConfig, suite: Suite, round: u64) -> StdRng {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in suite.name().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    StdRng::seed_from_u64(cfg.seed ^ h ^ round.wrapping_mul(0x9e3779b97f4a7c15))
}

/// Runs one suite; the report is a pure function of `(suite, cfg)`.
pub fn run_suite(suite: Suite, cfg: &GenConfig) -> SuiteReport {
    let mut failures = 0u32;
    let mut first_failure: Option<String> = None;
    for i in 0..cfg.sample_count {
        if let Err(msg) = run_one(suite, cfg, i as u64) {
            failures += 1;
            if first_failure.is_none() {
                first_failure = Some(shrink(suite, cfg, i as u64, msg));
            }
        }
    }
    SuiteReport {
        suite: suite.name().to_string(),
        seed: cfg.seed,
        samples: cfg.sample_count,
        failures,
        counterexample: first_failure,
    }
}

/// Re-runs a failing sample under smaller size budgets until it passes or
/// the budgets bottom out; reports the smallest configuration still failing.
fn shrink(suite: Suite, cfg: &GenConfig, round: u64, original: String) -> String {
    let mut best_cfg = cfg.clone();
    let mut best_msg = original;
    loop {
        let mut improved = false;
        for variant in [
            GenConfig { max_stages: best_cfg.max_stages.saturating_sub(1), ..best_cfg.clone() },
            GenConfig { max_degree: best_cfg.max_degree.saturating_sub(2), ..best_cfg.clone() },
            GenConfig { max_coeff_height: best_cfg.max_coeff_height / 2, ..best_cfg.clone() },
        ] {
            if variant.max_stages == 0 || variant.max_degree < 2 || variant.max_coeff_height == 0 {
                continue;
            }
            if let Err(msg) = run_one(suite, &variant, round) {
                best_cfg = variant;
                best_msg = msg;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    format!(
        "[stages<={} deg<={} height<={} sample={}] {}",
        best_cfg.max_stages, best_cfg.max_degree, best_cfg.max_coeff_height, round, best_msg
    )
}

/// The checked value function; bug injection corrupts it detectably.
fn checked_value(cfg: &GenConfig, v: &InductiveValuation, f: &QPoly) -> ExtValue {
    let base = v.value(f);
    match cfg.inject_bug {
        Some(BugKind::MuOffByOne) if !f.is_zero() && f.deg() % 2 == 1 => {
            base.checked_add(&ExtValue::from_int(1)).expect("finite bump")
        }
        _ => base,
    }
}

fn run_one(suite: Suite, cfg: &GenConfig, round: u64) -> Result<(), String> {
    let mut rng = suite_rng(cfg, suite, round);
    match suite {
        Suite::Axioms => {
            let v = gen_inductive(cfg, &mut rng);
            let (f, g) = if cfg.inject_bug.is_some() && round == 0 {
                (QPoly::x(), QPoly::x()) // deterministic odd-degree pair
            } else {
                (
                    gen_nonzero_poly(cfg, &mut rng, 8),
                    gen_nonzero_poly(cfg, &mut rng, 8),
                )
            };
            let vf = checked_value(cfg, &v, &f);
            let vg = checked_value(cfg, &v, &g);
            let vfg = checked_value(cfg, &v, &f.mul(&g));
            let sum = vf.checked_add(&vg).map_err(|e| e.to_string())?;
            if vfg != sum {
                return Err(format!(
                    "v(fg) = {vfg} but v(f)+v(g) = {sum} for f = {f}, g = {g} on {}",
                    describe(&v)
                ));
            }
            let vsum = checked_value(cfg, &v, &f.add(&g));
            let min = ExtValue::min_of(&[vf, vg]).map_err(|e| e.to_string())?;
            if vsum < min {
                return Err(format!(
                    "ultrametric fails: v(f+g) = {vsum} < min = {min} for f = {f}, g = {g}"
                ));
            }
            // constants keep their base value
            let c = QPoly::constant(rat(
                rng.gen_range(1..=cfg.max_coeff_height as i64),
                rng.gen_range(1..=9),
            ));
            use crate::basedvr::ValuedBase;
            if v.value(&c) != v.base().value(&c.coeff(0)) {
                return Err(format!("constant {c} changed value"));
            }
            Ok(())
        }
        Suite::Monotonicity => {
            let v = gen_inductive(cfg, &mut rng);
            let Some(w) = try_augment(cfg, &mut rng, &v) else {
                return Ok(());
            };
            let new_deg = w.last_key().deg();
            for _ in 0..20 {
                let f = gen_nonzero_poly(cfg, &mut rng, 8);
                let before = v.value(&f);
                let after = checked_value(cfg, &w, &f);
                if after < before {
                    return Err(format!(
                        "value dropped from {before} to {after} on {f} after augmenting by {}",
                        w.last_key()
                    ));
                }
                if f.deg() < new_deg && after != before {
                    return Err(format!(
                        "value changed on {f} of degree below the new key {}",
                        w.last_key()
                    ));
                }
            }
            Ok(())
        }
        Suite::Residual => {
            let v = gen_inductive(cfg, &mut rng);
            let f = gen_nonzero_poly(cfg, &mut rng, 6);
            let g = gen_nonzero_poly(cfg, &mut rng, 6);
            let rf = v.residual(&f).map_err(|e| e.to_string())?;
            let rg = v.residual(&g).map_err(|e| e.to_string())?;
            let rfg = v.residual(&f.mul(&g)).map_err(|e| e.to_string())?;
            if rfg.key_order != rf.key_order + rg.key_order {
                return Err(format!(
                    "key order {} != {} + {} for f = {f}, g = {g} on {}",
                    rfg.key_order,
                    rf.key_order,
                    rg.key_order,
                    describe(&v)
                ));
            }
            let prod = v.tower().poly_monic(&v.tower().poly_mul(&rf.poly, &rg.poly));
            if rfg.poly != prod {
                return Err(format!(
                    "residual of product differs from product of residuals for f = {f}, g = {g}"
                ));
            }
            Ok(())
        }
        Suite::Comparison => {
            let v = gen_inductive(cfg, &mut rng);
            let Some(w) = try_augment(cfg, &mut rng, &v) else {
                return Ok(());
            };
            if v.preceq(&w).map_err(|e| e.to_string())? != Preceq::Proven {
                return Err(format!(
                    "augmentation not proven above its base on {}",
                    describe(&v)
                ));
            }
            for _ in 0..10 {
                let f = gen_nonzero_poly(cfg, &mut rng, 8);
                if v.value(&f) > checked_value(cfg, &w, &f) {
                    return Err(format!("pointwise order violated on {f}"));
                }
            }
            Ok(())
        }
        Suite::Maximality => {
            // a pseudo-valuation dominates its finite truncations, which
            // agree with it below the final key degree and climb unboundedly
            // on the key itself
            let v = gen_inductive(cfg, &mut rng);
            let Some(w) = try_augment(cfg, &mut rng, &v) else {
                return Ok(());
            };
            let phi = w.last_key().clone();
            let pseudo = v
                .augment(&phi, ExtValue::Infinite)
                .map_err(|e| e.to_string())?;
            let base_mu = v.value(&phi).as_rat().cloned().ok_or("rational expected")?;
            let mut prev: Option<InductiveValuation> = None;
            for step in 1..=3i64 {
                let trunc = v
                    .augment(&phi, ExtValue::from_rat(&base_mu + rat_int(step)))
                    .map_err(|e| e.to_string())?;
                if trunc.value(&phi).as_rat() != Some(&(&base_mu + rat_int(step))) {
                    return Err("truncation does not realize its assigned value".into());
                }
                for _ in 0..5 {
                    if phi.deg() < 2 {
                        break;
                    }
                    let f = gen_nonzero_poly(cfg, &mut rng, phi.deg() - 1);
                    if trunc.value(&f) != pseudo.value(&f) {
                        return Err(format!(
                            "truncation disagrees with the pseudo-valuation on {f} below deg {}",
                            phi.deg()
                        ));
                    }
                }
                if let Some(p) = prev {
                    if p.preceq(&trunc).map_err(|e| e.to_string())? != Preceq::Proven {
                        return Err("truncations fail to form a chain".into());
                    }
                }
                prev = Some(trunc);
            }
            Ok(())
        }
        Suite::KeyLift => {
            let v = gen_inductive(cfg, &mut rng);
            if v.residue_total_degree() > 9 {
                return Ok(());
            }
            let level = v.stage_count() - 1;
            let d = rng.gen_range(1..=3usize);
            if v.tower().size_at(level).saturating_pow(d as u32) > 1 << 16 {
                return Ok(());
            }
            let psi = loop {
                let cand = v.tower().random_monic_irreducible(level, d, &mut rng);
                if !cand.coeff(0).is_zero() {
                    break cand;
                }
            };
            let phi = v.key_lift(&psi).map_err(|e| e.to_string())?;
            if !v.is_key(&phi).map_err(|e| e.to_string())? {
                return Err(format!("lift of {psi:?} is not a key on {}", describe(&v)));
            }
            let rp = v.residual(&phi).map_err(|e| e.to_string())?;
            if rp.poly != psi || rp.key_order != 0 {
                return Err(format!("residual round trip failed for {psi:?}"));
            }
            Ok(())
        }
    }
}

fn describe(v: &InductiveValuation) -> String {
    use std::fmt::Write;
    let mut s = format!("p={}", v.base().p());
    for st in v.stages() {
        let _ = write!(s, " ({} @ {})", st.phi, st.mu);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let cfg = GenConfig { sample_count: 10, ..GenConfig::default() };
        let mut r1 = StdRng::seed_from_u64(42);
        let mut r2 = StdRng::seed_from_u64(42);
        for _ in 0..10 {
            let a = gen_inductive(&cfg, &mut r1);
            let b = gen_inductive(&cfg, &mut r2);
            assert_eq!(a.stages(), b.stages());
            assert_eq!(a.base().p(), b.base().p());
        }
    }

    #[test]
    fn generator_respects_bounds() {
        let cfg = GenConfig { max_stages: 3, p_set: vec![2], ..GenConfig::default() };
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..30 {
            let v = gen_inductive(&cfg, &mut rng);
            assert!(v.stage_count() <= 3);
            let degs: Vec<usize> = v.stages().iter().map(|s| s.phi.deg()).collect();
            for w in degs.windows(2) {
                assert!(w[0] < w[1], "degrees must strictly increase: {degs:?}");
            }
            assert!(*degs.last().unwrap() <= 8);
        }
    }

    #[test]
    fn suites_pass_on_defaults() {
        let cfg = GenConfig { sample_count: 60, ..GenConfig::default() };
        for suite in Suite::all() {
            let report = run_suite(*suite, &cfg);
            assert!(report.passed(), "{}: {:?}", suite, report.counterexample);
        }
    }

    #[test]
    fn injected_bug_is_caught_and_shrunk() {
        let cfg = GenConfig {
            sample_count: 5,
            inject_bug: Some(BugKind::MuOffByOne),
            ..GenConfig::default()
        };
        let report = run_suite(Suite::Axioms, &cfg);
        assert!(!report.passed());
        let ce = report.counterexample.unwrap();
        assert!(ce.contains("v(fg)"), "unexpected counterexample: {ce}");
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = GenConfig { sample_count: 25, ..GenConfig::default() };
        let a = run_suite(Suite::Residual, &cfg);
        let b = run_suite(Suite::Residual, &cfg);
        assert_eq!(a.failures, b.failures);
        assert_eq!(a.counterexample, b.counterexample);
    }
}
