//! Command-line surface for the valuation library. Every command prints a
//! single JSON document on stdout; `--trace` adds a human-readable side
//! channel on stderr. Exit codes: 0 success, 1 self-test failures, 2 input
//! validation, 3 precondition violations, 4 internal invariant breaches.

use clap::{Args, Parser, Subcommand};
use maclane::json as mj;
use maclane::propcheck::{run_suite, GenConfig, Suite};
use maclane::{
    approximate, extensions, pairwise_report, separate, ApproxConfig, ApproxError, ApproxStatus,
    BaseDVR, InductiveValuation, QPoly, ValError,
};
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "maclane", version, about = "Exact inductive valuations on Q[X]")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BaseArgs {
    /// Base prime p.
    #[arg(long)]
    p: Option<u64>,
    /// Squarefree quadratic context for irrational values.
    #[arg(long, default_value_t = 1)]
    d: u64,
    /// Enforce a strictly positive first-stage value.
    #[arg(long = "strict-mu", default_value_t = false)]
    strict_mu: bool,
    /// Emit a human-readable trace on stderr.
    #[arg(long, default_value_t = false)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Value of a polynomial under a valuation.
    Value {
        #[command(flatten)]
        base: BaseArgs,
        /// Valuation descriptor (inline JSON or a file path).
        #[arg(long)]
        val: String,
        /// Polynomial (text like "x^3+2x+4" or a JSON coefficient array).
        #[arg(long)]
        poly: String,
    },
    /// Phi-adic expansion of a polynomial.
    Expand {
        #[arg(long)]
        poly: String,
        /// Monic modulus of degree >= 1.
        #[arg(long)]
        phi: String,
    },
    /// Residual polynomial of a polynomial under a commensurable valuation.
    Residual {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        val: String,
        #[arg(long)]
        poly: String,
    },
    /// Key polynomial lifting a monic irreducible residual.
    Keylift {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        val: String,
        /// Residual over the top tower level, as nested coefficient arrays.
        #[arg(long)]
        psi: String,
    },
    /// Augment a valuation by a key polynomial and a new value.
    Augment {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        val: String,
        #[arg(long)]
        phi: String,
        /// New value: rational "a/b", {a,b,d} JSON, or "inf".
        #[arg(long)]
        mu: String,
    },
    /// All extensions of the p-adic valuation to Q[X]/(g).
    Extensions {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reconstruct a valuation served as a black-box oracle.
    Approximate {
        #[command(flatten)]
        base: BaseArgs,
        /// Hidden valuation descriptor used as the oracle.
        #[arg(long)]
        val: String,
        #[arg(long = "max-stages", default_value_t = 32)]
        max_stages: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Separation certificate for two distinct valuations (give --val twice),
    /// or the full pairwise matrix for more.
    Separate {
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long, required = true)]
        val: Vec<String>,
    },
    /// Run the randomized property suites.
    Selftest {
        /// Suite name (axioms, monotonicity, residual, comparison,
        /// maximality, keylift) or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: u32,
    },
}

struct Failure {
    exit: u8,
    code: &'static str,
    field: String,
    message: String,
}

impl Failure {
    fn new(exit: u8, code: &'static str, field: &str, message: impl Into<String>) -> Self {
        Failure { exit, code, field: field.to_string(), message: message.into() }
    }
}

fn classify_val_error(e: &ValError, field: &str) -> Failure {
    use ValError::*;
    let (exit, code) = match e {
        Internal(_) => (4, "INTERNAL"),
        EmptyStages | FirstStageNotLinear | InternalMuNotRational => (2, "BAD_VAL"),
        KeyNotMonic => (3, "KEY_NOT_MONIC"),
        KeyNotIntegral => (3, "KEY_NOT_INTEGRAL"),
        MuNegative => (3, "MU_NEGATIVE"),
        MuInfinite => (3, "MU_INFINITE"),
        DegreeNotIncreasing => (3, "DEGREE_NOT_INCREASING"),
        MuNotAbove { .. } => (3, "MU_NOT_ABOVE"),
        NotAKey => (3, "NOT_A_KEY"),
        NotCommensurable => (3, "NOT_COMMENSURABLE"),
        ZeroArgument => (3, "ZERO_ARGUMENT"),
        PsiNotIrreducible => (3, "PSI_NOT_IRREDUCIBLE"),
        PsiIsDistinguished => (3, "PSI_DISTINGUISHED"),
        BaseMismatch => (3, "BASE_MISMATCH"),
        Scalar(_) | Poly(_) | Field(_) | Base(_) => (2, "BAD_INPUT"),
    };
    Failure::new(exit, code, field, e.to_string())
}

fn classify_approx_error(e: &ApproxError, field: &str) -> Failure {
    use ApproxError::*;
    match e {
        Val(v) => classify_val_error(v, field),
        Internal(_) => Failure::new(4, "INTERNAL", field, e.to_string()),
        NonMonic => Failure::new(3, "NOT_MONIC", field, e.to_string()),
        NonIntegral => Failure::new(3, "NOT_INTEGRAL", field, e.to_string()),
        NotSquarefree => Failure::new(3, "NOT_SQUAREFREE", field, e.to_string()),
        ConstantPolynomial => Failure::new(2, "BAD_POLY", field, e.to_string()),
        DegenerateDiagram => Failure::new(3, "DEGENERATE_DIAGRAM", field, e.to_string()),
        IrrationalDiagram => Failure::new(3, "IRRATIONAL_DIAGRAM", field, e.to_string()),
        BudgetExceeded => Failure::new(3, "BUDGET_EXCEEDED", field, e.to_string()),
        OracleInconsistent(_) => Failure::new(3, "ORACLE_INCONSISTENT", field, e.to_string()),
        Scalar(_) | Poly(_) | Field(_) => Failure::new(2, "BAD_INPUT", field, e.to_string()),
    }
}

fn read_json_arg(raw: &str, field: &str) -> Result<Value, Failure> {
    let text = if raw.trim_start().starts_with(['{', '[', '"']) {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| {
            Failure::new(2, "FILE_NOT_READ", field, format!("cannot read {raw}: {e}"))
        })?
    };
    serde_json::from_str(&text)
        .map_err(|e| Failure::new(2, "BAD_JSON", field, e.to_string()))
}

fn parse_base(args: &BaseArgs) -> Result<Option<BaseDVR>, Failure> {
    match args.p {
        None => Ok(None),
        Some(p) => BaseDVR::new(p, args.d)
            .map(Some)
            .map_err(|e| match e {
                maclane::BaseError::NotPrime(_) => Failure::new(2, "NON_PRIME", "p", e.to_string()),
                _ => Failure::new(2, "BAD_CONTEXT", "d", e.to_string()),
            }),
    }
}

fn parse_valuation(raw: &str, args: &BaseArgs, field: &str) -> Result<InductiveValuation, Failure> {
    let j = read_json_arg(raw, field)?;
    let base = parse_base(args)?;
    let v = mj::valuation_from_json(&j, base.as_ref(), field)
        .map_err(|e| Failure::new(2, "BAD_VAL", field, e.to_string()))?;
    if args.strict_mu {
        let first = &v.stages()[0].mu;
        if first.is_zero() {
            return Err(Failure::new(
                3,
                "STRICT_MU",
                field,
                "first-stage value must be strictly positive under --strict-mu",
            ));
        }
    }
    Ok(v)
}

fn parse_poly_arg(raw: &str, field: &str) -> Result<QPoly, Failure> {
    if raw.trim_start().starts_with('[') {
        let j = read_json_arg(raw, field)?;
        mj::qpoly_from_json(&j, field).map_err(|e| Failure::new(2, "BAD_POLY", field, e.to_string()))
    } else {
        maclane::parse_poly(raw).map_err(|e| Failure::new(2, "BAD_POLY", field, e.to_string()))
    }
}

fn run(cli: Cli) -> Result<Value, Failure> {
    match cli.cmd {
        Cmd::Value { base, val, poly } => {
            let v = parse_valuation(&val, &base, "val")?;
            let f = parse_poly_arg(&poly, "poly")?;
            if base.trace {
                let (_, lines) = v.value_trace(&f);
                for line in lines {
                    eprintln!("{line}");
                }
            }
            let value = v.value(&f);
            Ok(json!({ "format": 1, "value": mj::extvalue_to_json(&value) }))
        }
        Cmd::Expand { poly, phi } => {
            let f = parse_poly_arg(&poly, "poly")?;
            let phi = parse_poly_arg(&phi, "phi")?;
            let coeffs = maclane::phi_expand(&f, &phi)
                .map_err(|e| Failure::new(3, "BAD_MODULUS", "phi", e.to_string()))?;
            Ok(json!({
                "format": 1,
                "coefficients": coeffs.iter().map(mj::qpoly_to_json).collect::<Vec<_>>(),
            }))
        }
        Cmd::Residual { base, val, poly } => {
            let v = parse_valuation(&val, &base, "val")?;
            let f = parse_poly_arg(&poly, "poly")?;
            let r = v.residual(&f).map_err(|e| classify_val_error(&e, "poly"))?;
            Ok(json!({ "format": 1, "residual": mj::residue_to_json(&r) }))
        }
        Cmd::Keylift { base, val, psi } => {
            let v = parse_valuation(&val, &base, "val")?;
            let j = read_json_arg(&psi, "psi")?;
            let level = v.stage_count() - 1;
            let psi = mj::ffpoly_from_json(&j, level, "psi")
                .map_err(|e| Failure::new(2, "BAD_PSI", "psi", e.to_string()))?;
            let phi = v.key_lift(&psi).map_err(|e| classify_val_error(&e, "psi"))?;
            Ok(json!({ "format": 1, "phi": mj::qpoly_to_json(&phi) }))
        }
        Cmd::Augment { base, val, phi, mu } => {
            let v = parse_valuation(&val, &base, "val")?;
            let phi = parse_poly_arg(&phi, "phi")?;
            let mu_json: Value = if mu.trim_start().starts_with(['{', '"']) {
                read_json_arg(&mu, "mu")?
            } else {
                Value::String(mu.clone())
            };
            let mu = mj::extvalue_from_json(&mu_json, "mu")
                .map_err(|e| Failure::new(2, "BAD_MU", "mu", e.to_string()))?;
            let w = v.augment(&phi, mu).map_err(|e| classify_val_error(&e, "phi"))?;
            Ok(json!({ "format": 1, "valuation": mj::valuation_to_json(&w) }))
        }
        Cmd::Extensions { base, poly, seed } => {
            let b = parse_base(&base)?
                .ok_or_else(|| Failure::new(2, "MISSING_ARG", "p", "--p is required"))?;
            let g = parse_poly_arg(&poly, "poly")?;
            let leaves = extensions(&b, &g, seed).map_err(|e| classify_approx_error(&e, "poly"))?;
            let sum: u64 = leaves.iter().map(|l| l.e * l.f).sum();
            if base.trace {
                for l in &leaves {
                    eprintln!("leaf e={} f={} via {} stages", l.e, l.f, l.approximant.stage_count());
                }
            }
            Ok(json!({
                "format": 1,
                "leaves": leaves.iter().map(mj::leaf_to_json).collect::<Vec<_>>(),
                "check": { "sum_ef": sum, "deg": g.deg() },
            }))
        }
        Cmd::Approximate { base, val, max_stages, seed } => {
            let hidden = parse_valuation(&val, &base, "val")?;
            let b = hidden.base().clone();
            let cfg = ApproxConfig { max_stages, seed, ..ApproxConfig::default() };
            let mut oracle = hidden;
            let res = approximate(&mut oracle, &b, &cfg)
                .map_err(|e| classify_approx_error(&e, "val"))?;
            Ok(json!({
                "format": 1,
                "valuation": mj::valuation_to_json(&res.valuation),
                "status": match res.status {
                    ApproxStatus::Exact => "exact",
                    ApproxStatus::Truncated => "truncated",
                },
                "queries": res.queries,
            }))
        }
        Cmd::Separate { base, val } => {
            if val.len() < 2 {
                return Err(Failure::new(2, "MISSING_ARG", "val", "give --val at least twice"));
            }
            let mut vs = Vec::new();
            for (i, raw) in val.iter().enumerate() {
                vs.push(parse_valuation(raw, &base, &format!("val[{i}]"))?);
            }
            let classify = |e: maclane::SeparateError, field: &str| -> Failure {
                use maclane::SeparateError::*;
                match &e {
                    Val(v) => classify_val_error(v, field),
                    Internal(_) => Failure::new(4, "INTERNAL", field, e.to_string()),
                    BaseMismatch => Failure::new(3, "BASE_MISMATCH", field, e.to_string()),
                    NotCommensurable => Failure::new(3, "NOT_COMMENSURABLE", field, e.to_string()),
                    IdenticalValuations => Failure::new(3, "IDENTICAL_VALUATIONS", field, e.to_string()),
                    Duplicate => Failure::new(3, "DUPLICATE_VALUATIONS", field, e.to_string()),
                }
            };
            if val.len() == 2 {
                let cert = separate(&vs[0], &vs[1]).map_err(|e| classify(e, "val"))?;
                if base.trace {
                    eprintln!(
                        "floor has {} stage(s); witness ({})^{} over p^{} and {} key factor(s): values {} vs {}",
                        cert.floor.stage_count(),
                        cert.witness_key,
                        cert.witness_power,
                        cert.witness_den.pi_exp,
                        cert.witness_den.key_exps.len(),
                        cert.w1_value,
                        cert.w2_value,
                    );
                }
                Ok(json!({ "format": 1, "certificate": mj::certificate_to_json(&cert) }))
            } else {
                let matrix = pairwise_report(&vs).map_err(|e| classify(e, "val"))?;
                let rows: Vec<Value> = matrix
                    .iter()
                    .map(|row| {
                        Value::Array(
                            row.iter()
                                .map(|c| match c {
                                    None => Value::Null,
                                    Some(cert) => mj::certificate_to_json(cert),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                Ok(json!({ "format": 1, "matrix": rows }))
            }
        }
        Cmd::Selftest { suite, seed, samples } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::all().to_vec()
            } else {
                match Suite::from_name(&suite) {
                    Some(s) => vec![s],
                    None => {
                        return Err(Failure::new(2, "UNKNOWN_SUITE", "suite", format!(
                            "unknown suite {suite}; expected all or one of axioms, monotonicity, residual, comparison, maximality, keylift"
                        )))
                    }
                }
            };
            let cfg = GenConfig { seed, sample_count: samples, ..GenConfig::default() };
            let reports: Vec<_> = suites.iter().map(|s| run_suite(*s, &cfg)).collect();
            let ok = reports.iter().all(|r| r.passed());
            let doc = json!({
                "format": 1,
                "ok": ok,
                "reports": reports.iter().map(mj::report_to_json).collect::<Vec<_>>(),
            });
            if !ok {
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                std::process::exit(1);
            }
            Ok(doc)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    match outcome {
        Ok(Ok(doc)) => {
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            ExitCode::SUCCESS
        }
        Ok(Err(f)) => {
            let doc = json!({
                "format": 1,
                "error": { "code": f.code, "field": f.field, "message": f.message },
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            ExitCode::from(f.exit)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            let doc = json!({
                "format": 1,
                "error": { "code": "INTERNAL", "field": "", "message": msg },
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            ExitCode::from(4)
        }
    }
}
