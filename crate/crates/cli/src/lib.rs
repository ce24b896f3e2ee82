//! Command implementations behind the `tnpur` binary.

pub mod args;
mod identities;
mod parse;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use tnpur::canonical::{absorb_phases, canonicalize, proportional_all_lengths, theoretical_length_bound, ProportionalityVerdict};
use tnpur::format::{
    entry_value, parse_purification, parse_tensor, rational_certificate, write_purification, write_tensor, AnyPurification,
    AnyTensor,
};
use tnpur::positivity::{
    extend_witness, scan_classical_range, scan_general, scan_heuristic, Mpdo, PositivityReport, TraceValue,
};
use tnpur::powersum::{
    elementary_from_power, first_nonzero_power, multiset_from_power_sums, power_sums, proportional_powersum_families,
    recovery_polynomial, FamilyVerdict, PowerSumFamily,
};
use tnpur::purifier::{
    dense_diagonal_deviation, fit_purification, semi_decision_loop, verify_purification, LoopCaps, LoopEvent, LoopVerdict,
    Optimizer, PurifyResult, PurifySearchConfig,
};
use tnpur::reduction::{build_reduction, check_promise, ReductionMode, ZulcInstance};
use tnpur::{DenseCap, Exact, Scalar, C64};

use args::{Cli, Command, FitArgs, Mode, OptimizerArg, PowersumOp};
pub use identities::verify_identities;
use parse::{parse_families, parse_lengths, parse_values};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

/// What a subcommand did, in a form that can be replayed from `config`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub outcome: String,
    pub exit_code: i32,
    /// Names of the checks that were performed.
    pub checks: Vec<String>,
    pub certificates: Vec<Value>,
    pub details: Value,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    fn new(command: &str, config: Value) -> Self {
        RunReport {
            command: command.to_string(),
            config,
            seed: None,
            outcome: String::new(),
            exit_code: EXIT_OK,
            checks: Vec::new(),
            certificates: Vec::new(),
            details: Value::Null,
            timings: BTreeMap::new(),
        }
    }

    fn finish(mut self, outcome: &str, exit_code: i32) -> Self {
        self.outcome = outcome.to_string();
        self.exit_code = exit_code;
        self
    }

    /// Human-readable rendering.
    pub fn render(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.outcome);
        if let Some(seed) = self.seed {
            out.push_str(&format!("  seed {seed}\n"));
        }
        for c in &self.checks {
            out.push_str(&format!("  check {c}\n"));
        }
        for c in &self.certificates {
            out.push_str(&format!("  certificate {c}\n"));
        }
        if let Value::Object(map) = &self.details {
            for (k, v) in map {
                out.push_str(&format!("  {k}: {v}\n"));
            }
        }
        out
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_tensor(path: &Path) -> Result<AnyTensor> {
    parse_tensor(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn any_tensor_text(t: &AnyTensor) -> String {
    match t {
        AnyTensor::Exact(t) => write_tensor(t),
        AnyTensor::Float(t) => write_tensor(t),
    }
}

pub fn trace_certificate(t: &TraceValue) -> Value {
    match t {
        TraceValue::Exact(q) => rational_certificate(q),
        TraceValue::Float(x) => json!({ "value": x }),
    }
}

pub fn witness_certificate(word: &[usize], trace: Option<&TraceValue>) -> Value {
    let letters: Vec<usize> = word.iter().map(|i| i + 1).collect();
    json!({ "word": word, "letters": letters, "trace": trace.map(trace_certificate) })
}

fn complex_json(z: &C64) -> Value {
    json!([z.re, z.im])
}

fn scalar_json<T: Scalar>(x: &T) -> Value {
    entry_value(x)
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let cap = cli.cap.map(DenseCap).unwrap_or_else(DenseCap::from_env);
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Reduce(a) => reduce(a)?,
        Command::Scan(a) => scan(a, cap)?,
        Command::Canonical(a) => canonical(a)?,
        Command::Powersum(a) => powersum(&a.op)?,
        Command::Purify(a) => purify(a, cap)?,
        Command::Verify(a) => verify(a, cap)?,
        Command::Loop(a) => run_loop(a, cap)?,
        Command::VerifyIdentities(a) => {
            let z = ZulcInstance::parse(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
            let tensor = match &a.tensor {
                Some(p) => load_tensor(p)?,
                None => build_reduction(&z, ReductionMode::Rational).tensor,
            };
            verify_identities(&z, &tensor, a.samples, a.seed, a.max_len)?
        }
    };
    report.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

fn reduce(a: &args::ReduceArgs) -> Result<RunReport> {
    let z = ZulcInstance::parse(&read(&a.input)?).with_context(|| format!("in {}", a.input.display()))?;
    let mode = match a.mode {
        Mode::Rational => ReductionMode::Rational,
        Mode::Orthonormal => ReductionMode::Orthonormal,
    };
    let mut report = RunReport::new(
        "reduce",
        json!({ "input": a.input, "mode": mode, "out": a.out, "promise_tol": a.promise_tol }),
    );
    let t = build_reduction(&z, mode);
    let promise = check_promise(&z, a.promise_tol)?;
    report.checks.push("common triangularization".into());
    let text = any_tensor_text(&t.tensor);
    let mut details = json!({
        "d": t.tensor.d(),
        "D": t.tensor.bond(),
        "triangularizable": promise.is_triangularizable(),
        "triangularization_residual": promise.residual,
    });
    match &a.out {
        Some(p) => write_out(p, &text)?,
        None => details["tensor"] = serde_json::from_str(&text)?,
    }
    report.details = details;
    Ok(report.finish("built", EXIT_OK))
}

fn scan_outcome(report: &mut RunReport, r: &PositivityReport, clean: &str) -> i32 {
    report.details = json!({
        "min_len": r.min_len,
        "max_len": r.max_len,
        "words_examined": r.word_count,
        "l0": r.l0,
        "min_eigenvalue": r.min_eigenvalue,
    });
    match &r.witness {
        Some(w) => {
            report.certificates.push(witness_certificate(w, r.witness_trace.as_ref()));
            report.outcome = "negative-witness".into();
            EXIT_NEGATIVE
        }
        None => {
            report.outcome = clean.into();
            EXIT_OK
        }
    }
}

fn scan(a: &args::ScanArgs, cap: DenseCap) -> Result<RunReport> {
    let t = load_tensor(&a.tensor)?;
    if a.exact && matches!(t, AnyTensor::Float(_)) {
        bail!("--exact needs a rational tensor file");
    }
    let mut report = RunReport::new(
        "scan",
        json!({
            "tensor": a.tensor, "min_len": a.min_len, "max_len": a.max_len, "exact": a.exact,
            "heuristic": a.heuristic, "samples": a.samples, "general": a.general, "physical": a.physical,
            "tol": a.tol, "pad": a.pad, "extend": a.extend, "cap": cap.0,
        }),
    );
    let (r, clean) = if a.general {
        let tf = t.to_float();
        let m = match a.physical {
            Some(p) => Mpdo::new(p, tf)?,
            None => Mpdo::from_classical(&tf),
        };
        report.checks.push("spectral positivity".into());
        (scan_general(&m, a.max_len, a.tol, cap)?, "all-nonnegative-up-to-cap")
    } else if a.heuristic {
        report.seed = Some(a.seed);
        report.checks.push("sampled word traces".into());
        (scan_heuristic(&t, a.min_len, a.max_len, a.samples, a.seed)?, "no-witness-sampled")
    } else {
        report.checks.push("necklace word traces".into());
        (scan_classical_range(&t, a.min_len, a.max_len, a.exact, cap)?, "all-nonnegative-up-to-cap")
    };
    let code = scan_outcome(&mut report, &r, clean);
    if let (Some(w), Some(pad)) = (&r.witness, a.pad) {
        if !a.general {
            report.checks.push("witness extension".into());
            let extends = match &t {
                AnyTensor::Exact(e) => extend_witness(e, w, pad, a.extend)?,
                AnyTensor::Float(f) => extend_witness(f, w, pad, a.extend)?,
            };
            report.details["extends"] = json!({ "pad": pad, "copies": a.extend, "negative": extends });
        }
    }
    report.exit_code = code;
    Ok(report)
}

fn canonical(a: &args::CanonicalArgs) -> Result<RunReport> {
    let t = load_tensor(&a.tensor)?;
    let mut report = RunReport::new(
        "canonical",
        json!({
            "tensor": a.tensor, "tol": a.tol, "force_factorial": a.force_factorial,
            "against": a.against, "max_len": a.max_len, "prop_tol": a.prop_tol, "out": a.out,
        }),
    );
    let form = canonicalize(&t.to_float(), a.tol)?;
    let res = form.residuals();
    report.checks.extend(["right fixed point".into(), "left fixed point".into(), "trace normalisation".into()]);
    let classes = absorb_phases(&form, tnpur::canonical::GAUGE_TOL)?;
    let form_json = form.to_json();
    report.details = json!({
        "blocks": form.blocks.len(),
        "weights": form.blocks.iter().map(|b| complex_json(&b.weight)).collect::<Vec<_>>(),
        "multiplicities": form.multiplicities,
        "periods": form.blocks.iter().map(|b| b.period).collect::<Vec<_>>(),
        "positive_weights": form.positive_weights,
        "phase_classes": classes.len(),
        "blocking_factor": form.blocking_factor(a.force_factorial).to_string(),
        "residuals": {
            "fixed_point": res.fixed_point,
            "dual_fixed_point": res.dual_fixed_point,
            "trace": res.trace,
            "min_lambda": res.min_lambda,
        },
    });
    match &a.out {
        Some(p) => write_out(p, &serde_json::to_string_pretty(&form_json)?)?,
        None => report.details["form"] = form_json,
    }
    let Some(other) = &a.against else {
        return Ok(report.finish("canonical-form", EXIT_OK));
    };
    let c = load_tensor(other)?;
    report.checks.push("proportionality at every length".into());
    let bound = theoretical_length_bound(t.bond(), c.bond());
    report.details["length_bound"] = json!(bound.hypothesis.to_string());
    let (outcome, code, extra) = match (&t, &c) {
        (AnyTensor::Exact(x), AnyTensor::Exact(y)) => verdict_json(proportional_all_lengths(x, y, a.max_len, 0.0)?),
        _ => verdict_json(proportional_all_lengths(&t.to_float(), &c.to_float(), a.max_len, a.prop_tol)?),
    };
    report.details["proportionality"] = extra;
    Ok(report.finish(outcome, code))
}

fn verdict_json<T: Scalar>(v: ProportionalityVerdict<T>) -> (&'static str, i32, Value) {
    match v {
        ProportionalityVerdict::ProportionalForAll { step, constants } => (
            "proportional-for-all",
            EXIT_OK,
            json!({ "step": step.to_string(), "constants": constants.iter().map(scalar_json).collect::<Vec<_>>() }),
        ),
        ProportionalityVerdict::FailsAt { length } => ("not-proportional", EXIT_NEGATIVE, json!({ "fails_at": length })),
        ProportionalityVerdict::Inconclusive { checked, fraction } => (
            "inconclusive",
            EXIT_OK,
            json!({ "checked": checked, "fraction_of_bound": fraction }),
        ),
    }
}

fn powersum(op: &PowersumOp) -> Result<RunReport> {
    let values_json = |xs: &[Value]| Value::Array(xs.to_vec());
    match op {
        PowersumOp::Recover { sums, n, exact } => {
            let mut report = RunReport::new("powersum recover", json!({ "sums": sums, "n": n, "exact": exact }));
            report.checks.push("newton identities".into());
            if *exact {
                let s: Vec<Exact> = parse_values(sums)?;
                let poly = recovery_polynomial(&s, *n)?;
                report.details = json!({ "polynomial": values_json(&poly.iter().map(scalar_json).collect::<Vec<_>>()) });
            } else {
                let s: Vec<C64> = parse_values(sums)?;
                let roots = multiset_from_power_sums(&s, *n)?;
                report.details = json!({
                    "multiset": roots.iter().map(complex_json).collect::<Vec<_>>(),
                    "display": parse::display_multiset(&roots),
                });
            }
            Ok(report.finish("recovered", EXIT_OK))
        }
        PowersumOp::Sums { values, n, exact } => {
            let mut report = RunReport::new("powersum sums", json!({ "values": values, "n": n, "exact": exact }));
            report.details = if *exact {
                let xs: Vec<Exact> = parse_values(values)?;
                json!({ "sums": power_sums(&xs, *n).iter().map(scalar_json).collect::<Vec<_>>() })
            } else {
                let xs: Vec<C64> = parse_values(values)?;
                json!({ "sums": power_sums(&xs, *n).iter().map(complex_json).collect::<Vec<_>>() })
            };
            Ok(report.finish("computed", EXIT_OK))
        }
        PowersumOp::Elementary { sums, exact } => {
            let mut report = RunReport::new("powersum elementary", json!({ "sums": sums, "exact": exact }));
            report.checks.push("newton identities".into());
            report.details = if *exact {
                let s: Vec<Exact> = parse_values(sums)?;
                json!({ "elementary": elementary_from_power(&s).iter().map(scalar_json).collect::<Vec<_>>() })
            } else {
                let s: Vec<C64> = parse_values(sums)?;
                json!({ "elementary": elementary_from_power(&s).iter().map(complex_json).collect::<Vec<_>>() })
            };
            Ok(report.finish("computed", EXIT_OK))
        }
        PowersumOp::FirstNonzero { values, exact } => {
            let mut report = RunReport::new("powersum first-nonzero", json!({ "values": values, "exact": exact }));
            let l = if *exact {
                first_nonzero_power(&parse_values::<Exact>(values)?)?
            } else {
                first_nonzero_power(&parse_values::<C64>(values)?)?
            };
            report.details = json!({ "length": l });
            Ok(report.finish("computed", EXIT_OK))
        }
        PowersumOp::Families { mu, nu, window, tol, exact } => {
            let mut report = RunReport::new(
                "powersum families",
                json!({ "mu": mu, "nu": nu, "window": window, "tol": tol, "exact": exact }),
            );
            report.checks.push("cross products of power sums".into());
            let (outcome, code, details) = if *exact {
                families(PowerSumFamily::new(parse_families::<Exact>(mu)?, parse_families::<Exact>(nu)?)?, *window, *tol)?
            } else {
                families(PowerSumFamily::new(parse_families::<C64>(mu)?, parse_families::<C64>(nu)?)?, *window, *tol)?
            };
            report.details = details;
            Ok(report.finish(outcome, code))
        }
    }
}

fn families<T: Scalar>(f: PowerSumFamily<T>, window: Option<usize>, tol: f64) -> Result<(&'static str, i32, Value)> {
    let window = window.unwrap_or(f.l0() * f.l0());
    Ok(match proportional_powersum_families(&f, window, tol)? {
        FamilyVerdict::Proportional { constants } => (
            "proportional",
            EXIT_OK,
            json!({
                "window": window,
                "constants": constants.iter().map(|c| c.as_ref().map(scalar_json)).collect::<Vec<_>>(),
            }),
        ),
        FamilyVerdict::NotProportional { length } => {
            ("not-proportional", EXIT_NEGATIVE, json!({ "window": window, "fails_at": length }))
        }
        FamilyVerdict::Indeterminate { length } => {
            ("indeterminate", EXIT_OK, json!({ "window": window, "vanishing_at": length }))
        }
    })
}

fn fit_config(fit: &FitArgs, bond: usize, env: Option<usize>) -> Result<PurifySearchConfig> {
    let mut cfg = PurifySearchConfig::new(bond);
    cfg.d_env = env;
    cfg.lengths = parse_lengths(&fit.lengths)?;
    cfg.restarts = fit.restarts;
    cfg.tol = fit.tol;
    cfg.seed = fit.seed;
    cfg.max_iters = fit.max_iters;
    cfg.optimizer = match fit.optimizer {
        OptimizerArg::Lbfgs => Optimizer::Lbfgs,
        OptimizerArg::Pattern => Optimizer::PatternSearch,
    };
    Ok(cfg)
}

fn fit_details(r: &PurifyResult, target_bond: usize, cfg: &PurifySearchConfig) -> Value {
    let bound = theoretical_length_bound(target_bond, cfg.bond * cfg.bond);
    let longest = cfg.lengths.iter().copied().max().unwrap_or(0);
    let fraction = longest as f64 / num_traits::ToPrimitive::to_f64(&bound.hypothesis).unwrap_or(f64::INFINITY);
    json!({
        "status": r.status,
        "best_residual": r.best_residual,
        "best_restart": r.best_restart,
        "restarts_run": r.restarts_run,
        "lengths": r.lengths,
        "residuals": r.residuals,
        "constants": r.constants.iter().map(complex_json).collect::<Vec<_>>(),
        "length_bound": bound.hypothesis.to_string(),
        "window_fraction_of_bound": fraction,
    })
}

fn purify(a: &args::PurifyArgs, cap: DenseCap) -> Result<RunReport> {
    let t = load_tensor(&a.tensor)?;
    let cfg = fit_config(&a.fit, a.bond, a.env)?;
    let mut report = RunReport::new("purify", json!({ "tensor": a.tensor, "out": a.out, "search": cfg }));
    report.seed = Some(cfg.seed);
    report.checks.push("overlap fidelity per length".into());
    let r = fit_purification(&t, &cfg)?;
    report.details = fit_details(&r, t.bond(), &cfg);
    let Some(b) = &r.b else {
        return Ok(report.finish("not-found-inconclusive", EXIT_NEGATIVE));
    };
    let af = t.to_float();
    let soundness = dense_soundness(&af, b, &cfg.lengths, cap)?;
    report.checks.push("dense diagonal comparison".into());
    report.details["dense_deviation"] = json!(soundness);
    let text = write_purification(b);
    report.certificates.push(json!({ "purification": serde_json::from_str::<Value>(&text)?, "residual": r.best_residual }));
    if let Some(p) = &a.out {
        write_out(p, &text)?;
    }
    Ok(report.finish("found", EXIT_OK))
}

/// Largest normalised diagonal deviation over lengths `<= 5` that fit the cap.
fn dense_soundness(
    a: &tnpur::MpsTensor<C64>,
    b: &tnpur::PurificationTensor<C64>,
    lengths: &[usize],
    cap: DenseCap,
) -> Result<Option<f64>> {
    let mut worst: Option<f64> = None;
    for &l in lengths.iter().filter(|&&l| l <= 5) {
        if cap.check(b.d() * b.d_env(), l).is_err() {
            continue;
        }
        let dev = dense_diagonal_deviation(a, b, l, cap)?;
        worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
    }
    Ok(worst)
}

fn verify(a: &args::VerifyArgs, cap: DenseCap) -> Result<RunReport> {
    let t = load_tensor(&a.tensor)?;
    let p = parse_purification(&read(&a.purification)?).with_context(|| format!("in {}", a.purification.display()))?;
    let lengths = parse_lengths(&a.lengths)?;
    let mut report = RunReport::new(
        "verify",
        json!({ "tensor": a.tensor, "purification": a.purification, "lengths": lengths, "tol": a.tol }),
    );
    report.checks.push("overlap fidelity per length".into());
    let (pass, checks) = match (&t, &p) {
        (AnyTensor::Exact(x), AnyPurification::Exact(y)) => {
            let r = verify_purification(x, y, &lengths, a.tol)?;
            let checks: Vec<Value> = r
                .checks
                .iter()
                .map(|c| json!({ "length": c.length, "residual": c.residual, "constant": scalar_json(&c.constant) }))
                .collect();
            (r.pass, checks)
        }
        _ => {
            let r = verify_purification(&t.to_float(), &p.to_float(), &lengths, a.tol)?;
            let checks: Vec<Value> = r
                .checks
                .iter()
                .map(|c| json!({ "length": c.length, "residual": c.residual, "constant": complex_json(&c.constant) }))
                .collect();
            (r.pass, checks)
        }
    };
    let dense = dense_soundness(&t.to_float(), &p.to_float(), &lengths, cap)?;
    report.checks.push("dense diagonal comparison".into());
    let dense_ok = dense.is_none_or(|d| d < tnpur::purifier::DENSE_TOL);
    report.certificates = checks;
    report.details = json!({ "pass": pass && dense_ok, "dense_deviation": dense });
    Ok(if pass && dense_ok {
        report.finish("verified", EXIT_OK)
    } else {
        report.finish("verification-failed", EXIT_NEGATIVE)
    })
}

fn run_loop(a: &args::LoopArgs, cap: DenseCap) -> Result<RunReport> {
    let t = load_tensor(&a.tensor)?;
    let mut caps = LoopCaps::new(a.max_bond, a.max_len);
    caps.fit = fit_config(&a.fit, 1, None)?;
    caps.exact = !a.float && matches!(t, AnyTensor::Exact(_));
    let mut report = RunReport::new("loop", json!({ "tensor": a.tensor, "out": a.out, "caps": caps }));
    report.seed = Some(caps.fit.seed);
    report.checks.extend(["overlap fidelity per length".into(), "necklace word traces".into()]);
    let out = semi_decision_loop(&t, &caps, cap)?;
    let log: Vec<Value> = out
        .log
        .iter()
        .map(|e| match e {
            LoopEvent::Fit { step, bond, best_residual, found } => {
                json!({ "step": step, "fit": { "bond": bond, "best_residual": best_residual, "found": found } })
            }
            LoopEvent::Scan { step, length, negative, necklaces } => {
                json!({ "step": step, "scan": { "length": length, "negative": negative, "necklaces": necklaces } })
            }
        })
        .collect();
    report.details = json!({ "log": log });
    Ok(match out.verdict {
        LoopVerdict::Case2Witness { step, word, trace } => {
            report.details["step"] = json!(step);
            report.certificates.push(witness_certificate(&word, trace.as_ref()));
            report.finish("negative-witness", EXIT_NEGATIVE)
        }
        LoopVerdict::PurificationFound { step, bond, result } => {
            report.details["step"] = json!(step);
            let mut cfg = caps.fit.clone();
            cfg.bond = bond;
            report.details["fit"] = fit_details(&result, t.bond(), &cfg);
            if let Some(b) = &result.b {
                let text = write_purification(b);
                report.certificates.push(json!({ "purification": serde_json::from_str::<Value>(&text)?, "bond": bond }));
                if let Some(p) = &a.out {
                    write_out(p, &text)?;
                }
            }
            report.finish("purification-found", EXIT_OK)
        }
        LoopVerdict::BudgetExhausted => report.finish("budget-exhausted", EXIT_OK),
    })
}
