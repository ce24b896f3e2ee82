//! Randomised cross-check of a reduction tensor against the closed forms
//! of its word traces.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tnpur::format::{entry_value, AnyTensor};
use tnpur::reduction::{oracle_trace, ZulcInstance, LETTER_SEVEN, REDUCTION_LETTERS, ZULC_LETTERS};
use tnpur::tensor::{flip_operator, word_trace};
use tnpur::{Exact, Scalar};

use crate::{RunReport, EXIT_NEGATIVE, EXIT_OK};

const ORACLE: &str = "oracle agreement";
const NEGATIVE: &str = "closing-seven trace: <0|Y|0>^2 - 1";
const NO_SIX_SEVEN: &str = "six/seven-free trace: ((tr Y)^2 + tr Y^2)/2 + 1";
const FLIP: &str = "flip trace: tr(F(G x G)) = tr(G^2)";

struct Discrepancy {
    check: &'static str,
    word: Vec<usize>,
    expected: Value,
    found: Value,
}

fn random_word(rng: &mut ChaCha8Rng, letters: usize, max_len: usize) -> Vec<usize> {
    let len = rng.random_range(1..=max_len.max(1));
    (0..len).map(|_| rng.random_range(0..letters)).collect()
}

/// Compares the tensor's trace on `w` with `expected`; exact tensors must
/// match exactly, float ones to 1e-9 relative.
fn compare(t: &AnyTensor, w: &[usize], expected: &Exact, check: &'static str) -> Result<Option<Discrepancy>> {
    let (ok, found) = match t {
        AnyTensor::Exact(e) => {
            let tr = word_trace(e, w)?;
            (tr == *expected, entry_value(&tr))
        }
        AnyTensor::Float(f) => {
            let tr = word_trace(f, w)?;
            let ex = expected.to_c64();
            ((tr - ex).norm() <= 1e-9 * ex.norm().max(1.0), entry_value(&tr))
        }
    };
    Ok((!ok).then(|| Discrepancy {
        check,
        word: w.to_vec(),
        expected: entry_value(expected),
        found,
    }))
}

fn sample(z: &ZulcInstance, t: &AnyTensor, rng: &mut ChaCha8Rng, max_len: usize) -> Result<Option<Discrepancy>> {
    let w = random_word(rng, REDUCTION_LETTERS, max_len);
    if let Some(d) = compare(t, &w, &oracle_trace(z, &w)?, ORACLE)? {
        return Ok(Some(d));
    }

    let u = random_word(rng, ZULC_LETTERS, max_len.saturating_sub(1));
    let g = z.product(&u);
    let one = Exact::one();

    let mut closed = u.clone();
    closed.push(LETTER_SEVEN);
    let corner = g[(0, 0)].clone();
    if let Some(d) = compare(t, &closed, &(corner.mul_ref(&corner) - one.clone()), NEGATIVE)? {
        return Ok(Some(d));
    }

    let tr = g.trace();
    let g2 = g.matmul(&g).trace();
    let half = Exact::from_i64(2);
    let expected = (tr.mul_ref(&tr) + g2.clone()) / half + one;
    if let Some(d) = compare(t, &u, &expected, NO_SIX_SEVEN)? {
        return Ok(Some(d));
    }

    let flip = flip_operator(3).matmul(&g.kron(&g)).trace();
    Ok((flip != g2).then(|| Discrepancy {
        check: FLIP,
        word: u,
        expected: entry_value(&g2),
        found: entry_value(&flip),
    }))
}

/// Runs `samples` rounds of every check and stops at the first discrepancy.
pub fn verify_identities(
    z: &ZulcInstance,
    t: &AnyTensor,
    samples: usize,
    seed: u64,
    max_len: usize,
) -> Result<RunReport> {
    if t.d() != REDUCTION_LETTERS {
        bail!("reduction tensor must have {REDUCTION_LETTERS} letters, found {}", t.d());
    }
    if max_len < 2 {
        bail!("max-len must be at least 2");
    }
    let mut report = RunReport::new(
        "verify-identities",
        json!({ "instance": z.matrices(), "samples": samples, "seed": seed, "max_len": max_len, "mode": t.mode() }),
    );
    report.seed = Some(seed);
    report.checks = [ORACLE, NEGATIVE, NO_SIX_SEVEN, FLIP].iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        if let Some(d) = sample(z, t, &mut rng, max_len)? {
            let letters: Vec<usize> = d.word.iter().map(|i| i + 1).collect();
            report.certificates.push(json!({
                "check": d.check,
                "sample": k,
                "word": d.word,
                "letters": letters,
                "expected": d.expected,
                "found": d.found,
            }));
            report.details = json!({ "samples_run": k + 1 });
            return Ok(report.finish("discrepancy", EXIT_NEGATIVE));
        }
    }
    report.details = json!({ "samples_run": samples });
    Ok(report.finish("clean-pass", EXIT_OK))
}
