//! Bounded search for negative word traces of classical MPDOs and negative
//! eigenvalues of general MPDOs.
//!
//! A clean result only ever means "nonnegative up to the scanned length";
//! positivity for all lengths is undecidable in general.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::AnyTensor;
use crate::linalg;
use crate::matrix::Matrix;
use crate::necklace::{canonical_rotation, necklace_words};
use crate::scalar::{Exact, Scalar, C64};
use crate::tensor::{for_each_word_trace, word_trace, DenseCap, MpsTensor};

/// Default relative tolerance of the spectral scan.
pub const SCAN_GENERAL_TOL: f64 = 1e-9;

const CHUNK: usize = 1024;
const CHUNKS_PER_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStatus {
    AllNonnegativeUpToCap,
    NegativeWitness,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceValue {
    Exact(BigRational),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub status: ScanStatus,
    pub witness: Option<Vec<usize>>,
    pub witness_trace: Option<TraceValue>,
    /// First violating length.
    pub l0: Option<usize>,
    pub min_len: usize,
    pub max_len: usize,
    /// Necklaces (or sampled words, or lengths for the spectral scan) examined.
    pub word_count: u64,
    /// Smallest eigenvalue at the violating length, spectral scan only.
    pub min_eigenvalue: Option<f64>,
}

impl PositivityReport {
    fn clean(min_len: usize, max_len: usize, word_count: u64) -> Self {
        PositivityReport {
            status: ScanStatus::AllNonnegativeUpToCap,
            witness: None,
            witness_trace: None,
            l0: None,
            min_len,
            max_len,
            word_count,
            min_eigenvalue: None,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.status == ScanStatus::NegativeWitness
    }
}

fn trace_value<T: Scalar>(x: &T) -> TraceValue {
    match (x as &dyn std::any::Any).downcast_ref::<Exact>() {
        Some(e) => TraceValue::Exact(e.re.clone()),
        None => TraceValue::Float(x.to_c64().re),
    }
}

/// Negativity test: strict in exact mode, below `-1e-12 * (max ‖A_i‖_F)^L` in float mode.
fn negativity<T: Scalar>(t: &MpsTensor<T>, length: usize) -> impl Fn(&T) -> bool + Sync {
    let norm = t
        .matrices()
        .iter()
        .map(|m| m.frobenius_sqr().sqrt())
        .fold(0.0, f64::max);
    let thresh = if T::MODE == crate::scalar::ScalarMode::Exact {
        0.0
    } else {
        1e-12 * norm.powi(length as i32)
    };
    move |x: &T| x.re_negative() && x.to_c64().re < -thresh
}

// First negative word of a chunk of consecutive necklaces, reusing prefix products.
fn chunk_first_negative<T: Scalar>(
    t: &MpsTensor<T>,
    words: &[Vec<usize>],
    negative: &(impl Fn(&T) -> bool + Sync),
) -> Option<(usize, T)> {
    let mut prev: &[usize] = &[];
    let mut prefix: Vec<Matrix<T>> = Vec::new();
    for (idx, w) in words.iter().enumerate() {
        let common = prev.iter().zip(w).take_while(|(a, b)| a == b).count();
        prefix.truncate(common);
        for k in common..w.len() {
            let m = match prefix.last() {
                None => t.matrix(w[k]).clone(),
                Some(p) => p.matmul(t.matrix(w[k])),
            };
            prefix.push(m);
        }
        let tr = prefix.last().expect("nonempty word").trace();
        if negative(&tr) {
            return Some((idx, tr));
        }
        prev = w;
    }
    None
}

/// Lexicographically first negative necklace of one length, and the number of
/// necklaces up to it (or in total).
fn first_negative_of_length<T: Scalar>(t: &MpsTensor<T>, length: usize) -> (Option<(Vec<usize>, T)>, u64) {
    let negative = negativity(t, length);
    let mut gen = necklace_words(t.d(), length).peekable();
    let mut seen = 0u64;
    while gen.peek().is_some() {
        let batch: Vec<Vec<Vec<usize>>> = (0..CHUNKS_PER_BATCH)
            .map(|_| gen.by_ref().take(CHUNK).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        let hits: Vec<Option<(usize, T)>> = batch
            .par_iter()
            .map(|chunk| chunk_first_negative(t, chunk, &negative))
            .collect();
        for (chunk, hit) in batch.iter().zip(hits) {
            match hit {
                Some((idx, tr)) => return (Some((chunk[idx].clone(), tr)), seen + idx as u64 + 1),
                None => seen += chunk.len() as u64,
            }
        }
    }
    (None, seen)
}

fn scan_typed<T: Scalar>(t: &MpsTensor<T>, l_min: usize, l_max: usize) -> PositivityReport {
    let mut count = 0u64;
    for length in l_min..=l_max {
        let (hit, seen) = first_negative_of_length(t, length);
        count += seen;
        if let Some((w, tr)) = hit {
            return PositivityReport {
                status: ScanStatus::NegativeWitness,
                witness: Some(w),
                witness_trace: Some(trace_value(&tr)),
                l0: Some(length),
                min_len: l_min,
                max_len: l_max,
                word_count: count,
                min_eigenvalue: None,
            };
        }
    }
    PositivityReport::clean(l_min, l_max, count)
}

/// Exhaustive necklace scan of word-trace signs for lengths `1..=l_max`.
///
/// Exact tensors are always scanned exactly; `exact` additionally converts a
/// float tensor to rationals before scanning.
pub fn scan_classical(t: &AnyTensor, l_max: usize, exact: bool, cap: DenseCap) -> Result<PositivityReport> {
    scan_classical_range(t, 1, l_max, exact, cap)
}

/// As [`scan_classical`], restricted to lengths `l_min..=l_max`.
pub fn scan_classical_range(
    t: &AnyTensor,
    l_min: usize,
    l_max: usize,
    exact: bool,
    cap: DenseCap,
) -> Result<PositivityReport> {
    if l_min == 0 || l_min > l_max {
        return Err(Error::Input("length range must satisfy 1 <= min <= max".into()));
    }
    cap.check(t.d(), l_max).map_err(|e| match e {
        Error::CapExceeded { required, cap } => Error::Input(format!(
            "enumerating {required} words exceeds the cap of {cap}; lower --max-len or use the heuristic scanner"
        )),
        other => other,
    })?;
    Ok(match t {
        AnyTensor::Exact(t) => scan_typed(t, l_min, l_max),
        AnyTensor::Float(f) if exact => scan_typed(&f.to_exact(), l_min, l_max),
        AnyTensor::Float(f) => scan_typed(f, l_min, l_max),
    })
}

/// Random word sampling for lengths `min_len..=max_len`, biased towards the
/// last letter. Any witness found is re-evaluated exactly when the tensor is
/// exact; the smallest (shortest, then lexicographic) canonical witness wins.
pub fn scan_heuristic(
    t: &AnyTensor,
    min_len: usize,
    max_len: usize,
    samples: u64,
    seed: u64,
) -> Result<PositivityReport> {
    if min_len == 0 || min_len > max_len {
        return Err(Error::Input("heuristic length range must satisfy 1 <= min <= max".into()));
    }
    let d = t.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, TraceValue)> = None;
    let float = t.to_float();
    for _ in 0..samples {
        let length = rng.random_range(min_len..=max_len);
        let w: Vec<usize> = (0..length)
            .map(|_| if rng.random_bool(0.5) { d - 1 } else { rng.random_range(0..d) })
            .collect();
        let w = canonical_rotation(&w);
        if best.as_ref().is_some_and(|(b, _)| (b.len(), b) <= (w.len(), &w)) {
            continue;
        }
        let hit = match t {
            AnyTensor::Exact(e) => {
                let tr = word_trace(e, &w)?;
                negativity(e, length)(&tr).then(|| trace_value(&tr))
            }
            AnyTensor::Float(_) => {
                let tr = word_trace(&float, &w)?;
                negativity(&float, length)(&tr).then(|| trace_value(&tr))
            }
        };
        if let Some(tr) = hit {
            best = Some((w, tr));
        }
    }
    Ok(match best {
        Some((w, tr)) => PositivityReport {
            status: ScanStatus::NegativeWitness,
            l0: Some(w.len()),
            witness: Some(w),
            witness_trace: Some(tr),
            min_len,
            max_len,
            word_count: samples,
            min_eigenvalue: None,
        },
        None => PositivityReport::clean(min_len, max_len, samples),
    })
}

/// `true` iff `w` followed by `pad^j` still has negative trace for all `j = 1..=k`.
pub fn extend_witness<T: Scalar>(t: &MpsTensor<T>, w: &[usize], pad: usize, k: usize) -> Result<bool> {
    let base = word_trace(t, w)?;
    if !base.re_negative() {
        return Err(Error::Precondition("witness word does not have negative trace".into()));
    }
    t.check_word(&[pad])?;
    let mut prod = t.word_product(w)?;
    for _ in 0..k {
        prod = prod.matmul(t.matrix(pad));
        if !prod.trace().re_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An MPDO tensor with physical dimension `p`; letter `(i, j)` is stored at
/// index `i * p + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mpdo<T> {
    p: usize,
    tensor: MpsTensor<T>,
}

impl<T: Scalar> Mpdo<T> {
    pub fn new(p: usize, tensor: MpsTensor<T>) -> Result<Self> {
        if tensor.d() != p * p {
            return Err(Error::DimensionMismatch {
                what: "MPDO letters (p^2)",
                expected: p * p,
                found: tensor.d(),
            });
        }
        Ok(Mpdo { p, tensor })
    }

    /// Embeds a classical tensor on the diagonal letters `(i, i)`.
    pub fn from_classical(t: &MpsTensor<T>) -> Self {
        let p = t.d();
        let zero = Matrix::zeros(t.bond(), t.bond());
        let ms = (0..p * p)
            .map(|l| if l / p == l % p { t.matrix(l / p).clone() } else { zero.clone() })
            .collect();
        Mpdo {
            p,
            tensor: MpsTensor::new(ms).expect("uniform bond"),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tensor(&self) -> &MpsTensor<T> {
        &self.tensor
    }

    pub fn letter(&self, i: usize, j: usize) -> &Matrix<T> {
        self.tensor.matrix(i * self.p + j)
    }
}

/// Dense `ρ^L` with entries `tr(M_{i_1 j_1} ... M_{i_L j_L})`.
pub fn build_rho<T: Scalar>(m: &Mpdo<T>, length: usize, cap: DenseCap) -> Result<Matrix<T>> {
    let p = m.p;
    let total = cap.check(p, 2 * length)?;
    let dim = total.isqrt();
    let mut rho = Matrix::zeros(dim, dim);
    for_each_word_trace(&m.tensor, length, |idx, tr| {
        let (mut row, mut col, mut rest, mut place) = (0, 0, idx, 1);
        for _ in 0..length {
            let letter = rest % (p * p);
            rest /= p * p;
            row += (letter / p) * place;
            col += (letter % p) * place;
            place *= p;
        }
        rho[(row, col)] = tr;
    });
    Ok(rho)
}

/// Spectral scan: first `L` with `mineig(ρ^L) < -tol * max_i ρ_ii`.
pub fn scan_general(m: &Mpdo<C64>, l_max: usize, tol: f64, cap: DenseCap) -> Result<PositivityReport> {
    if l_max == 0 {
        return Err(Error::Input("max length must be at least 1".into()));
    }
    for length in 1..=l_max {
        let rho = build_rho(m, length, cap)?;
        let scale = rho.max_abs().max(1.0);
        let min = linalg::min_eig_hermitian(&rho, linalg::HERMITIAN_TOL * scale)?;
        let diag = (0..rho.rows()).map(|i| rho[(i, i)].re).fold(0.0, f64::max);
        if min < -tol * diag.max(f64::MIN_POSITIVE) {
            return Ok(PositivityReport {
                status: ScanStatus::NegativeWitness,
                witness: None,
                witness_trace: None,
                l0: Some(length),
                min_len: 1,
                max_len: l_max,
                word_count: length as u64,
                min_eigenvalue: Some(min),
            });
        }
    }
    Ok(PositivityReport::clean(1, l_max, l_max as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{build_reduction, ReductionMode, ZulcInstance, LETTER_SEVEN, LETTER_SIX};
    use crate::scalar::c64;

    fn e01_reduction() -> AnyTensor {
        let z = ZulcInstance::single([[0, 1, 0], [0, 0, 0], [0, 0, 0]]);
        build_reduction(&z, ReductionMode::Rational).tensor
    }

    fn ghz() -> MpsTensor<C64> {
        let e = |i| {
            let mut m = Matrix::zeros(2, 2);
            m[(i, i)] = c64(1.0, 0.0);
            m
        };
        MpsTensor::new(vec![e(0), e(1)]).unwrap()
    }

    #[test]
    fn reduction_witness() {
        let report = scan_classical(&e01_reduction(), 4, true, DenseCap::DEFAULT).unwrap();
        assert!(report.is_negative());
        assert_eq!(report.witness, Some(vec![0, LETTER_SEVEN]));
        assert_eq!(report.l0, Some(2));
        assert_eq!(report.witness_trace, Some(TraceValue::Exact(crate::scalar::rational(-1, 1))));
    }

    #[test]
    fn identity_reduction_is_clean() {
        let z = ZulcInstance::uniform([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let t = build_reduction(&z, ReductionMode::Rational).tensor;
        let report = scan_classical(&t, 5, true, DenseCap::DEFAULT).unwrap();
        assert_eq!(report.status, ScanStatus::AllNonnegativeUpToCap);
        let expected: u128 = (1..=5).map(|l| crate::necklace::necklace_count(7, l).unwrap()).sum();
        assert_eq!(report.word_count as u128, expected);
    }

    #[test]
    fn ghz_is_clean() {
        let report = scan_classical(&AnyTensor::Float(ghz()), 8, false, DenseCap::DEFAULT).unwrap();
        assert!(!report.is_negative());
    }

    #[test]
    fn cap_is_enforced() {
        let err = scan_classical(&e01_reduction(), 12, true, DenseCap(1000)).unwrap_err();
        assert!(matches!(err, Error::Input(msg) if msg.contains("heuristic")));
    }

    #[test]
    fn witness_extension() {
        let t = e01_reduction().to_exact();
        assert!(extend_witness(&t, &[0, LETTER_SEVEN], LETTER_SIX, 4).unwrap());
        assert!(extend_witness(&t, &[0, LETTER_SEVEN], LETTER_SIX, 0).unwrap());
        assert!(!extend_witness(&t, &[0, LETTER_SEVEN], LETTER_SEVEN, 4).unwrap());
        assert!(matches!(extend_witness(&t, &[0], LETTER_SIX, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn heuristic_finds_reduction_witness() {
        let report = scan_heuristic(&e01_reduction(), 2, 4, 400, 7).unwrap();
        assert!(report.is_negative());
        assert_eq!(report.witness, Some(vec![0, LETTER_SEVEN]));
    }

    #[test]
    fn spectral_scan_single_site() {
        let one = |x: f64| Matrix::from_rows(vec![vec![c64(x, 0.0)]]);
        let t = MpsTensor::new(vec![one(1.0), one(0.0), one(0.0), one(-1.0)]).unwrap();
        let report = scan_general(&Mpdo::new(2, t).unwrap(), 3, SCAN_GENERAL_TOL, DenseCap::DEFAULT).unwrap();
        assert_eq!(report.l0, Some(1));
        assert!((report.min_eigenvalue.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_scan_rejects_non_hermitian() {
        let one = |x: f64| Matrix::from_rows(vec![vec![c64(x, 0.0)]]);
        let t = MpsTensor::new(vec![one(1.0), one(2.0), one(0.0), one(1.0)]).unwrap();
        let err = scan_general(&Mpdo::new(2, t).unwrap(), 1, SCAN_GENERAL_TOL, DenseCap::DEFAULT).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn rho_layout() {
        // ρ^2 of a product state diag(a, b) ⊗ diag(a, b)
        let one = |x: f64| Matrix::from_rows(vec![vec![c64(x, 0.0)]]);
        let t = MpsTensor::new(vec![one(2.0), one(0.0), one(0.0), one(3.0)]).unwrap();
        let rho = build_rho(&Mpdo::new(2, t).unwrap(), 2, DenseCap::DEFAULT).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| rho[(i, i)].re).collect();
        assert_eq!(diag, vec![4.0, 6.0, 6.0, 9.0]);
    }
}
