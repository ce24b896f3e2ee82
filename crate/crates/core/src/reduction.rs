//! Reduction from five integer 3×3 matrices to a seven-letter, bond-seven
//! classical MPDO whose word-trace signs encode zeros of the `(0,0)` entry of
//! matrix products.
//!
//! Letters `0..=4` carry `Y_1..Y_5` lifted to the symmetric square, letter 5
//! is the corner projector `E_00 ⊕ 1` and letter 6 is `E_00 ⊕ (-1)`. In the
//! 1-based numbering used for the original construction these are letters
//! 1..7.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::AnyTensor;
use crate::linalg::{self, Span};
use crate::matrix::Matrix;
use crate::scalar::{c64, exact_real, Exact, Scalar, C64};
use crate::tensor::MpsTensor;

/// Letter index of the corner projector with `+1` tail.
pub const LETTER_SIX: usize = 5;
/// Letter index of the corner projector with `-1` tail.
pub const LETTER_SEVEN: usize = 6;
pub const ZULC_LETTERS: usize = 5;
pub const REDUCTION_LETTERS: usize = 7;
pub const REDUCTION_BOND: usize = 7;

/// Symmetric basis of `C^3 ⊗ C^3`, index 0 is `|0,0⟩`.
pub const SYMMETRIC_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub type IntMatrix3 = [[i64; 3]; 3];

/// Five integer 3×3 matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZulcInstance {
    ys: Vec<IntMatrix3>,
}

impl ZulcInstance {
    pub fn new(ys: Vec<IntMatrix3>) -> Result<Self> {
        if ys.len() != ZULC_LETTERS {
            return Err(Error::DimensionMismatch {
                what: "number of 3x3 matrices",
                expected: ZULC_LETTERS,
                found: ys.len(),
            });
        }
        Ok(ZulcInstance { ys })
    }

    /// `Y_1 = m`, remaining matrices zero.
    pub fn single(m: IntMatrix3) -> Self {
        let mut ys = vec![[[0; 3]; 3]; ZULC_LETTERS];
        ys[0] = m;
        ZulcInstance { ys }
    }

    pub fn uniform(m: IntMatrix3) -> Self {
        ZulcInstance {
            ys: vec![m; ZULC_LETTERS],
        }
    }

    /// Entries drawn uniformly from `lo..=hi`.
    pub fn random(rng: &mut impl Rng, lo: i64, hi: i64) -> Self {
        let ys = (0..ZULC_LETTERS)
            .map(|_| {
                let mut m = [[0; 3]; 3];
                for row in m.iter_mut() {
                    for x in row.iter_mut() {
                        *x = rng.random_range(lo..=hi);
                    }
                }
                m
            })
            .collect();
        ZulcInstance { ys }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let ys: Vec<IntMatrix3> = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Schema(format!(
                "line {} column {} (field `{}`): expected five 3x3 integer matrices: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?;
        Self::new(ys)
    }

    pub fn matrices(&self) -> &[IntMatrix3] {
        &self.ys
    }

    pub fn exact(&self, i: usize) -> Matrix<Exact> {
        Matrix::from_fn(3, 3, |r, c| Exact::from_i64(self.ys[i][r][c]))
    }

    pub fn float(&self, i: usize) -> Matrix<C64> {
        Matrix::from_fn(3, 3, |r, c| c64(self.ys[i][r][c] as f64, 0.0))
    }

    /// `Y_{w_1} ... Y_{w_m}` for a word over `0..5`; the empty word gives `1`.
    pub fn product(&self, w: &[usize]) -> Matrix<Exact> {
        w.iter()
            .fold(Matrix::identity(3), |acc, &l| acc.matmul(&self.exact(l)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    /// Exact rationals through the unnormalised pair `(V, W)`.
    Rational,
    /// Floats through the orthonormal symmetric-basis isometry.
    Orthonormal,
}

impl std::str::FromStr for ReductionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(ReductionMode::Rational),
            "orthonormal" => Ok(ReductionMode::Orthonormal),
            other => Err(Error::Input(format!("unknown reduction mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTensor {
    pub mode: ReductionMode,
    pub tensor: AnyTensor,
}

impl ReductionTensor {
    pub fn exact(&self) -> Option<&MpsTensor<Exact>> {
        match &self.tensor {
            AnyTensor::Exact(t) => Some(t),
            AnyTensor::Float(_) => None,
        }
    }
}

/// Real 6×9 isometry onto the symmetric subspace (`O O† = 1`, `O† O = P`).
pub fn isometry() -> Matrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut o = Matrix::zeros(6, 9);
    for (row, &(i, j)) in SYMMETRIC_PAIRS.iter().enumerate() {
        if i == j {
            o[(row, i * 3 + j)] = c64(1.0, 0.0);
        } else {
            o[(row, i * 3 + j)] = c64(s, 0.0);
            o[(row, j * 3 + i)] = c64(s, 0.0);
        }
    }
    o
}

/// Unnormalised row map `V` (6×9) with entries in `{0, 1}`.
pub fn row_map() -> Matrix<Exact> {
    let mut v = Matrix::zeros(6, 9);
    for (row, &(i, j)) in SYMMETRIC_PAIRS.iter().enumerate() {
        v[(row, i * 3 + j)] = Exact::from_i64(1);
        v[(row, j * 3 + i)] = Exact::from_i64(1);
    }
    v
}

/// Right inverse `W` (9×6) of the row map with `W V = P` and `V W = 1`.
pub fn right_inverse() -> Matrix<Exact> {
    let mut w = Matrix::zeros(9, 6);
    for (col, &(i, j)) in SYMMETRIC_PAIRS.iter().enumerate() {
        if i == j {
            w[(i * 3 + j, col)] = Exact::from_i64(1);
        } else {
            w[(i * 3 + j, col)] = exact_real(1, 2);
            w[(j * 3 + i, col)] = exact_real(1, 2);
        }
    }
    w
}

fn corner<T: Scalar>(tail: i64) -> Matrix<T> {
    let mut m = Matrix::zeros(REDUCTION_BOND, REDUCTION_BOND);
    m[(0, 0)] = T::one();
    m[(6, 6)] = T::from_i64(tail);
    m
}

fn lift<T: Scalar>(six: Matrix<T>) -> Matrix<T> {
    six.direct_sum(&Matrix::identity(1))
}

pub fn build_reduction(z: &ZulcInstance, mode: ReductionMode) -> ReductionTensor {
    let tensor = match mode {
        ReductionMode::Rational => {
            let (v, w) = (row_map(), right_inverse());
            let mut ms: Vec<Matrix<Exact>> = (0..ZULC_LETTERS)
                .map(|i| {
                    let y = z.exact(i);
                    lift(v.matmul(&y.kron(&y)).matmul(&w))
                })
                .collect();
            ms.push(corner(1));
            ms.push(corner(-1));
            AnyTensor::Exact(MpsTensor::new(ms).expect("uniform 7x7 letters"))
        }
        ReductionMode::Orthonormal => {
            let o = isometry();
            let od = o.adjoint();
            let p = crate::tensor::sym_projector(3).to_c64();
            let mut ms: Vec<Matrix<C64>> = (0..ZULC_LETTERS)
                .map(|i| {
                    let y = z.float(i);
                    lift(o.matmul(&p).matmul(&y.kron(&y)).matmul(&p).matmul(&od))
                })
                .collect();
            ms.push(corner(1));
            ms.push(corner(-1));
            AnyTensor::Float(MpsTensor::new(ms).expect("uniform 7x7 letters"))
        }
    };
    ReductionTensor { mode, tensor }
}

fn is_corner(l: usize) -> bool {
    l == LETTER_SIX || l == LETTER_SEVEN
}

/// Closed-form word trace computed from 3×3 products only.
///
/// Words without corner letters evaluate to `(tr(G)² + tr(G²))/2 + 1` for the product `G`.
/// Otherwise the word is rotated so a corner letter is last, cut into
/// segments that each end in a corner letter, and evaluates to
/// `Π_j ((Y_{s_j})_{00})² + (-1)^{#7}`.
pub fn oracle_trace(z: &ZulcInstance, w: &[usize]) -> Result<Exact> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    if let Some(&letter) = w.iter().find(|&&l| l >= REDUCTION_LETTERS) {
        return Err(Error::InvalidLetter {
            letter,
            d: REDUCTION_LETTERS,
        });
    }
    let Some(last) = w.iter().rposition(|&l| is_corner(l)) else {
        let g = z.product(w);
        let tr = g.trace();
        let tr2 = g.matmul(&g).trace();
        return Ok((tr.clone() * tr + tr2) * exact_real(1, 2) + Exact::from_i64(1));
    };
    let rotated: Vec<usize> = w[last + 1..].iter().chain(&w[..=last]).copied().collect();
    let mut corner_part = Exact::from_i64(1);
    let mut segment: Vec<usize> = Vec::new();
    let mut sevens = 0usize;
    for &l in &rotated {
        if is_corner(l) {
            let entry = z.product(&segment)[(0, 0)].clone();
            corner_part = corner_part * entry.clone() * entry;
            segment.clear();
            if l == LETTER_SEVEN {
                sevens += 1;
            }
        } else {
            segment.push(l);
        }
    }
    let tail = if sevens.is_multiple_of(2) { 1 } else { -1 };
    Ok(corner_part + Exact::from_i64(tail))
}

/// Result of searching for a common triangularising basis.
#[derive(Debug, Clone)]
pub struct PromiseCheck {
    /// `Q` with every `Q Y_i Q^{-1}` upper triangular; `None` means unknown.
    pub q: Option<Matrix<C64>>,
    /// Largest strictly-lower entry of `Q Y_i Q^{-1}` relative to `max |Y|`.
    pub residual: f64,
}

impl PromiseCheck {
    pub fn is_triangularizable(&self) -> bool {
        self.q.is_some()
    }
}

fn strictly_lower_max(m: &Matrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.rows() {
        for c in 0..r {
            worst = worst.max(m[(r, c)].norm());
        }
    }
    worst
}

fn distinct_eigenvalues(m: &Matrix<C64>, merge_tol: f64) -> Result<Vec<C64>> {
    let mut out: Vec<C64> = Vec::new();
    for ev in linalg::eigenvalues(m)? {
        if !out.iter().any(|x| (x - ev).norm() <= merge_tol) {
            out.push(ev);
        }
    }
    Ok(out)
}

/// A vector that is an eigenvector of every matrix, found by intersecting
/// eigenspaces over all combinations of eigenvalues.
pub fn common_eigenvector(ms: &[Matrix<C64>], tol: f64) -> Result<Option<Vec<C64>>> {
    let n = ms[0].rows();
    let scale = ms.iter().map(Matrix::max_abs).fold(0.0, f64::max).max(1.0);
    let spectra: Vec<Vec<C64>> = ms
        .iter()
        .map(|m| distinct_eigenvalues(m, 1e-6 * scale))
        .collect::<Result<_>>()?;
    let mut choice = vec![0usize; ms.len()];
    loop {
        let stacked = Matrix::from_fn(n * ms.len(), n, |r, c| {
            let (k, rr) = (r / n, r % n);
            let shift = if rr == c { spectra[k][choice[k]] } else { c64(0.0, 0.0) };
            ms[k][(rr, c)] - shift
        });
        // absolute threshold: singular values at most tol * scale
        let sv = linalg::singular_values(&stacked);
        let smax = sv.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let ns = linalg::null_space(&stacked, (tol * scale / smax).min(1.0));
        if let Some(v) = ns.into_iter().next() {
            return Ok(Some(normalise_phase(v)));
        }
        // next combination
        let mut k = 0;
        loop {
            if k == ms.len() {
                return Ok(None);
            }
            choice[k] += 1;
            if choice[k] < spectra[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn normalise_phase(mut v: Vec<C64>) -> Vec<C64> {
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, x)| if x.norm() > best.1 + 1e-12 { (i, x.norm()) } else { best });
    let phase = v[idx].conj() / v[idx].norm();
    let n = linalg::norm(&v);
    for x in v.iter_mut() {
        *x = *x * phase / n;
    }
    v
}

/// Unitary `U` with every `U† M U` upper triangular, or `None`.
fn common_schur_basis(ms: &[Matrix<C64>], tol: f64) -> Result<Option<Matrix<C64>>> {
    let n = ms[0].rows();
    if n == 1 {
        return Ok(Some(Matrix::identity(1)));
    }
    let Some(v) = common_eigenvector(ms, tol)? else {
        return Ok(None);
    };
    let mut span = Span::new(n, 1e-12);
    span.try_add(&v);
    let u = span.completed_unitary();
    let ud = u.adjoint();
    let reduced: Vec<Matrix<C64>> = ms
        .iter()
        .map(|m| ud.matmul(m).matmul(&u).submatrix(1, 1, n - 1, n - 1))
        .collect();
    let Some(inner) = common_schur_basis(&reduced, tol)? else {
        return Ok(None);
    };
    Ok(Some(u.matmul(&Matrix::identity(1).direct_sum(&inner))))
}

/// Searches for `Q` with all `Q Y_i Q^{-1}` upper triangular. A `None`
/// result means no common flag was found within `tol`; it does not prove
/// that none exists.
pub fn check_promise(z: &ZulcInstance, tol: f64) -> Result<PromiseCheck> {
    let ys: Vec<Matrix<C64>> = (0..ZULC_LETTERS).map(|i| z.float(i)).collect();
    let scale = ys.iter().map(Matrix::max_abs).fold(0.0, f64::max).max(1.0);
    let residual_of = |q: &Matrix<C64>, q_inv: &Matrix<C64>| {
        ys.iter()
            .map(|y| strictly_lower_max(&q.matmul(y).matmul(q_inv)))
            .fold(0.0, f64::max)
            / scale
    };
    let already = ys.iter().map(strictly_lower_max).fold(0.0, f64::max) / scale;
    if already <= tol {
        return Ok(PromiseCheck {
            q: Some(Matrix::identity(3)),
            residual: already,
        });
    }
    match common_schur_basis(&ys, tol)? {
        Some(u) => {
            let q = u.adjoint();
            let residual = residual_of(&q, &u);
            Ok(PromiseCheck {
                q: (residual <= tol.max(1e-8)).then_some(q),
                residual,
            })
        }
        None => Ok(PromiseCheck { q: None, residual: f64::INFINITY }),
    }
}

/// An exact tensor scaled to integer entries, with the factor used.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerScaled {
    pub tensor: MpsTensor<Exact>,
    pub factor: BigInt,
}

/// Multiplies every entry by the lcm of all denominators.
pub fn scale_to_integers(t: &MpsTensor<Exact>) -> IntegerScaled {
    let mut lcm = BigInt::one();
    for m in t.matrices() {
        for z in m.data() {
            lcm = lcm.lcm(z.re.denom());
            lcm = lcm.lcm(z.im.denom());
        }
    }
    let factor = Exact::new(BigRational::from_integer(lcm.clone()), BigRational::zero());
    IntegerScaled {
        tensor: t.scaled(&factor),
        factor: lcm,
    }
}

/// Mode-checked variant for tensors read from files.
pub fn scale_any_to_integers(t: &AnyTensor) -> Result<IntegerScaled> {
    match t {
        AnyTensor::Exact(t) => Ok(scale_to_integers(t)),
        AnyTensor::Float(_) => Err(Error::Mode("integer scaling needs a rational tensor".into())),
    }
}
