//! Canonical forms of translationally invariant MPS, injectivity, gauge
//! equivalence, linear independence of blocks, and the finite-length test
//! for proportionality at all lengths.
//!
//! Blocks are found by splitting off invariant subspaces of the matrix
//! algebra generated by the `A_i`: a block is irreducible exactly when that
//! algebra is all of `M_D`. Off-diagonal parts of a block-triangular form do
//! not contribute to any trace and are dropped.

use num_bigint::BigUint;
use num_complex::Complex;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::tensor_value;
use crate::linalg::{self, Span};
use crate::matrix::Matrix;
use crate::scalar::{c64, Scalar, C64};
use crate::tensor::{overlap_scaled, overlap_series, proportionality_from_overlaps, DenseCap, MpsTensor};

/// Fixed-point residual tolerance.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Gram-matrix rank threshold.
pub const GRAM_TOL: f64 = 1e-8;
/// Residual accepted for `A_i = e^{iφ} U C_i U†`.
pub const GAUGE_TOL: f64 = 1e-8;

const SPAN_TOL: f64 = 1e-9;
const PERIPHERAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CanonicalBlock {
    pub weight: C64,
    pub tensor: MpsTensor<C64>,
    /// Diagonal of `Λ`, positive with unit sum.
    pub lambda: Vec<f64>,
    /// Number of peripheral eigenvalues of the transfer map.
    pub period: usize,
}

impl CanonicalBlock {
    pub fn bond(&self) -> usize {
        self.tensor.bond()
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub blocks: Vec<CanonicalBlock>,
    pub multiplicities: Vec<usize>,
    /// Whether every weight is real and positive.
    pub positive_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalResiduals {
    /// `max_j ‖E_j(1) - 1‖_max`.
    pub fixed_point: f64,
    /// `max_j ‖E_j*(Λ_j) - Λ_j‖_max`.
    pub dual_fixed_point: f64,
    /// `max_j |tr Λ_j - 1|`.
    pub trace: f64,
    /// `min_j min diag(Λ_j)`.
    pub min_lambda: f64,
}

impl CanonicalForm {
    /// `⊕_j (λ_j A^j)^{⊕ m_j}`.
    pub fn reconstruct(&self) -> MpsTensor<C64> {
        let mut out: Option<MpsTensor<C64>> = None;
        for (block, &m) in self.blocks.iter().zip(&self.multiplicities) {
            let scaled = block.tensor.scaled(&block.weight);
            for _ in 0..m {
                out = Some(match out {
                    None => scaled.clone(),
                    Some(acc) => acc.direct_sum(&scaled).expect("same physical dimension"),
                });
            }
        }
        out.expect("canonical form has at least one block")
    }

    pub fn residuals(&self) -> CanonicalResiduals {
        let mut r = CanonicalResiduals {
            fixed_point: 0.0,
            dual_fixed_point: 0.0,
            trace: 0.0,
            min_lambda: f64::INFINITY,
        };
        for b in &self.blocks {
            let n = b.bond();
            let id = Matrix::identity(n);
            r.fixed_point = r.fixed_point.max(apply_e(&b.tensor, &id).max_abs_diff(&id));
            let lam = Matrix::diagonal(&b.lambda.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
            r.dual_fixed_point = r.dual_fixed_point.max(apply_e_dual(&b.tensor, &lam).max_abs_diff(&lam));
            r.trace = r.trace.max((b.lambda.iter().sum::<f64>() - 1.0).abs());
            r.min_lambda = b.lambda.iter().copied().fold(r.min_lambda, f64::min);
        }
        r
    }

    /// Least common multiple of the block periods, or `D!` of the total
    /// bond dimension when `force_factorial` is set.
    pub fn blocking_factor(&self, force_factorial: bool) -> BigUint {
        if force_factorial {
            let total: usize = self
                .blocks
                .iter()
                .zip(&self.multiplicities)
                .map(|(b, m)| b.bond() * m)
                .sum();
            return factorial(total);
        }
        let mut l = BigUint::one();
        for b in &self.blocks {
            let p = BigUint::from(b.period);
            l = num_integer::Integer::lcm(&l, &p);
        }
        l
    }

    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .zip(&self.multiplicities)
            .map(|(b, &m)| {
                json!({
                    "lambda": [b.weight.re, b.weight.im],
                    "tensor": tensor_value(&b.tensor),
                    "Lambda": b.lambda,
                    "multiplicity": m,
                    "period": b.period,
                })
            })
            .collect();
        json!({ "blocks": blocks, "positive_weights": self.positive_weights })
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `E(X) = Σ_i A_i X A_i†`.
pub fn apply_e(t: &MpsTensor<C64>, x: &Matrix<C64>) -> Matrix<C64> {
    let mut acc = Matrix::zeros(t.bond(), t.bond());
    for a in t.matrices() {
        acc.add_assign(&a.matmul(x).matmul(&a.adjoint()));
    }
    acc
}

/// `E*(Y) = Σ_i A_i† Y A_i`.
pub fn apply_e_dual(t: &MpsTensor<C64>, y: &Matrix<C64>) -> Matrix<C64> {
    let mut acc = Matrix::zeros(t.bond(), t.bond());
    for a in t.matrices() {
        acc.add_assign(&a.adjoint().matmul(y).matmul(a));
    }
    acc
}

/// Matrix of `X ↦ Σ_i A_i X C_i†` on row-major vectorisations.
fn action_matrix(a: &MpsTensor<C64>, c: &MpsTensor<C64>) -> Matrix<C64> {
    let n = a.bond() * c.bond();
    let mut acc = Matrix::zeros(n, n);
    for (ai, ci) in a.matrices().iter().zip(c.matrices()) {
        acc.add_assign(&ai.kron(&ci.conj()));
    }
    acc
}

fn reshape(v: &[C64], rows: usize, cols: usize) -> Matrix<C64> {
    Matrix::from_vec(rows, cols, v.to_vec())
}

fn vectorise(m: &Matrix<C64>) -> Vec<C64> {
    m.data().to_vec()
}

/// Hermitian positive representative of a fixed point given up to a phase.
fn hermitian_positive(v: &[C64], n: usize) -> Matrix<C64> {
    let x = reshape(v, n, n);
    let tr = x.trace();
    let phase = if tr.norm() > 0.0 { tr.conj() / tr.norm() } else { c64(1.0, 0.0) };
    let x = x.scale(&phase);
    Matrix::from_fn(n, n, |r, c| (x[(r, c)] + x[(c, r)].conj()) * 0.5)
}

/// Orthonormal basis of the unital algebra generated by the matrices.
fn algebra_basis(ms: &[Matrix<C64>]) -> Vec<Matrix<C64>> {
    let n = ms[0].rows();
    let mut span = Span::new(n * n, SPAN_TOL);
    span.try_add(&vectorise(&Matrix::identity(n)));
    let mut next = 0;
    while next < span.len() && !span.is_full() {
        let b = reshape(&span.basis()[next], n, n);
        for a in ms {
            span.try_add(&vectorise(&a.matmul(&b)));
        }
        next += 1;
    }
    span.basis().iter().map(|v| reshape(v, n, n)).collect()
}

/// Dimension of `{B v : B ∈ algebra}` and its orthonormal basis.
fn orbit(basis: &[Matrix<C64>], v: &[C64]) -> Span {
    let n = v.len();
    let mut span = Span::new(n, SPAN_TOL);
    for b in basis {
        let bv: Vec<C64> = (0..n).map(|r| (0..n).map(|c| b[(r, c)] * v[c]).sum()).collect();
        span.try_add(&bv);
    }
    span
}

/// Orthonormal basis of a proper nonzero invariant subspace, if the
/// algebra is not all of `M_n`.
fn invariant_subspace(ms: &[Matrix<C64>], basis: &[Matrix<C64>]) -> Result<Option<Span>> {
    let n = ms[0].rows();
    if basis.len() == n * n {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    for _attempt in 0..4 {
        let coeffs: Vec<C64> = basis
            .iter()
            .map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut r = Matrix::zeros(n, n);
        for (b, k) in basis.iter().zip(&coeffs) {
            r.add_assign(&b.scale(k));
        }
        let scale = r.max_abs().max(f64::MIN_POSITIVE);
        for side in [false, true] {
            // right side: eigenvectors of R; left side: eigenvectors of R†
            // whose orbit under the adjoint algebra has a nontrivial complement.
            let (rr, bs): (Matrix<C64>, Vec<Matrix<C64>>) = if side {
                (r.adjoint(), basis.iter().map(Matrix::adjoint).collect())
            } else {
                (r.clone(), basis.to_vec())
            };
            for ev in linalg::eigenvalues(&rr)? {
                let shifted = Matrix::from_fn(n, n, |i, j| rr[(i, j)] - if i == j { ev } else { c64(0.0, 0.0) });
                for v in linalg::null_space(&shifted, 1e-8 * scale / shifted.max_abs().max(f64::MIN_POSITIVE))
                    .into_iter()
                    .chain(std::iter::once(linalg::smallest_singular_vector(&shifted).0))
                {
                    let o = orbit(&bs, &v);
                    if !o.is_empty() && o.len() < n {
                        if !side {
                            return Ok(Some(o));
                        }
                        // complement of an adjoint-invariant subspace is invariant
                        let full = o.completed_unitary();
                        let mut comp = Span::new(n, SPAN_TOL);
                        for k in o.len()..n {
                            comp.try_add(&(0..n).map(|r| full[(r, k)]).collect::<Vec<_>>());
                        }
                        return Ok(Some(comp));
                    }
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "algebra has dimension {} < {} but no invariant subspace was isolated",
        basis.len(),
        n * n
    )))
}

/// Recursively splits into diagonal blocks with irreducible algebras.
fn irreducible_blocks(ms: Vec<Matrix<C64>>, out: &mut Vec<Vec<Matrix<C64>>>) -> Result<()> {
    let n = ms[0].rows();
    if n == 1 {
        out.push(ms);
        return Ok(());
    }
    let basis = algebra_basis(&ms);
    let Some(sub) = invariant_subspace(&ms, &basis)? else {
        out.push(ms);
        return Ok(());
    };
    let k = sub.len();
    let u = sub.completed_unitary();
    let ud = u.adjoint();
    let rotated: Vec<Matrix<C64>> = ms.iter().map(|m| ud.matmul(m).matmul(&u)).collect();
    let scale = ms.iter().map(Matrix::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let leak = rotated
        .iter()
        .map(|m| m.submatrix(k, 0, n - k, k).max_abs())
        .fold(0.0, f64::max);
    if leak > 1e-7 * scale {
        return Err(Error::Numeric(format!(
            "invariant subspace leaks: off-block residual {leak:.3e}"
        )));
    }
    irreducible_blocks(rotated.iter().map(|m| m.submatrix(0, 0, k, k)).collect(), out)?;
    irreducible_blocks(rotated.iter().map(|m| m.submatrix(k, k, n - k, n - k)).collect(), out)
}

fn transfer(t: &MpsTensor<C64>) -> Matrix<C64> {
    action_matrix(t, t)
}

/// Gauges an irreducible block so `E(1) = 1` and the dual fixed point is
/// diagonal. Returns `None` for blocks with vanishing spectral radius.
fn normalise_block(ms: Vec<Matrix<C64>>) -> Result<Option<CanonicalBlock>> {
    let n = ms[0].rows();
    let mut t = MpsTensor::new(ms)?;
    let r0 = linalg::spectral_radius(&transfer(&t))?;
    let scale = t.matrices().iter().map(Matrix::frobenius_sqr).sum::<f64>();
    if r0 <= 1e-14 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return Ok(None);
    }
    let mut weight = 1.0;
    // two passes: the second one removes round-off left by the first
    for _ in 0..2 {
        let tm = transfer(&t);
        let r = linalg::spectral_radius(&tm)?;
        let shifted = Matrix::from_fn(n * n, n * n, |i, j| tm[(i, j)] - if i == j { c64(r, 0.0) } else { c64(0.0, 0.0) });
        let x = hermitian_positive(&linalg::smallest_singular_vector(&shifted).0, n);
        let (vals, _) = linalg::hermitian_eigen(&x);
        if vals[0] <= 1e-13 * vals[n - 1].abs() {
            return Err(Error::Numeric(format!(
                "right fixed point is not positive definite (eigenvalues {:.3e}..{:.3e})",
                vals[0],
                vals[n - 1]
            )));
        }
        let sq = linalg::hermitian_fn(&x, f64::sqrt);
        let sq_inv = linalg::hermitian_fn(&x, |v| 1.0 / v.sqrt());
        let s = c64(1.0 / r.sqrt(), 0.0);
        t = MpsTensor::new(t.matrices().iter().map(|a| sq_inv.matmul(a).matmul(&sq).scale(&s)).collect())?;
        weight *= r.sqrt();
    }
    let tm = transfer(&t);
    let dual = tm.adjoint();
    let shifted = Matrix::from_fn(n * n, n * n, |i, j| dual[(i, j)] - if i == j { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    let y = hermitian_positive(&linalg::smallest_singular_vector(&shifted).0, n);
    let (vals, vecs) = linalg::hermitian_eigen(&y);
    let total: f64 = vals.iter().sum();
    if vals[0] <= 1e-13 * total.abs() {
        return Err(Error::Numeric("left fixed point is not positive definite".into()));
    }
    // descending Λ
    let order: Vec<usize> = (0..n).rev().collect();
    let v = Matrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    let vd = v.adjoint();
    let t = MpsTensor::new(t.matrices().iter().map(|a| vd.matmul(a).matmul(&v)).collect())?;
    let lambda: Vec<f64> = order.iter().map(|&k| vals[k] / total).collect();
    let period = linalg::eigenvalues(&transfer(&t))?
        .iter()
        .filter(|z| z.norm() >= 1.0 - PERIPHERAL_TOL)
        .count()
        .max(1);
    Ok(Some(CanonicalBlock {
        weight: c64(weight, 0.0),
        tensor: t,
        lambda,
        period,
    }))
}

fn lex_key(t: &MpsTensor<C64>) -> Vec<f64> {
    t.matrices()
        .iter()
        .flat_map(|m| m.data().iter().flat_map(|z| [z.re, z.im]))
        .collect()
}

fn block_order(a: &CanonicalBlock, b: &CanonicalBlock) -> std::cmp::Ordering {
    b.weight
        .norm()
        .total_cmp(&a.weight.norm())
        .then(a.bond().cmp(&b.bond()))
        .then_with(|| {
            let (ka, kb) = (lex_key(&a.tensor), lex_key(&b.tensor));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Canonical form `A_i ≅ ⊕_j λ_j A^j_i`, generating the same state at every length.
pub fn canonicalize(t: &MpsTensor<C64>, tol: f64) -> Result<CanonicalForm> {
    if t.matrices().iter().all(Matrix::is_zero_matrix) {
        return Err(Error::DegenerateInput("tensor is identically zero".into()));
    }
    let mut raw = Vec::new();
    irreducible_blocks(t.matrices().to_vec(), &mut raw)?;
    let mut blocks = Vec::new();
    for ms in raw {
        if let Some(b) = normalise_block(ms)? {
            blocks.push(b);
        }
    }
    if blocks.is_empty() {
        return Err(Error::DegenerateInput("every block is nilpotent; the state vanishes for all lengths".into()));
    }
    blocks.sort_by(block_order);
    // merge blocks equal up to a unitary, with the same weight
    let mut merged: Vec<CanonicalBlock> = Vec::new();
    let mut multiplicities: Vec<usize> = Vec::new();
    for b in blocks {
        let found = merged.iter().position(|m| {
            m.bond() == b.bond()
                && (m.weight - b.weight).norm() <= 1e-9 * m.weight.norm()
                && unitary_equivalence(&m.tensor, &b.tensor, true, GAUGE_TOL).ok().flatten().is_some()
        });
        match found {
            Some(k) => multiplicities[k] += 1,
            None => {
                merged.push(b);
                multiplicities.push(1);
            }
        }
    }
    let form = CanonicalForm {
        positive_weights: merged.iter().all(|b| b.weight.im == 0.0 && b.weight.re > 0.0),
        blocks: merged,
        multiplicities,
    };
    let res = form.residuals();
    if res.fixed_point > tol || res.dual_fixed_point > tol || res.trace > tol || res.min_lambda <= 0.0 {
        return Err(Error::Numeric(format!(
            "canonical conditions not met: E(1) residual {:.3e}, E*(Λ) residual {:.3e}, trace error {:.3e}, min Λ {:.3e}",
            res.fixed_point, res.dual_fixed_point, res.trace, res.min_lambda
        )));
    }
    Ok(form)
}

/// Tensor on `d^k` letters whose letter `w` (index order of words) is `A_{w_1} ... A_{w_k}`.
pub fn block_sites<T: Scalar>(t: &MpsTensor<T>, k: usize, cap: DenseCap) -> Result<MpsTensor<T>> {
    if k == 0 {
        return Err(Error::Input("grouping factor must be at least 1".into()));
    }
    let count = cap.check(t.d(), k)?;
    let ms = (0..count)
        .map(|idx| t.word_product(&crate::tensor::word_from_index(idx, t.d(), k)))
        .collect::<Result<Vec<_>>>()?;
    MpsTensor::new(ms)
}

/// Smallest `L ≤ l_max` at which products of length `L` span `M_D`.
pub fn injectivity_length(t: &MpsTensor<C64>, l_max: usize) -> Option<usize> {
    let n = t.bond();
    let full = n * n;
    let mut span = Span::new(full, SPAN_TOL);
    for a in t.matrices() {
        span.try_add(&vectorise(a));
    }
    for length in 1..=l_max {
        if span.len() == full {
            return Some(length);
        }
        if length == l_max || span.is_empty() {
            return None;
        }
        let mut next = Span::new(full, SPAN_TOL);
        for b in span.basis() {
            let bm = reshape(b, n, n);
            for a in t.matrices() {
                next.try_add(&vectorise(&bm.matmul(a)));
            }
        }
        // an unchanged space stays unchanged forever
        if next.len() == span.len() && next.basis().iter().all(|v| span.contains(v)) {
            return None;
        }
        span = next;
    }
    None
}

/// Unitary `U` and phase `φ ∈ [0, 2π)` with `A_i = e^{iφ} U C_i U†`.
#[derive(Debug, Clone)]
pub struct GaugeWitness {
    pub u: Matrix<C64>,
    pub phase: f64,
    pub residual: f64,
}

fn unitary_equivalence(a: &MpsTensor<C64>, c: &MpsTensor<C64>, phase_zero: bool, tol: f64) -> Result<Option<GaugeWitness>> {
    if a.bond() != c.bond() || a.d() != c.d() {
        return Ok(None);
    }
    let n = a.bond();
    let m = action_matrix(a, c);
    let mut candidates: Vec<C64> = linalg::eigenvalues(&m)?
        .into_iter()
        .filter(|z| z.norm() >= 1.0 - PERIPHERAL_TOL && z.norm() <= 1.0 + PERIPHERAL_TOL)
        .filter(|z| !phase_zero || (z - c64(1.0, 0.0)).norm() <= PERIPHERAL_TOL)
        .collect();
    candidates.sort_by(|x, y| wrap_phase(x.arg()).total_cmp(&wrap_phase(y.arg())));
    let scale = a.matrices().iter().map(Matrix::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for mu in candidates {
        let shifted = Matrix::from_fn(n * n, n * n, |i, j| m[(i, j)] - if i == j { mu } else { c64(0.0, 0.0) });
        let x = reshape(&linalg::smallest_singular_vector(&shifted).0, n, n);
        let u = linalg::polar_unitary(&x);
        let ud = u.adjoint();
        let rotated: Vec<Matrix<C64>> = c.matrices().iter().map(|ci| u.matmul(ci).matmul(&ud)).collect();
        // best phase: projection of A onto U C U†
        let mut num = c64(0.0, 0.0);
        for (ai, ri) in a.matrices().iter().zip(&rotated) {
            num += linalg::dot(ri.data(), ai.data());
        }
        let phase = if phase_zero || num.norm() == 0.0 { 0.0 } else { wrap_phase(num.arg()) };
        let e = Complex::from_polar(1.0, phase);
        let residual = a
            .matrices()
            .iter()
            .zip(&rotated)
            .map(|(ai, ri)| ai.max_abs_diff(&ri.scale(&e)))
            .fold(0.0, f64::max)
            / scale;
        if residual <= tol {
            return Ok(Some(GaugeWitness { u, phase, residual }));
        }
    }
    Ok(None)
}

fn wrap_phase(p: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = p.rem_euclid(tau);
    if w >= tau - 1e-12 {
        0.0
    } else {
        w
    }
}

/// Minimal injectivity length bound `D^4 - 1`.
pub fn wielandt_bound(bond: usize) -> usize {
    (bond.pow(4)).saturating_sub(1).max(1)
}

/// Gauge equivalence of injective canonical blocks; `None` when no unitary
/// and phase relate them within `tol`.
pub fn gauge_equivalent(a: &MpsTensor<C64>, c: &MpsTensor<C64>, tol: f64) -> Result<Option<GaugeWitness>> {
    if a.d() != c.d() {
        return Err(Error::DimensionMismatch {
            what: "physical dimension",
            expected: a.d(),
            found: c.d(),
        });
    }
    for (name, t) in [("first", a), ("second", c)] {
        if injectivity_length(t, wielandt_bound(t.bond())).is_none() {
            return Err(Error::Precondition(format!("{name} tensor is not injective")));
        }
    }
    unitary_equivalence(a, c, false, tol)
}

/// Full-rank test of the normalised Gram matrix of `|ψ_{A^j}^L⟩`.
pub fn blocks_linearly_independent(blocks: &[MpsTensor<C64>], length: usize) -> Result<bool> {
    let b = blocks.len();
    if b == 0 {
        return Ok(true);
    }
    let mut raw = vec![vec![None; b]; b];
    for j in 0..b {
        for k in j..b {
            raw[j][k] = Some(overlap_scaled(&blocks[j], &blocks[k], length)?);
        }
    }
    let diag: Vec<(f64, f64)> = (0..b)
        .map(|j| {
            let s = raw[j][j].as_ref().expect("filled");
            (s.value.re, s.log_scale)
        })
        .collect();
    if diag.iter().any(|&(v, _)| v <= 0.0) {
        return Ok(false);
    }
    let gram = Matrix::from_fn(b, b, |j, k| {
        let (lo, hi) = (j.min(k), j.max(k));
        let s = raw[lo][hi].as_ref().expect("filled");
        let (vj, lj) = diag[lo];
        let (vk, lk) = diag[hi];
        let g = s.value / (vj * vk).sqrt() * (s.log_scale - 0.5 * (lj + lk)).exp();
        if j <= k {
            g
        } else {
            g.conj()
        }
    });
    Ok(linalg::min_eig_hermitian(&gram, 1e-8)? > GRAM_TOL)
}

/// Length bounds of the finite proportionality criterion for bond dimensions `D, D'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthBound {
    /// `D! D'! 3 (D + D')^6`: lengths that must be checked.
    pub hypothesis: BigUint,
    /// `D! D'! 3 (D + D')^5`: proportionality then holds at its multiples.
    pub period: BigUint,
}

pub fn theoretical_length_bound(d_a: usize, d_c: usize) -> LengthBound {
    let f = factorial(d_a) * factorial(d_c) * BigUint::from(3u32);
    let s = BigUint::from(d_a + d_c);
    LengthBound {
        hypothesis: &f * s.pow(6),
        period: f * s.pow(5),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProportionalityVerdict<T> {
    /// Every length up to the hypothesis bound passed, so the states are
    /// proportional at all multiples of `step`. `constants[L-1] = m_L`.
    ProportionalForAll { step: BigUint, constants: Vec<T> },
    FailsAt { length: usize },
    /// All checked lengths passed but the bound was not reached.
    Inconclusive { checked: usize, fraction: f64 },
}

/// Checks `|ψ_a^L⟩ = m_L |ψ_c^L⟩` for `L = 1..min(l_cap, D!D'!3(D+D')^6)`.
pub fn proportional_all_lengths<T: Scalar>(
    a: &MpsTensor<T>,
    c: &MpsTensor<T>,
    l_cap: usize,
    tol: f64,
) -> Result<ProportionalityVerdict<T>> {
    if a.d() != c.d() {
        return Err(Error::DimensionMismatch {
            what: "physical dimension",
            expected: a.d(),
            found: c.d(),
        });
    }
    let bound = theoretical_length_bound(a.bond(), c.bond());
    let n = match bound.hypothesis.to_usize() {
        Some(h) => h.min(l_cap),
        None => l_cap,
    };
    let aa = overlap_series(a, a, n)?;
    let cc = overlap_series(c, c, n)?;
    let ac = overlap_series(a, c, n)?;
    let mut constants = Vec::with_capacity(n);
    for l in 0..n {
        let (a_zero, c_zero) = (aa[l].value.is_zero(), cc[l].value.is_zero());
        let m = match (a_zero, c_zero) {
            (true, _) => T::zero(),
            (false, true) => return Ok(ProportionalityVerdict::FailsAt { length: l + 1 }),
            (false, false) => {
                let p = proportionality_from_overlaps(&aa[l], &cc[l], &ac[l], tol)?;
                match p.constant {
                    Some(m) if p.proportional => m,
                    _ => return Ok(ProportionalityVerdict::FailsAt { length: l + 1 }),
                }
            }
        };
        constants.push(m);
    }
    if BigUint::from(n) >= bound.hypothesis {
        Ok(ProportionalityVerdict::ProportionalForAll {
            step: bound.period,
            constants,
        })
    } else {
        let h = bound.hypothesis.to_f64().unwrap_or(f64::INFINITY);
        Ok(ProportionalityVerdict::Inconclusive {
            checked: n,
            fraction: n as f64 / h,
        })
    }
}

/// Blocks grouped by `e^{iφ} U · U†` equivalence with the phases moved into
/// complex weights. Blocks that are not injective stay in their own class.
#[derive(Debug, Clone)]
pub struct PhaseClass {
    pub tensor: MpsTensor<C64>,
    pub weights: Vec<C64>,
}

pub fn absorb_phases(form: &CanonicalForm, tol: f64) -> Result<Vec<PhaseClass>> {
    let mut classes: Vec<(PhaseClass, bool)> = Vec::new();
    for (b, &m) in form.blocks.iter().zip(&form.multiplicities) {
        let injective = injectivity_length(&b.tensor, wielandt_bound(b.bond())).is_some();
        let mut placed = false;
        if injective {
            for (class, class_injective) in classes.iter_mut() {
                if !*class_injective || class.tensor.bond() != b.bond() {
                    continue;
                }
                // b = e^{iφ} U class U†, so λ_b b ≅ λ_b e^{iφ} class
                if let Some(w) = unitary_equivalence(&b.tensor, &class.tensor, false, tol)? {
                    let weight = b.weight * Complex::from_polar(1.0, w.phase);
                    class.weights.extend(std::iter::repeat_n(weight, m));
                    placed = true;
                    break;
                }
            }
        }
        if !placed {
            classes.push((
                PhaseClass {
                    tensor: b.tensor.clone(),
                    weights: vec![b.weight; m],
                },
                injective,
            ));
        }
    }
    Ok(classes.into_iter().map(|(c, _)| c).collect())
}
