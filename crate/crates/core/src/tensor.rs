//! Translationally invariant tensors and their contractions.
//!
//! Words are 0-indexed letter sequences. A word `w` over `d` letters maps to
//! the component index `Σ w_k d^(L-1-k)`, first letter most significant.
//! States are kept unnormalised; normalisation happens only in comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Exact, Scalar, C64};

/// Upper bound on the number of components a dense `d^L` construction may
/// materialise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseCap(pub usize);

impl DenseCap {
    pub const DEFAULT: DenseCap = DenseCap(1 << 24);
    pub const ENV_VAR: &'static str = "TNPUR_CAP";

    /// Reads `TNPUR_CAP`, falling back to the default when unset or invalid.
    pub fn from_env() -> Self {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(DenseCap)
            .unwrap_or_default()
    }

    /// `Ok(base^exp)` when it fits under the cap.
    pub fn check(&self, base: usize, exp: usize) -> Result<usize> {
        let mut total: u128 = 1;
        for _ in 0..exp {
            total = total.saturating_mul(base as u128);
            if total > self.0 as u128 {
                return Err(Error::CapExceeded {
                    required: total,
                    cap: self.0,
                });
            }
        }
        Ok(total as usize)
    }
}

impl Default for DenseCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A family of `d` square matrices of bond dimension `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsTensor<T> {
    bond: usize,
    matrices: Vec<Matrix<T>>,
}

impl<T: Scalar> MpsTensor<T> {
    pub fn new(matrices: Vec<Matrix<T>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Input("a tensor needs at least one letter".into()))?;
        let bond = first.rows();
        if bond == 0 {
            return Err(Error::Input("bond dimension must be at least 1".into()));
        }
        for m in &matrices {
            if m.rows() != bond || m.cols() != bond {
                return Err(Error::DimensionMismatch {
                    what: "tensor matrix shape",
                    expected: bond,
                    found: if m.rows() != bond { m.rows() } else { m.cols() },
                });
            }
        }
        Ok(MpsTensor { bond, matrices })
    }

    /// Tensor with `D = 1` whose letters are the given scalars.
    pub fn from_scalars(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|v| Matrix::from_vec(1, 1, vec![v.clone()])).collect())
    }

    pub fn d(&self) -> usize {
        self.matrices.len()
    }

    pub fn bond(&self) -> usize {
        self.bond
    }

    pub fn matrix(&self, letter: usize) -> &Matrix<T> {
        &self.matrices[letter]
    }

    pub fn matrices(&self) -> &[Matrix<T>] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<Matrix<T>> {
        self.matrices
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MpsTensor<U> {
        MpsTensor {
            bond: self.bond,
            matrices: self.matrices.iter().map(|m| m.map_into(&f)).collect(),
        }
    }

    pub fn to_float(&self) -> MpsTensor<C64> {
        self.map(Scalar::to_c64)
    }

    pub fn to_exact(&self) -> MpsTensor<Exact> {
        self.map(|x| Exact::from_c64(x.to_c64()))
    }

    /// Multiplies every matrix by `s`.
    pub fn scaled(&self, s: &T) -> MpsTensor<T> {
        self.map(|x| x.mul_ref(s))
    }

    /// `U A_i U^{-1}` for each letter with the supplied inverse.
    pub fn conjugated(&self, u: &Matrix<T>, u_inv: &Matrix<T>) -> MpsTensor<T> {
        MpsTensor {
            bond: u.rows(),
            matrices: self.matrices.iter().map(|m| u.matmul(m).matmul(u_inv)).collect(),
        }
    }

    pub fn check_word(&self, w: &[usize]) -> Result<()> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        if let Some(&letter) = w.iter().find(|&&l| l >= self.d()) {
            return Err(Error::InvalidLetter { letter, d: self.d() });
        }
        Ok(())
    }

    /// `A_{w_1} ... A_{w_L}`.
    pub fn word_product(&self, w: &[usize]) -> Result<Matrix<T>> {
        self.check_word(w)?;
        let mut acc = self.matrices[w[0]].clone();
        for &l in &w[1..] {
            acc = acc.matmul(&self.matrices[l]);
        }
        Ok(acc)
    }

    /// Block-diagonal direct sum of two tensors over the same alphabet.
    pub fn direct_sum(&self, other: &MpsTensor<T>) -> Result<MpsTensor<T>> {
        same_d(self.d(), other.d())?;
        MpsTensor::new(
            self.matrices
                .iter()
                .zip(&other.matrices)
                .map(|(a, b)| a.direct_sum(b))
                .collect(),
        )
    }
}

fn same_d(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            what: "physical dimension",
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Purification-form tensor: `d * d_env` matrices `B_{i,e}` stored at `i * d_env + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationTensor<T> {
    d: usize,
    d_env: usize,
    bond: usize,
    matrices: Vec<Matrix<T>>,
}

impl<T: Scalar> PurificationTensor<T> {
    pub fn new(d: usize, d_env: usize, matrices: Vec<Matrix<T>>) -> Result<Self> {
        if d == 0 || d_env == 0 {
            return Err(Error::Input("d and d_env must be at least 1".into()));
        }
        if matrices.len() != d * d_env {
            return Err(Error::DimensionMismatch {
                what: "purification matrix count (d * d_env)",
                expected: d * d_env,
                found: matrices.len(),
            });
        }
        let joint = MpsTensor::new(matrices)?;
        Ok(PurificationTensor {
            d,
            d_env,
            bond: joint.bond(),
            matrices: joint.into_matrices(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn bond(&self) -> usize {
        self.bond
    }

    pub fn matrix(&self, letter: usize, env: usize) -> &Matrix<T> {
        &self.matrices[letter * self.d_env + env]
    }

    pub fn matrices(&self) -> &[Matrix<T>] {
        &self.matrices
    }

    /// The pure state on `(physical, environment)` pairs as an MPS over
    /// `d * d_env` joint letters.
    pub fn joint_tensor(&self) -> MpsTensor<T> {
        MpsTensor {
            bond: self.bond,
            matrices: self.matrices.clone(),
        }
    }

    pub fn to_float(&self) -> PurificationTensor<C64> {
        PurificationTensor {
            d: self.d,
            d_env: self.d_env,
            bond: self.bond,
            matrices: self.matrices.iter().map(Matrix::to_c64).collect(),
        }
    }
}

/// Components of `|ψ^L⟩` indexed by words.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    pub length: usize,
    pub d: usize,
    pub components: Vec<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn component(&self, w: &[usize]) -> &T {
        &self.components[word_index(w, self.d)]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector<T>) -> T {
        let mut acc = T::zero();
        for (a, b) in self.components.iter().zip(&other.components) {
            acc.add_assign_ref(&a.conj().mul_ref(b));
        }
        acc
    }
}

/// Diagonal of a classical MPDO `ρ^L`; off-diagonal entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMpdo<T> {
    pub length: usize,
    pub d: usize,
    pub diagonal: Vec<T>,
}

pub fn word_index(w: &[usize], d: usize) -> usize {
    w.iter().fold(0, |acc, &l| acc * d + l)
}

pub fn word_from_index(mut idx: usize, d: usize, length: usize) -> Vec<usize> {
    let mut w = vec![0; length];
    for slot in w.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
    w
}

/// `tr(A_{w_1} ... A_{w_L})`.
pub fn word_trace<T: Scalar>(t: &MpsTensor<T>, w: &[usize]) -> Result<T> {
    Ok(t.word_product(w)?.trace())
}

/// Calls `visit(index, trace)` for every word of the given length, in index
/// order, sharing prefix products between neighbouring words.
pub(crate) fn for_each_word_trace<T: Scalar>(t: &MpsTensor<T>, length: usize, mut visit: impl FnMut(usize, T)) {
    let d = t.d();
    let mut word = vec![0usize; length];
    // prefix[k] = A_{w_0} ... A_{w_k}
    let mut prefix: Vec<Matrix<T>> = Vec::with_capacity(length);
    let mut start = 0;
    let mut index = 0;
    loop {
        prefix.truncate(start);
        for k in start..length {
            let m = if k == 0 {
                t.matrix(word[0]).clone()
            } else {
                prefix[k - 1].matmul(t.matrix(word[k]))
            };
            prefix.push(m);
        }
        visit(index, prefix[length - 1].trace());
        index += 1;
        // Advance the odometer; the first changed position sets the reuse point.
        let mut pos = length;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < d {
                break;
            }
            word[pos] = 0;
        }
        start = pos;
    }
}

/// `|ψ^L⟩` with components `tr(A_w)` for all `d^L` words.
pub fn build_state_vector<T: Scalar>(t: &MpsTensor<T>, length: usize, cap: DenseCap) -> Result<StateVector<T>> {
    if length == 0 {
        return Err(Error::EmptyWord);
    }
    let total = cap.check(t.d(), length)?;
    let mut components = Vec::with_capacity(total);
    for_each_word_trace(t, length, |_, tr| components.push(tr));
    Ok(StateVector {
        length,
        d: t.d(),
        components,
    })
}

pub fn build_classical_mpdo<T: Scalar>(t: &MpsTensor<T>, length: usize, cap: DenseCap) -> Result<ClassicalMpdo<T>> {
    let sv = build_state_vector(t, length, cap)?;
    Ok(ClassicalMpdo {
        length,
        d: sv.d,
        diagonal: sv.components,
    })
}

/// `C_i = Σ_e B_{i,e} ⊗ conj(B_{i,e})`, bond `D̃²`.
pub fn c_from_b<T: Scalar>(p: &PurificationTensor<T>) -> MpsTensor<T> {
    let db = p.bond() * p.bond();
    let matrices = (0..p.d())
        .map(|i| {
            let mut acc = Matrix::zeros(db, db);
            for e in 0..p.d_env() {
                let b = p.matrix(i, e);
                acc.add_assign(&b.kron(&b.conj()));
            }
            acc
        })
        .collect();
    MpsTensor { bond: db, matrices }
}

/// Diagonal of `σ_B^L = tr_env |Ψ⟩⟨Ψ|`, summing `|Ψ(i, e)|²` over environment words.
pub fn sigma_diagonal<T: Scalar>(p: &PurificationTensor<T>, length: usize, cap: DenseCap) -> Result<Vec<T>> {
    if length == 0 {
        return Err(Error::EmptyWord);
    }
    cap.check(p.d() * p.d_env(), length)?;
    let (d, de) = (p.d(), p.d_env());
    let mut diag = vec![T::zero(); cap.check(d, length)?];
    let joint = p.joint_tensor();
    for_each_word_trace(&joint, length, |joint_idx, amp| {
        let w = word_from_index(joint_idx, d * de, length);
        let phys = w.iter().fold(0, |acc, &l| acc * d + l / de);
        diag[phys].add_assign_ref(&amp.abs_sqr());
    });
    Ok(diag)
}

/// Mixed transfer matrix `Σ_i conj(A_i) ⊗ C_i`.
pub fn mixed_transfer<T: Scalar>(a: &MpsTensor<T>, c: &MpsTensor<T>) -> Result<Matrix<T>> {
    same_d(a.d(), c.d())?;
    let n = a.bond() * c.bond();
    let mut acc = Matrix::zeros(n, n);
    for (ai, ci) in a.matrices().iter().zip(c.matrices()) {
        acc.add_assign(&ai.conj().kron(ci));
    }
    Ok(acc)
}

/// `⟨ψ_a^L|ψ_c^L⟩` as the trace of the `L`-th power of the mixed transfer matrix.
pub fn overlap<T: Scalar>(a: &MpsTensor<T>, c: &MpsTensor<T>, length: usize) -> Result<T> {
    if length == 0 {
        return Err(Error::EmptyWord);
    }
    Ok(mixed_transfer(a, c)?.pow(length).trace())
}

/// A value `v` representing `v * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled<T> {
    pub value: T,
    pub log_scale: f64,
}

/// Overlap at a single length with magnitudes kept in range (float mode).
pub fn overlap_scaled<T: Scalar>(a: &MpsTensor<T>, c: &MpsTensor<T>, length: usize) -> Result<Scaled<T>> {
    if length == 0 {
        return Err(Error::EmptyWord);
    }
    let mut base = mixed_transfer(a, c)?;
    let mut base_log = T::rescale(base.data_mut());
    let mut acc = Matrix::identity(base.rows());
    let mut acc_log = 0.0;
    let mut e = length;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.matmul(&base);
            acc_log += base_log + T::rescale(acc.data_mut());
        }
        e >>= 1;
        if e > 0 {
            base = base.matmul(&base);
            base_log = 2.0 * base_log + T::rescale(base.data_mut());
        }
    }
    Ok(Scaled {
        value: acc.trace(),
        log_scale: acc_log,
    })
}

/// Overlaps for every length `1..=l_max`, computed by repeated multiplication.
pub fn overlap_series<T: Scalar>(a: &MpsTensor<T>, c: &MpsTensor<T>, l_max: usize) -> Result<Vec<Scaled<T>>> {
    let t = mixed_transfer(a, c)?;
    let mut power = t.clone();
    let mut log = T::rescale(power.data_mut());
    let mut t_scaled = t;
    let t_log = T::rescale(t_scaled.data_mut());
    let mut out = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        if l > 1 {
            power = power.matmul(&t_scaled);
            log += t_log + T::rescale(power.data_mut());
        }
        out.push(Scaled {
            value: power.trace(),
            log_scale: log,
        });
    }
    Ok(out)
}

/// Outcome of a Cauchy-Schwarz proportionality test at one length.
#[derive(Debug, Clone, PartialEq)]
pub struct Proportionality<T> {
    pub proportional: bool,
    /// `m_L` with `|ψ_a⟩ = m_L |ψ_c⟩`, when proportional.
    pub constant: Option<T>,
    /// `1 - |⟨a|c⟩|² / (⟨a|a⟩⟨c|c⟩)` in float.
    pub infidelity: f64,
}

/// Decides proportionality from the three overlaps `⟨a|a⟩`, `⟨c|c⟩`, `⟨a|c⟩`.
pub fn proportionality_from_overlaps<T: Scalar>(
    aa: &Scaled<T>,
    cc: &Scaled<T>,
    ac: &Scaled<T>,
    tol: f64,
) -> Result<Proportionality<T>> {
    if cc.value.is_zero() {
        return Err(Error::DegenerateInput("the comparison state has zero norm".into()));
    }
    let log_w = 2.0 * ac.log_scale - aa.log_scale - cc.log_scale;
    let mut lhs = ac.value.abs_sqr();
    if log_w != 0.0 {
        lhs = lhs.mul_ref(&T::from_c64(C64::new(log_w.exp(), 0.0)));
    }
    let rhs = aa.value.mul_ref(&cc.value);
    let proportional = lhs.approx_eq(&rhs, tol);
    let infidelity = if aa.value.is_zero() {
        0.0
    } else {
        1.0 - (lhs.to_c64().re / rhs.to_c64().re)
    };
    let constant = proportional.then(|| {
        let mut m = ac.value.conj() / cc.value.clone();
        let log_m = ac.log_scale - cc.log_scale;
        if log_m != 0.0 {
            m = m.mul_ref(&T::from_c64(C64::new(log_m.exp(), 0.0)));
        }
        m
    });
    Ok(Proportionality {
        proportional,
        constant,
        infidelity,
    })
}

/// Whether `|ψ_a^L⟩ = m_L |ψ_c^L⟩` for some `m_L` (Cauchy-Schwarz equality
/// within relative `tol`; exact in exact mode).
pub fn proportional_at<T: Scalar>(
    a: &MpsTensor<T>,
    c: &MpsTensor<T>,
    length: usize,
    tol: f64,
) -> Result<Proportionality<T>> {
    same_d(a.d(), c.d())?;
    let cc = overlap_scaled(c, c, length)?;
    let aa = overlap_scaled(a, a, length)?;
    let ac = overlap_scaled(a, c, length)?;
    proportionality_from_overlaps(&aa, &cc, &ac, tol)
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn flip_operator(d: usize) -> Matrix<Exact> {
    let n = d * d;
    let mut f = Matrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = Exact::from_i64(1);
        }
    }
    f
}

/// Projector `(1 + F) / 2` onto the symmetric subspace.
pub fn sym_projector(d: usize) -> Matrix<Exact> {
    let half = crate::scalar::exact_real(1, 2);
    flip_operator(d).add(&Matrix::identity(d * d)).scale(&half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c64, exact_real};

    fn ex(v: i64) -> Exact {
        Exact::from_i64(v)
    }

    fn ghz() -> MpsTensor<Exact> {
        MpsTensor::new(vec![
            Matrix::diagonal(&[ex(1), ex(0)]),
            Matrix::diagonal(&[ex(0), ex(1)]),
        ])
        .unwrap()
    }

    #[test]
    fn scalar_power_trace() {
        let t = MpsTensor::from_scalars(&[ex(2)]).unwrap();
        assert_eq!(word_trace(&t, &[0, 0, 0]).unwrap(), ex(8));
    }

    #[test]
    fn nilpotent_square_trace() {
        let t = MpsTensor::new(vec![Matrix::from_rows(vec![vec![ex(0), ex(1)], vec![ex(0), ex(0)]])]).unwrap();
        assert_eq!(word_trace(&t, &[0, 0]).unwrap(), ex(0));
    }

    #[test]
    fn word_errors() {
        let t = ghz();
        assert_eq!(word_trace(&t, &[]), Err(Error::EmptyWord));
        assert_eq!(word_trace(&t, &[0, 2]), Err(Error::InvalidLetter { letter: 2, d: 2 }));
    }

    #[test]
    fn constant_state_vector() {
        let t = MpsTensor::from_scalars(&[ex(1), ex(1)]).unwrap();
        let sv = build_state_vector(&t, 2, DenseCap::DEFAULT).unwrap();
        assert_eq!(sv.components, vec![ex(1); 4]);
    }

    #[test]
    fn ghz_state_vector() {
        let sv = build_state_vector(&ghz(), 3, DenseCap::DEFAULT).unwrap();
        for (i, c) in sv.components.iter().enumerate() {
            let expected = if i == 0 || i == 7 { ex(1) } else { ex(0) };
            assert_eq!(c, &expected);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_state_vector(&ghz(), 10, DenseCap(1000)).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { required: 1024, cap: 1000 }));
    }

    #[test]
    fn classical_mpdo_examples() {
        let half = exact_real(1, 2);
        let t = MpsTensor::from_scalars(&[half.clone(), half.clone()]).unwrap();
        let rho = build_classical_mpdo(&t, 1, DenseCap::DEFAULT).unwrap();
        assert_eq!(rho.diagonal, vec![half.clone(), half]);
        let rho = build_classical_mpdo(&ghz(), 2, DenseCap::DEFAULT).unwrap();
        assert_eq!(rho.diagonal, vec![ex(1), ex(0), ex(0), ex(1)]);
    }

    #[test]
    fn c_from_b_scalar_cases() {
        let b = PurificationTensor::new(
            2,
            1,
            vec![Matrix::from_vec(1, 1, vec![c64(1.0, 2.0)]), Matrix::from_vec(1, 1, vec![c64(0.0, -3.0)])],
        )
        .unwrap();
        let c = c_from_b(&b);
        assert_eq!(c.matrix(0)[(0, 0)], c64(5.0, 0.0));
        assert_eq!(c.matrix(1)[(0, 0)], c64(9.0, 0.0));

        let one = Matrix::from_vec(1, 1, vec![ex(1)]);
        let b = PurificationTensor::new(2, 2, vec![one.clone(); 4]).unwrap();
        let c = c_from_b(&b);
        assert_eq!(c.matrix(0)[(0, 0)], ex(2));
        assert_eq!(c.matrix(1)[(0, 0)], ex(2));
    }

    #[test]
    fn sigma_diagonal_examples() {
        let one = Matrix::from_vec(1, 1, vec![ex(1)]);
        let zero = Matrix::from_vec(1, 1, vec![ex(0)]);
        let b = PurificationTensor::new(2, 1, vec![one.clone(), one.clone()]).unwrap();
        assert_eq!(sigma_diagonal(&b, 2, DenseCap::DEFAULT).unwrap(), vec![ex(1); 4]);
        let b = PurificationTensor::new(2, 1, vec![one, zero]).unwrap();
        assert_eq!(
            sigma_diagonal(&b, 2, DenseCap::DEFAULT).unwrap(),
            vec![ex(1), ex(0), ex(0), ex(0)]
        );
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap(&ghz(), &ghz(), 3).unwrap(), ex(2));
        let a = MpsTensor::from_scalars(&[ex(1), ex(1)]).unwrap();
        let c = MpsTensor::from_scalars(&[ex(1), ex(-1)]).unwrap();
        assert_eq!(overlap(&a, &c, 2).unwrap(), ex(0));
        assert!(overlap(&a, &ghz().direct_sum(&ghz()).unwrap(), 0).is_err());
    }

    #[test]
    fn proportional_scaling_constant() {
        // |ψ_a⟩ = m |ψ_c⟩ with a = 2c per matrix gives m = 2^L.
        let c = ghz();
        let a = c.scaled(&ex(2));
        let p = proportional_at(&a, &c, 3, 0.0).unwrap();
        assert!(p.proportional);
        assert_eq!(p.constant, Some(ex(8)));
        // and the reverse direction gives 2^-L
        let p = proportional_at(&c, &a, 3, 0.0).unwrap();
        assert_eq!(p.constant, Some(exact_real(1, 8)));
    }

    #[test]
    fn ghz_not_proportional_to_skewed() {
        let skew = MpsTensor::new(vec![
            Matrix::diagonal(&[ex(1), ex(0)]),
            Matrix::diagonal(&[ex(0), ex(2)]),
        ])
        .unwrap();
        let p = proportional_at(&ghz(), &skew, 2, 0.0).unwrap();
        assert!(!p.proportional);
        assert_eq!(p.constant, None);
    }

    #[test]
    fn zero_tensor_is_proportional_with_zero_constant() {
        let zero = MpsTensor::new(vec![Matrix::<Exact>::zeros(2, 2); 2]).unwrap();
        let p = proportional_at(&zero, &ghz(), 4, 0.0).unwrap();
        assert!(p.proportional);
        assert_eq!(p.constant, Some(ex(0)));
        assert!(matches!(proportional_at(&ghz(), &zero, 4, 0.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn float_overlap_survives_large_lengths() {
        let c = MpsTensor::from_scalars(&[c64(3.0, 0.0), c64(6.0, 0.0)]).unwrap();
        let a = MpsTensor::from_scalars(&[c64(1.0, 0.0), c64(2.0, 0.0)]).unwrap();
        let p = proportional_at(&a, &c, 400, 1e-9).unwrap();
        assert!(p.proportional);
        let m = p.constant.unwrap();
        // m = 3^-400
        assert!(((m.re.ln() + 400.0 * 3f64.ln()) / (400.0 * 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn flip_and_projector() {
        let f = flip_operator(3);
        assert_eq!(f.matmul(&f), Matrix::identity(9));
        assert_eq!(f.trace(), ex(3));
        let p = sym_projector(3);
        assert_eq!(p.trace(), ex(6));
        assert_eq!(p.matmul(&p), p);
    }

    #[test]
    fn series_matches_direct_overlap() {
        let a = MpsTensor::new(vec![
            Matrix::from_rows(vec![vec![ex(1), ex(2)], vec![ex(0), ex(-1)]]),
            Matrix::from_rows(vec![vec![ex(0), ex(1)], vec![ex(3), ex(1)]]),
        ])
        .unwrap();
        let series = overlap_series(&a, &ghz(), 6).unwrap();
        for (l, s) in series.iter().enumerate() {
            assert_eq!(s.value, overlap(&a, &ghz(), l + 1).unwrap());
            assert_eq!(s.log_scale, 0.0);
        }
    }
}
