//! Power sums, Newton identities and multiset recovery.

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::scalar::{c64, Scalar, ScalarMode, C64};

/// `(s_1, ..., s_n)` with `s_k = Σ x_i^k`.
pub fn power_sums<T: Scalar>(xs: &[T], n: usize) -> Vec<T> {
    let mut powers: Vec<T> = xs.to_vec();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            for (p, x) in powers.iter_mut().zip(xs) {
                *p = p.mul_ref(x);
            }
        }
        let mut s = T::zero();
        for p in &powers {
            s.add_assign_ref(p);
        }
        out.push(s);
    }
    out
}

/// Elementary symmetric polynomials `(τ_1, ..., τ_n)` from power sums via
/// `k τ_k = Σ_{i=1}^k (-1)^{i-1} τ_{k-i} s_i`.
pub fn elementary_from_power<T: Scalar>(s: &[T]) -> Vec<T> {
    let mut tau = vec![T::one()];
    for k in 1..=s.len() {
        let mut acc = T::zero();
        for i in 1..=k {
            let term = tau[k - i].mul_ref(&s[i - 1]);
            if i % 2 == 1 {
                acc.add_assign_ref(&term);
            } else {
                acc = acc - term;
            }
        }
        tau.push(acc / T::from_i64(k as i64));
    }
    tau.remove(0);
    tau
}

/// Monic coefficients, highest degree first: `X^n - τ_1 X^{n-1} + τ_2 X^{n-2} - ...`.
pub fn vieta_coefficients<T: Scalar>(tau: &[T]) -> Vec<T> {
    let mut out = vec![T::one()];
    for (k, t) in tau.iter().enumerate() {
        out.push(if k % 2 == 0 { -t.clone() } else { t.clone() });
    }
    out
}

/// Characteristic polynomial of the multiset with power sums `s_1..s_n`.
/// This is the whole answer in exact mode; roots are generally irrational.
pub fn recovery_polynomial<T: Scalar>(s: &[T], n: usize) -> Result<Vec<T>> {
    if s.len() < n {
        return Err(Error::Precondition(format!(
            "need {n} power sums, got {}",
            s.len()
        )));
    }
    Ok(vieta_coefficients(&elementary_from_power(&s[..n])))
}

/// Roots of a monic polynomial (highest degree first) as companion-matrix
/// eigenvalues. Trailing zero coefficients are split off as zero roots.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let mut cs = coeffs.to_vec();
    let mut roots = Vec::new();
    while cs.len() > 1 && cs.last().is_some_and(|c| c.norm() <= 1e-14 * scale) {
        cs.pop();
        roots.push(c64(0.0, 0.0));
    }
    let n = cs.len() - 1;
    if n > 0 {
        let companion = Matrix::from_fn(n, n, |r, c| {
            if r == 0 {
                -cs[c + 1] / cs[0]
            } else if r == c + 1 {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        roots.extend(linalg::eigenvalues(&companion)?);
    }
    Ok(roots)
}

/// The `n` values (with multiplicity) whose first `n` power sums are `s`.
pub fn multiset_from_power_sums(s: &[C64], n: usize) -> Result<Vec<C64>> {
    let coeffs = recovery_polynomial(s, n)?;
    let roots = polynomial_roots(&coeffs)?;
    if roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::Numeric("root finding produced non-finite values".into()));
    }
    Ok(roots)
}

/// Whether two multisets agree up to a permutation, entry-wise within `tol`.
pub fn multisets_match(a: &[C64], b: &[C64], tol: f64) -> bool {
    fn go(a: &[C64], b: &[C64], used: &mut [bool], tol: f64) -> bool {
        let Some((x, rest)) = a.split_first() else {
            return true;
        };
        for j in 0..b.len() {
            if !used[j] && (x - b[j]).norm() <= tol {
                used[j] = true;
                if go(rest, b, used, tol) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    a.len() == b.len() && go(a, b, &mut vec![false; b.len()], tol)
}

/// Smallest `L` with `Σ α_i^L ≠ 0`; it is at most the number of values.
pub fn first_nonzero_power<T: Scalar>(alphas: &[T]) -> Result<usize> {
    if alphas.is_empty() {
        return Err(Error::Precondition("need at least one value".into()));
    }
    if alphas.iter().any(Scalar::is_zero) {
        return Err(Error::Precondition("all values must be nonzero".into()));
    }
    let max = alphas.iter().map(|a| a.to_c64().norm()).fold(0.0, f64::max);
    let sums = power_sums(alphas, alphas.len());
    for (k, s) in sums.iter().enumerate() {
        let length = k + 1;
        let nonzero = match T::MODE {
            ScalarMode::Exact => !s.is_zero(),
            ScalarMode::Float => s.to_c64().norm() > 1e-9 * max.powi(length as i32),
        };
        if nonzero {
            return Ok(length);
        }
    }
    Err(Error::Numeric(
        "all power sums up to the count vanish numerically; values are not all nonzero".into(),
    ))
}

/// Groups `(μ_α, ν_α)`, each pair zero-padded to a common length `r_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSumFamily<T> {
    mu: Vec<Vec<T>>,
    nu: Vec<Vec<T>>,
}

impl<T: Scalar> PowerSumFamily<T> {
    pub fn new(mu: Vec<Vec<T>>, nu: Vec<Vec<T>>) -> Result<Self> {
        if mu.len() != nu.len() {
            return Err(Error::DimensionMismatch {
                what: "number of groups",
                expected: mu.len(),
                found: nu.len(),
            });
        }
        let (mut mu, mut nu) = (mu, nu);
        for (m, n) in mu.iter_mut().zip(nu.iter_mut()) {
            let r = m.len().max(n.len());
            m.resize(r, T::zero());
            n.resize(r, T::zero());
        }
        let family = PowerSumFamily { mu, nu };
        if family.l0() == 0 {
            return Err(Error::Precondition("family has no entries".into()));
        }
        Ok(family)
    }

    pub fn groups(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self, alpha: usize) -> &[T] {
        &self.mu[alpha]
    }

    pub fn nu(&self, alpha: usize) -> &[T] {
        &self.nu[alpha]
    }

    /// `L_0 = Σ_α r_α`.
    pub fn l0(&self) -> usize {
        self.mu.iter().map(Vec::len).sum()
    }

    /// `(Σ_i μ_{α,i}^L, Σ_i ν_{α,i}^L)` for every group.
    pub fn sums_at(&self, length: usize) -> Vec<(T, T)> {
        let pow_sum = |xs: &[T]| {
            let mut acc = T::zero();
            for x in xs {
                let mut p = T::one();
                for _ in 0..length {
                    p = p.mul_ref(x);
                }
                acc.add_assign_ref(&p);
            }
            acc
        };
        self.mu
            .iter()
            .zip(&self.nu)
            .map(|(m, n)| (pow_sum(m), pow_sum(n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyVerdict<T> {
    /// Cross products agree for every `L` in the window. `constants[L-1]` is
    /// `m_L` with `Σμ^L = m_L Σν^L`, or `None` when every sum vanishes at `L`.
    Proportional { constants: Vec<Option<T>> },
    /// Cross products disagree at this length.
    NotProportional { length: usize },
    /// Cross products agree but one side vanishes identically while the other
    /// does not, so no nonzero `m_L` exists at this length.
    Indeterminate { length: usize },
}

impl<T> FamilyVerdict<T> {
    pub fn is_proportional(&self) -> bool {
        matches!(self, FamilyVerdict::Proportional { .. })
    }
}

/// Checks `Σμ_α^L Σν_β^L = Σν_α^L Σμ_β^L` for all pairs and `L ≤ window`.
/// `tol` is relative and ignored in exact mode.
pub fn proportional_powersum_families<T: Scalar>(
    f: &PowerSumFamily<T>,
    window: usize,
    tol: f64,
) -> Result<FamilyVerdict<T>> {
    let l0 = f.l0();
    if window < l0 * l0 {
        return Err(Error::Precondition(format!(
            "window {window} is below L0^2 = {}",
            l0 * l0
        )));
    }
    let mut constants = Vec::with_capacity(window);
    for length in 1..=window {
        let sums = f.sums_at(length);
        if !cross_products_agree(&sums, tol) {
            return Ok(FamilyVerdict::NotProportional { length });
        }
        let scale = sums
            .iter()
            .map(|(m, n)| m.to_c64().norm().max(n.to_c64().norm()))
            .fold(0.0, f64::max);
        let zero = |x: &T| x.is_negligible(tol, scale) || scale == 0.0;
        let mu_zero = sums.iter().all(|(m, _)| zero(m));
        let nu_zero = sums.iter().all(|(_, n)| zero(n));
        match (mu_zero, nu_zero) {
            (true, true) => constants.push(None),
            (false, false) => {
                let (m, n) = sums
                    .iter()
                    .filter(|(_, n)| !zero(n))
                    .max_by(|a, b| a.1.to_c64().norm().total_cmp(&b.1.to_c64().norm()))
                    .expect("some ν sum is nonzero");
                constants.push(Some(m.clone() / n.clone()));
            }
            _ => return Ok(FamilyVerdict::Indeterminate { length }),
        }
    }
    Ok(FamilyVerdict::Proportional { constants })
}

fn cross_products_agree<T: Scalar>(sums: &[(T, T)], tol: f64) -> bool {
    for (ma, na) in sums {
        for (mb, nb) in sums {
            let lhs = ma.mul_ref(nb);
            let rhs = na.mul_ref(mb);
            let scale = ma.to_c64().norm() * nb.to_c64().norm()
                + na.to_c64().norm() * mb.to_c64().norm();
            if !(lhs - rhs).is_negligible(tol, scale) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact_real, Exact};

    fn omega() -> C64 {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)
    }

    fn reals(xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| c64(x, 0.0)).collect()
    }

    #[test]
    fn sums_examples() {
        let ex: Vec<Exact> = vec![exact_real(1, 1), exact_real(2, 1)];
        assert_eq!(power_sums(&ex, 2), vec![exact_real(3, 1), exact_real(5, 1)]);
        assert_eq!(power_sums(&reals(&[0.0, 0.0]), 3), reals(&[0.0; 3]));
        let w = omega();
        let s = power_sums(&[c64(1.0, 0.0), w, w * w], 3);
        assert!(s[0].norm() < 1e-12 && s[1].norm() < 1e-12);
        assert!((s[2] - 3.0).norm() < 1e-12);
    }

    #[test]
    fn newton_examples() {
        let s = vec![exact_real(3, 1), exact_real(5, 1)];
        assert_eq!(elementary_from_power(&s), vec![exact_real(3, 1), exact_real(2, 1)]);
        let s = vec![exact_real(3, 1), exact_real(5, 1), exact_real(9, 1)];
        assert_eq!(elementary_from_power(&s), vec![exact_real(3, 1), exact_real(2, 1), exact_real(0, 1)]);
        assert_eq!(elementary_from_power(&[exact_real(-7, 3)]), vec![exact_real(-7, 3)]);
    }

    #[test]
    fn recovery_examples() {
        let roots = multiset_from_power_sums(&reals(&[3.0, 5.0]), 2).unwrap();
        assert!(multisets_match(&roots, &reals(&[1.0, 2.0]), 1e-10));
        let roots = multiset_from_power_sums(&reals(&[0.0; 3]), 3).unwrap();
        assert!(multisets_match(&roots, &reals(&[0.0; 3]), 1e-12));
        assert!(matches!(multiset_from_power_sums(&reals(&[1.0]), 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn first_nonzero_examples() {
        assert_eq!(first_nonzero_power(&reals(&[1.0, -1.0])).unwrap(), 2);
        let w = omega();
        assert_eq!(first_nonzero_power(&[c64(1.0, 0.0), w, w * w]).unwrap(), 3);
        assert_eq!(first_nonzero_power(&[exact_real(5, 1)]).unwrap(), 1);
        assert!(matches!(first_nonzero_power(&reals(&[1.0, 0.0])), Err(Error::Precondition(_))));
    }

    #[test]
    fn family_examples() {
        let ex = |xs: &[i64]| xs.iter().map(|&x| exact_real(x, 1)).collect::<Vec<_>>();
        let f = PowerSumFamily::new(vec![ex(&[1, 2])], vec![ex(&[2, 4])]).unwrap();
        match proportional_powersum_families(&f, 4, 0.0).unwrap() {
            FamilyVerdict::Proportional { constants } => {
                assert_eq!(constants[0], Some(exact_real(1, 2)));
                assert_eq!(constants[3], Some(exact_real(1, 16)));
            }
            other => panic!("{other:?}"),
        }
        let f = PowerSumFamily::new(vec![ex(&[1]), ex(&[1])], vec![ex(&[1]), ex(&[2])]).unwrap();
        assert_eq!(
            proportional_powersum_families(&f, 4, 0.0).unwrap(),
            FamilyVerdict::NotProportional { length: 1 }
        );
        let f = PowerSumFamily::new(vec![ex(&[3, -1])], vec![ex(&[3, -1])]).unwrap();
        match proportional_powersum_families(&f, 4, 0.0).unwrap() {
            FamilyVerdict::Proportional { constants } => {
                assert!(constants.iter().all(|c| c == &Some(exact_real(1, 1))))
            }
            other => panic!("{other:?}"),
        }
        assert!(proportional_powersum_families(&f, 3, 0.0).is_err());
    }

    #[test]
    fn vanishing_side_is_indeterminate() {
        let ex = |xs: &[i64]| xs.iter().map(|&x| exact_real(x, 1)).collect::<Vec<_>>();
        let f = PowerSumFamily::new(vec![ex(&[1, -1])], vec![ex(&[1, 0])]).unwrap();
        assert_eq!(
            proportional_powersum_families(&f, 4, 0.0).unwrap(),
            FamilyVerdict::Indeterminate { length: 1 }
        );
    }

    #[test]
    fn padding() {
        let f = PowerSumFamily::new(vec![reals(&[1.0])], vec![reals(&[1.0, 0.0, 0.0])]).unwrap();
        assert_eq!(f.l0(), 3);
        assert_eq!(f.mu(0).len(), 3);
    }
}
