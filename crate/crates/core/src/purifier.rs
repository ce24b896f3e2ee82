//! Numerical search for translationally invariant purifications of a
//! classical MPDO, verification of candidates, and the interleaved
//! search/scan loop.
//!
//! A purification tensor `B` gives `C_i = Σ_e B_{i,e} ⊗ conj(B_{i,e})`, and
//! the fit maximises the normalised fidelities
//! `F_L = |⟨ψ_A^L|ψ_C^L⟩|² / (⟨ψ_A^L|ψ_A^L⟩⟨ψ_C^L|ψ_C^L⟩)` over a window of
//! lengths. "Found" is certified by the residuals; "not found" proves
//! nothing.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::AnyTensor;
use crate::linalg;
use crate::matrix::Matrix;
use crate::positivity::{scan_classical_range, PositivityReport, TraceValue};
use crate::scalar::{c64, Scalar, C64};
use crate::tensor::{
    build_classical_mpdo, build_state_vector, c_from_b, mixed_transfer, overlap_scaled, sigma_diagonal, DenseCap, MpsTensor,
    PurificationTensor,
};

/// Largest transfer-matrix side allowed in a fit.
pub const TRANSFER_BUDGET: usize = 1024;
const RESTART_BATCH: usize = 8;
const LBFGS_CHUNK: u64 = 50;
const OPTIMIZER_GOAL: f64 = 1e-15;
/// Agreement required of normalised dense diagonals for a found purification.
pub const DENSE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Quasi-Newton descent on the analytic gradient.
    Lbfgs,
    /// Gradient-free compass search.
    PatternSearch,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(Optimizer::Lbfgs),
            "pattern" | "pattern-search" => Ok(Optimizer::PatternSearch),
            other => Err(Error::Input(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurifySearchConfig {
    pub bond: usize,
    /// Defaults to `bond * d`.
    pub d_env: Option<usize>,
    pub lengths: Vec<usize>,
    pub restarts: usize,
    pub max_iters: u64,
    pub tol: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl PurifySearchConfig {
    pub fn new(bond: usize) -> Self {
        PurifySearchConfig {
            bond,
            d_env: None,
            lengths: (1..=8).collect(),
            restarts: 32,
            max_iters: 500,
            tol: 1e-9,
            seed: 42,
            optimizer: Optimizer::Lbfgs,
        }
    }

    pub fn env_dim(&self, d: usize) -> usize {
        self.d_env.unwrap_or(self.bond * d)
    }

    fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(Error::Input("lengths must be a nonempty set of positive integers".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Input("tol must be positive".into()));
        }
        if self.bond == 0 || self.d_env == Some(0) {
            return Err(Error::Input("bond and environment dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PurifyStatus {
    Found,
    NotFoundInconclusive,
}

#[derive(Debug, Clone)]
pub struct PurifyResult {
    pub status: PurifyStatus,
    /// The certified tensor, present only when found.
    pub b: Option<PurificationTensor<C64>>,
    pub lengths: Vec<usize>,
    /// `1 - F_L` of the best restart, per configured length.
    pub residuals: Vec<f64>,
    /// `m_L` with `|ψ_A^L⟩ = m_L |ψ_C^L⟩` for the best restart.
    pub constants: Vec<C64>,
    /// `max_L (1 - F_L)` of the best restart.
    pub best_residual: f64,
    pub best_restart: usize,
    pub restarts_run: usize,
}

impl PurifyResult {
    pub fn found(&self) -> bool {
        self.status == PurifyStatus::Found
    }
}

/// Target data shared by every objective evaluation.
struct Target {
    a: MpsTensor<C64>,
    lengths: Vec<usize>,
    norms: Vec<f64>,
    d: usize,
    d_env: usize,
    bond: usize,
}

fn pack(b: &PurificationTensor<C64>) -> Vec<f64> {
    b.matrices().iter().flat_map(|m| m.data().iter().flat_map(|z| [z.re, z.im])).collect()
}

fn unpack(x: &[f64], d: usize, d_env: usize, bond: usize) -> PurificationTensor<C64> {
    let per = bond * bond;
    let ms = (0..d * d_env)
        .map(|k| Matrix::from_fn(bond, bond, |r, c| {
            let off = 2 * (k * per + r * bond + c);
            c64(x[off], x[off + 1])
        }))
        .collect();
    PurificationTensor::new(d, d_env, ms).expect("consistent layout")
}

/// `H[c, d] = Σ_{a,b} G[(b,d),(a,c)] X[a,b]` for `G` on `(n_x · n_y)`-dimensional space.
fn contract_left(g: &Matrix<C64>, x: &Matrix<C64>, ny: usize) -> Matrix<C64> {
    let nx = x.rows();
    Matrix::from_fn(ny, ny, |c, d| {
        let mut acc = c64(0.0, 0.0);
        for a in 0..nx {
            for b in 0..nx {
                let xv = x[(a, b)];
                if xv.re != 0.0 || xv.im != 0.0 {
                    acc += g[(b * ny + d, a * ny + c)] * xv;
                }
            }
        }
        acc
    })
}

impl Target {
    fn new(a: &MpsTensor<C64>, lengths: &[usize], bond: usize, d_env: usize) -> Result<Self> {
        let dim_ac = a.bond() * bond * bond;
        let dim_cc = bond.pow(4);
        if dim_ac > TRANSFER_BUDGET || dim_cc > TRANSFER_BUDGET {
            return Err(Error::CapExceeded {
                required: dim_ac.max(dim_cc) as u128,
                cap: TRANSFER_BUDGET,
            });
        }
        // keep ⟨ψ_A|ψ_A⟩ of order one
        let r = linalg::spectral_radius(&mixed_transfer(a, a)?)?;
        if r == 0.0 {
            return Err(Error::DegenerateInput("target state vanishes at every length".into()));
        }
        let a = a.scaled(&c64(1.0 / r.sqrt(), 0.0));
        let taa = mixed_transfer(&a, &a)?;
        let mut norms = Vec::with_capacity(lengths.len());
        for &l in lengths {
            let n = taa.pow(l).trace().re;
            if !(n > 1e-300) || n.abs() <= 1e-13 * taa.max_abs().powi(l as i32) {
                return Err(Error::DegenerateInput(format!("target state has zero norm at length {l}")));
            }
            norms.push(n);
        }
        Ok(Target {
            d: a.d(),
            a,
            lengths: lengths.to_vec(),
            norms,
            d_env,
            bond,
        })
    }

    fn n_params(&self) -> usize {
        2 * self.d * self.d_env * self.bond * self.bond
    }

    /// Per-length fidelities and, optionally, the gradient of `Σ_L (1 - F_L)`.
    fn evaluate(&self, x: &[f64], want_grad: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (vec![0.0; self.lengths.len()], want_grad.then(|| vec![0.0; x.len()]));
        }
        let xs: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let b = unpack(&xs, self.d, self.d_env, self.bond);
        let c = c_from_b(&b);
        let t_ac = mixed_transfer(&self.a, &c).expect("same d");
        let t_cc = mixed_transfer(&c, &c).expect("same d");
        let nc = self.bond * self.bond;
        let mut fids = Vec::with_capacity(self.lengths.len());
        let mut w: Vec<Matrix<C64>> = vec![Matrix::zeros(nc, nc); self.d];
        let max_l = self.lengths.iter().copied().max().unwrap_or(1);
        // T^{L-1} for every needed L, by repeated multiplication
        let mut pows_ac: Vec<Option<Matrix<C64>>> = vec![None; max_l];
        let mut pows_cc: Vec<Option<Matrix<C64>>> = vec![None; max_l];
        let (mut pa, mut pc) = (Matrix::identity(t_ac.rows()), Matrix::identity(t_cc.rows()));
        for k in 0..max_l {
            if k > 0 {
                pa = pa.matmul(&t_ac);
                pc = pc.matmul(&t_cc);
            }
            if self.lengths.contains(&(k + 1)) {
                pows_ac[k] = Some(pa.clone());
                pows_cc[k] = Some(pc.clone());
            }
        }
        for (k, &l) in self.lengths.iter().enumerate() {
            let pa = pows_ac[l - 1].as_ref().expect("power computed");
            let pc = pows_cc[l - 1].as_ref().expect("power computed");
            let p = pa.matmul(&t_ac).trace();
            let q = pc.matmul(&t_cc).trace().re;
            let na = self.norms[k];
            if !(q > 0.0) || !q.is_finite() {
                fids.push(0.0);
                continue;
            }
            fids.push((p.norm_sqr() / (na * q)).clamp(0.0, 1.0));
            if want_grad {
                let lf = c64(l as f64, 0.0);
                let ga = pa.scale(&lf);
                let gc = pc.scale(&lf);
                let coef_h = p.conj() * q * 2.0 / (na * q * q);
                let coef_k = c64(-2.0 * p.norm_sqr() / (na * q * q), 0.0);
                for i in 0..self.d {
                    let h = contract_left(&ga, &self.a.matrix(i).conj(), nc);
                    let kk = contract_left(&gc, &c.matrix(i).conj(), nc);
                    // objective is Σ (1 - F), hence the sign
                    w[i].add_assign(&h.scale(&-coef_h).add(&kk.scale(&-coef_k)));
                }
            }
        }
        let grad = want_grad.then(|| {
            let n = self.bond;
            let mut g = Vec::with_capacity(x.len());
            for i in 0..self.d {
                for e in 0..self.d_env {
                    let bm = b.matrix(i, e);
                    for pr in 0..n {
                        for rr in 0..n {
                            // gU[p,r] + conj(gV[p,r])
                            let mut gu = c64(0.0, 0.0);
                            let mut gv = c64(0.0, 0.0);
                            for q in 0..n {
                                for s in 0..n {
                                    gu += w[i][(pr * n + q, rr * n + s)] * bm[(q, s)].conj();
                                    gv += w[i][(q * n + pr, s * n + rr)] * bm[(q, s)];
                                }
                            }
                            let gz = gu + gv.conj();
                            g.push(gz.re / norm);
                            g.push(-gz.im / norm);
                        }
                    }
                }
            }
            g
        });
        (fids, grad)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.evaluate(x, false).0.iter().map(|f| 1.0 - f).sum()
    }
}

/// The line search asks for cost and gradient at the same points, so both
/// are computed together and the last pair is cached.
struct Problem<'a> {
    target: &'a Target,
    cache: RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
}

impl Problem<'_> {
    fn both(&self, p: &[f64]) -> (f64, Vec<f64>) {
        if let Some((x, f, g)) = self.cache.borrow().as_ref() {
            if x.as_slice() == p {
                return (*f, g.clone());
            }
        }
        let (fids, grad) = self.target.evaluate(p, true);
        let f: f64 = fids.iter().map(|v| 1.0 - v).sum();
        let g = grad.expect("gradient requested");
        *self.cache.borrow_mut() = Some((p.to_vec(), f, g.clone()));
        (f, g)
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.both(p).0)
    }
}

impl Gradient for Problem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.both(p).1)
    }
}

/// L-BFGS in chunks so that a failed line search keeps the last good point.
fn run_lbfgs(target: &Target, x0: Vec<f64>, max_iters: u64, target_cost: f64) -> Vec<f64> {
    let mut x = x0;
    let mut best = target.cost(&x);
    let mut done = 0;
    while done < max_iters && best > target_cost {
        let iters = LBFGS_CHUNK.min(max_iters - done);
        done += iters;
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 7)
            .with_tolerance_grad(1e-15)
            .and_then(|s| s.with_tolerance_cost(0.0));
        let Ok(solver) = solver else { break };
        let problem = Problem {
            target,
            cache: RefCell::new(None),
        };
        let run = Executor::new(problem, solver)
            .configure(|s| s.param(x.clone()).max_iters(iters).target_cost(target_cost))
            .timer(false)
            .run();
        let Ok(mut res) = run else { break };
        let state = &mut res.state;
        let cost = state.get_best_cost();
        match state.take_best_param() {
            Some(p) if cost < best => {
                let stalled = best - cost <= 1e-16 * best.max(1.0);
                best = cost;
                x = p;
                if stalled {
                    break;
                }
            }
            _ => break,
        }
    }
    x
}

/// Compass search: coordinate steps of size `h`, halved after each
/// unsuccessful sweep.
fn run_pattern_search(target: &Target, x0: Vec<f64>, max_sweeps: u64, target_cost: f64) -> Vec<f64> {
    let mut x = x0;
    let mut f = target.cost(&x);
    let scale = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let mut h = 0.25 * scale.max(1e-3);
    for _ in 0..max_sweeps {
        if f <= target_cost || h < 1e-12 * scale {
            break;
        }
        let mut improved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                let old = x[j];
                x[j] = old + dir * h;
                let trial = target.cost(&x);
                if trial < f {
                    f = trial;
                    improved = true;
                    break;
                }
                x[j] = old;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    x
}

fn initial_point(target: &Target, seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..target.n_params() / 2)
        .flat_map(|_| {
            let r: f64 = rng.random::<f64>().sqrt();
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

struct Attempt {
    restart: usize,
    x: Vec<f64>,
    residuals: Vec<f64>,
    worst: f64,
}

fn attempt(target: &Target, cfg: &PurifySearchConfig, restart: usize) -> Attempt {
    let x0 = initial_point(target, cfg.seed, restart);
    // drive well past tol: a residual r leaves state errors of order sqrt(r)
    let goal = OPTIMIZER_GOAL.min(0.01 * cfg.tol);
    let x = match cfg.optimizer {
        Optimizer::Lbfgs => run_lbfgs(target, x0, cfg.max_iters, goal),
        Optimizer::PatternSearch => run_pattern_search(target, x0, cfg.max_iters, goal),
    };
    let residuals: Vec<f64> = target.evaluate(&x, false).0.iter().map(|f| (1.0 - f).max(0.0)).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    Attempt {
        restart,
        x,
        residuals,
        worst,
    }
}

/// Dense component budget per length for the polishing stage.
const POLISH_COMPONENTS: usize = 1 << 10;
const POLISH_STEPS: usize = 40;

/// Normalised target states at the lengths short enough to expand densely.
fn polish_targets(a: &MpsTensor<C64>, lengths: &[usize]) -> Vec<(usize, Vec<C64>)> {
    lengths
        .iter()
        .filter(|&&l| a.d().checked_pow(l as u32).is_some_and(|n| n <= POLISH_COMPONENTS))
        .filter_map(|&l| {
            let v = build_state_vector(a, l, DenseCap::DEFAULT).ok()?.components;
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (n > 0.0).then(|| (l, v.iter().map(|z| z / n).collect()))
        })
        .collect()
}

/// Componentwise residuals `ψ̂_C - e^{iθ} ψ̂_A`, with the best phase θ.
fn polish_residuals(x: &[f64], targets: &[(usize, Vec<C64>)], d: usize, d_env: usize, bond: usize) -> Option<Vec<f64>> {
    let c = c_from_b(&unpack(x, d, d_env, bond));
    let mut out = Vec::new();
    for (l, a) in targets {
        let v = build_state_vector(&c, *l, DenseCap::DEFAULT).ok()?.components;
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let ov: C64 = a.iter().zip(&v).map(|(p, q)| p.conj() * q).sum();
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { c64(1.0, 0.0) };
        for (p, q) in a.iter().zip(&v) {
            let r = q / n - p * phase;
            out.push(r.re);
            out.push(r.im);
        }
    }
    Some(out)
}

/// Levenberg-Marquardt on the dense residuals with a central-difference
/// Jacobian. The fidelity objective cannot resolve amplitude errors much
/// below `sqrt(eps)`; these residuals can.
fn polish(x: Vec<f64>, targets: &[(usize, Vec<C64>)], d: usize, d_env: usize, bond: usize) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    if targets.is_empty() {
        return x;
    }
    let res = |p: &[f64]| polish_residuals(p, targets, d, d_env, bond);
    let Some(mut r) = res(&x) else { return x };
    let mut x = x;
    let mut f = r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-6;
    for _ in 0..POLISH_STEPS {
        if f < 1e-30 {
            break;
        }
        let n = x.len();
        let mut jac = DMatrix::<f64>::zeros(r.len(), n);
        let mut ok = true;
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1e-3);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            match (res(&xp), res(&xm)) {
                (Some(rp), Some(rm)) => {
                    for i in 0..r.len() {
                        jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                    }
                }
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..8 {
            let mut m = jtj.clone();
            for k in 0..n {
                m[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = m.cholesky().map(|ch| ch.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            if let Some(rt) = res(&trial) {
                let ft = rt.iter().map(|v| v * v).sum::<f64>();
                if ft < f {
                    x = trial;
                    r = rt;
                    f = ft;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Rescales `B` so that `⟨ψ_C|ψ_C⟩ = ⟨ψ_A|ψ_A⟩` at length `l`.
fn match_norm(a: &MpsTensor<C64>, b: PurificationTensor<C64>, l: usize) -> Result<PurificationTensor<C64>> {
    let c = c_from_b(&b);
    let na = overlap_scaled(a, a, l)?;
    let nc = overlap_scaled(&c, &c, l)?;
    if !(nc.value.re > 0.0) || !(na.value.re > 0.0) {
        return Ok(b);
    }
    let log_ratio = na.value.re.ln() + na.log_scale - nc.value.re.ln() - nc.log_scale;
    let s = c64((log_ratio / (4.0 * l as f64)).exp(), 0.0);
    let ms = b.matrices().iter().map(|m| m.scale(&s)).collect();
    PurificationTensor::new(b.d(), b.d_env(), ms)
}

fn constants(a: &MpsTensor<C64>, b: &PurificationTensor<C64>, lengths: &[usize]) -> Result<Vec<C64>> {
    let c = c_from_b(b);
    lengths
        .iter()
        .map(|&l| {
            let ca = overlap_scaled(&c, a, l)?;
            let cc = overlap_scaled(&c, &c, l)?;
            Ok(ca.value / cc.value * (ca.log_scale - cc.log_scale).exp())
        })
        .collect()
}

/// Randomised-restart fit of a purification tensor of the configured bond.
pub fn fit_purification(a: &AnyTensor, cfg: &PurifySearchConfig) -> Result<PurifyResult> {
    cfg.validate()?;
    let af = a.to_float();
    let d_env = cfg.env_dim(af.d());
    let target = Target::new(&af, &cfg.lengths, cfg.bond, d_env)?;
    let mut attempts: Vec<Attempt> = Vec::new();
    let mut next = 0;
    while next < cfg.restarts {
        let end = (next + RESTART_BATCH).min(cfg.restarts);
        let batch: Vec<Attempt> = (next..end).into_par_iter().map(|r| attempt(&target, cfg, r)).collect();
        attempts.extend(batch);
        next = end;
        if attempts.iter().any(|t| t.worst < cfg.tol) {
            break;
        }
    }
    let restarts_run = attempts.len();
    let best = attempts
        .into_iter()
        .min_by(|p, q| p.worst.total_cmp(&q.worst).then(p.restart.cmp(&q.restart)))
        .ok_or_else(|| Error::Input("restarts must be at least 1".into()))?;
    let mut best = best;
    if best.worst < cfg.tol {
        let targets = polish_targets(&af, &cfg.lengths);
        let x = polish(best.x.clone(), &targets, af.d(), d_env, cfg.bond);
        let residuals: Vec<f64> = target.evaluate(&x, false).0.iter().map(|f| (1.0 - f).max(0.0)).collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst < cfg.tol {
            best = Attempt { x, residuals, worst, ..best };
        }
    }
    let found = best.worst < cfg.tol;
    let l_min = *cfg.lengths.iter().min().expect("nonempty");
    let b = match_norm(&af, unpack(&best.x, af.d(), d_env, cfg.bond), l_min)?;
    Ok(PurifyResult {
        status: if found { PurifyStatus::Found } else { PurifyStatus::NotFoundInconclusive },
        constants: constants(&af, &b, &cfg.lengths)?,
        b: found.then_some(b),
        lengths: cfg.lengths.clone(),
        residuals: best.residuals,
        best_residual: best.worst,
        best_restart: best.restart,
        restarts_run,
    })
}

/// Same objective, exposed for tests and benchmarks: `(Σ_L (1 - F_L), gradient)`.
pub fn objective_and_gradient(a: &MpsTensor<C64>, b: &PurificationTensor<C64>, lengths: &[usize]) -> Result<(f64, Vec<f64>)> {
    let target = Target::new(a, lengths, b.bond(), b.d_env())?;
    if b.d() != a.d() {
        return Err(Error::DimensionMismatch {
            what: "physical dimension",
            expected: a.d(),
            found: b.d(),
        });
    }
    let x = pack(b);
    let (fids, grad) = target.evaluate(&x, true);
    Ok((fids.iter().map(|f| 1.0 - f).sum(), grad.expect("gradient requested")))
}

pub fn parameters(b: &PurificationTensor<C64>) -> Vec<f64> {
    pack(b)
}

pub fn from_parameters(x: &[f64], d: usize, d_env: usize, bond: usize) -> PurificationTensor<C64> {
    unpack(x, d, d_env, bond)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthCheck<T> {
    pub length: usize,
    /// `1 - F_L`.
    pub residual: f64,
    /// `m_L` with `|ψ_A^L⟩ = m_L |ψ_C^L⟩`.
    pub constant: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport<T> {
    pub checks: Vec<LengthCheck<T>>,
    pub pass: bool,
}

impl<T> VerifyReport<T> {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Per-length residuals `1 - F_L` and constants `m_L`; exact in exact mode.
pub fn verify_purification<T: Scalar>(
    a: &MpsTensor<T>,
    b: &PurificationTensor<T>,
    lengths: &[usize],
    tol: f64,
) -> Result<VerifyReport<T>> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch {
            what: "physical dimension",
            expected: a.d(),
            found: b.d(),
        });
    }
    let c = c_from_b(b);
    let mut checks = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let aa = overlap_scaled(a, a, l)?;
        let cc = overlap_scaled(&c, &c, l)?;
        let ca = overlap_scaled(&c, a, l)?;
        if aa.value.is_zero() || cc.value.is_zero() {
            return Err(Error::DegenerateInput(format!("zero-norm state at length {l}")));
        }
        let ratio = ca.value.abs_sqr() / aa.value.mul_ref(&cc.value);
        let log_w = 2.0 * ca.log_scale - aa.log_scale - cc.log_scale;
        let residual = if log_w == 0.0 {
            (T::one() - ratio).to_c64().re
        } else {
            1.0 - ratio.to_c64().re * log_w.exp()
        };
        let mut constant = ca.value / cc.value;
        let log_m = ca.log_scale - cc.log_scale;
        if log_m != 0.0 {
            constant = constant.mul_ref(&T::from_c64(c64(log_m.exp(), 0.0)));
        }
        checks.push(LengthCheck {
            length: l,
            residual: residual.max(0.0),
            constant,
        });
    }
    let pass = checks.iter().all(|c| c.residual < tol);
    Ok(VerifyReport { checks, pass })
}

/// Largest deviation between the normalised diagonals of `ρ_A^L` and `σ_B^L`.
pub fn dense_diagonal_deviation(
    a: &MpsTensor<C64>,
    b: &PurificationTensor<C64>,
    length: usize,
    cap: DenseCap,
) -> Result<f64> {
    let rho = build_classical_mpdo(a, length, cap)?.diagonal;
    let sigma = sigma_diagonal(b, length, cap)?;
    let normalise = |v: &[C64]| -> Vec<f64> {
        let s: f64 = v.iter().map(|z| z.re).sum();
        v.iter().map(|z| z.re / s).collect()
    };
    let (r, s) = (normalise(&rho), normalise(&sigma));
    Ok(r.iter().zip(&s).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopCaps {
    pub max_bond: usize,
    pub max_len: usize,
    /// Fit settings used at every bond; `bond` is overwritten per step.
    pub fit: PurifySearchConfig,
    pub exact: bool,
}

impl LoopCaps {
    pub fn new(max_bond: usize, max_len: usize) -> Self {
        LoopCaps {
            max_bond,
            max_len,
            fit: PurifySearchConfig::new(1),
            exact: true,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LoopVerdict {
    Case2Witness {
        step: usize,
        word: Vec<usize>,
        trace: Option<TraceValue>,
    },
    PurificationFound {
        step: usize,
        bond: usize,
        result: Box<PurifyResult>,
    },
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub enum LoopEvent {
    Fit {
        step: usize,
        bond: usize,
        best_residual: f64,
        found: bool,
    },
    Scan {
        step: usize,
        length: usize,
        negative: bool,
        necklaces: u64,
    },
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub verdict: LoopVerdict,
    pub log: Vec<LoopEvent>,
}

/// Step `k` fits a purification of bond `k` (while `k <= max_bond`), then
/// scans words of length `k` (while `k <= max_len`).
pub fn semi_decision_loop(a: &AnyTensor, caps: &LoopCaps, cap: DenseCap) -> Result<LoopOutcome> {
    let mut log = Vec::new();
    let steps = caps.max_bond.max(caps.max_len);
    for step in 1..=steps {
        if step <= caps.max_bond {
            let mut cfg = caps.fit.clone();
            cfg.bond = step;
            let result = fit_purification(a, &cfg)?;
            log.push(LoopEvent::Fit {
                step,
                bond: step,
                best_residual: result.best_residual,
                found: result.found(),
            });
            if result.found() {
                return Ok(LoopOutcome {
                    verdict: LoopVerdict::PurificationFound {
                        step,
                        bond: step,
                        result: Box::new(result),
                    },
                    log,
                });
            }
        }
        if step <= caps.max_len {
            let report: PositivityReport = scan_classical_range(a, step, step, caps.exact, cap)?;
            log.push(LoopEvent::Scan {
                step,
                length: step,
                negative: report.is_negative(),
                necklaces: report.word_count,
            });
            if let Some(word) = report.witness {
                return Ok(LoopOutcome {
                    verdict: LoopVerdict::Case2Witness {
                        step,
                        word,
                        trace: report.witness_trace,
                    },
                    log,
                });
            }
        }
    }
    Ok(LoopOutcome {
        verdict: LoopVerdict::BudgetExhausted,
        log,
    })
}
