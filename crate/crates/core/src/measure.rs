//! Structure of measurement operators under which `E(f)` is invariant to
//! argument transpositions, i.e. `M = c|w><w| + D + A`, together with the
//! spectral necessary conditions for NMR realizability and a numerical search
//! for the largest `|c| / Lambda(M)` among operators isospectral with `F_x`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::expectation;
use crate::error::{Error, Result};
use crate::funcspace::{enumerate_all, BoolFunc, MAX_ENUM_BITS};
use crate::spinops::{check_spins, total_spin, Axis, Operator};
use crate::states::DensityMatrix;

/// Absolute tolerance (scaled by `max|M|`) for invariance checks.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// `M = c|w><w| + diag(D) + A` with `A` pure imaginary antisymmetric, stored
/// as the imaginary parts of its strict upper triangle in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantForm {
    pub c: f64,
    pub d: Vec<f64>,
    pub a_upper: Vec<f64>,
}

fn upper_pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |j| (j + 1..dim).map(move |k| (j, k)))
}

impl InvariantForm {
    pub fn new(c: f64, d: Vec<f64>, a_upper: Vec<f64>) -> Result<Self> {
        let dim = d.len();
        if dim < 2 {
            return Err(Error::invalid("invariant form needs dimension >= 2"));
        }
        let pairs = dim * (dim - 1) / 2;
        if a_upper.len() != pairs {
            return Err(Error::DimensionMismatch {
                expected: pairs,
                found: a_upper.len(),
            });
        }
        if !(c.is_finite() && d.iter().chain(&a_upper).all(|x| x.is_finite())) {
            return Err(Error::invalid("invariant form entries must be finite"));
        }
        Ok(InvariantForm { c, d, a_upper })
    }

    /// Uniform draws in `[-1, 1]` for every parameter.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let c = rng.random_range(-1.0..1.0);
        let d = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = (0..dim * dim.saturating_sub(1) / 2)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        InvariantForm::new(c, d, a)
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn without_antisymmetric(&self) -> InvariantForm {
        InvariantForm {
            c: self.c,
            d: self.d.clone(),
            a_upper: vec![0.0; self.a_upper.len()],
        }
    }

    pub fn reconstruct(&self) -> Operator {
        Operator::from_matrix(self.matrix()).expect("invariant forms are hermitian")
    }

    fn matrix(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let base = self.c / dim as f64;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(base, 0.0));
        for (j, dj) in self.d.iter().enumerate() {
            m[(j, j)].re += dj;
        }
        for ((j, k), a) in upper_pairs(dim).zip(&self.a_upper) {
            m[(j, k)].im = *a;
            m[(k, j)].im = -*a;
        }
        m
    }
}

/// Recovers `(c, D, A)` from a hermitian `M` whose symmetrized off-diagonal
/// entries `M_jk + M_kj` are all equal within `tol`.
pub fn decompose_invariant(m: &Operator, tol: f64) -> Result<InvariantForm> {
    let dim = m.dim();
    if !m.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: m.max_abs_diff(&m.adjoint())?,
        });
    }
    if dim < 2 {
        return Err(Error::invalid("invariant form needs dimension >= 2"));
    }
    let e = m.entries();
    let sym: Vec<Complex64> = upper_pairs(dim).map(|(j, k)| e[(j, k)] + e[(k, j)]).collect();
    let mean = sym.iter().sum::<Complex64>() / sym.len() as f64;
    let spread = sym.iter().map(|s| (s - mean).norm()).fold(0.0, f64::max);
    if spread > tol {
        return Err(Error::NotInvariantForm { spread });
    }
    let c = dim as f64 * mean.re / 2.0;
    let d = (0..dim).map(|j| e[(j, j)].re - c / dim as f64).collect();
    let a_upper = upper_pairs(dim).map(|(j, k)| e[(j, k)].im).collect();
    let form = InvariantForm::new(c, d, a_upper)?;
    let residual = form.reconstruct().max_abs_diff(m)?;
    if residual > tol {
        return Err(Error::NotInvariantForm { spread: residual });
    }
    Ok(form)
}

/// A function and transposition with `E(f) != E(P_lm f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationWitness {
    pub f: BoolFunc,
    pub l: usize,
    pub m: usize,
    pub before: f64,
    pub after: f64,
}

impl fmt::Display for PermutationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f={} swap ({}, {}): E={:.6e} -> {:.6e}",
            self.f.to_bit_string(),
            self.l,
            self.m,
            self.before,
            self.after
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub trials: usize,
    pub checked: usize,
    pub witness: Option<PermutationWitness>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

fn invariance_tol(m: &Operator) -> f64 {
    INVARIANCE_TOL * m.max_abs().max(1.0)
}

fn spins_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::invalid(format!("dimension {dim} is not 2^n with n >= 1")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Samples random `(f, l, m)` and stops at the first violation of
/// `E(f) = E(P_lm f)`.
pub fn check_permutation_invariance(
    m: &Operator,
    rho: &DensityMatrix,
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let n = spins_of(m.dim())?;
    let dim = m.dim();
    let tol = invariance_tol(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let f = BoolFunc::from_fn(n, |_| rng.random_bool(0.5))?;
        let l = rng.random_range(0..dim);
        let mut k = rng.random_range(0..dim - 1);
        if k >= l {
            k += 1;
        }
        let before = expectation(m, rho, &f)?;
        let after = expectation(m, rho, &f.permute(l, k)?)?;
        if (before - after).abs() > tol {
            return Ok(InvarianceReport {
                trials,
                checked: trial + 1,
                witness: Some(PermutationWitness {
                    f,
                    l,
                    m: k,
                    before,
                    after,
                }),
            });
        }
    }
    Ok(InvarianceReport {
        trials,
        checked: trials,
        witness: None,
    })
}

/// Exhaustive search over every function and transposition; returns the
/// first violation in lexicographic order of `(f, l, m)`.
pub fn find_permutation_witness(
    m: &Operator,
    rho: &DensityMatrix,
) -> Result<Option<PermutationWitness>> {
    let n = spins_of(m.dim())?;
    if n > MAX_ENUM_BITS {
        return Err(Error::Infeasible {
            what: "exhaustive permutation search",
            n,
            limit: MAX_ENUM_BITS,
        });
    }
    let tol = invariance_tol(m);
    let dim = m.dim();
    for f in enumerate_all(n)? {
        let before = expectation(m, rho, &f)?;
        for l in 0..dim {
            for k in l + 1..dim {
                let after = expectation(m, rho, &f.permute(l, k)?)?;
                if (before - after).abs() > tol {
                    return Ok(Some(PermutationWitness {
                        f,
                        l,
                        m: k,
                        before,
                        after,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueCheck {
    pub lambda: f64,
    pub multiplicity: usize,
    /// `|det(M - lambda)|`.
    pub det_abs: f64,
    pub vanishes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryReport {
    pub eigenvalues: Vec<EigenvalueCheck>,
    pub trace: f64,
    pub reference_trace: f64,
    pub trace_ok: bool,
    pub pass: bool,
}

/// Spectral necessary conditions for `M` to be unitarily equivalent to
/// `reference`: `det(M - lambda_k) = 0` for every reference eigenvalue and
/// equal traces. The determinant test is relative to `max(1, |M - lambda|_F)^N`.
pub fn necessary_conditions(m: &Operator, reference: &Operator, tol: f64) -> Result<NecessaryReport> {
    let dim = reference.dim();
    m.check_dim(dim)?;
    for op in [m, reference] {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: op.max_abs_diff(&op.adjoint())?,
            });
        }
    }
    let cluster_tol = 1e-9 * dim as f64;
    let eigenvalues = reference
        .spectrum()?
        .distinct(cluster_tol)
        .into_iter()
        .map(|(lambda, multiplicity)| {
            let shifted = m.entries() - DMatrix::from_diagonal_element(dim, dim, Complex64::from(lambda));
            let scale = shifted.norm().max(1.0).powi(dim as i32);
            let det_abs = shifted.lu().determinant().norm();
            EigenvalueCheck {
                lambda,
                multiplicity,
                det_abs,
                vanishes: det_abs <= tol * scale,
            }
        })
        .collect::<Vec<_>>();
    let trace = m.trace().re;
    let reference_trace = reference.trace().re;
    let trace_ok = (trace - reference_trace).abs() <= tol * (dim as f64).max(1.0);
    let pass = trace_ok && eigenvalues.iter().all(|e| e.vanishes);
    Ok(NecessaryReport {
        eigenvalues,
        trace,
        reference_trace,
        trace_ok,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Eigenvalue mismatch (Euclidean norm) below which a candidate counts
    /// as isospectral with `F_x`.
    pub feasibility_tol: f64,
    /// Mismatch the final unpenalized polish aims for.
    pub polish_tol: f64,
    pub mu_schedule: Vec<f64>,
    pub max_iter_per_stage: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 50,
            feasibility_tol: 1e-6,
            polish_tol: 1e-9,
            mu_schedule: (1..=8).map(|k| 10f64.powi(-k)).collect(),
            max_iter_per_stage: 100,
        }
    }
}

pub const DEFAULT_BUDGET: usize = 100_000;
/// Largest `n` the search accepts.
pub const MAX_SEARCH_BITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub n: usize,
    pub ratio: f64,
    pub c: f64,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    #[serde(rename = "A_upper")]
    pub a_upper: Vec<f64>,
    /// Euclidean norm of the sorted eigenvalue mismatch against `F_x`.
    pub penalty_residual: f64,
    pub feasible: bool,
    pub budget: usize,
    pub seed: u64,
    pub evaluations: usize,
    pub restarts: usize,
}

impl SearchReport {
    pub fn form(&self) -> InvariantForm {
        InvariantForm {
            c: self.c,
            d: self.d.clone(),
            a_upper: self.a_upper.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// Penalized objective over `p = [c, D_0..D_{N-2}, a_upper]`; the last
/// diagonal entry is fixed by `Tr M = 0`.
struct Problem {
    dim: usize,
    target: Vec<f64>,
    pairs: Vec<(usize, usize)>,
}

struct Point {
    value: f64,
    grad: DVector<f64>,
    residual: f64,
    ratio: f64,
}

impl Problem {
    fn new(n: usize) -> Result<Self> {
        let dim = 1 << n;
        let target = total_spin(n, Axis::X)?.spectrum()?.values().to_vec();
        Ok(Problem {
            dim,
            target,
            pairs: upper_pairs(dim).collect(),
        })
    }

    fn params(&self) -> usize {
        self.dim + self.pairs.len()
    }

    fn form(&self, p: &DVector<f64>) -> InvariantForm {
        let dim = self.dim;
        let mut d: Vec<f64> = p.rows(1, dim - 1).iter().copied().collect();
        d.push(-p[0] - d.iter().sum::<f64>());
        InvariantForm {
            c: p[0],
            d,
            a_upper: p.rows(dim, self.pairs.len()).iter().copied().collect(),
        }
    }

    fn evaluate(&self, p: &DVector<f64>, mu: f64) -> Point {
        let dim = self.dim;
        let eig = self.form(p).matrix().symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let v = &eig.eigenvectors;
        let last = dim - 1;

        // column q of `jac` holds d lambda_q / d p for the q-th smallest eigenvalue
        let mut jac = DMatrix::<f64>::zeros(self.params(), dim);
        for (q, &k) in order.iter().enumerate() {
            let col = v.column(k);
            let tail = col[last].norm_sqr();
            let total: Complex64 = col.iter().sum();
            jac[(0, q)] = total.norm_sqr() / dim as f64 - tail;
            for j in 0..last {
                jac[(1 + j, q)] = col[j].norm_sqr() - tail;
            }
            for (idx, &(j, l)) in self.pairs.iter().enumerate() {
                jac[(dim + idx, q)] = -2.0 * (col[j].conj() * col[l]).im;
            }
        }

        let r = DVector::from_iterator(dim, values.iter().zip(&self.target).map(|(a, b)| a - b));
        let lambda = values[last] - values[0];
        let c = p[0];
        let ratio = c.abs() / lambda;
        let mut grad = &jac * &r * 2.0;
        if mu != 0.0 {
            let range_grad = jac.column(last) - jac.column(0);
            grad -= (range_grad * (-c.abs() / (lambda * lambda))) * mu;
            grad[0] -= mu * c.signum() / lambda;
        }
        Point {
            value: r.norm_squared() - mu * ratio,
            grad,
            residual: r.norm(),
            ratio,
        }
    }
}

/// Quasi-Newton descent with Armijo backtracking. Each objective call is
/// charged against `budget`; returns early when it runs out.
fn bfgs(
    problem: &Problem,
    mut x: DVector<f64>,
    mu: f64,
    max_iter: usize,
    budget: &mut usize,
    stop: impl Fn(&Point) -> bool,
) -> DVector<f64> {
    if *budget == 0 {
        return x;
    }
    *budget -= 1;
    let mut cur = problem.evaluate(&x, mu);
    let size = x.len();
    let mut h = DMatrix::<f64>::identity(size, size);
    for iter in 0..max_iter {
        if stop(&cur) || cur.grad.norm() < 1e-14 {
            break;
        }
        let mut dir = -(&h * &cur.grad);
        let mut slope = dir.dot(&cur.grad);
        if slope >= 0.0 {
            h = DMatrix::identity(size, size);
            dir = -cur.grad.clone();
            slope = dir.dot(&cur.grad);
        }
        let mut step = 1.0;
        let next = loop {
            if *budget == 0 {
                return x;
            }
            *budget -= 1;
            let trial = &x + &dir * step;
            let pt = problem.evaluate(&trial, mu);
            if pt.value.is_finite() && pt.value <= cur.value + 1e-4 * step * slope {
                break Some((trial, pt));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((x_new, pt)) = next else { break };
        let s = &x_new - &x;
        let y = &pt.grad - &cur.grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iter == 0 {
                h *= sy / y.norm_squared();
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H += (1 + rho y'Hy) rho s s' - rho (Hy s' + s y'H)
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = x_new;
        cur = pt;
    }
    x
}

struct Candidate {
    form: InvariantForm,
    ratio: f64,
    residual: f64,
    evaluations: usize,
}

fn run_restart(problem: &Problem, cfg: &SearchConfig, seed: u64, index: usize, budget: usize) -> Candidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut x = DVector::from_fn(problem.params(), |_, _| rng.random_range(-1.0..1.0));
    let mut remaining = budget;
    // keep a quarter of the budget for the unpenalized polish
    let polish_reserve = budget / 4;
    for &mu in &cfg.mu_schedule {
        let mut stage = remaining.saturating_sub(polish_reserve);
        let before = stage;
        x = bfgs(problem, x, mu, cfg.max_iter_per_stage, &mut stage, |_| false);
        remaining -= before - stage;
    }
    let polish_tol = cfg.polish_tol;
    x = bfgs(
        problem,
        x,
        0.0,
        2 * cfg.max_iter_per_stage,
        &mut remaining,
        |pt| pt.residual < polish_tol * 1e-3,
    );
    let pt = problem.evaluate(&x, 0.0);
    Candidate {
        form: problem.form(&x),
        ratio: pt.ratio,
        residual: pt.residual,
        evaluations: budget - remaining + 1,
    }
}

/// Maximizes `|c| / Lambda(M)` over invariant-form `M` isospectral with
/// `F_x`, using [`SearchConfig::default`].
pub fn search_max_c_ratio(n: usize, budget: usize, seed: u64) -> Result<SearchReport> {
    search_max_c_ratio_with(n, budget, seed, &SearchConfig::default())
}

/// Random-restart penalty search. Restarts run in parallel, each on its own
/// ChaCha stream, and are merged in restart order so that results do not
/// depend on scheduling.
pub fn search_max_c_ratio_with(
    n: usize,
    budget: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    check_spins(n)?;
    if n == 0 {
        return Err(Error::invalid("search needs n >= 1"));
    }
    if n > MAX_SEARCH_BITS {
        return Err(Error::Infeasible {
            what: "measurement search",
            n,
            limit: MAX_SEARCH_BITS,
        });
    }
    if budget == 0 || cfg.restarts == 0 {
        return Err(Error::invalid("budget and restart count must be positive"));
    }
    let problem = Problem::new(n)?;
    let restarts = cfg.restarts.min(budget);
    let per = budget / restarts;
    let candidates: Vec<Candidate> = (0..restarts)
        .into_par_iter()
        .map(|i| run_restart(&problem, cfg, seed, i, per))
        .collect();
    let evaluations = candidates.iter().map(|c| c.evaluations).sum();

    let feasible = |c: &&Candidate| c.residual < cfg.feasibility_tol;
    let best_feasible = candidates
        .iter()
        .filter(feasible)
        .fold(None::<&Candidate>, |best, c| match best {
            Some(b) if b.ratio >= c.ratio => Some(b),
            _ => Some(c),
        });
    let (best, is_feasible) = match best_feasible {
        Some(b) => (b, true),
        None => (
            candidates
                .iter()
                .fold(&candidates[0], |b, c| if c.residual < b.residual { c } else { b }),
            false,
        ),
    };
    log::debug!(
        "search n={n}: {} of {restarts} restarts feasible",
        candidates.iter().filter(feasible).count()
    );
    let report = SearchReport {
        n,
        ratio: best.ratio,
        c: best.form.c,
        d: best.form.d.clone(),
        a_upper: best.form.a_upper.clone(),
        penalty_residual: best.residual,
        feasible: is_feasible,
        budget,
        seed,
        evaluations,
        restarts,
    };
    if is_feasible {
        Ok(report)
    } else {
        Err(Error::SearchInfeasible(Box::new(report)))
    }
}
