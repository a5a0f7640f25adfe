//! Expectation values `E(f) = Tr(M U_f rho U_f^dagger)`, the bilinear
//! functional `S_B(f) = sum_jk (-1)^{f(j)+f(k)} B_jk`, and the three
//! classification protocols built on them.
//!
//! Every protocol compares the measured expectation against references that
//! are obtained by running the same engine on representative class members,
//! and decides with the resolution margin `eps * Lambda(M)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{canonical_balanced, canonical_cn, BoolFunc};
use crate::spinops::{single_spin, spectral_range, total_spin, w_projector, Axis, Operator};
use crate::states::{pseudopure, pulsed_thermal, DensityMatrix, SpinSystem};

/// Resolution parameter `eps > 0` of an expectation-value machine.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Resolution(f64);

impl Resolution {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::invalid(format!("resolution {eps} must be positive")));
        }
        Ok(Resolution(eps))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// What a protocol can exclude. Decisions only ever rule a class out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    NotConstant,
    NotBalanced,
    NotInClass,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub decided: Decision,
    pub expectation: f64,
    /// Ideal expectation of the constant function nearest to `expectation`.
    pub gap_reference: f64,
    /// Ideal expectation of the alternative class (balanced or `C_N`).
    #[serde(skip)]
    pub alternative_reference: f64,
    #[serde(rename = "epsilon")]
    pub resolution: Resolution,
    pub lambda: f64,
    pub n: usize,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    /// `|gap_reference - alternative_reference|`.
    pub fn gap(&self) -> f64 {
        (self.gap_reference - self.alternative_reference).abs()
    }
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `Tr(A B) = sum_jk A_jk B_kj` without forming the product.
fn trace_product(a: &Operator, b: &Operator) -> (Complex64, f64) {
    let (a, b) = (a.entries(), b.entries());
    let dim = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in 0..dim {
        for j in 0..dim {
            let t = a[(j, k)] * b[(k, j)];
            acc += t;
            scale += t.re.abs() + t.im.abs();
        }
    }
    (acc, scale)
}

fn real_part_checked(z: Complex64, scale: f64) -> Result<f64> {
    let tol = 1e-12 * scale.max(1.0);
    if z.im.abs() > tol {
        return Err(Error::ImaginaryResidue {
            residue: z.im.abs(),
            tol,
        });
    }
    Ok(z.re)
}

/// `Tr(M rho)` for hermitian `M`.
pub fn measure(m: &Operator, rho: &DensityMatrix) -> Result<f64> {
    check_same_dim(m.dim(), rho.dim())?;
    if !m.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: m.max_abs_diff(&m.adjoint())?,
        });
    }
    let (z, scale) = trace_product(m, rho.op());
    real_part_checked(z, scale)
}

/// `E(f) = Tr(M U_f rho U_f^dagger)`. The oracle is diagonal, so the
/// evolved state is `s_k rho_kj s_j` and is never materialized.
pub fn expectation(m: &Operator, rho: &DensityMatrix, f: &BoolFunc) -> Result<f64> {
    check_same_dim(m.dim(), f.len())?;
    check_same_dim(m.dim(), rho.dim())?;
    if !m.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: m.max_abs_diff(&m.adjoint())?,
        });
    }
    let s = f.signs();
    let (me, re) = (m.entries(), rho.op().entries());
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in 0..m.dim() {
        for j in 0..m.dim() {
            let t = me[(j, k)] * re[(k, j)];
            acc += t * (s[j] * s[k]);
            scale += t.re.abs() + t.im.abs();
        }
    }
    real_part_checked(acc, scale)
}

/// `S_B(f)`. In debug builds the double sum is cross-checked against the
/// trace-plus-symmetrized-upper-triangle form.
pub fn s_functional(b: &Operator, f: &BoolFunc) -> Result<Complex64> {
    check_same_dim(b.dim(), f.len())?;
    let s = f.signs();
    let e = b.entries();
    let dim = b.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        let mut col = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            col += e[(j, k)] * s[j];
        }
        acc += col * s[k];
    }
    debug_assert!({
        let mut alt = b.trace();
        for j in 0..dim {
            for k in j + 1..dim {
                alt += (e[(j, k)] + e[(k, j)]) * (s[j] * s[k]);
            }
        }
        (alt - acc).norm() <= 1e-9 * (1.0 + b.max_abs() * (dim * dim) as f64)
    });
    Ok(acc)
}

/// `B(rho, M)_jk = M_jk rho_kj`, so that `E(f) = S_B(f)`.
pub fn b_matrix(rho: &DensityMatrix, m: &Operator) -> Result<Operator> {
    check_same_dim(m.dim(), rho.dim())?;
    m.hadamard(&rho.op().transpose())
}

/// `1e-10 * max|B_jk| * N^2`, the scale of accumulated rounding in `S_B`.
pub fn default_balance_tol(b: &Operator) -> f64 {
    let dim = b.dim() as f64;
    1e-10 * b.max_abs() * dim * dim
}

/// `f` is balanced with respect to `B` when `|S_B(f)| <= tol`.
pub fn is_balanced_wrt(f: &BoolFunc, b: &Operator, tol: f64) -> Result<bool> {
    Ok(s_functional(b, f)?.norm() <= tol)
}

fn checked_range(m: &Operator) -> Result<f64> {
    let lambda = spectral_range(m)?;
    if lambda <= 1e-14 * m.max_abs().max(1.0) {
        return Err(Error::DegenerateMeasurement);
    }
    Ok(lambda)
}

/// Resolution predicate `|Tr(M rho1) - Tr(M rho2)| > eps * Lambda(M)`.
pub fn distinguishable(
    m: &Operator,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    eps: Resolution,
) -> Result<bool> {
    let lambda = checked_range(m)?;
    let gap = (measure(m, rho1)? - measure(m, rho2)?).abs();
    Ok(gap > eps.value() * lambda)
}

/// Closed form of `E(f_0) - E(f_1)` under `|w><w|` on the pure `|w>` start,
/// where `f_1` has a single one: `2^{2-n} (1 - 2^{-n})`.
pub fn satisfiability_gap(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("bit count must be positive"));
    }
    let inv = 0.5f64.powi(n as i32);
    Ok(4.0 * inv * (1.0 - inv))
}

/// Maps `e` onto an exclusion. `exclusion_if_constant` is what a value
/// consistent with a constant function rules out.
fn decide(
    e: f64,
    constant_refs: &[f64],
    alternative: f64,
    margin: f64,
    exclusion_if_constant: Decision,
) -> (Decision, f64) {
    let nearest = constant_refs
        .iter()
        .copied()
        .min_by(|a, b| (e - a).abs().total_cmp(&(e - b).abs()))
        .expect("at least one constant reference");
    let dc = (e - nearest).abs();
    let da = (e - alternative).abs();
    let decision = match (dc <= margin, da <= margin) {
        (true, true) => Decision::Inconclusive,
        (true, false) => exclusion_if_constant,
        (false, true) => Decision::NotConstant,
        // resolvably away from both; exclude the farther class
        (false, false) if dc < da => exclusion_if_constant,
        (false, false) => Decision::NotConstant,
    };
    (decision, nearest)
}

/// Deutsch-Jozsa on the pseudopure start with the `|w><w|` measurement.
pub fn dj_decide_pseudopure(f: &BoolFunc, alpha: f64, eps: Resolution) -> Result<Verdict> {
    let n = f.n();
    let m = w_projector(n)?;
    let rho = pseudopure(n, alpha)?;
    let lambda = checked_range(&m)?;
    let e = expectation(&m, &rho, f)?;
    let constants = [
        expectation(&m, &rho, &BoolFunc::zeros(n)?)?,
        expectation(&m, &rho, &BoolFunc::ones(n)?)?,
    ];
    let balanced = expectation(&m, &rho, &canonical_balanced(n)?)?;
    let (decided, gap_reference) = decide(
        e,
        &constants,
        balanced,
        eps.value() * lambda,
        Decision::NotBalanced,
    );
    Ok(Verdict {
        decided,
        expectation: e,
        gap_reference,
        alternative_reference: balanced,
        resolution: eps,
        lambda,
        n,
    })
}

/// Constant versus `C_N` on the pulsed thermal start, measuring `F_x`.
pub fn cn_decide_thermal(f: &BoolFunc, sys: &SpinSystem, eps: Resolution) -> Result<Verdict> {
    let n = f.n();
    if n < 2 {
        return Err(Error::ClassUndefined { n });
    }
    check_same_dim(sys.n(), n)?;
    let m = total_spin(n, Axis::X)?;
    let rho = pulsed_thermal(sys)?;
    let lambda = checked_range(&m)?;
    let e = expectation(&m, &rho, f)?;
    let constants = [
        expectation(&m, &rho, &BoolFunc::zeros(n)?)?,
        expectation(&m, &rho, &BoolFunc::ones(n)?)?,
    ];
    let cn = expectation(&m, &rho, &canonical_cn(n)?)?;
    let (decided, gap_reference) = decide(
        e,
        &constants,
        cn,
        eps.value() * lambda,
        Decision::NotInClass,
    );
    Ok(Verdict {
        decided,
        expectation: e,
        gap_reference,
        alternative_reference: cn,
        resolution: eps,
        lambda,
        n,
    })
}

/// Deutsch-Jozsa for `f` on `n - 1` bits using one extra spin: the oracle
/// acts with the lifted function on the pulsed thermal start and `I_x^1` is
/// measured.
pub fn dj_decide_lifted(f: &BoolFunc, sys: &SpinSystem, eps: Resolution) -> Result<Verdict> {
    let n = sys.n();
    check_same_dim(n, f.n() + 1)?;
    let m = single_spin(n, 1, Axis::X)?;
    let rho = pulsed_thermal(sys)?;
    let lambda = checked_range(&m)?;
    let e = expectation(&m, &rho, &f.lift()?)?;
    let inner = f.n();
    let constants = [
        expectation(&m, &rho, &BoolFunc::zeros(inner)?.lift()?)?,
        expectation(&m, &rho, &BoolFunc::ones(inner)?.lift()?)?,
    ];
    let balanced = expectation(&m, &rho, &canonical_balanced(inner)?.lift()?)?;
    let (decided, gap_reference) = decide(
        e,
        &constants,
        balanced,
        eps.value() * lambda,
        Decision::NotBalanced,
    );
    Ok(Verdict {
        decided,
        expectation: e,
        gap_reference,
        alternative_reference: balanced,
        resolution: eps,
        lambda,
        n,
    })
}
