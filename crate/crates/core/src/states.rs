//! Starting density matrices: the high-temperature thermal state, the
//! pseudopure mixture, the thermal state after a hard 90-degree y pulse, and
//! the pure `|w>` state.
//!
//! Only the dimensionless products `theta * omega_i` enter any state, where
//! `theta = hbar / (k_B T)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::BoolFunc;
use crate::spinops::{check_spins, weighted_spin_sum, Axis, Operator};

/// Above this `theta * omega_i` the two-term expansion is a poor
/// approximation of the thermal exponential.
pub const HIGH_TEMPERATURE_LIMIT: f64 = 0.1;

/// Tolerance on hermiticity and unit trace for constructed states.
pub const STATE_TOL: f64 = 1e-10;

/// Weak scalar coupling `J_ij` between spins `i < j` (1-based), in cycles
/// per unit time; it enters the Hamiltonian as `2 pi J_ij I_z^i I_z^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

impl From<(usize, usize, f64)> for Coupling {
    fn from((i, j, strength): (usize, usize, f64)) -> Self {
        Coupling { i, j, strength }
    }
}

impl From<Coupling> for (usize, usize, f64) {
    fn from(c: Coupling) -> Self {
        (c.i, c.j, c.strength)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpinSystem")]
pub struct SpinSystem {
    n: usize,
    omega: Vec<f64>,
    theta: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    couplings: Vec<Coupling>,
}

#[derive(Deserialize)]
struct RawSpinSystem {
    n: usize,
    omega: Vec<f64>,
    theta: f64,
    #[serde(default)]
    couplings: Vec<Coupling>,
}

impl TryFrom<RawSpinSystem> for SpinSystem {
    type Error = Error;

    fn try_from(raw: RawSpinSystem) -> Result<Self> {
        SpinSystem::with_couplings(raw.n, raw.omega, raw.theta, raw.couplings)
    }
}

impl SpinSystem {
    pub fn new(n: usize, omega: Vec<f64>, theta: f64) -> Result<Self> {
        Self::with_couplings(n, omega, theta, Vec::new())
    }

    pub fn with_couplings(
        n: usize,
        omega: Vec<f64>,
        theta: f64,
        couplings: Vec<Coupling>,
    ) -> Result<Self> {
        check_spins(n)?;
        if omega.len() != n {
            return Err(Error::invalid(format!(
                "{} frequencies given for {n} spins",
                omega.len()
            )));
        }
        if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("frequency {w} is not positive")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid(format!("theta {theta} is not positive")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &couplings {
            if !(1 <= c.i && c.i < c.j && c.j <= n) {
                return Err(Error::invalid(format!(
                    "coupling ({}, {}) must satisfy 1 <= i < j <= {n}",
                    c.i, c.j
                )));
            }
            if !c.strength.is_finite() {
                return Err(Error::invalid("coupling strength is not finite"));
            }
            if !seen.insert((c.i, c.j)) {
                return Err(Error::invalid(format!(
                    "duplicate coupling ({}, {})",
                    c.i, c.j
                )));
            }
        }
        let max_product = omega.iter().map(|w| w * theta).fold(0.0, f64::max);
        if max_product > HIGH_TEMPERATURE_LIMIT {
            log::warn!(
                "theta*omega = {max_product:.3} exceeds {HIGH_TEMPERATURE_LIMIT}; \
                 high-temperature expansion is inaccurate"
            );
        }
        Ok(SpinSystem {
            n,
            omega,
            theta,
            couplings,
        })
    }

    /// Demo system: frequencies spread evenly over `[2 pi 400, 2 pi 600]`
    /// with `theta * omega_i` between roughly `6e-5` and `1e-4`.
    pub fn demo(n: usize) -> Result<Self> {
        check_spins(n)?;
        let omega = (0..n)
            .map(|i| {
                let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                2.0 * PI * (400.0 + 200.0 * frac)
            })
            .collect();
        Self::new(n, omega, 2.5e-8)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("spin system: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `theta * omega_i` for each spin.
    pub fn polarizations(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w * self.theta).collect()
    }
}

/// Trace-one hermitian operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: op.max_abs_diff(&op.adjoint())?,
            });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
        }
        Ok(DensityMatrix { op })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.op.get(j, k)
    }

    /// `U_f rho U_f^dagger`, applied as sign flips since the oracle is
    /// diagonal.
    pub fn apply_oracle(&self, f: &BoolFunc) -> Result<DensityMatrix> {
        self.op.check_dim(f.len())?;
        let s = f.signs();
        let m = DMatrix::from_fn(self.dim(), self.dim(), |j, k| {
            self.op.get(j, k) * (s[j] * s[k])
        });
        Ok(DensityMatrix {
            op: Operator::from_matrix(m)?,
        })
    }

    /// `U rho U^dagger` for a unitary `U`.
    pub fn evolve(&self, u: &Operator) -> Result<DensityMatrix> {
        if !u.is_unitary() {
            return Err(Error::invalid("evolution operator is not unitary"));
        }
        DensityMatrix::new(self.op.conjugate_by(u)?)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.spectrum().expect("hermitian by construction").min()
    }

    /// On-demand positivity diagnostic; the truncated thermal expansion can
    /// go negative for large `theta * omega`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

fn scaled_identity_plus(dim: usize, scale: f64, extra: Option<&Operator>) -> Result<Operator> {
    let mut m = DMatrix::from_fn(dim, dim, |j, k| {
        if j == k {
            Complex64::new(scale, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    if let Some(x) = extra {
        m += x.entries();
    }
    Operator::from_matrix(m)
}

/// `rho_eq = N^{-1} 1 - (theta / N) sum_i omega_i I_z^i`.
pub fn thermal_state(sys: &SpinSystem) -> Result<DensityMatrix> {
    let dim = sys.dim();
    let weights: Vec<f64> = sys.omega.iter().map(|w| -sys.theta * w / dim as f64).collect();
    let dev = weighted_spin_sum(sys.n, Axis::Z, &weights)?;
    DensityMatrix::new(scaled_identity_plus(dim, 1.0 / dim as f64, Some(&dev))?)
}

/// `(1 - alpha/N) N^{-1} 1 + (alpha / N) |w><w|`.
pub fn pseudopure(n: usize, alpha: f64) -> Result<DensityMatrix> {
    let dim = check_spins(n)?;
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha is not finite"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        log::warn!("pseudopure alpha = {alpha} outside (0, 1]");
    }
    let nf = dim as f64;
    let diag = (1.0 - alpha / nf) / nf;
    let w = alpha / (nf * nf);
    let m = DMatrix::from_fn(dim, dim, |j, k| {
        Complex64::new(if j == k { diag + w } else { w }, 0.0)
    });
    DensityMatrix::new(Operator::from_matrix(m)?)
}

/// Thermal state after an ideal hard 90-degree y pulse,
/// `N^{-1} 1 - (theta / N) sum_i omega_i I_x^i`, built from the pulsed form
/// directly rather than by propagating the pulse.
pub fn pulsed_thermal(sys: &SpinSystem) -> Result<DensityMatrix> {
    let dim = sys.dim();
    let weights: Vec<f64> = sys.omega.iter().map(|w| -sys.theta * w / dim as f64).collect();
    let dev = weighted_spin_sum(sys.n, Axis::X, &weights)?;
    DensityMatrix::new(scaled_identity_plus(dim, 1.0 / dim as f64, Some(&dev))?)
}

/// Pure `|w><w|`.
pub fn pure_w(n: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(crate::spinops::w_projector(n)?)
}

/// Exact propagator of a hard 90-degree y pulse on every spin:
/// `exp(-i (pi/2) F_y)`, the n-fold tensor power of `[[c, -s], [s, c]]` with
/// `c = s = 2^{-1/2}`.
pub fn hard_pulse_90y(n: usize) -> Result<Operator> {
    let dim = check_spins(n)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = DMatrix::from_fn(dim, dim, |l, k| {
        // product over spins of the 2x2 entry R[bit_l][bit_k]
        let mut v = 1.0;
        for b in 0..n {
            let (bl, bk) = (l >> b & 1, k >> b & 1);
            v *= if bl == 1 && bk == 0 { h } else if bl == 0 && bk == 1 { -h } else { h };
        }
        Complex64::new(v, 0.0)
    });
    Ok(Operator::from_matrix(m)?.verify_unitary())
}

/// Random full-rank density matrix `A A^dagger / Tr(A A^dagger)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let mut m = &a * a.adjoint();
    let tr = m.trace().re;
    m /= Complex64::new(tr, 0.0);
    // exact hermitian symmetrization so the flag check cannot fail on noise
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(Operator::from_matrix(m).expect("square")).expect("valid by construction")
}

/// Sum of `omega_i I_z^i`, the Zeeman part of the Hamiltonian in units of
/// angular frequency.
pub(crate) fn zeeman(sys: &SpinSystem) -> Result<Operator> {
    weighted_spin_sum(sys.n, Axis::Z, &sys.omega)
}
