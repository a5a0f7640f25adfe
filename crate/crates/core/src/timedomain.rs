//! Time-domain signal: the measured observable is evolved in the Heisenberg
//! picture under a diagonal Zeeman + weak-coupling Hamiltonian, sampled at
//! `t_k = k dt`, and Fourier transformed. Units have `hbar = 1`; frequencies
//! are angular. No relaxation.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spinops::Operator;
use crate::states::{zeeman, DensityMatrix, SpinSystem};

/// Default relative threshold for [`peaks`].
pub const PEAK_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    op: Operator,
    source: SpinSystem,
}

impl Hamiltonian {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn source(&self) -> &SpinSystem {
        &self.source
    }

    pub fn energies(&self) -> Vec<f64> {
        self.op.diagonal_real()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// `H = sum_i omega_i I_z^i + sum_{i<j} 2 pi J_ij I_z^i I_z^j`.
pub fn hamiltonian(sys: &SpinSystem) -> Result<Hamiltonian> {
    let n = sys.n();
    let z = |l: usize, i: usize| if l >> (n - i) & 1 == 0 { 0.5 } else { -0.5 };
    let mut energies = zeeman(sys)?.diagonal_real();
    for (l, e) in energies.iter_mut().enumerate() {
        for c in sys.couplings() {
            *e += 2.0 * PI * c.strength * z(l, c.i) * z(l, c.j);
        }
    }
    Ok(Hamiltonian {
        op: Operator::from_diagonal(&energies)?,
        source: sys.clone(),
    })
}

/// `e^{iHt} M e^{-iHt}` via the elementwise phases `e^{i(H_j - H_k)t}`.
pub fn heisenberg_op(m: &Operator, h: &Hamiltonian, t: f64) -> Result<Operator> {
    m.check_dim(h.dim())?;
    let e = h.energies();
    Operator::from_fn(m.dim(), |j, k| {
        m.get(j, k) * Complex64::from_polar(1.0, (e[j] - e[k]) * t)
    })
}

/// Same conjugation through a dense matrix exponential; valid for any
/// hermitian `h`. Used to cross-check the diagonal fast path.
pub fn heisenberg_op_dense(m: &Operator, h: &Operator, t: f64) -> Result<Operator> {
    m.check_dim(h.dim())?;
    let u = (h.entries() * Complex64::new(0.0, t)).exp();
    let evolved = &u * m.entries() * u.adjoint();
    Operator::from_matrix(evolved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl SignalTrace {
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

/// `samples[k] = Tr(rho M_{k dt})`.
///
/// Only the nonzero products `M_jk rho_kj` contribute, each rotating at
/// `H_j - H_k`, so samples cost one pass over those terms.
pub fn signal(
    rho: &DensityMatrix,
    h: &Hamiltonian,
    m: &Operator,
    dt: f64,
    count: usize,
) -> Result<SignalTrace> {
    m.check_dim(h.dim())?;
    m.check_dim(rho.dim())?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt {dt} must be positive")));
    }
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let e = h.energies();
    let dim = m.dim();
    let mut terms = Vec::new();
    for j in 0..dim {
        for k in 0..dim {
            let b = m.get(j, k) * rho.get(k, j);
            if b != Complex64::new(0.0, 0.0) {
                terms.push((b, e[j] - e[k]));
            }
        }
    }
    let scale: f64 = terms.iter().map(|(b, _)| b.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale.max(1.0);
    let samples = (0..count)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * dt;
            let z: Complex64 = terms
                .iter()
                .map(|(b, freq)| b * Complex64::from_polar(1.0, freq * t))
                .sum();
            if z.im.abs() > tol {
                return Err(Error::ImaginaryResidue {
                    residue: z.im.abs(),
                    tol,
                });
            }
            Ok(z.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SignalTrace {
        t_start: 0.0,
        dt,
        samples,
    })
}

/// DFT magnitudes `|X_m| / sqrt(K)` against angular frequency, ascending
/// from the most negative bin.
pub fn spectrum(trace: &SignalTrace) -> Result<Vec<(f64, f64)>> {
    let len = trace.len();
    if len < 2 {
        return Err(Error::invalid("spectrum needs at least two samples"));
    }
    let mut buf: Vec<Complex64> = trace.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let norm = (len as f64).sqrt().recip();
    let step = 2.0 * PI / (len as f64 * trace.dt);
    let mut out: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(m, x)| {
            let signed = if m < len.div_ceil(2) { m as f64 } else { m as f64 - len as f64 };
            (signed * step, x.norm() * norm)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Local maxima of a spectrum at or above `rel` times its largest magnitude.
pub fn peaks(spec: &[(f64, f64)], rel: f64) -> Vec<(f64, f64)> {
    let max = spec.iter().map(|p| p.1).fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let floor = rel * max;
    (0..spec.len())
        .filter(|&i| {
            let v = spec[i].1;
            let left = i.checked_sub(1).map_or(f64::NEG_INFINITY, |l| spec[l].1);
            let right = spec.get(i + 1).map_or(f64::NEG_INFINITY, |r| r.1);
            v >= floor && v >= left && v > right
        })
        .map(|i| spec[i])
        .collect()
}

/// Shortest round-trip text for `x`, switching to exponent form for very
/// small or very large magnitudes.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_trace_csv<W: Write>(trace: &SignalTrace, mut w: W) -> io::Result<()> {
    writeln!(w, "k,t,value")?;
    for (k, v) in trace.samples.iter().enumerate() {
        writeln!(w, "{k},{},{}", format_real(trace.time(k)), format_real(*v))?;
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(spec: &[(f64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "omega,magnitude")?;
    for (omega, mag) in spec {
        writeln!(w, "{},{}", format_real(*omega), format_real(*mag))?;
    }
    Ok(())
}
