//! Dense operators on the `N = 2^n` dimensional register: spin-1/2 product
//! operators, the `|w><w|` projector, oracle unitaries, and spectral tools.
//!
//! Spin 1 is the leftmost tensor factor, i.e. the most significant bit of the
//! computational index. With that ordering the lower half of the index range
//! is exactly the spin-up sector of spin 1.

use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::BoolFunc;

/// Largest spin count with dense storage (`N = 4096`).
pub const MAX_SPINS: usize = 12;

/// Relative tolerance for the structural flags.
pub const STRUCTURE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Structural facts established at construction. `unitary` is only set when
/// a constructor knows it or [`Operator::verify_unitary`] has checked it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    pub hermitian: bool,
    pub diagonal: bool,
    pub unitary: bool,
}

#[derive(Debug, Clone)]
pub struct Operator {
    m: DMatrix<Complex64>,
    flags: Flags,
    spectrum: OnceLock<EigenSpectrum>,
}

/// Sorted (ascending) real eigenvalues of a hermitian operator, with
/// multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

pub(crate) fn check_spins(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::invalid(format!(
            "spin count n = {n} outside 1..={MAX_SPINS}"
        )));
    }
    Ok(1 << n)
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    dev
}

impl Operator {
    fn with_flags(m: DMatrix<Complex64>, flags: Flags) -> Self {
        Operator {
            m,
            flags,
            spectrum: OnceLock::new(),
        }
    }

    /// Wraps a square matrix, detecting hermiticity and diagonality.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        let tol = STRUCTURE_TOL * max_abs(&m).max(1.0);
        let hermitian = hermitian_deviation(&m) <= tol;
        let diagonal = m
            .iter()
            .enumerate()
            .all(|(idx, z)| idx % m.nrows() == idx / m.nrows() || z.norm() <= tol);
        Ok(Self::with_flags(
            m,
            Flags {
                hermitian,
                diagonal,
                unitary: false,
            },
        ))
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Real diagonal operator.
    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        let m = DMatrix::from_fn(d.len(), d.len(), |j, k| {
            if j == k {
                Complex64::new(d[j], 0.0)
            } else {
                ZERO
            }
        });
        let unitary = d.iter().all(|x| (x.abs() - 1.0).abs() <= STRUCTURE_TOL);
        Ok(Self::with_flags(
            m,
            Flags {
                hermitian: true,
                diagonal: true,
                unitary,
            },
        ))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.m
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.m[(j, k)]
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn is_hermitian(&self) -> bool {
        self.flags.hermitian
    }

    pub fn is_diagonal(&self) -> bool {
        self.flags.diagonal
    }

    /// Returns the cached flag, or checks `M M^dagger = 1` within tolerance.
    pub fn is_unitary(&self) -> bool {
        self.flags.unitary || self.unitary_deviation() <= 1e-10 * self.dim() as f64
    }

    fn unitary_deviation(&self) -> f64 {
        let prod = &self.m * self.m.adjoint();
        max_abs(&(prod - DMatrix::identity(self.dim(), self.dim())))
    }

    /// Checks unitarity and caches a positive result.
    pub fn verify_unitary(mut self) -> Self {
        if self.unitary_deviation() <= 1e-10 * self.dim() as f64 {
            self.flags.unitary = true;
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_dim(other.dim())?;
        Ok(max_abs(&(&self.m - &other.m)))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn adjoint(&self) -> Operator {
        Self::with_flags(self.m.adjoint(), self.flags)
    }

    /// Plain transpose, no conjugation.
    pub fn transpose(&self) -> Operator {
        Self::from_matrix(self.m.transpose()).expect("square")
    }

    pub fn scale(&self, c: f64) -> Operator {
        let mut flags = self.flags;
        flags.unitary = false;
        Self::with_flags(self.m.map(|z| z * c), flags)
    }

    pub fn scale_complex(&self, c: Complex64) -> Operator {
        Self::from_matrix(self.m.map(|z| z * c)).expect("square")
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Self::from_matrix(&self.m + &other.m)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Self::from_matrix(&self.m - &other.m)
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Self::from_matrix(&self.m * &other.m)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Self::from_matrix(self.m.component_mul(&other.m))
    }

    /// `V M V^dagger`.
    pub fn conjugate_by(&self, v: &Operator) -> Result<Operator> {
        self.check_dim(v.dim())?;
        let mut out = Self::from_matrix(&v.m * &self.m * v.m.adjoint())?;
        // numerical noise can break exact hermiticity detection on large inputs
        if self.flags.hermitian && v.flags.unitary {
            out.flags.hermitian = true;
        }
        Ok(out)
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Self::from_matrix(self.m.kronecker(&other.m)).expect("square")
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    /// Real diagonal part.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.m[(j, j)].re).collect()
    }

    fn require_hermitian(&self) -> Result<()> {
        if !self.flags.hermitian {
            return Err(Error::NotHermitian {
                deviation: hermitian_deviation(&self.m),
            });
        }
        Ok(())
    }

    /// Cached eigenvalue multiset (hermitian operators only).
    pub fn spectrum(&self) -> Result<&EigenSpectrum> {
        self.require_hermitian()?;
        Ok(self.spectrum.get_or_init(|| compute_spectrum(self)))
    }

    /// Text dump: a `dim <N>` header, then one `re,im` line per entry in
    /// row-major order with 17 significant digits.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "dim {}", self.dim()).unwrap();
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                let z = self.m[(j, k)];
                writeln!(s, "{:.16e},{:.16e}", z.re, z.im).unwrap();
            }
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Operator> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("empty operator dump"))?;
        let dim: usize = header
            .strip_prefix("dim ")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| Error::parse(format!("bad dump header '{header}'")))?;
        let mut data = Vec::with_capacity(dim * dim);
        for line in lines {
            let (re, im) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("bad dump entry '{line}'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(format!("bad number '{s}': {e}")))
            };
            data.push(Complex64::new(parse(re)?, parse(im)?));
        }
        if data.len() != dim * dim {
            return Err(Error::parse(format!(
                "dump has {} entries, expected {}",
                data.len(),
                dim * dim
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, &data))
    }
}

fn compute_spectrum(op: &Operator) -> EigenSpectrum {
    let mut values: Vec<f64> = if op.flags.diagonal {
        op.diagonal_real()
    } else if op.m.iter().all(|z| z.im == 0.0) {
        op.m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        op.m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    EigenSpectrum { values }
}

impl EigenSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Largest entrywise gap between two sorted multisets, or `None` on a
    /// cardinality mismatch.
    pub fn max_deviation(&self, other: &EigenSpectrum) -> Option<f64> {
        (self.len() == other.len()).then(|| {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }

    /// Distinct values (merged within `tol`) with multiplicities.
    pub fn distinct(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some((last, count)) if (v - *last).abs() <= tol => *count += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

/// `I^i_axis` on `n` spins: identity on every factor except spin `i`
/// (1-based), which carries the Pauli matrix divided by two.
pub fn single_spin(n: usize, i: usize, axis: Axis) -> Result<Operator> {
    let dim = check_spins(n)?;
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, bound: n });
    }
    let bit = 1usize << (n - i);
    let half = 0.5;
    let m = DMatrix::from_fn(dim, dim, |l, k| match axis {
        Axis::X if l ^ k == bit => Complex64::new(half, 0.0),
        // <0|I_y|1> = -i/2, <1|I_y|0> = +i/2
        Axis::Y if l ^ k == bit => {
            if l & bit == 0 {
                Complex64::new(0.0, -half)
            } else {
                Complex64::new(0.0, half)
            }
        }
        Axis::Z if l == k => {
            if l & bit == 0 {
                Complex64::new(half, 0.0)
            } else {
                Complex64::new(-half, 0.0)
            }
        }
        _ => ZERO,
    });
    Ok(Operator::with_flags(
        m,
        Flags {
            hermitian: true,
            diagonal: axis == Axis::Z,
            unitary: false,
        },
    ))
}

/// `F_axis = sum_i I^i_axis`.
pub fn total_spin(n: usize, axis: Axis) -> Result<Operator> {
    let mut acc = single_spin(n, 1, axis)?.m;
    for i in 2..=n {
        acc += single_spin(n, i, axis)?.m;
    }
    Ok(Operator::with_flags(
        acc,
        Flags {
            hermitian: true,
            diagonal: axis == Axis::Z,
            unitary: false,
        },
    ))
}

/// Weighted sum `sum_i weights[i-1] I^i_axis`.
pub fn weighted_spin_sum(n: usize, axis: Axis, weights: &[f64]) -> Result<Operator> {
    let dim = check_spins(n)?;
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    let mut acc = DMatrix::from_element(dim, dim, ZERO);
    for (idx, &w) in weights.iter().enumerate() {
        acc += single_spin(n, idx + 1, axis)?.m * Complex64::new(w, 0.0);
    }
    Ok(Operator::with_flags(
        acc,
        Flags {
            hermitian: true,
            diagonal: axis == Axis::Z,
            unitary: false,
        },
    ))
}

/// `|w><w|` with `|w> = N^{-1/2} sum_j |j>`: every entry `1/N`.
pub fn w_projector(n: usize) -> Result<Operator> {
    let dim = check_spins(n)?;
    let v = Complex64::new(1.0 / dim as f64, 0.0);
    Ok(Operator::with_flags(
        DMatrix::from_element(dim, dim, v),
        Flags {
            hermitian: true,
            diagonal: dim == 1,
            unitary: false,
        },
    ))
}

/// Diagonal oracle `U_f |j> = (-1)^f(j) |j>`.
pub fn oracle(f: &BoolFunc) -> Result<Operator> {
    check_spins(f.n())?;
    Operator::from_diagonal(&f.signs())
}

pub fn spectral_range(m: &Operator) -> Result<f64> {
    Ok(m.spectrum()?.range())
}

pub fn eig_multiset(m: &Operator) -> Result<EigenSpectrum> {
    m.spectrum().cloned()
}

/// Default multiset comparison tolerance, `1e-9 * N`.
pub fn default_eig_tol(dim: usize) -> f64 {
    1e-9 * dim as f64
}

/// Hermitian operators are unitarily equivalent iff their sorted spectra
/// agree.
pub fn unitarily_equivalent(m1: &Operator, m2: &Operator, tol: f64) -> Result<bool> {
    m1.check_dim(m2.dim())?;
    let dev = m1
        .spectrum()?
        .max_deviation(m2.spectrum()?)
        .expect("equal dimensions");
    Ok(dev <= tol)
}

/// Random hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let mut m = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    for j in 0..dim {
        m[(j, j)].im = 0.0;
    }
    let mut op = Operator::from_matrix(m).expect("square");
    op.flags.hermitian = true;
    op
}

/// Random unitary from the QR factorization of a random complex matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let q = raw.qr().q();
    let mut op = Operator::from_matrix(q).expect("square");
    op.flags.unitary = true;
    op
}
