//! Cloning machines that copy the computational and Fourier-dual bases
//! equally well.
//!
//! A cloner is described by a `d × d` amplitude matrix `a[m][n]` giving the
//! amplitude of a shift-`m`, phase-`n` error on Bob's copy. Both families
//! used here share the block form
//!
//! ```text
//!     v x … x
//!     x y … y
//!     ⋮ ⋮ ⋱ ⋮
//!     x y … y
//! ```
//!
//! with real `v, x, y`. The two-basis family leaves `y` free; the universal
//! family fixes `y = x` so that every mutually unbiased basis is copied with
//! the same fidelity. Eve's copy is governed by the same block form with
//! primed amplitudes obtained from a symplectic Fourier transform.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_range, QkdError, Result};
use crate::hilbert::root_of_unity;
use crate::EXACT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClonerKind {
    TwoBases,
    Universal,
}

/// Real amplitudes `(v, x, y)` of a block-form cloner in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClonerParams {
    pub d: usize,
    pub kind: ClonerKind,
    pub v: f64,
    pub x: f64,
    pub y: f64,
}

fn norm_sqr(d: usize, v: f64, x: f64, y: f64) -> f64 {
    let dm1 = (d - 1) as f64;
    v * v + 2.0 * dm1 * x * x + dm1 * dm1 * y * y
}

impl ClonerParams {
    /// Validated constructor. Amplitudes must be nonnegative and satisfy the
    /// normalization `v² + 2(d-1)x² + (d-1)²y² = 1`; universal cloners also
    /// need `y = x`.
    pub fn new(d: usize, kind: ClonerKind, v: f64, x: f64, y: f64) -> Result<Self> {
        check_dim(d)?;
        if v < 0.0 || x < 0.0 || y < 0.0 {
            return Err(QkdError::Precondition(format!(
                "cloner amplitudes must be nonnegative, got v={v}, x={x}, y={y}"
            )));
        }
        if kind == ClonerKind::Universal && (x - y).abs() > EXACT_TOL {
            return Err(QkdError::Precondition(format!(
                "universal cloner needs x = y, got x={x}, y={y}"
            )));
        }
        let p = ClonerParams { d, kind, v, x, y };
        p.check_normalized()?;
        Ok(p)
    }

    /// Two-basis cloner with Bob fidelity `f` and a chosen `v`; `x` and `y`
    /// follow from the fidelity and normalization constraints.
    ///
    /// Valid `v` lie in `[sqrt(max(0, 2f-1)), sqrt(f)]`.
    pub fn two_basis_with_v(d: usize, f: f64, v: f64) -> Result<Self> {
        check_dim(d)?;
        check_range("F", f, 1.0 / d as f64, 1.0)?;
        let lo = (2.0 * f - 1.0).max(0.0).sqrt();
        check_range("v", v, lo, f.sqrt())?;
        let dm1 = (d - 1) as f64;
        let x = ((f - v * v).max(0.0) / dm1).sqrt();
        let y = (1.0 - 2.0 * f + v * v).max(0.0).sqrt() / dm1;
        ClonerParams::new(d, ClonerKind::TwoBases, v, x, y)
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(self.d, self.v, self.x, self.y)
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > EXACT_TOL {
            return Err(QkdError::Precondition(format!(
                "cloner normalization is {n}, expected 1"
            )));
        }
        Ok(())
    }

    /// Bob's fidelity `v² + (d-1)x²`.
    pub fn bob_fidelity(&self) -> f64 {
        self.v * self.v + (self.d - 1) as f64 * self.x * self.x
    }
}

/// Optimal two-basis cloner for Bob fidelity `f ∈ [1/d, 1]`:
/// `v = f`, `x = sqrt(f(1-f)/(d-1))`, `y = (1-f)/(d-1)`.
pub fn two_basis_optimal(d: usize, f: f64) -> Result<ClonerParams> {
    check_dim(d)?;
    check_range("F", f, 1.0 / d as f64, 1.0)?;
    let dm1 = (d - 1) as f64;
    let v = f;
    let x = (f * (1.0 - f) / dm1).max(0.0).sqrt();
    let y = (1.0 - f) / dm1;
    ClonerParams::new(d, ClonerKind::TwoBases, v, x, y)
}

/// Asymmetric universal cloner for Bob fidelity `f ∈ [1/(d+1), 1]`:
/// `x = y = sqrt((1-f)/(d(d-1)))`, `v = sqrt(((d+1)f - 1)/d)`.
pub fn universal_from_f(d: usize, f: f64) -> Result<ClonerParams> {
    check_dim(d)?;
    check_range("F", f, 1.0 / (d + 1) as f64, 1.0)?;
    let df = d as f64;
    let x = ((1.0 - f) / (df * (df - 1.0))).max(0.0).sqrt();
    let v = (((df + 1.0) * f - 1.0) / df).max(0.0).sqrt();
    ClonerParams::new(d, ClonerKind::Universal, v, x, x)
}

/// Amplitudes `(v', x', y')` of the block-form matrix describing Eve's
/// copy. The primed amplitudes can be negative even when the input ones are
/// not, so the result is not passed through [`ClonerParams::new`].
pub fn eve_params(p: &ClonerParams) -> ClonerParams {
    let d = p.d as f64;
    let (v, x, y) = (p.v, p.x, p.y);
    match p.kind {
        ClonerKind::TwoBases => ClonerParams {
            d: p.d,
            kind: p.kind,
            v: (v + 2.0 * (d - 1.0) * x + (d - 1.0) * (d - 1.0) * y) / d,
            x: (v + (d - 2.0) * x + (1.0 - d) * y) / d,
            y: (v - 2.0 * x + y) / d,
        },
        ClonerKind::Universal => {
            let xp = (v - x) / d;
            ClonerParams {
                d: p.d,
                kind: p.kind,
                v: (v + (d * d - 1.0) * x) / d,
                x: xp,
                y: xp,
            }
        }
    }
}

/// Eve's fidelity for the optimal two-basis cloner, in closed form:
/// `F/d + (d-1)(1-F)/d + (2/d) sqrt((d-1) F (1-F))`.
pub fn two_basis_eve_fidelity(d: usize, f: f64) -> Result<f64> {
    check_dim(d)?;
    check_range("F", f, 1.0 / d as f64, 1.0)?;
    let df = d as f64;
    Ok(f / df + (df - 1.0) * (1.0 - f) / df + 2.0 / df * ((df - 1.0) * f * (1.0 - f)).max(0.0).sqrt())
}

/// Eve's fidelity for the universal cloner with Bob fidelity `f`,
/// `1 - d(d-1) x'²`.
pub fn universal_eve_fidelity(d: usize, f: f64) -> Result<f64> {
    let eve = eve_params(&universal_from_f(d, f)?);
    let df = d as f64;
    Ok(1.0 - df * (df - 1.0) * eve.x * eve.x)
}

/// Amplitude matrix `a[m][n]`, row `m` the shift index and column `n` the
/// phase index.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMatrix {
    d: usize,
    entries: DMatrix<Complex64>,
}

impl AmplitudeMatrix {
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self> {
        let d = entries.nrows();
        check_dim(d)?;
        if entries.ncols() != d {
            return Err(QkdError::Dimension {
                expected: d,
                got: entries.ncols(),
            });
        }
        let m = AmplitudeMatrix { d, entries };
        let n = m.norm_sqr();
        if (n - 1.0).abs() > EXACT_TOL {
            return Err(QkdError::Precondition(format!(
                "amplitude matrix squared norm {n}, expected 1"
            )));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    /// Squared Frobenius norm `Σ |a_{m,n}|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of a shift error `m`, `Σ_n |a_{m,n}|²`.
    pub fn shift_error_probability(&self, m: usize) -> f64 {
        self.entries.row(m).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of a phase error `n`, `Σ_m |a_{m,n}|²`.
    pub fn phase_error_probability(&self, n: usize) -> f64 {
        self.entries.column(n).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest imaginary part among the entries.
    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &AmplitudeMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Recovers `(v, x, y)` if the matrix has the real block form within
    /// `tol`.
    pub fn block_params(&self, tol: f64) -> Option<(f64, f64, f64)> {
        if self.max_imag() > tol {
            return None;
        }
        let d = self.d;
        let v = self.get(0, 0).re;
        let x = self.get(0, 1).re;
        let y = self.get(1, 1).re;
        for m in 0..d {
            for n in 0..d {
                let want = match (m, n) {
                    (0, 0) => v,
                    (0, _) | (_, 0) => x,
                    _ => y,
                };
                if (self.get(m, n).re - want).abs() > tol {
                    return None;
                }
            }
        }
        Some((v, x, y))
    }
}

/// Block-form amplitude matrix of a cloner.
pub fn amplitude_matrix(p: &ClonerParams) -> AmplitudeMatrix {
    let d = p.d;
    let entries = DMatrix::from_fn(d, d, |m, n| {
        let a = match (m, n) {
            (0, 0) => p.v,
            (0, _) | (_, 0) => p.x,
            _ => p.y,
        };
        Complex64::new(a, 0.0)
    });
    AmplitudeMatrix { d, entries }
}

/// `b_{m,n} = (1/d) Σ_{m',n'} exp(2πi(n m' - m n')/d) a_{m',n'}`.
pub fn fourier_dual_amplitudes(a: &AmplitudeMatrix) -> AmplitudeMatrix {
    let d = a.d;
    let entries = DMatrix::from_fn(d, d, |m, n| {
        let mut acc = Complex64::new(0.0, 0.0);
        for mp in 0..d {
            for np in 0..d {
                let k = (n * mp) as i64 - (m * np) as i64;
                acc += root_of_unity(d, k) * a.entries[(mp, np)];
            }
        }
        acc / d as f64
    });
    AmplitudeMatrix { d, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Bob's fidelity for computational-basis inputs.
    pub f: f64,
    /// Bob's fidelity for Fourier-dual inputs.
    pub f_bar: f64,
    /// Eve's fidelity.
    pub f_e: f64,
    /// Disturbance `1 - F`.
    pub disturbance: f64,
}

/// Bob's fidelities from the row and column sums of the amplitude matrix
/// and Eve's fidelity from the primed amplitudes.
pub fn fidelities(p: &ClonerParams) -> FidelityReport {
    let a = amplitude_matrix(p);
    let f = a.shift_error_probability(0);
    let f_bar = a.phase_error_probability(0);
    let eve = eve_params(p);
    let f_e = eve.bob_fidelity();
    FidelityReport {
        f,
        f_bar,
        f_e,
        disturbance: 1.0 - f,
    }
}
