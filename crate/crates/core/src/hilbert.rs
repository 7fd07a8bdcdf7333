//! Finite-dimensional Hilbert-space primitives for a single qudit and for
//! pairs of qudits.
//!
//! Index arithmetic is always modulo `d`. Multi-register amplitude vectors
//! are stored row-major with the first register most significant, so the
//! basis pair `(i, j)` of two qudits sits at offset `i * d + j`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_dim, QkdError, Result};
use crate::EXACT_TOL;

/// `exp(2πi k / d)`, with `k` reduced modulo `d` first.
pub fn root_of_unity(d: usize, k: i64) -> Complex64 {
    let k = wrap_index(k, d);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// Normalizes a possibly negative index into `[0, d)`.
pub fn wrap_index(i: i64, d: usize) -> usize {
    i.rem_euclid(d as i64) as usize
}

fn check_index(index: usize, dim: usize) -> Result<()> {
    if index >= dim {
        Err(QkdError::Index { index, dim })
    } else {
        Ok(())
    }
}

/// Normalized pure state of one qudit.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    dim: usize,
    amps: Vec<Complex64>,
}

impl Ket {
    /// Builds a ket from raw amplitudes, rejecting vectors that are not
    /// unit-norm within 1e-12.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        check_dim(dim)?;
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > EXACT_TOL {
            return Err(QkdError::Precondition(format!(
                "ket squared norm {norm_sqr} differs from 1"
            )));
        }
        Ok(Ket { dim, amps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.dim != other.dim {
            return Err(QkdError::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(inner(&self.amps, &other.amps))
    }

    /// `|⟨self|other⟩|`, which equals 1 exactly when the kets agree up to a
    /// global phase.
    pub fn overlap(&self, other: &Ket) -> Result<f64> {
        self.inner(other).map(|z| z.norm())
    }
}

/// The computational basis state `|k⟩`.
pub fn computational_ket(d: usize, k: usize) -> Result<Ket> {
    check_dim(d)?;
    check_index(k, d)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); d];
    amps[k] = Complex64::new(1.0, 0.0);
    Ok(Ket { dim: d, amps })
}

/// The Fourier-dual basis state `|l̄⟩ = d^{-1/2} Σ_k exp(2πi kl/d) |k⟩`.
pub fn fourier_dual_ket(d: usize, l: usize) -> Result<Ket> {
    check_dim(d)?;
    check_index(l, d)?;
    let norm = 1.0 / (d as f64).sqrt();
    let amps = (0..d).map(|k| root_of_unity(d, (k * l) as i64) * norm).collect();
    Ok(Ket { dim: d, amps })
}

/// Shift-and-phase error operator `U_{m,n} = Σ_k exp(2πi kn/d) |k+m⟩⟨k|`.
///
/// `m` counts shift errors, `n` counts phase errors. `U_{0,0}` is the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErrorOp {
    dim: usize,
    m: usize,
    n: usize,
}

impl ErrorOp {
    pub fn new(dim: usize, m: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        check_index(m, dim)?;
        check_index(n, dim)?;
        Ok(ErrorOp { dim, m, n })
    }

    /// Accepts arbitrary integer indices and reduces them modulo `dim`.
    pub fn wrapped(dim: usize, m: i64, n: i64) -> Result<Self> {
        check_dim(dim)?;
        Ok(ErrorOp {
            dim,
            m: wrap_index(m, dim),
            n: wrap_index(n, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> usize {
        self.m
    }

    pub fn phase(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        let mut u = DMatrix::zeros(d, d);
        for k in 0..d {
            u[((k + self.m) % d, k)] = root_of_unity(d, (k * self.n) as i64);
        }
        u
    }

    /// Applies the operator to raw amplitudes of length `dim`.
    pub fn apply_slice(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (k, &a) in psi.iter().enumerate() {
            out[(k + self.m) % d] = a * root_of_unity(d, (k * self.n) as i64);
        }
        out
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.dim != self.dim {
            return Err(QkdError::Dimension {
                expected: self.dim,
                got: psi.dim,
            });
        }
        Ok(Ket {
            dim: self.dim,
            amps: self.apply_slice(&psi.amps),
        })
    }
}

/// `U_{m,n}|ψ⟩`.
pub fn error_op_apply(op: &ErrorOp, psi: &Ket) -> Result<Ket> {
    op.apply(psi)
}

/// Generalized Bell state of two qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct BellKet {
    dim: usize,
    m: usize,
    n: usize,
    amps: Vec<Complex64>,
}

impl BellKet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Amplitudes over the `d²` basis pairs, first register most significant.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }
}

/// `|B_{m,n}⟩ = d^{-1/2} Σ_k exp(2πi kn/d) |k⟩|k+m⟩`.
pub fn bell_ket(d: usize, m: usize, n: usize) -> Result<BellKet> {
    check_dim(d)?;
    check_index(m, d)?;
    check_index(n, d)?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        amps[k * d + (k + m) % d] = root_of_unity(d, (k * n) as i64) * norm;
    }
    Ok(BellKet { dim: d, m, n, amps })
}

/// `Σ_i conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Reduced density matrix of register `keep` for a pure state over
/// registers of sizes `dims`.
pub fn reduced_density(amps: &[Complex64], dims: &[usize], keep: usize) -> DMatrix<Complex64> {
    assert!(keep < dims.len(), "register {keep} does not exist");
    assert_eq!(
        amps.len(),
        dims.iter().product::<usize>(),
        "amplitude count does not match register sizes"
    );
    let dk = dims[keep];
    let inner_size: usize = dims[keep + 1..].iter().product();
    let outer_size: usize = dims[..keep].iter().product();
    let mut rho = DMatrix::zeros(dk, dk);
    for outer in 0..outer_size {
        for rest in 0..inner_size {
            let base = outer * dk * inner_size + rest;
            for i in 0..dk {
                let ai = amps[base + i * inner_size];
                if ai == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dk {
                    rho[(i, j)] += ai * amps[base + j * inner_size].conj();
                }
            }
        }
    }
    rho
}

/// `⟨φ|ρ|φ⟩` for a normalized ket.
pub fn expectation(rho: &DMatrix<Complex64>, phi: &Ket) -> f64 {
    let a = phi.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.len() {
        for j in 0..a.len() {
            acc += a[i].conj() * rho[(i, j)] * a[j];
        }
    }
    acc.re
}
