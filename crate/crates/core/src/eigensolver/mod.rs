//! Eigenvalues and c-normalized right eigenvectors of complex-symmetric matrices.
//!
//! For `H = Hᵀ` the left eigenvectors are the complex conjugates of the right
//! ones, so only right eigenvectors are stored. They are normalized with the
//! bilinear c-product, `Σ_m (Φ_k)_m² = 1`, which makes distinct eigenvectors
//! c-orthogonal: `Σ_m (Φ_k)_m (Φ_l)_m = δ_kl`.
//!
//! At an exceptional point the coalescing eigenvector is self-orthogonal and
//! cannot be c-normalized. Such states keep a unit Hermitian-norm vector and
//! are flagged as degenerate.
//!
//! Three solvers are provided: closed forms for `N = 2` ([`solve2`]) and
//! `N = 3` ([`solve3`]), and [`solve_generic`] for any size, which also serves
//! as the independent reference for the closed forms.

mod closed_form;
mod generic;
mod normalize;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::ConcreteHamiltonian;

pub use closed_form::{solve2, solve3};
pub use generic::{solve_generic, solve_generic_with, GenericConfig};
pub use normalize::{
    c_dot, c_norm_ratio, c_normalize, fix_sign, h_dot, h_norm_sqr, hermitian_normalize,
    NormalizeError, SELF_ORTHOGONAL_TOL,
};

/// Relative eigenvalue splitting below which a 2×2 pair is flagged degenerate.
pub const DEGENERATE_GAP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is {got}×{got}, this solver needs {expected}×{expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("matrix must be at least 2×2")]
    TooSmall,
    #[error("eigenvalue iteration did not converge within {0} steps")]
    NoConvergence(usize),
}

/// Eigen-decomposition of one complex-symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSystem {
    /// `𝓔_k = E_k + (i/2)Γ_k`; the imaginary part is negative for decaying states.
    pub eigenvalues: Vec<Complex64>,
    /// c-normalized right eigenvectors; unit Hermitian norm for degenerate states.
    pub vectors: Vec<DVector<Complex64>>,
    /// `|Σ v_m²| / Σ |v_m|²` of each raw eigenvector before scaling.
    pub c_norm_ratio: Vec<f64>,
    /// Set where c-normalization was impossible (at or extremely near an EP).
    pub degenerate: Vec<bool>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Assembles a system from raw (unnormalized) eigenvectors.
    ///
    /// `force_degenerate[k]` marks states the solver already knows are
    /// coalesced, independent of the normalization outcome.
    pub(crate) fn from_raw(
        eigenvalues: Vec<Complex64>,
        raw: Vec<DVector<Complex64>>,
        force_degenerate: &[bool],
    ) -> Self {
        let n = eigenvalues.len();
        let mut vectors = Vec::with_capacity(n);
        let mut ratio = Vec::with_capacity(n);
        let mut degenerate = Vec::with_capacity(n);
        for (k, v) in raw.into_iter().enumerate() {
            match c_normalize(&v) {
                Ok((phi, r)) if !force_degenerate[k] => {
                    vectors.push(phi);
                    ratio.push(r);
                    degenerate.push(false);
                }
                _ => {
                    ratio.push(c_norm_ratio(&v));
                    vectors.push(hermitian_normalize(&v));
                    degenerate.push(true);
                }
            }
        }
        Self {
            eigenvalues,
            vectors,
            c_norm_ratio: ratio,
            degenerate,
        }
    }

    /// Eigenvalues and basis vectors of a diagonal matrix.
    pub(crate) fn diagonal(h: &ConcreteHamiltonian) -> Self {
        let n = h.dim();
        let eigenvalues = (0..n).map(|i| h.matrix[(i, i)]).collect();
        let raw = (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        Self::from_raw(eigenvalues, raw, &vec![false; n])
    }

    /// `‖H Φ_k − 𝓔_k Φ_k‖ / ‖Φ_k‖`.
    pub fn residual(&self, h: &ConcreteHamiltonian, k: usize) -> f64 {
        let v = &self.vectors[k];
        let r = &h.matrix * v - v * self.eigenvalues[k];
        (h_norm_sqr(&r) / h_norm_sqr(v)).sqrt()
    }

    pub fn max_residual(&self, h: &ConcreteHamiltonian) -> f64 {
        (0..self.dim())
            .map(|k| self.residual(h, k))
            .fold(0.0, f64::max)
    }

    pub fn eigenvalue_sum(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    /// Smallest `|𝓔_i − 𝓔_j|` over all pairs, with the pair.
    pub fn min_gap(&self) -> (f64, (usize, usize)) {
        let mut best = (f64::INFINITY, (0, 1));
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                let g = (self.eigenvalues[i] - self.eigenvalues[j]).norm();
                if g < best.0 {
                    best = (g, (i, j));
                }
            }
        }
        best
    }

    /// Hermitian-normalized copy of eigenvector `k`.
    pub fn unit_vector(&self, k: usize) -> DVector<Complex64> {
        hermitian_normalize(&self.vectors[k])
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

pub(crate) fn is_diagonal(h: &ConcreteHamiltonian) -> bool {
    let n = h.dim();
    (0..n).all(|i| (0..n).all(|j| i == j || h.matrix[(i, j)] == Complex64::new(0.0, 0.0)))
}

/// Dispatches to the closed form for `N ≤ 3` and the generic solver otherwise.
pub fn solve(h: &ConcreteHamiltonian) -> Result<EigenSystem, EigenError> {
    match h.dim() {
        0 | 1 => Err(EigenError::TooSmall),
        2 => solve2(h),
        3 => solve3(h),
        _ => solve_generic(h),
    }
}

/// Alignment of two coalescing eigenvectors: `min_{s=±1} ‖Φ̂₁ − s·i·Φ̂₂‖`
/// with Hermitian-normalized `Φ̂`. Tends to zero at an EP.
pub fn alignment_defect(sys: &EigenSystem, i: usize, j: usize) -> f64 {
    let u = sys.unit_vector(i);
    let v = sys.unit_vector(j) * Complex64::new(0.0, 1.0);
    let plus = h_norm_sqr(&(&u - &v)).sqrt();
    let minus = h_norm_sqr(&(&u + &v)).sqrt();
    plus.min(minus)
}
