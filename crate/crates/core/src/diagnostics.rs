//! Biorthogonality observables of a solved system.
//!
//! With c-normalized eigenvectors (`Σ_m Φ_m² = 1`) the ordinary Hermitian
//! self-overlap `A_k = ⟨Φ_k|Φ_k⟩` is at least one and diverges at an
//! exceptional point. From it follow the phase rigidity `r_k = 1/A_k`, the
//! pair overlaps `B_i^j = ⟨Φ_i|Φ_j⟩`, and the mixing coefficients `b_ij` of
//! each eigenvector in the unperturbed (standard) basis.
//!
//! States flagged degenerate by the solver report `r = 0` and no `A`, `B` or
//! `b` values.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::eigensolver::{c_dot, h_dot, h_norm_sqr, EigenSystem};
use crate::hamiltonian::HamiltonianFamily;

/// Absolute tolerance on `Re⟨Φ_i|Φ_j⟩` for unit-sized vectors.
pub const OVERLAP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("overlap <Phi_{i}|Phi_{j}> = {value} is not purely imaginary")]
    OverlapAnomaly { i: usize, j: usize, value: Complex64 },
}

/// All per-state observables at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDiagnostics {
    /// `A_k = ⟨Φ_k|Φ_k⟩`.
    pub hermitian_norm: Vec<Option<f64>>,
    /// `r_k = 1/A_k`; zero for degenerate states.
    pub rigidity: Vec<f64>,
    /// `|B_i^j| = |⟨Φ_i|Φ_j⟩|` for `i ≠ j`.
    pub overlap_abs: Vec<Vec<Option<f64>>>,
    /// `|b_ij|`, row `i` is state `i`.
    pub mixing_abs: Vec<Option<Vec<f64>>>,
    /// `Σ_j |b_ij|²`.
    pub em_probability: Vec<Option<f64>>,
}

pub fn phase_rigidity(sys: &EigenSystem) -> Vec<f64> {
    (0..sys.dim())
        .map(|k| {
            if sys.degenerate[k] {
                0.0
            } else {
                1.0 / h_norm_sqr(&sys.vectors[k])
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mixing {
    /// `b_ij = (Φ_i)_j`.
    pub coefficients: Vec<Option<DVector<Complex64>>>,
    /// `Σ_j b_ij²`, one for every non-degenerate state.
    pub bilinear_sum: Vec<Option<Complex64>>,
    /// `Σ_j |b_ij|² ≥ 1`.
    pub em_probability: Vec<Option<f64>>,
}

/// Expansion coefficients of each eigenvector in the unperturbed basis.
///
/// The unperturbed Hamiltonian is diagonal, so `b_ij` is simply the `j`-th
/// component of `Φ_i`.
pub fn mixing_coefficients(sys: &EigenSystem) -> Mixing {
    let mut coefficients = Vec::with_capacity(sys.dim());
    let mut bilinear_sum = Vec::with_capacity(sys.dim());
    let mut em_probability = Vec::with_capacity(sys.dim());
    for (v, &deg) in sys.vectors.iter().zip(&sys.degenerate) {
        if deg {
            coefficients.push(None);
            bilinear_sum.push(None);
            em_probability.push(None);
        } else {
            coefficients.push(Some(v.clone()));
            bilinear_sum.push(Some(c_dot(v, v)));
            em_probability.push(Some(h_norm_sqr(v)));
        }
    }
    Mixing {
        coefficients,
        bilinear_sum,
        em_probability,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlaps {
    pub hermitian_norm: Vec<Option<f64>>,
    /// Full `⟨Φ_i|Φ_j⟩`, `None` where either state is degenerate.
    pub overlap: Vec<Vec<Option<Complex64>>>,
}

impl Overlaps {
    pub fn overlap_abs(&self) -> Vec<Vec<Option<f64>>> {
        self.overlap
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, z)| if i == j { None } else { z.map(|z| z.norm()) })
                    .collect()
            })
            .collect()
    }
}

/// `A_k` and the pair overlaps `⟨Φ_i|Φ_j⟩`.
///
/// For two c-orthonormal vectors in two dimensions the Hermitian overlap is
/// purely imaginary and antisymmetric; a violation for `N = 2` means the
/// upstream eigenvectors are wrong. For `N ≥ 3` no such identity holds and
/// nothing is checked.
pub fn pairwise_overlaps(sys: &EigenSystem) -> Result<Overlaps, DiagnosticsError> {
    let n = sys.dim();
    let hermitian_norm: Vec<Option<f64>> = (0..n)
        .map(|k| (!sys.degenerate[k]).then(|| h_norm_sqr(&sys.vectors[k])))
        .collect();
    let mut overlap = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if sys.degenerate[i] || sys.degenerate[j] {
                continue;
            }
            overlap[i][j] = Some(h_dot(&sys.vectors[i], &sys.vectors[j]));
        }
    }
    if n == 2 {
        if let (Some(b), Some(a0), Some(a1)) = (overlap[0][1], hermitian_norm[0], hermitian_norm[1]) {
            let tol = OVERLAP_TOL * (a0 * a1).sqrt().max(1.0);
            if b.re.abs() > tol {
                return Err(DiagnosticsError::OverlapAnomaly { i: 0, j: 1, value: b });
            }
        }
    }
    Ok(Overlaps {
        hermitian_norm,
        overlap,
    })
}

/// Everything in [`StateDiagnostics`] from one system.
pub fn diagnose(sys: &EigenSystem) -> Result<StateDiagnostics, DiagnosticsError> {
    let overlaps = pairwise_overlaps(sys)?;
    let mixing = mixing_coefficients(sys);
    Ok(StateDiagnostics {
        hermitian_norm: overlaps.hermitian_norm.clone(),
        rigidity: phase_rigidity(sys),
        overlap_abs: overlaps.overlap_abs(),
        mixing_abs: mixing
            .coefficients
            .iter()
            .map(|b| b.as_ref().map(|b| b.iter().map(|z| z.norm()).collect()))
            .collect(),
        em_probability: mixing.em_probability,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceTerm {
    /// `‖(H₀ − 𝓔_i)Φ_i + V Φ_i‖` where `V = H − H₀` is the coupling.
    pub residual: f64,
    /// `|⟨Φ_i|W|Φ_i⟩|·A_i²` with `W = −V`; `None` for degenerate states.
    pub nonlinearity: Option<f64>,
}

/// Checks the Schrödinger equation rewritten with the coupling as a source
/// term, `(H₀ − 𝓔_i)|Φ_i⟩ = −V|Φ_i⟩`, and reports the size of the leading
/// nonlinear part of that source term for each state.
pub fn source_term_residual(family: &HamiltonianFamily, a: f64, sys: &EigenSystem) -> Vec<SourceTerm> {
    let eps = family.epsilons(a);
    let v_mat = family.coupling_matrix();
    (0..sys.dim())
        .map(|i| {
            let phi = &sys.vectors[i];
            let lhs = DVector::from_fn(phi.len(), |m, _| (eps[m] - sys.eigenvalues[i]) * phi[m]);
            let coupled = &v_mat * phi;
            let residual = h_norm_sqr(&(&lhs + &coupled)).sqrt();
            let nonlinearity = (!sys.degenerate[i]).then(|| {
                let a_i = h_norm_sqr(phi);
                // ⟨Φ|W|Φ⟩ = −⟨Φ|V Φ⟩
                h_dot(phi, &coupled).norm() * a_i * a_i
            });
            SourceTerm { residual, nonlinearity }
        })
        .collect()
}
