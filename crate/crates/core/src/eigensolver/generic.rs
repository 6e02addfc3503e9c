use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::{c_dot, h_norm_sqr, is_diagonal, EigenError, EigenSystem};
use crate::hamiltonian::ConcreteHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericConfig {
    /// QR iteration cap; `None` means `100·N²`.
    pub max_iterations: Option<usize>,
    /// Inverse-iteration sweeps per eigenvector.
    pub inverse_steps: usize,
}

impl Default for GenericConfig {
    fn default() -> Self {
        Self {
            max_iterations: None,
            inverse_steps: 3,
        }
    }
}

/// Eigenvalues from a complex Schur decomposition, eigenvectors by inverse
/// iteration, then c-normalization. Works for any `N ≥ 2`.
pub fn solve_generic(h: &ConcreteHamiltonian) -> Result<EigenSystem, EigenError> {
    solve_generic_with(h, &GenericConfig::default())
}

pub fn solve_generic_with(h: &ConcreteHamiltonian, cfg: &GenericConfig) -> Result<EigenSystem, EigenError> {
    let n = h.dim();
    if n < 2 {
        return Err(EigenError::TooSmall);
    }
    if is_diagonal(h) {
        return Ok(EigenSystem::diagonal(h));
    }
    let cap = cfg.max_iterations.unwrap_or(100 * n * n);
    let schur = Schur::try_new(h.matrix.clone(), f64::EPSILON, cap).ok_or(EigenError::NoConvergence(cap))?;
    let (_, t) = schur.unpack();
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let scale = h.scale();
    let mut raw: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for (k, &lam) in eigenvalues.iter().enumerate() {
        let cluster: Vec<DVector<Complex64>> = (0..k)
            .filter(|&j| (eigenvalues[j] - lam).norm() <= 1e-10 * scale)
            .map(|j| raw[j].clone())
            .collect();
        raw.push(inverse_iteration_steps(h, lam, &cluster, cfg.inverse_steps));
    }
    Ok(EigenSystem::from_raw(eigenvalues, raw, &vec![false; n]))
}

pub(crate) fn inverse_iteration(h: &ConcreteHamiltonian, lam: Complex64, cluster: &[DVector<Complex64>]) -> DVector<Complex64> {
    inverse_iteration_steps(h, lam, cluster, 3)
}

/// Inverse iteration at shift `λ`, keeping the iterate c-orthogonal to
/// vectors already found for the same (repeated) eigenvalue.
fn inverse_iteration_steps(
    h: &ConcreteHamiltonian,
    lam: Complex64,
    cluster: &[DVector<Complex64>],
    steps: usize,
) -> DVector<Complex64> {
    let n = h.dim();
    let scale = h.scale();
    let mut v = DVector::from_fn(n, |m, _| {
        let x = m as f64;
        Complex64::new(1.0 + 0.1 * x, 0.05 * x * x)
    });
    let mut shift = lam;
    let mut lu = shifted(&h.matrix, shift).lu();
    let mut bump = 4.0 * f64::EPSILON * scale;
    for _ in 0..steps.max(1) {
        project_out(&mut v, cluster);
        let solved = loop {
            match lu.solve(&v) {
                Some(x) if x.iter().all(|z| z.is_finite()) => break x,
                _ => {
                    shift = lam + Complex64::new(bump, bump);
                    bump *= 16.0;
                    lu = shifted(&h.matrix, shift).lu();
                }
            }
        };
        let norm = h_norm_sqr(&solved).sqrt();
        v = solved / Complex64::new(norm, 0.0);
    }
    project_out(&mut v, cluster);
    v
}

fn shifted(m: &DMatrix<Complex64>, shift: Complex64) -> DMatrix<Complex64> {
    let mut a = m.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= shift;
    }
    a
}

fn project_out(v: &mut DVector<Complex64>, cluster: &[DVector<Complex64>]) {
    for u in cluster {
        let uu = c_dot(u, u);
        if uu.norm() > 1e-12 * h_norm_sqr(u) {
            let coef = c_dot(u, v) / uu;
            *v -= u * coef;
        }
    }
}
