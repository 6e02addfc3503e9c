//! Parametric families of complex-symmetric effective Hamiltonians.
//!
//! A family holds `N` unperturbed levels `ε_i(a) = e_i(a) + i·(γ_i/2)(a)`
//! with affine dependence on a real control parameter `a`, and a constant
//! complex coupling `ω_ij` between every pair of levels. Evaluating at a
//! concrete `a` yields
//!
//! ```text
//!     | ε_1(a)  ω_12   …  ω_1N  |
//! H = | ω_12    ε_2(a) …  ω_2N  |
//!     | …                       |
//!     | ω_1N    ω_2N   …  ε_N(a)|
//! ```
//!
//! which equals its own (non-conjugate) transpose but is not Hermitian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("a family needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("coupling has {got} pair entries, expected {expected} for {levels} levels")]
    CouplingShape {
        levels: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("pair ({0}, {1}) is not an off-diagonal pair")]
    BadPair(usize, usize),
}

/// `intercept + slope·a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub intercept: f64,
    pub slope: f64,
}

impl Affine {
    pub const fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    #[inline]
    pub fn eval(&self, a: f64) -> f64 {
        self.intercept + self.slope * a
    }

    fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.slope.is_finite()
    }
}

/// One unperturbed resonance level.
///
/// `gamma_half` is stored with the sign used in the model, i.e. negative for
/// decaying states (`ε = e + (i/2)γ` with `γ < 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub energy: Affine,
    pub gamma_half: Affine,
}

impl LevelSpec {
    pub const fn new(energy: Affine, gamma_half: Affine) -> Self {
        Self { energy, gamma_half }
    }

    /// Level with affine energy and a parameter independent width.
    pub const fn with_constant_width(e_intercept: f64, e_slope: f64, gamma_half: f64) -> Self {
        Self::new(Affine::new(e_intercept, e_slope), Affine::constant(gamma_half))
    }

    /// Complex unperturbed energy `ε(a)`.
    pub fn epsilon(&self, a: f64) -> Complex64 {
        Complex64::new(self.energy.eval(a), self.gamma_half.eval(a))
    }

    /// `dε/da`, constant for affine levels.
    pub fn epsilon_slope(&self) -> Complex64 {
        Complex64::new(self.energy.slope, self.gamma_half.slope)
    }
}

/// Symmetric coupling matrix with zero diagonal, stored once per unordered pair.
///
/// Pairs are laid out row-major over the strict upper triangle:
/// `(0,1), (0,2), …, (0,N-1), (1,2), …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n: usize,
    pairs: Vec<Complex64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            pairs: vec![Complex64::new(0.0, 0.0); n * n.saturating_sub(1) / 2],
        }
    }

    /// Every pair coupled with the same `ω`.
    pub fn uniform(n: usize, omega: Complex64) -> Self {
        Self {
            n,
            pairs: vec![omega; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn from_pairs(n: usize, pairs: Vec<Complex64>) -> Result<Self, HamiltonianError> {
        let expected = n * n.saturating_sub(1) / 2;
        if pairs.len() != expected {
            return Err(HamiltonianError::CouplingShape {
                levels: n,
                expected,
                got: pairs.len(),
            });
        }
        Ok(Self { n, pairs })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        let (r, c) = if i < j { (i, j) } else { (j, i) };
        // offset of row r in the packed strict upper triangle
        Some(r * (2 * self.n - r - 1) / 2 + (c - r - 1))
    }

    /// `ω_ij`; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.index(i, j)
            .map(|k| self.pairs[k])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) -> Result<(), HamiltonianError> {
        let k = self.index(i, j).ok_or(HamiltonianError::BadPair(i, j))?;
        self.pairs[k] = value;
        Ok(())
    }

    pub fn pairs(&self) -> &[Complex64] {
        &self.pairs
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.iter().all(|w| w.re == 0.0 && w.im == 0.0)
    }

    /// Uniform coupling value if every pair carries the same `ω`.
    pub fn uniform_value(&self) -> Option<Complex64> {
        let first = *self.pairs.first()?;
        self.pairs.iter().all(|&w| w == first).then_some(first)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            n: self.n,
            pairs: self.pairs.iter().map(|&w| w * factor).collect(),
        }
    }
}

/// `N` levels plus their mutual coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianFamily {
    levels: Vec<LevelSpec>,
    coupling: CouplingMatrix,
}

impl HamiltonianFamily {
    pub fn new(levels: Vec<LevelSpec>, coupling: CouplingMatrix) -> Result<Self, HamiltonianError> {
        if levels.len() < 2 {
            return Err(HamiltonianError::TooFewLevels(levels.len()));
        }
        if coupling.dim() != levels.len() {
            return Err(HamiltonianError::CouplingShape {
                levels: levels.len(),
                expected: levels.len() * (levels.len() - 1) / 2,
                got: coupling.pairs().len(),
            });
        }
        if !levels
            .iter()
            .all(|l| l.energy.is_finite() && l.gamma_half.is_finite())
        {
            return Err(HamiltonianError::NonFinite("level specification"));
        }
        if !coupling.pairs().iter().all(|w| w.is_finite()) {
            return Err(HamiltonianError::NonFinite("coupling"));
        }
        Ok(Self { levels, coupling })
    }

    /// Family with one common coupling `ω_ij ≡ ω`.
    pub fn uniform(levels: Vec<LevelSpec>, omega: Complex64) -> Result<Self, HamiltonianError> {
        let n = levels.len();
        Self::new(levels, CouplingMatrix::uniform(n, omega))
    }

    /// The two-level family `[[1, κ], [κ, -1]]`, evaluated at any `a`.
    pub fn kato(kappa: Complex64) -> Self {
        let levels = vec![
            LevelSpec::with_constant_width(1.0, 0.0, 0.0),
            LevelSpec::with_constant_width(-1.0, 0.0, 0.0),
        ];
        Self {
            levels,
            coupling: CouplingMatrix::uniform(2, kappa),
        }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    /// Same levels, coupling multiplied by `factor`.
    pub fn with_coupling_scaled(&self, factor: Complex64) -> Self {
        Self {
            levels: self.levels.clone(),
            coupling: self.coupling.scaled(factor),
        }
    }

    /// Same levels with `ω ≡ 0`.
    pub fn decoupled(&self) -> Self {
        Self {
            levels: self.levels.clone(),
            coupling: CouplingMatrix::zeros(self.dim()),
        }
    }

    pub fn with_coupling(&self, coupling: CouplingMatrix) -> Result<Self, HamiltonianError> {
        Self::new(self.levels.clone(), coupling)
    }

    /// Unperturbed complex energies `ε_i(a)`.
    pub fn epsilons(&self, a: f64) -> Vec<Complex64> {
        self.levels.iter().map(|l| l.epsilon(a)).collect()
    }

    /// Sum of `ε_i(a)`, i.e. the trace of the evaluated matrix.
    pub fn trace(&self, a: f64) -> Complex64 {
        self.levels.iter().map(|l| l.epsilon(a)).sum()
    }

    pub fn evaluate(&self, a: f64) -> ConcreteHamiltonian {
        let n = self.dim();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.levels[i].epsilon(a)
            } else {
                self.coupling.get(i, j)
            }
        });
        ConcreteHamiltonian { matrix, param: a }
    }

    /// The off-diagonal part `H - H₀` as a dense matrix.
    pub fn coupling_matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.coupling.get(i, j))
    }
}

/// A family evaluated at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteHamiltonian {
    pub matrix: DMatrix<Complex64>,
    pub param: f64,
}

impl ConcreteHamiltonian {
    /// Wraps an arbitrary complex-symmetric matrix. Symmetry is checked exactly.
    pub fn from_matrix(matrix: DMatrix<Complex64>, param: f64) -> Option<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return None;
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return None;
                }
            }
        }
        Some(Self { matrix, param })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max(1, ‖H‖_F)`, the absolute scale used by tolerances.
    pub fn scale(&self) -> f64 {
        self.frobenius_norm().max(1.0)
    }
}

/// `[[1, κ], [κ, -1]]`, the textbook example with exceptional points at `κ = ±i`.
pub fn kato_family(kappa: Complex64) -> ConcreteHamiltonian {
    HamiltonianFamily::kato(kappa).evaluate(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fig1_left() -> HamiltonianFamily {
        HamiltonianFamily::uniform(
            vec![
                LevelSpec::with_constant_width(1.0, -0.5, -0.495),
                LevelSpec::with_constant_width(0.0, 1.0, -0.493),
            ],
            0.01 * c(0.1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn fig1_left_at_zero() {
        let h = fig1_left().evaluate(0.0);
        assert_eq!(h.matrix[(0, 0)], c(1.0, -0.495));
        assert_eq!(h.matrix[(1, 1)], c(0.0, -0.493));
        let w = h.matrix[(0, 1)];
        assert!((w - c(0.001, 0.01)).norm() < 1e-17);
        assert_eq!(h.matrix[(0, 1)], h.matrix[(1, 0)]);
    }

    #[test]
    fn decoupled_is_diagonal() {
        let fam = fig1_left().decoupled();
        for a in [0.0, 0.3, 2.0 / 3.0, 1.0] {
            let h = fam.evaluate(a);
            assert_eq!(h.matrix[(0, 1)], c(0.0, 0.0));
            assert_eq!(h.matrix[(0, 0)], fam.levels()[0].epsilon(a));
            assert_eq!(h.matrix[(1, 1)], fam.levels()[1].epsilon(a));
        }
    }

    #[test]
    fn kato_matrix() {
        let h = kato_family(c(0.3, 0.0));
        assert_eq!(h.matrix[(0, 0)], c(1.0, 0.0));
        assert_eq!(h.matrix[(1, 1)], c(-1.0, 0.0));
        assert_eq!(h.matrix[(0, 1)], c(0.3, 0.0));
        assert_eq!(h.matrix[(1, 0)], c(0.3, 0.0));
    }

    #[test]
    fn packed_pairs_cover_upper_triangle() {
        let mut w = CouplingMatrix::zeros(4);
        let mut k = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                k += 1.0;
                w.set(j, i, c(k, 0.0)).unwrap();
            }
        }
        assert_eq!(
            w.pairs().iter().map(|z| z.re).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        );
        assert_eq!(w.get(2, 3), c(6.0, 0.0));
        assert_eq!(w.get(3, 2), c(6.0, 0.0));
        assert_eq!(w.get(1, 1), c(0.0, 0.0));
        assert!(w.set(2, 2, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn rejects_bad_families() {
        assert_eq!(
            HamiltonianFamily::uniform(vec![LevelSpec::with_constant_width(0.0, 0.0, 0.0)], c(0.0, 0.0)),
            Err(HamiltonianError::TooFewLevels(1))
        );
        let lv = vec![
            LevelSpec::with_constant_width(f64::NAN, 0.0, 0.0),
            LevelSpec::with_constant_width(0.0, 0.0, 0.0),
        ];
        assert!(HamiltonianFamily::uniform(lv, c(0.0, 0.0)).is_err());
        let lv = vec![LevelSpec::with_constant_width(0.0, 0.0, 0.0); 3];
        assert!(HamiltonianFamily::new(lv, CouplingMatrix::zeros(2)).is_err());
    }

    #[test]
    fn evaluate_is_affine_in_parameter() {
        let fam = fig1_left();
        let (a0, a1) = (0.137, 0.911);
        let mid = fam.evaluate(0.5 * (a0 + a1)).matrix;
        let avg = (fam.evaluate(a0).matrix + fam.evaluate(a1).matrix) * c(0.5, 0.0);
        assert!((mid - avg).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn from_matrix_requires_symmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert!(ConcreteHamiltonian::from_matrix(m, 0.0).is_none());
    }
}
