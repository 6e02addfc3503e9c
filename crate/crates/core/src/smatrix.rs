//! One-channel resonance S-matrix and cross section.
//!
//! Each pole `𝓔_k = E_k + (i/2)Γ_k` contributes the unimodular factor
//! `(E − E_k − (i/2)Γ_k) / (E − E_k + (i/2)Γ_k)` with `Γ_k = 2·Im 𝓔_k`
//! carried with its sign. The cross section is `σ = |1 − S|²`, so
//! `0 ≤ σ ≤ 4` on the real axis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eigensolver::{solve, EigenError, EigenSystem};
use crate::hamiltonian::HamiltonianFamily;
use crate::sweep::SweepConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SMatrixError {
    #[error("pole {index} lies on the real axis at E = {energy}")]
    PoleOnRealAxis { index: usize, energy: f64 },
    #[error("pole {0} is not finite")]
    NonFinitePole(usize),
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("eigensolver failed at a = {a}: {source}")]
    Eigen { a: f64, source: EigenError },
}

/// Complex poles `𝓔_k` of the S-matrix.
///
/// Poles listed in `coalesced` are pairs known to sit at an exceptional
/// point; they are evaluated with the coalesced closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceSet {
    poles: Vec<Complex64>,
    coalesced: Vec<(usize, usize)>,
}

impl ResonanceSet {
    pub fn new(poles: Vec<Complex64>) -> Result<Self, SMatrixError> {
        if let Some(k) = poles.iter().position(|p| !p.is_finite()) {
            return Err(SMatrixError::NonFinitePole(k));
        }
        Ok(Self {
            poles,
            coalesced: Vec::new(),
        })
    }

    /// Poles from an eigen-decomposition. Degenerate eigenvalues are paired
    /// by proximity and replaced by their mean.
    pub fn from_system(sys: &EigenSystem) -> Result<Self, SMatrixError> {
        let mut set = Self::new(sys.eigenvalues.clone())?;
        let mut free: Vec<usize> = (0..sys.dim()).filter(|&k| sys.degenerate[k]).collect();
        while free.len() >= 2 {
            let i = free.remove(0);
            let (pos, _) = free
                .iter()
                .enumerate()
                .map(|(p, &j)| (p, (sys.eigenvalues[i] - sys.eigenvalues[j]).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            let j = free.remove(pos);
            let mean = 0.5 * (set.poles[i] + set.poles[j]);
            set.poles[i] = mean;
            set.poles[j] = mean;
            set.coalesced.push((i, j));
        }
        Ok(set)
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn coalesced(&self) -> &[(usize, usize)] {
        &self.coalesced
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Indices of poles with `Im 𝓔 > 0`, which do not describe decaying states.
    pub fn growing(&self) -> Vec<usize> {
        (0..self.poles.len()).filter(|&k| self.poles[k].im > 0.0).collect()
    }
}

fn pole_factor(pole: Complex64, index: usize, e: f64) -> Result<Complex64, SMatrixError> {
    let d = Complex64::new(e - pole.re, pole.im);
    if d == Complex64::new(0.0, 0.0) {
        return Err(SMatrixError::PoleOnRealAxis { index, energy: e });
    }
    Ok(Complex64::new(e - pole.re, -pole.im) / d)
}

/// `S(E)` as the product of single-pole factors.
pub fn s_matrix(set: &ResonanceSet, e: f64) -> Result<Complex64, SMatrixError> {
    let mut s = Complex64::new(1.0, 0.0);
    let mut done = vec![false; set.poles.len()];
    for &(i, j) in &set.coalesced {
        let p = set.poles[i];
        if p.im == 0.0 && e == p.re {
            return Err(SMatrixError::PoleOnRealAxis { index: i, energy: e });
        }
        s *= s_matrix_ep(p.re, 2.0 * p.im, e);
        done[i] = true;
        done[j] = true;
    }
    for (k, &p) in set.poles.iter().enumerate() {
        if !done[k] {
            s *= pole_factor(p, k, e)?;
        }
    }
    Ok(s)
}

/// S-matrix of two poles coalesced at `E_d + (i/2)Γ_d`:
/// `1 − 2iΓ_d/(E − E_d + (i/2)Γ_d) − Γ_d²/(E − E_d + (i/2)Γ_d)²`.
///
/// Returns 1 for `Γ_d = 0`, the limit of vanishing width.
pub fn s_matrix_ep(e_d: f64, gamma_d: f64, e: f64) -> Complex64 {
    if gamma_d == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let d = Complex64::new(e - e_d, 0.5 * gamma_d);
    let g = Complex64::new(gamma_d, 0.0);
    Complex64::new(1.0, 0.0) - Complex64::new(0.0, 2.0) * g / d - g * g / (d * d)
}

/// `σ = |1 − S|²`.
pub fn cross_section(s: Complex64) -> f64 {
    (Complex64::new(1.0, 0.0) - s).norm_sqr()
}

pub fn xsec_scan(set: &ResonanceSet, energies: &[f64]) -> Result<Vec<f64>, SMatrixError> {
    energies.iter().map(|&e| s_matrix(set, e).map(cross_section)).collect()
}

/// Energy axis of a scan or contour.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyGrid {
    /// `steps` points over `[min E_k − 5·max|Γ_k|, max E_k + 5·max|Γ_k|]`.
    Auto { steps: usize },
    Range { min: f64, max: f64, steps: usize },
    Explicit { energies: Vec<f64> },
}

impl Default for EnergyGrid {
    fn default() -> Self {
        EnergyGrid::Auto { steps: 2001 }
    }
}

impl EnergyGrid {
    /// Resolves the grid, using `poles` for the automatic range.
    pub fn resolve<'a>(&self, poles: impl IntoIterator<Item = &'a Complex64>) -> Result<Vec<f64>, SMatrixError> {
        let (min, max, steps) = match self {
            EnergyGrid::Explicit { energies } => {
                if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
                    return Err(SMatrixError::InvalidGrid("energies must be finite and non-empty".into()));
                }
                return Ok(energies.clone());
            }
            EnergyGrid::Range { min, max, steps } => (*min, *max, *steps),
            EnergyGrid::Auto { steps } => {
                let (mut lo, mut hi, mut width) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
                for p in poles {
                    lo = lo.min(p.re);
                    hi = hi.max(p.re);
                    width = width.max(2.0 * p.im.abs());
                }
                if !lo.is_finite() {
                    return Err(SMatrixError::InvalidGrid("automatic range needs at least one pole".into()));
                }
                if width == 0.0 && lo == hi {
                    width = 1.0;
                }
                (lo - 5.0 * width, hi + 5.0 * width, *steps)
            }
        };
        if !(min.is_finite() && max.is_finite() && min < max) || steps < 2 {
            return Err(SMatrixError::InvalidGrid(format!("[{min}, {max}] with {steps} points")));
        }
        Ok((0..steps)
            .map(|k| {
                if k == steps - 1 {
                    max
                } else {
                    min + (max - min) * k as f64 / (steps - 1) as f64
                }
            })
            .collect())
    }
}

/// `σ(E, a)` on a rectangular grid; `sigma[k][m]` is at `(params[k], energies[m])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XsecGrid {
    pub energies: Vec<f64>,
    pub params: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub use_coupling: bool,
}

impl XsecGrid {
    /// Long format, columns `a,e,sigma`, energy fastest.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("a,e,sigma\n");
        for (a, row) in self.params.iter().zip(&self.sigma) {
            for (e, s) in self.energies.iter().zip(row) {
                out.push_str(&format!("{a},{e},{s}\n"));
            }
        }
        out
    }

    /// Matrix format: first row `a\E` then the energies, then one row per `a`.
    pub fn to_matrix_text(&self) -> String {
        let mut out = String::from("a\\e");
        for e in &self.energies {
            out.push_str(&format!(",{e}"));
        }
        out.push('\n');
        for (a, row) in self.params.iter().zip(&self.sigma) {
            out.push_str(&a.to_string());
            for s in row {
                out.push_str(&format!(",{s}"));
            }
            out.push('\n');
        }
        out
    }

    /// `min_E σ(E, a)` for every `a`.
    pub fn row_minima(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// `max |σ_self − σ_other|` over a grid of identical shape.
    pub fn max_abs_difference(&self, other: &XsecGrid) -> Option<f64> {
        if self.energies != other.energies || self.params != other.params {
            return None;
        }
        Some(
            self.sigma
                .iter()
                .zip(&other.sigma)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
                .fold(0.0, f64::max),
        )
    }
}

/// Poles of `family` at `a`, or the unperturbed `ε_i(a)` without coupling.
pub fn poles_at(family: &HamiltonianFamily, a: f64, use_coupling: bool) -> Result<ResonanceSet, SMatrixError> {
    if !use_coupling {
        return ResonanceSet::new(family.epsilons(a));
    }
    let sys = solve(&family.evaluate(a)).map_err(|source| SMatrixError::Eigen { a, source })?;
    ResonanceSet::from_system(&sys)
}

/// Cross section over the sweep grid of `cfg` (without refinement) and `energies`.
pub fn xsec_contour(
    family: &HamiltonianFamily,
    cfg: &SweepConfig,
    energies: &EnergyGrid,
    use_coupling: bool,
) -> Result<XsecGrid, SMatrixError> {
    cfg.validate()
        .map_err(|e| SMatrixError::InvalidGrid(e.to_string()))?;
    let params = cfg.grid();
    let sets: Vec<ResonanceSet> = params
        .par_iter()
        .map(|&a| poles_at(family, a, use_coupling))
        .collect::<Result<_, _>>()?;
    let energies = energies.resolve(sets.iter().flat_map(|s| s.poles.iter()))?;
    let sigma = sets
        .par_iter()
        .map(|set| xsec_scan(set, &energies))
        .collect::<Result<_, _>>()?;
    Ok(XsecGrid {
        energies,
        params,
        sigma,
        use_coupling,
    })
}

/// Contours with the given coupling and with `ω = 0` on a shared energy axis.
///
/// An automatic energy range is taken from the coupled poles.
pub fn xsec_contour_pair(
    family: &HamiltonianFamily,
    cfg: &SweepConfig,
    energies: &EnergyGrid,
) -> Result<(XsecGrid, XsecGrid), SMatrixError> {
    let with = xsec_contour(family, cfg, energies, true)?;
    let shared = EnergyGrid::Explicit {
        energies: with.energies.clone(),
    };
    let without = xsec_contour(family, cfg, &shared, false)?;
    Ok((with, without))
}

/// Peaks of a sampled curve that rise above their surroundings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Humps {
    /// Indices of the retained maxima, ascending.
    pub maxima: Vec<usize>,
    /// Index of the lowest sample between each pair of consecutive maxima.
    pub minima: Vec<usize>,
}

/// Local maxima with topographic prominence at least `min_prominence`.
pub fn find_humps(values: &[f64], min_prominence: f64) -> Humps {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut k = 0;
    while k < n {
        // treat runs of equal values as one sample
        let mut end = k;
        while end + 1 < n && values[end + 1] == values[k] {
            end += 1;
        }
        let left_lower = k == 0 || values[k - 1] < values[k];
        let right_lower = end == n - 1 || values[end + 1] < values[k];
        if left_lower && right_lower && n > 1 && !(k == 0 && end == n - 1) {
            peaks.push((k + end) / 2);
        }
        k = end + 1;
    }
    let prominence = |p: usize| {
        let h = values[p];
        let mut left_min = h;
        let mut i = p;
        while i > 0 {
            i -= 1;
            if values[i] > h {
                break;
            }
            left_min = left_min.min(values[i]);
        }
        let mut right_min = h;
        let mut j = p;
        while j + 1 < n {
            j += 1;
            if values[j] > h {
                break;
            }
            right_min = right_min.min(values[j]);
        }
        h - left_min.max(right_min)
    };
    let maxima: Vec<usize> = peaks.into_iter().filter(|&p| prominence(p) >= min_prominence).collect();
    let minima = maxima
        .windows(2)
        .map(|w| {
            (w[0]..=w[1])
                .min_by(|&x, &y| values[x].total_cmp(&values[y]))
                .unwrap()
        })
        .collect();
    Humps { maxima, minima }
}
