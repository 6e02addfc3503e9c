//! Localization of exceptional points (EPs).
//!
//! The search space is always two real coordinates `(p, q)` mapped onto the
//! control parameter `a` and a factor `z` multiplying the family's coupling
//! matrix, `H(a, z) = diag ε(a) + z·V`:
//!
//! | box                   | `a`     | `z`      |
//! |-----------------------|---------|----------|
//! | `Parameter`           | `p`     | `1`      |
//! | `ParameterAndScale`   | `p`     | `q`      |
//! | `ComplexCoupling`     | fixed   | `p + iq` |
//!
//! With one real unknown an EP is generically missed, so 1-D searches report
//! points of closest approach. Two real unknowns match the two real
//! conditions `Re Disc = Im Disc = 0` and give exact roots.

mod cluster;
pub mod discriminant;
mod generic;
mod two_level;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::phase_rigidity;
use crate::eigensolver::{alignment_defect, solve, EigenError, EigenSystem};
use crate::hamiltonian::{ConcreteHamiltonian, HamiltonianFamily};

pub use cluster::{cluster_report, Cluster};
pub use generic::{family_discriminant, locate_generic, LocateConfig};
pub use two_level::{locate_2x2, z_sqr_residual, TwoLevelMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpError {
    #[error("no exceptional point candidate in the search region")]
    NoCandidate,
    #[error("this search needs a {expected}-level family, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("invalid search box: {0}")]
    InvalidBox(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Region searched by [`locate_generic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchBox {
    Parameter { a: (f64, f64) },
    ParameterAndScale { a: (f64, f64), s: (f64, f64) },
    ComplexCoupling { a: f64, re: (f64, f64), im: (f64, f64) },
}

impl SearchBox {
    pub fn is_two_dimensional(&self) -> bool {
        !matches!(self, SearchBox::Parameter { .. })
    }

    fn validate(&self) -> Result<(), EpError> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        let good = match *self {
            SearchBox::Parameter { a } => ok(a),
            SearchBox::ParameterAndScale { a, s } => ok(a) && ok(s),
            SearchBox::ComplexCoupling { a, re, im } => a.is_finite() && ok(re) && ok(im),
        };
        if good {
            Ok(())
        } else {
            Err(EpError::InvalidBox(format!("{self:?}")))
        }
    }

    /// `(p, q)` ranges; `q` is degenerate for 1-D boxes.
    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        match *self {
            SearchBox::Parameter { a } => (a, (0.0, 0.0)),
            SearchBox::ParameterAndScale { a, s } => (a, s),
            SearchBox::ComplexCoupling { re, im, .. } => (re, im),
        }
    }

    fn contains(&self, p: f64, q: f64, slack: f64) -> bool {
        let ((p0, p1), (q0, q1)) = self.ranges();
        let inside = |x: f64, lo: f64, hi: f64| x >= lo - slack * (hi - lo) && x <= hi + slack * (hi - lo);
        inside(p, p0, p1) && (!self.is_two_dimensional() || inside(q, q0, q1))
    }

    /// `(a, z)` at search coordinates `(p, q)`.
    fn map(&self, p: f64, q: f64) -> (f64, Complex64) {
        match *self {
            SearchBox::Parameter { .. } => (p, Complex64::new(1.0, 0.0)),
            SearchBox::ParameterAndScale { .. } => (p, Complex64::new(q, 0.0)),
            SearchBox::ComplexCoupling { a, .. } => (a, Complex64::new(p, q)),
        }
    }

    /// `(∂a, ∂z)` along `∂/∂p` and `∂/∂q`.
    fn tangents(&self) -> [(f64, Complex64); 2] {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            SearchBox::Parameter { .. } => [(1.0, zero), (0.0, zero)],
            SearchBox::ParameterAndScale { .. } => [(1.0, zero), (0.0, Complex64::new(1.0, 0.0))],
            SearchBox::ComplexCoupling { .. } => [(0.0, Complex64::new(1.0, 0.0)), (0.0, Complex64::new(0.0, 1.0))],
        }
    }

    fn location(&self, p: f64, q: f64) -> EpLocation {
        match *self {
            SearchBox::Parameter { .. } => EpLocation::Parameter { a: p },
            SearchBox::ParameterAndScale { .. } => EpLocation::ParameterAndScale { a: p, s: q },
            SearchBox::ComplexCoupling { a, .. } => EpLocation::ComplexCoupling { a, re: p, im: q },
        }
    }
}

/// Where a candidate sits; `s` and `re + i·im` multiply the family's coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpLocation {
    Parameter { a: f64 },
    ParameterAndScale { a: f64, s: f64 },
    ComplexCoupling { a: f64, re: f64, im: f64 },
}

impl EpLocation {
    /// Search-space coordinates, used for deduplication and clustering.
    pub fn coords(&self) -> Vec<f64> {
        match *self {
            EpLocation::Parameter { a } => vec![a],
            EpLocation::ParameterAndScale { a, s } => vec![a, s],
            EpLocation::ComplexCoupling { re, im, .. } => vec![re, im],
        }
    }

    pub fn a(&self) -> f64 {
        match *self {
            EpLocation::Parameter { a } | EpLocation::ParameterAndScale { a, .. } | EpLocation::ComplexCoupling { a, .. } => a,
        }
    }

    /// Factor multiplying the coupling matrix.
    pub fn coupling_factor(&self) -> Complex64 {
        match *self {
            EpLocation::Parameter { .. } => Complex64::new(1.0, 0.0),
            EpLocation::ParameterAndScale { s, .. } => Complex64::new(s, 0.0),
            EpLocation::ComplexCoupling { re, im, .. } => Complex64::new(re, im),
        }
    }

    pub fn distance(&self, other: &EpLocation) -> f64 {
        let (x, y) = (self.coords(), other.coords());
        if x.len() != y.len() {
            return f64::INFINITY;
        }
        x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
    }

    pub fn hamiltonian(&self, family: &HamiltonianFamily) -> ConcreteHamiltonian {
        family.with_coupling_scaled(self.coupling_factor()).evaluate(self.a())
    }
}

/// Fit of `|𝓔_i − 𝓔_j| ∝ δ^q` along a ray through the candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderCertificate {
    pub exponent: f64,
    /// RMS deviation of `ln gap` from the fitted line.
    pub fit_residual: f64,
    /// Unit direction in search coordinates.
    pub ray: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpCandidate {
    pub location: EpLocation,
    /// Unperturbed levels the coalescing pair is labelled with.
    pub branch_pair: (usize, usize),
    pub eigenvalue: Complex64,
    pub gap: f64,
    pub gap_tolerance: f64,
    /// Smaller phase rigidity of the pair at the certification offset.
    pub rigidity_min: f64,
    /// `min_s ‖Φ̂_i − s·iΦ̂_j‖` at the certification offset.
    pub alignment_defect: f64,
    pub order: Option<OrderCertificate>,
    /// Gap within tolerance and square-root splitting confirmed.
    pub certified: bool,
    /// Fitted exponent within 0.05 of 1/3.
    pub order3_consistent: bool,
    /// Gap within tolerance but the splitting fit was not square-root like.
    pub certification_failed: bool,
}

impl EpCandidate {
    pub fn is_exact(&self) -> bool {
        self.gap <= self.gap_tolerance
    }
}

/// Certification settings shared by both locators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyConfig {
    /// Gap tolerance relative to `max(1, ‖H‖_F)`.
    pub gap_tolerance: f64,
    pub ray: (f64, f64),
    pub delta_range: (f64, f64),
    pub fit_points: usize,
    pub exponent_band: (f64, f64),
    pub fit_residual_tol: f64,
    /// Offset at which rigidity and alignment are measured.
    pub probe_delta: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-8,
            ray: (1.0, 0.0),
            delta_range: (1e-6, 1e-3),
            fit_points: 13,
            exponent_band: (0.4, 0.6),
            fit_residual_tol: 0.05,
            probe_delta: 1e-4,
        }
    }
}

/// Indices of the two eigenvalues closest to `target`.
fn nearest_pair(sys: &EigenSystem, target: Complex64) -> (usize, usize) {
    let mut idx: Vec<usize> = (0..sys.dim()).collect();
    idx.sort_by(|&x, &y| {
        (sys.eigenvalues[x] - target)
            .norm()
            .total_cmp(&(sys.eigenvalues[y] - target).norm())
    });
    (idx[0].min(idx[1]), idx[0].max(idx[1]))
}

/// Labels eigenpairs with unperturbed levels by dominant eigenvector weight.
fn level_labels(sys: &EigenSystem) -> Vec<usize> {
    let n = sys.dim();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let u: DVector<Complex64> = sys.unit_vector(k);
            (0..n).map(|i| 1.0 - u[i].norm_sqr()).collect()
        })
        .collect();
    crate::assignment::min_cost_assignment(&cost)
        .expect("finite costs")
        .column_of_row
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(u, v)| (v - (my + slope * (u - mx))).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Builds a candidate at `(p, q)`: gap, labels, Puiseux fit and local rigidity.
fn certify(
    family: &HamiltonianFamily,
    search: &SearchBox,
    p: f64,
    q: f64,
    cfg: &CertifyConfig,
) -> Result<EpCandidate, EpError> {
    let location = search.location(p, q);
    let h = location.hamiltonian(family);
    let sys = solve(&h)?;
    let (gap, (i, j)) = sys.min_gap();
    let eigenvalue = 0.5 * (sys.eigenvalues[i] + sys.eigenvalues[j]);
    let labels = level_labels(&sys);
    let branch_pair = (labels[i].min(labels[j]), labels[i].max(labels[j]));
    let gap_tolerance = cfg.gap_tolerance * h.scale();

    let norm = cfg.ray.0.hypot(if search.is_two_dimensional() { cfg.ray.1 } else { 0.0 });
    let ray = if search.is_two_dimensional() {
        (cfg.ray.0 / norm, cfg.ray.1 / norm)
    } else {
        (1.0, 0.0)
    };
    let offset_system = |delta: f64| -> Result<EigenSystem, EpError> {
        let loc = search.location(p + delta * ray.0, q + delta * ray.1);
        Ok(solve(&loc.hamiltonian(family))?)
    };

    let (lo, hi) = cfg.delta_range;
    let m = cfg.fit_points.max(2);
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for k in 0..m {
        let delta = lo * (hi / lo).powf(k as f64 / (m - 1) as f64);
        let s = offset_system(delta)?;
        let (u, v) = nearest_pair(&s, eigenvalue);
        let g = (s.eigenvalues[u] - s.eigenvalues[v]).norm();
        if g > 0.0 {
            xs.push(delta.ln());
            ys.push(g.ln());
        }
    }
    let order = (xs.len() >= 2).then(|| {
        let (exponent, fit_residual) = least_squares_slope(&xs, &ys);
        OrderCertificate {
            exponent,
            fit_residual,
            ray,
        }
    });

    let probe = offset_system(cfg.probe_delta)?;
    let (u, v) = nearest_pair(&probe, eigenvalue);
    let r = phase_rigidity(&probe);
    let rigidity_min = r[u].min(r[v]);
    let defect = alignment_defect(&probe, u, v);

    let exact = gap <= gap_tolerance;
    let square_root = order.as_ref().is_some_and(|o| {
        o.exponent >= cfg.exponent_band.0 && o.exponent <= cfg.exponent_band.1 && o.fit_residual <= cfg.fit_residual_tol
    });
    let order3_consistent = order
        .as_ref()
        .is_some_and(|o| (o.exponent - 1.0 / 3.0).abs() < 0.05 && o.fit_residual <= cfg.fit_residual_tol);
    Ok(EpCandidate {
        location,
        branch_pair,
        eigenvalue,
        gap,
        gap_tolerance,
        rigidity_min,
        alignment_defect: defect,
        order,
        certified: exact && square_root,
        order3_consistent,
        certification_failed: exact && !square_root,
    })
}

/// Keeps the lowest-gap candidate within `radius` of each other.
fn dedupe(mut candidates: Vec<EpCandidate>, radius: f64) -> Vec<EpCandidate> {
    candidates.sort_by(|x, y| x.gap.total_cmp(&y.gap));
    let mut kept: Vec<EpCandidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.location.distance(&c.location) > radius) {
            kept.push(c);
        }
    }
    kept.sort_by(|x, y| {
        let (a, b) = (x.location.coords(), y.location.coords());
        a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
    });
    kept
}
