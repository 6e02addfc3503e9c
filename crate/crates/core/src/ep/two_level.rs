//! Closed-form EP conditions for two-level families.
//!
//! Two levels coalesce where `Z² = ¼[(ε₁ − ε₂)² + 4ω²]` vanishes. With
//! `ε₁ − ε₂ = u + v·a` affine in `a` and the coupling scaled by `z`, the
//! condition `u + v·a = ±2i·z·ω` is linear in the unknowns.

use num_complex::Complex64;
use serde::Serialize;

use super::{certify, CertifyConfig, EpCandidate, EpError, SearchBox};
use crate::hamiltonian::HamiltonianFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TwoLevelMode {
    /// `a` alone: every local minimum of `|Z²|` inside the range.
    Parameter { a: (f64, f64) },
    /// `(a, s)` with `ω → s·ω`, `s > 0`: the exact root.
    ParameterAndScale,
    /// Complex factor `z` on the coupling at fixed `a`: both roots.
    ComplexCoupling { a: f64 },
}

struct Difference {
    u: Complex64,
    v: Complex64,
    omega: Complex64,
}

impl Difference {
    fn of(family: &HamiltonianFamily) -> Self {
        let l = family.levels();
        let e0 = |k: usize| l[k].epsilon(0.0);
        Self {
            u: e0(0) - e0(1),
            v: l[0].epsilon_slope() - l[1].epsilon_slope(),
            omega: family.coupling().get(0, 1),
        }
    }

    /// `4Z² = (u + v·a)² + 4z²ω²`.
    fn four_z_sqr(&self, a: f64, z: Complex64) -> Complex64 {
        let d = self.u + self.v * a;
        d * d + 4.0 * z * z * self.omega * self.omega
    }
}

/// Real roots of `c[3]x³ + c[2]x² + c[1]x + c[0]` (`c[3] ≠ 0`) by bisection
/// on the monotone pieces between critical points.
fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let f = |x: f64| ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
    // Cauchy bound on root magnitude
    let bound = 1.0 + c[..3].iter().map(|k| (k / c[3]).abs()).fold(0.0, f64::max);
    let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let disc = qb * qb - 4.0 * qa * qc;
    let mut knots = vec![-bound];
    if disc > 0.0 {
        let sq = disc.sqrt();
        let mut r = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
        r.sort_by(f64::total_cmp);
        knots.extend(r);
    }
    knots.push(bound);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.dedup();
    roots
}

/// EP search for a two-level family.
pub fn locate_2x2(
    family: &HamiltonianFamily,
    mode: TwoLevelMode,
    cfg: &CertifyConfig,
) -> Result<Vec<EpCandidate>, EpError> {
    if family.dim() != 2 {
        return Err(EpError::WrongDimension {
            expected: 2,
            got: family.dim(),
        });
    }
    let d = Difference::of(family);
    let zero = Complex64::new(0.0, 0.0);
    if d.omega == zero {
        return Err(EpError::NoCandidate);
    }
    let mut out = Vec::new();
    match mode {
        TwoLevelMode::Parameter { a: (a0, a1) } => {
            if !(a0 < a1) {
                return Err(EpError::InvalidBox(format!("a range ({a0}, {a1})")));
            }
            // |D(a)|² with D = αa² + βa + γ; its derivative is a real cubic
            let alpha = d.v * d.v;
            let beta = 2.0 * d.u * d.v;
            let gamma = d.u * d.u + 4.0 * d.omega * d.omega;
            if alpha == zero {
                return Err(EpError::NoCandidate);
            }
            let coeffs = [
                (beta * gamma.conj()).re,
                beta.norm_sqr() + 2.0 * (alpha * gamma.conj()).re,
                3.0 * (alpha.conj() * beta).re,
                2.0 * alpha.norm_sqr(),
            ];
            let second = |a: f64| 6.0 * coeffs[3] * a * a + 4.0 * coeffs[2] * a + 2.0 * coeffs[1];
            let search = SearchBox::Parameter { a: (a0, a1) };
            for a in real_cubic_roots(coeffs) {
                if a >= a0 && a <= a1 && second(a) > 0.0 {
                    out.push(certify(family, &search, a, 0.0, cfg)?);
                }
            }
            out.sort_by(|x, y| x.gap.total_cmp(&y.gap));
        }
        TwoLevelMode::ParameterAndScale => {
            // v·a − 2iω·s = −u as a real 2×2 system in (a, s)
            let w = Complex64::new(0.0, -2.0) * d.omega;
            let det = d.v.re * w.im - w.re * d.v.im;
            if det == 0.0 {
                return Err(EpError::NoCandidate);
            }
            let a = (-d.u.re * w.im + w.re * d.u.im) / det;
            let s = (-d.v.re * d.u.im + d.v.im * d.u.re) / det;
            if s == 0.0 || !a.is_finite() {
                return Err(EpError::NoCandidate);
            }
            // Z² is even in s, so the root with s < 0 mirrors one with s > 0
            let s = s.abs();
            let search = SearchBox::ParameterAndScale {
                a: (a - 1.0, a + 1.0),
                s: (0.0, 2.0 * s),
            };
            out.push(certify(family, &search, a, s, cfg)?);
        }
        TwoLevelMode::ComplexCoupling { a } => {
            let diff = d.u + d.v * a;
            if diff == zero {
                return Err(EpError::NoCandidate);
            }
            let search = SearchBox::ComplexCoupling {
                a,
                re: (-1.0, 1.0),
                im: (-1.0, 1.0),
            };
            for sign in [1.0, -1.0] {
                let z = Complex64::new(0.0, 0.5 * sign) * diff / d.omega;
                out.push(certify(family, &search, z.re, z.im, cfg)?);
            }
        }
    }
    if out.is_empty() {
        Err(EpError::NoCandidate)
    } else {
        Ok(out)
    }
}

/// `|Z|²` at a candidate, for checking polished roots.
pub fn z_sqr_residual(family: &HamiltonianFamily, c: &EpCandidate) -> f64 {
    let d = Difference::of(family);
    (0.25 * d.four_z_sqr(c.location.a(), c.location.coupling_factor())).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::EpLocation;
    use crate::hamiltonian::LevelSpec;

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
    fn cubic_roots() {
        // (x − 1)(x + 2)(x − 0.5) = x³ + 0.5x² − 2.5x + 1
        let r = real_cubic_roots([1.0, -2.5, 0.5, 1.0]);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(real_cubic_roots([1.0, 0.0, 0.0, 1.0]).len(), 1);
    }

    #[test]
    fn kato_roots_are_plus_minus_i() {
        let fam = HamiltonianFamily::kato(c(1.0, 0.0));
        let found = locate_2x2(&fam, TwoLevelMode::ComplexCoupling { a: 0.0 }, &CertifyConfig::default()).unwrap();
        assert_eq!(found.len(), 2);
        for (cand, want) in found.iter().zip([c(0.0, 1.0), c(0.0, -1.0)]) {
            assert!((cand.location.coupling_factor() - want).norm() < 1e-15);
            assert!(cand.eigenvalue.norm() < 1e-8);
            assert!(cand.certified, "{cand:?}");
        }
    }

    #[test]
    fn scale_mode_hits_exact_root() {
        let fam = fig1_left();
        let found = locate_2x2(&fam, TwoLevelMode::ParameterAndScale, &CertifyConfig::default()).unwrap();
        let cand = &found[0];
        let EpLocation::ParameterAndScale { a, s } = cand.location else {
            panic!("wrong location kind")
        };
        assert!((a - 0.6533).abs() < 1e-3 && (s - 1.0).abs() < 0.05, "a = {a}, s = {s}");
        let scale = cand.location.hamiltonian(&fam).scale();
        assert!(z_sqr_residual(&fam, cand) <= 1e-16 * scale.powi(4));
        assert!(cand.certified, "{cand:?}");
    }

    #[test]
    fn parameter_mode_reports_near_misses() {
        let found = locate_2x2(
            &fig1_left(),
            TwoLevelMode::Parameter { a: (0.0, 1.0) },
            &CertifyConfig::default(),
        )
        .unwrap();
        assert!(found.len() >= 1);
        assert!((found[0].location.a() - 0.6533).abs() < 1e-3);
        assert!(found.iter().all(|c| !c.certified));
    }

    #[test]
    fn zero_coupling_has_no_candidate() {
        let fam = fig1_left().decoupled();
        assert_eq!(
            locate_2x2(&fam, TwoLevelMode::ParameterAndScale, &CertifyConfig::default()),
            Err(EpError::NoCandidate)
        );
    }
}
