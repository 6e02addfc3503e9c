//! Parameter sets of the two- and three-level model studies.
//!
//! Levels are `e_1 = 1 − a/2`, `e_2 = a` and, for three levels,
//! `e_3 = −1/3 + 1.5·a`, with constant half-widths and a common coupling
//! `ω` independent of `a`.

use num_complex::Complex64;

use crate::hamiltonian::{HamiltonianFamily, LevelSpec};

/// `ω = 0.01·(i + 1/10)`.
pub fn weak_omega() -> Complex64 {
    0.01 * Complex64::new(0.1, 1.0)
}

/// `ω = 0.5·(i + 1/10)`.
pub fn strong_omega() -> Complex64 {
    0.5 * Complex64::new(0.1, 1.0)
}

fn level1() -> LevelSpec {
    LevelSpec::with_constant_width(1.0, -0.5, -0.495)
}

fn level2(gamma_half: f64) -> LevelSpec {
    LevelSpec::with_constant_width(0.0, 1.0, gamma_half)
}

fn level3(gamma_half: f64) -> LevelSpec {
    LevelSpec::with_constant_width(-1.0 / 3.0, 1.5, gamma_half)
}

/// Two levels, `γ₂/2 = −0.493`, weak coupling.
pub fn two_level_weak() -> HamiltonianFamily {
    HamiltonianFamily::uniform(vec![level1(), level2(-0.493)], weak_omega()).expect("valid preset")
}

/// Two levels, `γ₂/2 = −0.595`, strong coupling.
pub fn two_level_strong() -> HamiltonianFamily {
    HamiltonianFamily::uniform(vec![level1(), level2(-0.595)], strong_omega()).expect("valid preset")
}

/// Three levels, `γ/2 = (−0.495, −0.493, −0.49)`, weak coupling.
pub fn three_level_weak() -> HamiltonianFamily {
    HamiltonianFamily::uniform(vec![level1(), level2(-0.493), level3(-0.49)], weak_omega()).expect("valid preset")
}

/// Three levels, `γ/2 = (−0.495, −0.595, −0.545)`, strong coupling.
pub fn three_level_strong() -> HamiltonianFamily {
    HamiltonianFamily::uniform(vec![level1(), level2(-0.595), level3(-0.545)], strong_omega()).expect("valid preset")
}

/// Two levels with equal widths and purely imaginary coupling, the case
/// with a closed-form maximum of width bifurcation.
pub fn two_level_equal_widths(gamma_half: f64, omega_im: f64) -> HamiltonianFamily {
    HamiltonianFamily::uniform(
        vec![
            LevelSpec::with_constant_width(1.0, -0.5, gamma_half),
            LevelSpec::with_constant_width(0.0, 1.0, gamma_half),
        ],
        Complex64::new(0.0, omega_im),
    )
    .expect("valid preset")
}
