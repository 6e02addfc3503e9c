use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use num_complex::Complex64;

/// Relative c-norm below which a vector is treated as self-orthogonal.
pub const SELF_ORTHOGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    /// `|Σ v_m²| / Σ |v_m|²` fell below [`SELF_ORTHOGONAL_TOL`].
    #[error("vector is self-orthogonal under the c-product (ratio {ratio:e})")]
    SelfOrthogonal { ratio: f64 },
}

/// Bilinear c-product `Σ u_m v_m` (no conjugation).
pub fn c_dot(u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Hermitian product `Σ conj(u_m) v_m`.
pub fn h_dot(u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn h_norm_sqr(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `|Σ v_m²| / Σ |v_m|²`, scale invariant and in `[0, 1]`.
pub fn c_norm_ratio(v: &DVector<Complex64>) -> f64 {
    let h = h_norm_sqr(v);
    if h == 0.0 {
        return 0.0;
    }
    c_dot(v, v).norm() / h
}

/// Flips the sign of `v` so that its largest-magnitude component has argument
/// in `(-π/2, π/2]`. Ties go to the lowest index.
pub fn fix_sign(v: &mut DVector<Complex64>) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (m, z) in v.iter().enumerate() {
        let mag = z.norm_sqr();
        if mag > best_mag {
            best = m;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let arg = v[best].arg();
    if !(arg > -FRAC_PI_2 && arg <= FRAC_PI_2) {
        v.neg_mut();
    }
}

/// Scales `v` to unit c-norm `Σ v_m² = 1`.
///
/// Returns the normalized vector and the ratio `|Σ v_m²| / Σ |v_m|²` of the
/// input. The remaining sign freedom is fixed by [`fix_sign`].
pub fn c_normalize(v: &DVector<Complex64>) -> Result<(DVector<Complex64>, f64), NormalizeError> {
    let h = h_norm_sqr(v);
    if h == 0.0 || !h.is_finite() {
        return Err(NormalizeError::ZeroVector);
    }
    // pre-scale so the c-norm does not underflow for tiny inputs
    let pre = v / Complex64::new(h.sqrt(), 0.0);
    let cn = c_dot(&pre, &pre);
    let ratio = cn.norm();
    if ratio < SELF_ORTHOGONAL_TOL {
        return Err(NormalizeError::SelfOrthogonal { ratio });
    }
    let mut out = pre / cn.sqrt();
    fix_sign(&mut out);
    Ok((out, ratio))
}

/// Unit Hermitian norm, sign fixed like [`c_normalize`].
pub fn hermitian_normalize(v: &DVector<Complex64>) -> DVector<Complex64> {
    let h = h_norm_sqr(v).sqrt();
    let mut out = if h > 0.0 {
        v / Complex64::new(h, 0.0)
    } else {
        v.clone()
    };
    fix_sign(&mut out);
    out
}
