use nalgebra::DVector;
use num_complex::Complex64;

use super::generic::inverse_iteration;
use super::{is_diagonal, EigenError, EigenSystem, DEGENERATE_GAP_TOL};
use crate::hamiltonian::ConcreteHamiltonian;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Closed-form solution of a 2×2 complex-symmetric matrix.
///
/// `𝓔_± = (ε₁+ε₂)/2 ± Z` with `Z = ½·√((ε₁−ε₂)² + 4ω²)` on the principal
/// branch; the `+Z` root comes first. Both states are flagged degenerate
/// when `|Z|` vanishes relative to the matrix scale.
pub fn solve2(h: &ConcreteHamiltonian) -> Result<EigenSystem, EigenError> {
    if h.dim() != 2 {
        return Err(EigenError::WrongDimension {
            expected: 2,
            got: h.dim(),
        });
    }
    if is_diagonal(h) {
        return Ok(EigenSystem::diagonal(h));
    }
    let e1 = h.matrix[(0, 0)];
    let e2 = h.matrix[(1, 1)];
    let w = h.matrix[(0, 1)];
    let half_diff = (e1 - e2) * 0.5;
    let z = (half_diff * half_diff + w * w).sqrt();
    let mean = (e1 + e2) * 0.5;
    let lambdas = vec![mean + z, mean - z];

    let coalesced = z.norm() < DEGENERATE_GAP_TOL * h.scale();
    let raw = lambdas
        .iter()
        .map(|&lam| {
            // two expressions for the null vector of (H − λ); keep the larger
            let first = DVector::from_vec(vec![w, lam - e1]);
            let second = DVector::from_vec(vec![lam - e2, w]);
            if first.norm_squared() >= second.norm_squared() {
                first
            } else {
                second
            }
        })
        .collect();
    Ok(EigenSystem::from_raw(lambdas, raw, &[coalesced, coalesced]))
}

/// Closed-form solution of a 3×3 complex-symmetric matrix.
///
/// The characteristic polynomial of the trace-shifted matrix is a depressed
/// cubic `t³ + p·t + q`. Its roots come from Cardano's formula using the
/// larger-modulus branch of the inner square root; exact double and triple
/// roots are detected from the cubic discriminant. Simple roots get one
/// Newton step. Eigenvectors are columns of the adjugate of `H − λI`.
pub fn solve3(h: &ConcreteHamiltonian) -> Result<EigenSystem, EigenError> {
    if h.dim() != 3 {
        return Err(EigenError::WrongDimension {
            expected: 3,
            got: h.dim(),
        });
    }
    if is_diagonal(h) {
        return Ok(EigenSystem::diagonal(h));
    }
    let scale = h.scale();
    let m = &h.matrix;
    let mu = m.trace() / 3.0;
    let a = [
        [m[(0, 0)] - mu, m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)] - mu, m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)] - mu],
    ];
    // t³ + p t + q = det(tI − A) for traceless A
    let p = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
        - a[0][1] * a[1][0]
        - a[0][2] * a[2][0]
        - a[1][2] * a[2][1];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let q = -det;

    let roots = depressed_cubic_roots(p, q, scale);
    let lambdas: Vec<Complex64> = roots.iter().map(|t| t + mu).collect();

    let mut coalesced = [false; 3];
    for i in 0..3 {
        for j in i + 1..3 {
            if (lambdas[i] - lambdas[j]).norm() < DEGENERATE_GAP_TOL * scale {
                coalesced[i] = true;
                coalesced[j] = true;
            }
        }
    }

    let mut raw: Vec<DVector<Complex64>> = Vec::with_capacity(3);
    for (k, &lam) in lambdas.iter().enumerate() {
        match adjugate_null_vector(h, lam, scale) {
            Some(v) => raw.push(v),
            None => {
                // rank ≤ 1: non-defective repeated eigenvalue
                let cluster: Vec<DVector<Complex64>> = (0..k)
                    .filter(|&j| (lambdas[j] - lam).norm() <= 1e-10 * scale)
                    .map(|j| raw[j].clone())
                    .collect();
                raw.push(inverse_iteration(h, lam, &cluster));
                coalesced[k] = false;
            }
        }
    }
    Ok(EigenSystem::from_raw(lambdas, raw, &coalesced))
}

fn depressed_cubic_roots(p: Complex64, q: Complex64, scale: f64) -> [Complex64; 3] {
    let tol = 64.0 * f64::EPSILON;
    if p.norm() <= tol * scale * scale && q.norm() <= tol * scale * scale * scale {
        return [ZERO; 3];
    }
    let p3 = p * p * p;
    let q2 = q * q;
    let disc = 4.0 * p3 + 27.0 * q2;
    if p.norm() > 0.0 && disc.norm() <= tol * (4.0 * p3.norm() + 27.0 * q2.norm()) {
        let double = -3.0 * q / (2.0 * p);
        let single = 3.0 * q / p;
        return [single, double, double];
    }

    let s = (q2 / 4.0 + p3 / 27.0).sqrt();
    let c1 = -q / 2.0 + s;
    let c2 = -q / 2.0 - s;
    let u3 = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let u = u3.cbrt();
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [ZERO; 3];
    let mut uk = u;
    for root in roots.iter_mut() {
        *root = uk - p / (3.0 * uk);
        uk *= omega;
    }
    for t in roots.iter_mut() {
        let f = *t * *t * *t + p * *t + q;
        let df = 3.0 * *t * *t + p;
        if df.norm() > 0.0 {
            let next = *t - f / df;
            let f_next = next * next * next + p * next + q;
            if f_next.norm() <= f.norm() {
                *t = next;
            }
        }
    }
    roots
}

/// Largest column of `adj(H − λI)`, or `None` when `H − λI` has rank ≤ 1.
fn adjugate_null_vector(h: &ConcreteHamiltonian, lam: Complex64, scale: f64) -> Option<DVector<Complex64>> {
    let m = &h.matrix;
    let row = |i: usize| -> [Complex64; 3] {
        let mut r = [m[(i, 0)], m[(i, 1)], m[(i, 2)]];
        r[i] -= lam;
        r
    };
    let rows = [row(0), row(1), row(2)];
    let cross = |x: &[Complex64; 3], y: &[Complex64; 3]| -> [Complex64; 3] {
        [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ]
    };
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let norm2 = |v: &[Complex64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let best = candidates
        .iter()
        .max_by(|x, y| norm2(x).total_cmp(&norm2(y)))
        .unwrap();
    if norm2(best).sqrt() <= 1e-13 * scale * scale {
        return None;
    }
    Some(DVector::from_vec(best.to_vec()))
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::eigensolver::c_dot;
    use crate::hamiltonian::kato_family;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym(n: usize, entries: &[Complex64]) -> ConcreteHamiltonian {
        ConcreteHamiltonian::from_matrix(DMatrix::from_row_slice(n, n, entries), 0.0).unwrap()
    }

    #[test]
    fn solve2_exceptional_point() {
        // (ε₁ − ε₂)² = −4ω²
        let h = sym(2, &[c(0.0, 0.5), c(0.5, 0.0), c(0.5, 0.0), c(0.0, -0.5)]);
        let sys = solve2(&h).unwrap();
        assert_eq!(sys.eigenvalues, vec![c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(sys.degenerate, vec![true, true]);
    }

    #[test]
    fn solve2_decoupled() {
        let h = sym(2, &[c(1.0, -0.495), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -0.493)]);
        let sys = solve2(&h).unwrap();
        assert_eq!(sys.eigenvalues, vec![c(1.0, -0.495), c(0.0, -0.493)]);
        assert_eq!(sys.vectors[0].as_slice(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(sys.vectors[1].as_slice(), &[c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn solve2_kato_real() {
        let sys = solve2(&kato_family(c(1.0, 0.0))).unwrap();
        let s2 = 2f64.sqrt();
        assert!((sys.eigenvalues[0] - c(s2, 0.0)).norm() < 1e-15);
        assert!((sys.eigenvalues[1] - c(-s2, 0.0)).norm() < 1e-15);
        for v in &sys.vectors {
            assert!(v.iter().all(|z| z.im.abs() < 1e-15));
            assert!((c_dot(v, v) - c(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(c_dot(&sys.vectors[0], &sys.vectors[1]).norm() < 1e-14);
    }

    #[test]
    fn solve2_kato_at_ep() {
        let sys = solve2(&kato_family(c(0.0, 1.0))).unwrap();
        assert!(sys.eigenvalues.iter().all(|l| l.norm() == 0.0));
        assert!(sys.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn solve3_diagonal_exact() {
        let h = sym(
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2.0, -0.5),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
            ],
        );
        let sys = solve3(&h).unwrap();
        assert_eq!(sys.eigenvalues, vec![c(1.0, 0.0), c(2.0, -0.5), c(3.0, 0.0)]);
    }

    #[test]
    fn solve3_kato_block() {
        let i = c(0.0, 1.0);
        let z = c(0.0, 0.0);
        let h = sym(3, &[c(1.0, 0.0), i, z, i, c(-1.0, 0.0), z, z, z, c(5.0, 0.0)]);
        let sys = solve3(&h).unwrap();
        let mut vals = sys.eigenvalues.clone();
        vals.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!(vals[0].norm() < 1e-14 && vals[1].norm() < 1e-14);
        assert!((vals[2] - c(5.0, 0.0)).norm() < 1e-14);
        assert_eq!(sys.degenerate.iter().filter(|&&d| d).count(), 2);
    }

    #[test]
    fn solve3_triple_root() {
        // 2·I plus the nilpotent complex-symmetric block N = Kato(i) ⊕ 0, N² = 0
        let n = [
            [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
            [c(0.0, 1.0), c(-1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        let mut e = Vec::new();
        for (r, row) in n.iter().enumerate() {
            for (col, z) in row.iter().enumerate() {
                e.push(if r == col { z + 2.0 } else { *z });
            }
        }
        let sys = solve3(&sym(3, &e)).unwrap();
        for l in &sys.eigenvalues {
            assert!((l - c(2.0, 0.0)).norm() < 1e-12);
        }
    }
}
