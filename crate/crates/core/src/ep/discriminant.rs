//! Characteristic-polynomial discriminant with forward-mode derivatives.
//!
//! `Disc(p) = (−1)^{n(n−1)/2} Res(p, p′)` for monic `p` of degree `n`; it
//! vanishes exactly where two eigenvalues coincide. The resultant is the
//! determinant of the Sylvester matrix. Everything is generic over [`Scalar`]
//! so the same code yields `∂Disc/∂t` along a direction in parameter space
//! when evaluated on [`Dual`] numbers.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_complex(z: Complex64) -> Self;
    /// Magnitude of the value part, used for pivoting.
    fn magnitude(&self) -> f64;

    fn zero() -> Self {
        Self::from_complex(Complex64::new(0.0, 0.0))
    }

    fn one() -> Self {
        Self::from_complex(Complex64::new(1.0, 0.0))
    }
}

impl Scalar for Complex64 {
    fn from_complex(z: Complex64) -> Self {
        z
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// `v + d·t` with `t² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    pub fn new(v: Complex64, d: Complex64) -> Self {
        Self { v, d }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Self::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn from_complex(z: Complex64) -> Self {
        Self::new(z, Complex64::new(0.0, 0.0))
    }

    fn magnitude(&self) -> f64 {
        self.v.norm()
    }
}

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct Square<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Square<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    let idx = i * n + j;
                    out.data[idx] = out.data[idx] + a * o.get(k, j);
                }
            }
        }
        out
    }

    fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }
}

/// Monic characteristic polynomial `det(λ − A)` by Faddeev–LeVerrier.
///
/// Returns `c` with `p(λ) = Σ_k c[k] λ^k` and `c[n] = 1`.
pub fn char_poly<T: Scalar>(a: &Square<T>) -> Vec<T> {
    let n = a.n;
    let mut c = vec![T::zero(); n + 1];
    c[n] = T::one();
    let mut m = Square::<T>::zeros(n);
    for k in 1..=n {
        // M_k = A M_{k−1} + c_{n−k+1} I
        let mut next = a.mul(&m);
        for i in 0..n {
            next.set(i, i, next.get(i, i) + c[n - k + 1]);
        }
        let am = a.mul(&next);
        let kk = T::from_complex(Complex64::new(k as f64, 0.0));
        c[n - k] = -(am.trace() / kk);
        m = next;
    }
    c
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<T: Scalar>(mut m: Square<T>) -> T {
    let n = m.n;
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m.get(x, col).magnitude().total_cmp(&m.get(y, col).magnitude()))
            .unwrap();
        if m.get(pivot, col).magnitude() == 0.0 {
            return T::zero();
        }
        if pivot != col {
            for j in 0..n {
                let t = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, t);
            }
            det = -det;
        }
        let p = m.get(col, col);
        det = det * p;
        for i in col + 1..n {
            let f = m.get(i, col) / p;
            for j in col..n {
                m.set(i, j, m.get(i, j) - f * m.get(col, j));
            }
        }
    }
    det
}

/// Resultant of `p` and `q` (coefficients in ascending powers) via the
/// Sylvester matrix.
pub fn resultant<T: Scalar>(p: &[T], q: &[T]) -> T {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    let size = dp + dq;
    let mut s = Square::<T>::zeros(size);
    for r in 0..dq {
        for (k, &c) in p.iter().rev().enumerate() {
            s.set(r, r + k, c);
        }
    }
    for r in 0..dp {
        for (k, &c) in q.iter().rev().enumerate() {
            s.set(dq + r, r + k, c);
        }
    }
    determinant(s)
}

/// Discriminant of a monic polynomial (ascending coefficients).
pub fn discriminant<T: Scalar>(p: &[T]) -> T {
    let n = p.len() - 1;
    let dp: Vec<T> = (1..=n)
        .map(|k| p[k] * T::from_complex(Complex64::new(k as f64, 0.0)))
        .collect();
    let res = resultant(p, &dp);
    if (n * (n - 1) / 2) % 2 == 1 {
        -res
    } else {
        res
    }
}

/// Discriminant of `det(λ − M)`.
pub fn matrix_discriminant<T: Scalar>(m: &Square<T>) -> T {
    discriminant(&char_poly(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut p = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![c(0.0, 0.0); p.len() + 1];
            for (k, &a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            p = next;
        }
        p
    }

    #[test]
    fn discriminant_is_product_of_squared_root_differences() {
        let roots = [c(0.3, -0.1), c(-1.0, 0.5), c(2.0, 0.0), c(0.1, 0.7)];
        let mut expected = c(1.0, 0.0);
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                expected *= (roots[i] - roots[j]).powi(2);
            }
        }
        let d = discriminant(&from_roots(&roots));
        assert!((d - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn char_poly_of_companion_like_matrix() {
        let mut m = Square::<Complex64>::zeros(3);
        let vals = [c(1.0, 0.0), c(2.0, 1.0), c(0.5, 0.0), c(2.0, 1.0), c(-1.0, 0.0), c(0.0, 0.3), c(0.5, 0.0), c(0.0, 0.3), c(0.2, -0.2)];
        m.data = vals.to_vec();
        let p = char_poly(&m);
        let tr = m.get(0, 0) + m.get(1, 1) + m.get(2, 2);
        assert!((p[2] + tr).norm() < 1e-14);
        let det = determinant(m.clone());
        assert!((p[0] + det).norm() < 1e-13);
    }

    #[test]
    fn dual_derivative_matches_difference_quotient() {
        // d/dt Disc([[t, 1], [1, −t]]) = d/dt (4t² + 4) = 8t
        let t0 = c(0.7, 0.2);
        let mut m = Square::<Dual>::zeros(2);
        m.set(0, 0, Dual::new(t0, c(1.0, 0.0)));
        m.set(1, 1, Dual::new(-t0, c(-1.0, 0.0)));
        m.set(0, 1, Dual::from_complex(c(1.0, 0.0)));
        m.set(1, 0, Dual::from_complex(c(1.0, 0.0)));
        let d = matrix_discriminant(&m);
        assert!((d.v - (4.0 * t0 * t0 + 4.0)).norm() < 1e-14);
        assert!((d.d - 8.0 * t0).norm() < 1e-14);
    }
}
