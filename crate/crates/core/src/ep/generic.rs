//! EP search for families of any size.
//!
//! A coarse grid over the search box locates local minima of the smallest
//! eigenvalue gap. In 2-D boxes each minimum seeds a damped Newton iteration
//! on `(Re Disc, Im Disc) = 0`, with the Jacobian from forward-mode
//! derivatives of the discriminant. 1-D boxes refine each minimum of the gap
//! by golden-section search instead.
//!
//! When the other eigenvalues crowd the coalescing pair the discriminant is
//! poorly conditioned and its Newton iteration stalls short of machine
//! precision. Each 2-D root is therefore finished on the extended system
//! `(H − λ)x = 0, xᵀx = 0, cᴴx = 1`, which is regular at a generic EP.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::discriminant::{matrix_discriminant, Dual, Square};
use super::{certify, dedupe, CertifyConfig, EpCandidate, EpError, SearchBox};
use crate::eigensolver::solve;
use crate::hamiltonian::HamiltonianFamily;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocateConfig {
    /// Coarse grid points along `p` and `q` (`q` ignored for 1-D boxes).
    pub grid: (usize, usize),
    /// Candidates closer than this in search coordinates are merged.
    pub merge_radius: f64,
    pub max_seeds: usize,
    pub newton_max_iter: usize,
    /// 2-D results whose gap exceeds this multiple of the gap tolerance are dropped.
    pub keep_gap_factor: f64,
    pub certify: CertifyConfig,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self {
            grid: (101, 101),
            merge_radius: 1e-4,
            max_seeds: 64,
            newton_max_iter: 100,
            keep_gap_factor: 1e3,
            certify: CertifyConfig::default(),
        }
    }
}

/// `Disc(a, z)` and its derivative along `(da, dz)`.
pub fn family_discriminant(family: &HamiltonianFamily, a: f64, z: Complex64, da: f64, dz: Complex64) -> Dual {
    let n = family.dim();
    let levels = family.levels();
    let mut m = Square::<Dual>::zeros(n);
    for i in 0..n {
        m.set(i, i, Dual::new(levels[i].epsilon(a), levels[i].epsilon_slope() * da));
        for j in 0..n {
            if i != j {
                let w = family.coupling().get(i, j);
                m.set(i, j, Dual::new(z * w, dz * w));
            }
        }
    }
    matrix_discriminant(&m)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn min_gap_at(family: &HamiltonianFamily, search: &SearchBox, p: f64, q: f64) -> f64 {
    let (a, z) = search.map(p, q);
    let h = family.with_coupling_scaled(z).evaluate(a);
    solve(&h).map(|s| s.min_gap().0).unwrap_or(f64::INFINITY)
}

/// Grid points that are no larger than any of their neighbours.
fn grid_minima(values: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let (np, nq) = (values.len(), values[0].len());
    let mut out = Vec::new();
    for i in 0..np {
        for j in 0..nq {
            let v = values[i][j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= np as i64 || jj >= nq as i64 {
                        continue;
                    }
                    if values[ii as usize][jj as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                out.push((i, j, v));
            }
        }
    }
    out.sort_by(|x, y| x.2.total_cmp(&y.2));
    out
}

fn newton(family: &HamiltonianFamily, search: &SearchBox, mut p: f64, mut q: f64, max_iter: usize) -> (f64, f64) {
    let [tp, tq] = search.tangents();
    let eval = |p: f64, q: f64| {
        let (a, z) = search.map(p, q);
        let dp = family_discriminant(family, a, z, tp.0, tp.1);
        let dq = family_discriminant(family, a, z, tq.0, tq.1);
        (dp.v, dp.d, dq.d)
    };
    let (mut d, mut dp, mut dq) = eval(p, q);
    for _ in 0..max_iter {
        // J = [[Re D_p, Re D_q], [Im D_p, Im D_q]]
        let det = dp.re * dq.im - dq.re * dp.im;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let sp = -(dq.im * d.re - dq.re * d.im) / det;
        let sq = -(-dp.im * d.re + dp.re * d.im) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (np, nq) = (p + lambda * sp, q + lambda * sq);
            let trial = eval(np, nq);
            if trial.0.norm() < d.norm() {
                p = np;
                q = nq;
                (d, dp, dq) = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let step = lambda * sp.hypot(sq);
        if !accepted || step <= 1e-16 * (1.0 + p.hypot(q)) || d.norm() == 0.0 {
            break;
        }
    }
    (p, q)
}

/// Newton on the extended EP system in unknowns `(p, q, λ, x)`.
///
/// Returns the polished `(p, q)` or `None` if the iteration diverged.
fn polish_extended(family: &HamiltonianFamily, search: &SearchBox, p: f64, q: f64) -> Option<(f64, f64)> {
    let n = family.dim();
    let (a, z) = search.map(p, q);
    let sys = solve(&family.with_coupling_scaled(z).evaluate(a)).ok()?;
    let (_, (i, j)) = sys.min_gap();
    let mut lam = 0.5 * (sys.eigenvalues[i] + sys.eigenvalues[j]);
    let mut x = sys.unit_vector(i);
    let c = x.clone();
    let (mut p, mut q) = (p, q);
    let tangents = search.tangents();
    let eps_slope: Vec<Complex64> = family.levels().iter().map(|l| l.epsilon_slope()).collect();
    let v = family.coupling_matrix();
    let i1 = Complex64::new(0.0, 1.0);
    let residual = |p: f64, q: f64, lam: Complex64, x: &DVector<Complex64>| {
        let (a, z) = search.map(p, q);
        let h = family.with_coupling_scaled(z).evaluate(a).matrix;
        let mut f = DVector::<Complex64>::zeros(n + 2);
        let r = &h * x - x * lam;
        f.rows_mut(0, n).copy_from(&r);
        f[n] = x.dot(x);
        f[n + 1] = c.dotc(x) - Complex64::new(1.0, 0.0);
        (h, f)
    };
    let norm = |f: &DVector<Complex64>| f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (mut h, mut f) = residual(p, q, lam, &x);
    for _ in 0..30 {
        let cols = 2 * n + 4;
        let mut jac = DMatrix::<f64>::zeros(cols, cols);
        let mut put = |col: usize, v: &DVector<Complex64>| {
            for r in 0..n + 2 {
                jac[(r, col)] = v[r].re;
                jac[(n + 2 + r, col)] = v[r].im;
            }
        };
        for (k, &(da, dz)) in tangents.iter().enumerate() {
            let mut col = DVector::<Complex64>::zeros(n + 2);
            for r in 0..n {
                let mut acc = eps_slope[r] * da * x[r];
                for m in 0..n {
                    acc += dz * v[(r, m)] * x[m];
                }
                col[r] = acc;
            }
            put(k, &col);
        }
        let mut col = DVector::<Complex64>::zeros(n + 2);
        col.rows_mut(0, n).copy_from(&(-&x));
        put(2, &col);
        col.rows_mut(0, n).copy_from(&(-&x * i1));
        put(3, &col);
        for k in 0..n {
            let mut col = DVector::<Complex64>::zeros(n + 2);
            for r in 0..n {
                col[r] = h[(r, k)] - if r == k { lam } else { Complex64::new(0.0, 0.0) };
            }
            col[n] = 2.0 * x[k];
            col[n + 1] = c[k].conj();
            put(4 + k, &col);
            put(4 + n + k, &(col * i1));
        }
        let mut rhs = DVector::<f64>::zeros(cols);
        for r in 0..n + 2 {
            rhs[r] = -f[r].re;
            rhs[n + 2 + r] = -f[r].im;
        }
        let step = jac.lu().solve(&rhs)?;
        p += step[0];
        q += step[1];
        lam += Complex64::new(step[2], step[3]);
        for k in 0..n {
            x[k] += Complex64::new(step[4 + k], step[4 + n + k]);
        }
        let before = norm(&f);
        (h, f) = residual(p, q, lam, &x);
        if !p.is_finite() || !q.is_finite() {
            return None;
        }
        let size = step[0].hypot(step[1]);
        if size <= 1e-16 * (1.0 + p.hypot(q)) || norm(&f) >= before {
            break;
        }
    }
    Some((p, q))
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        x1
    } else {
        x2
    }
}

/// Finds EP candidates of `family` inside `search`.
pub fn locate_generic(
    family: &HamiltonianFamily,
    search: &SearchBox,
    cfg: &LocateConfig,
) -> Result<Vec<EpCandidate>, EpError> {
    search.validate()?;
    if family.coupling().is_zero() {
        return Err(EpError::NoCandidate);
    }
    let ((p0, p1), (q0, q1)) = search.ranges();
    let ps = linspace(p0, p1, cfg.grid.0.max(3));
    let qs = if search.is_two_dimensional() {
        linspace(q0, q1, cfg.grid.1.max(3))
    } else {
        vec![0.0]
    };
    let values: Vec<Vec<f64>> = ps
        .par_iter()
        .map(|&p| qs.iter().map(|&q| min_gap_at(family, search, p, q)).collect())
        .collect();
    let seeds: Vec<(usize, usize, f64)> = grid_minima(&values).into_iter().take(cfg.max_seeds).collect();

    let found: Vec<Result<Option<EpCandidate>, EpError>> = seeds
        .par_iter()
        .map(|&(i, j, _)| {
            if search.is_two_dimensional() {
                let (p, q) = newton(family, search, ps[i], qs[j], cfg.newton_max_iter);
                let (p, q) = polish_extended(family, search, p, q).unwrap_or((p, q));
                if !search.contains(p, q, 0.0) {
                    return Ok(None);
                }
                let cand = certify(family, search, p, q, &cfg.certify)?;
                Ok((cand.gap <= cfg.keep_gap_factor * cand.gap_tolerance).then_some(cand))
            } else {
                let lo = ps[i.saturating_sub(1)];
                let hi = ps[(i + 1).min(ps.len() - 1)];
                let p = golden_section(|p| min_gap_at(family, search, p, 0.0), lo, hi);
                Ok(Some(certify(family, search, p, 0.0, &cfg.certify)?))
            }
        })
        .collect();
    let mut candidates = Vec::new();
    for f in found {
        if let Some(c) = f? {
            candidates.push(c);
        }
    }
    let out = dedupe(candidates, cfg.merge_radius);
    if out.is_empty() {
        Err(EpError::NoCandidate)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{CouplingMatrix, LevelSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kato_block_with_spectator_level() {
        let levels = vec![
            LevelSpec::with_constant_width(1.0, 0.0, 0.0),
            LevelSpec::with_constant_width(-1.0, 0.0, 0.0),
            LevelSpec::with_constant_width(5.0, 0.0, 0.0),
        ];
        let coupling = CouplingMatrix::from_pairs(3, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let fam = HamiltonianFamily::new(levels, coupling).unwrap();
        let search = SearchBox::ComplexCoupling {
            a: 0.0,
            re: (-0.5, 0.5),
            im: (-1.5, 1.5),
        };
        let found = locate_generic(&fam, &search, &LocateConfig::default()).unwrap();
        assert_eq!(found.len(), 2, "{found:?}");
        for (cand, want) in found.iter().zip([c(0.0, -1.0), c(0.0, 1.0)]) {
            assert!((cand.location.coupling_factor() - want).norm() < 1e-8, "{cand:?}");
            assert!(cand.eigenvalue.norm() < 1e-8);
            assert_eq!(cand.branch_pair, (0, 1));
            assert!(cand.certified, "{cand:?}");
        }
    }

    #[test]
    fn zero_coupling_has_no_candidate() {
        let fam = HamiltonianFamily::uniform(
            vec![
                LevelSpec::with_constant_width(1.0, -0.5, -0.495),
                LevelSpec::with_constant_width(0.0, 1.0, -0.493),
            ],
            c(0.0, 0.0),
        )
        .unwrap();
        let search = SearchBox::ParameterAndScale { a: (0.0, 1.0), s: (0.0, 2.0) };
        assert_eq!(locate_generic(&fam, &search, &LocateConfig::default()), Err(EpError::NoCandidate));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7);
    }
}
