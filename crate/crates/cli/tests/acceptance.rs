//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines come out in order. A
//! criterion listed in `KNOWN_FAILING` still runs and prints FAIL; it only
//! stops counting against the exit status. If it starts passing the run
//! fails so the list gets updated.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use nhep_cli::bundled;
use nhep_cli::config::ExperimentConfig;
use nhep_cli::run::{locate, width_bifurcation, HUMP_PROMINENCE};
use nhep_core::assignment::pair_eigenvalues;
use nhep_core::eigensolver::c_dot;
use nhep_core::smatrix::poles_at;
use nhep_core::{
    alignment_defect, diagnose, find_humps, locate_2x2, run_sweep, s_matrix, s_matrix_ep, scenarios, solve,
    solve2, solve3, solve_generic, xsec_contour, xsec_contour_pair, xsec_scan, CertifyConfig, Complex64,
    ConcreteHamiltonian, EigenSystem, EnergyGrid, EpLocation, HamiltonianFamily, ResonanceSet, SweepConfig,
    TwoLevelMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Contour minima and width bifurcation do not coincide; see the decisions ledger.
const KNOWN_FAILING: &[u32] = &[11];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config(name: &str) -> ExperimentConfig {
    bundled::find(name).expect("bundled").parse().expect("valid bundled config")
}

fn unit_disc(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if z.norm() < 1.0 {
            return z;
        }
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> ConcreteHamiltonian {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = unit_disc(rng);
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    ConcreteHamiltonian::from_matrix(m, 0.0).unwrap()
}

fn figure_families() -> Vec<(&'static str, HamiltonianFamily)> {
    vec![
        ("fig1_left", scenarios::two_level_weak()),
        ("fig1_right", scenarios::two_level_strong()),
        ("fig2_left", scenarios::three_level_weak()),
        ("fig2_right", scenarios::three_level_strong()),
    ]
}

fn kato_ep() -> Outcome {
    let start = Instant::now();
    let found = locate_2x2(
        &HamiltonianFamily::kato(c(1.0, 0.0)),
        TwoLevelMode::ComplexCoupling { a: 0.0 },
        &CertifyConfig::default(),
    );
    let elapsed = start.elapsed();
    let Ok(found) = found else {
        return outcome(false, format!("{found:?}"));
    };
    let kappas: Vec<Complex64> = found.iter().map(|f| f.location.coupling_factor()).collect();
    let err = |target: Complex64| kappas.iter().map(|k| (k - target).norm()).fold(f64::INFINITY, f64::min);
    let (ep, em) = (err(c(0.0, 1.0)), err(c(0.0, -1.0)));
    let eig = found.iter().map(|f| f.eigenvalue.norm()).fold(0.0, f64::max);
    outcome(
        found.len() == 2 && ep <= 1e-8 && em <= 1e-8 && eig <= 1e-8 && elapsed < Duration::from_millis(100),
        format!("|κ−i| = {ep:.1e}, |κ+i| = {em:.1e}, max|𝓔| = {eig:.1e}, {elapsed:.2?}"),
    )
}

fn compare(fast: &EigenSystem, reference: &EigenSystem) -> (f64, f64) {
    let (perm, worst) = pair_eigenvalues(&fast.eigenvalues, &reference.eigenvalues);
    let vec_err = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (&fast.vectors[i] - &reference.vectors[j]).norm())
        .fold(0.0, f64::max);
    (worst, vec_err)
}

fn closed_vs_generic() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut val, mut vec) = (0.0f64, 0.0f64);
    for n in [2, 3] {
        let mut done = 0;
        while done < 1000 {
            let h = random_symmetric(&mut rng, n);
            let reference = solve_generic(&h).unwrap();
            if reference.min_gap().0 <= 1e-6 {
                continue;
            }
            let fast = if n == 2 { solve2(&h) } else { solve3(&h) }.unwrap();
            let (v, w) = compare(&fast, &reference);
            val = val.max(v);
            vec = vec.max(w);
            done += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        val <= 1e-9 && vec <= 1e-7 && elapsed < Duration::from_secs(5),
        format!("2000 matrices: eigenvalues {val:.1e}, eigenvectors {vec:.1e}, {elapsed:.2?}"),
    )
}

/// Worst c-orthonormality and relative trace errors of one solve.
fn orthonormality(h: &ConcreteHamiltonian, sys: &EigenSystem) -> (f64, f64) {
    let mut orth = 0.0f64;
    for i in 0..sys.dim() {
        for j in 0..sys.dim() {
            if sys.degenerate[i] || sys.degenerate[j] {
                continue;
            }
            let want = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((c_dot(&sys.vectors[i], &sys.vectors[j]) - want).norm());
        }
    }
    (orth, (sys.eigenvalue_sum() - h.trace()).norm() / h.scale())
}

fn orthonormal_and_trace() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut orth, mut trace, mut solves, mut skipped) = (0.0f64, 0.0f64, 0usize, 0usize);
    let mut check = |h: &ConcreteHamiltonian| {
        for sys in [solve(h).unwrap(), solve_generic(h).unwrap()] {
            let (o, t) = orthonormality(h, &sys);
            orth = orth.max(o);
            trace = trace.max(t);
            skipped += sys.degenerate.iter().filter(|&&d| d).count();
            solves += 1;
        }
    };
    for n in 2..=6 {
        for _ in 0..500 {
            check(&random_symmetric(&mut rng, n));
        }
    }
    for (_, fam) in figure_families() {
        for a in SweepConfig::default().grid() {
            check(&fam.evaluate(a));
        }
    }
    outcome(
        orth <= 1e-8 && trace <= 1e-12,
        format!("{solves} solves: c-orthonormality {orth:.1e}, trace {trace:.1e}·scale, {skipped} degenerate states"),
    )
}

fn decoupled_limit() -> Outcome {
    let (mut r_err, mut b_err, mut e_err, mut suspects) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for (_, fam) in figure_families() {
        let free = fam.decoupled();
        let res = run_sweep(&free, &SweepConfig::default()).unwrap();
        suspects += res.ep_suspects.len();
        for (k, &a) in res.grid.iter().enumerate() {
            let eps = fam.epsilons(a);
            for (i, branch) in res.branches.iter().enumerate() {
                let p = &branch[k];
                e_err = e_err.max((p.eigenvalue - eps[i]).norm());
                r_err = r_err.max((p.rigidity - 1.0).abs());
                match &p.mixing_abs {
                    Some(row) => {
                        for (j, b) in row.iter().enumerate() {
                            b_err = b_err.max((b - if i == j { 1.0 } else { 0.0 }).abs());
                        }
                    }
                    None => b_err = f64::INFINITY,
                }
            }
        }
    }
    outcome(
        r_err <= 1e-12 && b_err <= 1e-12 && e_err <= 1e-12 && suspects == 0,
        format!("|r−1| {r_err:.1e}, |b−δ| {b_err:.1e}, |𝓔−ε| {e_err:.1e}, {suspects} suspects"),
    )
}

fn rigidity_mixing_limits() -> Outcome {
    // for two levels Σ_j|b_ij|² = 1/r, so the mixing sum passes 10³ only
    // beyond s = 1 − 10⁻⁶; the ray is sampled up to 1 − 10⁻⁸
    let mut s_values: Vec<f64> = (0..100).map(|k| k as f64 / 100.0).collect();
    s_values.extend((3..=8).map(|k| 1.0 - 10f64.powi(-k)));
    let (mut last_r, mut last_mix) = (f64::INFINITY, -1.0);
    let (mut monotone, mut r_pinned) = (true, f64::NAN);
    for &s in &s_values {
        let sys = solve(&HamiltonianFamily::kato(c(0.0, s)).evaluate(0.0)).unwrap();
        let d = diagnose(&sys).unwrap();
        let r = d.rigidity.iter().copied().fold(f64::INFINITY, f64::min);
        let mix = d
            .mixing_abs
            .iter()
            .map(|row| row.as_ref().map_or(f64::INFINITY, |b| b.iter().map(|x| x * x).sum()))
            .fold(f64::INFINITY, f64::min);
        monotone &= r <= last_r && mix >= last_mix;
        if s == 1.0 - 1e-6 {
            r_pinned = r;
        }
        last_r = r;
        last_mix = mix;
    }
    outcome(
        monotone && r_pinned < 0.01 && last_mix > 1e3,
        format!("monotone {monotone}, r(1−1e−6) = {r_pinned:.2e}, Σ|b|²(1−1e−8) = {last_mix:.3e}"),
    )
}

fn max_width_bifurcation() -> Outcome {
    let fam = scenarios::two_level_equal_widths(-0.5, 0.1);
    let res = run_sweep(&fam, &SweepConfig::default()).unwrap();
    let wb = &width_bifurcation(&res)[0];
    let k = res.grid.iter().position(|&a| a == wb.a).unwrap();
    let (p, q) = (&res.branches[0][k], &res.branches[1][k]);
    let b = |row: &Option<Vec<f64>>, j: usize| row.as_ref().map_or(f64::NAN, |r| r[j]);
    let b12 = [b(&p.mixing_abs, 1), b(&q.mixing_abs, 0)];
    let r = p.rigidity.min(q.rigidity);
    let ok_b = b12.iter().all(|b| (b - 0.7).abs() <= 0.05);
    outcome(
        r > 0.9 && ok_b,
        format!("at a = {}: r = {r:.4}, |b_12| = {:.4}, |b_21| = {:.4}", wb.a, b12[0], b12[1]),
    )
}

fn ep_eigenvectors() -> Outcome {
    let defect = |kappa: Complex64| {
        let sys = solve(&HamiltonianFamily::kato(kappa).evaluate(0.0)).unwrap();
        alignment_defect(&sys, 0, 1)
    };
    let along = defect(c(0.0, 1.0 - 1e-6));
    let across = defect(c(1e-6, 1.0));
    outcome(
        along < 0.01 && across < 0.01,
        format!("defect {along:.2e} (κ = i(1−1e−6)), {across:.2e} (κ = i + 1e−6)"),
    )
}

fn s_matrix_algebra() -> Outcome {
    let energies: Vec<f64> = (0..10_000).map(|k| -10.0 + 20.0 * k as f64 / 9999.0).collect();
    let mut unimodular = 0.0f64;
    for fam in [scenarios::two_level_weak(), scenarios::two_level_strong()] {
        for a in SweepConfig::over(0.0, 1.0, 101).grid() {
            let set = poles_at(&fam, a, true).unwrap();
            for &e in &energies {
                unimodular = unimodular.max((s_matrix(&set, e).unwrap().norm() - 1.0).abs());
            }
        }
    }
    // coalesced pole of the weakly coupled family and a broad made-up one
    let ep = locate_2x2(
        &scenarios::two_level_weak(),
        TwoLevelMode::ParameterAndScale,
        &CertifyConfig::default(),
    )
    .unwrap();
    let pole = ep[0].eigenvalue;
    let mut coalesced = 0.0f64;
    for p in [pole, c(0.3, -0.8)] {
        let double = ResonanceSet::new(vec![p, p]).unwrap();
        for &e in &energies {
            let d = (s_matrix_ep(p.re, 2.0 * p.im, e) - s_matrix(&double, e).unwrap()).norm();
            coalesced = coalesced.max(d);
        }
    }
    outcome(
        unimodular <= 1e-12 && coalesced <= 1e-12,
        format!("||S|−1| {unimodular:.1e} over 2·101·10⁴ points, coalesced form {coalesced:.1e}"),
    )
}

/// Maxima and interior minima of σ(E) at each scan parameter.
fn hump_counts(cfg: &ExperimentConfig, use_coupling: bool) -> Vec<(f64, usize, usize)> {
    cfg.scan_params
        .iter()
        .map(|&a| {
            let coupled = poles_at(&cfg.family, a, true).unwrap();
            let energies = cfg.energy_grid.resolve(coupled.poles()).unwrap();
            let set = if use_coupling {
                coupled
            } else {
                poles_at(&cfg.family, a, false).unwrap()
            };
            let humps = find_humps(&xsec_scan(&set, &energies).unwrap(), HUMP_PROMINENCE);
            (a, humps.maxima.len(), humps.minima.len())
        })
        .collect()
}

fn fmt_counts(counts: &[(f64, usize, usize)]) -> String {
    counts
        .iter()
        .map(|(a, m, d)| format!("a={a}: {m}/{d}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn hump_counting() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in [("fig3", 2), ("fig4", 2), ("fig5", 3)] {
        let counts = hump_counts(&config(name), true);
        ok &= counts.iter().all(|&(_, m, d)| m == want && (want != 2 || d == 1));
        parts.push(format!("{name} [{}]", fmt_counts(&counts)));
    }
    outcome(ok, format!("maxima/dips: {}", parts.join(", ")))
}

fn em_comparison() -> Outcome {
    let diff = |name: &str| {
        let cfg = config(name);
        let (with, without) = xsec_contour_pair(&cfg.family, &cfg.contour, &cfg.energy_grid).unwrap();
        with.max_abs_difference(&without).unwrap()
    };
    let (d3, d4) = (diff("fig3"), diff("fig4"));
    let mut same = true;
    for name in ["fig3", "fig5"] {
        let cfg = config(name);
        let strip = |v: Vec<(f64, usize, usize)>| v.into_iter().map(|(_, m, _)| m).collect::<Vec<_>>();
        same &= strip(hump_counts(&cfg, true)) == strip(hump_counts(&cfg, false));
    }
    outcome(
        d3 < d4 && same,
        format!("max|σ_ω − σ_0|: fig3 {d3:.3e}, fig4 {d4:.3e}; hump counts equal: {same}"),
    )
}

fn contour_minimum() -> Outcome {
    let cfg = config("fig4");
    let grid = xsec_contour(&cfg.family, &cfg.contour, &cfg.energy_grid, true).unwrap();
    let minima = grid.row_minima();
    let (k, min) = minima
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, &m)| if m < best.1 { (k, m) } else { best });
    let a_min = grid.params[k];
    let largest_row_min = minima.iter().copied().fold(0.0, f64::max);

    let res = run_sweep(&cfg.family, &SweepConfig::default()).unwrap();
    let widths: Vec<f64> = res.branches[0]
        .iter()
        .zip(&res.branches[1])
        .map(|(p, q)| (p.width() - q.width()).abs())
        .collect();
    let max = widths.iter().copied().fold(0.0, f64::max);
    let inside: Vec<f64> = res
        .grid
        .iter()
        .zip(&widths)
        .filter(|(_, &w)| w >= 0.95 * max)
        .map(|(&a, _)| a)
        .collect();
    let (lo, hi) = (inside[0], inside[inside.len() - 1]);
    outcome(
        (lo..=hi).contains(&a_min),
        format!(
            "argmin_a min_E σ = {a_min:.4} (σ = {min:.1e}; largest row minimum {largest_row_min:.1e}), \
             interval [{lo:.4}, {hi:.4}]"
        ),
    )
}

fn third_order_shielding() -> Outcome {
    let cfg = config("fig2_left");
    let (_, candidates, clusters) = locate(&cfg.family, cfg.ep.as_ref().unwrap()).unwrap();
    let second: Vec<&_> = candidates.iter().filter(|c| c.certified).collect();
    let third = candidates.iter().filter(|c| c.order3_consistent).count();
    let located: Vec<String> = second
        .iter()
        .map(|c| match c.location {
            EpLocation::ParameterAndScale { a, s } => {
                format!("({a:.4}, {s:.4}) q={:.3}", c.order.as_ref().map_or(f64::NAN, |o| o.exponent))
            }
            other => format!("{other:?}"),
        })
        .collect();
    outcome(
        second.len() >= 2 && third == 0,
        format!(
            "{} certified second order [{}], {third} order-3 consistent, {} cluster(s)",
            second.len(),
            located.join(", "),
            clusters.len()
        ),
    )
}

fn performance() -> Outcome {
    let fam = scenarios::three_level_weak();
    let start = Instant::now();
    let res = run_sweep(&fam, &SweepConfig::default()).unwrap();
    let sweep = start.elapsed();
    let start = Instant::now();
    let grid = xsec_contour(
        &fam,
        &SweepConfig::over(0.0, 1.0, 200),
        &EnergyGrid::Auto { steps: 2001 },
        true,
    )
    .unwrap();
    let contour = start.elapsed();
    let shape = (grid.sigma.len(), grid.energies.len());
    outcome(
        sweep < Duration::from_secs(1) && contour < Duration::from_secs(10) && shape == (200, 2001),
        format!(
            "N = 3 sweep ({} points incl. refinement) {sweep:.2?}, 200×2001 contour {contour:.2?}",
            res.grid.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 13] = [
        (1, "Kato EP oracle", kato_ep),
        (2, "closed form vs generic eigensolver", closed_vs_generic),
        (3, "c-orthonormality and trace", orthonormal_and_trace),
        (4, "decoupled limit", decoupled_limit),
        (5, "rigidity/mixing EP limits", rigidity_mixing_limits),
        (6, "maximum width bifurcation", max_width_bifurcation),
        (7, "EP eigenvector relation", ep_eigenvectors),
        (8, "S-matrix algebra", s_matrix_algebra),
        (9, "hump counting", hump_counting),
        (10, "with/without external mixing", em_comparison),
        (11, "contour minimum location", contour_minimum),
        (12, "third-order shielding", third_order_shielding),
        (13, "performance", performance),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_FAILING.contains(&id);
        let note = if known && !o.pass { " (known, see ledger)" } else { "" };
        println!(
            "{status} [{id:>2}] {name}: {} ({:.2?}){note}",
            o.detail,
            start.elapsed()
        );
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
