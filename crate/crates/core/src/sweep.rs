//! Parameter sweeps with continuous branch labels.
//!
//! Every grid point is solved independently; a sequential pass then carries
//! branch labels from one point to the next by a minimum-cost perfect
//! matching. The cost of continuing branch `b` with eigenpair `j` is
//!
//! ```text
//! |𝓔_b − 𝓔_j| / spread  +  (1 − |⟨Φ̂_b|Φ̂_j⟩|)
//! ```
//!
//! with `spread` the largest eigenvalue separation at the earlier point and
//! `Φ̂` unit Hermitian-norm eigenvectors. Intervals whose matching is
//! ambiguous (runner-up within 10% of the optimum) or where the spectrum is
//! nearly degenerate are bisected up to `max_refine_depth` times. Intervals
//! still ambiguous at full depth keep the eigenvalue-distance matching and
//! are flagged.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assignment::{min_cost_assignment, second_best_cost};
use crate::diagnostics::{diagnose, DiagnosticsError, StateDiagnostics};
use crate::eigensolver::{h_dot, solve, EigenError, EigenSystem};
use crate::hamiltonian::HamiltonianFamily;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("family has {levels} levels, sweep limit is {max}")]
    TooManyLevels { levels: usize, max: usize },
    #[error("eigensolver failed at a = {a}: {source}")]
    Eigen { a: f64, source: EigenError },
    #[error("diagnostics failed at a = {a}: {source}")]
    Diagnostics { a: f64, source: DiagnosticsError },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
    pub refine_near_ep: bool,
    /// Bisect intervals whose smallest eigenvalue gap is below this.
    pub refine_gap_threshold: f64,
    pub max_refine_depth: usize,
    pub max_levels: usize,
    /// A local gap minimum is reported as an EP suspect when the phase
    /// rigidity of the closest pair there is below this value.
    pub suspect_rigidity: f64,
    /// Matching is ambiguous when runner-up cost ≤ ratio × optimal cost.
    pub ambiguity_ratio: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_min: 0.0,
            a_max: 1.0,
            steps: 2001,
            refine_near_ep: true,
            refine_gap_threshold: 1e-2,
            max_refine_depth: 8,
            max_levels: 8,
            suspect_rigidity: 0.75,
            ambiguity_ratio: 1.1,
        }
    }
}

impl SweepConfig {
    pub fn over(a_min: f64, a_max: f64, steps: usize) -> Self {
        Self {
            a_min,
            a_max,
            steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.a_min.is_finite() && self.a_max.is_finite()) || self.a_min >= self.a_max {
            return Err(SweepError::InvalidConfig(format!(
                "need finite a_min < a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if self.steps < 2 {
            return Err(SweepError::InvalidConfig(format!("steps must be at least 2, got {}", self.steps)));
        }
        if !(self.refine_gap_threshold >= 0.0) {
            return Err(SweepError::InvalidConfig("refine_gap_threshold must be non-negative".into()));
        }
        if !(self.ambiguity_ratio >= 1.0) {
            return Err(SweepError::InvalidConfig("ambiguity_ratio must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.a_max
                } else {
                    self.a_min + (self.a_max - self.a_min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// One branch at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub a: f64,
    pub eigenvalue: Complex64,
    pub rigidity: f64,
    pub hermitian_norm: Option<f64>,
    pub mixing_abs: Option<Vec<f64>>,
    pub degenerate: bool,
    /// The step arriving at this point could not be labelled unambiguously.
    pub ambiguous: bool,
}

impl BranchPoint {
    /// `Γ = −2·Im 𝓔`, positive for decaying states.
    pub fn width(&self) -> f64 {
        -2.0 * self.eigenvalue.im
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpSuspect {
    pub a_lo: f64,
    pub a_hi: f64,
    /// Grid point of the local gap minimum.
    pub a: f64,
    pub gap: f64,
    pub rigidity: f64,
    pub branches: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    /// `branches[b][k]` is branch `b` at `grid[k]`.
    pub branches: Vec<Vec<BranchPoint>>,
    /// Optimal matching cost of the step arriving at each grid point (0 at the first).
    pub pairing_cost: Vec<f64>,
    pub ambiguous_intervals: Vec<(f64, f64)>,
    pub ep_suspects: Vec<EpSuspect>,
}

impl SweepResult {
    pub fn dim(&self) -> usize {
        self.branches.len()
    }

    pub fn eigenvalues_at(&self, k: usize) -> Vec<Complex64> {
        self.branches.iter().map(|b| b[k].eigenvalue).collect()
    }

    /// Smallest pairwise eigenvalue distance at each grid point.
    pub fn min_gaps(&self) -> Vec<(f64, (usize, usize))> {
        (0..self.grid.len())
            .map(|k| {
                let ev = self.eigenvalues_at(k);
                let mut best = (f64::INFINITY, (0, 1));
                for i in 0..ev.len() {
                    for j in i + 1..ev.len() {
                        let g = (ev[i] - ev[j]).norm();
                        if g < best.0 {
                            best = (g, (i, j));
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// CSV with one row per (branch, grid point).
    ///
    /// Columns: `branch,a,re_e,im_e,gamma,r,one_minus_r,hermitian_norm,b_1..b_N,flags`.
    /// `gamma = −2·Im E`. Degenerate states leave `hermitian_norm` and the `b`
    /// columns empty. `flags` is a `|`-separated subset of `degenerate`, `ambiguous`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("branch,a,re_e,im_e,gamma,r,one_minus_r,hermitian_norm");
        for j in 1..=n {
            out.push_str(&format!(",b_{j}"));
        }
        out.push_str(",flags\n");
        for (b, branch) in self.branches.iter().enumerate() {
            for p in branch {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},",
                    b + 1,
                    p.a,
                    p.eigenvalue.re,
                    p.eigenvalue.im,
                    p.width(),
                    p.rigidity,
                    1.0 - p.rigidity
                ));
                if let Some(a) = p.hermitian_norm {
                    out.push_str(&a.to_string());
                }
                match &p.mixing_abs {
                    Some(row) => row.iter().for_each(|x| out.push_str(&format!(",{x}"))),
                    None => (0..n).for_each(|_| out.push(',')),
                }
                let mut flags = Vec::new();
                if p.degenerate {
                    flags.push("degenerate");
                }
                if p.ambiguous {
                    flags.push("ambiguous");
                }
                out.push(',');
                out.push_str(&flags.join("|"));
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone)]
struct Solved {
    a: f64,
    sys: EigenSystem,
    diag: StateDiagnostics,
    unit: Vec<nalgebra::DVector<Complex64>>,
}

fn solve_point(family: &HamiltonianFamily, a: f64) -> Result<Solved, SweepError> {
    let h = family.evaluate(a);
    let sys = solve(&h).map_err(|source| SweepError::Eigen { a, source })?;
    let diag = diagnose(&sys).map_err(|source| SweepError::Diagnostics { a, source })?;
    let unit = (0..sys.dim()).map(|k| sys.unit_vector(k)).collect();
    Ok(Solved { a, sys, diag, unit })
}

struct Tracker<'a> {
    family: &'a HamiltonianFamily,
    cfg: &'a SweepConfig,
    points: Vec<Solved>,
    /// `labels[k][b]` = eigen index at point k carried by branch b.
    labels: Vec<Vec<usize>>,
    ambiguous: Vec<bool>,
    cost: Vec<f64>,
    ambiguous_intervals: Vec<(f64, f64)>,
}

fn pair_costs(prev: &Solved, labels: &[usize], next: &Solved) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ev = &prev.sys.eigenvalues;
    let mut spread: f64 = 0.0;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            spread = spread.max((ev[i] - ev[j]).norm());
        }
    }
    let floor = 1e-12 * (1.0 + ev.iter().map(|z| z.norm()).fold(0.0, f64::max));
    let spread = spread.max(floor);
    let mut combined = Vec::with_capacity(labels.len());
    let mut distance = Vec::with_capacity(labels.len());
    for &i in labels {
        let mut crow = Vec::with_capacity(next.sys.dim());
        let mut drow = Vec::with_capacity(next.sys.dim());
        for j in 0..next.sys.dim() {
            let d = (ev[i] - next.sys.eigenvalues[j]).norm() / spread;
            let overlap = h_dot(&prev.unit[i], &next.unit[j]).norm().min(1.0);
            crow.push(d + (1.0 - overlap));
            drow.push(d);
        }
        combined.push(crow);
        distance.push(drow);
    }
    (combined, distance)
}

impl<'a> Tracker<'a> {
    fn track(&mut self, next: Solved, depth: usize) -> Result<(), SweepError> {
        let prev = self.points.last().expect("tracker starts with one point");
        let prev_labels = self.labels.last().unwrap().clone();
        let (combined, distance) = pair_costs(prev, &prev_labels, &next);
        let best = min_cost_assignment(&combined).expect("finite costs");
        let ambiguous = match second_best_cost(&combined, &best) {
            Some(second) => second <= self.cfg.ambiguity_ratio * best.cost,
            None => false,
        };
        let gap_prev = prev.sys.min_gap().0;
        let gap_next = next.sys.min_gap().0;
        let near_degenerate = gap_prev.min(gap_next) < self.cfg.refine_gap_threshold;
        if self.cfg.refine_near_ep && depth < self.cfg.max_refine_depth && (ambiguous || near_degenerate) {
            let mid = solve_point(self.family, 0.5 * (prev.a + next.a))?;
            self.track(mid, depth + 1)?;
            return self.track(next, depth + 1);
        }

        let chosen = if ambiguous {
            min_cost_assignment(&distance).expect("finite costs")
        } else {
            best.clone()
        };
        let new_labels: Vec<usize> = chosen.column_of_row.clone();
        let jump = prev_labels
            .iter()
            .zip(&new_labels)
            .map(|(&i, &j)| (prev.sys.eigenvalues[i] - next.sys.eigenvalues[j]).norm())
            .fold(0.0, f64::max);
        let continuous = jump < gap_next || next.sys.dim() < 2;
        let flag = ambiguous || !continuous;
        if flag {
            self.ambiguous_intervals.push((prev.a, next.a));
        }
        self.cost.push(best.cost);
        self.ambiguous.push(flag);
        self.labels.push(new_labels);
        self.points.push(next);
        Ok(())
    }
}

/// Solves `family` over the configured grid and tracks its branches.
pub fn run_sweep(family: &HamiltonianFamily, cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let n = family.dim();
    if n > cfg.max_levels {
        return Err(SweepError::TooManyLevels {
            levels: n,
            max: cfg.max_levels,
        });
    }
    let solved: Vec<Solved> = cfg
        .grid()
        .into_par_iter()
        .map(|a| solve_point(family, a))
        .collect::<Result<_, _>>()?;

    let mut iter = solved.into_iter();
    let first = iter.next().expect("at least two grid points");
    // label branch i with the eigenpair closest to the unperturbed level i
    let eps = family.epsilons(first.a);
    let init_cost: Vec<Vec<f64>> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (0..n)
                .map(|j| (e - first.sys.eigenvalues[j]).norm() + (1.0 - first.unit[j][i].norm()))
                .collect()
        })
        .collect();
    let init = min_cost_assignment(&init_cost).expect("finite costs").column_of_row;

    let mut tracker = Tracker {
        family,
        cfg,
        points: vec![first],
        labels: vec![init],
        ambiguous: vec![false],
        cost: vec![0.0],
        ambiguous_intervals: Vec::new(),
    };
    for next in iter {
        tracker.track(next, 0)?;
    }

    let grid: Vec<f64> = tracker.points.iter().map(|p| p.a).collect();
    let branches: Vec<Vec<BranchPoint>> = (0..n)
        .map(|b| {
            tracker
                .points
                .iter()
                .zip(&tracker.labels)
                .zip(&tracker.ambiguous)
                .map(|((p, lab), &amb)| {
                    let k = lab[b];
                    BranchPoint {
                        a: p.a,
                        eigenvalue: p.sys.eigenvalues[k],
                        rigidity: p.diag.rigidity[k],
                        hermitian_norm: p.diag.hermitian_norm[k],
                        mixing_abs: p.diag.mixing_abs[k].clone(),
                        degenerate: p.sys.degenerate[k],
                        ambiguous: amb,
                    }
                })
                .collect()
        })
        .collect();

    let mut result = SweepResult {
        grid,
        branches,
        pairing_cost: tracker.cost,
        ambiguous_intervals: tracker.ambiguous_intervals,
        ep_suspects: Vec::new(),
    };
    result.ep_suspects = find_suspects(&result, cfg.suspect_rigidity);
    Ok(result)
}

/// Local minima of each pairwise branch gap at which the pair has lost
/// phase rigidity.
fn find_suspects(res: &SweepResult, rigidity_threshold: f64) -> Vec<EpSuspect> {
    let n = res.dim();
    let m = res.grid.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let gap: Vec<f64> = (0..m)
                .map(|k| (res.branches[i][k].eigenvalue - res.branches[j][k].eigenvalue).norm())
                .collect();
            for k in 1..m.saturating_sub(1) {
                if !(gap[k] <= gap[k - 1] && gap[k] < gap[k + 1]) {
                    continue;
                }
                let r = res.branches[i][k].rigidity.min(res.branches[j][k].rigidity);
                if r < rigidity_threshold {
                    out.push(EpSuspect {
                        a_lo: res.grid[k - 1],
                        a_hi: res.grid[k + 1],
                        a: res.grid[k],
                        gap: gap[k],
                        rigidity: r,
                        branches: (i, j),
                    });
                }
            }
        }
    }
    out.sort_by(|x, y| x.a.total_cmp(&y.a));
    out
}
