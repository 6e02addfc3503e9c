//! Minimum-cost perfect matching on small dense cost matrices.
//!
//! Used to carry branch labels from one grid point to the next and to pair
//! eigenvalue lists from different solvers, whose ordering is arbitrary.

use num_complex::Complex64;

/// Optimal assignment `row -> column` and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub column_of_row: Vec<usize>,
    pub cost: f64,
}

/// Hungarian algorithm (shortest augmenting paths with potentials), O(n³).
///
/// `cost` must be square with finite entries. Entries of `f64::INFINITY` are
/// allowed and mark forbidden pairs; the result is `None` if no finite
/// perfect matching exists.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Option<Assignment> {
    let n = cost.len();
    if n == 0 {
        return Some(Assignment {
            column_of_row: Vec::new(),
            cost: 0.0,
        });
    }
    debug_assert!(cost.iter().all(|r| r.len() == n));
    // 1-based internals; index 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut column_of_row = vec![0; n];
    for j in 1..=n {
        column_of_row[row_of_col[j] - 1] = j - 1;
    }
    let total = column_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum();
    Some(Assignment {
        column_of_row,
        cost: total,
    })
}

/// Cost of the best assignment that differs from `best` in at least one pair.
///
/// Any runner-up matching must drop at least one edge of the optimum, so it
/// is the cheapest optimum over the `n` problems with one optimal edge forbidden.
pub fn second_best_cost(cost: &[Vec<f64>], best: &Assignment) -> Option<f64> {
    let n = cost.len();
    if n < 2 {
        return None;
    }
    let mut runner_up: Option<f64> = None;
    for (i, &j) in best.column_of_row.iter().enumerate() {
        let mut c = cost.to_vec();
        c[i][j] = f64::INFINITY;
        if let Some(a) = min_cost_assignment(&c) {
            runner_up = Some(runner_up.map_or(a.cost, |r: f64| r.min(a.cost)));
        }
    }
    runner_up
}

/// Pairs two eigenvalue lists by minimal total `|Δλ|`.
///
/// Returns `perm` with `a[i] ↔ b[perm[i]]` and the largest paired distance.
pub fn pair_eigenvalues(a: &[Complex64], b: &[Complex64]) -> (Vec<usize>, f64) {
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let asg = min_cost_assignment(&cost).expect("finite costs always admit a matching");
    let worst = asg
        .column_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .fold(0.0, f64::max);
    (asg.column_of_row, worst)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    fn brute_force_second(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let mut all = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        fn heap(k: usize, p: &mut Vec<usize>, cost: &[Vec<f64>], out: &mut Vec<f64>) {
            if k == 1 {
                out.push(p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum());
                return;
            }
            for i in 0..k {
                heap(k - 1, p, cost, out);
                if k % 2 == 0 {
                    p.swap(i, k - 1);
                } else {
                    p.swap(0, k - 1);
                }
            }
        }
        heap(n, &mut perm, cost, &mut all);
        all.sort_by(f64::total_cmp);
        all[1]
    }

    #[test]
    fn small_known_case() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&cost).unwrap();
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.column_of_row, vec![1, 0, 2]);
    }

    #[test]
    fn forbidden_edges() {
        let inf = f64::INFINITY;
        let cost = vec![vec![inf, 1.0], vec![inf, 2.0]];
        assert!(min_cost_assignment(&cost).is_none());
    }

    #[test]
    fn pairing_recovers_permutation() {
        let a = [Complex64::new(0.0, -0.5), Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)];
        let b = [a[2], a[0], a[1]];
        let (perm, worst) = pair_eigenvalues(&a, &b);
        assert_eq!(perm, vec![1, 2, 0]);
        assert_eq!(worst, 0.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, seed in proptest::collection::vec(0.0f64..10.0, 36)) {
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| seed[i * 6 + j]).collect()).collect();
            let a = min_cost_assignment(&cost).unwrap();
            prop_assert!((a.cost - brute_force(&cost)).abs() < 1e-9);
            let mut cols = a.column_of_row.clone();
            cols.sort();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
            if n >= 2 {
                let s = second_best_cost(&cost, &a).unwrap();
                prop_assert!((s - brute_force_second(&cost)).abs() < 1e-9);
            }
        }
    }
}
