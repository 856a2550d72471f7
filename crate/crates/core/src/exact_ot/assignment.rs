//! Dense linear assignment by shortest augmenting paths.
//!
//! Rows are inserted one at a time; each insertion runs a Dijkstra-like scan
//! over reduced costs `c[i][j] − u[i] − v[j]` and augments along the
//! cheapest alternating path. Worst case O(n³); the dual potentials are kept
//! feasible throughout, so the returned `(u, v)` certify optimality.

/// Optimal assignment of an `n × n` cost matrix.
#[derive(Debug, Clone)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    /// Row potentials.
    pub u: Vec<f64>,
    /// Column potentials; `c[i][j] − u[i] − v[j] ≥ 0` with equality on the assignment.
    pub v: Vec<f64>,
    pub cost: f64,
}

/// Solves `min Σ_i cost[i·n + perm(i)]` over permutations.
///
/// `cost` is row-major and must be finite.
pub fn solve_assignment(cost: &[f64], n: usize) -> Assignment {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    if n == 0 {
        return Assignment { row_to_col: vec![], u: vec![], v: vec![], cost: 0.0 };
    }
    // 1-based bookkeeping; index 0 is the virtual root column
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    let total = row_to_col.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Assignment { row_to_col, u: u[1..].to_vec(), v: v[1..].to_vec(), cost: total }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve_assignment(&cost, 3);
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.row_to_col, vec![1, 0, 2]);
    }

    #[test]
    fn duals_certify_optimality() {
        let n = 6;
        let cost: Vec<f64> = (0..n * n).map(|t| ((t * 37 + 11) % 17) as f64 * 0.5 - 2.0).collect();
        let a = solve_assignment(&cost, n);
        assert!((a.cost - brute(&cost, n)).abs() < 1e-12);
        for i in 0..n {
            for j in 0..n {
                let r = cost[i * n + j] - a.u[i] - a.v[j];
                assert!(r >= -1e-12, "reduced cost {r} at ({i},{j})");
            }
            let r = cost[i * n + a.row_to_col[i]] - a.u[i] - a.v[a.row_to_col[i]];
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(solve_assignment(&[7.5], 1).row_to_col, vec![0]);
        assert_eq!(solve_assignment(&[], 0).cost, 0.0);
    }
}
