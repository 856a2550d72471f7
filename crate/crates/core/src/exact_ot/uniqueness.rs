use std::collections::VecDeque;

use super::{cost_matrix, solve_plan, OTSolution};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Whether `sol` is the only optimal plan between `mu` and `nu`.
///
/// Optimal duals are read off as shortest-path distances in the residual
/// graph of the plan. Any alternative optimum differs from `sol` by a
/// combination of cycles that alternate between tight edges (zero reduced
/// cost) and support edges, so the plan is unique iff no such cycle exists.
/// Near-zero reduced costs are not trusted: every candidate cycle is turned
/// into an explicit alternative plan and its cost compared directly.
pub fn is_unique_optimal(mu: &DiscreteMeasure, nu: &DiscreteMeasure, sol: &OTSolution) -> Result<bool> {
    let reference = solve_plan(mu, nu)?;
    let scale = reference.cost.abs().max(1.0);
    if (sol.plan.cost - reference.cost).abs() > 1e-7 * scale {
        return Err(Error::Precondition(format!(
            "solution cost {} is not optimal ({})",
            sol.plan.cost, reference.cost
        )));
    }
    let (row_err, col_err) = sol.plan.marginal_error(mu, nu);
    if row_err > 1e-9 || col_err > 1e-9 {
        return Err(Error::Precondition("plan marginals do not match the measures".into()));
    }
    for &(i, j, _) in &sol.plan.entries {
        if i >= mu.len() || j >= nu.len() {
            return Err(Error::Invalid(format!("plan entry ({i}, {j}) out of range")));
        }
    }

    let (m, n) = (mu.len(), nu.len());
    let cost = cost_matrix(mu, nu);
    let cmax = cost.iter().cloned().fold(1.0, f64::max);
    let tight_tol = 1e-9 * cmax;
    let flow = sol.plan.dense(m, n);
    let support: Vec<bool> = flow.iter().map(|&f| f > 0.0).collect();

    // Residual graph: row i -> col j at cost c_ij for every pair (mass can be
    // added anywhere), col j -> row i at −c_ij on the support (mass can be
    // removed). Bellman-Ford from a virtual source connected to every node.
    let mut dist = vec![0.0f64; m + n];
    let relax_tol = 1e-12 * cmax;
    let mut stable = false;
    for _ in 0..=(m + n) {
        let mut changed = false;
        for i in 0..m {
            for j in 0..n {
                let c = cost[i * n + j];
                if dist[i] + c < dist[m + j] - relax_tol {
                    dist[m + j] = dist[i] + c;
                    changed = true;
                }
                if support[i * n + j] && dist[m + j] - c < dist[i] - relax_tol {
                    dist[i] = dist[m + j] - c;
                    changed = true;
                }
            }
        }
        if !changed {
            stable = true;
            break;
        }
    }
    if !stable {
        return Err(Error::Precondition("residual graph has a negative cycle; plan is not optimal".into()));
    }

    let reduced = |i: usize, j: usize| cost[i * n + j] + dist[i] - dist[m + j];
    let tight: Vec<bool> = (0..m * n).map(|c| reduced(c / n, c % n).abs() <= tight_tol).collect();

    for ei in 0..m {
        for ej in 0..n {
            if !tight[ei * n + ej] {
                continue;
            }
            if let Some(cycle) = alternating_path(m, n, &tight, &support, ej, ei) {
                // forward cells gain θ, backward cells lose θ
                let mut forward = vec![(ei, ej)];
                let mut backward = Vec::new();
                for (t, &(i, j)) in cycle.iter().enumerate() {
                    if t % 2 == 0 {
                        backward.push((i, j));
                    } else {
                        forward.push((i, j));
                    }
                }
                let theta = backward.iter().map(|&(i, j)| flow[i * n + j]).fold(f64::INFINITY, f64::min);
                let delta: f64 = theta
                    * (forward.iter().map(|&(i, j)| cost[i * n + j]).sum::<f64>()
                        - backward.iter().map(|&(i, j)| cost[i * n + j]).sum::<f64>());
                if theta > 0.0 && delta.abs() <= 1e-9 * scale {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Alternating path `col start_col -> row (support) -> col (tight) -> ... -> row target_row`
/// that does not use the cell `(target_row, start_col)` as a backward step. Returns the cells
/// in path order: backward (support) cells at even positions, forward (tight)
/// cells at odd positions.
fn alternating_path(
    m: usize,
    n: usize,
    tight: &[bool],
    support: &[bool],
    start_col: usize,
    target_row: usize,
) -> Option<Vec<(usize, usize)>> {
    // nodes: rows 0..m, cols m..m+n; parent stores the predecessor node
    let mut parent = vec![usize::MAX; m + n];
    let start = m + start_col;
    parent[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        if a < m {
            for j in 0..n {
                let b = m + j;
                if tight[a * n + j] && parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        } else {
            let j = a - m;
            for i in 0..m {
                if support[i * n + j] && !(a == start && i == target_row) && parent[i] == usize::MAX {
                    parent[i] = a;
                    if i == target_row {
                        let mut cells = Vec::new();
                        let mut cur = i;
                        while cur != start {
                            let p = parent[cur];
                            let cell = if cur < m { (cur, p - m) } else { (p, cur - m) };
                            cells.push(cell);
                            cur = p;
                        }
                        cells.reverse();
                        return Some(cells);
                    }
                    queue.push_back(i);
                }
            }
        }
    }
    None
}
