//! Transportation network simplex.
//!
//! The basis is a spanning tree of the bipartite graph rows ∪ columns with
//! exactly `m + n − 1` basic cells, started from the north-west corner rule.
//! Entering cells are chosen by most negative reduced cost, falling back to
//! Bland's rule after a long run of pivots to rule out cycling.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct SimplexResult {
    /// Row-major `m × n` flows; nonbasic cells are exactly zero.
    pub flow: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

struct Tree {
    m: usize,
    n: usize,
    basic: Vec<bool>,
    flow: Vec<f64>,
}

impl Tree {
    fn node_neighbors(&self, node: usize) -> Vec<usize> {
        let (m, n) = (self.m, self.n);
        if node < m {
            (0..n).filter(|&j| self.basic[node * n + j]).map(|j| m + j).collect()
        } else {
            let j = node - m;
            (0..m).filter(|&i| self.basic[i * n + j]).collect()
        }
    }

    fn cell(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < self.m { (a, b - self.m) } else { (b, a - self.m) };
        i * self.n + j
    }

    fn duals(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for b in self.node_neighbors(a) {
                if pot[b].is_nan() {
                    let c = cost[self.cell(a, b)];
                    // u_i + v_j = c_ij on basic cells
                    pot[b] = c - pot[a];
                    queue.push_back(b);
                }
            }
        }
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Tree path from `from` to `to` as a node list.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut parent = vec![usize::MAX; total];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(a) = queue.pop_front() {
            if a == to {
                break;
            }
            for b in self.node_neighbors(a) {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Minimizes `Σ cost_ij π_ij` subject to row sums `supply` and column sums
/// `demand`. Both must be positive with equal totals.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> SimplexResult {
    let (m, n) = (supply.len(), demand.len());
    assert!(m > 0 && n > 0);
    assert_eq!(cost.len(), m * n);
    let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-12 * scale;

    let mut tree = Tree { m, n, basic: vec![false; m * n], flow: vec![0.0; m * n] };
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let q = s[i].min(d[j]).max(0.0);
        tree.flow[i * n + j] = q;
        tree.basic[i * n + j] = true;
        s[i] -= q;
        d[j] -= q;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || s[i] <= d[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let bland_after = 50 * (m + n) + 100;
    let max_pivots = 200 * (m + n) * (m + n) + 10_000;
    let mut pivots = 0;
    loop {
        let (u, v) = tree.duals(cost);
        let mut entering = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                let c = i * n + j;
                if tree.basic[c] {
                    continue;
                }
                let r = cost[c] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if pivots >= bland_after {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let total = (0..m * n).map(|c| tree.flow[c] * cost[c]).sum();
            return SimplexResult { flow: tree.flow, u, v, cost: total, pivots };
        };
        assert!(pivots < max_pivots, "network simplex failed to converge");
        pivots += 1;

        // cycle: entering cell (+), then the tree path col ej -> row ei alternating (−, +, ...)
        let path = tree.path(m + ej, ei);
        let cells: Vec<usize> = path.windows(2).map(|w| tree.cell(w[0], w[1])).collect();
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &c in cells.iter().step_by(2) {
            let f = tree.flow[c];
            let better = f < theta || (f == theta && pivots >= bland_after && c < leaving);
            if better {
                theta = f;
                leaving = c;
            }
        }
        tree.flow[ei * n + ej] = theta;
        for (t, &c) in cells.iter().enumerate() {
            if t % 2 == 0 {
                tree.flow[c] -= theta;
            } else {
                tree.flow[c] += theta;
            }
        }
        tree.flow[leaving] = 0.0;
        tree.basic[leaving] = false;
        tree.basic[ei * n + ej] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_marginals(r: &SimplexResult, supply: &[f64], demand: &[f64]) {
        let n = demand.len();
        for (i, s) in supply.iter().enumerate() {
            let row: f64 = r.flow[i * n..(i + 1) * n].iter().sum();
            assert!((row - s).abs() < 1e-12);
        }
        for (j, d) in demand.iter().enumerate() {
            let col: f64 = (0..supply.len()).map(|i| r.flow[i * n + j]).sum();
            assert!((col - d).abs() < 1e-12);
        }
        assert!(r.flow.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn classic_textbook_instance() {
        // supplies 20/30/25, demands 10/28/37; optimum found by hand via MODI
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 28.0, 37.0];
        let cost = [3.0, 1.0, 7.0, 2.0, 6.0, 5.0, 8.0, 9.0, 4.0];
        let r = solve_transport(&supply, &demand, &cost);
        check_marginals(&r, &supply, &demand);
        // 20 on (0,1), 10 on (1,0), 8 on (1,1), 12 on (1,2), 25 on (2,2)
        assert_eq!(r.cost, 20.0 + 20.0 + 48.0 + 60.0 + 100.0);
    }

    #[test]
    fn one_to_many() {
        let r = solve_transport(&[1.0], &[0.25, 0.75], &[2.0, 4.0]);
        assert_eq!(r.flow, vec![0.25, 0.75]);
        assert_eq!(r.cost, 3.5);
    }

    #[test]
    fn reduced_costs_nonnegative_at_optimum() {
        let supply = [0.1, 0.2, 0.3, 0.4];
        let demand = [0.25, 0.25, 0.5];
        let cost: Vec<f64> = (0..12).map(|t| ((t * 7 + 3) % 11) as f64).collect();
        let r = solve_transport(&supply, &demand, &cost);
        check_marginals(&r, &supply, &demand);
        for i in 0..4 {
            for j in 0..3 {
                assert!(cost[i * 3 + j] - r.u[i] - r.v[j] >= -1e-12);
            }
        }
    }
}
