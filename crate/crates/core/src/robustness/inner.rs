//! Worst-case perturbation of one cycle.
//!
//! For a cycle `σ = (σ_1, …, σ_n)` with `w_t = x_σt − y_σ(t+1)`, perturbing
//! each matched pair by `α_t` turns the reassignment cost into
//!
//! ```text
//! Q(α) = Σ_t ‖w_t + α_t − α_{t+1}‖²
//! ```
//!
//! and the cost decrease is `Σ_t ‖x_σt − y_σt‖² − Q(α)`. `Q` is a convex
//! quadratic whose Hessian has norm at most 8, so projected accelerated
//! gradient with step 1/8 on the product of balls finds its minimum.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::exact_ot::Pairing;
use crate::measures::sq_dist;
use crate::rng::child_rng;

const LIPSCHITZ: f64 = 8.0;

/// Optimizer settings for the inner problem.
#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    /// Starts per cycle; the first is always the first-order direction.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when no coordinate moves more than `tol · radius`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { restarts: 16, max_iter: 3000, tol: 1e-12, seed: 0x6f74_6c61_62 }
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    /// Largest cost decrease found.
    pub decrease: f64,
    /// Perturbations `α_t` achieving it, one per cycle position.
    pub alpha: Vec<Vec<f64>>,
    /// Max minus min of the decreases reached by the restarts.
    pub spread: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct CycleProblem {
    n: usize,
    d: usize,
    w: Vec<f64>,
    base: f64,
    q0: f64,
    /// Descent direction of `Q` at 0, per position.
    first_order: Vec<f64>,
}

impl CycleProblem {
    pub fn new(p: &Pairing, cycle: &[usize]) -> Self {
        let n = cycle.len();
        let d = p.dim();
        let mut w = Vec::with_capacity(n * d);
        for t in 0..n {
            let x = p.x(cycle[t]);
            let y = p.y(cycle[(t + 1) % n]);
            w.extend(x.iter().zip(y).map(|(a, b)| a - b));
        }
        let base = cycle.iter().map(|&i| sq_dist(p.x(i), p.y(i))).sum();
        let q0 = w.iter().map(|v| v * v).sum();
        let mut first_order = vec![0.0; n * d];
        for t in 0..n {
            let prev = (t + n - 1) % n;
            for c in 0..d {
                first_order[t * d + c] = w[prev * d + c] - w[t * d + c];
            }
        }
        CycleProblem { n, d, w, base, q0, first_order }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cost decrease with no perturbation; negative for a monotone cycle.
    pub fn decrease_at_zero(&self) -> f64 {
        self.base - self.q0
    }

    /// Upper bound on the decrease over radius-`eps` perturbations, from
    /// convexity (`Q ≥ Q(0) + ⟨∇Q(0), α⟩`) and from the mean of `w`, which
    /// no perturbation can cancel.
    pub fn decrease_upper_bound(&self, eps: f64) -> f64 {
        let d = self.d;
        let grad_norms: f64 = self
            .first_order
            .chunks(d)
            .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        let linear = self.q0 - 2.0 * eps * grad_norms;
        self.base - linear.max(self.mean_floor())
    }

    /// Decrease with no radius limit.
    pub fn unconstrained_decrease(&self) -> f64 {
        self.base - self.mean_floor()
    }

    /// `n·‖w̄‖²`, the part of `Q` that perturbations cannot touch.
    fn mean_floor(&self) -> f64 {
        let (n, d) = (self.n, self.d);
        let mut mean = vec![0.0; d];
        for t in 0..n {
            for c in 0..d {
                mean[c] += self.w[t * d + c] / n as f64;
            }
        }
        n as f64 * mean.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn q(&self, alpha: &[f64]) -> f64 {
        let (n, d) = (self.n, self.d);
        let mut total = 0.0;
        for t in 0..n {
            let next = (t + 1) % n;
            for c in 0..d {
                let r = self.w[t * d + c] + alpha[t * d + c] - alpha[next * d + c];
                total += r * r;
            }
        }
        total
    }

    fn grad(&self, alpha: &[f64], out: &mut [f64], resid: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        for t in 0..n {
            let next = (t + 1) % n;
            for c in 0..d {
                resid[t * d + c] = self.w[t * d + c] + alpha[t * d + c] - alpha[next * d + c];
            }
        }
        for t in 0..n {
            let prev = (t + n - 1) % n;
            for c in 0..d {
                out[t * d + c] = 2.0 * (resid[t * d + c] - resid[prev * d + c]);
            }
        }
    }

    fn project(&self, alpha: &mut [f64], eps: f64) {
        for block in alpha.chunks_mut(self.d) {
            let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > eps {
                let s = if norm > 0.0 { eps / norm } else { 0.0 };
                block.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    /// Accelerated projected gradient with adaptive restart from `start`.
    fn descend(&self, start: Vec<f64>, eps: f64, opts: &InnerOptions) -> (f64, Vec<f64>) {
        let len = start.len();
        let mut x = start;
        self.project(&mut x, eps);
        let mut y = x.clone();
        let mut x_new = vec![0.0; len];
        let mut g = vec![0.0; len];
        let mut resid = vec![0.0; len];
        let mut t = 1.0f64;
        let stop = opts.tol * eps.max(f64::MIN_POSITIVE);
        for _ in 0..opts.max_iter {
            self.grad(&y, &mut g, &mut resid);
            for c in 0..len {
                x_new[c] = y[c] - g[c] / LIPSCHITZ;
            }
            self.project(&mut x_new, eps);
            let mut momentum_check = 0.0;
            let mut moved = 0.0f64;
            for c in 0..len {
                momentum_check += (y[c] - x_new[c]) * (x_new[c] - x[c]);
                moved = moved.max((x_new[c] - x[c]).abs());
            }
            let t_new = if momentum_check > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
            let beta = if momentum_check > 0.0 { 0.0 } else { (t - 1.0) / t_new };
            for c in 0..len {
                y[c] = x_new[c] + beta * (x_new[c] - x[c]);
            }
            std::mem::swap(&mut x, &mut x_new);
            t = t_new;
            if moved <= stop {
                break;
            }
        }
        (self.q(&x), x)
    }

    /// Maximizes the cost decrease over perturbations of norm at most `eps`.
    pub fn maximize_decrease(&self, eps: f64, opts: &InnerOptions, stream: u64) -> InnerResult {
        let (n, d) = (self.n, self.d);
        if eps == 0.0 {
            return InnerResult {
                decrease: self.decrease_at_zero(),
                alpha: vec![vec![0.0; d]; n],
                spread: 0.0,
                restarts: 1,
            };
        }
        let mut best_q = f64::INFINITY;
        let mut worst_q = f64::NEG_INFINITY;
        let mut best_alpha = Vec::new();
        let restarts = opts.restarts.max(1);
        for r in 0..restarts {
            let start = if r == 0 {
                let mut s = self.first_order.clone();
                for block in s.chunks_mut(d) {
                    let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        block.iter_mut().for_each(|v| *v *= eps / norm);
                    }
                }
                s
            } else {
                let mut rng = child_rng(opts.seed, stream.wrapping_mul(1024).wrapping_add(r as u64));
                let mut s = vec![0.0; n * d];
                for block in s.chunks_mut(d) {
                    block.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    let radius = eps * rng.random::<f64>().powf(1.0 / d as f64);
                    block.iter_mut().for_each(|v| *v *= radius / norm);
                }
                s
            };
            let (q, alpha) = self.descend(start, eps, opts);
            if q < best_q {
                best_q = q;
                best_alpha = alpha;
            }
            worst_q = worst_q.max(q);
        }
        InnerResult {
            decrease: self.base - best_q,
            alpha: best_alpha.chunks(d).map(|b| b.to_vec()).collect(),
            spread: worst_q - best_q,
            restarts,
        }
    }
}
