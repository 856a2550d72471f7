use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::SmoothingKernel;
use crate::error::{Error, Result};
use crate::exact_ot::solve_assignment;
use crate::measures::DiscreteMeasure;
use crate::rng::child_rng;

/// How many samples each atom receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Allocation {
    /// Each sample picks its atom independently by weight.
    Multinomial,
    /// Atom `i` receives `n·w_i` samples rounded by largest remainder;
    /// ties go to the lower index.
    #[default]
    Proportional,
}

/// Samples of a smoothed measure, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    pub seed: u64,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Invalid("point cloud needs n ≥ 1 points of a positive dimension".into()));
        }
        Ok(PointCloud { dim, data, seed })
    }

    pub fn from_points(points: &[Vec<f64>], seed: u64) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Invalid("ragged point list".into()));
        }
        PointCloud::new(dim, points.concat(), seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn translated(&self, t: &[f64]) -> PointCloud {
        let data = self.data.chunks(self.dim).flat_map(|p| p.iter().zip(t).map(|(a, b)| a + b)).collect();
        PointCloud { dim: self.dim, data, seed: self.seed }
    }
}

/// Atom counts for `n` samples.
pub fn allocate(weights: &[f64], n: usize, allocation: Allocation, seed: u64) -> Vec<usize> {
    match allocation {
        Allocation::Multinomial => {
            let dist = WeightedIndex::new(weights).expect("measure weights are positive");
            let mut rng = child_rng(seed, u64::MAX);
            let mut counts = vec![0usize; weights.len()];
            for _ in 0..n {
                counts[dist.sample(&mut rng)] += 1;
            }
            counts
        }
        Allocation::Proportional => {
            let total: f64 = weights.iter().sum();
            let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
            let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
            let assigned: usize = counts.iter().sum();
            let mut order: Vec<usize> = (0..weights.len()).collect();
            order.sort_by(|&a, &b| {
                let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            for &i in order.iter().take(n.saturating_sub(assigned)) {
                counts[i] += 1;
            }
            counts
        }
    }
}

/// `n` i.i.d. draws from `m ∗ kernel`.
pub fn sample_smoothed(m: &DiscreteMeasure, kernel: &SmoothingKernel, n: usize, seed: u64) -> Result<PointCloud> {
    sample_smoothed_with(m, kernel, n, seed, Allocation::Multinomial)
}

/// Draws from `m ∗ kernel` with the given atom allocation. Samples are
/// grouped by atom in index order.
pub fn sample_smoothed_with(
    m: &DiscreteMeasure,
    kernel: &SmoothingKernel,
    n: usize,
    seed: u64,
    allocation: Allocation,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    kernel.validate()?;
    let d = m.dim();
    let counts = allocate(m.weights(), n, allocation, seed);
    let mut rng = child_rng(seed, 0);
    let mut data = Vec::with_capacity(n * d);
    let mut noise = vec![0.0; d];
    for (i, &c) in counts.iter().enumerate() {
        let atom = m.point(i);
        for _ in 0..c {
            kernel.sample_into(&mut rng, &mut noise);
            data.extend(atom.iter().zip(&noise).map(|(a, z)| a + z));
        }
    }
    PointCloud::new(d, data, seed)
}

/// W2 between the uniform empirical measures of two equal-size clouds.
pub fn empirical_w2(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!("cloud sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        let p = a.point(i);
        for j in 0..n {
            cost.push(p.iter().zip(b.point(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>());
        }
    }
    let total = solve_assignment(&cost, n).cost;
    Ok((total.max(0.0) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::presets;

    #[test]
    fn deterministic_under_seed() {
        let m = presets::mu_k(2);
        let k = SmoothingKernel::gaussian(0.3).unwrap();
        let a = sample_smoothed(&m, &k, 64, 9).unwrap();
        let b = sample_smoothed(&m, &k, 64, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_smoothed(&m, &k, 64, 10).unwrap());
    }

    #[test]
    fn tiny_sigma_stays_on_atoms() {
        let m = presets::cross_source();
        let k = SmoothingKernel::gaussian(1e-12).unwrap();
        let c = sample_smoothed(&m, &k, 100, 1).unwrap();
        for i in 0..c.len() {
            let near = m.points().iter().any(|a| a.iter().zip(c.point(i)).all(|(u, v)| (u - v).abs() < 1e-9));
            assert!(near);
        }
    }

    #[test]
    fn gaussian_sample_mean() {
        let m = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let k = SmoothingKernel::gaussian(1.0).unwrap();
        let n = 100_000;
        let c = sample_smoothed(&m, &k, n, 3).unwrap();
        let bound = 3.0 * 2f64.sqrt() * 10f64.powf(-2.5);
        for coord in 0..2 {
            let mean: f64 = (0..n).map(|i| c.point(i)[coord]).sum::<f64>() / n as f64;
            assert!(mean.abs() < bound, "{mean}");
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let k = SmoothingKernel::gaussian(1.0).unwrap();
        assert!(sample_smoothed(&presets::mu_k(1), &k, 0, 0).is_err());
    }

    #[test]
    fn proportional_counts() {
        assert_eq!(allocate(&[0.5, 0.5], 501, Allocation::Proportional, 0), vec![251, 250]);
        assert_eq!(allocate(&[0.2, 0.3, 0.5], 10, Allocation::Proportional, 0), vec![2, 3, 5]);
        assert_eq!(allocate(&[1.0 / 3.0; 3], 4, Allocation::Proportional, 0).iter().sum::<usize>(), 4);
        let m = allocate(&[0.5, 0.5], 1000, Allocation::Multinomial, 4);
        assert_eq!(m.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn empirical_w2_examples() {
        let a = PointCloud::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0]], 0).unwrap();
        let b = PointCloud::from_points(&[vec![0.0, 1.0], vec![1.0, 1.0]], 0).unwrap();
        assert_eq!(empirical_w2(&a, &b).unwrap(), 1.0);
        assert_eq!(empirical_w2(&a, &a).unwrap(), 0.0);
        let k = SmoothingKernel::gaussian(0.7).unwrap();
        let c = sample_smoothed(&presets::mu_k(3), &k, 50, 2).unwrap();
        let t = [0.3, -0.4];
        assert!((empirical_w2(&c, &c.translated(&t)).unwrap() - 0.5).abs() < 1e-12);
        assert!(empirical_w2(&a, &PointCloud::from_points(&[vec![0.0, 0.0]], 0).unwrap()).is_err());
    }
}
