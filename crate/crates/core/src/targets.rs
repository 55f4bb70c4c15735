//! Benchmark target distributions.
//!
//! Every target exposes an unnormalized log-density, its analytic gradient,
//! and (for the four families here) an exact ground-truth sampler via a
//! reparametrization of i.i.d. standard normals. Densities are kept
//! unnormalized throughout; downstream code must only ever use log-density
//! *differences*.
//!
//! Targets are immutable after construction and safe to share across worker
//! threads.

use crate::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

/// An unnormalized target density on R^d.
pub trait TargetDistribution: Sync {
    fn dim(&self) -> usize;

    /// log of the unnormalized density; finite for all finite `x`.
    fn log_density_unnorm(&self, x: &[f64]) -> Result<f64>;

    /// Gradient of [`Self::log_density_unnorm`].
    fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `n` i.i.d. draws from the normalized target, when an exact sampler
    /// exists.
    fn sample_ground_truth(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        let _ = (n, rng);
        Err(Error::Unsupported(
            "no exact ground-truth sampler for this target".into(),
        ))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            Err(Error::dim(self.dim(), x.len()))
        } else {
            Ok(())
        }
    }
}

/// Isotropic Gaussian mixture with shared variance.
#[derive(Debug, Clone)]
pub struct GaussianMixtureTarget {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    variance: f64,
    log_weights: Vec<f64>,
}

impl GaussianMixtureTarget {
    pub fn new(centers: Vec<Vec<f64>>, weights: Vec<f64>, variance: f64) -> Result<Self> {
        if centers.is_empty() || centers.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "need one weight per mixture center".into(),
            ));
        }
        let dim = centers[0].len();
        if centers.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidArgument(
                "all mixture centers must share a dimension".into(),
            ));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument("mixture variance must be > 0".into()));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be > 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights must sum to 1 (got {total})"
            )));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            centers,
            weights,
            variance,
            log_weights,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Mean of the normalized mixture.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.centers[0].len();
        let mut m = vec![0.0; d];
        for (c, &w) in self.centers.iter().zip(&self.weights) {
            for i in 0..d {
                m[i] += w * c[i];
            }
        }
        m
    }
}

impl TargetDistribution for GaussianMixtureTarget {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn log_density_unnorm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let inv2v = 0.5 / self.variance;
        let logs: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.log_weights)
            .map(|(c, &lw)| {
                let sq: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                lw - sq * inv2v
            })
            .collect();
        Ok(crate::math::logsumexp(&logs))
    }

    fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let inv2v = 0.5 / self.variance;
        let logs: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.log_weights)
            .map(|(c, &lw)| {
                let sq: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                lw - sq * inv2v
            })
            .collect();
        let resp = crate::math::softmax_from_log(&logs)
            .expect("mixture components have finite log weights");
        let mut grad = vec![0.0; x.len()];
        for (c, r) in self.centers.iter().zip(resp) {
            for i in 0..x.len() {
                grad[i] += r * (c[i] - x[i]) / self.variance;
            }
        }
        Ok(grad)
    }

    fn sample_ground_truth(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        let d = self.dim();
        let sd = self.variance.sqrt();
        let mut out = Array2::zeros((n, d));
        for mut row in out.rows_mut() {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut comp = self.weights.len() - 1;
            for (i, &w) in self.weights.iter().enumerate() {
                acc += w;
                if u <= acc {
                    comp = i;
                    break;
                }
            }
            for i in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                row[i] = self.centers[comp][i] + sd * z;
            }
        }
        Ok(out)
    }
}

/// Funnel: x1 ~ N(0, a^2) and x_i | x1 ~ N(0, exp(2 b x1)) for i >= 2.
///
/// The log-density is the exact density of that reparametrization,
/// log p = -x1^2/(2a^2) - 1/2 sum_{i>=2} (x_i^2 exp(-2 b x1) + 2 b x1),
/// so the sampler and the density agree by construction.
#[derive(Debug, Clone, Copy)]
pub struct FunnelTarget {
    a: f64,
    b: f64,
    dim: usize,
}

impl FunnelTarget {
    pub fn new(a: f64, b: f64, dim: usize) -> Result<Self> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::InvalidArgument("funnel needs a > 0 and b > 0".into()));
        }
        if dim < 2 {
            return Err(Error::InvalidArgument("funnel needs dim >= 2".into()));
        }
        Ok(Self { a, b, dim })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl TargetDistribution for FunnelTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_unnorm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let scale = (-2.0 * self.b * x[0]).exp();
        let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
        Ok(-x[0] * x[0] / (2.0 * self.a * self.a)
            - 0.5 * (tail_sq * scale + 2.0 * self.b * x[0] * (self.dim - 1) as f64))
    }

    fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let scale = (-2.0 * self.b * x[0]).exp();
        let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
        let mut grad = vec![0.0; self.dim];
        grad[0] = -x[0] / (self.a * self.a) + self.b * tail_sq * scale
            - self.b * (self.dim - 1) as f64;
        for i in 1..self.dim {
            grad[i] = -x[i] * scale;
        }
        Ok(grad)
    }

    fn sample_ground_truth(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((n, self.dim));
        for mut row in out.rows_mut() {
            let z0: f64 = rng.sample(StandardNormal);
            row[0] = self.a * z0;
            let s = (self.b * row[0]).exp();
            for i in 1..self.dim {
                let z: f64 = rng.sample(StandardNormal);
                row[i] = s * z;
            }
        }
        Ok(out)
    }
}

/// Banana: pairs (x_{2p}, x_{2p+1}) with x_{2p+1} ~ N(0, a^2) and
/// x_{2p} | x_{2p+1} ~ N(b x_{2p+1}^2 - a^2 b, 1).
///
/// Matches the reparametrization y_odd = z + b y_even^2 - a^2 b,
/// y_even = a z (0-based: even index = curved coordinate).
#[derive(Debug, Clone, Copy)]
pub struct BananaTarget {
    a: f64,
    b: f64,
    dim: usize,
}

impl BananaTarget {
    pub fn new(a: f64, b: f64, dim: usize) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidArgument("banana needs a > 0".into()));
        }
        if dim < 2 || dim % 2 != 0 {
            return Err(Error::InvalidArgument("banana needs even dim >= 2".into()));
        }
        Ok(Self { a, b, dim })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl TargetDistribution for BananaTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_unnorm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut acc = 0.0;
        for p in 0..self.dim / 2 {
            let curved = x[2 * p];
            let scaled = x[2 * p + 1];
            let resid = curved - self.b * scaled * scaled + self.a * self.a * self.b;
            acc -= scaled * scaled / (2.0 * self.a * self.a) + 0.5 * resid * resid;
        }
        Ok(acc)
    }

    fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut grad = vec![0.0; self.dim];
        for p in 0..self.dim / 2 {
            let curved = x[2 * p];
            let scaled = x[2 * p + 1];
            let resid = curved - self.b * scaled * scaled + self.a * self.a * self.b;
            grad[2 * p] = -resid;
            grad[2 * p + 1] = -scaled / (self.a * self.a) + 2.0 * self.b * scaled * resid;
        }
        Ok(grad)
    }

    fn sample_ground_truth(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((n, self.dim));
        for mut row in out.rows_mut() {
            for p in 0..self.dim / 2 {
                let z_curved: f64 = rng.sample(StandardNormal);
                let z_scaled: f64 = rng.sample(StandardNormal);
                let scaled = self.a * z_scaled;
                row[2 * p + 1] = scaled;
                row[2 * p] = z_curved + self.b * scaled * scaled - self.a * self.a * self.b;
            }
        }
        Ok(out)
    }
}

/// Isotropic Gaussian N(0, variance * I).
#[derive(Debug, Clone, Copy)]
pub struct StdGaussianTarget {
    dim: usize,
    variance: f64,
}

impl StdGaussianTarget {
    pub fn new(dim: usize, variance: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument("variance must be > 0".into()));
        }
        Ok(Self { dim, variance })
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(dim, 1.0).unwrap()
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl TargetDistribution for StdGaussianTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_unnorm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sq: f64 = x.iter().map(|v| v * v).sum();
        Ok(-0.5 * sq / self.variance)
    }

    fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter().map(|v| -v / self.variance).collect())
    }

    fn sample_ground_truth(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        let sd = self.variance.sqrt();
        let mut out = Array2::zeros((n, self.dim));
        for mut row in out.rows_mut() {
            for i in 0..self.dim {
                let z: f64 = rng.sample(StandardNormal);
                row[i] = sd * z;
            }
        }
        Ok(out)
    }
}

/// The named default configurations used by the benchmark harness.
pub mod presets {
    use super::*;

    /// Vertices of an equilateral triangle with side `side`, centered at the
    /// origin (circumradius side/sqrt(3)).
    pub fn triangle_centers(side: f64) -> Vec<Vec<f64>> {
        let r = side / 3f64.sqrt();
        vec![
            vec![0.0, r],
            vec![-0.5 * side, -0.5 * r],
            vec![0.5 * side, -0.5 * r],
        ]
    }

    /// Three equally weighted unit-variance modes on a triangle of side
    /// 4*sqrt(3).
    pub fn mixture_2d_equal() -> GaussianMixtureTarget {
        GaussianMixtureTarget::new(
            triangle_centers(4.0 * 3f64.sqrt()),
            vec![1.0 / 3.0; 3],
            1.0,
        )
        .unwrap()
    }

    /// Same geometry with uneven weights (2/3, 1/6, 1/6).
    pub fn mixture_2d_uneven() -> GaussianMixtureTarget {
        GaussianMixtureTarget::new(
            triangle_centers(4.0 * 3f64.sqrt()),
            vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            1.0,
        )
        .unwrap()
    }

    /// Funnel with a = 2, b = 0.5.
    pub fn funnel(dim: usize) -> FunnelTarget {
        FunnelTarget::new(2.0, 0.5, dim).unwrap()
    }

    /// Banana with a = 5, b = 0.02.
    pub fn banana(dim: usize) -> BananaTarget {
        BananaTarget::new(5.0, 0.02, dim).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::central_difference_gradient;
    use crate::rng::chain_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    fn random_point(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                scale * z
            })
            .collect()
    }

    #[test]
    fn std_gaussian_values() {
        let t = StdGaussianTarget::standard(2);
        assert_abs_diff_eq!(t.log_density_unnorm(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(t.grad_log_density(&[1.0, -2.0]).unwrap(), vec![-1.0, 2.0]);
        assert!(matches!(
            t.log_density_unnorm(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mixture_at_mode_hand_value() {
        // Equal-weight triangle mixture, sigma = 1, side 4*sqrt(3):
        // at a mode the two other components sit at squared distance 48,
        // so log pi = log(1/3 (1 + 2 exp(-24))).
        let t = presets::mixture_2d_equal();
        let mode = t.centers()[0].clone();
        let expected = (1.0 / 3.0 + 2.0 / 3.0 * (-24.0f64).exp()).ln();
        assert_relative_eq!(
            t.log_density_unnorm(&mode).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn single_mode_mixture_gradient_vanishes_at_center() {
        let t = GaussianMixtureTarget::new(vec![vec![1.5, -0.5]], vec![1.0], 2.0).unwrap();
        let g = t.grad_log_density(&[1.5, -0.5]).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mixture_weight_validation() {
        assert!(GaussianMixtureTarget::new(vec![vec![0.0]], vec![0.9], 1.0).is_err());
        assert!(
            GaussianMixtureTarget::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5], 1.0)
                .is_err()
        );
        assert!(GaussianMixtureTarget::new(vec![vec![0.0]], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn funnel_zero_point_and_reparam_zero() {
        let t = presets::funnel(2);
        assert_abs_diff_eq!(t.log_density_unnorm(&[0.0, 0.0]).unwrap(), 0.0);
        // z = 0 maps to x = 0 under the reparametrization
        let x1 = t.a() * 0.0;
        let x2 = (t.b() * x1).exp() * 0.0;
        assert_eq!((x1, x2), (0.0, 0.0));
    }

    #[test]
    fn banana_zero_latent_maps_to_known_point() {
        let t = presets::banana(2);
        // z = (0,0): scaled coordinate 0, curved = 0 + b*0 - a^2 b = -0.5
        let scaled = t.a() * 0.0;
        let curved = 0.0 + t.b() * scaled * scaled - t.a() * t.a() * t.b();
        assert_abs_diff_eq!(curved, -0.5);
        assert_abs_diff_eq!(scaled, 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        // rel. err < 1e-6 at 100 random points per target, h = 1e-5
        let mut rng = chain_rng(42, 0, 0);
        let targets: Vec<(Box<dyn TargetDistribution>, f64)> = vec![
            (Box::new(presets::mixture_2d_equal()), 4.0),
            (Box::new(presets::mixture_2d_uneven()), 4.0),
            (Box::new(presets::funnel(4)), 1.5),
            (Box::new(presets::banana(4)), 2.0),
            (Box::new(StdGaussianTarget::standard(3)), 2.0),
        ];
        for (t, scale) in &targets {
            for _ in 0..100 {
                let x = random_point(t.dim(), *scale, &mut rng);
                let analytic = t.grad_log_density(&x).unwrap();
                let fd = central_difference_gradient(
                    |p| t.log_density_unnorm(p).unwrap(),
                    &x,
                    1e-5,
                );
                let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
                for (a, f) in analytic.iter().zip(&fd) {
                    assert!(
                        (a - f).abs() / norm < 1e-6,
                        "gradient mismatch: analytic {a}, fd {f} (dim {})",
                        t.dim()
                    );
                }
            }
        }
    }

    #[test]
    fn funnel_conditional_variance_tracks_scale() {
        // Var(x_i | x_1 in [t, t+dt]) should track exp(2 b t).
        let t = presets::funnel(2);
        let mut rng = chain_rng(11, 0, 1);
        let samples = t.sample_ground_truth(200_000, &mut rng).unwrap();
        for &(lo, hi) in &[(-1.0f64, -0.5f64), (0.0, 0.5), (1.0, 1.5)] {
            let bucket: Vec<f64> = samples
                .rows()
                .into_iter()
                .filter(|r| r[0] >= lo && r[0] < hi)
                .map(|r| r[1])
                .collect();
            assert!(bucket.len() > 500, "thin bucket [{lo}, {hi})");
            let var = crate::math::sample_variance(&bucket);
            // average of exp(2b x1) over the bucket, x1 ~ N(0, a^2) restricted
            let mean_scale: f64 = samples
                .rows()
                .into_iter()
                .filter(|r| r[0] >= lo && r[0] < hi)
                .map(|r| (2.0 * t.b() * r[0]).exp())
                .sum::<f64>()
                / bucket.len() as f64;
            let se = var * (2.0 / (bucket.len() as f64 - 1.0)).sqrt();
            assert!(
                (var - mean_scale).abs() < 4.0 * se + 0.02 * mean_scale,
                "conditional variance {var} vs expected {mean_scale} in [{lo}, {hi})"
            );
        }
    }

    #[test]
    fn mixture_mode_occupancy_matches_weights() {
        let t = presets::mixture_2d_uneven();
        let mut rng = chain_rng(5, 0, 2);
        let n = 100_000;
        let samples = t.sample_ground_truth(n, &mut rng).unwrap();
        let mut counts = vec![0usize; 3];
        for row in samples.rows() {
            let nearest = t
                .centers()
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let da: f64 = a.iter().zip(row.iter()).map(|(c, x)| (c - x).powi(2)).sum();
                    let db: f64 = b.iter().zip(row.iter()).map(|(c, x)| (c - x).powi(2)).sum();
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            counts[nearest] += 1;
        }
        for (i, &w) in t.weights().iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            let se = (w * (1.0 - w) / n as f64).sqrt();
            assert!(
                (freq - w).abs() < 4.0 * se,
                "mode {i}: freq {freq} vs weight {w} (4se = {})",
                4.0 * se
            );
        }
    }

    #[test]
    fn mixture_sample_mean_matches_closed_form() {
        let t = presets::mixture_2d_uneven();
        let mut rng = chain_rng(6, 0, 3);
        let n = 100_000;
        let samples = t.sample_ground_truth(n, &mut rng).unwrap();
        let truth = t.mean();
        for i in 0..2 {
            let col: Vec<f64> = samples.column(i).to_vec();
            let m = crate::math::mean(&col);
            let se = (crate::math::sample_variance(&col) / n as f64).sqrt();
            assert!(
                (m - truth[i]).abs() < 4.0 * se,
                "coordinate {i}: mean {m} vs {}",
                truth[i]
            );
        }
    }
}
