//! Independent proposal distributions for the global kernel.
//!
//! A proposal must support exact sampling *and* exact (normalized)
//! log-density evaluation; estimated densities are excluded by construction.
//! All importance weights live in log space end to end — normalized weights
//! are only ever produced through a max-shifted softmax
//! ([`crate::math::softmax_from_log`]), since raw weights overflow once the
//! dimension reaches a few tens.

use crate::flow::RealNvpFlow;
use crate::targets::TargetDistribution;
use crate::{Error, Result};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

/// An independent proposal with exact sampling and exact log-density.
pub trait Proposal: Sync {
    fn dim(&self) -> usize;

    /// Exact draw from the proposal.
    fn propose(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Exact normalized log-density at `x`.
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

/// N(mean, variance * I).
#[derive(Debug, Clone)]
pub struct IsotropicGaussianProposal {
    mean: Vec<f64>,
    variance: f64,
    log_norm: f64,
}

impl IsotropicGaussianProposal {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidArgument("proposal mean must be non-empty".into()));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument("proposal variance must be > 0".into()));
        }
        let d = mean.len() as f64;
        let log_norm = -0.5 * d * ((2.0 * std::f64::consts::PI * variance).ln());
        Ok(Self {
            mean,
            variance,
            log_norm,
        })
    }

    /// Zero-mean proposal of dimension `dim`.
    pub fn centered(dim: usize, variance: f64) -> Self {
        Self::new(vec![0.0; dim], variance).unwrap()
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl Proposal for IsotropicGaussianProposal {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn propose(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let sd = self.variance.sqrt();
        self.mean
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + sd * z
            })
            .collect()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.mean.len() {
            return Err(Error::dim(self.mean.len(), x.len()));
        }
        let sq: f64 = x
            .iter()
            .zip(&self.mean)
            .map(|(xi, mi)| (xi - mi) * (xi - mi))
            .sum();
        Ok(self.log_norm - 0.5 * sq / self.variance)
    }
}

/// Push-forward of a standard Gaussian base through a RealNVP flow.
///
/// Sampling maps a base draw through the flow; the log-density inverts the
/// flow and adds the log-Jacobian, both exact.
#[derive(Debug, Clone)]
pub struct FlowProposal {
    flow: RealNvpFlow,
}

impl FlowProposal {
    pub fn new(flow: RealNvpFlow) -> Self {
        Self { flow }
    }

    pub fn flow(&self) -> &RealNvpFlow {
        &self.flow
    }

    pub fn flow_mut(&mut self) -> &mut RealNvpFlow {
        &mut self.flow
    }

    /// Draw together with the base-space point and forward log-Jacobian that
    /// produced it. The adaptive sampler needs all three.
    pub fn propose_with_base(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>, f64) {
        let z: Vec<f64> = (0..self.flow.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let (x, log_det) = self.flow.forward(&z);
        (x, z, log_det)
    }
}

impl Proposal for FlowProposal {
    fn dim(&self) -> usize {
        self.flow.dim()
    }

    fn propose(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.propose_with_base(rng).0
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.flow.dim() {
            return Err(Error::dim(self.flow.dim(), x.len()));
        }
        Ok(self.flow.log_density(x))
    }
}

/// log w(x) = log pi~(x) - log lambda(x).
///
/// Errors with the offending point if the difference is not finite (support
/// mismatch or proposal underflow).
pub fn log_importance_weight(
    target: &dyn TargetDistribution,
    proposal: &dyn Proposal,
    x: &[f64],
) -> Result<f64> {
    let log_target = target.log_density_unnorm(x)?;
    let log_proposal = proposal.log_density(x)?;
    let lw = log_target - log_proposal;
    if lw.is_finite() {
        Ok(lw)
    } else {
        Err(Error::NonFiniteWeight {
            x: x.to_vec(),
            log_target,
            log_proposal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;
    use crate::targets::StdGaussianTarget;
    use approx::assert_relative_eq;

    #[test]
    fn standard_normal_log_density_at_origin() {
        let p = IsotropicGaussianProposal::centered(2, 1.0);
        assert_relative_eq!(
            p.log_density(&[0.0, 0.0]).unwrap(),
            -(2.0 * std::f64::consts::PI).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn empirical_moments_match() {
        let mut rng = chain_rng(3, 1, 0);
        let p = IsotropicGaussianProposal::new(vec![1.5, -2.0], 4.0).unwrap();
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..n {
            let x = p.propose(&mut rng);
            for i in 0..2 {
                sums[i] += x[i];
                sq[i] += x[i] * x[i];
            }
        }
        for i in 0..2 {
            let mean = sums[i] / n as f64;
            let var = sq[i] / n as f64 - mean * mean;
            let mean_se = (4.0f64 / n as f64).sqrt();
            let var_se = 4.0 * (2.0f64 / n as f64).sqrt();
            let true_mean = if i == 0 { 1.5 } else { -2.0 };
            assert!((mean - true_mean).abs() < 4.0 * mean_se);
            assert!((var - 4.0).abs() < 4.0 * var_se);
        }
    }

    #[test]
    fn log_weight_constant_when_target_equals_proposal() {
        // pi = lambda: differences of log-weights vanish anywhere.
        let t = StdGaussianTarget::standard(2);
        let p = IsotropicGaussianProposal::centered(2, 1.0);
        let a = log_importance_weight(&t, &p, &[0.3, -0.7]).unwrap();
        let b = log_importance_weight(&t, &p, &[2.0, 1.0]).unwrap();
        assert_relative_eq!(a - b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn log_weight_hand_value_1d() {
        // pi~ = exp(-x^2/2), lambda = N(0,2):
        // log w(x) = -x^2/4 + 0.5 log(4 pi)
        let t = StdGaussianTarget::standard(1);
        let p = IsotropicGaussianProposal::centered(1, 2.0);
        for &x in &[0.0, 0.8, -2.5] {
            let expected = -x * x / 4.0 + 0.5 * (4.0 * std::f64::consts::PI).ln();
            assert_relative_eq!(
                log_importance_weight(&t, &p, &[x]).unwrap(),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn mixture_weight_matches_direct_evaluation() {
        let t = crate::targets::presets::mixture_2d_equal();
        let p = IsotropicGaussianProposal::centered(2, 4.0);
        let x = [0.0, 4.0]; // a mode center
        use crate::targets::TargetDistribution;
        let direct = t.log_density_unnorm(&x).unwrap() - p.log_density(&x).unwrap();
        assert_relative_eq!(
            log_importance_weight(&t, &p, &x).unwrap(),
            direct,
            max_relative = 1e-14
        );
    }
}
