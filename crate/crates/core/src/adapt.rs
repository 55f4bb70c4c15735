//! FlEx2MCMC: Ex2MCMC with a flow proposal trained while sampling.
//!
//! M chains advance in parallel under a frozen parameter snapshot; the
//! epoch's candidate pools (and the base-space draws that produced them) are
//! then recycled into two gradient estimators:
//!
//! * [`h_forward`] — the Rao-Blackwellized forward-KL estimator: the
//!   softmax-weighted sum of `grad log lambda_theta` over the full pool.
//!   Its expectation is `-grad KL(pi || lambda_theta)`.
//! * [`h_backward`] — the backward-KL estimator: the plain average of
//!   `grad [log pi ∘ T_theta + log Jac]` over the fresh base draws. Its
//!   expectation is `-grad KL(lambda_theta || pi)`.
//!
//! The update adds `gamma_k * (alpha_k H^f + (1 - alpha_k) H^b)`; both terms
//! point in the descent direction of their KL, so `alpha = 0` recovers pure
//! backward-KL training (mode-seeking, prone to collapse on multimodal
//! targets) and `alpha = 1` pure forward-KL training. By default the raw
//! step is routed through Adam with learning rate `gamma_k`; the plain
//! stochastic-approximation update stays available behind a switch.
//!
//! Gradients merge across chains by a serial fold in chain order, so a run
//! is bit-reproducible for any worker count.

use crate::flow::{AdamState, FlowGrad, RealNvpFlow};
use crate::kernels::{categorical_from_log_weights, mala_step, MalaConfig};
use crate::math::{sample_variance, softmax_from_log};
use crate::targets::TargetDistribution;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Step-size and mixing schedules for the stochastic-approximation update.
///
/// `gamma_k = gamma0 / (1 + k)^iota` with `iota` in (1/2, 1], which makes
/// the step sizes square-summable but not summable. `alpha_k` is
/// nondecreasing toward its limit.
#[derive(Debug, Clone, Copy)]
pub struct AdaptSchedule {
    gamma0: f64,
    iota: f64,
    alpha: AlphaSchedule,
}

/// Mixing-weight schedule between the forward and backward KL gradients.
#[derive(Debug, Clone, Copy)]
pub enum AlphaSchedule {
    Constant(f64),
    /// Linear ramp from `from` to `to` over the first `over` iterations.
    Ramp { from: f64, to: f64, over: usize },
}

impl AdaptSchedule {
    pub fn new(gamma0: f64, iota: f64, alpha: AlphaSchedule) -> Result<Self> {
        if !(gamma0 > 0.0) {
            return Err(Error::InvalidArgument("gamma0 must be > 0".into()));
        }
        if !(iota > 0.5 && iota <= 1.0) {
            return Err(Error::InvalidArgument(
                "iota must lie in (1/2, 1] for a square-summable, non-summable schedule".into(),
            ));
        }
        let ok = match alpha {
            AlphaSchedule::Constant(a) => (0.0..=1.0).contains(&a),
            AlphaSchedule::Ramp { from, to, .. } => {
                (0.0..=1.0).contains(&from) && (0.0..=1.0).contains(&to) && from <= to
            }
        };
        if !ok {
            return Err(Error::InvalidArgument(
                "alpha must stay in [0, 1] and be nondecreasing".into(),
            ));
        }
        Ok(Self { gamma0, iota, alpha })
    }

    /// Default schedule: gamma0 = 5e-3, iota = 0.51, constant alpha = 0.9.
    pub fn default_flow_training() -> Self {
        Self::new(5e-3, 0.51, AlphaSchedule::Constant(0.9)).unwrap()
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma0 / (1.0 + k as f64).powf(self.iota)
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self.alpha {
            AlphaSchedule::Constant(a) => a,
            AlphaSchedule::Ramp { from, to, over } => {
                if over == 0 || k >= over {
                    to
                } else {
                    from + (to - from) * k as f64 / over as f64
                }
            }
        }
    }

    pub fn alpha_limit(&self) -> f64 {
        match self.alpha {
            AlphaSchedule::Constant(a) => a,
            AlphaSchedule::Ramp { to, .. } => to,
        }
    }
}

/// Knobs of the per-iteration kernel and update.
#[derive(Debug, Clone, Copy)]
pub struct FlexConfig {
    /// Pool size N of the global kernel.
    pub n_particles: usize,
    /// Rejuvenation configuration (step size shared by all chains).
    pub mala: MalaConfig,
    /// Route the update through Adam (learning rate = gamma_k) instead of
    /// the plain stochastic-approximation step.
    pub use_adam: bool,
    /// L2 clip on the merged gradient before the update.
    pub grad_clip: f64,
    /// Projection radius on the parameter vector after the update.
    pub param_norm_guard: f64,
}

impl FlexConfig {
    pub fn new(n_particles: usize, mala: MalaConfig) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::InvalidArgument(
                "the adaptive kernel needs at least 2 particles".into(),
            ));
        }
        Ok(Self {
            n_particles,
            mala,
            use_adam: true,
            grad_clip: 1e2,
            param_norm_guard: 1e4,
        })
    }
}

/// One training-log row per iteration.
#[derive(Debug, Clone, Copy)]
pub struct FlexLogRow {
    pub iteration: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Pool log-weight variance, averaged over chains.
    pub mean_log_weight_variance: f64,
    pub global_accept_rate: f64,
    pub mala_accept_rate: f64,
    pub grad_norm: f64,
    /// Monte-Carlo backward-KL surrogate (up to an additive constant):
    /// minus the pool average of `log pi~(T(z)) + log det(z)`.
    pub backward_surrogate: f64,
}

/// Chains, flow parameters and optimizer state of a FlEx2MCMC run.
#[derive(Debug, Clone)]
pub struct FlexState {
    pub chains: Vec<Vec<f64>>,
    pub flow: RealNvpFlow,
    pub adam: AdamState,
    pub iteration: usize,
    pub log: Vec<FlexLogRow>,
}

impl FlexState {
    pub fn new(chains: Vec<Vec<f64>>, flow: RealNvpFlow) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::InvalidArgument("need at least one chain".into()));
        }
        if chains
            .iter()
            .any(|c| c.len() != flow.dim() || c.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "chain states must be finite and match the flow dimension".into(),
            ));
        }
        let adam = AdamState::new(flow.param_count());
        Ok(Self {
            chains,
            flow,
            adam,
            iteration: 0,
            log: Vec::new(),
        })
    }
}

/// Rao-Blackwellized forward-KL gradient estimator over a full candidate
/// pool: `sum_l omega_l grad_theta log lambda_theta(x^l)` with softmax
/// weights computed from `log_weights` (which must have been evaluated under
/// the same parameters).
pub fn h_forward(
    flow: &RealNvpFlow,
    pool: &[Vec<f64>],
    log_weights: &[f64],
) -> Result<Vec<f64>> {
    if pool.is_empty() || pool.len() != log_weights.len() {
        return Err(Error::InvalidArgument(
            "pool and log-weight lengths must match and be non-empty".into(),
        ));
    }
    let omega = softmax_from_log(log_weights)
        .ok_or_else(|| Error::Degenerate("all pool log-weights are -inf".into()))?;
    let mut grad = FlowGrad::zeros_like(flow);
    for (x, w) in pool.iter().zip(omega) {
        if w > 0.0 {
            flow.accumulate_grad_log_density(x, w, &mut grad);
        }
    }
    Ok(grad.to_flat())
}

/// Backward-KL gradient estimator over the epoch's fresh base draws: the
/// average of `grad_theta [log pi~(T_theta(z)) + log det(z)]`.
///
/// The estimator's expectation is `-grad KL(lambda_theta || pi)`, so adding
/// `gamma * h_backward` to the parameters descends the backward KL.
pub fn h_backward(
    flow: &RealNvpFlow,
    target: &dyn TargetDistribution,
    z_pool: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if z_pool.is_empty() {
        return Err(Error::InvalidArgument("empty base-draw pool".into()));
    }
    let weight = 1.0 / z_pool.len() as f64;
    let mut grad = FlowGrad::zeros_like(flow);
    for z in z_pool {
        flow.accumulate_grad_backward_terms(target, z, weight, &mut grad)?;
    }
    Ok(grad.to_flat())
}

struct ChainOutcome {
    state: Vec<f64>,
    grad: Vec<f64>,
    log_weight_variance: f64,
    accepted_global: bool,
    mala_accepts: u32,
    backward_value_mean: f64,
}

/// Advance every chain by one Ex2MCMC step under the frozen flow, then apply
/// one stochastic-approximation update to the flow parameters.
///
/// `rngs` supplies one independent stream per chain; gradients are merged by
/// a serial fold in chain order, so results do not depend on the worker
/// count. Errors abort before any parameter is written.
pub fn flex2_iteration(
    state: &mut FlexState,
    target: &dyn TargetDistribution,
    cfg: &FlexConfig,
    schedule: &AdaptSchedule,
    rngs: &mut [ChaCha8Rng],
) -> Result<()> {
    if rngs.len() != state.chains.len() {
        return Err(Error::InvalidArgument(format!(
            "need one rng stream per chain ({} chains, {} streams)",
            state.chains.len(),
            rngs.len()
        )));
    }
    let k = state.iteration;
    let alpha = schedule.alpha(k);
    let gamma = schedule.gamma(k);
    let flow = &state.flow;
    let n = cfg.n_particles;
    let dim = flow.dim();

    let outcomes: Vec<Result<ChainOutcome>> = state
        .chains
        .par_iter()
        .zip(rngs.par_iter_mut())
        .map(|(chain, rng)| -> Result<ChainOutcome> {
            // pool: slot 0 is the previous state, the rest are flow draws
            let mut pool = Vec::with_capacity(n);
            let mut z_pool = Vec::with_capacity(n - 1);
            let mut log_weights = Vec::with_capacity(n);
            pool.push(chain.clone());
            log_weights.push(target.log_density_unnorm(chain)? - flow.log_density(chain));
            for _ in 1..n {
                let z: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let (x, log_det) = flow.forward(&z);
                // log lambda(T(z)) = log phi(z) - log det, both already known
                let log_lambda = flow.base_log_density(&z) - log_det;
                log_weights.push(target.log_density_unnorm(&x)? - log_lambda);
                pool.push(x);
                z_pool.push(z);
            }
            let u: f64 = rng.gen();
            let index = categorical_from_log_weights(&log_weights, u)?;
            let accepted_global = index != 0;
            let mut next = pool[index].clone();
            let mut mala_accepts = 0u32;
            for _ in 0..cfg.mala.n_steps() {
                let (s, acc) = mala_step(&next, target, cfg.mala.step_size(), rng)?;
                next = s;
                mala_accepts += acc as u32;
            }

            // gradient contribution under the same frozen parameters
            let fwd = h_forward(flow, &pool, &log_weights)?;
            let mut grad = FlowGrad::zeros_like(flow);
            let weight = 1.0 / z_pool.len() as f64;
            let mut value_acc = 0.0;
            for z in &z_pool {
                let (_, value) = flow.accumulate_grad_backward_terms(target, z, weight, &mut grad)?;
                value_acc += value;
            }
            let bwd = grad.to_flat();
            let combined: Vec<f64> = fwd
                .iter()
                .zip(&bwd)
                .map(|(f, b)| alpha * f + (1.0 - alpha) * b)
                .collect();
            Ok(ChainOutcome {
                state: next,
                grad: combined,
                log_weight_variance: sample_variance(&log_weights),
                accepted_global,
                mala_accepts,
                backward_value_mean: value_acc / z_pool.len() as f64,
            })
        })
        .collect();

    // serial merge in chain order: identical result for any worker count
    let m = state.chains.len() as f64;
    let mut merged = vec![0.0f64; state.flow.param_count()];
    let mut global_accepts = 0u64;
    let mut mala_accepts = 0u64;
    let mut lw_var = 0.0;
    let mut backward_value = 0.0;
    for (j, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|e| Error::Kernel(format!("chain {j} at iteration {k}: {e}")))?;
        for (acc, g) in merged.iter_mut().zip(&outcome.grad) {
            *acc += g / m;
        }
        global_accepts += outcome.accepted_global as u64;
        mala_accepts += outcome.mala_accepts as u64;
        lw_var += outcome.log_weight_variance / m;
        backward_value += outcome.backward_value_mean / m;
        state.chains[j] = outcome.state;
    }

    let mut grad_norm = merged.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !grad_norm.is_finite() {
        return Err(Error::NonFinite(format!(
            "merged gradient at iteration {k} (norm {grad_norm})"
        )));
    }
    if grad_norm > cfg.grad_clip {
        let scale = cfg.grad_clip / grad_norm;
        for g in &mut merged {
            *g *= scale;
        }
        grad_norm = cfg.grad_clip;
    }

    let mut params = state.flow.params_flat();
    if cfg.use_adam {
        // Adam minimizes, so feed the negated ascent direction
        let neg: Vec<f64> = merged.iter().map(|g| -g).collect();
        state.adam.update(&mut params, &neg, gamma)?;
    } else {
        for (p, g) in params.iter_mut().zip(&merged) {
            *p += gamma * g;
        }
    }
    let norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm > cfg.param_norm_guard {
        let scale = cfg.param_norm_guard / norm;
        for p in &mut params {
            *p *= scale;
        }
    }
    state
        .flow
        .set_params_flat(&params)
        .map_err(|e| Error::NonFinite(format!("parameter update at iteration {k}: {e}")))?;

    state.log.push(FlexLogRow {
        iteration: k,
        gamma,
        alpha,
        mean_log_weight_variance: lw_var,
        global_accept_rate: global_accepts as f64 / m,
        mala_accept_rate: if cfg.mala.n_steps() == 0 {
            f64::NAN
        } else {
            mala_accepts as f64 / (m * cfg.mala.n_steps() as f64)
        },
        grad_norm,
        backward_surrogate: -backward_value,
    });
    state.iteration += 1;
    Ok(())
}

/// Monte-Carlo norm of the combined KL gradient
/// `alpha grad KL(pi || lambda) + (1 - alpha) grad KL(lambda || pi)` at the
/// current parameters: near zero at a stationary point of the training loss.
///
/// The forward term uses exact ground-truth target samples (so this is a
/// validation tool, not part of training); the backward term uses fresh base
/// draws.
pub fn stationarity_residual(
    flow: &RealNvpFlow,
    target: &dyn TargetDistribution,
    alpha: f64,
    n_mc: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("need at least one MC draw".into()));
    }
    let truth = target.sample_ground_truth(n_mc, rng)?;
    let mut fwd = FlowGrad::zeros_like(flow);
    let w = 1.0 / n_mc as f64;
    for row in truth.rows() {
        flow.accumulate_grad_log_density(row.as_slice().unwrap(), w, &mut fwd);
    }
    let fwd = fwd.to_flat();
    let mut bwd = FlowGrad::zeros_like(flow);
    for _ in 0..n_mc {
        let z: Vec<f64> = (0..flow.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        flow.accumulate_grad_backward_terms(target, &z, w, &mut bwd)?;
    }
    let bwd = bwd.to_flat();
    // grad KL_f = -E_pi[grad log lambda], grad KL_b = -E_phi[grad(...)]
    let norm_sq: f64 = fwd
        .iter()
        .zip(&bwd)
        .map(|(f, b)| {
            let v = alpha * f + (1.0 - alpha) * b;
            v * v
        })
        .sum();
    Ok(norm_sq.sqrt())
}
