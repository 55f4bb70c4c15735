//! Closed-form calculators for the ergodicity constants of the i-SIR kernel,
//! the MALA kernel, and their composition, plus exact closed forms for
//! Gaussian target/proposal pairs to feed them.
//!
//! Everything here is pure and deterministic: recomputation is bit-identical.
//! The normal CDF comes from the crate's rational approximation
//! ([`crate::math::normal_cdf`], error well below 1e-10) so the minorization
//! constants reproduce across platforms.
//!
//! Several derived constants are astronomically large or small (they contain
//! factors like `exp(eta r^2)` with `r` in the thousands), so the calculators
//! carry them as natural logarithms. Fields prefixed `log_` hold `ln` values;
//! companion plain fields are the exponentiated values, which may round to
//! 0, 1 or infinity in `f64` — the log fields are authoritative.

use crate::math::{chi2_cdf, ln_neg_log1m_from_log, logsumexp, normal_log_cdf};
use crate::{Error, Result};
use serde::Serialize;

/// ln(1 + exp(t)) without overflow.
fn ln_one_plus_exp(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else {
        t.exp().ln_1p()
    }
}

/// Uniform-ergodicity rate of the i-SIR kernel.
///
/// With `L = sup w / lambda(w)` and a pool of `N` particles,
/// `epsilon_N = (N - 1) / (2 L + N - 2)`; the TV distance to the target
/// contracts at least by `kappa_N = 1 - epsilon_N` per step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsirRate {
    pub n_particles: usize,
    pub weight_sup_ratio: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

pub fn isir_rate(n_particles: usize, weight_sup_ratio: f64) -> Result<IsirRate> {
    if n_particles < 2 {
        return Err(Error::InvalidArgument("need at least 2 particles".into()));
    }
    if !(weight_sup_ratio >= 1.0) {
        return Err(Error::InvalidArgument(
            "the normalized weight sup ratio is >= 1 by definition".into(),
        ));
    }
    let n = n_particles as f64;
    let epsilon = (n - 1.0) / (2.0 * weight_sup_ratio + n - 2.0);
    Ok(IsirRate {
        n_particles,
        weight_sup_ratio,
        epsilon,
        kappa: 1.0 - epsilon,
    })
}

/// Weight sup ratio of a d-fold product pair: `ratio_1d ^ d`.
///
/// Overflow is reported as `+inf`.
pub fn product_weight_sup(ratio_1d: f64, dim: u32) -> Result<f64> {
    if !(ratio_1d >= 1.0) {
        return Err(Error::InvalidArgument(
            "per-dimension ratio must be >= 1".into(),
        ));
    }
    Ok(ratio_1d.powi(dim as i32))
}

/// Minorization constant on a set of target mass `pi_mass` where the
/// normalized weights are bounded by `w_sup_on_set`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmallSetEpsilon {
    pub epsilon: f64,
    /// Large-pool limit: the set's target mass itself.
    pub large_pool_limit: f64,
}

pub fn small_set_epsilon(
    n_particles: usize,
    w_sup_on_set: f64,
    pi_mass: f64,
) -> Result<SmallSetEpsilon> {
    if n_particles < 2 {
        return Err(Error::InvalidArgument("need at least 2 particles".into()));
    }
    if !(w_sup_on_set >= 1.0) {
        return Err(Error::InvalidArgument(
            "weight sup on the set must be >= 1".into(),
        ));
    }
    if !(pi_mass > 0.0 && pi_mass <= 1.0) {
        return Err(Error::InvalidArgument("set mass must lie in (0, 1]".into()));
    }
    let n = n_particles as f64;
    Ok(SmallSetEpsilon {
        epsilon: (n - 1.0) * pi_mass / (2.0 * w_sup_on_set + n - 2.0),
        large_pool_limit: pi_mass,
    })
}

/// Additive drift bound of the i-SIR kernel: `P_N V <= V + b`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsirDriftBound {
    pub b: f64,
    /// Large-pool limit: `2 pi(V) + 4 chi2 / lambda(V)`.
    pub large_pool_limit: f64,
}

/// Drift constant from `pi(V)`, `lambda(V)` and the normalized weight
/// variance `chi2 = Var_lambda[w] / lambda(w)^2` (equivalently: take the
/// weights normalized so that `lambda(w) = 1`). Requires `N >= 3`.
pub fn isir_drift_b(
    n_particles: usize,
    pi_v: f64,
    lambda_v: f64,
    chi2: f64,
) -> Result<IsirDriftBound> {
    if n_particles < 3 {
        return Err(Error::InvalidArgument("the drift bound needs N >= 3".into()));
    }
    if !(pi_v >= 1.0 && lambda_v >= 1.0) {
        return Err(Error::InvalidArgument(
            "V >= 1 forces pi(V) >= 1 and lambda(V) >= 1".into(),
        ));
    }
    if !(chi2 >= 0.0) {
        return Err(Error::InvalidArgument("weight variance must be >= 0".into()));
    }
    let n = n_particles as f64;
    let b = (n - 1.0) * pi_v / (pi_v / lambda_v + (n - 2.0) / 2.0)
        + 4.0 * (n - 1.0) * chi2 / ((n - 2.0) * lambda_v);
    Ok(IsirDriftBound {
        b,
        large_pool_limit: 2.0 * pi_v + 4.0 * chi2 / lambda_v,
    })
}

/// Inputs to the kernel-composition bound: a first kernel with additive
/// drift `P V <= V + b_p` that minorizes on the level set `{V <= r}` with
/// constant `eps_r`, composed with a second kernel contracting as
/// `Q V <= lambda_q V + b_q`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompositionInputs {
    pub lambda_q: f64,
    pub b_p: f64,
    pub b_q: f64,
    pub eps_r: f64,
    pub r: f64,
}

/// Geometric rate and constant of the composed kernel.
///
/// `c` follows the composition lemma's form
/// `(lambda_q + b)(1 + b_bar / [(1 - eps)(1 - lambda_bar)])`; `c_alt` is the
/// variant `(lambda_q + b_bar)(1 + b_bar / [2 (1 - eps)(1 - lambda_bar)])`.
/// Both appear side by side in the literature on this bound, so both are
/// reported.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompositionRate {
    pub inputs: CompositionInputs,
    pub b_total: f64,
    pub lambda_bar: f64,
    pub b_bar: f64,
    pub log_rho: f64,
    pub rho: f64,
    pub c: f64,
    pub c_alt: f64,
}

pub fn compose_rate(inputs: &CompositionInputs) -> Result<CompositionRate> {
    let CompositionInputs {
        lambda_q,
        b_p,
        b_q,
        eps_r,
        r,
    } = *inputs;
    if !(0.0..1.0).contains(&lambda_q) {
        return Err(Error::InvalidArgument("lambda_q must lie in [0, 1)".into()));
    }
    if !(b_p >= 0.0 && b_q >= 0.0) {
        return Err(Error::InvalidArgument("drift offsets must be >= 0".into()));
    }
    if !(eps_r > 0.0 && eps_r < 1.0) {
        return Err(Error::Infeasible(
            "minorization constant must lie in (0, 1); eps_r = 0 couples nothing".into(),
        ));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument("level radius r must be >= 1".into()));
    }
    let b_total = b_p + b_q;
    let lambda_bar = lambda_q + 2.0 * b_total / (1.0 + r);
    if lambda_bar >= 1.0 {
        return Err(Error::Infeasible(format!(
            "lambda_bar = {lambda_bar} >= 1: increase r or reduce the drift offsets"
        )));
    }
    let b_bar = lambda_q * r + b_total;
    let l1 = (1.0 - eps_r).ln();
    let l2 = lambda_bar.ln();
    let log_rho = l1 * l2 / (l1 + l2 - b_bar.ln());
    let c = (lambda_q + b_total) * (1.0 + b_bar / ((1.0 - eps_r) * (1.0 - lambda_bar)));
    let c_alt = (lambda_q + b_bar) * (1.0 + b_bar / (2.0 * (1.0 - eps_r) * (1.0 - lambda_bar)));
    Ok(CompositionRate {
        inputs: *inputs,
        b_total,
        lambda_bar,
        b_bar,
        log_rho,
        rho: log_rho.exp(),
        c,
        c_alt,
    })
}

/// Regularity constants of the potential `U = -log pi`:
/// curvature lower bound `strong_convexity` holding outside the ball of
/// radius `convexity_radius`, plus sup bounds on the second and third
/// derivatives.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MalaRegularity {
    pub strong_convexity: f64,
    pub hessian_bound: f64,
    pub third_derivative_bound: f64,
    pub convexity_radius: f64,
}

impl MalaRegularity {
    pub fn new(
        strong_convexity: f64,
        hessian_bound: f64,
        third_derivative_bound: f64,
        convexity_radius: f64,
    ) -> Result<Self> {
        if !(strong_convexity > 0.0) {
            return Err(Error::InvalidArgument("strong convexity must be > 0".into()));
        }
        if strong_convexity > hessian_bound {
            return Err(Error::InvalidArgument(
                "the curvature lower bound cannot exceed the Hessian sup".into(),
            ));
        }
        if third_derivative_bound < 0.0 || convexity_radius < 0.0 {
            return Err(Error::InvalidArgument(
                "derivative bounds and radii must be >= 0".into(),
            ));
        }
        Ok(Self {
            strong_convexity,
            hessian_bound,
            third_derivative_bound,
            convexity_radius,
        })
    }
}

/// Every constant in the MALA drift/minorization/ergodicity chain, computed
/// in dependency order for the Lyapunov function `V(x) = exp(eta |x|^2)`.
#[derive(Debug, Clone, Serialize)]
pub struct MalaConstants {
    pub regularity: MalaRegularity,
    pub dim: usize,
    /// Lyapunov exponent: eta = strong_convexity / 16.
    pub eta: f64,
    /// Radius outside which the potential grows quadratically.
    pub quadratic_radius: f64,
    /// Perturbation coefficient of the one-step transition comparison, at
    /// the final step bound.
    pub c1: f64,
    /// Coefficient of the dimension term in the mid-range drift remainder.
    pub c2: f64,
    pub gamma_half: f64,
    /// Drift-limited admissible discretization step.
    pub gamma_max: f64,
    pub radius_ula: f64,
    pub b_ula: f64,
    pub b_half: f64,
    pub radius_mala: f64,
    /// Drift rate per unit step: R V <= (1 - varpi gamma) V + ...
    pub varpi: f64,
    /// lambda = exp(-varpi); may underflow to 0 (its exact log is -varpi).
    pub lambda: f64,
    pub lambda_bar: f64,
    /// ln b^M at the final step bound.
    pub log_b_mala: f64,
    /// ln of the drift level M that defines the small set.
    pub log_m_level: f64,
    /// Small-set radius at the drift-limited step bound (provisional pass).
    pub k_gamma_pre: f64,
    /// Small-set radius at the final step bound — the headline constant.
    pub k_gamma: f64,
    /// ln eps(K) = ln 2 + ln Phi(-sqrt(3 (L+1)) K).
    pub log_eps_k: f64,
    /// ln of the minorization-limited step bound.
    pub log_gamma_tilde_k: f64,
    /// ln of the final step bound (min of the drift and minorization bounds).
    pub log_gamma_bar: f64,
    /// ln b_bar^M = ln(lambda b^M + M).
    pub log_b_bar_mala: f64,
    pub log_rho: f64,
    /// May round to exactly 1.0; `log_neg_log_rho` keeps the true gap.
    pub rho: f64,
    /// ln(-ln rho): finite whenever the chain contracts at all.
    pub log_neg_log_rho: f64,
    pub log_c: f64,
}

/// Evaluate the full constant chain for one dimension.
pub fn mala_constants(reg: &MalaRegularity, dim: usize) -> Result<MalaConstants> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let m = reg.strong_convexity;
    let l = reg.hessian_bound;
    let m3 = reg.third_derivative_bound;
    let k = reg.convexity_radius;
    let d = dim as f64;

    let eta = m / 16.0;
    let quadratic_radius = 2.0 * k * (1.0 + l / m);
    let gamma_half = 1.0_f64.min(m.powi(3) / (4.0 * l.powi(4))).min(1.0 / d);

    let c1_at = |gamma: f64| -> f64 {
        let third = 2.0
            * l
            * l
            * 1.0_f64
                .max(gamma.sqrt())
                .max(gamma * l)
                .max((gamma * l.powf(4.0 / 3.0)).powf(1.5));
        2.0 * (2.0f64.sqrt() * m3).max(gamma.sqrt() * m3 * l).max(third)
    };
    let c2_at = |gamma: f64| -> f64 {
        let sq2 = 2.0f64.sqrt();
        let inner = sq2 * l * l + (sq2 * l * l + gamma.sqrt() / (2.0 * sq2)) * l.powi(3);
        2.0 * l
            + 0.5 * gamma * l * l
            + gamma.powf(1.5) * l.powi(3) / (2.0 * sq2)
            + inner * inner * 16.0
    };
    let c2 = c2_at(gamma_half);
    // sup over u >= 1 of u exp(-u / 128), attained at u = 128
    let b_half = c2 * d + 128.0 * (-1.0f64).exp();

    let radius_ula = quadratic_radius.max(4.0 * (d / m).sqrt());
    let radius_mala = 16.0_f64
        .max(2.0 * k)
        .max(radius_ula)
        .max(quadratic_radius)
        .max(4.0 * (b_half / (m * eta)).sqrt());
    let gamma_max = gamma_half.min(4.0 / (m * eta * radius_mala * radius_mala));
    let varpi = eta * m * radius_mala * radius_mala / 16.0;
    let lambda = (-varpi).exp();
    let lambda_bar = 0.5 * (1.0 + lambda);

    let b_ula_at = |gamma: f64| -> f64 {
        let a = eta
            * (m / 4.0 + (1.0 + 16.0 * eta * gamma) * (4.0 * eta + 2.0 * l + gamma * l * l))
            * radius_ula
            * radius_ula;
        (a + 4.0 * eta * d) * (gamma * (a + 4.0 * eta * d)).exp()
    };
    // ln b^M(gamma) from ln gamma, assembled term by term in logs:
    // b^M = b^U + eta m r^2 exp(eta r^2) / 16 + C1 sqrt(gamma) (d + sqrt(3) d^2 + r^2)
    let log_b_mala_at = |log_gamma: f64| -> f64 {
        let gamma = log_gamma.exp();
        let drift_term = b_ula_at(gamma).ln();
        let level_term =
            (eta * m * radius_mala * radius_mala / 16.0).ln() + eta * radius_mala * radius_mala;
        let perturb_term = c1_at(gamma).ln()
            + 0.5 * log_gamma
            + (d + 3.0f64.sqrt() * d * d + radius_mala * radius_mala).ln();
        logsumexp(&[drift_term, level_term, perturb_term])
    };
    // M = max(4 b^M (1 + gamma) / (1 - lambda), 1)
    let log_m_at =
        |log_b: f64, gamma: f64| -> f64 { (4.0f64.ln() + log_b + gamma.ln_1p() - (-lambda).ln_1p()).max(0.0) };

    // provisional pass at the drift-limited step bound
    let log_b_pre = log_b_mala_at(gamma_max.ln());
    let log_m_pre = log_m_at(log_b_pre, gamma_max);
    let k_gamma_pre = (log_m_pre / eta).sqrt();

    // minorization-limited step bound, evaluated at the provisional radius
    let log_eps_at =
        |radius: f64| -> f64 { 2.0f64.ln() + normal_log_cdf(-(3.0 * (l + 1.0)).sqrt() * radius) };
    let gamma_tilde_half = m / (4.0 * l * l);
    let b_ula_tilde = 2.0 * d
        + quadratic_radius.max(2.0 * (2.0 * d / m).sqrt()).powi(2)
            * (gamma_tilde_half * l * l + 2.0 * l + m / 2.0);
    let log_gamma_tilde_k = gamma_tilde_half.ln().min(
        2.0 * (log_eps_at(k_gamma_pre)
            - (2.0
                * c1_at(gamma_tilde_half)
                * (d + 3.0f64.sqrt() * d * d + k_gamma_pre * k_gamma_pre + 2.0 * b_ula_tilde / m))
                .ln()),
    );
    let log_gamma_bar = gamma_max.ln().min(log_gamma_tilde_k);

    // final pass at the combined step bound
    let log_b_mala = log_b_mala_at(log_gamma_bar);
    let log_m_level = log_m_at(log_b_mala, log_gamma_bar.exp());
    let k_gamma = (log_m_level / eta).sqrt();
    let log_eps_k = log_eps_at(k_gamma);

    // b_bar^M = lambda b^M + M, with ln lambda = -varpi exactly
    let log_b_bar_mala = logsumexp(&[-varpi + log_b_mala, log_m_level]);

    // log rho = L1 L2 / (L1 + L2 - ln b_bar), L1 = ln(1 - eps/2), L2 = ln lambda_bar
    let ln_neg_l1 = ln_neg_log1m_from_log(log_eps_k - 2.0f64.ln());
    let l1 = -ln_neg_l1.exp();
    let l2 = lambda_bar.ln();
    let denom = log_b_bar_mala - l1 - l2;
    let log_neg_log_rho = ln_neg_l1 + (-l2).ln() - denom.ln();
    let log_rho = -log_neg_log_rho.exp();
    // C = rho^{-1} (1 + lambda) (1 + b_bar / [(1 - eps/2)(1 - lambda_bar)])
    let log_c = -log_rho
        + lambda.ln_1p()
        + ln_one_plus_exp(log_b_bar_mala - l1 - (1.0 - lambda_bar).ln());

    Ok(MalaConstants {
        regularity: *reg,
        dim,
        eta,
        quadratic_radius,
        c1: c1_at(gamma_max),
        c2,
        gamma_half,
        gamma_max,
        radius_ula,
        b_ula: b_ula_at(gamma_max),
        b_half,
        radius_mala,
        varpi,
        lambda,
        lambda_bar,
        log_b_mala,
        log_m_level,
        k_gamma_pre,
        k_gamma,
        log_eps_k,
        log_gamma_tilde_k,
        log_gamma_bar,
        log_b_bar_mala,
        log_rho,
        rho: log_rho.exp(),
        log_neg_log_rho,
        log_c,
    })
}

/// Geometric rate of the composed global+MALA kernel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ex2MalaRate {
    /// Pool size; `None` marks the large-pool limit.
    pub n_particles: Option<usize>,
    /// ln of the level radius `r = max(1, 4 b / (1 - lambda) - 1)`.
    pub log_r: f64,
    /// May round to exactly 1.0; `log_one_minus_epsilon` is authoritative.
    pub epsilon: f64,
    /// ln(1 - epsilon), carried exactly.
    pub log_one_minus_epsilon: f64,
    /// ln(b_global + b_bar^M).
    pub log_b: f64,
    /// ln(lambda r + b).
    pub log_b_bar: f64,
    pub log_rho: f64,
    pub rho: f64,
    pub log_neg_log_rho: f64,
    /// ln C with the factor-2 denominator variant.
    pub log_c: f64,
    /// ln C with the factor-1 denominator variant.
    pub log_c_alt: f64,
}

/// Composed-kernel rate for a pool of `n_particles`.
///
/// `w_sup_on_level` and `pi_log_tail_on_level` receive the *logarithm* of
/// the level radius (the radius itself overflows in realistic
/// configurations). The first returns the normalized weight sup over the
/// level set `{V_eta <= r} = {|x| <= sqrt(ln r / eta)}`; the second returns
/// `ln(1 - pi(level set))` — the mass itself usually rounds to 1.
pub fn ex2_mala_rate(
    n_particles: usize,
    w_sup_on_level: &dyn Fn(f64) -> f64,
    pi_log_tail_on_level: &dyn Fn(f64) -> f64,
    mala: &MalaConstants,
    isir_b: f64,
) -> Result<Ex2MalaRate> {
    if n_particles < 2 {
        return Err(Error::InvalidArgument("need at least 2 particles".into()));
    }
    let parts = rate_parts(mala, isir_b)?;
    let w_sup = w_sup_on_level(parts.log_r);
    if !(w_sup >= 1.0) {
        return Err(Error::InvalidArgument(
            "weight sup on the level set must be >= 1".into(),
        ));
    }
    let log_tail = pi_log_tail_on_level(parts.log_r);
    // 1 - eps_N = (2w - 1 + (N-1) tail) / (2w + N - 2), stable for tiny tails
    let n = n_particles as f64;
    let log_one_minus_eps =
        ((2.0 * w_sup - 1.0 + (n - 1.0) * log_tail.exp()) / (2.0 * w_sup + n - 2.0)).ln();
    finish_rate(Some(n_particles), log_one_minus_eps, parts, mala)
}

/// Large-pool limit of [`ex2_mala_rate`]: the minorization constant becomes
/// the level set's target mass, so `ln(1 - eps)` is the tail itself.
pub fn ex2_mala_rate_limit(
    pi_log_tail_on_level: &dyn Fn(f64) -> f64,
    mala: &MalaConstants,
    isir_b_limit: f64,
) -> Result<Ex2MalaRate> {
    let parts = rate_parts(mala, isir_b_limit)?;
    let log_one_minus_eps = pi_log_tail_on_level(parts.log_r);
    finish_rate(None, log_one_minus_eps, parts, mala)
}

struct RateParts {
    log_r: f64,
    log_b: f64,
    log_b_bar: f64,
}

fn rate_parts(mala: &MalaConstants, isir_b: f64) -> Result<RateParts> {
    if !(isir_b > 0.0) {
        return Err(Error::InvalidArgument(
            "the global-kernel drift offset must be > 0".into(),
        ));
    }
    let log_b = logsumexp(&[isir_b.ln(), mala.log_b_bar_mala]);
    let t = 4.0f64.ln() + log_b - (-mala.lambda).ln_1p();
    let log_r = if t < 30.0 {
        (t.exp() - 1.0).max(1.0).ln()
    } else {
        t
    };
    let log_b_bar = logsumexp(&[-mala.varpi + log_r, log_b]);
    Ok(RateParts {
        log_r,
        log_b,
        log_b_bar,
    })
}

fn finish_rate(
    n_particles: Option<usize>,
    log_one_minus_eps: f64,
    parts: RateParts,
    mala: &MalaConstants,
) -> Result<Ex2MalaRate> {
    if !(log_one_minus_eps < 0.0) || !log_one_minus_eps.is_finite() {
        return Err(Error::Infeasible(format!(
            "minorization constant degenerate: ln(1 - eps) = {log_one_minus_eps}"
        )));
    }
    let l1 = log_one_minus_eps;
    let l2 = mala.lambda_bar.ln();
    let denom = parts.log_b_bar - l1 - l2;
    let log_rho = l1 * l2 / -denom;
    let log_neg_log_rho = (-l1).ln() + (-l2).ln() - denom.ln();
    let base = logsumexp(&[-mala.varpi, parts.log_b_bar]);
    let log_c = base
        + ln_one_plus_exp(parts.log_b_bar - 2.0f64.ln() - l1 - (1.0 - mala.lambda_bar).ln());
    let log_c_alt = base + ln_one_plus_exp(parts.log_b_bar - l1 - (1.0 - mala.lambda_bar).ln());
    Ok(Ex2MalaRate {
        n_particles,
        log_r: parts.log_r,
        epsilon: -l1.exp_m1(),
        log_one_minus_epsilon: l1,
        log_b: parts.log_b,
        log_b_bar: parts.log_b_bar,
        log_rho,
        rho: log_rho.exp(),
        log_neg_log_rho,
        log_c,
        log_c_alt,
    })
}

/// Large-pool limit of the mixing-time ratio between the MALA kernel and the
/// composed kernel. Values below ~1e-300 are representable only through
/// `log_ratio`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixingRatio {
    pub log_ratio: f64,
    pub ratio: f64,
}

/// Core arithmetic of the ratio on pre-reduced parts:
/// `ln_neg_a = ln(-ln(1 - eps_mala/2))`, `ln_neg_b = ln(-ln(1 - eps_limit))`,
/// plus `ln lambda_bar` and the two `ln b_bar` values.
pub fn mixing_ratio_from_parts(
    ln_neg_a: f64,
    ln_neg_b: f64,
    log_lambda_bar: f64,
    log_b_bar_mala: f64,
    log_b_bar_limit: f64,
) -> MixingRatio {
    let a = -ln_neg_a.exp();
    let b = -ln_neg_b.exp();
    // ratio = [A / B] * [(A + ln lambda_bar - ln bM) / (B + ln lambda_bar - ln bInf)]
    let num2 = log_b_bar_mala - log_lambda_bar - a;
    let den2 = log_b_bar_limit - log_lambda_bar - b;
    let log_ratio = ln_neg_a - ln_neg_b + num2.ln() - den2.ln();
    MixingRatio {
        log_ratio,
        ratio: log_ratio.exp(),
    }
}

/// Mixing-time ratio from a MALA constant report and the large-pool
/// composed-kernel rate.
pub fn mixing_ratio_limit(mala: &MalaConstants, limit: &Ex2MalaRate) -> MixingRatio {
    let ln_neg_a = ln_neg_log1m_from_log(mala.log_eps_k - 2.0f64.ln());
    let ln_neg_b = (-limit.log_one_minus_epsilon).ln();
    mixing_ratio_from_parts(
        ln_neg_a,
        ln_neg_b,
        mala.lambda_bar.ln(),
        mala.log_b_bar_mala,
        limit.log_b_bar,
    )
}

/// Exact closed forms for a centered isotropic Gaussian target/proposal
/// pair; feeds the calculators without grid maximization.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPair {
    pub target_variance: f64,
    pub proposal_variance: f64,
    pub dim: usize,
}

impl GaussianPair {
    pub fn new(target_variance: f64, proposal_variance: f64, dim: usize) -> Result<Self> {
        if !(target_variance > 0.0) || !(proposal_variance > 0.0) || dim == 0 {
            return Err(Error::InvalidArgument(
                "variances and dimension must be positive".into(),
            ));
        }
        Ok(Self {
            target_variance,
            proposal_variance,
            dim,
        })
    }

    /// `sup_x w(x) / lambda(w) = (proposal_var / target_var)^{d/2}`
    /// (finite only for an over-dispersed proposal).
    pub fn weight_sup_ratio(&self) -> Result<f64> {
        if self.proposal_variance < self.target_variance {
            return Err(Error::Infeasible(
                "weights are unbounded when the proposal is narrower than the target".into(),
            ));
        }
        Ok((self.proposal_variance / self.target_variance).powf(0.5 * self.dim as f64))
    }

    /// `Var_lambda[w] / lambda(w)^2`; finite when `2 proposal_var > target_var`.
    pub fn chi2_divergence(&self) -> Result<f64> {
        let a = self.target_variance;
        let b = self.proposal_variance;
        if 2.0 * b <= a {
            return Err(Error::Infeasible(
                "chi-square divergence diverges when 2 proposal_var <= target_var".into(),
            ));
        }
        Ok((b / (a * (2.0 * b - a)).sqrt()).powi(self.dim as i32) - 1.0)
    }

    /// `pi(V)` for the quadratic Lyapunov function `V(x) = 1 + |x|^2`.
    pub fn pi_v_quadratic(&self) -> f64 {
        1.0 + self.dim as f64 * self.target_variance
    }

    /// `lambda(V)` for `V(x) = 1 + |x|^2`.
    pub fn lambda_v_quadratic(&self) -> f64 {
        1.0 + self.dim as f64 * self.proposal_variance
    }

    /// Target mass of the level set `{exp(eta |x|^2) <= r}` given `ln r`.
    pub fn pi_mass_on_level(&self, eta: f64, log_r: f64) -> f64 {
        if log_r <= 0.0 {
            return 0.0;
        }
        let radius_sq = log_r / eta;
        chi2_cdf(self.dim as f64, radius_sq / self.target_variance)
    }

    /// `ln(1 - mass)` of the same level set, stable when the mass rounds
    /// to 1.
    pub fn log_tail_mass_on_level(&self, eta: f64, log_r: f64) -> f64 {
        if log_r <= 0.0 {
            return 0.0;
        }
        let radius_sq = log_r / eta;
        crate::math::chi2_log_tail(self.dim as f64, radius_sq / self.target_variance)
    }

    /// Normalized weight sup over the same level set. For an over-dispersed
    /// proposal the sup sits at the origin, so the level radius drops out.
    pub fn w_sup_on_level(&self, _eta: f64, _log_r: f64) -> Result<f64> {
        self.weight_sup_ratio()
    }
}
