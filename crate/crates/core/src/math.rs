//! Scalar numeric utilities shared by the samplers, diagnostics and
//! constant calculators.
//!
//! Everything here is deterministic, allocation-light and implemented in the
//! crate so that results are bit-reproducible across platforms: the normal
//! CDF uses Cody's rational Chebyshev approximation for `erf`/`erfc`
//! (relative error below 1e-14, far inside the 1e-10 budget the constant
//! calculators need), and the regularized incomplete gamma uses the classic
//! series / continued-fraction pair.

/// log(sum(exp(v))) with the usual max shift. Returns `f64::NEG_INFINITY`
/// for an empty slice or when every entry is -inf.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max; // empty, all -inf, or a +inf/NaN poisoning the sum
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalized weights from log weights via a max-shifted softmax.
///
/// Adding a constant to every entry leaves the output bit-identical.
/// Returns `None` when no entry is finite (no normalizable mass).
pub fn softmax_from_log(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    Some(w)
}

/// Error function, Cody's rational Chebyshev approximation (netlib CALERF).
pub fn erf(x: f64) -> f64 {
    if x.abs() <= 0.46875 {
        let z = x * x;
        x * cody_small(z)
    } else {
        let e = erfc(x.abs());
        if x > 0.0 {
            1.0 - e
        } else {
            e - 1.0
        }
    }
}

/// Complementary error function, Cody's approximation.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax <= 0.46875 {
        return 1.0 - erf(x);
    } else if ax <= 4.0 {
        (-ax * ax).exp() * cody_medium(ax)
    } else {
        let z = ax * ax;
        let inv2 = 1.0 / z;
        let r = cody_large(inv2);
        // 1/sqrt(pi)
        ((-z).exp() / ax) * (0.564_189_583_547_756_3 - inv2 * r).max(0.0)
    };
    if x >= 0.0 {
        val
    } else {
        2.0 - val
    }
}

fn cody_small(z: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_6e0,
        1.138_641_541_510_501_6e2,
        3.774_852_376_853_020_2e2,
        3.209_377_589_138_469_5e3,
        1.857_777_061_846_031_5e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_1e1,
        2.440_246_379_344_441_7e2,
        1.282_616_526_077_372_3e3,
        2.844_236_833_439_170_6e3,
    ];
    let num = ((((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z) + A[3];
    let den = ((((z + B[0]) * z + B[1]) * z + B[2]) * z) + B[3];
    num / den
}

fn cody_medium(x: f64) -> f64 {
    const C: [f64; 9] = [
        5.641_884_969_886_700_9e-1,
        8.883_149_794_388_375_9e0,
        6.611_919_063_714_163e1,
        2.986_351_381_974_001_3e2,
        8.819_522_212_417_691e2,
        1.712_047_612_634_070_6e3,
        2.051_078_377_826_071_5e3,
        1.230_339_354_797_997_2e3,
        2.153_115_354_744_038_5e-8,
    ];
    const D: [f64; 8] = [
        1.574_492_611_070_983_5e1,
        1.176_939_508_913_125e2,
        5.371_811_018_620_098_6e2,
        1.621_389_574_566_690_2e3,
        3.290_799_235_733_459_7e3,
        4.362_619_090_143_247e3,
        3.439_367_674_143_721_6e3,
        1.230_339_354_803_749_4e3,
    ];
    let mut num = C[8] * x;
    let mut den = x;
    for i in 0..7 {
        num = (num + C[i]) * x;
        den = (den + D[i]) * x;
    }
    (num + C[7]) / (den + D[7])
}

fn cody_large(inv2: f64) -> f64 {
    const P: [f64; 6] = [
        3.053_266_349_612_323_4e-1,
        3.603_448_999_498_044_4e-1,
        1.257_817_261_112_292_5e-1,
        1.608_378_514_874_227_7e-2,
        6.587_491_615_298_378e-4,
        1.631_538_713_730_209_8e-2,
    ];
    const Q: [f64; 5] = [
        2.568_520_192_289_822_4e0,
        1.872_952_849_923_460_5e0,
        5.279_051_029_514_284e-1,
        6.051_834_131_244_132e-2,
        2.335_204_976_268_691_8e-3,
    ];
    let mut num = P[5] * inv2;
    let mut den = inv2;
    for i in 0..4 {
        num = (num + P[i]) * inv2;
        den = (den + Q[i]) * inv2;
    }
    (num + P[4]) / (den + Q[4])
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// log of the standard normal CDF, usable far into the lower tail where
/// `normal_cdf` underflows. Uses the asymptotic expansion of `erfc` for
/// x <= -26 (truncation error < 1e-12 relative there).
pub fn normal_log_cdf(x: f64) -> f64 {
    if x > -26.0 {
        normal_cdf(x).ln()
    } else {
        let z = -x * std::f64::consts::FRAC_1_SQRT_2; // z = |x|/sqrt(2), large
        let u = 1.0 / (2.0 * z * z);
        // erfc(z) ~ exp(-z^2)/(z sqrt(pi)) * sum_n (-1)^n (2n-1)!! u^n
        let series = 1.0 + u * (-1.0 + u * (3.0 + u * (-15.0 + u * (105.0 + u * (-945.0 + u * 10395.0)))));
        -z * z - z.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln() - std::f64::consts::LN_2
    }
}

/// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
pub fn reg_gamma_lower(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (-x + a * x.ln() - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// ln Q(a, x) for the regularized upper incomplete gamma, stable far into
/// the tail where Q underflows.
pub fn log_reg_gamma_upper(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x < a + 1.0 {
        // complement of the series value; Q is order 1 here
        (1.0 - reg_gamma_lower(a, x)).ln()
    } else {
        // continued fraction evaluated unexponentiated
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        -x + a * x.ln() - ln_gamma(a) + h.ln()
    }
}

/// Chi-squared CDF with `df` degrees of freedom.
pub fn chi2_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        reg_gamma_lower(0.5 * df, 0.5 * x)
    }
}

/// ln of the chi-squared upper tail P(X > x), stable for huge `x`.
pub fn chi2_log_tail(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        log_reg_gamma_upper(0.5 * df, 0.5 * x)
    }
}

/// Chi-squared quantile by bisection on [`chi2_cdf`].
pub fn chi2_quantile(df: f64, p: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&p));
    let (mut lo, mut hi) = (0.0, df.max(1.0));
    while chi2_cdf(df, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(df, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
///
/// Used throughout the test suites as the independent oracle for analytic
/// gradients.
pub fn central_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Sample mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// ln(-ln(1 - p)) given ln(p), stable for p anywhere in (0, 1).
///
/// For tiny p, -ln(1-p) ~ p so the result is ~ln(p); the helper switches to
/// the direct formula once p is large enough to matter.
pub fn ln_neg_log1m_from_log(log_p: f64) -> f64 {
    if log_p < -30.0 {
        log_p
    } else {
        let p = log_p.exp();
        (-(-p).ln_1p()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn erf_reference_values() {
        // Reference values from standard tables (15 significant digits).
        assert_relative_eq!(erf(0.5), 0.520_499_877_813_046_5, max_relative = 1e-13);
        assert_relative_eq!(erf(1.0), 0.842_700_792_949_714_9, max_relative = 1e-13);
        assert_relative_eq!(erf(2.0), 0.995_322_265_018_952_7, max_relative = 1e-13);
        assert_relative_eq!(erfc(3.0), 2.209_049_699_858_544e-5, max_relative = 1e-12);
        assert_relative_eq!(erfc(6.0), 2.151_973_671_249_891e-17, max_relative = 1e-11);
        assert_relative_eq!(erfc(-1.0), 1.842_700_792_949_714_9, max_relative = 1e-13);
    }

    #[test]
    fn normal_cdf_symmetry_and_tails() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(normal_cdf(1.96), 0.975_002_104_851_780_2, max_relative = 1e-12);
        for &x in &[0.3, 1.0, 2.5, 7.0] {
            assert_relative_eq!(normal_cdf(x) + normal_cdf(-x), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn normal_log_cdf_matches_direct_and_extends() {
        for &x in &[-5.0, -10.0, -20.0, -25.9] {
            assert_relative_eq!(normal_log_cdf(x), normal_cdf(x).ln(), max_relative = 1e-10);
        }
        // continuity at the asymptotic switch
        let a = normal_log_cdf(-26.0 + 1e-9);
        let b = normal_log_cdf(-26.0 - 1e-9);
        assert_relative_eq!(a, b, max_relative = 1e-9);
        // deep tail stays finite and follows -x^2/2 to leading order
        let v = normal_log_cdf(-1000.0);
        assert!(v.is_finite());
        assert_relative_eq!(v, -500_000.0, max_relative = 1e-4);
    }

    #[test]
    fn incomplete_gamma_reference_values() {
        // P(1, x) = 1 - exp(-x)
        assert_relative_eq!(reg_gamma_lower(1.0, 0.7), 1.0 - (-0.7f64).exp(), max_relative = 1e-12);
        // chi^2_2 CDF(x) = 1 - exp(-x/2)
        assert_relative_eq!(chi2_cdf(2.0, 3.0), 1.0 - (-1.5f64).exp(), max_relative = 1e-12);
        // table value: chi^2_19 99% quantile
        assert_relative_eq!(chi2_quantile(19.0, 0.99), 36.190_869, max_relative = 1e-6);
    }

    #[test]
    fn log_upper_gamma_matches_exact_tail() {
        // chi^2_2 tail is exactly exp(-x/2)
        for &x in &[1.0, 10.0, 100.0, 1.0e6] {
            assert_relative_eq!(chi2_log_tail(2.0, x), -0.5 * x, max_relative = 1e-10);
        }
        // matches the direct complement where 1 - P is comfortably
        // representable (at large x the complement itself cancels)
        for &x in &[2.0, 8.0, 15.0] {
            assert_relative_eq!(
                log_reg_gamma_upper(2.5, x),
                (1.0 - reg_gamma_lower(2.5, x)).ln(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn logsumexp_and_softmax_shift_invariance() {
        let lw = [-1.0, 0.5, -3.0];
        let base = softmax_from_log(&lw).unwrap();
        let shifted: Vec<f64> = lw.iter().map(|v| v + 123.456).collect();
        let shifted = softmax_from_log(&shifted).unwrap();
        assert_eq!(base, shifted); // bit-identical by construction
        assert_relative_eq!(base.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
        assert!(softmax_from_log(&[f64::NEG_INFINITY; 3]).is_none());
        assert_relative_eq!(
            logsumexp(&lw),
            (lw[0].exp() + lw[1].exp() + lw[2].exp()).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ln_neg_log1m_limits() {
        // large-ish p: direct evaluation
        let lp: f64 = (0.3f64).ln();
        assert_relative_eq!(
            ln_neg_log1m_from_log(lp),
            (-(0.7f64).ln()).ln(),
            max_relative = 1e-12
        );
        // tiny p: -ln(1-p) ~ p
        assert_relative_eq!(ln_neg_log1m_from_log(-100.0), -100.0, max_relative = 1e-10);
    }
}
