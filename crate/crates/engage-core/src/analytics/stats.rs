//! Two-sample comparison statistics over group summaries: Welch and pooled
//! (Student) t-tests, Cohen's d, and exact t-distribution tail
//! probabilities via the regularized incomplete beta function.

use crate::model::{GroupSummary, TestResult, TestVariant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("each group needs n >= 2, got {a} and {b}")]
    GroupTooSmall { a: usize, b: usize },
    #[error("zero pooled standard deviation with unequal means")]
    ZeroPooledSd,
    #[error("zero standard error: both groups have zero variance")]
    ZeroStandardError,
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(f64),
}

/// Which tail probability to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Tail {
    /// Upper tail, `P(T >= t)`.
    One,
    /// Both tails, `P(|T| >= |t|)`.
    Two,
}

/// Pooled-standard-deviation Cohen's d between two summarized groups.
///
/// Zero pooled sd is an error when the means differ and exactly 0 when they
/// are equal.
pub fn cohens_d(a: &GroupSummary, b: &GroupSummary) -> Result<f64, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::GroupTooSmall { a: a.n, b: b.n });
    }
    let pooled_var = ((a.n as f64 - 1.0) * a.sd * a.sd + (b.n as f64 - 1.0) * b.sd * b.sd)
        / (a.n as f64 + b.n as f64 - 2.0);
    let pooled_sd = pooled_var.sqrt();
    if pooled_sd == 0.0 {
        if a.mean == b.mean {
            return Ok(0.0);
        }
        return Err(StatsError::ZeroPooledSd);
    }
    Ok((a.mean - b.mean) / pooled_sd)
}

/// Two-sample t-test from group summaries.
///
/// Welch uses the Welch-Satterthwaite degrees of freedom; Student pools the
/// variances with `df = n_a + n_b - 2`. The one-sided p is for the
/// alternative that group `a`'s mean exceeds group `b`'s; the effect size is
/// always the pooled-sd Cohen's d.
pub fn t_test(
    a: &GroupSummary,
    b: &GroupSummary,
    variant: TestVariant,
) -> Result<TestResult, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::GroupTooSmall { a: a.n, b: b.n });
    }
    let (na, nb) = (a.n as f64, b.n as f64);
    let (va, vb) = (a.sd * a.sd, b.sd * b.sd);

    let (t, df) = match variant {
        TestVariant::Welch => {
            let sa = va / na;
            let sb = vb / nb;
            let se = (sa + sb).sqrt();
            if se == 0.0 {
                if a.mean == b.mean {
                    // Identical constant groups: no evidence either way.
                    (0.0, na + nb - 2.0)
                } else {
                    return Err(StatsError::ZeroStandardError);
                }
            } else {
                let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
                ((a.mean - b.mean) / se, df)
            }
        }
        TestVariant::Student => {
            let df = na + nb - 2.0;
            let pooled_var = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            let se = (pooled_var * (1.0 / na + 1.0 / nb)).sqrt();
            if se == 0.0 {
                if a.mean == b.mean {
                    (0.0, df)
                } else {
                    return Err(StatsError::ZeroStandardError);
                }
            } else {
                ((a.mean - b.mean) / se, df)
            }
        }
    };

    let p_two_sided = t_tail_probability(t, df, Tail::Two)?;
    let p_one_sided = t_tail_probability(t, df, Tail::One)?;
    Ok(TestResult {
        t,
        df,
        p_two_sided,
        p_one_sided,
        cohens_d: cohens_d(a, b)?,
        variant,
    })
}

/// Exact tail probability of the t-distribution with `df` degrees of
/// freedom: `P(T >= t)` one-sided, `P(|T| >= |t|)` two-sided.
pub fn t_tail_probability(t: f64, df: f64, tail: Tail) -> Result<f64, StatsError> {
    if !df.is_finite() || df <= 0.0 {
        return Err(StatsError::InvalidDf(df));
    }
    // P(|T| >= |t|) = I_x(df/2, 1/2) with x = df / (df + t^2).
    let x = df / (df + t * t);
    let two_sided = regularized_incomplete_beta(0.5 * df, 0.5, x);
    Ok(match tail {
        Tail::Two => two_sided,
        Tail::One => {
            if t >= 0.0 {
                0.5 * two_sided
            } else {
                1.0 - 0.5 * two_sided
            }
        }
    })
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1], evaluated with the Lentz continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // The continued fraction converges fastest for x < (a+1)/(a+b+2); use
    // the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(z: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
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
    if z < 0.5 {
        // Reflection formula.
        std::f64::consts::PI.ln() - (std::f64::consts::PI * z).sin().ln() - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut sum = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            sum += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
    }
}
