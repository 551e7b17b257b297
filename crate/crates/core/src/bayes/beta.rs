use crate::error::{check_probability, Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// A Beta(alpha, beta) posterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Beta parameters must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Prior `Beta(a, b)` updated with `successes` and `failures` (which may be fractional).
    pub fn from_counts(a: f64, b: f64, successes: f64, failures: f64) -> Result<Self> {
        Self::new(a + successes, b + failures)
    }

    /// `Pr(X > t)`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        beta_tail(self, t)
    }

    /// `Pr(X <= t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_probability("threshold", t)?;
        regularized_incomplete_beta(self.alpha, self.beta, t)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// `Pr(X > threshold)` for `X ~ Beta(alpha, beta)`.
pub fn beta_tail(post: &BetaPosterior, threshold: f64) -> Result<f64> {
    check_probability("threshold", threshold)?;
    // I_{1-t}(b, a) avoids the cancellation in 1 - I_t(a, b)
    regularized_incomplete_beta(post.beta, post.alpha, 1.0 - threshold)
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// Continued fraction (modified Lentz) on whichever of `I_x(a, b)` and
/// `1 - I_{1-x}(b, a)` converges faster.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "incomplete beta needs a, b > 0, got ({a}, {b})"
        )));
    }
    check_probability("x", x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * continued_fraction(b, a, 1.0 - x)? / b)
    }
}

fn continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::InvalidParameter(format!(
        "incomplete beta continued fraction did not converge for a = {a}, b = {b}, x = {x}"
    )))
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, &c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}
