//! Scalar helpers shared by the likelihood, mean-field and estimator code.

/// Logistic sigmoid, evaluated without overflow for large `|z|`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^g)`, the softplus. For `g > 0` this is evaluated as
/// `g + ln(1 + e^{-g})` so that it stays exact at `|g| = 50` and beyond.
#[inline]
pub fn log1p_exp(g: f64) -> f64 {
    if g > 0.0 {
        g + (-g).exp().ln_1p()
    } else {
        g.exp().ln_1p()
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and a sum of `exp(term - max)` so that large
/// enumerations never materialise the full term vector.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.scaled_sum += (term - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    /// `ln Σ exp(term)`; `-inf` when nothing was pushed.
    pub fn value(&self) -> f64 {
        if self.scaled_sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

impl FromIterator<f64> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSumExp::new();
        for t in iter {
            acc.push(t);
        }
        acc
    }
}

/// Sample mean and standard error (sample standard deviation over `sqrt(len)`).
/// The standard error of a single value is reported as 0.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let len = values.len();
    if len == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / len as f64;
    if len == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
    (mean, (var / len as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_reference_values() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!((sigmoid(2.0) - 0.880_797_077_977_882_4).abs() < 1e-15);
        assert!((sigmoid(-2.0) - (1.0 - 0.880_797_077_977_882_4)).abs() < 1e-15);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn softplus_is_stable_at_the_extremes() {
        assert!((log1p_exp(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log1p_exp(50.0) - 50.0).abs() < 1e-15);
        assert!(log1p_exp(-50.0) > 0.0);
        assert!((log1p_exp(-50.0) - (-50f64).exp()).abs() < 1e-30);
        assert_eq!(log1p_exp(1000.0), 1000.0);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let terms = [-1.0, 0.5, 2.0, -3.0];
        let direct = terms.iter().map(|t: &f64| t.exp()).sum::<f64>().ln();
        let acc: LogSumExp = terms.iter().copied().collect();
        assert!((acc.value() - direct).abs() < 1e-14);

        let big: LogSumExp = [1000.0, 1000.0].into_iter().collect();
        assert!((big.value() - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn stderr_uses_sample_deviation() {
        let (m, s) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        // sd = sqrt(2), stderr = sqrt(2)/sqrt(2)
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[4.0]), (4.0, 0.0));
    }
}
