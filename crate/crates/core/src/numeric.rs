//! Small log-domain helpers used by the transfer recursions.

/// log(exp(a) + exp(b)) without leaving the log domain.
///
/// Stable for arbitrarily small inputs; `-inf` acts as the additive identity
/// and `logsumexp2(-inf, -inf) == -inf`.
#[inline]
pub fn logsumexp2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// log of the sum of exponentials of a slice, shift-by-max.
pub fn logsumexp_slice(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_matches_direct_sum() {
        let v = logsumexp2(0.3_f64.ln(), 0.7_f64.ln());
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn neg_infinity_is_identity() {
        assert_eq!(logsumexp2(f64::NEG_INFINITY, -2.5), -2.5);
        assert_eq!(logsumexp2(-2.5, f64::NEG_INFINITY), -2.5);
        assert_eq!(
            logsumexp2(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn slice_handles_large_shifts() {
        let v = logsumexp_slice(&[-1000.0, -1000.0 + 2.0_f64.ln()]);
        assert!((v - (-1000.0 + 3.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn slice_of_neg_infinities_is_neg_infinity() {
        assert_eq!(
            logsumexp_slice(&[f64::NEG_INFINITY; 4]),
            f64::NEG_INFINITY
        );
    }
}
