//! Small shared numeric kernels.

/// log(sum(exp(x_i))) with the usual max shift. Entries equal to -inf are
/// skipped, so callers can encode zero terms as f64::NEG_INFINITY.
pub(crate) fn logsumexp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for t in terms.clone() {
        if t > max {
            max = t;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for t in terms {
        if t > f64::NEG_INFINITY {
            sum += (t - max).exp();
        }
    }
    max + sum.ln()
}

/// Compensated (Kahan) sum; keeps totals of long atom lists accurate to a
/// few ulps so measure bookkeeping stays well inside the 1e-12 invariants.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_direct_sum() {
        let xs = [0.3f64, -1.2, 2.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum();
        let lse = logsumexp(xs.iter().copied());
        assert!((lse - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn logsumexp_handles_large_arguments() {
        let xs = [5000.0f64, 5001.0];
        let lse = logsumexp(xs.iter().copied());
        let expected = 5001.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((lse - expected).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_of_nothing_is_neg_inf() {
        assert_eq!(logsumexp(std::iter::empty()), f64::NEG_INFINITY);
        assert_eq!(
            logsumexp([f64::NEG_INFINITY].iter().copied()),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn kahan_beats_naive_on_small_terms() {
        let n = 100_000;
        let vals = std::iter::repeat(0.1f64).take(n);
        let s = kahan_sum(vals);
        assert!((s - 0.1 * n as f64).abs() < 1e-9);
    }
}
