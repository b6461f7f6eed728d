//! Chinese-restaurant-process prior over the assignment of one frame.

/// Log prior masses of the `K + 1` assignment options for frame `i`.
///
/// `counts_without_i` holds `n_k^{-i}` for the existing patterns, `n` is the
/// total number of frames including `i`. The last entry is the new-pattern
/// option. Patterns with a zero count get `-∞`.
pub fn crp_log_prior(counts_without_i: &[usize], alpha: f64, n: usize) -> Vec<f64> {
    let denom = (n as f64 - 1.0 + alpha).ln();
    counts_without_i
        .iter()
        .map(|&c| {
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64).ln() - denom
            }
        })
        .chain(std::iter::once(alpha.ln() - denom))
        .collect()
}

/// Same masses for a frame that is not part of the fitted data (predictive
/// for observation `N + 1`).
pub fn crp_log_predictive(counts: &[usize], alpha: f64, n: usize) -> Vec<f64> {
    crp_log_prior(counts, alpha, n + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eleven_ths() {
        let p: Vec<f64> = crp_log_prior(&[4, 5], 2.0, 10).iter().map(|l| l.exp()).collect();
        assert_relative_eq!(p[0], 4.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 5.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(p[2], 2.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn two_frames_unit_alpha() {
        let p: Vec<f64> = crp_log_prior(&[1], 1.0, 2).iter().map(|l| l.exp()).collect();
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn emptied_pattern_is_excluded() {
        let p = crp_log_prior(&[0, 3], 0.5, 4);
        assert_eq!(p[0], f64::NEG_INFINITY);
        let total: f64 = p.iter().map(|l| l.exp()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
    }
}
