//! Empirical convergence-order and rate estimation from residual histories.

/// Residuals at or below this are treated as rounding noise and excluded
/// from estimation windows.
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub order: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("need at least 3 residuals, got {0}")]
    InsufficientData(usize),
    #[error("residuals do not decrease overall")]
    NotDecreasing,
    #[error("residuals must lie in (0, 1) (violated at position {0})")]
    OutOfRange(usize),
}

/// Estimates the convergence order `r` and rate `σ` of a residual sequence.
///
/// The order is the least-squares slope of `ln e[k+1]` against `ln e[k]`,
/// which is exact both for geometric sequences (order 1) and for `σ^(r^k)`
/// (order r), and averages out bounded oscillation in the residuals. For orders of at least
/// 1.5 the rate is `exp(mean ln(e[k]) / r̂^k)` with `r̂` the rounded order and
/// `k` counted from 1; otherwise it is the geometric mean ratio over the
/// tail half of the sequence.
pub fn estimate_order(residuals: &[f64]) -> Result<OrderEstimate, EstimateError> {
    if residuals.len() < 3 {
        return Err(EstimateError::InsufficientData(residuals.len()));
    }
    if let Some(pos) = residuals.iter().position(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(EstimateError::OutOfRange(pos));
    }
    if residuals[residuals.len() - 1] >= residuals[0] {
        return Err(EstimateError::NotDecreasing);
    }

    let logs: Vec<f64> = residuals.iter().map(|e| e.ln()).collect();
    let order = slope(&logs[..logs.len() - 1], &logs[1..]);

    let rate = if order >= 1.5 {
        let rounded = order.round();
        let terms: Vec<f64> = logs
            .iter()
            .enumerate()
            .map(|(k, l)| l / rounded.powi(k as i32 + 1))
            .collect();
        (terms.iter().sum::<f64>() / terms.len() as f64).exp()
    } else {
        let last = residuals.len() - 1;
        let mid = residuals.len() / 2;
        ((logs[last] - logs[mid]) / (last - mid) as f64).exp()
    };
    Ok(OrderEstimate { order, rate })
}

/// Longest contiguous stretch of residuals inside `(NOISE_FLOOR, 1)`; on
/// a tie the later stretch wins, since it is closer to the asymptotic
/// regime. Monotonicity is not required: oscillating linear convergence is
/// common for non-normal problems.
pub fn estimation_window(residuals: &[f64]) -> &[f64] {
    let usable = |e: f64| e < 1.0 && e > NOISE_FLOOR;
    let mut best = 0..0;
    let mut i = 0;
    while i < residuals.len() {
        if !usable(residuals[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < residuals.len() && usable(residuals[i]) {
            i += 1;
        }
        if i - start >= best.len() {
            best = start..i;
        }
    }
    &residuals[best]
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn squaring_sequence() {
        let est = estimate_order(&[1e-1, 1e-2, 1e-4, 1e-8]).unwrap();
        assert!((est.order - 2.0).abs() < 0.05);
    }

    #[test]
    fn geometric_sequence() {
        let est = estimate_order(&[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!((est.order - 1.0).abs() < 1e-12);
        assert!((est.rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oscillating_linear_sequence() {
        // Period-3 modulation of a 0.8 contraction.
        let res: Vec<f64> = (1..=90).map(|k| 0.5 * 0.8f64.powi(k) * [1.0, 0.7, 0.85][k as usize % 3]).collect();
        let est = estimate_order(estimation_window(&res)).unwrap();
        assert!((est.order - 1.0).abs() < 0.05, "{est:?}");
        assert!((est.rate - 0.8).abs() < 0.02, "{est:?}");
    }

    #[test]
    fn cubing_sequence() {
        let est = estimate_order(&[1e-1, 1e-3, 1e-9, 1e-27]).unwrap();
        assert!((est.order - 3.0).abs() < 0.05);
    }

    #[test]
    fn errors() {
        assert_eq!(estimate_order(&[0.5, 0.1]), Err(EstimateError::InsufficientData(2)));
        assert_eq!(estimate_order(&[0.5, 0.6, 0.7]), Err(EstimateError::NotDecreasing));
        assert_eq!(estimate_order(&[2.0, 0.5, 0.1]), Err(EstimateError::OutOfRange(0)));
        assert_eq!(estimate_order(&[0.5, 0.1, 0.0]), Err(EstimateError::OutOfRange(2)));
    }

    #[test]
    fn window_skips_leading_large_and_trailing_noise() {
        let w = estimation_window(&[3.0, 0.5, 0.1, 1e-3, 1e-15, 2e-16]);
        assert_eq!(w, &[0.5, 0.1, 1e-3]);
        assert!(estimation_window(&[0.0]).is_empty());
        let w = estimation_window(&[0.5, 0.1, 0.2, 0.01]);
        assert_eq!(w, &[0.5, 0.1, 0.2, 0.01]);
        let w = estimation_window(&[0.5, 0.1, 1.5, 0.4, 0.3, 0.2]);
        assert_eq!(w, &[0.4, 0.3, 0.2]);
    }

    proptest! {
        #[test]
        fn exact_superlinear_sequences(sigma in 0.2f64..0.9, r in 2u32..5) {
            let residuals: Vec<f64> = (1..=4)
                .map(|k| sigma.powf((r as f64).powi(k)))
                .take_while(|&e| e > 1e-300)
                .collect();
            prop_assume!(residuals.len() >= 3);
            let est = estimate_order(&residuals).unwrap();
            prop_assert!((est.order - r as f64).abs() <= 0.1);
            prop_assert!((est.rate - sigma).abs() <= 1e-9);
        }
    }
}
