//! Order-independent summary statistics.
//!
//! Values are sorted before summation so that the result does not depend on
//! input order (bit-for-bit), which keeps patch aggregation and grid binning
//! permutation-invariant.

pub fn sorted_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if lo == hi {
        return lo;
    }
    sorted_sum(values) / values.len() as f64
}

/// Sample variance (divisor `m - 1`). NaN for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let mu = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - mu).powi(2)).collect();
    sorted_sum(&sq) / (values.len() - 1) as f64
}

pub fn sample_std(values: &[f64]) -> f64 {
    sample_variance(values).sqrt()
}

/// Median of a non-empty slice; mean of the two middle values for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&v), 5.0);
        assert!((sample_variance(&v) - 32.0 / 7.0).abs() < 1e-12);
        assert_eq!(median(&v), 4.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!(sample_std(&[1.0]).is_nan());
    }

    #[test]
    fn sum_is_order_independent() {
        let a = [1e16, 1.0, -1e16, 3.5, 1e-3];
        let b = [3.5, -1e16, 1e-3, 1.0, 1e16];
        assert_eq!(sorted_sum(&a).to_bits(), sorted_sum(&b).to_bits());
    }
}
