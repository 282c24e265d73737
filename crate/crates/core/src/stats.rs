//! Least-squares slopes for growth and decay curves.

/// Slope of the least-squares line through `(x, y)`; `None` with fewer than two
/// distinct `x` or any non-finite value.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `log2 y` against `x`.
pub fn log2_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    ls_slope(x, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert!((ls_slope(&x, &y).unwrap() + 0.5).abs() < 1e-15);
        let p: Vec<f64> = x.iter().map(|v| 2f64.powf(-0.25 * v)).collect();
        assert!((log2_slope(&x, &p).unwrap() + 0.25).abs() < 1e-14);
        assert_eq!(ls_slope(&[1.0], &[2.0]), None);
        assert_eq!(ls_slope(&[1.0, 1.0], &[2.0, 3.0]), None);
        assert_eq!(log2_slope(&[1.0, 2.0], &[0.0, 1.0]), None);
    }
}
