//! Least-squares slopes on log-log data.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slope {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope; infinite with two points.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope log x`. Points with nonpositive or
/// non-finite coordinates are skipped; `None` with fewer than two left.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<Slope> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half = if n > 2 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * se
    } else {
        f64::INFINITY
    };
    Some(Slope {
        slope,
        intercept,
        ci_low: slope - half,
        ci_high: slope + half,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let s = loglog_slope(&xs, &ys).unwrap();
        assert!((s.slope - 1.5).abs() < 1e-12);
        assert!((s.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(s.ci_high - s.ci_low < 1e-6);
    }

    #[test]
    fn interval_uses_student_quantile() {
        let s = loglog_slope(&[1.0, 2.0, 4.0, 8.0], &[1.0, 2.2, 3.9, 8.5]).unwrap();
        assert!(s.ci_low < s.slope && s.slope < s.ci_high);
        // t_{0.975, 2} = 4.3027
        let t = StudentsT::new(0.0, 1.0, 2.0).unwrap().inverse_cdf(0.975);
        assert!((t - 4.302652729911275).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
        assert!(loglog_slope(&[1.0, 1.0], &[1.0, 2.0]).is_none());
        assert!(loglog_slope(&[1.0, 2.0, 3.0], &[0.0, -1.0, 2.0]).is_none());
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, 2.0])
            .unwrap()
            .ci_high
            .is_infinite());
    }
}
