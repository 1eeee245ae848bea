//! Small statistical helpers: moments, least squares, Student-t intervals
//! and two-sample tests.

use statrs::distribution::{Continuous, ContinuousCDF, FisherSnedecor, StudentsT};

/// Sample mean and unbiased standard deviation (`sd = 0` for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Two-sided Student-t quantile `t_{1-α/2, dof}`.
pub fn student_t_quantile(confidence: f64, dof: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    let p = 0.5 + 0.5 * confidence;
    // statrs' bracketing inverse is loose for large dof; polish with Newton.
    let mut x = dist.inverse_cdf(p);
    for _ in 0..3 {
        x -= (dist.cdf(x) - p) / dist.pdf(x);
    }
    x
}

/// Half-width of the Student-t confidence interval for the mean.
pub fn t_interval_half_width(sd: f64, n: usize, confidence: f64) -> Option<f64> {
    if n < 2 {
        return None;
    }
    Some(student_t_quantile(confidence, (n - 1) as f64) * sd / (n as f64).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d: f64, (i, &v)| {
        let f = cdf(v);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Asymptotic KS critical value `c(α)·sqrt((n+m)/(nm))`.
pub fn ks_critical(alpha: f64, n: usize, m: Option<usize>) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    match m {
        Some(m) => c * ((n + m) as f64 / (n * m) as f64).sqrt(),
        None => c / (n as f64).sqrt(),
    }
}

/// Two-sided p-value of the variance-ratio F test.
pub fn f_test_p_value(var_a: f64, n_a: usize, var_b: f64, n_b: usize) -> f64 {
    let f = var_a / var_b;
    let dist = FisherSnedecor::new((n_a - 1) as f64, (n_b - 1) as f64).expect("valid dof");
    let lower = dist.cdf(f);
    (2.0 * lower.min(1.0 - lower)).min(1.0)
}
