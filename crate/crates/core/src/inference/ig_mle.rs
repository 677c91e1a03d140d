use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::IgParams;

use super::series::VixSeries;

/// Default divisor turning index points into the scale of the IG fit.
pub const DEFAULT_VIX_SCALE: f64 = 0.01;

/// Closed-form IG maximum likelihood: `h` is the sample mean and
/// `l = n / sum(1/x_i - 1/h)`.
pub fn fit_ig_mle_values(x: &[f64]) -> Result<IgParams> {
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("IG fit needs >= 2 values, got {}", x.len())));
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("IG data must be > 0, got {v}")));
    }
    let n = x.len() as f64;
    let h = x.iter().sum::<f64>() / n;
    let s: f64 = x.iter().map(|v| 1.0 / v - 1.0 / h).sum();
    // Jensen gives s >= 0 with equality only for a constant sample
    if !(s > 1e-14 * n / h) {
        return Err(Error::Degenerate("all values equal; IG shape undefined".into()));
    }
    IgParams::new(h, n / s)
}

pub fn fit_ig_mle(v: &VixSeries, scale: f64) -> Result<IgParams> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    let x: Vec<f64> = v.levels.iter().map(|l| l * scale).collect();
    fit_ig_mle_values(&x)
}

/// IG log-likelihood of `x` under mean `h` and shape `l`.
pub fn ig_log_likelihood(x: &[f64], h: f64, l: f64) -> f64 {
    x.iter()
        .map(|&v| {
            0.5 * (l / (2.0 * std::f64::consts::PI * v.powi(3))).ln() - l * (v - h).powi(2) / (2.0 * h * h * v)
        })
        .sum()
}

/// IG CDF in closed form, using the standard normal CDF.
pub fn ig_cdf(x: f64, h: f64, l: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = (l / x).sqrt();
    let a = s * (x / h - 1.0);
    let b = -s * (x / h + 1.0);
    let tail = (2.0 * l / h + ln_norm_cdf(b)).exp();
    (norm_cdf(a) + tail).clamp(0.0, 1.0)
}

pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        // Mills ratio asymptotics
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_example() {
        let p = fit_ig_mle_values(&[0.5, 1.0, 1.5]).unwrap();
        assert!((p.h - 1.0).abs() < 1e-12);
        assert!((p.l - 4.5).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_is_degenerate() {
        assert!(matches!(fit_ig_mle_values(&[0.2, 0.2, 0.2]), Err(Error::Degenerate(_))));
        assert!(fit_ig_mle_values(&[0.2]).is_err());
    }

    #[test]
    fn maximizes_the_likelihood() {
        let x = [0.12, 0.31, 0.18, 0.22, 0.15, 0.41, 0.19, 0.16];
        let p = fit_ig_mle_values(&x).unwrap();
        let f = |z: &[f64]| -ig_log_likelihood(&x, z[0].exp(), z[1].exp());
        let m = crate::optim::nelder_mead(f, &[0.0, 0.0], &Default::default());
        assert!((m.x[0].exp() - p.h).abs() < 1e-4 * p.h);
        assert!((m.x[1].exp() - p.l).abs() < 1e-3 * p.l);
        // first-order conditions by central differences
        let ll = |h: f64, l: f64| ig_log_likelihood(&x, h, l);
        let (eh, el) = (1e-6 * p.h, 1e-6 * p.l);
        let dh = (ll(p.h + eh, p.l) - ll(p.h - eh, p.l)) / (2.0 * eh);
        let dl = (ll(p.h, p.l + el) - ll(p.h, p.l - el)) / (2.0 * el);
        assert!(dh.abs() * p.h < 1e-6 * ll(p.h, p.l).abs().max(1.0));
        assert!(dl.abs() * p.l < 1e-6 * ll(p.h, p.l).abs().max(1.0));
    }

    #[test]
    fn cdf_matches_quadrature() {
        let (h, l) = (0.19, 1.5);
        let pdf = |x: f64| (l / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt() * (-l * (x - h).powi(2) / (2.0 * h * h * x)).exp();
        let n = 200_000;
        let hi = 0.3;
        let dx = hi / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * dx;
            acc += pdf(x) * dx;
        }
        assert!((ig_cdf(hi, h, l) - acc).abs() < 1e-7);
    }
}
