use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::DistributionGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n: usize,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    /// `(empirical, model)` CDF pairs at the order statistics.
    pub pp_points: Vec<(f64, f64)>,
    /// Model CDF at each observation, in input order.
    pub pit_values: Vec<f64>,
    pub pit_ks_pvalue: f64,
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let pi = std::f64::consts::PI;
    let q = if lambda < 1.18 {
        // Jacobi-transformed series, fast for small lambda
        let y = -pi * pi / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * y).map(f64::exp).sum();
        1.0 - (2.0 * pi).sqrt() / lambda * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if (k as i64) % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        2.0 * s
    };
    q.clamp(0.0, 1.0)
}

/// KS distance `max_i |F_n(x_(i)) - F(x_(i))|` over the sample points, where
/// `F_n` counts observations `<= x` (ties included), and its asymptotic p-value.
pub fn ks_test<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<(f64, f64, Vec<(f64, f64)>)> {
    if data.is_empty() {
        return Err(Error::InsufficientData("goodness-of-fit needs data".into()));
    }
    let mut xs = data.to_vec();
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in data".into()));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut pp = Vec::with_capacity(n);
    let mut stat = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[j + 1] == xs[i] {
            j += 1;
        }
        let fe = (j + 1) as f64 / nf;
        let fm = cdf(xs[i]).clamp(0.0, 1.0);
        stat = stat.max((fe - fm).abs());
        for _ in i..=j {
            pp.push((fe, fm));
        }
        i = j + 1;
    }
    Ok((stat, kolmogorov_q(nf.sqrt() * stat), pp))
}

pub fn gof_report(data: &[f64], model_cdf: &DistributionGrid) -> Result<GofReport> {
    gof_report_with(data, |x| model_cdf.cdf_at(x))
}

/// Same report for a CDF given in closed form.
pub fn gof_report_with<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<GofReport> {
    let (ks_stat, ks_pvalue, pp_points) = ks_test(data, &cdf)?;
    let pit_values: Vec<f64> = data.iter().map(|&x| cdf(x).clamp(0.0, 1.0)).collect();
    let (_, pit_ks_pvalue, _) = ks_test(&pit_values, |u| u.clamp(0.0, 1.0))?;
    Ok(GofReport { n: data.len(), ks_stat, ks_pvalue, pp_points, pit_values, pit_ks_pvalue })
}
