//! Implied probability weighting `w(u) = F_S(F_R^{-1}(u))` between the spot
//! (physical) and option (risk-neutral) return laws, the Tversky–Kahneman
//! reference curve, and curvature diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::DistributionGrid;

pub const DEFAULT_GRID_POINTS: usize = 1001;
/// Moving-average window for second differences, as a share of the grid.
pub const SMOOTHING_SHARE: f64 = 0.02;
/// Inflections closer than this to 0 or 1 are boundary artifacts.
pub const EDGE_SHARE: f64 = 0.01;
/// Width of the endpoint secants.
pub const SECANT_WIDTH: f64 = 0.02;

/// Tversky–Kahneman weighting `u^g / (u^g + (1-u)^g)^(1/g)`.
pub fn tk_pwf(u: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!("u must lie in [0, 1], got {u}")));
    }
    if u == 0.0 || u == 1.0 {
        return Ok(u);
    }
    let a = u.powf(gamma);
    let b = (1.0 - u).powf(gamma);
    Ok(a / (a + b).powf(1.0 / gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwfCurve {
    pub u: Vec<f64>,
    /// Monotone-repaired weights (running maximum of `w_raw`).
    pub w: Vec<f64>,
    pub w_raw: Vec<f64>,
    pub horizon_days: Option<f64>,
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `w(u) = F_S(F_R^{-1}(u))`, endpoints pinned to 0 and 1.
pub fn implied_pwf(f_r: &DistributionGrid, f_s: &DistributionGrid, u_grid: &[f64]) -> Result<PwfCurve> {
    if let (Some(a), Some(b)) = (f_r.horizon, f_s.horizon) {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::HorizonMismatch(a, b));
        }
    }
    if u_grid.len() < 2 || u_grid.windows(2).any(|w| w[1] <= w[0]) || u_grid[0] < 0.0 || u_grid[u_grid.len() - 1] > 1.0 {
        return Err(Error::InvalidParameter("u grid must be strictly increasing within [0, 1]".into()));
    }
    let w_raw: Vec<f64> = u_grid
        .iter()
        .map(|&u| {
            if u <= 0.0 {
                0.0
            } else if u >= 1.0 {
                1.0
            } else {
                f_s.cdf_at(f_r.inv_cdf(u))
            }
        })
        .collect();
    let mut run = 0.0f64;
    let w = w_raw
        .iter()
        .map(|&v| {
            run = run.max(v.clamp(0.0, 1.0));
            run
        })
        .collect();
    Ok(PwfCurve { u: u_grid.to_vec(), w, w_raw, horizon_days: f_r.horizon.or(f_s.horizon) })
}

impl PwfCurve {
    /// Tversky–Kahneman curve on `u_grid`.
    pub fn tk(u_grid: &[f64], gamma: f64) -> Result<Self> {
        let w = u_grid.iter().map(|&u| tk_pwf(u, gamma)).collect::<Result<Vec<_>>>()?;
        Ok(Self { u: u_grid.to_vec(), w_raw: w.clone(), w, horizon_days: None })
    }

    fn at(&self, u: f64) -> f64 {
        let j = self.u.partition_point(|&x| x <= u).clamp(1, self.u.len() - 1);
        let (u0, u1) = (self.u[j - 1], self.u[j]);
        let t = if u1 > u0 { (u - u0) / (u1 - u0) } else { 0.0 };
        self.w[j - 1] + t * (self.w[j] - self.w[j - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Concave,
    Convex,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub inflection_points: Vec<f64>,
    pub concave_segments: Vec<(f64, f64)>,
    pub convex_segments: Vec<(f64, f64)>,
    pub linear_segments: Vec<(f64, f64)>,
    /// Curvature of each segment from left to right.
    pub sequence: Vec<Curvature>,
    pub left_slope: f64,
    pub right_slope: f64,
    /// Secant slope between the two endpoint windows.
    pub interior_slope: f64,
}

impl ShapeReport {
    /// Exactly one interior inflection with a concave part first.
    pub fn is_inverse_s(&self) -> bool {
        self.inflection_points.len() == 1 && self.sequence == [Curvature::Concave, Curvature::Convex]
    }
}

/// Classifies curvature from smoothed second differences of the repaired curve.
pub fn shape_report(c: &PwfCurve) -> Result<ShapeReport> {
    let n = c.u.len();
    if n < 5 || c.w.len() != n {
        return Err(Error::InvalidParameter("curve needs >= 5 matching points".into()));
    }
    let d2: Vec<f64> = (1..n - 1).map(|i| c.w[i + 1] - 2.0 * c.w[i] + c.w[i - 1]).collect();
    let half = ((SMOOTHING_SHARE * n as f64).round() as usize / 2).max(1);
    let m = d2.len();
    let smooth: Vec<f64> = (0..m)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(m - 1);
            d2[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let peak = smooth.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let dead = 1e-3 * peak + 1e-12;
    let sign = |v: f64| if v > dead { 1 } else if v < -dead { -1 } else { 0 };
    // u of each smoothed second difference
    let uu = |i: usize| c.u[i + 1];

    let mut inflections = Vec::new();
    let mut last: Option<(usize, i32)> = None;
    for (i, &v) in smooth.iter().enumerate() {
        let s = sign(v);
        if s == 0 {
            continue;
        }
        if let Some((j, t)) = last {
            if t != s {
                // locate the actual zero crossing inside the dead band
                let k = (j..i).find(|&k| smooth[k] * smooth[k + 1] <= 0.0).unwrap_or(j);
                let (a, b) = (smooth[k], smooth[k + 1]);
                let x = if a == b { uu(k) } else { uu(k) + (uu(k + 1) - uu(k)) * a / (a - b) };
                if x > EDGE_SHARE && x < 1.0 - EDGE_SHARE {
                    inflections.push(x);
                }
            }
        }
        last = Some((i, s));
    }

    let mut bounds = vec![0.0];
    bounds.extend(&inflections);
    bounds.push(1.0);
    let mut report = ShapeReport {
        inflection_points: inflections,
        concave_segments: Vec::new(),
        convex_segments: Vec::new(),
        linear_segments: Vec::new(),
        sequence: Vec::new(),
        left_slope: 0.0,
        right_slope: 0.0,
        interior_slope: 0.0,
    };
    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let inside: Vec<f64> = (0..m).filter(|&i| uu(i) > a && uu(i) < b).map(|i| smooth[i]).collect();
        let mean = if inside.is_empty() { 0.0 } else { inside.iter().sum::<f64>() / inside.len() as f64 };
        let kind = match sign(mean) {
            1 => Curvature::Convex,
            -1 => Curvature::Concave,
            _ => Curvature::Linear,
        };
        match kind {
            Curvature::Concave => report.concave_segments.push((a, b)),
            Curvature::Convex => report.convex_segments.push((a, b)),
            Curvature::Linear => report.linear_segments.push((a, b)),
        }
        report.sequence.push(kind);
    }
    let (u0, u1) = (c.u[0], c.u[n - 1]);
    let wl = c.at(u0 + SECANT_WIDTH);
    let wr = c.at(u1 - SECANT_WIDTH);
    report.left_slope = ((wl - c.w[0]) / SECANT_WIDTH).max(0.0);
    report.right_slope = ((c.w[n - 1] - wr) / SECANT_WIDTH).max(0.0);
    report.interior_slope = ((wr - wl) / (u1 - u0 - 2.0 * SECANT_WIDTH)).max(0.0);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(mean: f64, sd: f64, horizon: Option<f64>) -> DistributionGrid {
        let x: Vec<f64> = (0..=4000).map(|i| mean + sd * (-10.0 + 20.0 * i as f64 / 4000.0)).collect();
        let c = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
        let pdf = x.iter().map(|v| c * (-0.5 * ((v - mean) / sd).powi(2)).exp()).collect();
        DistributionGrid::from_pdf(x, pdf, horizon).unwrap()
    }

    #[test]
    fn tk_values() {
        assert!((tk_pwf(0.5, 0.61).unwrap() - 0.4206).abs() < 1e-3);
        // independent evaluation: 0.5^g / (2 * 0.5^g)^(1/g) = 0.5 * 2^(1 - 1/g)... in log form
        let g: f64 = 0.61;
        let direct = (g * 0.5f64.ln() - (1.0 / g) * (2.0f64.ln() + g * 0.5f64.ln())).exp();
        assert!((tk_pwf(0.5, g).unwrap() - direct).abs() < 1e-14);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!((tk_pwf(u, 1.0).unwrap() - u).abs() < 1e-15);
        }
        assert_eq!(tk_pwf(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(tk_pwf(1.0, 0.3).unwrap(), 1.0);
        assert!(tk_pwf(0.5, 0.0).is_err());
        assert!(tk_pwf(0.5, 1.2).is_err());
    }

    #[test]
    fn identity_when_laws_agree() {
        let g = gaussian(0.001, 0.01, Some(1.0));
        let u = uniform_grid(DEFAULT_GRID_POINTS);
        let c = implied_pwf(&g, &g, &u).unwrap();
        let cell = g.spacing() * g.pdf.iter().cloned().fold(0.0, f64::max);
        for (a, b) in c.u.iter().zip(&c.w) {
            assert!((a - b).abs() <= 2.0 * cell, "{a} -> {b}");
        }
        assert_eq!(c.w[0], 0.0);
        assert_eq!(*c.w.last().unwrap(), 1.0);
    }

    #[test]
    fn horizon_mismatch_is_an_error() {
        let a = gaussian(0.0, 0.01, Some(1.0));
        let b = gaussian(0.0, 0.01, Some(5.0));
        assert!(matches!(implied_pwf(&a, &b, &uniform_grid(11)), Err(Error::HorizonMismatch(..))));
    }

    #[test]
    fn invariant_under_common_affine_map() {
        let r = gaussian(0.0, 0.01, None);
        let s = gaussian(-0.002, 0.015, None);
        let u = uniform_grid(201);
        let a = implied_pwf(&r, &s, &u).unwrap();
        let b = implied_pwf(&r.affine(3.0, 0.5), &s.affine(3.0, 0.5), &u).unwrap();
        for (x, y) in a.w.iter().zip(&b.w) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_shape() {
        let c = PwfCurve::tk(&uniform_grid(DEFAULT_GRID_POINTS), 1.0).unwrap();
        let r = shape_report(&c).unwrap();
        assert!(r.inflection_points.is_empty());
        assert!((r.left_slope - 1.0).abs() < 1e-6 && (r.right_slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tk_is_inverse_s() {
        let c = PwfCurve::tk(&uniform_grid(DEFAULT_GRID_POINTS), 0.61).unwrap();
        let r = shape_report(&c).unwrap();
        assert!(r.is_inverse_s(), "{r:?}");
        assert!(r.left_slope > r.interior_slope && r.right_slope > r.interior_slope, "{r:?}");
        // analytic sign of w'' changes once; locate it by bisection on a fine difference
        let w2 = |u: f64| {
            let h = 1e-4;
            tk_pwf(u + h, 0.61).unwrap() - 2.0 * tk_pwf(u, 0.61).unwrap() + tk_pwf(u - h, 0.61).unwrap()
        };
        let (mut a, mut b) = (0.05, 0.95);
        assert!(w2(a) < 0.0 && w2(b) > 0.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if w2(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        assert!((r.inflection_points[0] - a).abs() < 0.02, "{} vs {a}", r.inflection_points[0]);
    }

    #[test]
    fn tk_overweights_small_probabilities() {
        for g in [0.3, 0.61, 0.9] {
            let u = uniform_grid(999);
            let w: Vec<f64> = u.iter().map(|&x| tk_pwf(x, g).unwrap()).collect();
            assert!(w.windows(2).all(|p| p[1] > p[0]));
            assert!(tk_pwf(0.01, g).unwrap() > 0.01);
            assert!(tk_pwf(0.99, g).unwrap() < 0.99);
        }
    }
}
