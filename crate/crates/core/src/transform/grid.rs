use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FFT discretization: `n` points at frequency spacing `eta`, so the dual
/// (log-return or log-strike) spacing is `2 pi / (n eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub eta: f64,
    pub x_center: f64,
}

impl GridSpec {
    pub const MIN_N: usize = 1 << 8;
    pub const DEFAULT_N: usize = 1 << 14;
    pub const DEFAULT_PRICING_ETA: f64 = 0.25;

    pub fn new(n: usize, eta: f64, x_center: f64) -> Result<Self> {
        let g = Self { n, eta, x_center };
        g.validate()?;
        Ok(g)
    }

    pub fn pricing_default() -> Self {
        Self {
            n: Self::DEFAULT_N,
            eta: Self::DEFAULT_PRICING_ETA,
            x_center: 0.0,
        }
    }

    /// Grid of `n` abscissas covering `center ± half_width`.
    pub fn spanning(center: f64, half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!("half width must be > 0, got {half_width}")));
        }
        let lambda = 2.0 * half_width / n as f64;
        Self::new(n, 2.0 * std::f64::consts::PI / (n as f64 * lambda), center)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < Self::MIN_N {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= {}, got {}",
                Self::MIN_N,
                self.n
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if !self.x_center.is_finite() {
            return Err(Error::InvalidParameter("grid center must be finite".into()));
        }
        Ok(())
    }

    /// Dual-grid spacing `lambda = 2 pi / (n eta)`.
    pub fn lambda(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.eta)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.n as f64 * self.lambda()
    }
}

/// Tabulated density and distribution function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionGrid {
    pub x: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Horizon (trading days) the law was built for, when known.
    pub horizon: Option<f64>,
}

impl DistributionGrid {
    /// Builds the grid from density values: negative values are clipped, the CDF
    /// is the cumulative trapezoid repaired by running maximum, and both are
    /// rescaled so the CDF ends at 1.
    ///
    /// Fails with [`Error::GridCoverage`] when the raw trapezoid mass is below 0.999.
    pub fn from_pdf(x: Vec<f64>, pdf: Vec<f64>, horizon: Option<f64>) -> Result<Self> {
        if x.len() != pdf.len() || x.len() < 2 {
            return Err(Error::InvalidParameter("grid needs >= 2 matching abscissas and densities".into()));
        }
        let mut pdf: Vec<f64> = pdf.into_iter().map(|p| if p > 0.0 { p } else { 0.0 }).collect();
        let mut cdf = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..x.len() {
            acc += 0.5 * (pdf[i] + pdf[i - 1]) * (x[i] - x[i - 1]);
            cdf.push(acc);
        }
        let mass = acc;
        if !(mass >= 0.999) {
            return Err(Error::GridCoverage { mass });
        }
        let mut run = 0.0f64;
        for c in cdf.iter_mut() {
            run = run.max(*c);
            *c = run / mass;
        }
        for p in pdf.iter_mut() {
            *p /= mass;
        }
        Ok(Self { x, pdf, cdf, horizon })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// CDF by linear interpolation, clamped to 0 / 1 outside the grid.
    pub fn cdf_at(&self, x: f64) -> f64 {
        interp_clamped(&self.x, &self.cdf, x, 0.0, 1.0)
    }

    /// Density by linear interpolation, zero outside the grid.
    pub fn pdf_at(&self, x: f64) -> f64 {
        interp_clamped(&self.x, &self.pdf, x, 0.0, 0.0)
    }

    /// Generalized inverse `min { x : F(x) > u }`, linearly interpolated on the
    /// strictly increasing part of the CDF. `u` below the first CDF value returns
    /// the first abscissa; above the last returns the last.
    pub fn inv_cdf(&self, u: f64) -> f64 {
        inv_cdf(self, u)
    }

    /// Applies `x -> a x + b` (`a > 0`) to the abscissas, keeping probabilities.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            x: self.x.iter().map(|x| a * x + b).collect(),
            pdf: self.pdf.iter().map(|p| p / a).collect(),
            cdf: self.cdf.clone(),
            horizon: self.horizon,
        }
    }
}

fn interp_clamped(xs: &[f64], ys: &[f64], x: f64, below: f64, above: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] {
        return below;
    }
    if x > xs[n - 1] {
        return above;
    }
    let j = xs.partition_point(|&v| v <= x);
    if j == 0 {
        return ys[0];
    }
    if j >= n {
        return ys[n - 1];
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] + w * (ys[j] - ys[j - 1])
}

/// See [`DistributionGrid::inv_cdf`].
pub fn inv_cdf(g: &DistributionGrid, u: f64) -> f64 {
    let n = g.cdf.len();
    if u < g.cdf[0] {
        return g.x[0];
    }
    // first index with F > u
    let j = g.cdf.partition_point(|&c| c <= u);
    if j >= n {
        return g.x[n - 1];
    }
    if j == 0 {
        return g.x[0];
    }
    // walk back over the flat run so the segment is strictly increasing
    let i = j - 1;
    let (c0, c1) = (g.cdf[i], g.cdf[j]);
    let w = (u - c0) / (c1 - c0);
    g.x[i] + w * (g.x[j] - g.x[i])
}
