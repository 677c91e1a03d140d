use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

/// Normal inverse Gaussian jump law: location `m`, tail heaviness `alpha`,
/// asymmetry `beta` and scale `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

impl NigParams {
    pub fn new(m: f64, alpha: f64, beta: f64, d: f64) -> Result<Self> {
        let p = Self { m, alpha, beta, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        finite("m", self.m)?;
        finite("alpha", self.alpha)?;
        finite("beta", self.beta)?;
        finite("d", self.d)?;
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.d <= 0.0 {
            return Err(Error::InvalidParameter(format!("d must be > 0, got {}", self.d)));
        }
        if self.beta.abs() >= self.alpha {
            return Err(Error::InvalidParameter(format!(
                "|beta| < alpha required, got beta = {}, alpha = {}",
                self.beta, self.alpha
            )));
        }
        Ok(())
    }

    /// `sqrt(alpha^2 - beta^2)`.
    pub fn gamma(&self) -> f64 {
        ((self.alpha - self.beta) * (self.alpha + self.beta)).sqrt()
    }

    /// E[L_1] = m + d*beta/gamma.
    pub fn mean(&self) -> f64 {
        self.m + self.d * self.beta / self.gamma()
    }

    /// Var[L_1] = d*alpha^2/gamma^3.
    pub fn variance(&self) -> f64 {
        let g = self.gamma();
        self.d * self.alpha * self.alpha / (g * g * g)
    }
}

/// Inverse Gaussian subordinator law of V_1: mean `h`, shape `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgParams {
    pub h: f64,
    pub l: f64,
}

impl IgParams {
    pub fn new(h: f64, l: f64) -> Result<Self> {
        let p = Self { h, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        finite("h", self.h)?;
        finite("l", self.l)?;
        if self.h <= 0.0 || self.l <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "IG mean and shape must be > 0, got h = {}, l = {}",
                self.h, self.l
            )));
        }
        Ok(())
    }

    /// Right end of the real MGF domain, `l / (2 h^2)` (excluded).
    pub fn mgf_limit(&self) -> f64 {
        self.l / (2.0 * self.h * self.h)
    }

    pub fn variance(&self) -> f64 {
        self.h.powi(3) / self.l
    }
}

/// Brownian motion plus an IG-subordinated NIG process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlsmParams {
    pub mu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub nig: NigParams,
    pub ig: IgParams,
}

impl MlsmParams {
    pub fn validate(&self) -> Result<()> {
        finite("mu", self.mu)?;
        finite("rho", self.rho)?;
        finite("sigma", self.sigma)?;
        if self.rho == 0.0 {
            return Err(Error::InvalidParameter("rho must be non-zero".into()));
        }
        self.nig.validate()?;
        self.ig.validate()
    }
}

/// Brownian motion plus an NIG process on calendar time (no subordinator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlmParams {
    pub mu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub nig: NigParams,
}

impl BlmParams {
    pub fn validate(&self) -> Result<()> {
        finite("mu", self.mu)?;
        finite("rho", self.rho)?;
        finite("sigma", self.sigma)?;
        self.nig.validate()
    }
}

/// The four standardized moments of X_1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}
