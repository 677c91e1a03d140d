//! Closed-form transforms of the mixed subordinated model (MLSM) and of the
//! behavioural mixed model without subordinator (BLM).

mod cgf;
mod moments;
mod params;

pub use cgf::{
    blm_compensator, blm_radicand, cgf_blm, cgf_blm_complex, cgf_ig, cgf_ig_real, cgf_mlsm,
    cgf_mlsm_complex, cgf_nig, cgf_nig_real, check_branch_path, chf_blm, chf_mlsm, chf_rn_blm,
    chf_rn_mlsm, mcmm_compensator, mgf_blm, mgf_mlsm, mlsm_radicands, nig_admissibility,
    Admissibility,
};
pub use moments::{
    cumulants_fd, mean_blm, mean_mlsm, moments_blm, moments_mlsm, variance_blm, variance_mlsm,
};
pub use params::{BlmParams, IgParams, MlsmParams, Moments, NigParams};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlsm,
    Blm,
}

impl std::str::FromStr for ModelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlsm" => Ok(ModelKind::Mlsm),
            "blm" => Ok(ModelKind::Blm),
            other => Err(crate::Error::Config(format!("unknown model '{other}' (expected mlsm or blm)"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Mlsm => "mlsm",
            ModelKind::Blm => "blm",
        })
    }
}

/// Either parameterization, dispatched at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Mlsm(MlsmParams),
    Blm(BlmParams),
}

impl From<MlsmParams> for Model {
    fn from(p: MlsmParams) -> Self {
        Model::Mlsm(p)
    }
}

impl From<BlmParams> for Model {
    fn from(p: BlmParams) -> Self {
        Model::Blm(p)
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mlsm(_) => ModelKind::Mlsm,
            Model::Blm(_) => ModelKind::Blm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Mlsm(p) => p.validate(),
            Model::Blm(p) => p.validate(),
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Model::Mlsm(p) => p.mu,
            Model::Blm(p) => p.mu,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            Model::Mlsm(p) => p.rho,
            Model::Blm(p) => p.rho,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Model::Mlsm(p) => p.sigma,
            Model::Blm(p) => p.sigma,
        }
    }

    pub fn nig(&self) -> &NigParams {
        match self {
            Model::Mlsm(p) => &p.nig,
            Model::Blm(p) => &p.nig,
        }
    }

    pub fn ig(&self) -> Option<&IgParams> {
        match self {
            Model::Mlsm(p) => Some(&p.ig),
            Model::Blm(_) => None,
        }
    }

    /// Unit-time CGF at a complex argument.
    pub fn cgf(&self, u: Complex64) -> Result<Complex64> {
        match self {
            Model::Mlsm(p) => cgf_mlsm_complex(u, p),
            Model::Blm(p) => cgf_blm_complex(u, p),
        }
    }

    pub fn cgf_real(&self, u: f64) -> Result<f64> {
        match self {
            Model::Mlsm(p) => cgf_mlsm(u, p),
            Model::Blm(p) => cgf_blm(u, p),
        }
    }

    pub fn mgf(&self, u: f64) -> Result<f64> {
        Ok(self.cgf_real(u)?.exp())
    }

    /// Physical-measure ch.f. of X_t.
    pub fn chf(&self, v: Complex64, t: f64) -> Result<Complex64> {
        match self {
            Model::Mlsm(p) => chf_mlsm(v, p, t),
            Model::Blm(p) => chf_blm(v, p, t),
        }
    }

    pub fn compensator(&self) -> Result<f64> {
        match self {
            Model::Mlsm(p) => mcmm_compensator(p),
            Model::Blm(p) => blm_compensator(p),
        }
    }

    /// Risk-neutral ch.f. of `ln S_t`.
    pub fn chf_rn(&self, v: Complex64, r: f64, s0: f64, t: f64) -> Result<Complex64> {
        match self {
            Model::Mlsm(p) => chf_rn_mlsm(v, p, r, s0, t),
            Model::Blm(p) => chf_rn_blm(v, p, r, s0, t),
        }
    }

    /// Risk-neutral ch.f. of the log-return `ln S_t - ln S_0`.
    pub fn chf_rn_log_return(&self, v: Complex64, r: f64, t: f64) -> Result<Complex64> {
        self.chf_rn(v, r, 1.0, t)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Model::Mlsm(p) => mean_mlsm(p),
            Model::Blm(p) => mean_blm(p),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Model::Mlsm(p) => variance_mlsm(p),
            Model::Blm(p) => variance_blm(p),
        }
    }

    pub fn moments(&self) -> Result<Moments> {
        match self {
            Model::Mlsm(p) => moments_mlsm(p),
            Model::Blm(p) => moments_blm(p),
        }
    }

    /// Closed interval of real `u` where the CGF is finite, as `(lo, hi)` with
    /// `lo <= 0 <= hi`. Infinite ends when `sigma = 0`. The IG end, when it binds,
    /// is itself excluded.
    pub fn real_domain(&self) -> (f64, f64) {
        let nig = self.nig();
        let s = self.sigma();
        if s == 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let a = (-nig.alpha - nig.beta) / s;
        let b = (nig.alpha - nig.beta) / s;
        let (mut lo, mut hi) = (a.min(b), a.max(b));
        if let Model::Mlsm(p) = self {
            let limit = p.ig.mgf_limit();
            let g = |u: f64| cgf_nig_real(s * u, nig).map(|k| k - limit).unwrap_or(f64::INFINITY);
            if g(hi) >= 0.0 {
                hi = bisect(&g, 0.0, hi);
            }
            if g(lo) >= 0.0 {
                lo = bisect(&g, lo, 0.0);
            }
        }
        (lo, hi)
    }

    /// Principal-branch radicands at complex CGF argument `u`.
    pub fn radicands(&self, u: Complex64) -> Result<Vec<Complex64>> {
        match self {
            Model::Mlsm(p) => Ok(mlsm_radicands(u, p)?.to_vec()),
            Model::Blm(p) => Ok(vec![blm_radicand(u, p)]),
        }
    }

    /// Check the radicand trajectories along a path of CGF arguments.
    pub fn check_contour(&self, us: &[Complex64], what: &str) -> Result<()> {
        let mut tracks: Vec<Vec<Complex64>> = Vec::new();
        for &u in us {
            let rs = self.radicands(u)?;
            if tracks.is_empty() {
                tracks = vec![Vec::with_capacity(us.len()); rs.len()];
            }
            for (track, r) in tracks.iter_mut().zip(rs) {
                track.push(r);
            }
        }
        for track in &tracks {
            check_branch_path(track, what)?;
        }
        Ok(())
    }
}

/// Root of a monotone sign change on `[a, b]`.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let fa_neg = f(a) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (f(mid) < 0.0) == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    // stay on the finite side
    if fa_neg {
        a
    } else {
        b
    }
}
