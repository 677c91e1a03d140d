//! Unconstrained coordinates for the optimizers.
//!
//! Positive parameters go through `exp`, the NIG asymmetry through
//! `beta = alpha tanh(c)` so that `|beta| < alpha` holds by construction, and the
//! two locations are linear with a caller-chosen scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlmParams, IgParams, MlsmParams, Model, ModelKind, NigParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Mu,
    Rho,
    Sigma,
    M,
    Alpha,
    Beta,
    D,
    H,
    L,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::Mu,
        Param::Rho,
        Param::Sigma,
        Param::M,
        Param::Alpha,
        Param::Beta,
        Param::D,
        Param::H,
        Param::L,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Mu => "mu",
            Param::Rho => "rho",
            Param::Sigma => "sigma",
            Param::M => "m",
            Param::Alpha => "alpha",
            Param::Beta => "beta",
            Param::D => "d",
            Param::H => "h",
            Param::L => "l",
        }
    }

    /// Parameters of the given model kind, in document order.
    pub fn of(kind: ModelKind) -> &'static [Param] {
        match kind {
            ModelKind::Mlsm => &Param::ALL,
            ModelKind::Blm => &Param::ALL[..7],
        }
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown parameter '{s}'")))
    }
}

pub fn get(model: &Model, p: Param) -> f64 {
    let nig = model.nig();
    match p {
        Param::Mu => model.mu(),
        Param::Rho => model.rho(),
        Param::Sigma => model.sigma(),
        Param::M => nig.m,
        Param::Alpha => nig.alpha,
        Param::Beta => nig.beta,
        Param::D => nig.d,
        Param::H => model.ig().map_or(f64::NAN, |g| g.h),
        Param::L => model.ig().map_or(f64::NAN, |g| g.l),
    }
}

fn set(model: &mut Model, p: Param, v: f64) {
    let (mu, rho, sigma, nig, ig) = match model {
        Model::Mlsm(q) => (&mut q.mu, &mut q.rho, &mut q.sigma, &mut q.nig, Some(&mut q.ig)),
        Model::Blm(q) => (&mut q.mu, &mut q.rho, &mut q.sigma, &mut q.nig, None),
    };
    match p {
        Param::Mu => *mu = v,
        Param::Rho => *rho = v,
        Param::Sigma => *sigma = v,
        Param::M => nig.m = v,
        Param::Alpha => nig.alpha = v,
        Param::Beta => nig.beta = v,
        Param::D => nig.d = v,
        Param::H => {
            if let Some(g) = ig {
                g.h = v
            }
        }
        Param::L => {
            if let Some(g) = ig {
                g.l = v
            }
        }
    }
}

/// Representative with `rho >= 0` and `sigma >= 0`. Only `rho^2` enters the law,
/// and `(sigma, m, beta) -> (-sigma, -m, -beta)` leaves `sigma L` unchanged.
pub fn canonical(model: Model) -> Model {
    let mut out = model;
    let (rho, sigma, nig) = match &mut out {
        Model::Mlsm(q) => (&mut q.rho, &mut q.sigma, &mut q.nig),
        Model::Blm(q) => (&mut q.rho, &mut q.sigma, &mut q.nig),
    };
    *rho = rho.abs();
    if *sigma < 0.0 {
        *sigma = -*sigma;
        nig.m = -nig.m;
        nig.beta = -nig.beta;
    }
    out
}

/// Map between a subset of free parameters and `R^k`; the others stay at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    base: Model,
    free: Vec<Param>,
    loc_scale: f64,
}

const TINY: f64 = 1e-300;

impl ParamSpace {
    pub fn new(base: Model, free: &[Param], loc_scale: f64) -> Result<Self> {
        if !(loc_scale > 0.0 && loc_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("location scale must be > 0, got {loc_scale}")));
        }
        let allowed = Param::of(base.kind());
        let mut ordered = Vec::new();
        for p in allowed {
            if free.contains(p) {
                ordered.push(*p);
            }
        }
        if let Some(p) = free.iter().find(|p| !allowed.contains(p)) {
            return Err(Error::Config(format!("parameter {} does not exist in the {} model", p.name(), base.kind())));
        }
        Ok(Self { base: canonical(base), free: ordered, loc_scale })
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn free(&self) -> &[Param] {
        &self.free
    }

    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn encode(&self, model: &Model) -> Vec<f64> {
        let m = canonical(*model);
        self.free
            .iter()
            .map(|&p| {
                let v = get(&m, p);
                match p {
                    Param::Mu | Param::M => v / self.loc_scale,
                    Param::Beta => {
                        let a = get(&m, Param::Alpha);
                        (v / a).clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
                    }
                    _ => v.abs().max(TINY).ln(),
                }
            })
            .collect()
    }

    /// Parameters at `z`. Fails when the result violates a type invariant, which
    /// only happens at overflow or when `beta` is fixed and `alpha` is free.
    pub fn decode(&self, z: &[f64]) -> Result<Model> {
        if z.len() != self.free.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.free.len(),
                z.len()
            )));
        }
        let mut m = self.base;
        let mut beta_c = None;
        for (&p, &v) in self.free.iter().zip(z) {
            match p {
                Param::Mu | Param::M => set(&mut m, p, v * self.loc_scale),
                Param::Beta => beta_c = Some(v),
                _ => set(&mut m, p, v.exp()),
            }
        }
        if let Some(c) = beta_c {
            let a = get(&m, Param::Alpha);
            // tanh(18) is the last value distinguishable from 1
            set(&mut m, Param::Beta, a * c.clamp(-18.0, 18.0).tanh());
        }
        m.validate()?;
        Ok(m)
    }
}

/// `center` followed by `n - 1` reproducible perturbations of its free
/// coordinates (standard deviation `jitter`, a tenth of that for locations).
pub fn jittered_starts(space: &ParamSpace, center: &Model, n: usize, jitter: f64, seed: u64) -> Vec<Model> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let z = space.encode(center);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![*center];
    let mut tries = 0;
    while out.len() < n.max(1) && tries < 100 * n {
        tries += 1;
        let zj: Vec<f64> = space
            .free()
            .iter()
            .zip(&z)
            .map(|(p, v)| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let scale = if matches!(p, Param::Mu | Param::M) { 0.1 } else { 1.0 };
                v + jitter * scale * e
            })
            .collect();
        if let Ok(m) = space.decode(&zj) {
            out.push(m);
        }
    }
    out
}

/// Builds a model of the given kind from named values, filling `ig` for MLSM.
pub fn model_from_values(
    kind: ModelKind,
    mu: f64,
    rho: f64,
    sigma: f64,
    nig: NigParams,
    ig: Option<IgParams>,
) -> Result<Model> {
    let m = match kind {
        ModelKind::Mlsm => Model::Mlsm(MlsmParams {
            mu,
            rho,
            sigma,
            nig,
            ig: ig.ok_or_else(|| Error::InvalidParameter("MLSM needs (h, l)".into()))?,
        }),
        ModelKind::Blm => Model::Blm(BlmParams { mu, rho, sigma, nig }),
    };
    m.validate()?;
    Ok(m)
}
