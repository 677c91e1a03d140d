//! Empirical characteristic function fitting of the return models.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IgParams, Model, ModelKind, NigParams};
use crate::optim::{multistart, NelderMeadOptions};
use crate::reparam::{canonical, jittered_starts, model_from_values, Param, ParamSpace};
use crate::transform::{model_distribution, Measure};

/// Frequencies and weights discretizing the ECF distance integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

pub const ECF_GRID_POINTS: usize = 201;
const ECF_CUTOFF: f64 = 0.05;

impl EcfGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidParameter("ECF grid needs matching, nonempty points and weights".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("ECF weights must be positive".into()));
        }
        let n = points.len();
        if (0..n).any(|i| (points[i] + points[n - 1 - i]).abs() > 1e-12 * points[i].abs().max(1.0)) {
            return Err(Error::InvalidParameter("ECF grid must be symmetric about 0".into()));
        }
        Ok(Self { points, weights })
    }

    /// `n` equally spaced points on `[-radius, radius]` with Gaussian weights of
    /// standard deviation `radius / 3`, normalized to sum 1.
    pub fn with_radius(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!("need radius > 0 and odd n >= 3, got {radius}, {n}")));
        }
        let half = (n / 2) as f64;
        let points: Vec<f64> = (0..n).map(|j| radius * (j as f64 - half) / half).collect();
        let s2 = radius * radius / 9.0;
        let raw: Vec<f64> = points.iter().map(|t| (-t * t / (2.0 * s2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(points, raw.into_iter().map(|w| w / total).collect())
    }

    /// Radius is the first `theta > 0` where `|ECF|` drops below 0.05, capped at
    /// `10 / sd` of the data.
    pub fn adaptive(data: &[f64]) -> Result<Self> {
        let sd = sample_sd(data)?;
        let cap = 10.0 / sd;
        let step = 0.01 / sd;
        let mut radius = cap;
        let mut theta = step;
        while theta < cap {
            if empirical_chf(data, theta).norm() < ECF_CUTOFF {
                radius = theta;
                break;
            }
            theta += step;
        }
        Self::with_radius(radius, ECF_GRID_POINTS)
    }

    pub fn radius(&self) -> f64 {
        self.points.last().copied().unwrap_or(0.0)
    }
}

fn sample_sd(data: &[f64]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::InsufficientData(format!("need >= 2 observations, got {}", data.len())));
    }
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let v = data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    if !(v > 0.0) {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    Ok(v.sqrt())
}

/// `(1/n) sum exp(i theta x_k)`.
pub fn empirical_chf(data: &[f64], theta: f64) -> Complex64 {
    let (c, s) = data.iter().fold((0.0, 0.0), |(c, s), x| {
        let (si, ci) = (theta * x).sin_cos();
        (c + ci, s + si)
    });
    let n = data.len() as f64;
    Complex64::new(c / n, s / n)
}

/// ECF of a data set evaluated once on a grid.
#[derive(Debug, Clone)]
pub struct EcfTarget {
    pub grid: EcfGrid,
    pub values: Vec<Complex64>,
    pub n: usize,
}

impl EcfTarget {
    pub fn new(data: &[f64], grid: EcfGrid) -> Self {
        let values = grid.points.par_iter().map(|&t| empirical_chf(data, t)).collect();
        Self { grid, values, n: data.len() }
    }

    /// `sum_j w_j |ECF(theta_j) - phi(theta_j)|^2` with the model ch.f. at `t = 1`.
    pub fn objective(&self, model: &Model) -> f64 {
        let mut acc = 0.0;
        for ((&t, &w), e) in self.grid.points.iter().zip(&self.grid.weights).zip(&self.values) {
            match model.chf(Complex64::new(t, 0.0), 1.0) {
                Ok(phi) => acc += w * (e - phi).norm_sqr(),
                Err(_) => return f64::INFINITY,
            }
        }
        acc
    }
}

pub fn ecf_objective(model: &Model, data: &[f64], grid: &EcfGrid) -> f64 {
    EcfTarget::new(data, grid.clone()).objective(model)
}

/// Expected objective when the data are `n` draws from `model` itself:
/// `E|ECF - phi|^2 = (1 - |phi|^2) / n` at each frequency.
pub fn ecf_noise_level(model: &Model, grid: &EcfGrid, n: usize) -> Result<f64> {
    let mut acc = 0.0;
    for (&t, &w) in grid.points.iter().zip(&grid.weights) {
        let phi = model.chf(Complex64::new(t, 0.0), 1.0)?;
        acc += w * (1.0 - phi.norm_sqr()) / n as f64;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EcfFitOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Standard deviation of the start jitter in reparameterized coordinates.
    pub jitter: f64,
    /// Share of the sample variance given to the Brownian part at the center start.
    pub gaussian_share: f64,
    pub nelder_mead: NelderMeadOptions,
    /// FFT size for the likelihood density.
    pub pdf_n: usize,
}

impl Default for EcfFitOptions {
    fn default() -> Self {
        Self {
            n_starts: 16,
            seed: 1,
            jitter: 0.5,
            gaussian_share: 0.2,
            nelder_mead: NelderMeadOptions::default(),
            pdf_n: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfCandidate {
    pub start: Model,
    pub params: Model,
    pub objective: f64,
    pub log_likelihood: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfFit {
    pub params: Model,
    pub objective: f64,
    pub log_likelihood: f64,
    pub grid_radius: f64,
    pub candidates: Vec<EcfCandidate>,
}

fn sample_moments(data: &[f64]) -> (f64, f64, f64, f64) {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in data {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Method-of-moments center start with `sigma = 1`.
///
/// A share of the variance goes to the Brownian part; the NIG law is matched to
/// the remaining variance, skewness and excess kurtosis. For the MLSM the NIG
/// time scale is divided by the mean intrinsic time `h`.
pub fn mom_start(data: &[f64], kind: ModelKind, ig: Option<IgParams>, gaussian_share: f64) -> Result<Model> {
    sample_sd(data)?;
    let (mean, var, skew, kurt) = sample_moments(data);
    let share = gaussian_share.clamp(0.01, 0.99);
    let rho = (share * var).sqrt();
    let vj = (1.0 - share) * var;
    let sj = skew * (var / vj).powf(1.5);
    let kj = kurt * (var / vj).powi(2);
    // NIG: skew^2 = 9 b^2 / q, exkurt = 3 / q + 4 skew^2 / 3, q = d gamma, b = beta / alpha
    let (q, b) = if kj > 4.0 * sj * sj / 3.0 + 1e-3 {
        let q = 3.0 / (kj - 4.0 * sj * sj / 3.0);
        (q, (sj * q.sqrt() / 3.0).clamp(-0.9, 0.9))
    } else {
        (3.0 / kj.max(0.1), 0.0)
    };
    let gamma = (q / (vj * (1.0 - b * b))).sqrt();
    let alpha = gamma / (1.0 - b * b).sqrt();
    let beta = b * alpha;
    let d = q / gamma;
    let mut m = -d * beta / gamma;
    let mut d = d;
    if let (ModelKind::Mlsm, Some(g)) = (kind, ig) {
        d /= g.h;
        m /= g.h;
    }
    let nig = NigParams::new(m, alpha, beta, d)?;
    let proto = model_from_values(kind, 0.0, rho, 1.0, nig, ig)?;
    // put the sample mean into mu
    let mu = mean - proto.mean();
    model_from_values(kind, mu, rho, 1.0, nig, ig)
}

/// Multi-start ECF minimization; the reported fit is the converged candidate
/// with the largest log-likelihood under the FFT density.
pub fn fit_ecf(
    data: &[f64],
    kind: ModelKind,
    ig_fixed: Option<IgParams>,
    starts: &[Model],
    grid: Option<EcfGrid>,
    opts: &EcfFitOptions,
) -> Result<EcfFit> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }
    if data.len() < super::MIN_FIT_LEN {
        return Err(Error::InsufficientData(format!(
            "return fit needs >= {} observations, got {}",
            super::MIN_FIT_LEN,
            data.len()
        )));
    }
    if kind == ModelKind::Mlsm && ig_fixed.is_none() {
        return Err(Error::InvalidParameter("MLSM fit needs the IG parameters (h, l)".into()));
    }
    let sd = sample_sd(data)?;
    let grid = match grid {
        Some(g) => g,
        None => EcfGrid::adaptive(data)?,
    };
    let radius = grid.radius();
    let target = EcfTarget::new(data, grid);

    let free = &Param::ALL[..7];
    let mut base = starts[0];
    if let (Model::Mlsm(p), Some(g)) = (&mut base, ig_fixed) {
        p.ig = g;
    }
    let space = ParamSpace::new(base, free, sd)?;
    let mut z0 = Vec::with_capacity(starts.len());
    for s in starts {
        if s.kind() != kind {
            return Err(Error::InvalidParameter(format!("start is {} but the fit is {kind}", s.kind())));
        }
        s.validate()?;
        z0.push(space.encode(s));
    }
    let f = |z: &[f64]| match space.decode(z) {
        Ok(m) => target.objective(&m),
        Err(_) => f64::INFINITY,
    };
    let mins = multistart(f, &z0, &opts.nelder_mead);

    let mut candidates: Vec<EcfCandidate> = mins
        .iter()
        .zip(starts)
        .filter_map(|(m, s)| {
            let params = space.decode(&m.x).ok()?;
            Some(EcfCandidate {
                start: *s,
                params: canonical(params),
                objective: m.f,
                log_likelihood: None,
                converged: m.converged && m.f.is_finite(),
                iterations: m.iterations,
            })
        })
        .collect();
    candidates.par_iter_mut().filter(|c| c.converged).for_each(|c| {
        c.log_likelihood = log_likelihood(&c.params, data, opts.pdf_n).ok();
    });

    let best = candidates
        .iter()
        .filter(|c| c.converged && c.params.validate().is_ok())
        .filter_map(|c| c.log_likelihood.map(|ll| (ll, c)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(ll, c)| (ll, c.params, c.objective));
    match best {
        Some((log_likelihood, params, objective)) => {
            params.validate()?;
            Ok(EcfFit { params, objective, log_likelihood, grid_radius: radius, candidates })
        }
        None => Err(Error::NoConvergence(format!(
            "none of {} starts converged to valid parameters",
            starts.len()
        ))),
    }
}

/// Center start plus `n_starts - 1` jittered copies, drawn reproducibly.
pub fn default_starts(
    data: &[f64],
    kind: ModelKind,
    ig: Option<IgParams>,
    opts: &EcfFitOptions,
) -> Result<Vec<Model>> {
    let center = mom_start(data, kind, ig, opts.gaussian_share)?;
    let sd = sample_sd(data)?;
    let space = ParamSpace::new(center, &Param::ALL[..7], sd)?;
    Ok(jittered_starts(&space, &center, opts.n_starts, opts.jitter, opts.seed))
}

/// Log-likelihood of `data` as daily observations, with the density from FFT
/// inversion of the model ch.f.
pub fn log_likelihood(model: &Model, data: &[f64], n: usize) -> Result<f64> {
    let g = model_distribution(model, 1.0, Measure::Physical, n, 20.0)?;
    Ok(data.iter().map(|&x| g.pdf_at(x).max(1e-300).ln()).sum())
}
