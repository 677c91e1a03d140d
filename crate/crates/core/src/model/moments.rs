use super::cgf::{cgf_blm, cgf_mlsm};
use super::params::{BlmParams, MlsmParams, Moments};
use crate::error::Result;

/// Mean of X_1 for the subordinated model: `mu + h (m sigma + beta d sigma / gamma)`.
pub fn mean_mlsm(p: &MlsmParams) -> f64 {
    let g = p.nig.gamma();
    p.mu + p.ig.h * (p.nig.m * p.sigma + p.nig.beta * p.nig.d * p.sigma / g)
}

/// Variance of X_1 for the subordinated model.
pub fn variance_mlsm(p: &MlsmParams) -> f64 {
    let n = &p.nig;
    let g = n.gamma();
    let s2 = p.sigma * p.sigma;
    let drift = n.m * p.sigma + n.beta * n.d * p.sigma / g;
    p.ig.h * (n.d * s2 / g + n.beta * n.beta * n.d * s2 / (g * g * g))
        + p.rho * p.rho
        + p.ig.h.powi(3) * drift * drift / p.ig.l
}

pub fn mean_blm(p: &BlmParams) -> f64 {
    p.mu + p.sigma * p.nig.mean()
}

pub fn variance_blm(p: &BlmParams) -> f64 {
    p.rho * p.rho + p.sigma * p.sigma * p.nig.variance()
}

/// First four cumulants of a CGF by central finite differences at zero.
///
/// κ1 and κ2 use 6th-order stencils, κ3 and κ4 4th-order ones; each is
/// Richardson-extrapolated from steps `step` and `step / 2`.
pub fn cumulants_fd<F>(cgf: F, step: f64) -> Result<[f64; 4]>
where
    F: Fn(f64) -> Result<f64>,
{
    let stencil = |h: f64| -> Result<[f64; 4]> {
        let mut f = [0.0; 7];
        for (k, slot) in f.iter_mut().enumerate() {
            let j = k as f64 - 3.0;
            *slot = if j == 0.0 { 0.0 } else { cgf(j * h)? };
        }
        let [m3, m2, m1, z, p1, p2, p3] = f;
        let d1 = (-m3 + 9.0 * m2 - 45.0 * m1 + 45.0 * p1 - 9.0 * p2 + p3) / (60.0 * h);
        let d2 = (2.0 * m3 - 27.0 * m2 + 270.0 * m1 - 490.0 * z + 270.0 * p1 - 27.0 * p2
            + 2.0 * p3)
            / (180.0 * h * h);
        let d3 = (m3 - 8.0 * m2 + 13.0 * m1 - 13.0 * p1 + 8.0 * p2 - p3) / (8.0 * h.powi(3));
        let d4 = (-m3 + 12.0 * m2 - 39.0 * m1 + 56.0 * z - 39.0 * p1 + 12.0 * p2 - p3)
            / (6.0 * h.powi(4));
        Ok([d1, d2, d3, d4])
    };
    let coarse = stencil(step)?;
    let fine = stencil(0.5 * step)?;
    let orders = [6, 6, 4, 4];
    let mut out = [0.0; 4];
    for i in 0..4 {
        let f = (1u32 << orders[i]) as f64;
        out[i] = fine[i] + (fine[i] - coarse[i]) / (f - 1.0);
    }
    Ok(out)
}

/// Step for [`cumulants_fd`] given the distance from 0 to the nearest real
/// singularity of the CGF and the standard deviation.
pub(crate) fn fd_step(radius: f64, sd: f64) -> f64 {
    let natural = if sd > 0.0 { 1.0 / sd } else { 1.0 };
    0.05 * radius.min(natural)
}

fn assemble(mean: f64, variance: f64, k: [f64; 4]) -> Moments {
    Moments {
        mean,
        variance,
        skewness: k[2] / variance.powf(1.5),
        excess_kurtosis: k[3] / (variance * variance),
    }
}

/// Closed-form mean and variance; skewness and excess kurtosis from
/// finite-difference cumulants of the CGF.
pub fn moments_mlsm(p: &MlsmParams) -> Result<Moments> {
    let (lo, hi) = super::Model::Mlsm(*p).real_domain();
    let mean = mean_mlsm(p);
    let var = variance_mlsm(p);
    let step = fd_step(lo.abs().min(hi), var.sqrt());
    let k = cumulants_fd(|u| cgf_mlsm(u, p), step)?;
    Ok(assemble(mean, var, k))
}

pub fn moments_blm(p: &BlmParams) -> Result<Moments> {
    let (lo, hi) = super::Model::Blm(*p).real_domain();
    let mean = mean_blm(p);
    let var = variance_blm(p);
    let step = fd_step(lo.abs().min(hi), var.sqrt());
    let k = cumulants_fd(|u| cgf_blm(u, p), step)?;
    Ok(assemble(mean, var, k))
}
