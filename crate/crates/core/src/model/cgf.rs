//! Cumulant, moment and characteristic functions.
//!
//! Every model is described by its unit-time complex CGF `K(u) = ln E[e^{u X_1}]`.
//! The ch.f. at horizon `t` is `exp(t K(i v))` and the MGF is `exp(K(u))` for real
//! `u`. Real arguments go through a separate `f64` route so that the
//! `chf(-iu) = mgf(u)` identity compares two independent evaluations.
//!
//! Square roots use the principal branch. A radicand sitting on the negative real
//! axis is reported as [`Error::Branch`]; [`check_branch_path`] extends that check to
//! a whole contour.

use num_complex::Complex64;

use super::params::{BlmParams, IgParams, MlsmParams, NigParams};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Where a real argument sits relative to the closed domain of a CGF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Interior,
    /// Finite value, infinite derivative. Optimizers must stay away from it.
    Boundary,
}

fn on_cut(z: Complex64) -> bool {
    z.re < 0.0 && z.im.abs() <= 1e-14 * z.re.abs()
}

fn sqrt_checked(z: Complex64, what: &str) -> Result<Complex64> {
    if on_cut(z) {
        return Err(Error::Branch(what.to_string()));
    }
    Ok(z.sqrt())
}

/// Fails if the piecewise-linear path through `radicands` crosses the negative
/// real axis.
pub fn check_branch_path(radicands: &[Complex64], what: &str) -> Result<()> {
    if radicands.iter().any(|z| on_cut(*z)) {
        return Err(Error::Branch(what.to_string()));
    }
    for w in radicands.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.im < 0.0) != (b.im < 0.0) && a.im != b.im {
            let x = a.re - a.im * (b.re - a.re) / (b.im - a.im);
            if x < 0.0 {
                return Err(Error::Branch(what.to_string()));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- NIG

/// Classify a real argument of the NIG CGF; the closed interval
/// `[-alpha - beta, alpha - beta]` is admitted.
pub fn nig_admissibility(u: f64, p: &NigParams) -> Result<Admissibility> {
    let lo = -p.alpha - p.beta;
    let hi = p.alpha - p.beta;
    if !(u >= lo && u <= hi) {
        return Err(Error::Domain { what: "NIG CGF", value: u });
    }
    if u == lo || u == hi {
        Ok(Admissibility::Boundary)
    } else {
        Ok(Admissibility::Interior)
    }
}

fn nig_radicand(u: Complex64, p: &NigParams) -> Complex64 {
    let b = p.beta + u;
    (p.alpha - b) * (p.alpha + b)
}

/// `K_L(u) = m u + d (sqrt(alpha^2 - beta^2) - sqrt(alpha^2 - (beta + u)^2))`.
pub fn cgf_nig(u: Complex64, p: &NigParams) -> Result<Complex64> {
    nig_admissibility(u.re, p)?;
    let root = if u.im == 0.0 {
        // (alpha - beta - u)(alpha + beta + u) >= 0 on the domain
        Complex64::new(nig_radicand(u, p).re.max(0.0).sqrt(), 0.0)
    } else {
        sqrt_checked(nig_radicand(u, p), "NIG CGF")?
    };
    Ok(p.m * u + p.d * (p.gamma() - root))
}

pub fn cgf_nig_real(u: f64, p: &NigParams) -> Result<f64> {
    nig_admissibility(u, p)?;
    let rad = (p.alpha - p.beta - u) * (p.alpha + p.beta + u);
    Ok(p.m * u + p.d * (p.gamma() - rad.max(0.0).sqrt()))
}

// ---------------------------------------------------------------- IG

/// `K_V(u) = (l/h)(1 - sqrt(1 - 2 h^2 u / l))`, finite for `Re u < l/(2h^2)`.
pub fn cgf_ig(u: Complex64, p: &IgParams) -> Result<Complex64> {
    if !(u.re < p.mgf_limit()) {
        return Err(Error::Domain { what: "IG CGF", value: u.re });
    }
    let rad = 1.0 - 2.0 * p.h * p.h * u / p.l;
    let root = if u.im == 0.0 {
        Complex64::new(rad.re.sqrt(), 0.0)
    } else {
        sqrt_checked(rad, "IG CGF")?
    };
    Ok(p.l / p.h * (1.0 - root))
}

pub fn cgf_ig_real(u: f64, p: &IgParams) -> Result<f64> {
    if !(u < p.mgf_limit()) {
        return Err(Error::Domain { what: "IG CGF", value: u });
    }
    Ok(p.l / p.h * (1.0 - (1.0 - 2.0 * p.h * p.h * u / p.l).sqrt()))
}

// ---------------------------------------------------------------- MLSM

/// Unit-time CGF of the mixed subordinated model at a complex argument.
pub fn cgf_mlsm_complex(u: Complex64, p: &MlsmParams) -> Result<Complex64> {
    let inner = cgf_nig(p.sigma * u, &p.nig)?;
    let outer = cgf_ig(inner, &p.ig)?;
    Ok(u * p.mu + 0.5 * p.rho * p.rho * u * u + outer)
}

/// Real CGF of X_1, `u mu + rho^2 u^2 / 2 + K_V(K_L(sigma u))`.
pub fn cgf_mlsm(u: f64, p: &MlsmParams) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    let inner = cgf_nig_real(p.sigma * u, &p.nig)?;
    if !(inner < p.ig.mgf_limit()) {
        return Err(Error::Domain { what: "MLSM CGF", value: u });
    }
    let outer = cgf_ig_real(inner, &p.ig)?;
    Ok(u * p.mu + 0.5 * p.rho * p.rho * u * u + outer)
}

pub fn mgf_mlsm(u: f64, p: &MlsmParams) -> Result<f64> {
    Ok(cgf_mlsm(u, p)?.exp())
}

/// Ch.f. of X_t, `exp(t psi_X(v))` with `psi_X(v) = K_X(i v)`.
pub fn chf_mlsm(v: Complex64, p: &MlsmParams, t: f64) -> Result<Complex64> {
    Ok((t * cgf_mlsm_complex(I * v, p)?).exp())
}

/// `K_{X_1}(1)`, the mean-correction drift. Requires `u = 1` strictly inside the
/// MGF domain.
pub fn mcmm_compensator(p: &MlsmParams) -> Result<f64> {
    if nig_admissibility(p.sigma, &p.nig)? != Admissibility::Interior {
        return Err(Error::Domain { what: "MCMM compensator", value: 1.0 });
    }
    cgf_mlsm(1.0, p)
}

/// Risk-neutral ch.f. of `ln S_t` under the mean-correcting measure.
pub fn chf_rn_mlsm(v: Complex64, p: &MlsmParams, r: f64, s0: f64, t: f64) -> Result<Complex64> {
    let comp = mcmm_compensator(p)?;
    let iv = I * v;
    Ok((iv * (s0.ln() + (r - comp) * t) + t * cgf_mlsm_complex(iv, p)?).exp())
}

// ---------------------------------------------------------------- BLM

pub fn cgf_blm_complex(u: Complex64, p: &BlmParams) -> Result<Complex64> {
    Ok(u * p.mu + 0.5 * p.rho * p.rho * u * u + cgf_nig(p.sigma * u, &p.nig)?)
}

pub fn cgf_blm(u: f64, p: &BlmParams) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    Ok(u * p.mu + 0.5 * p.rho * p.rho * u * u + cgf_nig_real(p.sigma * u, &p.nig)?)
}

pub fn mgf_blm(u: f64, p: &BlmParams) -> Result<f64> {
    Ok(cgf_blm(u, p)?.exp())
}

pub fn chf_blm(v: Complex64, p: &BlmParams, t: f64) -> Result<Complex64> {
    Ok((t * cgf_blm_complex(I * v, p)?).exp())
}

pub fn blm_compensator(p: &BlmParams) -> Result<f64> {
    if nig_admissibility(p.sigma, &p.nig)? != Admissibility::Interior {
        return Err(Error::Domain { what: "MCMM compensator", value: 1.0 });
    }
    cgf_blm(1.0, p)
}

pub fn chf_rn_blm(v: Complex64, p: &BlmParams, r: f64, s0: f64, t: f64) -> Result<Complex64> {
    let comp = blm_compensator(p)?;
    let iv = I * v;
    Ok((iv * (s0.ln() + (r - comp) * t) + t * cgf_blm_complex(iv, p)?).exp())
}

/// Radicands of the two square roots in the MLSM CGF at argument `u`
/// (NIG first, IG second).
pub fn mlsm_radicands(u: Complex64, p: &MlsmParams) -> Result<[Complex64; 2]> {
    let su = p.sigma * u;
    let inner = cgf_nig(su, &p.nig)?;
    Ok([
        nig_radicand(su, &p.nig),
        1.0 - 2.0 * p.ig.h * p.ig.h * inner / p.ig.l,
    ])
}

pub fn blm_radicand(u: Complex64, p: &BlmParams) -> Complex64 {
    nig_radicand(p.sigma * u, &p.nig)
}
