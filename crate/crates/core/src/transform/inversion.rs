use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{DistributionGrid, GridSpec};
use crate::error::{Error, Result};
use crate::model::Model;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_fft(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// Density and CDF of a law from its ch.f. on the grid `x_j = center + (j - n/2) lambda`.
///
/// The inversion integral runs over the symmetric frequency grid
/// `v_k = (k - n/2) eta` with trapezoid weights; the unpaired end point
/// `k = 0` gets weight zero so the weighted grid is exactly symmetric.
pub fn pdf_cdf_from_chf<F>(chf: F, spec: &GridSpec, horizon: Option<f64>) -> Result<DistributionGrid>
where
    F: Fn(f64) -> Result<Complex64>,
{
    spec.validate()?;
    let n = spec.n;
    let half = n / 2;
    let eta = spec.eta;
    let lambda = spec.lambda();
    let c = spec.x_center;

    let phi0 = chf(0.0)?;
    if (phi0 - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::InvalidParameter(format!("ch.f. at 0 is {phi0}, expected 1")));
    }

    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    for (k, slot) in phi.iter_mut().enumerate().skip(1) {
        let v = (k as f64 - half as f64) * eta;
        *slot = chf(v)?;
    }
    for k in 1..half {
        let (a, b) = (phi[half + k], phi[half - k]);
        if (a - b.conj()).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "ch.f. is not Hermitian at v = {}",
                k as f64 * eta
            )));
        }
    }

    let scale = eta / (2.0 * PI);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            if k == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let v = (k as f64 - half as f64) * eta;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            phi[k] * Complex64::from_polar(1.0, -v * c) * (sign * scale)
        })
        .collect();
    forward_fft(n).process(&mut buf);

    let max_re = buf.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let max_im = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if max_im > 1e-10 * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "inverted density has imaginary residue {max_im:e} (max real part {max_re:e})"
        )));
    }

    let x: Vec<f64> = (0..n).map(|j| c + (j as f64 - half as f64) * lambda).collect();
    let pdf: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, z)| if j % 2 == 0 { z.re } else { -z.re })
        .collect();
    // the discrete inversion wraps escaping mass around the grid, so coverage is
    // judged by the mass sitting in the outer bands
    let band = (n / 40).max(1);
    let edge: f64 = pdf[..band].iter().chain(&pdf[n - band..]).map(|p| p.max(0.0)).sum::<f64>() * lambda;
    if edge > 1e-3 {
        return Err(Error::GridCoverage { mass: 1.0 - edge });
    }
    DistributionGrid::from_pdf(x, pdf, horizon)
}

/// Which measure a tabulated law refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Physical,
    /// Log-return `ln S_t - ln S_0` under the mean-correcting measure at daily rate `r`.
    RiskNeutral { r: f64 },
}

/// Tabulates the law of the model's log-return over `t` days on a grid spanning
/// mean ± `sds` standard deviations, widening (doubling the span, up to 4 times)
/// whenever the grid misses probability mass.
pub fn model_distribution(
    model: &Model,
    t: f64,
    measure: Measure,
    n: usize,
    sds: f64,
) -> Result<DistributionGrid> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {t}")));
    }
    model.validate()?;
    let sd = (model.variance() * t).sqrt();
    let center = match measure {
        Measure::Physical => model.mean() * t,
        Measure::RiskNeutral { r } => (r - model.compensator()? + model.mean()) * t,
    };
    let mut half_width = sds * sd;
    let mut last_err = None;
    for _ in 0..5 {
        let spec = GridSpec::spanning(center, half_width, n)?;
        let res = match measure {
            Measure::Physical => pdf_cdf_from_chf(|v| model.chf(Complex64::new(v, 0.0), t), &spec, Some(t)),
            Measure::RiskNeutral { r } => pdf_cdf_from_chf(
                |v| model.chf_rn_log_return(Complex64::new(v, 0.0), r, t),
                &spec,
                Some(t),
            ),
        };
        match res {
            Err(e @ Error::GridCoverage { .. }) => {
                last_err = Some(e);
                half_width *= 2.0;
            }
            other => return other,
        }
    }
    Err(last_err.unwrap_or(Error::GridCoverage { mass: 0.0 }))
}
