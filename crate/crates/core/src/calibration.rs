//! Risk-neutral calibration to European call quotes by Carr–Madan pricing.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelKind};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::reparam::{canonical, Param, ParamSpace};
use crate::transform::{model_call_prices, GridSpec, DEFAULT_DAMPING};
use crate::TRADING_DAYS_PER_YEAR;

/// Quotes below this mid are treated as noise.
pub const MIN_MID: f64 = 0.05;
pub const MIN_QUOTES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub expiry: NaiveDate,
    pub strike: f64,
    pub mid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionChain {
    pub quote_date: NaiveDate,
    pub s0: f64,
    /// Annualized continuously compounded rate.
    pub r_ann: f64,
    pub quotes: Vec<Quote>,
}

/// Weekdays in `(from, to]`.
pub fn trading_days(from: NaiveDate, to: NaiveDate) -> u32 {
    if to <= from {
        return 0;
    }
    let total = (to - from).num_days();
    let weeks = total / 7;
    let mut n = weeks * 5;
    let mut d = from + chrono::Duration::days(weeks * 7);
    while d < to {
        d = d.succ_opt().expect("date overflow");
        if d.weekday().number_from_monday() <= 5 {
            n += 1;
        }
    }
    n as u32
}

pub fn daily_rate(r_ann: f64) -> f64 {
    r_ann / TRADING_DAYS_PER_YEAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedQuote {
    pub index: usize,
    pub quote: Quote,
    pub reason: String,
}

impl OptionChain {
    pub fn new(quote_date: NaiveDate, s0: f64, r_ann: f64, quotes: Vec<Quote>) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidParameter(format!("spot must be > 0, got {s0}")));
        }
        if !r_ann.is_finite() {
            return Err(Error::InvalidParameter("rate must be finite".into()));
        }
        for (i, q) in quotes.iter().enumerate() {
            if q.expiry <= quote_date {
                return Err(Error::InvalidParameter(format!(
                    "quote {}: expiry {} is not after the quote date {quote_date}",
                    i + 1,
                    q.expiry
                )));
            }
            if !(q.strike > 0.0 && q.strike.is_finite()) {
                return Err(Error::InvalidParameter(format!("quote {}: strike must be > 0, got {}", i + 1, q.strike)));
            }
            if !(q.mid >= 0.0 && q.mid.is_finite()) {
                return Err(Error::InvalidParameter(format!("quote {}: mid must be >= 0, got {}", i + 1, q.mid)));
            }
        }
        Ok(Self { quote_date, s0, r_ann, quotes })
    }

    pub fn r_daily(&self) -> f64 {
        daily_rate(self.r_ann)
    }

    pub fn maturity_days(&self, expiry: NaiveDate) -> f64 {
        trading_days(self.quote_date, expiry) as f64
    }

    /// Drops quotes outside `[max(s0 - K e^{-rT}, 0), s0]` or with mid below
    /// [`MIN_MID`], logging a warning for each.
    pub fn screen(&self) -> (OptionChain, Vec<DroppedQuote>) {
        let r = self.r_daily();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (i, q) in self.quotes.iter().enumerate() {
            let t = self.maturity_days(q.expiry);
            let lower = (self.s0 - q.strike * (-r * t).exp()).max(0.0);
            let reason = if q.mid < MIN_MID {
                Some(format!("mid {} below {MIN_MID}", q.mid))
            } else if q.mid < lower {
                Some(format!("mid {} below the lower bound {lower:.6}", q.mid))
            } else if q.mid > self.s0 {
                Some(format!("mid {} above spot {}", q.mid, self.s0))
            } else if t < 1.0 {
                Some("expires within the quote day".to_string())
            } else {
                None
            };
            match reason {
                Some(reason) => {
                    log::warn!("dropping quote {} (K={}, expiry {}): {reason}", i + 1, q.strike, q.expiry);
                    dropped.push(DroppedQuote { index: i, quote: *q, reason });
                }
                None => kept.push(*q),
            }
        }
        let chain = OptionChain { quotes: kept, ..self.clone() };
        (chain, dropped)
    }

    fn by_expiry(&self) -> BTreeMap<NaiveDate, Vec<usize>> {
        let mut m: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        for (i, q) in self.quotes.iter().enumerate() {
            m.entry(q.expiry).or_default().push(i);
        }
        m
    }
}

/// Model prices for every quote, batched per expiry.
pub fn model_prices(model: &Model, chain: &OptionChain, a: f64, spec: &GridSpec) -> Result<Vec<f64>> {
    let groups: Vec<(NaiveDate, Vec<usize>)> = chain.by_expiry().into_iter().collect();
    let r = chain.r_daily();
    let priced: Vec<Result<Vec<(usize, f64)>>> = groups
        .par_iter()
        .map(|(expiry, idx)| {
            let t = chain.maturity_days(*expiry);
            let strikes: Vec<f64> = idx.iter().map(|&i| chain.quotes[i].strike).collect();
            let p = model_call_prices(model, r, chain.s0, t, &strikes, a, spec)?;
            Ok(idx.iter().copied().zip(p).collect())
        })
        .collect();
    let mut out = vec![0.0; chain.quotes.len()];
    for g in priced {
        for (i, p) in g? {
            out[i] = p;
        }
    }
    Ok(out)
}

/// Model price minus market mid, in quote order.
pub fn price_residuals(model: &Model, chain: &OptionChain, a: f64, spec: &GridSpec) -> Result<Vec<f64>> {
    let p = model_prices(model, chain, a, spec)?;
    Ok(p.iter().zip(&chain.quotes).map(|(p, q)| p - q.mid).collect())
}

pub fn rmse(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    pub damping: f64,
    pub fft: GridSpec,
    pub nelder_mead: NelderMeadOptions,
    /// Objective value (in units of `s0`) given to parameter points that cannot be priced.
    pub penalty: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            fft: GridSpec::pricing_default(),
            nelder_mead: NelderMeadOptions { max_iter: 3000, f_tol: 1e-10, step: 0.25 },
            penalty: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: Model,
    pub rmse: f64,
    pub n_quotes_used: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// RMSE at each start, in start order.
    pub start_rmse: Vec<f64>,
}

/// Parameters calibrated by default. `mu` cancels under the mean-correcting
/// measure, and for the BLM so does `m`; `rho` is held at its spot value for
/// the BLM and `(h, l)` at their spot values for the MLSM.
pub fn default_free(kind: ModelKind) -> &'static [Param] {
    match kind {
        ModelKind::Mlsm => &[Param::Rho, Param::Sigma, Param::M, Param::Alpha, Param::Beta, Param::D],
        ModelKind::Blm => &[Param::Sigma, Param::Alpha, Param::Beta, Param::D],
    }
}

/// Minimizes the price RMSE over `free` from every start.
pub fn calibrate(
    chain: &OptionChain,
    starts: &[Model],
    free: &[Param],
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }
    let n_expiries = chain.by_expiry().len();
    if chain.quotes.len() < MIN_QUOTES || n_expiries < 2 {
        return Err(Error::InsufficientData(format!(
            "calibration needs >= {MIN_QUOTES} quotes over >= 2 maturities, got {} over {n_expiries}",
            chain.quotes.len()
        )));
    }
    let kind = starts[0].kind();
    if starts.iter().any(|s| s.kind() != kind) {
        return Err(Error::InvalidParameter("starts mix model kinds".into()));
    }
    let penalty = opts.penalty * chain.s0;
    let objective = |m: &Model| -> f64 {
        match price_residuals(m, chain, opts.damping, &opts.fft) {
            Ok(r) => rmse(&r),
            Err(_) => penalty,
        }
    };
    // fixed coordinates come from each start, so every start gets its own space
    let spaces: Vec<ParamSpace> = starts
        .iter()
        .map(|s| ParamSpace::new(*s, free, 1.0))
        .collect::<Result<_>>()?;
    let start_rmse: Vec<f64> = starts.par_iter().map(&objective).collect();

    let runs: Vec<_> = spaces
        .par_iter()
        .zip(starts.par_iter())
        .map(|(sp, s)| {
            let f = |z: &[f64]| match sp.decode(z) {
                Ok(m) => objective(&m),
                Err(_) => penalty,
            };
            (sp, nelder_mead(f, &sp.encode(s), &opts.nelder_mead))
        })
        .collect();

    let (sp, best) = runs
        .iter()
        .filter(|(sp, m)| sp.decode(&m.x).is_ok() && m.f < penalty)
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f))
        .ok_or_else(|| Error::NoConvergence("no start reached a priceable parameter set".into()))?;
    let params = canonical(sp.decode(&best.x)?);
    // the returned point must still price
    let residuals = price_residuals(&params, chain, opts.damping, &opts.fft)?;
    Ok(CalibrationResult {
        params,
        rmse: rmse(&residuals),
        n_quotes_used: chain.quotes.len(),
        objective_trace: best.trace.clone(),
        converged: best.converged,
        start_rmse,
    })
}
