use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daily log returns with strictly increasing dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

/// Minimum length accepted by the return-model fitter.
pub const MIN_FIT_LEN: usize = 100;

fn check_dates(dates: &[NaiveDate], len: usize) -> Result<()> {
    if dates.len() != len {
        return Err(Error::InvalidParameter(format!("{} dates for {} values", dates.len(), len)));
    }
    if let Some(i) = (1..dates.len()).find(|&i| dates[i] <= dates[i - 1]) {
        return Err(Error::InvalidParameter(format!(
            "dates must be strictly increasing: {} follows {}",
            dates[i],
            dates[i - 1]
        )));
    }
    Ok(())
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        check_dates(&dates, values.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite return {v}")));
        }
        Ok(Self { dates, values })
    }

    /// Consecutive business days from 2000-01-03, for synthetic data.
    pub fn synthetic(values: Vec<f64>) -> Self {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), values.len());
        Self { dates, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Volatility-index closes in index points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VixSeries {
    pub dates: Vec<NaiveDate>,
    pub levels: Vec<f64>,
}

impl VixSeries {
    pub fn new(dates: Vec<NaiveDate>, levels: Vec<f64>) -> Result<Self> {
        check_dates(&dates, levels.len())?;
        if let Some(v) = levels.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("index level must be > 0, got {v}")));
        }
        Ok(Self { dates, levels })
    }

    pub fn synthetic(levels: Vec<f64>) -> Result<Self> {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), levels.len());
        Self::new(dates, levels)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    use chrono::Datelike;
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if d.weekday().number_from_monday() <= 5 {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}
