//! File formats: input CSVs, the flat parameter document, the run
//! configuration and the result document shared by every command.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{OptionChain, Quote};
use crate::error::{Error, Result};
use crate::inference::{EcfFitOptions, ReturnSeries, VixSeries, DEFAULT_VIX_SCALE};
use crate::model::{BlmParams, IgParams, MlsmParams, Model, NigParams};
use crate::optim::NelderMeadOptions;
use crate::transform::{GridSpec, DEFAULT_DAMPING};

pub const SCHEMA_VERSION: u32 = 1;

fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

struct Table<'a> {
    label: &'a str,
    headers: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table<'_> {
    fn parse<'a>(label: &'a str, text: &str, required: &[&str], optional: &[&str]) -> Result<Table<'a>> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let perr = |line: u64, column: &str, reason: String| Error::Parse {
            path: label.to_string(),
            line,
            column: column.to_string(),
            reason,
        };
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| perr(1, "-", e.to_string()))?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_string())
            .collect();
        for r in required {
            if !headers.iter().any(|h| h == r) {
                return Err(perr(1, r, format!("missing column; header must contain {}", required.join(","))));
            }
        }
        if let Some(h) = headers.iter().find(|h| !required.contains(&h.as_str()) && !optional.contains(&h.as_str())) {
            return Err(perr(1, h, "unknown column".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                perr(line, "-", e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, rec));
        }
        Ok(Table { label, headers, rows })
    }

    fn err(&self, line: u64, column: &str, reason: impl Into<String>) -> Error {
        Error::Parse { path: self.label.to_string(), line, column: column.to_string(), reason: reason.into() }
    }

    fn cell<'r>(&self, rec: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        let i = self.headers.iter().position(|h| h == column)?;
        rec.get(i).filter(|s| !s.is_empty())
    }

    fn date(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<NaiveDate> {
        let s = self.cell(rec, column).ok_or_else(|| self.err(line, column, "empty field"))?;
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| self.err(line, column, format!("'{s}': {e}")))
    }

    fn number(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<f64> {
        let s = self.cell(rec, column).ok_or_else(|| self.err(line, column, "empty field"))?;
        self.parse_number(line, column, s)
    }

    fn opt_number(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<Option<f64>> {
        self.cell(rec, column).map(|s| self.parse_number(line, column, s)).transpose()
    }

    fn parse_number(&self, line: u64, column: &str, s: &str) -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| self.err(line, column, format!("'{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(line, column, format!("'{s}' is not finite")));
        }
        Ok(v)
    }

    /// Dates must be strictly increasing down the file.
    fn check_order(&self, dates: &[NaiveDate]) -> Result<()> {
        for i in 1..dates.len() {
            if dates[i] <= dates[i - 1] {
                return Err(self.err(self.rows[i].0, "date", format!("{} does not follow {}", dates[i], dates[i - 1])));
            }
        }
        Ok(())
    }
}

/// Returns CSV with header `date,log_return`.
pub fn parse_returns(label: &str, text: &str) -> Result<ReturnSeries> {
    let t = Table::parse(label, text, &["date", "log_return"], &[])?;
    let mut dates = Vec::with_capacity(t.rows.len());
    let mut values = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        dates.push(t.date(*line, rec, "date")?);
        values.push(t.number(*line, rec, "log_return")?);
    }
    t.check_order(&dates)?;
    ReturnSeries::new(dates, values)
}

/// Index CSV with header `date,level` in raw index points.
pub fn parse_vix(label: &str, text: &str) -> Result<VixSeries> {
    let t = Table::parse(label, text, &["date", "level"], &[])?;
    let mut dates = Vec::with_capacity(t.rows.len());
    let mut levels = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        dates.push(t.date(*line, rec, "date")?);
        let v = t.number(*line, rec, "level")?;
        if v <= 0.0 {
            return Err(t.err(*line, "level", format!("index level must be > 0, got {v}")));
        }
        levels.push(v);
    }
    t.check_order(&dates)?;
    VixSeries::new(dates, levels)
}

/// Chain CSV with header `quote_date,expiry_date,strike,mid` and optional
/// `bid,ask`; when both are present the mid is their average. All rows must
/// share one quote date.
pub fn parse_chain(label: &str, text: &str, s0: f64, r_ann: f64) -> Result<OptionChain> {
    let t = Table::parse(label, text, &["quote_date", "expiry_date", "strike"], &["mid", "bid", "ask"])?;
    let has_mid = t.headers.iter().any(|h| h == "mid");
    let has_quotes = t.headers.iter().any(|h| h == "bid") && t.headers.iter().any(|h| h == "ask");
    if !has_mid && !has_quotes {
        return Err(t.err(1, "mid", "need a mid column or both bid and ask"));
    }
    let mut quote_date = None;
    let mut quotes = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let qd = t.date(*line, rec, "quote_date")?;
        match quote_date {
            None => quote_date = Some(qd),
            Some(d) if d != qd => return Err(t.err(*line, "quote_date", format!("{qd} differs from {d}"))),
            _ => {}
        }
        let expiry = t.date(*line, rec, "expiry_date")?;
        if expiry <= qd {
            return Err(t.err(*line, "expiry_date", format!("{expiry} is not after the quote date")));
        }
        let strike = t.number(*line, rec, "strike")?;
        if strike <= 0.0 {
            return Err(t.err(*line, "strike", format!("strike must be > 0, got {strike}")));
        }
        let bid = t.opt_number(*line, rec, "bid")?;
        let ask = t.opt_number(*line, rec, "ask")?;
        let mid = match (bid, ask) {
            (Some(b), Some(a)) => {
                if a < b {
                    return Err(t.err(*line, "ask", format!("ask {a} below bid {b}")));
                }
                0.5 * (a + b)
            }
            _ => t.opt_number(*line, rec, "mid")?.ok_or_else(|| t.err(*line, "mid", "empty field"))?,
        };
        if mid < 0.0 {
            return Err(t.err(*line, "mid", format!("negative price {mid}")));
        }
        quotes.push(Quote { expiry, strike, mid });
    }
    let quote_date = quote_date.ok_or_else(|| Error::InsufficientData(format!("{label}: no quotes")))?;
    OptionChain::new(quote_date, s0, r_ann, quotes)
}

pub fn load_returns(path: &Path) -> Result<ReturnSeries> {
    parse_returns(&path.display().to_string(), &read_text(path)?)
}

pub fn load_vix(path: &Path) -> Result<VixSeries> {
    parse_vix(&path.display().to_string(), &read_text(path)?)
}

pub fn load_chain(path: &Path, s0: f64, r_ann: f64) -> Result<OptionChain> {
    parse_chain(&path.display().to_string(), &read_text(path)?, s0, r_ann)
}

/// Flat parameter document; `h` and `l` are present exactly for the MLSM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub mu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
}

impl From<&Model> for ParamsDoc {
    fn from(m: &Model) -> Self {
        let n = m.nig();
        let ig = m.ig();
        Self {
            mu: m.mu(),
            rho: m.rho(),
            sigma: m.sigma(),
            m: n.m,
            alpha: n.alpha,
            beta: n.beta,
            d: n.d,
            h: ig.map(|g| g.h),
            l: ig.map(|g| g.l),
        }
    }
}

impl ParamsDoc {
    pub fn to_model(&self) -> Result<Model> {
        let nig = NigParams::new(self.m, self.alpha, self.beta, self.d)?;
        let m = match (self.h, self.l) {
            (Some(h), Some(l)) => {
                Model::Mlsm(MlsmParams { mu: self.mu, rho: self.rho, sigma: self.sigma, nig, ig: IgParams::new(h, l)? })
            }
            (None, None) => Model::Blm(BlmParams { mu: self.mu, rho: self.rho, sigma: self.sigma, nig }),
            _ => return Err(Error::InvalidParameter("h and l must be given together".into())),
        };
        m.validate()?;
        Ok(m)
    }
}

/// Subordinator parameters alone, as produced by `fit-vix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IgDoc {
    pub h: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Parameters {
    Model(ParamsDoc),
    Ig(IgDoc),
}

pub fn params_to_json(m: &Model) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ParamsDoc::from(m))?)
}

pub fn params_from_json(label: &str, text: &str) -> Result<Model> {
    let doc: ParamsDoc = serde_json::from_str(text).map_err(|e| json_parse_error(label, e))?;
    doc.to_model()
}

pub fn load_params(path: &Path) -> Result<Model> {
    let text = read_text(path)?;
    let label = path.display().to_string();
    // a result document is accepted wherever a parameter file is
    if let Ok(doc) = serde_json::from_str::<ResultDocument>(&text) {
        return match doc.parameters {
            Some(Parameters::Model(p)) => p.to_model(),
            _ => Err(Error::InvalidParameter(format!("{label}: result document holds no model parameters"))),
        };
    }
    params_from_json(&label, &text)
}

/// Reads `(h, l)` from an IG document, a result document or an MLSM parameter file.
pub fn load_ig(path: &Path) -> Result<IgParams> {
    let text = read_text(path)?;
    let label = path.display().to_string();
    let p = match serde_json::from_str::<ResultDocument>(&text) {
        Ok(doc) => doc.parameters,
        Err(_) => Some(serde_json::from_str::<Parameters>(&text).map_err(|e| json_parse_error(&label, e))?),
    };
    match p {
        Some(Parameters::Ig(g)) => IgParams::new(g.h, g.l),
        Some(Parameters::Model(ParamsDoc { h: Some(h), l: Some(l), .. })) => IgParams::new(h, l),
        _ => Err(Error::InvalidParameter(format!("{label}: no h and l found"))),
    }
}

fn json_parse_error(label: &str, e: serde_json::Error) -> Error {
    Error::Parse { path: label.to_string(), line: e.line() as u64, column: e.column().to_string(), reason: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timestamps {
    /// RFC 3339, UTC.
    pub created: String,
}

impl Timestamps {
    /// Uses `SOURCE_DATE_EPOCH` when set, so documents can be made byte-stable.
    pub fn now() -> Self {
        let secs = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok());
        let t = match secs {
            Some(s) => chrono::DateTime::from_timestamp(s, 0).unwrap_or_default(),
            None => chrono::Utc::now(),
        };
        Self { created: t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub command: String,
    /// Input path to hex SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub parameters: Option<Parameters>,
    pub diagnostics: serde_json::Value,
    pub timestamps: Timestamps,
}

impl ResultDocument {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs: BTreeMap::new(),
            parameters: None,
            diagnostics: serde_json::Value::Null,
            timestamps: Timestamps::now(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Writes a CSV with a header row; numbers use the shortest exact decimal form.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.write_record(&r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FftConfig {
    /// Pricing FFT size and frequency spacing.
    pub n: usize,
    pub eta: f64,
    /// Density inversion size and half-width in standard deviations.
    pub density_n: usize,
    pub density_sds: f64,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self { n: GridSpec::DEFAULT_N, eta: GridSpec::DEFAULT_PRICING_ETA, density_n: 1 << 14, density_sds: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EcfConfig {
    pub n_starts: usize,
    pub jitter: f64,
    pub gaussian_share: f64,
    /// Number of grid points; odd.
    pub grid_points: usize,
    /// Fixed grid radius; adaptive when absent.
    pub radius: Option<f64>,
}

impl Default for EcfConfig {
    fn default() -> Self {
        let o = EcfFitOptions::default();
        Self { n_starts: o.n_starts, jitter: o.jitter, gaussian_share: o.gaussian_share, grid_points: 201, radius: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub ecf: NelderMeadOptions,
    pub calibration: NelderMeadOptions,
    /// Starts for calibration: the given point plus jittered copies.
    pub calibration_starts: usize,
    pub calibration_jitter: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            ecf: NelderMeadOptions::default(),
            calibration: crate::calibration::CalibrationOptions::default().nelder_mead,
            calibration_starts: 4,
            calibration_jitter: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PwfConfig {
    pub horizon_days: f64,
    pub grid_points: usize,
}

impl Default for PwfConfig {
    fn default() -> Self {
        Self { horizon_days: 1.0, grid_points: crate::pwf::DEFAULT_GRID_POINTS }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    pub s0: Option<f64>,
    /// Annualized continuously compounded rate.
    pub r: Option<f64>,
}

/// Run configuration (TOML). Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub trading_days_per_year: f64,
    pub damping: f64,
    pub fft: FftConfig,
    pub ecf: EcfConfig,
    pub optimizer: OptimizerConfig,
    pub vix_scale: f64,
    pub pwf: PwfConfig,
    pub market: MarketConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trading_days_per_year: crate::TRADING_DAYS_PER_YEAR,
            damping: DEFAULT_DAMPING,
            fft: FftConfig::default(),
            ecf: EcfConfig::default(),
            optimizer: OptimizerConfig::default(),
            vix_scale: DEFAULT_VIX_SCALE,
            pwf: PwfConfig::default(),
            market: MarketConfig::default(),
            seed: 1,
        }
    }
}

fn nm_ok(name: &str, o: &NelderMeadOptions) -> Result<()> {
    if o.max_iter == 0 || !(o.f_tol > 0.0) || !(o.step > 0.0 && o.step.is_finite()) {
        return Err(Error::Config(format!("{name}: max_iter >= 1, f_tol > 0 and step > 0 required")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trading_days_per_year != crate::TRADING_DAYS_PER_YEAR {
            return bad(format!("trading_days_per_year is fixed at {}", crate::TRADING_DAYS_PER_YEAR));
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return bad(format!("damping must be > 0, got {}", self.damping));
        }
        GridSpec::new(self.fft.n, self.fft.eta, 0.0).map_err(|e| Error::Config(format!("fft: {e}")))?;
        if !self.fft.density_n.is_power_of_two() || self.fft.density_n < GridSpec::MIN_N {
            return bad(format!("fft.density_n must be a power of two >= {}", GridSpec::MIN_N));
        }
        if !(self.fft.density_sds >= 4.0 && self.fft.density_sds.is_finite()) {
            return bad("fft.density_sds must be >= 4".into());
        }
        let e = &self.ecf;
        if e.n_starts == 0 || !(e.jitter >= 0.0) || !(0.0..1.0).contains(&e.gaussian_share) {
            return bad("ecf: n_starts >= 1, jitter >= 0 and gaussian_share in [0, 1) required".into());
        }
        if e.grid_points < 3 || e.grid_points % 2 == 0 {
            return bad("ecf.grid_points must be odd and >= 3".into());
        }
        if let Some(r) = e.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad("ecf.radius must be > 0".into());
            }
        }
        nm_ok("optimizer.ecf", &self.optimizer.ecf)?;
        nm_ok("optimizer.calibration", &self.optimizer.calibration)?;
        if self.optimizer.calibration_starts == 0 || !(self.optimizer.calibration_jitter >= 0.0) {
            return bad("optimizer: calibration_starts >= 1 and calibration_jitter >= 0 required".into());
        }
        if !(self.vix_scale > 0.0 && self.vix_scale.is_finite()) {
            return bad("vix_scale must be > 0".into());
        }
        if !(self.pwf.horizon_days > 0.0 && self.pwf.horizon_days.is_finite()) || self.pwf.grid_points < 5 {
            return bad("pwf: horizon_days > 0 and grid_points >= 5 required".into());
        }
        if let Some(s) = self.market.s0 {
            if !(s > 0.0 && s.is_finite()) {
                return bad("market.s0 must be > 0".into());
            }
        }
        if let Some(r) = self.market.r {
            if !r.is_finite() {
                return bad("market.r must be finite".into());
            }
        }
        Ok(())
    }

    pub fn ecf_options(&self) -> EcfFitOptions {
        EcfFitOptions {
            n_starts: self.ecf.n_starts,
            seed: self.seed,
            jitter: self.ecf.jitter,
            gaussian_share: self.ecf.gaussian_share,
            nelder_mead: self.optimizer.ecf,
            pdf_n: self.fft.density_n,
        }
    }

    pub fn calibration_options(&self) -> crate::calibration::CalibrationOptions {
        crate::calibration::CalibrationOptions {
            damping: self.damping,
            fft: GridSpec { n: self.fft.n, eta: self.fft.eta, x_center: 0.0 },
            nelder_mead: self.optimizer.calibration,
            ..Default::default()
        }
    }
}
