//! Mixed Lévy subordinated market model toolkit.
//!
//! The log-price is `X_t = mu t + rho B_t + sigma L_{V_t}` with `L` a normal
//! inverse Gaussian process and `V` an inverse Gaussian subordinator. The crate
//! provides closed-form transforms ([`model`]), ch.f. inversion and Carr–Madan
//! pricing ([`transform`]), physical-measure estimation ([`inference`]),
//! risk-neutral calibration ([`calibration`]), implied probability weighting
//! ([`pwf`]), an exact Monte Carlo simulator ([`simulator`]) and the file formats
//! behind the command-line tool ([`io`]).
//!
//! Time is measured in trading days throughout; annualized rates are divided by
//! [`TRADING_DAYS_PER_YEAR`].

pub mod calibration;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod optim;
pub mod pwf;
pub mod reparam;
pub mod simulator;
pub mod transform;

pub use error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
