//! Ch.f. inversion to densities and distribution functions, and Carr–Madan
//! pricing of European calls.

mod carr_madan;
mod grid;
mod inversion;

pub use carr_madan::{carr_madan_call, model_call_prices, put_from_parity, DEFAULT_DAMPING};
pub use grid::{inv_cdf, DistributionGrid, GridSpec};
pub use inversion::{model_distribution, pdf_cdf_from_chf, Measure};
