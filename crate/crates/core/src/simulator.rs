//! Exact terminal-value sampling of the IG, NIG, MLSM and BLM laws and Monte
//! Carlo call pricing.
//!
//! Draws come in fixed chunks of [`CHUNK`] values. Chunk `k` uses
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, so the output depends only on
//! the seed and the sample count, never on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlmParams, IgParams, MlsmParams, Model, NigParams};

pub const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl From<u64> for RngSeed {
    fn from(s: u64) -> Self {
        RngSeed(s)
    }
}

/// Terminal values of a process over horizon `t` (days).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub t: f64,
    pub values: Vec<f64>,
}

fn chunked<F>(n: usize, seed: RngSeed, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        rng.set_stream(k as u64);
        for slot in chunk.iter_mut() {
            *slot = draw(&mut rng);
        }
    });
    out
}

/// One IG(mean, shape) variate by the Michael–Schucany–Haas transformation.
pub fn draw_ig<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let y = z * z;
    let my = mean * y;
    // larger root first; the smaller one as mean^2 / x2 avoids cancellation
    let x2 = mean + mean * my / (2.0 * shape) + mean / (2.0 * shape) * (4.0 * shape * my + my * my).sqrt();
    let x1 = mean * mean / x2;
    let u: f64 = rng.random();
    if u <= mean / (mean + x1) {
        x1
    } else {
        x2
    }
}

/// NIG increment over horizon `tau` as a normal mean–variance mixture.
pub fn draw_nig<R: Rng + ?Sized>(rng: &mut R, p: &NigParams, tau: f64) -> f64 {
    let dt = p.d * tau;
    let z = draw_ig(rng, dt / p.gamma(), dt * dt);
    let n: f64 = rng.sample(StandardNormal);
    p.m * tau + p.beta * z + z.sqrt() * n
}

fn draw_mlsm<R: Rng + ?Sized>(rng: &mut R, p: &MlsmParams, t: f64) -> f64 {
    let v = draw_ig(rng, p.ig.h * t, p.ig.l * t * t);
    let jump = if p.sigma == 0.0 { 0.0 } else { p.sigma * draw_nig(rng, &p.nig, v) };
    let z: f64 = rng.sample(StandardNormal);
    p.mu * t + p.rho * t.sqrt() * z + jump
}

fn draw_blm<R: Rng + ?Sized>(rng: &mut R, p: &BlmParams, t: f64) -> f64 {
    let jump = if p.sigma == 0.0 { 0.0 } else { p.sigma * draw_nig(rng, &p.nig, t) };
    let z: f64 = rng.sample(StandardNormal);
    p.mu * t + p.rho * t.sqrt() * z + jump
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon must be > 0, got {t}")))
    }
}

pub fn sample_ig(h: f64, l: f64, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    IgParams::new(h, l)?;
    Ok(chunked(n, seed, |rng| draw_ig(rng, h, l)))
}

pub fn sample_nig(p: &NigParams, t: f64, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    p.validate()?;
    check_horizon(t)?;
    Ok(chunked(n, seed, |rng| draw_nig(rng, p, t)))
}

pub fn sample_mlsm(p: &MlsmParams, t: f64, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    p.validate()?;
    check_horizon(t)?;
    Ok(chunked(n, seed, |rng| draw_mlsm(rng, p, t)))
}

pub fn sample_blm(p: &BlmParams, t: f64, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    p.validate()?;
    check_horizon(t)?;
    Ok(chunked(n, seed, |rng| draw_blm(rng, p, t)))
}

/// Physical-measure draws of `X_t` for either model.
pub fn sample_model(model: &Model, t: f64, n: usize, seed: RngSeed) -> Result<PathBatch> {
    let values = match model {
        Model::Mlsm(p) => sample_mlsm(p, t, n, seed)?,
        Model::Blm(p) => sample_blm(p, t, n, seed)?,
    };
    Ok(PathBatch { t, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub price: f64,
    pub stderr: f64,
}

/// Monte Carlo calls under the mean-correcting measure,
/// `S_T = s0 exp((r - K(1)) T + X_T)`. All strikes share the same draws.
pub fn mc_call_prices(
    model: &Model,
    r: f64,
    s0: f64,
    strikes: &[f64],
    t: f64,
    n_paths: usize,
    seed: RngSeed,
) -> Result<Vec<McPrice>> {
    if n_paths < 2 {
        return Err(Error::InvalidParameter("need at least 2 paths".into()));
    }
    let comp = model.compensator()?;
    let x = sample_model(model, t, n_paths, seed)?.values;
    let drift = (r - comp) * t;
    let disc = (-r * t).exp();
    let terminal: Vec<f64> = x.iter().map(|x| s0 * (drift + x).exp()).collect();
    let n = n_paths as f64;
    Ok(strikes
        .iter()
        .map(|&k| {
            let (mut s, mut s2) = (0.0, 0.0);
            for st in &terminal {
                let pay = disc * (st - k).max(0.0);
                s += pay;
                s2 += pay * pay;
            }
            let mean = s / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            McPrice { price: mean, stderr: (var / n).sqrt() }
        })
        .collect())
}

pub fn mc_call_price(
    model: &Model,
    r: f64,
    s0: f64,
    strike: f64,
    t: f64,
    n_paths: usize,
    seed: RngSeed,
) -> Result<McPrice> {
    Ok(mc_call_prices(model, r, s0, &[strike], t, n_paths, seed)?[0])
}
