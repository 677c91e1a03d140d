//! Derivative-free minimization: adaptive Nelder–Mead with one restart, and a
//! multi-start driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Initial simplex edge in each coordinate.
    pub step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 5000, f_tol: 1e-10, step: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Nelder–Mead with the dimension-adaptive coefficients of Gao and Han. After
/// the first convergence the simplex is rebuilt around the best vertex once; the
/// run counts as converged only if that restart also stalls within tolerance.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let mut trace = Vec::new();
    let (mut x, mut fx, mut total, mut converged) = run(&f, x0, opts, opts.max_iter, &mut trace);
    if converged {
        let (xb, fb, it, conv) = run(&f, &x, opts, opts.max_iter.saturating_sub(total), &mut trace);
        x = xb;
        fx = fb;
        total += it;
        converged = conv;
    }
    Minimum { x, f: fx, iterations: total, converged, trace }
}

fn run<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    opts: &NelderMeadOptions,
    budget: usize,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    if n == 0 {
        let v = eval(f, x0);
        return (Vec::new(), v, 0, true);
    }
    let nf = n as f64;
    let (alpha, gamma, rho, shrink) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let (alpha, gamma, rho, shrink) = if n == 1 { (1.0, 2.0, 0.5, 0.5) } else { (alpha, gamma, rho, shrink) };

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(f, v)).collect();

    let mut it = 0;
    let mut converged = false;
    while it < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();
        trace.push(fv[0]);
        if fv[0].is_finite() && (fv[n] - fv[0]).abs() <= opts.f_tol {
            converged = true;
            break;
        }
        it += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let xr = along(-alpha);
        let fr = eval(f, &xr);
        if fr < fv[0] {
            let xe = along(-alpha * gamma);
            let fe = eval(f, &xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-alpha * rho);
            let fc = eval(f, &xc);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(f, &xc);
            (xc, fc)
        };
        if fc < fr.min(fv[n]) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = simplex[0][j] + shrink * (simplex[i][j] - simplex[0][j]);
            }
            fv[i] = eval(f, &simplex[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap_or(0);
    (simplex[best].clone(), fv[best], it, converged)
}

/// Runs [`nelder_mead`] from every start in parallel; results keep start order.
pub fn multistart<F>(f: F, starts: &[Vec<f64>], opts: &NelderMeadOptions) -> Vec<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    starts.par_iter().map(|s| nelder_mead(&f, s, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
        assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_in_six_dimensions() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let m = nelder_mead(f, &[0.0; 6], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!(m.x.iter().all(|v| (v - 0.5).abs() < 1e-4), "{:?}", m.x);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.1).powi(2) };
        let m = nelder_mead(f, &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.1).abs() < 1e-4);
    }

    #[test]
    fn multistart_keeps_order() {
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2);
        let r = multistart(f, &[vec![-2.0], vec![2.0]], &NelderMeadOptions::default());
        assert!(r[0].x[0] < 0.0 && r[1].x[0] > 0.0);
    }
}
