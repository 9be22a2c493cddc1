//! Generalized Extreme Value fitting for merge statistics.
//!
//! Mixture-bundle scores are summarized by the mode of a GEV distribution
//! fitted by maximum likelihood. The fit uses a derivative-free simplex search
//! started from probability-weighted-moment estimates; the scale stays positive
//! through a log parameterization.

use thiserror::Error;

/// Minimum sample size for a maximum-likelihood fit.
pub const MIN_GEV_SAMPLES: usize = 20;

/// Shape magnitude below which the log-density uses the Gumbel limit.
const GUMBEL_DENSITY_EPS: f64 = 1e-12;

/// Shape magnitude below which the mode collapses to the location parameter.
const GUMBEL_MODE_EPS: f64 = 1e-8;

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Location, scale, and shape of a Generalized Extreme Value distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevParams {
    pub mu: f64,
    /// Scale, strictly positive.
    pub sigma: f64,
    pub xi: f64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GevError {
    #[error("need at least {needed} samples for a GEV fit, got {got}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("sample has no dispersion")]
    DegenerateSample,
    #[error("simplex search did not reach a finite optimum")]
    NonConvergence,
    #[error("GEV with shape {xi} has no mode")]
    NoMode { xi: f64 },
}

/// Sum of GEV log-densities over `sample`. Returns negative infinity when any
/// point falls outside the support `1 + xi (x - mu) / sigma > 0` or when the
/// scale is not a positive finite number; shapes within [`GUMBEL_DENSITY_EPS`]
/// of zero use the Gumbel limit density.
pub fn gev_log_likelihood(params: &GevParams, sample: &[f64]) -> f64 {
    if !(params.sigma > 0.0) || !params.sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    let ln_sigma = params.sigma.ln();
    let mut ll = 0.0;
    for &x in sample {
        let u = (x - params.mu) / params.sigma;
        let term = if params.xi.abs() < GUMBEL_DENSITY_EPS {
            -u - (-u).exp()
        } else {
            let t = params.xi * u;
            if 1.0 + t <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let ln1 = t.ln_1p();
            -(1.0 + 1.0 / params.xi) * ln1 - (-ln1 / params.xi).exp()
        };
        ll += term - ln_sigma;
    }
    ll
}

/// Mode of the distribution: `mu + sigma ((1 + xi)^(-xi) - 1) / xi`, taken as
/// `mu` in the Gumbel limit. Shapes at or below -1 put all density against the
/// support edge and have no mode.
pub fn gev_mode(params: &GevParams) -> Result<f64, GevError> {
    if params.xi <= -1.0 {
        return Err(GevError::NoMode { xi: params.xi });
    }
    if params.xi.abs() < GUMBEL_MODE_EPS {
        return Ok(params.mu);
    }
    Ok(params.mu + params.sigma * ((1.0 + params.xi).powf(-params.xi) - 1.0) / params.xi)
}

/// Maximum-likelihood GEV fit.
///
/// Requires at least [`MIN_GEV_SAMPLES`] points with nonzero dispersion. The
/// simplex runs at most 500 iterations to a log-likelihood tolerance of 1e-8;
/// callers treat any error as a cue to fall back to a robust location
/// statistic of the raw sample.
pub fn fit_gev_mle(sample: &[f64]) -> Result<GevParams, GevError> {
    let n = sample.len();
    if n < MIN_GEV_SAMPLES {
        return Err(GevError::TooFewSamples {
            got: n,
            needed: MIN_GEV_SAMPLES,
        });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread = sorted[n - 1] - sorted[0];
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(GevError::DegenerateSample);
    }

    let (mu0, sigma0, xi0) = pwm_init(&sorted);
    let objective = |p: &[f64; 3]| {
        let candidate = GevParams {
            mu: p[0],
            sigma: p[1].exp(),
            xi: p[2],
        };
        -gev_log_likelihood(&candidate, sample)
    };
    let mut start = [mu0, sigma0.max(1e-12).ln(), xi0];
    if !objective(&start).is_finite() {
        // A Gumbel start is feasible for any sample.
        let (loc, scale) = gumbel_moment_init(&sorted);
        start = [loc, scale.max(1e-12).ln(), 0.0];
    }
    let steps = [0.5 * sigma0.max(0.1 * spread), 0.2, 0.1];
    let (best, best_value) = nelder_mead(objective, start, steps, 500, 1e-8);
    if !best_value.is_finite() {
        return Err(GevError::NonConvergence);
    }
    Ok(GevParams {
        mu: best[0],
        sigma: best[1].exp(),
        xi: best[2],
    })
}

/// Probability-weighted-moment starting point (loc, scale, shape) computed
/// from an ascending sample.
fn pwm_init(sorted: &[f64]) -> (f64, f64, f64) {
    let n = sorted.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (idx, &x) in sorted.iter().enumerate() {
        let j = (idx + 1) as f64;
        b0 += x;
        b1 += (j - 1.0) / (n - 1.0) * x;
        b2 += (j - 1.0) * (j - 2.0) / ((n - 1.0) * (n - 2.0)) * x;
    }
    b0 /= n;
    b1 /= n;
    b2 /= n;

    let c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - std::f64::consts::LN_2 / 3f64.ln();
    let k = 7.8590 * c + 2.9554 * c * c;
    if k.abs() < 1e-6 {
        let alpha = (2.0 * b1 - b0) / std::f64::consts::LN_2;
        if alpha.is_finite() && alpha > 0.0 {
            return (b0 - EULER_MASCHERONI * alpha, alpha, 0.0);
        }
    } else {
        let g = gamma(1.0 + k);
        let alpha = (2.0 * b1 - b0) * k / (g * (1.0 - 2f64.powf(-k)));
        let loc = b0 + alpha * (g - 1.0) / k;
        if loc.is_finite() && alpha.is_finite() && alpha > 0.0 {
            return (loc, alpha, -k);
        }
    }
    let (loc, scale) = gumbel_moment_init(sorted);
    (loc, scale, 0.0)
}

/// Gumbel method-of-moments estimates, feasible for any dispersed sample.
fn gumbel_moment_init(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let scale = (6.0 * var).sqrt() / std::f64::consts::PI;
    (mean - EULER_MASCHERONI * scale, scale)
}

/// Lanczos approximation of the gamma function (g = 7, 9 terms), accurate to
/// around 1e-13 on the range the moment estimator needs.
fn gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    use std::f64::consts::PI;
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Nelder-Mead on three parameters: reflection 1, expansion 2, contraction
/// 0.5, shrink 0.5. Stops when the value spread across the simplex drops to
/// `tol` or after `max_iter` iterations; returns the best vertex.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: F,
    x0: [f64; 3],
    steps: [f64; 3],
    max_iter: usize,
    tol: f64,
) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((x0, f(&x0)));
    for i in 0..3 {
        let mut v = x0;
        v[i] += steps[i];
        simplex.push((v, f(&v)));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[3].1.is_finite() && (simplex[3].1 - simplex[0].1).abs() <= tol {
            break;
        }
        let centroid: [f64; 3] =
            std::array::from_fn(|i| (simplex[0].0[i] + simplex[1].0[i] + simplex[2].0[i]) / 3.0);
        let worst = simplex[3];
        let reflected: [f64; 3] = std::array::from_fn(|i| 2.0 * centroid[i] - worst.0[i]);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded: [f64; 3] = std::array::from_fn(|i| 3.0 * centroid[i] - 2.0 * worst.0[i]);
            let fe = f(&expanded);
            simplex[3] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            let contracted: [f64; 3] = if fr < worst.1 {
                std::array::from_fn(|i| centroid[i] + 0.5 * (reflected[i] - centroid[i]))
            } else {
                std::array::from_fn(|i| centroid[i] - 0.5 * (centroid[i] - worst.0[i]))
            };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[3] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let p: [f64; 3] = std::array::from_fn(|i| best[i] + 0.5 * (v.0[i] - best[i]));
                    *v = (p, f(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1)
}
