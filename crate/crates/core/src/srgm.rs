//! NHPP software reliability growth models: Goel-Okumoto, delayed
//! S-shaped and Weibull mean value functions, least-squares fitting, and a
//! seeded event simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson as PoissonDist};

use crate::dataset::{FailureTimes, GrowthCurve};
use crate::error::{Error, Result};
use crate::simplex::{minimize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrgmKind {
    #[serde(rename = "go")]
    GoelOkumoto,
    #[serde(rename = "dss")]
    DelayedSShaped,
    Weibull,
}

impl SrgmKind {
    pub const ALL: [SrgmKind; 3] = [SrgmKind::GoelOkumoto, SrgmKind::DelayedSShaped, SrgmKind::Weibull];

    pub fn param_count(self) -> usize {
        match self {
            SrgmKind::Weibull => 3,
            _ => 2,
        }
    }

    /// Short identifier: `go`, `dss` or `weibull`.
    pub fn id(self) -> &'static str {
        match self {
            SrgmKind::GoelOkumoto => "go",
            SrgmKind::DelayedSShaped => "dss",
            SrgmKind::Weibull => "weibull",
        }
    }

    /// Display label: `GO`, `DSS` or `Weibull`.
    pub fn label(self) -> &'static str {
        match self {
            SrgmKind::GoelOkumoto => "GO",
            SrgmKind::DelayedSShaped => "DSS",
            SrgmKind::Weibull => "Weibull",
        }
    }
}

impl std::str::FromStr for SrgmKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "go" | "goel-okumoto" => Ok(SrgmKind::GoelOkumoto),
            "dss" | "delayed-s-shaped" => Ok(SrgmKind::DelayedSShaped),
            "weibull" => Ok(SrgmKind::Weibull),
            other => Err(Error::usage(format!("unknown growth model {other:?}"))),
        }
    }
}

/// `a`: expected total faults, `b`: rate (scale for Weibull), `c`: Weibull
/// shape. `c` is ignored by GO and DSS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrgmParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SrgmParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        SrgmParams { a, b, c }
    }

    pub fn two(a: f64, b: f64) -> Self {
        SrgmParams { a, b, c: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::usage(format!("parameter {name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

fn mvf_unchecked(kind: SrgmKind, p: &SrgmParams, t: f64) -> f64 {
    let bt = p.b * t;
    match kind {
        SrgmKind::GoelOkumoto => p.a * -(-bt).exp_m1(),
        SrgmKind::DelayedSShaped => p.a * (1.0 - (1.0 + bt) * (-bt).exp()),
        SrgmKind::Weibull => p.a * -(-p.b * t.powf(p.c)).exp_m1(),
    }
}

/// Expected cumulative faults by time `t`.
pub fn mvf(kind: SrgmKind, params: &SrgmParams, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::usage(format!("time {t} must be nonnegative")));
    }
    params.validate()?;
    Ok(mvf_unchecked(kind, params, t))
}

/// A fitted growth model with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrgmFit {
    pub kind: SrgmKind,
    pub params: SrgmParams,
    pub sse: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Number of starting points tried.
    pub restarts: usize,
    /// Index of the winning start.
    pub best_start: usize,
}

const MAX_ITERATIONS: usize = 10_000;
const SSE_RELATIVE_TOLERANCE: f64 = 1e-10;
/// Log-parameters are confined to this box.
const LOG_BOUND: f64 = 60.0;

/// Least-squares fit of the mean value function to the training counts.
///
/// Parameters are searched in log space with a Nelder-Mead simplex started
/// from a small grid of initial guesses; the lowest-SSE converged start
/// wins, earlier starts winning ties.
pub fn fit_srgm(train: &GrowthCurve, kind: SrgmKind) -> Result<SrgmFit> {
    let n = train.len();
    let np = kind.param_count();
    if n < np + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot fit {} with {np} parameters",
            kind.label()
        )));
    }
    let t = train.times();
    let y = train.counts();
    let n_max = y.iter().cloned().fold(f64::MIN, f64::max);
    let n_min = y.iter().cloned().fold(f64::MAX, f64::min);
    if n_max <= n_min || n_max <= 0.0 {
        return Err(Error::DegenerateData("counts show no growth".into()));
    }
    let t_max = t.iter().cloned().fold(0.0, f64::max);
    let t_min = t.iter().cloned().fold(f64::MAX, f64::min);
    if t_max <= t_min || t_max <= 0.0 {
        return Err(Error::DegenerateData("all failure times coincide".into()));
    }
    let t_mean = t.iter().sum::<f64>() / n as f64;
    let t_ref = if t_mean > 0.0 { t_mean } else { t_max };

    let to_params = |x: &[f64]| -> SrgmParams {
        let c = if np == 3 { x[2].exp() } else { 1.0 };
        SrgmParams::new(x[0].exp(), x[1].exp(), c)
    };
    let objective = |x: &[f64]| -> f64 {
        if x.iter().any(|v| v.abs() > LOG_BOUND) {
            return f64::INFINITY;
        }
        let p = to_params(x);
        let s: f64 = t
            .iter()
            .zip(&y)
            .map(|(&ti, &yi)| (mvf_unchecked(kind, &p, ti) - yi).powi(2))
            .sum();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };

    let scale: f64 = y.iter().map(|v| v * v).sum();
    let options = SimplexOptions {
        max_iterations: MAX_ITERATIONS,
        relative_tolerance: SSE_RELATIVE_TOLERANCE,
        absolute_tolerance: 1e-20 * scale,
        initial_step: 0.25,
    };

    let shapes: &[f64] = if np == 3 { &[0.5, 1.0, 2.0] } else { &[1.0] };
    let mut starts = Vec::new();
    for a_mult in [1.0, 2.0, 5.0] {
        for theta in [0.5, 1.0, 2.0] {
            for &c in shapes {
                let a = a_mult * n_max;
                let b = theta / t_ref.powf(c);
                let mut x = vec![a.ln(), b.ln()];
                if np == 3 {
                    x.push(c.ln());
                }
                starts.push(x);
            }
        }
    }

    let mut best: Option<(usize, crate::simplex::SimplexResult)> = None;
    for (i, x0) in starts.iter().enumerate() {
        let res = minimize(&objective, x0, &options);
        if !res.converged || !res.value.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => res.value < b.value,
        };
        if better {
            best = Some((i, res));
        }
    }
    let (best_start, res) = best.ok_or_else(|| Error::Convergence {
        model: kind.label().to_string(),
        restarts: starts.len(),
    })?;
    let params = to_params(&res.point);
    params.validate().map_err(|_| Error::Convergence {
        model: kind.label().to_string(),
        restarts: starts.len(),
    })?;
    Ok(SrgmFit {
        kind,
        params,
        sse: res.value,
        converged: true,
        iterations: res.iterations,
        restarts: starts.len(),
        best_start,
    })
}

/// Mean value function of a converged fit at each time.
pub fn srgm_predict(fit: &SrgmFit, times: &[f64]) -> Result<Vec<f64>> {
    if !fit.converged {
        return Err(Error::usage(format!("{} fit did not converge", fit.kind.label())));
    }
    times.iter().map(|&t| mvf(fit.kind, &fit.params, t)).collect()
}

/// Samples an NHPP realization on `[0, horizon]`.
///
/// The event count is Poisson with mean `m(horizon)`; event times are drawn
/// independently from the CDF `m(t) / m(horizon)` by bisection.
pub fn simulate_nhpp(kind: SrgmKind, params: &SrgmParams, horizon: f64, seed: u64) -> Result<FailureTimes> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::usage(format!("horizon {horizon} must be positive")));
    }
    params.validate()?;
    let total = mvf_unchecked(kind, params, horizon);
    if total.is_nan() || total <= 1e-12 {
        return Err(Error::DegenerateIntensity { expected: total });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(total)
        .map_err(|e| Error::usage(format!("invalid Poisson mean {total}: {e}")))?
        .sample(&mut rng) as usize;
    let tol = 1e-9 * horizon;
    let mut times: Vec<f64> = (0..count)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let (mut lo, mut hi) = (0.0, horizon);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mvf_unchecked(kind, params, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    times.sort_by(f64::total_cmp);
    if times.is_empty() {
        return Ok(FailureTimes::empty());
    }
    FailureTimes::new(times)
}

/// Central `level` interval of a Poisson(`mean`) count.
pub fn poisson_band(mean: f64, level: f64) -> Result<(u64, u64)> {
    let dist = PoissonDist::new(mean).map_err(|e| Error::usage(format!("invalid Poisson mean {mean}: {e}")))?;
    let tail = 0.5 * (1.0 - level);
    Ok((dist.inverse_cdf(tail), dist.inverse_cdf(1.0 - tail)))
}
