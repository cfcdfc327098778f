use serde::{Deserialize, Serialize};

use super::regression::linear_fit;
use crate::error::{Error, Result};
use crate::integrate::{EventKind, Trajectory};

/// Exponent of the essential singularity.
pub const ALPHA: f64 = 0.4;
/// Exponent of the power-law prefactor.
pub const BETA: f64 = 0.2;

const FIT_SAMPLES: usize = 2000;
const PLATEAU_SAMPLES: usize = 4001;

/// Which part of the pre-peak rise enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitWindow {
    /// From the last time `x` is below twice its plateau level to the last
    /// time it is below half of `x(t_Lambda)`.
    Auto,
    /// From the last time `x` is below twice its plateau level to `t_Lambda - 1e-3`.
    PlateauToSingularity,
    /// The final `fraction` of the cycle before `t_Lambda`, ending `1e-3` short of it.
    Fraction { fraction: f64 },
    Explicit { t0: f64, t1: f64 },
}

/// Space in which the squared residuals are minimised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSpace {
    /// Linear least squares on `ln x`.
    #[default]
    Log,
    /// Nonlinear least squares on `x` itself, weighting the top of the rise.
    Price,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperExpFit {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_lambda: f64,
    pub t_peak: f64,
    pub window: (f64, f64),
    pub space: FitSpace,
    pub rms_log_residual: f64,
    pub samples: usize,
}

impl SuperExpFit {
    /// `x_app(t) = c1 (t_Lambda - t)^-beta exp(c2 (t_Lambda - t)^-alpha)`.
    pub fn eval(&self, t: f64) -> f64 {
        let tau = self.t_lambda - t;
        self.c1 * tau.powf(-self.beta) * (self.c2 * tau.powf(-self.alpha)).exp()
    }
}

/// Least-squares `(c1, c2, rms)` from samples strictly before `t_lambda`.
///
/// `ln x + beta ln(tau)` is linear in `(ln c1, c2)` with regressors `1` and `tau^-alpha`.
pub fn fit_superexponential_samples(ts: &[f64], xs: &[f64], t_lambda: f64) -> Result<(f64, f64, f64)> {
    if ts.iter().any(|&t| t >= t_lambda) {
        return Err(Error::Domain("fit window touches or passes t_Lambda".into()));
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("fit needs positive prices".into()));
    }
    let reg: Vec<f64> = ts.iter().map(|t| (t_lambda - t).powf(-ALPHA)).collect();
    let y: Vec<f64> = ts.iter().zip(xs).map(|(t, x)| x.ln() + BETA * (t_lambda - t).ln()).collect();
    let fit = linear_fit(&reg, &y)?;
    Ok((fit.intercept.exp(), fit.slope, fit.rms))
}

/// Least squares on `x` by variable projection: for fixed `c2` the best
/// `c1` is linear, leaving a one-dimensional search over `c2`.
///
/// Returns `(c1, c2, rms log residual)`.
pub fn fit_superexponential_price(ts: &[f64], xs: &[f64], t_lambda: f64) -> Result<(f64, f64, f64)> {
    let (_, c2_log, _) = fit_superexponential_samples(ts, xs, t_lambda)?;
    let shape = |c2: f64| -> Vec<f64> {
        ts.iter().map(|t| (t_lambda - t).powf(-BETA) * (c2 * (t_lambda - t).powf(-ALPHA)).exp()).collect()
    };
    let best_c1 = |f: &[f64]| {
        let num: f64 = f.iter().zip(xs).map(|(a, x)| a * x).sum();
        num / f.iter().map(|a| a * a).sum::<f64>()
    };
    let sse = |c2: f64| {
        let f = shape(c2);
        let c1 = best_c1(&f);
        f.iter().zip(xs).map(|(a, x)| (c1 * a - x).powi(2)).sum::<f64>()
    };
    // golden-section search around the log-space estimate
    let (mut lo, mut hi) = (0.0, 4.0 * c2_log.abs().max(0.5));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut fa, mut fb) = (sse(a), sse(b));
    while hi - lo > 1e-10 * hi.max(1.0) {
        if fa < fb {
            hi = b;
            (b, fb) = (a, fa);
            a = hi - r * (hi - lo);
            fa = sse(a);
        } else {
            lo = a;
            (a, fa) = (b, fb);
            b = lo + r * (hi - lo);
            fb = sse(b);
        }
    }
    let c2 = 0.5 * (lo + hi);
    let f = shape(c2);
    let c1 = best_c1(&f);
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::Domain(format!("price-space fit failed (c1 = {c1})")));
    }
    let ss: f64 = f.iter().zip(xs).map(|(a, x)| (c1 * a / x).ln().powi(2)).sum();
    Ok((c1, c2, (ss / xs.len() as f64).sqrt()))
}

fn sample(traj: &Trajectory, t0: f64, t1: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let ts: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
    let xs = ts.iter().map(|&t| traj.dense_state(t).map(|s| s.x)).collect::<Result<Vec<_>>>()?;
    Ok((ts, xs))
}

/// Last sample time in `ts` where `x < level`.
fn last_below(ts: &[f64], xs: &[f64], level: f64) -> Option<f64> {
    ts.iter().zip(xs).rev().find(|(_, &x)| x < level).map(|(&t, _)| t)
}

/// Fits the super-exponential approximant to the rise before the
/// `peak_index`-th `x` maximum (0-based), with the singularity at the last
/// `Lambda` maximum before that peak.
///
/// Needs a trajectory from `integrate_with_expansion` with `keep_dense`.
pub fn fit_superexponential(
    traj: &Trajectory,
    peak_index: usize,
    window: FitWindow,
    space: FitSpace,
) -> Result<SuperExpFit> {
    if traj.lambda.is_none() {
        return Err(Error::MissingData("expansion exponent"));
    }
    let peaks: Vec<f64> = traj.events_of(EventKind::XMax).map(|e| e.t).collect();
    let t_peak = *peaks
        .get(peak_index)
        .ok_or_else(|| Error::Domain(format!("peak {peak_index} requested, trajectory has {}", peaks.len())))?;
    let cycle_start = if peak_index > 0 { peaks[peak_index - 1] } else { traj.segments.first().map_or(0.0, |s| s.t0) };
    let t_lambda = traj
        .lambda_peak_before(t_peak)
        .filter(|e| e.t > cycle_start)
        .ok_or(Error::MissingData("Lambda maximum before the peak"))?
        .t;

    let plateau_window = || -> Result<(f64, f64)> {
        let (ts, xs) = sample(traj, cycle_start, t_lambda, PLATEAU_SAMPLES)?;
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let plateau = sorted[sorted.len() / 2];
        let t0 = last_below(&ts, &xs, 2.0 * plateau)
            .ok_or_else(|| Error::Domain("x never below twice its plateau in the cycle".into()))?;
        Ok((t0, xs[xs.len() - 1]))
    };
    let (t0, t1) = match window {
        FitWindow::Auto => {
            let (t0, x_lambda) = plateau_window()?;
            let (ts, xs) = sample(traj, t0, t_lambda, PLATEAU_SAMPLES)?;
            let t1 = last_below(&ts, &xs, 0.5 * x_lambda).unwrap_or(t0);
            (t0, t1)
        }
        FitWindow::PlateauToSingularity => (plateau_window()?.0, t_lambda - 1e-3),
        FitWindow::Fraction { fraction } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Domain(format!("window fraction must be in (0, 1], got {fraction}")));
            }
            let t1 = t_lambda - 1e-3;
            (t_lambda - fraction * (t_lambda - cycle_start), t1)
        }
        FitWindow::Explicit { t0, t1 } => {
            if t1 >= t_lambda {
                return Err(Error::Domain(format!("window end {t1} touches or passes t_Lambda = {t_lambda}")));
            }
            (t0, t1)
        }
    };
    if !(t0 < t1) {
        return Err(Error::Domain(format!("empty fit window [{t0}, {t1}]")));
    }
    let (ts, xs) = sample(traj, t0, t1, FIT_SAMPLES)?;
    let (c1, c2, rms) = match space {
        FitSpace::Log => fit_superexponential_samples(&ts, &xs, t_lambda)?,
        FitSpace::Price => fit_superexponential_price(&ts, &xs, t_lambda)?,
    };
    Ok(SuperExpFit {
        c1,
        c2,
        alpha: ALPHA,
        beta: BETA,
        t_lambda,
        t_peak,
        window: (t0, t1),
        space,
        rms_log_residual: rms,
        samples: FIT_SAMPLES,
    })
}
