use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regression::linear_fit;
use crate::equilibria::critical_bc;
use crate::error::{Error, Result};
use crate::integrate::{integrate, EventKind, IntegrationConfig, Status};
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentOptions {
    pub initial: State,
    /// Peaks integrated per grid point; the last few cycles give the asymptotic value.
    pub peaks: usize,
    /// Time budget per grid point.
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        Self { initial: State { x: 1.0, z: 0.1 }, peaks: 20, t_max: 1e5, rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    /// Grid value as given (`Delta` for the period, `g` for the amplitude).
    pub param: f64,
    /// Measured period or amplitude, when available.
    pub observable: Option<f64>,
    /// Why the point was left out of the regression.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub points: Vec<ExponentPoint>,
    /// For the period exponent, the critical `b` the offsets are measured from.
    pub reference: Option<f64>,
}

/// Mean period and amplitude over the last three cycles of a run stopped
/// after `opts.peaks` maxima.
fn asymptotics(params: ModelParams, opts: &ExponentOptions) -> std::result::Result<(f64, f64), String> {
    let cfg = IntegrationConfig {
        rtol: opts.rtol,
        atol: opts.atol,
        stop_after: Some((EventKind::XMax, opts.peaks)),
        ..IntegrationConfig::new(opts.initial, opts.t_max)
    };
    let traj = integrate(params, &cfg).map_err(|e| e.to_string())?;
    if traj.status == Status::Diverged {
        return Err("trajectory diverged".into());
    }
    let peaks: Vec<(f64, f64)> = traj.events_of(EventKind::XMax).map(|e| (e.t, e.value)).collect();
    if peaks.len() < 4 {
        return Err(format!("only {} peaks within t = {}", peaks.len(), opts.t_max));
    }
    let tail = &peaks[peaks.len() - 4..];
    let period = (tail[3].0 - tail[0].0) / 3.0;
    let amplitude = tail[1..].iter().map(|p| p.1).sum::<f64>() / 3.0;
    Ok((period, amplitude))
}

fn regress(points: Vec<ExponentPoint>, abscissa: impl Fn(f64) -> f64, reference: Option<f64>) -> Result<ExponentEstimate> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.excluded.is_none())
        .filter_map(|p| p.observable.map(|o| (abscissa(p.param).ln(), o.ln())))
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = used.iter().copied().unzip();
    let fit = linear_fit(&lx, &ly).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("{m} ({} of {} grid points usable)", used.len(), points.len())),
        other => other,
    })?;
    Ok(ExponentEstimate { value: -fit.slope, stderr: fit.slope_stderr, n_points: used.len(), points, reference })
}

/// Period exponent: `L ~ Delta^-nu` with `Delta = b - bc(g)`.
///
/// Grid points run concurrently; results keep grid order.
pub fn estimate_nu(g: f64, deltas: &[f64], opts: &ExponentOptions) -> Result<ExponentEstimate> {
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Domain(format!("offsets must be positive, got {d}")));
    }
    let bc = critical_bc(g)?;
    let points = deltas
        .par_iter()
        .map(|&d| {
            let params = ModelParams { b: bc + d, g };
            match asymptotics(params, opts) {
                Ok((period, _)) => ExponentPoint { param: d, observable: Some(period), excluded: None },
                Err(why) => ExponentPoint { param: d, observable: None, excluded: Some(why) },
            }
        })
        .collect();
    regress(points, |d| d, Some(bc))
}

/// Amplitude exponent: `A ~ |g|^-gamma` as `g -> 0-` at fixed `b`.
pub fn estimate_gamma(b: f64, gs: &[f64], opts: &ExponentOptions) -> Result<ExponentEstimate> {
    if let Some(g) = gs.iter().find(|g| !(**g < 0.0 && g.is_finite())) {
        return Err(Error::Domain(format!("g values must be negative, got {g}")));
    }
    let points = gs
        .par_iter()
        .map(|&g| match asymptotics(ModelParams { b, g }, opts) {
            Ok((_, amplitude)) => ExponentPoint { param: g, observable: Some(amplitude), excluded: None },
            Err(why) => ExponentPoint { param: g, observable: None, excluded: Some(why) },
        })
        .collect();
    regress(points, f64::abs, None)
}
