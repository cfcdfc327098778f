//! Bubble metrics on limit-cycle trajectories: peaks, half-widths, lags,
//! periods, the super-exponential approximant and the critical exponents of
//! the period and amplitude.

mod exponents;
mod fit;
mod regression;

use serde::{Deserialize, Serialize};

pub use exponents::{estimate_gamma, estimate_nu, ExponentEstimate, ExponentOptions, ExponentPoint};
pub use fit::{
    fit_superexponential, fit_superexponential_price, fit_superexponential_samples, FitSpace, FitWindow, SuperExpFit,
    ALPHA, BETA,
};
pub use regression::{linear_fit, power_law_slope, LinearFit};

use crate::error::{Error, Result};
use crate::integrate::{integrate, EventKind, IntegrationConfig, Trajectory, EVENT_TIME_TOL};
use crate::model::{ModelParams, State};

/// Two successive periods within this relative distance mark the end of the transient.
pub const PERIOD_AGREEMENT: f64 = 0.01;

/// Number of trailing cycles averaged for asymptotic quantities.
pub const ASYMPTOTIC_CYCLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "cutoff")]
pub enum TransientPolicy {
    /// Keep every peak.
    None,
    /// Drop peaks before the first pair of successive periods that agree to 1%.
    Auto,
    /// Drop peaks before this absolute time.
    Cutoff(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleEvent {
    pub index: usize,
    pub t_peak: f64,
    /// `A = x(t_peak)`.
    pub amplitude: f64,
    /// Full width at half maximum; `None` when `x` never falls to `A/2`
    /// between neighbouring peaks.
    pub width: Option<f64>,
    /// Time from the rising half-maximum crossing to the peak.
    pub rise: Option<f64>,
    /// Time from the peak to the falling half-maximum crossing.
    pub fall: Option<f64>,
    pub t_zmin: Option<f64>,
    pub lag: Option<f64>,
    pub relative_lag: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleDetection {
    pub events: Vec<BubbleEvent>,
    /// Peaks before this time were treated as transient.
    pub transient_cutoff: f64,
    /// Number of peaks discarded as transient.
    pub discarded: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleStats {
    /// Intervals between successive peaks in the window.
    pub periods: Vec<f64>,
    pub count: usize,
    pub window: (f64, f64),
    pub mean_amplitude: Option<f64>,
    pub mean_width: Option<f64>,
    pub mean_period: Option<f64>,
    /// Mean width over mean period.
    pub ratio: Option<f64>,
}

/// Averages over the last complete cycles of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub period: f64,
    pub amplitude: f64,
    pub width: Option<f64>,
    /// `x` halfway between successive peaks.
    pub plateau: f64,
    pub cycles: usize,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Time in `(lo, hi)` where `x` crosses `level`, walking away from `from`
/// towards `bound` over the stored continuous extension.
fn half_crossing(traj: &Trajectory, from: f64, level: f64, bound: f64) -> Result<Option<f64>> {
    let x_at = |t: f64| traj.dense_state(t).map(|s| s.x);
    let forward = bound > from;
    let mut i = traj.segment_index(from)?;
    loop {
        let seg = &traj.segments[i];
        let far = if forward { seg.t1().min(bound) } else { seg.t0.max(bound) };
        if x_at(far)? < level {
            let (mut near, mut far) = (if forward { from.max(seg.t0) } else { from.min(seg.t1()) }, far);
            while (far - near).abs() > EVENT_TIME_TOL {
                let mid = 0.5 * (near + far);
                if x_at(mid)? < level {
                    far = mid;
                } else {
                    near = mid;
                }
            }
            return Ok(Some(0.5 * (near + far)));
        }
        if (forward && seg.t1() >= bound) || (!forward && seg.t0 <= bound) {
            return Ok(None);
        }
        if forward {
            i += 1;
            if i == traj.segments.len() {
                return Ok(None);
            }
        } else {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
        }
    }
}

fn transient_cutoff(peaks: &[f64], policy: TransientPolicy) -> Option<f64> {
    match policy {
        TransientPolicy::None => Some(f64::NEG_INFINITY),
        TransientPolicy::Cutoff(t) => Some(t),
        TransientPolicy::Auto => {
            let periods: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
            periods
                .windows(2)
                .position(|p| (p[1] - p[0]).abs() <= PERIOD_AGREEMENT * p[0])
                .map(|k| peaks[k])
        }
    }
}

/// Bubbles from the `x` maxima of a trajectory integrated with `keep_dense`.
///
/// Each peak is paired with the next `z` minimum before the following peak.
/// The half-width uses the two crossings of `A/2` bracketing the peak,
/// searched no further than the neighbouring peaks.
pub fn detect_bubbles(traj: &Trajectory, policy: TransientPolicy) -> Result<BubbleDetection> {
    if traj.segments.is_empty() {
        return Err(Error::MissingData("dense output (integrate with keep_dense)"));
    }
    if let TransientPolicy::Cutoff(t) = policy {
        if !t.is_finite() {
            return Err(Error::NonFinite("transient cutoff"));
        }
    }
    let peaks: Vec<_> = traj.events_of(EventKind::XMax).copied().collect();
    let times: Vec<f64> = peaks.iter().map(|e| e.t).collect();
    let zmins: Vec<f64> = traj.events_of(EventKind::ZMin).map(|e| e.t).collect();

    let Some(cutoff) = transient_cutoff(&times, policy) else {
        return Ok(BubbleDetection {
            events: Vec::new(),
            transient_cutoff: traj.t_final,
            discarded: peaks.len(),
            note: Some(format!(
                "no limit cycle reached: {} peaks, no two successive periods agree to {}%",
                peaks.len(),
                PERIOD_AGREEMENT * 100.0
            )),
        });
    };

    let t_start = traj.segments[0].t0;
    let mut events = Vec::new();
    let mut discarded = 0;
    for (k, p) in peaks.iter().enumerate() {
        if p.t < cutoff {
            discarded += 1;
            continue;
        }
        let prev = if k > 0 { times[k - 1] } else { t_start };
        let next = times.get(k + 1).copied().unwrap_or(traj.t_final);
        let level = 0.5 * p.value;
        let left = half_crossing(traj, p.t, level, prev)?;
        let right = half_crossing(traj, p.t, level, next)?;
        let rise = left.map(|l| p.t - l);
        let fall = right.map(|r| r - p.t);
        let width = rise.zip(fall).map(|(a, b)| a + b);
        let t_zmin = zmins.iter().copied().find(|&t| t > p.t && t < next);
        let lag = t_zmin.map(|t| t - p.t);
        events.push(BubbleEvent {
            index: events.len(),
            t_peak: p.t,
            amplitude: p.value,
            width,
            rise,
            fall,
            t_zmin,
            lag,
            relative_lag: lag.zip(width).map(|(l, w)| l / w),
        });
    }
    let note = events.is_empty().then(|| "no limit cycle reached: no peaks after the transient".to_string());
    Ok(BubbleDetection { events, transient_cutoff: cutoff.max(t_start), discarded, note })
}

/// Counts, periods and means for the events whose peak lies in `window`.
pub fn bubble_stats(events: &[BubbleEvent], window: (f64, f64)) -> BubbleStats {
    let inside: Vec<&BubbleEvent> = events.iter().filter(|e| e.t_peak >= window.0 && e.t_peak <= window.1).collect();
    let periods: Vec<f64> = inside.windows(2).map(|w| w[1].t_peak - w[0].t_peak).collect();
    let mean_width = mean(inside.iter().filter_map(|e| e.width));
    let mean_period = mean(periods.iter().copied());
    BubbleStats {
        count: inside.len(),
        window,
        mean_amplitude: mean(inside.iter().map(|e| e.amplitude)),
        mean_width,
        mean_period,
        ratio: mean_width.zip(mean_period).map(|(w, l)| w / l),
        periods,
    }
}

/// Period, amplitude, width and plateau averaged over the last
/// [`ASYMPTOTIC_CYCLES`] complete cycles.
pub fn asymptotic_cycle(traj: &Trajectory, events: &[BubbleEvent]) -> Result<CycleSummary> {
    if events.len() < 2 {
        return Err(Error::NoLimitCycle(format!("need at least 2 peaks, found {}", events.len())));
    }
    let cycles = ASYMPTOTIC_CYCLES.min(events.len() - 1);
    let tail = &events[events.len() - cycles - 1..];
    let period = mean(tail.windows(2).map(|w| w[1].t_peak - w[0].t_peak)).expect("cycles >= 1");
    let last = &tail[1..];
    let amplitude = mean(last.iter().map(|e| e.amplitude)).expect("cycles >= 1");
    let width = if last.iter().all(|e| e.width.is_some()) { mean(last.iter().filter_map(|e| e.width)) } else { None };
    let plateau = mean(
        tail.windows(2)
            .map(|w| traj.dense_state(0.5 * (w[0].t_peak + w[1].t_peak)).map(|s| s.x))
            .collect::<Result<Vec<_>>>()?,
    )
    .expect("cycles >= 1");
    Ok(CycleSummary { period, amplitude, width, plateau, cycles })
}

/// Bubble count, amplitude and width of the first bubble over `[0, t_end]`,
/// without transient removal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub g: f64,
    pub count: usize,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
}

pub fn window_summary(params: ModelParams, initial: State, t_end: f64, config: &IntegrationConfig) -> Result<WindowSummary> {
    let cfg = IntegrationConfig { initial, t_end, keep_dense: true, ..config.clone() };
    let traj = integrate(params, &cfg)?;
    let det = detect_bubbles(&traj, TransientPolicy::None)?;
    let first = det.events.first();
    Ok(WindowSummary {
        g: params.g,
        count: det.events.len(),
        amplitude: first.map(|e| e.amplitude),
        width: first.and_then(|e| e.width),
    })
}

#[cfg(test)]
mod tests;
