//! Adaptive integration of the price system, optionally carrying the running
//! integral of the Jacobian trace so that the expansion exponent
//! `Lambda(t) = (1/t) * int_0^t tr J dt'` comes out of the same stepper.

mod dopri;
mod events;

use serde::{Deserialize, Serialize};

pub use dopri::Segment;
pub use events::{Event, EventKind, EVENT_TIME_TOL};

use crate::error::{Error, Result};
use crate::model::{rhs, trace_unchecked, ModelParams, State, DIVERGENCE_CAP};
use dopri::{Stepper, Vec3};
use events::Detector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub t_end: f64,
    pub initial: State,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` means unbounded.
    pub max_step: Option<f64>,
    pub divergence_cap: f64,
    /// Uniform output spacing. `None` stores every accepted step.
    pub sample_dt: Option<f64>,
    pub max_steps: usize,
    /// Keep the continuous extension of every step (needed by [`locate_extrema`]).
    pub keep_dense: bool,
    /// Stop as soon as this many events of the given kind have been seen.
    pub stop_after: Option<(EventKind, usize)>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            t_end: 100.0,
            initial: State { x: 1.0, z: 0.1 },
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            divergence_cap: DIVERGENCE_CAP,
            sample_dt: None,
            max_steps: 5_000_000,
            keep_dense: false,
            stop_after: None,
        }
    }
}

impl IntegrationConfig {
    pub fn new(initial: State, t_end: f64) -> Self {
        Self { initial, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive and finite, got {}", self.t_end));
        }
        if !(self.rtol > 0.0 && self.rtol.is_finite()) || !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad(format!("tolerances must be positive, got rtol={} atol={}", self.rtol, self.atol));
        }
        if self.rtol < 1e-15 {
            return bad(format!("rtol {} is below machine precision", self.rtol));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("max_step must be positive, got {h}"));
            }
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("sample_dt must be positive, got {dt}"));
            }
            if self.t_end / dt > 1e8 {
                return bad(format!("sample_dt {dt} would produce more than 1e8 samples"));
            }
        }
        if !(self.divergence_cap > 0.0) {
            return bad(format!("divergence cap must be positive, got {}", self.divergence_cap));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        State::new(self.initial.x, self.initial.z).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// `x` or `z` exceeded the divergence cap; output ends at the last finite step.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `Lambda` at each stored time, when integrated with the expansion exponent.
    /// At `t = 0` this is the limiting value `tr J(x0, z0)`.
    pub lambda: Option<Vec<f64>>,
    pub events: Vec<Event>,
    pub status: Status,
    /// End of the integrated span (earlier than `t_end` after divergence or a stop rule).
    pub t_final: f64,
    pub steps: usize,
    pub rtol: f64,
    pub atol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
}

/// `Lambda(t)` samples plus the largest value seen and when it occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn expansion(&self) -> Option<ExpansionSeries> {
        let values = self.lambda.clone()?;
        let mut max: Option<(f64, f64)> = None;
        let samples = self.times.iter().copied().zip(values.iter().copied());
        let peaks = self.events_of(EventKind::LambdaMax).map(|e| (e.t, e.value));
        for (t, v) in samples.filter(|&(t, _)| t > 0.0).chain(peaks) {
            if max.is_none_or(|(_, m)| v > m) {
                max = Some((t, v));
            }
        }
        Some(ExpansionSeries { times: self.times.clone(), values, max })
    }

    /// Last local maximum of `Lambda` strictly before `t`.
    pub fn lambda_peak_before(&self, t: f64) -> Option<Event> {
        self.events_of(EventKind::LambdaMax).filter(|e| e.t < t).last().copied()
    }

    /// Local minimum of `Lambda` closest in time to `t`.
    pub fn lambda_min_near(&self, t: f64) -> Option<Event> {
        self.events_of(EventKind::LambdaMin).min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).copied()
    }

    pub(crate) fn segment_index(&self, t: f64) -> Result<usize> {
        if self.segments.is_empty() {
            return Err(Error::MissingData("dense output"));
        }
        let i = self.segments.partition_point(|s| s.t1() < t);
        match self.segments.get(i) {
            Some(s) if t >= s.t0 => Ok(i),
            _ => Err(Error::Domain(format!("t = {t} is outside the integrated span"))),
        }
    }

    fn segment_at(&self, t: f64) -> Result<&Segment> {
        Ok(&self.segments[self.segment_index(t)?])
    }

    /// State at any time inside the span, from the stored continuous extension.
    pub fn dense_state(&self, t: f64) -> Result<State> {
        let y = self.segment_at(t)?.eval(t);
        Ok(State { x: y[0], z: y[1] })
    }

    /// `Lambda(t)` from the continuous extension.
    pub fn dense_lambda(&self, t: f64) -> Result<f64> {
        if self.lambda.is_none() {
            return Err(Error::MissingData("expansion exponent"));
        }
        if t <= 0.0 {
            return Err(Error::Domain("Lambda needs t > 0".into()));
        }
        Ok(self.segment_at(t)?.eval(t)[2] / t)
    }
}

/// Integrates the price system alone.
pub fn integrate(params: ModelParams, config: &IntegrationConfig) -> Result<Trajectory> {
    run(params, config, false)
}

/// Integrates the price system together with `s' = tr J`, reporting
/// `Lambda = s/t` at every sample and `Lambda` extrema as events.
pub fn integrate_with_expansion(params: ModelParams, config: &IntegrationConfig) -> Result<Trajectory> {
    run(params, config, true)
}

/// Re-derives events of one kind inside `[t0, t1]` from the stored dense output.
pub fn locate_extrema(traj: &Trajectory, kind: EventKind, window: (f64, f64)) -> Result<Vec<Event>> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Ok(Vec::new());
    }
    if traj.segments.is_empty() {
        return Err(Error::MissingData("dense output"));
    }
    let with_lambda = traj.lambda.is_some();
    if matches!(kind, EventKind::LambdaMax | EventKind::LambdaMin) && !with_lambda {
        return Err(Error::MissingData("expansion exponent"));
    }
    let det = Detector { params: traj.params, rtol: traj.rtol, atol: traj.atol, with_lambda };
    let mut out = Vec::new();
    for seg in traj.segments.iter().filter(|s| s.t1() > t0 && s.t0 < t1) {
        det.scan(seg, &[kind], &mut out);
    }
    out.retain(|e| e.t >= t0 && e.t <= t1);
    Ok(out)
}

fn run(params: ModelParams, cfg: &IntegrationConfig, with_lambda: bool) -> Result<Trajectory> {
    let params = ModelParams::new(params.b, params.g)?;
    cfg.validate()?;
    let f = move |_t: f64, y: &Vec3| -> Vec3 {
        let (fx, fz) = rhs(params, y[0], y[1]);
        let tr = if with_lambda { trace_unchecked(params, y[0], y[1]) } else { 0.0 };
        [fx, fz, tr]
    };
    let norm_dim = if with_lambda { 3 } else { 2 };
    let mut stepper = Stepper::new(f, cfg.rtol, cfg.atol, norm_dim, cfg.max_step.unwrap_or(f64::INFINITY));
    let det = Detector { params, rtol: cfg.rtol, atol: cfg.atol, with_lambda };
    let kinds: &[EventKind] = if with_lambda { &EventKind::ALL } else { &EventKind::ALL[..4] };

    let State { x: x0, z: z0 } = cfg.initial;
    let mut t = 0.0;
    let mut y: Vec3 = [x0, z0, 0.0];
    let mut k1 = stepper.eval(t, &y);
    let mut h = stepper.initial_step(t, &y, &k1, cfg.t_end);

    let mut out = Output::new(with_lambda);
    out.push(0.0, &y, trace_unchecked(params, x0, z0));
    let mut next_grid = 1usize;
    let mut events: Vec<Event> = Vec::new();
    let mut segments = Vec::new();
    let mut status = Status::Completed;
    let mut steps = 0usize;
    let mut stop_count = 0usize;

    while t < cfg.t_end {
        if steps >= cfg.max_steps {
            return Err(Error::Integration { t, reason: format!("exceeded {} steps", cfg.max_steps) });
        }
        let acc = stepper
            .step(t, &y, &k1, h, cfg.t_end)
            .ok_or_else(|| Error::Integration { t, reason: "step size underflow".into() })?;
        let (x1, z1) = (acc.y1[0], acc.y1[1]);
        let finite = acc.y1.iter().all(|v| v.is_finite());
        if !finite || x1.abs() > cfg.divergence_cap || z1.abs() > cfg.divergence_cap {
            status = Status::Diverged;
            break;
        }
        steps += 1;

        let mut step_events = Vec::new();
        det.scan(&acc.seg, kinds, &mut step_events);
        let mut stop_at = None;
        if let Some((kind, count)) = cfg.stop_after {
            for e in step_events.iter().filter(|e| e.kind == kind) {
                stop_count += 1;
                if stop_count == count {
                    stop_at = Some(e.t);
                    break;
                }
            }
        }

        // merge grid samples and event times inside (t, t1]
        let t1 = acc.t1;
        let mut inserts: Vec<f64> = step_events.iter().map(|e| e.t).collect();
        if let Some(dt) = cfg.sample_dt {
            loop {
                let tg = next_grid as f64 * dt;
                if tg > t1 || tg > cfg.t_end {
                    break;
                }
                inserts.push(tg);
                next_grid += 1;
            }
            if t1 >= cfg.t_end {
                inserts.push(cfg.t_end);
            }
        } else {
            inserts.push(t1);
        }
        inserts.sort_by(f64::total_cmp);
        inserts.dedup();
        for &ts in &inserts {
            let ys = if ts == t1 { acc.y1 } else { acc.seg.eval(ts) };
            out.push(ts, &ys, f64::NAN);
        }
        events.extend(step_events);
        if cfg.keep_dense {
            segments.push(acc.seg);
        }

        t = t1;
        y = acc.y1;
        k1 = acc.k7;
        h = acc.h_next;
        if let Some(ts) = stop_at {
            events.retain(|e| e.t <= ts);
            out.truncate_after(ts);
            t = ts;
            break;
        }
    }

    Ok(Trajectory {
        params,
        times: out.times,
        states: out.states,
        lambda: out.lambda,
        events,
        status,
        t_final: t,
        steps,
        rtol: cfg.rtol,
        atol: cfg.atol,
        segments,
    })
}

struct Output {
    times: Vec<f64>,
    states: Vec<State>,
    lambda: Option<Vec<f64>>,
}

impl Output {
    fn new(with_lambda: bool) -> Self {
        Self { times: Vec::new(), states: Vec::new(), lambda: with_lambda.then(Vec::new) }
    }

    /// `lambda_at_zero` is used only for `t = 0`, where `s/t` is undefined.
    fn push(&mut self, t: f64, y: &Vec3, lambda_at_zero: f64) {
        if self.times.last().is_some_and(|&last| t <= last) {
            return;
        }
        self.times.push(t);
        self.states.push(State { x: y[0], z: y[1] });
        if let Some(l) = self.lambda.as_mut() {
            l.push(if t > 0.0 { y[2] / t } else { lambda_at_zero });
        }
    }

    fn truncate_after(&mut self, t: f64) {
        let n = self.times.partition_point(|&s| s <= t);
        self.times.truncate(n);
        self.states.truncate(n);
        if let Some(l) = self.lambda.as_mut() {
            l.truncate(n);
        }
    }
}
