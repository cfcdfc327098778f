use serde::{Deserialize, Serialize};

use super::dopri::{Segment, Vec3};
use crate::model::{rhs, trace_unchecked, ModelParams};

/// Sub-intervals per accepted step checked for sign changes, so that
/// two close extrema inside one long step are not lost.
const SUBDIVISIONS: usize = 4;

/// Bisection stops once the bracket is this short in time.
pub const EVENT_TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    XMax,
    XMin,
    ZMin,
    ZMax,
    LambdaMax,
    LambdaMin,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::XMax,
        EventKind::XMin,
        EventKind::ZMin,
        EventKind::ZMax,
        EventKind::LambdaMax,
        EventKind::LambdaMin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::XMax => "x_max",
            EventKind::XMin => "x_min",
            EventKind::ZMin => "z_min",
            EventKind::ZMax => "z_max",
            EventKind::LambdaMax => "lambda_max",
            EventKind::LambdaMin => "lambda_min",
        }
    }

    fn channel(self) -> usize {
        match self {
            EventKind::XMax | EventKind::XMin => 0,
            EventKind::ZMin | EventKind::ZMax => 1,
            EventKind::LambdaMax | EventKind::LambdaMin => 2,
        }
    }

    fn is_max(self) -> bool {
        matches!(self, EventKind::XMax | EventKind::ZMax | EventKind::LambdaMax)
    }
}

/// A refined extremum: `value` is `x`, `z` or `Lambda` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub value: f64,
}

pub(crate) struct Detector {
    pub params: ModelParams,
    pub rtol: f64,
    pub atol: f64,
    pub with_lambda: bool,
}

impl Detector {
    /// Derivative-sign functions: `dx/dt`, `dz/dt` and `t dLambda/dt = tr J - s/t`.
    fn channels(&self, t: f64, y: &Vec3) -> [f64; 3] {
        let (fx, fz) = rhs(self.params, y[0], y[1]);
        let fl = if self.with_lambda && t > 0.0 {
            trace_unchecked(self.params, y[0], y[1]) - y[2] / t
        } else {
            f64::NAN
        };
        [fx, fz, fl]
    }

    /// Below this magnitude a derivative is treated as integration noise.
    fn floor(&self, t: f64, y: &Vec3, ch: usize) -> f64 {
        match ch {
            0 => 10.0 * (self.atol + self.rtol * y[0].abs()),
            1 => 10.0 * (self.atol + self.rtol * y[1].abs()),
            _ => 10.0 * (self.atol + self.rtol * (y[2] / t).abs()),
        }
    }

    fn value(&self, kind: EventKind, t: f64, y: &Vec3) -> f64 {
        match kind.channel() {
            0 => y[0],
            1 => y[1],
            _ => y[2] / t,
        }
    }

    /// Appends all requested events inside `seg`, in time order.
    pub fn scan(&self, seg: &Segment, kinds: &[EventKind], out: &mut Vec<Event>) {
        let mut found: Vec<Event> = Vec::new();
        let n = SUBDIVISIONS;
        let ts: Vec<f64> =
            (0..=n).map(|i| if i == n { seg.t1() } else { seg.t0 + seg.h * i as f64 / n as f64 }).collect();
        let ys: Vec<Vec3> = ts.iter().map(|&t| seg.eval(t)).collect();
        let fs: Vec<[f64; 3]> = ts.iter().zip(&ys).map(|(&t, y)| self.channels(t, y)).collect();
        for &kind in kinds {
            let ch = kind.channel();
            for i in 0..n {
                let (fa, fb) = (fs[i][ch], fs[i + 1][ch]);
                if !(fa.is_finite() && fb.is_finite()) {
                    continue;
                }
                // a maximum is a + to - crossing; a zero at the left end was
                // already reported by the previous interval
                let crosses = if kind.is_max() { fa > 0.0 && fb <= 0.0 } else { fa < 0.0 && fb >= 0.0 };
                if !crosses {
                    continue;
                }
                let floor = self.floor(ts[i], &ys[i], ch).max(self.floor(ts[i + 1], &ys[i + 1], ch));
                if fa.abs().max(fb.abs()) < floor {
                    continue;
                }
                let t = self.refine(seg, ts[i], ts[i + 1], ch, fa > 0.0);
                let y = seg.eval(t);
                found.push(Event { kind, t, value: self.value(kind, t, &y) });
            }
        }
        found.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.extend(found);
    }

    fn refine(&self, seg: &Segment, mut lo: f64, mut hi: f64, ch: usize, lo_positive: bool) -> f64 {
        while hi - lo > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = self.channels(mid, &seg.eval(mid))[ch];
            if (f > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
