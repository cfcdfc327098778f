//! Dormand-Prince 5(4) with PI step-size control and the standard
//! 4th-order continuous extension (Hairer, Norsett and Wanner, `DOPRI5`).

use serde::{Deserialize, Serialize};

pub(crate) const DIM: usize = 3;
pub(crate) type Vec3 = [f64; DIM];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    pub(crate) r: [Vec3; 5],
}

impl Segment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub(crate) fn eval(&self, t: f64) -> Vec3 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        std::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }
}

#[inline]
fn axpy<const N: usize>(y: &Vec3, h: f64, terms: [(f64, &Vec3); N]) -> Vec3 {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

pub(crate) struct Stepper<F: FnMut(f64, &Vec3) -> Vec3> {
    f: F,
    pub rtol: f64,
    pub atol: f64,
    /// Components taking part in the error norm.
    pub norm_dim: usize,
    pub h_max: f64,
    fac_old: f64,
    pub(crate) nfev: usize,
}

pub(crate) struct Accepted {
    pub t1: f64,
    pub y1: Vec3,
    pub k7: Vec3,
    pub seg: Segment,
    pub h_next: f64,
}

impl<F: FnMut(f64, &Vec3) -> Vec3> Stepper<F> {
    pub fn new(f: F, rtol: f64, atol: f64, norm_dim: usize, h_max: f64) -> Self {
        Self { f, rtol, atol, norm_dim, h_max, fac_old: 1e-4, nfev: 0 }
    }

    pub fn eval(&mut self, t: f64, y: &Vec3) -> Vec3 {
        self.nfev += 1;
        (self.f)(t, y)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    /// Starting step from the local Lipschitz estimate (Hairer's `hinit`).
    pub fn initial_step(&mut self, t: f64, y: &Vec3, k1: &Vec3, t_end: f64) -> f64 {
        let n = self.norm_dim as f64;
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..self.norm_dim {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (k1[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(self.h_max).min(t_end - t);
        let y1: Vec3 = std::array::from_fn(|i| y[i] + h * k1[i]);
        let k2 = self.eval(t + h, &y1);
        let mut der2: f64 = 0.0;
        for i in 0..self.norm_dim {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((k2[i] - k1[i]) / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.abs().max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        (100.0 * h).min(h1).min(self.h_max).min(t_end - t)
    }

    /// Attempts steps from `(t, y)` starting with size `h` until one is accepted.
    /// Returns `None` when the step size underflows.
    pub fn step(&mut self, t: f64, y: &Vec3, k1: &Vec3, mut h: f64, t_end: f64) -> Option<Accepted> {
        let mut rejected = false;
        loop {
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return None;
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let k2 = self.eval(t + C2 * h, &axpy(y, h, [(A21, k1)]));
            let k3 = self.eval(t + C3 * h, &axpy(y, h, [(A31, k1), (A32, &k2)]));
            let k4 = self.eval(t + C4 * h, &axpy(y, h, [(A41, k1), (A42, &k2), (A43, &k3)]));
            let k5 = self.eval(t + C5 * h, &axpy(y, h, [(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = self.eval(t + h, &axpy(y, h, [(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y1 = axpy(y, h, [(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t1 = if last { t_end } else { t + h };
            let k7 = self.eval(t1, &y1);

            let mut err = 0.0;
            for i in 0..self.norm_dim {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err += (e / self.scale(y[i], y1[i])).powi(2);
            }
            let err = (err / self.norm_dim as f64).sqrt();
            let err = if err.is_finite() { err } else { 1e10 };

            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / self.fac_old.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(self.h_max);

            if err <= 1.0 {
                self.fac_old = err.max(1e-4);
                if rejected {
                    h_new = h_new.min(h);
                }
                let ydiff: Vec3 = std::array::from_fn(|i| y1[i] - y[i]);
                let bspl: Vec3 = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
                let r = [
                    *y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                    }),
                ];
                return Some(Accepted { t1, y1, k7, seg: Segment { t0: t, h: t1 - t, r }, h_next: h_new });
            }
            rejected = true;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }
}
