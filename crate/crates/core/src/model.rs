//! The planar asset/bond system
//!
//! ```text
//! dx/dt = x - x^2 exp(-b x z)
//! dz/dt = z - z^2 exp(-g x)
//! ```
//!
//! `x` is the dimensionless asset price and `z` the dimensionless bond price.
//! Everything here is a pure function of `(ModelParams, State)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent arguments are clamped to `[-EXP_ARG_LIMIT, EXP_ARG_LIMIT]`.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// States beyond this magnitude are reported as divergent.
pub const DIVERGENCE_CAP: f64 = 1e300;

/// Control parameters: `b` is the fundamental log-price rate, `g` the log-discount rate.
///
/// The economically standard regime is `b >= 0`, `g <= 0`, but nothing
/// here enforces it; the analysis deliberately continues into `g > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub b: f64,
    pub g: f64,
}

impl ModelParams {
    pub fn new(b: f64, g: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::NonFinite("b"));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("g"));
        }
        Ok(Self { b, g })
    }
}

/// Instantaneous `(x, z)` price pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub z: f64,
}

impl State {
    /// Validated constructor: both prices finite and non-negative.
    pub fn new(x: f64, z: f64) -> Result<Self> {
        if !x.is_finite() || !z.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        if x < 0.0 || z < 0.0 {
            return Err(Error::Domain(format!("prices must be non-negative, got ({x}, {z})")));
        }
        Ok(Self { x, z })
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

/// 2x2 Jacobian `[[j11, j12], [j21, j22]]` of the vector field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianMatrix {
    pub j11: f64,
    pub j12: f64,
    pub j21: f64,
    pub j22: f64,
}

impl JacobianMatrix {
    pub fn trace(&self) -> f64 {
        self.j11 + self.j22
    }

    pub fn determinant(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j21
    }

    /// Eigenvalues from the characteristic polynomial, ordered by
    /// descending real part (then descending imaginary part).
    pub fn eigenvalues(&self) -> [num_complex::Complex64; 2] {
        use num_complex::Complex64;
        let half_tr = 0.5 * self.trace();
        // (tr/2)^2 - det, written to avoid cancellation when j11 ~ j22
        let half_diff = 0.5 * (self.j11 - self.j22);
        let disc = half_diff * half_diff + self.j12 * self.j21;
        if disc >= 0.0 {
            let r = disc.sqrt();
            [Complex64::new(half_tr + r, 0.0), Complex64::new(half_tr - r, 0.0)]
        } else {
            let w = (-disc).sqrt();
            [Complex64::new(half_tr, w), Complex64::new(half_tr, -w)]
        }
    }
}

#[inline]
pub(crate) fn clamped_exp(arg: f64) -> f64 {
    arg.clamp(-EXP_ARG_LIMIT, EXP_ARG_LIMIT).exp()
}

fn check(s: State) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if s.x.abs() > DIVERGENCE_CAP || s.z.abs() > DIVERGENCE_CAP {
        return Err(Error::Diverged { t: f64::NAN, last: s });
    }
    Ok(())
}

/// Unchecked right-hand side used by the integrator's inner loop.
///
/// `x^2 e` is evaluated as `x (x e)` so that the product stays finite
/// whenever `x` itself is below the divergence cap.
#[inline]
pub(crate) fn rhs(p: ModelParams, x: f64, z: f64) -> (f64, f64) {
    let ex = clamped_exp(-p.b * x * z);
    let ez = clamped_exp(-p.g * x);
    (x - x * (x * ex), z - z * (z * ez))
}

#[inline]
pub(crate) fn trace_unchecked(p: ModelParams, x: f64, z: f64) -> f64 {
    let ex = clamped_exp(-p.b * x * z);
    let ez = clamped_exp(-p.g * x);
    let xe = x * ex;
    // j11 = 1 - 2 x e + b z x (x e)
    let j11 = 1.0 - 2.0 * xe + p.b * z * x * xe;
    let j22 = 1.0 - 2.0 * z * ez;
    j11 + j22
}

pub fn vector_field(params: ModelParams, s: State) -> Result<(f64, f64)> {
    check(s)?;
    Ok(rhs(params, s.x, s.z))
}

pub fn jacobian(params: ModelParams, s: State) -> Result<JacobianMatrix> {
    check(s)?;
    let ModelParams { b, g } = params;
    let State { x, z } = s;
    let ex = clamped_exp(-b * x * z);
    let ez = clamped_exp(-g * x);
    let xe = x * ex;
    Ok(JacobianMatrix {
        j11: 1.0 - 2.0 * xe + b * z * x * xe,
        j12: b * x * x * xe,
        j21: g * z * z * ez,
        j22: 1.0 - 2.0 * z * ez,
    })
}

/// Trace of the Jacobian; the integrand of the expansion exponent.
pub fn jacobian_trace(params: ModelParams, s: State) -> Result<f64> {
    check(s)?;
    Ok(trace_unchecked(params, s.x, s.z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(b: f64, g: f64) -> ModelParams {
        ModelParams::new(b, g).unwrap()
    }

    #[test]
    fn trivial_point_is_stationary() {
        for (b, g) in [(0.0, 0.0), (1.0, -0.3), (7.5, 2.0)] {
            let (fx, fz) = vector_field(p(b, g), State { x: 1.0, z: 0.0 }).unwrap();
            assert_eq!((fx, fz), (0.0, 0.0));
        }
    }

    #[test]
    fn decoupled_logistic() {
        let (fx, fz) = vector_field(p(0.0, 0.0), State { x: 0.5, z: 1.0 }).unwrap();
        assert_abs_diff_eq!(fx, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(fz, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unstable_focus_location_is_nearly_stationary() {
        // the rounded coordinates leave |fx| ~ 0.23 because fx is steep in z,
        // so compare against the size of each term instead
        let (x, z) = (58.26, 0.174);
        let (fx, fz) = vector_field(p(0.4006, -0.03), State { x, z }).unwrap();
        assert!(fx.abs() / x < 1e-2 && fz.abs() / z < 1e-2, "({fx}, {fz})");
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian(p(0.0, 0.0), State { x: 1.0, z: 1.0 }).unwrap();
        assert_eq!((j.j11, j.j12, j.j21, j.j22), (-1.0, 0.0, 0.0, -1.0));
        let j = jacobian(p(0.7, -0.2), State { x: 0.0, z: 0.0 }).unwrap();
        assert_eq!((j.j11, j.j12, j.j21, j.j22), (1.0, 0.0, 0.0, 1.0));

        let j = jacobian(p(0.4006, -0.03), State { x: 2.928, z: 0.916 }).unwrap();
        let ev = j.eigenvalues();
        assert!(ev[0].im == 0.0);
        assert_abs_diff_eq!(ev[0].re, -0.022, epsilon = 1e-2);
        assert_abs_diff_eq!(ev[1].re, -0.903, epsilon = 1e-2);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(jacobian_trace(p(0.0, 0.0), State { x: 1.0, z: 1.0 }).unwrap(), -2.0);
        let t = jacobian_trace(p(0.4006, -0.03), State { x: 58.26, z: 0.174 }).unwrap();
        assert_abs_diff_eq!(t, 2.06, epsilon = 0.05);
        let e2 = std::f64::consts::E.powi(2);
        let gc = (2f64.ln() - 2.0) / e2;
        let t = jacobian_trace(p(1.0, gc), State { x: e2, z: 2.0 / e2 }).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ModelParams::new(f64::NAN, 0.0).is_err());
        assert!(vector_field(p(0.1, 0.1), State { x: f64::INFINITY, z: 1.0 }).is_err());
        assert!(jacobian(p(0.1, 0.1), State { x: 1.0, z: f64::NAN }).is_err());
        assert!(matches!(
            vector_field(p(0.1, 0.1), State { x: 1e301, z: 1.0 }),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn huge_arguments_stay_finite() {
        let (fx, fz) = vector_field(p(1.0, 0.1), State { x: 1e200, z: 1e200 }).unwrap();
        assert!(fx.is_finite() && fz.is_finite());
        let (fx, _) = vector_field(p(1.0, -0.1), State { x: 1e-300, z: 1e299 }).unwrap();
        assert!(fx.is_finite());
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_differences(
            b in 0.0..2.0f64, g in -0.3..0.3f64, x in 1e-3..10.0f64, z in 1e-3..10.0f64,
        ) {
            let params = p(b, g);
            let j = jacobian(params, State { x, z }).unwrap();
            let h = 1e-6;
            let f = |x: f64, z: f64| rhs(params, x, z);
            let (fxp, fzp) = f(x + h, z);
            let (fxm, fzm) = f(x - h, z);
            let (gxp, gzp) = f(x, z + h);
            let (gxm, gzm) = f(x, z - h);
            let fd = [
                (j.j11, (fxp - fxm) / (2.0 * h)),
                (j.j21, (fzp - fzm) / (2.0 * h)),
                (j.j12, (gxp - gxm) / (2.0 * h)),
                (j.j22, (gzp - gzm) / (2.0 * h)),
            ];
            for (exact, approx) in fd {
                // relative with an absolute floor for entries near zero
                let scale = exact.abs().max(1.0);
                prop_assert!((exact - approx).abs() <= 1e-5 * scale, "{exact} vs {approx}");
            }
        }
    }
}
