//! The waning-interest event rate `lambda(t) = b/(at + 1)`, its cumulative
//! integral, and the closed-form inverse used for exact sampling.
//!
//! Time is a continuous nonnegative real in abstract units; calendar
//! conversions belong to callers. All values are immutable after
//! construction and every operation is a pure function, so parameters can
//! be shared freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest exponent passed to `exp` before `inverse_cumulative` reports
/// overflow instead of returning infinity ( `f64::MAX.ln()` is ~709.78 ).
const MAX_EXP_ARG: f64 = 709.0;

/// The pair `(a, b)` defining the event rate `lambda(t) = b/(at + 1)`.
///
/// `a >= 0` is the interest decay rate (units 1/time); `b > 0` is the
/// initial event rate (units 1/time). `a = 0` is the degenerate
/// constant-rate case: the process reduces to a homogeneous Poisson
/// process with rate `b` and exponential inter-event times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityParams {
    a: f64,
    b: f64,
}

impl IntensityParams {
    /// Validates and builds the parameter pair. Rejects `a < 0`, `b <= 0`,
    /// and non-finite values.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidParams(format!(
                "decay rate a must be finite and >= 0, got {a}"
            )));
        }
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "initial rate b must be finite and > 0, got {b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Event rate at time `t`: `b/(at + 1)`. Strictly positive and
    /// non-increasing in `t` (strictly decreasing when `a > 0`).
    pub fn intensity_at(&self, t: f64) -> Result<f64> {
        check_nonnegative_time(t)?;
        Ok(self.b / (self.a * t + 1.0))
    }

    /// Expected event count up to `t`:
    /// `(b/a) ln(at + 1)` for `a > 0`, `b t` for `a = 0`.
    ///
    /// Zero at `t = 0`, strictly increasing, continuous, and unbounded
    /// as `t -> inf`, so the inverse exists on `[0, inf)`.
    pub fn cumulative_intensity(&self, t: f64) -> Result<f64> {
        check_nonnegative_time(t)?;
        if self.a == 0.0 {
            Ok(self.b * t)
        } else {
            Ok(self.b / self.a * (self.a * t).ln_1p())
        }
    }

    /// Inverse of [`cumulative_intensity`](Self::cumulative_intensity):
    /// the time `t` with `Lambda(t) = u`, in closed form
    /// `(exp(au/b) - 1)/a` for `a > 0` and `u/b` for `a = 0`.
    ///
    /// When `a u / b` exceeds the f64 exponent range the result would be
    /// infinite; an [`Error::Overflow`] is returned instead so downstream
    /// simulation never sees a silent infinity.
    pub fn inverse_cumulative(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::Domain(format!(
                "cumulative count u must be finite and >= 0, got {u}"
            )));
        }
        if self.a == 0.0 {
            return Ok(u / self.b);
        }
        let arg = self.a * u / self.b;
        if arg > MAX_EXP_ARG {
            return Err(Error::Overflow { exponent: arg });
        }
        Ok(arg.exp_m1() / self.a)
    }

    /// Power-law tail exponent `b/a + 1` of the inter-event time
    /// distribution; see [`crate::analytic::tail_exponent`].
    pub(crate) fn gamma_exponent(&self) -> f64 {
        debug_assert!(self.a > 0.0);
        self.b / self.a + 1.0
    }
}

fn check_nonnegative_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constructor_rejects_bad_params() {
        assert!(IntensityParams::new(-0.1, 1.0).is_err());
        assert!(IntensityParams::new(0.0, 0.0).is_err());
        assert!(IntensityParams::new(0.0, -2.0).is_err());
        assert!(IntensityParams::new(f64::NAN, 1.0).is_err());
        assert!(IntensityParams::new(1.0, f64::INFINITY).is_err());
        assert!(IntensityParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn intensity_examples() {
        let p = IntensityParams::new(0.0, 2.0).unwrap();
        assert_eq!(p.intensity_at(5.0).unwrap(), 2.0);

        let p = IntensityParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.intensity_at(0.0).unwrap(), 1.0);

        let p = IntensityParams::new(1.0, 3.0).unwrap();
        assert_eq!(p.intensity_at(2.0).unwrap(), 1.0);

        assert!(p.intensity_at(-1.0).is_err());
    }

    #[test]
    fn cumulative_examples() {
        let p = IntensityParams::new(0.0, 2.0).unwrap();
        assert_eq!(p.cumulative_intensity(3.0).unwrap(), 6.0);

        let p = IntensityParams::new(1.0, 1.0).unwrap();
        let t = std::f64::consts::E - 1.0;
        assert!((p.cumulative_intensity(t).unwrap() - 1.0).abs() < 1e-15);

        let p = IntensityParams::new(2.0, 4.0).unwrap();
        let t = (std::f64::consts::E - 1.0) / 2.0;
        assert!((p.cumulative_intensity(t).unwrap() - 2.0).abs() < 1e-15);

        assert!(p.cumulative_intensity(-0.5).is_err());
    }

    #[test]
    fn inverse_examples() {
        let p = IntensityParams::new(0.0, 2.0).unwrap();
        assert_eq!(p.inverse_cumulative(6.0).unwrap(), 3.0);

        let p = IntensityParams::new(1.0, 1.0).unwrap();
        let t = p.inverse_cumulative(1.0).unwrap();
        assert!((t - (std::f64::consts::E - 1.0)).abs() < 1e-12);

        assert!(p.inverse_cumulative(-1.0).is_err());
    }

    #[test]
    fn inverse_overflow_is_an_error() {
        let p = IntensityParams::new(2.0, 1.0).unwrap();
        match p.inverse_cumulative(1e6) {
            Err(Error::Overflow { exponent }) => assert!(exponent > MAX_EXP_ARG),
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn small_a_limit_matches_homogeneous() {
        let b = 2.5;
        let t = 7.0;
        let p = IntensityParams::new(1e-10, b).unwrap();
        let lam = p.cumulative_intensity(t).unwrap();
        assert!((lam - b * t).abs() <= 1e-6 * b * t);
    }

    /// Adaptive Simpson on [0, t]; independent check that Lambda is the
    /// integral of lambda.
    fn simpson_intensity(p: &IntensityParams, t: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            lo: f64,
            hi: f64,
            flo: f64,
            fmid: f64,
            fhi: f64,
            whole: f64,
            depth: u32,
        ) -> f64 {
            let mid = 0.5 * (lo + hi);
            let lm = 0.5 * (lo + mid);
            let rm = 0.5 * (mid + hi);
            let flm = f(lm);
            let frm = f(rm);
            let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            let both = left + right;
            if depth == 0 || (both - whole).abs() <= 1e-10 * both.abs() {
                both + (both - whole) / 15.0
            } else {
                rec(f, lo, mid, flo, flm, fmid, left, depth - 1)
                    + rec(f, mid, hi, fmid, frm, fhi, right, depth - 1)
            }
        }
        let f = |x: f64| p.intensity_at(x).unwrap();
        let mid = 0.5 * t;
        let (flo, fmid, fhi) = (f(0.0), f(mid), f(t));
        let whole = t / 6.0 * (flo + 4.0 * fmid + fhi);
        rec(&f, 0.0, t, flo, fmid, fhi, whole, 14)
    }

    proptest! {
        #[test]
        fn roundtrip_inverse_of_cumulative(
            a in 0.0f64..10.0,
            b in 0.01f64..10.0,
            t in 0.0f64..1e6,
        ) {
            let p = IntensityParams::new(a, b).unwrap();
            let u = p.cumulative_intensity(t).unwrap();
            let back = p.inverse_cumulative(u).unwrap();
            prop_assert!((back - t).abs() <= 1e-9 * (1.0 + t));
        }

        #[test]
        fn intensity_monotone_decay(
            a in 0.0f64..10.0,
            b in 0.01f64..10.0,
            t1 in 0.0f64..1e5,
            dt in 1e-6f64..1e5,
        ) {
            let p = IntensityParams::new(a, b).unwrap();
            let l1 = p.intensity_at(t1).unwrap();
            let l2 = p.intensity_at(t1 + dt).unwrap();
            prop_assert!(l2 <= l1);
            if a > 0.0 {
                prop_assert!(l2 < l1);
            }
        }

        #[test]
        fn cumulative_matches_quadrature(
            a in 0.0f64..5.0,
            b in 0.01f64..5.0,
            t in 0.01f64..100.0,
        ) {
            let p = IntensityParams::new(a, b).unwrap();
            let lam = p.cumulative_intensity(t).unwrap();
            let quad = simpson_intensity(&p, t);
            prop_assert!((lam - quad).abs() <= 1e-8 * lam.max(1e-12));
        }
    }
}
