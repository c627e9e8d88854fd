//! Scalar root finding on a sign-changing bracket: secant/regula-falsi
//! steps with an Illinois modification, falling back to bisection whenever
//! the proposed point leaves the bracket. No derivatives required.

use super::NumericsError;

/// Search interval plus stopping controls for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Relative width tolerance: converged when hi - lo <= tol * max(1, |x|).
    pub tol: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        RootBracket { lo, hi, tol: 1e-10, max_iter: 200 }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Finds x in [lo, hi] with f(x) = 0. The endpoints must bracket a sign
/// change. Returns the first point where f vanishes exactly or where the
/// bracket width drops below `tol * max(1, |x|)`.
pub fn find_root<F>(mut f: F, bracket: RootBracket) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let RootBracket { mut lo, mut hi, tol, max_iter } = bracket;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(NumericsError::BadBracket(lo, hi));
    }
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(NumericsError::NoSignChange { lo, hi, flo, fhi });
    }
    // Which side the previous step kept; used for the Illinois halving.
    let mut kept_lo_twice = 0i32;
    let mut kept_hi_twice = 0i32;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        let x = if secant.is_finite() && secant > lo && secant < hi { secant } else { mid };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(NumericsError::NoSignChange { lo: x, hi, flo: fx, fhi });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            kept_hi_twice += 1;
            kept_lo_twice = 0;
            if kept_hi_twice >= 2 {
                fhi *= 0.5;
            }
        } else {
            hi = x;
            fhi = fx;
            kept_lo_twice += 1;
            kept_hi_twice = 0;
            if kept_lo_twice >= 2 {
                flo *= 0.5;
            }
        }
        let scale = 1.0_f64.max(x.abs());
        if hi - lo <= tol * scale {
            return Ok(if flo.abs() <= fhi.abs() { lo } else { hi });
        }
    }
    Err(NumericsError::MaxIterationsExceeded(max_iter))
}
