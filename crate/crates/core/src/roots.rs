//! Scalar root finding on brackets.

use crate::error::{Error, Result};

#[inline]
fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `width`.
///
/// Returns the midpoint of the final bracket, or an endpoint if `f` vanishes
/// exactly there.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, width: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !opposite(flo, fhi) {
        return Err(Error::NoBracket {
            what: "bisection",
            lo,
            hi,
        });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::NonFinite {
                context: "bisection",
            });
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if opposite(flo, fm) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Err(Error::NoConvergence {
        what: "bisection",
        iterations: max_iter,
    })
}

/// Illinois-modified false position.
///
/// Stops when `|f| <= ftol` or the bracket is narrower than `xtol`.
pub fn illinois<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !opposite(flo, fhi) {
        return Err(Error::NoBracket {
            what: "false position",
            lo,
            hi,
        });
    }
    // which end was retained on the previous step: -1 lo, +1 hi
    let mut side = 0i8;
    for _ in 0..max_iter {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::NonFinite {
                context: "false position",
            });
        }
        if fx.abs() <= ftol || hi - lo <= xtol {
            return Ok(x);
        }
        if opposite(flo, fx) {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence {
        what: "false position",
        iterations: max_iter,
    })
}

/// Indices `i` such that `values[i]` and `values[i + 1]` have strictly
/// opposite signs.
pub fn sign_changes(values: &[f64]) -> impl Iterator<Item = usize> + '_ {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| opposite(w[0], w[1]))
        .map(|(i, _)| i)
}
