//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITER: usize = 200;

/// Finds a root of `f` in `[a, b]` given a sign change, using Newton steps
/// that fall back to bisection whenever they leave the bracket or stall.
///
/// `f` returns the value and derivative. Converges when the step or the
/// bracket is below `tol`.
pub fn newton_bracketed<T, F>(mut f: F, a: T, b: T, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let flo = f(lo)?.0;
    if flo == T::zero() {
        return Ok(lo);
    }
    let fhi = f(hi)?.0;
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{}, {}] (f = {}, {})",
            lo.as_f64(),
            hi.as_f64(),
            flo.as_f64(),
            fhi.as_f64()
        )));
    }
    let lo_negative = flo < T::zero();
    let half = T::lit(0.5);
    let mut x = (lo + hi) * half;
    let mut prev_width = hi - lo;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x)?;
        if fx == T::zero() {
            return Ok(x);
        }
        if (fx < T::zero()) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= tol {
            return Ok((lo + hi) * half);
        }
        let newton = x - fx / dfx;
        let stalled = width > half * prev_width;
        let next = if dfx != T::zero() && newton > lo && newton < hi && !stalled { newton } else { (lo + hi) * half };
        prev_width = width;
        if (next - x).abs() <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootFinding(format!("no convergence on [{}, {}]", lo.as_f64(), hi.as_f64())))
}

/// Plain bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<T, F>(mut f: F, a: T, b: T, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let flo = f(lo)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    let fhi = f(hi)?;
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootFinding(format!("no sign change on [{}, {}]", lo.as_f64(), hi.as_f64())));
    }
    let lo_negative = flo < T::zero();
    let half = T::lit(0.5);
    for _ in 0..MAX_ITER {
        let mid = (lo + hi) * half;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm < T::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_cubic_root() {
        let r = newton_bracketed(|x: f64| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_survives_zero_derivative() {
        // f'(0) = 0 at the first midpoint of [-1, 1]
        let r = newton_bracketed(|x: f64| Ok((x * x * x - 0.001, 3.0 * x * x)), -1.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bisect(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn bisection_matches_cosine_zero() {
        let r = bisect(|x: f64| Ok(x.cos()), 1.0, 2.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }
}
