//! The hexagonal-lattice symbol `E(x, ξ)` and the phase-space area of its
//! sublevel sets.
//!
//! For fixed `x` the symbol is `(1 + 4u² + 4u cos(ξ - φ)) / 9` with
//! `u = |cos(x/2)|`, so each fiber of `{E <= ω}` is a single arc of length
//! `2 arccos(-t)`, `t = (9ω - 1 - 4u²) / (4u)`. Areas are integrals of the
//! arc length over the `x`-interval of one well, evaluated after the
//! substitution `x = c - r cos θ`, which makes the integrand analytic.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::roots::newton_bracketed;
use crate::scalar::Real;

/// Energy of the saddle points, the top of the conical wells.
pub fn saddle_value<T: Real>() -> T {
    T::one() / T::lit(9.0)
}

/// Default number of Gauss–Legendre nodes per fiber integral.
pub const DEFAULT_QUADRATURE_NODES: usize = 160;

/// Default number of Chebyshev samples of a [`PhaseAreaTable`].
pub const DEFAULT_TABLE_SAMPLES: usize = 512;

/// A point of the torus `[-π, π)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint<T> {
    pub x: T,
    pub xi: T,
}

impl<T: Real> TorusPoint<T> {
    /// Builds a point, reducing both coordinates into `[-π, π)`.
    pub fn new(x: T, xi: T) -> Self {
        Self { x: wrap(x), xi: wrap(xi) }
    }
}

fn wrap<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let r = a - tau * ((a + T::PI()) / tau).floor();
    if r >= T::PI() {
        r - tau
    } else {
        r
    }
}

/// `(3 + 2cos x + 2cos ξ + 2cos(x - ξ)) / 9`.
pub fn symbol_energy<T: Real>(p: TorusPoint<T>) -> T {
    let two = T::lit(2.0);
    (T::lit(3.0) + two * p.x.cos() + two * p.xi.cos() + two * (p.x - p.xi).cos()) / T::lit(9.0)
}

/// Fiber integrals for the sublevel area of the symbol.
#[derive(Clone, Debug)]
pub struct PhaseArea<T> {
    rule: GaussLegendre<T>,
}

impl<T: Real> Default for PhaseArea<T> {
    fn default() -> Self {
        Self::new(DEFAULT_QUADRATURE_NODES)
    }
}

impl<T: Real> PhaseArea<T> {
    pub fn new(nodes: usize) -> Self {
        Self { rule: GaussLegendre::new(nodes) }
    }

    fn check_level(omega: T) -> Result<T> {
        let top = saddle_value::<T>();
        let slack = T::tol(1e-14, 16.0);
        if !(omega >= -slack && omega <= top + slack) {
            return Err(Error::domain(format!("level {} outside the conical range [0, 1/9]", omega.as_f64())));
        }
        Ok(omega.max(T::zero()).min(top))
    }

    /// `x`-interval `[x_lo, x_hi] ⊂ [0, π]` of the well at `x = 2π/3`.
    fn well_interval(omega: T) -> (T, T) {
        let half = T::lit(0.5);
        let root = T::lit(3.0) * omega.sqrt();
        let u_hi = ((T::one() + root) * half).min(T::one());
        let u_lo = ((T::one() - root) * half).max(T::zero());
        let two = T::lit(2.0);
        (two * u_hi.acos(), two * u_lo.acos())
    }

    fn fiber_parameter(omega: T, x: T) -> (T, T) {
        let u = (x * T::lit(0.5)).cos().abs();
        let four = T::lit(4.0);
        ((T::lit(9.0) * omega - T::one() - four * u * u) / (four * u), u)
    }

    fn integrate_well<F: Fn(T) -> T>(&self, omega: T, fiber: F) -> T {
        let (x_lo, x_hi) = Self::well_interval(omega);
        let half = T::lit(0.5);
        let c = (x_lo + x_hi) * half;
        let r = (x_hi - x_lo) * half;
        if r <= T::zero() {
            return T::zero();
        }
        self.rule.integrate(T::zero(), T::PI(), |theta| {
            let x = c - r * theta.cos();
            fiber(x) * r * theta.sin()
        })
    }

    /// Area of `{E <= ω}` in `[-π, π)²` (both wells), `0 <= ω <= 1/9`.
    pub fn sublevel_area(&self, omega: T) -> Result<T> {
        let omega = Self::check_level(omega)?;
        let one_well = self.integrate_well(omega, |x| {
            let (t, _) = Self::fiber_parameter(omega, x);
            T::lit(2.0) * (-t.max(-T::one()).min(T::one())).acos()
        });
        Ok(T::lit(2.0) * one_well)
    }

    /// `d/dω` of [`PhaseArea::sublevel_area`]. Diverges at `ω = 1/9`.
    pub fn sublevel_area_derivative(&self, omega: T) -> Result<T> {
        let omega = Self::check_level(omega)?;
        if omega == T::zero() {
            return Ok(T::lit(4.0) * T::PI() / well_hessian_det::<T>().sqrt());
        }
        if omega >= saddle_value() {
            return Ok(T::infinity());
        }
        let one_well = self.integrate_well(omega, |x| {
            let (t, u) = Self::fiber_parameter(omega, x);
            let s = T::one() - t * t;
            if s <= T::zero() {
                T::zero()
            } else {
                T::lit(2.0) / s.sqrt() * T::lit(9.0) / (T::lit(4.0) * u)
            }
        });
        Ok(T::lit(2.0) * one_well)
    }

    /// `F0(ω) = area / (4π)`.
    pub fn f0(&self, omega: T) -> Result<T> {
        Ok(self.sublevel_area(omega)? / (T::lit(4.0) * T::PI()))
    }

    pub fn f0_derivative(&self, omega: T) -> Result<T> {
        Ok(self.sublevel_area_derivative(omega)? / (T::lit(4.0) * T::PI()))
    }
}

/// Determinant of the Hessian of `E` at a well bottom `(2π/3, -2π/3)`.
fn well_hessian_det<T: Real>() -> T {
    let x = T::lit(2.0 * PI / 3.0);
    let xi = -x;
    let nine = T::lit(9.0);
    let two = T::lit(2.0);
    let exx = -(two * x.cos() + two * (x - xi).cos()) / nine;
    let eyy = -(two * xi.cos() + two * (x - xi).cos()) / nine;
    let exy = two * (x - xi).cos() / nine;
    exx * eyy - exy * exy
}

/// `F0` sampled at Chebyshev–Lobatto points of `[0, 1/9]` with its
/// derivative, evaluated by monotone cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAreaTable<T> {
    omega: Vec<T>,
    f0: Vec<T>,
    df0: Vec<T>,
}

impl<T: Real> PhaseAreaTable<T> {
    pub fn build(samples: usize) -> Result<Self> {
        Self::build_with(samples, &PhaseArea::default())
    }

    pub fn build_with(samples: usize, area: &PhaseArea<T>) -> Result<Self> {
        if samples < 8 {
            return Err(Error::invalid("phase-area table needs at least 8 samples"));
        }
        let top = saddle_value::<T>();
        let last = T::from_count(samples - 1);
        let omega: Vec<T> = (0..samples)
            .map(|j| {
                if j == samples - 1 {
                    top
                } else {
                    top * (T::one() - (T::PI() * T::from_count(j) / last).cos()) * T::lit(0.5)
                }
            })
            .collect();
        let rows: Result<Vec<(T, T)>> = omega.par_iter().map(|&w| Ok((area.f0(w)?, area.f0_derivative(w)?))).collect();
        let (f0, df0) = rows?.into_iter().unzip();
        Self::from_columns(omega, f0, df0)
    }

    /// Validates and wraps precomputed columns.
    pub fn from_columns(omega: Vec<T>, f0: Vec<T>, df0: Vec<T>) -> Result<Self> {
        let n = omega.len();
        if n < 2 || f0.len() != n || df0.len() != n {
            return Err(Error::invalid("phase-area table columns must have equal length >= 2"));
        }
        if omega[0] != T::zero() || (omega[n - 1] - saddle_value()).abs() > T::tol(1e-15, 4.0) {
            return Err(Error::invalid("phase-area table must span [0, 1/9]"));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) || f0.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("phase-area table must be increasing"));
        }
        if f0.iter().any(|x| !x.is_finite()) || df0.iter().any(|x| x.is_nan() || *x < T::zero()) {
            return Err(Error::invalid("phase-area table has invalid entries"));
        }
        Ok(Self { omega, f0, df0 })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn columns(&self) -> (&[T], &[T], &[T]) {
        (&self.omega, &self.f0, &self.df0)
    }

    /// `F0(1/9)`, the largest level reachable inside the cone.
    pub fn max_value(&self) -> T {
        self.f0[self.f0.len() - 1]
    }

    fn locate(&self, omega: T) -> Result<usize> {
        let slack = T::tol(1e-14, 16.0);
        let top = saddle_value::<T>();
        if !(omega >= -slack && omega <= top + slack) {
            return Err(Error::domain(format!("level {} outside the conical range [0, 1/9]", omega.as_f64())));
        }
        let n = self.omega.len();
        Ok(self.omega.partition_point(|&w| w <= omega).clamp(1, n - 1) - 1)
    }

    fn segment(&self, j: usize, omega: T) -> (T, T) {
        let (w0, w1) = (self.omega[j], self.omega[j + 1]);
        let h = w1 - w0;
        let (y0, y1) = (self.f0[j], self.f0[j + 1]);
        let secant = (y1 - y0) / h;
        // Fritsch–Carlson limiter; inactive where F0 is smooth, and tames
        // the logarithmic slope at the saddle.
        let cap = T::lit(3.0) * secant;
        let m0 = self.df0[j].min(cap) * h;
        let m1 = self.df0[j + 1].min(cap) * h;
        let s = ((omega - w0) / h).max(T::zero()).min(T::one());
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (two * s3 - three * s2 + one) * y0
            + (s3 - two * s2 + s) * m0
            + (three * s2 - two * s3) * y1
            + (s3 - s2) * m1;
        let deriv = ((six * s2 - six * s) * y0
            + (three * s2 - T::lit(4.0) * s + one) * m0
            + (six * s - six * s2) * y1
            + (three * s2 - two * s) * m1)
            / h;
        (value, deriv)
    }

    pub fn eval(&self, omega: T) -> Result<T> {
        Ok(self.eval_with_derivative(omega)?.0)
    }

    /// `(F0(ω), F0'(ω))` from the interpolant.
    pub fn eval_with_derivative(&self, omega: T) -> Result<(T, T)> {
        let j = self.locate(omega)?;
        let omega = omega.max(T::zero()).min(saddle_value());
        Ok(self.segment(j, omega))
    }

    /// The `ω` with `F0(ω) = value`, for `0 <= value <= F0(1/9)`.
    pub fn inverse(&self, value: T) -> Result<T> {
        let top = self.max_value();
        let slack = T::tol(1e-14, 16.0) * top;
        if !(value >= -slack && value <= top + slack) {
            return Err(Error::domain(format!(
                "phase area {} outside [0, F0(1/9) = {}]",
                value.as_f64(),
                top.as_f64()
            )));
        }
        let n = self.omega.len();
        if value <= T::zero() {
            return Ok(T::zero());
        }
        if value >= top {
            return Ok(self.omega[n - 1]);
        }
        let j = self.f0.partition_point(|&f| f <= value).clamp(1, n - 1) - 1;
        let tol = T::tol(1e-16, 4.0);
        newton_bracketed(
            |w| {
                let (f, d) = self.segment(j, w);
                Ok((f - value, d))
            },
            self.omega[j],
            self.omega[j + 1],
            tol,
        )
    }

    /// Writes `omega,F0,dF0` rows with a `#` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# phase-area table F0(omega) = |{{E <= omega}}| / (4 pi)")?;
        writeln!(w, "# samples={}", self.omega.len())?;
        writeln!(w, "omega,F0,dF0")?;
        for i in 0..self.omega.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.omega[i].as_f64(), self.f0[i].as_f64(), self.df0[i].as_f64())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut cols = (Vec::new(), Vec::new(), Vec::new());
        for line in r.lines() {
            let line = line.map_err(|e| Error::invalid(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("omega") {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == 3 => {
                    cols.0.push(T::lit(v[0]));
                    cols.1.push(T::lit(v[1]));
                    cols.2.push(T::lit(v[2]));
                }
                _ => return Err(Error::invalid(format!("bad phase-area row {line:?}"))),
            }
        }
        Self::from_columns(cols.0, cols.1, cols.2)
    }
}
