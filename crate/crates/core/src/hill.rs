//! One-dimensional Hill operator `-ψ'' + Vψ` on the unit edge.
//!
//! Fundamental solutions are integrated with fixed-step RK4. The
//! λ-derivative of the discriminant comes from the variational system
//! `w'' = (V - λ) w - y`, integrated alongside.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::roots::{bisect, newton_bracketed};
use crate::scalar::Real;

/// Default number of RK4 steps on `[0, 1]`.
pub const DEFAULT_STEPS: usize = 2048;

/// Minimum number of samples accepted for a sampled potential.
pub const MIN_POTENTIAL_SAMPLES: usize = 64;

/// Default number of intervals of a [`DiscriminantTable`].
pub const DEFAULT_TABLE_INTERVALS: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind<T> {
    Zero,
    /// `V(t) = amplitude * cos(2πt)`.
    Cosine {
        amplitude: T,
    },
    /// Linear interpolation between samples `(t_i, v_i)` covering `[0, 1]`.
    Sampled {
        t: Vec<T>,
        v: Vec<T>,
    },
}

/// An edge potential, symmetric about `t = 1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HillPotential<T> {
    kind: PotentialKind<T>,
    asymmetry: T,
}

impl<T: Real> HillPotential<T> {
    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero, asymmetry: T::zero() }
    }

    pub fn cosine(amplitude: T) -> Self {
        Self { kind: PotentialKind::Cosine { amplitude }, asymmetry: T::zero() }
    }

    /// Builds a sampled potential. Samples must be finite, strictly
    /// increasing in `t`, span `[0, 1]` and number at least
    /// [`MIN_POTENTIAL_SAMPLES`]. The result is symmetrized,
    /// `V(t) <- (V(t) + V(1 - t)) / 2`; the largest correction is kept as
    /// [`HillPotential::asymmetry`].
    pub fn sampled(t: Vec<T>, v: Vec<T>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::invalid(format!("potential has {} abscissae but {} values", t.len(), v.len())));
        }
        if t.len() < MIN_POTENTIAL_SAMPLES {
            return Err(Error::invalid(format!(
                "potential needs at least {MIN_POTENTIAL_SAMPLES} samples, got {}",
                t.len()
            )));
        }
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::invalid("potential samples must be finite"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("potential abscissae must be strictly increasing"));
        }
        let edge_tol = T::tol(1e-9, 16.0);
        let last = t.len() - 1;
        if t[0].abs() > edge_tol || (t[last] - T::one()).abs() > edge_tol {
            return Err(Error::invalid(format!(
                "potential samples must cover [0, 1], got [{}, {}]",
                t[0].as_f64(),
                t[last].as_f64()
            )));
        }
        let mut t = t;
        t[0] = T::zero();
        t[last] = T::one();

        let mirrored: Vec<T> = t.iter().map(|&ti| interpolate(&t, &v, T::one() - ti)).collect();
        let mut asymmetry = T::zero();
        let symmetric: Vec<T> = v
            .iter()
            .zip(&mirrored)
            .map(|(&a, &b)| {
                asymmetry = asymmetry.max((a - b).abs());
                (a + b) * T::lit(0.5)
            })
            .collect();
        let scale = symmetric.iter().fold(T::one(), |m, x| m.max(x.abs()));
        if asymmetry > T::lit(1e-6) * scale {
            log::warn!("potential is not symmetric about t = 1/2 (defect {:e}); symmetrized", asymmetry.as_f64());
        }
        Ok(Self { kind: PotentialKind::Sampled { t, v: symmetric }, asymmetry })
    }

    /// Parses `t,V` rows. Blank lines, `#` comments and a non-numeric
    /// header line are skipped; commas or whitespace separate columns.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse::<f64>().ok()).collect();
            match parsed {
                Some(xs) if xs.len() >= 2 => {
                    t.push(T::lit(xs[0]));
                    v.push(T::lit(xs[1]));
                }
                None if t.is_empty() => continue,
                _ => {
                    return Err(Error::invalid(format!(
                        "potential line {}: expected two numeric columns, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::sampled(t, v)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn kind(&self) -> &PotentialKind<T> {
        &self.kind
    }

    /// Largest `|V(t) - V(1 - t)|` of the raw samples (zero for analytic
    /// potentials).
    pub fn asymmetry(&self) -> T {
        self.asymmetry
    }

    pub fn value(&self, t: T) -> T {
        match &self.kind {
            PotentialKind::Zero => T::zero(),
            PotentialKind::Cosine { amplitude } => *amplitude * (T::TAU() * t).cos(),
            PotentialKind::Sampled { t: ts, v } => interpolate(ts, v, t),
        }
    }

    pub fn sup_norm(&self) -> T {
        match &self.kind {
            PotentialKind::Zero => T::zero(),
            PotentialKind::Cosine { amplitude } => amplitude.abs(),
            PotentialKind::Sampled { v, .. } => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
        }
    }

    pub fn min_value(&self) -> T {
        match &self.kind {
            PotentialKind::Zero => T::zero(),
            PotentialKind::Cosine { amplitude } => -amplitude.abs(),
            PotentialKind::Sampled { v, .. } => v.iter().fold(T::infinity(), |m, x| m.min(*x)),
        }
    }

    /// Short human-readable description (`zero`, `cosine:1`, `sampled:128`).
    pub fn describe(&self) -> String {
        match &self.kind {
            PotentialKind::Zero => "zero".to_string(),
            PotentialKind::Cosine { amplitude } => format!("cosine:{}", amplitude),
            PotentialKind::Sampled { t, .. } => format!("sampled:{}", t.len()),
        }
    }
}

fn interpolate<T: Real>(ts: &[T], vs: &[T], t: T) -> T {
    let n = ts.len();
    if t <= ts[0] {
        return vs[0];
    }
    if t >= ts[n - 1] {
        return vs[n - 1];
    }
    let j = ts.partition_point(|&x| x <= t).clamp(1, n - 1);
    let (t0, t1) = (ts[j - 1], ts[j]);
    let w = (t - t0) / (t1 - t0);
    vs[j - 1] + (vs[j] - vs[j - 1]) * w
}

/// Values of the fundamental system `c`, `s` (with `c(0) = s'(0) = 1`,
/// `c'(0) = s(0) = 0`) at some point of the edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalSolutions<T> {
    pub c: T,
    pub c_prime: T,
    pub s: T,
    pub s_prime: T,
}

impl<T: Real> FundamentalSolutions<T> {
    /// `(c + s') / 2`, meaningful at `t = 1`.
    pub fn discriminant(&self) -> T {
        (self.c + self.s_prime) * T::lit(0.5)
    }

    /// `c s' - c' s`; identically one for the exact solutions.
    pub fn wronskian(&self) -> T {
        self.c * self.s_prime - self.c_prime * self.s
    }
}

/// A spectral band `[alpha, beta]` where `|Δ| <= 1`, numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band<T> {
    pub index: usize,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Band<T> {
    /// Δ equals `(-1)^(index-1)` at `alpha`; it decreases across odd bands.
    pub fn is_decreasing(&self) -> bool {
        self.index % 2 == 1
    }

    /// Value of Δ at `alpha`.
    pub fn start_value(&self) -> T {
        if self.is_decreasing() {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn contains(&self, lambda: T) -> bool {
        lambda >= self.alpha && lambda <= self.beta
    }

    pub fn width(&self) -> T {
        self.beta - self.alpha
    }
}

/// The zero of Δ inside a band, where the magnetic spectrum has its
/// conical point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracPoint<T> {
    pub band: usize,
    pub z_d: T,
    pub delta_prime: T,
}

impl<T: Real> DiracPoint<T> {
    /// Fermi velocity `3^(-3/4) / Δ'(z_D)` (signed).
    pub fn fermi_velocity(&self) -> T {
        T::lit(3f64.powf(-0.75)) / self.delta_prime
    }
}

/// Hill operator with a fixed potential and integration grid.
#[derive(Clone, Debug)]
pub struct HillModel<T> {
    potential: HillPotential<T>,
    steps: usize,
    /// `V` at the `2 * steps + 1` half-step nodes.
    v_nodes: Vec<T>,
}

impl<T: Real> HillModel<T> {
    pub fn new(potential: HillPotential<T>) -> Self {
        Self::with_steps(potential, DEFAULT_STEPS).expect("default step count is valid")
    }

    pub fn with_steps(potential: HillPotential<T>, steps: usize) -> Result<Self> {
        if steps < 8 {
            return Err(Error::invalid(format!("need at least 8 RK4 steps, got {steps}")));
        }
        let denom = T::from_count(2 * steps);
        let v_nodes = (0..=2 * steps).map(|j| potential.value(T::from_count(j) / denom)).collect();
        Ok(Self { potential, steps, v_nodes })
    }

    pub fn potential(&self) -> &HillPotential<T> {
        &self.potential
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Fundamental solutions at `t = 1`.
    pub fn fundamental(&self, lambda: T) -> Result<FundamentalSolutions<T>> {
        self.integrate(lambda, self.steps).map(|y| state_to_solutions(&y))
    }

    /// Fundamental solutions at `t`, rounded to the nearest grid point.
    pub fn fundamental_at(&self, lambda: T, t: T) -> Result<FundamentalSolutions<T>> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::domain(format!("edge coordinate {} outside [0, 1]", t.as_f64())));
        }
        let k = (t * T::from_count(self.steps)).round().to_usize().unwrap_or(0);
        self.integrate(lambda, k.min(self.steps)).map(|y| state_to_solutions(&y))
    }

    pub fn discriminant(&self, lambda: T) -> Result<T> {
        Ok(self.fundamental(lambda)?.discriminant())
    }

    /// `(Δ(λ), dΔ/dλ)`.
    pub fn discriminant_with_derivative(&self, lambda: T) -> Result<(T, T)> {
        let y = self.integrate_variational(lambda)?;
        let half = T::lit(0.5);
        Ok(((y[0] + y[3]) * half, (y[4] + y[7]) * half))
    }

    /// `(s_λ(1), ∂s_λ(1)/∂λ)`; zeros of the first component are the
    /// Dirichlet eigenvalues of the edge.
    pub fn dirichlet_value(&self, lambda: T) -> Result<(T, T)> {
        let y = self.integrate_variational(lambda)?;
        Ok((y[2], y[6]))
    }

    fn integrate(&self, lambda: T, nsteps: usize) -> Result<[T; 4]> {
        let h = T::one() / T::from_count(self.steps);
        let half = T::lit(0.5);
        let sixth = T::one() / T::lit(6.0);
        let mut y = [T::one(), T::zero(), T::zero(), T::one()];
        let f = |q: T, y: &[T; 4]| [y[1], q * y[0], y[3], q * y[2]];
        for k in 0..nsteps {
            let q0 = self.v_nodes[2 * k] - lambda;
            let q1 = self.v_nodes[2 * k + 1] - lambda;
            let q2 = self.v_nodes[2 * k + 2] - lambda;
            let k1 = f(q0, &y);
            let k2 = f(q1, &axpy(&y, h * half, &k1));
            let k3 = f(q1, &axpy(&y, h * half, &k2));
            let k4 = f(q2, &axpy(&y, h, &k3));
            for i in 0..4 {
                y[i] = y[i] + h * sixth * (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]);
            }
        }
        check_finite(lambda, &y)?;
        Ok(y)
    }

    fn integrate_variational(&self, lambda: T) -> Result<[T; 8]> {
        let h = T::one() / T::from_count(self.steps);
        let half = T::lit(0.5);
        let sixth = T::one() / T::lit(6.0);
        let o = T::zero();
        let l = T::one();
        // (c, c', s, s', ∂c, ∂c', ∂s, ∂s')
        let mut y = [l, o, o, l, o, o, o, o];
        let f = |q: T, y: &[T; 8]| [y[1], q * y[0], y[3], q * y[2], y[5], q * y[4] - y[0], y[7], q * y[6] - y[2]];
        for k in 0..self.steps {
            let q0 = self.v_nodes[2 * k] - lambda;
            let q1 = self.v_nodes[2 * k + 1] - lambda;
            let q2 = self.v_nodes[2 * k + 2] - lambda;
            let k1 = f(q0, &y);
            let k2 = f(q1, &axpy(&y, h * half, &k1));
            let k3 = f(q1, &axpy(&y, h * half, &k2));
            let k4 = f(q2, &axpy(&y, h, &k3));
            for i in 0..8 {
                y[i] = y[i] + h * sixth * (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]);
            }
        }
        check_finite(lambda, &y)?;
        Ok(y)
    }

    fn root_tol(&self, lambda: T) -> T {
        T::tol(1e-12, 8.0).max(T::epsilon() * T::lit(8.0) * lambda.abs())
    }

    /// Scan window and step used by the band search.
    fn scan_grid(&self, count: usize) -> (T, T, T) {
        let lo = self.potential.min_value() - T::one();
        let span =
            T::lit(((count + 2) * (count + 2)) as f64 * PI * PI) + T::lit(4.0) * self.potential.sup_norm() + T::one();
        (lo, lo + span, T::lit(PI * PI / 64.0))
    }

    /// First `count` bands, with edges located to root tolerance.
    pub fn find_bands(&self, count: usize) -> Result<Vec<Band<T>>> {
        let zeros = self.discriminant_zeros(count)?;
        let (lo, _, step) = self.scan_grid(count);
        zeros
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let index = i + 1;
                let start = if index % 2 == 1 { T::one() } else { -T::one() };
                let alpha = self.band_edge(z, start, -step, lo)?;
                let beta = self.band_edge(z, -start, step, lo)?;
                Ok(Band { index, alpha, beta })
            })
            .collect()
    }

    fn discriminant_zeros(&self, count: usize) -> Result<Vec<T>> {
        let (lo, hi, step) = self.scan_grid(count);
        let mut zeros = Vec::with_capacity(count);
        let mut x0 = lo;
        let mut d0 = self.discriminant(x0)?;
        while zeros.len() < count && x0 < hi {
            let x1 = x0 + step;
            let d1 = self.discriminant(x1)?;
            if d1 == T::zero() {
                zeros.push(x1);
            } else if d0.signum() != d1.signum() && d0 != T::zero() {
                let tol = self.root_tol(x1);
                zeros.push(newton_bracketed(|x| self.discriminant_with_derivative(x), x0, x1, tol)?);
            }
            x0 = x1;
            d0 = d1;
        }
        if zeros.len() < count {
            return Err(Error::RootFinding(format!(
                "found {} of {count} bands below lambda = {}",
                zeros.len(),
                hi.as_f64()
            )));
        }
        Ok(zeros)
    }

    /// Walks from the band centre `z` in direction `step` until Δ reaches
    /// `target` (±1) or turns around (closed gap).
    fn band_edge(&self, z: T, target: T, step: T, floor: T) -> Result<T> {
        let (_, dz) = self.discriminant_with_derivative(z)?;
        let slope_sign = dz.signum();
        let passed = |d: T| (d - target) * target >= T::zero();
        let mut x0 = z;
        for _ in 0..4096 {
            let mut x1 = x0 + step;
            if step < T::zero() && x1 < floor {
                x1 = floor;
            }
            let (d1, dp1) = self.discriminant_with_derivative(x1)?;
            let tol = self.root_tol(x1);
            let mut turn_bound = None;
            if dp1.signum() != slope_sign {
                turn_bound = Some(x1);
            } else if passed(d1) && x1 != floor {
                // A turning point just beyond x1 means a near-tangential
                // crossing, which values of Δ alone resolve only to √ε.
                let x2 = x1 + step;
                if x2 >= floor && self.discriminant_with_derivative(x2)?.1.signum() != slope_sign {
                    turn_bound = Some(x2);
                }
            }
            if let Some(xe) = turn_bound {
                let turn =
                    bisect(|x| self.discriminant_with_derivative(x).map(|(_, dp)| dp * slope_sign), x0, xe, tol)?;
                let overshoot = (self.discriminant(turn)? - target) * target;
                if overshoot > T::tol(1e-12, 64.0) {
                    return newton_bracketed(
                        |x| self.discriminant_with_derivative(x).map(|(d, dp)| (d - target, dp)),
                        x0,
                        turn,
                        tol,
                    );
                }
                // Closed gap: the edge is the turning point itself.
                return Ok(turn);
            }
            if passed(d1) {
                if d1 == target {
                    return Ok(x1);
                }
                return newton_bracketed(
                    |x| self.discriminant_with_derivative(x).map(|(d, dp)| (d - target, dp)),
                    x0,
                    x1,
                    tol,
                );
            }
            if x1 == floor {
                break;
            }
            x0 = x1;
        }
        Err(Error::RootFinding(format!("band edge Δ = {} not found starting from {}", target.as_f64(), z.as_f64())))
    }

    pub fn dirac_point(&self, band: &Band<T>) -> Result<DiracPoint<T>> {
        let tol = self.root_tol(band.beta);
        let z_d = newton_bracketed(|x| self.discriminant_with_derivative(x), band.alpha, band.beta, tol)?;
        let (_, delta_prime) = self.discriminant_with_derivative(z_d)?;
        Ok(DiracPoint { band: band.index, z_d, delta_prime })
    }

    /// The unique `λ` in `band` with `Δ(λ) = y`, for `|y| <= 1`.
    pub fn invert_discriminant(&self, band: &Band<T>, y: T) -> Result<T> {
        let slack = T::tol(1e-12, 16.0);
        if !(y.abs() <= T::one() + slack) {
            return Err(Error::domain(format!("discriminant value {} outside [-1, 1]", y.as_f64())));
        }
        let y = y.max(-T::one()).min(T::one());
        if y == band.start_value() {
            return Ok(band.alpha);
        }
        if y == -band.start_value() {
            return Ok(band.beta);
        }
        let tol = self.root_tol(band.beta);
        let f = |x: T| self.discriminant_with_derivative(x).map(|(d, dp)| (d - y, dp));
        match newton_bracketed(f, band.alpha, band.beta, tol) {
            Ok(x) => Ok(x),
            // Edge values computed to tolerance can sit a hair inside ±1.
            Err(Error::RootFinding(_)) => {
                let da = self.discriminant(band.alpha)?;
                let db = self.discriminant(band.beta)?;
                Ok(if (da - y).abs() <= (db - y).abs() { band.alpha } else { band.beta })
            }
            Err(e) => Err(e),
        }
    }

    /// Dirichlet eigenvalues (zeros of `s_λ(1)`) in `[lo, hi]`, ascending.
    pub fn dirichlet_spectrum(&self, lo: T, hi: T) -> Result<Vec<T>> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty interval [{}, {}]", lo.as_f64(), hi.as_f64())));
        }
        let step = T::lit(PI * PI / 64.0).min((hi - lo) / T::lit(16.0));
        let mut out: Vec<T> = Vec::new();
        let mut x0 = lo;
        let mut s0 = self.dirichlet_value(x0)?.0;
        if s0 == T::zero() {
            out.push(x0);
        }
        while x0 < hi {
            let x1 = (x0 + step).min(hi);
            let s1 = self.dirichlet_value(x1)?.0;
            if s1 == T::zero() {
                out.push(x1);
            } else if s0 != T::zero() && s0.signum() != s1.signum() {
                let tol = self.root_tol(x1);
                out.push(newton_bracketed(|x| self.dirichlet_value(x), x0, x1, tol)?);
            }
            x0 = x1;
            s0 = s1;
        }
        Ok(out)
    }

    /// Tabulates Δ and Δ' on `band` for fast evaluation and inversion.
    pub fn discriminant_table(&self, band: &Band<T>, intervals: usize) -> Result<DiscriminantTable<T>> {
        DiscriminantTable::build(self, band, intervals)
    }
}

fn axpy<T: Real, const N: usize>(y: &[T; N], a: T, k: &[T; N]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + a * k[i];
    }
    out
}

fn check_finite<T: Real>(lambda: T, y: &[T]) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integrator { lambda: lambda.as_f64(), reason: "non-finite state".into() })
    }
}

fn state_to_solutions<T: Real>(y: &[T; 4]) -> FundamentalSolutions<T> {
    FundamentalSolutions { c: y[0], c_prime: y[1], s: y[2], s_prime: y[3] }
}

/// Δ and Δ' sampled on a uniform grid across one band, evaluated by
/// cubic Hermite interpolation.
///
/// Δ is entire in λ, so the interpolant is uniformly accurate up to and
/// including the band edges.
#[derive(Clone, Debug)]
pub struct DiscriminantTable<T> {
    band: Band<T>,
    spacing: T,
    delta: Vec<T>,
    delta_prime: Vec<T>,
}

impl<T: Real> DiscriminantTable<T> {
    pub fn build(model: &HillModel<T>, band: &Band<T>, intervals: usize) -> Result<Self> {
        if intervals < 4 {
            return Err(Error::invalid("discriminant table needs at least 4 intervals"));
        }
        let spacing = band.width() / T::from_count(intervals);
        let samples: Result<Vec<(T, T)>> = (0..=intervals)
            .into_par_iter()
            .map(|j| {
                let x = if j == intervals { band.beta } else { band.alpha + spacing * T::from_count(j) };
                model.discriminant_with_derivative(x)
            })
            .collect();
        let (delta, delta_prime) = samples?.into_iter().unzip();
        Ok(Self { band: *band, spacing, delta, delta_prime })
    }

    pub fn band(&self) -> &Band<T> {
        &self.band
    }

    pub fn intervals(&self) -> usize {
        self.delta.len() - 1
    }

    fn locate(&self, lambda: T) -> Result<(usize, T)> {
        let slack = self.spacing * T::lit(1e-6);
        if !(lambda >= self.band.alpha - slack && lambda <= self.band.beta + slack) {
            return Err(Error::domain(format!(
                "energy {} outside band {} [{}, {}]",
                lambda.as_f64(),
                self.band.index,
                self.band.alpha.as_f64(),
                self.band.beta.as_f64()
            )));
        }
        let n = self.intervals();
        let u = ((lambda - self.band.alpha) / self.spacing).max(T::zero());
        let j = u.floor().to_usize().unwrap_or(0).min(n - 1);
        Ok((j, (u - T::from_count(j)).min(T::one())))
    }

    /// `(Δ(λ), Δ'(λ))` for `λ` in the band.
    pub fn eval(&self, lambda: T) -> Result<(T, T)> {
        let (j, s) = self.locate(lambda)?;
        Ok(self.hermite(j, s))
    }

    fn hermite(&self, j: usize, s: T) -> (T, T) {
        let h = self.spacing;
        let (y0, y1) = (self.delta[j], self.delta[j + 1]);
        let (m0, m1) = (self.delta_prime[j] * h, self.delta_prime[j + 1] * h);
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + one;
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let six = T::lit(6.0);
        let d00 = six * s2 - six * s;
        let d10 = three * s2 - T::lit(4.0) * s + one;
        let d01 = six * s - six * s2;
        let d11 = three * s2 - two * s;
        let deriv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (value, deriv)
    }

    /// The `λ` in the band where the interpolated Δ equals `y`.
    pub fn invert(&self, y: T) -> Result<T> {
        let slack = T::tol(1e-12, 16.0);
        if !(y.abs() <= T::one() + slack) {
            return Err(Error::domain(format!("discriminant value {} outside [-1, 1]", y.as_f64())));
        }
        let dec = self.band.is_decreasing();
        // g(λ) = ±(Δ - y) is increasing along the table.
        let key = |d: T| if dec { y - d } else { d - y };
        let n = self.intervals();
        if key(self.delta[0]) >= T::zero() {
            return Ok(self.band.alpha);
        }
        if key(self.delta[n]) <= T::zero() {
            return Ok(self.band.beta);
        }
        let j = self.delta.partition_point(|&d| key(d) < T::zero()).clamp(1, n) - 1;
        let x0 = self.band.alpha + self.spacing * T::from_count(j);
        let tol = T::tol(1e-14, 8.0) * T::one().max(self.band.beta.abs());
        let root = newton_bracketed(
            |x| {
                let s = ((x - x0) / self.spacing).max(T::zero()).min(T::one());
                let (d, dp) = self.hermite(j, s);
                Ok((d - y, dp))
            },
            x0,
            x0 + self.spacing,
            tol,
        )?;
        Ok(root.min(self.band.beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn free() -> HillModel<f64> {
        HillModel::new(HillPotential::zero())
    }

    #[test]
    fn free_discriminant_is_cos_sqrt_lambda() {
        let m = free();
        for &l in &[-3.0, -0.5, 0.0, 0.7, 2.4674, 9.0, 30.0, 39.4] {
            let exact = if l >= 0.0 { f64::sqrt(l).cos() } else { f64::sqrt(-l).cosh() };
            assert_abs_diff_eq!(m.discriminant(l).unwrap(), exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn variational_derivative_matches_closed_form() {
        let m = free();
        for &l in &[0.3, 2.0, 5.0, 12.0, 30.0] {
            let (_, d) = m.discriminant_with_derivative(l).unwrap();
            let r = f64::sqrt(l);
            assert_abs_diff_eq!(d, -r.sin() / (2.0 * r), epsilon = 1e-10);
        }
    }

    #[test]
    fn free_bands_are_squares_of_multiples_of_pi() {
        let bands = free().find_bands(3).unwrap();
        let p2 = PI * PI;
        let expected = [(0.0, p2), (p2, 4.0 * p2), (4.0 * p2, 9.0 * p2)];
        for (b, (a, e)) in bands.iter().zip(expected) {
            assert_abs_diff_eq!(b.alpha, a, epsilon = 1e-8);
            assert_abs_diff_eq!(b.beta, e, epsilon = 1e-8);
        }
    }

    #[test]
    fn wronskian_is_one_along_the_edge() {
        let m = HillModel::new(HillPotential::cosine(1.5));
        for &l in &[-1.0f64, 3.0, 20.0] {
            for &t in &[0.25f64, 0.5, 1.0] {
                let w = m.fundamental_at(l, t).unwrap().wronskian();
                assert!((w - 1.0).abs() < 1e-10, "λ={l} t={t}: {w}");
            }
        }
    }

    #[test]
    fn dirac_point_of_free_first_band() {
        let m = free();
        let b = m.find_bands(1).unwrap()[0];
        let d = m.dirac_point(&b).unwrap();
        assert_abs_diff_eq!(d.z_d, PI * PI / 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.delta_prime, -1.0 / PI, epsilon = 1e-10);
    }

    #[test]
    fn inversion_round_trips() {
        let m = HillModel::new(HillPotential::cosine(2.0));
        let b = m.find_bands(2).unwrap()[1];
        for &y in &[-1.0, -0.7, 0.0, 0.3, 0.99, 1.0] {
            let x = m.invert_discriminant(&b, y).unwrap();
            assert!(b.contains(x));
            assert_abs_diff_eq!(m.discriminant(x).unwrap(), y, epsilon = 1e-10);
        }
        assert!(m.invert_discriminant(&b, 1.5).is_err());
    }

    #[test]
    fn free_dirichlet_spectrum() {
        let d = free().dirichlet_spectrum(0.0, 50.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d[0], PI * PI, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 4.0 * PI * PI, epsilon = 1e-9);
    }

    #[test]
    fn sampled_potential_validation() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        assert!(HillPotential::sampled(t.clone(), vec![0.0; 10]).is_err());
        let t: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let v: Vec<f64> = t.iter().map(|x| x * x).collect();
        let p = HillPotential::sampled(t, v).unwrap();
        assert!(p.asymmetry() > 0.9);
        assert_abs_diff_eq!(p.value(0.2), p.value(0.8), epsilon = 1e-12);
    }

    #[test]
    fn csv_parsing_skips_header_and_comments() {
        let mut s = String::from("# potential\nt,V\n");
        for i in 0..=64 {
            let t = i as f64 / 64.0;
            s.push_str(&format!("{t},{}\n", (2.0 * PI * t).cos()));
        }
        let p = HillPotential::<f64>::from_csv_str(&s).unwrap();
        assert_abs_diff_eq!(p.value(0.5), -1.0, epsilon = 1e-12);
        assert!(HillPotential::<f64>::from_csv_str("0,1\n0.5,x\n").is_err());
    }

    #[test]
    fn table_matches_direct_integration() {
        let m = HillModel::new(HillPotential::cosine(1.0));
        let b = m.find_bands(1).unwrap()[0];
        let tab = m.discriminant_table(&b, 512).unwrap();
        for k in 0..=20 {
            let x = b.alpha + b.width() * (k as f64 + 0.37) / 21.0;
            let x = x.min(b.beta);
            let (d, dp) = tab.eval(x).unwrap();
            let (de, dpe) = m.discriminant_with_derivative(x).unwrap();
            assert_abs_diff_eq!(d, de, epsilon = 1e-10);
            assert_abs_diff_eq!(dp, dpe, epsilon = 1e-7);
            assert_abs_diff_eq!(tab.invert(d).unwrap(), x, epsilon = 1e-8);
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let m = HillModel::<f32>::with_steps(HillPotential::zero(), 256).unwrap();
        let d = m.discriminant(2.0f32).unwrap();
        assert!((d - 2f32.sqrt().cos()).abs() < 1e-5);
    }
}
