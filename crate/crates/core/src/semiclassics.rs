//! Semiclassical observables built from Landau levels: smoothed density of
//! states, grand potential, magnetization and the sawtooth model.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landau::{BohrSommerfeldMap, Cone, LandauSpectrum};
use crate::scalar::{kahan_sum, KahanSum, Real};
use crate::symbol::{symbol_energy, TorusPoint};

/// `|b1 ∧ b2| = 3√3/2`, the area of the lattice cell.
pub fn cell_area<T: Real>() -> T {
    T::lit(1.5) * T::lit(3.0).sqrt()
}

/// Weight `h / (π |b1 ∧ b2|)` of one Landau level.
pub fn level_weight<T: Real>(h: T) -> T {
    h / (T::PI() * cell_area::<T>())
}

/// Inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Beta<T> {
    pub fn new(beta: T) -> Result<Self> {
        if beta.is_infinite() && beta > T::zero() {
            Ok(Beta::Infinite)
        } else if beta > T::zero() && beta.is_finite() {
            Ok(Beta::Finite(beta))
        } else {
            Err(Error::domain(format!("inverse temperature {} must be positive", beta.as_f64())))
        }
    }

    pub fn value(&self) -> T {
        match self {
            Beta::Finite(b) => *b,
            Beta::Infinite => T::infinity(),
        }
    }
}

/// `f_β(x) = -β⁻¹ log(e^{βx} + 1)`, and `f_∞(x) = -max(x, 0)`.
pub fn fermi_potential<T: Real>(beta: Beta<T>, x: T) -> T {
    match beta {
        Beta::Infinite => -x.max(T::zero()),
        Beta::Finite(b) => {
            let y = b * x;
            -(y.max(T::zero()) + (-y.abs()).exp().ln_1p()) / b
        }
    }
}

/// `-∂n_β/∂x` for the Fermi function `n_β = 1/(e^{βx}+1)`; a probability
/// density of width `~1/β`.
pub fn fermi_kernel<T: Real>(beta: T, x: T) -> T {
    let e = (-(beta * x).abs()).exp();
    beta * e / ((T::one() + e) * (T::one() + e))
}

/// `σ(y) = y - floor(y) - 1/2`.
pub fn sawtooth<T: Real>(y: T) -> T {
    y - y.floor() - T::lit(0.5)
}

/// Thermodynamic state for the grand potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoParams<T> {
    pub mu: T,
    pub beta: Beta<T>,
    pub cone: Cone,
}

/// Cone weight: `1/2` at `z_D`, `1` strictly inside the chosen cone up to
/// (excluding) the `|Δ| = 1/3` edge, `0` elsewhere.
pub fn cone_weight<T: Real>(map: &BohrSommerfeldMap<T>, cone: Cone, z: T) -> T {
    let zd = map.z_d();
    let (lo, hi) = map.cone_domain();
    if z == zd {
        return T::lit(0.5);
    }
    let inside = match cone {
        Cone::Upper => z > zd && z < hi,
        Cone::Lower => z < zd && z > lo,
    };
    if inside {
        T::one()
    } else {
        T::zero()
    }
}

/// Per-level contribution to the grand potential on one cone.
fn level_term<T: Real>(beta: Beta<T>, cone: Cone, mu: T, z: T) -> T {
    match cone {
        Cone::Upper => fermi_potential(beta, mu - z),
        Cone::Lower => -fermi_potential(beta, z - mu),
    }
}

fn check_mu<T: Real>(map: &BohrSommerfeldMap<T>, mu: T) -> Result<()> {
    let (lo, hi) = map.cone_domain();
    if !(mu >= lo && mu <= hi) {
        return Err(Error::domain(format!(
            "chemical potential {} outside the cone domain [{}, {}]",
            mu.as_f64(),
            lo.as_f64(),
            hi.as_f64()
        )));
    }
    Ok(())
}

/// Grand potential density from precomputed levels.
pub fn grand_potential_from_levels<T: Real>(
    map: &BohrSommerfeldMap<T>,
    levels: &LandauSpectrum<T>,
    params: &ThermoParams<T>,
) -> Result<T> {
    check_mu(map, params.mu)?;
    let zs = match params.cone {
        Cone::Upper => &levels.upper,
        Cone::Lower => &levels.lower,
    };
    let mut acc = KahanSum::new();
    acc.add(T::lit(0.5) * level_term(params.beta, params.cone, params.mu, levels.z_d));
    for &z in zs {
        let w = cone_weight(map, params.cone, z);
        if w != T::zero() {
            acc.add(w * level_term(params.beta, params.cone, params.mu, z));
        }
    }
    Ok(level_weight(levels.h) * acc.value())
}

/// Grand potential density `Ω(μ, β, h)` on one cone.
pub fn grand_potential<T: Real>(map: &BohrSommerfeldMap<T>, params: &ThermoParams<T>, h: T) -> Result<T> {
    check_mu(map, params.mu)?;
    let levels = map.landau_levels(h)?;
    grand_potential_from_levels(map, &levels, params)
}

/// Finite-difference step used for `∂Ω/∂h`.
pub fn flux_step<T: Real>(h: T) -> T {
    (T::lit(1e-4) * h).max(T::lit(1e-7)).min(h * T::lit(0.5))
}

/// One point of a magnetization curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagnetizationSample<T> {
    pub h: T,
    pub mu: T,
    pub omega: T,
    pub m: T,
    /// A level crosses `μ` inside the difference stencil, so `M` is not
    /// a derivative there.
    pub straddles_level: bool,
}

impl<T: Real> MagnetizationSample<T> {
    pub fn inv_h(&self) -> T {
        T::one() / self.h
    }
}

fn levels_below<T: Real>(levels: &LandauSpectrum<T>, cone: Cone, mu: T) -> usize {
    match cone {
        Cone::Upper => levels.upper.partition_point(|&z| z < mu),
        Cone::Lower => levels.lower.partition_point(|&z| z > mu),
    }
}

/// `M = -|b1 ∧ b2| ∂Ω/∂h` by a central difference.
pub fn magnetization<T: Real>(
    map: &BohrSommerfeldMap<T>,
    params: &ThermoParams<T>,
    h: T,
) -> Result<MagnetizationSample<T>> {
    let dh = flux_step(h);
    let lp = map.landau_levels(h + dh)?;
    let lm = map.landau_levels(h - dh)?;
    let l0 = map.landau_levels(h)?;
    sample_from_levels(map, params, h, dh, &l0, &lm, &lp)
}

fn sample_from_levels<T: Real>(
    map: &BohrSommerfeldMap<T>,
    params: &ThermoParams<T>,
    h: T,
    dh: T,
    l0: &LandauSpectrum<T>,
    lm: &LandauSpectrum<T>,
    lp: &LandauSpectrum<T>,
) -> Result<MagnetizationSample<T>> {
    let op = grand_potential_from_levels(map, lp, params)?;
    let om = grand_potential_from_levels(map, lm, params)?;
    let omega = grand_potential_from_levels(map, l0, params)?;
    let m = -cell_area::<T>() * (op - om) / (T::lit(2.0) * dh);
    let straddles_level = levels_below(lp, params.cone, params.mu) != levels_below(lm, params.cone, params.mu);
    Ok(MagnetizationSample { h, mu: params.mu, omega, m, straddles_level })
}

/// Magnetization at each flux in `hs` (evaluated in parallel, returned in
/// input order).
pub fn magnetization_vs_flux<T: Real>(
    map: &BohrSommerfeldMap<T>,
    params: &ThermoParams<T>,
    hs: &[T],
) -> Result<Vec<MagnetizationSample<T>>> {
    check_mu(map, params.mu)?;
    hs.par_iter().map(|&h| magnetization(map, params, h)).collect()
}

/// Magnetization at fixed flux for each chemical potential in `mus`.
pub fn magnetization_vs_mu<T: Real>(
    map: &BohrSommerfeldMap<T>,
    beta: Beta<T>,
    cone: Cone,
    h: T,
    mus: &[T],
) -> Result<Vec<MagnetizationSample<T>>> {
    let dh = flux_step(h);
    let lp = map.landau_levels(h + dh)?;
    let lm = map.landau_levels(h - dh)?;
    let l0 = map.landau_levels(h)?;
    mus.par_iter()
        .map(|&mu| {
            let params = ThermoParams { mu, beta, cone };
            sample_from_levels(map, &params, h, dh, &l0, &lm, &lp)
        })
        .collect()
}

/// Leading oscillatory magnetization `σ(g(μ)/h) g(μ) / (π g'(μ))` on the
/// upper cone.
pub fn sawtooth_magnetization<T: Real>(map: &BohrSommerfeldMap<T>, mu: T, h: T) -> Result<T> {
    let (_, hi) = map.cone_domain();
    if !(mu > map.z_d() && mu <= hi) {
        return Err(Error::domain(format!("sawtooth model needs z_D < μ <= {}, got {}", hi.as_f64(), mu.as_f64())));
    }
    if !(h > T::zero()) {
        return Err(Error::domain("flux must be positive"));
    }
    let (g, gp) = map.g_with_derivative(mu)?;
    Ok(sawtooth(g / h) * g / (T::PI() * gp))
}

/// `Σ_{n>=1} (μ - z_n)_+` over upper-cone levels.
pub fn upper_level_sum<T: Real>(levels: &LandauSpectrum<T>, mu: T) -> T {
    kahan_sum(levels.upper.iter().map(|&z| (mu - z).max(T::zero())))
}

/// Trace of `f` against the level comb, `(h/(π|b|)) Σ_n f(z_n)` over all
/// levels `|n| h <= F0(1/9)` (each counted once).
pub fn comb_trace<T: Real, F: Fn(T) -> T>(levels: &LandauSpectrum<T>, f: F) -> T {
    let mut acc = KahanSum::new();
    for &z in levels.lower.iter().rev() {
        acc.add(f(z));
    }
    acc.add(f(levels.z_d));
    for &z in &levels.upper {
        acc.add(f(z));
    }
    level_weight(levels.h) * acc.value()
}

/// Smoothing kernel, a function of the offset `z - μ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel<T> {
    /// Unit-mass Gaussian of width `sigma`.
    Gaussian { sigma: T },
    /// Indicator of `[lo, hi]`.
    Indicator { lo: T, hi: T },
    /// Linear interpolation of samples, zero outside their range.
    Sampled { x: Vec<T>, y: Vec<T> },
}

impl<T: Real> Kernel<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Gaussian { sigma } if !(*sigma > T::zero()) => {
                Err(Error::domain("Gaussian width must be positive"))
            }
            Kernel::Indicator { lo, hi } if !(lo < hi) => Err(Error::domain("indicator interval is empty")),
            Kernel::Sampled { x, y } if x.len() < 2 || x.len() != y.len() => {
                Err(Error::invalid("sampled kernel needs matching columns of length >= 2"))
            }
            Kernel::Sampled { x, .. } if x.windows(2).any(|w| w[1] <= w[0]) => {
                Err(Error::invalid("sampled kernel abscissae must increase"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, offset: T) -> T {
        match self {
            Kernel::Gaussian { sigma } => {
                let u = offset / *sigma;
                (-(u * u) * T::lit(0.5)).exp() / (*sigma * T::TAU().sqrt())
            }
            Kernel::Indicator { lo, hi } => {
                if offset >= *lo && offset <= *hi {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Kernel::Sampled { x, y } => {
                let n = x.len();
                if offset < x[0] || offset > x[n - 1] {
                    return T::zero();
                }
                let j = x.partition_point(|&v| v <= offset).clamp(1, n - 1);
                let w = (offset - x[j - 1]) / (x[j] - x[j - 1]);
                y[j - 1] + (y[j] - y[j - 1]) * w
            }
        }
    }

    /// Width used for the resolution warning.
    fn width(&self) -> T {
        match self {
            Kernel::Gaussian { sigma } => *sigma,
            Kernel::Indicator { lo, hi } => *hi - *lo,
            Kernel::Sampled { x, .. } => x[x.len() - 1] - x[0],
        }
    }
}

/// Smoothed density of states on a grid of chemical potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct DosCurve<T> {
    pub h: T,
    pub mu: Vec<T>,
    pub rho: Vec<T>,
    pub kernel_width: T,
    /// Set when the kernel is narrower than the flux, where the comb is
    /// not resolved into a smooth density.
    pub warning: Option<String>,
}

fn check_dirichlet<T: Real>(map: &BohrSommerfeldMap<T>, lo: T, hi: T) -> Result<()> {
    let tol = T::tol(1e-9, 64.0);
    let touches = |d: T| d >= lo - tol * T::one().max(d.abs()) && d <= hi + tol * T::one().max(d.abs());
    if let Some(&d) = map.dirichlet_eigenvalues().iter().find(|&&d| touches(d)) {
        return Err(Error::DirichletOverlap { energy: d.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    Ok(())
}

/// `ρ̃(μ) = (h/(π|b|)) Σ_n K(z_n - μ)` on the grid `mus`.
pub fn dos_smoothed<T: Real>(map: &BohrSommerfeldMap<T>, h: T, kernel: &Kernel<T>, mus: &[T]) -> Result<DosCurve<T>> {
    kernel.validate()?;
    if mus.is_empty() {
        return Err(Error::invalid("empty chemical-potential grid"));
    }
    let lo = mus.iter().fold(T::infinity(), |a, &b| a.min(b));
    let hi = mus.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    check_dirichlet(map, lo, hi)?;
    let levels = map.landau_levels(h)?;
    let rho = mus.par_iter().map(|&mu| comb_trace(&levels, |z| kernel.eval(z - mu))).collect();
    let width = kernel.width();
    let warning = (width < h).then(|| {
        let msg = format!("kernel width {} below flux h = {}; density not resolved", width.as_f64(), h.as_f64());
        log::warn!("{msg}");
        msg
    });
    Ok(DosCurve { h, mu: mus.to_vec(), rho, kernel_width: width, warning })
}

/// Zero-field trace `Σ_± 2/((2π)² 3√3) ∫_{T²} f(z_±(x, ξ)) dx dξ`, where
/// `z_±` are the band energies with `Δ = ±√E(x, ξ)`, by the `m × m`
/// midpoint rule on the torus.
pub fn dos_zero_field<T: Real, F: Fn(T) -> T + Sync>(map: &BohrSommerfeldMap<T>, f: F, m: usize) -> Result<T> {
    if m == 0 {
        return Err(Error::invalid("torus grid must be non-empty"));
    }
    let table = map.discriminant_table();
    let step = T::TAU() / T::from_count(m);
    let half = T::lit(0.5);
    let rows: Result<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = -T::PI() + step * (T::from_count(i) + half);
            let mut acc = KahanSum::new();
            for j in 0..m {
                let xi = -T::PI() + step * (T::from_count(j) + half);
                let e = symbol_energy(TorusPoint { x, xi }).max(T::zero()).min(T::one());
                let y = e.sqrt();
                acc.add(f(table.invert(y)?) + f(table.invert(-y)?));
            }
            Ok(acc.value())
        })
        .collect();
    let total = kahan_sum(rows?);
    let cell = step * step;
    let norm = T::lit(2.0) / (T::TAU() * T::TAU() * T::lit(3.0) * T::lit(3.0).sqrt());
    Ok(norm * cell * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::{HillModel, HillPotential};
    use crate::symbol::PhaseAreaTable;
    use approx::assert_abs_diff_eq;

    fn free_map() -> BohrSommerfeldMap<f64> {
        let m = HillModel::new(HillPotential::zero());
        let b = m.find_bands(1).unwrap()[0];
        BohrSommerfeldMap::new(&m, &b, PhaseAreaTable::build(256).unwrap(), 1024).unwrap()
    }

    #[test]
    fn fermi_potential_limits() {
        assert_eq!(fermi_potential(Beta::Infinite, 2.0), -2.0);
        assert_eq!(fermi_potential(Beta::Infinite, -2.0), 0.0);
        let b = Beta::Finite(1e6);
        assert_abs_diff_eq!(fermi_potential(b, 0.3), -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(fermi_potential(Beta::Finite(1e3), 1e5), -1e5, epsilon = 1e-9);
        assert_eq!(fermi_potential(Beta::Finite(1e3), -1e5), 0.0);
        assert_abs_diff_eq!(fermi_potential(Beta::Finite(1.0), 0.0), -2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn fermi_kernel_has_unit_mass() {
        let rule = crate::quadrature::GaussLegendre::<f64>::new(64);
        let mass = rule.integrate_composite(-1.0, 1.0, 40, |x| fermi_kernel(50.0, x));
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sawtooth_shape() {
        assert_abs_diff_eq!(sawtooth(0.25), -0.25);
        assert_abs_diff_eq!(sawtooth(3.75), 0.25);
        assert_abs_diff_eq!(sawtooth(-0.25), 0.25);
    }

    #[test]
    fn single_level_weight_below_first_level() {
        let map = free_map();
        let h = 0.05;
        let levels = map.landau_levels(h).unwrap();
        let mu = 0.5 * (map.z_d() + levels.upper[0]);
        let p = ThermoParams { mu, beta: Beta::Infinite, cone: Cone::Upper };
        let om = grand_potential_from_levels(&map, &levels, &p).unwrap();
        assert_abs_diff_eq!(om, -level_weight(h) * 0.5 * (mu - map.z_d()), epsilon = 1e-15);
        let m = magnetization(&map, &p, h).unwrap();
        assert_abs_diff_eq!(m.m, (mu - map.z_d()) / (2.0 * std::f64::consts::PI), epsilon = 1e-9);
    }

    #[test]
    fn lower_cone_mirrors_upper_for_symmetric_offsets() {
        let map = free_map();
        let h = 0.01;
        let zd = map.z_d();
        let up = ThermoParams { mu: zd + 0.2, beta: Beta::Infinite, cone: Cone::Upper };
        let lo = ThermoParams { mu: zd - 0.2, beta: Beta::Infinite, cone: Cone::Lower };
        let a = grand_potential(&map, &up, h).unwrap();
        let b = grand_potential(&map, &lo, h).unwrap();
        assert!(a < 0.0 && b > 0.0);
        // The cone is nearly symmetric, so the magnitudes are comparable.
        assert!((-a / b) > 0.5 && (-a / b) < 2.0, "{a} {b}");
    }

    #[test]
    fn comb_counts_levels_in_indicator() {
        let map = free_map();
        let h = 0.02;
        let levels = map.landau_levels(h).unwrap();
        let (a, b) = (levels.upper[2] - 1e-9, levels.upper[6] + 1e-9);
        let k = Kernel::Indicator { lo: a, hi: b };
        let v = comb_trace(&levels, |z| k.eval(z));
        assert_abs_diff_eq!(v, 5.0 * level_weight(h), epsilon = 1e-15);
    }

    #[test]
    fn dos_flags_unresolved_kernel_and_dirichlet_overlap() {
        let map = free_map();
        let z = map.z_d();
        let c = dos_smoothed(&map, 0.01, &Kernel::Gaussian { sigma: 0.001 }, &[z]).unwrap();
        assert!(c.warning.is_some());
        let pi2 = std::f64::consts::PI.powi(2);
        let err = dos_smoothed(&map, 0.01, &Kernel::Gaussian { sigma: 0.1 }, &[z, pi2]);
        assert!(matches!(err, Err(Error::DirichletOverlap { .. })));
    }

    #[test]
    fn zero_field_mass_of_full_band() {
        let map = free_map();
        let mass = dos_zero_field(&map, |_| 1.0, 64).unwrap();
        assert_abs_diff_eq!(mass, 4.0 / (3.0 * 3f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn sawtooth_model_domain() {
        let map = free_map();
        assert!(sawtooth_magnetization(&map, map.z_d() - 0.1, 0.01).is_err());
        assert!(sawtooth_magnetization(&map, map.z_d() + 0.1, 0.01).unwrap().is_finite());
    }
}
