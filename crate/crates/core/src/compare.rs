//! Semiclassical against spectral magnetization on a shared flux sweep.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landau::{BohrSommerfeldMap, Cone};
use crate::scalar::Real;
use crate::semiclassics::{grand_potential_from_levels, sawtooth_magnetization, Beta, ThermoParams};
use crate::spectral::{difference_quotients, magnetization_spectral, FluxOmega, FluxSweep, SpectralThermo};

/// One joined sample at the midpoint flux of a sweep interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow<T> {
    pub h: T,
    pub inv_h: T,
    pub m_semi: T,
    pub m_spec: T,
    /// `NaN` where the sawtooth model does not apply (lower cone, `μ <= z_D`).
    pub m_sawtooth: T,
    pub abs_diff: T,
    /// A Landau level crosses `μ` between the two fluxes of the interval.
    pub level_crossing: bool,
}

#[derive(Clone, Debug)]
pub struct Comparison<T> {
    pub mu: T,
    pub rows: Vec<ComparisonRow<T>>,
}

fn levels_below<T: Real>(map: &BohrSommerfeldMap<T>, cone: Cone, mu: T, h: T) -> Result<usize> {
    let l = map.landau_levels(h)?;
    Ok(match cone {
        Cone::Upper => l.upper.iter().filter(|&&z| z < mu).count(),
        Cone::Lower => l.lower.iter().filter(|&&z| z > mu).count(),
    })
}

/// Runs both pipelines on `sweep` and joins them by interval.
pub fn compare_magnetization<T: Real>(
    map: &BohrSommerfeldMap<T>,
    sweep: FluxSweep,
    mu: T,
    beta: Beta<T>,
    cone: Cone,
    grid: usize,
    max_q: u64,
) -> Result<Comparison<T>> {
    let fluxes = sweep.fluxes()?;
    if fluxes.iter().any(|f| f.p() == 0) {
        return Err(Error::domain("the semiclassical pipeline needs positive flux"));
    }
    let spec = magnetization_spectral(map, sweep, &SpectralThermo { mu, beta, cone: cone.into() }, grid, max_q)?;
    let params = ThermoParams { mu, beta, cone };
    let semi: Result<Vec<(FluxOmega<T>, usize)>> = fluxes
        .par_iter()
        .map(|&flux| {
            let h = flux.h();
            let levels = map.landau_levels(h)?;
            let omega = grand_potential_from_levels(map, &levels, &params)?;
            Ok((FluxOmega { flux, h, omega }, levels_below(map, cone, mu, h)?))
        })
        .collect();
    let semi = semi?;
    let omegas: Vec<FluxOmega<T>> = semi.iter().map(|s| s.0).collect();
    let semi_m = difference_quotients(&omegas);
    let rows = semi_m
        .iter()
        .zip(&spec.samples)
        .zip(semi.windows(2))
        .map(|((s, p), w)| {
            let saw = if cone == Cone::Upper && mu > map.z_d() {
                sawtooth_magnetization(map, mu, s.h).unwrap_or(T::nan())
            } else {
                T::nan()
            };
            ComparisonRow {
                h: s.h,
                inv_h: s.inv_h(),
                m_semi: s.m,
                m_spec: p.m,
                m_sawtooth: saw,
                abs_diff: (s.m - p.m).abs(),
                level_crossing: w[0].1 != w[1].1,
            }
        })
        .collect();
    Ok(Comparison { mu, rows })
}

/// Indices `i` where `|M_{i+1} - M_i|` exceeds `fraction` of the range of
/// `M`: the discontinuities of a sawtooth sampled by difference quotients.
pub fn jump_indices<T: Real>(m: &[T], fraction: T) -> Vec<usize> {
    let (lo, hi) = m.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
    let thresh = (hi - lo) * fraction;
    let mut out: Vec<usize> = Vec::new();
    for i in 0..m.len().saturating_sub(1) {
        if (m[i + 1] - m[i]).abs() > thresh {
            // A crossing split across two intervals shows as two steps.
            if out.last().map_or(true, |&j| j + 1 < i) {
                out.push(i);
            }
        }
    }
    out
}

/// Summary statistics of a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSummary<T> {
    /// `max |M_spec - M_semi| / max |M_semi|` over rows away from jumps.
    pub relative_difference: T,
    pub jumps_semi: Vec<usize>,
    pub jumps_spec: Vec<usize>,
}

impl<T: Real> Comparison<T> {
    /// Rows within one interval of a jump in either curve are excluded
    /// from the relative difference.
    pub fn summary(&self, jump_fraction: T) -> ComparisonSummary<T> {
        let semi: Vec<T> = self.rows.iter().map(|r| r.m_semi).collect();
        let spec: Vec<T> = self.rows.iter().map(|r| r.m_spec).collect();
        let jumps_semi = jump_indices(&semi, jump_fraction);
        let jumps_spec = jump_indices(&spec, jump_fraction);
        let near = |i: usize| {
            jumps_semi.iter().chain(&jumps_spec).any(|&j| i + 1 >= j && i <= j + 2) || self.rows[i].level_crossing
        };
        let mut num = T::zero();
        let mut den = T::zero();
        for (i, r) in self.rows.iter().enumerate() {
            den = den.max(r.m_semi.abs());
            if !near(i) {
                num = num.max(r.abs_diff);
            }
        }
        ComparisonSummary { relative_difference: num / den, jumps_semi, jumps_spec }
    }
}
