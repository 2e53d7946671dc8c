//! Exact magnetic spectra at rational flux `h = 2πp/q`.
//!
//! The spectrum of the magnetic Hill operator in a band is the pullback
//! through Δ of the spectra of the `2q × 2q` Floquet matrices `T_q(k)`.
//! Densities and grand potentials are Brillouin-zone averages over a
//! uniform midpoint grid.

use num_complex::Complex;
use rayon::prelude::*;

use crate::eigen::{hermitian_eigenvalues, CyclicChain, HermitianMatrix, PeriodicJacobi, SymTridiagonal};
use crate::error::{Error, Result};
use crate::hill::DiscriminantTable;
use crate::landau::{BohrSommerfeldMap, Cone};
use crate::scalar::{kahan_sum, KahanSum, Real};
use crate::semiclassics::{cell_area, cone_weight, fermi_potential, Beta};
use crate::symbol::TorusPoint;

/// Default k-grid size per direction.
pub const DEFAULT_K_GRID: usize = 24;

/// Default limit on the reduced denominator.
pub const DEFAULT_MAX_Q: u64 = 4096;

/// Eigenvalues with `|λ| <=` this are treated as sitting at the Dirac point.
const ZERO_EIGENVALUE: f64 = 1e-9;

/// Links below this are dropped, turning the ring into an open chain.
const MIN_LINK: f64 = 1e-12;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Flux `h = 2πp/q` with `gcd(p, q) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalFlux {
    p: u64,
    q: u64,
    original: (u64, u64),
}

impl RationalFlux {
    /// Reduces `p/q`; the unreduced pair is kept in [`original`](Self::original).
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("flux denominator must be positive"));
        }
        let g = gcd(p, q).max(1);
        let (rp, rq) = if p == 0 { (0, 1) } else { (p / g, q / g) };
        Ok(Self { p: rp, q: rq, original: (p, q) })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn original(&self) -> (u64, u64) {
        self.original
    }

    pub fn h<T: Real>(&self) -> T {
        T::TAU() * T::lit(self.p as f64) / T::lit(self.q as f64)
    }

    pub fn dim(&self) -> usize {
        2 * self.q as usize
    }

    fn check(&self, max_q: u64) -> Result<()> {
        if self.q > max_q {
            return Err(Error::Resource(format!(
                "flux {}/{} needs {}×{} Floquet matrices (limit q <= {max_q})",
                self.p,
                self.q,
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn cis<T: Real>(t: T) -> Complex<T> {
    Complex::new(t.cos(), t.sin())
}

/// Diagonal entry `1 + e^{i k1} e^{2πi p j/q}` of the off-diagonal block.
fn block_diagonal<T: Real>(flux: &RationalFlux, k1: T, j: usize) -> Complex<T> {
    let turn = T::TAU() * T::lit(((flux.p as u128 * j as u128) % flux.q as u128) as f64) / T::lit(flux.q as f64);
    Complex::new(T::one(), T::zero()) + cis(k1 + turn)
}

/// Dense `T_q(k)` with lower-left block `⅓(Id + e^{ik1} J + e^{ik2} K)` and
/// its adjoint in the upper-right corner.
pub fn build_tq<T: Real>(flux: &RationalFlux, k: TorusPoint<T>) -> HermitianMatrix<T> {
    let q = flux.q as usize;
    let third = T::one() / T::lit(3.0);
    let mut m = HermitianMatrix::zeros(2 * q);
    let shift = cis(k.xi);
    for j in 0..q {
        let mut a = vec![Complex::new(T::zero(), T::zero()); q];
        a[j] = block_diagonal(flux, k.x, j);
        a[(j + 1) % q] = a[(j + 1) % q] + shift;
        for (l, v) in a.into_iter().enumerate() {
            if v != Complex::new(T::zero(), T::zero()) {
                m.add_hermitian(q + j, l, v * third);
            }
        }
    }
    m
}

/// `T_q(k)` as a cyclic chain in the site order `(b_1, a_1, ..., b_q, a_q)`.
pub fn tq_chain<T: Real>(flux: &RationalFlux, k: TorusPoint<T>) -> CyclicChain<T> {
    let q = flux.q as usize;
    let third = T::one() / T::lit(3.0);
    let hop = cis(-k.xi) * third;
    let mut links = Vec::with_capacity(2 * q);
    for j in 0..q {
        links.push(block_diagonal(flux, k.x, j) * third);
        links.push(hop);
    }
    CyclicChain { diag: vec![T::zero(); 2 * q], links }
}

/// All eigenvalues of `T_q(k)`, ascending.
pub fn tq_eigenvalues<T: Real>(flux: &RationalFlux, k: TorusPoint<T>) -> Result<Vec<T>> {
    if flux.q == 1 {
        return hermitian_eigenvalues(&build_tq(flux, k));
    }
    tq_chain(flux, k).eigenvalues()
}

/// Midpoint k-grid on `[0, 2π)²` (row `i` has `k1 = 2π(i + ½)/m`).
pub fn k_grid<T: Real>(m: usize) -> Vec<T> {
    let step = T::TAU() / T::from_count(m);
    (0..m).map(|i| step * (T::from_count(i) + T::lit(0.5))).collect()
}

fn check_grid(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("k-grid must be non-empty"));
    }
    Ok(())
}

/// Eigenvalues of `T_q(k)` on a k-grid, pulled back to energies in one band.
#[derive(Clone, Debug)]
pub struct SpectralSamples<T> {
    pub flux: RationalFlux,
    pub grid: usize,
    /// Row-major over the grid, each sorted ascending.
    pub lambdas: Vec<Vec<T>>,
    /// `Δ|_B⁻¹(λ_i(k))`, same layout.
    pub energies: Vec<Vec<T>>,
}

fn pull_back<T: Real>(table: &DiscriminantTable<T>, lambdas: &[T]) -> Result<Vec<T>> {
    lambdas.iter().map(|&l| table.invert(l.max(-T::one()).min(T::one()))).collect()
}

pub fn spectral_samples<T: Real>(
    table: &DiscriminantTable<T>,
    flux: RationalFlux,
    grid: usize,
) -> Result<SpectralSamples<T>> {
    check_grid(grid)?;
    flux.check(DEFAULT_MAX_Q)?;
    let ks = k_grid::<T>(grid);
    let rows: Result<Vec<(Vec<T>, Vec<T>)>> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let k = TorusPoint { x: ks[idx / grid], xi: ks[idx % grid] };
            let l = tq_eigenvalues(&flux, k)?;
            let e = pull_back(table, &l)?;
            Ok((l, e))
        })
        .collect();
    let (lambdas, energies) = rows?.into_iter().unzip();
    Ok(SpectralSamples { flux, grid, lambdas, energies })
}

/// `(1/(q|b|)) ⟨Σ_i f(Δ|_B⁻¹(λ_i(k)))⟩_k` on an `m × m` grid.
///
/// `support` bounds where `f` is nonzero; a Dirichlet eigenvalue strictly
/// inside it is rejected, since the pullback is not the magnetic spectrum
/// there.
pub fn dos_spectral<T: Real, F: Fn(T) -> T + Sync>(
    map: &BohrSommerfeldMap<T>,
    flux: RationalFlux,
    grid: usize,
    support: (T, T),
    f: F,
) -> Result<T> {
    let (lo, hi) = support;
    let tol = T::tol(1e-9, 64.0);
    if let Some(&d) = map
        .dirichlet_eigenvalues()
        .iter()
        .find(|&&d| d > lo + tol * T::one().max(d.abs()) && d < hi - tol * T::one().max(d.abs()))
    {
        return Err(Error::DirichletOverlap { energy: d.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let samples = spectral_samples(map.discriminant_table(), flux, grid)?;
    let total = kahan_sum(samples.energies.iter().map(|es| kahan_sum(es.iter().map(|&e| f(e)))));
    let norm = T::one() / (T::lit(flux.q as f64) * cell_area::<T>() * T::from_count(grid * grid));
    Ok(total * norm)
}

/// Which eigenvalues enter the grand potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpectralCone {
    /// Energies above `z_D` up to the `|Δ| = 1/3` edge, `f_β(μ - z)`.
    Upper,
    /// Energies below `z_D` down to the `|Δ| = 1/3` edge, `-f_β(z - μ)`.
    Lower,
    /// The whole band, `f_β(μ - z)`.
    Full,
}

impl From<Cone> for SpectralCone {
    fn from(c: Cone) -> Self {
        match c {
            Cone::Upper => SpectralCone::Upper,
            Cone::Lower => SpectralCone::Lower,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralThermo<T> {
    pub mu: T,
    pub beta: Beta<T>,
    pub cone: SpectralCone,
}

/// Contribution of one eigenvalue at energy `z` (weight included).
fn spectral_term<T: Real>(map: &BohrSommerfeldMap<T>, params: &SpectralThermo<T>, z: T) -> T {
    match params.cone {
        SpectralCone::Full => fermi_potential(params.beta, params.mu - z),
        SpectralCone::Upper => {
            let w = cone_weight(map, Cone::Upper, z);
            if w == T::zero() {
                T::zero()
            } else {
                w * fermi_potential(params.beta, params.mu - z)
            }
        }
        SpectralCone::Lower => {
            let w = cone_weight(map, Cone::Lower, z);
            if w == T::zero() {
                T::zero()
            } else {
                -w * fermi_potential(params.beta, z - params.mu)
            }
        }
    }
}

/// Energy interval holding every eigenvalue with a nonzero term.
fn energy_window<T: Real>(map: &BohrSommerfeldMap<T>, params: &SpectralThermo<T>) -> (T, T) {
    let zd = map.z_d();
    let (lo, hi) = map.cone_domain();
    let band = map.band();
    let finite = matches!(params.beta, Beta::Finite(_));
    let mu = params.mu;
    match params.cone {
        SpectralCone::Upper if finite => (zd, hi),
        SpectralCone::Upper => (zd, mu.max(zd).min(hi)),
        SpectralCone::Lower if finite => (lo, zd),
        SpectralCone::Lower => (mu.min(zd).max(lo), zd),
        SpectralCone::Full if finite => (band.alpha, band.beta),
        SpectralCone::Full => (band.alpha, mu.max(band.alpha).min(band.beta)),
    }
}

/// The same interval in `λ = Δ(z)`, widened slightly.
fn lambda_window<T: Real>(map: &BohrSommerfeldMap<T>, window: (T, T)) -> Result<(T, T)> {
    let to_lambda = |z: T| -> Result<T> {
        if z == map.z_d() {
            Ok(T::zero())
        } else {
            Ok(map.discriminant_table().eval(z)?.0)
        }
    };
    let (a, b) = (to_lambda(window.0)?, to_lambda(window.1)?);
    let pad = T::lit(1e-12);
    Ok(((a.min(b) - pad).max(-T::one() - pad), (a.max(b) + pad).min(T::one() + pad)))
}

fn check_mu<T: Real>(map: &BohrSommerfeldMap<T>, params: &SpectralThermo<T>) -> Result<()> {
    let (lo, hi) = match params.cone {
        SpectralCone::Full => (map.band().alpha, map.band().beta),
        _ => map.cone_domain(),
    };
    if !(params.mu >= lo && params.mu <= hi) {
        return Err(Error::domain(format!(
            "chemical potential {} outside [{}, {}]",
            params.mu.as_f64(),
            lo.as_f64(),
            hi.as_f64()
        )));
    }
    Ok(())
}

/// Sum of spectral terms over one k-point's eigenvalues in `window`.
fn k_point_sum<T: Real>(
    map: &BohrSommerfeldMap<T>,
    params: &SpectralThermo<T>,
    lambdas: impl IntoIterator<Item = T>,
) -> Result<T> {
    let zero = T::lit(ZERO_EIGENVALUE);
    let table = map.discriminant_table();
    let mut acc = KahanSum::new();
    for l in lambdas {
        let z = if l.abs() <= zero { map.z_d() } else { table.invert(l.max(-T::one()).min(T::one()))? };
        acc.add(spectral_term(map, params, z));
    }
    Ok(acc.value())
}

/// Parts of `[a, b]` outside `(-δ, δ)`, and whether `[-δ, δ]` meets it.
fn split_zero<T: Real>(lwin: (T, T), delta: T) -> (Vec<(T, T)>, bool) {
    let (a, b) = lwin;
    let mut parts = Vec::with_capacity(2);
    if a < -delta {
        parts.push((a, b.min(-delta)));
    }
    if b > delta {
        parts.push((a.max(delta), b));
    }
    (parts, a <= delta && b >= -delta)
}

/// Sum over the grid row `k1`, all `k2`.
fn row_sum<T: Real>(
    map: &BohrSommerfeldMap<T>,
    flux: &RationalFlux,
    params: &SpectralThermo<T>,
    lwin: (T, T),
    k1: T,
    k2s: &[T],
) -> Result<T> {
    let mut acc = KahanSum::new();
    if flux.q == 1 {
        for &k2 in k2s {
            let all = tq_eigenvalues(flux, TorusPoint { x: k1, xi: k2 })?;
            let inside = all.into_iter().filter(|&l| l >= lwin.0 && l <= lwin.1);
            acc.add(k_point_sum(map, params, inside)?);
        }
        return Ok(acc.value());
    }
    let chain = tq_chain(flux, TorusPoint { x: k1, xi: k2s[0] });
    let (cut, min_link) =
        chain
            .links
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |(i, m), (j, l)| if l.norm() < m { (j, l.norm()) } else { (i, m) });
    if min_link < T::lit(MIN_LINK) {
        // A vanishing link opens the ring: the spectrum no longer depends on k2.
        let n = chain.dim();
        let off = (1..n).map(|s| chain.links[(cut + s) % n].norm()).collect();
        let open = SymTridiagonal { diag: vec![T::zero(); n], off };
        let tol = T::tol(1e-15, 4.0);
        let roots = open.eigenvalues_in(lwin.0, lwin.1, tol);
        let per_k = k_point_sum(map, params, roots)?;
        return Ok(per_k * T::from_count(k2s.len()));
    }
    let (jac, _) = PeriodicJacobi::from_chain(&chain)?;
    let delta = T::lit(ZERO_EIGENVALUE);
    let (parts, zero_band) = split_zero(lwin, delta);
    let windows: Vec<_> = parts.iter().map(|&(a, b)| jac.window(a, b)).collect();
    // Bloch phase Σ arg(links): the k2 dependence is -q k2.
    let base: T = chain.links.iter().step_by(2).fold(T::zero(), |s, l| s + l.arg());
    let q = T::lit(flux.q as f64);
    for &k2 in k2s {
        let phase = base - q * k2;
        let mut roots: Vec<T> = windows.iter().flat_map(|w| jac.eigenvalues_in(w, phase)).collect();
        if zero_band {
            let zeros = jac.count_below(delta, phase) - jac.count_below(-delta, phase);
            roots.extend(std::iter::repeat(T::zero()).take(zeros));
        }
        acc.add(k_point_sum(map, params, roots)?);
    }
    Ok(acc.value())
}

/// `Ω = (1/(q|b|)) ⟨Σ_i η(z_i) φ(z_i)⟩_k` with `z_i = Δ|_B⁻¹(λ_i(k))`.
pub fn grand_canonical_spectral<T: Real>(
    map: &BohrSommerfeldMap<T>,
    flux: RationalFlux,
    params: &SpectralThermo<T>,
    grid: usize,
) -> Result<T> {
    grand_canonical_spectral_limited(map, flux, params, grid, DEFAULT_MAX_Q)
}

pub fn grand_canonical_spectral_limited<T: Real>(
    map: &BohrSommerfeldMap<T>,
    flux: RationalFlux,
    params: &SpectralThermo<T>,
    grid: usize,
    max_q: u64,
) -> Result<T> {
    check_grid(grid)?;
    flux.check(max_q)?;
    check_mu(map, params)?;
    let lwin = lambda_window(map, energy_window(map, params))?;
    let ks = k_grid::<T>(grid);
    let rows: Result<Vec<T>> = ks.par_iter().map(|&k1| row_sum(map, &flux, params, lwin, k1, &ks)).collect();
    let total = kahan_sum(rows?);
    let norm = T::one() / (T::lit(flux.q as f64) * cell_area::<T>() * T::from_count(grid * grid));
    Ok(total * norm)
}

/// Sequence of fluxes for a magnetization curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxSweep {
    /// `h = 2πp/q` for `p = p_lo..=p_hi` at fixed `q`.
    FixedDenominator { q: u64, p_lo: u64, p_hi: u64 },
    /// `h = 2π/q` for `q = q_lo..=q_hi`.
    UnitNumerator { q_lo: u64, q_hi: u64 },
}

impl FluxSweep {
    pub fn fluxes(&self) -> Result<Vec<RationalFlux>> {
        match *self {
            FluxSweep::FixedDenominator { q, p_lo, p_hi } => {
                if p_lo >= p_hi || p_hi > q {
                    return Err(Error::invalid(format!("flux sweep needs p_lo < p_hi <= q, got {p_lo}..{p_hi} / {q}")));
                }
                (p_lo..=p_hi).map(|p| RationalFlux::new(p, q)).collect()
            }
            FluxSweep::UnitNumerator { q_lo, q_hi } => {
                if q_lo == 0 || q_lo >= q_hi {
                    return Err(Error::invalid(format!("flux sweep needs 0 < q_lo < q_hi, got {q_lo}..{q_hi}")));
                }
                (q_lo..=q_hi).map(|q| RationalFlux::new(1, q)).collect()
            }
        }
    }
}

/// Grand potential at one flux of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxOmega<T> {
    pub flux: RationalFlux,
    pub h: T,
    pub omega: T,
}

/// `M = -|b| (Ω_{i+1} - Ω_i)/(h_{i+1} - h_i)` at the midpoint flux.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMagnetization<T> {
    pub h_left: T,
    pub h_right: T,
    pub h: T,
    /// Mean of the two grand potentials.
    pub omega: T,
    pub m: T,
}

impl<T: Real> SpectralMagnetization<T> {
    pub fn inv_h(&self) -> T {
        T::one() / self.h
    }
}

#[derive(Clone, Debug)]
pub struct SpectralCurve<T> {
    pub omegas: Vec<FluxOmega<T>>,
    pub samples: Vec<SpectralMagnetization<T>>,
}

/// Consecutive-pair differences of `Ω` along a list of fluxes.
pub fn difference_quotients<T: Real>(omegas: &[FluxOmega<T>]) -> Vec<SpectralMagnetization<T>> {
    omegas
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            SpectralMagnetization {
                h_left: a.h,
                h_right: b.h,
                h: (a.h + b.h) * T::lit(0.5),
                omega: (a.omega + b.omega) * T::lit(0.5),
                m: -cell_area::<T>() * (b.omega - a.omega) / (b.h - a.h),
            }
        })
        .collect()
}

pub fn magnetization_spectral<T: Real>(
    map: &BohrSommerfeldMap<T>,
    sweep: FluxSweep,
    params: &SpectralThermo<T>,
    grid: usize,
    max_q: u64,
) -> Result<SpectralCurve<T>> {
    check_grid(grid)?;
    check_mu(map, params)?;
    let fluxes = sweep.fluxes()?;
    for f in &fluxes {
        f.check(max_q)?;
    }
    let omegas: Result<Vec<FluxOmega<T>>> = fluxes
        .par_iter()
        .map(|&flux| {
            let omega = grand_canonical_spectral_limited(map, flux, params, grid, max_q)?;
            Ok(FluxOmega { flux, h: flux.h(), omega })
        })
        .collect();
    let omegas = omegas?;
    let samples = difference_quotients(&omegas);
    Ok(SpectralCurve { omegas, samples })
}

/// One magnetic band: energy range of eigenvalue index `index` over k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ButterflyBand<T> {
    pub p: u64,
    pub q: u64,
    pub h: T,
    pub index: usize,
    pub band_lo: T,
    pub band_hi: T,
}

/// Magnetic bands for every reduced `p/q` with `0 <= p <= q <= q_max`,
/// sampled on a `(k_samples + 1)²` grid over the reduced zone
/// `[0, 2π/q]²` (the spectrum is `2π/q`-periodic in both directions).
pub fn butterfly<T: Real>(
    table: &DiscriminantTable<T>,
    q_max: u64,
    k_samples: usize,
    max_q: u64,
) -> Result<Vec<ButterflyBand<T>>> {
    if q_max == 0 || k_samples == 0 {
        return Err(Error::invalid("butterfly needs q_max >= 1 and k_samples >= 1"));
    }
    if q_max > max_q {
        return Err(Error::Resource(format!("butterfly q_max = {q_max} exceeds limit {max_q}")));
    }
    let mut fractions = Vec::new();
    for q in 1..=q_max {
        for p in 0..=q {
            if gcd(p, q) == 1 {
                fractions.push(RationalFlux::new(p, q)?);
            }
        }
    }
    let per: Result<Vec<Vec<ButterflyBand<T>>>> = fractions
        .par_iter()
        .map(|flux| {
            let n = flux.dim();
            let step = T::TAU() / (T::lit(flux.q as f64) * T::from_count(k_samples));
            let mut lo = vec![T::infinity(); n];
            let mut hi = vec![T::neg_infinity(); n];
            for i in 0..=k_samples {
                for j in 0..=k_samples {
                    let k = TorusPoint { x: step * T::from_count(i), xi: step * T::from_count(j) };
                    for (idx, l) in tq_eigenvalues(flux, k)?.into_iter().enumerate() {
                        lo[idx] = lo[idx].min(l);
                        hi[idx] = hi[idx].max(l);
                    }
                }
            }
            let mut bands = Vec::with_capacity(n);
            for idx in 0..n {
                let a = table.invert(lo[idx].max(-T::one()))?;
                let b = table.invert(hi[idx].min(T::one()))?;
                bands.push(ButterflyBand {
                    p: flux.p,
                    q: flux.q,
                    h: flux.h(),
                    index: idx,
                    band_lo: a.min(b),
                    band_hi: a.max(b),
                });
            }
            bands.sort_by(|x, y| x.band_lo.partial_cmp(&y.band_lo).expect("finite energies"));
            for (i, b) in bands.iter_mut().enumerate() {
                b.index = i;
            }
            Ok(bands)
        })
        .collect();
    Ok(per?.into_iter().flatten().collect())
}
