//! Bohr–Sommerfeld map `g(x) = F0(Δ(x)²)` near a Dirac point and the
//! Landau levels `g(z_n) = |n| h` it produces.

use crate::error::{Error, Result};
use crate::hill::{Band, DiracPoint, DiscriminantTable, HillModel};
use crate::scalar::Real;
use crate::symbol::PhaseAreaTable;

/// Which side of the Dirac point a level or energy lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cone {
    /// Energies above `z_D` (levels `n >= 1`).
    Upper,
    /// Energies below `z_D` (levels `n <= -1`).
    Lower,
}

/// Quantization map of one band around its Dirac point.
#[derive(Clone, Debug)]
pub struct BohrSommerfeldMap<T> {
    table: DiscriminantTable<T>,
    phase: PhaseAreaTable<T>,
    dirac: DiracPoint<T>,
    lower_end: T,
    upper_end: T,
    dirichlet: Vec<T>,
}

impl<T: Real> BohrSommerfeldMap<T> {
    /// Builds the map for `band`, tabulating Δ on `intervals` sub-intervals.
    pub fn new(model: &HillModel<T>, band: &Band<T>, phase: PhaseAreaTable<T>, intervals: usize) -> Result<Self> {
        let table = model.discriminant_table(band, intervals)?;
        let dirac = model.dirac_point(band)?;
        let third = T::one() / T::lit(3.0);
        let a = model.invert_discriminant(band, third)?;
        let b = model.invert_discriminant(band, -third)?;
        // Dirichlet eigenvalues may sit exactly on a closed-gap edge.
        let pad = band.width() * T::lit(1e-6);
        let dirichlet = model.dirichlet_spectrum(band.alpha - pad, band.beta + pad)?;
        Ok(Self { table, phase, dirac, lower_end: a.min(b), upper_end: a.max(b), dirichlet })
    }

    pub fn band(&self) -> &Band<T> {
        self.table.band()
    }

    pub fn dirac(&self) -> &DiracPoint<T> {
        &self.dirac
    }

    pub fn z_d(&self) -> T {
        self.dirac.z_d
    }

    pub fn discriminant_table(&self) -> &DiscriminantTable<T> {
        &self.table
    }

    pub fn phase_table(&self) -> &PhaseAreaTable<T> {
        &self.phase
    }

    /// Energies where `|Δ| = 1/3`, bounding the conical region.
    pub fn cone_domain(&self) -> (T, T) {
        (self.lower_end, self.upper_end)
    }

    /// Dirichlet eigenvalues inside the band (closed band included).
    pub fn dirichlet_eigenvalues(&self) -> &[T] {
        &self.dirichlet
    }

    /// `F0(1/9)`: `g` ranges over `[0, max_level()]` on the cone domain.
    pub fn max_level(&self) -> T {
        self.phase.max_value()
    }

    pub fn cone_of(&self, x: T) -> Cone {
        if x >= self.dirac.z_d {
            Cone::Upper
        } else {
            Cone::Lower
        }
    }

    /// `g(x) = F0(Δ(x)²)` for `x` in the cone domain.
    pub fn g(&self, x: T) -> Result<T> {
        Ok(self.g_with_derivative(x)?.0)
    }

    pub fn g_prime(&self, x: T) -> Result<T> {
        Ok(self.g_with_derivative(x)?.1)
    }

    /// `(g(x), g'(x))` with `g' = 2 Δ Δ' F0'(Δ²)`.
    pub fn g_with_derivative(&self, x: T) -> Result<(T, T)> {
        let slack = T::tol(1e-12, 64.0) * T::one().max(x.abs());
        if !(x >= self.lower_end - slack && x <= self.upper_end + slack) {
            return Err(Error::domain(format!(
                "energy {} outside the cone domain [{}, {}]",
                x.as_f64(),
                self.lower_end.as_f64(),
                self.upper_end.as_f64()
            )));
        }
        let (d, dp) = self.table.eval(x)?;
        let w = (d * d).min(crate::symbol::saddle_value());
        let (f, fp) = self.phase.eval_with_derivative(w)?;
        Ok((f, T::lit(2.0) * d * dp * fp))
    }

    /// The energy on `cone` with `g = s`, `0 <= s <= max_level()`.
    pub fn g_inverse(&self, cone: Cone, s: T) -> Result<T> {
        let w = self.phase.inverse(s)?;
        let y = w.sqrt();
        // Δ decreases through z_D on odd bands.
        let upper_sign = if self.band().is_decreasing() { -T::one() } else { T::one() };
        let target = match cone {
            Cone::Upper => upper_sign * y,
            Cone::Lower => -upper_sign * y,
        };
        if s == T::zero() {
            return Ok(self.dirac.z_d);
        }
        let x = self.table.invert(target)?;
        Ok(match cone {
            Cone::Upper => x.max(self.dirac.z_d),
            Cone::Lower => x.min(self.dirac.z_d),
        })
    }

    /// All Landau levels `|n| h <= F0(1/9)` on both cones, with `z_0 = z_D`.
    pub fn landau_levels(&self, h: T) -> Result<LandauSpectrum<T>> {
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::domain(format!("flux h = {} must be positive", h.as_f64())));
        }
        let top = self.max_level();
        let nmax = (top / h).floor().to_i64().unwrap_or(0);
        if nmax > 50_000_000 {
            return Err(Error::Resource(format!("h = {} gives {nmax} levels", h.as_f64())));
        }
        let count = nmax as usize;
        let mut upper = Vec::with_capacity(count);
        let mut lower = Vec::with_capacity(count);
        for n in 1..=nmax {
            let s = (T::from_count(n as usize) * h).min(top);
            upper.push(self.g_inverse(Cone::Upper, s)?);
            lower.push(self.g_inverse(Cone::Lower, s)?);
        }
        Ok(LandauSpectrum { h, z_d: self.dirac.z_d, upper, lower })
    }

    /// Levels for `n = 1..=nmax` on one cone only.
    pub fn cone_levels(&self, cone: Cone, h: T, nmax: usize) -> Result<Vec<T>> {
        let top = self.max_level();
        (1..=nmax)
            .take_while(|&n| T::from_count(n) * h <= top)
            .map(|n| self.g_inverse(cone, T::from_count(n) * h))
            .collect()
    }
}

/// Landau levels at one flux value.
#[derive(Clone, Debug, PartialEq)]
pub struct LandauSpectrum<T> {
    pub h: T,
    pub z_d: T,
    /// `z_n`, `n = 1, 2, ...` above `z_D`, ascending.
    pub upper: Vec<T>,
    /// `z_{-n}`, `n = 1, 2, ...` below `z_D`, descending.
    pub lower: Vec<T>,
}

impl<T: Real> LandauSpectrum<T> {
    /// `z_n` for a signed level index.
    pub fn level(&self, n: i64) -> Option<T> {
        match n {
            0 => Some(self.z_d),
            n if n > 0 => self.upper.get(n as usize - 1).copied(),
            n => self.lower.get((-n) as usize - 1).copied(),
        }
    }

    pub fn max_index(&self) -> i64 {
        self.upper.len() as i64
    }

    /// `(n, z_n)` for every level, ascending in energy.
    pub fn indexed(&self) -> Vec<(i64, T)> {
        let mut out = Vec::with_capacity(self.upper.len() + self.lower.len() + 1);
        for (k, &z) in self.lower.iter().enumerate().rev() {
            out.push((-(k as i64) - 1, z));
        }
        out.push((0, self.z_d));
        for (k, &z) in self.upper.iter().enumerate() {
            out.push((k as i64 + 1, z));
        }
        out
    }
}

/// Perfect-cone levels `z_D ± |v_F| sqrt(|n| h)`, upper cone for `n > 0`.
pub fn perfect_cone_level<T: Real>(dirac: &DiracPoint<T>, h: T, n: i64) -> T {
    let v = dirac.fermi_velocity().abs();
    let mag = v * (T::lit(n.unsigned_abs() as f64) * h).sqrt();
    if n >= 0 {
        dirac.z_d + mag
    } else {
        dirac.z_d - mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::HillPotential;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn free_map() -> BohrSommerfeldMap<f64> {
        let m = HillModel::new(HillPotential::zero());
        let b = m.find_bands(1).unwrap()[0];
        let phase = PhaseAreaTable::build(256).unwrap();
        BohrSommerfeldMap::new(&m, &b, phase, 1024).unwrap()
    }

    #[test]
    fn g_vanishes_quadratically_at_dirac_point() {
        let map = free_map();
        let z = map.z_d();
        assert_abs_diff_eq!(map.g(z).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(map.g_prime(z).unwrap(), 0.0, epsilon = 1e-9);
        // g ≈ F0'(0) Δ'(z_D)² (x - z_D)²
        let d = 1e-3;
        let expected = 27f64.sqrt() / (PI * PI) * d * d;
        assert_abs_diff_eq!(map.g(z + d).unwrap(), expected, epsilon = 1e-8);
    }

    #[test]
    fn cone_domain_edges_sit_at_one_third() {
        let map = free_map();
        let (a, b) = map.cone_domain();
        assert_abs_diff_eq!(a.sqrt().cos(), 1.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(b.sqrt().cos(), -1.0 / 3.0, epsilon = 1e-10);
        assert!(map.g(b + 0.01).is_err());
    }

    #[test]
    fn levels_invert_g() {
        let map = free_map();
        let spec = map.landau_levels(0.01).unwrap();
        assert_eq!(spec.upper.len(), (map.max_level() / 0.01).floor() as usize);
        for n in [-40i64, -3, -1, 1, 2, 17, 78] {
            let z = spec.level(n).unwrap();
            assert_abs_diff_eq!(map.g(z).unwrap(), n.unsigned_abs() as f64 * 0.01, epsilon = 1e-10);
            assert_eq!(map.cone_of(z), if n > 0 { Cone::Upper } else { Cone::Lower });
        }
        let idx = spec.indexed();
        assert!(idx.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn perfect_cone_velocity() {
        let map = free_map();
        let v = map.dirac().fermi_velocity().abs();
        assert_abs_diff_eq!(v, 3f64.powf(-0.75) * PI, epsilon = 1e-9);
        assert!(perfect_cone_level(map.dirac(), 0.01, 1) > map.z_d());
    }

    #[test]
    fn rejects_nonpositive_flux() {
        assert!(free_map().landau_levels(0.0).is_err());
    }
}
