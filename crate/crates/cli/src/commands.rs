use hexdos::compare::compare_magnetization;
use hexdos::landau::{perfect_cone_level, Cone};
use hexdos::semiclassics::{dos_smoothed, magnetization_vs_flux, Kernel, ThermoParams};
use hexdos::spectral::{butterfly, magnetization_spectral, SpectralCone, SpectralThermo};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::setup::Setup;

fn spectral_cone(cfg: &RunConfig) -> Result<SpectralCone, CliError> {
    match cfg.cone.as_str() {
        "upper" => Ok(SpectralCone::Upper),
        "lower" => Ok(SpectralCone::Lower),
        "full" => Ok(SpectralCone::Full),
        other => Err(CliError::Config(format!("cone must be upper, lower or full, got {other:?}"))),
    }
}

fn semi_cone(cfg: &RunConfig) -> Result<Cone, CliError> {
    match spectral_cone(cfg)? {
        SpectralCone::Upper => Ok(Cone::Upper),
        SpectralCone::Lower => Ok(Cone::Lower),
        SpectralCone::Full => Err(CliError::Config("cone full is only available to the spectral pipeline".into())),
    }
}

fn common_meta(t: &mut Table, cfg: &RunConfig, setup: &Setup) {
    t.meta("potential", &cfg.potential);
    t.meta("potential_hash", &setup.potential_hash[..16]);
    t.meta("band", cfg.band);
}

pub fn bands(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg, cfg.count)?;
    let mut t = Table::new("bands", &["index", "alpha", "beta", "z_D", "delta_prime"]);
    t.meta("potential", &cfg.potential);
    t.meta("steps", cfg.steps);
    for b in setup.bands.iter().take(cfg.count) {
        let d = setup.model.dirac_point(b)?;
        t.push(vec![b.index.into(), b.alpha.into(), b.beta.into(), d.z_d.into(), d.delta_prime.into()]);
    }
    Ok(t)
}

pub fn landau(cfg: &RunConfig) -> Result<Table, CliError> {
    let hs = cfg.hs(0.01);
    let [h] = hs[..] else {
        return Err(CliError::Config("landau takes a single h".into()));
    };
    let setup = Setup::new(cfg, cfg.band)?;
    let map = setup.map(cfg)?;
    let levels = map.landau_levels(h)?;
    let mut t = Table::new("landau", &["n", "z", "z_cone"]);
    common_meta(&mut t, cfg, &setup);
    t.meta("h", h);
    t.meta("z_D", map.z_d());
    for (n, z) in levels.indexed() {
        t.push(vec![n.into(), z.into(), perfect_cone_level(map.dirac(), h, n).into()]);
    }
    Ok(t)
}

pub fn dos(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg, cfg.band)?;
    let map = setup.map(cfg)?;
    let mus: Vec<f64> = cfg.mu_offsets("0.05:0.5:400")?.iter().map(|x| map.z_d() + x).collect();
    let mut t = Table::new("dos", &["mu", "rho", "sigma", "h"]);
    common_meta(&mut t, cfg, &setup);
    t.meta("pipeline", "semiclassical");
    t.meta("kernel", "gaussian");
    t.meta("mu_grid", cfg.mu_grid.as_deref().unwrap_or("0.05:0.5:400"));
    for h in cfg.hs(0.01) {
        for sigma in cfg.sigmas(0.02) {
            let curve = dos_smoothed(&map, h, &Kernel::Gaussian { sigma }, &mus)?;
            if let Some(w) = &curve.warning {
                eprintln!("warning: {w}");
                t.meta("warning", w);
            }
            for (mu, rho) in curve.mu.iter().zip(&curve.rho) {
                t.push(vec![(*mu).into(), (*rho).into(), sigma.into(), h.into()]);
            }
        }
    }
    Ok(t)
}

pub fn magnetization(cfg: &RunConfig) -> Result<Table, CliError> {
    let (semi, spec) = match cfg.pipeline.as_str() {
        "semi" => (true, false),
        "spectral" => (false, true),
        "both" => (true, true),
        other => return Err(CliError::Config(format!("pipeline must be semi, spectral or both, got {other:?}"))),
    };
    let sweep = cfg.sweep()?;
    let beta = cfg.beta()?;
    let cone = spectral_cone(cfg)?;
    if semi {
        semi_cone(cfg)?;
    }
    let setup = Setup::new(cfg, cfg.band)?;
    let map = setup.map(cfg)?;
    let mu = cfg.mu_at(map.z_d(), 0.3);
    let mut t = Table::new("magnet", &["h", "inv_h", "omega", "M", "pipeline"]);
    common_meta(&mut t, cfg, &setup);
    t.meta("mu", mu);
    t.meta("beta", cfg.beta_label());
    t.meta("cone", &cfg.cone);
    t.meta("k_grid", format!("{0}x{0}", cfg.k_grid));
    if semi {
        let hs: Vec<f64> = sweep.fluxes()?.iter().filter(|f| f.p() > 0).map(|f| f.h()).collect();
        let params = ThermoParams { mu, beta, cone: semi_cone(cfg)? };
        for s in magnetization_vs_flux(&map, &params, &hs)? {
            t.push(vec![s.h.into(), s.inv_h().into(), s.omega.into(), s.m.into(), Cell::Text("semi")]);
        }
    }
    if spec {
        let params = SpectralThermo { mu, beta, cone };
        let curve = magnetization_spectral(&map, sweep, &params, cfg.k_grid, cfg.max_q)?;
        for s in &curve.samples {
            t.push(vec![s.h.into(), s.inv_h().into(), s.omega.into(), s.m.into(), Cell::Text("spectral")]);
        }
    }
    Ok(t)
}

pub fn butterfly_cmd(cfg: &RunConfig) -> Result<Table, CliError> {
    let setup = Setup::new(cfg, cfg.band)?;
    let table = setup.model.discriminant_table(&setup.band(cfg.band)?, cfg.table_intervals)?;
    let bands = butterfly(&table, cfg.q_max, cfg.k_samples, cfg.max_q)?;
    let mut t = Table::new("butterfly", &["p", "q", "h", "band_lo", "band_hi"]);
    common_meta(&mut t, cfg, &setup);
    t.meta("k_samples", cfg.k_samples);
    for b in bands {
        t.push(vec![b.p.into(), b.q.into(), b.h.into(), b.band_lo.into(), b.band_hi.into()]);
    }
    Ok(t)
}

pub fn compare(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep()?;
    let beta = cfg.beta()?;
    let cone = semi_cone(cfg)?;
    let setup = Setup::new(cfg, cfg.band)?;
    let map = setup.map(cfg)?;
    let mu = cfg.mu_at(map.z_d(), 0.3);
    let c = compare_magnetization(&map, sweep, mu, beta, cone, cfg.k_grid, cfg.max_q)?;
    let s = c.summary(cfg.jump_fraction);
    let mut t = Table::new("compare", &["inv_h", "M_semi", "M_spec", "M_sawtooth", "abs_diff"]);
    common_meta(&mut t, cfg, &setup);
    t.meta("mu", mu);
    t.meta("beta", cfg.beta_label());
    t.meta("k_grid", format!("{0}x{0}", cfg.k_grid));
    t.meta("max_relative_difference", format!("{:.6e}", s.relative_difference));
    t.meta("jumps_semi", s.jumps_semi.len());
    t.meta("jumps_spec", s.jumps_spec.len());
    eprintln!(
        "max relative difference {:.3e}; jumps semi {} spectral {}",
        s.relative_difference,
        s.jumps_semi.len(),
        s.jumps_spec.len()
    );
    for r in &c.rows {
        t.push(vec![r.inv_h.into(), r.m_semi.into(), r.m_spec.into(), r.m_sawtooth.into(), r.abs_diff.into()]);
    }
    Ok(t)
}
