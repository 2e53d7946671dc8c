//! Run configuration: a flat JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Accepts `0.01` or `[0.01, 0.005]` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Inverse temperature: a positive number, or `"inf"` for zero temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Text(String),
}

/// Every setting of a run. Keys match the long flags with `-` replaced
/// by `_`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `zero`, `cosine:<amplitude>` or a path to a `t,V` CSV file.
    pub potential: String,
    pub band: usize,
    pub count: usize,
    pub steps: usize,
    pub table_intervals: usize,
    pub phase_samples: usize,
    pub h: Option<OneOrMany>,
    pub sigma: Option<OneOrMany>,
    /// `lo:hi:n`, offsets from `z_D`.
    pub mu_grid: Option<String>,
    pub mu: Option<f64>,
    pub mu_offset: Option<f64>,
    pub beta: Option<BetaSpec>,
    pub cone: String,
    pub pipeline: String,
    pub q: Option<u64>,
    /// `lo:hi` numerators at fixed `q`.
    pub p: Option<String>,
    /// `lo:hi` denominators at unit numerator.
    pub q_range: Option<String>,
    pub k_grid: usize,
    pub max_q: u64,
    pub q_max: u64,
    pub k_samples: usize,
    pub jump_fraction: f64,
    // Locations do not change results, so they stay out of the hash.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: "zero".into(),
            band: 1,
            count: 2,
            steps: hexdos::hill::DEFAULT_STEPS,
            table_intervals: hexdos::hill::DEFAULT_TABLE_INTERVALS,
            phase_samples: hexdos::symbol::DEFAULT_TABLE_SAMPLES,
            h: None,
            sigma: None,
            mu_grid: None,
            mu: None,
            mu_offset: None,
            beta: None,
            cone: "upper".into(),
            pipeline: "both".into(),
            q: None,
            p: None,
            q_range: None,
            k_grid: hexdos::spectral::DEFAULT_K_GRID,
            max_q: hexdos::spectral::DEFAULT_MAX_Q,
            q_max: 12,
            k_samples: 4,
            jump_fraction: 0.5,
            out_dir: None,
            cache_dir: None,
        }
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// JSON config file with flat keys mirroring the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `zero`, `cosine:<amplitude>` or a path to a `t,V` CSV file.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long, global = true)]
    pub band: Option<usize>,
    /// Number of bands listed by `bands`.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// RK4 steps per edge.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub table_intervals: Option<usize>,
    #[arg(long, global = true)]
    pub phase_samples: Option<usize>,
    /// Flux values, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    /// Gaussian widths, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// `lo:hi:n` chemical potentials as offsets from `z_D`.
    #[arg(long, global = true)]
    pub mu_grid: Option<String>,
    /// Absolute chemical potential (wins over `--mu-offset`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu_offset: Option<f64>,
    /// Inverse temperature, or `inf`.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    /// `upper`, `lower` or `full` (spectral only).
    #[arg(long, global = true)]
    pub cone: Option<String>,
    /// `semi`, `spectral` or `both`.
    #[arg(long, global = true)]
    pub pipeline: Option<String>,
    /// Fixed flux denominator.
    #[arg(long, global = true)]
    pub q: Option<u64>,
    /// `lo:hi` numerators at fixed `--q`.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// `lo:hi` denominators of `h = 2π/q`.
    #[arg(long, global = true)]
    pub q_range: Option<String>,
    /// Brillouin-zone grid size per direction.
    #[arg(long, global = true)]
    pub k_grid: Option<usize>,
    /// Largest denominator accepted by the spectral pipeline.
    #[arg(long, global = true)]
    pub max_q: Option<u64>,
    /// Largest denominator in the butterfly.
    #[arg(long, global = true)]
    pub q_max: Option<u64>,
    #[arg(long, global = true)]
    pub k_samples: Option<usize>,
    #[arg(long, global = true)]
    pub jump_fraction: Option<f64>,
    /// Directory for CSV output; stdout when absent.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
}

fn load_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

macro_rules! merge {
    ($cfg:ident, $o:ident; $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

macro_rules! merge_opt {
    ($cfg:ident, $o:ident; $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = Some(v); })*
    };
}

impl RunConfig {
    /// File values (if any), then flags.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &o.config {
            Some(path) => load_file(path)?,
            None => RunConfig::default(),
        };
        merge!(cfg, o; potential, band, count, steps, table_intervals, phase_samples, cone, pipeline,
            k_grid, max_q, q_max, k_samples, jump_fraction);
        merge_opt!(cfg, o; mu_grid, mu, mu_offset, q, p, q_range, out_dir, cache_dir);
        if let Some(h) = &o.h {
            cfg.h = Some(OneOrMany::Many(h.clone()));
        }
        if let Some(s) = &o.sigma {
            cfg.sigma = Some(OneOrMany::Many(s.clone()));
        }
        if let Some(b) = &o.beta {
            cfg.beta = Some(BetaSpec::Text(b.clone()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("band", self.band),
            ("count", self.count),
            ("steps", self.steps),
            ("table_intervals", self.table_intervals),
            ("phase_samples", self.phase_samples),
            ("k_grid", self.k_grid),
            ("k_samples", self.k_samples),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if !matches!(self.cone.as_str(), "upper" | "lower" | "full") {
            return Err(CliError::Config(format!("cone must be upper, lower or full, got {:?}", self.cone)));
        }
        if !matches!(self.pipeline.as_str(), "semi" | "spectral" | "both") {
            return Err(CliError::Config(format!("pipeline must be semi, spectral or both, got {:?}", self.pipeline)));
        }
        if !(self.jump_fraction > 0.0 && self.jump_fraction < 1.0) {
            return Err(CliError::Config("jump_fraction must lie in (0, 1)".into()));
        }
        for (name, list) in [("h", &self.h), ("sigma", &self.sigma)] {
            if let Some(l) = list {
                let v = l.values();
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(CliError::Config(format!("{name} needs one or more positive values")));
                }
            }
        }
        if let Some(d) = &self.out_dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::Config(format!("output directory {} not writable: {e}", d.display())))?;
        }
        Ok(())
    }

    pub fn hs(&self, default: f64) -> Vec<f64> {
        self.h.as_ref().map_or(vec![default], OneOrMany::values)
    }

    pub fn sigmas(&self, default: f64) -> Vec<f64> {
        self.sigma.as_ref().map_or(vec![default], OneOrMany::values)
    }

    pub fn beta(&self) -> Result<hexdos::semiclassics::Beta<f64>, CliError> {
        use hexdos::semiclassics::Beta;
        let value = match &self.beta {
            None => return Ok(Beta::Infinite),
            Some(BetaSpec::Value(v)) => *v,
            Some(BetaSpec::Text(t)) if matches!(t.trim(), "inf" | "infinity" | "Infinity") => {
                return Ok(Beta::Infinite)
            }
            Some(BetaSpec::Text(t)) => {
                t.trim().parse().map_err(|_| CliError::Config(format!("beta must be a number or inf, got {t:?}")))?
            }
        };
        if value.is_infinite() && value > 0.0 {
            return Ok(Beta::Infinite);
        }
        Beta::new(value).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Label used in CSV metadata.
    pub fn beta_label(&self) -> String {
        match self.beta() {
            Ok(hexdos::semiclassics::Beta::Finite(b)) => format!("{b}"),
            _ => "inf".into(),
        }
    }

    /// Chemical-potential offsets from `z_D`.
    pub fn mu_offsets(&self, default: &str) -> Result<Vec<f64>, CliError> {
        let spec = self.mu_grid.as_deref().unwrap_or(default);
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || CliError::Config(format!("mu_grid must be lo:hi:n with lo < hi and n >= 2, got {spec:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if lo >= hi || lo.is_nan() || hi.is_nan() || n < 2 {
            return Err(bad());
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    pub fn mu_at(&self, z_d: f64, default_offset: f64) -> f64 {
        self.mu.unwrap_or(z_d + self.mu_offset.unwrap_or(default_offset))
    }

    pub fn sweep(&self) -> Result<hexdos::spectral::FluxSweep, CliError> {
        use hexdos::spectral::FluxSweep;
        if let Some(r) = &self.q_range {
            let (q_lo, q_hi) = parse_range(r, "q_range")?;
            return Ok(FluxSweep::UnitNumerator { q_lo, q_hi });
        }
        let q = self.q.ok_or_else(|| CliError::Config("flux sweep needs q (with p) or q_range".into()))?;
        let (p_lo, p_hi) = match &self.p {
            Some(p) => parse_range(p, "p")?,
            None => (1, q),
        };
        if q == 0 || p_lo >= p_hi || p_hi > q {
            return Err(CliError::Config(format!("flux sweep needs 0 <= p_lo < p_hi <= q, got {p_lo}:{p_hi} / {q}")));
        }
        Ok(FluxSweep::FixedDenominator { q, p_lo, p_hi })
    }

    /// Canonical JSON echoed into output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn parse_range(s: &str, name: &str) -> Result<(u64, u64), CliError> {
    let bad = || CliError::Config(format!("{name} must be lo:hi, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"band": 1, "h": [0.01, 0.02], "beta": 200, "q": 150, "p": "1:10"}"#).unwrap();
        let o = Overrides { config: Some(path), h: Some(vec![0.005]), ..Default::default() };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_eq!(cfg.hs(1.0), vec![0.005]);
        assert_eq!(cfg.beta_label(), "200");
        assert_eq!(cfg.sweep().unwrap(), hexdos::spectral::FluxSweep::FixedDenominator { q: 150, p_lo: 1, p_hi: 10 });
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"bnad": 1}"#).unwrap();
        let o = Overrides { config: Some(path), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&o), Err(CliError::Config(_))));
        let cfg = RunConfig { mu_grid: Some("0.5:0.1:10".into()), ..Default::default() };
        assert!(cfg.mu_offsets("0:1:2").is_err());
        let cfg = RunConfig { q: Some(10), p: Some("3:2".into()), ..Default::default() };
        assert!(cfg.sweep().is_err());
    }

    #[test]
    fn beta_parsing() {
        let cfg = RunConfig { beta: Some(BetaSpec::Text("inf".into())), ..Default::default() };
        assert_eq!(cfg.beta().unwrap(), hexdos::semiclassics::Beta::Infinite);
        let cfg = RunConfig { beta: Some(BetaSpec::Value(-1.0)), ..Default::default() };
        assert!(cfg.beta().is_err());
    }
}
