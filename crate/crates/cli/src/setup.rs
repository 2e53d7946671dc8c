//! Model construction with the on-disk cache.

use std::io::BufReader;
use std::path::{Path, PathBuf};

use hexdos::hill::{Band, HillModel, HillPotential, PotentialKind};
use hexdos::landau::BohrSommerfeldMap;
use hexdos::symbol::PhaseAreaTable;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sha256_hex, write_file};

const CACHE_VERSION: u32 = 1;

pub fn load_potential(spec: &str) -> Result<(HillPotential<f64>, String), CliError> {
    let s = spec.trim();
    let pot = if s == "zero" {
        HillPotential::zero()
    } else if let Some(a) = s.strip_prefix("cosine:") {
        let a: f64 =
            a.trim().parse().map_err(|_| CliError::Config(format!("cosine amplitude must be a number, got {a:?}")))?;
        HillPotential::cosine(a)
    } else {
        let path = Path::new(s);
        if !path.exists() {
            return Err(CliError::Config(format!("potential must be zero, cosine:<a> or a CSV path, got {s:?}")));
        }
        HillPotential::from_csv_path(path).map_err(|e| CliError::Config(e.to_string()))?
    };
    let hash = potential_hash(&pot);
    Ok((pot, hash))
}

/// Hash of the potential values, independent of how they were specified.
pub fn potential_hash(p: &HillPotential<f64>) -> String {
    let mut bytes = p.describe().into_bytes();
    if let PotentialKind::Sampled { t, v } = p.kind() {
        for x in t.iter().chain(v) {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

/// Everything a subcommand needs about the edge model.
pub struct Setup {
    pub model: HillModel<f64>,
    pub potential_hash: String,
    pub bands: Vec<Band<f64>>,
}

#[derive(Serialize, Deserialize)]
struct BandCache {
    key: String,
    bands: Vec<(usize, f64, f64)>,
}

fn cache_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cache directory {} not writable: {e}", dir.display())))?;
    Ok(dir.join(name))
}

impl Setup {
    /// Builds the model and finds at least `count` bands.
    pub fn new(cfg: &RunConfig, count: usize) -> Result<Self, CliError> {
        let (pot, potential_hash) = load_potential(&cfg.potential)?;
        let model = HillModel::with_steps(pot, cfg.steps).map_err(|e| CliError::Config(e.to_string()))?;
        let key = sha256_hex(format!("bands v{CACHE_VERSION} {potential_hash} steps={}", cfg.steps).as_bytes());
        let file = match &cfg.cache_dir {
            Some(d) => Some(cache_path(d, &format!("bands_{}.json", &potential_hash[..16]))?),
            None => None,
        };
        if let Some(f) = &file {
            if let Some(bands) = read_band_cache(f, &key, count) {
                return Ok(Self { model, potential_hash, bands });
            }
        }
        let bands = model.find_bands(count)?;
        if let Some(f) = &file {
            let cache = BandCache { key, bands: bands.iter().map(|b| (b.index, b.alpha, b.beta)).collect() };
            write_file(f, &serde_json::to_string(&cache).expect("band cache serializes"))?;
        }
        Ok(Self { model, potential_hash, bands })
    }

    pub fn band(&self, index: usize) -> Result<Band<f64>, CliError> {
        self.bands
            .iter()
            .find(|b| b.index == index)
            .copied()
            .ok_or_else(|| CliError::Config(format!("band {index} not available")))
    }

    pub fn map(&self, cfg: &RunConfig) -> Result<BohrSommerfeldMap<f64>, CliError> {
        let band = self.band(cfg.band)?;
        let table = phase_table(cfg)?;
        Ok(BohrSommerfeldMap::new(&self.model, &band, table, cfg.table_intervals)?)
    }
}

fn read_band_cache(path: &Path, key: &str, count: usize) -> Option<Vec<Band<f64>>> {
    let text = std::fs::read_to_string(path).ok()?;
    let cache: BandCache = serde_json::from_str(&text).ok()?;
    if cache.key != key || cache.bands.len() < count {
        return None;
    }
    Some(cache.bands.iter().take(count).map(|&(index, alpha, beta)| Band { index, alpha, beta }).collect())
}

/// The phase-area table, from the cache when its key matches.
pub fn phase_table(cfg: &RunConfig) -> Result<PhaseAreaTable<f64>, CliError> {
    let key = sha256_hex(format!("phase-area v{CACHE_VERSION} samples={}", cfg.phase_samples).as_bytes());
    let Some(dir) = &cfg.cache_dir else {
        return Ok(PhaseAreaTable::build(cfg.phase_samples)?);
    };
    let path = cache_path(dir, &format!("phase_area_{}.csv", cfg.phase_samples))?;
    if let Ok(text) = std::fs::read_to_string(&path) {
        if text.lines().next() == Some(&format!("# key: {key}")) {
            if let Ok(t) = PhaseAreaTable::read_csv(BufReader::new(text.as_bytes())) {
                return Ok(t);
            }
        }
    }
    let table = PhaseAreaTable::build(cfg.phase_samples)?;
    let mut buf = format!("# key: {key}\n").into_bytes();
    table.write_csv(&mut buf)?;
    std::fs::write(&path, buf)?;
    Ok(table)
}
