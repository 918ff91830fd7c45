use serde::{Deserialize, Serialize};

const DEFAULT_TABLE: &str = include_str!("../../data/dvbs2x_modcod.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModcodEntry {
    #[serde(default)]
    pub modcod: String,
    pub es_n0_db: f64,
    pub spectral_efficiency: f64,
}

/// Step mapping from Es/N0 to spectral efficiency (bits/symbol).
///
/// Lookup returns the efficiency of the highest entry whose threshold does
/// not exceed the SINR, and zero below the first threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModcodTable {
    pub name: String,
    entries: Vec<ModcodEntry>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModcodError {
    #[error("MODCOD table is empty")]
    Empty,
    #[error("MODCOD thresholds must be strictly increasing (entry {0})")]
    ThresholdOrder(usize),
    #[error("MODCOD efficiencies must be positive and strictly increasing (entry {0})")]
    EfficiencyOrder(usize),
    #[error("cannot parse MODCOD table: {0}")]
    Parse(String),
}

#[derive(Deserialize)]
struct TableFile {
    #[serde(default)]
    name: String,
    entries: Vec<ModcodEntry>,
}

impl ModcodTable {
    pub fn new(name: impl Into<String>, entries: Vec<ModcodEntry>) -> Result<Self, ModcodError> {
        if entries.is_empty() {
            return Err(ModcodError::Empty);
        }
        for (i, e) in entries.iter().enumerate() {
            if !e.es_n0_db.is_finite() {
                return Err(ModcodError::ThresholdOrder(i));
            }
            if !(e.spectral_efficiency.is_finite() && e.spectral_efficiency > 0.0) {
                return Err(ModcodError::EfficiencyOrder(i));
            }
            if i > 0 {
                let prev = &entries[i - 1];
                if e.es_n0_db <= prev.es_n0_db {
                    return Err(ModcodError::ThresholdOrder(i));
                }
                if e.spectral_efficiency <= prev.spectral_efficiency {
                    return Err(ModcodError::EfficiencyOrder(i));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    /// Builds a table from `(threshold dB, efficiency)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, ModcodError> {
        let entries = pairs
            .iter()
            .map(|&(es_n0_db, spectral_efficiency)| ModcodEntry {
                modcod: String::new(),
                es_n0_db,
                spectral_efficiency,
            })
            .collect();
        Self::new("custom", entries)
    }

    pub fn from_json(text: &str) -> Result<Self, ModcodError> {
        let file: TableFile =
            serde_json::from_str(text).map_err(|e| ModcodError::Parse(e.to_string()))?;
        Self::new(file.name, file.entries)
    }

    /// The bundled DVB-S2X-style table.
    pub fn dvbs2x() -> Self {
        Self::from_json(DEFAULT_TABLE).expect("bundled MODCOD table is valid")
    }

    pub fn entries(&self) -> &[ModcodEntry] {
        &self.entries
    }

    pub fn max_efficiency(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.spectral_efficiency)
    }

    /// Spectral efficiency for an Es/N0 in dB. NaN maps to zero.
    pub fn efficiency(&self, es_n0_db: f64) -> f64 {
        if es_n0_db.is_nan() {
            return 0.0;
        }
        let n = self.entries.partition_point(|e| e.es_n0_db <= es_n0_db);
        if n == 0 {
            0.0
        } else {
            self.entries[n - 1].spectral_efficiency
        }
    }
}
