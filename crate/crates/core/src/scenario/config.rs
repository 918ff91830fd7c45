use std::fmt;

use serde::{Deserialize, Serialize};

/// System-level parameters of a multi-beam scenario.
///
/// The JSON form uses exactly these field names. Bandwidths are in Hz,
/// power in dBW (`beam_power` in W), durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub num_beams: usize,
    pub num_clusters: usize,
    pub beams_per_cluster: usize,
    pub carriers_per_cluster: usize,
    pub carrier_bandwidth: f64,
    pub system_bandwidth: f64,
    pub roll_off: f64,
    pub power_per_transponder: f64,
    pub num_transponders: usize,
    pub active_clusters_per_slot: usize,
    pub slots_per_window: usize,
    pub slot_duration: f64,
    pub delta_max: usize,
    pub rng_seed: u64,
    #[serde(default = "default_users_per_beam")]
    pub users_per_beam: usize,
    #[serde(default = "default_high_demand_fraction")]
    pub high_demand_fraction: f64,
    /// Nominal RF power per beam in W. Carried alongside
    /// `power_per_transponder` but not used by the link budget, which splits
    /// the transponder power across its carriers.
    #[serde(default = "default_beam_power")]
    pub beam_power: f64,
    #[serde(default)]
    pub geometry: GeometryParams,
    #[serde(default)]
    pub link: LinkBudgetParams,
    #[serde(default)]
    pub demand: DemandParams,
}

fn default_users_per_beam() -> usize {
    12
}

fn default_high_demand_fraction() -> f64 {
    0.3
}

fn default_beam_power() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryParams {
    /// Distance between adjacent beam centres on the ground, km.
    pub beam_spacing_km: f64,
    /// Two clusters are adjacent when any pair of their beam centres is
    /// closer than this many beam spacings.
    pub adjacency_threshold: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            beam_spacing_km: 250.0,
            adjacency_threshold: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudgetParams {
    pub frequency_hz: f64,
    pub slant_range_km: f64,
    pub peak_gain_dbi: f64,
    pub g_over_t_dbk: f64,
    pub misc_losses_db: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            frequency_hz: 19.5e9,
            slant_range_km: 38_000.0,
            peak_gain_dbi: 44.0,
            g_over_t_dbk: 17.0,
            misc_losses_db: 1.0,
        }
    }
}

/// Demand ranges as multiples of the per-user fair share of a beam's
/// time-averaged capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemandParams {
    pub high_range: [f64; 2],
    pub low_range: [f64; 2],
}

impl Default for DemandParams {
    fn default() -> Self {
        Self {
            high_range: [2.0, 4.0],
            low_range: [0.2, 1.0],
        }
    }
}

/// One violated configuration rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] serde_json::Error),
}

fn join(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

impl SystemConfig {
    /// Simulation parameters of the reference 16-beam GEO system.
    pub fn reference() -> Self {
        Self {
            num_beams: 16,
            num_clusters: 8,
            beams_per_cluster: 2,
            carriers_per_cluster: 2,
            carrier_bandwidth: 54e6,
            system_bandwidth: 500e6,
            roll_off: 0.2,
            power_per_transponder: 15.0,
            num_transponders: 8,
            active_clusters_per_slot: 2,
            slots_per_window: 64,
            slot_duration: 1.3e-3,
            delta_max: 2,
            rng_seed: 7,
            users_per_beam: 12,
            high_demand_fraction: 0.3,
            beam_power: 12.0,
            geometry: GeometryParams::default(),
            link: LinkBudgetParams::default(),
            demand: DemandParams::default(),
        }
    }

    /// A scaled-down system that the bundled solver handles in seconds.
    pub fn desk() -> Self {
        Self {
            num_beams: 8,
            num_clusters: 4,
            users_per_beam: 4,
            slots_per_window: 8,
            active_clusters_per_slot: 2,
            ..Self::reference()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validated()
    }

    pub fn validated(self) -> Result<Self, ConfigError> {
        let diags = self.diagnostics();
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(diags))
        }
    }

    /// Hopping window duration `T_H = N_TS * T_slot`.
    pub fn hopping_window(&self) -> f64 {
        self.slots_per_window as f64 * self.slot_duration
    }

    pub fn symbol_rate(&self) -> f64 {
        self.carrier_bandwidth / (1.0 + self.roll_off)
    }

    pub fn users_per_cluster(&self) -> usize {
        self.users_per_beam * self.beams_per_cluster
    }

    /// Checks every invariant and returns one diagnostic per violation.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let counts = [
            ("num_beams", self.num_beams),
            ("num_clusters", self.num_clusters),
            ("beams_per_cluster", self.beams_per_cluster),
            ("carriers_per_cluster", self.carriers_per_cluster),
            ("num_transponders", self.num_transponders),
            ("active_clusters_per_slot", self.active_clusters_per_slot),
            ("slots_per_window", self.slots_per_window),
            ("delta_max", self.delta_max),
            ("users_per_beam", self.users_per_beam),
        ];
        for (field, value) in counts {
            if value < 1 {
                out.push(Diagnostic::new(field, format!("{field} must be >= 1")));
            }
        }
        if self.num_beams != self.num_clusters * self.beams_per_cluster {
            out.push(Diagnostic::new(
                "num_beams",
                "num_beams must equal num_clusters * beams_per_cluster",
            ));
        }
        if self.active_clusters_per_slot >= self.num_clusters {
            out.push(Diagnostic::new(
                "active_clusters_per_slot",
                "active_clusters_per_slot must be < num_clusters",
            ));
        }
        if self.active_clusters_per_slot * self.carriers_per_cluster > self.num_transponders {
            out.push(Diagnostic::new(
                "active_clusters_per_slot",
                "active_clusters_per_slot * carriers_per_cluster must be <= num_transponders",
            ));
        }
        if !(self.carrier_bandwidth.is_finite() && self.carrier_bandwidth > 0.0) {
            out.push(Diagnostic::new(
                "carrier_bandwidth",
                "carrier_bandwidth must be a positive number of Hz",
            ));
        }
        if !(self.carrier_bandwidth <= self.system_bandwidth) {
            out.push(Diagnostic::new(
                "carrier_bandwidth",
                "carrier_bandwidth must be <= system_bandwidth",
            ));
        }
        if !(0.0..=1.0).contains(&self.roll_off) {
            out.push(Diagnostic::new("roll_off", "roll_off must lie in [0, 1]"));
        }
        if !self.power_per_transponder.is_finite() {
            out.push(Diagnostic::new(
                "power_per_transponder",
                "power_per_transponder must be finite",
            ));
        }
        if !(self.slot_duration.is_finite() && self.slot_duration > 0.0) {
            out.push(Diagnostic::new(
                "slot_duration",
                "slot_duration must be a positive number of seconds",
            ));
        }
        if !(0.0..=1.0).contains(&self.high_demand_fraction) {
            out.push(Diagnostic::new(
                "high_demand_fraction",
                "high_demand_fraction must lie in [0, 1]",
            ));
        }
        if !(self.beam_power.is_finite() && self.beam_power > 0.0) {
            out.push(Diagnostic::new("beam_power", "beam_power must be positive"));
        }
        if !(self.geometry.beam_spacing_km > 0.0) {
            out.push(Diagnostic::new(
                "geometry.beam_spacing_km",
                "geometry.beam_spacing_km must be positive",
            ));
        }
        if !(self.geometry.adjacency_threshold > 0.0) {
            out.push(Diagnostic::new(
                "geometry.adjacency_threshold",
                "geometry.adjacency_threshold must be positive",
            ));
        }
        if !(self.link.frequency_hz > 0.0 && self.link.slant_range_km > 0.0) {
            out.push(Diagnostic::new(
                "link",
                "link.frequency_hz and link.slant_range_km must be positive",
            ));
        }
        for (field, [lo, hi]) in [
            ("demand.high_range", self.demand.high_range),
            ("demand.low_range", self.demand.low_range),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                out.push(Diagnostic::new(
                    field,
                    format!("{field} must satisfy 0 < low <= high"),
                ));
            }
        }
        out
    }
}
