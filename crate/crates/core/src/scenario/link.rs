//! Downlink budget: carrier power from the transponder, Gaussian beam
//! roll-off, free-space loss and thermal noise over the carrier bandwidth.
//! Interference is not modelled; simultaneously lit clusters are
//! non-adjacent and polarization-isolated.

use super::config::SystemConfig;
use super::modcod::ModcodTable;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const BOLTZMANN_DBW: f64 = -228.599_167_888_592_2;

pub fn free_space_loss_db(frequency_hz: f64, range_km: f64) -> f64 {
    let d = range_km * 1e3;
    20.0 * (4.0 * std::f64::consts::PI * d * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// Parabolic-in-dB (Gaussian) beam pattern: -3 dB at half the beamwidth.
pub fn off_axis_gain_db(peak_dbi: f64, offset_km: f64, beamwidth_km: f64) -> f64 {
    let x = offset_km / beamwidth_km;
    peak_dbi - 12.0 * x * x
}

/// Number of carriers sharing one transponder when `N_T` clusters are lit.
pub fn carriers_per_transponder(config: &SystemConfig) -> usize {
    let active = config.active_clusters_per_slot * config.carriers_per_cluster;
    active.div_ceil(config.num_transponders.max(1)).max(1)
}

pub fn carrier_power_dbw(config: &SystemConfig) -> f64 {
    config.power_per_transponder - 10.0 * (carriers_per_transponder(config) as f64).log10()
}

/// Carrier-to-noise ratio in dB for a receiver `offset_km` away from the
/// centre of the beam transmitting the carrier.
pub fn sinr_db(config: &SystemConfig, offset_km: f64) -> f64 {
    let link = &config.link;
    let gain = off_axis_gain_db(link.peak_gain_dbi, offset_km, config.geometry.beam_spacing_km);
    carrier_power_dbw(config) + gain
        - free_space_loss_db(link.frequency_hz, link.slant_range_km)
        - link.misc_losses_db
        + link.g_over_t_dbk
        - BOLTZMANN_DBW
        - 10.0 * config.carrier_bandwidth.log10()
}

/// Achievable rate in bit/s: symbol rate `B / (1 + roll_off)` times the
/// MODCOD efficiency at the given SINR.
pub fn achievable_rate(
    bandwidth_hz: f64,
    roll_off: f64,
    sinr_db: f64,
    modcod: &ModcodTable,
) -> f64 {
    bandwidth_hz / (1.0 + roll_off) * modcod.efficiency(sinr_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_space_loss_matches_reference_point() {
        // 20 log10(4 pi d f / c) for 1 km at 1 GHz is 92.45 dB.
        assert!((free_space_loss_db(1e9, 1.0) - 92.45).abs() < 0.01);
    }

    #[test]
    fn beam_edge_is_three_db_down() {
        assert!((off_axis_gain_db(44.0, 125.0, 250.0) - 41.0).abs() < 1e-12);
    }

    #[test]
    fn saturated_sinr_gives_peak_rate() {
        let t = ModcodTable::from_pairs(&[(0.0, 1.0), (3.0, 2.5)]).unwrap();
        let r = achievable_rate(54e6, 0.2, f64::INFINITY, &t);
        assert_eq!(r, 45e6 * 2.5);
        assert_eq!(achievable_rate(54e6, 0.2, -1.0, &t), 0.0);
    }

    #[test]
    fn reference_budget_is_in_a_sane_range() {
        let c = SystemConfig::reference();
        assert_eq!(carriers_per_transponder(&c), 1);
        let centre = sinr_db(&c, 0.0);
        assert!((10.0..25.0).contains(&centre), "{centre}");
        assert!(sinr_db(&c, 250.0) < centre - 11.9);
    }
}
