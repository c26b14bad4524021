//! Noise-limited link budget: log-distance path loss, received power, SNR,
//! Shannon capacity and hysteretic link up/down state.
//!
//! All quantities are in SI units or dB/dBm. Every function here is pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Default spectral-efficiency ceiling applied by [`capacity_bps`], bps/Hz.
pub const DEFAULT_MAX_SPECTRAL_EFFICIENCY: f64 = 7.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("bandwidth_hz must be > 0 (got {0})")]
    Bandwidth(f64),
    #[error("hysteresis_db must be >= 0 (got {0})")]
    Hysteresis(f64),
    #[error("d0_m must be > 0 (got {0})")]
    ReferenceDistance(f64),
    #[error("exponent_n must be >= 1 (got {0})")]
    Exponent(f64),
}

/// Air-interface parameters of one radio element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub tx_antenna_gain_db: f64,
    pub rx_antenna_gain_db: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    #[serde(default)]
    pub carrier_band_label: String,
    /// Minimum received power for a Down link to come Up.
    pub sensitivity_dbm: f64,
    /// Up links go Down below `sensitivity_dbm - hysteresis_db`.
    pub hysteresis_db: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(RadioError::Bandwidth(self.bandwidth_hz));
        }
        if !(self.hysteresis_db >= 0.0) {
            return Err(RadioError::Hysteresis(self.hysteresis_db));
        }
        Ok(())
    }

    pub fn noise_floor_dbm(&self) -> f64 {
        noise_floor_dbm(self.bandwidth_hz, self.noise_figure_db)
    }
}

/// `PL(d) = pl0 + 10 n log10(max(d, d0) / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub pl0_db: f64,
    pub d0_m: f64,
    pub exponent_n: f64,
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !(self.d0_m > 0.0) {
            return Err(RadioError::ReferenceDistance(self.d0_m));
        }
        if !(self.exponent_n >= 1.0) {
            return Err(RadioError::Exponent(self.exponent_n));
        }
        Ok(())
    }

    pub fn with_pl0(self, pl0_db: f64) -> Self {
        Self { pl0_db, ..self }
    }
}

pub fn path_loss_db(d_m: f64, model: &PathLossModel) -> f64 {
    let d = d_m.max(model.d0_m);
    model.pl0_db + 10.0 * model.exponent_n * (d / model.d0_m).log10()
}

pub fn rx_power_dbm(tx: &RadioParams, rx: &RadioParams, pl_db: f64) -> f64 {
    tx.tx_power_dbm + tx.tx_antenna_gain_db + rx.rx_antenna_gain_db - pl_db
}

pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn snr_db(rx_dbm: f64, rx: &RadioParams) -> f64 {
    rx_dbm - rx.noise_floor_dbm()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Shannon capacity `B log2(1 + snr)` capped at `B * DEFAULT_MAX_SPECTRAL_EFFICIENCY`.
pub fn capacity_bps(bandwidth_hz: f64, snr_db: f64) -> f64 {
    capacity_bps_capped(bandwidth_hz, snr_db, DEFAULT_MAX_SPECTRAL_EFFICIENCY)
}

pub fn capacity_bps_capped(bandwidth_hz: f64, snr_db: f64, max_spectral_efficiency: f64) -> f64 {
    // ln_1p keeps precision when the linear SNR is tiny.
    let se = db_to_linear(snr_db).ln_1p() / std::f64::consts::LN_2;
    bandwidth_hz * se.min(max_spectral_efficiency)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkState {
    Up,
    Down,
}

impl LinkState {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkState::Up => "Up",
            LinkState::Down => "Down",
        }
    }
}

pub fn link_state(rx_dbm: f64, prev: LinkState, params: &RadioParams) -> LinkState {
    match prev {
        LinkState::Down if rx_dbm >= params.sensitivity_dbm => LinkState::Up,
        LinkState::Up if rx_dbm < params.sensitivity_dbm - params.hysteresis_db => LinkState::Down,
        s => s,
    }
}

/// Distance at which received power falls exactly to `threshold_dbm`.
/// Inverse of the link budget; used for coverage radii.
pub fn range_for_threshold_m(tx: &RadioParams, rx: &RadioParams, model: &PathLossModel, threshold_dbm: f64) -> f64 {
    let allowed_pl = tx.tx_power_dbm + tx.tx_antenna_gain_db + rx.rx_antenna_gain_db - threshold_dbm;
    if allowed_pl < model.pl0_db {
        return 0.0;
    }
    model.d0_m * 10f64.powf((allowed_pl - model.pl0_db) / (10.0 * model.exponent_n))
}

/// Radio environment shared by every air interface in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioModel {
    pub path_loss: PathLossModel,
    pub max_spectral_efficiency: f64,
}

impl RadioModel {
    pub fn rx_dbm(&self, tx: &RadioParams, rx: &RadioParams, d_m: f64, pl0_override: Option<f64>) -> f64 {
        let model = match pl0_override {
            Some(pl0) => self.path_loss.with_pl0(pl0),
            None => self.path_loss,
        };
        rx_power_dbm(tx, rx, path_loss_db(d_m, &model))
    }

    pub fn capacity(&self, rx_dbm: f64, rx: &RadioParams) -> f64 {
        capacity_bps_capped(rx.bandwidth_hz, snr_db(rx_dbm, rx), self.max_spectral_efficiency)
    }
}
