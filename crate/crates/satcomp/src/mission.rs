//! Downlink-bottleneck arithmetic: pass capacity, raw-equivalent volume,
//! transfer-cost-reduction rate, profiler selection, computational-deadline
//! check, and energy accounting. Everything here is a pure closed form; the
//! step-wise accumulation oracles live in the test suites.

use serde::{Deserialize, Serialize};

use crate::entropy::ModelSize;
use crate::error::{Error, Result};

/// How a mission states its sensor data production.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorVolume {
    /// Continuous production rate in bytes per second.
    BytesPerSecond(f64),
    /// Fixed raw volume captured over one orbit, in bytes.
    PerOrbitBytes(f64),
}

/// Link and orbit parameters of one mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub id: String,
    pub downlink_rate_bps: f64,
    pub pass_duration_s: f64,
    pub passes_per_day: u32,
    pub orbital_period_s: f64,
    pub sensor: SensorVolume,
    /// Sensor-native bits per pixel (24 for 8-bit RGB).
    pub raw_bpp: f64,
}

impl MissionSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("downlink_rate_bps", self.downlink_rate_bps),
            ("pass_duration_s", self.pass_duration_s),
            ("orbital_period_s", self.orbital_period_s),
            ("raw_bpp", self.raw_bpp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mission {}: {name} must be positive, got {v}",
                    self.id
                )));
            }
        }
        let sensor = match self.sensor {
            SensorVolume::BytesPerSecond(v) | SensorVolume::PerOrbitBytes(v) => v,
        };
        if !(sensor.is_finite() && sensor >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mission {}: sensor volume must be non-negative",
                self.id
            )));
        }
        Ok(())
    }

    /// Raw bytes produced over one orbit.
    pub fn raw_volume_per_orbit(&self) -> f64 {
        match self.sensor {
            SensorVolume::BytesPerSecond(rate) => rate * self.orbital_period_s,
            SensorVolume::PerOrbitBytes(v) => v,
        }
    }
}

/// Power envelope and processing rates of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub id: String,
    /// Whole-testbed power cap in watts.
    pub power_cap_w: f64,
    pub avg_processing_power_w: f64,
    pub transmit_power_w: f64,
    pub memory_budget_bytes: u64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("power_cap_w", self.power_cap_w),
            ("avg_processing_power_w", self.avg_processing_power_w),
            ("transmit_power_w", self.transmit_power_w),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "device {}: {name} must be positive, got {v}",
                    self.id
                )));
            }
        }
        if self.avg_processing_power_w > self.power_cap_w {
            return Err(Error::InvalidParameter(format!(
                "device {}: processing power exceeds the {} W cap",
                self.id, self.power_cap_w
            )));
        }
        Ok(())
    }
}

/// One profiler measurement point: a model size at an input tile size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCandidate {
    pub model_size: ModelSize,
    pub input_dim: u32,
    pub tiles_per_second: f64,
    pub bpp: f64,
    pub memory_bytes: u64,
}

impl ConfigCandidate {
    pub fn validate(&self) -> Result<()> {
        if !(self.tiles_per_second > 0.0 && self.tiles_per_second.is_finite()) {
            return Err(Error::InvalidParameter(
                "tiles_per_second must be positive".into(),
            ));
        }
        if !(self.bpp > 0.0 && self.bpp.is_finite()) {
            return Err(Error::InvalidParameter("bpp must be positive".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::InvalidParameter("input_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Transfer cost reduction per second: downlink bytes avoided per second of
/// onboard processing, `tiles_per_second * tile_dim^2 * (raw_bpp - bpp) / 8`.
pub fn tcr_per_second(c: &ConfigCandidate, tile_dim: u32, raw_bpp: f64) -> Result<f64> {
    c.validate()?;
    if c.bpp >= raw_bpp {
        return Err(Error::NonBeneficialConfig {
            bpp: c.bpp,
            raw_bpp,
        });
    }
    let pixels = tile_dim as f64 * tile_dim as f64;
    Ok(c.tiles_per_second * pixels * (raw_bpp - c.bpp) / 8.0)
}

/// Picks the candidate with the highest TCR/s among those fitting the
/// memory budget. Candidates whose bpp does not beat `raw_bpp` reduce
/// nothing and are never selected. Ties break toward smaller memory, then
/// smaller model size.
pub fn profiler_select(
    candidates: &[ConfigCandidate],
    memory_budget: u64,
    raw_bpp: f64,
) -> Result<&ConfigCandidate> {
    let mut best: Option<(&ConfigCandidate, f64)> = None;
    for c in candidates {
        if c.memory_bytes > memory_budget || c.bpp >= raw_bpp {
            continue;
        }
        let tcr = tcr_per_second(c, c.input_dim, raw_bpp)?;
        let better = match best {
            None => true,
            Some((b, best_tcr)) => {
                (tcr, std::cmp::Reverse(c.memory_bytes), std::cmp::Reverse(c.model_size))
                    > (best_tcr, std::cmp::Reverse(b.memory_bytes), std::cmp::Reverse(b.model_size))
            }
        };
        if better {
            best = Some((c, tcr));
        }
    }
    best.map(|(c, _)| c).ok_or(Error::NoFeasibleCandidate {
        budget: memory_budget,
    })
}

/// Bytes transferable in one downlink pass.
pub fn pass_capacity(m: &MissionSpec) -> f64 {
    m.downlink_rate_bps * m.pass_duration_s / 8.0
}

/// Raw sensor bytes whose coded form fills one pass: capacity scaled by the
/// compression ratio `raw_bpp / bpp`.
pub fn raw_equivalent(m: &MissionSpec, bpp: f64) -> f64 {
    pass_capacity(m) * (m.raw_bpp / bpp)
}

/// Coded size of one tile at a given rate, in bytes.
pub fn coded_tile_bytes(tile_dim: u32, bpp: f64) -> f64 {
    tile_dim as f64 * tile_dim as f64 * bpp / 8.0
}

/// Number of coded tiles that fit a pass before saturating the link.
pub fn tiles_to_saturation(m: &MissionSpec, c: &ConfigCandidate, tile_dim: u32) -> u64 {
    (pass_capacity(m) / coded_tile_bytes(tile_dim, c.bpp)).floor() as u64
}

/// True iff the device can process one orbit's raw captures within one
/// orbital period (boundary inclusive).
pub fn deadline_check(m: &MissionSpec, c: &ConfigCandidate, tile_dim: u32) -> bool {
    let raw_rate = c.tiles_per_second * tile_dim as f64 * tile_dim as f64 * m.raw_bpp / 8.0;
    m.raw_volume_per_orbit() / raw_rate <= m.orbital_period_s
}

/// Time and energy to process enough raw captures to double the pass's
/// downlinkable data: twice the pass capacity in raw-byte terms.
pub fn energy_to_double(
    m: &MissionSpec,
    d: &DeviceProfile,
    c: &ConfigCandidate,
    tile_dim: u32,
) -> Result<(f64, f64)> {
    let ratio = m.raw_bpp / c.bpp;
    if ratio <= 1.0 {
        return Err(Error::RatioNotAboveOne(ratio));
    }
    let raw_volume = 2.0 * pass_capacity(m);
    let raw_rate = c.tiles_per_second * tile_dim as f64 * tile_dim as f64 * m.raw_bpp / 8.0;
    let seconds = raw_volume / raw_rate;
    Ok((seconds, d.avg_processing_power_w * seconds))
}

/// Transmit-energy difference between sending one saturated pass of coded
/// data and sending the same captures raw.
pub fn transmission_savings(m: &MissionSpec, d: &DeviceProfile, bpp: f64) -> f64 {
    let t_saturated = m.pass_duration_s;
    let t_raw = raw_equivalent(m, bpp) * 8.0 / m.downlink_rate_bps;
    d.transmit_power_w * (t_raw - t_saturated)
}

/// Frames processed per joule.
pub fn frames_per_joule(fps: f64, power_w: f64) -> Result<f64> {
    if !(power_w > 0.0 && power_w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "power must be positive, got {power_w}"
        )));
    }
    Ok(fps / power_w)
}

/// Full per-pass report for a (mission, device, config) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct PassReport {
    pub mission_id: String,
    pub device_id: String,
    pub model_size: ModelSize,
    pub capacity_bytes: f64,
    pub raw_equivalent_bytes: f64,
    pub tiles_to_saturation: u64,
    /// None at bent-pipe rates (ratio <= 1), where doubling is undefined.
    pub time_to_double_s: Option<f64>,
    pub energy_to_double_j: Option<f64>,
    pub transmission_savings_j: f64,
    pub deadline_met: bool,
}

pub fn pass_report(
    m: &MissionSpec,
    d: &DeviceProfile,
    c: &ConfigCandidate,
    tile_dim: u32,
) -> Result<PassReport> {
    m.validate()?;
    d.validate()?;
    c.validate()?;
    let doubling = energy_to_double(m, d, c, tile_dim).ok();
    Ok(PassReport {
        mission_id: m.id.clone(),
        device_id: d.id.clone(),
        model_size: c.model_size,
        capacity_bytes: pass_capacity(m),
        raw_equivalent_bytes: raw_equivalent(m, c.bpp),
        tiles_to_saturation: tiles_to_saturation(m, c, tile_dim),
        time_to_double_s: doubling.map(|(t, _)| t),
        energy_to_double_j: doubling.map(|(_, e)| e),
        transmission_savings_j: transmission_savings(m, d, c.bpp),
        deadline_met: deadline_check(m, c, tile_dim),
    })
}
