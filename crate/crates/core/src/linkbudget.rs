//! Link budget between a cognitive radio transmitter and a protected TV receiver.
//!
//! Every receiver is assumed to sit exactly at the regulator's minimum service
//! field strength. The maximum tolerable interfering field follows from the
//! C/I criterion, and the gap between the transmitter's field strength and that
//! ceiling is the path loss the separation has to provide.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::propagation::{distance_for_loss, path_loss, HataParams};

/// Offset between `10 log10(EIRP[mW])` and field strength in dBµV/m at 1 m.
pub const FIELD_STRENGTH_OFFSET_DB: f64 = 104.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelRelation {
    #[serde(alias = "co-channel")]
    Co,
    #[serde(alias = "adjacent-channel")]
    Adjacent,
}

impl ChannelRelation {
    pub const BOTH: [ChannelRelation; 2] = [ChannelRelation::Co, ChannelRelation::Adjacent];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelRelation::Co => "co",
            ChannelRelation::Adjacent => "adjacent",
        }
    }
}

/// Regulator protection constants.
///
/// The adjacent-channel criterion may be asymmetric (upper and lower
/// neighbour); [`ProtectionCriteria::ci_adjacent`] returns the stricter one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionCriteria {
    pub regulator_label: String,
    /// Minimum TV service field strength in dBµV/m.
    pub min_field_strength: f64,
    pub ci_cochannel: f64,
    pub ci_adjacent_upper: f64,
    pub ci_adjacent_lower: f64,
    pub channel_bandwidth_mhz: f64,
    pub location_accuracy_m: f64,
    #[serde(default = "default_receiver_height")]
    pub receiver_height_m: f64,
    /// Informational power limits; never used in computations.
    #[serde(default)]
    pub power_limits: Option<String>,
}

fn default_receiver_height() -> f64 {
    10.0
}

impl ProtectionCriteria {
    pub fn ofcom() -> Self {
        Self {
            regulator_label: "ofcom".into(),
            min_field_strength: 50.0,
            ci_cochannel: 33.0,
            ci_adjacent_upper: -17.0,
            ci_adjacent_lower: -17.0,
            channel_bandwidth_mhz: 8.0,
            location_accuracy_m: 100.0,
            receiver_height_m: 10.0,
            power_limits: Some("co-channel: as specified by the database; adjacent: 50 mW".into()),
        }
    }

    pub fn fcc() -> Self {
        Self {
            regulator_label: "fcc".into(),
            min_field_strength: 41.0,
            ci_cochannel: 23.0,
            ci_adjacent_upper: -26.0,
            ci_adjacent_lower: -28.0,
            channel_bandwidth_mhz: 6.0,
            location_accuracy_m: 50.0,
            receiver_height_m: 10.0,
            power_limits: Some("fixed device: 4 W; portable device: 40/100 mW".into()),
        }
    }

    /// Looks up a shipped preset by (case-insensitive) name.
    pub fn preset(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "ofcom" | "uk" => Ok(Self::ofcom()),
            "fcc" | "us" | "usa" => Ok(Self::fcc()),
            other => Err(Error::Configuration(format!(
                "unknown regulator preset `{other}` (expected ofcom or fcc)"
            ))),
        }
    }

    pub fn ci_adjacent(&self) -> f64 {
        self.ci_adjacent_upper.max(self.ci_adjacent_lower)
    }

    pub fn ci(&self, relation: ChannelRelation) -> f64 {
        match relation {
            ChannelRelation::Co => self.ci_cochannel,
            ChannelRelation::Adjacent => self.ci_adjacent(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_field_strength", self.min_field_strength),
            ("ci_cochannel", self.ci_cochannel),
            ("ci_adjacent_upper", self.ci_adjacent_upper),
            ("ci_adjacent_lower", self.ci_adjacent_lower),
            ("channel_bandwidth_mhz", self.channel_bandwidth_mhz),
            ("location_accuracy_m", self.location_accuracy_m),
        ] {
            ensure_finite(name, v)?;
        }
        if self.ci_cochannel < self.ci_adjacent() {
            return Err(Error::Configuration(format!(
                "co-channel C/I ({}) must not be laxer than adjacent C/I ({})",
                self.ci_cochannel,
                self.ci_adjacent()
            )));
        }
        if self.channel_bandwidth_mhz <= 0.0 {
            return Err(Error::Configuration(
                "channel bandwidth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A class of cognitive radio transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub label: String,
    pub eirp_mw: f64,
    pub antenna_height_m: f64,
    /// Reference distance of the EIRP to field strength conversion.
    #[serde(default = "default_reference_distance")]
    pub reference_distance_m: f64,
}

fn default_reference_distance() -> f64 {
    1.0
}

impl DeviceProfile {
    pub fn new(label: impl Into<String>, eirp_mw: f64, antenna_height_m: f64) -> Result<Self> {
        let device = Self {
            label: label.into(),
            eirp_mw,
            antenna_height_m,
            reference_distance_m: 1.0,
        };
        device.validate()?;
        Ok(device)
    }

    /// 4 W EIRP fixed base station at 30 m.
    pub fn fixed_4w() -> Self {
        Self::new("4W", 4000.0, 30.0).unwrap()
    }

    /// 100 mW EIRP portable device at 2 m.
    pub fn portable_100mw() -> Self {
        Self::new("100mW", 100.0, 2.0).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eirp_mw", self.eirp_mw),
            ("antenna_height_m", self.antenna_height_m),
            ("reference_distance_m", self.reference_distance_m),
        ] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Transmitter field strength at the reference distance (E_TCR).
    pub fn field_strength(&self) -> Result<f64> {
        eirp_to_field_strength(self.eirp_mw, self.reference_distance_m)
    }
}

/// Field strength in dBµV/m produced by `eirp_mw` at `reference_distance_m`.
pub fn eirp_to_field_strength(eirp_mw: f64, reference_distance_m: f64) -> Result<f64> {
    if !(eirp_mw.is_finite() && eirp_mw > 0.0) {
        return Err(Error::Domain(format!("EIRP must be positive, got {eirp_mw} mW")));
    }
    if !(reference_distance_m.is_finite() && reference_distance_m > 0.0) {
        return Err(Error::Domain(format!(
            "reference distance must be positive, got {reference_distance_m} m"
        )));
    }
    Ok(10.0 * eirp_mw.log10() - 20.0 * reference_distance_m.log10() + FIELD_STRENGTH_OFFSET_DB)
}

/// Largest interfering field a receiver at the service minimum tolerates (E_RCR).
pub fn max_cr_field_at_receiver(
    criteria: &ProtectionCriteria,
    relation: ChannelRelation,
) -> Result<f64> {
    criteria.validate()?;
    Ok(criteria.min_field_strength - criteria.ci(relation))
}

/// Path loss the separation must provide so the receiver stays protected.
pub fn min_required_loss(
    device: &DeviceProfile,
    criteria: &ProtectionCriteria,
    relation: ChannelRelation,
) -> Result<f64> {
    device.validate()?;
    Ok(device.field_strength()? - max_cr_field_at_receiver(criteria, relation)?)
}

/// Per-device summary of transmitter field strength, required losses and distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub device: String,
    pub tx_field_strength: f64,
    pub max_field_at_rx_co: f64,
    pub max_field_at_rx_adj: f64,
    pub min_loss_co: f64,
    pub min_loss_adj: f64,
    pub min_distance_co_m: f64,
    pub min_distance_adj_m: f64,
    pub warnings: Vec<String>,
}

impl SeparationReport {
    pub fn min_loss(&self, relation: ChannelRelation) -> f64 {
        match relation {
            ChannelRelation::Co => self.min_loss_co,
            ChannelRelation::Adjacent => self.min_loss_adj,
        }
    }

    pub fn min_distance_m(&self, relation: ChannelRelation) -> f64 {
        match relation {
            ChannelRelation::Co => self.min_distance_co_m,
            ChannelRelation::Adjacent => self.min_distance_adj_m,
        }
    }
}

fn check_heights(device: &DeviceProfile, hata: &HataParams) -> Result<()> {
    if (hata.base_height_m - device.antenna_height_m).abs() > 1e-9 {
        return Err(Error::Configuration(format!(
            "propagation transmitter height {} m does not match device `{}` antenna height {} m",
            hata.base_height_m, device.label, device.antenna_height_m
        )));
    }
    Ok(())
}

pub fn separation_report(
    device: &DeviceProfile,
    criteria: &ProtectionCriteria,
    hata: &HataParams,
) -> Result<SeparationReport> {
    check_heights(device, hata)?;
    let min_loss_co = min_required_loss(device, criteria, ChannelRelation::Co)?;
    let min_loss_adj = min_required_loss(device, criteria, ChannelRelation::Adjacent)?;
    Ok(SeparationReport {
        device: device.label.clone(),
        tx_field_strength: device.field_strength()?,
        max_field_at_rx_co: max_cr_field_at_receiver(criteria, ChannelRelation::Co)?,
        max_field_at_rx_adj: max_cr_field_at_receiver(criteria, ChannelRelation::Adjacent)?,
        min_loss_co,
        min_loss_adj,
        min_distance_co_m: distance_for_loss(hata, min_loss_co)? * 1000.0,
        min_distance_adj_m: distance_for_loss(hata, min_loss_adj)? * 1000.0,
        warnings: hata.range_warnings(),
    })
}

/// Rounds `distance_m` up to the next multiple of `resolution_m`.
pub fn quantize_distance(distance_m: f64, resolution_m: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m >= 0.0) {
        return Err(Error::Domain(format!(
            "distance must be non-negative, got {distance_m} m"
        )));
    }
    if !(resolution_m.is_finite() && resolution_m > 0.0) {
        return Err(Error::Domain(format!(
            "grid resolution must be positive, got {resolution_m} m"
        )));
    }
    Ok(quantized_cells(distance_m, resolution_m) as f64 * resolution_m)
}

/// Number of whole cells covering `distance_m`, correcting float rounding in the division.
pub(crate) fn quantized_cells(distance_m: f64, resolution_m: f64) -> u64 {
    let mut k = (distance_m / resolution_m).ceil().max(0.0) as u64;
    while k > 0 && (k - 1) as f64 * resolution_m >= distance_m {
        k -= 1;
    }
    while (k as f64) * resolution_m < distance_m {
        k += 1;
    }
    k
}

/// Achieved C/I at `distance_km` minus the required C/I, in dB.
pub fn verify_margin(
    device: &DeviceProfile,
    criteria: &ProtectionCriteria,
    hata: &HataParams,
    distance_km: f64,
    relation: ChannelRelation,
) -> Result<f64> {
    Ok(achieved_ci(device, criteria, hata, distance_km)? - criteria.ci(relation))
}

/// C/I seen by a receiver at the service minimum with the device `distance_km` away.
pub fn achieved_ci(
    device: &DeviceProfile,
    criteria: &ProtectionCriteria,
    hata: &HataParams,
    distance_km: f64,
) -> Result<f64> {
    check_heights(device, hata)?;
    criteria.validate()?;
    Ok(criteria.min_field_strength - device.field_strength()? + path_loss(hata, distance_km)?)
}
