//! Okumura-Hata median path loss and its closed-form inverse.
//!
//! The model is evaluated in its small/medium-city form. Distances are in
//! kilometres, heights in metres and frequencies in MHz. Inputs outside the
//! model's nominal validity range are evaluated normally; callers can inspect
//! [`HataParams::range_warnings`] to report them.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Propagation environment selecting the Hata correction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Urban,
    Suburban,
    Open,
}

impl Environment {
    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Urban => "urban",
            Environment::Suburban => "suburban",
            Environment::Open => "open",
        }
    }
}

impl std::str::FromStr for Environment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "urban" => Ok(Environment::Urban),
            "suburban" => Ok(Environment::Suburban),
            "open" | "rural" => Ok(Environment::Open),
            other => Err(Error::Configuration(format!(
                "unknown environment `{other}` (expected urban, suburban or open)"
            ))),
        }
    }
}

/// Inputs of the Hata model.
///
/// `base_height` is the transmitter (cognitive radio) antenna height and
/// `mobile_height` the TV receiver antenna height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HataParams {
    pub carrier_frequency_mhz: f64,
    pub base_height_m: f64,
    pub mobile_height_m: f64,
    pub environment: Environment,
}

impl HataParams {
    pub fn new(
        carrier_frequency_mhz: f64,
        base_height_m: f64,
        mobile_height_m: f64,
        environment: Environment,
    ) -> Result<Self> {
        let params = Self {
            carrier_frequency_mhz,
            base_height_m,
            mobile_height_m,
            environment,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("carrier_frequency_mhz", self.carrier_frequency_mhz),
            ("base_height_m", self.base_height_m),
            ("mobile_height_m", self.mobile_height_m),
        ] {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Same parameters with a different transmitter height.
    pub fn with_base_height(mut self, base_height_m: f64) -> Self {
        self.base_height_m = base_height_m;
        self
    }

    /// Whether all inputs lie inside the range the model was fitted on.
    pub fn nominal_range(&self) -> bool {
        self.range_warnings().is_empty()
    }

    /// Human-readable notes for every input outside the nominal range.
    pub fn range_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let f = self.carrier_frequency_mhz;
        if !(150.0..=1500.0).contains(&f) {
            out.push(format!(
                "carrier frequency {f} MHz outside Hata range [150, 1500] MHz"
            ));
        }
        let hb = self.base_height_m;
        if !(30.0..=200.0).contains(&hb) {
            out.push(format!(
                "transmitter height {hb} m outside Hata range [30, 200] m"
            ));
        }
        let hm = self.mobile_height_m;
        if !(1.0..=10.0).contains(&hm) {
            out.push(format!("receiver height {hm} m outside Hata range [1, 10] m"));
        }
        out
    }

    /// Coefficient of `log10(d)` in the loss formula.
    pub fn distance_slope(&self) -> f64 {
        44.9 - 6.55 * self.base_height_m.log10()
    }
}

/// Receiver antenna height correction `a(h_m)` for small and medium cities, in dB.
pub fn mobile_correction(params: &HataParams) -> Result<f64> {
    let f = ensure_finite("carrier_frequency_mhz", params.carrier_frequency_mhz)?;
    let hm = ensure_finite("mobile_height_m", params.mobile_height_m)?;
    let log_f = f.log10();
    Ok((1.1 * log_f - 0.7) * hm - (1.56 * log_f - 0.8))
}

/// Environment-dependent additive correction relative to the urban formula.
pub fn environment_correction(params: &HataParams) -> f64 {
    let f = params.carrier_frequency_mhz;
    match params.environment {
        Environment::Urban => 0.0,
        Environment::Suburban => {
            let l = (f / 28.0).log10();
            -2.0 * l * l - 5.4
        }
        Environment::Open => {
            let l = f.log10();
            -4.78 * l * l + 18.33 * l - 40.94
        }
    }
}

/// Loss at 1 km: every term of the model except the distance term.
fn intercept(params: &HataParams) -> Result<f64> {
    params.validate()?;
    let f = params.carrier_frequency_mhz;
    let hb = params.base_height_m;
    Ok(69.55 + 26.16 * f.log10() - 13.82 * hb.log10() - mobile_correction(params)?
        + environment_correction(params))
}

/// Median path loss in dB at `distance_km`.
pub fn path_loss(params: &HataParams, distance_km: f64) -> Result<f64> {
    if !(distance_km.is_finite() && distance_km > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs a positive finite distance, got {distance_km} km"
        )));
    }
    Ok(intercept(params)? + params.distance_slope() * distance_km.log10())
}

/// Distance in km at which the median loss equals `loss_db`.
pub fn distance_for_loss(params: &HataParams, loss_db: f64) -> Result<f64> {
    if !loss_db.is_finite() {
        return Err(Error::Domain(format!("loss must be finite, got {loss_db}")));
    }
    let slope = params.distance_slope();
    if slope <= 0.0 {
        return Err(Error::Domain(format!(
            "loss does not grow with distance for transmitter height {} m",
            params.base_height_m
        )));
    }
    Ok(10f64.powf((loss_db - intercept(params)?) / slope))
}
