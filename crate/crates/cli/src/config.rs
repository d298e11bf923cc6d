//! Run configuration: a TOML file of flat sections plus flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use grayspace::griddata::DiscRule;
use grayspace::scenario::PeriodShares;
use grayspace::stats::Bucket;
use grayspace::{
    ChannelPlan, DeviceProfile, Environment, HataParams, KnowledgeConfig, KnowledgeLevel,
    ProtectionCriteria, ShareInterpretation, TimePeriod,
};

use crate::error::CliError;

/// Prefix of config lines echoed into a run summary.
pub const ECHO_PREFIX: &str = "config:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub regulator: RegulatorSection,
    pub propagation: PropagationSection,
    #[serde(rename = "device")]
    pub devices: Vec<DeviceSection>,
    #[serde(default)]
    pub channels: ChannelsSection,
    #[serde(default)]
    pub knowledge: KnowledgeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorSection {
    /// `ofcom` or `fcc`; explicit fields below override the preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_field_strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_cochannel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_adjacent_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_adjacent_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_bandwidth_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_accuracy_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_height_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub carrier_frequency_mhz: f64,
    pub environment: String,
    /// Defaults to the regulator's receiver height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobile_height_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub label: String,
    pub eirp_mw: f64,
    pub antenna_height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelsSection {
    pub total_band_mhz: f64,
    pub first_channel: u32,
    pub used: Vec<u32>,
    pub dedup_adjacent: bool,
}

impl Default for ChannelsSection {
    fn default() -> Self {
        let plan = ChannelPlan::abstract_default();
        Self {
            total_band_mhz: plan.total_band_mhz(),
            first_channel: plan.first_channel(),
            used: plan.used_channels().to_vec(),
            dedup_adjacent: plan.dedup(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnowledgeSection {
    pub levels: Vec<String>,
    pub time_periods: Vec<String>,
    pub interpretations: Vec<String>,
    pub p_mux1_capable: f64,
    pub p_subscribe_bundle: f64,
    pub shares_tp1: Vec<f64>,
    pub shares_tp2: Vec<f64>,
}

impl Default for KnowledgeSection {
    fn default() -> Self {
        let k = KnowledgeConfig::kl1();
        Self {
            levels: vec!["KL1".into(), "KL2".into(), "KL3".into()],
            time_periods: vec!["TP1".into(), "TP2".into()],
            interpretations: vec!["unconditional".into()],
            p_mux1_capable: k.p_mux1_capable,
            p_subscribe_bundle: k.p_subscribe_bundle,
            shares_tp1: k.mux_shares.tp1,
            shares_tp2: k.mux_shares.tp2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_100m: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_1000m: Option<PathBuf>,
    /// Which of the two grids to use; defaults to the coarsest available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_m: Option<u32>,
    /// Overrides the grid file's metadata.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub municipal_area_km2: Option<f64>,
    pub compensate: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            path_100m: None,
            path_1000m: None,
            resolution_m: None,
            municipal_area_km2: None,
            compensate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Matrix,
    Rle,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub realizations: usize,
    pub seed: Seed,
    /// 0 uses every available core.
    pub workers: usize,
    pub buckets: Vec<String>,
    pub disc_rule: String,
    pub export: ExportFormat,
    /// Also write the gray-space map of every realization.
    pub keep_realizations: bool,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            realizations: grayspace::engine::DEFAULT_REALIZATIONS,
            seed: Seed(0),
            workers: 0,
            buckets: Bucket::defaults().into_iter().map(|b| b.label).collect(),
            disc_rule: "cell-to-cell".into(),
            export: ExportFormat::Matrix,
            keep_realizations: false,
            out: PathBuf::from("out"),
        }
    }
}

/// A 64-bit seed. TOML integers are signed, so values above `i64::MAX` are
/// written as strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Seed(pub u64);

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Seed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v)
                .map(Seed)
                .map_err(|_| serde::de::Error::custom(format!("seed must be non-negative, got {v}"))),
            Raw::Str(s) => s
                .trim()
                .parse()
                .map(Seed)
                .map_err(|_| serde::de::Error::custom(format!("seed `{s}` is not a 64-bit unsigned integer"))),
        }
    }
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

impl RunConfig {
    /// Loads a config file, or the config echoed in a run summary.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let text = extract_echo(text).unwrap_or_else(|| text.to_string());
        let config: RunConfig = toml::from_str(&text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Makes grid paths absolute relative to the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.grid.path_100m, &mut self.grid.path_1000m].into_iter().flatten() {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = std::path::absolute(&joined).unwrap_or(joined);
            }
        }
    }

    /// The config as TOML, suitable for `load` after prefixing stripped.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Internal(format!("config echo: {e}")))
    }

    /// Checks everything that can be checked without touching the grid.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.devices.is_empty() {
            return Err(config_err("missing key `device`: at least one [[device]] is required"));
        }
        let criteria = self.criteria()?;
        self.hata(&criteria)?;
        for d in &self.devices {
            self.device_profile(d)?;
        }
        self.plan(&criteria)?;
        self.knowledge_configs()?;
        self.buckets()?;
        self.disc_rule()?;
        if self.run.realizations == 0 {
            return Err(config_err("run.realizations must be at least 1"));
        }
        if let Some(r) = self.grid.resolution_m {
            if r != 100 && r != 1000 {
                return Err(config_err(format!("grid.resolution_m must be 100 or 1000, got {r}")));
            }
        }
        Ok(())
    }

    pub fn criteria(&self) -> Result<ProtectionCriteria, CliError> {
        let r = &self.regulator;
        let mut c = match &r.preset {
            Some(name) => ProtectionCriteria::preset(name).map_err(|e| config_err(format!("regulator.preset: {e}")))?,
            None => {
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| config_err(format!("missing key `regulator.{key}` (or set `regulator.preset`)")))
                };
                ProtectionCriteria {
                    regulator_label: "custom".into(),
                    min_field_strength: need(r.min_field_strength, "min_field_strength")?,
                    ci_cochannel: need(r.ci_cochannel, "ci_cochannel")?,
                    ci_adjacent_upper: need(r.ci_adjacent_upper, "ci_adjacent_upper")?,
                    ci_adjacent_lower: need(r.ci_adjacent_lower, "ci_adjacent_lower")?,
                    channel_bandwidth_mhz: need(r.channel_bandwidth_mhz, "channel_bandwidth_mhz")?,
                    location_accuracy_m: r.location_accuracy_m.unwrap_or(0.0),
                    receiver_height_m: need(r.receiver_height_m, "receiver_height_m")?,
                    power_limits: None,
                }
            }
        };
        if r.preset.is_some() {
            let set = |dst: &mut f64, v: Option<f64>| {
                if let Some(v) = v {
                    *dst = v;
                }
            };
            set(&mut c.min_field_strength, r.min_field_strength);
            set(&mut c.ci_cochannel, r.ci_cochannel);
            set(&mut c.ci_adjacent_upper, r.ci_adjacent_upper);
            set(&mut c.ci_adjacent_lower, r.ci_adjacent_lower);
            set(&mut c.channel_bandwidth_mhz, r.channel_bandwidth_mhz);
            set(&mut c.location_accuracy_m, r.location_accuracy_m);
            set(&mut c.receiver_height_m, r.receiver_height_m);
        }
        c.validate().map_err(|e| config_err(format!("regulator: {e}")))?;
        Ok(c)
    }

    pub fn hata(&self, criteria: &ProtectionCriteria) -> Result<HataParams, CliError> {
        let p = &self.propagation;
        let env: Environment = p
            .environment
            .parse()
            .map_err(|e| config_err(format!("propagation.environment: {e}")))?;
        let first_height = self.devices.first().map_or(30.0, |d| d.antenna_height_m);
        HataParams::new(
            p.carrier_frequency_mhz,
            first_height,
            p.mobile_height_m.unwrap_or(criteria.receiver_height_m),
            env,
        )
        .map_err(|e| config_err(format!("propagation: {e}")))
    }

    pub fn device_profile(&self, d: &DeviceSection) -> Result<DeviceProfile, CliError> {
        DeviceProfile::new(d.label.clone(), d.eirp_mw, d.antenna_height_m)
            .map_err(|e| config_err(format!("device `{}`: {e}", d.label)))
    }

    pub fn device_profiles(&self) -> Result<Vec<DeviceProfile>, CliError> {
        self.devices.iter().map(|d| self.device_profile(d)).collect()
    }

    pub fn plan(&self, criteria: &ProtectionCriteria) -> Result<ChannelPlan, CliError> {
        let c = &self.channels;
        ChannelPlan::new(
            c.total_band_mhz,
            criteria.channel_bandwidth_mhz,
            c.first_channel,
            c.used.clone(),
            c.dedup_adjacent,
        )
        .map_err(|e| config_err(format!("channels: {e}")))
    }

    /// One knowledge configuration per simulated combination. Time period
    /// and interpretation only multiply out for KL3.
    pub fn knowledge_configs(&self) -> Result<Vec<KnowledgeConfig>, CliError> {
        let k = &self.knowledge;
        let parse_all = |items: &[String], key: &str| -> Result<Vec<String>, CliError> {
            if items.is_empty() {
                return Err(config_err(format!("knowledge.{key} must not be empty")));
            }
            Ok(items.to_vec())
        };
        let levels = parse_all(&k.levels, "levels")?
            .iter()
            .map(|s| s.parse::<KnowledgeLevel>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_err(format!("knowledge.levels: {e}")))?;
        let periods = parse_all(&k.time_periods, "time_periods")?
            .iter()
            .map(|s| s.parse::<TimePeriod>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_err(format!("knowledge.time_periods: {e}")))?;
        let interpretations = parse_all(&k.interpretations, "interpretations")?
            .iter()
            .map(|s| s.parse::<ShareInterpretation>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_err(format!("knowledge.interpretations: {e}")))?;
        let base = |level| KnowledgeConfig {
            level,
            p_mux1_capable: k.p_mux1_capable,
            p_subscribe_bundle: k.p_subscribe_bundle,
            mux_shares: PeriodShares { tp1: k.shares_tp1.clone(), tp2: k.shares_tp2.clone() },
            ..KnowledgeConfig::new(level)
        };
        let mut out = Vec::new();
        for level in levels {
            if level == KnowledgeLevel::KL3 {
                for &time_period in &periods {
                    for &share_interpretation in &interpretations {
                        out.push(KnowledgeConfig { time_period, share_interpretation, ..base(level) });
                    }
                }
            } else {
                out.push(base(level));
            }
        }
        let mux_count = self.channels.used.len();
        for cfg in &out {
            cfg.sampler(mux_count).map_err(|e| config_err(format!("knowledge: {e}")))?;
        }
        Ok(out)
    }

    pub fn buckets(&self) -> Result<Vec<Bucket>, CliError> {
        let buckets = self
            .run
            .buckets
            .iter()
            .map(|s| Bucket::parse(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_err(format!("run.buckets: {e}")))?;
        grayspace::stats::validate_buckets(buckets).map_err(|e| config_err(format!("run.buckets: {e}")))
    }

    pub fn disc_rule(&self) -> Result<DiscRule, CliError> {
        self.run
            .disc_rule
            .parse()
            .map_err(|e| config_err(format!("run.disc_rule: {e}")))
    }

    /// The grid file for `resolution` (or the configured default).
    pub fn grid_path(&self, resolution: Option<u32>) -> Result<(u32, PathBuf), CliError> {
        let g = &self.grid;
        let pick = |r: u32| match r {
            100 => g.path_100m.clone().map(|p| (100, p)),
            1000 => g.path_1000m.clone().map(|p| (1000, p)),
            _ => None,
        };
        match resolution.or(g.resolution_m) {
            Some(r) => pick(r).ok_or_else(|| config_err(format!("missing key `grid.path_{r}m`"))),
            None => pick(1000)
                .or_else(|| pick(100))
                .ok_or_else(|| config_err("missing key `grid.path_1000m` or `grid.path_100m`")),
        }
    }
}

/// The TOML carried by `config:` lines of a summary, if any.
fn extract_echo(text: &str) -> Option<String> {
    let lines: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix(ECHO_PREFIX))
        .map(|l| l.strip_prefix(' ').unwrap_or(l))
        .collect();
    (!lines.is_empty()).then(|| lines.join("\n") + "\n")
}
