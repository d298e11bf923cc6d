//! Channel-plan accounting and per-household MUX usage sampling.
//!
//! MUX indices are zero-based in code (`0` is the free-to-air MUX 1); all
//! textual output is one-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::griddata::{BitGrid, HouseholdGrid};
use crate::streams::{HouseholdVariates, RealizationStream};

/// Most MUXs a plan may carry (usage sets are 8-bit masks).
pub const MAX_MUXES: usize = 8;

/// A channel adjacent to one or more used channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjacentChannel {
    pub channel: u32,
    /// MUX indices whose channel neighbours this one.
    pub parents: Vec<usize>,
}

/// Broadcast channels of the serving station and their adjacent channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelPlan {
    total_band_mhz: f64,
    channel_bandwidth_mhz: f64,
    first_channel: u32,
    used: Vec<u32>,
    adjacent: Vec<AdjacentChannel>,
    dedup: bool,
}

impl ChannelPlan {
    /// `used[m]` is the channel number carrying MUX `m`. The band holds
    /// `total_band / bandwidth` channels numbered from `first_channel`.
    /// Adjacent channels outside the band or in use are dropped; with `dedup`
    /// a channel shared by two used channels counts once.
    pub fn new(
        total_band_mhz: f64,
        channel_bandwidth_mhz: f64,
        first_channel: u32,
        used: Vec<u32>,
        dedup: bool,
    ) -> Result<Self> {
        if !(channel_bandwidth_mhz.is_finite() && channel_bandwidth_mhz > 0.0) {
            return Err(Error::Configuration(format!(
                "channel bandwidth must be positive, got {channel_bandwidth_mhz}"
            )));
        }
        if !(total_band_mhz.is_finite() && total_band_mhz >= 0.0) {
            return Err(Error::Configuration(format!(
                "total band must be non-negative, got {total_band_mhz}"
            )));
        }
        if used.len() > MAX_MUXES {
            return Err(Error::Configuration(format!(
                "at most {MAX_MUXES} used channels are supported, got {}",
                used.len()
            )));
        }
        let n_channels = (total_band_mhz / channel_bandwidth_mhz + 1e-9).floor() as u32;
        let last_channel = first_channel as i64 + n_channels as i64 - 1;
        let in_band = |c: i64| c >= first_channel as i64 && c <= last_channel;
        for (i, &c) in used.iter().enumerate() {
            if !in_band(c as i64) {
                return Err(Error::Configuration(format!(
                    "channel {c} outside the band {first_channel}..={last_channel}"
                )));
            }
            if used[..i].contains(&c) {
                return Err(Error::Configuration(format!("channel {c} listed twice")));
            }
        }

        let mut adjacent: Vec<AdjacentChannel> = Vec::new();
        for (m, &c) in used.iter().enumerate() {
            for n in [c as i64 - 1, c as i64 + 1] {
                if !in_band(n) || used.contains(&(n as u32)) {
                    continue;
                }
                let n = n as u32;
                match adjacent.iter_mut().find(|a| dedup && a.channel == n) {
                    Some(a) => a.parents.push(m),
                    None => adjacent.push(AdjacentChannel {
                        channel: n,
                        parents: vec![m],
                    }),
                }
            }
        }
        adjacent.sort_by_key(|a| a.channel);

        let plan = Self {
            total_band_mhz,
            channel_bandwidth_mhz,
            first_channel,
            used,
            adjacent,
            dedup,
        };
        if plan.gray_space_capacity() > total_band_mhz + 1e-9 {
            return Err(Error::Configuration(format!(
                "plan needs {} MHz but the band is {} MHz",
                plan.gray_space_capacity(),
                total_band_mhz
            )));
        }
        Ok(plan)
    }

    /// Five 8 MHz MUXs in a 320 MHz band whose ten adjacent channels are all distinct.
    pub fn abstract_default() -> Self {
        Self::new(320.0, 8.0, 21, vec![22, 25, 28, 31, 34], true).expect("valid default plan")
    }

    pub fn total_band_mhz(&self) -> f64 {
        self.total_band_mhz
    }

    pub fn channel_bandwidth_mhz(&self) -> f64 {
        self.channel_bandwidth_mhz
    }

    pub fn first_channel(&self) -> u32 {
        self.first_channel
    }

    pub fn used_channels(&self) -> &[u32] {
        &self.used
    }

    pub fn adjacent_channels(&self) -> &[AdjacentChannel] {
        &self.adjacent
    }

    pub fn dedup(&self) -> bool {
        self.dedup
    }

    pub fn mux_count(&self) -> usize {
        self.used.len()
    }

    /// Channels that can become gray space: used plus adjacent.
    pub fn channel_count(&self) -> usize {
        self.used.len() + self.adjacent.len()
    }

    pub fn gray_space_capacity(&self) -> f64 {
        self.channel_count() as f64 * self.channel_bandwidth_mhz
    }

    pub fn white_space_amount(&self) -> Result<f64> {
        let white = self.total_band_mhz - self.gray_space_capacity();
        if white < -1e-9 {
            return Err(Error::Configuration(format!(
                "negative white space ({white} MHz)"
            )));
        }
        Ok(white.max(0.0))
    }
}

/// Set of MUX indices as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MuxSet(u8);

impl MuxSet {
    pub const EMPTY: MuxSet = MuxSet(0);

    /// `{0, .., n-1}`.
    pub fn all(n: usize) -> Self {
        debug_assert!(n <= MAX_MUXES);
        MuxSet(((1u16 << n) - 1) as u8)
    }

    pub fn single(m: usize) -> Self {
        MuxSet(1 << m)
    }

    pub fn from_bits(bits: u8) -> Self {
        MuxSet(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, m: usize) -> bool {
        m < MAX_MUXES && self.0 >> m & 1 == 1
    }

    pub fn union(self, other: MuxSet) -> MuxSet {
        MuxSet(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: MuxSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_MUXES).filter(move |&m| self.contains(m))
    }
}

impl std::fmt::Display for MuxSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.iter().map(|m| (m + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KnowledgeLevel {
    /// Receiver locations only.
    KL1,
    /// Locations and subscriptions.
    KL2,
    /// Locations and current viewing.
    KL3,
}

impl KnowledgeLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeLevel::KL1 => "KL1",
            KnowledgeLevel::KL2 => "KL2",
            KnowledgeLevel::KL3 => "KL3",
        }
    }
}

impl std::str::FromStr for KnowledgeLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "KL1" | "1" => Ok(KnowledgeLevel::KL1),
            "KL2" | "2" => Ok(KnowledgeLevel::KL2),
            "KL3" | "3" => Ok(KnowledgeLevel::KL3),
            other => Err(Error::Configuration(format!("unknown knowledge level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimePeriod {
    TP1,
    TP2,
}

impl TimePeriod {
    pub const ALL: [TimePeriod; 2] = [TimePeriod::TP1, TimePeriod::TP2];

    pub fn as_str(self) -> &'static str {
        match self {
            TimePeriod::TP1 => "TP1",
            TimePeriod::TP2 => "TP2",
        }
    }
}

impl std::str::FromStr for TimePeriod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TP1" | "1" => Ok(TimePeriod::TP1),
            "TP2" | "2" => Ok(TimePeriod::TP2),
            other => Err(Error::Configuration(format!("unknown time period `{other}`"))),
        }
    }
}

/// How KL3 viewing shares relate to the receiver population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareInterpretation {
    /// Share of all receivers watching each MUX.
    #[default]
    Unconditional,
    /// MUX 2+ shares are fractions of the bundle subscribers.
    ConditionalOnSubscription,
}

impl ShareInterpretation {
    pub fn as_str(self) -> &'static str {
        match self {
            ShareInterpretation::Unconditional => "unconditional",
            ShareInterpretation::ConditionalOnSubscription => "conditional_on_subscription",
        }
    }
}

impl std::str::FromStr for ShareInterpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unconditional" => Ok(ShareInterpretation::Unconditional),
            "conditional" | "conditional_on_subscription" => {
                Ok(ShareInterpretation::ConditionalOnSubscription)
            }
            other => Err(Error::Configuration(format!(
                "unknown share interpretation `{other}`"
            ))),
        }
    }
}

/// Viewing shares per MUX for both time periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodShares {
    pub tp1: Vec<f64>,
    pub tp2: Vec<f64>,
}

impl PeriodShares {
    pub fn get(&self, period: TimePeriod) -> &[f64] {
        match period {
            TimePeriod::TP1 => &self.tp1,
            TimePeriod::TP2 => &self.tp2,
        }
    }
}

impl Default for PeriodShares {
    /// Daytime (09-15h) and evening (20-23h) market shares of the five MUXs.
    fn default() -> Self {
        Self {
            tp1: vec![0.0346, 0.0245, 0.0159, 0.0178, 0.007],
            tp2: vec![0.193, 0.127, 0.062, 0.057, 0.012],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeConfig {
    pub level: KnowledgeLevel,
    /// Fraction of all receivers inside terrestrial coverage.
    pub p_mux1_capable: f64,
    /// Fraction of all receivers subscribing to the MUX 2+ bundle.
    pub p_subscribe_bundle: f64,
    pub time_period: TimePeriod,
    pub mux_shares: PeriodShares,
    pub share_interpretation: ShareInterpretation,
}

impl KnowledgeConfig {
    pub fn new(level: KnowledgeLevel) -> Self {
        Self {
            level,
            p_mux1_capable: 0.98,
            p_subscribe_bundle: 0.15,
            time_period: TimePeriod::TP1,
            mux_shares: PeriodShares::default(),
            share_interpretation: ShareInterpretation::Unconditional,
        }
    }

    pub fn kl1() -> Self {
        Self::new(KnowledgeLevel::KL1)
    }

    pub fn kl2() -> Self {
        Self::new(KnowledgeLevel::KL2)
    }

    pub fn kl3(period: TimePeriod, interpretation: ShareInterpretation) -> Self {
        Self {
            time_period: period,
            share_interpretation: interpretation,
            ..Self::new(KnowledgeLevel::KL3)
        }
    }

    /// Short identifier such as `KL3-TP2-unconditional`.
    pub fn tag(&self) -> String {
        match self.level {
            KnowledgeLevel::KL3 => format!(
                "KL3-{}-{}",
                self.time_period.as_str(),
                self.share_interpretation.as_str()
            ),
            level => level.as_str().to_string(),
        }
    }

    /// Precomputes the per-household decision thresholds for `mux_count` MUXs.
    pub fn sampler(&self, mux_count: usize) -> Result<HouseholdSampler> {
        HouseholdSampler::new(self, mux_count)
    }
}

/// Compiled sampling rule.
///
/// Every household carries three uniforms shared by all knowledge levels:
/// `coverage` decides terrestrial reception, `subscription` the MUX 2+
/// bundle and `watching` the MUX viewed under KL3. Subscription and viewing
/// probabilities are scaled by the coverage probability so that the stated
/// fractions hold over all receivers. The `watching` axis is split into one
/// block per MUX, wide enough for the largest share of any period, so that
/// the viewing sets of a lower-share period, of the conditional reading and
/// of KL2 nest inside each other draw by draw.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSampler {
    level: KnowledgeLevel,
    mux_count: usize,
    p_cover: f64,
    p_sub_given_cover: f64,
    interpretation: ShareInterpretation,
    block_start: Vec<f64>,
    /// Width of the viewed interval inside each block.
    watch_width: Vec<f64>,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Configuration(format!(
            "{name} must be a probability in [0, 1], got {p}"
        )));
    }
    Ok(())
}

impl HouseholdSampler {
    pub fn new(config: &KnowledgeConfig, mux_count: usize) -> Result<Self> {
        if mux_count == 0 || mux_count > MAX_MUXES {
            return Err(Error::Configuration(format!(
                "MUX count must be in 1..={MAX_MUXES}, got {mux_count}"
            )));
        }
        check_probability("p_mux1_capable", config.p_mux1_capable)?;
        check_probability("p_subscribe_bundle", config.p_subscribe_bundle)?;
        let p_cover = config.p_mux1_capable;
        if config.p_subscribe_bundle > p_cover {
            return Err(Error::Configuration(format!(
                "bundle subscription share {} exceeds the covered share {}",
                config.p_subscribe_bundle, p_cover
            )));
        }
        let scale = |p: f64| if p_cover > 0.0 { p / p_cover } else { 0.0 };
        let p_sub_given_cover = scale(config.p_subscribe_bundle);

        let mut block_start = vec![0.0; mux_count];
        let mut watch_width = vec![0.0; mux_count];
        if config.level == KnowledgeLevel::KL3 {
            for period in TimePeriod::ALL {
                let shares = config.mux_shares.get(period);
                if shares.len() != mux_count {
                    return Err(Error::Configuration(format!(
                        "{} lists {} MUX shares but the plan has {mux_count} MUXs",
                        period.as_str(),
                        shares.len()
                    )));
                }
                for (m, &s) in shares.iter().enumerate() {
                    check_probability(&format!("{} share of MUX {}", period.as_str(), m + 1), s)?;
                }
                let sum: f64 = shares.iter().sum();
                if sum > 1.0 + 1e-12 {
                    return Err(Error::Configuration(format!(
                        "{} shares sum to {sum} > 1",
                        period.as_str()
                    )));
                }
            }
            let block_width: Vec<f64> = (0..mux_count)
                .map(|m| {
                    TimePeriod::ALL
                        .iter()
                        .map(|&p| scale(config.mux_shares.get(p)[m]))
                        .fold(0.0, f64::max)
                })
                .collect();
            let total: f64 = block_width.iter().sum();
            if total > 1.0 + 1e-12 {
                return Err(Error::Configuration(format!(
                    "viewing shares need {:.4} of the covered population (> 1); \
                     lower the shares or raise p_mux1_capable",
                    total
                )));
            }
            if p_cover == 0.0 && block_width.iter().any(|&w| w > 0.0) {
                return Err(Error::Configuration(
                    "viewing shares are positive but no receiver is covered".into(),
                ));
            }
            let mut acc = 0.0;
            for m in 0..mux_count {
                block_start[m] = acc;
                acc += block_width[m];
            }
            let shares = config.mux_shares.get(config.time_period);
            for m in 0..mux_count {
                watch_width[m] = match config.share_interpretation {
                    ShareInterpretation::Unconditional => scale(shares[m]),
                    ShareInterpretation::ConditionalOnSubscription => shares[m],
                };
            }
        }
        Ok(Self {
            level: config.level,
            mux_count,
            p_cover,
            p_sub_given_cover,
            interpretation: config.share_interpretation,
            block_start,
            watch_width,
        })
    }

    pub fn level(&self) -> KnowledgeLevel {
        self.level
    }

    pub fn mux_count(&self) -> usize {
        self.mux_count
    }

    /// Largest set any household can use.
    pub fn saturation(&self) -> MuxSet {
        MuxSet::all(self.mux_count)
    }

    /// MUXs in use by one household.
    pub fn sample(&self, u: &HouseholdVariates) -> MuxSet {
        let all = MuxSet::all(self.mux_count);
        if self.level == KnowledgeLevel::KL1 {
            return all;
        }
        let covered = u.coverage < self.p_cover;
        if !covered {
            return MuxSet::EMPTY;
        }
        let subscribed = u.subscription < self.p_sub_given_cover;
        if self.level == KnowledgeLevel::KL2 {
            return if subscribed { all } else { MuxSet::single(0) };
        }
        let Some(m) = (0..self.mux_count).find(|&m| {
            let start = self.block_start[m];
            u.watching >= start && u.watching < start + self.watch_width[m]
        }) else {
            return MuxSet::EMPTY;
        };
        if m == 0 || subscribed {
            return MuxSet::single(m);
        }
        match self.interpretation {
            // A non-subscriber counted as watching a bundle MUX can only be
            // receiving MUX 1 terrestrially.
            ShareInterpretation::Unconditional => MuxSet::single(0),
            ShareInterpretation::ConditionalOnSubscription => MuxSet::EMPTY,
        }
    }
}

/// Samples one household's MUX usage from explicit variates.
pub fn sample_household(
    config: &KnowledgeConfig,
    mux_count: usize,
    u: &HouseholdVariates,
) -> Result<MuxSet> {
    Ok(config.sampler(mux_count)?.sample(u))
}

/// MUX usage of every cell in one Monte Carlo realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverRealization {
    pub index: u64,
    pub master_seed: u64,
    rows: usize,
    cols: usize,
    usage: Vec<MuxSet>,
}

impl ReceiverRealization {
    pub fn from_usage(rows: usize, cols: usize, usage: Vec<MuxSet>, master_seed: u64, index: u64) -> Self {
        assert_eq!(usage.len(), rows * cols);
        Self {
            index,
            master_seed,
            rows,
            cols,
            usage,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn usage(&self) -> &[MuxSet] {
        &self.usage
    }

    pub fn cell(&self, index: usize) -> MuxSet {
        self.usage[index]
    }

    /// Cells where MUX `m` is in use.
    pub fn receivers(&self, m: usize) -> BitGrid {
        let mut g = BitGrid::new(self.rows, self.cols);
        for (i, u) in self.usage.iter().enumerate() {
            if u.contains(m) {
                g.set(i / self.cols, i % self.cols, true);
            }
        }
        g
    }
}

/// OR of household usage per cell, deterministic in `(master_seed, realization)`.
pub fn realize_cells(
    grid: &HouseholdGrid,
    sampler: &HouseholdSampler,
    master_seed: u64,
    realization: u64,
) -> ReceiverRealization {
    let saturated = sampler.saturation();
    let mut stream = RealizationStream::new(master_seed, realization);
    let usage = grid
        .counts()
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if k == 0 {
                return MuxSet::EMPTY;
            }
            if sampler.level() == KnowledgeLevel::KL1 {
                return saturated;
            }
            let mut acc = MuxSet::EMPTY;
            for u in stream.cell(i as u64).take(k as usize) {
                acc = acc.union(sampler.sample(&u));
                if acc == saturated {
                    break;
                }
            }
            acc
        })
        .collect();
    ReceiverRealization::from_usage(grid.rows(), grid.cols(), usage, master_seed, realization)
}
