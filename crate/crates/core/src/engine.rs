//! Monte Carlo driver.
//!
//! Each realization samples receiver usage, dilates the per-MUX receiver
//! masks by the co- and adjacent-channel protection footprints and counts the
//! channels left free in every valid cell. Realizations are reduced into
//! integer accumulators, so results do not depend on worker count or order.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::griddata::{
    dilate_with, protection_disc_offsets_with, BitGrid, DiscRule, Footprint, HouseholdGrid,
};
use crate::linkbudget::{
    quantize_distance, separation_report, ChannelRelation, DeviceProfile, ProtectionCriteria,
    SeparationReport,
};
use crate::propagation::HataParams;
use crate::scenario::{
    realize_cells, ChannelPlan, HouseholdSampler, KnowledgeConfig, ReceiverRealization,
};
use crate::stats::{
    bucket_of, channel_levels, validate_buckets, Bucket, BucketCount, CdfCurve, CdfPoint,
    GraySpaceMap, UtilizationTable,
};

/// Default number of Monte Carlo realizations.
pub const DEFAULT_REALIZATIONS: usize = 100;

/// Everything describing one simulated configuration.
///
/// The grid is used as given; apply area compensation beforehand.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub grid: &'a HouseholdGrid,
    pub device: &'a DeviceProfile,
    pub criteria: &'a ProtectionCriteria,
    /// Propagation settings; the transmitter height is taken from the device.
    pub hata: &'a HataParams,
    pub plan: &'a ChannelPlan,
    pub knowledge: &'a KnowledgeConfig,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub realizations: usize,
    pub master_seed: u64,
    pub buckets: Vec<Bucket>,
    pub disc_rule: DiscRule,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            realizations: DEFAULT_REALIZATIONS,
            master_seed: 0,
            buckets: Bucket::defaults(),
            disc_rule: DiscRule::default(),
            execution: Execution::default(),
        }
    }
}

/// Co- and adjacent-channel protection masks of every MUX for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MuxMasks {
    pub co: Vec<BitGrid>,
    pub adjacent: Vec<BitGrid>,
}

impl MuxMasks {
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.co.first().map(BitGrid::shape)
    }
}

/// Number of channels free at `cell`: used channels outside their co-channel
/// mask, plus adjacent channels clear of the adjacent mask of every used
/// channel next to them.
pub fn cell_gray_channels(masks: &MuxMasks, plan: &ChannelPlan, cell: usize) -> Result<usize> {
    if masks.co.len() != plan.mux_count() || masks.adjacent.len() != plan.mux_count() {
        return Err(Error::Configuration(format!(
            "{} co / {} adjacent masks for a plan with {} MUXs",
            masks.co.len(),
            masks.adjacent.len(),
            plan.mux_count()
        )));
    }
    Ok(count_free(masks, plan, cell))
}

/// Available gray space at `cell` in MHz.
pub fn cell_gray_space(masks: &MuxMasks, plan: &ChannelPlan, cell: usize) -> Result<f64> {
    Ok(cell_gray_channels(masks, plan, cell)? as f64 * plan.channel_bandwidth_mhz())
}

#[inline]
fn count_free(masks: &MuxMasks, plan: &ChannelPlan, cell: usize) -> usize {
    let co = masks.co.iter().filter(|m| !m.get_index(cell)).count();
    let adj = plan
        .adjacent_channels()
        .iter()
        .filter(|a| a.parents.iter().all(|&m| !masks.adjacent[m].get_index(cell)))
        .count();
    co + adj
}

/// A scenario with its protection footprints and sampler resolved.
#[derive(Debug, Clone)]
pub struct PreparedScenario<'a> {
    scenario: Scenario<'a>,
    options: RunOptions,
    separation: SeparationReport,
    co_radius_m: f64,
    adjacent_radius_m: f64,
    co_footprint: Footprint,
    adjacent_footprint: Footprint,
    sampler: HouseholdSampler,
    buckets: Vec<Bucket>,
    valid_cells: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub mean_map: GraySpaceMap,
    pub cdf: CdfCurve,
    pub utilization: UtilizationTable,
    pub separation: SeparationReport,
    pub co_radius_m: f64,
    pub adjacent_radius_m: f64,
    pub warnings: Vec<String>,
}

impl<'a> PreparedScenario<'a> {
    pub fn new(scenario: Scenario<'a>, options: RunOptions) -> Result<Self> {
        if options.realizations == 0 {
            return Err(Error::Configuration("at least one realization is required".into()));
        }
        let grid = scenario.grid;
        let valid_cells = grid.valid_cells();
        if valid_cells == 0 {
            return Err(Error::EmptyResult);
        }
        let hata = scenario.hata.with_base_height(scenario.device.antenna_height_m);
        let separation = separation_report(scenario.device, scenario.criteria, &hata)?;
        let res = grid.resolution_m();
        let co_radius_m = quantize_distance(separation.min_distance_co_m, res)?;
        let adjacent_radius_m = quantize_distance(separation.min_distance_adj_m, res)?;
        let co_footprint = protection_disc_offsets_with(co_radius_m, res, options.disc_rule)?;
        let adjacent_footprint =
            protection_disc_offsets_with(adjacent_radius_m, res, options.disc_rule)?;
        let sampler = scenario.knowledge.sampler(scenario.plan.mux_count())?;
        let buckets = validate_buckets(options.buckets.clone())?;
        Ok(Self {
            scenario,
            options,
            separation,
            co_radius_m,
            adjacent_radius_m,
            co_footprint,
            adjacent_footprint,
            sampler,
            buckets,
            valid_cells,
        })
    }

    pub fn separation(&self) -> &SeparationReport {
        &self.separation
    }

    pub fn radius_m(&self, relation: ChannelRelation) -> f64 {
        match relation {
            ChannelRelation::Co => self.co_radius_m,
            ChannelRelation::Adjacent => self.adjacent_radius_m,
        }
    }

    pub fn footprint(&self, relation: ChannelRelation) -> &Footprint {
        match relation {
            ChannelRelation::Co => &self.co_footprint,
            ChannelRelation::Adjacent => &self.adjacent_footprint,
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        self.separation.warnings.clone()
    }

    pub fn realization(&self, index: u64) -> ReceiverRealization {
        realize_cells(
            self.scenario.grid,
            &self.sampler,
            self.options.master_seed,
            index,
        )
    }

    /// Dilates every MUX's receiver mask; identical receiver sets share work.
    pub fn masks(&self, realization: &ReceiverRealization, exec: Execution) -> MuxMasks {
        let n = self.scenario.plan.mux_count();
        let mut receivers: Vec<BitGrid> = Vec::with_capacity(n);
        let mut co: Vec<BitGrid> = Vec::with_capacity(n);
        let mut adjacent: Vec<BitGrid> = Vec::with_capacity(n);
        for m in 0..n {
            let r = realization.receivers(m);
            if let Some(prev) = receivers.iter().position(|p| *p == r) {
                co.push(co[prev].clone());
                adjacent.push(adjacent[prev].clone());
            } else {
                co.push(dilate_with(&r, &self.co_footprint, exec));
                adjacent.push(dilate_with(&r, &self.adjacent_footprint, exec));
            }
            receivers.push(r);
        }
        MuxMasks { co, adjacent }
    }

    /// Free channel count per cell for one realization (0 in invalid cells).
    pub fn realization_channels(&self, index: u64) -> Vec<u8> {
        self.channels_with(index, Execution::Sequential)
    }

    fn channels_with(&self, index: u64, exec: Execution) -> Vec<u8> {
        let realization = self.realization(index);
        let masks = self.masks(&realization, exec);
        let plan = self.scenario.plan;
        self.scenario
            .grid
            .valid()
            .iter()
            .enumerate()
            .map(|(i, &v)| if v { count_free(&masks, plan, i) as u8 } else { 0 })
            .collect()
    }

    /// Gray space of a single realization.
    pub fn realization_map(&self, index: u64) -> GraySpaceMap {
        let channels = self.realization_channels(index);
        self.map_from(|i| channels[i] as f64, 1)
    }

    fn map_from(&self, channels: impl Fn(usize) -> f64, realizations: usize) -> GraySpaceMap {
        let grid = self.scenario.grid;
        let bw = self.scenario.plan.channel_bandwidth_mhz();
        GraySpaceMap {
            rows: grid.rows(),
            cols: grid.cols(),
            values: grid
                .valid()
                .iter()
                .enumerate()
                .map(|(i, &v)| v.then(|| channels(i) * bw))
                .collect(),
            channel_bandwidth_mhz: bw,
            capacity_mhz: self.scenario.plan.gray_space_capacity(),
            realizations,
            device: self.scenario.device.label.clone(),
            knowledge: self.scenario.knowledge.tag(),
        }
    }

    pub fn run(&self) -> Result<SimulationResult> {
        let exec = self.options.execution;
        exec.install(|| self.run_inner(exec))?
    }

    fn run_inner(&self, exec: Execution) -> Result<SimulationResult> {
        let grid = self.scenario.grid;
        let plan = self.scenario.plan;
        let levels = plan.channel_count();
        let bw = plan.channel_bandwidth_mhz();
        let bucket_of_level: Vec<Option<usize>> = (0..=levels)
            .map(|k| bucket_of(&self.buckets, k as f64 * bw))
            .collect();
        let n = self.options.realizations;

        let acc = exec.fold_range(
            n,
            || Accumulator::new(grid.len(), levels, self.buckets.len()),
            |mut acc, r| {
                let channels = self.channels_with(r as u64, exec);
                acc.add(grid, &channels, &bucket_of_level);
                acc
            },
            Accumulator::merge,
        );

        let denom = n as f64;
        let valid = self.valid_cells as f64;
        let cdf = CdfCurve {
            points: channel_levels(bw, plan.gray_space_capacity())
                .into_iter()
                .zip(&acc.at_least)
                .map(|(g, &count)| CdfPoint {
                    gray_mhz: g,
                    percent_area: 100.0 * count as f64 / (denom * valid),
                })
                .collect(),
        };
        let utilization = UtilizationTable {
            buckets: self
                .buckets
                .iter()
                .zip(&acc.bucket_households)
                .map(|(b, &s)| BucketCount {
                    label: b.label.clone(),
                    mean_households: s as f64 / denom,
                })
                .collect(),
            other: acc.other_households as f64 / denom,
            total_households: acc.total_households as f64 / denom,
        };
        let mean_map = self.map_from(|i| acc.channel_sum[i] as f64 / denom, n);
        Ok(SimulationResult {
            mean_map,
            cdf,
            utilization,
            separation: self.separation.clone(),
            co_radius_m: self.co_radius_m,
            adjacent_radius_m: self.adjacent_radius_m,
            warnings: self.warnings(),
        })
    }
}

/// Integer sums over realizations.
struct Accumulator {
    channel_sum: Vec<u64>,
    /// `at_least[k]`: valid cells with at least `k` free channels.
    at_least: Vec<u64>,
    bucket_households: Vec<u64>,
    other_households: u64,
    total_households: u64,
}

impl Accumulator {
    fn new(cells: usize, levels: usize, buckets: usize) -> Self {
        Self {
            channel_sum: vec![0; cells],
            at_least: vec![0; levels + 1],
            bucket_households: vec![0; buckets],
            other_households: 0,
            total_households: 0,
        }
    }

    fn add(&mut self, grid: &HouseholdGrid, channels: &[u8], bucket_of_level: &[Option<usize>]) {
        let mut histogram = vec![0u64; self.at_least.len()];
        for (i, (&c, &valid)) in channels.iter().zip(grid.valid()).enumerate() {
            if !valid {
                continue;
            }
            self.channel_sum[i] += c as u64;
            histogram[c as usize] += 1;
            let k = grid.counts()[i] as u64;
            self.total_households += k;
            match bucket_of_level[c as usize] {
                Some(b) => self.bucket_households[b] += k,
                None => self.other_households += k,
            }
        }
        let mut running = 0;
        for level in (0..histogram.len()).rev() {
            running += histogram[level];
            self.at_least[level] += running;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.channel_sum.iter_mut().zip(other.channel_sum) {
            *a += b;
        }
        for (a, b) in self.at_least.iter_mut().zip(other.at_least) {
            *a += b;
        }
        for (a, b) in self.bucket_households.iter_mut().zip(other.bucket_households) {
            *a += b;
        }
        self.other_households += other.other_households;
        self.total_households += other.total_households;
        self
    }
}

/// Prepares and runs one scenario.
pub fn run_monte_carlo(scenario: Scenario<'_>, options: RunOptions) -> Result<SimulationResult> {
    PreparedScenario::new(scenario, options)?.run()
}
