//! Reductions of gray-space maps: survival curves and household utilization.

use std::ops::{Bound, RangeBounds};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::griddata::HouseholdGrid;

/// Per-cell available gray space in MHz. `None` marks cells outside the municipality.
#[derive(Debug, Clone, PartialEq)]
pub struct GraySpaceMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Option<f64>>,
    pub channel_bandwidth_mhz: f64,
    pub capacity_mhz: f64,
    pub realizations: usize,
    pub device: String,
    pub knowledge: String,
}

impl GraySpaceMap {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.values[y * self.cols + x]
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub gray_mhz: f64,
    /// Share of valid cells with at least `gray_mhz` available, in percent.
    pub percent_area: f64,
}

/// Survival curve of gray space over the valid area, sorted by amount.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfCurve {
    pub points: Vec<CdfPoint>,
}

impl CdfCurve {
    /// Percent of area with at least `gray_mhz`, using the nearest tabulated
    /// amount at or above it.
    pub fn percent_at_least(&self, gray_mhz: f64) -> f64 {
        self.points
            .iter()
            .find(|p| p.gray_mhz >= gray_mhz - 1e-9)
            .map_or(0.0, |p| p.percent_area)
    }

    /// Pointwise `self >= other - tol` at every amount of `other`.
    pub fn dominates(&self, other: &CdfCurve, tol: f64) -> bool {
        other
            .points
            .iter()
            .all(|p| self.percent_at_least(p.gray_mhz) >= p.percent_area - tol)
    }
}

/// Multiples of the channel bandwidth from 0 to capacity.
pub(crate) fn channel_levels(channel_bandwidth_mhz: f64, capacity_mhz: f64) -> Vec<f64> {
    let n = (capacity_mhz / channel_bandwidth_mhz + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * channel_bandwidth_mhz).collect()
}

/// Survival curve of one map over its valid cells.
///
/// Amounts are every multiple of the channel bandwidth up to capacity plus
/// every distinct value in the map.
pub fn cdf_from_map(map: &GraySpaceMap, valid: &[bool]) -> Result<CdfCurve> {
    if valid.len() != map.values.len() {
        return Err(Error::DimensionMismatch {
            expected: (map.rows, map.cols),
            actual: (valid.len() / map.cols.max(1), map.cols),
        });
    }
    let mut values: Vec<f64> = map
        .values
        .iter()
        .zip(valid)
        .filter(|(_, &v)| v)
        .map(|(x, _)| x.unwrap_or(0.0))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyResult);
    }
    values.sort_by(f64::total_cmp);
    let mut amounts = channel_levels(map.channel_bandwidth_mhz, map.capacity_mhz);
    amounts.extend(values.iter().copied());
    amounts.sort_by(f64::total_cmp);
    amounts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let n = values.len() as f64;
    let points = amounts
        .into_iter()
        .map(|g| {
            let below = values.partition_point(|&v| v < g - 1e-9);
            CdfPoint {
                gray_mhz: g,
                percent_area: 100.0 * (values.len() - below) as f64 / n,
            }
        })
        .collect();
    Ok(CdfCurve { points })
}

/// A range of gray-space amounts used to group households.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub label: String,
    pub lower: Bound<f64>,
    pub upper: Bound<f64>,
}

impl RangeBounds<f64> for Bucket {
    fn start_bound(&self) -> Bound<&f64> {
        self.lower.as_ref()
    }

    fn end_bound(&self) -> Bound<&f64> {
        self.upper.as_ref()
    }
}

impl Bucket {
    pub fn new(label: impl Into<String>, lower: Bound<f64>, upper: Bound<f64>) -> Self {
        Self {
            label: label.into(),
            lower,
            upper,
        }
    }

    /// Parses `a-b` (inclusive), `>a`, `>=a`, `<b` or `<=b`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let num = |s: &str| {
            s.trim()
                .trim_end_matches("MHz")
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Configuration(format!("invalid bucket `{text}`")))
        };
        let (lower, upper) = if let Some(rest) = t.strip_prefix(">=") {
            (Bound::Included(num(rest)?), Bound::Unbounded)
        } else if let Some(rest) = t.strip_prefix('>') {
            (Bound::Excluded(num(rest)?), Bound::Unbounded)
        } else if let Some(rest) = t.strip_prefix("<=") {
            (Bound::Unbounded, Bound::Included(num(rest)?))
        } else if let Some(rest) = t.strip_prefix('<') {
            (Bound::Unbounded, Bound::Excluded(num(rest)?))
        } else if let Some((a, b)) = t.split_once('-') {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(Error::Configuration(format!("empty bucket `{text}`")));
            }
            (Bound::Included(a), Bound::Included(b))
        } else {
            return Err(Error::Configuration(format!("invalid bucket `{text}`")));
        };
        Ok(Self::new(t, lower, upper))
    }

    /// The three household groupings used for reporting: 24-64, 72-96 and above 96 MHz.
    pub fn defaults() -> Vec<Bucket> {
        ["24-64", "72-96", ">96"]
            .iter()
            .map(|s| Bucket::parse(s).expect("valid default bucket"))
            .collect()
    }

    fn lower_key(&self) -> (f64, bool) {
        match self.lower {
            Bound::Included(v) => (v, false),
            Bound::Excluded(v) => (v, true),
            Bound::Unbounded => (f64::NEG_INFINITY, false),
        }
    }

    /// Whether `self` ends strictly before `other` begins.
    fn ends_before(&self, other: &Bucket) -> bool {
        match (self.upper, other.lower) {
            (Bound::Unbounded, _) | (_, Bound::Unbounded) => false,
            (Bound::Included(a), Bound::Included(b)) => a < b,
            (Bound::Included(a), Bound::Excluded(b))
            | (Bound::Excluded(a), Bound::Included(b))
            | (Bound::Excluded(a), Bound::Excluded(b)) => a <= b,
        }
    }
}

/// Sorts buckets by lower bound and rejects overlapping ones.
pub fn validate_buckets(mut buckets: Vec<Bucket>) -> Result<Vec<Bucket>> {
    buckets.sort_by(|a, b| {
        let (x, y) = (a.lower_key(), b.lower_key());
        x.0.total_cmp(&y.0).then(x.1.cmp(&y.1))
    });
    for w in buckets.windows(2) {
        if !w[0].ends_before(&w[1]) {
            return Err(Error::Configuration(format!(
                "buckets `{}` and `{}` overlap",
                w[0].label, w[1].label
            )));
        }
    }
    Ok(buckets)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketCount {
    pub label: String,
    pub mean_households: f64,
}

/// Mean households located in cells whose gray space falls in each bucket.
///
/// `other` collects households in valid cells outside every bucket, so the
/// entries sum to the valid-cell household total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilizationTable {
    pub buckets: Vec<BucketCount>,
    pub other: f64,
    pub total_households: f64,
}

impl UtilizationTable {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.buckets
            .iter()
            .find(|b| b.label == label)
            .map(|b| b.mean_households)
    }
}

/// Index of the bucket containing `value`, if any.
pub(crate) fn bucket_of(buckets: &[Bucket], value: f64) -> Option<usize> {
    buckets.iter().position(|b| b.contains(&value))
}

/// Utilization of a single map.
pub fn utilization_table(
    map: &GraySpaceMap,
    grid: &HouseholdGrid,
    buckets: &[Bucket],
) -> Result<UtilizationTable> {
    if grid.shape() != (map.rows, map.cols) {
        return Err(Error::DimensionMismatch {
            expected: grid.shape(),
            actual: (map.rows, map.cols),
        });
    }
    let buckets = validate_buckets(buckets.to_vec())?;
    let mut sums = vec![0u64; buckets.len()];
    let mut other = 0u64;
    let mut total = 0u64;
    for (i, value) in map.values.iter().enumerate() {
        let (Some(v), true) = (value, grid.valid()[i]) else {
            continue;
        };
        let k = grid.counts()[i] as u64;
        total += k;
        match bucket_of(&buckets, *v) {
            Some(b) => sums[b] += k,
            None => other += k,
        }
    }
    Ok(UtilizationTable {
        buckets: buckets
            .iter()
            .zip(sums)
            .map(|(b, s)| BucketCount {
                label: b.label.clone(),
                mean_households: s as f64,
            })
            .collect(),
        other: other as f64,
        total_households: total as f64,
    })
}

/// Element-wise mean of curves sharing the same amounts.
pub fn average_curves(curves: &[CdfCurve]) -> Result<CdfCurve> {
    let first = curves.first().ok_or(Error::EmptyResult)?;
    let mut points = first.points.clone();
    for c in &curves[1..] {
        if c.points.len() != points.len()
            || c.points.iter().zip(&points).any(|(a, b)| (a.gray_mhz - b.gray_mhz).abs() > 1e-9)
        {
            return Err(Error::Configuration(
                "curves to average are tabulated at different amounts".into(),
            ));
        }
        for (p, q) in points.iter_mut().zip(&c.points) {
            p.percent_area += q.percent_area;
        }
    }
    let n = curves.len() as f64;
    for p in &mut points {
        p.percent_area /= n;
    }
    Ok(CdfCurve { points })
}

/// Element-wise mean of tables with the same buckets.
pub fn average_tables(tables: &[UtilizationTable]) -> Result<UtilizationTable> {
    let first = tables.first().ok_or(Error::EmptyResult)?;
    let mut out = first.clone();
    for t in &tables[1..] {
        for (a, b) in out.buckets.iter_mut().zip(&t.buckets) {
            a.mean_households += b.mean_households;
        }
        out.other += t.other;
        out.total_households += t.total_households;
    }
    let n = tables.len() as f64;
    for b in &mut out.buckets {
        b.mean_households /= n;
    }
    out.other /= n;
    out.total_households /= n;
    Ok(out)
}
