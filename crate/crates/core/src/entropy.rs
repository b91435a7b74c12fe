//! Entropy-based segment cost, information gain and greedy boundary search.
//!
//! Each channel is shifted to be non-negative (global minimum plus
//! `1e-9 * range`), and a segment's channel distribution is the share of the
//! segment's total area carried by each channel. Entropies are in bits.
//!
//! Information gain of a segmentation is the whole-series entropy minus the
//! weighted mean of segment entropies, each segment weighted by its share of
//! the total area. That weighting makes the gain the mutual information
//! between channel and segment, so refining a segmentation never lowers it.
//! When every time step carries the same total mass the area share equals
//! the length share.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultiSeries;

/// Shifted, non-negative copy of a series with per-channel prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyView {
    shifted: Vec<Vec<f64>>,
    prefix: Vec<Prefix>,
    offsets: Vec<f64>,
}

/// Running sums kept as `high + low` so that differences of nearby prefixes
/// do not lose the low-order bits of small segment areas.
#[derive(Debug, Clone, PartialEq)]
struct Prefix {
    high: Vec<f64>,
    low: Vec<f64>,
}

fn prefix_sums(row: &[f64]) -> Prefix {
    let mut high = Vec::with_capacity(row.len() + 1);
    let mut low = Vec::with_capacity(row.len() + 1);
    high.push(0.0);
    low.push(0.0);
    let (mut hi, mut lo) = (0.0_f64, 0.0_f64);
    for &v in row {
        let s = hi + v;
        let bv = s - hi;
        lo += (hi - (s - bv)) + (v - bv);
        hi = s;
        high.push(hi);
        low.push(lo);
    }
    Prefix { high, low }
}

impl EntropyView {
    pub fn new(series: &MultiSeries) -> Self {
        let mut shifted = Vec::with_capacity(series.n_channels());
        let mut offsets = Vec::with_capacity(series.n_channels());
        for row in series.channels() {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let offset = lo - 1e-9 * (hi - lo);
            shifted.push(row.iter().map(|&v| v - offset).collect::<Vec<_>>());
            offsets.push(offset);
        }
        let prefix = shifted.iter().map(|r| prefix_sums(r)).collect();
        Self {
            shifted,
            prefix,
            offsets,
        }
    }

    /// View over rows that are already non-negative; no shift is applied.
    pub fn from_nonnegative(rows: Vec<Vec<f64>>) -> Result<Self> {
        let series = MultiSeries::new(rows)?;
        if let Some((channel, index)) = series.channels().iter().enumerate().find_map(|(j, r)| {
            r.iter().position(|&v| v < 0.0).map(|i| (j, i))
        }) {
            return Err(Error::InvalidConfig(format!(
                "negative value in channel {channel} at index {index}"
            )));
        }
        let shifted = series.channels().to_vec();
        let prefix = shifted.iter().map(|r| prefix_sums(r)).collect();
        let offsets = vec![0.0; shifted.len()];
        Ok(Self {
            shifted,
            prefix,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.shifted[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_channels(&self) -> usize {
        self.shifted.len()
    }

    pub fn shifted(&self) -> &[Vec<f64>] {
        &self.shifted
    }

    /// Amount subtracted from each channel.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Area of channel `j` over `start..end`.
    pub fn area(&self, j: usize, start: usize, end: usize) -> f64 {
        let p = &self.prefix[j];
        (p.high[end] - p.high[start]) + (p.low[end] - p.low[start])
    }

    fn check_range(&self, start: usize, end: usize) -> Result<()> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidBoundaries(format!(
                "segment {start}..{end} not inside 0..{}",
                self.len()
            )));
        }
        Ok(())
    }

    /// (entropy in bits, total area) for `start..end`. Terms are summed in
    /// sorted order so the result does not depend on channel order.
    fn entropy_and_mass(&self, start: usize, end: usize) -> (f64, f64) {
        let mut areas: Vec<f64> = (0..self.n_channels())
            .map(|j| self.area(j, start, end).max(0.0))
            .collect();
        areas.sort_by(f64::total_cmp);
        let total: f64 = areas.iter().sum();
        if !(total > 0.0) {
            return (0.0, 0.0);
        }
        let mut terms: Vec<f64> = areas
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|&a| {
                let p = a / total;
                -p * p.log2()
            })
            .collect();
        terms.sort_by(f64::total_cmp);
        let h: f64 = terms.iter().sum();
        let cap = (self.n_channels() as f64).log2();
        (h.clamp(0.0, cap), total)
    }
}

/// Entropy of one segment. `degenerate` marks an all-zero segment, whose
/// entropy is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntropy {
    pub bits: f64,
    pub degenerate: bool,
}

pub fn segment_entropy(view: &EntropyView, start: usize, end: usize) -> Result<SegmentEntropy> {
    view.check_range(start, end)?;
    let (bits, mass) = view.entropy_and_mass(start, end);
    Ok(SegmentEntropy {
        bits,
        degenerate: mass == 0.0,
    })
}

/// Channel distribution `p` of a segment; `None` when degenerate.
pub fn channel_distribution(view: &EntropyView, start: usize, end: usize) -> Result<Option<Vec<f64>>> {
    view.check_range(start, end)?;
    let areas: Vec<f64> = (0..view.n_channels())
        .map(|j| view.area(j, start, end).max(0.0))
        .collect();
    let total: f64 = areas.iter().sum();
    Ok((total > 0.0).then(|| areas.iter().map(|a| a / total).collect()))
}

fn check_boundaries(n: usize, boundaries: &[usize]) -> Result<()> {
    let mut prev = 0;
    for &b in boundaries {
        if b <= prev || b >= n {
            return Err(Error::InvalidBoundaries(format!(
                "{boundaries:?} must be strictly increasing inside (0, {n})"
            )));
        }
        prev = b;
    }
    Ok(())
}

/// Segment weights and entropies are combined into the area-weighted mean.
struct Objective<'a> {
    view: &'a EntropyView,
    whole_entropy: f64,
    whole_mass: f64,
}

impl<'a> Objective<'a> {
    fn new(view: &'a EntropyView) -> Self {
        let (whole_entropy, whole_mass) = view.entropy_and_mass(0, view.len());
        Self {
            view,
            whole_entropy,
            whole_mass,
        }
    }

    /// Weighted entropy contribution of `start..end`.
    fn term(&self, start: usize, end: usize) -> f64 {
        if self.whole_mass == 0.0 {
            return 0.0;
        }
        let (h, mass) = self.view.entropy_and_mass(start, end);
        mass / self.whole_mass * h
    }
}

/// Information gain of splitting the series at `boundaries`.
///
/// # Errors
///
/// [`Error::InvalidBoundaries`] unless strictly increasing inside `(0, N)`.
pub fn information_gain(view: &EntropyView, boundaries: &[usize]) -> Result<f64> {
    check_boundaries(view.len(), boundaries)?;
    let obj = Objective::new(view);
    let mut edges = Vec::with_capacity(boundaries.len() + 2);
    edges.push(0);
    edges.extend_from_slice(boundaries);
    edges.push(view.len());
    let residual: f64 = edges.windows(2).map(|w| obj.term(w[0], w[1])).sum();
    Ok(obj.whole_entropy - residual)
}

/// When the greedy search stops adding boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop at this many segments (`k - 1` boundaries).
    Segments(usize),
    /// Use every candidate.
    Exhaust,
    /// Run up to `max_boundaries` additions (default `min(20, candidates)`),
    /// then cut the trace at its knee point.
    Knee { max_boundaries: Option<usize> },
}

impl Default for StopRule {
    fn default() -> Self {
        Self::Knee {
            max_boundaries: None,
        }
    }
}

impl StopRule {
    /// Knee rule exploring up to twice the expected number of segments.
    pub fn knee_with_hint(expected_segments: usize) -> Self {
        Self::Knee {
            max_boundaries: Some(2 * expected_segments),
        }
    }
}

/// Where a segmentation's candidates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Channel(usize),
    Pooled,
    Dense,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Sorted boundary indices; a boundary `b` starts a new segment at `b`.
    pub boundaries: Vec<usize>,
    /// Boundaries in the order they were added.
    pub order: Vec<usize>,
    /// Information gain after each addition, aligned with `order`.
    pub ig_trace: Vec<f64>,
    /// Number of segments.
    pub k: usize,
    pub source: CandidateSource,
}

impl Segmentation {
    pub fn from_order(order: Vec<usize>, ig_trace: Vec<f64>, source: CandidateSource) -> Self {
        let mut boundaries = order.clone();
        boundaries.sort_unstable();
        Self {
            k: boundaries.len() + 1,
            boundaries,
            order,
            ig_trace,
            source,
        }
    }

    /// Gain of the final segmentation (0 with no boundaries).
    pub fn final_gain(&self) -> f64 {
        self.ig_trace.last().copied().unwrap_or(0.0)
    }
}

/// Greedy boundary search over `candidates`.
///
/// Each step adds the unused candidate whose split yields the largest
/// information gain (ties go to the smaller index). The trace records the
/// gain after every addition and never decreases.
///
/// # Errors
///
/// [`Error::NoCandidates`] for an empty list; [`Error::InvalidBoundaries`]
/// unless candidates are strictly increasing inside `(0, N)`;
/// [`Error::InvalidConfig`] for `Segments(0)`.
pub fn greedy_entropy_seg(view: &EntropyView, candidates: &[usize], stop: StopRule) -> Result<Segmentation> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    check_boundaries(view.len(), candidates)?;
    let budget = match stop {
        StopRule::Segments(0) => {
            return Err(Error::InvalidConfig("segment count must be >= 1".into()))
        }
        StopRule::Segments(k) => k - 1,
        StopRule::Exhaust => candidates.len(),
        StopRule::Knee { max_boundaries } => max_boundaries.unwrap_or(20),
    }
    .min(candidates.len());

    let obj = Objective::new(view);
    let n = view.len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut used = vec![false; candidates.len()];
    let mut residual = obj.term(0, n);
    let mut order = Vec::with_capacity(budget);
    let mut trace: Vec<f64> = Vec::with_capacity(budget);

    for _ in 0..budget {
        let mut best: Option<(f64, usize, f64)> = None;
        for (idx, &b) in candidates.iter().enumerate() {
            if used[idx] {
                continue;
            }
            let pos = chosen.partition_point(|&x| x < b);
            let start = if pos == 0 { 0 } else { chosen[pos - 1] };
            let end = chosen.get(pos).copied().unwrap_or(n);
            let next = residual - obj.term(start, end) + obj.term(start, b) + obj.term(b, end);
            let gain = obj.whole_entropy - next;
            if best.map_or(true, |(g, _, _)| gain > g) {
                best = Some((gain, idx, next));
            }
        }
        let Some((gain, idx, next)) = best else { break };
        used[idx] = true;
        let b = candidates[idx];
        chosen.insert(chosen.partition_point(|&x| x < b), b);
        residual = next;
        order.push(b);
        // Rounding can leave a zero-gain step a hair below its predecessor.
        trace.push(trace.last().map_or(gain, |&prev: &f64| gain.max(prev)));
    }

    if let StopRule::Knee { .. } = stop {
        if trace.len() >= 3 {
            let keep = knee_point(&trace)?;
            order.truncate(keep);
            trace.truncate(keep);
        }
    }
    Ok(Segmentation::from_order(order, trace, CandidateSource::External))
}

/// Below this an information-gain increment counts as zero.
const FLAT: f64 = 1e-12;

/// Knee of an information-gain trace.
///
/// `ig_trace[k - 1]` is the gain after `k` boundaries; a gain of 0 for no
/// boundaries is prepended. Returns the number of boundaries `k` maximizing
/// `(L_k - L_{k-1}) / (L_{k+1} - L_k)` over `1 <= k < K`; the segment count is
/// `k + 1`. A flat denominator makes the ratio infinite; ties go to the
/// smaller `k`.
pub fn knee_point(ig_trace: &[f64]) -> Result<usize> {
    if ig_trace.len() < 3 {
        return Err(Error::TraceTooShort { len: ig_trace.len() });
    }
    let mut levels = Vec::with_capacity(ig_trace.len() + 1);
    levels.push(0.0);
    levels.extend_from_slice(ig_trace);
    knee_point_levels(&levels)
}

/// Same as [`knee_point`] but `levels[0]` is supplied explicitly, so the
/// result is invariant under `levels -> a * levels + b` for `a > 0`.
pub fn knee_point_levels(levels: &[f64]) -> Result<usize> {
    if levels.len() < 4 {
        return Err(Error::TraceTooShort {
            len: levels.len().saturating_sub(1),
        });
    }
    let mut best_k = 1;
    let mut best = f64::NEG_INFINITY;
    for k in 1..levels.len() - 1 {
        let den = levels[k + 1] - levels[k];
        let ratio = if den < FLAT {
            f64::INFINITY
        } else {
            (levels[k] - levels[k - 1]) / den
        };
        if ratio > best {
            best = ratio;
            best_k = k;
        }
    }
    Ok(best_k)
}
