//! Arc curves over a matrix profile.
//!
//! An arc links subsequence `i` to its nearest neighbour `mpi[i]`. Chaining
//! nearest-neighbour links (`i -> mpi[i] -> mpi[mpi[i]] -> ...`) adds longer
//! arcs whose accumulated hop distance stays below a threshold. The plain
//! arc curve counts the arcs crossing each tick; the weighted chained arc
//! curve sums `chain_distance / (span / W)` over the crossing chained arcs,
//! with `W = N - L + 1` the curve length.
//!
//! Arcs are undirected: the arc set is keyed by the unordered endpoint pair.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::ProfilePair;
use crate::series::SubseqSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub src: usize,
    pub dst: usize,
    pub chain_distance: f64,
    pub hop_count: usize,
}

impl Arc {
    /// Inclusive tick range covered by the arc.
    pub fn span(&self) -> (usize, usize) {
        (self.src.min(self.dst), self.src.max(self.dst))
    }

    pub fn temporal_distance(&self) -> usize {
        self.src.abs_diff(self.dst)
    }

    fn key(&self) -> (usize, usize) {
        self.span()
    }

    /// Preference when two arcs share endpoints: direct links first, then
    /// smaller accumulated distance, then fewer hops.
    fn beats(&self, other: &Arc) -> bool {
        let rank = |a: &Arc| (a.hop_count != 1, a.chain_distance, a.hop_count);
        rank(self).partial_cmp(&rank(other)) == Some(std::cmp::Ordering::Less)
    }
}

/// Deduplicated arcs of one channel, ordered by span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    pub arcs: Vec<Arc>,
    pub spec: SubseqSpec,
}

impl ArcSet {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

#[derive(Default)]
struct ArcMap(BTreeMap<(usize, usize), Arc>);

impl ArcMap {
    fn offer(&mut self, arc: Arc) {
        self.0
            .entry(arc.key())
            .and_modify(|cur| {
                if arc.beats(cur) {
                    *cur = arc;
                }
            })
            .or_insert(arc);
    }

    fn into_set(self, spec: SubseqSpec) -> ArcSet {
        ArcSet {
            arcs: self.0.into_values().collect(),
            spec,
        }
    }
}

/// Threshold on accumulated chain distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainThreshold {
    /// `beta * median(mp)`.
    MedianMultiple(f64),
    Absolute(f64),
}

impl Default for ChainThreshold {
    fn default() -> Self {
        Self::MedianMultiple(2.0)
    }
}

impl ChainThreshold {
    pub fn resolve(&self, profile: &ProfilePair) -> f64 {
        match *self {
            Self::MedianMultiple(beta) => beta * profile.median_distance(),
            Self::Absolute(t) => t,
        }
    }
}

/// The direct nearest-neighbour arcs, one per unordered pair.
pub fn direct_arcs(profile: &ProfilePair) -> ArcSet {
    let mut map = ArcMap::default();
    for (i, (&j, &d)) in profile.mpi.iter().zip(&profile.mp).enumerate() {
        map.offer(Arc {
            src: i,
            dst: j,
            chain_distance: d,
            hop_count: 1,
        });
    }
    map.into_set(profile.spec)
}

/// Chained arc set: direct arcs plus every composed arc
/// `i -> mpi^k(i)` whose summed hop distance stays below the threshold.
///
/// A chain ends at the first hop that fails the threshold or revisits a
/// node. Composed arcs landing inside the exclusion zone of their source are
/// skipped but the chain continues through them.
pub fn extract_cac(profile: &ProfilePair, threshold: ChainThreshold) -> ArcSet {
    let limit = threshold.resolve(profile);
    let radius = profile.spec.exclusion_radius;
    let mut map = ArcMap::default();
    let mut visited = HashSet::new();
    for src in 0..profile.len() {
        let first = profile.mpi[src];
        map.offer(Arc {
            src,
            dst: first,
            chain_distance: profile.mp[src],
            hop_count: 1,
        });

        visited.clear();
        visited.insert(src);
        visited.insert(first);
        let mut cur = first;
        let mut dist = profile.mp[src];
        let mut hops = 1;
        loop {
            let next = profile.mpi[cur];
            dist += profile.mp[cur];
            hops += 1;
            if !(dist < limit) || !visited.insert(next) {
                break;
            }
            if src.abs_diff(next) >= radius {
                map.offer(Arc {
                    src,
                    dst: next,
                    chain_distance: dist,
                    hop_count: hops,
                });
            }
            cur = next;
        }
    }
    map.into_set(profile.spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Plain arc-crossing count.
    Ac,
    /// Weighted chained arc curve.
    #[default]
    Wcac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub values: Vec<f64>,
    pub kind: CurveKind,
    pub candidates: Vec<usize>,
}

impl ShapeCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Adds `weight(arc)` over each arc's inclusive span. Ticks covered by no arc
/// are exactly zero.
fn accumulate(len: usize, arcs: &[Arc], weight: impl Fn(&Arc) -> f64) -> Vec<f64> {
    let mut delta = vec![0.0; len + 1];
    let mut count = vec![0_i64; len + 1];
    for arc in arcs {
        let (lo, hi) = arc.span();
        let w = weight(arc);
        delta[lo] += w;
        delta[hi + 1] -= w;
        count[lo] += 1;
        count[hi + 1] -= 1;
    }
    // Neumaier-compensated running sum, reset whenever coverage drops to 0.
    let mut out = Vec::with_capacity(len);
    let (mut sum, mut comp, mut active) = (0.0_f64, 0.0_f64, 0_i64);
    for t in 0..len {
        active += count[t];
        let v = delta[t];
        let s = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - s) + v } else { (v - s) + sum };
        sum = s;
        if active == 0 {
            sum = 0.0;
            comp = 0.0;
        }
        out.push((sum + comp).max(0.0));
    }
    out
}

/// Plain arc curve: number of direct arcs crossing each tick.
pub fn arc_curve(profile: &ProfilePair) -> ShapeCurve {
    count_curve(profile.len(), &direct_arcs(profile))
}

/// Number of arcs of `arcs` crossing each of `len` ticks. Arcs reaching past
/// the curve are clipped.
pub fn count_curve(len: usize, arcs: &ArcSet) -> ShapeCurve {
    let clipped: Vec<Arc> = arcs
        .arcs
        .iter()
        .filter(|a| a.span().0 < len)
        .map(|a| Arc {
            src: a.src.min(len - 1),
            dst: a.dst.min(len - 1),
            ..*a
        })
        .collect();
    ShapeCurve {
        values: accumulate(len, &clipped, |_| 1.0),
        kind: CurveKind::Ac,
        candidates: Vec::new(),
    }
}

/// Weighted chained arc curve over `arcs`, which must index into `profile`.
pub fn extract_wcac(profile: &ProfilePair, arcs: &ArcSet) -> Result<ShapeCurve> {
    let len = profile.len();
    if let Some(a) = arcs.arcs.iter().find(|a| a.span().1 >= len || a.src == a.dst) {
        return Err(Error::InvalidSpec(format!(
            "arc {}->{} does not fit a curve of length {len}",
            a.src, a.dst
        )));
    }
    let w = len as f64;
    let values = accumulate(len, &arcs.arcs, |a| {
        a.chain_distance / (a.temporal_distance() as f64 / w)
    });
    Ok(ShapeCurve {
        values,
        kind: CurveKind::Wcac,
        candidates: Vec::new(),
    })
}

/// Knobs for turning a curve into change-point candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateConfig {
    /// Centered moving-average width; even widths are bumped to the next odd
    /// number, 1 disables smoothing.
    pub smoothing_width: usize,
    /// Ticks discarded at each end of the curve.
    pub margin: usize,
    /// Minimum distance between two kept candidates.
    pub min_gap: usize,
}

impl CandidateConfig {
    /// Defaults tied to the subsequence length: smoothing, margin and gap of `L`.
    pub fn for_length(length: usize) -> Self {
        Self {
            smoothing_width: length,
            margin: length,
            min_gap: length,
        }
    }
}

/// Centered moving average, truncated at the ends.
pub fn smooth(values: &[f64], width: usize) -> Vec<f64> {
    let width = if width % 2 == 0 { width + 1 } else { width.max(1) };
    if width == 1 {
        return values.to_vec();
    }
    let half = width / 2;
    let mut prefix = vec![0.0; values.len() + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..values.len())
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Interior local minima of `s`; a flat minimum reports its first index.
fn local_minima(s: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut a = 1;
    while a + 1 < s.len() {
        let mut b = a;
        while b + 1 < s.len() && s[b + 1] == s[a] {
            b += 1;
        }
        if b + 1 < s.len() && s[a - 1] > s[a] && s[b + 1] > s[a] {
            out.push(a);
        }
        a = b + 1;
    }
    out
}

/// Change-point candidates: local minima of the smoothed curve away from the
/// ends, thinned so kept candidates are at least `min_gap` apart (lower curve
/// value wins, then lower index). Sorted ascending.
///
/// # Errors
///
/// [`Error::NoCandidates`] when nothing survives.
pub fn find_candidates(curve: &ShapeCurve, cfg: &CandidateConfig) -> Result<Vec<usize>> {
    if curve.is_empty() {
        return Err(Error::NoCandidates);
    }
    let s = smooth(&curve.values, cfg.smoothing_width);
    let n = s.len();
    let mut minima: Vec<usize> = local_minima(&s)
        .into_iter()
        .filter(|&c| c >= cfg.margin && c + cfg.margin < n)
        .collect();
    minima.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));

    let mut kept: Vec<usize> = Vec::new();
    for c in minima {
        if kept.iter().all(|&k| k.abs_diff(c) >= cfg.min_gap) {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoCandidates);
    }
    kept.sort_unstable();
    Ok(kept)
}
