//! End-to-end segmentation: shape candidates per channel, entropy search over
//! the whole series, channel ranking.
//!
//! For every channel the matrix profile, chained arcs and weighted chained
//! arc curve yield a candidate set. The greedy information-gain search then
//! runs over all channels of the series using that candidate set, and the
//! channel whose candidates reach the highest final gain wins.
//!
//! Two ablations are available through [`Mode`]: `ShapeOnly` reads the
//! `k - 1` lowest curve minima directly, `EntropyOnly` searches a regular
//! grid of candidates.

use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{
    arc_curve, direct_arcs, extract_cac, extract_wcac, find_candidates, smooth, CandidateConfig,
    ChainThreshold, CurveKind, ShapeCurve,
};
use crate::entropy::{greedy_entropy_seg, information_gain, CandidateSource, EntropyView, Segmentation, StopRule};
use crate::error::{Error, Result};
use crate::profile::{compute_profile_with, DistanceKind};
use crate::series::{MultiSeries, SubseqSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Hybrid,
    ShapeOnly,
    EntropyOnly,
}

/// How hybrid mode feeds candidates to the entropy search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One search per channel over that channel's candidates.
    #[default]
    PerChannel,
    /// Experimental: one search over the union of all channels' candidates.
    Pooled,
    /// Ablation: every channel uses the dense grid.
    DenseGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spec: SubseqSpec,
    pub chain: ChainThreshold,
    pub candidates: CandidateConfig,
    pub mode: Mode,
    pub stop: StopRule,
    pub distance: DistanceKind,
    pub curve: CurveKind,
    pub dense_grid_step: usize,
    pub pooling: Pooling,
    /// Return the per-channel curves in the result.
    pub keep_curves: bool,
}

impl PipelineConfig {
    /// Defaults for subsequence length `L`: chain threshold `2 * median(mp)`,
    /// smoothing/margin/gap of `L`, hybrid mode, knee stop rule.
    pub fn new(length: usize) -> Result<Self> {
        Ok(Self {
            spec: SubseqSpec::new(length)?,
            chain: ChainThreshold::default(),
            candidates: CandidateConfig::for_length(length),
            mode: Mode::Hybrid,
            stop: StopRule::default(),
            distance: DistanceKind::Znorm,
            curve: CurveKind::Wcac,
            dense_grid_step: 1,
            pooling: Pooling::PerChannel,
            keep_curves: false,
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_curve(mut self, curve: CurveKind) -> Self {
        self.curve = curve;
        self
    }

    /// Checks the configuration against a series of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.mode != Mode::EntropyOnly {
            self.spec.check_for(n)?;
        }
        match self.chain {
            ChainThreshold::MedianMultiple(b) if !(b.is_finite() && b > 0.0) => {
                return bad(format!("chain beta must be positive, got {b}"))
            }
            ChainThreshold::Absolute(t) if !(t >= 0.0) => {
                return bad(format!("chain threshold must be non-negative, got {t}"))
            }
            _ => {}
        }
        if self.candidates.smoothing_width == 0 {
            return bad("smoothing width must be >= 1".into());
        }
        if self.candidates.min_gap == 0 {
            return bad("candidate gap must be >= 1".into());
        }
        if self.dense_grid_step == 0 || self.dense_grid_step >= n {
            return bad(format!("dense grid step must be in 1..{n}, got {}", self.dense_grid_step));
        }
        match self.stop {
            StopRule::Segments(k) if k < 1 => return bad("segment count must be >= 1".into()),
            StopRule::Knee { max_boundaries: Some(0) } => {
                return bad("knee search needs at least one boundary".into())
            }
            _ => {}
        }
        if self.mode == Mode::ShapeOnly && !matches!(self.stop, StopRule::Segments(_)) {
            return bad("shape_only mode needs a fixed segment count".into());
        }
        Ok(())
    }
}

/// Per-channel record of the shape and search stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutcome {
    pub channel: usize,
    pub candidates: Vec<usize>,
    /// Final information gain, `None` when the channel was excluded.
    pub gain: Option<f64>,
    pub boundaries: Vec<usize>,
    pub excluded: Option<String>,
}

/// Accumulated time per stage, summed over channels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub profile: Duration,
    pub curve: Duration,
    pub search: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub segmentation: Segmentation,
    pub per_channel: Vec<ChannelOutcome>,
    pub curves: Option<Vec<ShapeCurve>>,
    pub timing: StageTimings,
    pub warnings: Vec<String>,
}

/// Regular candidate grid `step, 2 step, ... < n`.
pub fn dense_grid(n: usize, step: usize) -> Vec<usize> {
    (1..)
        .map(|i| i * step.max(1))
        .take_while(|&b| b < n)
        .collect()
}

/// Channels ordered by final gain, highest first; ties go to the smaller
/// channel index.
pub fn rank_channels(gains: &[(usize, f64)]) -> Vec<usize> {
    let mut v = gains.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(c, _)| c).collect()
}

struct ShapeStage {
    curve: ShapeCurve,
    candidates: Result<Vec<usize>>,
    profile_time: Duration,
    curve_time: Duration,
}

fn shape_stage(series: &MultiSeries, channel: usize, cfg: &PipelineConfig) -> Result<ShapeStage> {
    let t0 = Instant::now();
    let profile = compute_profile_with(series, channel, &cfg.spec, cfg.distance)?;
    let profile_time = t0.elapsed();

    let t1 = Instant::now();
    let mut curve = match cfg.curve {
        CurveKind::Wcac => {
            let arcs = if matches!(cfg.chain, ChainThreshold::Absolute(t) if t == 0.0) {
                direct_arcs(&profile)
            } else {
                extract_cac(&profile, cfg.chain)
            };
            extract_wcac(&profile, &arcs)?
        }
        CurveKind::Ac => arc_curve(&profile),
    };
    let candidates = find_candidates(&curve, &cfg.candidates);
    if let Ok(c) = &candidates {
        curve.candidates = c.clone();
    }
    Ok(ShapeStage {
        curve,
        candidates,
        profile_time,
        curve_time: t1.elapsed(),
    })
}

/// Runs the configured segmentation mode on `series`.
pub fn run_espresso(series: &MultiSeries, cfg: &PipelineConfig) -> Result<PipelineResult> {
    cfg.validate(series.len())?;
    let view = EntropyView::new(series);
    let n = series.len();
    let mut timing = StageTimings::default();
    let mut warnings = Vec::new();

    if cfg.mode == Mode::EntropyOnly {
        let t = Instant::now();
        let seg = search(&view, &dense_grid(n, cfg.dense_grid_step), cfg.stop, CandidateSource::Dense)?;
        timing.search = t.elapsed();
        return Ok(PipelineResult {
            segmentation: seg,
            per_channel: Vec::new(),
            curves: None,
            timing,
            warnings,
        });
    }

    if cfg.mode == Mode::Hybrid && cfg.pooling == Pooling::DenseGrid {
        let grid = dense_grid(n, cfg.dense_grid_step);
        let t = Instant::now();
        let outcomes: Vec<(ChannelOutcome, Segmentation)> = (0..series.n_channels())
            .into_par_iter()
            .map(|j| {
                let seg = search(&view, &grid, cfg.stop, CandidateSource::Channel(j))?;
                Ok((outcome(j, grid.clone(), &seg), seg))
            })
            .collect::<Result<_>>()?;
        timing.search = t.elapsed();
        return Ok(pick_best(outcomes, None, timing, warnings));
    }

    let stages: Vec<ShapeStage> = (0..series.n_channels())
        .into_par_iter()
        .map(|j| shape_stage(series, j, cfg))
        .collect::<Result<_>>()?;
    for s in &stages {
        timing.profile += s.profile_time;
        timing.curve += s.curve_time;
    }
    let curves = cfg
        .keep_curves
        .then(|| stages.iter().map(|s| s.curve.clone()).collect());

    let mut excluded = Vec::new();
    let usable: Vec<(usize, &ShapeStage, &Vec<usize>)> = stages
        .iter()
        .enumerate()
        .filter_map(|(j, s)| match &s.candidates {
            Ok(c) => Some((j, s, c)),
            Err(e) => {
                excluded.push(ChannelOutcome {
                    channel: j,
                    candidates: Vec::new(),
                    gain: None,
                    boundaries: Vec::new(),
                    excluded: Some(e.to_string()),
                });
                None
            }
        })
        .collect();

    if usable.is_empty() {
        if cfg.mode == Mode::ShapeOnly {
            return Err(Error::NoCandidates);
        }
        let msg = "no channel produced shape candidates; falling back to the dense grid".to_string();
        warn!("{msg}");
        warnings.push(msg);
        let t = Instant::now();
        let seg = search(&view, &dense_grid(n, cfg.dense_grid_step), cfg.stop, CandidateSource::Dense)?;
        timing.search = t.elapsed();
        return Ok(PipelineResult {
            segmentation: seg,
            per_channel: excluded,
            curves,
            timing,
            warnings,
        });
    }

    let t = Instant::now();
    let result = match (cfg.mode, cfg.pooling) {
        (Mode::ShapeOnly, _) => {
            let StopRule::Segments(k) = cfg.stop else {
                unreachable!("validated above")
            };
            let outcomes = usable
                .par_iter()
                .map(|&(j, stage, cands)| {
                    let seg = shape_readout(&view, stage, cands, k, cfg.candidates.smoothing_width, j)?;
                    Ok((outcome(j, cands.clone(), &seg), seg))
                })
                .collect::<Result<Vec<_>>>()?;
            pick_best(outcomes, curves, timing, warnings)
        }
        (_, Pooling::Pooled) => {
            let mut pooled: Vec<usize> = usable.iter().flat_map(|(_, _, c)| c.iter().copied()).collect();
            pooled.sort_unstable();
            pooled.dedup();
            let seg = search(&view, &pooled, cfg.stop, CandidateSource::Pooled)?;
            let per_channel = usable
                .iter()
                .map(|&(j, _, c)| ChannelOutcome {
                    channel: j,
                    candidates: c.clone(),
                    gain: None,
                    boundaries: Vec::new(),
                    excluded: None,
                })
                .collect();
            PipelineResult {
                segmentation: seg,
                per_channel,
                curves,
                timing,
                warnings,
            }
        }
        _ => {
            let outcomes = usable
                .par_iter()
                .map(|&(j, _, cands)| {
                    let seg = search(&view, cands, cfg.stop, CandidateSource::Channel(j))?;
                    Ok((outcome(j, cands.clone(), &seg), seg))
                })
                .collect::<Result<Vec<_>>>()?;
            pick_best(outcomes, curves, timing, warnings)
        }
    };
    let mut result = result;
    result.timing.search = t.elapsed();
    if !excluded.is_empty() {
        result.per_channel.extend(excluded);
        result.per_channel.sort_by_key(|o| o.channel);
    }
    Ok(result)
}

fn search(view: &EntropyView, candidates: &[usize], stop: StopRule, source: CandidateSource) -> Result<Segmentation> {
    let mut seg = greedy_entropy_seg(view, candidates, stop)?;
    seg.source = source;
    Ok(seg)
}

fn outcome(channel: usize, candidates: Vec<usize>, seg: &Segmentation) -> ChannelOutcome {
    ChannelOutcome {
        channel,
        candidates,
        gain: Some(seg.final_gain()),
        boundaries: seg.boundaries.clone(),
        excluded: None,
    }
}

/// The `k - 1` candidates with the lowest smoothed curve value.
fn shape_readout(
    view: &EntropyView,
    stage: &ShapeStage,
    candidates: &[usize],
    k: usize,
    smoothing_width: usize,
    channel: usize,
) -> Result<Segmentation> {
    let smoothed = smooth(&stage.curve.values, smoothing_width);
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| smoothed[a].total_cmp(&smoothed[b]).then(a.cmp(&b)));
    ranked.truncate(k.saturating_sub(1));
    let mut trace = Vec::with_capacity(ranked.len());
    let mut sorted = Vec::with_capacity(ranked.len());
    for &b in &ranked {
        sorted.insert(sorted.partition_point(|&x| x < b), b);
        trace.push(information_gain(view, &sorted)?);
    }
    Ok(Segmentation::from_order(ranked, trace, CandidateSource::Channel(channel)))
}

fn pick_best(
    outcomes: Vec<(ChannelOutcome, Segmentation)>,
    curves: Option<Vec<ShapeCurve>>,
    timing: StageTimings,
    warnings: Vec<String>,
) -> PipelineResult {
    let gains: Vec<(usize, f64)> = outcomes
        .iter()
        .map(|(o, s)| (o.channel, s.final_gain()))
        .collect();
    let best = rank_channels(&gains)[0];
    let segmentation = outcomes
        .iter()
        .find(|(o, _)| o.channel == best)
        .map(|(_, s)| s.clone())
        .expect("ranked channel comes from outcomes");
    PipelineResult {
        segmentation,
        per_channel: outcomes.into_iter().map(|(o, _)| o).collect(),
        curves,
        timing,
        warnings,
    }
}
