//! Hybrid shape and entropy segmentation of multichannel time series.
//!
//! The pipeline computes a matrix profile per channel, builds a weighted
//! chained arc curve whose local minima become change-point candidates, and
//! picks boundaries among those candidates with a greedy information-gain
//! search over all channels. Channels are ranked by the gain their candidates
//! reach and the best one supplies the final segmentation.
//!
//! ```
//! use espresso::{run_espresso, MultiSeries, PipelineConfig, StopRule};
//!
//! let n = 400;
//! let a: Vec<f64> = (0..n).map(|i| if i < 200 { (i as f64 * 0.7).sin() + 2.0 } else { 0.2 * (i as f64 * 0.3).sin() }).collect();
//! let b: Vec<f64> = (0..n).map(|i| if i < 200 { 0.2 * (i as f64 * 0.5).cos() } else { (i as f64 * 0.4).cos() + 2.0 }).collect();
//! let series = MultiSeries::new(vec![a, b]).unwrap();
//! let cfg = PipelineConfig::new(16).unwrap().with_stop(StopRule::Segments(2));
//! let result = run_espresso(&series, &cfg).unwrap();
//! assert_eq!(result.segmentation.k, 2);
//! ```

pub mod curve;
pub mod entropy;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod profile;
pub mod series;

pub use curve::{
    arc_curve, count_curve, direct_arcs, extract_cac, extract_wcac, find_candidates, smooth, Arc, ArcSet,
    CandidateConfig, ChainThreshold, CurveKind, ShapeCurve,
};
pub use entropy::{
    channel_distribution, greedy_entropy_seg, information_gain, knee_point, knee_point_levels, segment_entropy,
    CandidateSource, EntropyView, SegmentEntropy, Segmentation, StopRule,
};
pub use error::{Error, Result};
pub use metrics::{evaluate, f_score, mae, match_boundaries, rmse_norm, window_samples, BoundaryMatch, EvalReport, FScore};
pub use pipeline::{
    dense_grid, rank_channels, run_espresso, ChannelOutcome, Mode, PipelineConfig, PipelineResult, Pooling,
    StageTimings,
};
pub use profile::{
    brute_force_profile, brute_force_slice, compute_profile, compute_profile_with, plain_distance, profile_slice,
    znorm_distance, DistanceKind, ProfilePair,
};
pub use series::{subsequence, validate_series, MultiSeries, SubseqSpec};
