//! Seeded synthetic datasets with known boundaries.
//!
//! `generate_synthetic` covers the continuity × repetition grid. The two
//! extra fixtures are small scenarios used by the acceptance suite: a
//! repeated-motif A,B,A series and a structured channel paired with noise.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use espresso::MultiSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Sampling rate stamped on every generated series.
pub const SYNTH_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Continuity {
    /// Neighbouring segments blend over a transition ramp.
    C,
    /// Segments are hard-concatenated.
    NC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// Segments repeat a periodic motif.
    R,
    /// Segments hold level-shifted noise or ramps.
    NR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub continuity: Continuity,
    pub pattern: Pattern,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.continuity {
            Continuity::C => "C",
            Continuity::NC => "NC",
        };
        let p = match self.pattern {
            Pattern::R => "R",
            Pattern::NR => "NR",
        };
        write!(f, "{c}-{p}")
    }
}

impl FromStr for Regime {
    type Err = CliError;

    /// Parses `C-R`, `nc_nr`, `NC,R` and similar spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        let (continuity, rest) = if let Some(rest) = norm.strip_prefix("NC") {
            (Continuity::NC, rest)
        } else if let Some(rest) = norm.strip_prefix('C') {
            (Continuity::C, rest)
        } else {
            return Err(CliError::Validation(format!("unknown regime {s:?}")));
        };
        let pattern = match rest {
            "R" => Pattern::R,
            "NR" => Pattern::NR,
            _ => return Err(CliError::Validation(format!("unknown regime {s:?}"))),
        };
        Ok(Self { continuity, pattern })
    }
}

/// A generated series and its true boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub series: MultiSeries,
    pub truth: Vec<usize>,
}

const SYNTH_CHANNELS: usize = 3;
const RAMP: usize = 20;

/// Per-segment signal parameters for one channel.
#[derive(Debug, Clone, Copy)]
struct Piece {
    level: f64,
    amplitude: f64,
    period: f64,
    phase: f64,
    slope: f64,
    start: usize,
}

impl Piece {
    fn value(&self, t: usize) -> f64 {
        let local = t as f64 - self.start as f64;
        self.level + self.slope * local + self.amplitude * (TAU * t as f64 / self.period + self.phase).sin()
    }
}

/// Channel levels for one segment. Consecutive segments must split their
/// mass across channels differently enough to be told apart.
fn segment_levels(rng: &mut ChaCha8Rng, previous: Option<&[f64]>) -> Vec<f64> {
    loop {
        let levels: Vec<f64> = (0..SYNTH_CHANNELS).map(|_| rng.gen_range(0.5..4.0)).collect();
        let Some(prev) = previous else { return levels };
        let share = |v: &[f64]| -> Vec<f64> {
            let total: f64 = v.iter().sum();
            v.iter().map(|x| x / total).collect()
        };
        let (a, b) = (share(prev), share(&levels));
        let tv: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        if tv >= 0.15 {
            return levels;
        }
    }
}

/// Generates `k` segments of the given regime. Segment lengths vary between
/// 200 and 350 samples; continuous regimes blend neighbours over a 20-sample
/// ramp centred on each boundary.
pub fn generate_synthetic(regime: Regime, k: usize, seed: u64) -> Result<Synthetic, CliError> {
    if k < 2 {
        return Err(CliError::Validation(format!("synthetic data needs k >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.25).expect("valid sigma");

    let lengths: Vec<usize> = (0..k).map(|_| rng.gen_range(200..=350)).collect();
    let mut starts = vec![0];
    for len in &lengths {
        starts.push(starts.last().unwrap() + len);
    }
    let n = *starts.last().unwrap();
    let truth: Vec<usize> = starts[1..k].to_vec();

    let mut pieces: Vec<Vec<Piece>> = Vec::with_capacity(k);
    let mut prev: Option<Vec<f64>> = None;
    for &start in &starts[..k] {
        let levels = segment_levels(&mut rng, prev.as_deref());
        let period = rng.gen_range(12.0..40.0);
        let row = levels
            .iter()
            .map(|&level| match regime.pattern {
                Pattern::R => Piece {
                    level,
                    amplitude: rng.gen_range(0.6..1.2),
                    period: period * rng.gen_range(0.8..1.25),
                    phase: rng.gen_range(0.0..TAU),
                    slope: 0.0,
                    start,
                },
                Pattern::NR => Piece {
                    level,
                    amplitude: 0.0,
                    period: 1.0,
                    phase: 0.0,
                    slope: if rng.gen_bool(0.5) { rng.gen_range(-0.5..0.5) / 300.0 } else { 0.0 },
                    start,
                },
            })
            .collect();
        pieces.push(row);
        prev = Some(levels);
    }

    let mut channels = vec![Vec::with_capacity(n); SYNTH_CHANNELS];
    for t in 0..n {
        let seg = starts.partition_point(|&s| s <= t) - 1;
        for (j, row) in channels.iter_mut().enumerate() {
            let mut v = pieces[seg][j].value(t);
            if regime.continuity == Continuity::C {
                v = blend(&pieces, &truth, j, t).unwrap_or(v);
            }
            row.push(v + noise.sample(&mut rng));
        }
    }
    finish(channels, truth)
}

/// Ramp value at `t` when it lies in the transition around a boundary.
fn blend(pieces: &[Vec<Piece>], truth: &[usize], channel: usize, t: usize) -> Option<f64> {
    let half = RAMP / 2;
    truth.iter().enumerate().find_map(|(i, &b)| {
        let lo = b.saturating_sub(half);
        (t >= lo && t < b + half).then(|| {
            let alpha = (t - lo) as f64 / RAMP as f64;
            (1.0 - alpha) * pieces[i][channel].value(t) + alpha * pieces[i + 1][channel].value(t)
        })
    })
}

fn finish(channels: Vec<Vec<f64>>, truth: Vec<usize>) -> Result<Synthetic, CliError> {
    let series = MultiSeries::new(channels)?.with_sample_rate(SYNTH_RATE_HZ)?;
    Ok(Synthetic { series, truth })
}

/// Motif class of one segment in the A,B,A fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motif {
    A,
    B,
}

/// One period of a motif on each channel, as a function of the phase in
/// `[0, 1)`.
fn motif_value(motif: Motif, channel: usize, phase: f64) -> f64 {
    let pulse = |centre: f64, width: f64| (-((phase - centre) / width).powi(2)).exp();
    match (motif, channel) {
        (Motif::A, 0) => 3.0 * pulse(0.3, 0.08) + 1.0,
        (Motif::A, 1) => 0.4 * (TAU * phase).sin(),
        (Motif::A, _) => 0.5 * pulse(0.7, 0.1),
        (Motif::B, 0) => 0.4 * (TAU * phase).cos(),
        (Motif::B, 1) => 2.5 * (2.0 * phase - 1.0).abs() + 1.0,
        (Motif::B, _) => 1.5 * pulse(0.5, 0.2),
    }
}

/// Three channels over segments A, B, A of about 400 samples each. Both A
/// segments repeat the same motif, so nearest-neighbour links jump from the
/// last segment back to the first across the middle one.
pub fn motif_aba(seed: u64) -> Result<Synthetic, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.15).expect("valid sigma");
    let lengths: Vec<usize> = (0..3).map(|_| rng.gen_range(350..=450)).collect();
    let periods = [rng.gen_range(28.0..34.0), rng.gen_range(20.0..26.0)];
    let truth = vec![lengths[0], lengths[0] + lengths[1]];
    let n: usize = lengths.iter().sum();

    let mut channels = vec![Vec::with_capacity(n); 3];
    for t in 0..n {
        let seg = truth.partition_point(|&b| b <= t);
        let motif = if seg == 1 { Motif::B } else { Motif::A };
        let period = if seg == 1 { periods[1] } else { periods[0] };
        let start = if seg == 0 { 0 } else { truth[seg - 1] };
        let phase = ((t - start) as f64 / period).fract();
        for (j, row) in channels.iter_mut().enumerate() {
            row.push(motif_value(motif, j, phase) + noise.sample(&mut rng));
        }
    }
    finish(channels, truth)
}

/// Channel 0 switches from a slow sinusoid to a faster, raised one at a
/// random point in the middle fifth of the series; channel 1 is white noise.
pub fn signal_and_noise(seed: u64) -> Result<Synthetic, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 800;
    let change = rng.gen_range(320..=480);
    let small = Normal::new(0.0, 0.1).expect("valid sigma");
    let white = Normal::new(0.0, 1.0).expect("valid sigma");
    let phases = [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)];
    let mut structured = Vec::with_capacity(n);
    for t in 0..n {
        let v = if t < change {
            (TAU * t as f64 / 25.0 + phases[0]).sin()
        } else {
            1.5 + (TAU * t as f64 / 14.0 + phases[1]).sin()
        };
        structured.push(v + small.sample(&mut rng));
    }
    let noise: Vec<f64> = (0..n).map(|_| white.sample(&mut rng)).collect();
    finish(vec![structured, noise], vec![change])
}

/// Named fixtures accepted by the `synth` subcommand besides the regimes.
pub fn fixture(name: &str, k: usize, seed: u64) -> Result<Synthetic, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "aba" | "motif-aba" => motif_aba(seed),
        "signal-noise" | "signal_noise" => signal_and_noise(seed),
        other => generate_synthetic(other.parse()?, k, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regime(s: &str) -> Regime {
        s.parse().unwrap()
    }

    #[test]
    fn parses_regime_spellings() {
        assert_eq!(
            regime("nc_r"),
            Regime {
                continuity: Continuity::NC,
                pattern: Pattern::R
            }
        );
        assert_eq!(regime("C-NR").to_string(), "C-NR");
        assert!("X-R".parse::<Regime>().is_err());
    }

    #[test]
    fn nc_boundaries_at_concatenation_points() {
        let s = generate_synthetic(regime("NC-R"), 3, 7).unwrap();
        assert_eq!(s.truth.len(), 2);
        assert_eq!(s.series.n_channels(), SYNTH_CHANNELS);
        assert!(s.truth[0] >= 200 && s.truth[1] - s.truth[0] >= 200);
    }

    #[test]
    fn same_seed_same_output() {
        for r in ["C-R", "C-NR", "NC-R", "NC-NR"] {
            assert_eq!(generate_synthetic(regime(r), 4, 11).unwrap(), generate_synthetic(regime(r), 4, 11).unwrap());
        }
        assert_eq!(motif_aba(3).unwrap(), motif_aba(3).unwrap());
        assert_ne!(signal_and_noise(1).unwrap(), signal_and_noise(2).unwrap());
    }

    #[test]
    fn continuous_two_segments_one_boundary_mid_ramp() {
        let s = generate_synthetic(regime("C-NR"), 2, 5).unwrap();
        assert_eq!(s.truth.len(), 1);
        let b = s.truth[0];
        // Halfway through the ramp the first channel sits between both levels.
        let x = s.series.channel(0).unwrap();
        let before: f64 = x[b - 60..b - 20].iter().sum::<f64>() / 40.0;
        let after: f64 = x[b + 20..b + 60].iter().sum::<f64>() / 40.0;
        let mid: f64 = x[b - 2..b + 2].iter().sum::<f64>() / 4.0;
        assert!((mid - (before + after) / 2.0).abs() < 0.6 + (before - after).abs() / 4.0);
    }

    #[test]
    fn k_below_two_rejected() {
        assert!(generate_synthetic(regime("NC-NR"), 1, 0).is_err());
    }
}
