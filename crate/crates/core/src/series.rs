//! Validated multichannel time series and subsequence views.
//!
//! All indices are 0-based. A subsequence starting at `start` covers samples
//! `start..start + L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `D x N` matrix of finite samples, one row per channel.
///
/// Guarantees `D >= 1`, `N >= 2`, equal channel lengths and finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeries {
    channels: Vec<Vec<f64>>,
    names: Vec<String>,
    sample_rate_hz: Option<f64>,
}

/// Validates a raw channel matrix, naming channels `ch0`, `ch1`, ...
///
/// # Errors
///
/// | Variant | Trigger |
/// |---------|---------|
/// | [`Error::EmptyInput`] | no channels, or fewer than 2 samples |
/// | [`Error::RaggedChannels`] | a channel length differs from channel 0 |
/// | [`Error::NonFinite`] | first NaN/inf found, scanning channel by channel |
pub fn validate_series(raw: Vec<Vec<f64>>) -> Result<MultiSeries> {
    let names = (0..raw.len()).map(|j| format!("ch{j}")).collect();
    MultiSeries::with_names(raw, names)
}

impl MultiSeries {
    pub fn new(raw: Vec<Vec<f64>>) -> Result<Self> {
        validate_series(raw)
    }

    /// Validates `raw` and attaches explicit channel names.
    pub fn with_names(raw: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let n = raw.first().map_or(0, Vec::len);
        if raw.is_empty() || n < 2 {
            return Err(Error::EmptyInput {
                channels: raw.len(),
                samples: n,
            });
        }
        for (channel, row) in raw.iter().enumerate() {
            if row.len() != n {
                return Err(Error::RaggedChannels {
                    channel,
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for (channel, row) in raw.iter().enumerate() {
            if let Some(index) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { channel, index });
            }
        }
        if names.len() != raw.len() {
            return Err(Error::ChannelNames {
                expected: raw.len(),
                found: names.len(),
            });
        }
        Ok(Self {
            channels: raw,
            names,
            sample_rate_hz: None,
        })
    }

    /// Attaches a sampling rate. Non-positive or non-finite rates are rejected.
    pub fn with_sample_rate(mut self, hz: f64) -> Result<Self> {
        if !(hz.is_finite() && hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sample rate must be positive, got {hz}"
            )));
        }
        self.sample_rate_hz = Some(hz);
        Ok(self)
    }

    /// Number of channels `D`.
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    /// Always `false`; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, j: usize) -> Result<&[f64]> {
        self.channels
            .get(j)
            .map(Vec::as_slice)
            .ok_or(Error::OutOfRange {
                what: "channel",
                index: j,
                max: self.channels.len() - 1,
            })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sample_rate_hz(&self) -> Option<f64> {
        self.sample_rate_hz
    }

    /// Re-validates an existing series. Always returns an equal value.
    pub fn revalidate(&self) -> Result<Self> {
        let mut out = Self::with_names(self.channels.clone(), self.names.clone())?;
        out.sample_rate_hz = self.sample_rate_hz;
        Ok(out)
    }

    /// Returns a copy with channels reordered so that output channel `k` is
    /// input channel `order[k]`.
    pub fn permute_channels(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_channels()];
        if order.len() != self.n_channels() {
            return Err(Error::ChannelNames {
                expected: self.n_channels(),
                found: order.len(),
            });
        }
        for &j in order {
            if j >= seen.len() || seen[j] {
                return Err(Error::InvalidConfig(format!(
                    "{order:?} is not a permutation"
                )));
            }
            seen[j] = true;
        }
        Ok(Self {
            channels: order.iter().map(|&j| self.channels[j].clone()).collect(),
            names: order.iter().map(|&j| self.names[j].clone()).collect(),
            sample_rate_hz: self.sample_rate_hz,
        })
    }

    /// Applies `f` to every sample and re-validates.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let raw = self
            .channels
            .iter()
            .map(|row| row.iter().map(|&v| f(v)).collect())
            .collect();
        let mut out = Self::with_names(raw, self.names.clone())?;
        out.sample_rate_hz = self.sample_rate_hz;
        Ok(out)
    }
}

/// Subsequence length and trivial-match exclusion radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubseqSpec {
    pub length: usize,
    pub exclusion_radius: usize,
}

impl SubseqSpec {
    /// Length `L` with the default exclusion radius `ceil(L / 2)`.
    pub fn new(length: usize) -> Result<Self> {
        Self::with_exclusion(length, length.div_ceil(2))
    }

    pub fn with_exclusion(length: usize, exclusion_radius: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidSpec(format!(
                "subsequence length must be >= 2, got {length}"
            )));
        }
        if exclusion_radius == 0 {
            return Err(Error::InvalidSpec("exclusion radius must be >= 1".into()));
        }
        Ok(Self {
            length,
            exclusion_radius,
        })
    }

    /// Checks `2 <= L <= N/2`.
    pub fn check_for(&self, series_len: usize) -> Result<()> {
        if self.length < 2 || 2 * self.length > series_len {
            return Err(Error::SubseqTooLong {
                length: self.length,
                series_len,
            });
        }
        Ok(())
    }

    /// Number of subsequences `N - L + 1` in a series of length `n`.
    pub fn n_windows(&self, n: usize) -> usize {
        (n + 1).saturating_sub(self.length)
    }
}

/// The length-`L` window of channel `channel` starting at `start`.
pub fn subsequence<'a>(
    series: &'a MultiSeries,
    channel: usize,
    start: usize,
    spec: &SubseqSpec,
) -> Result<&'a [f64]> {
    let values = series.channel(channel)?;
    let max = values.len().saturating_sub(spec.length);
    if spec.length > values.len() || start > max {
        return Err(Error::OutOfRange {
            what: "subsequence start",
            index: start,
            max,
        });
    }
    Ok(&values[start..start + spec.length])
}
