//! Matrix Profile and Matrix Profile Index.
//!
//! For every length-`L` subsequence of a channel the profile stores the
//! distance to its nearest non-trivial neighbour (`mp`) and that neighbour's
//! start index (`mpi`). Neighbours closer than the exclusion radius are
//! trivial matches and never considered. Ties go to the smallest index.
//!
//! Two implementations share one contract:
//!
//! - [`brute_force_slice`]: the naive double loop over [`DistanceKind::distance`].
//! - [`profile_slice`]: diagonal sliding dot products screen candidate
//!   neighbours in `O(W^2)`, then every pair that could still be the row
//!   minimum under a rounding-error bound is re-evaluated with the exact
//!   distance. The result is identical to the naive loop, not approximately
//!   equal.
//!
//! A constant window (standard deviation below `1e-12 * (1 + |mean|)`)
//! z-normalizes to the zero vector: two constant windows are at distance 0
//! and a constant and a non-constant window are at distance `sqrt(L)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MultiSeries, SubseqSpec};

/// Which subsequence distance to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Euclidean distance between z-normalized windows.
    #[default]
    Znorm,
    /// Raw Euclidean distance.
    Plain,
}

impl DistanceKind {
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Self::Znorm => znorm_distance(a, b),
            Self::Plain => plain_distance(a, b),
        }
    }
}

/// Population mean and standard deviation, two-pass.
fn moments(w: &[f64]) -> (f64, f64) {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(mean: f64, std: f64) -> bool {
    std < 1e-12 * (1.0 + mean.abs())
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidSpec(format!(
            "distance needs windows of length >= 2, got {}",
            a.len()
        )));
    }
    Ok(())
}

/// Euclidean distance between the z-normalized copies of `a` and `b`.
///
/// The result lies in `[0, 2 sqrt(L)]`.
pub fn znorm_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let (ma, sa) = moments(a);
    let (mb, sb) = moments(b);
    let za = |v: f64| if is_constant(ma, sa) { 0.0 } else { (v - ma) / sa };
    let zb = |v: f64| if is_constant(mb, sb) { 0.0 } else { (v - mb) / sb };
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = za(x) - zb(y);
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// Raw Euclidean distance.
pub fn plain_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Matrix Profile distances and nearest-neighbour indices of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    pub mp: Vec<f64>,
    pub mpi: Vec<usize>,
    pub spec: SubseqSpec,
}

impl ProfilePair {
    /// Builds a profile from precomputed vectors, checking the structural
    /// invariants (equal lengths, finite non-negative distances, in-range
    /// indices outside the exclusion zone).
    pub fn from_parts(mp: Vec<f64>, mpi: Vec<usize>, spec: SubseqSpec) -> Result<Self> {
        if mp.len() != mpi.len() {
            return Err(Error::LengthMismatch {
                left: mp.len(),
                right: mpi.len(),
            });
        }
        if mp.is_empty() {
            return Err(Error::InvalidSpec("empty profile".into()));
        }
        if let Some(i) = mp.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidSpec(format!("mp[{i}] = {} is not a distance", mp[i])));
        }
        for (i, &j) in mpi.iter().enumerate() {
            if j >= mp.len() {
                return Err(Error::OutOfRange {
                    what: "profile index",
                    index: j,
                    max: mp.len() - 1,
                });
            }
            if i.abs_diff(j) < spec.exclusion_radius {
                return Err(Error::InvalidSpec(format!(
                    "mpi[{i}] = {j} lies inside the exclusion zone of radius {}",
                    spec.exclusion_radius
                )));
            }
        }
        Ok(Self { mp, mpi, spec })
    }

    /// Number of subsequences, `N - L + 1`.
    pub fn len(&self) -> usize {
        self.mp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mp.is_empty()
    }

    pub fn median_distance(&self) -> f64 {
        let mut v = self.mp.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Every window needs at least one neighbour outside its exclusion zone.
fn check_slice(values: &[f64], spec: &SubseqSpec) -> Result<usize> {
    let w = spec.n_windows(values.len());
    if spec.length < 2 || w < 2 || (w - 1).div_ceil(2) < spec.exclusion_radius {
        return Err(Error::SubseqTooLong {
            length: spec.length,
            series_len: values.len(),
        });
    }
    Ok(w)
}

/// Z-normalized profile of one channel of a validated series.
///
/// # Errors
///
/// [`Error::SubseqTooLong`] unless `2 <= L <= N/2`; [`Error::OutOfRange`]
/// for a bad channel index.
pub fn compute_profile(series: &MultiSeries, channel: usize, spec: &SubseqSpec) -> Result<ProfilePair> {
    compute_profile_with(series, channel, spec, DistanceKind::Znorm)
}

pub fn compute_profile_with(
    series: &MultiSeries,
    channel: usize,
    spec: &SubseqSpec,
    kind: DistanceKind,
) -> Result<ProfilePair> {
    spec.check_for(series.len())?;
    profile_slice(series.channel(channel)?, spec, kind)
}

/// Naive profile of one channel; test oracle for [`compute_profile`].
pub fn brute_force_profile(series: &MultiSeries, channel: usize, spec: &SubseqSpec) -> Result<ProfilePair> {
    spec.check_for(series.len())?;
    brute_force_slice(series.channel(channel)?, spec, DistanceKind::Znorm)
}

/// `O(W^2 L)` double loop. Only requires that every window has an admissible
/// neighbour, so it also accepts `L > N/2` when the exclusion zone allows.
pub fn brute_force_slice(values: &[f64], spec: &SubseqSpec, kind: DistanceKind) -> Result<ProfilePair> {
    let w = check_slice(values, spec)?;
    let l = spec.length;
    let mut mp = vec![f64::INFINITY; w];
    let mut mpi = vec![0; w];
    for i in 0..w {
        for j in 0..w {
            if i.abs_diff(j) < spec.exclusion_radius {
                continue;
            }
            let d = kind.distance(&values[i..i + l], &values[j..j + l])?;
            if d < mp[i] {
                mp[i] = d;
                mpi[i] = j;
            }
        }
    }
    Ok(ProfilePair {
        mp,
        mpi,
        spec: *spec,
    })
}

/// Dot products are re-seeded directly every `RESEED` steps along a diagonal.
const RESEED: usize = 64;

/// Exact profile of a raw slice; same admissibility rule as
/// [`brute_force_slice`].
pub fn profile_slice(values: &[f64], spec: &SubseqSpec, kind: DistanceKind) -> Result<ProfilePair> {
    let w = check_slice(values, spec)?;
    let l = spec.length;
    let lf = l as f64;

    // Centering on the global mean keeps the dot products small.
    let global = values.iter().sum::<f64>() / values.len() as f64;
    let x: Vec<f64> = values.iter().map(|&v| v - global).collect();
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let constant: Vec<bool> = (0..w)
        .map(|i| {
            let (m, s) = moments(&values[i..i + l]);
            is_constant(m, s)
        })
        .collect();
    let centered: Vec<(f64, f64)> = (0..w).map(|i| moments(&x[i..i + l])).collect();
    let sumsq: Vec<f64> = (0..w).map(|i| x[i..i + l].iter().map(|v| v * v).sum()).collect();

    let eps = f64::EPSILON;
    // Rounding bound on a sliding dot product.
    let qt_err = 4.0 * (lf + 2.0 * RESEED as f64) * eps * lf * scale * scale;

    // Screening estimate of the squared distance and its error bound.
    let estimate = |i: usize, j: usize, qt: f64| -> (f64, f64) {
        match kind {
            DistanceKind::Znorm => match (constant[i], constant[j]) {
                (true, true) => (0.0, 0.0),
                (true, false) | (false, true) => (lf, 0.0),
                (false, false) => {
                    let (mi, si) = centered[i];
                    let (mj, sj) = centered[j];
                    let rho = ((qt - lf * mi * mj) / (lf * si * sj)).clamp(-1.0, 1.0);
                    let rho_err = qt_err / (lf * si * sj) + 16.0 * eps * lf;
                    (2.0 * lf * (1.0 - rho), 2.0 * lf * rho_err + 1e-12 * lf)
                }
            },
            DistanceKind::Plain => {
                let d2 = (sumsq[i] + sumsq[j] - 2.0 * qt).max(0.0);
                (d2, 4.0 * qt_err + 16.0 * eps * (sumsq[i] + sumsq[j]) + 1e-300)
            }
        }
    };

    let for_each_pair = |visit: &mut dyn FnMut(usize, usize, f64, f64)| {
        for k in spec.exclusion_radius..w {
            let mut qt = 0.0;
            for i in 0..w - k {
                let j = i + k;
                if i % RESEED == 0 {
                    qt = x[i..i + l].iter().zip(&x[j..j + l]).map(|(a, b)| a * b).sum();
                } else {
                    qt += x[i + l - 1] * x[j + l - 1] - x[i - 1] * x[j - 1];
                }
                let (d2, tol) = estimate(i, j, qt);
                visit(i, j, d2, tol);
            }
        }
    };

    let mut upper = vec![f64::INFINITY; w];
    for_each_pair(&mut |i, j, d2, tol| {
        let hi = d2 + tol;
        upper[i] = upper[i].min(hi);
        upper[j] = upper[j].min(hi);
    });

    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); w];
    let mut err = None;
    for_each_pair(&mut |i, j, d2, tol| {
        let lo = d2 - tol;
        let need_i = lo <= upper[i];
        let need_j = lo <= upper[j];
        if !(need_i || need_j) || err.is_some() {
            return;
        }
        match kind.distance(&values[i..i + l], &values[j..j + l]) {
            Ok(d) => {
                if need_i && (d, j) < best[i] {
                    best[i] = (d, j);
                }
                if need_j && (d, i) < best[j] {
                    best[j] = (d, i);
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }

    let (mp, mpi) = best.into_iter().unzip();
    Ok(ProfilePair {
        mp,
        mpi,
        spec: *spec,
    })
}
