//! Unfolding and the two level-fluctuation measures: nearest-neighbour
//! spacing distribution and the Dyson-Mehta Δ3 rigidity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decomposition::{smooth_f_many, trim_window, SmoothModel};
use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::spectra::Spectrum;

/// Fraction of levels removed (half from each end) before fluctuation analysis.
pub const DEFAULT_TRIM: f64 = 0.10;
pub const BIN_WIDTH: f64 = 0.1;
pub const S_MAX: f64 = 4.0;
pub const L_MAX: f64 = 60.0;
/// Both the L grid step and the advance between Δ3 windows.
pub const L_STEP: f64 = 2.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Smoothing order used to unfold a member: 4 (fermions, k <= 4) or
/// 6 (bosons, k <= 7), otherwise the bare q-normal.
pub fn unfolding_order(statistics: Statistics, k: usize) -> usize {
    match statistics {
        Statistics::Fermion if k <= 4 => 4,
        Statistics::Boson if k <= 7 => 6,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    /// Retained levels, shifted to start at 0 with unit mean spacing.
    pub levels: Vec<f64>,
    pub trim: f64,
    /// Mean spacing of `F̄(E_i)` over the window before rescaling.
    pub raw_mean_spacing: f64,
    pub member: usize,
}

impl UnfoldedSpectrum {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn span(&self) -> f64 {
        self.levels.last().copied().unwrap_or(0.0)
    }
}

/// Maps levels through `F̄`, keeps the central `1 - trim` fraction and
/// rescales to unit mean spacing.
pub fn unfold(s: &Spectrum, model: &SmoothModel, trim: f64) -> Result<UnfoldedSpectrum> {
    let mapped = smooth_f_many(model, s.values())?;
    unfold_mapped(&mapped, trim, s.member)
}

/// As [`unfold`], for levels already mapped through a smooth distribution.
pub fn unfold_mapped(mapped: &[f64], trim: f64, member: usize) -> Result<UnfoldedSpectrum> {
    if !(0.0..1.0).contains(&trim) {
        return Err(Error::Domain(format!("trim fraction {trim} outside [0, 1)")));
    }
    let (lo, hi) = trim_window(mapped.len(), trim);
    if hi - lo < 3 {
        return Err(Error::EmptyInput("unfolded window"));
    }
    let window = &mapped[lo..hi];
    if let Some(i) = window.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Unfolding {
            lo: lo + i,
            hi: lo + i + 1,
        });
    }
    let first = window[0];
    let mean = (window[window.len() - 1] - first) / (window.len() - 1) as f64;
    Ok(UnfoldedSpectrum {
        levels: window.iter().map(|e| (e - first) / mean).collect(),
        trim,
        raw_mean_spacing: mean,
        member,
    })
}

/// Wigner surmise `(π s/2) exp(-π s²/4)`.
pub fn wigner_surmise(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn poisson_spacing(s: f64) -> f64 {
    (-s).exp()
}

fn wigner_cdf(s: f64) -> f64 {
    -(-0.25 * PI * s * s).exp_m1()
}

fn poisson_cdf(s: f64) -> f64 {
    -(-s).exp_m1()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub bin_width: f64,
    /// Left bin edges; the last bin ends at `edges.last() + bin_width`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Counts / (total spacings · bin width).
    pub density: Vec<f64>,
    /// Bin averages of the reference densities.
    pub wigner: Vec<f64>,
    pub poisson: Vec<f64>,
    /// Spacings beyond the last bin.
    pub overflow: u64,
    pub samples: usize,
    pub mean: f64,
    /// Variance of the pooled spacings, σ²(0).
    pub variance: f64,
}

impl SpacingHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e + 0.5 * self.bin_width).collect()
    }

    fn l1(&self, reference: &[f64]) -> f64 {
        self.density
            .iter()
            .zip(reference)
            .map(|(p, r)| (p - r).abs() * self.bin_width)
            .sum()
    }

    pub fn l1_wigner(&self) -> f64 {
        self.l1(&self.wigner)
    }

    pub fn l1_poisson(&self) -> f64 {
        self.l1(&self.poisson)
    }
}

/// Histogram of spacings pooled over members.
pub fn spacing_histogram(spacings: &[f64], bin_width: f64, s_max: f64) -> Result<SpacingHistogram> {
    if spacings.is_empty() {
        return Err(Error::EmptyInput("spacings"));
    }
    if !(bin_width > 0.0) || !(s_max > bin_width) {
        return Err(Error::Domain(format!(
            "histogram needs 0 < bin width < range, got {bin_width} and {s_max}"
        )));
    }
    let bins = (s_max / bin_width).round() as usize;
    let mut counts = vec![0u64; bins];
    let mut overflow = 0;
    for &s in spacings {
        let b = (s / bin_width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        } else {
            overflow += 1;
        }
    }
    let n = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / n;
    let variance = spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let edges: Vec<f64> = (0..bins).map(|i| i as f64 * bin_width).collect();
    let bin_avg = |cdf: fn(f64) -> f64| -> Vec<f64> {
        edges
            .iter()
            .map(|&a| (cdf(a + bin_width) - cdf(a)) / bin_width)
            .collect()
    };
    Ok(SpacingHistogram {
        bin_width,
        density: counts.iter().map(|&c| c as f64 / (n * bin_width)).collect(),
        wigner: bin_avg(wigner_cdf),
        poisson: bin_avg(poisson_cdf),
        edges,
        counts,
        overflow,
        samples: spacings.len(),
        mean,
        variance,
    })
}

/// Ensemble NNSD with bin width 0.1 on [0, 4].
pub fn nnsd(members: &[UnfoldedSpectrum]) -> Result<SpacingHistogram> {
    nnsd_with(members, BIN_WIDTH)
}

/// Ensemble NNSD of spacings pooled over members, on [0, 4].
pub fn nnsd_with(members: &[UnfoldedSpectrum], bin_width: f64) -> Result<SpacingHistogram> {
    if members.is_empty() {
        return Err(Error::EmptyInput("ensemble"));
    }
    let pooled: Vec<f64> = members.iter().flat_map(|u| u.spacings()).collect();
    spacing_histogram(&pooled, bin_width, S_MAX)
}

/// `(1/L) min_{a,b} ∫_x^{x+L} (N(e) - a - b e)² de` for one window, with
/// `levels` the sorted levels inside `[x, x+L]`.
fn delta3_window(levels: &[f64], x: f64, l: f64) -> f64 {
    let (mut i0, mut i1, mut i2) = (0.0, 0.0, 0.0);
    for (j, &e) in levels.iter().enumerate() {
        let y = e - x;
        let rest = l - y;
        i0 += rest;
        i1 += 0.5 * (l * l - y * y);
        i2 += (2 * j + 1) as f64 * rest;
    }
    let i1c = i1 - 0.5 * l * i0;
    let min = i2 - i0 * i0 / l - i1c * i1c * 12.0 / (l * l * l);
    (min / l).max(0.0)
}

/// Mean Δ3(L) of one unfolded spectrum over windows starting at the first
/// level and advancing by `step`; `None` when no window fits.
pub fn delta3_single(levels: &[f64], l: f64, step: f64) -> Option<f64> {
    let first = *levels.first()?;
    let last = *levels.last()?;
    let mut x = first;
    let (mut sum, mut count) = (0.0, 0usize);
    let mut start = 0;
    while x + l <= last {
        while start < levels.len() && levels[start] < x {
            start += 1;
        }
        let end = start + levels[start..].partition_point(|&e| e <= x + l);
        sum += delta3_window(&levels[start..end], x, l);
        count += 1;
        x += step;
    }
    (count > 0).then(|| sum / count as f64)
}

/// `(1/π²)[ln(2πL) + γ - 5/4 - π²/8]`.
pub fn delta3_goe(l: f64) -> f64 {
    ((2.0 * PI * l).ln() + EULER_GAMMA - 1.25 - PI * PI / 8.0) / (PI * PI)
}

pub fn delta3_poisson(l: f64) -> f64 {
    l / 15.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta3Curve {
    pub l: Vec<f64>,
    pub delta3: Vec<f64>,
    pub goe: Vec<f64>,
    pub poisson: Vec<f64>,
}

impl Delta3Curve {
    /// True when every point is closer to the GOE curve than to L/15.
    pub fn closer_to_goe(&self) -> bool {
        self.delta3
            .iter()
            .zip(self.goe.iter().zip(&self.poisson))
            .all(|(d, (g, p))| (d - g).abs() < (d - p).abs())
    }
}

/// Ensemble-averaged Δ3(L) for L = step, 2 step, ..., l_max.
pub fn delta3(members: &[UnfoldedSpectrum], l_max: f64, step: f64) -> Result<Delta3Curve> {
    if members.is_empty() {
        return Err(Error::EmptyInput("ensemble"));
    }
    if !(step > 0.0) || l_max < step {
        return Err(Error::Domain(format!("need 0 < step <= L_max, got {step}, {l_max}")));
    }
    let shortest = members.iter().map(|u| u.span()).fold(f64::INFINITY, f64::min);
    if l_max > shortest {
        return Err(Error::Domain(format!(
            "L_max = {l_max} exceeds the unfolded span {shortest:.1}"
        )));
    }
    let npoints = (l_max / step + 1e-9).floor() as usize;
    let ls: Vec<f64> = (1..=npoints).map(|i| i as f64 * step).collect();
    let delta3 = ls
        .iter()
        .map(|&l| {
            let vals: Vec<f64> = members
                .iter()
                .filter_map(|u| delta3_single(&u.levels, l, step))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    Ok(Delta3Curve {
        goe: ls.iter().map(|&l| delta3_goe(l)).collect(),
        poisson: ls.iter().map(|&l| delta3_poisson(l)).collect(),
        l: ls,
        delta3,
    })
}
