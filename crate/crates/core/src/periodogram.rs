//! Lomb-Scargle normalized periodogram of an unevenly sampled series, with
//! the peak frequency and the significance Λ of the peak.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decomposition::LevelMotionSeries;
use crate::error::{Error, Result};

pub const OVERSAMPLE: f64 = 4.0;
pub const HIFAC: f64 = 1.0;
pub const MIN_SAMPLES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramResult {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Frequency of the largest power.
    pub f_peak: f64,
    pub p_max: f64,
    /// `100 (1 - FAP)` of the peak, in [0, 100].
    pub lambda: f64,
    pub samples: usize,
}

/// `100 (1 - e^{-P})^M`, the complement of the false-alarm probability
/// `1 - (1 - e^{-P})^M` for `M` independent frequencies.
pub fn significance(p_max: f64, m: usize) -> f64 {
    if p_max <= 0.0 {
        return 0.0;
    }
    100.0 * (m as f64 * (-(-p_max).exp()).ln_1p()).exp()
}

/// Classical Lomb-Scargle periodogram with the standard grid
/// (`1/(T·ofac)` to `hifac·n/(2T)` in steps of `1/(T·ofac)`).
pub fn lomb_scargle(x: &[f64], y: &[f64]) -> Result<PeriodogramResult> {
    lomb_scargle_with(x, y, OVERSAMPLE, HIFAC)
}

pub fn lomb_scargle_with(x: &[f64], y: &[f64], ofac: f64, hifac: f64) -> Result<PeriodogramResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Domain(format!("abscissa has {n} points, series {}", y.len())));
    }
    if n < MIN_SAMPLES {
        return Err(Error::Domain(format!("periodogram needs >= {MIN_SAMPLES} samples, got {n}")));
    }
    if !(ofac >= 1.0) || !(hifac > 0.0) {
        return Err(Error::Domain(format!("bad grid parameters ofac={ofac}, hifac={hifac}")));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = xmax - xmin;
    if !(span > 0.0) {
        return Err(Error::Domain("abscissa has zero span".into()));
    }
    let xave = 0.5 * (xmax + xmin);
    let df = 1.0 / (span * ofac);
    let nfreq = (0.5 * ofac * hifac * n as f64) as usize;

    // per-sample rotation by one frequency step, and the running phase
    let mut wpr = Vec::with_capacity(n);
    let mut wpi = Vec::with_capacity(n);
    let mut wr = Vec::with_capacity(n);
    let mut wi = Vec::with_capacity(n);
    for &xj in x {
        let arg = 2.0 * PI * (xj - xave) * df;
        wpr.push(-2.0 * (0.5 * arg).sin().powi(2));
        wpi.push(arg.sin());
        wr.push(arg.cos());
        wi.push(arg.sin());
    }
    let dy: Vec<f64> = y.iter().map(|v| v - mean).collect();

    let mut frequencies = Vec::with_capacity(nfreq);
    let mut power = Vec::with_capacity(nfreq);
    for i in 0..nfreq {
        let (mut sumsh, mut sumc) = (0.0, 0.0);
        for (c, s) in wr.iter().zip(&wi) {
            sumsh += s * c;
            sumc += (c - s) * (c + s);
        }
        let wtau = 0.5 * (2.0 * sumsh).atan2(sumc);
        let (swtau, cwtau) = wtau.sin_cos();
        let (mut ss2, mut cc2, mut sy, mut cy) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let (c, s) = (wr[j], wi[j]);
            let ss = s * cwtau - c * swtau;
            let cc = c * cwtau + s * swtau;
            ss2 += ss * ss;
            cc2 += cc * cc;
            sy += dy[j] * ss;
            cy += dy[j] * cc;
            let t = wr[j];
            wr[j] = t * wpr[j] - wi[j] * wpi[j] + t;
            wi[j] = wi[j] * wpr[j] + t * wpi[j] + wi[j];
        }
        let term = |num: f64, den: f64| if den > 0.0 { num * num / den } else { 0.0 };
        frequencies.push((i + 1) as f64 * df);
        power.push(0.5 * (term(cy, cc2) + term(sy, ss2)) / var);
    }

    let (imax, p_max) = power
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best });
    Ok(PeriodogramResult {
        f_peak: frequencies[imax],
        lambda: significance(p_max, n),
        p_max,
        frequencies,
        power,
        samples: n,
    })
}

/// Periodogram of the central part of a level-motion series against the
/// normalized energies.
pub fn level_motion_periodogram(series: &LevelMotionSeries, trim: f64) -> Result<PeriodogramResult> {
    level_motion_periodogram_with(series, trim, OVERSAMPLE)
}

pub fn level_motion_periodogram_with(
    series: &LevelMotionSeries,
    trim: f64,
    ofac: f64,
) -> Result<PeriodogramResult> {
    let (x, y) = series.central(trim);
    lomb_scargle_with(x, y, ofac, HIFAC)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub k: usize,
    pub order: usize,
    pub members: usize,
    pub mean_lambda: f64,
    pub mean_f_peak: f64,
}

/// Ensemble means of Λ and f_p for each `(k, n0)` group.
pub fn separation_report(groups: &[(usize, usize, Vec<PeriodogramResult>)]) -> Vec<SeparationRow> {
    groups
        .iter()
        .map(|(k, order, results)| {
            let n = results.len().max(1) as f64;
            SeparationRow {
                k: *k,
                order: *order,
                members: results.len(),
                mean_lambda: results.iter().map(|r| r.lambda).sum::<f64>() / n,
                mean_f_peak: results.iter().map(|r| r.f_peak).sum::<f64>() / n,
            }
        })
        .collect()
}
