//! Normal-mode decomposition of a spectrum: exact staircase, smooth
//! distribution function from the q-normal density with q-Hermite
//! corrections of order 3..=n0, and the level motion between the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qhermite::{qfactorial, QNormal, QParameter};
use crate::spectra::{moments, Spectrum};

/// Orders accepted by the fitting routines.
pub const MAX_ORDER: usize = 12;

/// Smooth distribution function
/// `F̄(E) = d [F_q(Ê) + Σ_{n=3}^{n0} S_n/[n]_q! ∫^Ê f_qN H_n]`, `Ê = (E-ε)/σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothModel {
    pub q: QParameter,
    pub order: usize,
    /// `S_3..=S_{n0}`; empty at order 2.
    pub coefficients: Vec<f64>,
    pub dim: usize,
    pub centroid: f64,
    pub width: f64,
}

impl SmoothModel {
    pub fn new(
        q: f64,
        order: usize,
        coefficients: Vec<f64>,
        dim: usize,
        centroid: f64,
        width: f64,
    ) -> Result<Self> {
        let q = QParameter::new(q)?;
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::Domain(format!("order n0={order} outside 2..={MAX_ORDER}")));
        }
        if coefficients.len() != order - 2 {
            return Err(Error::Domain(format!(
                "order {order} needs {} coefficients, got {}",
                order - 2,
                coefficients.len()
            )));
        }
        if !(width > 0.0) {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(Self {
            q,
            order,
            coefficients,
            dim,
            centroid,
            width,
        })
    }

    pub fn normalized(&self, energy: f64) -> f64 {
        (energy - self.centroid) / self.width
    }

    /// `S_n` for `3 <= n <= order`.
    pub fn coefficient(&self, n: usize) -> Option<f64> {
        n.checked_sub(3).and_then(|i| self.coefficients.get(i)).copied()
    }

    fn evaluate(&self, partial: &[f64]) -> f64 {
        let q = self.q.value();
        let corrections: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, s)| s / qfactorial(i + 3, q) * partial[i + 3])
            .sum();
        self.dim as f64 * (partial[0] + corrections)
    }
}

/// `F(E_i) = i - 1/2` for the sorted levels, i = 1..=d.
pub fn staircase(s: &Spectrum) -> Vec<f64> {
    (0..s.len()).map(|i| i as f64 + 0.5).collect()
}

/// `F̄(E)` at one energy. Energies beyond the support give 0 or d.
pub fn smooth_f(model: &SmoothModel, energy: f64) -> Result<f64> {
    let dist = QNormal::new(model.q.value())?;
    Ok(model.evaluate(&dist.partial_moments(model.normalized(energy), model.order)))
}

/// `F̄` at many energies in one pass over the support.
pub fn smooth_f_many(model: &SmoothModel, energies: &[f64]) -> Result<Vec<f64>> {
    let dist = QNormal::new(model.q.value())?;
    let xs: Vec<f64> = energies.iter().map(|&e| model.normalized(e)).collect();
    Ok(dist
        .cumulative_moments(&xs, model.order)
        .iter()
        .map(|p| model.evaluate(p))
        .collect())
}

/// Level motion `Δ_i = F(E_i) - F̄(E_i)` of one spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMotionSeries {
    pub e_hat: Vec<f64>,
    pub delta: Vec<f64>,
    /// RMS of `delta` over `window`.
    pub rms: f64,
    /// Half-open index range of the levels entering `rms`.
    pub window: (usize, usize),
}

impl LevelMotionSeries {
    fn new(e_hat: Vec<f64>, delta: Vec<f64>) -> Self {
        let n = delta.len();
        let rms = rms(&delta);
        Self {
            e_hat,
            delta,
            rms,
            window: (0, n),
        }
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Drops `floor(d * fraction / 2)` levels from each end.
    pub fn central(&self, fraction_trimmed: f64) -> (&[f64], &[f64]) {
        let (lo, hi) = trim_window(self.len(), fraction_trimmed);
        (&self.e_hat[lo..hi], &self.delta[lo..hi])
    }

    /// RMS over the central part of the series.
    pub fn rms_trimmed(&self, fraction_trimmed: f64) -> f64 {
        rms(self.central(fraction_trimmed).1)
    }
}

/// Index range kept after removing `floor(len * fraction / 2)` from each end.
pub fn trim_window(len: usize, fraction_trimmed: f64) -> (usize, usize) {
    let cut = ((len as f64 * fraction_trimmed / 2.0) + 1e-9).floor() as usize;
    let cut = cut.min(len / 2);
    (cut, len - cut)
}

fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Level motion of `s` against an arbitrary model.
pub fn level_motion(s: &Spectrum, model: &SmoothModel) -> Result<LevelMotionSeries> {
    let smooth = smooth_f_many(model, s.values())?;
    let e_hat: Vec<f64> = s.values().iter().map(|&e| model.normalized(e)).collect();
    let delta = staircase(s)
        .iter()
        .zip(&smooth)
        .map(|(f, fbar)| f - fbar)
        .collect();
    Ok(LevelMotionSeries::new(e_hat, delta))
}

/// GOE level-motion RMS, `sqrt(ln(2d)/π²)`.
pub fn goe_delta_rms(d: usize) -> f64 {
    ((2.0 * d as f64).ln()).sqrt() / std::f64::consts::PI
}

/// Per-spectrum data shared by fits of every order: normalized energies and
/// the partial integrals `∫^{Ê_i} f_qN H_n` for n up to `max_order`.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    q: f64,
    centroid: f64,
    width: f64,
    e_hat: Vec<f64>,
    partial: Vec<Vec<f64>>,
    max_order: usize,
}

impl ModeBasis {
    /// Centroid and width come from the spectrum itself.
    pub fn new(s: &Spectrum, q: f64, max_order: usize) -> Result<Self> {
        let m = moments(s)?;
        Self::with_scale(s, q, max_order, m.centroid, m.width())
    }

    pub fn with_scale(
        s: &Spectrum,
        q: f64,
        max_order: usize,
        centroid: f64,
        width: f64,
    ) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&max_order) {
            return Err(Error::Domain(format!(
                "order n0={max_order} outside 2..={MAX_ORDER}"
            )));
        }
        if !(width > 0.0) {
            return Err(Error::DegenerateSpectrum);
        }
        let dist = QNormal::new(q)?;
        let e_hat: Vec<f64> = s.values().iter().map(|e| (e - centroid) / width).collect();
        let partial = dist.cumulative_moments(&e_hat, max_order);
        Ok(Self {
            q,
            centroid,
            width,
            e_hat,
            partial,
            max_order,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn e_hat(&self) -> &[f64] {
        &self.e_hat
    }

    /// Least-squares fit of `S_3..=S_order`, minimizing `Σ Δ(E_i)²`.
    pub fn fit(&self, order: usize) -> Result<(SmoothModel, LevelMotionSeries)> {
        if !(2..=self.max_order).contains(&order) {
            return Err(Error::Domain(format!(
                "order n0={order} outside 2..={}",
                self.max_order
            )));
        }
        let d = self.e_hat.len();
        let df = d as f64;
        let target: Vec<f64> = self
            .partial
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 + 0.5 - df * p[0])
            .collect();
        let ncols = order - 2;
        let coefficients = if ncols == 0 {
            Vec::new()
        } else {
            let scale: Vec<f64> = (3..=order).map(|n| df / qfactorial(n, self.q)).collect();
            let mut design = vec![0.0; d * ncols];
            for (i, p) in self.partial.iter().enumerate() {
                for c in 0..ncols {
                    design[c * d + i] = scale[c] * p[c + 3];
                }
            }
            least_squares(design, d, ncols, &target).ok_or(Error::SingularFit { order })?
        };
        let model = SmoothModel::new(
            self.q,
            order,
            coefficients,
            d,
            self.centroid,
            self.width,
        )?;
        let delta = self
            .partial
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 + 0.5 - model.evaluate(p))
            .collect();
        Ok((model, LevelMotionSeries::new(self.e_hat.clone(), delta)))
    }
}

/// Fits the smooth model of order `n0` to `s` with fixed `q`.
pub fn fit_sn(s: &Spectrum, q: f64, n0: usize) -> Result<SmoothModel> {
    Ok(ModeBasis::new(s, q, n0)?.fit(n0)?.0)
}

/// Householder QR least squares for a column-major `rows x cols` matrix.
/// Returns `None` when a column is numerically dependent on the others.
fn least_squares(mut a: Vec<f64>, rows: usize, cols: usize, b: &[f64]) -> Option<Vec<f64>> {
    if rows < cols {
        return None;
    }
    let mut b = b.to_vec();
    let col_norms: Vec<f64> = (0..cols)
        .map(|c| a[c * rows..(c + 1) * rows].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let scale = col_norms.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut diag = vec![0.0; cols];
    for k in 0..cols {
        let col = &mut a[k * rows..(k + 1) * rows];
        let norm = col[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 * col_norms[k].max(f64::MIN_POSITIVE) || norm <= 1e-14 * scale {
            return None;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        // v = x - alpha e_k, stored in place
        col[k] -= alpha;
        let vnorm2: f64 = col[k..].iter().map(|x| x * x).sum();
        diag[k] = alpha;
        let v: Vec<f64> = col[k..].to_vec();
        for j in k + 1..cols {
            let cj = &mut a[j * rows + k..(j + 1) * rows];
            let dot: f64 = v.iter().zip(cj.iter()).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            cj.iter_mut().zip(&v).for_each(|(y, x)| *y -= f * x);
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
        let f = 2.0 * dot / vnorm2;
        b[k..].iter_mut().zip(&v).for_each(|(y, x)| *y -= f * x);
    }
    // back substitution with R: diagonal in `diag`, strict upper part in `a`
    let mut x = vec![0.0; cols];
    for k in (0..cols).rev() {
        let mut s = b[k];
        for j in k + 1..cols {
            s -= a[j * rows + k] * x[j];
        }
        x[k] = s / diag[k];
    }
    Some(x)
}
