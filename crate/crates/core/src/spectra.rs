//! Diagonalization of embedded Hamiltonians and spectral moments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{self, EmbeddedHamiltonian, EmbeddingPlan, EnsembleSpec};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Largest admissible q estimate; keeps the q-normal support bounded.
pub const Q_MAX: f64 = 1.0 - 1e-6;

/// Sorted eigenvalues of one ensemble member.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    pub member: usize,
}

impl Spectrum {
    /// Sorts the values ascending; rejects non-finite input.
    pub fn new(mut eigenvalues: Vec<f64>, member: usize) -> Result<Self> {
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            eigenvalues,
            member,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.eigenvalues
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    pub centroid: f64,
    pub variance: f64,
    /// Skewness γ1.
    pub gamma1: f64,
    /// Excess γ2.
    pub gamma2: f64,
    /// `clamp(1 + γ2, 0, 1 - 1e-6)` from the normalized fourth moment `q + 2`.
    pub q_est: f64,
}

impl SpectralMoments {
    pub fn width(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Full real spectrum of a dense symmetric matrix, ascending.
pub fn eigenvalues_of(matrix: &SymmetricMatrix) -> Result<Vec<f64>> {
    if !matrix.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if matrix.dim() == 0 {
        return Ok(Vec::new());
    }
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};

    // Sequential on purpose: faer's rayon path changes the reduction order with
    // the pool size, and spectra must not depend on the thread count.
    let a = matrix.to_faer();
    let n = a.nrows();
    let par = faer::Par::Seq;
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let req = self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::No, par, Default::default());
    let mut buf = MemBuffer::new(req);
    self_adjoint_evd(a.as_ref(), s.as_mut(), None, par, MemStack::new(&mut buf), Default::default())
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let mut values: Vec<f64> = s.column_vector().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn eigenvalues(h: &EmbeddedHamiltonian) -> Result<Spectrum> {
    Spectrum::new(eigenvalues_of(&h.matrix)?, h.member)
}

/// Population moments of a spectrum (division by d).
pub fn moments(s: &Spectrum) -> Result<SpectralMoments> {
    moments_of(s.values())
}

pub fn moments_of(values: &[f64]) -> Result<SpectralMoments> {
    let d = values.len();
    if d < 4 {
        return Err(Error::Domain(format!(
            "moments need at least 4 levels, got {d}"
        )));
    }
    let n = d as f64;
    let centroid = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &e in values {
        let x = e - centroid;
        let x2 = x * x;
        m2 += x2;
        m3 += x2 * x;
        m4 += x2 * x2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 || m2 <= f64::EPSILON * centroid * centroid {
        return Err(Error::DegenerateSpectrum);
    }
    let gamma1 = m3 / m2.powf(1.5);
    let gamma2 = m4 / (m2 * m2) - 3.0;
    Ok(SpectralMoments {
        centroid,
        variance: m2,
        gamma1,
        gamma2,
        q_est: (1.0 + gamma2).clamp(0.0, Q_MAX),
    })
}

/// Zero-centred, unit-width copy of the spectrum.
pub fn standardize(s: &Spectrum) -> Result<Spectrum> {
    let d = s.len();
    if d < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    let n = d as f64;
    let mean = s.values().iter().sum::<f64>() / n;
    let var = s.values().iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let sd = var.sqrt();
    let mut out: Vec<f64> = s.values().iter().map(|e| (e - mean) / sd).collect();
    // one correction pass removes the rounding left by the first
    let mean2 = out.iter().sum::<f64>() / n;
    let sd2 = (out.iter().map(|e| (e - mean2).powi(2)).sum::<f64>() / n).sqrt();
    out.iter_mut().for_each(|e| *e = (*e - mean2) / sd2);
    Spectrum::new(out, s.member)
}

/// Samples, embeds and diagonalizes every member of the ensemble. Members run
/// on the current rayon pool; output order is the member order regardless of
/// scheduling.
pub fn ensemble_spectra(spec: &EnsembleSpec) -> Result<Vec<Spectrum>> {
    let plan = EmbeddingPlan::for_spec(spec)?;
    (0..spec.members)
        .into_par_iter()
        .map(|member| {
            let h = ensemble::build_member(spec, &plan, member)?;
            eigenvalues(&h)
        })
        .collect()
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }
}

/// Ensemble averages of the per-member moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub centroid: MeanSe,
    pub variance: MeanSe,
    pub gamma1: MeanSe,
    pub gamma2: MeanSe,
    pub q_est: MeanSe,
}

pub fn ensemble_moments(per_member: &[SpectralMoments]) -> EnsembleMoments {
    EnsembleMoments {
        centroid: MeanSe::of(per_member.iter().map(|m| m.centroid)),
        variance: MeanSe::of(per_member.iter().map(|m| m.variance)),
        gamma1: MeanSe::of(per_member.iter().map(|m| m.gamma1)),
        gamma2: MeanSe::of(per_member.iter().map(|m| m.gamma2)),
        q_est: MeanSe::of(per_member.iter().map(|m| m.q_est)),
    }
}
