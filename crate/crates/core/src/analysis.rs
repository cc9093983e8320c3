//! Per-member pipeline shared by the commands and the acceptance run:
//! moments and q, smooth fits at several orders, unfolding and periodograms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{LevelMotionSeries, ModeBasis, SmoothModel, MAX_ORDER};
use crate::error::{Error, Result};
use crate::fluct::{unfold_mapped, UnfoldedSpectrum};
use crate::periodogram::{level_motion_periodogram_with, PeriodogramResult, OVERSAMPLE};
use crate::spectra::{moments, MeanSe, SpectralMoments, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: usize,
    pub model: SmoothModel,
    pub series: LevelMotionSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberAnalysis {
    pub member: usize,
    pub moments: SpectralMoments,
    pub fits: Vec<OrderFit>,
}

impl MemberAnalysis {
    pub fn q(&self) -> f64 {
        self.moments.q_est
    }

    pub fn fit(&self, order: usize) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.order == order)
    }

    /// Unfolds with the smooth model of `order`, reusing the fitted motion:
    /// `F̄(E_i) = (i - 1/2) - Δ_i`.
    pub fn unfold(&self, order: usize, trim: f64) -> Result<UnfoldedSpectrum> {
        let fit = self
            .fit(order)
            .ok_or_else(|| Error::Domain(format!("order {order} was not fitted")))?;
        let mapped: Vec<f64> = fit
            .series
            .delta
            .iter()
            .enumerate()
            .map(|(i, d)| i as f64 + 0.5 - d)
            .collect();
        unfold_mapped(&mapped, trim, self.member)
    }

    pub fn periodogram(&self, order: usize, trim: f64) -> Result<PeriodogramResult> {
        self.periodogram_with(order, trim, OVERSAMPLE)
    }

    pub fn periodogram_with(&self, order: usize, trim: f64, ofac: f64) -> Result<PeriodogramResult> {
        let fit = self
            .fit(order)
            .ok_or_else(|| Error::Domain(format!("order {order} was not fitted")))?;
        level_motion_periodogram_with(&fit.series, trim, ofac)
    }
}

pub fn validate_orders(orders: &[usize]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::Config("orders list is empty".into()));
    }
    if let Some(o) = orders.iter().find(|o| !(2..=MAX_ORDER).contains(*o)) {
        return Err(Error::Config(format!("order {o} outside 2..={MAX_ORDER}")));
    }
    Ok(())
}

/// Moments, per-member q, and least-squares fits at each order.
pub fn analyze_member(s: &Spectrum, orders: &[usize]) -> Result<MemberAnalysis> {
    validate_orders(orders)?;
    let m = moments(s)?;
    let top = *orders.iter().max().expect("orders validated non-empty");
    let basis = ModeBasis::with_scale(s, m.q_est, top, m.centroid, m.width())?;
    let fits = orders
        .iter()
        .map(|&order| {
            let (model, series) = basis.fit(order)?;
            Ok(OrderFit {
                order,
                model,
                series,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MemberAnalysis {
        member: s.member,
        moments: m,
        fits,
    })
}

pub fn analyze_ensemble(spectra: &[Spectrum], orders: &[usize]) -> Result<Vec<MemberAnalysis>> {
    spectra.par_iter().map(|s| analyze_member(s, orders)).collect()
}

/// Ensemble mean and standard error of Δ_RMS at `order`.
pub fn mean_rms(analyses: &[MemberAnalysis], order: usize) -> MeanSe {
    MeanSe::of(analyses.iter().filter_map(|a| a.fit(order)).map(|f| f.series.rms))
}
