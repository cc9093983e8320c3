//! Run configuration shared by every command; embedded in all JSON outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::fluct::{BIN_WIDTH, DEFAULT_TRIM, L_MAX, S_MAX};
use crate::fock::Statistics;
use crate::periodogram::OVERSAMPLE;

pub const FORMAT_VERSION: &str = "egoe-1";
pub const MIN_CONFIG_ORDER: usize = 2;
pub const MAX_CONFIG_ORDER: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub format_version: String,
    pub ensemble: EnsembleSpec,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Total fraction of levels dropped, half at each end.
    #[serde(default = "default_trim")]
    pub trim: f64,
    #[serde(default = "default_l_max")]
    pub l_max: f64,
    /// Number of NNSD bins on [0, 4].
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_oversample")]
    pub oversample: f64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_version() -> String {
    FORMAT_VERSION.into()
}

fn default_orders() -> Vec<usize> {
    (MIN_CONFIG_ORDER..=MAX_CONFIG_ORDER).collect()
}

fn default_trim() -> f64 {
    DEFAULT_TRIM
}

fn default_l_max() -> f64 {
    L_MAX
}

fn default_bins() -> usize {
    (S_MAX / BIN_WIDTH).round() as usize
}

fn default_oversample() -> f64 {
    OVERSAMPLE
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(ensemble: EnsembleSpec) -> Self {
        Self {
            format_version: default_version(),
            ensemble,
            orders: default_orders(),
            trim: default_trim(),
            l_max: default_l_max(),
            bins: default_bins(),
            oversample: default_oversample(),
            output_dir: default_out(),
        }
    }

    /// EGOE(6,12) with the given rank.
    pub fn fermion_example(k: usize) -> Self {
        Self::new(EnsembleSpec::new(Statistics::Fermion, 6, 12, k))
    }

    /// BEGOE(10,5) with the given rank.
    pub fn boson_example(k: usize) -> Self {
        Self::new(EnsembleSpec::new(Statistics::Boson, 10, 5, k))
    }

    pub fn bin_width(&self) -> f64 {
        S_MAX / self.bins as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "format version `{}` is not `{FORMAT_VERSION}`",
                self.format_version
            )));
        }
        self.ensemble.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.orders.is_empty() {
            return Err(Error::Config("orders list is empty".into()));
        }
        if let Some(o) = self
            .orders
            .iter()
            .find(|o| !(MIN_CONFIG_ORDER..=MAX_CONFIG_ORDER).contains(*o))
        {
            return Err(Error::Config(format!(
                "order {o} outside {MIN_CONFIG_ORDER}..={MAX_CONFIG_ORDER}"
            )));
        }
        if !(0.0..0.9).contains(&self.trim) {
            return Err(Error::Config(format!("trim {} outside [0, 0.9)", self.trim)));
        }
        if !(self.l_max >= 2.0 && self.l_max <= 500.0) {
            return Err(Error::Config(format!("l_max {} outside [2, 500]", self.l_max)));
        }
        if !(4..=400).contains(&self.bins) {
            return Err(Error::Config(format!("bins {} outside [4, 400]", self.bins)));
        }
        if !(self.oversample >= 1.0 && self.oversample <= 32.0) {
            return Err(Error::Config(format!(
                "oversample {} outside [1, 32]",
                self.oversample
            )));
        }
        Ok(())
    }

    /// Orders sorted and deduplicated.
    pub fn sorted_orders(&self) -> Vec<usize> {
        let mut o = self.orders.clone();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
