//! Closed-form ensemble averages of the squared mode amplitudes and the
//! resulting level-motion variance as a function of normalized energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{binomial, Statistics};
use crate::qhermite::{hermite_q_all, qfactorial, QNormal};

/// Relative size below which further series terms are dropped.
pub const SERIES_TOLERANCE: f64 = 1e-16;

/// Caption q values for m=10 fermions in N=20 states, k = 2..=5.
pub const FERMION_PRESETS: [(usize, f64); 4] = [(2, 0.465), (3, 0.176), (4, 0.044), (5, 0.007)];

/// Caption q values for m=20 bosons in N=10 states, k = 2..=5.
pub const BOSON_PRESETS: [(usize, f64); 4] = [(2, 0.932), (3, 0.84), (4, 0.712), (5, 0.556)];

/// `(m, N)` of the two analytic examples.
pub const FERMION_SYSTEM: (usize, usize) = (10, 20);
pub const BOSON_SYSTEM: (usize, usize) = (20, 10);

pub fn preset_q(statistics: Statistics, k: usize) -> Option<f64> {
    let table = match statistics {
        Statistics::Fermion => &FERMION_PRESETS,
        Statistics::Boson => &BOSON_PRESETS,
    };
    table.iter().find(|(kk, _)| *kk == k).map(|&(_, q)| q)
}

fn binom(n: usize, k: usize) -> Result<f64> {
    binomial(n as u64, k as u64)
        .map(|b| b as f64)
        .ok_or_else(|| Error::Domain(format!("binomial({n},{k}) overflows")))
}

fn check_fermion(m: usize, n_states: usize, k: usize) -> Result<()> {
    if k == 0 || k > m || m > n_states {
        return Err(Error::Domain(format!(
            "need 1 <= k <= m <= N, got k={k}, m={m}, N={n_states}"
        )));
    }
    Ok(())
}

fn check_boson(m: usize, n_states: usize, k: usize) -> Result<()> {
    if k == 0 || k > m || n_states == 0 || k > n_states {
        return Err(Error::Domain(format!(
            "need 1 <= k <= m and k <= N, got k={k}, m={m}, N={n_states}"
        )));
    }
    Ok(())
}

/// `2n C(m,k)^(2-n) C(N,k)^(-2)`, the dilute-limit fermion result.
pub fn sn2_fermion(n: usize, m: usize, n_states: usize, k: usize) -> Result<f64> {
    check_fermion(m, n_states, k)?;
    if n == 0 {
        return Err(Error::Domain("mode index n must be >= 1".into()));
    }
    let cmk = binom(m, k)?;
    let cnk = binom(n_states, k)?;
    Ok(2.0 * n as f64 * cmk.powi(2 - n as i32) / (cnk * cnk))
}

/// `2n C(N,k)^(-n)`, the dense-limit boson result.
pub fn sn2_boson(n: usize, n_states: usize, k: usize) -> Result<f64> {
    if n == 0 || k == 0 || k > n_states {
        return Err(Error::Domain(format!(
            "need n >= 1 and 1 <= k <= N, got n={n}, k={k}, N={n_states}"
        )));
    }
    Ok(2.0 * n as f64 * binom(n_states, k)?.powi(-(n as i32)))
}

/// Per-mode coefficients `c_n = P · 2n X_n / ([n]_q!)²` so that mode n
/// contributes `c_n ρ_q(Ê)² H_{n-1}(Ê)²`.
#[derive(Clone, Debug)]
struct ModeCoefficients {
    dist: QNormal,
    prefactor: f64,
    statistics: Statistics,
    cmk: f64,
    cnk: f64,
}

impl ModeCoefficients {
    fn new(statistics: Statistics, m: usize, n_states: usize, k: usize, q: f64) -> Result<Self> {
        let dist = QNormal::new(q)?;
        let cmk = binom(m, k)?;
        let cnk = binom(n_states, k)?;
        let d = match statistics {
            Statistics::Fermion => {
                check_fermion(m, n_states, k)?;
                binom(n_states, m)?
            }
            Statistics::Boson => {
                check_boson(m, n_states, k)?;
                binom(n_states + m - 1, m)?
            }
        };
        Ok(Self {
            dist,
            prefactor: d * d * cmk * cmk / (cnk * cnk),
            statistics,
            cmk,
            cnk,
        })
    }

    fn coefficient(&self, n: usize) -> f64 {
        let nn = n as i32;
        let x = match self.statistics {
            Statistics::Fermion => self.cmk.powi(2 - nn),
            Statistics::Boson => self.cnk.powi(-nn),
        };
        let f = qfactorial(n, self.dist.q());
        self.prefactor * 2.0 * n as f64 * x / (f * f)
    }

    /// `(ρ_q(Ê)², H_0..H_{n_max-1}(Ê))`, or `None` outside the support.
    fn point(&self, e_hat: f64, n_max: usize) -> Option<(f64, Vec<f64>)> {
        if !self.dist.is_gaussian() && e_hat.abs() >= self.dist.edge() {
            return None;
        }
        let rho = self.dist.density(e_hat);
        let mut h = vec![0.0; n_max.max(1)];
        hermite_q_all(e_hat, self.dist.q(), &mut h);
        Some((rho * rho, h))
    }

    fn series(&self, e_hat: f64, n_max: usize) -> Result<f64> {
        if n_max == 0 {
            return Err(Error::Domain("n_max must be >= 1".into()));
        }
        let Some((rho2, h)) = self.point(e_hat, n_max) else {
            return Ok(0.0);
        };
        let mut sum = 0.0;
        let mut small = 0;
        for n in 1..=n_max {
            let term = self.coefficient(n) * h[n - 1] * h[n - 1];
            sum += term;
            // a single tiny term can be a root of H_{n-1}; require two in a row
            if term <= SERIES_TOLERANCE * sum {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        Ok(rho2 * sum)
    }

    fn mode(&self, e_hat: f64, n: usize) -> f64 {
        match self.point(e_hat, n) {
            Some((rho2, h)) => self.coefficient(n) * rho2 * h[n - 1] * h[n - 1],
            None => 0.0,
        }
    }
}

/// Level-motion variance in units of the squared mean spacing, fermions.
pub fn motion_variance_fermion(
    e_hat: f64,
    m: usize,
    n_states: usize,
    k: usize,
    q: f64,
    n_max: usize,
) -> Result<f64> {
    ModeCoefficients::new(Statistics::Fermion, m, n_states, k, q)?.series(e_hat, n_max)
}

/// Level-motion variance in units of the squared mean spacing, bosons.
pub fn motion_variance_boson(
    e_hat: f64,
    m: usize,
    n_states: usize,
    k: usize,
    q: f64,
    n_max: usize,
) -> Result<f64> {
    ModeCoefficients::new(Statistics::Boson, m, n_states, k, q)?.series(e_hat, n_max)
}

pub fn motion_variance(
    statistics: Statistics,
    e_hat: f64,
    m: usize,
    n_states: usize,
    k: usize,
    q: f64,
    n_max: usize,
) -> Result<f64> {
    ModeCoefficients::new(statistics, m, n_states, k, q)?.series(e_hat, n_max)
}

/// One term of the level-motion series over an energy grid, times `scale`
/// (a stand-in for the per-(n,q) normalization, which is not available in
/// closed form).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeWidthCurve {
    pub statistics: Statistics,
    pub m: usize,
    pub n_states: usize,
    pub k: usize,
    pub n: usize,
    pub q: f64,
    pub scale: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ModeWidthCurve {
    /// Largest value on the grid.
    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `|Ê|` on the grid where the curve is non-zero.
    pub fn half_width(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max)
    }

    /// Returns a copy with every value multiplied by `scale`.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= scale / self.scale);
        self.scale = scale;
        self
    }
}

pub fn mode_width_curve(
    statistics: Statistics,
    m: usize,
    n_states: usize,
    k: usize,
    q: f64,
    n: usize,
    grid: &[f64],
) -> Result<ModeWidthCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("energy grid"));
    }
    if n < 2 {
        return Err(Error::Domain(format!("mode index n={n} must be >= 2")));
    }
    let coeffs = ModeCoefficients::new(statistics, m, n_states, k, q)?;
    Ok(ModeWidthCurve {
        statistics,
        m,
        n_states,
        k,
        n,
        q,
        scale: 1.0,
        grid: grid.to_vec(),
        values: grid.iter().map(|&x| coeffs.mode(x, n)).collect(),
    })
}

/// `points` evenly spaced energies over the closed support `[-x0, x0]`
/// (or `[-6, 6]` at q = 1).
pub fn support_grid(q: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    let dist = QNormal::new(q)?;
    let edge = if dist.is_gaussian() { 6.0 } else { dist.edge() };
    let step = 2.0 * edge / (points - 1) as f64;
    // Mirror the left half so the grid is exactly symmetric about zero.
    let mut grid: Vec<f64> = (0..points).map(|i| -edge + i as f64 * step).collect();
    for i in 0..points / 2 {
        grid[points - 1 - i] = -grid[i];
    }
    if points % 2 == 1 {
        grid[points / 2] = 0.0;
    }
    Ok(grid)
}
