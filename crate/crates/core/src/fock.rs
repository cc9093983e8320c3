//! Occupation-number bases for spinless fermions and bosons, and the
//! elementary matrix elements of `A†_α A_γ` between m-particle states.
//!
//! Single-particle labels are zero based. Fermion configurations are stored
//! as bitmasks (bit `i` set when state `i` is occupied), which limits the
//! number of single-particle states to 64.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis `enumerate_basis` will build unless told otherwise.
pub const DEFAULT_DIM_CAP: u64 = 2_000_000;

/// Maximum number of single-particle states for the bitmask representation.
pub const MAX_FERMION_STATES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistics::Fermion => f.write_str("fermion"),
            Statistics::Boson => f.write_str("boson"),
        }
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermion" | "fermions" | "egoe" => Ok(Statistics::Fermion),
            "boson" | "bosons" | "begoe" => Ok(Statistics::Boson),
            other => Err(Error::Domain(format!("unknown statistics `{other}`"))),
        }
    }
}

/// Exact binomial coefficient, `None` on overflow of `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

fn overflow(what: &str) -> Error {
    Error::Domain(format!("{what} overflows 64-bit arithmetic"))
}

/// `binomial(N, m)`: number of m-fermion states in N single-particle states.
pub fn dim_fermion(n_states: usize, m: usize) -> Result<u64> {
    if m > n_states {
        return Err(Error::Domain(format!(
            "fermion count m={m} exceeds single-particle states N={n_states}"
        )));
    }
    binomial(n_states as u64, m as u64).ok_or_else(|| overflow("fermion dimension"))
}

/// `binomial(N + m - 1, m)`: number of m-boson states in N single-particle states.
pub fn dim_boson(n_states: usize, m: usize) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    if n_states == 0 {
        return Err(Error::Domain(
            "bosons need at least one single-particle state".into(),
        ));
    }
    binomial((n_states + m - 1) as u64, m as u64).ok_or_else(|| overflow("boson dimension"))
}

pub fn dimension(statistics: Statistics, n_states: usize, m: usize) -> Result<u64> {
    match statistics {
        Statistics::Fermion => dim_fermion(n_states, m),
        Statistics::Boson => dim_boson(n_states, m),
    }
}

/// Number of independent k-body matrix elements, `d(N,k)(d(N,k)+1)/2`.
pub fn kbme_count(n_states: usize, k: usize, statistics: Statistics) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("body rank k must be at least 1".into()));
    }
    let d = dimension(statistics, n_states, k)?;
    let d = u128::from(d);
    u64::try_from(d * (d + 1) / 2).map_err(|_| overflow("k-body matrix element count"))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Bits(u64),
    Counts(Box<[u32]>),
}

/// An m-particle basis state in the occupation-number representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationConfig {
    n_states: usize,
    repr: Repr,
}

impl OccupationConfig {
    /// Fermion configuration from a bitmask over `n_states` states.
    pub fn fermion(n_states: usize, mask: u64) -> Result<Self> {
        if n_states > MAX_FERMION_STATES {
            return Err(Error::Domain(format!(
                "fermion bitmask supports at most {MAX_FERMION_STATES} states, got {n_states}"
            )));
        }
        if n_states < MAX_FERMION_STATES && mask >> n_states != 0 {
            return Err(Error::Domain(format!(
                "mask {mask:#b} has bits beyond N={n_states}"
            )));
        }
        Ok(Self {
            n_states,
            repr: Repr::Bits(mask),
        })
    }

    pub fn boson(counts: Vec<u32>) -> Self {
        Self {
            n_states: counts.len(),
            repr: Repr::Counts(counts.into_boxed_slice()),
        }
    }

    /// Builds a configuration from an occupation vector, checking the
    /// fermion 0/1 restriction.
    pub fn from_occupations(statistics: Statistics, occupations: &[u32]) -> Result<Self> {
        match statistics {
            Statistics::Boson => Ok(Self::boson(occupations.to_vec())),
            Statistics::Fermion => {
                if occupations.len() > MAX_FERMION_STATES {
                    return Self::fermion(occupations.len(), 0);
                }
                let mut mask = 0u64;
                for (i, &n) in occupations.iter().enumerate() {
                    match n {
                        0 => {}
                        1 => mask |= 1 << i,
                        _ => {
                            return Err(Error::Domain(format!(
                                "fermion occupation {n} at state {i}"
                            )))
                        }
                    }
                }
                Self::fermion(occupations.len(), mask)
            }
        }
    }

    pub fn statistics(&self) -> Statistics {
        match self.repr {
            Repr::Bits(_) => Statistics::Fermion,
            Repr::Counts(_) => Statistics::Boson,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Total particle number m.
    pub fn total(&self) -> usize {
        match &self.repr {
            Repr::Bits(mask) => mask.count_ones() as usize,
            Repr::Counts(c) => c.iter().map(|&n| n as usize).sum(),
        }
    }

    pub fn occupation(&self, state: usize) -> u32 {
        match &self.repr {
            Repr::Bits(mask) => ((mask >> state) & 1) as u32,
            Repr::Counts(c) => c[state],
        }
    }

    pub fn occupations(&self) -> Vec<u32> {
        (0..self.n_states).map(|i| self.occupation(i)).collect()
    }

    pub fn mask(&self) -> Option<u64> {
        match self.repr {
            Repr::Bits(mask) => Some(mask),
            Repr::Counts(_) => None,
        }
    }
}

impl fmt::Display for OccupationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Bits(_) => {
                f.write_str("|")?;
                for i in 0..self.n_states {
                    write!(f, "{}", self.occupation(i))?;
                }
                f.write_str("⟩")
            }
            Repr::Counts(c) => {
                let parts: Vec<String> = c.iter().map(u32::to_string).collect();
                write!(f, "|{}⟩", parts.join(","))
            }
        }
    }
}

/// A k-particle configuration given by its sorted single-particle labels
/// (strictly increasing for fermions, non-decreasing for bosons).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KConfig {
    statistics: Statistics,
    n_states: usize,
    labels: Vec<usize>,
}

impl KConfig {
    pub fn new(statistics: Statistics, n_states: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("k-configuration needs at least one label".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_states) {
            return Err(Error::Domain(format!("label {bad} outside N={n_states}")));
        }
        let ordered = labels.windows(2).all(|w| match statistics {
            Statistics::Fermion => w[0] < w[1],
            Statistics::Boson => w[0] <= w[1],
        });
        if !ordered {
            return Err(Error::Domain(format!(
                "labels {labels:?} are not ordered for {statistics}s"
            )));
        }
        if statistics == Statistics::Fermion && n_states > MAX_FERMION_STATES {
            return Err(Error::Domain(format!(
                "fermion bitmask supports at most {MAX_FERMION_STATES} states"
            )));
        }
        Ok(Self {
            statistics,
            n_states,
            labels,
        })
    }

    pub fn from_occupation(config: &OccupationConfig) -> Result<Self> {
        let labels = (0..config.n_states())
            .flat_map(|i| std::iter::repeat_n(i, config.occupation(i) as usize))
            .collect();
        Self::new(config.statistics(), config.n_states(), labels)
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Distinct labels with their multiplicities ν_i.
    pub fn multiplicities(&self) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        for &l in &self.labels {
            match out.last_mut() {
                Some((last, count)) if *last == l => *count += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    fn mask(&self) -> u64 {
        self.labels.iter().fold(0, |m, &l| m | (1 << l))
    }
}

fn check_capacity(dim: u64, cap: u64) -> Result<()> {
    if dim > cap {
        Err(Error::Capacity { dim, cap })
    } else {
        Ok(())
    }
}

/// All m-particle configurations in descending lexicographic order of their
/// occupation vectors (the first single-particle state fills first).
pub fn enumerate_basis(
    n_states: usize,
    m: usize,
    statistics: Statistics,
) -> Result<Vec<OccupationConfig>> {
    enumerate_basis_capped(n_states, m, statistics, DEFAULT_DIM_CAP)
}

pub fn enumerate_basis_capped(
    n_states: usize,
    m: usize,
    statistics: Statistics,
    cap: u64,
) -> Result<Vec<OccupationConfig>> {
    let dim = dimension(statistics, n_states, m)?;
    check_capacity(dim, cap)?;
    if statistics == Statistics::Fermion && n_states > MAX_FERMION_STATES {
        return Err(Error::Domain(format!(
            "fermion bitmask supports at most {MAX_FERMION_STATES} states"
        )));
    }
    let max_occ = match statistics {
        Statistics::Fermion => 1,
        Statistics::Boson => m as u32,
    };
    let mut out = Vec::with_capacity(dim as usize);
    let mut occ = vec![0u32; n_states];
    fill(&mut occ, 0, m as u32, max_occ, &mut |o: &[u32]| {
        let cfg = match statistics {
            Statistics::Fermion => {
                let mask = o
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &n)| acc | (u64::from(n) << i));
                OccupationConfig {
                    n_states,
                    repr: Repr::Bits(mask),
                }
            }
            Statistics::Boson => OccupationConfig::boson(o.to_vec()),
        };
        out.push(cfg);
    });
    debug_assert_eq!(out.len() as u64, dim);
    Ok(out)
}

fn fill(occ: &mut [u32], pos: usize, left: u32, max_occ: u32, emit: &mut impl FnMut(&[u32])) {
    if pos + 1 == occ.len() {
        if left <= max_occ {
            occ[pos] = left;
            emit(occ);
            occ[pos] = 0;
        }
        return;
    }
    if occ.is_empty() {
        if left == 0 {
            emit(occ);
        }
        return;
    }
    for n in (0..=left.min(max_occ)).rev() {
        occ[pos] = n;
        fill(occ, pos + 1, left - n, max_occ, emit);
    }
    occ[pos] = 0;
}

/// All k-particle configurations, in the same order as `enumerate_basis`.
pub fn enumerate_kconfigs(
    n_states: usize,
    k: usize,
    statistics: Statistics,
) -> Result<Vec<KConfig>> {
    enumerate_basis(n_states, k, statistics)?
        .iter()
        .map(KConfig::from_occupation)
        .collect()
}

/// A basis with reverse lookup from configuration to index.
#[derive(Clone, Debug)]
pub struct Basis {
    statistics: Statistics,
    n_states: usize,
    particles: usize,
    configs: Vec<OccupationConfig>,
    index: HashMap<OccupationConfig, usize>,
}

impl Basis {
    pub fn new(n_states: usize, particles: usize, statistics: Statistics) -> Result<Self> {
        Self::with_cap(n_states, particles, statistics, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        n_states: usize,
        particles: usize,
        statistics: Statistics,
        cap: u64,
    ) -> Result<Self> {
        let configs = enumerate_basis_capped(n_states, particles, statistics, cap)?;
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(Self {
            statistics,
            n_states,
            particles,
            configs,
            index,
        })
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[OccupationConfig] {
        &self.configs
    }

    pub fn get(&self, i: usize) -> &OccupationConfig {
        &self.configs[i]
    }

    pub fn position(&self, config: &OccupationConfig) -> Option<usize> {
        self.index.get(config).copied()
    }
}

/// Result of applying a product of k annihilation or creation operators.
///
/// The magnitude of the amplitude is `sqrt(weight)`; `weight` is an integer
/// (a product of binomial coefficients for bosons, 1 for fermions) so that
/// products of amplitudes can be formed without intermediate rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub sign: i8,
    pub weight: u64,
    pub target: OccupationConfig,
}

impl Step {
    pub fn amplitude(&self) -> f64 {
        f64::from(self.sign) * (self.weight as f64).sqrt()
    }
}

fn check_compatible(config: &OccupationConfig, k: &KConfig) -> Result<()> {
    if config.statistics() != k.statistics() || config.n_states() != k.n_states() {
        return Err(Error::Domain(format!(
            "mismatched operands: {} state over N={} vs {} k-configuration over N={}",
            config.statistics(),
            config.n_states(),
            k.statistics(),
            k.n_states()
        )));
    }
    Ok(())
}

fn sign_below(mask: u64, label: usize) -> i8 {
    let below = mask & ((1u64 << label) - 1);
    if below.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Applies `A_γ` to `source`.
///
/// Fermions: annihilators act in decreasing label order, each contributing
/// `(-1)^(occupied states with smaller label)`. Bosons: the amplitude is
/// `[Π ν_i!]^(-1/2) Π sqrt(s_i!/(s_i-ν_i)!)`, i.e. `sqrt(Π C(s_i, ν_i))`.
pub fn apply_annihilation(source: &OccupationConfig, gamma: &KConfig) -> Result<Option<Step>> {
    check_compatible(source, gamma)?;
    Ok(match &source.repr {
        Repr::Bits(mask) => {
            let mut mask = *mask;
            let mut sign = 1i8;
            for &l in gamma.labels.iter().rev() {
                if mask & (1 << l) == 0 {
                    return Ok(None);
                }
                mask &= !(1 << l);
                sign *= sign_below(mask, l);
            }
            Some(Step {
                sign,
                weight: 1,
                target: OccupationConfig {
                    n_states: source.n_states,
                    repr: Repr::Bits(mask),
                },
            })
        }
        Repr::Counts(counts) => {
            let mut counts = counts.clone();
            let mut weight = 1u64;
            for (l, nu) in gamma.multiplicities() {
                let s = counts[l];
                if s < nu {
                    return Ok(None);
                }
                weight = binomial(u64::from(s), u64::from(nu))
                    .and_then(|b| weight.checked_mul(b))
                    .ok_or_else(|| overflow("boson amplitude"))?;
                counts[l] = s - nu;
            }
            Some(Step {
                sign: 1,
                weight,
                target: OccupationConfig {
                    n_states: source.n_states,
                    repr: Repr::Counts(counts),
                },
            })
        }
    })
}

/// Applies `A†_α` to `source`.
///
/// Fermions: creators act in increasing label order with the same sign rule
/// as `apply_annihilation`. Bosons: amplitude `sqrt(Π C(t_i+ν_i, ν_i))`.
pub fn apply_creation(source: &OccupationConfig, alpha: &KConfig) -> Result<Option<Step>> {
    check_compatible(source, alpha)?;
    Ok(match &source.repr {
        Repr::Bits(mask) => {
            if mask & alpha.mask() != 0 {
                return Ok(None);
            }
            let mut mask = *mask;
            let mut sign = 1i8;
            for &l in &alpha.labels {
                sign *= sign_below(mask, l);
                mask |= 1 << l;
            }
            Some(Step {
                sign,
                weight: 1,
                target: OccupationConfig {
                    n_states: source.n_states,
                    repr: Repr::Bits(mask),
                },
            })
        }
        Repr::Counts(counts) => {
            let mut counts = counts.clone();
            let mut weight = 1u64;
            for (l, nu) in alpha.multiplicities() {
                let t = counts[l] + nu;
                weight = binomial(u64::from(t), u64::from(nu))
                    .and_then(|b| weight.checked_mul(b))
                    .ok_or_else(|| overflow("boson amplitude"))?;
                counts[l] = t;
            }
            Some(Step {
                sign: 1,
                weight,
                target: OccupationConfig {
                    n_states: source.n_states,
                    repr: Repr::Counts(counts),
                },
            })
        }
    })
}

/// `⟨B| A†_create A_annihilate |source⟩` together with the unique target `B`,
/// or `None` when the operator product annihilates `source`.
pub fn transition_amplitude(
    source: &OccupationConfig,
    create: &KConfig,
    annihilate: &KConfig,
) -> Result<Option<(f64, OccupationConfig)>> {
    check_compatible(source, create)?;
    let Some(down) = apply_annihilation(source, annihilate)? else {
        return Ok(None);
    };
    let Some(up) = apply_creation(&down.target, create)? else {
        return Ok(None);
    };
    let weight = down
        .weight
        .checked_mul(up.weight)
        .ok_or_else(|| overflow("boson amplitude"))?;
    let amp = f64::from(down.sign * up.sign) * (weight as f64).sqrt();
    Ok(Some((amp, up.target)))
}
