//! Sampling of the k-particle GOE and its embedding into m-particle space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, Basis, KConfig, Statistics};
use crate::matrix::SymmetricMatrix;

/// Parameters of an EGOE(k) / BEGOE(k) ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub statistics: Statistics,
    /// Particle number m.
    pub m: usize,
    /// Number of single-particle states N.
    pub n_states: usize,
    /// Body rank of the interaction.
    pub k: usize,
    pub members: usize,
    pub master_seed: u64,
    /// Variance ν² of the off-diagonal k-body matrix elements.
    #[serde(default = "default_nu2")]
    pub nu2: f64,
}

fn default_nu2() -> f64 {
    1.0
}

impl EnsembleSpec {
    pub fn new(statistics: Statistics, m: usize, n_states: usize, k: usize) -> Self {
        Self {
            statistics,
            m,
            n_states,
            k,
            members: 50,
            master_seed: 0,
            nu2: 1.0,
        }
    }

    pub fn with_members(mut self, members: usize) -> Self {
        self.members = members;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.m {
            return Err(Error::Domain(format!(
                "body rank k={} must satisfy 1 <= k <= m={}",
                self.k, self.m
            )));
        }
        if self.statistics == Statistics::Fermion && self.m > self.n_states {
            return Err(Error::Domain(format!(
                "m={} fermions do not fit in N={} states",
                self.m, self.n_states
            )));
        }
        if self.n_states == 0 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        if self.members == 0 {
            return Err(Error::Domain("ensemble needs at least one member".into()));
        }
        if !(self.nu2 > 0.0 && self.nu2.is_finite()) {
            return Err(Error::Domain(format!("nu2={} must be positive", self.nu2)));
        }
        Ok(())
    }

    /// Dimension d(N,m) of the m-particle space.
    pub fn dimension(&self) -> Result<u64> {
        fock::dimension(self.statistics, self.n_states, self.m)
    }

    /// Dimension d(N,k) of the k-particle space.
    pub fn k_dimension(&self) -> Result<u64> {
        fock::dimension(self.statistics, self.n_states, self.k)
    }

    /// Ensemble-averaged spectral variance of H(m).
    pub fn expected_variance(&self) -> f64 {
        let b = |n: usize, k: usize| fock::binomial(n as u64, k as u64).unwrap_or(0) as f64;
        let (m, n, k) = (self.m, self.n_states, self.k);
        let v = match self.statistics {
            Statistics::Fermion => b(m, k) * (b(n - m + k, k) + 1.0),
            Statistics::Boson => b(m, k) * b(n + m - 1, k),
        };
        v * self.nu2
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one ensemble member: `splitmix64(master ^ splitmix64(member))`.
pub fn member_seed(master_seed: u64, member: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(member as u64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KBodyMatrix {
    pub matrix: SymmetricMatrix,
    pub member: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedHamiltonian {
    pub matrix: SymmetricMatrix,
    pub spec: EnsembleSpec,
    pub member: usize,
}

/// Draws the k-particle GOE matrix of one member. Off-diagonal entries have
/// variance ν², diagonal entries 2ν²; the upper triangle is filled row by row
/// from a ChaCha8 stream seeded with `member_seed`.
pub fn sample_kbody(spec: &EnsembleSpec, member: usize) -> Result<KBodyMatrix> {
    spec.validate()?;
    if member >= spec.members {
        return Err(Error::Domain(format!(
            "member {member} out of range for {} members",
            spec.members
        )));
    }
    let dim = spec.k_dimension()?;
    if dim > fock::DEFAULT_DIM_CAP {
        return Err(Error::Capacity {
            dim,
            cap: fock::DEFAULT_DIM_CAP,
        });
    }
    let dim = dim as usize;
    let seed = member_seed(spec.master_seed, member);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let off = spec.nu2.sqrt();
    let diag = (2.0 * spec.nu2).sqrt();
    let mut matrix = SymmetricMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            let scale = if i == j { diag } else { off };
            matrix.set(i, j, scale * z);
        }
    }
    Ok(KBodyMatrix {
        matrix,
        member,
        seed,
    })
}

#[derive(Clone, Copy, Debug)]
struct Annihilated {
    gamma: u32,
    rest: u32,
    sign: i8,
    weight: u64,
}

#[derive(Clone, Copy, Debug)]
struct Created {
    target: u32,
    sign: i8,
    weight: u64,
}

/// Precomputed operator action for one (statistics, N, m, k): for every
/// m-particle state the k-configurations that can be removed from it, and
/// for every (m-k)-particle state the targets reached by adding each
/// k-configuration. Reused across all members of an ensemble.
#[derive(Clone, Debug)]
pub struct EmbeddingPlan {
    dim: usize,
    k_dim: usize,
    ann_offsets: Vec<usize>,
    annihilated: Vec<Annihilated>,
    created: Vec<Option<Created>>,
}

impl EmbeddingPlan {
    pub fn new(statistics: Statistics, n_states: usize, m: usize, k: usize) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::Domain(format!("body rank k={k} must satisfy 1 <= k <= m={m}")));
        }
        let basis = Basis::new(n_states, m, statistics)?;
        let rest_basis = Basis::new(n_states, m - k, statistics)?;
        let kconfigs: Vec<KConfig> = fock::enumerate_basis(n_states, k, statistics)?
            .iter()
            .map(KConfig::from_occupation)
            .collect::<Result<_>>()?;

        let mut ann_offsets = Vec::with_capacity(basis.len() + 1);
        let mut annihilated = Vec::new();
        ann_offsets.push(0);
        for state in basis.configs() {
            for (g, gamma) in kconfigs.iter().enumerate() {
                if let Some(step) = fock::apply_annihilation(state, gamma)? {
                    let rest = rest_basis
                        .position(&step.target)
                        .expect("annihilated state lies in the (m-k)-particle basis");
                    annihilated.push(Annihilated {
                        gamma: g as u32,
                        rest: rest as u32,
                        sign: step.sign,
                        weight: step.weight,
                    });
                }
            }
            ann_offsets.push(annihilated.len());
        }

        let mut created = Vec::with_capacity(rest_basis.len() * kconfigs.len());
        for rest in rest_basis.configs() {
            for alpha in &kconfigs {
                created.push(match fock::apply_creation(rest, alpha)? {
                    Some(step) => Some(Created {
                        target: basis
                            .position(&step.target)
                            .expect("created state lies in the m-particle basis")
                            as u32,
                        sign: step.sign,
                        weight: step.weight,
                    }),
                    None => None,
                });
            }
        }

        Ok(Self {
            dim: basis.len(),
            k_dim: kconfigs.len(),
            ann_offsets,
            annihilated,
            created,
        })
    }

    pub fn for_spec(spec: &EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        Self::new(spec.statistics, spec.n_states, spec.m, spec.k)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn k_dimension(&self) -> usize {
        self.k_dim
    }

    /// `H_{BA} = Σ_{α,γ} V_{αγ} ⟨B|A†_α A_γ|A⟩`, accumulated for `B <= A` and
    /// mirrored, so the result is exactly symmetric.
    pub fn embed(&self, v: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if v.dim() != self.k_dim {
            return Err(Error::Domain(format!(
                "k-body matrix has dimension {}, expected {}",
                v.dim(),
                self.k_dim
            )));
        }
        let mut h = SymmetricMatrix::zeros(self.dim);
        let mut column = vec![0.0; self.dim];
        for a in 0..self.dim {
            column[..=a].iter_mut().for_each(|x| *x = 0.0);
            for ann in &self.annihilated[self.ann_offsets[a]..self.ann_offsets[a + 1]] {
                let v_row = v.row(ann.gamma as usize);
                let created = &self.created
                    [ann.rest as usize * self.k_dim..(ann.rest as usize + 1) * self.k_dim];
                for (alpha, cre) in created.iter().enumerate() {
                    let Some(cre) = cre else { continue };
                    let b = cre.target as usize;
                    if b > a {
                        continue;
                    }
                    let amp = f64::from(ann.sign * cre.sign)
                        * ((ann.weight * cre.weight) as f64).sqrt();
                    column[b] += v_row[alpha] * amp;
                }
            }
            for (b, &x) in column[..=a].iter().enumerate() {
                h.set(b, a, x);
            }
        }
        Ok(h)
    }
}

/// Embeds one k-body matrix into the m-particle space of `spec`.
pub fn embed(kmat: &KBodyMatrix, spec: &EnsembleSpec) -> Result<EmbeddedHamiltonian> {
    let plan = EmbeddingPlan::for_spec(spec)?;
    Ok(EmbeddedHamiltonian {
        matrix: plan.embed(&kmat.matrix)?,
        spec: spec.clone(),
        member: kmat.member,
    })
}

/// Samples and embeds one member using a prebuilt plan.
pub fn build_member(
    spec: &EnsembleSpec,
    plan: &EmbeddingPlan,
    member: usize,
) -> Result<EmbeddedHamiltonian> {
    let kmat = sample_kbody(spec, member)?;
    Ok(EmbeddedHamiltonian {
        matrix: plan.embed(&kmat.matrix)?,
        spec: spec.clone(),
        member,
    })
}
