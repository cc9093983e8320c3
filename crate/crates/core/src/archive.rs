//! Binary spectrum archive: magic `EGOEARC1`, a u64-length-prefixed JSON
//! header, then one record per member (u64 index, u64 seed, d little-endian
//! f64 eigenvalues). Everything is little-endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::FORMAT_VERSION;
use crate::ensemble::{member_seed, EnsembleSpec};
use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::spectra::Spectrum;

pub const MAGIC: &[u8; 8] = b"EGOEARC1";
/// Reproducible-build convention for an optional creation time.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";
const MAX_HEADER: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveHeader {
    pub format_version: String,
    pub statistics: Statistics,
    pub m: usize,
    pub n_states: usize,
    pub k: usize,
    pub nu2: f64,
    pub master_seed: u64,
    pub members: usize,
    pub dimension: usize,
    /// Unix seconds; `None` keeps archives byte-identical across runs.
    pub created: Option<u64>,
}

impl ArchiveHeader {
    pub fn spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            statistics: self.statistics,
            m: self.m,
            n_states: self.n_states,
            k: self.k,
            members: self.members,
            master_seed: self.master_seed,
            nu2: self.nu2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub member: u64,
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArchive {
    pub header: ArchiveHeader,
    pub records: Vec<MemberRecord>,
}

/// `SOURCE_DATE_EPOCH` when set to an integer, otherwise no timestamp.
pub fn creation_time() -> Option<u64> {
    std::env::var(SOURCE_DATE_EPOCH).ok()?.trim().parse().ok()
}

impl SpectrumArchive {
    pub fn from_spectra(spec: &EnsembleSpec, spectra: &[Spectrum], created: Option<u64>) -> Result<Self> {
        if spectra.len() != spec.members {
            return Err(Error::Format(format!(
                "{} spectra for {} members",
                spectra.len(),
                spec.members
            )));
        }
        let dimension = spec.dimension()? as usize;
        let records = spectra
            .iter()
            .map(|s| {
                if s.len() != dimension {
                    return Err(Error::Format(format!(
                        "member {} has {} levels, expected {dimension}",
                        s.member,
                        s.len()
                    )));
                }
                Ok(MemberRecord {
                    member: s.member as u64,
                    seed: member_seed(spec.master_seed, s.member),
                    eigenvalues: s.values().to_vec(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            header: ArchiveHeader {
                format_version: FORMAT_VERSION.into(),
                statistics: spec.statistics,
                m: spec.m,
                n_states: spec.n_states,
                k: spec.k,
                nu2: spec.nu2,
                master_seed: spec.master_seed,
                members: spec.members,
                dimension,
                created,
            },
            records,
        })
    }

    pub fn spec(&self) -> EnsembleSpec {
        self.header.spec()
    }

    pub fn spectra(&self) -> Result<Vec<Spectrum>> {
        self.records
            .iter()
            .map(|r| Spectrum::new(r.eigenvalues.clone(), r.member as usize))
            .collect()
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for r in &self.records {
            w.write_all(&r.member.to_le_bytes())?;
            w.write_all(&r.seed.to_le_bytes())?;
            for v in &r.eigenvalues {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Format(format!("truncated archive: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let len = u64::from_le_bytes(word);
        if len > MAX_HEADER {
            return Err(Error::Format(format!("header length {len} too large")));
        }
        let mut buf = vec![0u8; len as usize];
        r.read_exact(&mut buf).map_err(io)?;
        let header: ArchiveHeader =
            serde_json::from_slice(&buf).map_err(|e| Error::Format(format!("header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version `{}`",
                header.format_version
            )));
        }
        let mut records = Vec::with_capacity(header.members);
        let mut block = vec![0u8; header.dimension * 8];
        for _ in 0..header.members {
            r.read_exact(&mut word).map_err(io)?;
            let member = u64::from_le_bytes(word);
            r.read_exact(&mut word).map_err(io)?;
            let seed = u64::from_le_bytes(word);
            r.read_exact(&mut block).map_err(io)?;
            let eigenvalues = block
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            records.push(MemberRecord {
                member,
                seed,
                eigenvalues,
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(io)? != 0 {
            return Err(Error::Format("trailing bytes after last record".into()));
        }
        Ok(Self { header, records })
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut std::io::BufReader::new(file))
    }

    /// Human-readable dump of the whole archive.
    pub fn export_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
