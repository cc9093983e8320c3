//! The pipeline behind each CLI subcommand. Every CSV has a header row and
//! every JSON document embeds the run configuration and format version.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{analyze_ensemble, mean_rms, MemberAnalysis};
use crate::analytic::{mode_width_curve, preset_q, support_grid, BOSON_SYSTEM, FERMION_SYSTEM};
use crate::archive::{creation_time, SpectrumArchive};
use crate::config::{RunConfig, FORMAT_VERSION};
use crate::decomposition::goe_delta_rms;
use crate::error::{Error, Result};
use crate::fluct::{delta3, nnsd_with, unfolding_order, Delta3Curve, SpacingHistogram, L_STEP};
use crate::fock::Statistics;
use crate::periodogram::{separation_report, PeriodogramResult, SeparationRow};
use crate::spectra::{ensemble_moments, ensemble_spectra, moments, EnsembleMoments, MeanSe};

pub const ARCHIVE_FILE: &str = "spectra.egoe";
pub const ARCHIVE_JSON_FILE: &str = "spectra.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Samples and diagonalizes every member; members run on the current rayon pool.
pub fn generate(config: &RunConfig) -> Result<SpectrumArchive> {
    config.validate()?;
    let spectra = ensemble_spectra(&config.ensemble)?;
    SpectrumArchive::from_spectra(&config.ensemble, &spectra, creation_time())
}

/// Writes `spectra.egoe` (and optionally `spectra.json`) into the output directory.
pub fn cmd_generate(config: &RunConfig, export_json: bool) -> Result<PathBuf> {
    let archive = generate(config)?;
    create_dir(&config.output_dir)?;
    let path = config.output_dir.join(ARCHIVE_FILE);
    archive.save(&path)?;
    if export_json {
        archive.export_json(&config.output_dir.join(ARCHIVE_JSON_FILE))?;
    }
    Ok(path)
}

/// Runs the smooth fits for every member of an archive.
pub fn decompose(config: &RunConfig, archive: &SpectrumArchive) -> Result<Vec<MemberAnalysis>> {
    config.validate()?;
    analyze_ensemble(&archive.spectra()?, &config.sorted_orders())
}

#[derive(Serialize)]
struct MotionRow {
    member: usize,
    order: usize,
    #[serde(rename = "E_hat")]
    e_hat: f64,
    delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderSummary {
    pub order: usize,
    pub mean_rms: f64,
    pub se_rms: f64,
    pub goe_rms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberSummary {
    pub member: usize,
    pub q: f64,
    pub rms: Vec<f64>,
}

#[derive(Serialize)]
struct DecomposeSummary<'a> {
    format_version: &'a str,
    config: &'a RunConfig,
    dimension: usize,
    orders: Vec<OrderSummary>,
    members: Vec<MemberSummary>,
}

pub fn order_summaries(analyses: &[MemberAnalysis], orders: &[usize], dimension: usize) -> Vec<OrderSummary> {
    orders
        .iter()
        .map(|&order| {
            let MeanSe { mean, se } = mean_rms(analyses, order);
            OrderSummary {
                order,
                mean_rms: mean,
                se_rms: se,
                goe_rms: goe_delta_rms(dimension),
            }
        })
        .collect()
}

/// Writes `level_motion.csv` and `decompose_summary.json`.
pub fn cmd_decompose(config: &RunConfig, archive: &SpectrumArchive) -> Result<Vec<MemberAnalysis>> {
    let analyses = decompose(config, archive)?;
    create_dir(&config.output_dir)?;
    let rows = analyses.iter().flat_map(|a| {
        a.fits.iter().flat_map(move |f| {
            f.series.e_hat.iter().zip(&f.series.delta).map(move |(&e, &d)| MotionRow {
                member: a.member,
                order: f.order,
                e_hat: e,
                delta: d,
            })
        })
    });
    write_csv(&config.output_dir.join("level_motion.csv"), rows)?;
    let orders = config.sorted_orders();
    let summary = DecomposeSummary {
        format_version: FORMAT_VERSION,
        config,
        dimension: archive.header.dimension,
        orders: order_summaries(&analyses, &orders, archive.header.dimension),
        members: analyses
            .iter()
            .map(|a| MemberSummary {
                member: a.member,
                q: a.q(),
                rms: a.fits.iter().map(|f| f.series.rms).collect(),
            })
            .collect(),
    };
    write_json(&config.output_dir.join("decompose_summary.json"), &summary)?;
    Ok(analyses)
}

#[derive(Clone, Debug)]
pub struct FluctReport {
    pub unfolding_order: usize,
    pub periodograms: Vec<(usize, Vec<PeriodogramResult>)>,
    pub separation: Vec<SeparationRow>,
    pub nnsd: SpacingHistogram,
    pub delta3: Delta3Curve,
}

/// Periodograms at every configured order, plus NNSD and Δ3 after unfolding
/// at the order appropriate for the body rank.
pub fn fluct(config: &RunConfig, archive: &SpectrumArchive) -> Result<FluctReport> {
    let spec = archive.spec();
    let unfold_at = unfolding_order(spec.statistics, spec.k);
    let mut orders = config.sorted_orders();
    if !orders.contains(&unfold_at) {
        orders.push(unfold_at);
        orders.sort_unstable();
    }
    let mut cfg = config.clone();
    cfg.orders = orders;
    let analyses = decompose(&cfg, archive)?;
    fluct_from(config, spec.k, &analyses, unfold_at)
}

pub fn fluct_from(
    config: &RunConfig,
    k: usize,
    analyses: &[MemberAnalysis],
    unfold_at: usize,
) -> Result<FluctReport> {
    let periodograms = config
        .sorted_orders()
        .into_iter()
        .map(|order| {
            let res = analyses
                .iter()
                .map(|a| a.periodogram_with(order, config.trim, config.oversample))
                .collect::<Result<Vec<_>>>()?;
            Ok((order, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<_> = periodograms.iter().map(|(o, r)| (k, *o, r.clone())).collect();
    let unfolded = analyses
        .iter()
        .map(|a| a.unfold(unfold_at, config.trim))
        .collect::<Result<Vec<_>>>()?;
    Ok(FluctReport {
        unfolding_order: unfold_at,
        separation: separation_report(&groups),
        periodograms,
        nnsd: nnsd_with(&unfolded, config.bin_width())?,
        delta3: delta3(&unfolded, config.l_max, L_STEP)?,
    })
}

#[derive(Serialize)]
struct PeriodogramRow {
    member: usize,
    order: usize,
    frequency: f64,
    power: f64,
}

#[derive(Serialize)]
struct PeakRow {
    member: usize,
    order: usize,
    lambda: f64,
    f_peak: f64,
    p_max: f64,
    samples: usize,
}

#[derive(Serialize)]
struct NnsdRow {
    s_lo: f64,
    s_hi: f64,
    s_mid: f64,
    count: u64,
    density: f64,
    wigner: f64,
    poisson: f64,
}

#[derive(Serialize)]
struct Delta3Row {
    #[serde(rename = "L")]
    l: f64,
    delta3: f64,
    goe: f64,
    poisson: f64,
}

#[derive(Serialize)]
struct FluctSummary<'a> {
    format_version: &'a str,
    config: &'a RunConfig,
    significance: &'a str,
    unfolding_order: usize,
    separation: &'a [SeparationRow],
    sigma2: f64,
    spacings: usize,
    overflow: u64,
    l1_wigner: f64,
    l1_poisson: f64,
    delta3_closer_to_goe: bool,
}

/// Writes `periodogram.csv`, `periodogram_peaks.csv`, `nnsd.csv`,
/// `delta3.csv` and `fluct_summary.json`.
pub fn cmd_fluct(config: &RunConfig, archive: &SpectrumArchive) -> Result<FluctReport> {
    let report = fluct(config, archive)?;
    create_dir(&config.output_dir)?;
    let dir = &config.output_dir;
    let members: Vec<usize> = archive.records.iter().map(|r| r.member as usize).collect();
    write_csv(
        &dir.join("periodogram.csv"),
        report.periodograms.iter().flat_map(|(order, res)| {
            res.iter().zip(&members).flat_map(move |(r, &member)| {
                r.frequencies.iter().zip(&r.power).map(move |(&f, &p)| PeriodogramRow {
                    member,
                    order: *order,
                    frequency: f,
                    power: p,
                })
            })
        }),
    )?;
    write_csv(
        &dir.join("periodogram_peaks.csv"),
        report.periodograms.iter().flat_map(|(order, res)| {
            res.iter().zip(&members).map(move |(r, &member)| PeakRow {
                member,
                order: *order,
                lambda: r.lambda,
                f_peak: r.f_peak,
                p_max: r.p_max,
                samples: r.samples,
            })
        }),
    )?;
    let h = &report.nnsd;
    write_csv(
        &dir.join("nnsd.csv"),
        (0..h.edges.len()).map(|i| NnsdRow {
            s_lo: h.edges[i],
            s_hi: h.edges[i] + h.bin_width,
            s_mid: h.edges[i] + 0.5 * h.bin_width,
            count: h.counts[i],
            density: h.density[i],
            wigner: h.wigner[i],
            poisson: h.poisson[i],
        }),
    )?;
    let d3 = &report.delta3;
    write_csv(
        &dir.join("delta3.csv"),
        (0..d3.l.len()).map(|i| Delta3Row {
            l: d3.l[i],
            delta3: d3.delta3[i],
            goe: d3.goe[i],
            poisson: d3.poisson[i],
        }),
    )?;
    let summary = FluctSummary {
        format_version: FORMAT_VERSION,
        config,
        significance: "lambda = 100 (1 - exp(-P_max))^M, M = samples",
        unfolding_order: report.unfolding_order,
        separation: &report.separation,
        sigma2: h.variance,
        spacings: h.samples,
        overflow: h.overflow,
        l1_wigner: h.l1_wigner(),
        l1_poisson: h.l1_poisson(),
        delta3_closer_to_goe: d3.closer_to_goe(),
    };
    write_json(&dir.join("fluct_summary.json"), &summary)?;
    Ok(report)
}

/// One analytic mode-width request; `q` defaults to the preset for `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticRequest {
    pub statistics: Statistics,
    pub m: usize,
    pub n_states: usize,
    pub k: usize,
    pub q: Option<f64>,
    pub modes: Vec<usize>,
    pub points: usize,
}

impl AnalyticRequest {
    /// Every preset curve of both systems with modes 2, 3, 4, 6.
    pub fn presets(points: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for (stat, (m, n), ks) in [
            (Statistics::Fermion, FERMION_SYSTEM, [2, 3, 4, 5]),
            (Statistics::Boson, BOSON_SYSTEM, [2, 3, 4, 5]),
        ] {
            for k in ks {
                out.push(Self {
                    statistics: stat,
                    m,
                    n_states: n,
                    k,
                    q: None,
                    modes: vec![2, 3, 4, 6],
                    points,
                });
            }
        }
        out
    }

    pub fn resolved_q(&self) -> Result<f64> {
        self.q
            .or_else(|| preset_q(self.statistics, self.k))
            .ok_or_else(|| Error::Config(format!("no preset q for {} k={}; pass q", self.statistics, self.k)))
    }
}

#[derive(Serialize)]
struct AnalyticRow {
    statistics: Statistics,
    m: usize,
    #[serde(rename = "N")]
    n_states: usize,
    k: usize,
    q: f64,
    n: usize,
    #[serde(rename = "E_hat")]
    e_hat: f64,
    value: f64,
}

/// Writes `analytic.csv` with one row per (curve, grid point).
pub fn cmd_analytic(requests: &[AnalyticRequest], out_dir: &Path) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for r in requests {
        let q = r.resolved_q()?;
        let grid = support_grid(q, r.points)?;
        for &n in &r.modes {
            let c = mode_width_curve(r.statistics, r.m, r.n_states, r.k, q, n, &grid)?;
            rows.extend(c.grid.iter().zip(&c.values).map(|(&e, &v)| AnalyticRow {
                statistics: r.statistics,
                m: r.m,
                n_states: r.n_states,
                k: r.k,
                q,
                n,
                e_hat: e,
                value: v,
            }));
        }
    }
    create_dir(out_dir)?;
    let path = out_dir.join("analytic.csv");
    write_csv(&path, rows)?;
    Ok(path)
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub statistics: Statistics,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_states: usize,
    pub k: usize,
    pub members: usize,
    pub gamma1: f64,
    pub gamma1_se: f64,
    pub gamma2: f64,
    pub gamma2_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub expected_variance: f64,
}

impl Table1Row {
    pub fn from_moments(config: &RunConfig, em: &EnsembleMoments) -> Self {
        let e = &config.ensemble;
        Self {
            statistics: e.statistics,
            m: e.m,
            n_states: e.n_states,
            k: e.k,
            members: e.members,
            gamma1: em.gamma1.mean,
            gamma1_se: em.gamma1.se,
            gamma2: em.gamma2.mean,
            gamma2_se: em.gamma2.se,
            variance: em.variance.mean,
            variance_se: em.variance.se,
            expected_variance: e.expected_variance(),
        }
    }
}

/// Both example systems at every rank, sharing seed and member count.
pub fn table1_configs(seed: u64, members: usize) -> Vec<RunConfig> {
    let f = (2..=6).map(RunConfig::fermion_example);
    let b = (2..=10).map(RunConfig::boson_example);
    f.chain(b)
        .map(|mut c| {
            c.ensemble.master_seed = seed;
            c.ensemble.members = members;
            c
        })
        .collect()
}

pub fn table1_row(config: &RunConfig) -> Result<Table1Row> {
    let archive = generate(config)?;
    let per_member = archive
        .spectra()?
        .iter()
        .map(moments)
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Row::from_moments(config, &ensemble_moments(&per_member)))
}

#[derive(Serialize)]
struct Table1Doc<'a> {
    format_version: &'a str,
    configs: &'a [RunConfig],
    rows: &'a [Table1Row],
}

/// Writes `table1.csv` and `table1.json`.
pub fn cmd_table1(configs: &[RunConfig], out_dir: &Path) -> Result<Vec<Table1Row>> {
    let rows = configs.iter().map(table1_row).collect::<Result<Vec<_>>>()?;
    create_dir(out_dir)?;
    write_csv(&out_dir.join("table1.csv"), rows.iter())?;
    write_json(
        &out_dir.join("table1.json"),
        &Table1Doc {
            format_version: FORMAT_VERSION,
            configs,
            rows: &rows,
        },
    )?;
    Ok(rows)
}
