use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use egoe_core::analytic::{BOSON_SYSTEM, FERMION_SYSTEM};
use egoe_core::archive::SpectrumArchive;
use egoe_core::commands::{
    cmd_analytic, cmd_decompose, cmd_fluct, cmd_generate, cmd_table1, table1_configs,
    AnalyticRequest, ARCHIVE_FILE,
};
use egoe_core::config::RunConfig;
use egoe_core::{Error, Statistics};

#[derive(Parser)]
#[command(name = "egoe", version, about = "EGOE(k)/BEGOE(k) spectra, smooth densities and fluctuation analysis")]
struct Cli {
    /// Worker threads for member-level parallelism.
    #[arg(long, global = true, env = "EGOE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, embed and diagonalize an ensemble; write the spectrum archive.
    Generate {
        #[command(flatten)]
        run: RunArgs,
        /// Also dump the archive as JSON.
        #[arg(long)]
        export_json: bool,
    },
    /// Smooth-density fits and level motion for every member and order.
    Decompose {
        #[command(flatten)]
        run: RunArgs,
        /// Archive to read (default: <out>/spectra.egoe).
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Periodograms, NNSD and Delta3 of an archive.
    Fluct {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Analytic mode-width curves; all presets when no system is given.
    Analytic(AnalyticArgs),
    /// Ensemble skewness and excess for both example systems at every rank.
    Table1 {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        members: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    statistics: Option<Statistics>,
    #[arg(long)]
    m: Option<usize>,
    /// Number of single-particle states N.
    #[arg(long = "n-states")]
    n_states: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    members: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated correction orders, each in 2..=6.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long)]
    statistics: Option<Statistics>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "n-states")]
    n_states: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Explicit q instead of the preset for k.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,6")]
    modes: Vec<usize>,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::fermion_example(2),
        };
        let e = &mut c.ensemble;
        if let Some(s) = self.statistics {
            e.statistics = s;
        }
        e.m = self.m.unwrap_or(e.m);
        e.n_states = self.n_states.unwrap_or(e.n_states);
        e.k = self.k.unwrap_or(e.k);
        e.master_seed = self.seed.unwrap_or(e.master_seed);
        e.members = self.members.unwrap_or(e.members);
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if let Some(o) = &self.orders {
            c.orders = o.clone();
        }
        c.validate()?;
        Ok(c)
    }

    /// Config whose ensemble is taken from the archive it analyzes.
    fn with_archive(&self, archive: &Option<PathBuf>) -> Result<(RunConfig, SpectrumArchive), Error> {
        let mut c = self.resolve()?;
        let path = archive.clone().unwrap_or_else(|| c.output_dir.join(ARCHIVE_FILE));
        let a = SpectrumArchive::load(&path)?;
        c.ensemble = a.spec();
        c.validate()?;
        Ok((c, a))
    }
}

impl AnalyticArgs {
    fn requests(&self) -> Result<Vec<AnalyticRequest>, Error> {
        let any = self.statistics.is_some() || self.k.is_some() || self.q.is_some();
        if !any {
            let mut r = AnalyticRequest::presets(self.points);
            r.iter_mut().for_each(|x| x.modes = self.modes.clone());
            return Ok(r);
        }
        let statistics = self
            .statistics
            .ok_or_else(|| Error::Config("--statistics is required with --k or --q".into()))?;
        let k = self.k.ok_or_else(|| Error::Config("--k is required".into()))?;
        let (m, n) = match (statistics, self.m, self.n_states) {
            (_, Some(m), Some(n)) => (m, n),
            (Statistics::Fermion, None, None) => FERMION_SYSTEM,
            (Statistics::Boson, None, None) => BOSON_SYSTEM,
            _ => return Err(Error::Config("give both --m and --n-states or neither".into())),
        };
        Ok(vec![AnalyticRequest {
            statistics,
            m,
            n_states: n,
            k,
            q: self.q,
            modes: self.modes.clone(),
            points: self.points,
        }])
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Generate { run, export_json } => {
            let c = run.resolve()?;
            let path = cmd_generate(&c, export_json)?;
            println!("wrote {}", path.display());
        }
        Command::Decompose { run, archive } => {
            let (c, a) = run.with_archive(&archive)?;
            let analyses = cmd_decompose(&c, &a)?;
            println!("decomposed {} members into {}", analyses.len(), c.output_dir.display());
        }
        Command::Fluct { run, archive } => {
            let (c, a) = run.with_archive(&archive)?;
            let r = cmd_fluct(&c, &a)?;
            for row in &r.separation {
                println!(
                    "k={} n0={} mean_lambda={:.2} mean_f_peak={:.4}",
                    row.k, row.order, row.mean_lambda, row.mean_f_peak
                );
            }
            println!("sigma2(0)={:.4}", r.nnsd.variance);
        }
        Command::Analytic(args) => {
            let path = cmd_analytic(&args.requests()?, &args.out)?;
            println!("wrote {}", path.display());
        }
        Command::Table1 { seed, members, out } => {
            let configs = table1_configs(seed, members);
            for c in &configs {
                c.validate()?;
            }
            for r in cmd_table1(&configs, &out)? {
                println!(
                    "{} k={:<2} gamma1={:+.4}({:.4}) gamma2={:+.4}({:.4})",
                    r.statistics, r.k, r.gamma1, r.gamma1_se, r.gamma2, r.gamma2_se
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
