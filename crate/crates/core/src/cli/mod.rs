//! Command-line front end.

mod jobs;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use jobs::{
    default_manifest_path, execute, normalized_samples, read_samples, FitJob, FitReport, FitSource, Job, JobReport,
    RunManifest, Series, SweepJob, DEFAULT_FIT_POWER_DBM,
};

use crate::config::{Constellation, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{SweepParam, SweepResult, DEFAULT_MEAN_TRIALS, DEFAULT_OUTAGE_TRIALS};
use crate::schemes::Scheme;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Index { .. } | Error::Domain(_) => EXIT_USAGE,
        Error::Numerical(_) | Error::Fit(_) | Error::Capacity { .. } => EXIT_NUMERICAL,
        Error::Parse { .. } | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "ris-emi", version, about = "RIS link simulator with EMI cancellation")]
pub struct Cli {
    /// TOML file with system parameters (replaces the command's defaults; flags still win)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for the trial engine
    #[arg(long, global = true, env = "RIS_EMI_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean SINR and outage versus transmit power, one curve per m
    SweepPower(SweepPowerArgs),
    /// Mean SINR versus elements per side N_H, one curve per rho
    SweepSize(SweepSizeArgs),
    /// Fit a Gamma distribution to SINR_m / P
    Fit(FitArgs),
    /// Empirical (and optionally closed-form) outage versus transmit power, one curve per N
    Outage(OutageArgs),
    /// Re-run a previous invocation from its manifest
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Both,
    Benchmark,
    Proposed,
}

impl SchemeChoice {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Both => Scheme::ALL.to_vec(),
            SchemeChoice::Benchmark => vec![Scheme::Benchmark],
            SchemeChoice::Proposed => vec![Scheme::Proposed],
        }
    }
}

/// Link-level overrides shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub beta1_db: Option<f64>,
    #[arg(long)]
    pub beta2_db: Option<f64>,
    /// AWGN power sigma_w^2 in dBm
    #[arg(long)]
    pub noise_dbm: Option<f64>,
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    /// Element length/width in meters (default: half a wavelength)
    #[arg(long)]
    pub spacing_m: Option<f64>,
    #[arg(long, value_enum)]
    pub constellation: Option<Constellation>,
    /// Disable the EMI entirely (sigma^2 = 0)
    #[arg(long)]
    pub no_emi: bool,
}

impl LinkArgs {
    fn apply(&self, cfg: &mut SystemConfig) {
        if let Some(v) = self.beta1_db {
            cfg.beta1_db = v;
        }
        if let Some(v) = self.beta2_db {
            cfg.beta2_db = v;
        }
        if let Some(v) = self.noise_dbm {
            cfg.noise_power_dbm = v;
        }
        if let Some(v) = self.frequency_hz {
            cfg.carrier_frequency_hz = v;
        }
        if let Some(v) = self.spacing_m {
            cfg.element_spacing_m = Some(v);
        }
        if let Some(v) = self.constellation {
            cfg.constellation = v;
        }
        if self.no_emi {
            cfg.rho_db = None;
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    pub scheme: SchemeChoice,
    /// Outage threshold r on the linear SINR_m (repeatable)
    #[arg(long = "r")]
    pub thresholds: Vec<f64>,
    /// CSV output path
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full structured result as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepPowerArgs {
    /// Transmit powers in dBm: `start:stop:step` (inclusive) or a comma list
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-10:30:2")]
    pub p_dbm_range: ValueList,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho_db: Option<f64>,
    /// Slots per block; one curve per value
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_MEAN_TRIALS)]
    pub trials: usize,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepSizeArgs {
    /// Elements per side N_H (N = N_H^2)
    #[arg(long, value_delimiter = ',', default_value = "7,10,15,20,30")]
    pub nh: Vec<usize>,
    #[arg(long)]
    pub p_dbm: Option<f64>,
    /// One curve per value
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rho_db: Vec<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MEAN_TRIALS)]
    pub trials: usize,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OutageArgs {
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "0:30:2")]
    pub p_dbm_range: ValueList,
    /// RIS sizes; one curve per value
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub rho_db: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_OUTAGE_TRIALS)]
    pub trials: usize,
    /// Add closed-form outage columns for the proposed scheme
    #[arg(long, value_enum)]
    pub fit: Option<FitSource>,
    /// Reference power for `--fit mle`
    #[arg(long, default_value_t = DEFAULT_FIT_POWER_DBM)]
    pub fit_p_dbm: f64,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho_db: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Normalizing transmit power in dBm
    #[arg(long)]
    pub p_dbm: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_OUTAGE_TRIALS)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit these samples (one per line) instead of simulating
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// JSON report path
    #[arg(long)]
    pub out: PathBuf,
    /// Fitted pdf/cdf and empirical cdf on a grid, as CSV
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Write the fitted samples, one per line
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop the recorded secondary outputs (JSON, curve, samples)
    #[arg(long)]
    pub primary_only: bool,
}

pub const DEFAULT_SEED: u64 = 1;

/// Parsed `--p-dbm-range` value.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueList(pub Vec<f64>);

/// `start:stop:step` (inclusive, step > 0) or `a,b,c`.
pub fn parse_range(text: &str) -> std::result::Result<ValueList, String> {
    parse_values(text).map(ValueList)
}

fn parse_values(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty range".into());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {text:?}"));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0 && step.is_finite()) {
            return Err(format!("step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("range {start}:{stop} is empty"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        text.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?
    };
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("non-finite value {v}"));
    }
    Ok(values)
}

fn base_config(path: Option<&Path>, defaults: SystemConfig) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::from_toml_file(p),
        None => Ok(defaults),
    }
}

impl Cli {
    /// Turns parsed arguments into a fully resolved job plus its manifest path.
    pub fn resolve(&self) -> Result<Option<(Job, PathBuf)>> {
        let cfg_path = self.config.as_deref();
        let job = match &self.command {
            Command::SweepPower(a) => {
                let mut base = base_config(
                    cfg_path,
                    SystemConfig {
                        n_elements: 900,
                        rho_db: Some(0.0),
                        ..Default::default()
                    },
                )?;
                if let Some(n) = a.n {
                    base.n_elements = n;
                }
                if let Some(r) = a.rho_db {
                    base.rho_db = Some(r);
                }
                a.link.apply(&mut base);
                let ms = if !a.m.is_empty() {
                    a.m.clone()
                } else if cfg_path.is_some() {
                    vec![base.slots_per_block]
                } else {
                    vec![2, 4, 8]
                };
                let series = ms
                    .into_iter()
                    .map(|m| Series {
                        slots_per_block: Some(m),
                        ..Default::default()
                    })
                    .collect();
                Job::SweepPower(sweep_job(base, SweepParam::TransmitPowerDbm, a.p_dbm_range.0.clone(), series, a.trials, &a.run, None, DEFAULT_FIT_POWER_DBM))
            }
            Command::SweepSize(a) => {
                let mut base = base_config(cfg_path, SystemConfig::default())?;
                if let Some(p) = a.p_dbm {
                    base.transmit_power_dbm = p;
                }
                if let Some(m) = a.m {
                    base.slots_per_block = m;
                }
                a.link.apply(&mut base);
                let rhos = if !a.rho_db.is_empty() {
                    a.rho_db.clone()
                } else if cfg_path.is_some() || base.rho_db.is_none() {
                    vec![]
                } else {
                    vec![0.0, 5.0, 10.0]
                };
                if base.rho_db.is_none() && !rhos.is_empty() {
                    return Err(Error::Config("--no-emi conflicts with --rho-db".into()));
                }
                let series = rhos
                    .into_iter()
                    .map(|r| Series {
                        rho_db: Some(r),
                        ..Default::default()
                    })
                    .collect();
                let values = a.nh.iter().map(|&v| v as f64).collect();
                Job::SweepSize(sweep_job(base, SweepParam::ElementsPerSide, values, series, a.trials, &a.run, None, DEFAULT_FIT_POWER_DBM))
            }
            Command::Outage(a) => {
                let mut base = base_config(cfg_path, SystemConfig::default())?;
                if let Some(r) = a.rho_db {
                    base.rho_db = Some(r);
                }
                if let Some(m) = a.m {
                    base.slots_per_block = m;
                }
                a.link.apply(&mut base);
                let ns = if !a.n.is_empty() {
                    a.n.clone()
                } else if cfg_path.is_some() {
                    vec![base.n_elements]
                } else {
                    vec![49, 100, 225]
                };
                let series = ns
                    .into_iter()
                    .map(|n| Series {
                        n_elements: Some(n),
                        ..Default::default()
                    })
                    .collect();
                let mut run = a.run.clone();
                if run.thresholds.is_empty() {
                    run.thresholds = vec![200.0];
                }
                Job::Outage(sweep_job(base, SweepParam::TransmitPowerDbm, a.p_dbm_range.0.clone(), series, a.trials, &run, a.fit, a.fit_p_dbm))
            }
            Command::Fit(a) => {
                let mut cfg = base_config(
                    cfg_path,
                    SystemConfig {
                        transmit_power_dbm: DEFAULT_FIT_POWER_DBM,
                        ..Default::default()
                    },
                )?;
                if let Some(n) = a.n {
                    cfg.n_elements = n;
                }
                if let Some(r) = a.rho_db {
                    cfg.rho_db = Some(r);
                }
                if let Some(m) = a.m {
                    cfg.slots_per_block = m;
                }
                if let Some(p) = a.p_dbm {
                    cfg.transmit_power_dbm = p;
                }
                a.link.apply(&mut cfg);
                if a.samples.is_none() {
                    cfg.validate()?;
                }
                if a.trials == 0 {
                    return Err(Error::Config("trials must be at least 1".into()));
                }
                let job = Job::Fit(FitJob {
                    config: cfg.resolved(),
                    trials: a.trials,
                    seed: a.seed.unwrap_or(DEFAULT_SEED),
                    samples: a.samples.clone(),
                    out: a.out.clone(),
                    curve: a.curve.clone(),
                    samples_out: a.samples_out.clone(),
                });
                let manifest = a.manifest.clone().unwrap_or_else(|| default_manifest_path(&a.out));
                return Ok(Some((job, manifest)));
            }
            Command::Replay(_) => return Ok(None),
        };
        let manifest = match &self.command {
            Command::SweepPower(SweepPowerArgs { run, .. })
            | Command::SweepSize(SweepSizeArgs { run, .. })
            | Command::Outage(OutageArgs { run, .. }) => run.manifest.clone().unwrap_or_else(|| default_manifest_path(&run.out)),
            _ => unreachable!(),
        };
        if let Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) = &job {
            for s in j.series.iter().map(|s| s.apply(&j.base)).chain((j.series.is_empty()).then(|| j.base.clone())) {
                crate::montecarlo::SweepSpec {
                    param: j.param,
                    values: j.values.clone(),
                    trials: j.trials,
                    seed: j.seed,
                    schemes: j.schemes.clone(),
                    thresholds: j.thresholds.clone(),
                }
                .validate(&s)?;
            }
        }
        Ok(Some((job, manifest)))
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep_job(
    base: SystemConfig,
    param: SweepParam,
    values: Vec<f64>,
    series: Vec<Series>,
    trials: usize,
    run: &RunArgs,
    fit: Option<FitSource>,
    fit_power_dbm: f64,
) -> SweepJob {
    SweepJob {
        base: base.resolved(),
        param,
        values,
        series,
        trials,
        seed: run.seed.unwrap_or(DEFAULT_SEED),
        schemes: run.scheme.schemes(),
        thresholds: run.thresholds.clone(),
        fit,
        fit_power_dbm,
        out: run.out.clone(),
        json: run.json.clone(),
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn print_sweeps(results: &[SweepResult]) {
    for result in results {
        let base = &result.base;
        let mut fixed = Vec::new();
        if !matches!(result.spec.param, SweepParam::NElements | SweepParam::ElementsPerSide) {
            fixed.push(format!("N={}", base.n_elements));
        }
        if result.spec.param != SweepParam::RhoDb {
            fixed.push(format!("rho_db={}", base.rho_db.map(|r| r.to_string()).unwrap_or_else(|| "off".into())));
        }
        if result.spec.param != SweepParam::SlotsPerBlock {
            fixed.push(format!("m={}", base.slots_per_block));
        }
        if result.spec.param != SweepParam::TransmitPowerDbm {
            fixed.push(format!("P={} dBm", base.transmit_power_dbm));
        }
        println!(
            "# {}, swept {} ({} trials, seed {})",
            fixed.join(" "),
            result.spec.param.name(),
            result.spec.trials,
            result.spec.seed
        );
        println!("{:>10}  {:<9}  {:>12}  {:>9}  outage", "value", "scheme", "SINR_m [dB]", "stderr");
        for p in &result.points {
            for s in &p.schemes {
                let ops: Vec<String> = s
                    .outage
                    .iter()
                    .map(|o| format!("r={}:{:.4}", o.threshold, o.probability))
                    .collect();
                println!(
                    "{:>10}  {:<9}  {:>12.3}  {:>9.4}  {}",
                    p.swept_value,
                    s.scheme.name(),
                    s.mean_sinr_db,
                    s.stderr_db,
                    ops.join(" ")
                );
            }
        }
    }
}

fn print_fit(report: &FitReport) {
    println!(
        "shape a = {:.4} (+/- {:.2e})  scale b = {:.4} (+/- {:.2e})  n = {}  KS = {:.4}",
        report.shape, report.shape_stderr, report.scale, report.scale_stderr, report.samples, report.ks_statistic
    );
    if let Some(t) = &report.published_table {
        println!(
            "published table: a = {} ({:+.2}%), b = {} ({:+.2}%)",
            t.shape,
            100.0 * t.shape_rel_diff,
            t.scale,
            100.0 * t.scale_rel_diff
        );
    }
    if let Some(c) = &report.published_curves {
        println!(
            "published curves: a = {:.4} ({:+.2}%), b = {:.3} ({:+.2}%)",
            c.shape,
            100.0 * c.shape_rel_diff,
            c.scale,
            100.0 * c.scale_rel_diff
        );
    }
}

fn run_job(job: &Job, manifest_path: Option<&Path>, threads: Option<usize>) -> Result<()> {
    let report = with_threads(threads, || execute(job))??;
    if let Some(path) = manifest_path {
        RunManifest::new(job.clone()).save(path)?;
    }
    match report {
        JobReport::Sweep(results) => print_sweeps(&results),
        JobReport::Fit(report) => print_fit(&report),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::Replay(args) = &cli.command {
        let manifest = RunManifest::load(&args.manifest)?;
        let mut job = manifest.job;
        if let Some(out) = &args.out {
            job.set_primary_output(out.clone());
        }
        if args.primary_only {
            match &mut job {
                Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => j.json = None,
                Job::Fit(j) => {
                    j.curve = None;
                    j.samples_out = None;
                }
            }
        }
        let new_manifest = default_manifest_path(job.primary_output());
        let write_manifest = new_manifest != args.manifest;
        return run_job(&job, write_manifest.then_some(new_manifest.as_path()), cli.threads);
    }
    let (job, manifest) = cli.resolve()?.expect("non-replay command resolves to a job");
    run_job(&job, Some(&manifest), cli.threads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_values("0:10:5").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_values("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_values("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_values("-4,2.5").unwrap(), vec![-4.0, 2.5]);
        assert_eq!(parse_values("7").unwrap(), vec![7.0]);
        assert!(parse_range("").is_err());
        assert!(parse_range("1:0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("a,b").is_err());
    }

    #[test]
    fn power_sweep_defaults() {
        let cli = Cli::try_parse_from(["ris-emi", "sweep-power", "--out", "x.csv"]).unwrap();
        let (job, manifest) = cli.resolve().unwrap().unwrap();
        assert_eq!(manifest, PathBuf::from("x.csv.manifest.json"));
        let Job::SweepPower(j) = job else { panic!() };
        assert_eq!(j.base.n_elements, 900);
        assert_eq!(j.base.rho_db, Some(0.0));
        let ms: Vec<_> = j.series.iter().map(|s| s.slots_per_block.unwrap()).collect();
        assert_eq!(ms, vec![2, 4, 8]);
        assert_eq!(j.base.noise_power_dbm, -114.0);
        assert_eq!(j.base.beta1_db, -48.0);
        assert_eq!(j.base.beta2_db, -38.0);
        assert!(j.base.element_spacing_m.is_some());
    }

    #[test]
    fn size_sweep_defaults() {
        let cli = Cli::try_parse_from(["ris-emi", "sweep-size", "--out", "x.csv"]).unwrap();
        let Job::SweepSize(j) = cli.resolve().unwrap().unwrap().0 else { panic!() };
        assert_eq!(j.values, vec![7.0, 10.0, 15.0, 20.0, 30.0]);
        assert_eq!(j.base.transmit_power_dbm, 23.0);
        let rhos: Vec<_> = j.series.iter().map(|s| s.rho_db.unwrap()).collect();
        assert_eq!(rhos, vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn invalid_flags_are_usage_errors() {
        assert!(Cli::try_parse_from(["ris-emi", "sweep-power", "--out", "x", "--p-dbm-range", ""]).is_err());
        let cli = Cli::try_parse_from(["ris-emi", "sweep-power", "--out", "x", "--n", "50"]).unwrap();
        let err = cli.resolve().unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
        let cli = Cli::try_parse_from(["ris-emi", "sweep-power", "--out", "x", "--m", "1"]).unwrap();
        assert_eq!(exit_code(&cli.resolve().unwrap_err()), EXIT_USAGE);
    }
}
