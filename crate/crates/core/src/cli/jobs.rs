//! Fully resolved runs. A job holds every parameter of a run, so serializing it into the
//! manifest is enough to replay the run bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_gamma, gamma_cdf, gamma_pdf, param_curves_eval, table_entry, GammaFit, TableEntry};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{
    empirical_outage, run_sweep_with, simulate_point, OutagePoint, SweepParam, SweepResult, SweepSpec, TOOL_VERSION,
};
use crate::output::{write_sweep_csv, write_sweep_json};
use crate::scenario::Scenario;
use crate::schemes::Scheme;

/// Reference transmit power for Gamma fits of `SINR_m / P`.
pub const DEFAULT_FIT_POWER_DBM: f64 = 30.0;

/// Overrides applied to the base configuration for one curve of a multi-series sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_elements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots_per_block: Option<usize>,
}

impl Series {
    pub fn apply(&self, base: &SystemConfig) -> SystemConfig {
        let mut cfg = base.clone();
        if let Some(n) = self.n_elements {
            cfg.n_elements = n;
        }
        if let Some(r) = self.rho_db {
            cfg.rho_db = Some(r);
        }
        if let Some(m) = self.slots_per_block {
            cfg.slots_per_block = m;
        }
        cfg
    }
}

/// Where the closed-form outage curve takes its Gamma parameters from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitSource {
    /// Published per-N table (N = 49, 100, 225).
    Table,
    /// Published a(N), b(N) curves.
    Curves,
    /// Maximum-likelihood fit to a dedicated simulation at the fit reference power.
    Mle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepJob {
    pub base: SystemConfig,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub series: Vec<Series>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub fit: Option<FitSource>,
    pub fit_power_dbm: f64,
    pub out: PathBuf,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJob {
    /// Operating point; `transmit_power_dbm` is the normalizing power.
    pub config: SystemConfig,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub samples: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub curve: Option<PathBuf>,
    #[serde(default)]
    pub samples_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Job {
    SweepPower(SweepJob),
    SweepSize(SweepJob),
    Outage(SweepJob),
    Fit(FitJob),
}

impl Job {
    pub fn primary_output(&self) -> &Path {
        match self {
            Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => &j.out,
            Job::Fit(j) => &j.out,
        }
    }

    pub fn set_primary_output(&mut self, path: PathBuf) {
        match self {
            Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => j.out = path,
            Job::Fit(j) => j.out = path,
        }
    }

    pub fn outputs(&self) -> Vec<PathBuf> {
        match self {
            Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => {
                std::iter::once(j.out.clone()).chain(j.json.clone()).collect()
            }
            Job::Fit(j) => std::iter::once(j.out.clone())
                .chain(j.curve.clone())
                .chain(j.samples_out.clone())
                .collect(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => j.seed,
            Job::Fit(j) => j.seed,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub job: Job,
}

impl RunManifest {
    pub fn new(job: Job) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool_version: TOOL_VERSION.to_string(),
            timestamp_unix,
            seed: job.seed(),
            outputs: job.outputs(),
            job,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// `<path>.manifest.json`
pub fn default_manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// What a finished job reports back to the terminal.
pub enum JobReport {
    Sweep(Vec<SweepResult>),
    Fit(Box<FitReport>),
}

pub fn execute(job: &Job) -> Result<JobReport> {
    match job {
        Job::SweepPower(j) | Job::SweepSize(j) | Job::Outage(j) => run_sweep_job(j).map(JobReport::Sweep),
        Job::Fit(j) => run_fit_job(j).map(|r| JobReport::Fit(Box::new(r))),
    }
}

fn theory_params(job: &SweepJob, cfg: &SystemConfig) -> Result<Option<(f64, f64)>> {
    let Some(source) = job.fit else {
        return Ok(None);
    };
    let params = match source {
        FitSource::Table => {
            let entry = table_entry(cfg.n_elements).ok_or_else(|| {
                Error::Config(format!(
                    "no tabulated Gamma parameters for N = {} (available: 49, 100, 225)",
                    cfg.n_elements
                ))
            })?;
            (entry.shape, entry.scale)
        }
        FitSource::Curves => param_curves_eval::<f64>(cfg.n_elements),
        FitSource::Mle => {
            let fit_cfg = SystemConfig {
                transmit_power_dbm: job.fit_power_dbm,
                ..cfg.clone()
            };
            let samples = normalized_samples(&fit_cfg, job.trials, job.seed)?;
            let fit = fit_gamma(&samples)?;
            (fit.shape, fit.scale)
        }
    };
    Ok(Some(params))
}

fn run_sweep_job(job: &SweepJob) -> Result<Vec<SweepResult>> {
    let series = if job.series.is_empty() {
        vec![Series::default()]
    } else {
        job.series.clone()
    };
    let mut results = Vec::with_capacity(series.len());
    for s in &series {
        let base = s.apply(&job.base);
        let spec = SweepSpec {
            param: job.param,
            values: job.values.clone(),
            trials: job.trials,
            seed: job.seed,
            schemes: job.schemes.clone(),
            thresholds: job.thresholds.clone(),
        };
        spec.validate(&base)?;
        let theory = theory_params(job, &base)?;
        let result = run_sweep_with::<f64>(&spec, &base, |_, summary| {
            let Some((shape, scale)) = theory else {
                return Ok(());
            };
            let power = dbm_to_watts(summary.config.transmit_power_dbm);
            for s in summary.schemes.iter_mut().filter(|s| s.scheme == Scheme::Proposed) {
                let points = job
                    .thresholds
                    .iter()
                    .map(|&r| {
                        Ok(OutagePoint {
                            threshold: r,
                            probability: gamma_cdf(r / power, shape, scale)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                s.theoretical_outage = Some(points);
            }
            Ok(())
        })?;
        results.push(result);
    }

    write_sweep_csv(&results, create(&job.out)?)?;
    if let Some(path) = &job.json {
        write_sweep_json(&results, create(path)?)?;
    }
    Ok(results)
}

/// Proposed-scheme `SINR_m / P` samples (P in watts) at `cfg`.
pub fn normalized_samples(cfg: &SystemConfig, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let scenario = Scenario::<f64>::new(cfg)?;
    let power = scenario.budget().transmit_power;
    let mut pts = simulate_point(&scenario, trials, seed, &[Scheme::Proposed])?;
    let proposed = pts.schemes.pop().expect("one scheme requested");
    Ok(proposed.sinr.into_iter().map(|s| s / power).collect())
}

/// Reads one sample per line; blank lines and `#` comments are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected a number, found {text:?}"),
        })?;
        out.push(value);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    pub shape: f64,
    pub scale: f64,
    pub shape_rel_diff: f64,
    pub scale_rel_diff: f64,
}

impl CurveComparison {
    fn new(shape: f64, scale: f64, fit: &GammaFit<f64>) -> Self {
        Self {
            shape,
            scale,
            shape_rel_diff: fit.shape / shape - 1.0,
            scale_rel_diff: fit.scale / scale - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub source: String,
    /// Power (W) the samples were divided by; absent for external samples.
    pub normalizing_power_w: Option<f64>,
    pub config: Option<SystemConfig>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub shape: f64,
    pub scale: f64,
    pub shape_stderr: f64,
    pub scale_stderr: f64,
    pub samples: usize,
    pub ks_statistic: f64,
    pub mean: f64,
    pub published_table: Option<CurveComparison>,
    pub published_curves: Option<CurveComparison>,
}

fn run_fit_job(job: &FitJob) -> Result<FitReport> {
    let (samples, source) = match &job.samples {
        Some(path) => (read_samples(path)?, format!("file:{}", path.display())),
        None => (normalized_samples(&job.config, job.trials, job.seed)?, "simulation".to_string()),
    };
    let fit = fit_gamma(&samples)?;
    let simulated = job.samples.is_none();
    let n = job.config.n_elements;
    let table = simulated
        .then(|| table_entry(n))
        .flatten()
        .map(|TableEntry { shape, scale, .. }| CurveComparison::new(shape, scale, &fit));
    let curves = simulated.then(|| {
        let (a, b) = param_curves_eval::<f64>(n);
        CurveComparison::new(a, b, &fit)
    });
    let report = FitReport {
        version: TOOL_VERSION.to_string(),
        source,
        normalizing_power_w: simulated.then(|| dbm_to_watts(job.config.transmit_power_dbm)),
        config: simulated.then(|| job.config.resolved()),
        trials: samples.len(),
        seed: simulated.then_some(job.seed),
        shape: fit.shape,
        scale: fit.scale,
        shape_stderr: fit.shape_stderr,
        scale_stderr: fit.scale_stderr,
        samples: fit.samples,
        ks_statistic: fit.ks_statistic,
        mean: fit.mean(),
        published_table: table,
        published_curves: curves,
    };
    let mut w = create(&job.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w).map_err(|e| Error::io(&job.out, e))?;
    w.flush().map_err(|e| Error::io(&job.out, e))?;

    if let Some(path) = &job.curve {
        write_curve(path, &samples, &fit)?;
    }
    if let Some(path) = &job.samples_out {
        let mut w = create(path)?;
        for s in &samples {
            writeln!(w, "{s}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}

/// Fitted density/CDF next to the empirical CDF on a uniform grid. The CDF column at
/// `x = r / P` is the closed-form outage probability for threshold `r` at power `P`.
fn write_curve(path: &Path, samples: &[f64], fit: &GammaFit<f64>) -> Result<()> {
    const POINTS: usize = 200;
    let upper = samples.iter().copied().fold(0.0, f64::max);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "# ris-emi gamma-fit curve v1 shape={} scale={}", fit.shape, fit.scale).map_err(io)?;
    writeln!(w, "x,pdf,cdf,empirical_cdf").map_err(io)?;
    for i in 0..=POINTS {
        let x = upper * i as f64 / POINTS as f64;
        let pdf = gamma_pdf(x, fit.shape, fit.scale)?;
        let cdf = gamma_cdf(x, fit.shape, fit.scale)?;
        let emp = empirical_outage(samples, x)?;
        writeln!(w, "{x},{pdf},{cdf},{emp}").map_err(io)?;
    }
    w.flush().map_err(io)
}
