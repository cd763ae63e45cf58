//! Command-line front end: flags and JSON config files merged into one
//! [`RunConfig`], dispatched to the library, with reports written atomically.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    check_atom, check_lemma_additive, check_lemma_multiplicative, check_theorem1, check_theorem2, check_theorem3,
    check_truncation_bound, demo_counterexamples, ExperimentReport, Pathology, RunMeta, Table,
};
use crate::matrix::{assemble, EnsembleSpec, Model, MAX_DIM};
use crate::moments::{limiting_moments, moment_growth_check, IntegrationConfig, HANKEL_TOL};
use crate::nc::{catalan, enumerate_nc2, kreweras, DEFAULT_NC2_LIMIT};
use crate::profile::{quantile_radial, Grid, MeasureSpec, Profile, ProfileSpec, SpectralDensity};
use crate::spectra::{eigenvalues, histogram, near_zero_mass, SpectralSample};

/// Largest moment order accepted from the command line.
pub const MAX_CLI_ORDER: usize = 16;
pub const MAX_SEEDS: usize = 10_000;
const MIN_K: usize = 8;

const DEFAULT_N: usize = 1000;
const DEFAULT_K: usize = 64;
const DEFAULT_NMAX: usize = 6;
const DEFAULT_SEEDS: usize = 5;
const DEFAULT_BINS: usize = 50;
const DEFAULT_EPS: f64 = 0.05;
const DEFAULT_M: usize = 3;
const DEFAULT_SIZE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Nc,
    Moments,
    Simulate,
    Theorem1,
    Theorem2,
    Theorem3,
    LemmaAdd,
    LemmaMult,
    Atom,
    Truncation,
    DemoPrime,
    DemoDyadic,
}

/// A seed count (master, master+1, …) or an explicit list of master seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(usize),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn resolve(&self, master: u64) -> Vec<u64> {
        match self {
            SeedSpec::Count(c) => (0..*c as u64).map(|i| master.wrapping_add(i)).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }

    fn len(&self) -> usize {
        match self {
            SeedSpec::Count(c) => *c,
            SeedSpec::List(v) => v.len(),
        }
    }
}

impl FromStr for SeedSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.contains(',') {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(SeedSpec::List)
        } else {
            s.parse::<usize>()
                .map(SeedSpec::Count)
                .map_err(|e| format!("`{s}` is neither a seed count nor a comma-separated list: {e}"))
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Count(c) => write!(f, "{c}"),
            SeedSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{},", parts.join(","))
            }
        }
    }
}

/// Spectral density of a stationary field, as stored in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    Expression {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        /// Replace g by (g(x,y) + g(1−x,1−y))/2.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        symmetrize: bool,
    },
    Grid {
        path: PathBuf,
    },
}

impl DensitySpec {
    /// `EXPR`, a number, `@FILE.csv` (grid) or `@FILE` (expression).
    pub fn from_cli(text: &str, bound: Option<f64>, symmetrize: bool) -> Result<Self> {
        let expression = |t: String| DensitySpec::Expression {
            text: t,
            bound,
            symmetrize,
        };
        match text.strip_prefix('@') {
            Some(path) if path.to_ascii_lowercase().ends_with(".csv") => Ok(DensitySpec::Grid { path: path.into() }),
            Some(path) => {
                let body = fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
                Ok(expression(body.trim().to_string()))
            }
            None => match text.trim().parse::<f64>() {
                Ok(value) => Ok(DensitySpec::Constant { value }),
                Err(_) => Ok(expression(text.trim().to_string())),
            },
        }
    }

    pub fn build(&self) -> Result<SpectralDensity> {
        match self {
            DensitySpec::Constant { value } => SpectralDensity::constant(*value),
            DensitySpec::Expression {
                text,
                bound,
                symmetrize,
            } => {
                let g = if *symmetrize {
                    SpectralDensity::parse_symmetrized(text)?
                } else {
                    SpectralDensity::parse(text)?
                };
                match bound {
                    Some(m) => g.with_bound(*m),
                    None => Ok(g),
                }
            }
            DensitySpec::Grid { path } => SpectralDensity::grid(Grid::from_csv(path)?),
        }
    }
}

/// Everything a run needs. Loaded from `--config`, then overridden by flags.
/// `out` and `threads` affect where and how fast, never what, so they are
/// left out of report echoes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationConfig>,
    /// Truncation level k for profiles (and the truncation check).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "hadamard-lab", version, about = "Spectra of profiled Wigner matrices and their free-probability oracles")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Profile expression in x, y, or @FILE (a .csv file is read as a grid).
    #[arg(long, global = true, value_name = "EXPR|@FILE")]
    profile: Option<String>,
    /// Declared sup bound of the profile or density expression.
    #[arg(long, global = true)]
    bound: Option<f64>,
    /// Truncate the profile to [1/k, 1-1/k]^2 (also the k of `check truncation`).
    #[arg(long, global = true, value_name = "k")]
    truncate: Option<u32>,
    /// Measure literal, e.g. "uniform:1:2" or "0.5*delta:0+0.5*delta:1".
    #[arg(long, global = true, value_name = "SPEC")]
    nu: Option<String>,
    /// Spectral density g(x,y) of the Gaussian field, a number, or @FILE.
    #[arg(long, global = true, value_name = "EXPR|@FILE")]
    density: Option<String>,
    /// Use (g(x,y) + g(1-x,1-y))/2 in place of the density expression.
    #[arg(long, global = true)]
    symmetrize: bool,
    /// Shift alpha of the additive and theorem2 checks
    #[arg(long, global = true, value_name = "R")]
    alpha: Option<f64>,
    /// Matrix dimension.
    #[arg(long = "N", global = true, value_name = "INT")]
    n: Option<usize>,
    /// Spectral grid of the Gaussian field.
    #[arg(long = "K", global = true, value_name = "INT")]
    k: Option<usize>,
    /// Highest moment order
    #[arg(long, global = true, value_name = "INT")]
    nmax: Option<usize>,
    /// Seed count (master, master+1, ...) or a comma-separated list.
    #[arg(long, global = true, value_name = "INT|LIST")]
    seeds: Option<SeedSpec>,
    /// Master seed; also the first seed of a seed count
    #[arg(long, global = true, value_name = "INT")]
    master_seed: Option<u64>,
    /// Monte Carlo integration with this many samples per partition.
    #[arg(long, global = true, value_name = "INT")]
    mc_samples: Option<usize>,
    /// Midpoint integration with this many points per axis.
    #[arg(long, global = true, value_name = "INT")]
    grid: Option<usize>,
    /// Directory for the JSON report and CSV side files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (0 or unset: one per core)
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    /// Half-width of the near-zero window reported by `simulate`.
    #[arg(long, global = true, value_name = "R")]
    eps: Option<f64>,
    /// Spectral grids for the K sweep of `check theorem3`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    k_sweep: Option<Vec<usize>>,
    /// Sizes for `demo`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    sizes: Option<Vec<usize>>,
    /// Histogram bins for `simulate`.
    #[arg(long, global = true, value_name = "INT")]
    bins: Option<usize>,
    /// Half-size m of the ground set for `nc`.
    #[arg(long, global = true, value_name = "INT")]
    m: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// List NC2(2m) with Kreweras complements and the labeling T.
    Nc,
    /// Limiting moments of a profile as CSV.
    Moments,
    /// Eigenvalues, moments and a histogram of a simulated ensemble.
    Simulate,
    /// Run one falsifiable check.
    Check {
        #[arg(value_enum)]
        which: CheckKind,
    },
    /// Pathological profiles without a limit.
    Demo {
        #[arg(value_enum)]
        which: DemoKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckKind {
    Theorem1,
    Theorem2,
    Theorem3,
    LemmaAdd,
    LemmaMult,
    Atom,
    Truncation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DemoKind {
    Prime,
    Dyadic,
}

impl Cmd {
    fn task(&self) -> Task {
        match self {
            Cmd::Nc => Task::Nc,
            Cmd::Moments => Task::Moments,
            Cmd::Simulate => Task::Simulate,
            Cmd::Check { which } => match which {
                CheckKind::Theorem1 => Task::Theorem1,
                CheckKind::Theorem2 => Task::Theorem2,
                CheckKind::Theorem3 => Task::Theorem3,
                CheckKind::LemmaAdd => Task::LemmaAdd,
                CheckKind::LemmaMult => Task::LemmaMult,
                CheckKind::Atom => Task::Atom,
                CheckKind::Truncation => Task::Truncation,
            },
            Cmd::Demo { which } => match which {
                DemoKind::Prime => Task::DemoPrime,
                DemoKind::Dyadic => Task::DemoDyadic,
            },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn apply(&mut self, fl: &Flags) -> Result<()> {
        if let Some(p) = &fl.profile {
            self.profile = Some(ProfileSpec::from_cli(p, fl.bound)?);
        } else if let (Some(b), Some(ProfileSpec::Expression { bound, .. })) = (fl.bound, self.profile.as_mut()) {
            *bound = Some(b);
        }
        if let Some(d) = &fl.density {
            self.density = Some(DensitySpec::from_cli(d, fl.bound, fl.symmetrize)?);
        } else if let Some(DensitySpec::Expression { bound, symmetrize, .. }) = self.density.as_mut() {
            if fl.bound.is_some() && self.profile.is_none() {
                *bound = fl.bound;
            }
            *symmetrize |= fl.symmetrize;
        }
        if let Some(nu) = &fl.nu {
            self.nu = Some(nu.parse()?);
        }
        macro_rules! take {
            ($($field:ident <- $flag:ident),*) => { $( if fl.$flag.is_some() { self.$field = fl.$flag.clone(); } )* };
        }
        take!(alpha <- alpha, n <- n, k <- k, n_max <- nmax, seeds <- seeds, master_seed <- master_seed,
              truncate <- truncate, k_sweep <- k_sweep, sizes <- sizes, bins <- bins, eps <- eps, m <- m,
              out <- out, threads <- threads);
        match (fl.grid, fl.mc_samples) {
            (Some(_), Some(_)) => return Err(Error::Config("--grid and --mc-samples are mutually exclusive".into())),
            (Some(grid), None) => self.integration = Some(IntegrationConfig::midpoint(grid)),
            (None, Some(samples)) => {
                self.integration = Some(IntegrationConfig::monte_carlo(samples, self.master_seed.unwrap_or(0)))
            }
            (None, None) => {}
        }
        Ok(())
    }

    /// Fills the defaults a task reads, so that the echo alone reproduces the run.
    pub fn with_defaults(mut self) -> Self {
        let task = self.task;
        let uses = |ts: &[Task]| task.is_some_and(|t| ts.contains(&t));
        self.master_seed.get_or_insert(0);
        if uses(&[Task::Moments, Task::Theorem1, Task::Theorem2, Task::Theorem3, Task::LemmaAdd, Task::LemmaMult]) {
            self.n_max.get_or_insert(DEFAULT_NMAX);
            self.integration.get_or_insert_with(IntegrationConfig::default);
        }
        if !uses(&[Task::Nc, Task::Moments, Task::DemoPrime, Task::DemoDyadic]) {
            self.n.get_or_insert(DEFAULT_N);
            self.seeds.get_or_insert(SeedSpec::Count(DEFAULT_SEEDS));
        }
        if uses(&[Task::Theorem3]) || (uses(&[Task::Simulate]) && self.density.is_some()) {
            self.k.get_or_insert(DEFAULT_K);
        }
        if uses(&[Task::Theorem3]) {
            let k = self.k.unwrap_or(DEFAULT_K);
            self.k_sweep
                .get_or_insert_with(|| [k / 4, k / 2, k].into_iter().filter(|v| *v >= MIN_K).collect());
        }
        if uses(&[Task::Simulate]) {
            self.bins.get_or_insert(DEFAULT_BINS);
            self.eps.get_or_insert(DEFAULT_EPS);
        }
        if uses(&[Task::DemoPrime, Task::DemoDyadic]) {
            self.sizes.get_or_insert_with(|| vec![DEFAULT_SIZE]);
        }
        if uses(&[Task::Nc]) {
            self.m.get_or_insert(DEFAULT_M);
        }
        self
    }

    /// Size and sanity guards, checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let limit = |what: &'static str, v: usize, lo: usize, hi: usize| -> Result<()> {
            if v > hi {
                return Err(Error::SizeLimit {
                    what,
                    requested: v,
                    limit: hi,
                });
            }
            if v < lo {
                return Err(Error::Config(format!("{what} must be at least {lo}, got {v}")));
            }
            Ok(())
        };
        if let Some(n) = self.n {
            limit("N", n, 1, MAX_DIM)?;
        }
        if let Some(n) = self.n_max {
            limit("n_max", n, 1, MAX_CLI_ORDER)?;
        }
        if let Some(k) = self.k {
            limit("K", k, MIN_K, MAX_DIM)?;
        }
        for &k in self.k_sweep.iter().flatten() {
            limit("K in k_sweep", k, MIN_K, MAX_DIM)?;
        }
        if let Some(s) = &self.seeds {
            limit("seeds", s.len(), 1, MAX_SEEDS)?;
        }
        if let Some(t) = self.threads {
            limit("threads", t, 1, 1024)?;
        }
        if let Some(b) = self.bins {
            limit("bins", b, 1, 100_000)?;
        }
        if let Some(m) = self.m {
            limit("m", m, 1, DEFAULT_NC2_LIMIT)?;
        }
        if let Some(k) = self.truncate {
            limit("truncation level", k as usize, 2, usize::MAX)?;
        }
        for (name, v) in [("alpha", self.alpha), ("eps", self.eps)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Config(format!("{name} must be finite, got {v}")));
                }
            }
        }
        if let Some(e) = self.eps {
            if e <= 0.0 {
                return Err(Error::Config(format!("eps must be positive, got {e}")));
            }
        }
        if let Some(cfg) = &self.integration {
            cfg.validate()?;
        }
        Ok(())
    }

    /// The config as echoed in reports: everything except `out` and `threads`.
    pub fn echo(&self) -> serde_json::Value {
        let mut bare = self.clone();
        bare.out = None;
        bare.threads = None;
        serde_json::to_value(&bare).expect("configs always serialize")
    }

    fn seed_list(&self) -> Vec<u64> {
        self.seeds
            .as_ref()
            .unwrap_or(&SeedSpec::Count(DEFAULT_SEEDS))
            .resolve(self.master_seed.unwrap_or(0))
    }

    fn need<T: Clone>(&self, v: &Option<T>, flag: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::Config(format!("{flag} is required for {}", self.task_name())))
    }

    fn task_name(&self) -> String {
        self.task
            .map(|t| serde_json::to_value(t).unwrap().as_str().unwrap_or_default().to_string())
            .unwrap_or_default()
    }

    fn profile(&self) -> Result<Profile> {
        let p = self.need(&self.profile, "--profile")?.build()?;
        match (self.task, self.truncate) {
            (Some(Task::Truncation), _) | (_, None) => Ok(p),
            (_, Some(k)) => p.truncate(k),
        }
    }

    fn integration(&self) -> IntegrationConfig {
        self.integration.clone().unwrap_or_default()
    }
}

/// What a task hands back: its report plus text for standard output (the
/// report itself when empty).
struct Outcome {
    report: ExperimentReport,
    stdout: Option<String>,
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    let task = cfg.task.ok_or_else(|| Error::Config("no task given".into()))?;
    let n = cfg.n.unwrap_or(DEFAULT_N);
    let n_max = cfg.n_max.unwrap_or(DEFAULT_NMAX);
    let seeds = cfg.seed_list();
    let integ = cfg.integration();
    let report = |r: ExperimentReport| Ok(Outcome { report: r, stdout: None });
    match task {
        Task::Nc => run_nc(cfg.m.unwrap_or(DEFAULT_M)),
        Task::Moments => run_moments(&cfg.profile()?, n_max, &integ),
        Task::Simulate => run_simulate(cfg, n, &seeds),
        Task::Theorem1 => report(check_theorem1(&cfg.profile()?, n, n_max, &seeds, &integ)?),
        Task::Truncation => {
            let k = cfg.need(&cfg.truncate, "--truncate")?;
            report(check_truncation_bound(&cfg.profile()?, n, k, &seeds)?)
        }
        Task::LemmaAdd => {
            let alpha = cfg.need(&cfg.alpha, "--alpha")?;
            report(check_lemma_additive(&cfg.profile()?, alpha, n, n_max, &seeds, &integ)?)
        }
        Task::LemmaMult => report(check_lemma_multiplicative(&cfg.need(&cfg.nu, "--nu")?, n, n_max, &seeds, &integ)?),
        Task::Theorem2 => {
            let nu = cfg.need(&cfg.nu, "--nu")?;
            let alpha = cfg.need(&cfg.alpha, "--alpha")?;
            report(check_theorem2(&nu, alpha, n, n_max, &seeds, &integ)?)
        }
        Task::Atom => report(check_atom(&cfg.need(&cfg.nu, "--nu")?, n, &seeds)?),
        Task::Theorem3 => {
            let g = cfg.need(&cfg.density, "--density")?.build()?;
            let k = cfg.k.unwrap_or(DEFAULT_K);
            let sweep = cfg.k_sweep.clone().unwrap_or_default();
            report(check_theorem3(&g, n, k, n_max, &seeds, &integ, &sweep)?)
        }
        Task::DemoPrime | Task::DemoDyadic => {
            let which = if task == Task::DemoPrime { Pathology::Prime } else { Pathology::Dyadic };
            let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![DEFAULT_SIZE]);
            report(demo_counterexamples(which, &sizes, cfg.master_seed.unwrap_or(0))?)
        }
    }
}

fn csv_table(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Table> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(Table {
        name: name.to_string(),
        csv: String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?,
    })
}

fn run_nc(m: usize) -> Result<Outcome> {
    let sigmas = enumerate_nc2(m)?;
    let mut report = ExperimentReport::new("nc", json!({}));
    report.within(format!("|NC2({})| vs Catalan({m})", 2 * m), catalan(m)? as f64, sigmas.len() as f64, 0.0);
    let mut text = String::new();
    let mut rows = Vec::new();
    for s in &sigmas {
        let k = kreweras(s);
        let t: Vec<String> = k.tsigma().iter().map(usize::to_string).collect();
        text += &format!("{s}  kreweras {k}  T {}\n", t.join(" "));
        rows.push(vec![s.to_string(), k.to_string(), t.join(" ")]);
    }
    report.tables.push(csv_table("partitions", &["pairs", "kreweras", "tsigma"], rows)?);
    Ok(Outcome {
        report,
        stdout: Some(text),
    })
}

fn run_moments(f: &Profile, n_max: usize, integ: &IntegrationConfig) -> Result<Outcome> {
    let lm = limiting_moments(f, n_max, integ)?;
    let mut report = ExperimentReport::new("moments", json!({}));
    report.at_least("Hankel positivity (min eigenvalue ratio)".into(), lm.hankel_min_ratio(), -HANKEL_TOL);
    if let Some(b) = f.bound() {
        report.flag(format!("growth bound with M = {b}"), moment_growth_check(&lm, b));
    }
    let mut buf = Vec::new();
    lm.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?;
    report.tables.push(Table {
        name: "moments".into(),
        csv: csv.clone(),
    });
    Ok(Outcome {
        report,
        stdout: Some(csv),
    })
}

fn run_simulate(cfg: &RunConfig, n: usize, seeds: &[u64]) -> Result<Outcome> {
    use rayon::prelude::*;
    let given = [cfg.profile.is_some(), cfg.nu.is_some(), cfg.density.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(Error::Config("simulate needs exactly one of --profile, --nu, --density".into()));
    }
    let model = if cfg.profile.is_some() {
        Model::Hadamard(cfg.profile()?)
    } else if let Some(nu) = &cfg.nu {
        Model::Sandwich(quantile_radial(nu)?)
    } else {
        Model::GaussianProcess {
            density: cfg.need(&cfg.density, "--density")?.build()?,
            k: cfg.k.unwrap_or(DEFAULT_K),
        }
    };
    let n_max = cfg.n_max.unwrap_or(DEFAULT_NMAX);
    let eps = cfg.eps.unwrap_or(DEFAULT_EPS);
    let samples: Vec<SpectralSample> = seeds
        .par_iter()
        .map(|&s| eigenvalues(&assemble(&EnsembleSpec::new(model.clone(), n, s, 0))?.single()?))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("simulate", json!({}));
    let moments: Vec<Vec<f64>> = samples.iter().map(|s| s.moments(n_max)).collect();
    for k in 1..=n_max {
        let mean = moments.iter().map(|m| m[k - 1]).sum::<f64>() / moments.len() as f64;
        report.info(format!("m{k}: seed-averaged trace moment"), f64::NAN, mean);
    }
    let mass = samples.iter().map(|s| near_zero_mass(s, eps)).sum::<f64>() / samples.len() as f64;
    report.info(format!("near-zero mass at eps={eps} (mean over seeds)"), f64::NAN, mass);
    let worst = samples
        .iter()
        .map(|s| s.trace_error.max(s.frobenius_error))
        .fold(0.0, f64::max);
    report.at_most("eigensolver trace and Frobenius identities (max relative error)".into(), worst, 1e-8);

    let mut header = vec!["seed".to_string()];
    header.extend((1..=n_max).map(|k| format!("m{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = seeds.iter().zip(&moments).map(|(s, m)| {
        let mut r = vec![s.to_string()];
        r.extend(m.iter().map(f64::to_string));
        r
    });
    report.tables.push(csv_table("moments", &header, rows)?);
    let rows = seeds
        .iter()
        .zip(&samples)
        .flat_map(|(s, smp)| smp.eigenvalues().iter().map(move |v| vec![s.to_string(), v.to_string()]));
    report.tables.push(csv_table("eigenvalues", &["seed", "value"], rows)?);

    let pooled = SpectralSample::from_values(samples.iter().flat_map(|s| s.eigenvalues().iter().copied()).collect())?;
    let (lo, hi) = (pooled.eigenvalues()[0], *pooled.eigenvalues().last().unwrap());
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let h = histogram(&pooled, cfg.bins.unwrap_or(DEFAULT_BINS), lo, hi)?;
    let mut buf = Vec::new();
    h.write_csv(&mut buf)?;
    report.tables.push(Table {
        name: "histogram".into(),
        csv: String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?,
    });
    Ok(Outcome { report, stdout: None })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `{stem}.json` and `{stem}-{table}.csv` under `dir`; returns the stem.
pub fn write_report(dir: &Path, report: &ExperimentReport, timestamp: &str, seed: u64) -> Result<String> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}-{timestamp}-{seed}", report.experiment);
    let json = serde_json::to_string_pretty(report).expect("reports always serialize");
    write_atomic(&dir.join(format!("{stem}.json")), &(json + "\n"))?;
    for t in &report.tables {
        write_atomic(&dir.join(format!("{stem}-{}.csv", t.name)), &t.csv)?;
    }
    Ok(stem)
}

fn execute(cli: Cli) -> Result<bool> {
    let started = Instant::now();
    let mut cfg = match &cli.flags.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.flags)?;
    cfg.task = Some(cli.cmd.task());
    let cfg = cfg.with_defaults();
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let Outcome { mut report, stdout } = pool.install(|| dispatch(&cfg))?;
    report.echo = cfg.echo();
    let now = chrono::Utc::now();
    report.meta = Some(RunMeta {
        timestamp: now.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        runtime_ms: started.elapsed().as_millis(),
    });
    match stdout {
        Some(text) => print!("{text}"),
        None => println!("{}", serde_json::to_string_pretty(&report).expect("reports always serialize")),
    }
    if let Some(dir) = &cfg.out {
        let seed = cfg.master_seed.unwrap_or(0);
        let stem = write_report(dir, &report, &now.format("%Y%m%dT%H%M%S%3fZ").to_string(), seed)?;
        eprintln!("wrote {}", dir.join(format!("{stem}.json")).display());
    }
    for c in report.failures() {
        eprintln!("FAIL {}: test {} vs oracle {} (tolerance {})", c.quantity, c.test, c.oracle, c.tolerance);
    }
    Ok(report.verdict)
}

/// Exit status for an error: 3 for numeric trouble, 2 for everything the user can fix.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Resource(_) => 3,
        _ => 2,
    }
}

/// Runs the command line `argv` (program name first) and returns the exit status:
/// 0 pass, 1 failed check, 2 usage, config or hypothesis error, 3 numeric error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_specs() {
        assert_eq!("3".parse::<SeedSpec>().unwrap().resolve(10), vec![10, 11, 12]);
        assert_eq!("4,9".parse::<SeedSpec>().unwrap().resolve(10), vec![4, 9]);
        assert!("x".parse::<SeedSpec>().is_err());
        let s: SeedSpec = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(s, SeedSpec::List(vec![1, 2]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"N": 10, "colour": 1}"#), Err(Error::Config(_))));
        let cfg = RunConfig::from_json(r#"{"N": 10, "nu": "uniform:1:2", "seeds": [3, 4]}"#).unwrap();
        assert_eq!(cfg.n, Some(10));
        assert_eq!(cfg.seeds, Some(SeedSpec::List(vec![3, 4])));
    }

    #[test]
    fn guards() {
        let big = RunConfig {
            n: Some(MAX_DIM + 1),
            ..Default::default()
        };
        assert!(matches!(big.validate(), Err(Error::SizeLimit { .. })));
        let deep = RunConfig {
            n_max: Some(MAX_CLI_ORDER + 1),
            ..Default::default()
        };
        assert!(matches!(deep.validate(), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig {
            task: Some(Task::Theorem2),
            nu: Some("uniform:1:2".parse().unwrap()),
            alpha: Some(1.0),
            out: Some("x".into()),
            threads: Some(3),
            ..Default::default()
        }
        .with_defaults();
        let back: RunConfig = serde_json::from_value(cfg.echo()).unwrap();
        assert_eq!(
            back,
            RunConfig {
                out: None,
                threads: None,
                ..cfg
            }
        );
    }
}
