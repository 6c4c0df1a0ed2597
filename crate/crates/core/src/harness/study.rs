use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{cp_baseline, mce_baseline, BaselineConfig, BaselineFit, BaselineMethod, UndetectedRays};
use super::cases::{simulate_case, CaseId, CaseParams, SimulatedImage};
use super::figure::figure_svg;
use crate::error::{Error, Result};
use crate::geometry::{lebesgue_error, Boundary, GridCurve, DEFAULT_LEBESGUE_GRID};
use crate::io::{replications_csv_string, write_text};
use crate::rng;
use crate::sampler::{posterior_mean_curve, run_chain, uniform_credible_band, PriorMean, SamplerConfig};

/// Source of the prior mean curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMeanSource {
    /// `Cp5` for Gaussian cases, `Config` for binary cases.
    #[default]
    Auto,
    /// Use `sampler.prior_mean` unchanged.
    Config,
    /// Empirical Bayes: the 5-function change-point fit.
    Cp5,
    /// Empirical Bayes: the 5-function maximum-contrast fit.
    Mce5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    /// Methods to run; `None` picks MCE for binary cases and CP for Gaussian cases.
    pub methods: Option<Vec<BaselineMethod>>,
    pub n_basis: Vec<usize>,
    pub n_angles: usize,
    pub band_halfwidth: f64,
    pub penalty: f64,
    pub undetected: UndetectedRays,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        let base = BaselineConfig::default();
        Self { methods: None, n_basis: vec![5, 31], n_angles: base.n_angles, band_halfwidth: base.band_halfwidth, penalty: base.penalty, undetected: base.undetected }
    }
}

impl BaselineSettings {
    fn methods_for(&self, case: CaseId) -> Vec<BaselineMethod> {
        match &self.methods {
            Some(m) => m.clone(),
            None if case.is_binary() => vec![BaselineMethod::Mce],
            None => vec![BaselineMethod::Cp],
        }
    }

    fn config(&self, n_basis: usize) -> BaselineConfig {
        BaselineConfig {
            n_angles: self.n_angles,
            band_halfwidth: self.band_halfwidth,
            n_basis,
            penalty: self.penalty,
            undetected: self.undetected,
            ..BaselineConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub case: CaseId,
    pub m: usize,
    /// Defaults to the case's standard parameters.
    pub params: Option<CaseParams>,
    pub replications: usize,
    pub master_seed: u64,
    pub sampler: SamplerConfig,
    pub baselines: BaselineSettings,
    pub prior_mean_source: PriorMeanSource,
    pub band_level: f64,
    pub lebesgue_grid: usize,
    /// Render the first replication as an SVG.
    pub figure: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            case: CaseId::B1,
            m: 100,
            params: None,
            replications: 10,
            master_seed: 2019,
            sampler: SamplerConfig { iterations: 6000, burn_in: 1000, ..SamplerConfig::default() },
            baselines: BaselineSettings::default(),
            prior_mean_source: PriorMeanSource::Auto,
            band_level: 0.95,
            lebesgue_grid: DEFAULT_LEBESGUE_GRID,
            figure: true,
            output_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn for_case(case: CaseId) -> Self {
        Self { case, ..Self::default() }
    }

    pub fn resolved_prior_mean_source(&self) -> PriorMeanSource {
        match self.prior_mean_source {
            PriorMeanSource::Auto if self.case.is_binary() => PriorMeanSource::Config,
            PriorMeanSource::Auto => PriorMeanSource::Cp5,
            other => other,
        }
    }

    pub fn case_params(&self) -> CaseParams {
        self.params.unwrap_or_else(|| self.case.default_params())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.m < 2 {
            return Err(Error::Config(format!("m must be at least 2, got {}", self.m)));
        }
        if !(self.band_level > 0.0 && self.band_level <= 1.0) {
            return Err(Error::Config(format!("band_level must be in (0, 1], got {}", self.band_level)));
        }
        if self.lebesgue_grid < 3 {
            return Err(Error::Config("lebesgue_grid must be at least 3".into()));
        }
        for &n in &self.baselines.n_basis {
            self.baselines.config(n).validate()?;
        }
        if self.resolved_prior_mean_source() != PriorMeanSource::Config && !self.baselines.n_basis.contains(&5) {
            self.baselines.config(5).validate()?;
        }
        self.sampler.validate()
    }

    /// Seed of replication `i`; images, baselines and chains derive from it.
    pub fn replication_seed(&self, i: usize) -> u64 {
        rng::derive_seed(self.master_seed, i as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub method: String,
    pub lebesgue_error: Option<f64>,
    /// `ok`, or the error kind of a failed fit.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesDiagnostics {
    pub replication: usize,
    pub band_multiplier: f64,
    pub band_covers_truth: bool,
    pub band_floored_points: usize,
    pub clamp_fraction: f64,
    pub mean_scale: f64,
    pub mean_precision: f64,
    pub rejected_noise_updates: u64,
    pub step_outs: u64,
    pub density_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean: f64,
    /// Sample standard deviation over `√n_ok`.
    pub se: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationTiming {
    pub replication: usize,
    pub bayes_seconds: f64,
    pub baseline_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<MethodSummary>,
    pub diagnostics: Vec<BayesDiagnostics>,
    pub timings: Vec<ReplicationTiming>,
    /// SVG of the first replication, when requested.
    pub figure: Option<String>,
}

impl StudyReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Smallest mean error among the baseline variants that completed.
    pub fn best_baseline(&self) -> Option<&MethodSummary> {
        self.summaries.iter().filter(|s| s.method != "bayes" && s.n_ok > 0).min_by(|a, b| a.mean.total_cmp(&b.mean))
    }
}

struct ReplicationOutcome {
    records: Vec<ReplicationRecord>,
    diagnostics: Option<BayesDiagnostics>,
    timing: ReplicationTiming,
    figure: Option<String>,
}

fn record(replication: usize, seed: u64, method: String, result: &Result<f64>) -> ReplicationRecord {
    match result {
        Ok(e) => ReplicationRecord { replication, seed, method, lebesgue_error: Some(*e), status: "ok".into() },
        Err(err) => ReplicationRecord { replication, seed, method, lebesgue_error: None, status: err.kind().into() },
    }
}

fn fit_baseline(method: BaselineMethod, sim: &SimulatedImage, config: &BaselineConfig) -> Result<BaselineFit> {
    match method {
        BaselineMethod::Mce => mce_baseline(&sim.image, config),
        BaselineMethod::Cp => cp_baseline(&sim.image, sim.case.fitted_family(), config),
    }
}

struct BayesOutcome {
    error: f64,
    diagnostics: BayesDiagnostics,
    figure: Option<String>,
}

fn run_bayes(config: &StudyConfig, i: usize, seed: u64, sim: &SimulatedImage, prior_mean: PriorMean) -> Result<BayesOutcome> {
    let chain_seed = rng::derive_seed(seed, 2);
    let sampler = SamplerConfig { seed: chain_seed, prior_mean, ..config.sampler.clone() };
    let draws = run_chain(&sim.image, sim.case.fitted_family(), &sampler, &mut rng::stream(chain_seed))?;
    let mean = posterior_mean_curve(&draws)?;
    let band = uniform_credible_band(&draws, config.band_level)?;
    let error = lebesgue_error(&mean, &sim.truth, config.lebesgue_grid);
    let avg = |f: &dyn Fn(&crate::sampler::ScalarDraw) -> Option<f64>| {
        let v: Vec<f64> = draws.scalars.iter().filter_map(f).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let d = &draws.diagnostics;
    let diagnostics = BayesDiagnostics {
        replication: i,
        band_multiplier: band.multiplier,
        band_covers_truth: band.contains(&sim.truth),
        band_floored_points: band.floored_points,
        clamp_fraction: d.clamp_fraction(),
        mean_scale: avg(&|s| s.scale),
        mean_precision: avg(&|s| s.precision),
        rejected_noise_updates: d.rejected_noise_updates,
        step_outs: d.step_outs,
        density_evaluations: d.density_evaluations,
    };
    let figure = if config.figure && i == 0 {
        let truth: Vec<f64> = draws.grid().iter().map(|&w| sim.truth.radius(w)).collect();
        Some(figure_svg(&sim.image, draws.grid(), &truth, mean.values(), Some(&band))?)
    } else {
        None
    };
    Ok(BayesOutcome { error, diagnostics, figure })
}

fn run_replication(config: &StudyConfig, i: usize) -> ReplicationOutcome {
    let seed = config.replication_seed(i);
    let methods = config.baselines.methods_for(config.case);
    let labels: Vec<(BaselineMethod, usize)> =
        methods.iter().flat_map(|&m| config.baselines.n_basis.iter().map(move |&n| (m, n))).collect();

    let sim = match simulate_case(config.case, config.m, config.case_params(), seed) {
        Ok(sim) => sim,
        Err(e) => {
            let err: Result<f64> = Err(e);
            let mut records = vec![record(i, seed, "bayes".into(), &err)];
            records.extend(labels.iter().map(|(m, n)| record(i, seed, format!("{m}{n}"), &err)));
            return ReplicationOutcome {
                records,
                diagnostics: None,
                timing: ReplicationTiming { replication: i, bayes_seconds: 0.0, baseline_seconds: 0.0 },
                figure: None,
            };
        }
    };

    let start = Instant::now();
    let mut baseline_records = Vec::new();
    let mut fits: BTreeMap<(BaselineMethod, usize), Result<BaselineFit>> = BTreeMap::new();
    for &(m, n) in &labels {
        let fit = fit_baseline(m, &sim, &config.baselines.config(n));
        let err = fit.as_ref().map(|f| lebesgue_error(f, &sim.truth, config.lebesgue_grid)).map_err(clone_error);
        baseline_records.push(record(i, seed, format!("{m}{n}"), &err));
        fits.insert((m, n), fit);
    }
    let baseline_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let source = config.resolved_prior_mean_source();
    let prior_mean = match source {
        PriorMeanSource::Auto | PriorMeanSource::Config => Ok(config.sampler.prior_mean.clone()),
        PriorMeanSource::Cp5 | PriorMeanSource::Mce5 => {
            let method = if source == PriorMeanSource::Cp5 { BaselineMethod::Cp } else { BaselineMethod::Mce };
            let fit = match fits.remove(&(method, 5)) {
                Some(f) => f,
                None => fit_baseline(method, &sim, &config.baselines.config(5)),
            };
            fit.and_then(|f| GridCurve::tabulate(&f, config.sampler.grid_size)).map(PriorMean::Tabulated)
        }
    };
    let bayes = prior_mean.and_then(|pm| run_bayes(config, i, seed, &sim, pm));
    let bayes_seconds = start.elapsed().as_secs_f64();

    let (bayes_err, diagnostics, figure) = match bayes {
        Ok(b) => (Ok(b.error), Some(b.diagnostics), b.figure),
        Err(e) => (Err(e), None, None),
    };
    let mut records = vec![record(i, seed, "bayes".into(), &bayes_err)];
    records.extend(baseline_records);
    ReplicationOutcome { records, diagnostics, timing: ReplicationTiming { replication: i, bayes_seconds, baseline_seconds }, figure }
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::InsufficientBandData { omega, count, required } => {
            Error::InsufficientBandData { omega: *omega, count: *count, required: *required }
        }
        other => Error::InvalidParameter(other.to_string()),
    }
}

/// Per-method mean and standard error over successful replications, in first-seen order.
pub fn summarize(records: &[ReplicationRecord]) -> Vec<MethodSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        if !groups.contains_key(&r.method) {
            order.push(r.method.clone());
        }
        let g = groups.entry(r.method.clone()).or_default();
        match r.lebesgue_error {
            Some(e) => g.0.push(e),
            None => g.1 += 1,
        }
    }
    order
        .into_iter()
        .map(|method| {
            let (errs, n_failed) = &groups[&method];
            let n = errs.len() as f64;
            let mean = if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / n };
            let se = if errs.len() < 2 {
                f64::NAN
            } else {
                (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            };
            MethodSummary { method, mean, se, n_ok: errs.len(), n_failed: *n_failed }
        })
        .collect()
}

/// Runs every replication (concurrently) and aggregates; writes outputs when
/// `output_dir` is set.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let outcomes: Vec<ReplicationOutcome> = (0..config.replications).into_par_iter().map(|i| run_replication(config, i)).collect();
    let mut report = StudyReport {
        config: config.clone(),
        records: Vec::new(),
        summaries: Vec::new(),
        diagnostics: Vec::new(),
        timings: Vec::new(),
        figure: None,
    };
    for o in outcomes {
        report.records.extend(o.records);
        report.diagnostics.extend(o.diagnostics);
        report.timings.push(o.timing);
        if o.figure.is_some() {
            report.figure = o.figure;
        }
    }
    report.summaries = summarize(&report.records);
    if let Some(dir) = &config.output_dir {
        write_study(&report, dir)?;
    }
    Ok(report)
}

pub fn summary_csv_string(summaries: &[MethodSummary]) -> String {
    let mut s = String::from("method,mean,se,n_ok,n_failed\n");
    for m in summaries {
        let _ = writeln!(s, "{},{},{},{},{}", m.method, m.mean, m.se, m.n_ok, m.n_failed);
    }
    s
}

pub fn diagnostics_csv_string(diagnostics: &[BayesDiagnostics]) -> String {
    let mut s = String::from(
        "replication,band_multiplier,band_covers_truth,band_floored_points,clamp_fraction,mean_scale,mean_precision,rejected_noise_updates,step_outs,density_evaluations\n",
    );
    for d in diagnostics {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            d.replication,
            d.band_multiplier,
            d.band_covers_truth,
            d.band_floored_points,
            d.clamp_fraction,
            d.mean_scale,
            d.mean_precision,
            d.rejected_noise_updates,
            d.step_outs,
            d.density_evaluations
        );
    }
    s
}

/// Writes `replications.csv`, `summary.csv`, `bayes_diagnostics.csv`,
/// `study_config.json`, `timing.json` and `figure.svg`.
pub fn write_study(report: &StudyReport, dir: &Path) -> Result<()> {
    write_text(&dir.join("replications.csv"), &replications_csv_string(&report.records))?;
    write_text(&dir.join("summary.csv"), &summary_csv_string(&report.summaries))?;
    write_text(&dir.join("bayes_diagnostics.csv"), &diagnostics_csv_string(&report.diagnostics))?;
    write_text(&dir.join("study_config.json"), &(serde_json::to_string_pretty(&report.config)? + "\n"))?;
    write_text(&dir.join("timing.json"), &(serde_json::to_string_pretty(&report.timings)? + "\n"))?;
    if let Some(svg) = &report.figure {
        write_text(&dir.join("figure.svg"), svg)?;
    }
    Ok(())
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{:.2}", 100.0 * v)
    } else {
        "NA".into()
    }
}

/// Table of mean Lebesgue errors (×10⁻²) with standard errors in parentheses.
pub fn format_report(summaries: &[MethodSummary]) -> String {
    let mut s = String::from("Lebesgue error (x 1e-2), standard error in parentheses\n");
    let _ = writeln!(s, "{:<8} {:>10} {:>10} {:>6} {:>8}", "method", "mean", "(se)", "ok", "failed");
    for m in summaries {
        let _ = writeln!(s, "{:<8} {:>10} {:>10} {:>6} {:>8}", m.method, cell(m.mean), format!("({})", cell(m.se)), m.n_ok, m.n_failed);
    }
    s
}
