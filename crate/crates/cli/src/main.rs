//! `bdgp`: simulate images, detect boundaries, run baselines and studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boundary_gp::geometry::{lebesgue_error, Boundary, GridCurve, DEFAULT_LEBESGUE_GRID};
use boundary_gp::harness::{
    cp_baseline, format_report, mce_baseline, render_figure, run_study, simulate_case, summarize, BaselineConfig,
    CaseId, CaseParams,
};
use boundary_gp::io::{self, ImageMetadata};
use boundary_gp::models::{GaussianOrder, NoiseFamily};
use boundary_gp::rng;
use boundary_gp::sampler::{
    posterior_mean_curve, run_chain, run_random_series_chain, uniform_credible_band, SamplerConfig, SeriesConfig,
};
use boundary_gp::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bdgp", version, about = "Bayesian boundary detection for star-shaped regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Bernoulli,
    Gaussian,
    Poisson,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    MeanEqualVariance,
    MeanAndVariance,
    VarianceEqualMean,
    Variance,
}

impl From<OrderArg> for GaussianOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::MeanEqualVariance => GaussianOrder::MeanEqualVariance,
            OrderArg::MeanAndVariance => GaussianOrder::MeanAndVariance,
            OrderArg::VarianceEqualMean => GaussianOrder::VarianceEqualMean,
            OrderArg::Variance => GaussianOrder::Variance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a case image and write `omega,r,y` plus `<stem>.meta.json`.
    Simulate {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        p_in: f64,
        #[arg(long, default_value_t = 0.2)]
        p_out: f64,
        #[arg(long, default_value_t = 1.5)]
        sd_in: f64,
        #[arg(long, default_value_t = 1.0)]
        sd_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sampler on an image and write draws, band and summary.
    Detect {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the family recorded in the image metadata.
        #[arg(long, value_enum)]
        noise: Option<NoiseArg>,
        #[arg(long, value_enum)]
        gaussian_order: Option<OrderArg>,
        /// Total iterations, burn-in included.
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 10)]
        j: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Use the fixed-order random-series sampler instead of the Gibbs sampler.
        #[arg(long)]
        series: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit a maximum-contrast or change-point baseline and write `omega,radius`.
    Baseline {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        n_basis: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replication study from a JSON or TOML config.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the error table of a finished study.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mce,
    Cp,
}

fn resolve_family(noise: Option<NoiseArg>, order: Option<OrderArg>, meta: Option<&ImageMetadata>) -> Result<NoiseFamily> {
    let recorded = meta.map(|m| m.family);
    let family = match noise {
        None => recorded.ok_or_else(|| Error::Config("--noise is required when the image has no metadata".into()))?,
        Some(NoiseArg::Bernoulli) => NoiseFamily::Bernoulli,
        Some(NoiseArg::Poisson) => NoiseFamily::Poisson,
        Some(NoiseArg::Exponential) => NoiseFamily::Exponential,
        Some(NoiseArg::Gaussian) => match recorded {
            Some(f @ NoiseFamily::Gaussian { .. }) => f,
            _ => NoiseFamily::Gaussian { order: GaussianOrder::default() },
        },
    };
    Ok(match (family, order) {
        (NoiseFamily::Gaussian { .. }, Some(o)) => NoiseFamily::Gaussian { order: o.into() },
        (_, Some(_)) => return Err(Error::Config("--gaussian-order only applies to gaussian noise".into())),
        (f, None) => f,
    })
}

fn simulate(case: &str, m: usize, params: (f64, f64, f64, f64), seed: u64, out: &Path) -> Result<()> {
    let case: CaseId = case.parse()?;
    let params = if case.is_binary() {
        CaseParams::Binary { p_in: params.0, p_out: params.1 }
    } else {
        CaseParams::Gaussian { sd_in: params.2, sd_out: params.3 }
    };
    let sim = simulate_case(case, m, params, seed)?;
    let meta = ImageMetadata {
        case: Some(case),
        design: sim.image.design,
        m: Some(m),
        seed,
        family: case.fitted_family(),
        params: Some(params),
        shape: Some(sim.truth),
    };
    io::write_image(out, &sim.image, Some(&meta))?;
    println!("{}", serde_json::json!({ "pixels": sim.image.len(), "out": out, "meta": io::metadata_path(out) }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn detect(
    input: &Path,
    noise: Option<NoiseArg>,
    order: Option<OrderArg>,
    config: SamplerConfig,
    level: f64,
    series: bool,
    out_dir: &Path,
) -> Result<()> {
    let (image, meta) = io::read_image(input)?;
    let family = resolve_family(noise, order, meta.as_ref())?;
    let mut rng = rng::stream(config.seed);
    let draws = if series {
        run_random_series_chain(&image, family, config.half_order, &config, &SeriesConfig::default(), &mut rng)?
    } else {
        run_chain(&image, family, &config, &mut rng)?
    };
    let mean = posterior_mean_curve(&draws)?;
    let band = uniform_credible_band(&draws, level)?;
    io::write_text(&out_dir.join("draws.csv"), &io::draws_csv_string(&draws))?;
    io::write_text(&out_dir.join("scalars.csv"), &io::scalar_draws_csv_string(&draws.scalars))?;
    io::write_text(&out_dir.join("band.csv"), &io::band_csv_string(&band))?;
    io::write_text(&out_dir.join("estimate.csv"), &io::curve_csv_string(draws.grid(), mean.values()))?;

    let truth = meta.as_ref().and_then(|m| m.shape);
    let error = truth.as_ref().map(|t| lebesgue_error(&mean, t, DEFAULT_LEBESGUE_GRID));
    if let Some(t) = &truth {
        let values: Vec<f64> = draws.grid().iter().map(|&w| t.radius(w)).collect();
        render_figure(&image, draws.grid(), &values, mean.values(), Some(&band), &out_dir.join("figure.svg"))?;
    }
    let d = &draws.diagnostics;
    let summary = serde_json::json!({
        "family": family,
        "draws": draws.len(),
        "band_level": level,
        "band_multiplier": band.multiplier,
        "band_floored_points": band.floored_points,
        "band_covers_truth": truth.as_ref().map(|t| band.contains(t)),
        "lebesgue_error": error,
        "clamp_fraction": d.clamp_fraction(),
        "density_evaluations": d.density_evaluations,
        "step_outs": d.step_outs,
        "rejected_noise_updates": d.rejected_noise_updates,
        "acceptance_rate": d.acceptance_rate,
    });
    io::write_text(&out_dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    println!("{summary}");
    Ok(())
}

fn baseline(method: MethodArg, n_basis: usize, input: &Path, out: &Path) -> Result<()> {
    let (image, meta) = io::read_image(input)?;
    let config = BaselineConfig::default().with_basis(n_basis);
    let fit = match method {
        MethodArg::Mce => mce_baseline(&image, &config)?,
        MethodArg::Cp => {
            let family = meta.as_ref().map(|m| m.family).unwrap_or_else(|| {
                if image.observations.iter().all(|p| p.y == 0.0 || p.y == 1.0) {
                    NoiseFamily::Bernoulli
                } else {
                    NoiseFamily::Gaussian { order: GaussianOrder::default() }
                }
            });
            cp_baseline(&image, family, &config)?
        }
    };
    let curve = GridCurve::tabulate(&fit, config.n_angles)?;
    io::write_text(out, &io::curve_csv_string(&curve.angles(), curve.values()))?;
    let error = meta
        .and_then(|m| m.shape)
        .map(|t| lebesgue_error(&fit, &t, DEFAULT_LEBESGUE_GRID));
    println!(
        "{}",
        serde_json::json!({ "method": format!("{}{n_basis}", fit.method), "detected_fraction": fit.detected_fraction(), "lebesgue_error": error })
    );
    Ok(())
}

fn study(config_path: &Path, out_dir: &Path) -> Result<()> {
    let mut config = io::read_study_config(config_path)?;
    config.output_dir = Some(out_dir.to_path_buf());
    let report = run_study(&config)?;
    print!("{}", format_report(&report.summaries));
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(dir.join("replications.csv"))?;
    let records = io::parse_replications_csv(&text)?;
    print!("{}", format_report(&summarize(&records)));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { case, m, p_in, p_out, sd_in, sd_out, seed, out } => {
            simulate(&case, m, (p_in, p_out, sd_in, sd_out), seed, &out)
        }
        Command::Detect { input, noise, gaussian_order, iters, burnin, thin, j, seed, level, series, out_dir } => {
            let config = SamplerConfig { iterations: iters, burn_in: burnin, thinning: thin, half_order: j, seed, ..SamplerConfig::default() };
            detect(&input, noise, gaussian_order, config, level, series, &out_dir)
        }
        Command::Baseline { method, n_basis, input, out } => baseline(method, n_basis, &input, &out),
        Command::Study { config, out_dir } => study(&config, &out_dir),
        Command::Report { dir } => report(&dir),
    }
}

fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
