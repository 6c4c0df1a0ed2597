//! Simulation cases, baselines, replication studies and figures.

mod baselines;
mod cases;
mod figure;
mod study;

pub use baselines::{cp_baseline, fourier_ridge, mce_baseline, BaselineConfig, BaselineFit, BaselineMethod, UndetectedRays};
pub use cases::{simulate_case, CaseId, CaseParams, SimulatedImage};
pub use figure::{band_polygon, figure_svg, render_figure};
pub use study::{
    diagnostics_csv_string, format_report, run_study, summarize, summary_csv_string, write_study, BaselineSettings,
    BayesDiagnostics, MethodSummary, PriorMeanSource, ReplicationRecord, ReplicationTiming, StudyConfig, StudyReport,
};
