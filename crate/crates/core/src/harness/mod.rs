//! Experiment driver: repeated runs, regret curves, bootstrap statistics,
//! the external-objective protocol and report emission.

mod experiment;
mod external;
mod stats;
mod svg;

pub use experiment::{
    raw_csv_header, regenerate_summary, run_experiment, verify_dir, ExperimentOutcome, ExperimentSpec, Metric,
    NamedPolicy, ObjectiveSource, PolicyCurves, PolicyFailure, PolicySummary, RegretReport, Summary, CHART_SVG,
    RAW_CSV, SUMMARY_JSON,
};
pub use external::{ExternalObjective, DEFAULT_TIMEOUT};
pub use stats::{bootstrap_stats, log_regret, regret_curve, REGRET_FLOOR};
pub use svg::render_svg;
