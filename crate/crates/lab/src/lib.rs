//! Batch runner for the hyperlab experiments: configuration, reports and figures.

pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;

use std::fmt;
use std::path::{Path, PathBuf};

use hyperlab_core::connect::{estimate_d, ConnectOptions};
use hyperlab_core::group::genus2_group;
use hyperlab_core::metric::{parse_metric, verify_metric};
use num_complex::Complex64;

use config::{ConfigError, ExperimentConfig, Kind};
use experiments::{run_kind, Context};
use report::{write_reports, Header, Status};
use svg::{render_svg, View};

/// Why a run stopped, with its process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(PathBuf, std::io::Error),
    Solver(hyperlab_core::error::Error),
    Figure(svg::SvgError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Io(..) | RunError::Solver(_) | RunError::Figure(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            RunError::Solver(e) => write!(f, "solver error: {e}"),
            RunError::Figure(e) => write!(f, "figure error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<hyperlab_core::error::Error> for RunError {
    fn from(e: hyperlab_core::error::Error) -> Self {
        RunError::Solver(e)
    }
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub status: Status,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass | Status::Measured => 0,
            Status::Fail => 2,
        }
    }
}

/// Reads and validates a config file, applying command-line overrides.
pub fn load_config(kind: Kind, path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(ConfigError {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    }))?;
    let group = genus2_group();
    let mut cfg = ExperimentConfig::parse(kind, &text, &group).map_err(RunError::Config)?;
    if let Some(s) = seed {
        cfg.set("seed", &s.to_string(), &group).map_err(RunError::Config)?;
    }
    if let Some(o) = out {
        cfg.set("out", &o.to_string_lossy(), &group).map_err(RunError::Config)?;
    }
    Ok(cfg)
}

/// Executes the experiment and writes `report.txt`, `report.csv`, `paths/*.csv` and `figure.svg`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let group = genus2_group();
    let metric = parse_metric(cfg.text("metric"), &group)?;
    let seed = cfg.seed();
    let invariant = metric.gamma_invariant().then_some(&group);
    let c_f = verify_metric(metric.as_ref(), invariant, cfg.count("c_f_samples"), seed).constants.c_f;
    let (d_est, d_source) = match (cfg.kind, cfg.auto_float("d_est")) {
        (_, Some(d)) => (d, "config".to_string()),
        // the run itself produces the estimate
        (Kind::EstimateD, None) => (f64::NAN, "this run".to_string()),
        (_, None) => {
            let n = cfg.count("d_samples");
            let sep = cfg.float("d_separation");
            let est = estimate_d(metric.as_ref(), n, sep, seed, &ConnectOptions::default());
            (est.d_est, format!("estimated from {n} pairs at separation {sep}"))
        }
    };
    let ctx = Context {
        group,
        metric: metric.clone(),
        seed,
        c_f,
        d_est,
    };
    let outcome = run_kind(cfg, &ctx)?;
    let d_est = if d_est.is_nan() {
        outcome
            .results
            .iter()
            .find(|r| r.0 == "d_est")
            .and_then(|r| r.1.parse().ok())
            .unwrap_or(f64::NAN)
    } else {
        d_est
    };
    let header = Header {
        kind: cfg.kind.name().to_string(),
        seed,
        metric: metric.id(),
        c_f,
        d_est,
        d_source,
        // where the files go is not part of the experiment
        config: cfg.resolved().into_iter().filter(|(k, _)| *k != "out").collect(),
    };
    let dir = cfg.out_dir();
    let (cx, cy) = cfg.point("view_center");
    let view = View {
        center: Complex64::new(cx, cy),
        half_width: cfg.float("view_radius"),
    };
    write_reports(&dir, &header, &outcome).map_err(|e| RunError::Io(dir.clone(), e))?;
    let paths: Vec<_> = outcome.paths.iter().map(|p| (p.role, p.points.clone())).collect();
    let figure = render_svg(&paths, view).map_err(RunError::Figure)?;
    std::fs::write(dir.join("figure.svg"), figure).map_err(|e| RunError::Io(dir.join("figure.svg"), e))?;
    Ok(RunSummary {
        status: outcome.status(),
        out_dir: dir,
    })
}
