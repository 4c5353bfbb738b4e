use std::path::PathBuf;
use std::time::Instant;

use nnta::metrics::relative_errors;
use nnta::nlrt::{nlrt_auxiliary, nlrt_iterate};
use nnta::tt::{nttsvd, ttsvd};
use nnta::tucker::{nsthosvd, sthosvd};
use nnta::{ConvergenceTrace, DenseTensor, NlrtState, ProjectionOptions, QualityReport, TraceRow};
use serde::{Deserialize, Serialize};

use crate::artifacts::{create_dir, save_decomposition, write_json, write_trace_csv, Decomposition};
use crate::bench::median;
use crate::config::{ExperimentConfig, Format, Method};
use crate::error::Result;

/// Solver output before anything is written.
#[derive(Debug, Clone)]
pub struct Solved {
    pub decomposition: Decomposition,
    /// One trace, or one per component for NLRT.
    pub traces: Vec<ConvergenceTrace>,
}

impl Solved {
    /// Per-iteration wall times of the primary trace with the first
    /// (warm-up) iteration dropped when there is more than one.
    pub fn steady_iteration_times(&self) -> Vec<f64> {
        let times = self.traces[0].iteration_times();
        if times.len() > 1 {
            times[1..].to_vec()
        } else {
            times
        }
    }
}

fn plain_trace(x: &DenseTensor, approx: &DenseTensor, elapsed_s: f64) -> Result<ConvergenceTrace> {
    let (fro, cheb) = relative_errors(x, approx)?;
    Ok(ConvergenceTrace {
        rows: vec![TraceRow {
            iteration: 1,
            negativity: approx.negativity_stats(),
            rel_err_frobenius: fro,
            rel_err_chebyshev: cheb,
            elapsed_s,
        }],
    })
}

/// Runs the configured method on `x`.
pub fn solve(config: &ExperimentConfig, x: &DenseTensor) -> Result<Solved> {
    config.check_ranks(x.order())?;
    let strategy = config.strategy()?;
    let mut options = ProjectionOptions::new(config.iterations, strategy);
    options.stop_below = config.stop_below;
    let ranks = &config.ranks;
    Ok(match (config.method, config.format) {
        (Method::Plain, format) => {
            let start = Instant::now();
            let decomposition = match format {
                Format::Tucker => Decomposition::Tucker(sthosvd(x, ranks, &strategy)?),
                Format::Tt => Decomposition::Tt(ttsvd(x, ranks, &strategy)?),
            };
            let approx = decomposition.reconstruct();
            let elapsed = start.elapsed().as_secs_f64();
            Solved {
                traces: vec![plain_trace(x, &approx, elapsed)?],
                decomposition,
            }
        }
        (Method::Projection, Format::Tucker) => {
            let (t, trace) = nsthosvd(x, ranks, &options)?;
            Solved {
                decomposition: Decomposition::Tucker(t),
                traces: vec![trace],
            }
        }
        (Method::Projection, Format::Tt) => {
            let (t, trace) = nttsvd(x, ranks, &options)?;
            Solved {
                decomposition: Decomposition::Tt(t),
                traces: vec![trace],
            }
        }
        (Method::Nlrt, _) => {
            let state = NlrtState::from_tensor(x, ranks)?;
            let (state, traces) = nlrt_iterate(x, state, config.iterations)?;
            Solved {
                decomposition: Decomposition::Tucker(nlrt_auxiliary(&state)?),
                traces,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Cumulative time of the projection steps, metric evaluation excluded.
    pub solver_s: f64,
    /// Median per-iteration time with the warm-up iteration excluded.
    pub per_iteration_median_s: f64,
    /// Whole run including loading, metrics and output.
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub trace: PathBuf,
    /// NLRT writes one trace per component; `trace` is the first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_traces: Vec<PathBuf>,
    pub report: PathBuf,
    pub manifest: PathBuf,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    /// Of the final approximant (the auxiliary tensor for NLRT).
    pub quality: QualityReport,
    pub iterations_run: usize,
    /// Absent when timings are omitted.
    pub timings: Option<Timings>,
    pub artifacts: Artifacts,
}

/// Loads the dataset, solves, and writes the trace CSV, the decomposition
/// directory and the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let x = config.dataset.load()?;
    let solved = solve(config, &x)?;
    let quality = QualityReport::evaluate(&x, &solved.decomposition.reconstruct())?;

    create_dir(&config.out_dir)?;
    let trace = config.trace_path();
    write_trace_csv(&trace, &solved.traces[0], config.omit_timings)?;
    let mut component_traces = Vec::new();
    if solved.traces.len() > 1 {
        for (k, t) in solved.traces.iter().enumerate() {
            let path = config.out_dir.join(format!("trace.component{}.csv", k + 1));
            write_trace_csv(&path, t, config.omit_timings)?;
            component_traces.push(path);
        }
    }
    let manifest = save_decomposition(&config.decomposition_dir(), &solved.decomposition)?;

    let primary = &solved.traces[0];
    let timings = (!config.omit_timings).then(|| Timings {
        solver_s: primary.last().map_or(0.0, |r| r.elapsed_s),
        per_iteration_median_s: median(&solved.steady_iteration_times()),
        wall_clock_s: start.elapsed().as_secs_f64(),
    });
    let report = RunReport {
        version: nnta::VERSION.into(),
        config: config.clone(),
        quality,
        iterations_run: primary.len(),
        timings,
        artifacts: Artifacts {
            trace,
            component_traces,
            report: config.report_path(),
            manifest,
        },
    };
    write_json(&config.report_path(), &report)?;
    Ok(report)
}
