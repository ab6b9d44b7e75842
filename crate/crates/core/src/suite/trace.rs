//! Line-delimited trajectory export for geodesic runs.

use std::io::Write;

use serde::Serialize;

use super::manifest::{to_point, Scalar, Suite};
use super::report::canonical_json;
use crate::error::{Error, Result};
use crate::nullgeo::{sample_times, Flow, GeodesicState};
use crate::scalar::{Mode, C64};
use crate::tensor::{bilinear, MetricField};

#[derive(Debug, Clone, Serialize)]
struct Sample {
    s: f64,
    x: Vec<Scalar>,
    v: Vec<Scalar>,
    gvv: Scalar,
}

#[derive(Debug, Clone, Serialize)]
struct Status {
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    samples: usize,
    max_drift: f64,
    last: Sample,
}

/// Outcome of a trace, mirroring the terminal status record.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub status: String,
    pub samples: usize,
    pub max_drift: f64,
}

fn status_name(e: &Error) -> &'static str {
    match e {
        Error::LeftDomain { .. } => "LeftDomain",
        Error::StepFailure { .. } => "StepFailure",
        Error::DegenerateMetric { .. } => "DegenerateMetric",
        Error::Eval(_) => "EvalError",
        _ => "Error",
    }
}

fn sample(field: &dyn MetricField, st: &GeodesicState) -> Result<Sample> {
    let mode = field.mode();
    let g = field.metric_values(&st.x)?;
    let conv = |v: &[C64]| v.iter().map(|c| Scalar::from_c64(*c, mode)).collect();
    Ok(Sample { s: st.s, x: conv(&st.x), v: conv(&st.v), gvv: Scalar::from_c64(bilinear(&g, &st.v, &st.v), mode) })
}

fn write_line<T: Serialize>(out: &mut impl Write, record: &T) -> Result<()> {
    writeln!(out, "{}", canonical_json(record)).map_err(|e| Error::InvalidArgument(format!("cannot write trace: {e}")))
}

/// Integrates the named run sample by sample, writing one JSON record per
/// sample and a terminal status record. Integrator failures end the file
/// with their status and the last valid state instead of an error.
pub fn trace_geodesic(suite: &Suite, run: &str, out: &mut impl Write) -> Result<TraceSummary> {
    let block = suite
        .manifest
        .geodesics
        .iter()
        .find(|b| b.name == run)
        .ok_or_else(|| Error::InvalidArgument(format!("no geodesic run named '{run}'")))?;
    let chart = &suite.charts[&block.chart].members[0];
    let mut state = GeodesicState { s: 0.0, x: to_point(&block.x0), v: to_point(&block.v0) };
    let g0 = chart.metric_values(&state.x)?;
    let q0 = bilinear(&g0, &state.v, &state.v);
    let mut max_drift = 0.0f64;
    let mut written = 0;
    let mut failure = None;
    let first = sample(chart, &state);
    match first {
        Ok(s) => {
            write_line(out, &s)?;
            written += 1;
        }
        Err(e) => failure = Some(e),
    }
    if failure.is_none() {
        for t in sample_times(0.0, block.s_end, block.samples) {
            let step = Flow::new(chart).integrate(&state, &[t]).and_then(|p| {
                let next = p.last().state.clone();
                sample(chart, &next).map(|s| (next, s))
            });
            match step {
                Ok((next, s)) => {
                    let g = chart.metric_values(&next.x)?;
                    max_drift = max_drift.max((bilinear(&g, &next.v, &next.v) - q0).norm());
                    write_line(out, &s)?;
                    written += 1;
                    state = next;
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
    }
    let last = sample(chart, &state).unwrap_or_else(|_| {
        let conv = |v: &[C64]| v.iter().map(|c| Scalar::from_c64(*c, Mode::Complex)).collect();
        Sample { s: state.s, x: conv(&state.x), v: conv(&state.v), gvv: Scalar::Real(f64::NAN) }
    });
    let status = Status {
        status: failure.as_ref().map_or("ok", status_name).to_string(),
        message: failure.as_ref().map(|e| e.to_string()),
        samples: written,
        max_drift,
        last,
    };
    write_line(out, &status)?;
    Ok(TraceSummary { status: status.status, samples: written, max_drift })
}
