//! Manifest-driven verification runs: strict manifests, named checks,
//! deterministic reports and trajectory export.

mod checks;
pub mod manifest;
pub mod report;
mod trace;

use std::time::Instant;

use rayon::prelude::*;

pub use checks::SCALE_FLOOR;
pub use manifest::{load_manifest, parse_manifest, CheckName, Manifest, ManifestError, ManifestErrorKind, Suite};
pub use report::{canonical_json, CheckRecord, Criterion, Report, Verdict};
pub use trace::{trace_geodesic, TraceSummary};

use crate::error::{Error, Result};
use manifest::{CheckBlock, Scalar};
use report::{sha256_hex, ReportSettings};

/// Command-line overrides and filters for a suite run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Check ids or names to run; all when empty.
    pub only: Vec<String>,
    pub seed: Option<u64>,
    pub fd: bool,
    pub order: Option<usize>,
    /// Worker threads; 0 picks the default.
    pub jobs: usize,
}

/// 64-bit FNV-1a, for per-check seeds that do not depend on check order.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn check_seed(block: &CheckBlock, suite_seed: Option<u64>) -> u64 {
    block.seed.unwrap_or_else(|| fnv1a(&block.id()) ^ suite_seed.unwrap_or(0))
}

fn target(block: &CheckBlock) -> String {
    block.chart.clone().or_else(|| block.hypersurface.clone()).or_else(|| block.run.clone()).unwrap_or_default()
}

/// Digest of a check block together with the blocks it references and the
/// settings that affect it.
fn inputs_digest(suite: &Suite, block: &CheckBlock, settings: &ReportSettings) -> String {
    let m = &suite.manifest;
    let mut charts: Vec<&str> = block.chart.iter().map(String::as_str).collect();
    let hyp = block.hypersurface.as_ref().and_then(|h| m.hypersurfaces.iter().find(|b| &b.name == h));
    let run = block.run.as_ref().and_then(|r| m.geodesics.iter().find(|b| &b.name == r));
    charts.extend(hyp.map(|h| h.chart.as_str()));
    charts.extend(run.map(|r| r.chart.as_str()));
    let chart_blocks: Vec<_> = m.charts.iter().filter(|c| charts.contains(&c.name.as_str())).collect();
    let orientation: Vec<_> = m.settings.orientation.iter().filter(|(k, _)| charts.contains(&k.as_str())).collect();
    let doc = serde_json::json!({
        "check": block,
        "charts": chart_blocks,
        "hypersurface": hyp,
        "run": run,
        "orientation": orientation,
        "settings": settings,
        "samples": m.settings.samples,
    });
    sha256_hex(canonical_json(&doc).as_bytes())
}

fn run_one(suite: &Suite, block: &CheckBlock, settings: &ReportSettings) -> CheckRecord {
    let start = Instant::now();
    let seed = check_seed(block, settings.seed);
    let ctx = checks::Ctx { suite, block, seed, order: settings.order, fd: settings.fd };
    let mut tally = checks::Tally::default();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| checks::run(&ctx, &mut tally)))
        .unwrap_or_else(|_| Err(Error::InvalidArgument("check panicked".into())));
    let criteria = tally.criteria();
    let (verdict, error) = match outcome {
        Err(e) => (Verdict::Error, Some(e.to_string())),
        Ok(()) if criteria.is_empty() => (Verdict::Error, Some("no criteria were evaluated".into())),
        Ok(()) if criteria.iter().all(|c| c.pass) => (Verdict::Pass, None),
        Ok(()) => (Verdict::Fail, None),
    };
    let mode = tally.mode.unwrap_or(crate::Mode::Real);
    CheckRecord {
        id: block.id(),
        name: block.name,
        target: target(block),
        verdict,
        seed,
        inputs_digest: inputs_digest(suite, block, settings),
        points: tally.points.iter().map(|p| p.iter().map(|c| Scalar::from_c64(*c, mode)).collect()).collect(),
        criteria,
        info: tally.info.into_iter().filter(|(_, v)| v.is_finite()).collect(),
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs the selected checks, concurrently, and assembles the report in
/// manifest order.
pub fn run_suite(suite: &Suite, opts: &RunOptions) -> Result<Report> {
    let s = &suite.manifest.settings;
    let order = opts.order.unwrap_or(s.order);
    if !(crate::tensor::PACK_ORDER..=crate::exprlang::MAX_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!("jet order {order} outside 3..=4")));
    }
    let settings = ReportSettings { seed: opts.seed.or(s.seed), order, fd: opts.fd || s.fd, fd_tol: s.fd_tol, fd_step: s.fd_step };
    let selected: Vec<&CheckBlock> = suite
        .manifest
        .checks
        .iter()
        .filter(|c| opts.only.is_empty() || opts.only.iter().any(|o| *o == c.id() || o == c.name.as_str()))
        .collect();
    for o in &opts.only {
        if !suite.manifest.checks.iter().any(|c| *o == c.id() || o == c.name.as_str()) {
            return Err(Error::InvalidArgument(format!("no check matches '{o}'")));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start workers: {e}")))?;
    let records: Vec<CheckRecord> = pool.install(|| selected.par_iter().map(|b| run_one(suite, b, &settings)).collect());
    let manifest_digest = sha256_hex(canonical_json(&suite.manifest).as_bytes());
    Ok(Report::new(manifest_digest, settings, records))
}
