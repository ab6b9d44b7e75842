use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conftk::exprlang::parse;
use conftk::suite::{load_manifest, run_suite, trace_geodesic, ManifestError, RunOptions, Suite};
use conftk::tensor::{CurvaturePack, MetricField, TensorAtPoint};
use conftk::{Mode, C64};

const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "conftk", version, about = "Conformal curvature verification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a manifest and print a report.
    Check {
        manifest: PathBuf,
        /// Comma-separated check ids or names.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Write the canonical JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cross-check jet quantities against finite differences.
        #[arg(long)]
        fd: bool,
        /// Jet order for pointwise curvature (3 or 4).
        #[arg(long)]
        order: Option<usize>,
        /// Worker threads (0 for one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Integrate a geodesic run and write line-delimited samples.
    Geodesic {
        manifest: PathBuf,
        #[arg(long)]
        run: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the curvature of a chart at a point.
    Curvature {
        manifest: PathBuf,
        #[arg(long)]
        chart: String,
        /// Comma-separated coordinate values; each may be an expression.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<String>,
    },
}

fn load(path: &Path) -> Result<Suite, ExitCode> {
    load_manifest(path).map_err(|errors: Vec<ManifestError>| {
        eprintln!("invalid manifest {}:", path.display());
        for e in &errors {
            eprintln!("  {e}");
        }
        ExitCode::from(EXIT_INVALID)
    })
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn check(
    manifest: &Path,
    only: Vec<String>,
    report_path: Option<PathBuf>,
    seed: Option<u64>,
    fd: bool,
    order: Option<usize>,
    jobs: usize,
) -> ExitCode {
    let suite = match load(manifest) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let report = match run_suite(&suite, &RunOptions { only, seed, fd, order, jobs }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    print!("{}", report.to_text());
    if let Some(p) = report_path {
        if let Err(e) = std::fs::write(&p, report.to_canonical_json() + "\n") {
            return fail(format!("cannot write {}: {e}", p.display()));
        }
    }
    ExitCode::from(report.exit_code() as u8)
}

fn geodesic(manifest: &Path, run: &str, out: &Path) -> ExitCode {
    let suite = match load(manifest) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let file = match File::create(out) {
        Ok(f) => f,
        Err(e) => return fail(format!("cannot create {}: {e}", out.display())),
    };
    let mut w = BufWriter::new(file);
    let summary = match trace_geodesic(&suite, run, &mut w).and_then(|s| w.flush().map(|_| s).map_err(|e| conftk::Error::InvalidArgument(e.to_string()))) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    println!("{}: {} samples, max drift {:.3e}, status {}", run, summary.samples, summary.max_drift, summary.status);
    if summary.status == "ok" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn format_scalar(c: C64, mode: Mode) -> String {
    match mode {
        Mode::Real => format!("{:+.12e}", c.re),
        Mode::Complex => format!("{:+.12e} {:+.12e}i", c.re, c.im),
    }
}

fn print_tensor(label: &str, t: &TensorAtPoint, mode: Mode) {
    let nonzero: Vec<(usize, &C64)> = t.data().iter().enumerate().filter(|(_, v)| v.norm() > 1e-13).collect();
    println!("{label}  (norm {:.6e}, {} nonzero)", t.norm(), nonzero.len());
    let (n, rank) = (t.dim(), t.rank());
    for (flat, v) in nonzero {
        let idx: Vec<String> = (0..rank).rev().map(|s| ((flat / n.pow(s as u32)) % n).to_string()).collect();
        println!("  [{}] {}", idx.join(","), format_scalar(*v, mode));
    }
}

fn curvature(manifest: &Path, chart: &str, at: &[String]) -> ExitCode {
    let suite = match load(manifest) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let Some(family) = suite.charts.get(chart) else {
        return fail(format!("no chart named '{chart}'"));
    };
    let field = &family.members[0];
    let mut point = Vec::with_capacity(at.len());
    for src in at {
        match parse(src).map_err(|e| e.to_string()).and_then(|e| e.eval_value(&[], &[], &[], Mode::Complex).map_err(|e| e.to_string())) {
            Ok(v) if field.mode() == Mode::Real && v.im != 0.0 => return fail(format!("'{src}' is complex in a real chart")),
            Ok(v) => point.push(v),
            Err(e) => return fail(format!("'{src}': {e}")),
        }
    }
    let pack = match CurvaturePack::compute(field, &point) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let mode = pack.mode;
    let coords = field.coordinates();
    let at: Vec<String> = coords.iter().zip(&point).map(|(c, v)| format!("{c}={}", format_scalar(*v, mode))).collect();
    println!("chart {}  at {}", field.name, at.join(" "));
    print_tensor("g_ij", &pack.g, mode);
    print_tensor("Gamma^k_ij [k,i,j]", &pack.gamma, mode);
    print_tensor("R_ijkl", &pack.riemann_down, mode);
    print_tensor("Ric_ij", &pack.ricci, mode);
    println!("Scal  {}", format_scalar(pack.scal, mode));
    print_tensor("h_ij", &pack.h, mode);
    print_tensor("W_ijkl", &pack.weyl_down, mode);
    print_tensor("C_ijk", &pack.cotton, mode);
    print_tensor("dW_ijk", &pack.div_weyl, mode);
    if let Some(sd) = &pack.self_dual {
        println!("|W+| {:.6e}  |W-| {:.6e}  (orientation {})", sd.weyl_plus.norm(), sd.weyl_minus.norm(), pack.orientation);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let code = match cli.command {
        Command::Check { manifest, only, report, seed, fd, order, jobs } => check(&manifest, only, report, seed, fd, order, jobs),
        Command::Geodesic { manifest, run, out } => geodesic(&manifest, &run, &out),
        Command::Curvature { manifest, chart, at } => curvature(&manifest, &chart, &at),
    };
    let _ = std::io::stdout().flush();
    code
}
