//! Acceptance criteria of the toolkit. Runs as a plain binary so every
//! criterion prints one PASS or FAIL line even when the run succeeds.

use std::path::PathBuf;
use std::process::{Command, ExitCode};

use conftk::conformal::{cy_transform_from_packs, rescale};
use conftk::exprlang::parse;
use conftk::fourdim::{oriented_frame, weyl_pm};
use conftk::random::{interior_points, potential_source, random_metric, rng, MetricRecipe, COORDINATES};
use conftk::scalar::re;
use conftk::suite::{load_manifest, run_suite, CheckName, Report, RunOptions, Verdict};
use conftk::tensor::{fd_oracle, CurvaturePack, FdQuantity, MetricChart, TensorAtPoint};
use conftk::C64;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

fn run(name: &str) -> Report {
    let suite = load_manifest(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e:?}"));
    run_suite(&suite, &RunOptions::default()).unwrap()
}

/// Largest value of `criterion` over the checks named `check`, requiring each
/// of those checks to pass.
fn worst(report: &Report, check: CheckName, criterion: &str) -> Result<f64, String> {
    let mut max = f64::NEG_INFINITY;
    for c in report.checks.iter().filter(|c| c.name == check) {
        if c.verdict != Verdict::Pass {
            return Err(format!("{} is {:?}: {}", c.id, c.verdict, c.error.clone().unwrap_or_default()));
        }
        if let Some(k) = c.criteria.iter().find(|k| k.name == criterion) {
            max = max.max(k.max);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(format!("no {check} check reports '{criterion}'"));
    }
    Ok(max)
}

fn below(label: &str, value: f64, tol: f64) -> Result<String, String> {
    let text = format!("{label} {value:.2e} < {tol:.0e}");
    if value < tol {
        Ok(text)
    } else {
        Err(text)
    }
}

fn join(parts: Vec<Result<String, String>>) -> Outcome {
    let failed = parts.iter().any(Result::is_err);
    let text: Vec<String> = parts.into_iter().map(|p| p.unwrap_or_else(|e| format!("{e} [violated]"))).collect();
    if failed {
        Err(text.join("; "))
    } else {
        Ok(text.join("; "))
    }
}

fn metrics(recipe: MetricRecipe, count: u64, base: u64) -> Vec<MetricChart> {
    (0..count).map(|k| random_metric(&recipe, base + k).unwrap()).collect()
}

fn pack(chart: &MetricChart, p: &[C64]) -> CurvaturePack {
    CurvaturePack::compute(chart, p).unwrap()
}

fn rel(a: &TensorAtPoint, b: &TensorAtPoint) -> f64 {
    a.sub(b).norm() / (a.norm() + b.norm())
}

fn weyl_vanishes_in_dimension_three() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for chart in metrics(MetricRecipe::riemannian(3), 20, 100) {
        for p in interior_points(3, 5, &mut r) {
            let k = pack(&chart, &p);
            worst = worst.max(k.weyl_down.norm() / k.riemann_down.norm());
        }
    }
    below("max |R - h^I|/|R| over 20 metrics x 5 points", worst, 1e-8)
}

fn weyl_is_conformally_invariant() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for chart in metrics(MetricRecipe::riemannian(4), 10, 200) {
        let phi = parse(&potential_source(&COORDINATES[..4], &mut r)).unwrap();
        let resc = rescale(&chart, &phi).unwrap();
        let p = interior_points(4, 1, &mut r).remove(0);
        let (a, b) = (pack(&chart, &p).weyl, pack(&resc.chart, &p).weyl);
        worst = worst.max(a.sub(&b).max_abs() / a.max_abs());
    }
    below("max componentwise deviation of W(3,1) over 10 pairs", worst, 1e-7)
}

fn cotton_york_transformation() -> Outcome {
    let mut r = rng(3);
    let mut law = 0.0f64;
    for chart in metrics(MetricRecipe::riemannian(4), 10, 300) {
        let phi = parse(&potential_source(&COORDINATES[..4], &mut r)).unwrap();
        let resc = rescale(&chart, &phi).unwrap();
        let p = interior_points(4, 1, &mut r).remove(0);
        let cy = cy_transform_from_packs(&pack(&chart, &p), &pack(&resc.chart, &p), &resc.dphi(&p).unwrap());
        law = law.max(cy.residual);
    }
    let mut invariance = 0.0f64;
    for chart in metrics(MetricRecipe::riemannian(3), 10, 310) {
        let phi = parse(&potential_source(&COORDINATES[..3], &mut r)).unwrap();
        let resc = rescale(&chart, &phi).unwrap();
        let p = interior_points(3, 1, &mut r).remove(0);
        let cy = cy_transform_from_packs(&pack(&chart, &p), &pack(&resc.chart, &p), &resc.dphi(&p).unwrap());
        invariance = invariance.max(cy.change / (cy.cotton.norm() + cy.cotton_rescaled.norm()));
    }
    join(vec![below("4d law residual", law, 1e-7), below("3d invariance", invariance, 1e-8)])
}

fn bianchi_identities() -> Outcome {
    let mut parts = Vec::new();
    for name in ["berger_sphere", "random_seeded_3d", "random_seeded_4d", "pedersen_ball", "tensor_k_synthetic"] {
        let report = run(name);
        let checks: Vec<_> = report.checks.iter().filter(|c| c.name == CheckName::Bianchi).collect();
        let nonzero = checks.iter().all(|c| c.info.get("cotton_norm").is_some_and(|v| *v > 1e-3));
        let cyclic = worst(&report, CheckName::Bianchi, "cyclic");
        let trace = worst(&report, CheckName::Bianchi, "trace");
        parts.push(match (cyclic, trace) {
            (Ok(a), Ok(b)) if nonzero => below(name, a.max(b), 1e-8),
            (Ok(_), Ok(_)) => Err(format!("{name}: C vanishes somewhere")),
            (Err(e), _) | (_, Err(e)) => Err(e),
        });
    }
    join(parts)
}

fn divergence_of_weyl() -> Outcome {
    let mut r = rng(5);
    let (mut full, mut split, mut fd) = (0.0f64, 0.0f64, 0.0f64);
    for chart in metrics(MetricRecipe::riemannian(4), 10, 500) {
        let p = interior_points(4, 1, &mut r).remove(0);
        let k = pack(&chart, &p);
        full = full.max(rel(&k.div_weyl, &k.cotton));
        let sd = k.self_dual.as_ref().unwrap();
        split = split.max(rel(&sd.div_weyl_plus, &sd.cotton_plus)).max(rel(&sd.div_weyl_minus, &sd.cotton_minus));
        for (q, jet) in [(FdQuantity::DivWeyl, &k.div_weyl), (FdQuantity::Cotton, &k.cotton)] {
            let oracle = fd_oracle(&chart, q, &p, q.default_step()).unwrap();
            fd = fd.max(rel(&oracle, jet));
        }
    }
    join(vec![below("dW = C", full, 1e-6), below("dW+- = C+-", split, 1e-6), below("jet vs fd", fd, 1e-6)])
}

fn anti_self_dual_cotton_vanishes() -> Outcome {
    let mut parts = Vec::new();
    let pedersen = run("pedersen_ball");
    parts.push(worst(&pedersen, CheckName::LemmaCminus, "cotton_minus").and_then(|v| below("pedersen_ball", v, 1e-6)));
    for name in ["conf_flat_rescale", "h4_halfspace", "h4_extended_boundary", "flat_r", "flat_c"] {
        let report = run(name);
        let tols_ok = report
            .checks
            .iter()
            .filter(|c| c.name == CheckName::LemmaCminus)
            .all(|c| c.criteria.iter().all(|k| k.tol <= 1e-9));
        parts.push(match worst(&report, CheckName::LemmaCminus, "cotton_minus") {
            Ok(v) if tols_ok => below(name, v, 1e-9),
            Ok(_) => Err(format!("{name}: conformally flat check runs above 1e-9")),
            Err(e) => Err(e),
        });
    }
    join(parts)
}

fn star_of_induced_curvature() -> Outcome {
    let mut parts = Vec::new();
    for name in ["s3_round", "berger_sphere", "random_seeded_3d"] {
        let report = run(name);
        parts.push(worst(&report, CheckName::StarRicci3d, "residual").and_then(|v| below(name, v, 1e-7)));
    }
    let random = run("random_seeded_3d");
    let members = random.checks.iter().find(|c| c.name == CheckName::StarRicci3d).map_or(0, |c| c.points.len() / 5);
    parts.push(if members >= 5 { Ok(format!("{members} random metrics")) } else { Err(format!("{members} random metrics")) });
    join(parts)
}

fn weyl_split_routes_agree() -> Outcome {
    let mut r = rng(8);
    let (mut arw, mut trace) = (0.0f64, 0.0f64);
    for chart in metrics(MetricRecipe::riemannian(4), 10, 800) {
        let p = interior_points(4, 1, &mut r).remove(0);
        let k = pack(&chart, &p);
        let s = weyl_pm(&k, &oriented_frame(&k, &[]).unwrap()).unwrap();
        arw = arw.max(s.arw_plus_residual).max(s.arw_minus_residual).max(s.operator_residual);
        trace = trace.max(s.scal_trace_residual);
    }
    join(vec![below("four-term vs projector", arw, 1e-9), below("Scal = 4 tr", trace, 1e-8)])
}

fn boundary_theorem() -> Outcome {
    let mut parts = Vec::new();
    for name in ["flat_r", "h4_extended_boundary"] {
        let report = run(name);
        let v = ["weyl_plus", "cyw", "cotton"]
            .iter()
            .map(|k| worst(&report, CheckName::Thm1, k))
            .collect::<Result<Vec<f64>, String>>()
            .map(|v| v.into_iter().fold(0.0, f64::max));
        parts.push(v.and_then(|v| below(&format!("trivial {name}"), v, 1e-9)));
    }
    let pedersen = run("pedersen_ball");
    let thm1 = pedersen.checks.iter().find(|c| c.name == CheckName::Thm1).unwrap();
    let sides = thm1.info["cyw_lhs"].min(thm1.info["cyw_rhs"]);
    parts.push(worst(&pedersen, CheckName::Thm1, "weyl_plus").and_then(|v| below("|W+| on M", v, 1e-6)));
    parts.push(worst(&pedersen, CheckName::Thm1, "cyw").and_then(|v| below("CYW mismatch", v, 1e-5)));
    parts.push(if sides > 1e-3 { Ok(format!("CYW sides {sides:.3}")) } else { Err(format!("CYW sides {sides:.2e}")) });

    // C+ restricted to r = 1 against the standalone Berger chart.
    let suite = load_manifest(&fixture("pedersen_ball")).unwrap();
    let ambient = &suite.charts["pedersen"].members[0];
    let berger = &suite.charts["berger"].members[0];
    let mut worst_c = 0.0f64;
    for u in [[0.4, 0.7, 1.0], [1.4, -0.3, 0.8], [2.5, 1.1, 2.0]] {
        let x: Vec<C64> = std::iter::once(re(1.0)).chain(u.iter().map(|&v| re(v))).collect();
        let k = pack(ambient, &x);
        let cplus = &k.self_dual.as_ref().unwrap().cotton_plus;
        let cm = pack(berger, &u.map(re)).cotton;
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let m = *cm.get(&[a, b, c]);
                    diff += (cplus.get(&[a + 1, b + 1, c + 1]) - m).norm_sqr();
                    scale += m.norm_sqr();
                }
            }
        }
        worst_c = worst_c.max(diff.sqrt() / scale.sqrt());
    }
    parts.push(below("C+ vs Berger chart", worst_c, 1e-5));
    join(parts)
}

fn jacobi_machinery() -> Outcome {
    let random = run("random_seeded_4d");
    let conf = run("conf_flat_rescale");
    let mut parts = Vec::new();
    for (check, criterion, tol) in [
        (CheckName::NullConservation, "drift", 1e-8),
        (CheckName::JacobiVariation, "mismatch", 1e-4),
        (CheckName::PInvariance, "residual", 1e-7),
        (CheckName::Lemma3, "scalar", 1e-9),
        (CheckName::Lemma4Lines, "deviation", 1e-6),
    ] {
        let v = worst(&random, check, criterion).and_then(|a| worst(&conf, check, criterion).map(|b| a.max(b)));
        parts.push(v.and_then(|v| below(check.as_str(), v, tol)));
    }
    let triples = random.checks.iter().find(|c| c.id == "p_invariance").map_or(0, |c| c.criteria[0].count);
    parts.push(if triples >= 10 { Ok(format!("{triples} P triples")) } else { Err(format!("{triples} P triples")) });
    join(parts)
}

fn isotropic_planes() -> Outcome {
    let random = run("random_seeded_4d");
    let mut parts = Vec::new();
    let planes_ok = random
        .checks
        .iter()
        .filter(|c| c.name == CheckName::IsotropicScan)
        .all(|c| c.info.contains_key("max_sectional") && c.points.len() >= 1);
    parts.push(worst(&random, CheckName::IsotropicScan, "h_wedge").and_then(|v| below("h^I on 100 planes per point", v, 1e-10)));
    if !planes_ok {
        parts.push(Err("scan without planes".into()));
    }
    let k = run("tensor_k_synthetic");
    parts.push(worst(&k, CheckName::IsotropicScan, "plane_value").and_then(|v| below("tensor K value - 1", v, 1e-12)));
    let conf = run("conf_flat_rescale");
    parts.push(worst(&conf, CheckName::IsotropicScan, "max_sectional").and_then(|v| below("conformally flat max |R|", v, 1e-9)));
    join(parts)
}

fn infrastructure() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_conftk");
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let status = Command::new(bin).arg("check").arg(fixture("random_seeded_3d")).arg("--report").arg(&out).output().unwrap();
        if !status.status.success() {
            return Err(format!("check exited with {:?}", status.status.code()));
        }
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        digests.push(v["digest"].as_str().unwrap().to_string());
    }
    let mut parts = vec![if digests[0] == digests[1] {
        Ok(format!("digest {} twice", &digests[0][..12]))
    } else {
        Err(format!("digests differ: {digests:?}"))
    }];

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema": 1, "charts": [{"name": "e", "coordinates": ["x","y","z"], "diagonal": ["1","1","1"], "colour": "red"}]}"#)
        .unwrap();
    let out = Command::new(bin).arg("check").arg(&bad).output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    parts.push(if out.status.code() == Some(3) && stderr.contains("/charts/0/colour") {
        Ok("unknown key exits 3".into())
    } else {
        Err(format!("unknown key exited {:?}: {stderr}", out.status.code()))
    });

    let mut r = rng(12);
    let mut fd = 0.0f64;
    for chart in metrics(MetricRecipe::riemannian(4), 10, 1200) {
        let p = interior_points(4, 1, &mut r).remove(0);
        let k = pack(&chart, &p);
        for (q, jet) in [
            (FdQuantity::Christoffel, &k.gamma),
            (FdQuantity::Riemann, &k.riemann),
            (FdQuantity::NablaH, &k.nabla_h),
            (FdQuantity::DivWeyl, &k.div_weyl),
        ] {
            fd = fd.max(rel(&fd_oracle(&chart, q, &p, q.default_step()).unwrap(), jet));
        }
    }
    parts.push(below("jet vs fd on Gamma, R, nabla h, dW", fd, 1e-6));
    join(parts)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("dimension-3 Weyl vanishing", weyl_vanishes_in_dimension_three),
        ("conformal invariance of W", weyl_is_conformally_invariant),
        ("Cotton-York transformation", cotton_york_transformation),
        ("Bianchi identities for C", bianchi_identities),
        ("divergence of W and W+-", divergence_of_weyl),
        ("anti-self-dual Cotton-York", anti_self_dual_cotton_vanishes),
        ("star of induced curvature", star_of_induced_curvature),
        ("W+- routes and scalar trace", weyl_split_routes_agree),
        ("boundary theorem", boundary_theorem),
        ("Jacobi machinery", jacobi_machinery),
        ("isotropic planes", isotropic_planes),
        ("infrastructure", infrastructure),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
