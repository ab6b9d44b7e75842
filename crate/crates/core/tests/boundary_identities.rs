//! Boundary identities on umbilic hypersurfaces of 4-manifolds.

use conftk::conformal::{cotton_york, rescale};
use conftk::exprlang::parse;
use conftk::hypersurface::*;
use conftk::random::{random_metric, rng, MetricRecipe};
use conftk::scalar::re;
use conftk::tensor::MetricChart;
use conftk::{Error, Mode, C64};

/// Self-dual Einstein metric on the ball, multiplied by `(1 − ρ²)²` so that it
/// extends across the Berger sphere `ρ = 1`. Euler angles `(θ, φ, ψ)` with
/// `σ₁² + σ₂² = (dθ² + sin²θ dφ²)/4` and `σ₃ = (dψ + cos θ dφ)/2`.
fn pedersen(orientation: i8) -> MetricChart {
    let a = "(1 + m2*r^2)";
    let b = "(1 + m2*r^4)";
    let p = format!("{a}*r^2/4");
    let q = format!("r^2*{b}/{a}/4");
    let upper = [
        format!("{a}/{b}"),
        "0".into(),
        "0".into(),
        "0".into(),
        p.clone(),
        "0".into(),
        "0".into(),
        format!("{p}*sin(th)^2 + {q}*cos(th)^2"),
        format!("{q}*cos(th)"),
        q,
    ];
    let coords = ["r", "th", "ph", "ps"].iter().map(|s| s.to_string()).collect();
    MetricChart::new("pedersen", coords, Mode::Real, upper.iter().map(|s| parse(s).unwrap()).collect(), vec![(
        "m2".into(),
        re(3.0),
    )])
    .unwrap()
    .with_orientation(orientation)
}

/// `(1 + m²)(σ₁² + σ₂²) + σ₃²`, the conformal infinity of [`pedersen`].
fn berger() -> MetricChart {
    let upper = ["(1 + m2)/4", "0", "0", "(1 + m2)*sin(th)^2/4 + cos(th)^2/4", "cos(th)/4", "1/4"];
    let coords = ["th", "ph", "ps"].iter().map(|s| s.to_string()).collect();
    let upper = upper.iter().map(|s| parse(s).unwrap()).collect();
    MetricChart::new("berger", coords, Mode::Real, upper, vec![("m2".into(), re(3.0))]).unwrap()
}

fn boundary(chart: MetricChart) -> HypersurfaceSpec {
    let emb = ["1", "th", "ph", "ps"].iter().map(|s| parse(s).unwrap()).collect();
    HypersurfaceSpec::new("rho=1", chart, &["th", "ph", "ps"], emb).unwrap()
}

fn samples() -> Vec<Vec<C64>> {
    [[1.0, 0.4, 0.7], [0.8, 1.4, -0.3], [2.0, 2.5, 1.1]].iter().map(|p| p.iter().map(|&x| re(x)).collect()).collect()
}

#[test]
fn pedersen_boundary_identities() {
    let spec = boundary(pedersen(-1));
    let rep = thm1_check(&spec, &samples(), &Thm1Options::default()).unwrap();
    assert!(rep.self_dual_ratio < 1e-12);
    assert!((rep.lambda.re.abs() - 1.75).abs() < 1e-12);
    assert!(rep.gauged_second_form < 1e-12);
    assert!(rep.weyl_plus < 1e-6, "{:e}", rep.weyl_plus);
    assert!(rep.cyw_lhs > 0.1 && rep.cyw_rhs > 0.1);
    assert!(rep.cyw < 1e-5, "{:e}", rep.cyw);
    assert!(rep.cotton_norm > 0.1);
    assert!(rep.cotton < 1e-5, "{:e}", rep.cotton);
    assert!(rep.tgeod < 1e-8 && rep.rq < 1e-8 && rep.w1 < 1e-8);
}

#[test]
fn opposite_orientation_fails_the_gate() {
    let spec = boundary(pedersen(1));
    assert!(matches!(thm1_check(&spec, &samples(), &Thm1Options::default()), Err(Error::AmbientNotSelfDual(_))));
}

#[test]
fn induced_cotton_matches_standalone_berger() {
    let spec = boundary(pedersen(-1));
    let induced = InducedMetric { spec: &spec };
    let b = berger();
    for u in samples() {
        let c1 = cotton_york(&induced, &u).unwrap();
        let c2 = cotton_york(&b, &u).unwrap();
        let rel = conftk::scalar::relative_residual(c1.data(), c2.data());
        assert!(c2.norm() > 0.1 && rel < 1e-10, "{rel:e}");
    }
}

#[test]
fn normal_scaling_leaves_the_residual_unchanged() {
    let spec = boundary(pedersen(-1));
    let base = thm1_check(&spec, &samples(), &Thm1Options::default()).unwrap();
    for c in [0.5f64, 3.0] {
        let scaled = rescale(&spec.ambient, &parse(&format!("{}", c.ln())).unwrap()).unwrap();
        let rep = thm1_check(&spec.with_ambient(scaled.chart), &samples(), &Thm1Options::default()).unwrap();
        assert!((rep.cyw - base.cyw).abs() < 1e-7);
        assert!((rep.cyw_lhs / base.cyw_lhs - 1.0 / c.powi(3)).abs() < 1e-9);
    }
}

#[test]
fn umbilicity_is_conformally_invariant() {
    let flat = MetricChart::diagonal("flat", &["x", "y", "z", "t"], Mode::Real, &["1", "1", "1", "1"]).unwrap();
    let emb = ["cos(a)", "sin(a)*cos(b)", "sin(a)*sin(b)*cos(c)", "sin(a)*sin(b)*sin(c)"]
        .iter()
        .map(|s| parse(s).unwrap())
        .collect();
    let spec = HypersurfaceSpec::new("s3", flat, &["a", "b", "c"], emb)
        .unwrap()
        .with_normal_coordinate(parse("sqrt(x^2 + y^2 + z^2 + t^2) - 1").unwrap())
        .with_domain(vec![(0.5, 2.5), (0.5, 2.5), (0.0, 6.0)]);
    let pts = spec.random_parameters(5, &mut rng(5));
    assert!(umbilicity(&spec, &pts).unwrap().residual < 1e-8);
    for phi in ["0.3*x - 0.2*y*t + 0.1*z^2", "sin(x + 2*t)/5"] {
        let g2 = rescale(&spec.ambient, &parse(phi).unwrap()).unwrap();
        let umb = umbilicity(&spec.with_ambient(g2.chart), &pts).unwrap();
        assert!(umb.residual < 1e-6, "{phi}: {:e}", umb.residual);
    }
}

#[test]
fn gauss_equation_on_reflection_symmetric_metrics() {
    for seed in 0..5 {
        let recipe = MetricRecipe { even_in: Some(3), ..MetricRecipe::riemannian(4) };
        let chart = random_metric(&recipe, 100 + seed).unwrap();
        let emb = ["a", "b", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("fixed", chart, &["a", "b", "c"], emb).unwrap();
        let pts = vec![vec![re(0.1), re(-0.2), re(0.2)], vec![re(-0.25), re(0.05), re(0.15)]];
        let opts = Thm1Options { self_dual_tol: f64::INFINITY, ..Thm1Options::default() };
        let rep = thm1_check(&spec, &pts, &opts).unwrap();
        assert!(rep.tgeod < 1e-8, "seed {seed}: {:e}", rep.tgeod);
    }
}

#[test]
fn flat_extension_of_hyperbolic_space() {
    let flat = MetricChart::diagonal("h4ext", &["x", "y", "z", "t"], Mode::Real, &["1", "1", "1", "1"]).unwrap();
    let emb = ["a", "b", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
    let spec = HypersurfaceSpec::new("t=0", flat, &["a", "b", "c"], emb).unwrap();
    let rep = thm1_check(&spec, &samples(), &Thm1Options::default()).unwrap();
    for v in [rep.weyl_plus, rep.cyw_lhs, rep.cyw_rhs, rep.cotton_norm] {
        assert!(v < 1e-9);
    }
}
