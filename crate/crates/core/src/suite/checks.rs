//! The named checks. Each one samples its inputs from the check's seed and
//! fills a tally of criteria; structural failures surface as errors.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{to_point, CheckBlock, CheckName, ChartFamily, Expectation, Suite};
use super::report::{Criterion, Relation};
use crate::conformal::{bianchi_residuals, cy_transform_from_packs, frame_norm, rescale, DIV_WEYL_SIGN};
use crate::error::{Error, Result};
use crate::exprlang::{parse, Expr};
use crate::fourdim::{oriented_frame, star_ricci_3d, weyl_pm};
use crate::hypersurface::{thm1_check, Thm1Options, Thm1Report};
use crate::nullgeo::{isotropic_sectional, weyl_isotropic_scan};
use crate::nullgeo::{
    check_p_conformal_invariance, integrate_geodesic, isotropic_partner, jacobi_curve_jet, jacobi_variation,
    lemma3_difference, parallel_isotropic_line, sample_isotropy_cone, transverse_jacobi, weyl_connection_difference,
    GeodesicState, JacobiState,
};
use crate::random::{potential_source, rng};
use crate::scalar::{frobenius, Mode, C64};
use crate::tensor::{
    bilinear, fd_oracle, orthonormal_frame, CurvaturePack, FdQuantity, LocalJets, MetricChart, MetricField,
    TensorAtPoint,
};

/// Added to the scale of every relative residual the suite forms itself, so
/// rounding noise on flat or conformally flat inputs is not divided by zero.
pub const SCALE_FLOOR: f64 = 1e-6;

/// Variation size for the Jacobi-versus-variation comparison.
const VARIATION_EPS: f64 = 1e-4;

/// Difference step for the derivatives of integrated Jacobi fields.
const JACOBI_STEP: f64 = 2e-2;

/// Additive scale in the anti-self-dual Cotton–York comparison.
const CMINUS_EPS: f64 = 1e-3;

/// Everything a check needs beyond its block.
pub struct Ctx<'a> {
    pub suite: &'a Suite,
    pub block: &'a CheckBlock,
    pub seed: u64,
    pub order: usize,
    pub fd: bool,
}

/// Collected criterion values, in insertion order.
#[derive(Default)]
pub struct Tally {
    entries: Vec<(String, Relation, f64, Vec<f64>)>,
    pub info: BTreeMap<String, f64>,
    pub points: Vec<Vec<C64>>,
    pub mode: Option<Mode>,
}

impl Tally {
    fn push(&mut self, name: &str, relation: Relation, tol: f64, value: f64) {
        match self.entries.iter_mut().find(|e| e.0 == name) {
            Some(e) => e.3.push(value),
            None => self.entries.push((name.to_string(), relation, tol, vec![value])),
        }
    }

    pub fn below(&mut self, name: &str, tol: f64, value: f64) {
        self.push(name, Relation::Below, tol, value);
    }

    pub fn above(&mut self, name: &str, tol: f64, value: f64) {
        self.push(name, Relation::Above, tol, value);
    }

    /// Keeps the largest value seen under `name`.
    pub fn note_max(&mut self, name: &str, value: f64) {
        let e = self.info.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
        if value > *e || value.is_nan() {
            *e = value;
        }
    }

    fn point(&mut self, mode: Mode, p: &[C64]) {
        self.mode = Some(mode);
        self.points.push(p.to_vec());
    }

    pub fn criteria(&self) -> Vec<Criterion> {
        self.entries.iter().map(|(name, rel, tol, values)| Criterion::from_values(name, *rel, *tol, values)).collect()
    }
}

impl Ctx<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.block.tol.unwrap_or(default)
    }

    fn rng(&self) -> ChaCha8Rng {
        rng(self.seed)
    }

    fn family(&self) -> Result<&ChartFamily> {
        let name = self.block.chart.as_deref().ok_or_else(|| Error::InvalidArgument("check has no chart".into()))?;
        self.suite.charts.get(name).ok_or_else(|| Error::InvalidArgument(format!("unknown chart '{name}'")))
    }

    fn sample_count(&self, default: usize) -> usize {
        self.block.samples.unwrap_or(default)
    }

    /// Explicit points of the check or its chart, else interior random points.
    fn points(&self, fam: &ChartFamily, chart: &MetricChart, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
        if let Some(p) = &self.block.points {
            return p.iter().map(|q| to_point(q)).collect();
        }
        if let Some(p) = &fam.points {
            return p.clone();
        }
        shrunk(chart, 0.2).random_points(self.suite.manifest.settings.samples, rng)
    }

    fn potential(&self, chart: &MetricChart, rng: &mut ChaCha8Rng) -> Result<Expr> {
        let src = match &self.block.phi {
            Some(s) => s.clone(),
            None => {
                let coords: Vec<&str> = chart.coordinates().iter().map(String::as_str).collect();
                potential_source(&coords, rng)
            }
        };
        Ok(parse(&src)?)
    }

    fn pack(&self, field: &dyn MetricField, p: &[C64]) -> Result<CurvaturePack> {
        let local = LocalJets::compute(field, p, self.order)?;
        CurvaturePack::from_local(&local, field.orientation())
    }
}

/// The chart with its domain box cut by `margin` of the width on each side
/// (`[-1, 1]ⁿ` when none is declared).
fn shrunk(chart: &MetricChart, margin: f64) -> MetricChart {
    let unit = vec![(-1.0, 1.0); chart.dim()];
    let dom = chart.domain().unwrap_or(&unit);
    let inner = dom.iter().map(|&(lo, hi)| (lo + margin * (hi - lo), hi - margin * (hi - lo))).collect();
    chart.clone().with_domain(inner)
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / (scale + SCALE_FLOOR)
}

fn diff_norm(a: &TensorAtPoint, b: &TensorAtPoint) -> f64 {
    a.sub(b).norm()
}

fn require_dim(field: &dyn MetricField, n: usize) -> Result<()> {
    if field.dim() != n {
        return Err(Error::WrongDimension { required: n, found: field.dim() });
    }
    Ok(())
}

/// Finite-difference quantities cross-checked under `--fd`.
fn fd_quantities(name: CheckName) -> &'static [FdQuantity] {
    match name {
        CheckName::Weyl3Vanish | CheckName::WeylInvariance => &[FdQuantity::Weyl],
        CheckName::CyTransform | CheckName::Bianchi | CheckName::LemmaCminus => &[FdQuantity::Cotton],
        CheckName::DivWeyl | CheckName::DivWeylPm => &[FdQuantity::DivWeyl, FdQuantity::Cotton],
        CheckName::StarRicci3d => &[FdQuantity::NormalizedRicci],
        CheckName::WeylSplit | CheckName::CurvatureSymmetries | CheckName::IsotropicScan => &[FdQuantity::RiemannDown],
        CheckName::FdAgreement => &[FdQuantity::Christoffel, FdQuantity::Riemann, FdQuantity::NablaH, FdQuantity::DivWeyl],
        _ => &[],
    }
}

fn pack_tensor(pack: &CurvaturePack, q: FdQuantity) -> &TensorAtPoint {
    match q {
        FdQuantity::Christoffel => &pack.gamma,
        FdQuantity::Riemann => &pack.riemann,
        FdQuantity::RiemannDown => &pack.riemann_down,
        FdQuantity::Ricci => &pack.ricci,
        FdQuantity::NormalizedRicci => &pack.h,
        FdQuantity::Weyl => &pack.weyl,
        FdQuantity::NablaH => &pack.nabla_h,
        FdQuantity::Cotton => &pack.cotton,
        FdQuantity::NablaWeyl => &pack.nabla_weyl,
        FdQuantity::DivWeyl => &pack.div_weyl,
    }
}

fn fd_label(q: FdQuantity) -> &'static str {
    match q {
        FdQuantity::Christoffel => "christoffel",
        FdQuantity::Riemann => "riemann",
        FdQuantity::RiemannDown => "riemann_down",
        FdQuantity::Ricci => "ricci",
        FdQuantity::NormalizedRicci => "normalized_ricci",
        FdQuantity::Weyl => "weyl",
        FdQuantity::NablaH => "nabla_h",
        FdQuantity::Cotton => "cotton",
        FdQuantity::NablaWeyl => "nabla_weyl",
        FdQuantity::DivWeyl => "div_weyl",
    }
}

/// Relative jet-versus-oracle residual of one quantity.
fn fd_residual(ctx: &Ctx, field: &dyn MetricField, pack: &CurvaturePack, q: FdQuantity) -> Result<f64> {
    let step = ctx.suite.manifest.settings.fd_step.unwrap_or_else(|| q.default_step());
    let fd = fd_oracle(field, q, &pack.point, step)?;
    let jet = pack_tensor(pack, q);
    // Third-derivative quantities vanish identically on Einstein and conformally
    // flat charts, where the oracle's truncation error has no scale of its own;
    // they are measured against the curvature at unit coordinate length.
    let curvature = match q {
        FdQuantity::NablaH | FdQuantity::Cotton | FdQuantity::NablaWeyl | FdQuantity::DivWeyl => pack.riemann_down.norm(),
        _ => 0.0,
    };
    Ok(rel(diff_norm(&fd, jet), fd.norm() + jet.norm() + curvature))
}

/// Adds `fd_*` criteria when the suite runs with the oracle cross-check.
fn fd_cross(ctx: &Ctx, field: &dyn MetricField, pack: &CurvaturePack, t: &mut Tally) -> Result<()> {
    if !ctx.fd || ctx.block.name == CheckName::FdAgreement {
        return Ok(());
    }
    let tol = ctx.suite.manifest.settings.fd_tol;
    for &q in fd_quantities(ctx.block.name) {
        if q == FdQuantity::DivWeyl && pack.n < 4 {
            continue;
        }
        t.below(&format!("fd_{}", fd_label(q)), tol, fd_residual(ctx, field, pack, q)?);
    }
    Ok(())
}

/// Runs `body` at every sample point of every chart in the check's family.
fn pointwise(
    ctx: &Ctx,
    t: &mut Tally,
    mut body: impl FnMut(&MetricChart, &CurvaturePack, &mut ChaCha8Rng, &mut Tally) -> Result<()>,
) -> Result<()> {
    let fam = ctx.family()?;
    let mut r = ctx.rng();
    for chart in &fam.members {
        for p in ctx.points(fam, chart, &mut r) {
            t.point(chart.mode(), &p);
            chart.check_point(&p)?;
            let pack = ctx.pack(chart, &p)?;
            body(chart, &pack, &mut r, t)?;
            fd_cross(ctx, chart, &pack, t)?;
        }
    }
    Ok(())
}

pub fn run(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    match ctx.block.name {
        CheckName::Weyl3Vanish => weyl3_vanish(ctx, t),
        CheckName::CyTransform => cy_transform(ctx, t),
        CheckName::Bianchi => bianchi(ctx, t),
        CheckName::DivWeyl => div_weyl(ctx, t),
        CheckName::DivWeylPm => div_weyl_pm(ctx, t),
        CheckName::StarRicci3d => star_ricci(ctx, t),
        CheckName::LemmaCminus => lemma_cminus(ctx, t),
        CheckName::Thm1 | CheckName::EqRq | CheckName::EqTgeod => boundary(ctx, t),
        CheckName::PInvariance => p_invariance(ctx, t),
        CheckName::Lemma3 => lemma3(ctx, t),
        CheckName::Lemma4Lines => lemma4_lines(ctx, t),
        CheckName::NullConservation => null_conservation(ctx, t),
        CheckName::JacobiVariation => variation(ctx, t),
        CheckName::IsotropicScan => isotropic_scan(ctx, t),
        CheckName::WeylInvariance => weyl_invariance(ctx, t),
        CheckName::WeylSplit => weyl_split(ctx, t),
        CheckName::FdAgreement => fd_agreement(ctx, t),
        CheckName::CurvatureSymmetries => curvature_symmetries(ctx, t),
    }
}

fn weyl3_vanish(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-8);
    pointwise(ctx, t, |chart, pack, _, t| {
        require_dim(chart, 3)?;
        t.below("weyl_relative", tol, rel(pack.weyl_down.norm(), pack.riemann_down.norm()));
        t.note_max("riemann_norm", pack.riemann_down.norm());
        Ok(())
    })
}

fn cy_transform(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-7);
    let tol3 = ctx.tol(1e-8);
    let fam = ctx.family()?;
    let mut r = ctx.rng();
    for chart in &fam.members {
        let phi = ctx.potential(chart, &mut r)?;
        let resc = rescale(chart, &phi)?;
        for p in ctx.points(fam, chart, &mut r) {
            t.point(chart.mode(), &p);
            let before = ctx.pack(chart, &p)?;
            let after = ctx.pack(&resc.chart, &p)?;
            let cy = cy_transform_from_packs(&before, &after, &resc.dphi(&p)?);
            // C is an antisymmetrised ∇h, so cancellation is measured against ∇h.
            let (c0, c1) = (cy.cotton.norm(), cy.cotton_rescaled.norm());
            let scale = c0 + c1 + before.nabla_h.norm() + after.nabla_h.norm();
            let diff = cy.residual * (c0 + c1 + 1e-12);
            t.below("residual", tol, rel(diff, scale));
            if chart.dim() == 3 {
                t.below("invariance_3d", tol3, rel(cy.change, scale));
            }
            t.note_max("cotton_change", cy.change);
            fd_cross(ctx, chart, &before, t)?;
        }
    }
    Ok(())
}

fn bianchi(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-8);
    pointwise(ctx, t, |chart, pack, _, t| {
        let g = pack.g.data();
        let frame = orthonormal_frame(g, chart.mode(), &pack.point, &[])?;
        let (cyclic, trace) = bianchi_residuals(&pack.cotton, &frame, g)?;
        let norm = frame_norm(&pack.cotton, &frame, g);
        t.below("cyclic", tol, rel(cyclic, norm));
        t.below("trace", tol, rel(trace, norm));
        t.note_max("cotton_norm", norm);
        Ok(())
    })
}

fn div_weyl(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-6);
    pointwise(ctx, t, |chart, pack, _, t| {
        if chart.dim() < 4 {
            return Err(Error::DimensionTooLow { required: 4, found: chart.dim() });
        }
        let k = C64::new(pack.n as f64 - 3.0, 0.0);
        let dw = pack.div_weyl.scale(C64::new(DIV_WEYL_SIGN, 0.0));
        let c = pack.cotton.scale(k);
        t.below("residual", tol, rel(diff_norm(&dw, &c), dw.norm() + c.norm()));
        t.note_max("cotton_norm", pack.cotton.norm());
        Ok(())
    })
}

fn div_weyl_pm(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-6);
    pointwise(ctx, t, |chart, pack, _, t| {
        require_dim(chart, 4)?;
        let parts = pack.self_dual.as_ref().ok_or(Error::LorentzianUnsupported)?;
        for (label, dw, c) in [
            ("plus", &parts.div_weyl_plus, &parts.cotton_plus),
            ("minus", &parts.div_weyl_minus, &parts.cotton_minus),
        ] {
            let dw = dw.scale(C64::new(DIV_WEYL_SIGN, 0.0));
            t.below(label, tol, rel(diff_norm(&dw, c), dw.norm() + c.norm()));
        }
        Ok(())
    })
}

fn star_ricci(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-7);
    pointwise(ctx, t, |chart, pack, _, t| {
        let frame = orthonormal_frame(pack.g.data(), chart.mode(), &pack.point, &[])?;
        let (_, residual) = star_ricci_3d(pack, &frame)?;
        t.below("residual", tol, residual);
        t.note_max("cotton_norm", pack.cotton.norm());
        Ok(())
    })
}

fn lemma_cminus(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-6);
    let gate = ctx.block.self_dual_tol.unwrap_or(1e-6);
    pointwise(ctx, t, |chart, pack, _, t| {
        require_dim(chart, 4)?;
        let parts = pack.self_dual.as_ref().ok_or(Error::LorentzianUnsupported)?;
        let ratio = rel(parts.weyl_minus.norm(), pack.riemann_down.norm());
        t.note_max("self_dual_ratio", ratio);
        if ratio >= gate {
            return Err(Error::AmbientNotSelfDual(ratio));
        }
        let cm = parts.cotton_minus.norm();
        t.below("cotton_minus", tol, cm / (pack.cotton.norm() + CMINUS_EPS));
        t.note_max("cotton_norm", pack.cotton.norm());
        Ok(())
    })
}

fn boundary(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let name = ctx.block.hypersurface.as_deref().unwrap_or_default();
    let hyp = ctx
        .suite
        .hypersurfaces
        .get(name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown hypersurface '{name}'")))?;
    let mut r = ctx.rng();
    let samples = match (&ctx.block.points, &hyp.points) {
        (Some(p), _) => p.iter().map(|q| to_point(q)).collect(),
        (None, Some(p)) => p.clone(),
        (None, None) => hyp.spec.random_parameters(ctx.sample_count(ctx.suite.manifest.settings.samples), &mut r),
    };
    for u in &samples {
        t.point(hyp.spec.ambient.mode(), u);
    }
    let gated = ctx.block.name != CheckName::EqTgeod;
    let opts = Thm1Options {
        self_dual_tol: if gated { ctx.block.self_dual_tol.unwrap_or(1e-6) } else { f64::INFINITY },
        seed: r.gen(),
        ..Thm1Options::default()
    };
    let rep: Thm1Report = thm1_check(&hyp.spec, &samples, &opts)?;
    for (k, v) in [
        ("cyw_lhs", rep.cyw_lhs),
        ("cyw_rhs", rep.cyw_rhs),
        ("cotton_norm", rep.cotton_norm),
        ("self_dual_ratio", rep.self_dual_ratio),
        ("lambda", rep.lambda.re),
        ("w1", rep.w1),
    ] {
        t.note_max(k, v);
    }
    match ctx.block.name {
        CheckName::Thm1 => {
            t.below("weyl_plus", ctx.tol(1e-6), rep.weyl_plus);
            t.below("cyw", ctx.tol(1e-5), rep.cyw);
            t.below("cotton", ctx.tol(1e-5), rep.cotton);
            t.below("gauged_second_form", 1e-6, rep.gauged_second_form);
            if ctx.block.nontrivial {
                t.above("cyw_sides", 1e-8, rep.cyw_lhs.min(rep.cyw_rhs));
                t.above("cotton_size", 1e-8, rep.cotton_norm);
            }
            t.note_max("tgeod", rep.tgeod);
            t.note_max("rq", rep.rq);
        }
        CheckName::EqRq => t.below("rq", ctx.tol(1e-8), rep.rq),
        _ => t.below("tgeod", ctx.tol(1e-8), rep.tgeod),
    }
    Ok(())
}

/// Null geodesic starts: the named run, or random points and cone directions.
fn starts(ctx: &Ctx, count: usize, r: &mut ChaCha8Rng, t: &mut Tally) -> Result<Vec<(MetricChart, GeodesicState, f64)>> {
    let s_end_default = ctx.block.s_end.unwrap_or(0.2);
    if let Some(run) = &ctx.block.run {
        let g = ctx
            .suite
            .manifest
            .geodesics
            .iter()
            .find(|b| &b.name == run)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown run '{run}'")))?;
        let chart = ctx.suite.charts[&g.chart].members[0].clone();
        let st = GeodesicState { s: 0.0, x: to_point(&g.x0), v: to_point(&g.v0) };
        t.point(chart.mode(), &st.x);
        let s_end = ctx.block.s_end.unwrap_or(g.s_end);
        return Ok(vec![(chart, st, s_end); count]);
    }
    let fam = ctx.family()?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let chart = &fam.members[i % fam.members.len()];
        let x = match (&ctx.block.points, &fam.points) {
            (Some(p), _) => to_point(&p[i % p.len()]),
            (None, Some(p)) => p[i % p.len()].clone(),
            (None, None) => shrunk(chart, 0.3).random_points(1, r).remove(0),
        };
        let v = sample_isotropy_cone(chart, &x, 1, r.gen())?.remove(0);
        t.point(chart.mode(), &x);
        out.push((chart.clone(), GeodesicState { s: 0.0, x, v }, s_end_default));
    }
    Ok(out)
}

fn p_invariance(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-7);
    let mut r = ctx.rng();
    for (chart, st, s_end) in starts(ctx, ctx.sample_count(10), &mut r, t)? {
        let g = chart.metric_values(&st.x)?;
        let init = transverse_jacobi(&g, chart.mode(), &st.v, &mut r)?;
        let phi = ctx.potential(&chart, &mut r)?;
        let jet = jacobi_curve_jet(&chart, &st, &init, s_end, JACOBI_STEP)?;
        let inv = check_p_conformal_invariance(&chart, &phi, &jet)?;
        t.below("residual", tol, inv.residual);
        t.note_max("tangential", inv.tangential);
        t.note_max("hypothesis", inv.hypothesis);
    }
    Ok(())
}

fn unit_random(n: usize, mode: Mode, r: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|_| match mode {
            Mode::Real => C64::new(r.gen_range(-1.0..1.0), 0.0),
            Mode::Complex => C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
        })
        .collect();
    let norm = frobenius(&v);
    v.iter().map(|c| c / norm).collect()
}

fn lemma3(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-9);
    let mut r = ctx.rng();
    for (chart, st, _) in starts(ctx, ctx.sample_count(10), &mut r, t)? {
        let n = chart.dim();
        let j = unit_random(n, chart.mode(), &mut r);
        let dj = unit_random(n, chart.mode(), &mut r);
        let phi = ctx.potential(&chart, &mut r)?;
        let d = lemma3_difference(&chart, &phi, &st.x, &st.v, &j, &dj)?;
        t.below("scalar", tol, d.norm());
        t.below("connection", tol, weyl_connection_difference(&chart, &phi, &st.x)?);
    }
    Ok(())
}

fn lemma4_lines(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-6);
    let mut r = ctx.rng();
    for (chart, st, s_end) in starts(ctx, ctx.sample_count(5), &mut r, t)? {
        let g = chart.metric_values(&st.x)?;
        let line = isotropic_partner(&g, chart.mode(), &st.v, &mut r)?;
        let phi = ctx.potential(&chart, &mut r)?;
        let lt = parallel_isotropic_line(&chart, &phi, &st, &line, s_end, 10)?;
        t.below("deviation", tol, lt.deviation);
        t.note_max("raw_deviation", lt.raw_deviation);
        t.note_max("scale_ratio", lt.scale_ratio);
        t.note_max("null_drift", lt.null_drift);
    }
    Ok(())
}

fn null_conservation(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-8);
    let mut r = ctx.rng();
    let count = if ctx.block.run.is_some() { 1 } else { ctx.sample_count(5) };
    let samples = ctx
        .block
        .run
        .as_ref()
        .and_then(|run| ctx.suite.manifest.geodesics.iter().find(|b| &b.name == run))
        .map_or(20, |b| b.samples);
    for (chart, st, s_end) in starts(ctx, count, &mut r, t)? {
        let g0 = chart.metric_values(&st.x)?;
        let q0 = bilinear(&g0, &st.v, &st.v);
        let path = integrate_geodesic(&chart, &st, s_end, samples)?;
        let scale = frobenius(&st.v).powi(2);
        let mut drift = 0.0f64;
        for smp in path.states() {
            let g = chart.metric_values(&smp.x)?;
            drift = drift.max((bilinear(&g, &smp.v, &smp.v) - q0).norm());
        }
        t.below("drift", tol, drift / scale);
        t.note_max("initial_gvv", q0.norm() / scale);
        t.note_max("steps", path.stats.accepted as f64);
    }
    Ok(())
}

fn variation(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-4);
    let mut r = ctx.rng();
    for (chart, st, s_end) in starts(ctx, ctx.sample_count(5), &mut r, t)? {
        let n = chart.dim();
        let init = JacobiState { j: unit_random(n, chart.mode(), &mut r), dj: unit_random(n, chart.mode(), &mut r) };
        t.below("mismatch", tol, jacobi_variation(&chart, &st, &init, s_end, VARIATION_EPS)?);
    }
    Ok(())
}

fn isotropic_scan(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-10);
    let wtol = ctx.block.weyl_tol.unwrap_or(1e-9);
    let planes = ctx.sample_count(50);
    pointwise(ctx, t, |chart, pack, r, t| {
        let scan = weyl_isotropic_scan(chart, &pack.point, planes, r.gen(), wtol)?;
        t.below("h_wedge", tol, scan.max_h_wedge);
        t.below("r_minus_w", ctx.tol(1e-9), scan.max_r_minus_w);
        match ctx.block.expect {
            Some(Expectation::Flat) => {
                t.below("max_sectional", wtol, scan.max_r);
                t.below("weyl_norm", wtol, scan.weyl_norm);
            }
            Some(Expectation::Curved) => t.above("max_sectional", wtol, scan.max_r),
            None => {}
        }
        t.note_max("max_sectional", scan.max_r);
        t.note_max("weyl_norm", scan.weyl_norm);
        if let Some(a) = scan.max_alpha {
            t.note_max("max_alpha", a);
        }
        if let Some(b) = scan.max_beta {
            t.note_max("max_beta", b);
        }
        if let (Some([x, y]), Some(value)) = (&ctx.block.plane, ctx.block.value) {
            let s = isotropic_sectional(pack, &to_point(x), &to_point(y))?;
            let vt = ctx.block.value_tol.unwrap_or(1e-12);
            t.below("plane_value", vt, (s.r - value.value()).norm());
            t.note_max("plane_sectional", s.r.re);
        }
        Ok(())
    })
}

fn weyl_invariance(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-7);
    let fam = ctx.family()?;
    let mut r = ctx.rng();
    for chart in &fam.members {
        let phi = ctx.potential(chart, &mut r)?;
        let resc = rescale(chart, &phi)?;
        for p in ctx.points(fam, chart, &mut r) {
            t.point(chart.mode(), &p);
            let a = ctx.pack(chart, &p)?;
            let b = ctx.pack(&resc.chart, &p)?;
            let scale = a.weyl.max_abs().max(b.weyl.max_abs());
            t.below("componentwise", tol, rel(a.weyl.sub(&b.weyl).max_abs(), scale));
            t.note_max("weyl_max", scale);
            fd_cross(ctx, chart, &a, t)?;
        }
    }
    Ok(())
}

fn weyl_split(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-9);
    pointwise(ctx, t, |chart, pack, _, t| {
        require_dim(chart, 4)?;
        let frame = oriented_frame(pack, &[])?;
        let s = weyl_pm(pack, &frame)?;
        t.below("operator", tol, s.operator_residual);
        t.below("arw_plus", tol, s.arw_plus_residual);
        t.below("arw_minus", tol, s.arw_minus_residual);
        t.below("scal_trace", ctx.tol(1e-8), s.scal_trace_residual);
        t.below("star_square", tol, s.star_square_residual);
        Ok(())
    })
}

fn fd_agreement(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(ctx.suite.manifest.settings.fd_tol);
    pointwise(ctx, t, |chart, pack, _, t| {
        for &q in fd_quantities(CheckName::FdAgreement) {
            if q == FdQuantity::DivWeyl && pack.n < 4 {
                continue;
            }
            t.below(fd_label(q), tol, fd_residual(ctx, chart, pack, q)?);
        }
        Ok(())
    })
}

fn curvature_symmetries(ctx: &Ctx, t: &mut Tally) -> Result<()> {
    let tol = ctx.tol(1e-10);
    pointwise(ctx, t, |_, pack, _, t| {
        let (anti, pair, first) = pack.algebraic_residuals();
        t.below("antisymmetry", tol, anti);
        t.below("pair_symmetry", tol, pair);
        t.below("first_bianchi", tol, first);
        // ∇R is assembled from ∂R and Γ·R terms; cancellation is measured against both.
        let scale = pack.nabla_riemann.norm() + pack.gamma.norm() * pack.riemann_down.norm();
        t.below("second_bianchi", tol, rel(pack.second_bianchi_defect(), scale));
        t.below("weyl_trace", tol, pack.weyl_trace_residual());
        Ok(())
    })
}
