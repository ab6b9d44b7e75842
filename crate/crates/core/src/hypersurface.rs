//! Embedded hypersurfaces: induced metric, unit normal, second fundamental
//! form, umbilicity, the totally geodesic gauge, and the boundary identities
//! relating the Weyl tensor of a self-dual 4-manifold to the Cotton–York
//! tensor of an umbilic hypersurface.

use nalgebra::DMatrix;
use rand::Rng;

use crate::conformal::{rescale, ConformalRescaling};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet, JetEnv};
use crate::fourdim;
use crate::scalar::{Mode, C64, ZERO};
use crate::tensor::{
    bilinear, orthonormal_frame, CurvaturePack, LocalJets, MetricChart, MetricField, PointFrame, Tensor, TensorAtPoint,
};

/// Hypersurface `M ⊂ N` given by an embedding of an `(n−1)`-parameter chart.
#[derive(Debug, Clone)]
pub struct HypersurfaceSpec {
    pub name: String,
    pub ambient: MetricChart,
    pub parameters: Vec<String>,
    /// Ambient coordinates as functions of the parameters.
    pub embedding: Vec<Expr>,
    pub domain: Option<Vec<(f64, f64)>>,
    /// Multiplies the normal orientation (see [`HypersurfaceSpec::normal_coordinate`]).
    pub normal_sign: i8,
    /// Ambient function vanishing on `M`; when present, `ν` is oriented so that
    /// `ds(ν) > 0` before applying `normal_sign`.
    pub normal_coordinate: Option<Expr>,
    /// Explicit factor `f` for the gauge potential `φ = f·s`, used when the
    /// mean curvature is not constant along the samples.
    pub gauge_factor: Option<Expr>,
}

impl HypersurfaceSpec {
    pub fn new(name: &str, ambient: MetricChart, parameters: &[&str], embedding: Vec<Expr>) -> Result<Self> {
        let n = ambient.dim();
        if parameters.len() + 1 != n || embedding.len() != n {
            return Err(Error::InvalidArgument(format!(
                "hypersurface of a {n}-dimensional chart needs {} parameters and {n} embedding components",
                n - 1
            )));
        }
        Ok(HypersurfaceSpec {
            name: name.to_string(),
            ambient,
            parameters: parameters.iter().map(|s| s.to_string()).collect(),
            embedding,
            domain: None,
            normal_sign: 1,
            normal_coordinate: None,
            gauge_factor: None,
        })
    }

    pub fn with_normal_coordinate(mut self, s: Expr) -> Self {
        self.normal_coordinate = Some(s);
        self
    }

    pub fn with_normal_sign(mut self, sign: i8) -> Self {
        self.normal_sign = if sign < 0 { -1 } else { 1 };
        self
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_gauge_factor(mut self, f: Expr) -> Self {
        self.gauge_factor = Some(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.parameters.len()
    }

    /// Same hypersurface inside a different metric on the same coordinates.
    pub fn with_ambient(&self, ambient: MetricChart) -> Self {
        HypersurfaceSpec { ambient, ..self.clone() }
    }

    fn param_env(&self, u: &[C64], order: usize) -> Result<JetEnv<'_>> {
        if u.len() != self.dim() {
            return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", self.dim(), u.len())));
        }
        let mut env = JetEnv::coordinates(&self.parameters, u, order, self.ambient.mode())?;
        for (name, v) in self.ambient.parameters() {
            env.bind_param(name, *v);
        }
        Ok(env)
    }

    /// Embedding jets `F^i(u)`.
    pub fn embedding_jets(&self, u: &[C64], order: usize) -> Result<Vec<Jet>> {
        let env = self.param_env(u, order)?;
        Ok(self.embedding.iter().map(|e| e.eval_jet(&env)).collect::<Result<Vec<_>, _>>()?)
    }

    pub fn embed(&self, u: &[C64]) -> Result<Vec<C64>> {
        Ok(self.embedding_jets(u, 0)?.iter().map(Jet::value).collect())
    }

    /// Normal coordinate: the declared one, or `x_k − c` when the embedding
    /// fixes coordinate `k` to the constant `c` and maps parameters onto the
    /// remaining coordinates.
    pub fn normal_function(&self) -> Option<Expr> {
        if let Some(s) = &self.normal_coordinate {
            return Some(s.clone());
        }
        let coords = self.ambient.coordinates();
        let mut fixed = None;
        for (k, e) in self.embedding.iter().enumerate() {
            match e {
                Expr::Ident(name) if self.parameters.contains(name) => {}
                Expr::Num(c) if fixed.is_none() => fixed = Some((k, *c)),
                _ => return None,
            }
        }
        let (k, c) = fixed?;
        Some(Expr::ident(&coords[k]) - Expr::num(c))
    }

    /// Parameter points drawn from the domain box (`[-1, 1]` when absent).
    pub fn random_parameters(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<C64>> {
        let unit = vec![(-1.0, 1.0); self.dim()];
        let domain = self.domain.as_deref().unwrap_or(&unit);
        (0..count).map(|_| domain.iter().map(|&(a, b)| C64::new(rng.gen_range(a..=b), 0.0)).collect()).collect()
    }
}

/// The induced metric as a field over the parameter chart.
pub struct InducedMetric<'a> {
    pub spec: &'a HypersurfaceSpec,
}

impl MetricField for InducedMetric<'_> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn mode(&self) -> Mode {
        self.spec.ambient.mode()
    }

    fn domain(&self) -> Option<&[(f64, f64)]> {
        self.spec.domain.as_deref()
    }

    fn metric_jets(&self, u: &[C64], order: usize) -> Result<Vec<Jet>> {
        let spec = self.spec;
        let m = spec.dim();
        let n = m + 1;
        let f = spec.embedding_jets(u, order + 1)?;
        let df: Vec<Vec<Jet>> = (0..m).map(|a| f.iter().map(|fi| fi.diff(a)).collect()).collect();
        let mut env = JetEnv::new(m, order, spec.ambient.mode())?;
        for (name, fi) in spec.ambient.coordinates().iter().zip(&f) {
            env.bind(name, fi.truncate(order));
        }
        for (name, v) in spec.ambient.parameters() {
            env.bind_param(name, *v);
        }
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(spec.ambient.component(i, j).eval_jet(&env)?);
            }
        }
        let mut out = vec![Jet::zero(m, order); m * m];
        for a in 0..m {
            for b in a..m {
                let mut acc = Jet::zero(m, order);
                for i in 0..n {
                    for j in 0..n {
                        acc = &acc + &(&(&df[a][i] * &df[b][j]) * &g[i * n + j]);
                    }
                }
                out[b * m + a] = acc.clone();
                out[a * m + b] = acc;
            }
        }
        Ok(out)
    }
}

/// Pointwise extrinsic data of the hypersurface.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub mode: Mode,
    pub parameters: Vec<C64>,
    pub point: Vec<C64>,
    /// `∂_a F` in ambient coordinates.
    pub tangents: Vec<Vec<C64>>,
    /// Unit normal `ν`, `g(ν,ν) = eps_normal`.
    pub normal: Vec<C64>,
    pub eps_normal: f64,
    /// Induced metric values `ĝ_ab`.
    pub induced: TensorAtPoint,
    /// `II_ab = g(∇_{∂_a F} ∂_b F, ν)`.
    pub second_form: TensorAtPoint,
    /// `tr II / (n−1)`.
    pub lambda: C64,
}

impl ShapeData {
    /// `max |II − λĝ|` in a `ĝ`-orthonormal frame.
    pub fn umbilic_residual(&self) -> Result<f64> {
        let frame = orthonormal_frame(self.induced.data(), self.mode, &self.parameters, &[])?;
        let diff = self.second_form.sub(&self.induced.scale(self.lambda));
        Ok(diff.in_frame(&frame, self.induced.data()).max_abs())
    }

    /// Pushes a parameter-space vector forward to the ambient.
    pub fn push_forward(&self, v: &[C64]) -> Vec<C64> {
        let n = self.point.len();
        (0..n).map(|i| v.iter().zip(&self.tangents).map(|(c, t)| c * t[i]).sum()).collect()
    }
}

fn describe(u: &[C64]) -> String {
    format!("{:?}", u.iter().map(|c| c.re).collect::<Vec<_>>())
}

/// Induced geometry at a parameter point.
pub fn induced_geometry(spec: &HypersurfaceSpec, u: &[C64]) -> Result<ShapeData> {
    let m = spec.dim();
    let n = m + 1;
    let mode = spec.ambient.mode();
    let f = spec.embedding_jets(u, 2)?;
    let point: Vec<C64> = f.iter().map(Jet::value).collect();
    let tangents: Vec<Vec<C64>> = (0..m).map(|a| f.iter().map(|fi| fi.d1(a)).collect()).collect();

    let jac = DMatrix::from_fn(n, m, |i, a| tangents[a][i]);
    let sv = jac.svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-8 * smax) {
        return Err(Error::RankDeficient(describe(u)));
    }

    let local = LocalJets::compute(&spec.ambient, &point, 1)?;
    let g = local.metric_values();
    let ginv = local.inverse_values();
    let gamma = local.christoffel_values();

    let induced = Tensor::from_fn(m, &[crate::tensor::Variance::Down; 2], |x| {
        bilinear(g.data(), &tangents[x[0]], &tangents[x[1]])
    });
    let det = DMatrix::from_row_slice(m, m, induced.data()).lu().determinant();
    let scale: f64 = (0..m).map(|a| crate::scalar::frobenius(&induced.data()[a * m..(a + 1) * m])).product();
    if !(det.norm() > 1e-12 * scale) {
        return Err(Error::DegenerateInducedMetric(describe(u)));
    }

    // Normal covector from cofactors, then raised and normalized.
    let cof: Vec<C64> = (0..n)
        .map(|i| {
            DMatrix::from_fn(n, n, |r, c| if r == 0 { if c == i { C64::new(1.0, 0.0) } else { ZERO } } else { tangents[r - 1][c] })
                .lu()
                .determinant()
        })
        .collect();
    let mut nu: Vec<C64> = (0..n).map(|i| (0..n).map(|j| ginv.get(&[i, j]) * cof[j]).sum()).collect();
    let q = bilinear(g.data(), &nu, &nu);
    let len2: f64 = nu.iter().map(|c| c.norm_sqr()).sum();
    if q.norm() <= 1e-10 * crate::scalar::max_abs(g.data()) * len2 {
        return Err(Error::NullNormal(describe(u)));
    }
    let (norm, eps_normal) = match mode {
        Mode::Real => (C64::new(q.re.abs().sqrt(), 0.0), q.re.signum()),
        Mode::Complex => (q.sqrt(), 1.0),
    };
    for c in nu.iter_mut() {
        *c /= norm;
    }
    let mut sign = f64::from(spec.normal_sign);
    if let Some(s) = spec.normal_function() {
        let ds = spec.ambient.field_jets(std::slice::from_ref(&s), &point, 1)?.remove(0);
        let dsnu: C64 = (0..n).map(|i| ds.d1(i) * nu[i]).sum();
        if dsnu.re < 0.0 {
            sign = -sign;
        }
    }
    for c in nu.iter_mut() {
        *c *= sign;
    }

    // II_ab = g(∂_a∂_b F + Γ(∂_a F, ∂_b F), ν)
    let second_form = Tensor::from_fn(m, &[crate::tensor::Variance::Down; 2], |x| {
        let (a, b) = (x[0], x[1]);
        let mut alpha = [0usize; 6];
        alpha[a] += 1;
        alpha[b] += 1;
        let acc: Vec<C64> = (0..n)
            .map(|k| {
                let mut v = f[k].derivative(&alpha[..m]);
                for i in 0..n {
                    for j in 0..n {
                        v += gamma.get(&[k, i, j]) * tangents[a][i] * tangents[b][j];
                    }
                }
                v
            })
            .collect();
        bilinear(g.data(), &acc, &nu)
    });
    let ind_inv = DMatrix::from_row_slice(m, m, induced.data())
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInducedMetric(describe(u)))?;
    let mut tr = ZERO;
    for a in 0..m {
        for b in 0..m {
            tr += ind_inv[(a, b)] * second_form.get(&[a, b]);
        }
    }
    Ok(ShapeData {
        mode,
        parameters: u.to_vec(),
        point,
        tangents,
        normal: nu,
        eps_normal,
        induced,
        second_form,
        lambda: tr / m as f64,
    })
}

#[derive(Debug, Clone)]
pub struct Umbilicity {
    pub residual: f64,
    pub lambdas: Vec<C64>,
}

impl Umbilicity {
    pub fn is_umbilic(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

pub fn umbilicity(spec: &HypersurfaceSpec, samples: &[Vec<C64>]) -> Result<Umbilicity> {
    let mut residual = 0.0f64;
    let mut lambdas = Vec::with_capacity(samples.len());
    for u in samples {
        let shape = induced_geometry(spec, u)?;
        residual = residual.max(shape.umbilic_residual()?);
        lambdas.push(shape.lambda);
    }
    Ok(Umbilicity { residual, lambdas })
}

/// Default umbilicity tolerance for the gauge precondition.
pub const UMBILIC_TOL: f64 = 1e-8;

/// Conformal factor `φ = f·s` with `φ|_M = 0` and `dφ(ν) = λ` on `M`, which
/// makes `M` totally geodesic for `e^{2φ}g` (`II' = e^φ(II − dφ(ν)·ĝ)`).
/// Without an explicit factor, `f = λ / ds(ν)` must be constant on the samples.
pub fn totally_geodesic_gauge(spec: &HypersurfaceSpec, samples: &[Vec<C64>]) -> Result<ConformalRescaling> {
    let umb = umbilicity(spec, samples)?;
    if !umb.is_umbilic(UMBILIC_TOL) {
        return Err(Error::NotUmbilic(umb.residual));
    }
    if let Some(f) = &spec.gauge_factor {
        let s = spec.normal_function().ok_or_else(|| Error::Gauge("gauge factor given without a normal coordinate".into()))?;
        return rescale(&spec.ambient, &(f.clone() * s));
    }
    if umb.lambdas.iter().all(|l| l.norm() < 1e-12) {
        return rescale(&spec.ambient, &Expr::num(0.0));
    }
    let s = spec
        .normal_function()
        .ok_or_else(|| Error::Gauge("no normal coordinate declared and the embedding is not a coordinate hyperplane".into()))?;
    let mut factors = Vec::with_capacity(samples.len());
    for (u, lambda) in samples.iter().zip(&umb.lambdas) {
        let shape = induced_geometry(spec, u)?;
        let ds = spec.ambient.field_jets(std::slice::from_ref(&s), &shape.point, 1)?.remove(0);
        let k: C64 = (0..shape.point.len()).map(|i| ds.d1(i) * shape.normal[i]).sum();
        if k.norm() < 1e-12 {
            return Err(Error::Gauge("normal coordinate has no normal derivative".into()));
        }
        factors.push(lambda / k);
    }
    let f0 = factors[0];
    let spread = factors.iter().map(|f| (f - f0).norm()).fold(0.0, f64::max);
    if spread > 1e-8 * f0.norm().max(1.0) {
        return Err(Error::Gauge(format!(
            "λ/ds(ν) varies along the samples (spread {spread:e}); declare a gauge factor"
        )));
    }
    let factor = if f0.im == 0.0 {
        Expr::num(f0.re)
    } else {
        Expr::num(f0.re) + Expr::num(f0.im) * Expr::ident("i")
    };
    rescale(&spec.ambient, &(factor * s))
}

/// Tolerances and sampling controls for the boundary identities.
#[derive(Debug, Clone)]
pub struct Thm1Options {
    /// Gate: `‖W⁻‖ < self_dual_tol·‖R‖` on the collar.
    pub self_dual_tol: f64,
    /// Collar depth along `±ν`.
    pub collar: f64,
    /// Extra randomly rotated tangent frames per point.
    pub rotations: usize,
    pub seed: u64,
}

impl Default for Thm1Options {
    fn default() -> Self {
        Thm1Options { self_dual_tol: 1e-6, collar: 3e-3, rotations: 2, seed: 0 }
    }
}

/// Residual families of the boundary identities, maxima over the samples.
#[derive(Debug, Clone, Default)]
pub struct Thm1Report {
    /// `max ‖W⁺‖ / ‖R‖` on `M` (frame components).
    pub weyl_plus: f64,
    /// Relative mismatch of `⟨∇_ν W⁺(X,Y)Z,X⟩ = −C^M(X,Y)(Y)`.
    pub cyw: f64,
    pub cyw_lhs: f64,
    pub cyw_rhs: f64,
    /// Relative mismatch of `C⁺ = C^M` on tangent vectors.
    pub cotton: f64,
    pub cotton_norm: f64,
    /// Gauss equation residual `R(X,Y)Z = R^M(X,Y)Z`, relative to `‖R‖`.
    pub tgeod: f64,
    /// `⟨R(X,Y)Z,X⟩ + ⟨R(Z,ν)Y,ν⟩`, relative to `‖R‖`.
    pub rq: f64,
    /// `⟨W⁺(X,Y)Z,X⟩ = ½(⟨R(X,Y)Y,ν⟩ + ⟨R(Z,X)Z,ν⟩)`, relative to `‖R‖`.
    pub w1: f64,
    /// Largest `‖W⁻‖/‖R‖` seen by the self-duality gate.
    pub self_dual_ratio: f64,
    /// Second fundamental form after gauging, max over samples.
    pub gauged_second_form: f64,
    pub lambda: C64,
}

fn ratio(a: f64, b: f64) -> f64 {
    a / (b + 1e-12)
}

/// Checks the self-duality gate at `p` and the two collar points `p ± d·ν`.
fn self_dual_gate(spec: &HypersurfaceSpec, shape: &ShapeData, opts: &Thm1Options) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in [0.0, opts.collar, -opts.collar] {
        let p: Vec<C64> = shape.point.iter().zip(&shape.normal).map(|(x, v)| x + v * t).collect();
        let pack = CurvaturePack::compute(&spec.ambient, &p)?;
        let parts = pack.self_dual.as_ref().ok_or(Error::LorentzianUnsupported)?;
        worst = worst.max(ratio(parts.weyl_minus.norm(), pack.riemann_down.norm()));
    }
    if worst >= opts.self_dual_tol {
        return Err(Error::AmbientNotSelfDual(worst));
    }
    Ok(worst)
}

/// Adapted frames `(X, Y, Z, ν)`: a `ĝ`-orthonormal tangent frame (plus random
/// rotations) pushed forward, with `Z` flipped when needed so that
/// `(X, Y, Z, ν)` is positively oriented in `N`. Returns tangent frames in
/// parameter components and the ambient frames.
fn adapted_frames(
    shape: &ShapeData,
    pack: &CurvaturePack,
    opts: &Thm1Options,
    rng: &mut impl Rng,
) -> Result<Vec<(Vec<Vec<C64>>, PointFrame)>> {
    let m = shape.induced.dim();
    let mode = pack.mode;
    let sqrt_det = fourdim::sqrt_det(&pack.g, mode)?;
    let mut seeds_list: Vec<Vec<Vec<C64>>> = vec![Vec::new()];
    for _ in 0..opts.rotations {
        seeds_list.push((0..m).map(|_| (0..m).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect()).collect());
    }
    let mut out = Vec::new();
    for seeds in seeds_list {
        let tf = orthonormal_frame(shape.induced.data(), mode, &shape.parameters, &seeds)?;
        let mut tangent = tf.vectors.clone();
        let mut vectors: Vec<Vec<C64>> = tangent.iter().map(|v| shape.push_forward(v)).collect();
        vectors.push(shape.normal.clone());
        let mut eps = tf.eps.clone();
        eps.push(shape.eps_normal);
        let mut frame = PointFrame {
            point: shape.point.clone(),
            gram: Vec::new(),
            vectors,
            eps,
            kind: crate::tensor::FrameKind::Orthonormal,
        };
        frame.refresh(pack.g.data());
        let vol = frame.determinant() * sqrt_det * f64::from(pack.orientation);
        if vol.re < 0.0 {
            for c in frame.vectors[m - 1].iter_mut() {
                *c = -*c;
            }
            for c in tangent[m - 1].iter_mut() {
                *c = -*c;
            }
            frame.refresh(pack.g.data());
        }
        frame.require_orthonormal()?;
        out.push((tangent, frame));
    }
    Ok(out)
}

/// Verifies the boundary identities on `M ⊂ N⁴` at the given parameter samples.
pub fn thm1_check(spec: &HypersurfaceSpec, samples: &[Vec<C64>], opts: &Thm1Options) -> Result<Thm1Report> {
    if spec.ambient.dim() != 4 {
        return Err(Error::WrongDimension { required: 4, found: spec.ambient.dim() });
    }
    let mut report = Thm1Report::default();
    for u in samples {
        let shape = induced_geometry(spec, u)?;
        report.self_dual_ratio = report.self_dual_ratio.max(self_dual_gate(spec, &shape, opts)?);
    }
    let gauge = totally_geodesic_gauge(spec, samples)?;
    let gauged = spec.with_ambient(gauge.chart.clone());
    let mut rng = crate::random::rng(opts.seed);
    let (mut lhs_max, mut rhs_max, mut cyw_diff) = (0.0f64, 0.0f64, 0.0f64);
    let (mut cp_diff, mut cp_scale) = (0.0f64, 0.0f64);
    for u in samples {
        let shape = induced_geometry(&gauged, u)?;
        report.gauged_second_form = report.gauged_second_form.max(shape.second_form.max_abs());
        report.lambda = induced_geometry(spec, u)?.lambda;
        let pack = CurvaturePack::compute(&gauged.ambient, &shape.point)?;
        let parts = pack.self_dual.as_ref().ok_or(Error::LorentzianUnsupported)?;
        let induced = InducedMetric { spec: &gauged };
        let mpack = CurvaturePack::compute(&induced, u)?;
        let rscale = pack.riemann_down.norm();

        for (tangent, frame) in adapted_frames(&shape, &pack, opts, &mut rng)? {
            let g = pack.g.data();
            let r = pack.riemann_down.in_frame(&frame, g);
            let wp = parts.weyl_plus.in_frame(&frame, g);
            let nwp = parts.nabla_weyl_plus.in_frame(&frame, g);
            report.weyl_plus = report.weyl_plus.max(ratio(wp.norm(), r.norm()));

            // Intrinsic tensors of M on the same tangent frame.
            let tframe = PointFrame {
                point: u.to_vec(),
                vectors: tangent.clone(),
                gram: Vec::new(),
                eps: frame.eps[..3].to_vec(),
                kind: crate::tensor::FrameKind::Orthonormal,
            };
            let cm = mpack.cotton.in_frame(&tframe, mpack.g.data());
            let rm = mpack.riemann_down.in_frame(&tframe, mpack.g.data());
            let cplus = parts.cotton_plus.in_frame(&frame, g);
            let e = &frame.eps;
            let nu = 3;
            for [x, y, z] in [[0, 1, 2], [1, 2, 0], [2, 0, 1]] {
                // ⟨∇_ν W⁺(X,Y)Z, X⟩ = (∇_ν W⁺)_{XYXZ}
                let lhs = *nwp.get(&[nu, x, y, x, z]);
                let rhs = -*cm.get(&[x, y, y]);
                lhs_max = lhs_max.max(lhs.norm());
                rhs_max = rhs_max.max(rhs.norm());
                cyw_diff = cyw_diff.max((lhs - rhs).norm());

                let b = |t: &TensorAtPoint, a: usize, bb: usize, c: usize, d: usize| *t.get(&[a, bb, d, c]);
                let rq = b(&r, x, y, z, x) + b(&r, z, nu, y, nu) * (e[y] * e[z]);
                report.rq = report.rq.max(ratio(rq.norm(), rscale));
                let w1 = b(&wp, x, y, z, x)
                    - (b(&r, x, y, y, nu) * (e[y] * e[nu]) + b(&r, z, x, z, nu) * (e[z] * e[nu])) * 0.5;
                report.w1 = report.w1.max(ratio(w1.norm(), rscale));
            }
            for a in 0..3 {
                for bb in 0..3 {
                    for c in 0..3 {
                        cp_diff = cp_diff.max((cplus.get(&[a, bb, c]) - cm.get(&[a, bb, c])).norm());
                        cp_scale = cp_scale.max(cm.get(&[a, bb, c]).norm()).max(cplus.get(&[a, bb, c]).norm());
                        for d in 0..3 {
                            let dv = (r.get(&[a, bb, c, d]) - rm.get(&[a, bb, c, d])).norm();
                            report.tgeod = report.tgeod.max(ratio(dv, rscale));
                        }
                    }
                }
            }
        }
    }
    report.cyw_lhs = lhs_max;
    report.cyw_rhs = rhs_max;
    report.cyw = cyw_diff / (lhs_max + rhs_max + 1e-12);
    report.cotton = cp_diff / (cp_scale + 1e-12);
    report.cotton_norm = cp_scale;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::scalar::re;

    fn flat4() -> MetricChart {
        MetricChart::diagonal("flat", &["x", "y", "z", "t"], Mode::Real, &["1", "1", "1", "1"]).unwrap()
    }

    fn sphere_in_r4() -> HypersurfaceSpec {
        let emb = ["cos(a)", "sin(a)*cos(b)", "sin(a)*sin(b)*cos(c)", "sin(a)*sin(b)*sin(c)"]
            .iter()
            .map(|s| parse(s).unwrap())
            .collect();
        HypersurfaceSpec::new("s3", flat4(), &["a", "b", "c"], emb)
            .unwrap()
            .with_normal_coordinate(parse("sqrt(x^2 + y^2 + z^2 + t^2) - 1").unwrap())
            .with_domain(vec![(0.5, 2.5), (0.5, 2.5), (0.0, 6.0)])
    }

    fn u(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| re(x)).collect()
    }

    #[test]
    fn hyperplane_is_flat_and_totally_geodesic() {
        let emb = vec![parse("a").unwrap(), parse("b").unwrap(), parse("c").unwrap(), parse("1").unwrap()];
        let spec = HypersurfaceSpec::new("plane", flat4(), &["a", "b", "c"], emb).unwrap();
        let shape = induced_geometry(&spec, &u(&[0.1, 0.2, 0.3])).unwrap();
        assert!(shape.second_form.max_abs() == 0.0);
        assert_eq!(shape.lambda, ZERO);
        let s = spec.normal_function().unwrap();
        assert_eq!(format!("{s}"), "t - 1");
        let pack = CurvaturePack::compute(&InducedMetric { spec: &spec }, &u(&[0.1, 0.2, 0.3])).unwrap();
        assert!(pack.riemann.max_abs() == 0.0);
    }

    #[test]
    fn round_sphere_in_flat_space() {
        let spec = sphere_in_r4();
        let samples = spec.random_parameters(5, &mut crate::random::rng(3));
        let umb = umbilicity(&spec, &samples).unwrap();
        assert!(umb.residual < 1e-12);
        for l in &umb.lambdas {
            assert!((l - re(-1.0)).norm() < 1e-12);
        }
        let pack = CurvaturePack::compute(&InducedMetric { spec: &spec }, &samples[0]).unwrap();
        assert!((pack.scal - re(6.0)).norm() < 1e-10);

        let gauge = totally_geodesic_gauge(&spec, &samples).unwrap();
        let gauged = spec.with_ambient(gauge.chart);
        for p in &samples {
            assert!(induced_geometry(&gauged, p).unwrap().second_form.max_abs() < 1e-6);
        }
    }

    #[test]
    fn graph_is_not_umbilic() {
        let emb = ["a", "b", "c", "0.1*a^2 + 0.3*b*c"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("graph", flat4(), &["a", "b", "c"], emb)
            .unwrap()
            .with_normal_coordinate(parse("t - 0.1*x^2 - 0.3*y*z").unwrap());
        let samples = vec![u(&[0.3, 0.2, -0.4]), u(&[0.5, -0.1, 0.2])];
        assert!(umbilicity(&spec, &samples).unwrap().residual > 0.01);
        assert!(matches!(totally_geodesic_gauge(&spec, &samples), Err(Error::NotUmbilic(_))));
    }

    #[test]
    fn equator_of_the_four_sphere_is_totally_geodesic() {
        let f = "4/(1 + x^2 + y^2 + z^2 + t^2)^2";
        let s4 = MetricChart::diagonal("s4", &["x", "y", "z", "t"], Mode::Real, &[f, f, f, f]).unwrap();
        let emb = ["a", "b", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("eq", s4, &["a", "b", "c"], emb).unwrap();
        let samples = vec![u(&[0.3, 0.2, -0.4]), u(&[0.5, -0.1, 0.2])];
        let umb = umbilicity(&spec, &samples).unwrap();
        assert!(umb.lambdas.iter().all(|l| l.norm() < 1e-14));
        let gauge = totally_geodesic_gauge(&spec, &samples).unwrap();
        assert!(gauge.phi.is_zero_literal());
    }

    #[test]
    fn rank_deficient_embedding() {
        let emb = ["a", "a", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("bad", flat4(), &["a", "b", "c"], emb).unwrap();
        assert!(matches!(induced_geometry(&spec, &u(&[0.1, 0.2, 0.3])), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn null_normal_is_rejected() {
        let split = MetricChart::diagonal("split", &["x", "y", "z", "t"], Mode::Real, &["1", "-1", "1", "-1"]).unwrap();
        let emb = ["a", "a", "b", "c"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("null", split, &["a", "b", "c"], emb).unwrap();
        assert!(matches!(
            induced_geometry(&spec, &u(&[0.1, 0.2, 0.3])),
            Err(Error::NullNormal(_)) | Err(Error::DegenerateInducedMetric(_))
        ));
    }

    #[test]
    fn flat_hyperplane_identities_vanish() {
        let emb = ["a", "b", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("plane", flat4(), &["a", "b", "c"], emb).unwrap();
        let samples = vec![u(&[0.3, 0.2, -0.4])];
        let rep = thm1_check(&spec, &samples, &Thm1Options::default()).unwrap();
        for v in [rep.weyl_plus, rep.cyw_lhs, rep.cyw_rhs, rep.cotton_norm, rep.tgeod, rep.rq, rep.w1] {
            assert!(v < 1e-10);
        }
    }

    #[test]
    fn reflection_symmetric_metrics_satisfy_gauss_equation() {
        let recipe = crate::random::MetricRecipe { even_in: Some(3), ..crate::random::MetricRecipe::riemannian(4) };
        let chart = crate::random::random_metric(&recipe, 12).unwrap();
        let emb = ["a", "b", "c", "0"].iter().map(|s| parse(s).unwrap()).collect();
        let spec = HypersurfaceSpec::new("fix", chart, &["a", "b", "c"], emb).unwrap();
        let opts = Thm1Options { self_dual_tol: f64::INFINITY, ..Thm1Options::default() };
        let rep = thm1_check(&spec, &[u(&[0.1, -0.2, 0.2])], &opts).unwrap();
        assert!(rep.tgeod < 1e-8, "{:e}", rep.tgeod);
        assert!(rep.gauged_second_form < 1e-12);
    }
}
