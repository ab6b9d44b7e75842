//! Null geodesics, Jacobi fields and the conformally invariant pieces of the
//! Jacobi operator along them; isotropic cones and isotropic-plane curvature.

mod isotropic;
mod ode;

pub use isotropic::{
    isotropic_sectional, sample_isotropic_planes, sectional_value, tensor_k, weyl_isotropic_scan, IsotropicScan,
    IsotropicSectional, TensorK,
};
pub use ode::{Dopri5, OdeStats};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::conformal::rescale;
use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::scalar::{Mode, C64, ZERO};
use crate::tensor::{bilinear, LocalJets, MetricChart, MetricField, TensorAtPoint};

/// `Γ(u, w)^k = Γ^k_ij u^i w^j`.
pub(crate) fn gamma_apply(gamma: &TensorAtPoint, u: &[C64], w: &[C64]) -> Vec<C64> {
    let n = u.len();
    let d = gamma.data();
    (0..n)
        .map(|k| {
            let mut acc = ZERO;
            for i in 0..n {
                if u[i] == ZERO {
                    continue;
                }
                for j in 0..n {
                    acc += d[(k * n + i) * n + j] * u[i] * w[j];
                }
            }
            acc
        })
        .collect()
}

/// `(R(X,Y)Z)^l` from `R[i,j,k,l]`.
pub(crate) fn curvature_apply(r: &TensorAtPoint, x: &[C64], y: &[C64], z: &[C64]) -> Vec<C64> {
    let n = x.len();
    let d = r.data();
    let mut out = vec![ZERO; n];
    for i in 0..n {
        for j in 0..n {
            let xy = x[i] * y[j];
            if xy == ZERO {
                continue;
            }
            for k in 0..n {
                let c = xy * z[k];
                for (l, o) in out.iter_mut().enumerate() {
                    *o += c * d[((i * n + j) * n + k) * n + l];
                }
            }
        }
    }
    out
}

pub(crate) fn euclid_norm(v: &[C64]) -> f64 {
    crate::scalar::frobenius(v)
}

/// `d` minus its Hermitian projection on `span{v}`: the representative of
/// `d mod v` in the coordinate-orthogonal complement.
pub(crate) fn modulo(v: &[C64], d: &[C64]) -> Vec<C64> {
    let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let c: C64 = v.iter().zip(d).map(|(a, b)| a.conj() * b).sum::<C64>() / vv;
    d.iter().zip(v).map(|(b, a)| b - c * a).collect()
}

/// Sine of the Hermitian angle between two lines.
pub(crate) fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
    euclid_norm(&modulo(a, b)) / euclid_norm(b)
}

fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scaled(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

/// Unit coordinate-norm null vectors at `point`, from the quadric restricted
/// to random 2-planes (planes where it has rank < 2 are rejected).
pub fn sample_isotropy_cone(field: &dyn MetricField, point: &[C64], count: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    let g = field.metric_values(point)?;
    cone_vectors(&g, field.mode(), count, &mut crate::random::rng(seed))
}

pub(crate) fn cone_vectors(g: &[C64], mode: Mode, count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<C64>>> {
    let n = (g.len() as f64).sqrt() as usize;
    if mode.is_real() {
        let m = DMatrix::from_fn(n, n, |i, j| g[i * n + j].re);
        let eig = SymmetricEigen::new(m).eigenvalues;
        if eig.iter().all(|e| *e > 0.0) || eig.iter().all(|e| *e < 0.0) {
            return Err(Error::NoNullVectors);
        }
    }
    let scale = crate::scalar::max_abs(g);
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(Error::NoNullVectors);
        }
        let a = random_vector(n, mode, rng);
        let b = random_vector(n, mode, rng);
        let Some(v) = null_on_plane(g, mode, &a, &b, scale) else { continue };
        if out.iter().all(|w| projective_distance(w, &v) > 1e-6) {
            out.push(v);
        }
    }
    Ok(out)
}

pub(crate) fn random_vector(n: usize, mode: Mode, rng: &mut impl Rng) -> Vec<C64> {
    (0..n)
        .map(|_| match mode {
            Mode::Real => C64::new(rng.gen_range(-1.0..1.0), 0.0),
            Mode::Complex => C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        })
        .collect()
}

/// A null vector `a + t·b` of unit coordinate norm, if the quadric restricted
/// to `span{a, b}` has rank 2 and a root exists in the scalar field.
pub(crate) fn null_on_plane(g: &[C64], mode: Mode, a: &[C64], b: &[C64], scale: f64) -> Option<Vec<C64>> {
    let qa = bilinear(g, a, a);
    let qb = bilinear(g, b, b);
    let qab = bilinear(g, a, b);
    let na = euclid_norm(a);
    let nb = euclid_norm(b);
    let disc = qab * qab - qa * qb;
    if disc.norm() < 1e-8 * scale * scale * na * na * nb * nb || qb.norm() < 1e-8 * scale * nb * nb {
        return None;
    }
    let root = match mode {
        Mode::Real if disc.re < 0.0 => return None,
        Mode::Real => C64::new(disc.re.sqrt(), 0.0),
        Mode::Complex => disc.sqrt(),
    };
    let t = (-qab + root) / qb;
    let v = add(a, &scaled(b, t));
    let nv = euclid_norm(&v);
    let v = scaled(&v, C64::new(1.0 / nv, 0.0));
    // One Newton correction along b for rounding.
    let q = bilinear(g, &v, &v);
    let dq = bilinear(g, &v, b) * 2.0;
    let v = if dq.norm() > 0.0 { sub(&v, &scaled(b, q / dq)) } else { v };
    let nv = euclid_norm(&v);
    Some(scaled(&v, C64::new(1.0 / nv, 0.0)))
}

/// Position, velocity and affine parameter.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub s: f64,
    pub x: Vec<C64>,
    pub v: Vec<C64>,
}

/// `J` and its covariant derivative `J̇ = ∇_γ̇ J`.
#[derive(Debug, Clone)]
pub struct JacobiState {
    pub j: Vec<C64>,
    pub dj: Vec<C64>,
}

/// A geodesic with fields carried along it: Jacobi fields of the geodesic's
/// own metric, and vectors parallel for possibly different metrics.
pub struct Flow<'a> {
    pub field: &'a dyn MetricField,
    pub jacobi: Vec<JacobiState>,
    pub transport: Vec<(Vec<C64>, &'a dyn MetricField)>,
    pub ode: Dopri5,
}

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub state: GeodesicState,
    pub jacobi: Vec<JacobiState>,
    pub transported: Vec<Vec<C64>>,
}

#[derive(Debug, Clone)]
pub struct FlowPath {
    pub samples: Vec<FlowSample>,
    pub stats: OdeStats,
    /// `max |g(γ̇, γ̇)|` over the samples.
    pub null_drift: f64,
}

impl FlowPath {
    pub fn states(&self) -> impl Iterator<Item = &GeodesicState> {
        self.samples.iter().map(|s| &s.state)
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("a flow path has at least its initial sample")
    }
}

fn check_domain(field: &dyn MetricField, x: &[C64], s: f64) -> Result<()> {
    if let Some(dom) = field.domain() {
        if x.iter().zip(dom).any(|(c, &(lo, hi))| !(lo..=hi).contains(&c.re)) {
            return Err(Error::LeftDomain { s });
        }
    }
    Ok(())
}

impl Flow<'_> {
    pub fn new(field: &dyn MetricField) -> Flow<'_> {
        Flow { field, jacobi: Vec::new(), transport: Vec::new(), ode: Dopri5::default() }
    }

    fn pack(&self, state: &GeodesicState) -> Vec<C64> {
        let mut y = state.x.clone();
        y.extend_from_slice(&state.v);
        for js in &self.jacobi {
            y.extend_from_slice(&js.j);
            y.extend_from_slice(&js.dj);
        }
        for (l, _) in &self.transport {
            y.extend_from_slice(l);
        }
        y
    }

    fn unpack(&self, s: f64, y: &[C64]) -> FlowSample {
        let n = self.field.dim();
        let chunk = |k: usize| y[k * n..(k + 1) * n].to_vec();
        let jacobi = (0..self.jacobi.len())
            .map(|k| JacobiState { j: chunk(2 + 2 * k), dj: chunk(3 + 2 * k) })
            .collect();
        let base = 2 + 2 * self.jacobi.len();
        let transported = (0..self.transport.len()).map(|k| chunk(base + k)).collect();
        FlowSample { state: GeodesicState { s, x: chunk(0), v: chunk(1) }, jacobi, transported }
    }

    fn rhs(&self, s: f64, y: &[C64]) -> Result<Vec<C64>> {
        let n = self.field.dim();
        let x = &y[..n];
        let v = &y[n..2 * n];
        check_domain(self.field, x, s)?;
        let order = if self.jacobi.is_empty() { 1 } else { 2 };
        let local = LocalJets::compute(self.field, x, order)?;
        let gamma = local.christoffel_values();
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(v);
        out.extend(gamma_apply(&gamma, v, v).into_iter().map(|c| -c));
        if !self.jacobi.is_empty() {
            let r = local.riemann()?.map(|j| j.value());
            for k in 0..self.jacobi.len() {
                let j = &y[(2 + 2 * k) * n..(3 + 2 * k) * n];
                let kk = &y[(3 + 2 * k) * n..(4 + 2 * k) * n];
                out.extend(sub(kk, &gamma_apply(&gamma, v, j)));
                out.extend(sub(&curvature_apply(&r, v, j, v), &gamma_apply(&gamma, v, kk)));
            }
        }
        let base = 2 + 2 * self.jacobi.len();
        for (k, (_, other)) in self.transport.iter().enumerate() {
            let l = &y[(base + k) * n..(base + k + 1) * n];
            let gamma_t = LocalJets::compute(*other, x, 1)?.christoffel_values();
            out.extend(gamma_apply(&gamma_t, v, l).into_iter().map(|c| -c));
        }
        Ok(out)
    }

    /// Integrates from `start` and samples at `times`.
    pub fn integrate(&self, start: &GeodesicState, times: &[f64]) -> Result<FlowPath> {
        let n = self.field.dim();
        if start.x.len() != n || start.v.len() != n {
            return Err(Error::InvalidArgument(format!("state must have {n} components")));
        }
        if euclid_norm(&start.v) == 0.0 {
            return Err(Error::InvalidArgument("initial velocity is zero".into()));
        }
        check_domain(self.field, &start.x, start.s)?;
        let y0 = self.pack(start);
        let (ys, stats) = self.ode.integrate(|s, y| self.rhs(s, y), start.s, &y0, times)?;
        let mut samples = vec![self.unpack(start.s, &y0)];
        samples.extend(times.iter().zip(&ys).map(|(&s, y)| self.unpack(s, y)));
        let mut null_drift = 0.0f64;
        for smp in &samples {
            let g = self.field.metric_values(&smp.state.x)?;
            null_drift = null_drift.max(bilinear(&g, &smp.state.v, &smp.state.v).norm());
        }
        Ok(FlowPath { samples, stats, null_drift })
    }
}

/// `count` equally spaced parameters in `(s0, s_end]`.
pub fn sample_times(s0: f64, s_end: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| s0 + (s_end - s0) * k as f64 / count as f64).collect()
}

/// Solves `ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0` and samples the path at `samples`
/// equally spaced parameters.
pub fn integrate_geodesic(field: &dyn MetricField, start: &GeodesicState, s_end: f64, samples: usize) -> Result<FlowPath> {
    Flow::new(field).integrate(start, &sample_times(start.s, s_end, samples))
}

/// Integrates `J̈ = R(γ̇, J)γ̇` alongside the geodesic.
pub fn integrate_jacobi(
    field: &dyn MetricField,
    start: &GeodesicState,
    initial: JacobiState,
    s_end: f64,
    samples: usize,
) -> Result<FlowPath> {
    let mut flow = Flow::new(field);
    flow.jacobi.push(initial);
    flow.integrate(start, &sample_times(start.s, s_end, samples))
}

/// A vector field `Y` along a curve with its coordinate derivatives, and the
/// curve's position, velocity and coordinate acceleration.
#[derive(Debug, Clone)]
pub struct CurveJet {
    pub x: Vec<C64>,
    pub v: Vec<C64>,
    pub a: Vec<C64>,
    pub y: Vec<C64>,
    pub dy: Vec<C64>,
    pub ddy: Vec<C64>,
}

/// Terms of `P(Y; X, X) = ∇_X∇_X Y − ∇_{∇_X X} Y − R(X, Y)X` for `X = γ̇`.
#[derive(Debug, Clone)]
pub struct JacobiOperator {
    pub p: Vec<C64>,
    pub nabla_nabla: Vec<C64>,
    pub nabla_y: Vec<C64>,
    /// `∇_X X = f·X` for a pregeodesic.
    pub f: C64,
    pub curvature: Vec<C64>,
}

impl JacobiOperator {
    /// Coordinate size of the individual terms, used to scale residuals.
    pub fn scale(&self) -> f64 {
        euclid_norm(&self.nabla_nabla) + euclid_norm(&scaled(&self.nabla_y, self.f)) + euclid_norm(&self.curvature)
    }
}

/// The Jacobi operator from curve-jet data. The curve must be a pregeodesic
/// (`∇_X X ∥ X`), so only derivatives along it enter.
pub fn jacobi_operator_p(field: &dyn MetricField, jet: &CurveJet) -> Result<JacobiOperator> {
    let n = field.dim();
    let local = LocalJets::compute(field, &jet.x, 2)?;
    let gamma = local.christoffel_values();
    let r = local.riemann()?.map(|j| j.value());
    let v = &jet.v;
    let accel = add(&jet.a, &gamma_apply(&gamma, v, v));
    let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let f: C64 = v.iter().zip(&accel).map(|(a, b)| a.conj() * b).sum::<C64>() / vv;
    let off = euclid_norm(&modulo(v, &accel));
    if off > 1e-8 * (euclid_norm(&accel) + vv) {
        return Err(Error::HypothesisViolated(format!("curve is not a pregeodesic (defect {off:e})")));
    }
    // d/ds Γ^k_ij(x(s)) = ∂_m Γ^k_ij v^m
    let dgamma = local.gamma.map(|j| (0..n).map(|m| j.d1(m) * v[m]).sum::<C64>());
    let nabla_y = add(&jet.dy, &gamma_apply(&gamma, v, &jet.y));
    let d_nabla_y = add(
        &add(&jet.ddy, &gamma_apply(&dgamma, v, &jet.y)),
        &add(&gamma_apply(&gamma, &jet.a, &jet.y), &gamma_apply(&gamma, v, &jet.dy)),
    );
    let nabla_nabla = add(&d_nabla_y, &gamma_apply(&gamma, v, &nabla_y));
    let curvature = curvature_apply(&r, v, &jet.y, v);
    let p = sub(&sub(&nabla_nabla, &scaled(&nabla_y, f)), &curvature);
    Ok(JacobiOperator { p, nabla_nabla, nabla_y, f, curvature })
}

/// Curve jet of an integrated Jacobi field at parameter `s`, with the
/// derivatives of `J` taken by five-point differences of the flow (step `h`).
pub fn jacobi_curve_jet(
    field: &dyn MetricField,
    start: &GeodesicState,
    initial: &JacobiState,
    s: f64,
    h: f64,
) -> Result<CurveJet> {
    if s - 2.0 * h < start.s {
        return Err(Error::InvalidArgument("difference stencil reaches before the start".into()));
    }
    let mut flow = Flow::new(field);
    flow.jacobi.push(initial.clone());
    let times: Vec<f64> = (-2..=2).map(|k| s + k as f64 * h).collect();
    let path = flow.integrate(start, &times)?;
    let js: Vec<&Vec<C64>> = path.samples[1..].iter().map(|smp| &smp.jacobi[0].j).collect();
    let mid = &path.samples[3];
    let n = field.dim();
    let dy = (0..n).map(|i| (-js[4][i] + js[3][i] * 8.0 - js[1][i] * 8.0 + js[0][i]) / (12.0 * h)).collect();
    let ddy = (0..n)
        .map(|i| (-js[4][i] + js[3][i] * 16.0 - js[2][i] * 30.0 + js[1][i] * 16.0 - js[0][i]) / (12.0 * h * h))
        .collect();
    let gamma = LocalJets::compute(field, &mid.state.x, 1)?.christoffel_values();
    Ok(CurveJet {
        x: mid.state.x.clone(),
        v: mid.state.v.clone(),
        a: gamma_apply(&gamma, &mid.state.v, &mid.state.v).into_iter().map(|c| -c).collect(),
        y: js[2].clone(),
        dy,
        ddy,
    })
}

/// Comparison of the Jacobi operators of `g` and `e^{2φ}g` on the same curve data.
#[derive(Debug, Clone)]
pub struct PInvariance {
    /// `‖(P' − P) mod γ̇‖ / scale`.
    pub residual: f64,
    /// Coefficient of `γ̇` in `P' − P` (relative to scale).
    pub tangential: f64,
    pub scale: f64,
    /// `g(∇_γ̇ Y, γ̇)`, which must vanish.
    pub hypothesis: f64,
}

pub fn check_p_conformal_invariance(chart: &MetricChart, phi: &Expr, jet: &CurveJet) -> Result<PInvariance> {
    let g = chart.metric_values(&jet.x)?;
    let base = jacobi_operator_p(chart, jet)?;
    let hyp = bilinear(&g, &base.nabla_y, &jet.v).norm();
    let hyp_scale = euclid_norm(&base.nabla_y) * euclid_norm(&jet.v) * crate::scalar::max_abs(&g);
    if hyp > 1e-6 * hyp_scale.max(1e-300) {
        return Err(Error::HypothesisViolated(format!("g(∇_γ̇ Y, γ̇) = {hyp:e}")));
    }
    let other = rescale(chart, phi)?;
    let primed = jacobi_operator_p(&other.chart, jet)?;
    let diff = sub(&primed.p, &base.p);
    let scale = base.scale().max(primed.scale());
    let rest = modulo(&jet.v, &diff);
    let tangential = euclid_norm(&sub(&diff, &rest)) / euclid_norm(&jet.v);
    Ok(PInvariance {
        residual: euclid_norm(&rest) / scale,
        tangential: tangential / scale,
        scale,
        hypothesis: hyp / hyp_scale.max(1e-300),
    })
}

/// Jacobi field against the derivative of a one-parameter family of
/// geodesics: relative mismatch at `s_end` for a variation of size `eps`.
pub fn jacobi_variation(
    field: &dyn MetricField,
    start: &GeodesicState,
    initial: &JacobiState,
    s_end: f64,
    eps: f64,
) -> Result<f64> {
    let path = integrate_jacobi(field, start, initial.clone(), s_end, 1)?;
    let gamma = LocalJets::compute(field, &start.x, 1)?.christoffel_values();
    // Coordinate derivative of J at the start.
    let dj0 = sub(&initial.dj, &gamma_apply(&gamma, &start.v, &initial.j));
    let shifted = |sign: f64| -> Result<Vec<C64>> {
        let e = C64::new(sign * eps, 0.0);
        let st = GeodesicState { s: start.s, x: add(&start.x, &scaled(&initial.j, e)), v: add(&start.v, &scaled(&dj0, e)) };
        Ok(integrate_geodesic(field, &st, s_end, 1)?.last().state.x.clone())
    };
    let fd = scaled(&sub(&shifted(1.0)?, &shifted(-1.0)?), C64::new(0.5 / eps, 0.0));
    let j = &path.last().jacobi[0].j;
    Ok(euclid_norm(&sub(&fd, j)) / euclid_norm(j).max(1e-300))
}

/// `g(∇^{g'}_γ̇ J, γ̇) − g(∇^g_γ̇ J, γ̇)` for `g' = e^{2φ}g`, with `J` given by
/// its value and coordinate derivative along the curve.
pub fn lemma3_difference(chart: &MetricChart, phi: &Expr, x: &[C64], v: &[C64], j: &[C64], dj: &[C64]) -> Result<C64> {
    let other = rescale(chart, phi)?;
    let gamma = LocalJets::compute(chart, x, 1)?.christoffel_values();
    let gamma2 = LocalJets::compute(&other.chart, x, 1)?.christoffel_values();
    let g = chart.metric_values(x)?;
    let d1 = add(dj, &gamma_apply(&gamma, v, j));
    let d2 = add(dj, &gamma_apply(&gamma2, v, j));
    Ok(bilinear(&g, &d2, v) - bilinear(&g, &d1, v))
}

/// Largest deviation between `Γ' − Γ` and `θ(X)Y + θ(Y)X − θ♯g(X,Y)` with
/// `θ = dφ`, relative to `‖Γ' − Γ‖`.
pub fn weyl_connection_difference(chart: &MetricChart, phi: &Expr, x: &[C64]) -> Result<f64> {
    let other = rescale(chart, phi)?;
    let n = chart.dim();
    let local = LocalJets::compute(chart, x, 1)?;
    let gamma = local.christoffel_values();
    let gamma2 = LocalJets::compute(&other.chart, x, 1)?.christoffel_values();
    let g = local.metric_values();
    let ginv = local.inverse_values();
    let theta = other.dphi(x)?;
    let theta_up: Vec<C64> = (0..n).map(|k| (0..n).map(|l| *ginv.get(&[k, l]) * theta[l]).sum()).collect();
    let mut worst = 0.0f64;
    let diff = gamma2.sub(&gamma);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut pred = -theta_up[k] * g.get(&[i, j]);
                if k == j {
                    pred += theta[i];
                }
                if k == i {
                    pred += theta[j];
                }
                worst = worst.max((diff.get(&[k, i, j]) - pred).norm());
            }
        }
    }
    Ok(worst / (diff.norm() + 1e-300))
}

/// Parallel transport of an isotropic line `L ⊥ γ̇` along a null geodesic of
/// `g`, once with `∇^g` and once with `∇^{g'}`, `g' = e^{2φ}g`.
#[derive(Debug, Clone)]
pub struct LineTransport {
    /// Largest projective distance between the transported lines in `γ̇^⊥ / γ̇`.
    pub deviation: f64,
    /// Largest projective distance between the raw transported vectors.
    pub raw_deviation: f64,
    /// Largest ratio of coordinate norms of the two transported vectors.
    pub scale_ratio: f64,
    pub null_drift: f64,
}

pub fn parallel_isotropic_line(
    chart: &MetricChart,
    phi: &Expr,
    start: &GeodesicState,
    line: &[C64],
    s_end: f64,
    samples: usize,
) -> Result<LineTransport> {
    let g = chart.metric_values(&start.x)?;
    let scale = crate::scalar::max_abs(&g) * euclid_norm(line) * euclid_norm(&start.v);
    let checks = [
        ("g(L, L)", bilinear(&g, line, line).norm() / (scale * euclid_norm(line) / euclid_norm(&start.v))),
        ("g(L, γ̇)", bilinear(&g, line, &start.v).norm() / scale),
        ("g(γ̇, γ̇)", bilinear(&g, &start.v, &start.v).norm() / (scale * euclid_norm(&start.v) / euclid_norm(line))),
    ];
    for (what, value) in checks {
        if value > 1e-10 {
            return Err(Error::HypothesisViolated(format!("{what} = {value:e}")));
        }
    }
    let other = rescale(chart, phi)?;
    let mut flow = Flow::new(chart);
    flow.transport.push((line.to_vec(), chart));
    flow.transport.push((line.to_vec(), &other.chart));
    let path = flow.integrate(start, &sample_times(start.s, s_end, samples))?;
    let mut out = LineTransport { deviation: 0.0, raw_deviation: 0.0, scale_ratio: 1.0, null_drift: path.null_drift };
    for smp in &path.samples {
        let (a, b) = (&smp.transported[0], &smp.transported[1]);
        let v = &smp.state.v;
        out.deviation = out.deviation.max(projective_distance(&modulo(v, a), &modulo(v, b)));
        out.raw_deviation = out.raw_deviation.max(projective_distance(a, b));
        let r = euclid_norm(b) / euclid_norm(a);
        out.scale_ratio = out.scale_ratio.max(r.max(1.0 / r));
    }
    Ok(out)
}

/// A null vector orthogonal to `v` and not proportional to it, at a point.
pub fn isotropic_partner(g: &[C64], mode: Mode, v: &[C64], rng: &mut impl Rng) -> Result<Vec<C64>> {
    isotropic::partner(g, mode, v, rng)
}

/// Random Jacobi data with `J ⊥ γ̇` and `J̇ ⊥ γ̇`, built on the kernel of
/// `g(v, ·)` and normalised to unit coordinate length.
pub fn transverse_jacobi(g: &[C64], mode: Mode, v: &[C64], rng: &mut impl Rng) -> Result<JacobiState> {
    let n = v.len();
    let c: Vec<C64> = (0..n).map(|i| (0..n).map(|j| g[i * n + j] * v[j]).sum()).collect();
    let p = (0..n).max_by(|&a, &b| c[a].norm().total_cmp(&c[b].norm())).unwrap_or(0);
    if c[p].norm() == 0.0 {
        return Err(Error::InvalidArgument("velocity is zero".into()));
    }
    let basis: Vec<Vec<C64>> = (0..n)
        .filter(|&i| i != p)
        .map(|i| {
            let mut e = vec![ZERO; n];
            e[i] = C64::new(1.0, 0.0);
            e[p] = -c[i] / c[p];
            e
        })
        .collect();
    let mut draw = || {
        let w = random_vector(n - 1, mode, rng);
        let u: Vec<C64> = (0..n).map(|k| basis.iter().zip(&w).map(|(b, s)| b[k] * s).sum()).collect();
        let norm = euclid_norm(&u);
        scaled(&u, C64::new(1.0 / norm, 0.0))
    };
    let j = draw();
    let dj = draw();
    Ok(JacobiState { j, dj })
}
