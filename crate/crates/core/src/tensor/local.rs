use super::chart::{check_metric_values, MetricChart, MetricField};
use super::{for_each_index, Tensor, TensorAtPoint, Variance, D, U};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet};
use crate::fourdim::SelfDualParts;
use crate::scalar::{re, Mode, C64, ZERO};

/// Gauss–Jordan inverse of a matrix of jets, pivoting on base values.
fn invert_jets(n: usize, a: &[Jet]) -> Option<Vec<Jet>> {
    let nv = a[0].nvars();
    let k = a.iter().map(Jet::order).min().unwrap_or(0);
    let mut m: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            let mut row: Vec<Jet> = a[i * n..(i + 1) * n].iter().map(|j| j.truncate(k)).collect();
            row.extend((0..n).map(|j| Jet::constant(nv, k, if i == j { re(1.0) } else { ZERO })));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].value().norm().total_cmp(&m[y][c].value().norm()))?;
        if m[p][c].value() == ZERO {
            return None;
        }
        m.swap(c, p);
        let inv = m[c][c].recip().ok()?;
        for entry in m[c].iter_mut() {
            *entry = &*entry * &inv;
        }
        let pivot = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == c || row[c].taylor().iter().all(|v| *v == ZERO) {
                continue;
            }
            let f = row[c].clone();
            for (entry, pv) in row.iter_mut().zip(&pivot) {
                *entry = &*entry - &(&f * pv);
            }
        }
    }
    Some(m.into_iter().flat_map(|row| row.into_iter().skip(n)).collect())
}

/// Covariant derivative of a jet tensor field, prepending the derivative slot.
/// The result is one jet order lower than the input.
pub fn nabla_jets(t: &Tensor<Jet>, gamma: &Tensor<Jet>) -> Tensor<Jet> {
    let n = t.dim();
    let rank = t.rank();
    let mut slots = vec![D];
    slots.extend_from_slice(t.slots());
    let mut src = vec![0usize; rank];
    Tensor::from_fn(n, &slots, |idx| {
        let p = idx[0];
        let rest = &idx[1..];
        let mut acc = t.get(rest).diff(p);
        for s in 0..rank {
            src.copy_from_slice(rest);
            for q in 0..n {
                src[s] = q;
                let comp = t.get(&src);
                match t.slots()[s] {
                    Variance::Up => acc = &acc + &(gamma.get(&[rest[s], p, q]) * comp),
                    Variance::Down => acc = &acc - &(gamma.get(&[q, p, rest[s]]) * comp),
                }
            }
        }
        acc
    })
}

fn values(t: &Tensor<Jet>) -> TensorAtPoint {
    t.map(Jet::value)
}

/// Metric, inverse metric and Christoffel symbols as jets at a point.
#[derive(Debug, Clone)]
pub struct LocalJets {
    pub n: usize,
    pub mode: Mode,
    pub order: usize,
    pub point: Vec<C64>,
    /// `g_ij`, order `order`.
    pub g: Tensor<Jet>,
    /// `g^ij`, order `order`.
    pub ginv: Tensor<Jet>,
    /// `Γ^k_ij` as `[k, i, j]`, order `order − 1`.
    pub gamma: Tensor<Jet>,
}

impl LocalJets {
    pub fn compute(field: &dyn MetricField, point: &[C64], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("connection needs metric jets of order >= 1".into()));
        }
        let g = field.metric_jets(point, order)?;
        LocalJets::from_metric(field.dim(), field.mode(), point, g)
    }

    pub fn from_metric(n: usize, mode: Mode, point: &[C64], g: Vec<Jet>) -> Result<Self> {
        let order = g[0].order();
        let gv: Vec<C64> = g.iter().map(Jet::value).collect();
        check_metric_values(n, mode, &gv, point, None)?;
        let ginv = invert_jets(n, &g).ok_or_else(|| Error::DegenerateMetric { point: format!("{point:?}") })?;
        let g = Tensor::from_data(n, &[D, D], g);
        let ginv = Tensor::from_data(n, &[U, U], ginv);

        // Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let dg: Vec<Tensor<Jet>> = (0..n).map(|l| g.map(|j| j.diff(l))).collect();
        let half = re(0.5);
        let mut first = vec![Jet::zero(n, order - 1); n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = (&(dg[i].get(&[j, l]) + dg[j].get(&[i, l])) - dg[l].get(&[i, j])).scale(half);
                    first[(l * n + i) * n + j] = v.clone();
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut gamma = Tensor::from_data(n, &[U, D, D], vec![Jet::zero(n, order - 1); n * n * n]);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = Jet::zero(n, order - 1);
                    for l in 0..n {
                        acc = &acc + &(ginv.get(&[k, l]) * &first[(l * n + i) * n + j]);
                    }
                    gamma.set(&[k, j, i], acc.clone());
                    gamma.set(&[k, i, j], acc);
                }
            }
        }
        Ok(LocalJets { n, mode, order, point: point.to_vec(), g, ginv, gamma })
    }

    /// `R[i, j, k, l] = R^l_{ijk}`, order `order − 2`.
    pub fn riemann(&self) -> Result<Tensor<Jet>> {
        if self.order < 2 {
            return Err(Error::InvalidArgument("curvature needs metric jets of order >= 2".into()));
        }
        let n = self.n;
        let k2 = self.order - 2;
        let dgamma: Vec<Tensor<Jet>> = (0..n).map(|p| self.gamma.map(|j| j.diff(p))).collect();
        let mut r = Tensor::from_data(n, &[D, D, D, U], vec![Jet::zero(n, k2); n.pow(4)]);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = dgamma[i].get(&[l, j, k]) - dgamma[j].get(&[l, i, k]);
                        for m in 0..n {
                            acc = &acc + &(self.gamma.get(&[l, i, m]) * self.gamma.get(&[m, j, k]));
                            acc = &acc - &(self.gamma.get(&[l, j, m]) * self.gamma.get(&[m, i, k]));
                        }
                        r.set(&[j, i, k, l], -&acc);
                        r.set(&[i, j, k, l], acc);
                    }
                }
            }
        }
        Ok(r)
    }

    pub fn metric_values(&self) -> TensorAtPoint {
        values(&self.g)
    }

    pub fn inverse_values(&self) -> TensorAtPoint {
        values(&self.ginv)
    }

    pub fn christoffel_values(&self) -> TensorAtPoint {
        values(&self.gamma)
    }
}

/// Lowers the last (contravariant) slot of a jet tensor with the metric jets.
fn lower_last(t: &Tensor<Jet>, g: &Tensor<Jet>) -> Tensor<Jet> {
    let n = t.dim();
    let rank = t.rank();
    let mut slots = t.slots().to_vec();
    slots[rank - 1] = D;
    let mut src = vec![0usize; rank];
    Tensor::from_fn(n, &slots, |idx| {
        src.copy_from_slice(idx);
        let mut acc = Jet::zero(n, t.data()[0].order());
        for m in 0..n {
            src[rank - 1] = m;
            acc = &acc + &(t.get(&src) * g.get(&[m, idx[rank - 1]]));
        }
        acc
    })
}

/// Kulkarni–Nomizu style suspension `(h∧I)` lowered to four covariant slots:
/// `g_jk h_il − h_ik g_jl − g_ik h_jl + h_jk g_il`.
pub fn suspension<T>(h: &Tensor<T>, g: &Tensor<T>) -> Tensor<T>
where
    T: Clone,
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T> + std::ops::Add<&'a T, Output = T> + std::ops::Sub<&'a T, Output = T>,
{
    Tensor::from_fn(h.dim(), &[D, D, D, D], |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let a = g.get(&[j, k]) * h.get(&[i, l]);
        let b = h.get(&[i, k]) * g.get(&[j, l]);
        let c = g.get(&[i, k]) * h.get(&[j, l]);
        let d = h.get(&[j, k]) * g.get(&[i, l]);
        &(&(&a - &b) - &c) + &d
    })
}

/// Every pointwise curvature quantity at one point, from order-3 metric jets.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub n: usize,
    pub mode: Mode,
    pub point: Vec<C64>,
    pub orientation: i8,
    pub g: TensorAtPoint,
    pub ginv: TensorAtPoint,
    /// `Γ^k_ij` as `[k, i, j]`.
    pub gamma: TensorAtPoint,
    /// `R^l_ijk` as `[i, j, k, l]`.
    pub riemann: TensorAtPoint,
    /// `R_ijkl = g(R(∂_i, ∂_j)∂_k, ∂_l)`.
    pub riemann_down: TensorAtPoint,
    pub ricci: TensorAtPoint,
    pub ricci0: TensorAtPoint,
    pub scal: C64,
    /// Normalized Ricci tensor.
    pub h: TensorAtPoint,
    /// `(h∧I)` with four covariant slots.
    pub h_wedge: TensorAtPoint,
    /// Weyl tensor as `[i, j, k, l] = W^l_ijk`.
    pub weyl: TensorAtPoint,
    pub weyl_down: TensorAtPoint,
    /// `(∇_i h)_jk`.
    pub nabla_h: TensorAtPoint,
    /// `C_ijk = (∇_i h)_jk − (∇_j h)_ik`.
    pub cotton: TensorAtPoint,
    /// `(∇_m W)_ijkl`.
    pub nabla_weyl: TensorAtPoint,
    /// `(∇_m R)_ijkl`.
    pub nabla_riemann: TensorAtPoint,
    /// `δW_ijk = g^ml (∇_m W)_ijkl`.
    pub div_weyl: TensorAtPoint,
    /// Self-dual splitting, present in dimension 4 with `*² = 1` on 2-forms.
    pub self_dual: Option<SelfDualParts>,
}

/// Jet order used for curvature packs: third derivatives of the metric.
pub const PACK_ORDER: usize = 3;

impl CurvaturePack {
    pub fn compute(field: &dyn MetricField, point: &[C64]) -> Result<Self> {
        let local = LocalJets::compute(field, point, PACK_ORDER)?;
        CurvaturePack::from_local(&local, field.orientation())
    }

    pub fn from_local(local: &LocalJets, orientation: i8) -> Result<Self> {
        let n = local.n;
        if n < 3 {
            return Err(Error::DimensionTooLow { required: 3, found: n });
        }
        if local.order < PACK_ORDER {
            return Err(Error::InvalidArgument(format!("curvature pack needs metric jets of order {PACK_ORDER}")));
        }
        let nf = n as f64;
        let r = local.riemann()?;
        let k = r.data()[0].order();
        let g = local.g.map(|j| j.truncate(k));
        let ginv = local.ginv.map(|j| j.truncate(k));
        let rd = lower_last(&r, &g);

        let ricci = Tensor::from_fn(n, &[D, D], |x| {
            let mut acc = Jet::zero(n, k);
            for i in 0..n {
                acc = &acc + r.get(&[i, x[0], x[1], i]);
            }
            acc
        });
        let mut scal = Jet::zero(n, k);
        for_each_index(n, 2, |x| scal = &scal + &(ginv.get(x) * ricci.get(x)));
        let ricci0 = Tensor::from_fn(n, &[D, D], |x| ricci.get(x) - &(g.get(x) * &scal).scale(re(1.0 / nf)));
        let h = Tensor::from_fn(n, &[D, D], |x| {
            &(g.get(x) * &scal).scale(re(1.0 / (2.0 * nf * (nf - 1.0)))) + &ricci0.get(x).scale(re(1.0 / (nf - 2.0)))
        });
        let hw = suspension(&h, &g);
        let wd = Tensor::from_fn(n, &[D, D, D, D], |x| rd.get(x) - hw.get(x));

        let gamma = local.gamma.map(|j| j.truncate(k));
        let nabla_h = nabla_jets(&h, &gamma);
        let nabla_w = nabla_jets(&wd, &gamma);
        let nabla_r = nabla_jets(&rd, &gamma);

        let gv = values(&local.g);
        let ginvv = values(&local.ginv);
        let nabla_h = values(&nabla_h);
        let cotton = Tensor::from_fn(n, &[D, D, D], |x| nabla_h.get(&[x[0], x[1], x[2]]) - nabla_h.get(&[x[1], x[0], x[2]]));
        let nabla_weyl = values(&nabla_w);
        let div_weyl = contract_divergence(&nabla_weyl, &ginvv);
        let weyl_down = values(&wd);
        let weyl = weyl_down.raise(3, ginvv.data())?;
        let mut pack = CurvaturePack {
            n,
            mode: local.mode,
            point: local.point.clone(),
            orientation,
            g: gv,
            ginv: ginvv,
            gamma: values(&local.gamma),
            riemann: values(&r),
            riemann_down: values(&rd),
            ricci: values(&ricci),
            ricci0: values(&ricci0),
            scal: scal.value(),
            h: values(&h),
            h_wedge: values(&hw),
            weyl,
            weyl_down,
            nabla_h,
            cotton,
            nabla_weyl,
            nabla_riemann: values(&nabla_r),
            div_weyl,
            self_dual: None,
        };
        if n == 4 {
            match SelfDualParts::compute(&pack) {
                Ok(parts) => pack.self_dual = Some(parts),
                Err(Error::LorentzianUnsupported) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(pack)
    }

    /// Relative residuals of the algebraic curvature identities:
    /// (antisymmetry, pair symmetry, first Bianchi).
    pub fn algebraic_residuals(&self) -> (f64, f64, f64) {
        let r = &self.riemann_down;
        let scale = r.norm() + 1e-12;
        let (mut anti, mut pair, mut bianchi) = (0.0f64, 0.0f64, 0.0f64);
        for_each_index(self.n, 4, |x| {
            let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
            let v = *r.get(x);
            anti = anti.max((v + r.get(&[j, i, k, l])).norm());
            pair = pair.max((v - r.get(&[k, l, i, j])).norm());
            bianchi = bianchi.max((v + r.get(&[j, k, i, l]) + r.get(&[k, i, j, l])).norm());
        });
        (anti / scale, pair / scale, bianchi / scale)
    }

    /// Relative second Bianchi residual: cyclic sum over (m, i, j) of `(∇_m R)_ijkl`.
    pub fn second_bianchi_residual(&self) -> f64 {
        self.second_bianchi_defect() / (self.nabla_riemann.norm() + 1e-12)
    }

    /// Largest absolute cyclic sum over (m, i, j) of `(∇_m R)_ijkl`.
    pub fn second_bianchi_defect(&self) -> f64 {
        let nr = &self.nabla_riemann;
        let mut worst = 0.0f64;
        for_each_index(self.n, 5, |x| {
            let (m, i, j, k, l) = (x[0], x[1], x[2], x[3], x[4]);
            let s = nr.get(x) + nr.get(&[i, j, m, k, l]) + nr.get(&[j, m, i, k, l]);
            worst = worst.max(s.norm());
        });
        worst
    }

    /// `max |Σ_i W^i_{ijk}|` relative to `‖R‖`: the Ricci trace of the Weyl tensor.
    pub fn weyl_trace_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let s: C64 = (0..n).map(|i| self.weyl.get(&[i, j, k, i])).sum();
                worst = worst.max(s.norm());
            }
        }
        worst / (self.riemann.norm() + 1e-12)
    }
}

/// `D_ijk = g^ml T_mijkl` for a derivative-first five-slot tensor.
pub(crate) fn contract_divergence(t: &TensorAtPoint, ginv: &TensorAtPoint) -> TensorAtPoint {
    let n = t.dim();
    Tensor::from_fn(n, &[D, D, D], |x| {
        let mut acc = ZERO;
        for m in 0..n {
            for l in 0..n {
                let w = ginv.get(&[m, l]);
                if *w != ZERO {
                    acc += w * t.get(&[m, x[0], x[1], x[2], l]);
                }
            }
        }
        acc
    })
}

/// Levi-Civita connection at a point.
pub fn christoffel(field: &dyn MetricField, point: &[C64]) -> Result<TensorAtPoint> {
    Ok(LocalJets::compute(field, point, 1)?.christoffel_values())
}

/// Riemann tensor at a point as (`R^l_ijk`, `R_ijkl`).
pub fn riemann(field: &dyn MetricField, point: &[C64]) -> Result<(TensorAtPoint, TensorAtPoint)> {
    let local = LocalJets::compute(field, point, 2)?;
    let r = local.riemann()?;
    let down = lower_last(&r, &local.g);
    Ok((values(&r), values(&down)))
}

/// Covariant derivative of a tensor field whose components are expressions
/// over the chart coordinates, listed row-major over `slots`.
pub fn covariant_derivative(
    chart: &MetricChart,
    components: &[Expr],
    slots: &[Variance],
    point: &[C64],
) -> Result<TensorAtPoint> {
    let n = chart.dim();
    if components.len() != n.pow(slots.len() as u32) {
        return Err(Error::VarianceMismatch(format!(
            "{} components for {} slots in dimension {n}",
            components.len(),
            slots.len()
        )));
    }
    let local = LocalJets::compute(chart, point, 1)?;
    let jets = chart.field_jets(components, point, 1)?;
    let field = Tensor::from_data(n, slots, jets);
    Ok(values(&nabla_jets(&field, &local.gamma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    fn pt(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| re(x)).collect()
    }

    fn s3_stereo() -> MetricChart {
        let f = "4/(1 + x^2 + y^2 + z^2)^2";
        MetricChart::diagonal("s3", &["x", "y", "z"], Mode::Real, &[f, f, f]).unwrap()
    }

    fn h4() -> MetricChart {
        let f = "1/t^2";
        MetricChart::diagonal("h4", &["x", "y", "z", "t"], Mode::Real, &[f, f, f, f]).unwrap()
    }

    #[test]
    fn flat_connection_vanishes() {
        let chart = MetricChart::diagonal("flat", &["x", "y", "z"], Mode::Real, &["1", "1", "1"]).unwrap();
        assert!(christoffel(&chart, &pt(&[0.3, -0.2, 1.0])).unwrap().max_abs() == 0.0);
        let cplx = MetricChart::diagonal("c", &["z", "w"], Mode::Complex, &["1", "1"]).unwrap();
        assert!(christoffel(&cplx, &[C64::new(0.1, 0.2), C64::new(-0.3, 0.5)]).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn upper_half_plane_christoffels() {
        let chart = MetricChart::diagonal("uhp", &["x", "t"], Mode::Real, &["1/t^2", "1/t^2"]).unwrap();
        let gamma = christoffel(&chart, &pt(&[0.0, 1.0])).unwrap();
        assert!((gamma.get(&[1, 0, 0]) - re(1.0)).norm() < 1e-14);
        assert!((gamma.get(&[0, 0, 1]) - re(-1.0)).norm() < 1e-14);
        assert!((gamma.get(&[1, 1, 1]) - re(-1.0)).norm() < 1e-14);
    }

    #[test]
    fn round_sphere_curvature() {
        let pack = CurvaturePack::compute(&s3_stereo(), &pt(&[0.3, -0.4, 0.2])).unwrap();
        assert!((pack.scal - re(6.0)).norm() < 1e-12);
        assert!(pack.ricci0.max_abs() < 1e-12);
        let expected = suspension(&pack.g.scale(re(0.5)), &pack.g);
        assert!(pack.riemann_down.sub(&expected).max_abs() < 1e-12);
        assert!(pack.h.sub(&pack.g.scale(re(0.5))).max_abs() < 1e-13);
        assert!(pack.weyl.max_abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_space_is_einstein_and_conformally_flat() {
        let pack = CurvaturePack::compute(&h4(), &pt(&[0.1, 0.2, -0.3, 1.7])).unwrap();
        assert!(pack.ricci.sub(&pack.g.scale(re(-3.0))).max_abs() < 1e-10);
        assert!(pack.weyl.max_abs() < 1e-10);
        assert!(pack.cotton.max_abs() < 1e-10);
    }

    #[test]
    fn metric_is_parallel() {
        let chart = MetricChart::parse(
            "m",
            &["x", "y", "z"],
            Mode::Real,
            &["1 + 0.1*x*y", "0.2*sin(z)", "0.05*x", "2 + y^2", "0.1*x*z", "1.5 + 0.3*cos(x)"],
        )
        .unwrap();
        let comps: Vec<Expr> = (0..9).map(|i| chart.component(i / 3, i % 3).clone()).collect();
        let ng = covariant_derivative(&chart, &comps, &[D, D], &pt(&[0.2, 0.4, -0.1])).unwrap();
        assert!(ng.max_abs() < 1e-13);
        assert!(matches!(
            covariant_derivative(&chart, &comps[..4], &[D, D], &pt(&[0.2, 0.4, -0.1])),
            Err(Error::VarianceMismatch(_))
        ));
    }

    #[test]
    fn scalar_gradient_matches_partials() {
        let chart = h4();
        let f = parse("x*t + y^2").unwrap();
        let d = covariant_derivative(&chart, &[f], &[], &pt(&[0.5, 0.25, 0.0, 2.0])).unwrap();
        let want = [2.0, 0.5, 0.0, 0.5];
        for (i, w) in want.iter().enumerate() {
            assert!((d.get(&[i]) - re(*w)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_dimensional_pack_is_rejected() {
        let chart = MetricChart::diagonal("uhp", &["x", "t"], Mode::Real, &["1/t^2", "1/t^2"]).unwrap();
        assert!(matches!(
            CurvaturePack::compute(&chart, &pt(&[0.0, 1.0])),
            Err(Error::DimensionTooLow { required: 3, found: 2 })
        ));
        let (r, _) = riemann(&chart, &pt(&[0.0, 1.0])).unwrap();
        let ric: C64 = (0..2).map(|i| r.get(&[i, 0, 0, i])).sum();
        assert!((ric - re(-1.0)).norm() < 1e-13);
    }
}
