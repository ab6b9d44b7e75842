//! Normalized Ricci, Weyl and Cotton–York tensors, conformal rescalings and
//! the identities relating them.

use crate::error::{Error, Result};
use crate::exprlang::{Expr, Func};
use crate::scalar::{relative_residual, C64, ZERO};
use crate::tensor::{CurvaturePack, MetricChart, MetricField, PointFrame, Tensor, TensorAtPoint, Variance};

/// Normalized Ricci tensor `h = Scal/(2n(n−1))·g + Ric₀/(n−2)`.
pub fn normalized_ricci(field: &dyn MetricField, point: &[C64]) -> Result<TensorAtPoint> {
    Ok(CurvaturePack::compute(field, point)?.h)
}

/// Weyl tensor `W = R − h∧I` as `W^l_ijk` at `[i, j, k, l]`.
pub fn weyl(field: &dyn MetricField, point: &[C64]) -> Result<TensorAtPoint> {
    Ok(CurvaturePack::compute(field, point)?.weyl)
}

/// `C_ijk = (∇_i h)_jk − (∇_j h)_ik`.
pub fn cotton_york(field: &dyn MetricField, point: &[C64]) -> Result<TensorAtPoint> {
    Ok(CurvaturePack::compute(field, point)?.cotton)
}

/// Sign relating the divergence of the Weyl tensor to the Cotton–York tensor:
/// `δW_ijk = DIV_WEYL_SIGN · Σ_a ε_a (∇_{e_a} W)(∂_i, ∂_j, ∂_k, e_a)`.
pub const DIV_WEYL_SIGN: f64 = 1.0;

/// `δW` at a point. In dimension `n` it equals `(n − 3)·C`.
pub fn div_weyl(field: &dyn MetricField, point: &[C64]) -> Result<TensorAtPoint> {
    let pack = CurvaturePack::compute(field, point)?;
    if pack.n < 4 {
        return Err(Error::DimensionTooLow { required: 4, found: pack.n });
    }
    Ok(pack.div_weyl.scale(C64::new(DIV_WEYL_SIGN, 0.0)))
}

/// `‖δW − (n−3)C‖ / (‖δW‖ + (n−3)‖C‖ + 1e−12)`.
pub fn div_weyl_residual(pack: &CurvaturePack) -> f64 {
    let k = C64::new(pack.n as f64 - 3.0, 0.0);
    let dw = pack.div_weyl.scale(C64::new(DIV_WEYL_SIGN, 0.0));
    relative_residual(dw.data(), pack.cotton.scale(k).data())
}

/// A metric `g' = e^{2φ} g` materialized as a chart.
#[derive(Debug, Clone)]
pub struct ConformalRescaling {
    pub phi: Expr,
    pub original: MetricChart,
    pub chart: MetricChart,
}

impl ConformalRescaling {
    /// `dφ` at a point, in coordinates.
    pub fn dphi(&self, point: &[C64]) -> Result<Vec<C64>> {
        let jet = self.original.field_jets(std::slice::from_ref(&self.phi), point, 1)?.remove(0);
        Ok((0..point.len()).map(|i| jet.d1(i)).collect())
    }
}

/// Conformal rescaling `g' = e^{2φ} g`; components become `exp(2*(φ))*(g_ij)`.
pub fn rescale(chart: &MetricChart, phi: &Expr) -> Result<ConformalRescaling> {
    let unknown: Vec<&str> = phi
        .identifiers()
        .into_iter()
        .filter(|id| {
            !(chart.coordinates().iter().any(|c| c == id)
                || chart.parameters().iter().any(|(p, _)| p == id)
                || matches!(*id, "pi" | "e" | "i"))
        })
        .collect();
    if let Some(id) = unknown.first() {
        return Err(crate::exprlang::EvalError::UnknownIdentifier(id.to_string()).into());
    }
    let rescaled = if phi.is_zero_literal() {
        chart.clone()
    } else {
        let factor = Expr::call(Func::Exp, Expr::num(2.0) * phi.clone());
        let upper = chart
            .upper()
            .iter()
            .map(|g| if g.is_zero_literal() { g.clone() } else { factor.clone() * g.clone() })
            .collect();
        let mut out = MetricChart::new(
            format!("{}_rescaled", chart.name),
            chart.coordinates().to_vec(),
            chart.mode(),
            upper,
            chart.parameters().to_vec(),
        )?
        .with_orientation(chart.orientation());
        if let Some(d) = chart.domain() {
            out = out.with_domain(d.to_vec());
        }
        if let Some((p, q)) = chart.signature() {
            out = out.with_signature(p, q);
        }
        out
    };
    Ok(ConformalRescaling { phi: phi.clone(), original: chart.clone(), chart: rescaled })
}

/// Outcome of comparing `C'` with `C + dφ∘W`.
#[derive(Debug, Clone)]
pub struct CyTransform {
    /// `‖C' − C − dφ∘W‖ / (‖C‖ + ‖C'‖ + 1e−12)`.
    pub residual: f64,
    /// `‖C' − C‖`, to confirm the check is not vacuous.
    pub change: f64,
    pub cotton: TensorAtPoint,
    pub cotton_rescaled: TensorAtPoint,
}

/// Transformation law of the Cotton–York tensor under `g' = e^{2φ} g`:
/// `C'(X,Y)(Z) = C(X,Y)(Z) + dφ(W(X,Y)Z)` with `W = R − h∧I` in this crate's
/// curvature sign (the opposite curvature sign flips the `dφ` term).
pub fn check_cy_transform(chart: &MetricChart, phi: &Expr, point: &[C64]) -> Result<CyTransform> {
    let resc = rescale(chart, phi)?;
    let before = CurvaturePack::compute(chart, point)?;
    let after = CurvaturePack::compute(&resc.chart, point)?;
    let dphi = resc.dphi(point)?;
    Ok(cy_transform_from_packs(&before, &after, &dphi))
}

pub fn cy_transform_from_packs(before: &CurvaturePack, after: &CurvaturePack, dphi: &[C64]) -> CyTransform {
    let n = before.n;
    let predicted = Tensor::from_fn(n, &[Variance::Down; 3], |x| {
        let mut w = ZERO;
        for l in 0..n {
            w += before.weyl.get(&[x[0], x[1], x[2], l]) * dphi[l];
        }
        before.cotton.get(x) + w
    });
    let diff = after.cotton.sub(&predicted);
    CyTransform {
        residual: diff.norm() / (before.cotton.norm() + after.cotton.norm() + 1e-12),
        change: after.cotton.sub(&before.cotton).norm(),
        cotton: before.cotton.clone(),
        cotton_rescaled: after.cotton.clone(),
    }
}

/// Componentwise relative deviation between the `(3,1)` Weyl tensors of two
/// packs: `max |W'−W| / max(|W|, |W'|, 1e−12)`.
pub fn weyl_deviation(a: &CurvaturePack, b: &CurvaturePack) -> f64 {
    let scale = a.weyl.max_abs().max(b.weyl.max_abs()).max(1e-12);
    a.weyl.sub(&b.weyl).max_abs() / scale
}

/// Residuals of the cyclic and trace identities of a Cotton–York-type tensor
/// evaluated in an orthonormal frame: `(max |Σ_cyc C(X,Y)(Z)|, max |Σ_i ε_i C(X,e_i)(e_i)|)`.
pub fn bianchi_residuals(c: &TensorAtPoint, frame: &PointFrame, g: &[C64]) -> Result<(f64, f64)> {
    frame.require_orthonormal()?;
    let n = c.dim();
    let cf = c.in_frame(frame, g);
    let mut cyclic = 0.0f64;
    let mut trace = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let s = cf.get(&[a, b, d]) + cf.get(&[b, d, a]) + cf.get(&[d, a, b]);
                cyclic = cyclic.max(s.norm());
            }
        }
        let t: C64 = (0..n).map(|i| cf.get(&[a, i, i]) * frame.eps[i]).sum();
        trace = trace.max(t.norm());
    }
    Ok((cyclic, trace))
}

/// Frame-component Frobenius norm, the scale used for Bianchi tolerances.
pub fn frame_norm(t: &TensorAtPoint, frame: &PointFrame, g: &[C64]) -> f64 {
    t.in_frame(frame, g).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::random::{interior_points, random_metric, rng, MetricRecipe};
    use crate::scalar::{re, Mode};
    use crate::tensor::orthonormal_frame;

    fn schwarzschild() -> MetricChart {
        MetricChart::parse(
            "schw",
            &["r", "tau", "theta", "phi"],
            Mode::Real,
            &["1/(1 - 2/r)", "0", "0", "0", "1 - 2/r", "0", "0", "r^2", "0", "r^2*sin(theta)^2"],
        )
        .unwrap()
    }

    fn spt() -> Vec<C64> {
        vec![re(4.0), re(0.3), re(1.1), re(0.4)]
    }

    #[test]
    fn ricci_flat_has_vanishing_h_and_cotton() {
        let pack = CurvaturePack::compute(&schwarzschild(), &spt()).unwrap();
        assert!(pack.h.max_abs() < 1e-12);
        assert!(pack.cotton.max_abs() < 1e-12);
        assert!(pack.weyl_down.norm() > 0.01 * pack.riemann_down.norm());
        assert!(pack.div_weyl.max_abs() < 1e-12);
    }

    #[test]
    fn divergence_sign_matches_cotton() {
        // Sign sweep: of ±D only one agrees with C in dimension four.
        for seed in 0..3 {
            let chart = random_metric(&MetricRecipe::riemannian(4), seed).unwrap();
            let p = interior_points(4, 1, &mut rng(seed)).remove(0);
            let pack = CurvaturePack::compute(&chart, &p).unwrap();
            let plus = relative_residual(pack.div_weyl.data(), pack.cotton.data());
            let minus = relative_residual(pack.div_weyl.scale(re(-1.0)).data(), pack.cotton.data());
            let (good, bad) = if DIV_WEYL_SIGN > 0.0 { (plus, minus) } else { (minus, plus) };
            assert!(good < 1e-10 && bad > 0.5, "{good:e} {bad:e}");
        }
    }

    #[test]
    fn divergence_scales_with_dimension() {
        for n in [5, 6] {
            let chart = random_metric(&MetricRecipe::riemannian(n), 11).unwrap();
            let p = interior_points(n, 1, &mut rng(2)).remove(0);
            let pack = CurvaturePack::compute(&chart, &p).unwrap();
            assert!(div_weyl_residual(&pack) < 1e-10);
            assert!(pack.cotton.norm() > 1e-4);
        }
    }

    #[test]
    fn weyl_is_conformally_invariant() {
        let chart = schwarzschild();
        let phi = parse("0.1*r").unwrap();
        let resc = rescale(&chart, &phi).unwrap();
        let a = CurvaturePack::compute(&chart, &spt()).unwrap();
        let b = CurvaturePack::compute(&resc.chart, &spt()).unwrap();
        assert!(weyl_deviation(&a, &b) < 1e-7);
        let same = rescale(&chart, &parse("0").unwrap()).unwrap();
        assert_eq!(format!("{}", same.chart.component(0, 0)), format!("{}", chart.component(0, 0)));
    }

    #[test]
    fn cotton_transformation_law() {
        let chart = schwarzschild();
        let out = check_cy_transform(&chart, &parse("0.05*r").unwrap(), &spt()).unwrap();
        assert!(out.residual < 1e-7, "{:e}", out.residual);
        assert!(out.change > 1e-4);
        let random = random_metric(&MetricRecipe::riemannian(4), 2).unwrap();
        let p = interior_points(4, 1, &mut rng(8)).remove(0);
        let constant = check_cy_transform(&random, &parse("0.3").unwrap(), &p).unwrap();
        assert!(constant.residual < 1e-10, "{:e}", constant.residual);
        let generic = check_cy_transform(&random, &parse("0.2*x*y - 0.1*exp(w)").unwrap(), &p).unwrap();
        assert!(generic.residual < 1e-7, "{:e}", generic.residual);
    }

    #[test]
    fn three_dimensional_cotton_is_invariant() {
        let chart = random_metric(&MetricRecipe::riemannian(3), 5).unwrap();
        let p = interior_points(3, 1, &mut rng(3)).remove(0);
        let out = check_cy_transform(&chart, &parse("0.2*x*y + 0.1*sin(z)").unwrap(), &p).unwrap();
        assert!(out.residual < 1e-8);
        assert!(out.change / out.cotton.norm() < 1e-8);
    }

    #[test]
    fn rescale_rejects_unknown_identifiers() {
        let chart = schwarzschild();
        assert!(rescale(&chart, &parse("q*r").unwrap()).is_err());
    }

    #[test]
    fn cotton_satisfies_bianchi_identities() {
        let chart = random_metric(&MetricRecipe::riemannian(4), 9).unwrap();
        let p = interior_points(4, 1, &mut rng(4)).remove(0);
        let pack = CurvaturePack::compute(&chart, &p).unwrap();
        let frame = orthonormal_frame(pack.g.data(), Mode::Real, &p, &[]).unwrap();
        let (cyc, tr) = bianchi_residuals(&pack.cotton, &frame, pack.g.data()).unwrap();
        let scale = frame_norm(&pack.cotton, &frame, pack.g.data());
        assert!(scale > 1e-3);
        assert!(cyc < 1e-8 * scale && tr < 1e-8 * scale, "{cyc:e} {tr:e}");
    }
}
