//! Curvature on totally isotropic 2-planes.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::{cone_vectors, euclid_norm, modulo, null_on_plane, projective_distance, random_vector};
use crate::error::{Error, Result};
use crate::fourdim::{classify_isotropic_plane, oriented_frame, PlaneClass};
use crate::scalar::{re, Mode, C64, ZERO};
use crate::tensor::{bilinear, CurvaturePack, MetricField, Tensor, TensorAtPoint, Variance};

/// `T(X, Y, X, Y) = g(T(X,Y)X, Y)` for a four-covariant curvature tensor.
pub fn sectional_value(t: &TensorAtPoint, x: &[C64], y: &[C64]) -> C64 {
    t.eval(&[x, y, x, y])
}

fn gram_defect(g: &[C64], x: &[C64], y: &[C64]) -> f64 {
    let s = crate::scalar::max_abs(g) * euclid_norm(x) * euclid_norm(y);
    let v = [bilinear(g, x, x) * (euclid_norm(y) / euclid_norm(x)), bilinear(g, x, y), bilinear(g, y, y) * (euclid_norm(x) / euclid_norm(y))];
    v.iter().map(|c| c.norm()).fold(0.0, f64::max) / s
}

fn require_isotropic(g: &[C64], x: &[C64], y: &[C64]) -> Result<f64> {
    let d = gram_defect(g, x, y);
    if d >= 1e-10 {
        return Err(Error::NotIsotropic(d));
    }
    if projective_distance(x, y) < 1e-8 {
        return Err(Error::NotAPlane);
    }
    Ok(d)
}

/// A null vector orthogonal to `v` and not proportional to it.
pub(crate) fn partner(g: &[C64], mode: Mode, v: &[C64], rng: &mut impl Rng) -> Result<Vec<C64>> {
    let n = v.len();
    let c: Vec<C64> = (0..n).map(|i| (0..n).map(|j| g[i * n + j] * v[j]).sum()).collect();
    let p = (0..n).max_by(|&a, &b| c[a].norm().total_cmp(&c[b].norm())).unwrap_or(0);
    if c[p].norm() == 0.0 {
        return Err(Error::InvalidArgument("vector is zero".into()));
    }
    let basis: Vec<Vec<C64>> = (0..n)
        .filter(|&i| i != p)
        .map(|i| {
            let mut e = vec![ZERO; n];
            e[i] = re(1.0);
            e[p] = -c[i] / c[p];
            e
        })
        .collect();
    let comb = |w: &[C64]| -> Vec<C64> { (0..n).map(|k| basis.iter().zip(w).map(|(b, s)| b[k] * s).sum()).collect() };
    let scale = crate::scalar::max_abs(g);
    for _ in 0..2000 {
        let a = comb(&random_vector(n - 1, mode, rng));
        let b = comb(&random_vector(n - 1, mode, rng));
        let Some(y) = null_on_plane(g, mode, &a, &b, scale) else { continue };
        if projective_distance(&y, v) < 1e-3 {
            continue;
        }
        let y = modulo(v, &y);
        let ny = euclid_norm(&y);
        let y: Vec<C64> = y.iter().map(|c| c / ny).collect();
        // Ill-conditioned roots lose isotropy; draw again rather than accept them.
        if gram_defect(g, v, &y) > 1e-12 {
            continue;
        }
        return Ok(y);
    }
    Err(Error::InvalidArgument("no totally isotropic plane contains this null vector".into()))
}

/// Random totally isotropic planes `(X, Y)` at a point with metric values `g`.
pub fn sample_isotropic_planes(g: &[C64], mode: Mode, count: usize, seed: u64) -> Result<Vec<(Vec<C64>, Vec<C64>)>> {
    let n = (g.len() as f64).sqrt() as usize;
    if mode.is_real() {
        let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| g[i * n + j].re)).eigenvalues;
        let neg = eig.iter().filter(|e| **e < 0.0).count();
        if neg.min(n - neg) < 2 {
            return Err(Error::InvalidArgument(format!("signature ({}, {neg}) has no totally isotropic 2-planes", n - neg)));
        }
    }
    let mut rng = crate::random::rng(seed);
    let xs = cone_vectors(g, mode, count, &mut rng)?;
    xs.into_iter().map(|x| Ok((x.clone(), partner(g, mode, &x, &mut rng)?))).collect()
}

/// Sectional numerators of `R`, `W` and `h∧I` on a totally isotropic plane,
/// and in dimension 4 those of `W±` with the plane's type.
#[derive(Debug, Clone)]
pub struct IsotropicSectional {
    pub r: C64,
    pub w: C64,
    pub h_wedge: C64,
    pub w_plus: Option<C64>,
    pub w_minus: Option<C64>,
    pub class: Option<PlaneClass>,
    pub gram_defect: f64,
}

pub fn isotropic_sectional(pack: &CurvaturePack, x: &[C64], y: &[C64]) -> Result<IsotropicSectional> {
    let gram_defect = require_isotropic(pack.g.data(), x, y)?;
    let (mut w_plus, mut w_minus, mut class) = (None, None, None);
    if let Some(parts) = &pack.self_dual {
        w_plus = Some(sectional_value(&parts.weyl_plus, x, y));
        w_minus = Some(sectional_value(&parts.weyl_minus, x, y));
        let frame = oriented_frame(pack, &[])?;
        class = Some(classify_isotropic_plane(x, y, &pack.g, &frame)?.0);
    }
    Ok(IsotropicSectional {
        r: sectional_value(&pack.riemann_down, x, y),
        w: sectional_value(&pack.weyl_down, x, y),
        h_wedge: sectional_value(&pack.h_wedge, x, y),
        w_plus,
        w_minus,
        class,
        gram_defect,
    })
}

/// Isotropic sectional curvatures sampled at a point, against `‖W‖`.
#[derive(Debug, Clone)]
pub struct IsotropicScan {
    pub samples: usize,
    pub seed: u64,
    pub max_r: f64,
    pub max_h_wedge: f64,
    /// Largest `|R^F − W^F|`.
    pub max_r_minus_w: f64,
    /// Dimension 4: largest values on α- and β-planes.
    pub max_alpha: Option<f64>,
    pub max_beta: Option<f64>,
    pub weyl_norm: f64,
    pub riemann_norm: f64,
    /// All sampled `|R^F| < tol`.
    pub consistent_with_flat: bool,
}

pub fn weyl_isotropic_scan(field: &dyn MetricField, point: &[C64], samples: usize, seed: u64, tol: f64) -> Result<IsotropicScan> {
    let n = field.dim();
    if n < 4 {
        return Err(Error::DimensionTooLow { required: 4, found: n });
    }
    let pack = CurvaturePack::compute(field, point)?;
    let planes = sample_isotropic_planes(pack.g.data(), pack.mode, samples, seed)?;
    let mut scan = IsotropicScan {
        samples,
        seed,
        max_r: 0.0,
        max_h_wedge: 0.0,
        max_r_minus_w: 0.0,
        max_alpha: None,
        max_beta: None,
        weyl_norm: pack.weyl_down.norm(),
        riemann_norm: pack.riemann_down.norm(),
        consistent_with_flat: true,
    };
    for (x, y) in &planes {
        let s = isotropic_sectional(&pack, x, y)?;
        scan.max_r = scan.max_r.max(s.r.norm());
        scan.max_h_wedge = scan.max_h_wedge.max(s.h_wedge.norm());
        scan.max_r_minus_w = scan.max_r_minus_w.max((s.r - s.w).norm());
        match s.class {
            Some(PlaneClass::Alpha) => scan.max_alpha = Some(scan.max_alpha.unwrap_or(0.0).max(s.r.norm())),
            Some(PlaneClass::Beta) => scan.max_beta = Some(scan.max_beta.unwrap_or(0.0).max(s.r.norm())),
            _ => {}
        }
    }
    scan.consistent_with_flat = scan.max_r < tol;
    Ok(scan)
}

/// An algebraic curvature tensor on flat `ℝ^{2,2}` with a totally isotropic
/// plane of nonzero sectional curvature: `K = −½ a○a` for
/// `a = dx₁² + dx₂²`, `X₀ = e₁ + e₃`, `Y₀ = e₂ + e₄`, and `K(X₀,Y₀)X₀ = A₀`.
#[derive(Debug, Clone)]
pub struct TensorK {
    pub g: TensorAtPoint,
    pub k: TensorAtPoint,
    pub x0: Vec<C64>,
    pub y0: Vec<C64>,
    pub a0: Vec<C64>,
}

pub fn tensor_k() -> TensorK {
    let n = 4;
    let d = [Variance::Down; 2];
    let g = Tensor::from_fn(n, &d, |i| if i[0] != i[1] { ZERO } else if i[0] < 2 { re(1.0) } else { re(-1.0) });
    let a = Tensor::from_fn(n, &d, |i| if i[0] == i[1] && i[0] < 2 { re(1.0) } else { ZERO });
    // K_ijkl = a_ik a_jl − a_jk a_il
    let k = Tensor::from_fn(n, &[Variance::Down; 4], |x| {
        a.get(&[x[0], x[2]]) * a.get(&[x[1], x[3]]) - a.get(&[x[1], x[2]]) * a.get(&[x[0], x[3]])
    });
    let x0 = vec![re(1.0), ZERO, re(1.0), ZERO];
    let y0 = vec![ZERO, re(1.0), ZERO, re(1.0)];
    // (K(X,Y)Z)^l = g^{lm} K(X,Y,Z,∂_m); g is its own inverse here.
    let a0 = (0..n)
        .map(|l| {
            let mut e = vec![ZERO; n];
            e[l] = re(1.0);
            k.eval(&[&x0, &y0, &x0, &e]) * g.get(&[l, l])
        })
        .collect();
    TensorK { g, k, x0, y0, a0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_metric, MetricRecipe};
    use crate::tensor::MetricChart;

    #[test]
    fn tensor_k_has_the_stated_products() {
        let t = tensor_k();
        let gd = t.g.data();
        assert_eq!(bilinear(gd, &t.y0, &t.a0), re(1.0));
        for (u, v) in [(&t.x0, &t.x0), (&t.x0, &t.y0), (&t.y0, &t.y0), (&t.x0, &t.a0)] {
            assert_eq!(bilinear(gd, u, v), ZERO);
        }
        assert_eq!(sectional_value(&t.k, &t.x0, &t.y0), re(1.0));
        // Algebraic curvature symmetries.
        crate::tensor::for_each_index(4, 4, |i| {
            let v = *t.k.get(i);
            assert_eq!(v, -*t.k.get(&[i[1], i[0], i[2], i[3]]));
            assert_eq!(v, *t.k.get(&[i[2], i[3], i[0], i[1]]));
            let cyc = v + t.k.get(&[i[1], i[2], i[0], i[3]]) + t.k.get(&[i[2], i[0], i[1], i[3]]);
            assert_eq!(cyc, ZERO);
        });
    }

    #[test]
    fn suspension_vanishes_on_isotropic_planes() {
        for seed in 0..4 {
            let chart = random_metric(&MetricRecipe::split(), 40 + seed).unwrap();
            let p = vec![re(0.1), re(-0.05), re(0.2), re(0.0)];
            let pack = CurvaturePack::compute(&chart, &p).unwrap();
            for (x, y) in sample_isotropic_planes(pack.g.data(), Mode::Real, 25, seed).unwrap() {
                let s = isotropic_sectional(&pack, &x, &y).unwrap();
                assert!(s.h_wedge.norm() < 1e-10);
                assert!((s.r - s.w).norm() < 1e-9);
                let (wp, wm) = (s.w_plus.unwrap(), s.w_minus.unwrap());
                match s.class.unwrap() {
                    PlaneClass::Alpha => assert!(wm.norm() < 1e-9 && (wp - s.w).norm() < 1e-9),
                    PlaneClass::Beta => assert!(wp.norm() < 1e-9 && (wm - s.w).norm() < 1e-9),
                    PlaneClass::NotIsotropic => panic!("sampled plane is not isotropic"),
                }
            }
        }
    }

    #[test]
    fn scan_separates_flat_from_curved() {
        let p = vec![re(0.1), re(0.2), re(-0.1), re(0.3)];
        let f = "exp(0.3*x*y)";
        let nf = "-exp(0.3*x*y)";
        let sig = MetricChart::diagonal("cf", &["x", "y", "z", "w"], Mode::Real, &[f, f, nf, nf]).unwrap();
        let scan = weyl_isotropic_scan(&sig, &p, 50, 3, 1e-9).unwrap();
        assert!(scan.consistent_with_flat && scan.weyl_norm < 1e-9, "{scan:?}");
        assert_eq!(scan.samples, 50);

        let curved = random_metric(&MetricRecipe::split(), 77).unwrap();
        let scan = weyl_isotropic_scan(&curved, &p, 50, 3, 1e-9).unwrap();
        assert!(scan.max_r > 1e-3 * scan.riemann_norm);
        assert!(scan.max_alpha.is_some() && scan.max_beta.is_some());

        let complex = random_metric(&MetricRecipe::complex(4), 78).unwrap();
        let scan = weyl_isotropic_scan(&complex, &p, 20, 4, 1e-9).unwrap();
        assert!(scan.max_h_wedge < 1e-10 && scan.max_r > 1e-3 * scan.riemann_norm);
    }

    #[test]
    fn lorentzian_and_riemannian_have_no_isotropic_planes() {
        let g: Vec<C64> = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0]
            .iter()
            .map(|&x| re(x))
            .collect();
        assert!(sample_isotropic_planes(&g, Mode::Real, 3, 0).is_err());
    }

    #[test]
    fn non_isotropic_plane_is_rejected() {
        let chart = random_metric(&MetricRecipe::split(), 3).unwrap();
        let pack = CurvaturePack::compute(&chart, &[re(0.0); 4]).unwrap();
        let x = vec![re(1.0), ZERO, ZERO, ZERO];
        let y = vec![ZERO, re(1.0), ZERO, ZERO];
        assert!(matches!(isotropic_sectional(&pack, &x, &y), Err(Error::NotIsotropic(_))));
    }
}
