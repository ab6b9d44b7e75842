//! Hodge star, the splitting of 2-forms into self-dual and anti-self-dual
//! parts, and the corresponding pieces of the Weyl and Cotton–York tensors.
//!
//! Conventions: the volume form is `σ·√det g·dx¹∧…∧dxⁿ`, `(*α)_kl = ½ α^ij ε_ijkl`
//! on 2-forms, `P± = ½(1 ± *)`. A curvature-type tensor `T_ijkl` acts on
//! 2-forms by `𝓣(α)_kl = ½ α^ij T_ijlk`, which is the identity on the unit sphere.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Mode, C64, ONE, ZERO};
use crate::tensor::{for_each_index, CurvaturePack, PointFrame, Tensor, TensorAtPoint, Variance};

const D: Variance = Variance::Down;

/// Sign of the permutation `p` of `0..p.len()`, or 0 if entries repeat.
pub fn permutation_sign(p: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i] == p[j] {
                return 0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// `√det g` for the chosen scalar field; real Lorentzian 4-metrics are rejected.
pub fn sqrt_det(g: &TensorAtPoint, mode: Mode) -> Result<C64> {
    let n = g.dim();
    let det = DMatrix::from_row_slice(n, n, g.data()).lu().determinant();
    match mode {
        Mode::Real => {
            if n == 4 && det.re < 0.0 {
                return Err(Error::LorentzianUnsupported);
            }
            Ok(C64::new(det.re.abs().sqrt(), 0.0))
        }
        Mode::Complex => Ok(det.sqrt()),
    }
}

/// Volume form components `ε_{i1…in} = σ·√det g·[i1…in]`.
pub fn volume_form(g: &TensorAtPoint, mode: Mode, sigma: i8) -> Result<TensorAtPoint> {
    let n = g.dim();
    let s = sqrt_det(g, mode)? * f64::from(sigma);
    Ok(Tensor::from_fn(n, &vec![D; n], |idx| s * f64::from(permutation_sign(idx))))
}

/// Hodge star on 2-forms with four covariant indices: `(*α)_kl = M[k,l,i,j] α_ij`.
#[derive(Debug, Clone)]
pub struct CoordinateStar {
    m: TensorAtPoint,
}

impl CoordinateStar {
    pub fn new(g: &TensorAtPoint, ginv: &TensorAtPoint, mode: Mode, sigma: i8) -> Result<Self> {
        if g.dim() != 4 {
            return Err(Error::WrongDimension { required: 4, found: g.dim() });
        }
        let eps = volume_form(g, mode, sigma)?;
        let n = 4;
        let m = Tensor::from_fn(n, &[D, D, D, D], |x| {
            let (k, l, i, j) = (x[0], x[1], x[2], x[3]);
            let mut acc = ZERO;
            for a in 0..n {
                for b in 0..n {
                    let e = eps.get(&[a, b, k, l]);
                    if *e != ZERO {
                        acc += ginv.get(&[i, a]) * ginv.get(&[j, b]) * e;
                    }
                }
            }
            acc * 0.5
        });
        Ok(CoordinateStar { m })
    }

    /// Star applied to the antisymmetric slot pair `(slot, slot + 1)`.
    pub fn apply(&self, t: &TensorAtPoint, slot: usize) -> TensorAtPoint {
        let n = t.dim();
        let mut src = vec![0usize; t.rank()];
        Tensor::from_fn(n, t.slots(), |idx| {
            src.copy_from_slice(idx);
            let (k, l) = (idx[slot], idx[slot + 1]);
            let mut acc = ZERO;
            for i in 0..n {
                for j in 0..n {
                    let c = self.m.get(&[k, l, i, j]);
                    if *c != ZERO {
                        src[slot] = i;
                        src[slot + 1] = j;
                        acc += c * t.get(&src);
                    }
                }
            }
            acc
        })
    }

    /// `P± = ½(1 ± *)` on the slot pair; `sign = +1` or `−1`.
    pub fn project(&self, t: &TensorAtPoint, slot: usize, sign: f64) -> TensorAtPoint {
        t.add(&self.apply(t, slot).scale(C64::new(sign, 0.0))).scale(C64::new(0.5, 0.0))
    }
}

/// Self-dual and anti-self-dual parts of the curvature at a point (dimension 4).
#[derive(Debug, Clone)]
pub struct SelfDualParts {
    pub star: CoordinateStar,
    /// `W± = P± W P±`, four covariant slots.
    pub weyl_plus: TensorAtPoint,
    pub weyl_minus: TensorAtPoint,
    /// `C± = P±` on the first pair of `C`.
    pub cotton_plus: TensorAtPoint,
    pub cotton_minus: TensorAtPoint,
    /// `∇W±`, derivative slot first.
    pub nabla_weyl_plus: TensorAtPoint,
    pub nabla_weyl_minus: TensorAtPoint,
    /// Divergences of `W±` on the last slot.
    pub div_weyl_plus: TensorAtPoint,
    pub div_weyl_minus: TensorAtPoint,
}

impl SelfDualParts {
    pub fn compute(pack: &CurvaturePack) -> Result<Self> {
        let star = CoordinateStar::new(&pack.g, &pack.ginv, pack.mode, pack.orientation)?;
        let both = |t: &TensorAtPoint, first: usize, sign: f64| {
            let once = star.project(t, first, sign);
            star.project(&once, first + 2, sign)
        };
        let weyl_plus = both(&pack.weyl_down, 0, 1.0);
        let weyl_minus = both(&pack.weyl_down, 0, -1.0);
        let nabla_weyl_plus = both(&pack.nabla_weyl, 1, 1.0);
        let nabla_weyl_minus = both(&pack.nabla_weyl, 1, -1.0);
        let div_weyl_plus = crate::tensor::contract_divergence(&nabla_weyl_plus, &pack.ginv);
        let div_weyl_minus = crate::tensor::contract_divergence(&nabla_weyl_minus, &pack.ginv);
        Ok(SelfDualParts {
            cotton_plus: star.project(&pack.cotton, 0, 1.0),
            cotton_minus: star.project(&pack.cotton, 0, -1.0),
            star,
            weyl_plus,
            weyl_minus,
            nabla_weyl_plus,
            nabla_weyl_minus,
            div_weyl_plus,
            div_weyl_minus,
        })
    }
}

/// Orthonormal frame at the pack's point, oriented by the pack's volume form.
/// Seeds fix the leading vectors; the last vector is flipped if needed.
pub fn oriented_frame(pack: &CurvaturePack, seeds: &[Vec<C64>]) -> Result<PointFrame> {
    let mut frame = crate::tensor::orthonormal_frame(pack.g.data(), pack.mode, &pack.point, seeds)?;
    frame.orient(sqrt_det(&pack.g, pack.mode)?, pack.orientation);
    Ok(frame)
}

fn require_parts(pack: &CurvaturePack) -> Result<&SelfDualParts> {
    if pack.n != 4 {
        return Err(Error::WrongDimension { required: 4, found: pack.n });
    }
    pack.self_dual.as_ref().ok_or(Error::LorentzianUnsupported)
}

/// `(C⁺, C⁻)` in coordinates.
pub fn cy_pm(pack: &CurvaturePack) -> Result<(TensorAtPoint, TensorAtPoint)> {
    let p = require_parts(pack)?;
    Ok((p.cotton_plus.clone(), p.cotton_minus.clone()))
}

/// `(δW⁺, δW⁻)` in coordinates.
pub fn div_weyl_pm(pack: &CurvaturePack) -> Result<(TensorAtPoint, TensorAtPoint)> {
    let p = require_parts(pack)?;
    Ok((p.div_weyl_plus.clone(), p.div_weyl_minus.clone()))
}

fn check_frame(frame: &PointFrame) -> Result<()> {
    frame.require_orthonormal()
}

/// Hodge star of a `p`-form given by its frame components, in an oriented
/// orthonormal frame: `(*α)_{b…} = (1/p!) α^{a…} [a… b…]`.
pub fn hodge_star(form: &TensorAtPoint, frame: &PointFrame) -> Result<TensorAtPoint> {
    check_frame(frame)?;
    let n = frame.dim();
    let p = form.rank();
    if p > n || form.dim() != n || form.slots().iter().any(|s| *s != D) {
        return Err(Error::VarianceMismatch("hodge_star expects a covariant form in the frame".into()));
    }
    let negatives = frame.eps.iter().filter(|e| **e < 0.0).count();
    if n == 4 && p == 2 && negatives % 2 == 1 {
        return Err(Error::LorentzianUnsupported);
    }
    let fact: f64 = (1..=p).map(|k| k as f64).product();
    let mut full = vec![0usize; n];
    Ok(Tensor::from_fn(n, &vec![D; n - p], |tail| {
        let mut acc = ZERO;
        for_each_index(n, p, |head| {
            full[..p].copy_from_slice(head);
            full[p..].copy_from_slice(tail);
            let s = permutation_sign(&full);
            if s != 0 {
                let e: f64 = head.iter().map(|&a| frame.eps[a]).product();
                acc += form.get(head) * (e * f64::from(s));
            }
        });
        acc / fact
    }))
}

/// Index pairs `(a, b)`, `a < b`, spanning 2-forms in dimension `n`.
pub fn two_form_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            out.push((a, b));
        }
    }
    out
}

/// Matrix of the operator `𝓣(α)_cd = ½ α^ab T_abdc` on frame 2-forms
/// `e^a∧e^b`, for a curvature-type tensor given by frame components.
pub fn curvature_operator(t: &TensorAtPoint, frame: &PointFrame) -> DMatrix<C64> {
    let pairs = two_form_pairs(frame.dim());
    let m = pairs.len();
    DMatrix::from_fn(m, m, |r, c| {
        let (cc, dd) = pairs[r];
        let (a, b) = pairs[c];
        *t.get(&[a, b, dd, cc]) * (frame.eps[a] * frame.eps[b])
    })
}

/// Matrix of the Hodge star on frame 2-forms (dimension 4).
pub fn star_operator(frame: &PointFrame) -> DMatrix<C64> {
    let pairs = two_form_pairs(frame.dim());
    let m = pairs.len();
    DMatrix::from_fn(m, m, |r, c| {
        let (cc, dd) = pairs[r];
        let (a, b) = pairs[c];
        C64::new(frame.eps[a] * frame.eps[b] * f64::from(permutation_sign(&[a, b, cc, dd])), 0.0)
    })
}

/// `‖a − b‖` relative to the curvature operator both sides derive from.
fn rel(a: &DMatrix<C64>, b: &DMatrix<C64>, scale: f64) -> f64 {
    (a - b).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / (scale + 1e-12)
}

/// Both routes to `W±` at a point with their cross-validation residuals.
#[derive(Debug, Clone)]
pub struct WeylSplit {
    /// Frame components of `W⁺` and `W⁻`.
    pub plus: TensorAtPoint,
    pub minus: TensorAtPoint,
    /// Trace-free part of `P±𝓡P±` against `P±𝓦P±`, maximum over both signs.
    pub operator_residual: f64,
    /// The four-term frame formulas against the projector route, maximum
    /// over the even relabellings of the frame.
    pub arw_plus_residual: f64,
    pub arw_minus_residual: f64,
    /// `|Scal − 4 tr(𝓡|Λ⁺)| / |Scal|` (absolute when `Scal ≈ 0`).
    pub scal_trace_residual: f64,
    pub star_square_residual: f64,
}

/// Bracket `⟨T(X,Y)Z, V⟩ = T_XYVZ` on frame labels.
fn bracket(t: &TensorAtPoint, x: usize, y: usize, z: usize, v: usize) -> C64 {
    *t.get(&[x, y, v, z])
}

/// Right-hand side of the four-term formula for `⟨W±(X,Y)Z,X⟩` in an oriented
/// orthonormal frame `(X, Y, Z, ν)` with signs `eps`. The signs come from
/// `*(X∧Y) = ε_Z ε_ν Z∧ν` and reduce to the unsigned formula when all are 1.
pub fn arw_formula(r: &TensorAtPoint, eps: &[f64], x: usize, y: usize, z: usize, nu: usize, sign: f64) -> C64 {
    let (ey, ez, en) = (eps[y], eps[z], eps[nu]);
    (bracket(r, x, y, z, x)
        + bracket(r, z, nu, y, nu) * (ey * ez)
        + (bracket(r, x, y, y, nu) * (ey * en) + bracket(r, z, nu, z, x) * (ez * en)) * sign)
        * 0.25
}

pub fn weyl_pm(pack: &CurvaturePack, frame: &PointFrame) -> Result<WeylSplit> {
    let parts = require_parts(pack)?;
    check_frame(frame)?;
    let g = pack.g.data();
    let plus = parts.weyl_plus.in_frame(frame, g);
    let minus = parts.weyl_minus.in_frame(frame, g);
    let r = pack.riemann_down.in_frame(frame, g);
    let w = pack.weyl_down.in_frame(frame, g);

    let star = star_operator(frame);
    let id = DMatrix::<C64>::identity(6, 6);
    let star_square_residual = (&star * &star - &id).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rop = curvature_operator(&r, frame);
    let wop = curvature_operator(&w, frame);
    let rnorm = rop.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut operator_residual = 0.0f64;
    let mut scal_trace_residual = 0.0;
    for sign in [1.0, -1.0] {
        let p = (&id + &star * C64::new(sign, 0.0)) * C64::new(0.5, 0.0);
        let prp = &p * &rop * &p;
        let tr = prp.trace();
        let tracefree = &prp - &p * (tr / 3.0);
        let pwp = &p * &wop * &p;
        operator_residual = operator_residual.max(rel(&tracefree, &pwp, rnorm));
        let projected = if sign > 0.0 { &plus } else { &minus };
        let direct = curvature_operator(projected, frame);
        operator_residual = operator_residual.max(rel(&direct, &pwp, rnorm));
        if sign > 0.0 {
            let d = (pack.scal - tr * 4.0).norm();
            scal_trace_residual = if pack.scal.norm() > 1e-12 { d / pack.scal.norm() } else { d };
        }
    }

    let mut arw = [0.0f64; 2];
    let scale = r.norm() + 1e-12;
    for perm in even_permutations4() {
        let [x, y, z, nu] = perm;
        for (slot, sign, t) in [(0, 1.0, &plus), (1, -1.0, &minus)] {
            let lhs = bracket(t, x, y, z, x);
            let rhs = arw_formula(&r, &frame.eps, x, y, z, nu, sign);
            arw[slot] = arw[slot].max((lhs - rhs).norm() / scale);
        }
    }
    Ok(WeylSplit {
        plus,
        minus,
        operator_residual,
        arw_plus_residual: arw[0],
        arw_minus_residual: arw[1],
        scal_trace_residual,
        star_square_residual,
    })
}

fn even_permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for_each_index(4, 4, |p| {
        if permutation_sign(p) == 1 {
            out.push([p[0], p[1], p[2], p[3]]);
        }
    });
    out
}

/// Endomorphism `*∘𝓡∘*` of 1-forms in dimension 3 (frame matrix) and the
/// residual against `−h + (tr h)·I`.
pub fn star_ricci_3d(pack: &CurvaturePack, frame: &PointFrame) -> Result<(DMatrix<C64>, f64)> {
    if pack.n != 3 {
        return Err(Error::WrongDimension { required: 3, found: pack.n });
    }
    check_frame(frame)?;
    let g = pack.g.data();
    let r = pack.riemann_down.in_frame(frame, g);
    let h = pack.h.in_frame(frame, g);
    let e = &frame.eps;
    // Column a: image of the coframe covector θ^a.
    let mut lhs = DMatrix::from_element(3, 3, ZERO);
    for a in 0..3 {
        let theta = Tensor::from_fn(3, &[D], |i| if i[0] == a { ONE } else { ZERO });
        let alpha = hodge_star(&theta, frame)?;
        let image = Tensor::from_fn(3, &[D, D], |x| {
            let (c, d) = (x[0], x[1]);
            let mut acc = ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    acc += alpha.get(&[i, j]) * r.get(&[i, j, d, c]) * (e[i] * e[j]);
                }
            }
            acc * 0.5
        });
        let back = hodge_star(&image, frame)?;
        for c in 0..3 {
            lhs[(c, a)] = *back.get(&[c]);
        }
    }
    let tr: C64 = (0..3).map(|a| h.get(&[a, a]) * e[a]).sum();
    let rhs = DMatrix::from_fn(3, 3, |c, a| -h.get(&[c, a]) * e[a] + if a == c { tr } else { ZERO });
    let residual = crate::scalar::relative_residual(lhs.as_slice(), rhs.as_slice());
    Ok((lhs, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneClass {
    /// `X∧Y` self-dual.
    Alpha,
    /// `X∧Y` anti-self-dual.
    Beta,
    NotIsotropic,
}

/// Classifies the plane spanned by two coordinate vectors. Returns the class
/// and the star eigenvalue of `X∧Y` (0 when it is not an eigenvector).
pub fn classify_isotropic_plane(
    x: &[C64],
    y: &[C64],
    g: &TensorAtPoint,
    frame: &PointFrame,
) -> Result<(PlaneClass, f64)> {
    if g.dim() != 4 {
        return Err(Error::WrongDimension { required: 4, found: g.dim() });
    }
    check_frame(frame)?;
    if frame.eps.iter().filter(|e| **e < 0.0).count() % 2 == 1 {
        return Err(Error::LorentzianUnsupported);
    }
    let n = 4;
    let biv = Tensor::from_fn(n, &[Variance::Up, Variance::Up], |i| x[i[0]] * y[i[1]] - x[i[1]] * y[i[0]]);
    let nx: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if biv.norm() <= 1e-12 * nx * ny {
        return Err(Error::NotAPlane);
    }
    let gd = g.data();
    let b = |u: &[C64], v: &[C64]| crate::tensor::bilinear(gd, u, v);
    let gram_defect = [b(x, x), b(x, y), b(y, y)].iter().map(|c| c.norm()).fold(0.0, f64::max) / (nx * ny).max(1e-300);
    if gram_defect >= 1e-10 {
        return Ok((PlaneClass::NotIsotropic, 0.0));
    }
    // Frame components of the 2-form X♭∧Y♭.
    let lowered = biv.lower(0, gd)?.lower(1, gd)?;
    let alpha = Tensor::from_fn(n, &[D, D], |i| lowered.eval(&[&frame.vectors[i[0]], &frame.vectors[i[1]]]));
    let starred = hodge_star(&alpha, frame)?;
    let norm = alpha.norm();
    let plus_defect = alpha.sub(&starred).norm() / norm;
    let minus_defect = alpha.add(&starred).norm() / norm;
    if plus_defect < 1e-8 {
        Ok((PlaneClass::Alpha, 1.0))
    } else if minus_defect < 1e-8 {
        Ok((PlaneClass::Beta, -1.0))
    } else {
        Err(Error::HypothesisViolated("totally isotropic plane is not a star eigenvector".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;
    use crate::tensor::{orthonormal_frame, MetricChart};

    fn diag(d: &[f64]) -> TensorAtPoint {
        let n = d.len();
        Tensor::from_fn(n, &[D, D], |i| if i[0] == i[1] { re(d[i[0]]) } else { ZERO })
    }

    fn frame_for(d: &[f64], mode: Mode) -> (TensorAtPoint, PointFrame) {
        let g = diag(d);
        let f = orthonormal_frame(g.data(), mode, &vec![ZERO; d.len()], &[]).unwrap();
        (g, f)
    }

    fn basis2(n: usize, a: usize, b: usize) -> TensorAtPoint {
        Tensor::from_fn(n, &[D, D], |i| {
            if (i[0], i[1]) == (a, b) {
                ONE
            } else if (i[0], i[1]) == (b, a) {
                -ONE
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn euclidean_stars() {
        let (_, f) = frame_for(&[1.0; 4], Mode::Real);
        let s = hodge_star(&basis2(4, 0, 1), &f).unwrap();
        assert!(s.sub(&basis2(4, 2, 3)).max_abs() < 1e-15);
        let (_, f3) = frame_for(&[1.0; 3], Mode::Real);
        let s3 = hodge_star(&basis2(3, 0, 1), &f3).unwrap();
        assert_eq!(*s3.get(&[2]), ONE);
        assert_eq!(*s3.get(&[0]), ZERO);
    }

    #[test]
    fn split_star_squares_to_identity() {
        let (_, f) = frame_for(&[1.0, 1.0, -1.0, -1.0], Mode::Real);
        let s = star_operator(&f);
        let sq = &s * &s;
        assert!((sq - DMatrix::<C64>::identity(6, 6)).iter().all(|c| c.norm() < 1e-15));
        // the same through the tensor route
        for (a, b) in two_form_pairs(4) {
            let alpha = basis2(4, a, b);
            let twice = hodge_star(&hodge_star(&alpha, &f).unwrap(), &f).unwrap();
            assert!(twice.sub(&alpha).max_abs() < 1e-15);
        }
    }

    #[test]
    fn lorentzian_is_rejected() {
        let (_, f) = frame_for(&[1.0, 1.0, 1.0, -1.0], Mode::Real);
        assert!(matches!(hodge_star(&basis2(4, 0, 1), &f), Err(Error::LorentzianUnsupported)));
        let g = diag(&[1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(volume_form(&g, Mode::Real, 1), Err(Error::LorentzianUnsupported)));
    }

    #[test]
    fn coordinate_star_matches_frame_star() {
        let g = Tensor::from_data(
            4,
            &[D, D],
            [2.0, 0.3, 0.0, 0.1, 0.3, 1.0, 0.2, 0.0, 0.0, 0.2, 1.5, 0.4, 0.1, 0.0, 0.4, 3.0].iter().map(|&v| re(v)).collect(),
        );
        let m = DMatrix::from_row_slice(4, 4, g.data());
        let inv = m.try_inverse().unwrap();
        let ginv = Tensor::from_fn(4, &[Variance::Up, Variance::Up], |i| inv[(i[0], i[1])]);
        let star = CoordinateStar::new(&g, &ginv, Mode::Real, 1).unwrap();
        let mut frame = orthonormal_frame(g.data(), Mode::Real, &[ZERO; 4], &[]).unwrap();
        frame.orient(sqrt_det(&g, Mode::Real).unwrap(), 1);
        let f = |a: usize, b: usize| (1.0 + a as f64 * 0.3) * (2.0 - b as f64 * 0.7);
        let alpha = Tensor::from_fn(4, &[D, D], |i| re(f(i[0], i[1]) - f(i[1], i[0])));
        let coord = star.apply(&alpha, 0).in_frame(&frame, g.data());
        let direct = hodge_star(&alpha.in_frame(&frame, g.data()), &frame).unwrap();
        assert!(coord.sub(&direct).max_abs() < 1e-12);
        // projector algebra
        let p = star.project(&alpha, 0, 1.0);
        let q = star.project(&alpha, 0, -1.0);
        assert!(p.add(&q).sub(&alpha).max_abs() < 1e-12);
        assert!(star.project(&p, 0, 1.0).sub(&p).max_abs() < 1e-12);
        assert!(star.project(&p, 0, -1.0).max_abs() < 1e-12);
    }

    #[test]
    fn isotropic_plane_classification() {
        let (g, f) = frame_for(&[1.0, 1.0, -1.0, -1.0], Mode::Real);
        let x = [re(1.0), ZERO, re(1.0), ZERO];
        let y = [ZERO, re(1.0), ZERO, re(1.0)];
        let (class, ev) = classify_isotropic_plane(&x, &y, &g, &f).unwrap();
        assert_ne!(class, PlaneClass::NotIsotropic);
        // direct star of X♭∧Y♭ decides the class
        let alpha = Tensor::from_fn(4, &[D, D], |i| {
            let xl = |k: usize| x[k] * f.eps[k];
            let yl = |k: usize| y[k] * f.eps[k];
            xl(i[0]) * yl(i[1]) - xl(i[1]) * yl(i[0])
        });
        let s = hodge_star(&alpha, &f).unwrap();
        assert!(s.sub(&alpha.scale(re(ev))).max_abs() < 1e-14);

        let (ge, fe) = frame_for(&[1.0; 4], Mode::Real);
        let e1 = [ONE, ZERO, ZERO, ZERO];
        let e2 = [ZERO, ONE, ZERO, ZERO];
        assert_eq!(classify_isotropic_plane(&e1, &e2, &ge, &fe).unwrap().0, PlaneClass::NotIsotropic);
        assert!(matches!(classify_isotropic_plane(&e1, &e1, &ge, &fe), Err(Error::NotAPlane)));

        let (gc, fc) = frame_for(&[1.0; 4], Mode::Complex);
        let i = C64::new(0.0, 1.0);
        let u = [ONE, i, ZERO, ZERO];
        let v = [ZERO, ZERO, ONE, i];
        assert_ne!(classify_isotropic_plane(&u, &v, &gc, &fc).unwrap().0, PlaneClass::NotIsotropic);
    }

    fn random_pack(recipe: &crate::random::MetricRecipe, seed: u64) -> CurvaturePack {
        let chart = crate::random::random_metric(recipe, seed).unwrap();
        let p = crate::random::interior_points(4, 1, &mut crate::random::rng(seed + 100)).remove(0);
        CurvaturePack::compute(&chart, &p).unwrap()
    }

    #[test]
    fn weyl_routes_agree() {
        use crate::random::MetricRecipe;
        for recipe in [MetricRecipe::riemannian(4), MetricRecipe::split(), MetricRecipe::complex(4)] {
            for seed in 0..3 {
                let pack = random_pack(&recipe, seed);
                let frame = oriented_frame(&pack, &[]).unwrap();
                let split = weyl_pm(&pack, &frame).unwrap();
                assert!(split.operator_residual < 1e-10, "{recipe:?} {:e}", split.operator_residual);
                assert!(split.arw_plus_residual < 1e-10, "{recipe:?} {:e}", split.arw_plus_residual);
                assert!(split.arw_minus_residual < 1e-10, "{recipe:?} {:e}", split.arw_minus_residual);
                assert!(split.scal_trace_residual < 1e-10, "{recipe:?} {:e}", split.scal_trace_residual);
                assert!(split.star_square_residual < 1e-12);
            }
        }
    }

    #[test]
    fn orientation_flip_swaps_parts() {
        let chart = crate::random::random_metric(&crate::random::MetricRecipe::riemannian(4), 4).unwrap();
        let p = crate::random::interior_points(4, 1, &mut crate::random::rng(1)).remove(0);
        let a = CurvaturePack::compute(&chart, &p).unwrap();
        let b = CurvaturePack::compute(&chart.clone().with_orientation(-1), &p).unwrap();
        let (pa, pb) = (a.self_dual.unwrap(), b.self_dual.unwrap());
        assert!(pa.weyl_plus.sub(&pb.weyl_minus).max_abs() < 1e-12);
        assert!(pa.cotton_minus.sub(&pb.cotton_plus).max_abs() < 1e-12);
        assert!(pa.weyl_plus.norm() > 1e-3 && pa.weyl_minus.norm() > 1e-3);
    }

    #[test]
    fn schwarzschild_is_not_half_flat() {
        let chart = MetricChart::parse(
            "schw",
            &["r", "tau", "theta", "phi"],
            Mode::Real,
            &["1/(1 - 2/r)", "0", "0", "0", "1 - 2/r", "0", "0", "r^2", "0", "r^2*sin(theta)^2"],
        )
        .unwrap();
        let pack = CurvaturePack::compute(&chart, &[re(4.0), re(0.3), re(1.1), re(0.4)]).unwrap();
        let parts = pack.self_dual.as_ref().unwrap();
        let (np, nm) = (parts.weyl_plus.norm(), parts.weyl_minus.norm());
        assert!(np > 1e-3 && nm > 1e-3);
        assert!((np - nm).abs() / np < 1e-6);
    }

    #[test]
    fn sphere_star_ricci() {
        let f = "4/(1 + x^2 + y^2 + z^2)^2";
        let chart = MetricChart::diagonal("s3", &["x", "y", "z"], Mode::Real, &[f, f, f]).unwrap();
        let p = [re(0.2), re(-0.5), re(0.1)];
        let pack = CurvaturePack::compute(&chart, &p).unwrap();
        let frame = orthonormal_frame(pack.g.data(), Mode::Real, &p, &[]).unwrap();
        let (m, res) = star_ricci_3d(&pack, &frame).unwrap();
        assert!(res < 1e-12);
        assert!((m - DMatrix::<C64>::identity(3, 3)).iter().all(|c| c.norm() < 1e-12));
    }
}
