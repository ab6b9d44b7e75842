use nalgebra::DMatrix;

use super::chart::MetricField;
use crate::error::{Error, Result};
use crate::scalar::{Mode, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Coordinate,
    Orthonormal,
}

/// A basis of the tangent space at a point with its Gram matrix.
#[derive(Debug, Clone)]
pub struct PointFrame {
    pub point: Vec<C64>,
    /// Basis vectors in coordinate components.
    pub vectors: Vec<Vec<C64>>,
    /// `g(e_a, e_b)`, row-major.
    pub gram: Vec<C64>,
    /// `g(e_a, e_a)` signs for orthonormal frames (all 1 in complex mode).
    pub eps: Vec<f64>,
    pub kind: FrameKind,
}

pub(crate) fn bilinear(g: &[C64], u: &[C64], v: &[C64]) -> C64 {
    let n = u.len();
    let mut acc = ZERO;
    for i in 0..n {
        if u[i] == ZERO {
            continue;
        }
        let mut row = ZERO;
        for j in 0..n {
            row += g[i * n + j] * v[j];
        }
        acc += u[i] * row;
    }
    acc
}

fn sqnorm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn gram_of(g: &[C64], vectors: &[Vec<C64>]) -> Vec<C64> {
    let m = vectors.len();
    let mut out = Vec::with_capacity(m * m);
    for a in vectors {
        for b in vectors {
            out.push(bilinear(g, a, b));
        }
    }
    out
}

impl PointFrame {
    pub fn coordinate(point: &[C64], g: &[C64]) -> Self {
        let n = point.len();
        let vectors: Vec<Vec<C64>> = (0..n)
            .map(|a| (0..n).map(|i| if i == a { C64::new(1.0, 0.0) } else { ZERO }).collect())
            .collect();
        PointFrame { point: point.to_vec(), gram: g.to_vec(), vectors, eps: vec![1.0; n], kind: FrameKind::Coordinate }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `max |g(e_a, e_b) − ε_a δ_ab|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { self.eps[a] } else { 0.0 };
                worst = worst.max((self.gram[a * n + b] - want).norm());
            }
        }
        worst
    }

    /// Fails unless the frame is orthonormal to 1e−10.
    pub fn require_orthonormal(&self) -> Result<()> {
        let defect = self.orthonormality_defect();
        if self.kind != FrameKind::Orthonormal || defect >= 1e-10 {
            return Err(Error::FrameNotOrthonormal(defect));
        }
        Ok(())
    }

    /// Determinant of the matrix whose columns are the basis vectors.
    pub fn determinant(&self) -> C64 {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, a| self.vectors[a][i]).lu().determinant()
    }

    /// Recomputes the Gram matrix after the vectors were modified.
    pub fn refresh(&mut self, g: &[C64]) {
        self.gram = gram_of(g, &self.vectors);
    }

    /// Flips the last vector if `vol(e_1, …, e_n)` has the wrong sign for the
    /// volume form `σ·√det g·dx¹∧…∧dxⁿ`.
    pub fn orient(&mut self, sqrt_det: C64, sigma: i8) {
        let vol = self.determinant() * sqrt_det * f64::from(sigma);
        if vol.re < 0.0 {
            if let Some(last) = self.vectors.last_mut() {
                for c in last.iter_mut() {
                    *c = -*c;
                }
            }
            let n = self.dim();
            for a in 0..n {
                if a != n - 1 {
                    self.gram[a * n + n - 1] = -self.gram[a * n + n - 1];
                    self.gram[(n - 1) * n + a] = -self.gram[(n - 1) * n + a];
                }
            }
        }
    }
}

/// Gram–Schmidt for the bilinear form `g` (no conjugation), processing the
/// seeds first and then completing greedily with the candidate of largest
/// `|g(v,v)|/|v|²`.
pub fn orthonormal_frame(g: &[C64], mode: Mode, point: &[C64], seeds: &[Vec<C64>]) -> Result<PointFrame> {
    let n = point.len();
    let gscale = crate::scalar::max_abs(g).max(1e-300);
    let tol = 1e-10;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut eps: Vec<f64> = Vec::with_capacity(n);

    let project = |v: &[C64], basis: &[Vec<C64>], eps: &[f64]| -> Vec<C64> {
        let mut out = v.to_vec();
        for (e, &s) in basis.iter().zip(eps) {
            let c = bilinear(g, v, e) * s;
            for (o, ei) in out.iter_mut().zip(e) {
                *o -= c * ei;
            }
        }
        out
    };
    let push = |v: Vec<C64>, basis: &mut Vec<Vec<C64>>, eps: &mut Vec<f64>| {
        let q = bilinear(g, &v, &v);
        let (scale, s) = match mode {
            Mode::Real => (q.re.abs().sqrt(), q.re.signum()),
            Mode::Complex => (0.0, 1.0),
        };
        let e: Vec<C64> = match mode {
            Mode::Real => v.iter().map(|c| c / scale).collect(),
            Mode::Complex => {
                let r = q.sqrt();
                v.iter().map(|c| c / r).collect()
            }
        };
        basis.push(e);
        eps.push(s);
    };

    for (index, seed) in seeds.iter().enumerate() {
        if seed.len() != n {
            return Err(Error::InvalidArgument(format!("seed {index} has {} components", seed.len())));
        }
        let len2 = sqnorm(seed);
        if len2 == 0.0 || bilinear(g, seed, seed).norm() <= tol * gscale * len2 {
            return Err(Error::NullSeed { index });
        }
        let v = project(seed, &basis, &eps);
        let vlen2 = sqnorm(&v);
        if vlen2 <= tol * tol * len2 || bilinear(g, &v, &v).norm() <= tol * gscale * vlen2 {
            return Err(Error::DegenerateFlag);
        }
        push(v, &mut basis, &mut eps);
    }

    let unit = |a: usize| -> Vec<C64> { (0..n).map(|i| if i == a { C64::new(1.0, 0.0) } else { ZERO }).collect() };
    while basis.len() < n {
        let mut candidates: Vec<Vec<C64>> = (0..n).map(|a| project(&unit(a), &basis, &eps)).collect();
        let singles = candidates.len();
        for a in 0..singles {
            for b in (a + 1)..singles {
                let sum: Vec<C64> = candidates[a].iter().zip(&candidates[b]).map(|(x, y)| x + y).collect();
                let diff: Vec<C64> = candidates[a].iter().zip(&candidates[b]).map(|(x, y)| x - y).collect();
                candidates.push(sum);
                candidates.push(diff);
            }
        }
        let score = |v: &Vec<C64>| {
            let l = sqnorm(v);
            if l <= 1e-20 {
                0.0
            } else {
                bilinear(g, v, v).norm() / (gscale * l)
            }
        };
        // Ties resolve to the earliest candidate so coordinate bases are kept.
        let mut best = 0;
        let mut best_score = score(&candidates[0]);
        for (i, c) in candidates.iter().enumerate().skip(1) {
            let s = score(c);
            if s > best_score * (1.0 + 1e-12) {
                best = i;
                best_score = s;
            }
        }
        if best_score <= tol {
            return Err(Error::DegenerateMetric { point: format!("{point:?}") });
        }
        let chosen = candidates.swap_remove(best);
        push(chosen, &mut basis, &mut eps);
    }

    let gram = gram_of(g, &basis);
    let frame = PointFrame { point: point.to_vec(), vectors: basis, gram, eps, kind: FrameKind::Orthonormal };
    let colprod: f64 = frame.vectors.iter().map(|v| sqnorm(v).sqrt()).product();
    if frame.determinant().norm() <= 1e-10 * colprod {
        return Err(Error::DegenerateFlag);
    }
    Ok(frame)
}

/// Orthonormal frame of a metric field at a point, oriented by the field's
/// orientation when no seeds pin the last vector.
pub fn orthonormal_frame_at(field: &dyn MetricField, point: &[C64], seeds: &[Vec<C64>]) -> Result<PointFrame> {
    let g = field.metric_values(point)?;
    orthonormal_frame(&g, field.mode(), point, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;
    use crate::tensor::MetricChart;

    fn diag(d: &[f64]) -> Vec<C64> {
        let n = d.len();
        (0..n * n).map(|k| if k / n == k % n { re(d[k / n]) } else { ZERO }).collect()
    }

    #[test]
    fn split_signature_standard_basis() {
        let g = diag(&[1.0, 1.0, -1.0, -1.0]);
        let f = orthonormal_frame(&g, Mode::Real, &[ZERO; 4], &[]).unwrap();
        assert_eq!(f.eps, vec![1.0, 1.0, -1.0, -1.0]);
        for a in 0..4 {
            for i in 0..4 {
                assert_eq!(f.vectors[a][i], if a == i { re(1.0) } else { ZERO });
            }
        }
        assert!(f.orthonormality_defect() < 1e-15);
    }

    #[test]
    fn hyperbolic_frame_is_scaled_coordinates() {
        let f = "1/t^2";
        let chart = MetricChart::diagonal("h4", &["x", "y", "z", "t"], Mode::Real, &[f, f, f, f]).unwrap();
        let frame = orthonormal_frame_at(&chart, &[ZERO, ZERO, ZERO, re(2.0)], &[]).unwrap();
        for a in 0..4 {
            assert!((frame.vectors[a][a] - re(2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn isotropic_seed_is_rejected() {
        let g = diag(&[1.0, 1.0, -1.0, -1.0]);
        let seed = vec![re(1.0), ZERO, re(1.0), ZERO];
        assert!(matches!(orthonormal_frame(&g, Mode::Real, &[ZERO; 4], &[seed]), Err(Error::NullSeed { index: 0 })));
    }

    #[test]
    fn seeds_span_the_leading_flag() {
        let g = diag(&[2.0, 1.0, 3.0]);
        let s0 = vec![re(1.0), re(1.0), ZERO];
        let s1 = vec![ZERO, re(1.0), re(1.0)];
        let f = orthonormal_frame(&g, Mode::Real, &[ZERO; 3], &[s0.clone(), s1]).unwrap();
        let ratio = f.vectors[0][0] / s0[0];
        assert!((f.vectors[0][1] - ratio * s0[1]).norm() < 1e-14);
        assert!(f.vectors[1][0] != ZERO || f.vectors[1][1] != ZERO);
        assert!(f.orthonormality_defect() < 1e-14);
        let dup = vec![re(2.0), re(2.0), ZERO];
        assert!(matches!(orthonormal_frame(&g, Mode::Real, &[ZERO; 3], &[s0, dup]), Err(Error::DegenerateFlag)));
    }

    #[test]
    fn complex_frames_avoid_isotropic_pivots() {
        let i = C64::new(0.0, 1.0);
        // g = [[0, 1], [1, 0]]: both coordinate vectors are null.
        let g = vec![ZERO, re(1.0), re(1.0), ZERO];
        let f = orthonormal_frame(&g, Mode::Complex, &[ZERO, i], &[]).unwrap();
        assert_eq!(f.eps, vec![1.0, 1.0]);
        assert!(f.orthonormality_defect() < 1e-14);
    }
}
