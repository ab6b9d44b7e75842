//! Finite-difference oracle. Everything here is computed from metric values
//! only, with fourth-order central stencils and plain index formulas, so it
//! shares no code path with the jet pipeline beyond metric evaluation.

use nalgebra::DMatrix;

use super::chart::MetricField;
use super::{Tensor, TensorAtPoint, D, U};
use crate::error::{Error, Result};
use crate::scalar::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdQuantity {
    Christoffel,
    Riemann,
    RiemannDown,
    Ricci,
    NormalizedRicci,
    Weyl,
    NablaH,
    Cotton,
    NablaWeyl,
    DivWeyl,
}

impl FdQuantity {
    /// Step balancing truncation against rounding for metrics whose
    /// components vary on unit coordinate scales. Third-derivative quantities
    /// nest two stencils and need the wider step.
    pub fn default_step(self) -> f64 {
        if self.reach() > 2.0 {
            1e-2
        } else {
            1e-3
        }
    }

    /// Farthest stencil offset, in steps.
    pub fn reach(self) -> f64 {
        match self {
            FdQuantity::NablaH | FdQuantity::Cotton | FdQuantity::NablaWeyl | FdQuantity::DivWeyl => 4.0,
            _ => 2.0,
        }
    }
}

const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

struct Sampler<'a> {
    field: &'a dyn MetricField,
    n: usize,
}

impl Sampler<'_> {
    fn metric(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.field.metric_values(x)
    }

    fn shifted(x: &[C64], moves: &[(usize, f64)]) -> Vec<C64> {
        let mut y = x.to_vec();
        for &(i, d) in moves {
            y[i] += d;
        }
        y
    }

    /// Metric values with first and second partials: `(g, ∂_p g, ∂_p∂_q g)`.
    #[allow(clippy::type_complexity)]
    fn derivatives(&self, x: &[C64], h: f64) -> Result<(Vec<C64>, Vec<Vec<C64>>, Vec<Vec<C64>>)> {
        let n = self.n;
        let nn = n * n;
        let g0 = self.metric(x)?;
        let mut dg = vec![vec![ZERO; nn]; n];
        let mut ddg = vec![vec![ZERO; nn]; n * n];
        for p in 0..n {
            let m2 = self.metric(&Self::shifted(x, &[(p, -2.0 * h)]))?;
            let m1 = self.metric(&Self::shifted(x, &[(p, -h)]))?;
            let p1 = self.metric(&Self::shifted(x, &[(p, h)]))?;
            let p2 = self.metric(&Self::shifted(x, &[(p, 2.0 * h)]))?;
            for k in 0..nn {
                dg[p][k] = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h);
                ddg[p * n + p][k] = (-m2[k] + 16.0 * m1[k] - 30.0 * g0[k] + 16.0 * p1[k] - p2[k]) / (12.0 * h * h);
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let mut acc = vec![ZERO; nn];
                for &(a, ca) in &D1 {
                    for &(b, cb) in &D1 {
                        let m = self.metric(&Self::shifted(x, &[(p, a * h), (q, b * h)]))?;
                        for k in 0..nn {
                            acc[k] += m[k] * (ca * cb);
                        }
                    }
                }
                for v in acc.iter_mut() {
                    *v /= 144.0 * h * h;
                }
                ddg[q * n + p] = acc.clone();
                ddg[p * n + q] = acc;
            }
        }
        Ok((g0, dg, ddg))
    }
}

fn inverse(n: usize, g: &[C64]) -> Result<Vec<C64>> {
    let m = DMatrix::from_row_slice(n, n, g);
    let inv = m.try_inverse().ok_or_else(|| Error::DegenerateMetric { point: "finite-difference sample".into() })?;
    Ok((0..n * n).map(|k| inv[(k / n, k % n)]).collect())
}

/// Pointwise curvature from metric values and partials, by plain formulas.
struct Curvature {
    g: Vec<C64>,
    ginv: Vec<C64>,
    gamma: Vec<C64>,
    riemann: Vec<C64>,
    riemann_down: Vec<C64>,
}

fn curvature(n: usize, g: Vec<C64>, dg: &[Vec<C64>], ddg: &[Vec<C64>]) -> Result<Curvature> {
    let ginv = inverse(n, &g)?;
    let ix = |i: usize, j: usize| i * n + j;
    // ∂_p g^{kl} = −g^{ka} ∂_p g_ab g^{bl}
    let mut dginv = vec![vec![ZERO; n * n]; n];
    for p in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut s = ZERO;
                for a in 0..n {
                    for b in 0..n {
                        s += ginv[ix(k, a)] * dg[p][ix(a, b)] * ginv[ix(b, l)];
                    }
                }
                dginv[p][ix(k, l)] = -s;
            }
        }
    }
    // Γ_{l,ij} and ∂_p Γ_{l,ij}
    let first = |l: usize, i: usize, j: usize| 0.5 * (dg[i][ix(j, l)] + dg[j][ix(i, l)] - dg[l][ix(i, j)]);
    let dfirst = |p: usize, l: usize, i: usize, j: usize| {
        0.5 * (ddg[ix(p, i)][ix(j, l)] + ddg[ix(p, j)][ix(i, l)] - ddg[ix(p, l)][ix(i, j)])
    };
    let g3 = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut gamma = vec![ZERO; n * n * n];
    let mut dgamma = vec![vec![ZERO; n * n * n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for l in 0..n {
                    s += ginv[ix(k, l)] * first(l, i, j);
                }
                gamma[g3(k, i, j)] = s;
                for p in 0..n {
                    let mut d = ZERO;
                    for l in 0..n {
                        d += dginv[p][ix(k, l)] * first(l, i, j) + ginv[ix(k, l)] * dfirst(p, l, i, j);
                    }
                    dgamma[p][g3(k, i, j)] = d;
                }
            }
        }
    }
    let r4 = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let mut riemann = vec![ZERO; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = dgamma[i][g3(l, j, k)] - dgamma[j][g3(l, i, k)];
                    for m in 0..n {
                        s += gamma[g3(l, i, m)] * gamma[g3(m, j, k)] - gamma[g3(l, j, m)] * gamma[g3(m, i, k)];
                    }
                    riemann[r4(i, j, k, l)] = s;
                }
            }
        }
    }
    let mut riemann_down = vec![ZERO; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = ZERO;
                    for m in 0..n {
                        s += riemann[r4(i, j, k, m)] * g[ix(m, l)];
                    }
                    riemann_down[r4(i, j, k, l)] = s;
                }
            }
        }
    }
    Ok(Curvature { g, ginv, gamma, riemann, riemann_down })
}

impl Curvature {
    fn ricci(&self, n: usize) -> Vec<C64> {
        let mut ric = vec![ZERO; n * n];
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    ric[j * n + k] += self.riemann[((i * n + j) * n + k) * n + i];
                }
            }
        }
        ric
    }

    fn normalized_ricci(&self, n: usize) -> Vec<C64> {
        let ric = self.ricci(n);
        let scal: C64 = (0..n * n).map(|k| self.ginv[k] * ric[k]).sum();
        let nf = n as f64;
        (0..n * n)
            .map(|k| scal / (2.0 * nf * (nf - 1.0)) * self.g[k] + (ric[k] - scal / nf * self.g[k]) / (nf - 2.0))
            .collect()
    }

    fn weyl_down(&self, n: usize) -> Vec<C64> {
        let h = self.normalized_ricci(n);
        let g = &self.g;
        let ix = |i: usize, j: usize| i * n + j;
        let mut w = self.riemann_down.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = g[ix(j, k)] * h[ix(i, l)] - h[ix(i, k)] * g[ix(j, l)] - g[ix(i, k)] * h[ix(j, l)]
                            + h[ix(j, k)] * g[ix(i, l)];
                        w[((i * n + j) * n + k) * n + l] -= s;
                    }
                }
            }
        }
        w
    }
}

/// Covariant derivative of an all-covariant tensor, given its partials.
fn nabla(n: usize, rank: usize, t: &[C64], dt: &[Vec<C64>], gamma: &[C64]) -> Vec<C64> {
    let total = n.pow(rank as u32);
    let mut out = vec![ZERO; n * total];
    let mut idx = vec![0usize; rank];
    for p in 0..n {
        for flat in 0..total {
            let mut rem = flat;
            for s in (0..rank).rev() {
                idx[s] = rem % n;
                rem /= n;
            }
            let mut v = dt[p][flat];
            for s in 0..rank {
                let stride = n.pow((rank - 1 - s) as u32);
                let base = flat - idx[s] * stride;
                for q in 0..n {
                    v -= gamma[(q * n + p) * n + idx[s]] * t[base + q * stride];
                }
            }
            out[p * total + flat] = v;
        }
    }
    out
}

/// Recomputes a curvature quantity from central differences of the metric.
///
/// Stencils reach `quantity.reach() · step` along each coordinate; when the
/// field declares a domain the whole stencil must fit inside it.
pub fn fd_oracle(field: &dyn MetricField, quantity: FdQuantity, point: &[C64], step: f64) -> Result<TensorAtPoint> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep(step));
    }
    let n = field.dim();
    if point.len() != n {
        return Err(Error::InvalidArgument(format!("point has {} coordinates, field has {n}", point.len())));
    }
    if let Some(domain) = field.domain() {
        let reach = quantity.reach() * step;
        for (i, (&(lo, hi), x)) in domain.iter().zip(point).enumerate() {
            if x.re - reach < lo || x.re + reach > hi {
                return Err(Error::DomainTooSmall(format!(
                    "coordinate {i} = {} needs [{}, {}] inside [{lo}, {hi}]",
                    x.re,
                    x.re - reach,
                    x.re + reach
                )));
            }
        }
    }
    let s = Sampler { field, n };
    let at = |x: &[C64]| -> Result<Curvature> {
        let (g, dg, ddg) = s.derivatives(x, step)?;
        curvature(n, g, &dg, &ddg)
    };
    let c = at(point)?;
    let t = |slots: &[super::Variance], data: Vec<C64>| Tensor::from_data(n, slots, data);
    match quantity {
        FdQuantity::Christoffel => Ok(t(&[U, D, D], c.gamma)),
        FdQuantity::Riemann => Ok(t(&[D, D, D, U], c.riemann)),
        FdQuantity::RiemannDown => Ok(t(&[D, D, D, D], c.riemann_down)),
        FdQuantity::Ricci => Ok(t(&[D, D], c.ricci(n))),
        FdQuantity::NormalizedRicci => Ok(t(&[D, D], c.normalized_ricci(n))),
        FdQuantity::Weyl => {
            let w = t(&[D, D, D, D], c.weyl_down(n));
            w.raise(3, &c.ginv)
        }
        FdQuantity::NablaH | FdQuantity::Cotton | FdQuantity::NablaWeyl | FdQuantity::DivWeyl => {
            let weyl = matches!(quantity, FdQuantity::NablaWeyl | FdQuantity::DivWeyl);
            let rank = if weyl { 4 } else { 2 };
            let sample = |x: &[C64]| -> Result<Vec<C64>> {
                let c = at(x)?;
                Ok(if weyl { c.weyl_down(n) } else { c.normalized_ricci(n) })
            };
            let center = if weyl { c.weyl_down(n) } else { c.normalized_ricci(n) };
            let mut dt = Vec::with_capacity(n);
            for p in 0..n {
                let mut acc = vec![ZERO; center.len()];
                for &(a, ca) in &D1 {
                    let v = sample(&Sampler::shifted(point, &[(p, a * step)]))?;
                    for (o, x) in acc.iter_mut().zip(&v) {
                        *o += x * ca;
                    }
                }
                for o in acc.iter_mut() {
                    *o /= 12.0 * step;
                }
                dt.push(acc);
            }
            let nab = nabla(n, rank, &center, &dt, &c.gamma);
            match quantity {
                FdQuantity::NablaH => Ok(t(&[D, D, D], nab)),
                FdQuantity::Cotton => {
                    let nh = t(&[D, D, D], nab);
                    Ok(Tensor::from_fn(n, &[D, D, D], |x| nh.get(&[x[0], x[1], x[2]]) - nh.get(&[x[1], x[0], x[2]])))
                }
                FdQuantity::NablaWeyl => Ok(t(&[D, D, D, D, D], nab)),
                _ => {
                    let ginv = t(&[U, U], c.ginv);
                    Ok(super::local::contract_divergence(&t(&[D, D, D, D, D], nab), &ginv))
                }
            }
        }
    }
}
