//! Truncated multivariate Taylor expansions ("jets").
//!
//! A jet of order `k` in `n` variables stores the Taylor coefficients
//! `c_α = ∂^α f / α!` for every multi-index `|α| ≤ k`, densely, graded by total
//! degree and lexicographic within a degree. Because the ordering of a degree
//! block does not depend on `k`, the coefficient vector of an order `k − 1` jet
//! is a prefix of the order `k` one.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::scalar::{Mode, C64, ONE, ZERO};

pub const MAX_ORDER: usize = 4;
pub const MAX_VARS: usize = 6;

type MultiIndex = [u8; MAX_VARS];

#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    order: usize,
    multi: Vec<MultiIndex>,
    degree_start: Vec<usize>,
    lookup: HashMap<MultiIndex, usize>,
    /// (a, b, c) with α_a + α_b = α_c, for all |α_a| + |α_b| ≤ order.
    products: Vec<(u16, u16, u16)>,
    /// For each variable i: (source index, target index in the order−1 layout, α_i + 1).
    derivatives: Vec<Vec<(u16, u16, f64)>>,
    factorials: Vec<f64>,
}

fn degree(alpha: &MultiIndex) -> usize {
    alpha.iter().map(|&a| a as usize).sum()
}

fn multi_indices_of_degree(nvars: usize, d: usize) -> Vec<MultiIndex> {
    fn rec(nvars: usize, var: usize, remaining: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if var + 1 == nvars {
            cur[var] = remaining as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for take in (0..=remaining).rev() {
            cur[var] = take as u8;
            rec(nvars, var + 1, remaining - take, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if d == 0 {
            out.push([0; MAX_VARS]);
        }
        return out;
    }
    rec(nvars, 0, d, &mut [0; MAX_VARS], &mut out);
    out
}

impl JetLayout {
    fn build(nvars: usize, order: usize) -> JetLayout {
        let mut multi = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(multi.len());
            multi.extend(multi_indices_of_degree(nvars, d));
        }
        degree_start.push(multi.len());
        let lookup: HashMap<MultiIndex, usize> = multi.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut products = Vec::new();
        for (a, ma) in multi.iter().enumerate() {
            for (b, mb) in multi.iter().enumerate() {
                if degree(ma) + degree(mb) > order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    sum[v] = ma[v] + mb[v];
                }
                products.push((a as u16, b as u16, lookup[&sum] as u16));
            }
        }
        let mut derivatives = vec![Vec::new(); nvars];
        if order > 0 {
            for (target, m) in multi.iter().enumerate().take(degree_start[order]) {
                for (var, table) in derivatives.iter_mut().enumerate() {
                    let mut up = *m;
                    up[var] += 1;
                    table.push((lookup[&up] as u16, target as u16, (m[var] + 1) as f64));
                }
            }
        }
        let factorials = multi
            .iter()
            .map(|m| m.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product())
            .collect();
        JetLayout { nvars, order, multi, degree_start, lookup, products, derivatives, factorials }
    }

    pub fn get(nvars: usize, order: usize) -> &'static JetLayout {
        static LAYOUTS: OnceLock<Vec<JetLayout>> = OnceLock::new();
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} jet variables");
        assert!(order <= MAX_ORDER, "jet order at most {MAX_ORDER}");
        let all = LAYOUTS.get_or_init(|| {
            let mut v = Vec::new();
            for n in 0..=MAX_VARS {
                for k in 0..=MAX_ORDER {
                    v.push(JetLayout::build(n, k));
                }
            }
            v
        });
        &all[nvars * (MAX_ORDER + 1) + order]
    }

    pub fn len(&self) -> usize {
        self.multi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Position of a multi-index (given as exponents per variable).
    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.nvars {
            return None;
        }
        let mut key = [0u8; MAX_VARS];
        for (k, &a) in key.iter_mut().zip(alpha) {
            *k = u8::try_from(a).ok()?;
        }
        self.lookup.get(&key).copied()
    }

    pub fn multi_index(&self, idx: usize) -> &[u8] {
        &self.multi[idx][..self.nvars]
    }

    /// Index range of the coefficients of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

/// Raised when a primitive is evaluated outside its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainError(pub String);

#[derive(Clone, Debug)]
pub struct Jet {
    layout: &'static JetLayout,
    coeffs: Vec<C64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.layout.nvars == other.layout.nvars && self.layout.order == other.layout.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: C64) -> Jet {
        let layout = JetLayout::get(nvars, order);
        let mut coeffs = vec![ZERO; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    pub fn zero(nvars: usize, order: usize) -> Jet {
        Jet::constant(nvars, order, ZERO)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: C64) -> Jet {
        assert!(var < nvars);
        let mut jet = Jet::constant(nvars, order, value);
        if order > 0 {
            jet.coeffs[1 + var] = ONE;
        }
        jet
    }

    /// Builds a jet from raw Taylor coefficients in layout order.
    pub fn from_taylor(nvars: usize, order: usize, coeffs: Vec<C64>) -> Jet {
        let layout = JetLayout::get(nvars, order);
        assert_eq!(coeffs.len(), layout.len());
        Jet { layout, coeffs }
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn taylor(&self) -> &[C64] {
        &self.coeffs
    }

    /// `∂^α f` at the expansion point; `alpha` lists the exponent per variable.
    pub fn derivative(&self, alpha: &[usize]) -> C64 {
        let idx = self.layout.index_of(alpha).expect("multi-index outside the jet");
        self.coeffs[idx] * self.layout.factorials[idx]
    }

    /// First partial derivative ∂f/∂x_var.
    pub fn d1(&self, var: usize) -> C64 {
        self.coeffs[1 + var]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| *c == ZERO)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        let layout = JetLayout::get(self.nvars(), order);
        Jet { layout, coeffs: self.coeffs[..layout.len()].to_vec() }
    }

    fn common_order(&self, other: &Jet) -> usize {
        assert_eq!(self.nvars(), other.nvars(), "jets over different variable sets");
        self.order().min(other.order())
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { layout: self.layout, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Partial derivative with respect to `var`, one order lower.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order() > 0, "cannot differentiate an order-0 jet");
        let layout = JetLayout::get(self.nvars(), self.order() - 1);
        let mut coeffs = vec![ZERO; layout.len()];
        for &(src, dst, factor) in &self.layout.derivatives[var] {
            coeffs[dst as usize] = self.coeffs[src as usize] * factor;
        }
        Jet { layout, coeffs }
    }

    /// `Σ_j series[j] · (self − self(0))^j`, i.e. composition with a univariate
    /// function whose Taylor coefficients at `self.value()` are `series`.
    pub fn compose(&self, series: &[C64]) -> Jet {
        let k = self.order();
        assert!(series.len() > k);
        let mut delta = self.clone();
        delta.coeffs[0] = ZERO;
        let mut acc = Jet::constant(self.nvars(), k, series[k]);
        for j in (0..k).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += series[j];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, DomainError> {
        let a = self.value();
        if a == ZERO {
            return Err(DomainError("division by zero".into()));
        }
        let inv = 1.0 / a;
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            series.push(term);
            term = -term * inv;
        }
        Ok(self.compose(&series))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, DomainError> {
        Ok(self * &other.recip()?)
    }

    /// Integer power by repeated squaring; negative exponents go through `recip`.
    pub fn powi(&self, exponent: i64) -> Result<Jet, DomainError> {
        let mut base = if exponent < 0 { self.recip()? } else { self.clone() };
        let mut e = exponent.unsigned_abs();
        let mut acc = Jet::constant(self.nvars(), self.order(), ONE);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let k = self.common_order(rhs);
        let layout = JetLayout::get(self.nvars(), k);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).take(layout.len()).map(|(a, b)| a + b).collect();
        Jet { layout, coeffs }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let k = self.common_order(rhs);
        let layout = JetLayout::get(self.nvars(), k);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).take(layout.len()).map(|(a, b)| a - b).collect();
        Jet { layout, coeffs }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let k = self.common_order(rhs);
        let layout = JetLayout::get(self.nvars(), k);
        let mut coeffs = vec![ZERO; layout.len()];
        for &(a, b, c) in &layout.products {
            coeffs[c as usize] += self.coeffs[a as usize] * rhs.coeffs[b as usize];
        }
        Jet { layout, coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { layout: self.layout, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
    )*};
}
forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

// Univariate Taylor coefficients f^(j)(a)/j!, j = 0..=k, for the primitives.

fn real_only(a: C64, mode: Mode, what: &str, ok: impl Fn(f64) -> bool) -> Result<(), DomainError> {
    if mode.is_real() && !ok(a.re) {
        return Err(DomainError(format!("{what} of {} in real mode", a.re)));
    }
    Ok(())
}

fn map_real(a: C64, mode: Mode, fr: impl Fn(f64) -> f64, fc: impl Fn(C64) -> C64) -> C64 {
    if mode.is_real() {
        C64::new(fr(a.re), 0.0)
    } else {
        fc(a)
    }
}

pub(crate) fn series_exp(a: C64, k: usize, mode: Mode) -> Vec<C64> {
    let e = map_real(a, mode, f64::exp, |z| z.exp());
    let mut fact = 1.0;
    (0..=k)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            e / fact
        })
        .collect()
}

pub(crate) fn series_log(a: C64, k: usize, mode: Mode) -> Result<Vec<C64>, DomainError> {
    real_only(a, mode, "log", |x| x > 0.0)?;
    if a == ZERO {
        return Err(DomainError("log of zero".into()));
    }
    let mut out = vec![map_real(a, mode, f64::ln, |z| z.ln())];
    let inv = 1.0 / a;
    let mut p = ONE;
    for j in 1..=k {
        p *= inv;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        out.push(p * (sign / j as f64));
    }
    Ok(out)
}

pub(crate) fn series_sqrt(a: C64, k: usize, mode: Mode) -> Result<Vec<C64>, DomainError> {
    real_only(a, mode, "sqrt", |x| x > 0.0 || (x == 0.0 && k == 0))?;
    if a == ZERO && k > 0 {
        return Err(DomainError("sqrt is not differentiable at zero".into()));
    }
    if a == ZERO {
        return Ok(vec![ZERO]);
    }
    let root = map_real(a, mode, f64::sqrt, |z| z.sqrt());
    let inv = 1.0 / a;
    let mut out = Vec::with_capacity(k + 1);
    let mut binom = 1.0;
    let mut pw = root;
    for j in 0..=k {
        if j > 0 {
            binom *= (0.5 - (j as f64 - 1.0)) / j as f64;
            pw *= inv;
        }
        out.push(pw * binom);
    }
    Ok(out)
}

pub(crate) fn series_sin_cos(a: C64, k: usize, mode: Mode, cosine: bool) -> Vec<C64> {
    let s = map_real(a, mode, f64::sin, |z| z.sin());
    let c = map_real(a, mode, f64::cos, |z| z.cos());
    // d/dx cycles sin → cos → −sin → −cos.
    let cycle = if cosine { [c, -s, -c, s] } else { [s, c, -s, -c] };
    let mut fact = 1.0;
    (0..=k)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            cycle[j % 4] / fact
        })
        .collect()
}

pub(crate) fn series_sinh_cosh(a: C64, k: usize, mode: Mode, cosh: bool) -> Vec<C64> {
    let s = map_real(a, mode, f64::sinh, |z| z.sinh());
    let c = map_real(a, mode, f64::cosh, |z| z.cosh());
    let pair = if cosh { [c, s] } else { [s, c] };
    let mut fact = 1.0;
    (0..=k)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            pair[j % 2] / fact
        })
        .collect()
}

/// tan and tanh: derivatives are polynomials in t = f(a) with
/// p_{j+1}(t) = p_j'(t)·(1 + σ t²), σ = +1 for tan and −1 for tanh.
pub(crate) fn series_tan(a: C64, k: usize, mode: Mode, hyperbolic: bool) -> Result<Vec<C64>, DomainError> {
    let t = if hyperbolic {
        map_real(a, mode, f64::tanh, |z| z.tanh())
    } else {
        let c = map_real(a, mode, f64::cos, |z| z.cos());
        if c.norm() < 1e-300 {
            return Err(DomainError("tan at a pole".into()));
        }
        map_real(a, mode, f64::tan, |z| z.tan())
    };
    let sigma = if hyperbolic { -1.0 } else { 1.0 };
    let mut poly = vec![0.0, 1.0];
    let mut out = Vec::with_capacity(k + 1);
    let mut fact = 1.0;
    for j in 0..=k {
        if j > 0 {
            fact *= j as f64;
        }
        let value = poly.iter().rev().fold(ZERO, |acc, &c| acc * t + c);
        out.push(value / fact);
        let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        let mut next = vec![0.0; deriv.len() + 2];
        for (i, c) in deriv.iter().enumerate() {
            next[i] += c;
            next[i + 2] += sigma * c;
        }
        poly = next;
    }
    Ok(out)
}

/// atan: integrate the series of 1/(1 + (a + t)²).
pub(crate) fn series_atan(a: C64, k: usize, mode: Mode) -> Result<Vec<C64>, DomainError> {
    let q = [ONE + a * a, a * 2.0, ONE];
    if q[0] == ZERO {
        return Err(DomainError("atan at a branch point".into()));
    }
    let mut r = vec![ZERO; k.max(1)];
    for j in 0..r.len() {
        let mut acc = if j == 0 { ONE } else { ZERO };
        for (m, qm) in q.iter().enumerate().skip(1) {
            if j >= m {
                acc -= qm * r[j - m];
            }
        }
        r[j] = acc / q[0];
    }
    let base = map_real(a, mode, f64::atan, |z| z.atan());
    let mut out = vec![base];
    for j in 1..=k {
        out.push(r[j - 1] / j as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    #[test]
    fn layout_sizes() {
        assert_eq!(JetLayout::get(4, 3).len(), 35);
        assert_eq!(JetLayout::get(6, 4).len(), 210);
        assert_eq!(JetLayout::get(2, 0).len(), 1);
    }

    #[test]
    fn lower_order_layout_is_prefix() {
        let hi = JetLayout::get(3, 4);
        let lo = JetLayout::get(3, 2);
        for i in 0..lo.len() {
            assert_eq!(hi.multi_index(i), lo.multi_index(i));
        }
    }

    #[test]
    fn product_rule() {
        let x = Jet::variable(2, 2, 0, re(2.0));
        let y = Jet::variable(2, 2, 1, re(3.0));
        let xy = &x * &y;
        assert_eq!(xy.value(), re(6.0));
        assert_eq!(xy.derivative(&[1, 0]), re(3.0));
        assert_eq!(xy.derivative(&[0, 1]), re(2.0));
        assert_eq!(xy.derivative(&[1, 1]), re(1.0));
        assert_eq!(xy.derivative(&[2, 0]), re(0.0));
    }

    #[test]
    fn diff_lowers_order() {
        let x = Jet::variable(1, 4, 0, re(1.5));
        let cube = x.powi(3).unwrap();
        let d = cube.diff(0);
        assert_eq!(d.order(), 3);
        assert_eq!(d.value(), re(3.0 * 1.5 * 1.5));
        assert_eq!(d.derivative(&[1]), re(6.0 * 1.5));
        assert_eq!(d.derivative(&[2]), re(6.0));
    }

    #[test]
    fn negative_integer_power() {
        let t = Jet::variable(1, 2, 0, re(2.0));
        let p = t.powi(-2).unwrap();
        assert_eq!(p.value(), re(0.25));
        assert_eq!(p.derivative(&[1]), re(-0.25));
        assert_eq!(p.derivative(&[2]), re(6.0 / 16.0));
    }

    #[test]
    fn tan_series_matches_closed_form() {
        let a = 0.3f64;
        let s = series_tan(re(a), 3, Mode::Real, false).unwrap();
        let t = a.tan();
        assert!((s[1].re - (1.0 + t * t)).abs() < 1e-15);
        assert!((s[2].re - t * (1.0 + t * t)).abs() < 1e-15);
    }
}
