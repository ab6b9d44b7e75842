use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exprlang::{parse, Expr, Jet, JetEnv, MAX_VARS};
use crate::scalar::{Mode, C64};

/// Anything that can produce jets of a metric at a point: coordinate charts,
/// induced metrics on hypersurfaces, conformal rescalings.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn mode(&self) -> Mode;

    /// Full `n × n` row-major matrix of metric jets at `point`.
    fn metric_jets(&self, point: &[C64], order: usize) -> Result<Vec<Jet>>;

    /// Sign of the preferred volume form relative to coordinate order.
    fn orientation(&self) -> i8 {
        1
    }

    /// Coordinate box the field is defined on, when known.
    fn domain(&self) -> Option<&[(f64, f64)]> {
        None
    }

    fn metric_values(&self, point: &[C64]) -> Result<Vec<C64>> {
        Ok(self.metric_jets(point, 0)?.iter().map(Jet::value).collect())
    }
}

/// Coordinate chart with a symmetric matrix of metric expressions.
#[derive(Debug, Clone)]
pub struct MetricChart {
    pub name: String,
    coordinates: Vec<String>,
    mode: Mode,
    upper: Vec<Expr>,
    parameters: Vec<(String, C64)>,
    domain: Option<Vec<(f64, f64)>>,
    signature: Option<(usize, usize)>,
    orientation: i8,
}

#[inline]
pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

impl MetricChart {
    /// `upper` lists `g_ij` for `i ≤ j` row by row.
    pub fn new(
        name: impl Into<String>,
        coordinates: Vec<String>,
        mode: Mode,
        upper: Vec<Expr>,
        parameters: Vec<(String, C64)>,
    ) -> Result<Self> {
        let n = coordinates.len();
        if !(2..=MAX_VARS).contains(&n) {
            return Err(Error::InvalidChart(format!("dimension {n} outside 2..={MAX_VARS}")));
        }
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidChart(format!(
                "expected {} upper-triangle entries for dimension {n}, got {}",
                n * (n + 1) / 2,
                upper.len()
            )));
        }
        for (i, c) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(c) {
                return Err(Error::InvalidChart(format!("duplicate coordinate '{c}'")));
            }
        }
        Ok(MetricChart {
            name: name.into(),
            coordinates,
            mode,
            upper,
            parameters,
            domain: None,
            signature: None,
            orientation: 1,
        })
    }

    /// Parses the upper-triangle sources.
    pub fn parse(name: &str, coordinates: &[&str], mode: Mode, upper: &[&str]) -> Result<Self> {
        let exprs = upper.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
        MetricChart::new(name, coordinates.iter().map(|s| s.to_string()).collect(), mode, exprs, Vec::new())
    }

    /// Diagonal metric from per-coordinate expressions.
    pub fn diagonal(name: &str, coordinates: &[&str], mode: Mode, diag: &[&str]) -> Result<Self> {
        let n = coordinates.len();
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i..n {
                upper.push(if i == j { diag[i] } else { "0" });
            }
        }
        MetricChart::parse(name, coordinates, mode, &upper)
    }

    pub fn with_domain(mut self, domain: Vec<(f64, f64)>) -> Self {
        assert_eq!(domain.len(), self.coordinates.len());
        self.domain = Some(domain);
        self
    }

    pub fn with_signature(mut self, p: usize, q: usize) -> Self {
        self.signature = Some((p, q));
        self
    }

    pub fn with_orientation(mut self, sign: i8) -> Self {
        self.orientation = if sign < 0 { -1 } else { 1 };
        self
    }

    pub fn with_parameters(mut self, parameters: Vec<(String, C64)>) -> Self {
        self.parameters = parameters;
        self
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn parameters(&self) -> &[(String, C64)] {
        &self.parameters
    }

    /// Declared coordinate box, if any.
    pub fn domain(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    pub fn signature(&self) -> Option<(usize, usize)> {
        self.signature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.upper[upper_index(self.coordinates.len(), i, j)]
    }

    pub fn upper(&self) -> &[Expr] {
        &self.upper
    }

    /// Identifiers used by the metric that are neither coordinates, parameters
    /// nor built-in constants.
    pub fn unresolved_identifiers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.upper {
            for id in e.identifiers() {
                let known = self.coordinates.iter().any(|c| c == id)
                    || self.parameters.iter().any(|(p, _)| p == id)
                    || matches!(id, "pi" | "e")
                    || (id == "i" && !self.mode.is_real());
                if !known && !out.iter().any(|o| o == id) {
                    out.push(id.to_string());
                }
            }
        }
        out
    }

    /// Jet environment with the chart coordinates as variables.
    pub fn env(&self, point: &[C64], order: usize) -> Result<JetEnv<'_>> {
        if point.len() != self.coordinates.len() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, chart '{}' has {}",
                point.len(),
                self.name,
                self.coordinates.len()
            )));
        }
        if self.mode.is_real() && point.iter().any(|p| p.im != 0.0) {
            return Err(Error::InvalidArgument("complex point in a real chart".into()));
        }
        let mut env = JetEnv::coordinates(&self.coordinates, point, order, self.mode)?;
        for (name, v) in &self.parameters {
            env.bind_param(name, *v);
        }
        Ok(env)
    }

    /// Jets of arbitrary expressions over this chart (e.g. tensor field components).
    pub fn field_jets(&self, exprs: &[Expr], point: &[C64], order: usize) -> Result<Vec<Jet>> {
        let env = self.env(point, order)?;
        Ok(exprs.iter().map(|e| e.eval_jet(&env)).collect::<Result<Vec<_>, _>>()?)
    }

    /// Nondegeneracy and (real mode) signature at a point.
    pub fn check_point(&self, point: &[C64]) -> Result<()> {
        let g = self.metric_values(point)?;
        check_metric_values(self.dim(), self.mode, &g, point, self.signature)
    }

    /// `count` points drawn uniformly from the domain box (`[-1, 1]ⁿ` when none
    /// is declared). Complex charts get a small imaginary offset so holomorphic
    /// behaviour is exercised.
    pub fn random_points(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<C64>> {
        let unit = vec![(-1.0, 1.0); self.dim()];
        let domain = self.domain.as_deref().unwrap_or(&unit);
        (0..count)
            .map(|_| {
                domain
                    .iter()
                    .map(|&(lo, hi)| {
                        let x = rng.gen_range(lo..=hi);
                        let y = if self.mode.is_real() { 0.0 } else { 0.1 * (hi - lo) * rng.gen_range(-0.5..=0.5) };
                        C64::new(x, y)
                    })
                    .collect()
            })
            .collect()
    }
}

impl MetricField for MetricChart {
    fn dim(&self) -> usize {
        self.coordinates.len()
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn orientation(&self) -> i8 {
        self.orientation
    }

    fn domain(&self) -> Option<&[(f64, f64)]> {
        self.domain.as_deref()
    }

    fn metric_jets(&self, point: &[C64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        let env = self.env(point, order)?;
        let upper = self.upper.iter().map(|e| e.eval_jet(&env)).collect::<Result<Vec<_>, _>>()?;
        let mut full = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                full.push(upper[upper_index(n, i, j)].clone());
            }
        }
        Ok(full)
    }
}

fn describe(point: &[C64]) -> String {
    let parts: Vec<String> = point
        .iter()
        .map(|c| if c.im == 0.0 { format!("{}", c.re) } else { format!("{}{:+}i", c.re, c.im) })
        .collect();
    format!("({})", parts.join(", "))
}

/// Determinant test relative to the product of row norms, plus the real-mode
/// eigenvalue sign count when a signature is declared.
pub(crate) fn check_metric_values(
    n: usize,
    mode: Mode,
    g: &[C64],
    point: &[C64],
    signature: Option<(usize, usize)>,
) -> Result<()> {
    let m = DMatrix::from_row_slice(n, n, g);
    let det = m.clone().lu().determinant();
    let scale: f64 = (0..n).map(|i| crate::scalar::frobenius(&g[i * n..(i + 1) * n])).product();
    if !det.is_finite() || det.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateMetric { point: describe(point) });
    }
    if let (Mode::Real, Some((p, q))) = (mode, signature) {
        let real = DMatrix::from_fn(n, n, |i, j| g[i * n + j].re);
        let eig = SymmetricEigen::new(real);
        let found_p = eig.eigenvalues.iter().filter(|&&v| v > 0.0).count();
        let found_q = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        if (found_p, found_q) != (p, q) {
            return Err(Error::SignatureMismatch { p, q, found_p, found_q });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    #[test]
    fn upper_triangle_round_trip() {
        let chart = MetricChart::parse("t", &["x", "y", "z"], Mode::Real, &["1", "x", "y", "2", "z", "3"]).unwrap();
        let g = chart.metric_values(&[re(0.1), re(0.2), re(0.3)]).unwrap();
        assert_eq!(g[1], g[3]);
        assert_eq!(g[2], g[6]);
        assert_eq!(g[5], g[7]);
        assert_eq!(g[8], re(3.0));
    }

    #[test]
    fn degenerate_and_signature_errors() {
        let chart = MetricChart::parse("d", &["x", "y"], Mode::Real, &["1", "1", "1"]).unwrap();
        assert!(matches!(chart.check_point(&[re(0.0), re(0.0)]), Err(Error::DegenerateMetric { .. })));
        let split = MetricChart::diagonal("s", &["x", "y"], Mode::Real, &["1", "-1"]).unwrap().with_signature(2, 0);
        assert!(matches!(
            split.check_point(&[re(0.0), re(0.0)]),
            Err(Error::SignatureMismatch { found_p: 1, found_q: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MetricChart::parse("x", &["x"], Mode::Real, &["1"]).is_err());
        assert!(MetricChart::parse("x", &["x", "y"], Mode::Real, &["1", "0"]).is_err());
        assert!(MetricChart::parse("x", &["x", "x"], Mode::Real, &["1", "0", "1"]).is_err());
    }

    #[test]
    fn reports_unknown_identifiers() {
        let chart = MetricChart::parse("u", &["x", "y"], Mode::Real, &["a*x", "0", "pi + i"]).unwrap();
        assert_eq!(chart.unresolved_identifiers(), vec!["a".to_string(), "i".to_string()]);
    }
}
