//! Strict JSON manifests: charts, hypersurfaces, geodesic runs and checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exprlang::{parse, Expr, MAX_ORDER};
use crate::hypersurface::HypersurfaceSpec;
use crate::random::{random_metric, MetricRecipe};
use crate::scalar::{Mode, C64};
use crate::tensor::{MetricChart, MetricField, PACK_ORDER};

pub const SCHEMA_VERSION: u32 = 1;

/// A real number, or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> C64 {
        match self {
            Scalar::Real(x) => C64::new(x, 0.0),
            Scalar::Complex([a, b]) => C64::new(a, b),
        }
    }

    pub fn from_c64(c: C64, mode: Mode) -> Self {
        if mode.is_real() {
            Scalar::Real(c.re)
        } else {
            Scalar::Complex([c.re, c.im])
        }
    }
}

pub fn to_point(v: &[Scalar]) -> Vec<C64> {
    v.iter().map(|s| s.value()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub settings: Settings,
    pub charts: Vec<ChartBlock>,
    #[serde(default)]
    pub hypersurfaces: Vec<HypersurfaceBlock>,
    #[serde(default)]
    pub geodesics: Vec<GeodesicBlock>,
    #[serde(default)]
    pub checks: Vec<CheckBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Jet order of the metric expansions behind pointwise curvature checks.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Cross-check jet quantities against the finite-difference oracle.
    #[serde(default)]
    pub fd: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default = "default_fd_tol")]
    pub fd_tol: f64,
    /// Random sample points per chart when none are listed.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Orientation overrides by chart name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub orientation: BTreeMap<String, i8>,
}

fn default_order() -> usize {
    3
}

fn default_fd_tol() -> f64 {
    1e-6
}

fn default_samples() -> usize {
    5
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: None,
            order: default_order(),
            fd: false,
            fd_step: None,
            fd_tol: default_fd_tol(),
            samples: default_samples(),
            orientation: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Full symmetric matrix of expressions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<Scalar>>>,
    /// Seeded family of random metrics instead of explicit components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomFamily>,
}

fn default_mode() -> Mode {
    Mode::Real
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub negative: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub even_in: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypersurfaceBlock {
    pub name: String,
    pub chart: String,
    pub parameters: Vec<String>,
    pub embedding: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_sign: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_coordinate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_factor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<Scalar>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicBlock {
    pub name: String,
    pub chart: String,
    pub x0: Vec<Scalar>,
    pub v0: Vec<Scalar>,
    pub s_end: f64,
    #[serde(default = "default_run_samples")]
    pub samples: usize,
}

fn default_run_samples() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Weyl3Vanish,
    CyTransform,
    Bianchi,
    DivWeyl,
    DivWeylPm,
    #[serde(rename = "star_ricci_3d")]
    StarRicci3d,
    LemmaCminus,
    Thm1,
    EqRq,
    EqTgeod,
    PInvariance,
    Lemma3,
    Lemma4Lines,
    IsotropicScan,
    NullConservation,
    JacobiVariation,
    WeylInvariance,
    WeylSplit,
    FdAgreement,
    CurvatureSymmetries,
}

impl CheckName {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Weyl3Vanish => "weyl3_vanish",
            CheckName::CyTransform => "cy_transform",
            CheckName::Bianchi => "bianchi",
            CheckName::DivWeyl => "div_weyl",
            CheckName::DivWeylPm => "div_weyl_pm",
            CheckName::StarRicci3d => "star_ricci_3d",
            CheckName::LemmaCminus => "lemma_cminus",
            CheckName::Thm1 => "thm1",
            CheckName::EqRq => "eq_rq",
            CheckName::EqTgeod => "eq_tgeod",
            CheckName::PInvariance => "p_invariance",
            CheckName::Lemma3 => "lemma3",
            CheckName::Lemma4Lines => "lemma4_lines",
            CheckName::IsotropicScan => "isotropic_scan",
            CheckName::NullConservation => "null_conservation",
            CheckName::JacobiVariation => "jacobi_variation",
            CheckName::WeylInvariance => "weyl_invariance",
            CheckName::WeylSplit => "weyl_split",
            CheckName::FdAgreement => "fd_agreement",
            CheckName::CurvatureSymmetries => "curvature_symmetries",
        }
    }

    /// Checks on a hypersurface rather than a chart.
    pub fn needs_hypersurface(self) -> bool {
        matches!(self, CheckName::Thm1 | CheckName::EqRq | CheckName::EqTgeod)
    }

    /// Checks along null geodesics; they take a chart or a geodesic run.
    pub fn along_geodesics(self) -> bool {
        matches!(
            self,
            CheckName::PInvariance
                | CheckName::Lemma3
                | CheckName::Lemma4Lines
                | CheckName::NullConservation
                | CheckName::JacobiVariation
        )
    }

    /// Checks that take a conformal potential.
    pub fn uses_potential(self) -> bool {
        matches!(
            self,
            CheckName::CyTransform
                | CheckName::WeylInvariance
                | CheckName::PInvariance
                | CheckName::Lemma3
                | CheckName::Lemma4Lines
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Isotropic sectional curvatures vanish (`W = 0`).
    Flat,
    /// Some isotropic sectional curvature is nonzero.
    Curved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckBlock {
    pub name: CheckName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypersurface: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<Scalar>>>,
    /// Number of random samples (triples, planes, starts) where applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    /// Explicit totally isotropic plane for `isotropic_scan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<[Vec<Scalar>; 2]>,
    /// Expected sectional value on `plane`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_dual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weyl_tol: Option<f64>,
    /// Require the identities of `thm1` to be nontrivial (both sides nonzero).
    #[serde(default)]
    pub nontrivial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_end: Option<f64>,
}

impl CheckBlock {
    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.name.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestErrorKind {
    Parse,
    Schema,
    UnresolvedReference,
    Expression,
}

/// One validation problem, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestError {
    pub kind: ManifestErrorKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ManifestErrorKind::Parse => "ParseError",
            ManifestErrorKind::Schema => "SchemaError",
            ManifestErrorKind::UnresolvedReference => "UnresolvedReference",
            ManifestErrorKind::Expression => "ExpressionError",
        };
        if self.path.is_empty() {
            write!(f, "{kind}: {}", self.message)
        } else {
            write!(f, "{kind} at {}: {}", self.path, self.message)
        }
    }
}

fn err(kind: ManifestErrorKind, path: impl Into<String>, message: impl Into<String>) -> ManifestError {
    ManifestError { kind, path: path.into(), message: message.into() }
}

/// A chart block after validation: one chart, or a seeded family.
#[derive(Debug, Clone)]
pub struct ChartFamily {
    pub name: String,
    pub members: Vec<MetricChart>,
    pub points: Option<Vec<Vec<C64>>>,
}

#[derive(Debug, Clone)]
pub struct ResolvedHypersurface {
    pub spec: HypersurfaceSpec,
    pub points: Option<Vec<Vec<C64>>>,
}

/// A validated manifest with charts and hypersurfaces built.
#[derive(Debug, Clone)]
pub struct Suite {
    pub manifest: Manifest,
    pub charts: BTreeMap<String, ChartFamily>,
    pub hypersurfaces: BTreeMap<String, ResolvedHypersurface>,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            serde_path_to_error::Segment::Seq { index } => out.push_str(&format!("/{index}")),
            serde_path_to_error::Segment::Map { key } => out.push_str(&format!("/{key}")),
            serde_path_to_error::Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            serde_path_to_error::Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<Suite, Vec<ManifestError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![err(ManifestErrorKind::Parse, "", format!("cannot read {}: {e}", path.display()))])?;
    parse_manifest(&text)
}

pub fn parse_manifest(text: &str) -> Result<Suite, Vec<ManifestError>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let kind = if inner.is_syntax() || inner.is_eof() { ManifestErrorKind::Parse } else { ManifestErrorKind::Schema };
        vec![err(kind, pointer(e.path()), inner.to_string())]
    })?;
    validate(manifest)
}

fn parse_expr(src: &str, path: &str, errors: &mut Vec<ManifestError>) -> Option<Expr> {
    match parse(src) {
        Ok(e) => Some(e),
        Err(e) => {
            errors.push(err(ManifestErrorKind::Expression, path, e.to_string()));
            None
        }
    }
}

fn check_domain(domain: &Option<Vec<[f64; 2]>>, n: usize, path: &str, errors: &mut Vec<ManifestError>) {
    if let Some(d) = domain {
        if d.len() != n {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/domain"), format!("expected {n} intervals")));
        }
        for (i, [lo, hi]) in d.iter().enumerate() {
            if !(lo < hi) {
                errors.push(err(ManifestErrorKind::Schema, format!("{path}/domain/{i}"), "interval must have lo < hi"));
            }
        }
    }
}

fn check_points(
    points: &Option<Vec<Vec<Scalar>>>,
    n: usize,
    mode: Mode,
    path: &str,
    errors: &mut Vec<ManifestError>,
) -> Option<Vec<Vec<C64>>> {
    let pts = points.as_ref()?;
    for (i, p) in pts.iter().enumerate() {
        if p.len() != n {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/points/{i}"), format!("expected {n} coordinates")));
        }
        if mode.is_real() && p.iter().any(|s| matches!(s, Scalar::Complex([_, b]) if *b != 0.0)) {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/points/{i}"), "complex coordinate in a real chart"));
        }
    }
    if pts.is_empty() {
        errors.push(err(ManifestErrorKind::Schema, format!("{path}/points"), "point list is empty"));
    }
    Some(pts.iter().map(|p| to_point(p)).collect())
}

fn positive(v: Option<f64>, path: String, errors: &mut Vec<ManifestError>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            errors.push(err(ManifestErrorKind::Schema, path, "must be positive and finite"));
        }
    }
}

fn build_chart(block: &ChartBlock, path: &str, settings: &Settings, errors: &mut Vec<ManifestError>) -> Option<ChartFamily> {
    let before = errors.len();
    let orientation = settings.orientation.get(&block.name).copied().or(block.orientation);
    if let Some(o) = orientation {
        if o != 1 && o != -1 {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/orientation"), "orientation must be 1 or -1"));
        }
    }
    if let Some(fam) = &block.random {
        if block.coordinates.is_some() || block.metric.is_some() || block.diagonal.is_some() {
            errors.push(err(
                ManifestErrorKind::Schema,
                format!("{path}/random"),
                "a random family excludes coordinates, metric and diagonal",
            ));
        }
        if !(2..=6).contains(&fam.dim) || fam.negative > fam.dim || fam.count == 0 {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/random"), "need 2 <= dim <= 6, negative <= dim, count >= 1"));
        }
        if fam.even_in.is_some_and(|k| k >= fam.dim) {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/random/even_in"), "coordinate index out of range"));
        }
        if block.mode == Mode::Complex && fam.negative > 0 {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/random/negative"), "complex families have no signature"));
        }
        let points = check_points(&block.points, fam.dim, block.mode, path, errors);
        if errors.len() > before {
            return None;
        }
        let recipe = MetricRecipe {
            dim: fam.dim,
            negative: fam.negative,
            mode: block.mode,
            amplitude: MetricRecipe::riemannian(fam.dim).amplitude,
            even_in: fam.even_in,
        };
        let mut members = Vec::with_capacity(fam.count);
        for k in 0..fam.count {
            match random_metric(&recipe, fam.seed.wrapping_add(k as u64)) {
                Ok(mut c) => {
                    c.name = format!("{}/{k}", block.name);
                    if let Some(o) = orientation {
                        c = c.with_orientation(o);
                    }
                    members.push(c);
                }
                Err(e) => errors.push(err(ManifestErrorKind::Schema, format!("{path}/random"), e.to_string())),
            }
        }
        return Some(ChartFamily { name: block.name.clone(), members, points });
    }

    let Some(coords) = &block.coordinates else {
        errors.push(err(ManifestErrorKind::Schema, format!("{path}/coordinates"), "missing field `coordinates`"));
        return None;
    };
    let n = coords.len();
    let mut upper: Vec<Expr> = Vec::new();
    match (&block.metric, &block.diagonal) {
        (Some(_), Some(_)) | (None, None) => {
            errors.push(err(ManifestErrorKind::Schema, path.to_string(), "exactly one of `metric` and `diagonal` is required"));
        }
        (Some(rows), None) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                errors.push(err(ManifestErrorKind::Schema, format!("{path}/metric"), format!("expected a {n}x{n} matrix")));
            } else {
                let parsed: Vec<Vec<Option<Expr>>> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.iter().enumerate().map(|(j, s)| parse_expr(s, &format!("{path}/metric/{i}/{j}"), errors)).collect()
                    })
                    .collect();
                for i in 0..n {
                    for j in i..n {
                        match (&parsed[i][j], &parsed[j][i]) {
                            (Some(a), Some(b)) => {
                                if a != b {
                                    errors.push(err(
                                        ManifestErrorKind::Schema,
                                        format!("{path}/metric/{j}/{i}"),
                                        format!("metric is not symmetric: '{}' vs '{}'", rows[j][i], rows[i][j]),
                                    ));
                                }
                                upper.push(a.clone());
                            }
                            _ => upper.push(Expr::num(0.0)),
                        }
                    }
                }
            }
        }
        (None, Some(diag)) => {
            if diag.len() != n {
                errors.push(err(ManifestErrorKind::Schema, format!("{path}/diagonal"), format!("expected {n} entries")));
            } else {
                let d: Vec<Option<Expr>> =
                    diag.iter().enumerate().map(|(i, s)| parse_expr(s, &format!("{path}/diagonal/{i}"), errors)).collect();
                for i in 0..n {
                    for j in i..n {
                        upper.push(if i == j { d[i].clone().unwrap_or(Expr::num(1.0)) } else { Expr::num(0.0) });
                    }
                }
            }
        }
    }
    check_domain(&block.domain, n, path, errors);
    if let Some([p, q]) = block.signature {
        if p + q != n || block.mode == Mode::Complex {
            errors.push(err(ManifestErrorKind::Schema, format!("{path}/signature"), "signature must sum to the dimension (real charts only)"));
        }
    }
    let points = check_points(&block.points, n, block.mode, path, errors);
    if errors.len() > before {
        return None;
    }
    let params: Vec<(String, C64)> = block.parameters.iter().map(|(k, v)| (k.clone(), v.value())).collect();
    let chart = match MetricChart::new(block.name.clone(), coords.clone(), block.mode, upper, params) {
        Ok(c) => c,
        Err(e) => {
            errors.push(err(ManifestErrorKind::Schema, path.to_string(), e.to_string()));
            return None;
        }
    };
    let unresolved = chart.unresolved_identifiers();
    if !unresolved.is_empty() {
        errors.push(err(
            ManifestErrorKind::Expression,
            format!("{path}/metric"),
            format!("unknown identifiers: {}", unresolved.join(", ")),
        ));
        return None;
    }
    let mut chart = chart;
    if let Some(d) = &block.domain {
        chart = chart.with_domain(d.iter().map(|[a, b]| (*a, *b)).collect());
    }
    if let Some([p, q]) = block.signature {
        chart = chart.with_signature(p, q);
    }
    if let Some(o) = orientation {
        chart = chart.with_orientation(o);
    }
    Some(ChartFamily { name: block.name.clone(), members: vec![chart], points })
}

/// Validates references, expressions and tolerances, collecting every problem.
pub fn validate(manifest: Manifest) -> Result<Suite, Vec<ManifestError>> {
    use ManifestErrorKind::*;
    let mut errors = Vec::new();
    if manifest.schema != SCHEMA_VERSION {
        errors.push(err(Schema, "/schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", manifest.schema)));
    }
    let s = &manifest.settings;
    if !(PACK_ORDER..=MAX_ORDER).contains(&s.order) {
        errors.push(err(Schema, "/settings/order", format!("jet order must be between {PACK_ORDER} and {MAX_ORDER}")));
    }
    positive(s.fd_step, "/settings/fd_step".into(), &mut errors);
    positive(Some(s.fd_tol), "/settings/fd_tol".into(), &mut errors);
    if s.samples == 0 {
        errors.push(err(Schema, "/settings/samples", "must be at least 1"));
    }
    for (name, o) in &s.orientation {
        if *o != 1 && *o != -1 {
            errors.push(err(Schema, format!("/settings/orientation/{name}"), "orientation must be 1 or -1"));
        }
        if !manifest.charts.iter().any(|c| &c.name == name) {
            errors.push(err(UnresolvedReference, format!("/settings/orientation/{name}"), format!("no chart named '{name}'")));
        }
    }

    let mut charts = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (i, block) in manifest.charts.iter().enumerate() {
        let path = format!("/charts/{i}");
        if !seen.insert(block.name.clone()) {
            errors.push(err(Schema, format!("{path}/name"), format!("duplicate chart name '{}'", block.name)));
        }
        if let Some(fam) = build_chart(block, &path, s, &mut errors) {
            charts.insert(block.name.clone(), fam);
        }
    }

    let mut hypersurfaces = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (i, block) in manifest.hypersurfaces.iter().enumerate() {
        let path = format!("/hypersurfaces/{i}");
        if !seen.insert(block.name.clone()) {
            errors.push(err(Schema, format!("{path}/name"), format!("duplicate hypersurface name '{}'", block.name)));
        }
        let Some(fam) = charts.get(&block.chart) else {
            if !manifest.charts.iter().any(|c| c.name == block.chart) {
                errors.push(err(UnresolvedReference, format!("{path}/chart"), format!("no chart named '{}'", block.chart)));
            }
            continue;
        };
        let ambient = fam.members[0].clone();
        if fam.members.len() != 1 {
            errors.push(err(Schema, format!("{path}/chart"), "hypersurfaces need a single chart, not a family"));
            continue;
        }
        let n = ambient.coordinates().len();
        let before = errors.len();
        if block.parameters.len() + 1 != n || block.embedding.len() != n {
            errors.push(err(Schema, path.clone(), format!("need {} parameters and {n} embedding components", n - 1)));
        }
        let emb: Vec<Option<Expr>> = block
            .embedding
            .iter()
            .enumerate()
            .map(|(k, src)| parse_expr(src, &format!("{path}/embedding/{k}"), &mut errors))
            .collect();
        let normal = block.normal_coordinate.as_ref().and_then(|src| parse_expr(src, &format!("{path}/normal_coordinate"), &mut errors));
        let gauge = block.gauge_factor.as_ref().and_then(|src| parse_expr(src, &format!("{path}/gauge_factor"), &mut errors));
        if block.gauge_factor.is_some() && block.normal_coordinate.is_none() {
            errors.push(err(Schema, format!("{path}/gauge_factor"), "a gauge factor needs a normal coordinate"));
        }
        if let Some(sgn) = block.normal_sign {
            if sgn != 1 && sgn != -1 {
                errors.push(err(Schema, format!("{path}/normal_sign"), "normal_sign must be 1 or -1"));
            }
        }
        check_domain(&block.domain, n.saturating_sub(1), &path, &mut errors);
        let points = check_points(&block.points, n.saturating_sub(1), ambient.mode(), &path, &mut errors);
        if errors.len() > before {
            continue;
        }
        let params: Vec<&str> = block.parameters.iter().map(String::as_str).collect();
        let mut spec = match HypersurfaceSpec::new(&block.name, ambient, &params, emb.into_iter().flatten().collect()) {
            Ok(sp) => sp,
            Err(e) => {
                errors.push(err(Schema, path.clone(), e.to_string()));
                continue;
            }
        };
        if let Some(e) = normal {
            spec = spec.with_normal_coordinate(e);
        }
        if let Some(e) = gauge {
            spec = spec.with_gauge_factor(e);
        }
        if let Some(sgn) = block.normal_sign {
            spec = spec.with_normal_sign(sgn);
        }
        if let Some(d) = &block.domain {
            spec = spec.with_domain(d.iter().map(|[a, b]| (*a, *b)).collect());
        }
        hypersurfaces.insert(block.name.clone(), ResolvedHypersurface { spec, points });
    }

    let mut seen = BTreeSet::new();
    for (i, block) in manifest.geodesics.iter().enumerate() {
        let path = format!("/geodesics/{i}");
        if !seen.insert(block.name.clone()) {
            errors.push(err(Schema, format!("{path}/name"), format!("duplicate run name '{}'", block.name)));
        }
        match charts.get(&block.chart) {
            None => {
                if !manifest.charts.iter().any(|c| c.name == block.chart) {
                    errors.push(err(UnresolvedReference, format!("{path}/chart"), format!("no chart named '{}'", block.chart)));
                }
            }
            Some(fam) => {
                let n = fam.members[0].coordinates().len();
                let mode = fam.members[0].mode();
                if fam.members.len() != 1 {
                    errors.push(err(Schema, format!("{path}/chart"), "geodesic runs need a single chart, not a family"));
                }
                for (key, v) in [("x0", &block.x0), ("v0", &block.v0)] {
                    if v.len() != n {
                        errors.push(err(Schema, format!("{path}/{key}"), format!("expected {n} components")));
                    }
                    if mode.is_real() && v.iter().any(|s| matches!(s, Scalar::Complex([_, b]) if *b != 0.0)) {
                        errors.push(err(Schema, format!("{path}/{key}"), "complex value in a real chart"));
                    }
                }
            }
        }
        if !(block.s_end.is_finite() && block.s_end != 0.0) {
            errors.push(err(Schema, format!("{path}/s_end"), "s_end must be finite and nonzero"));
        }
        if block.samples == 0 {
            errors.push(err(Schema, format!("{path}/samples"), "must be at least 1"));
        }
    }

    let mut ids = BTreeSet::new();
    for (i, c) in manifest.checks.iter().enumerate() {
        let path = format!("/checks/{i}");
        if !ids.insert(c.id()) {
            errors.push(err(Schema, format!("{path}/id"), format!("duplicate check id '{}'", c.id())));
        }
        for (key, v) in [("tol", c.tol), ("self_dual_tol", c.self_dual_tol), ("weyl_tol", c.weyl_tol), ("value_tol", c.value_tol)] {
            positive(v, format!("{path}/{key}"), &mut errors);
        }
        if let Some(s_end) = c.s_end {
            positive(Some(s_end), format!("{path}/s_end"), &mut errors);
        }
        if c.samples == Some(0) {
            errors.push(err(Schema, format!("{path}/samples"), "must be at least 1"));
        }
        if let Some(phi) = &c.phi {
            parse_expr(phi, &format!("{path}/phi"), &mut errors);
        }
        let mut reference = |key: &str, value: &Option<String>, exists: bool| {
            if let Some(v) = value {
                if !exists {
                    errors.push(err(UnresolvedReference, format!("{path}/{key}"), format!("no {key} named '{v}'")));
                }
            }
        };
        let chart_exists = c.chart.as_ref().is_some_and(|n| manifest.charts.iter().any(|b| &b.name == n));
        let hyp_exists = c.hypersurface.as_ref().is_some_and(|n| manifest.hypersurfaces.iter().any(|b| &b.name == n));
        let run_exists = c.run.as_ref().is_some_and(|n| manifest.geodesics.iter().any(|b| &b.name == n));
        reference("chart", &c.chart, chart_exists);
        reference("hypersurface", &c.hypersurface, hyp_exists);
        reference("run", &c.run, run_exists);
        let target_ok = if c.name.needs_hypersurface() {
            c.hypersurface.is_some() && c.chart.is_none() && c.run.is_none()
        } else if c.name.along_geodesics() {
            c.hypersurface.is_none() && (c.chart.is_some() != c.run.is_some())
        } else {
            c.chart.is_some() && c.hypersurface.is_none() && c.run.is_none()
        };
        if !target_ok {
            let want = if c.name.needs_hypersurface() {
                "`hypersurface`"
            } else if c.name.along_geodesics() {
                "exactly one of `chart` and `run`"
            } else {
                "`chart`"
            };
            errors.push(err(Schema, path.clone(), format!("check '{}' takes {want}", c.name)));
        }
        if c.plane.is_some() != c.value.is_some() || (c.plane.is_some() && c.name != CheckName::IsotropicScan) {
            errors.push(err(Schema, format!("{path}/plane"), "`plane` and `value` go together, on isotropic_scan only"));
        }
        if c.expect.is_some() && c.name != CheckName::IsotropicScan {
            errors.push(err(Schema, format!("{path}/expect"), "`expect` applies to isotropic_scan only"));
        }
        if c.seed.is_none() && s.seed.is_none() && needs_randomness(c, &manifest) {
            errors.push(err(Schema, format!("{path}/seed"), "random sampling requested but no seed is given"));
        }
    }

    if errors.is_empty() {
        Ok(Suite { manifest, charts, hypersurfaces })
    } else {
        Err(errors)
    }
}

/// Whether a check draws random points, potentials, directions or frames.
fn needs_randomness(c: &CheckBlock, m: &Manifest) -> bool {
    if c.name.uses_potential() && c.phi.is_none() {
        return true;
    }
    match c.name {
        CheckName::IsotropicScan | CheckName::Thm1 | CheckName::EqRq | CheckName::EqTgeod => true,
        CheckName::NullConservation => c.run.is_none(),
        _ if c.name.along_geodesics() => true,
        _ => {
            c.points.is_none()
                && c.chart.as_ref().and_then(|h| m.charts.iter().find(|b| &b.name == h)).is_none_or(|b| b.points.is_none())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest() {
        let s = parse_manifest(r#"{"schema": 1, "charts": [{"name": "flat", "coordinates": ["x", "y"], "diagonal": ["1", "1"]}]}"#)
            .unwrap();
        assert_eq!(s.charts.len(), 1);
        assert!(s.manifest.checks.is_empty());
    }

    #[test]
    fn unknown_key_is_a_schema_error() {
        let e = parse_manifest(r#"{"schema": 1, "charts": [{"name": "a", "coordinates": ["x"], "diagonal": ["1"], "colour": 1}]}"#)
            .unwrap_err();
        assert_eq!(e[0].kind, ManifestErrorKind::Schema);
        assert_eq!(e[0].path, "/charts/0/colour");
    }

    #[test]
    fn unresolved_hypersurface_chart() {
        let e = parse_manifest(
            r#"{"schema": 1, "charts": [{"name": "flat", "coordinates": ["x", "y"], "diagonal": ["1", "1"]}],
                "hypersurfaces": [{"name": "M", "chart": "N4", "parameters": ["a"], "embedding": ["a", "0"]}]}"#,
        )
        .unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ManifestErrorKind::UnresolvedReference);
        assert_eq!(e[0].path, "/hypersurfaces/0/chart");
    }

    #[test]
    fn expression_errors_carry_columns_and_all_errors_are_reported() {
        let e = parse_manifest(
            r#"{"schema": 1, "charts": [{"name": "a", "coordinates": ["x", "y"], "diagonal": ["x +* y", "1"]}],
                "checks": [{"name": "bianchi", "chart": "a", "tol": -1}, {"name": "thm1", "chart": "a"}]}"#,
        )
        .unwrap_err();
        assert!(e.iter().any(|x| x.kind == ManifestErrorKind::Expression && x.path == "/charts/0/diagonal/0" && x.message.contains("column")));
        assert!(e.iter().any(|x| x.path == "/checks/0/tol"));
        assert!(e.iter().any(|x| x.path == "/checks/1"));
        assert!(e.iter().any(|x| x.path == "/checks/0/seed"));
    }

    #[test]
    fn asymmetric_metric_and_unknown_check() {
        let e = parse_manifest(
            r#"{"schema": 1, "charts": [{"name": "a", "coordinates": ["x", "y"], "metric": [["1", "x"], ["y", "1"]]}]}"#,
        )
        .unwrap_err();
        assert_eq!(e[0].path, "/charts/0/metric/1/0");
        let e = parse_manifest(r#"{"schema": 1, "charts": [], "checks": [{"name": "nope"}]}"#).unwrap_err();
        assert_eq!(e[0].kind, ManifestErrorKind::Schema);
        assert_eq!(e[0].path, "/checks/0/name");
    }

    #[test]
    fn random_family_expands() {
        let s = parse_manifest(r#"{"schema": 1, "charts": [{"name": "r", "random": {"dim": 3, "count": 4, "seed": 9}}]}"#).unwrap();
        let fam = &s.charts["r"];
        assert_eq!(fam.members.len(), 4);
        assert_eq!(fam.members[2].name, "r/2");
    }
}
