//! Check records, canonical JSON and digests.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::manifest::{CheckName, Scalar};

/// Sign and normalisation conventions the numbers in a report depend on.
/// Its digest is recorded so reports computed under different conventions
/// are never compared by accident.
pub const CONVENTIONS: &str = "\
R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]; R[i,j,k,l] = R^l_ijk; R_ijkl = g(R(d_i,d_j)d_k, d_l)
Ric_jk = R^i_ijk; round spheres have positive scalar curvature
h = Scal/(2n(n-1)) g + Ric0/(n-2)
(h^I)_ijkl = g_jk h_il - h_ik g_jl - g_ik h_jl + h_jk g_il; W = R - h^I
C_ijk = (nabla_i h)_jk - (nabla_j h)_ik; dW_ijk = g^ml (nabla_m W)_ijkl = (n-3) C_ijk
g' = exp(2 phi) g: C' = C + dphi(W(.,.).)
Gamma[k,i,j] = Gamma^k_ij; covariant derivative slot first
<X^Y, Z^V> = g(X,Z)g(Y,V) - g(X,V)g(Y,Z); (*a)_kl = 1/2 a^ij eps_ijkl; eps = sigma sqrt|det g| [ijkl]
W+- trace-free part of P+- R P+- on the 3-dimensional Lambda+-
isotropic sectional value g(R(X,Y)X,Y)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Every value below the tolerance.
    Below,
    /// Every value above the threshold.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub relation: Relation,
    pub tol: f64,
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
    pub pass: bool,
}

impl Criterion {
    pub fn from_values(name: &str, relation: Relation, tol: f64, values: &[f64]) -> Self {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { b } else { a.max(b) });
        let min = values.iter().copied().fold(f64::INFINITY, |a, b| if b.is_nan() { b } else { a.min(b) });
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let pass = !values.is_empty()
            && match relation {
                Relation::Below => max < tol,
                Relation::Above => min > tol,
            };
        Criterion { name: name.to_string(), relation, tol, count: values.len(), max, mean, min, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub name: CheckName,
    /// Chart, hypersurface or run the check ran on.
    pub target: String,
    pub verdict: Verdict,
    pub seed: u64,
    /// Digest of the check block and every block it references.
    pub inputs_digest: String,
    pub points: Vec<Vec<Scalar>>,
    pub criteria: Vec<Criterion>,
    pub info: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub seed: Option<u64>,
    pub order: usize,
    pub fd: bool,
    pub fd_tol: f64,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub toolkit: String,
    pub version: String,
    pub manifest_digest: String,
    pub ledger_digest: String,
    pub settings: ReportSettings,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    /// Digest of the canonical report without wall times and this field.
    pub digest: String,
}

impl Report {
    pub fn new(manifest_digest: String, settings: ReportSettings, checks: Vec<CheckRecord>) -> Self {
        let mut summary = Summary { total: checks.len(), ..Summary::default() };
        for c in &checks {
            match c.verdict {
                Verdict::Pass => summary.passed += 1,
                Verdict::Fail => summary.failed += 1,
                Verdict::Error => summary.errored += 1,
            }
        }
        let mut report = Report {
            toolkit: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            manifest_digest,
            ledger_digest: sha256_hex(CONVENTIONS.as_bytes()),
            settings,
            checks,
            summary,
            digest: String::new(),
        };
        report.digest = report.compute_digest();
        report
    }

    pub fn compute_digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("digest");
            if let Some(Value::Array(checks)) = map.get_mut("checks") {
                for c in checks {
                    if let Value::Object(c) = c {
                        c.remove("wall_time_s");
                    }
                }
            }
        }
        sha256_hex(canonical_value(&v).as_bytes())
    }

    /// 0 all pass, 1 any failed, 2 any errored.
    pub fn exit_code(&self) -> i32 {
        if self.summary.errored > 0 {
            2
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let seed = self.settings.seed.map_or("none".to_string(), |s| s.to_string());
        let _ = writeln!(
            out,
            "{} {}  manifest {}  seed {}  order {}{}",
            self.toolkit,
            self.version,
            &self.manifest_digest[..12],
            seed,
            self.settings.order,
            if self.settings.fd { "  fd" } else { "" }
        );
        for c in &self.checks {
            let tag = match c.verdict {
                Verdict::Pass => "PASS ",
                Verdict::Fail => "FAIL ",
                Verdict::Error => "ERROR",
            };
            let _ = writeln!(out, "{tag} {} ({}) on {}  [{} points, {:.3}s]", c.id, c.name, c.target, c.points.len(), c.wall_time_s);
            for k in &c.criteria {
                let (stat, op) = match k.relation {
                    Relation::Below => (k.max, "<"),
                    Relation::Above => (k.min, ">"),
                };
                let mark = if k.pass { "ok" } else { "VIOLATED" };
                let _ = writeln!(out, "      {:<20} {:.3e} {op} {:.1e}  mean {:.3e}  {mark}", k.name, stat, k.tol, k.mean);
            }
            if let Some(e) = &c.error {
                let _ = writeln!(out, "      error: {e}");
            }
        }
        let s = &self.summary;
        let _ = writeln!(out, "{} checks: {} passed, {} failed, {} errored", s.total, s.passed, s.failed, s.errored);
        let _ = writeln!(out, "digest {}", self.digest);
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical JSON: sorted keys, no whitespace, floats as `%.17g`.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    canonical_value(&serde_json::to_value(value).expect("value serializes"))
}

fn canonical_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                let _ = write!(out, "{i}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                out.push_str(&format_g17(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mant), exp.abs())
    } else {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        strip_zeros(&fixed).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_c() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(1e16), "10000000000000000");
        assert_eq!(format_g17(1e17), "1e+17");
        assert_eq!(format_g17(0.0001), "0.0001");
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b": 1, "a": [0.5, true, null], "c": {"z": "x", "y": -3}}"#).unwrap();
        assert_eq!(canonical_value(&v), r#"{"a":[0.5,true,null],"b":1,"c":{"y":-3,"z":"x"}}"#);
    }

    #[test]
    fn criteria_verdicts() {
        let c = Criterion::from_values("r", Relation::Below, 1e-8, &[1e-10, 3e-9]);
        assert!(c.pass);
        assert_eq!(c.max, 3e-9);
        let c = Criterion::from_values("r", Relation::Below, 1e-8, &[1e-10, f64::NAN]);
        assert!(!c.pass);
        let c = Criterion::from_values("s", Relation::Above, 1e-8, &[0.3, 0.1]);
        assert!(c.pass && c.min == 0.1);
    }
}
