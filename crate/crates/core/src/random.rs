//! Seeded random metrics and conformal potentials, produced as expression
//! sources so every random fixture can be written into a manifest verbatim.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exprlang::parse;
use crate::scalar::{Mode, C64};
use crate::tensor::MetricChart;

pub const COORDINATES: [&str; 6] = ["x", "y", "z", "w", "u", "v"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the random metric family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecipe {
    pub dim: usize,
    /// Number of negative base directions (placed last).
    pub negative: usize,
    pub mode: Mode,
    /// Size of the non-constant perturbation relative to the base.
    pub amplitude: f64,
    /// Coordinate whose reflection is an isometry; its mixed components vanish.
    pub even_in: Option<usize>,
}

impl MetricRecipe {
    pub fn riemannian(dim: usize) -> Self {
        MetricRecipe { dim, negative: 0, mode: Mode::Real, amplitude: 0.15, even_in: None }
    }

    pub fn split() -> Self {
        MetricRecipe { dim: 4, negative: 2, mode: Mode::Real, amplitude: 0.15, even_in: None }
    }

    pub fn complex(dim: usize) -> Self {
        MetricRecipe { dim, negative: 0, mode: Mode::Complex, amplitude: 0.15, even_in: None }
    }
}

fn coefficient(rng: &mut ChaCha8Rng, scale: f64, mode: Mode) -> String {
    let a = scale * rng.gen_range(-1.0..1.0);
    match mode {
        Mode::Real => format!("{a:.4}"),
        Mode::Complex => {
            let b = scale * rng.gen_range(-1.0..1.0);
            format!("({a:.4} + {b:.4}*i)")
        }
    }
}

/// A smooth non-polynomial term in the allowed coordinates.
fn term(rng: &mut ChaCha8Rng, coords: &[&str], even: Option<&str>) -> String {
    let a = *coords.choose(rng).unwrap();
    let b = *coords.choose(rng).unwrap();
    if let Some(e) = even {
        // Even in `e`: it only enters squared or through cos.
        let others: Vec<&str> = coords.iter().copied().filter(|c| *c != e).collect();
        let a = *others.choose(rng).unwrap();
        let b = *others.choose(rng).unwrap();
        return match rng.gen_range(0..6) {
            0 => format!("{e}^2"),
            1 => format!("(cos({e}) - 1)*{a}"),
            2 => format!("{a}*{e}^2"),
            3 => format!("{a}*{b}"),
            4 => format!("sin({a})"),
            _ => format!("{a}*exp({b})"),
        };
    }
    match rng.gen_range(0..6) {
        0 => a.to_string(),
        1 => format!("{a}*{b}"),
        2 => format!("sin({a} + {b})"),
        3 => format!("{a}*exp({b})"),
        4 => format!("{a}^2*{b}"),
        _ => format!("cos({a})*{b}"),
    }
}

/// Upper-triangle sources of a random metric.
pub fn metric_sources(recipe: &MetricRecipe, rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = recipe.dim;
    let coords = &COORDINATES[..n];
    let even = recipe.even_in.map(|k| COORDINATES[k]);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if let Some(k) = recipe.even_in {
                if i != j && (i == k || j == k) {
                    out.push("0".to_string());
                    continue;
                }
            }
            let mut parts = Vec::new();
            if i == j {
                let sign = if i >= n - recipe.negative { -1.0 } else { 1.0 };
                parts.push(format!("{:.4}", sign * rng.gen_range(1.5..2.5)));
            } else {
                parts.push(coefficient(rng, 0.2, Mode::Real));
            }
            for _ in 0..3 {
                let c = coefficient(rng, recipe.amplitude, recipe.mode);
                parts.push(format!("{c}*{}", term(rng, coords, even)));
            }
            out.push(parts.join(" + "));
        }
    }
    out
}

/// Random metric chart on `[-0.5, 0.5]ⁿ` with its declared signature.
pub fn random_metric(recipe: &MetricRecipe, seed: u64) -> Result<MetricChart> {
    let mut rng = rng(seed);
    let sources = metric_sources(recipe, &mut rng);
    let exprs = sources.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
    let n = recipe.dim;
    let chart = MetricChart::new(
        format!("random_{n}d_{seed}"),
        COORDINATES[..n].iter().map(|s| s.to_string()).collect(),
        recipe.mode,
        exprs,
        Vec::new(),
    )?
    .with_domain(vec![(-0.5, 0.5); n]);
    Ok(match recipe.mode {
        Mode::Real => chart.with_signature(n - recipe.negative, recipe.negative),
        Mode::Complex => chart,
    })
}

/// Random conformal potential in the given coordinates.
pub fn potential_source(coords: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut parts = Vec::new();
    for _ in 0..3 {
        let c = coefficient(rng, 0.3, Mode::Real);
        parts.push(format!("{c}*{}", term(rng, coords, None)));
    }
    parts.join(" + ")
}

/// Points drawn from the interior `[-0.3, 0.3]ⁿ` of the random-metric box,
/// far enough from the edge for every finite-difference stencil.
pub fn interior_points(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    (0..count).map(|_| (0..dim).map(|_| C64::new(rng.gen_range(-0.3..0.3), 0.0)).collect()).collect()
}
