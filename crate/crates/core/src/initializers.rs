//! Initial fields: tanh profiles around closed curves and seeded noise.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Boundary samples used for the numerical distance to ellipses and roses.
pub const CURVE_SAMPLES: usize = 4096;

/// Default `λ` of the tanh profile.
pub const DEFAULT_LAMBDA: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Circle { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, ra: f64, rb: f64 },
    /// Four-leaved curve `ρ(α) = (2 + cos 4α)/8` around `(cx, cy)`.
    Rose { cx: f64, cy: f64 },
    Rectangle { cx: f64, cy: f64, w: f64, h: f64 },
    Union { shapes: Vec<ShapeSpec> },
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Self::Circle { r, .. } => positive("r", *r),
            Self::Ellipse { ra, rb, .. } => positive("ra", *ra).and(positive("rb", *rb)),
            Self::Rose { .. } => Ok(()),
            Self::Rectangle { w, h, .. } => positive("w", *w).and(positive("h", *h)),
            Self::Union { shapes } => {
                if shapes.is_empty() {
                    return Err(Error::Parameter("union needs at least one shape".into()));
                }
                shapes.iter().try_for_each(Self::validate)
            }
        }
    }
}

fn rose_radius(alpha: f64) -> f64 {
    (2.0 + (4.0 * alpha).cos()) / 8.0
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 { ((px * ex + py * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (px - t * ex).hypot(py - t * ey)
}

fn sample_curve(curve: impl Fn(f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    (0..CURVE_SAMPLES)
        .map(|k| curve(2.0 * PI * k as f64 / CURVE_SAMPLES as f64))
        .collect()
}

/// Distance from `p` to the closed polyline through `pts`.
fn polyline_distance(p: [f64; 2], pts: &[[f64; 2]]) -> f64 {
    (0..pts.len())
        .map(|k| segment_distance(p, pts[k], pts[(k + 1) % pts.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// A shape with its boundary polylines sampled once, for repeated queries.
enum Prepared<'a> {
    Exact(&'a ShapeSpec),
    Ellipse { cx: f64, cy: f64, ra: f64, rb: f64, pts: Vec<[f64; 2]> },
    Rose { cx: f64, cy: f64, pts: Vec<[f64; 2]> },
    Union(Vec<Prepared<'a>>),
}

impl<'a> Prepared<'a> {
    fn new(shape: &'a ShapeSpec) -> Self {
        match *shape {
            ShapeSpec::Ellipse { cx, cy, ra, rb } => Self::Ellipse {
                cx,
                cy,
                ra,
                rb,
                pts: sample_curve(|t| [cx + ra * t.cos(), cy + rb * t.sin()]),
            },
            ShapeSpec::Rose { cx, cy } => Self::Rose {
                cx,
                cy,
                pts: sample_curve(|t| {
                    let rho = rose_radius(t);
                    [cx + rho * t.cos(), cy + rho * t.sin()]
                }),
            },
            ShapeSpec::Union { ref shapes } => Self::Union(shapes.iter().map(Self::new).collect()),
            _ => Self::Exact(shape),
        }
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Exact(shape) => exact_distance(shape, x, y),
            Self::Ellipse { cx, cy, ra, rb, pts } => {
                let d = polyline_distance([x, y], pts);
                let q = ((x - cx) / ra).powi(2) + ((y - cy) / rb).powi(2);
                if q <= 1.0 {
                    d
                } else {
                    -d
                }
            }
            Self::Rose { cx, cy, pts } => {
                let d = polyline_distance([x, y], pts);
                let (px, py) = (x - cx, y - cy);
                if px.hypot(py) <= rose_radius(py.atan2(px)) {
                    d
                } else {
                    -d
                }
            }
            Self::Union(parts) => parts
                .iter()
                .map(|s| s.distance(x, y))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn exact_distance(shape: &ShapeSpec, x: f64, y: f64) -> f64 {
    match *shape {
        ShapeSpec::Circle { cx, cy, r } => r - (x - cx).hypot(y - cy),
        ShapeSpec::Rectangle { cx, cy, w, h } => {
            let dx = (x - cx).abs() - 0.5 * w;
            let dy = (y - cy).abs() - 0.5 * h;
            let outside = dx.max(0.0).hypot(dy.max(0.0));
            let inside = dx.max(dy).min(0.0);
            -(outside + inside)
        }
        _ => unreachable!("sampled shapes go through Prepared"),
    }
}

/// Signed distance to the shape boundary, positive inside.
pub fn signed_distance(shape: &ShapeSpec, x: f64, y: f64) -> f64 {
    Prepared::new(shape).distance(x, y)
}

/// `φ = λ tanh(d/(√2 ε))` at every cell centre, `d` the signed distance.
pub fn tanh_profile(grid: Grid, shape: &ShapeSpec, epsilon: f64, lambda: f64) -> Result<Field> {
    shape.validate()?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let scale = 1.0 / (SQRT_2 * epsilon);
    let prepared = Prepared::new(shape);
    let field = Field::from_fn(grid, |x, y| lambda * (prepared.distance(x, y) * scale).tanh())?;
    assert!(field.is_admissible(1.0));
    Ok(field)
}

/// `mean + amplitude · u` with `u` i.i.d. uniform on `[−1, 1]` from a seeded
/// ChaCha8 stream, consumed in storage order.
pub fn random_field(grid: Grid, mean: f64, amplitude: f64, seed: u64) -> Result<Field> {
    if !(amplitude >= 0.0) || !(mean.abs() + amplitude < 1.0) {
        return Err(Error::Parameter(format!(
            "random field needs amplitude >= 0 and |mean| + amplitude < 1, got mean={mean}, amplitude={amplitude}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| mean + amplitude * rng.gen_range(-1.0..=1.0))
        .collect();
    let field = Field::new(grid, values)?;
    assert!(field.is_admissible(1.0));
    Ok(field)
}
