//! Source configurations, shape templates and detection grids.
//!
//! Lengths are in units of the PSF width `w`; the default [`PsfModel`] has
//! `w = 1`, so `d` and `d/w` coincide unless a caller changes the width.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Image- or object-plane coordinate. One-dimensional layouts keep `y = 0`.
pub type Point = [f64; 2];

/// Spatial dimensionality of a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dims {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Dims {
    pub fn count(self) -> usize {
        match self {
            Dims::One => 1,
            Dims::Two => 2,
        }
    }
}

/// Isotropic Gaussian PSF, amplitude `h(r) = exp(-r²/w²) / (√π w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfModel {
    w: f64,
}

impl PsfModel {
    pub fn new(w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(format!("PSF width must be positive, got {w}")));
        }
        Ok(Self { w })
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    /// `|h(r - s)|² = exp(-2|r - s|²/w²) / (π w²)`.
    #[inline]
    pub fn intensity(&self, r: Point, s: Point) -> f64 {
        let dx = r[0] - s[0];
        let dy = r[1] - s[1];
        let w2 = self.w * self.w;
        (-2.0 * (dx * dx + dy * dy) / w2).exp() / (std::f64::consts::PI * w2)
    }
}

impl Default for PsfModel {
    fn default() -> Self {
        Self { w: 1.0 }
    }
}

/// A per-source parameter given either once for all sources or per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceParam {
    Uniform(f64),
    PerSource(Vec<f64>),
}

impl SourceParam {
    pub fn resolve(&self, count: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            SourceParam::Uniform(v) => Ok(vec![*v; count]),
            SourceParam::PerSource(vs) if vs.len() == count => Ok(vs.clone()),
            SourceParam::PerSource(vs) => Err(invalid(format!(
                "{name} lists {} values for {count} sources",
                vs.len()
            ))),
        }
    }
}

impl From<f64> for SourceParam {
    fn from(v: f64) -> Self {
        SourceParam::Uniform(v)
    }
}

impl From<Vec<f64>> for SourceParam {
    fn from(v: Vec<f64>) -> Self {
        SourceParam::PerSource(v)
    }
}

/// Emitter layout plus the per-source state parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceConfig {
    dims: Dims,
    positions: Vec<Point>,
    alphas: Vec<f64>,
    xis: Vec<f64>,
    psf: PsfModel,
}

impl SourceConfig {
    pub fn new(
        dims: Dims,
        positions: Vec<Point>,
        alphas: Vec<f64>,
        xis: Vec<f64>,
        psf: PsfModel,
    ) -> Result<Self> {
        let m = positions.len();
        if m == 0 {
            return Err(invalid("at least one source is required"));
        }
        if alphas.len() != m || xis.len() != m {
            return Err(invalid(format!(
                "parameter lists differ in length: {m} positions, {} amplitudes, {} probabilities",
                alphas.len(),
                xis.len()
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(invalid(format!("amplitudes must be positive, got {a}")));
        }
        if let Some(x) = xis.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
            return Err(invalid(format!(
                "bright-state probabilities must lie in (0, 1], got {x}"
            )));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("source coordinates must be finite"));
        }
        if dims == Dims::One && positions.iter().any(|p| p[1] != 0.0) {
            return Err(invalid("1D layouts must have y = 0"));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if positions[i] == positions[j] {
                    return Err(invalid(format!("sources {i} and {j} coincide")));
                }
            }
        }
        Ok(Self {
            dims,
            positions,
            alphas,
            xis,
            psf,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn xis(&self) -> &[f64] {
        &self.xis
    }

    pub fn psf(&self) -> PsfModel {
        self.psf
    }

    pub fn num_sources(&self) -> usize {
        self.positions.len()
    }

    /// Number of estimated coordinates: `M` in 1D, `2M` in 2D.
    pub fn num_params(&self) -> usize {
        self.positions.len() * self.dims.count()
    }

    /// Parameter labels in Fisher-matrix order: `x1..xM` or `x1,y1,..,xM,yM`.
    pub fn param_labels(&self) -> Vec<String> {
        (1..=self.num_sources())
            .flat_map(|i| match self.dims {
                Dims::One => vec![format!("x{i}")],
                Dims::Two => vec![format!("x{i}"), format!("y{i}")],
            })
            .collect()
    }

    /// Brightness terms `q_i = |α_i|² |h(r - s_i)|²` at `r`.
    pub fn brightness_into(&self, r: Point, out: &mut [f64]) {
        for ((q, s), a) in out.iter_mut().zip(&self.positions).zip(&self.alphas) {
            *q = a * a * self.psf.intensity(r, *s);
        }
    }

    pub fn brightness(&self, r: Point) -> Vec<f64> {
        let mut q = vec![0.0; self.num_sources()];
        self.brightness_into(r, &mut q);
        q
    }

    /// Same layout with every amplitude multiplied by `factor`.
    pub fn with_scaled_alphas(&self, factor: f64) -> Result<Self> {
        let alphas = self.alphas.iter().map(|a| a * factor).collect();
        Self::new(self.dims, self.positions.clone(), alphas, self.xis.clone(), self.psf)
    }

    pub fn with_xis(&self, xis: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.positions.clone(), self.alphas.clone(), xis, self.psf)
    }

    pub fn with_positions(&self, positions: Vec<Point>) -> Result<Self> {
        Self::new(self.dims, positions, self.alphas.clone(), self.xis.clone(), self.psf)
    }

    pub fn translated(&self, by: Point) -> Result<Self> {
        let by = match self.dims {
            Dims::One => [by[0], 0.0],
            Dims::Two => by,
        };
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] + by[0], p[1] + by[1]])
            .collect();
        self.with_positions(positions)
    }
}

/// Layout families whose scale is set by a single length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeKind {
    #[serde(rename = "line-1d")]
    Line1d,
    #[serde(rename = "pair-2d")]
    Pair2d,
    #[serde(rename = "triangle-2d")]
    Triangle2d,
    #[serde(rename = "quad-2d-asym")]
    Quad2dAsym,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Line1d => "line-1d",
            ShapeKind::Pair2d => "pair-2d",
            ShapeKind::Triangle2d => "triangle-2d",
            ShapeKind::Quad2dAsym => "quad-2d-asym",
        }
    }

    pub fn dims(self) -> Dims {
        match self {
            ShapeKind::Line1d => Dims::One,
            _ => Dims::Two,
        }
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line-1d" => Ok(ShapeKind::Line1d),
            "pair-2d" => Ok(ShapeKind::Pair2d),
            "triangle-2d" => Ok(ShapeKind::Triangle2d),
            "quad-2d-asym" => Ok(ShapeKind::Quad2dAsym),
            other => Err(Error::UnknownShape(other.to_string())),
        }
    }
}

/// Fixed relative coordinates of the asymmetric four-source object, in units of `d`.
pub const QUAD_ASYM_COORDS: [Point; 4] = [[-0.2, 0.15], [0.465, 0.45], [0.85, -0.25], [-0.73, -0.55]];

/// A shape family with a fixed source count.
///
/// Textual form: `line-1d:M` for equidistant lines, the bare kind name for
/// the 2D shapes (`pair-2d`, `triangle-2d`, `quad-2d-asym`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeTemplate {
    kind: ShapeKind,
    count: usize,
}

impl ShapeTemplate {
    pub fn new(kind: ShapeKind, count: usize) -> Result<Self> {
        let fixed = match kind {
            ShapeKind::Line1d => None,
            ShapeKind::Pair2d => Some(2),
            ShapeKind::Triangle2d => Some(3),
            ShapeKind::Quad2dAsym => Some(4),
        };
        match fixed {
            None if count < 2 => Err(invalid(format!(
                "a line needs at least 2 sources, got {count}"
            ))),
            Some(f) if f != count => Err(invalid(format!(
                "{} has exactly {f} sources, got {count}",
                kind.name()
            ))),
            _ => Ok(Self { kind, count }),
        }
    }

    pub fn line(count: usize) -> Result<Self> {
        Self::new(ShapeKind::Line1d, count)
    }

    pub fn fixed(kind: ShapeKind) -> Result<Self> {
        let count = match kind {
            ShapeKind::Line1d => return Err(invalid("line-1d needs an explicit source count")),
            ShapeKind::Pair2d => 2,
            ShapeKind::Triangle2d => 3,
            ShapeKind::Quad2dAsym => 4,
        };
        Self::new(kind, count)
    }

    /// The six standard objects: lines of 2, 3, 4 sources and the three 2D shapes.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self { kind: ShapeKind::Line1d, count: 2 },
            Self { kind: ShapeKind::Line1d, count: 3 },
            Self { kind: ShapeKind::Line1d, count: 4 },
            Self { kind: ShapeKind::Pair2d, count: 2 },
            Self { kind: ShapeKind::Triangle2d, count: 3 },
            Self { kind: ShapeKind::Quad2dAsym, count: 4 },
        ]
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dims(&self) -> Dims {
        self.kind.dims()
    }

    /// Source positions at scale `d`.
    pub fn positions(&self, d: f64) -> Result<Vec<Point>> {
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid(format!("scale d must be positive, got {d}")));
        }
        let pts = match self.kind {
            ShapeKind::Line1d => {
                let center = (self.count as f64 - 1.0) / 2.0;
                (0..self.count)
                    .map(|k| [(k as f64 - center) * d, 0.0])
                    .collect()
            }
            ShapeKind::Pair2d => vec![[-0.5 * d, 0.0], [0.5 * d, 0.0]],
            ShapeKind::Triangle2d => {
                let r = d / 3f64.sqrt();
                vec![[0.0, r], [-0.5 * d, -0.5 * r], [0.5 * d, -0.5 * r]]
            }
            ShapeKind::Quad2dAsym => QUAD_ASYM_COORDS
                .iter()
                .map(|c| [c[0] * d, c[1] * d])
                .collect(),
        };
        Ok(pts)
    }

    pub fn instantiate(
        &self,
        d: f64,
        alphas: &SourceParam,
        xis: &SourceParam,
        psf: PsfModel,
    ) -> Result<SourceConfig> {
        let positions = self.positions(d)?;
        SourceConfig::new(
            self.dims(),
            positions,
            alphas.resolve(self.count, "alpha")?,
            xis.resolve(self.count, "xi")?,
            psf,
        )
    }
}

impl fmt::Display for ShapeTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ShapeKind::Line1d => write!(f, "line-1d:{}", self.count),
            k => f.write_str(k.name()),
        }
    }
}

impl FromStr for ShapeTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((kind, count)) => {
                let kind: ShapeKind = kind.parse()?;
                let count = count
                    .parse()
                    .map_err(|_| Error::UnknownShape(s.to_string()))?;
                Self::new(kind, count)
            }
            None => Self::fixed(s.parse()?),
        }
    }
}

impl Serialize for ShapeTemplate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ShapeTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `M` collinear sources on the x axis with spacing `d`, centroid at the origin.
pub fn build_line_config(
    count: usize,
    d: f64,
    alphas: &SourceParam,
    xis: &SourceParam,
    w: f64,
) -> Result<SourceConfig> {
    ShapeTemplate::line(count)?.instantiate(d, alphas, xis, PsfModel::new(w)?)
}

pub fn build_2d_config(
    kind: ShapeKind,
    d: f64,
    alphas: &SourceParam,
    xis: &SourceParam,
    w: f64,
) -> Result<SourceConfig> {
    if kind == ShapeKind::Line1d {
        return Err(invalid("line-1d is not a 2D shape"));
    }
    ShapeTemplate::fixed(kind)?.instantiate(d, alphas, xis, PsfModel::new(w)?)
}

/// Sampling settings for [`build_grid`]. Step and margin are lengths (units of `w`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub margin: f64,
    pub max_points: usize,
}

pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const DEFAULT_GRID_MARGIN: f64 = 2.0;
pub const DEFAULT_MAX_GRID_POINTS: usize = 4_000_000;

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: DEFAULT_GRID_STEP,
            margin: DEFAULT_GRID_MARGIN,
            max_points: DEFAULT_MAX_GRID_POINTS,
        }
    }
}

impl GridSpec {
    pub fn new(step: f64, margin: f64) -> Self {
        Self {
            step,
            margin,
            ..Self::default()
        }
    }
}

/// Uniform detection lattice. 2D points are stored row-major: `y` ascending
/// in the outer loop, `x` ascending in the inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGrid {
    dims: Dims,
    step: f64,
    points: Vec<Point>,
    lower: Point,
    upper: Point,
    shape: [usize; 2],
}

impl DetectionGrid {
    /// Lattice with `counts[a]` points from `lower[a]` in steps of `step`.
    pub fn from_axes(dims: Dims, step: f64, lower: Point, counts: [usize; 2]) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid(format!("grid step must be positive, got {step}")));
        }
        let counts = match dims {
            Dims::One => [counts[0], 1],
            Dims::Two => counts,
        };
        if counts[0] == 0 || counts[1] == 0 {
            return Err(invalid("grid must contain at least one point"));
        }
        let lower = match dims {
            Dims::One => [lower[0], 0.0],
            Dims::Two => lower,
        };
        let mut points = Vec::with_capacity(counts[0] * counts[1]);
        for iy in 0..counts[1] {
            let y = match dims {
                Dims::One => 0.0,
                Dims::Two => lower[1] + iy as f64 * step,
            };
            for ix in 0..counts[0] {
                points.push([lower[0] + ix as f64 * step, y]);
            }
        }
        let upper = [
            lower[0] + (counts[0] - 1) as f64 * step,
            lower[1] + (counts[1] - 1) as f64 * step,
        ];
        Ok(Self {
            dims,
            step,
            points,
            lower,
            upper,
            shape: counts,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(min, max)` per axis.
    pub fn bounds(&self) -> (Point, Point) {
        (self.lower, self.upper)
    }

    /// Points per axis (`[nx, 1]` in 1D).
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }
}

fn axis_count(span: f64, step: f64) -> usize {
    // the 1e-9 slack absorbs representation error in span/step
    (span / step - 1e-9).ceil().max(0.0) as usize + 1
}

/// Uniform lattice covering `[min - margin, max + margin]` on every axis.
pub fn build_grid(config: &SourceConfig, spec: &GridSpec) -> Result<DetectionGrid> {
    if !(spec.step.is_finite() && spec.step > 0.0) {
        return Err(invalid(format!("grid step must be positive, got {}", spec.step)));
    }
    if !(spec.margin.is_finite() && spec.margin >= 0.0) {
        return Err(invalid(format!(
            "grid margin must be non-negative, got {}",
            spec.margin
        )));
    }
    let naxes = config.dims().count();
    let mut lower = [0.0; 2];
    let mut counts = [1usize; 2];
    for axis in 0..naxes {
        let (lo, hi) = config
            .positions()
            .iter()
            .map(|p| p[axis])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        lower[axis] = lo - spec.margin;
        counts[axis] = axis_count(hi + spec.margin - lower[axis], spec.step);
    }
    let total = counts[0].saturating_mul(counts[1]);
    if total > spec.max_points {
        return Err(Error::GridTooLarge {
            points: total,
            cap: spec.max_points,
        });
    }
    DetectionGrid::from_axes(config.dims(), spec.step, lower, counts)
}
