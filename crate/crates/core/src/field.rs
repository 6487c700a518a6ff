//! Ground-truth MPM encoding, likelihood maps and the field loss.
//!
//! Every pixel `p` near a cell's position at the later frame stores
//! `w(p) * v / |v|`, where `v = (prev.x - p.x, prev.y - p.y, gap)` points
//! back to the cell's position at the earlier frame and `w` is a Gaussian
//! centred on the cell. The time component is stored as `+gap`, so decoding
//! `p + gap * (vx, vy) / vt` lands on the earlier position directly.
//!
//! Cell positions are snapped to their nearest pixel before the weight is
//! evaluated, which puts a likelihood of exactly 1.0 on that pixel. The
//! motion vector still targets the exact sub-pixel earlier position.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on stored vector norms (f32 rounding).
pub const NORM_EPS: f64 = 1e-6;

/// Integer grid position. Ordered by `(y, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub y: usize,
    pub x: usize,
}

impl Pixel {
    pub fn new(x: usize, y: usize) -> Self {
        Pixel { y, x }
    }

    /// Nearest pixel to a sub-pixel position, clamped into a `width` x `height` grid.
    pub fn nearest(x: f64, y: f64, width: usize, height: usize) -> Self {
        let snap = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n.saturating_sub(1));
        Pixel::new(snap(x, width), snap(y, height))
    }

    pub fn as_point(self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }
}

/// A cell's annotated point position at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub cell_id: u32,
    pub frame: u32,
    pub x: f64,
    pub y: f64,
    /// Mother cell, set on every row of a daughter cell.
    pub parent_id: Option<u32>,
}

impl Annotation {
    pub fn new(cell_id: u32, frame: u32, x: f64, y: f64) -> Self {
        Annotation {
            cell_id,
            frame,
            x,
            y,
            parent_id: None,
        }
    }

    pub fn with_parent(mut self, parent_id: u32) -> Self {
        self.parent_id = Some(parent_id);
        self
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn pixel(&self, width: usize, height: usize) -> Pixel {
        Pixel::nearest(self.x, self.y, width, height)
    }
}

/// Checks the annotation set invariants: unique `(cell_id, frame)`, positions
/// inside the grid, positive ids, and parents ending exactly one frame before
/// their daughters start.
pub fn validate_annotations(annotations: &[Annotation], width: usize, height: usize) -> Result<()> {
    let mut seen = HashSet::new();
    // cell -> (first frame, last frame, parent)
    let mut spans: HashMap<u32, (u32, u32, Option<u32>)> = HashMap::new();
    for a in annotations {
        if a.cell_id == 0 {
            return Err(Error::InvalidInput(format!(
                "cell_id must be positive (frame {})",
                a.frame
            )));
        }
        if !seen.insert((a.cell_id, a.frame)) {
            return Err(Error::InvalidInput(format!(
                "duplicate annotation for cell {} at frame {}",
                a.cell_id, a.frame
            )));
        }
        if !(a.x >= 0.0 && a.x < width as f64 && a.y >= 0.0 && a.y < height as f64) {
            return Err(Error::InvalidInput(format!(
                "cell {} at frame {} lies outside the {width}x{height} grid: ({}, {})",
                a.cell_id, a.frame, a.x, a.y
            )));
        }
        if a.parent_id == Some(0) || a.parent_id == Some(a.cell_id) {
            return Err(Error::InvalidInput(format!(
                "cell {} has an invalid parent id",
                a.cell_id
            )));
        }
        let span = spans
            .entry(a.cell_id)
            .or_insert((a.frame, a.frame, a.parent_id));
        if span.2 != a.parent_id {
            return Err(Error::InvalidInput(format!(
                "cell {} has inconsistent parent ids",
                a.cell_id
            )));
        }
        span.0 = span.0.min(a.frame);
        span.1 = span.1.max(a.frame);
    }
    for (&cell, &(first, _, parent)) in &spans {
        let Some(parent) = parent else { continue };
        let Some(&(_, parent_last, _)) = spans.get(&parent) else {
            return Err(Error::InvalidInput(format!(
                "cell {cell} refers to unknown parent {parent}"
            )));
        };
        if first == 0 || parent_last != first - 1 {
            return Err(Error::InvalidInput(format!(
                "cell {cell} starts at frame {first} but parent {parent} ends at frame {parent_last}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Gaussian spread of the position likelihood, pixels.
    pub sigma: f64,
    /// Pixels farther than this from a cell store zero.
    pub cutoff_radius: f64,
    pub width: usize,
    pub height: usize,
}

impl EncoderConfig {
    pub const DEFAULT_SIGMA: f64 = 6.0;

    /// Default spread with the support truncated at four sigma.
    pub fn new(width: usize, height: usize) -> Self {
        EncoderConfig {
            sigma: Self::DEFAULT_SIGMA,
            cutoff_radius: 4.0 * Self::DEFAULT_SIGMA,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.cutoff_radius >= 2.0 * self.sigma && self.cutoff_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cutoff_radius {} must be at least 2*sigma = {}",
                self.cutoff_radius,
                2.0 * self.sigma
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Dense row-major grid of `(vx, vy, vt)` triples for the frame pair
/// `(frame_t - gap, frame_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpmField {
    pub width: usize,
    pub height: usize,
    pub frame_t: u32,
    pub gap: u32,
    pub vectors: Vec<[f32; 3]>,
}

impl MpmField {
    pub fn zeros(width: usize, height: usize, frame_t: u32, gap: u32) -> Self {
        MpmField {
            width,
            height,
            frame_t,
            gap,
            vectors: vec![[0.0; 3]; width * height],
        }
    }

    pub fn earlier_frame(&self) -> u32 {
        self.frame_t - self.gap
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.y * self.width + p.x
    }

    #[inline]
    pub fn get(&self, p: Pixel) -> [f32; 3] {
        self.vectors[self.index(p)]
    }

    pub fn set(&mut self, p: Pixel, v: [f32; 3]) {
        let i = self.index(p);
        self.vectors[i] = v;
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn same_grid(&self, other: &MpmField) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[inline]
pub(crate) fn norm3(v: [f32; 3]) -> f64 {
    let [a, b, c] = v.map(f64::from);
    (a * a + b * b + c * c).sqrt()
}

/// Per-pixel vector magnitudes of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl LikelihoodMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        LikelihoodMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, p: Pixel) -> f64 {
        self.values[p.y * self.width + p.x]
    }

    pub fn set(&mut self, p: Pixel, v: f64) {
        self.values[p.y * self.width + p.x] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `exp(-|a - p|^2 / sigma^2)`.
pub fn gaussian_weight(p: (f64, f64), a: (f64, f64), sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let dx = a.0 - p.0;
    let dy = a.1 - p.1;
    Ok((-(dx * dx + dy * dy) / (sigma * sigma)).exp())
}

fn check_pair(a_t: &Annotation, a_prev: &Annotation, cfg: &EncoderConfig, gap: u32) -> Result<()> {
    if gap == 0 {
        return Err(Error::InvalidPair("gap must be at least 1".into()));
    }
    if a_t.frame < a_prev.frame || a_t.frame - a_prev.frame != gap {
        return Err(Error::InvalidPair(format!(
            "cell {} at frame {} paired with frame {} but gap is {gap}",
            a_t.cell_id, a_t.frame, a_prev.frame
        )));
    }
    for a in [a_t, a_prev] {
        let inside = a.x >= 0.0 && a.y >= 0.0 && a.x < cfg.width as f64 && a.y < cfg.height as f64;
        if !inside {
            return Err(Error::InvalidPair(format!(
                "cell {} at frame {} lies outside the grid",
                a.cell_id, a.frame
            )));
        }
    }
    Ok(())
}

/// Visits every pixel of one cell's truncated support with its weight and
/// stored vector.
fn for_each_support_pixel(
    a_t: &Annotation,
    a_prev: &Annotation,
    cfg: &EncoderConfig,
    gap: u32,
    mut visit: impl FnMut(Pixel, f64, [f32; 3]),
) {
    let centre = a_t.pixel(cfg.width, cfg.height);
    let reach = cfg.cutoff_radius.floor() as i64;
    let r2 = cfg.cutoff_radius * cfg.cutoff_radius;
    let (cx, cy) = (centre.x as i64, centre.y as i64);
    let vt = f64::from(gap);
    for y in (cy - reach).max(0)..=(cy + reach).min(cfg.height as i64 - 1) {
        for x in (cx - reach).max(0)..=(cx + reach).min(cfg.width as i64 - 1) {
            let (dx, dy) = ((x - cx) as f64, (y - cy) as f64);
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let (px, py) = (x as f64, y as f64);
            let w = (-(dx * dx + dy * dy) / (cfg.sigma * cfg.sigma)).exp();
            let vx = a_prev.x - px;
            let vy = a_prev.y - py;
            // vt = gap > 0, so the norm is never zero.
            let n = (vx * vx + vy * vy + vt * vt).sqrt();
            let stored = [(w * vx / n) as f32, (w * vy / n) as f32, (w * vt / n) as f32];
            visit(Pixel::new(x as usize, y as usize), w, stored);
        }
    }
}

/// Field of a single cell moving from `a_prev` to `a_t`.
pub fn encode_individual(
    a_t: &Annotation,
    a_prev: &Annotation,
    cfg: &EncoderConfig,
    gap: u32,
) -> Result<MpmField> {
    cfg.validate()?;
    check_pair(a_t, a_prev, cfg, gap)?;
    let mut field = MpmField::zeros(cfg.width, cfg.height, a_t.frame, gap);
    for_each_support_pixel(a_t, a_prev, cfg, gap, |p, _, v| field.set(p, v));
    Ok(field)
}

/// Aggregates the individual fields of all `(a_t, a_prev)` pairs, keeping at
/// each pixel the vector with the largest magnitude. Equal magnitudes go to
/// the smaller `a_t.cell_id`.
///
/// A division is two pairs that share the same `a_prev`.
pub fn encode_mpm(
    pairs: &[(Annotation, Annotation)],
    cfg: &EncoderConfig,
    frame_t: u32,
    gap: u32,
) -> Result<MpmField> {
    cfg.validate()?;
    if gap == 0 || gap > frame_t {
        return Err(Error::InvalidPair(format!(
            "gap {gap} is invalid for later frame {frame_t}"
        )));
    }
    let mut ids = HashSet::new();
    for (a_t, a_prev) in pairs {
        check_pair(a_t, a_prev, cfg, gap)?;
        if a_t.frame != frame_t {
            return Err(Error::InvalidPair(format!(
                "cell {} is at frame {}, expected {frame_t}",
                a_t.cell_id, a_t.frame
            )));
        }
        if !ids.insert(a_t.cell_id) {
            return Err(Error::InvalidInput(format!(
                "cell {} appears twice at frame {frame_t}",
                a_t.cell_id
            )));
        }
    }

    let mut order: Vec<&(Annotation, Annotation)> = pairs.iter().collect();
    order.sort_by_key(|(a_t, _)| a_t.cell_id);

    let mut field = MpmField::zeros(cfg.width, cfg.height, frame_t, gap);
    let mut best = vec![0.0f64; cfg.width * cfg.height];
    for (a_t, a_prev) in order {
        for_each_support_pixel(a_t, a_prev, cfg, gap, |p, w, v| {
            let i = p.y * cfg.width + p.x;
            if w > best[i] {
                best[i] = w;
                field.vectors[i] = v;
            }
        });
    }
    Ok(field)
}

pub fn likelihood_of(field: &MpmField) -> LikelihoodMap {
    LikelihoodMap {
        width: field.width,
        height: field.height,
        values: field.vectors.iter().map(|&v| norm3(v)).collect(),
    }
}

/// The two terms of the field loss, each averaged over pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// Mean squared vector difference.
    pub vector: f64,
    /// Mean squared magnitude difference.
    pub magnitude: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.vector + self.magnitude
    }
}

pub fn mpm_loss_terms(c: &MpmField, c_hat: &MpmField) -> Result<LossTerms> {
    if !c.same_grid(c_hat) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            c.width, c.height, c_hat.width, c_hat.height
        )));
    }
    let n = c.vectors.len();
    if n == 0 {
        return Ok(LossTerms {
            vector: 0.0,
            magnitude: 0.0,
        });
    }
    let (mut vector, mut magnitude) = (0.0, 0.0);
    for (&a, &b) in c.vectors.iter().zip(&c_hat.vectors) {
        let d: f64 = (0..3)
            .map(|k| {
                let e = f64::from(a[k]) - f64::from(b[k]);
                e * e
            })
            .sum();
        let m = norm3(a) - norm3(b);
        vector += d;
        magnitude += m * m;
    }
    Ok(LossTerms {
        vector: vector / n as f64,
        magnitude: magnitude / n as f64,
    })
}

/// Mean over pixels of `|c - c_hat|^2 + (|c| - |c_hat|)^2`.
pub fn mpm_loss(c: &MpmField, c_hat: &MpmField) -> Result<f64> {
    mpm_loss_terms(c, c_hat).map(|t| t.total())
}
