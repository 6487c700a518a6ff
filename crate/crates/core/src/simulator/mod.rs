//! Synthetic cell sequences and stand-in field providers.
//!
//! [`simulate`] produces annotated lineages: cells random-walk, divide into
//! two daughters, and never come closer than `min_separation`.
//! [`OracleProvider`] encodes exact fields from annotations in place of a
//! learned estimator, and [`DegradedProvider`] perturbs them with missed
//! cells, vector noise and clutter.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Annotation;

mod degrade;
mod oracle;

pub use degrade::{degrade, DegradedProvider, NoiseConfig};
pub use oracle::OracleProvider;

const PLACEMENT_TRIES: usize = 10_000;
const STEP_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub width: usize,
    pub height: usize,
    pub n_initial_cells: usize,
    pub n_frames: u32,
    /// Per-axis standard deviation of a step, pixels per frame.
    pub step_sigma: f64,
    /// Steps are clamped to this length.
    pub max_step: f64,
    /// Per cell, per frame.
    pub division_prob: f64,
    pub min_separation: f64,
    pub boundary_margin: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            width: 256,
            height: 256,
            n_initial_cells: 10,
            n_frames: 50,
            step_sigma: 2.0,
            max_step: 6.0,
            division_prob: 0.0,
            min_separation: 26.0,
            boundary_margin: 8.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.width == 0 || self.height == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if !(self.boundary_margin >= 0.0)
            || 2.0 * self.boundary_margin >= self.width.min(self.height) as f64
        {
            return bad(format!("boundary_margin {} leaves no room", self.boundary_margin));
        }
        if !(0.0..=1.0).contains(&self.division_prob) {
            return bad(format!("division_prob {} is not a probability", self.division_prob));
        }
        if !(self.step_sigma >= 0.0 && self.max_step >= 0.0 && self.min_separation >= 0.0) {
            return bad("step_sigma, max_step and min_separation must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Cell {
    id: u32,
    x: f64,
    y: f64,
    parent: Option<u32>,
}

struct Walk<'a> {
    cfg: &'a SimConfig,
}

impl Walk<'_> {
    fn inside(&self, x: f64, y: f64) -> bool {
        let m = self.cfg.boundary_margin;
        x >= m && y >= m && x < self.cfg.width as f64 - m && y < self.cfg.height as f64 - m
    }

    fn clear_of(&self, p: (f64, f64), others: impl IntoIterator<Item = (f64, f64)>) -> bool {
        let s = self.cfg.min_separation;
        others
            .into_iter()
            .all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= s)
    }
}

/// Generates a full annotated lineage, sorted by `(frame, cell_id)`.
///
/// Deterministic for a given config. Cells are moved one at a time and
/// each move is checked against the cells already placed in the new frame
/// and the old positions of those still waiting, so staying put is always
/// a valid fallback.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<Annotation>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let walk = Walk { cfg };
    if cfg.n_frames == 0 || cfg.n_initial_cells == 0 {
        return Ok(Vec::new());
    }
    let m = cfg.boundary_margin;
    let (w, h) = (cfg.width as f64, cfg.height as f64);

    let mut cells: Vec<Cell> = Vec::with_capacity(cfg.n_initial_cells);
    for id in 1..=cfg.n_initial_cells as u32 {
        let spot = (0..PLACEMENT_TRIES).find_map(|_| {
            let p = (rng.random_range(m..w - m), rng.random_range(m..h - m));
            walk.clear_of(p, cells.iter().map(|c| (c.x, c.y))).then_some(p)
        });
        let Some((x, y)) = spot else {
            return Err(Error::Infeasible(format!(
                "could not place cell {id} of {} with separation {} in {}x{}",
                cfg.n_initial_cells, cfg.min_separation, cfg.width, cfg.height
            )));
        };
        cells.push(Cell {
            id,
            x,
            y,
            parent: None,
        });
    }
    let mut next_id = cfg.n_initial_cells as u32 + 1;
    let step = Normal::new(0.0, cfg.step_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut out = Vec::new();
    let emit = |cells: &[Cell], frame: u32, out: &mut Vec<Annotation>| {
        out.extend(cells.iter().map(|c| Annotation {
            cell_id: c.id,
            frame,
            x: c.x,
            y: c.y,
            parent_id: c.parent,
        }))
    };
    emit(&cells, 0, &mut out);

    for frame in 1..cfg.n_frames {
        let mut placed: Vec<Cell> = Vec::with_capacity(cells.len() + 2);
        for (k, c) in cells.iter().enumerate() {
            let pending = || cells[k + 1..].iter().map(|o| (o.x, o.y));
            let fits = |p: (f64, f64), placed: &[Cell]| {
                walk.inside(p.0, p.1)
                    && walk.clear_of(p, placed.iter().map(|o| (o.x, o.y)))
                    && walk.clear_of(p, pending())
            };

            if cfg.division_prob > 0.0 && rng.random::<f64>() < cfg.division_prob {
                // Nudge past half the separation so rounding cannot bring
                // the daughters closer than `min_separation`.
                let half = 0.5 * cfg.min_separation + 1e-6;
                let split = (0..STEP_TRIES).find_map(|_| {
                    let theta = rng.random_range(0.0..TAU);
                    let (dx, dy) = (half * theta.cos(), half * theta.sin());
                    let a = (c.x + dx, c.y + dy);
                    let b = (c.x - dx, c.y - dy);
                    (fits(a, &placed) && fits(b, &placed)).then_some((a, b))
                });
                if let Some((a, b)) = split {
                    for (x, y) in [a, b] {
                        placed.push(Cell {
                            id: next_id,
                            x,
                            y,
                            parent: Some(c.id),
                        });
                        next_id += 1;
                    }
                    continue;
                }
            }

            let moved = (0..STEP_TRIES).find_map(|_| {
                let (mut dx, mut dy) = if cfg.step_sigma > 0.0 {
                    (step.sample(&mut rng), step.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                let len = dx.hypot(dy);
                if len > cfg.max_step {
                    dx *= cfg.max_step / len;
                    dy *= cfg.max_step / len;
                }
                let p = (c.x + dx, c.y + dy);
                fits(p, &placed).then_some(p)
            });
            let (x, y) = moved.unwrap_or((c.x, c.y));
            placed.push(Cell { x, y, ..*c });
        }
        placed.sort_by_key(|c| c.id);
        cells = placed;
        emit(&cells, frame, &mut out);
    }
    Ok(out)
}
