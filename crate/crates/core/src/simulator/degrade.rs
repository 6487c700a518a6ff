use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm3, MpmField, Pixel};
use crate::provider::MpmProvider;
use crate::rng::{keyed, tags};

use super::OracleProvider;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Chance that a cell is missing from the field ending at a frame.
    pub drop_prob: f64,
    pub max_consecutive_drops: u32,
    /// Standard deviation of per-component additive noise.
    pub vector_noise_sigma: f64,
    /// Mean number of spurious blobs per field.
    pub clutter_rate: f64,
    /// Restricts drops to these later-frames; empty means every frame.
    pub drop_frames: Vec<u32>,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            drop_prob: 0.0,
            max_consecutive_drops: 0,
            vector_noise_sigma: 0.0,
            clutter_rate: 0.0,
            drop_frames: Vec::new(),
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::InvalidConfig(format!("drop_prob {} is not a probability", self.drop_prob)));
        }
        if !(self.vector_noise_sigma >= 0.0 && self.clutter_rate >= 0.0) {
            return Err(Error::InvalidConfig(
                "vector_noise_sigma and clutter_rate must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        (self.drop_prob == 0.0 || self.max_consecutive_drops == 0)
            && self.vector_noise_sigma == 0.0
            && self.clutter_rate == 0.0
    }
}

/// An oracle whose fields miss cells, carry vector noise and contain
/// clutter. Every random choice is keyed on the request, so asking for the
/// same pair twice gives the same field.
#[derive(Debug, Clone)]
pub struct DegradedProvider {
    inner: OracleProvider,
    noise: NoiseConfig,
}

pub fn degrade(provider: OracleProvider, noise: NoiseConfig) -> Result<DegradedProvider> {
    noise.validate()?;
    Ok(DegradedProvider { inner: provider, noise })
}

impl DegradedProvider {
    pub fn inner(&self) -> &OracleProvider {
        &self.inner
    }

    /// Whether `cell` is erased from fields whose later frame is `frame`.
    /// Runs of drops never exceed `max_consecutive_drops`.
    pub fn is_dropped(&self, cell: u32, frame: u32) -> bool {
        let n = &self.noise;
        if n.drop_prob == 0.0 || n.max_consecutive_drops == 0 {
            return false;
        }
        let Some(first) = self.inner.first_frame_of(cell) else {
            return false;
        };
        let mut run = 0;
        for f in first..=frame {
            let eligible = n.drop_frames.is_empty() || n.drop_frames.contains(&f);
            let dropped = eligible
                && run < n.max_consecutive_drops
                && keyed(n.seed, tags::DROP, u64::from(cell), u64::from(f)).random::<f64>() < n.drop_prob;
            if f == frame {
                return dropped;
            }
            run = if dropped { run + 1 } else { 0 };
        }
        false
    }

    fn add_clutter(&self, field: &mut MpmField, earlier: u32, later: u32) -> Result<()> {
        let mut rng = keyed(self.noise.seed, tags::CLUTTER, u64::from(earlier), u64::from(later));
        let count = Poisson::new(self.noise.clutter_rate)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .sample(&mut rng) as u64;
        let cfg = *self.inner.encoder();
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for _ in 0..count {
            let cx = rng.random_range(0..cfg.width) as i64;
            let cy = rng.random_range(0..cfg.height) as i64;
            let dir = loop {
                let d: [f64; 3] = [unit.sample(&mut rng), unit.sample(&mut rng), unit.sample(&mut rng)];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if n > 1e-9 {
                    break d.map(|v| v / n);
                }
            };
            let reach = cfg.cutoff_radius.floor() as i64;
            for y in (cy - reach).max(0)..=(cy + reach).min(cfg.height as i64 - 1) {
                for x in (cx - reach).max(0)..=(cx + reach).min(cfg.width as i64 - 1) {
                    let d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) as f64;
                    if d2 > cfg.cutoff_radius * cfg.cutoff_radius {
                        continue;
                    }
                    let w = (-d2 / (cfg.sigma * cfg.sigma)).exp();
                    let p = Pixel::new(x as usize, y as usize);
                    if w > norm3(field.get(p)) {
                        field.set(p, dir.map(|v| (w * v) as f32));
                    }
                }
            }
        }
        Ok(())
    }

    fn add_vector_noise(&self, field: &mut MpmField, earlier: u32, later: u32) {
        let mut rng = keyed(self.noise.seed, tags::VECTOR_NOISE, u64::from(earlier), u64::from(later));
        let normal = Normal::new(0.0, self.noise.vector_noise_sigma).expect("finite sigma");
        for v in field.vectors.iter_mut() {
            let mut n = [0.0f64; 3];
            for (k, c) in n.iter_mut().enumerate() {
                *c = f64::from(v[k]) + normal.sample(&mut rng);
            }
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 1.0 {
                n.iter_mut().for_each(|c| *c /= len);
            }
            *v = n.map(|c| c as f32);
        }
    }
}

impl MpmProvider for DegradedProvider {
    fn grid(&self) -> (usize, usize) {
        self.inner.grid()
    }

    fn field(&self, earlier: u32, later: u32) -> Result<MpmField> {
        let dropped: HashSet<u32> = self
            .inner
            .cells_at(later)
            .iter()
            .map(|a| a.cell_id)
            .filter(|&c| self.is_dropped(c, later))
            .collect();
        let mut field = self.inner.encode_without(earlier, later, &dropped)?;
        if self.noise.clutter_rate > 0.0 {
            self.add_clutter(&mut field, earlier, later)?;
        }
        if self.noise.vector_noise_sigma > 0.0 {
            self.add_vector_noise(&mut field, earlier, later);
        }
        Ok(field)
    }
}
