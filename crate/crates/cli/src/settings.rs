//! Effective settings: defaults, overridden by the config file, overridden
//! by flags. Every command that writes files echoes them next to its output.

use std::fs;
use std::path::{Path, PathBuf};

use mpm_core::metrics::DetectionMatchConfig;
use mpm_core::simulator::{NoiseConfig, SimConfig};
use mpm_core::{EncoderConfig, TrackerConfig};
use serde::{Deserialize, Serialize};

use crate::args::{EncoderArgs, GridArgs, NoiseArgs, TrackerArgs};
use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            width: 256,
            height: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Encoder {
    pub sigma: f64,
    /// Four sigma when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_radius: Option<f64>,
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder {
            sigma: 6.0,
            cutoff_radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Encode {
    pub gap: u32,
    /// When set, every gap from 1 to `max_gap` is written and `gap` is ignored.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<u32>,
}

impl Default for Encode {
    fn default() -> Self {
        Encode { gap: 1, max_gap: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Render {
    pub scale: u32,
}

impl Default for Render {
    fn default() -> Self {
        Render { scale: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub grid: Grid,
    pub encoder: Encoder,
    pub encode: Encode,
    pub tracker: TrackerConfig,
    pub noise: NoiseConfig,
    pub sim: SimConfig,
    pub eval: DetectionMatchConfig,
    pub render: Render,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = fs::read_to_string(path).at(path)?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply_grid(&mut self, a: &GridArgs) {
        set(&mut self.grid.width, a.width);
        set(&mut self.grid.height, a.height);
    }

    pub fn apply_encoder(&mut self, a: &EncoderArgs) {
        set(&mut self.encoder.sigma, a.sigma);
        if a.cutoff.is_some() {
            self.encoder.cutoff_radius = a.cutoff;
        }
    }

    pub fn apply_tracker(&mut self, a: &TrackerArgs) {
        let t = &mut self.tracker;
        set(&mut t.q, a.q);
        set(&mut t.max_termination_age, a.max_age);
        set(&mut t.zero_confidence_eps, a.eps);
        if a.no_recovery {
            t.recovery = false;
        }
        set(&mut t.detector.smooth_sigma, a.smooth_sigma);
        set(&mut t.detector.peak_threshold, a.threshold);
        set(&mut t.detector.min_separation, a.min_separation);
    }

    pub fn apply_noise(&mut self, a: &NoiseArgs) {
        let n = &mut self.noise;
        set(&mut n.drop_prob, a.drop_prob);
        set(&mut n.max_consecutive_drops, a.max_drops);
        set(&mut n.vector_noise_sigma, a.vector_noise);
        set(&mut n.clutter_rate, a.clutter);
        set(&mut n.drop_frames, a.drop_frames.clone());
        set(&mut n.seed, a.noise_seed);
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            sigma: self.encoder.sigma,
            cutoff_radius: self.encoder.cutoff_radius.unwrap_or(4.0 * self.encoder.sigma),
            width: self.grid.width,
            height: self.grid.height,
        }
    }

    /// Writes the settings as `mpm-<command>.toml` into `dir`.
    pub fn echo(&self, dir: &Path, command: &str) -> Result<PathBuf> {
        let text = toml::to_string(self)
            .map_err(|e| CliError::Usage(format!("cannot record settings: {e}")))?;
        let path = dir.join(format!("mpm-{command}.toml"));
        fs::write(&path, text).at(&path)?;
        Ok(path)
    }
}

/// Directory holding `path`, for outputs given as file names.
pub fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_in_defaults() {
        let s: Settings = toml::from_str("[tracker]\nq = 3\n[grid]\nwidth = 64\n").unwrap();
        assert_eq!(s.tracker.q, 3);
        assert_eq!(s.tracker.max_termination_age, TrackerConfig::default().max_termination_age);
        assert_eq!(s.grid, Grid { width: 64, height: 256 });
        assert_eq!(s.encoder_config().cutoff_radius, 24.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("[tracker]\nqq = 3\n").is_err());
    }

    #[test]
    fn flags_win() {
        let mut s: Settings = toml::from_str("[encoder]\nsigma = 4.0\ncutoff_radius = 9.0\n").unwrap();
        s.apply_encoder(&EncoderArgs {
            sigma: Some(5.0),
            cutoff: None,
        });
        assert_eq!(s.encoder_config().sigma, 5.0);
        assert_eq!(s.encoder_config().cutoff_radius, 9.0);
    }

    #[test]
    fn echo_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Settings::default();
        s.noise.drop_frames = vec![3, 4];
        let path = s.echo(dir.path(), "track").unwrap();
        let back = Settings::load(Some(&path)).unwrap();
        assert_eq!(back, s);
    }
}
