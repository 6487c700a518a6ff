//! Cell detection as local maxima of a smoothed likelihood map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LikelihoodMap, Pixel};

/// A local maximum of the smoothed likelihood map at `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x: usize,
    pub y: usize,
    pub frame: u32,
    /// Smoothed likelihood at the peak.
    pub confidence: f64,
}

impl Detection {
    pub fn pixel(&self) -> Pixel {
        Pixel::new(self.x, self.y)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x as f64, self.y as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Standard deviation of the pre-smoothing kernel; 0 disables smoothing.
    pub smooth_sigma: f64,
    pub peak_threshold: f64,
    /// Half-width of the square suppression window.
    pub min_separation: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            smooth_sigma: 2.0,
            peak_threshold: 0.3,
            min_separation: 3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.smooth_sigma >= 0.0 && self.smooth_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smooth_sigma must be non-negative, got {}",
                self.smooth_sigma
            )));
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "peak_threshold must lie in (0, 1), got {}",
                self.peak_threshold
            )));
        }
        if self.min_separation < 1 {
            return Err(Error::InvalidConfig("min_separation must be at least 1".into()));
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian kernel truncated at three standard deviations.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Mirror index into `0..n` with the edge sample repeated (`d c b a | a b c d`).
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian smoothing with reflect padding.
pub fn smooth(map: &LikelihoodMap, smooth_sigma: f64) -> LikelihoodMap {
    if smooth_sigma <= 0.0 || map.values.is_empty() {
        return map.clone();
    }
    let k = gaussian_kernel(smooth_sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (map.width, map.height);

    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let src = &map.values[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * src[reflect(x as i64 + j as i64 - r, w)];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (j, kv) in k.iter().enumerate() {
            let sy = reflect(y as i64 + j as i64 - r, h);
            let src = &rows[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for x in 0..w {
                dst[x] += kv * src[x];
            }
        }
    }
    LikelihoodMap {
        width: w,
        height: h,
        values: out,
    }
}

/// Local maxima of an already smoothed map.
///
/// A pixel is kept when its value reaches `peak_threshold` and every other
/// pixel in its `(2 * min_separation + 1)^2` window is either smaller, or
/// equal and later in `(y, x)` order. Results are sorted by descending
/// confidence, then `(y, x)`.
pub fn local_maxima(smoothed: &LikelihoodMap, cfg: &DetectorConfig, frame: u32) -> Vec<Detection> {
    let (w, h) = (smoothed.width, smoothed.height);
    let m = cfg.min_separation;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = smoothed.values[y * w + x];
            if !(v >= cfg.peak_threshold) {
                continue;
            }
            let here = Pixel::new(x, y);
            let mut is_peak = true;
            'window: for qy in y.saturating_sub(m)..=(y + m).min(h - 1) {
                for qx in x.saturating_sub(m)..=(x + m).min(w - 1) {
                    let q = Pixel::new(qx, qy);
                    if q == here {
                        continue;
                    }
                    let u = smoothed.values[qy * w + qx];
                    if u > v || (u == v && q < here) {
                        is_peak = false;
                        break 'window;
                    }
                }
            }
            if is_peak {
                out.push(Detection {
                    x,
                    y,
                    frame,
                    confidence: v,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then((a.y, a.x).cmp(&(b.y, b.x)))
    });
    out
}

/// Smooths `map` and returns both the smoothed map and its peaks.
pub fn detect(map: &LikelihoodMap, cfg: &DetectorConfig, frame: u32) -> (LikelihoodMap, Vec<Detection>) {
    let smoothed = smooth(map, cfg.smooth_sigma);
    let peaks = local_maxima(&smoothed, cfg, frame);
    (smoothed, peaks)
}

pub fn find_peaks(map: &LikelihoodMap, cfg: &DetectorConfig, frame: u32) -> Vec<Detection> {
    detect(map, cfg, frame).1
}
