use std::collections::{BTreeMap, HashMap};

use crate::detector::{detect, Detection};
use crate::error::{Error, Result};
use crate::field::{likelihood_of, LikelihoodMap, MpmField, Pixel};
use crate::provider::MpmProvider;

use super::associate::{associate_frame, estimate_source, AssociationEvents};
use super::recover::{recover_terminated, RecoveryReport};
use super::{TrackId, TrackPoint, TrackRegistry, TrackerConfig};

/// What the tracker remembers about a processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    /// Smoothed likelihood map the frame's detections were taken from.
    pub smoothed: LikelihoodMap,
    /// Detection peak -> owning track.
    pub peaks: HashMap<Pixel, TrackId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: u32,
    pub detections: Vec<Detection>,
    pub events: AssociationEvents,
    pub recovery: RecoveryReport,
}

/// Online tracker over an [`MpmProvider`].
pub struct Tracker<P> {
    provider: P,
    cfg: TrackerConfig,
    registry: TrackRegistry,
    history: BTreeMap<u32, FrameState>,
    last_frame: Option<u32>,
}

impl<P: MpmProvider> Tracker<P> {
    pub fn new(provider: P, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Tracker {
            provider,
            cfg,
            registry: TrackRegistry::new(),
            history: BTreeMap::new(),
            last_frame: None,
        })
    }

    pub fn registry(&self) -> &TrackRegistry {
        &self.registry
    }

    pub fn into_registry(self) -> TrackRegistry {
        self.registry
    }

    pub fn frame_state(&self, frame: u32) -> Option<&FrameState> {
        self.history.get(&frame)
    }

    fn adjacent_field(&self, later: u32) -> Result<MpmField> {
        let earlier = later - 1;
        let field = match self.provider.field(earlier, later) {
            Err(Error::Unavailable { .. }) => return Err(Error::MissingField { earlier, later }),
            other => other?,
        };
        if (field.width, field.height) != self.provider.grid() || field.gap != 1 || field.frame_t != later {
            return Err(Error::DimensionMismatch(format!(
                "field ({earlier}, {later}) does not match the provider grid"
            )));
        }
        Ok(field)
    }

    /// Seeds tracks at `first_frame` from the positions decoded out of the
    /// field `(first_frame, first_frame + 1)`. Detections that decode to
    /// the same seed (a division in the first step) share one track.
    pub fn bootstrap(&mut self, first_frame: u32) -> Result<()> {
        let field = self.adjacent_field(first_frame + 1)?;
        let (_, dets) = detect(&likelihood_of(&field), &self.cfg.detector, first_frame + 1);
        let (w, h) = (field.width, field.height);
        let sep = self.cfg.detector.min_separation;

        let mut seeds: Vec<Pixel> = Vec::new();
        for d in &dets {
            let Ok((x, y)) = estimate_source(d, &field) else { continue };
            if x <= -1.0 || y <= -1.0 || x >= w as f64 || y >= h as f64 {
                continue;
            }
            let p = Pixel::nearest(x, y, w, h);
            let close = seeds
                .iter()
                .any(|s| s.x.abs_diff(p.x) <= sep && s.y.abs_diff(p.y) <= sep);
            if !close {
                seeds.push(p);
            }
        }

        let mut smoothed = LikelihoodMap::zeros(w, h);
        let mut peaks = HashMap::new();
        let s2 = self.cfg.seed_sigma * self.cfg.seed_sigma;
        let reach = (4.0 * self.cfg.seed_sigma).ceil() as i64;
        for p in seeds {
            let id = self
                .registry
                .create(TrackPoint::detected(first_frame, p.x as f64, p.y as f64), None);
            peaks.insert(p, id);
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (x, y) = (p.x as i64 + dx, p.y as i64 + dy);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let q = Pixel::new(x as usize, y as usize);
                    let v = (-((dx * dx + dy * dy) as f64) / s2).exp();
                    if v > smoothed.get(q) {
                        smoothed.set(q, v);
                    }
                }
            }
        }
        self.history.insert(first_frame, FrameState { smoothed, peaks });
        self.last_frame = Some(first_frame);
        Ok(())
    }

    /// Processes the frame after the last one: detect, associate, recover.
    pub fn step(&mut self) -> Result<FrameReport> {
        let prev = self
            .last_frame
            .ok_or_else(|| Error::InvalidInput("tracker was not bootstrapped".into()))?;
        let frame = prev + 1;
        let field = self.adjacent_field(frame)?;
        let (smoothed, detections) = detect(&likelihood_of(&field), &self.cfg.detector, frame);

        let prev_state = self
            .history
            .get(&prev)
            .ok_or_else(|| Error::Invariant(format!("no state for frame {prev}")))?;
        let mut events = associate_frame(
            &mut self.registry,
            &detections,
            &field,
            &prev_state.smoothed,
            &prev_state.peaks,
            &self.cfg,
        )?;

        let recovery = if self.cfg.recovery {
            let born: Vec<(TrackId, Detection)> =
                events.born().map(|(id, i)| (id, detections[i])).collect();
            recover_terminated(
                &mut self.registry,
                &born,
                frame,
                &self.history,
                &self.provider,
                &self.cfg,
            )?
        } else {
            self.registry
                .expire_terminated(frame, self.cfg.max_termination_age);
            RecoveryReport::default()
        };

        let remap = recovery.remap();
        for id in events.assigned.iter_mut() {
            if let Some(to) = remap.get(id) {
                *id = *to;
            }
        }
        let peaks = detections
            .iter()
            .zip(&events.assigned)
            .map(|(d, &id)| (d.pixel(), id))
            .collect();
        self.history.insert(frame, FrameState { smoothed, peaks });
        let keep = self.cfg.q.max(self.cfg.max_termination_age);
        self.history.retain(|&f, _| f + keep >= frame);
        self.last_frame = Some(frame);

        Ok(FrameReport {
            frame,
            detections,
            events,
            recovery,
        })
    }
}

/// Tracks frames `first_frame..=last_frame` and returns the final registry.
///
/// Every adjacent pair in the range must be available from the provider.
/// A range of a single frame has nothing to decode and yields an empty
/// registry.
pub fn track_sequence<P: MpmProvider>(
    provider: P,
    first_frame: u32,
    last_frame: u32,
    cfg: &TrackerConfig,
) -> Result<TrackRegistry> {
    let mut tracker = Tracker::new(provider, *cfg)?;
    if last_frame <= first_frame {
        return Ok(tracker.into_registry());
    }
    tracker.bootstrap(first_frame)?;
    for _ in first_frame + 1..=last_frame {
        tracker.step()?;
    }
    Ok(tracker.into_registry())
}
