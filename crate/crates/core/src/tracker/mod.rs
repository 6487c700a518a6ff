//! Online tracking by MPM decoding.
//!
//! Each frame is detected on the magnitude of the field `(t-1, t)`. Every
//! detection's vector is decoded into a position at `t-1`, which is then
//! climbed uphill on the smoothed likelihood map that produced the frame
//! `t-1` detections. Reaching a tracked peak continues that track, two
//! detections reaching the same peak register a division, and anything else
//! starts a new track. Tracks left without a detection are parked as
//! terminated and may be re-linked later through a longer-gap field.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::field::Annotation;

mod associate;
mod recover;
mod sequence;

pub use associate::{associate_frame, climb, estimate_source, AssociationEvents, DivisionEvent};
pub use recover::{recover_terminated, Recovery, RecoveryReport};
pub use sequence::{track_sequence, FrameReport, FrameState, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
    /// Filled in by gap recovery rather than detected.
    pub interpolated: bool,
}

impl TrackPoint {
    pub fn detected(frame: u32, x: f64, y: f64) -> Self {
        TrackPoint {
            frame,
            x,
            y,
            interpolated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    /// No detection after `last_frame`; still eligible for recovery.
    Terminated { last_frame: u32 },
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: TrackId,
    pub birth_frame: u32,
    pub points: Vec<TrackPoint>,
    pub parent: Option<TrackId>,
    pub status: TrackStatus,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrackPoint> {
        self.points.last()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.points.last().map(|p| p.frame)
    }

    pub fn point_at(&self, frame: u32) -> Option<&TrackPoint> {
        let first = self.points.first()?.frame;
        let i = frame.checked_sub(first)? as usize;
        // Fast path for gap-free tracks, fall back to a search otherwise.
        match self.points.get(i) {
            Some(p) if p.frame == frame => Some(p),
            _ => self.points.iter().find(|p| p.frame == frame),
        }
    }

    pub fn is_gap_free(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].frame == w[0].frame + 1)
            && self.points.first().is_none_or(|p| p.frame == self.birth_frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionRecord {
    pub mother: TrackId,
    pub daughters: [TrackId; 2],
    /// Birth frame of the daughters.
    pub frame: u32,
}

/// Counters for situations the association rules resolve heuristically.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Detections beyond the first two that climbed to an already claimed
    /// peak and were started as new tracks instead.
    pub excess_division_claims: usize,
    pub recoveries: usize,
    pub reverted_divisions: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackRegistry {
    trajectories: BTreeMap<TrackId, Trajectory>,
    next_id: u32,
    terminated: Vec<(TrackId, u32)>,
    divisions: Vec<DivisionRecord>,
    pub diagnostics: Diagnostics,
}

impl TrackRegistry {
    pub fn new() -> Self {
        TrackRegistry {
            next_id: 1,
            ..Default::default()
        }
    }

    /// Builds a closed registry from finished trajectories, e.g. ground truth
    /// or a tracks file. Division records are derived from parent links.
    pub fn from_trajectories(trajectories: impl IntoIterator<Item = Trajectory>) -> Result<Self> {
        let mut reg = TrackRegistry::new();
        for t in trajectories {
            if t.id.0 == 0 {
                return Err(Error::InvalidInput("track ids must be positive".into()));
            }
            reg.next_id = reg.next_id.max(t.id.0 + 1);
            if reg.trajectories.insert(t.id, t).is_some() {
                return Err(Error::InvalidInput("duplicate track id".into()));
            }
        }
        let mut by_mother: BTreeMap<TrackId, Vec<&Trajectory>> = BTreeMap::new();
        for t in reg.trajectories.values() {
            if let Some(m) = t.parent {
                if !reg.trajectories.contains_key(&m) {
                    return Err(Error::InvalidInput(format!(
                        "track {} refers to unknown parent {m}",
                        t.id
                    )));
                }
                by_mother.entry(m).or_default().push(t);
            }
        }
        let mut divisions = Vec::new();
        for (mother, kids) in by_mother {
            for pair in kids.chunks(2) {
                if let [a, b] = pair {
                    divisions.push(DivisionRecord {
                        mother,
                        daughters: [a.id, b.id],
                        frame: a.birth_frame,
                    });
                }
            }
        }
        reg.divisions = divisions;
        Ok(reg)
    }

    /// One trajectory per annotated cell, keyed by `cell_id`.
    pub fn from_annotations(annotations: &[Annotation]) -> Result<Self> {
        let mut cells: BTreeMap<u32, Vec<&Annotation>> = BTreeMap::new();
        for a in annotations {
            cells.entry(a.cell_id).or_default().push(a);
        }
        let trajectories = cells.into_iter().map(|(id, mut rows)| {
            rows.sort_by_key(|a| a.frame);
            Trajectory {
                id: TrackId(id),
                birth_frame: rows[0].frame,
                parent: rows[0].parent_id.map(TrackId),
                points: rows
                    .iter()
                    .map(|a| TrackPoint::detected(a.frame, a.x, a.y))
                    .collect(),
                status: TrackStatus::Closed,
            }
        });
        Self::from_trajectories(trajectories)
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: TrackId) -> Option<&Trajectory> {
        self.trajectories.get(&id)
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.values()
    }

    pub fn next_id(&self) -> TrackId {
        TrackId(self.next_id)
    }

    /// Terminated tracks with their last frame, in termination order.
    pub fn terminated(&self) -> &[(TrackId, u32)] {
        &self.terminated
    }

    pub fn divisions(&self) -> &[DivisionRecord] {
        &self.divisions
    }

    /// Active tracks whose last point is at `frame`.
    pub fn active_at(&self, frame: u32) -> Vec<TrackId> {
        self.trajectories
            .values()
            .filter(|t| t.status == TrackStatus::Active && t.last_frame() == Some(frame))
            .map(|t| t.id)
            .collect()
    }

    pub(crate) fn create(&mut self, point: TrackPoint, parent: Option<TrackId>) -> TrackId {
        let id = TrackId(self.next_id);
        self.next_id += 1;
        self.trajectories.insert(
            id,
            Trajectory {
                id,
                birth_frame: point.frame,
                points: vec![point],
                parent,
                status: TrackStatus::Active,
            },
        );
        id
    }

    pub(crate) fn extend(&mut self, id: TrackId, point: TrackPoint) -> Result<()> {
        let t = self
            .trajectories
            .get_mut(&id)
            .ok_or_else(|| Error::Invariant(format!("unknown track {id}")))?;
        if t.last_frame().is_some_and(|f| f + 1 != point.frame) {
            return Err(Error::Invariant(format!(
                "track {id} extended out of order at frame {}",
                point.frame
            )));
        }
        t.points.push(point);
        Ok(())
    }

    pub(crate) fn set_status(&mut self, id: TrackId, status: TrackStatus) {
        if let Some(t) = self.trajectories.get_mut(&id) {
            t.status = status;
        }
        self.terminated.retain(|&(tid, _)| tid != id);
        if let TrackStatus::Terminated { last_frame } = status {
            self.terminated.push((id, last_frame));
        }
    }

    pub(crate) fn remove(&mut self, id: TrackId) -> Option<Trajectory> {
        self.terminated.retain(|&(tid, _)| tid != id);
        self.trajectories.remove(&id)
    }

    pub(crate) fn record_division(&mut self, record: DivisionRecord) {
        self.divisions.push(record);
    }

    pub(crate) fn take_division_of(&mut self, daughter: TrackId) -> Option<DivisionRecord> {
        let i = self
            .divisions
            .iter()
            .position(|d| d.daughters.contains(&daughter))?;
        Some(self.divisions.remove(i))
    }

    /// Closes terminated tracks whose gap to `frame` exceeds `max_age`.
    pub(crate) fn expire_terminated(&mut self, frame: u32, max_age: u32) {
        let expired: Vec<TrackId> = self
            .terminated
            .iter()
            .filter(|&&(_, last)| frame.saturating_sub(last) > max_age)
            .map(|&(id, _)| id)
            .collect();
        for id in expired {
            self.set_status(id, TrackStatus::Closed);
        }
    }

    /// Checks the structural invariants of a tracker-produced registry.
    pub fn check_invariants(&self) -> Result<()> {
        for t in self.trajectories.values() {
            if t.id.0 >= self.next_id {
                return Err(Error::Invariant(format!("track {} >= next id", t.id)));
            }
            if t.points.is_empty() || !t.is_gap_free() {
                return Err(Error::Invariant(format!("track {} has gaps", t.id)));
            }
            if let Some(p) = t.parent {
                let mother = self
                    .trajectories
                    .get(&p)
                    .ok_or_else(|| Error::Invariant(format!("track {} has unknown parent", t.id)))?;
                if mother.last_frame().map(|f| f + 1) != Some(t.birth_frame) {
                    return Err(Error::Invariant(format!(
                        "track {} is not born right after its parent {p} ends",
                        t.id
                    )));
                }
                if p >= t.id {
                    // Parents are always created first, which rules out cycles.
                    return Err(Error::Invariant(format!("track {} precedes its parent", t.id)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Largest frame gap bridged when re-linking a terminated track.
    pub q: u32,
    /// Terminated tracks older than this many frames are closed for good.
    pub max_termination_age: u32,
    /// Likelihood at or below this counts as "no cell here".
    pub zero_confidence_eps: f64,
    pub recovery: bool,
    /// Spread of the blobs drawn at the seed positions of the first frame.
    pub seed_sigma: f64,
    pub detector: DetectorConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            q: 5,
            max_termination_age: 5,
            zero_confidence_eps: 1e-3,
            recovery: true,
            seed_sigma: 3.0,
            detector: DetectorConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.q < 1 {
            return Err(Error::InvalidConfig("q must be at least 1".into()));
        }
        if self.max_termination_age < self.q {
            return Err(Error::InvalidConfig(format!(
                "max_termination_age {} must be at least q = {}",
                self.max_termination_age, self.q
            )));
        }
        if !(self.zero_confidence_eps > 0.0) {
            return Err(Error::InvalidConfig("zero_confidence_eps must be positive".into()));
        }
        if !(self.seed_sigma > 0.0) {
            return Err(Error::InvalidConfig("seed_sigma must be positive".into()));
        }
        Ok(())
    }
}
