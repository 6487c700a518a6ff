use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::provider::MpmProvider;

use super::associate::{climb, estimate_source};
use super::sequence::FrameState;
use super::{TrackId, TrackPoint, TrackRegistry, TrackStatus, TrackerConfig};

/// A terminated track re-linked to a track born at the current frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// The terminated track, now active again.
    pub track: TrackId,
    /// The freshly created track whose detection was spliced on; it no
    /// longer exists in the registry.
    pub absorbed: TrackId,
    pub gap: u32,
    /// Frames that received interpolated points.
    pub interpolated: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecoveryReport {
    pub recoveries: Vec<Recovery>,
    /// `(daughter, mother)`: divisions undone because a sibling was
    /// recovered; the remaining daughter now continues its mother.
    pub merged: Vec<(TrackId, TrackId)>,
}

impl RecoveryReport {
    /// Where each removed track's detection went.
    pub fn remap(&self) -> HashMap<TrackId, TrackId> {
        self.recoveries
            .iter()
            .map(|r| (r.absorbed, r.track))
            .chain(self.merged.iter().copied())
            .collect()
    }
}

/// Tries to re-link terminated tracks to the tracks born at `frame`.
///
/// Terminated tracks are visited in ascending termination frame. For a track
/// ending at `f_term` with `g = frame - f_term <= q`, the provider's field
/// `(f_term, frame)` decodes each newborn detection over `g` frames, and a
/// climb on the stored frame-`f_term` map must end on the track's own
/// endpoint peak. A match splices the newborn onto the old track and fills
/// the missing frames by linear interpolation. When the newborn was a
/// daughter the division is undone. Unavailable fields skip the candidate.
pub fn recover_terminated<P: MpmProvider + ?Sized>(
    registry: &mut TrackRegistry,
    new_cells: &[(TrackId, Detection)],
    frame: u32,
    history: &BTreeMap<u32, FrameState>,
    provider: &P,
    cfg: &TrackerConfig,
) -> Result<RecoveryReport> {
    registry.expire_terminated(frame, cfg.max_termination_age);
    let mut report = RecoveryReport::default();
    if new_cells.is_empty() || registry.terminated().is_empty() {
        return Ok(report);
    }

    let mut waiting: Vec<(TrackId, u32)> = registry.terminated().to_vec();
    waiting.sort_by_key(|&(id, last)| (last, id));
    let mut candidates: Vec<(TrackId, Detection)> = new_cells.to_vec();
    candidates.sort_by(|a, b| {
        b.1.confidence
            .total_cmp(&a.1.confidence)
            .then((a.1.y, a.1.x).cmp(&(b.1.y, b.1.x)))
    });
    let mut fields = HashMap::new();

    for (track, last) in waiting {
        if candidates.is_empty() {
            break;
        }
        let gap = frame - last;
        if gap == 0 || gap > cfg.q {
            continue;
        }
        let Some(state) = history.get(&last) else { continue };
        let Some(endpoint) = state
            .peaks
            .iter()
            .find(|(_, &id)| id == track)
            .map(|(&p, _)| p)
        else {
            continue;
        };
        if let Entry::Vacant(slot) = fields.entry(last) {
            match provider.field(last, frame) {
                Ok(f) => slot.insert(Some(f)),
                Err(Error::Unavailable { .. }) => slot.insert(None),
                Err(e) => return Err(e),
            };
        }
        let Some(field) = fields[&last].as_ref() else { continue };
        if field.gap != gap || field.width != state.smoothed.width || field.height != state.smoothed.height {
            return Err(Error::DimensionMismatch(format!(
                "provider returned an inconsistent field for ({last}, {frame})"
            )));
        }

        let hit = candidates.iter().position(|(_, det)| {
            estimate_source(det, field)
                .ok()
                .and_then(|src| climb(&state.smoothed, src, cfg.zero_confidence_eps))
                == Some(endpoint)
        });
        let Some(k) = hit else { continue };
        let (newborn, det) = candidates.remove(k);

        let start = *registry
            .get(track)
            .and_then(|t| t.last())
            .ok_or_else(|| Error::Invariant(format!("terminated track {track} has no points")))?;
        let mut interpolated = Vec::new();
        for step in 1..gap {
            let s = f64::from(step) / f64::from(gap);
            let f = last + step;
            registry.extend(
                track,
                TrackPoint {
                    frame: f,
                    x: start.x + s * (det.x as f64 - start.x),
                    y: start.y + s * (det.y as f64 - start.y),
                    interpolated: true,
                },
            )?;
            interpolated.push(f);
        }
        registry.extend(track, TrackPoint::detected(frame, det.x as f64, det.y as f64))?;
        registry.set_status(track, TrackStatus::Active);
        registry.remove(newborn);
        registry.diagnostics.recoveries += 1;
        report.recoveries.push(Recovery {
            track,
            absorbed: newborn,
            gap,
            interpolated,
        });

        if let Some(div) = registry.take_division_of(newborn) {
            undo_division(registry, div, newborn, frame, &mut candidates, &mut report)?;
        }
    }
    Ok(report)
}

fn undo_division(
    registry: &mut TrackRegistry,
    div: super::DivisionRecord,
    recovered: TrackId,
    frame: u32,
    candidates: &mut Vec<(TrackId, Detection)>,
    report: &mut RecoveryReport,
) -> Result<()> {
    registry.diagnostics.reverted_divisions += 1;
    let sibling = if div.daughters[0] == recovered {
        div.daughters[1]
    } else {
        div.daughters[0]
    };
    // The sibling may itself have been recovered already.
    match registry.remove(sibling) {
        Some(t) => {
            let p = t.points[0];
            registry.extend(div.mother, p)?;
            registry.set_status(div.mother, TrackStatus::Active);
            candidates.retain(|(id, _)| *id != sibling);
            report.merged.push((sibling, div.mother));
        }
        None => {
            registry.set_status(
                div.mother,
                TrackStatus::Terminated {
                    last_frame: frame - 1,
                },
            );
        }
    }
    Ok(())
}
