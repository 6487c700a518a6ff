use std::collections::{BTreeMap, HashMap};

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::field::{LikelihoodMap, MpmField, Pixel};

use super::{DivisionRecord, TrackId, TrackPoint, TrackRegistry, TrackStatus, TrackerConfig};

/// Decodes the position at frame `det.frame - field.gap` from the vector
/// stored at the detection pixel: `(x, y) + gap * (vx, vy) / vt`.
pub fn estimate_source(det: &Detection, field: &MpmField) -> Result<(f64, f64)> {
    let p = det.pixel();
    if !field.contains(p) {
        return Err(Error::DimensionMismatch(format!(
            "detection ({}, {}) outside {}x{} field",
            p.x, p.y, field.width, field.height
        )));
    }
    let [vx, vy, vt] = field.get(p).map(f64::from);
    if !(vt > 0.0) {
        return Err(Error::NoMotion { x: p.x, y: p.y });
    }
    let scale = f64::from(field.gap) / vt;
    Ok((p.x as f64 + vx * scale, p.y as f64 + vy * scale))
}

/// Hill-climbs from `start` to a local maximum of `map`, stepping to the
/// largest strictly greater 8-neighbour (ties to the smaller `(y, x)`).
///
/// Positions up to one pixel outside the grid are clamped onto it; farther
/// out, or where the starting value is at most `eps`, there is no cell to
/// climb to and `None` is returned.
pub fn climb(map: &LikelihoodMap, start: (f64, f64), eps: f64) -> Option<Pixel> {
    let (x, y) = start;
    let (w, h) = (map.width as f64, map.height as f64);
    if map.values.is_empty() || !x.is_finite() || !y.is_finite() {
        return None;
    }
    if x <= -1.0 || y <= -1.0 || x >= w || y >= h {
        return None;
    }
    let mut here = Pixel::nearest(x, y, map.width, map.height);
    let mut value = map.get(here);
    if !(value > eps) {
        return None;
    }
    loop {
        let mut best: Option<(Pixel, f64)> = None;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = here.x as i64 + dx;
                let ny = here.y as i64 + dy;
                if nx < 0 || ny < 0 || nx >= map.width as i64 || ny >= map.height as i64 {
                    continue;
                }
                let q = Pixel::new(nx as usize, ny as usize);
                let v = map.get(q);
                // Neighbours are visited in (y, x) order, so strict `>` keeps
                // the smaller pixel on ties.
                if v > value && best.is_none_or(|(_, b)| v > b) {
                    best = Some((q, v));
                }
            }
        }
        match best {
            Some((q, v)) => {
                here = q;
                value = v;
            }
            None => return Some(here),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionEvent {
    pub mother: TrackId,
    /// `(new track, detection index)` for both daughters.
    pub daughters: [(TrackId, usize); 2],
}

/// What happened to each detection of one frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssociationEvents {
    /// `(extended track, detection index)`.
    pub continuations: Vec<(TrackId, usize)>,
    /// `(new track, detection index)`, excluding daughters.
    pub new_cells: Vec<(TrackId, usize)>,
    pub divisions: Vec<DivisionEvent>,
    /// Active tracks that received no detection and were parked.
    pub terminated: Vec<TrackId>,
    /// Track that owns each detection after this frame, by detection index.
    pub assigned: Vec<TrackId>,
    /// Claims on one peak beyond the two daughters.
    pub excess_claims: usize,
}

impl AssociationEvents {
    /// Tracks born this frame, with their detection index.
    pub fn born(&self) -> impl Iterator<Item = (TrackId, usize)> + '_ {
        self.new_cells
            .iter()
            .copied()
            .chain(self.divisions.iter().flat_map(|d| d.daughters))
    }
}

/// Associates the detections of frame `t = field.frame_t` with the tracks
/// that end at `t - 1` and applies the result to `registry`.
///
/// `prev_likelihood` is the smoothed map the frame `t - 1` detections came
/// from and `peak_to_track` maps each of those peaks to its track.
/// Detections are processed by descending confidence. Climbs ending on a
/// peak that has no track are treated like zero confidence.
pub fn associate_frame(
    registry: &mut TrackRegistry,
    detections: &[Detection],
    field: &MpmField,
    prev_likelihood: &LikelihoodMap,
    peak_to_track: &HashMap<Pixel, TrackId>,
    cfg: &TrackerConfig,
) -> Result<AssociationEvents> {
    let t = field.frame_t;
    if field.width != prev_likelihood.width || field.height != prev_likelihood.height {
        return Err(Error::DimensionMismatch(
            "field and previous likelihood map differ in size".into(),
        ));
    }
    if field.gap != 1 {
        return Err(Error::InvalidInput(format!(
            "frame association needs an adjacent field, got gap {}",
            field.gap
        )));
    }
    let prev_frame = t - 1;

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&detections[a], &detections[b]);
        db.confidence
            .total_cmp(&da.confidence)
            .then((da.y, da.x).cmp(&(db.y, db.x)))
    });

    let mut claims: BTreeMap<TrackId, Vec<usize>> = BTreeMap::new();
    let mut unclaimed = Vec::new();
    for &i in &order {
        let det = &detections[i];
        if det.frame != t {
            return Err(Error::InvalidInput(format!(
                "detection at frame {} passed for frame {t}",
                det.frame
            )));
        }
        let owner = match estimate_source(det, field) {
            Ok(src) => climb(prev_likelihood, src, cfg.zero_confidence_eps)
                .and_then(|peak| peak_to_track.get(&peak).copied())
                .filter(|id| {
                    registry.get(*id).is_some_and(|tr| {
                        tr.status == TrackStatus::Active && tr.last_frame() == Some(prev_frame)
                    })
                }),
            Err(Error::NoMotion { .. }) => None,
            Err(e) => return Err(e),
        };
        match owner {
            Some(id) => claims.entry(id).or_default().push(i),
            None => unclaimed.push(i),
        }
    }

    let mut events = AssociationEvents {
        assigned: vec![TrackId(0); detections.len()],
        ..Default::default()
    };
    let point = |i: usize| {
        let d = &detections[i];
        TrackPoint::detected(t, d.x as f64, d.y as f64)
    };

    for (&track, dets) in &claims {
        match dets.as_slice() {
            [only] => {
                registry.extend(track, point(*only))?;
                events.continuations.push((track, *only));
                events.assigned[*only] = track;
            }
            [first, second, rest @ ..] => {
                let a = registry.create(point(*first), Some(track));
                let b = registry.create(point(*second), Some(track));
                registry.set_status(track, TrackStatus::Closed);
                registry.record_division(DivisionRecord {
                    mother: track,
                    daughters: [a, b],
                    frame: t,
                });
                events.divisions.push(DivisionEvent {
                    mother: track,
                    daughters: [(a, *first), (b, *second)],
                });
                events.assigned[*first] = a;
                events.assigned[*second] = b;
                events.excess_claims += rest.len();
                unclaimed.extend_from_slice(rest);
            }
            [] => unreachable!("claims are created with one detection"),
        }
    }

    unclaimed.sort_by_key(|i| order.iter().position(|o| o == i));
    for i in unclaimed {
        let id = registry.create(point(i), None);
        events.new_cells.push((id, i));
        events.assigned[i] = id;
    }

    for id in registry.active_at(prev_frame) {
        registry.set_status(
            id,
            TrackStatus::Terminated {
                last_frame: prev_frame,
            },
        );
        events.terminated.push(id);
    }
    registry.diagnostics.excess_division_claims += events.excess_claims;
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{detect, DetectorConfig};
    use crate::field::{encode_individual, encode_mpm, likelihood_of, Annotation, EncoderConfig};

    fn enc() -> EncoderConfig {
        EncoderConfig::new(64, 64)
    }

    fn det(x: usize, y: usize, frame: u32) -> Detection {
        Detection {
            x,
            y,
            frame,
            confidence: 1.0,
        }
    }

    #[test]
    fn stationary_vector_decodes_in_place() {
        let mut f = MpmField::zeros(20, 20, 4, 1);
        f.set(Pixel::new(5, 6), [0.0, 0.0, 0.37]);
        assert_eq!(estimate_source(&det(5, 6, 4), &f).unwrap(), (5.0, 6.0));
    }

    #[test]
    fn decodes_encoded_displacement() {
        let a_prev = Annotation::new(1, 0, 7.0, 14.0);
        let a_t = Annotation::new(1, 1, 10.0, 10.0);
        let f = encode_individual(&a_t, &a_prev, &enc(), 1).unwrap();
        let (x, y) = estimate_source(&det(10, 10, 1), &f).unwrap();
        assert!((x - 7.0).abs() < 1e-5 && (y - 14.0).abs() < 1e-5, "{x} {y}");

        // Hand-built triple from the same displacement.
        let mut g = MpmField::zeros(20, 20, 1, 1);
        g.set(Pixel::new(10, 10), [-0.58835, 0.78446, 0.19612]);
        let (x, y) = estimate_source(&det(10, 10, 1), &g).unwrap();
        assert!((x - 7.0).abs() < 1e-3 && (y - 14.0).abs() < 1e-3);
    }

    #[test]
    fn decodes_over_a_longer_gap() {
        let a_prev = Annotation::new(1, 2, 7.0, 14.0);
        let a_t = Annotation::new(1, 5, 10.0, 10.0);
        let f = encode_individual(&a_t, &a_prev, &enc(), 3).unwrap();
        let (x, y) = estimate_source(&det(10, 10, 5), &f).unwrap();
        assert!((x - 7.0).abs() < 1e-5 && (y - 14.0).abs() < 1e-5);
    }

    #[test]
    fn zero_vector_has_no_motion() {
        let f = MpmField::zeros(8, 8, 1, 1);
        assert!(matches!(
            estimate_source(&det(3, 3, 1), &f),
            Err(Error::NoMotion { x: 3, y: 3 })
        ));
    }

    fn blob_map(cx: f64, cy: f64) -> LikelihoodMap {
        let mut m = LikelihoodMap::zeros(40, 40);
        for y in 0..40 {
            for x in 0..40 {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                m.set(Pixel::new(x, y), (-d2 / 36.0).exp());
            }
        }
        m
    }

    #[test]
    fn climb_fixed_point_and_zero_region() {
        let m = blob_map(20.0, 20.0);
        assert_eq!(climb(&m, (20.0, 20.0), 1e-3), Some(Pixel::new(20, 20)));
        let z = LikelihoodMap::zeros(10, 10);
        assert_eq!(climb(&z, (4.0, 4.0), 1e-3), None);
    }

    #[test]
    fn climb_reaches_global_maximum_of_a_blob() {
        let m = blob_map(22.0, 17.0);
        // Reference: the explicit argmax of the grid.
        let argmax = (0..m.values.len())
            .max_by(|&a, &b| m.values[a].total_cmp(&m.values[b]))
            .unwrap();
        let expected = Pixel::new(argmax % 40, argmax / 40);
        assert_eq!(expected, Pixel::new(22, 17));
        for start in [(15.0, 12.0), (30.2, 20.7), (22.0, 25.0), (17.4, 17.0)] {
            assert_eq!(climb(&m, start, 1e-3), Some(expected), "{start:?}");
        }
    }

    #[test]
    fn climb_clamps_near_border_only() {
        let m = blob_map(0.0, 10.0);
        assert_eq!(climb(&m, (-0.6, 10.0), 1e-3), Some(Pixel::new(0, 10)));
        assert_eq!(climb(&m, (-1.5, 10.0), 1e-3), None);
        assert_eq!(climb(&m, (40.5, 10.0), 1e-3), None);
    }

    /// Registry with one track per `(x, y)` at frame 0 and the matching
    /// frame-0 state.
    fn seeded(
        cells: &[(f64, f64)],
    ) -> (TrackRegistry, LikelihoodMap, HashMap<Pixel, TrackId>, EncoderConfig) {
        let enc = EncoderConfig {
            sigma: 4.0,
            cutoff_radius: 8.0,
            width: 64,
            height: 64,
        };
        let pairs: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                let a = Annotation::new(i as u32 + 1, 1, x, y);
                (a, Annotation { frame: 0, ..a })
            })
            .collect();
        let f = encode_mpm(&pairs, &enc, 1, 1).unwrap();
        let (smoothed, dets) = detect(&likelihood_of(&f), &DetectorConfig::default(), 0);
        let mut reg = TrackRegistry::new();
        let mut peaks = HashMap::new();
        for d in &dets {
            let id = reg.create(TrackPoint::detected(0, d.x as f64, d.y as f64), None);
            peaks.insert(d.pixel(), id);
        }
        (reg, smoothed, peaks, enc)
    }

    #[test]
    fn one_to_one_continuation() {
        let (mut reg, prev, peaks, enc) = seeded(&[(20.0, 20.0)]);
        let a_prev = Annotation::new(1, 0, 20.0, 20.0);
        let a_t = Annotation::new(1, 1, 23.0, 21.0);
        let f = encode_mpm(&[(a_t, a_prev)], &enc, 1, 1).unwrap();
        let (_, dets) = detect(&likelihood_of(&f), &DetectorConfig::default(), 1);
        let ev = associate_frame(&mut reg, &dets, &f, &prev, &peaks, &TrackerConfig::default()).unwrap();
        assert_eq!(ev.continuations.len(), 1);
        assert!(ev.new_cells.is_empty() && ev.divisions.is_empty() && ev.terminated.is_empty());
        let t = reg.get(TrackId(1)).unwrap();
        assert_eq!(t.points.len(), 2);
        assert_eq!((t.points[1].x, t.points[1].y), (23.0, 21.0));
    }

    #[test]
    fn two_detections_on_one_peak_divide() {
        let (mut reg, prev, peaks, enc) = seeded(&[(30.0, 30.0)]);
        let mother = Annotation::new(1, 0, 30.0, 30.0);
        let d1 = Annotation::new(2, 1, 20.0, 30.0).with_parent(1);
        let d2 = Annotation::new(3, 1, 40.0, 30.0).with_parent(1);
        let f = encode_mpm(&[(d1, mother), (d2, mother)], &enc, 1, 1).unwrap();
        let (_, dets) = detect(&likelihood_of(&f), &DetectorConfig::default(), 1);
        assert_eq!(dets.len(), 2);
        let ev = associate_frame(&mut reg, &dets, &f, &prev, &peaks, &TrackerConfig::default()).unwrap();
        assert_eq!(ev.divisions.len(), 1);
        assert!(ev.continuations.is_empty() && ev.new_cells.is_empty());
        let div = ev.divisions[0];
        assert_eq!(div.mother, TrackId(1));
        for (id, _) in div.daughters {
            assert_eq!(reg.get(id).unwrap().parent, Some(TrackId(1)));
            assert_eq!(reg.get(id).unwrap().birth_frame, 1);
        }
        assert_eq!(reg.get(TrackId(1)).unwrap().status, TrackStatus::Closed);
        assert_eq!(reg.divisions().len(), 1);
        reg.check_invariants().unwrap();
    }

    #[test]
    fn source_on_empty_likelihood_starts_a_new_track() {
        let (mut reg, prev, peaks, enc) = seeded(&[(10.0, 10.0)]);
        // The existing cell vanishes; a new one appears far away.
        let a_t = Annotation::new(9, 1, 50.0, 50.0);
        let f = encode_mpm(&[(a_t, Annotation { frame: 0, ..a_t })], &enc, 1, 1).unwrap();
        let (_, dets) = detect(&likelihood_of(&f), &DetectorConfig::default(), 1);
        let ev = associate_frame(&mut reg, &dets, &f, &prev, &peaks, &TrackerConfig::default()).unwrap();
        assert_eq!(ev.new_cells.len(), 1);
        assert!(ev.continuations.is_empty());
        let new = reg.get(ev.new_cells[0].0).unwrap();
        assert_eq!(new.parent, None);
        assert_eq!(ev.terminated, vec![TrackId(1)]);
        assert_eq!(reg.terminated(), &[(TrackId(1), 0)]);
    }

    #[test]
    fn third_claimant_becomes_a_new_cell() {
        let (mut reg, prev, peaks, _) = seeded(&[(30.0, 30.0)]);
        let mut f = MpmField::zeros(64, 64, 1, 1);
        let mut dets = vec![];
        for (i, x) in [22usize, 30, 38].into_iter().enumerate() {
            dets.push(Detection {
                x,
                y: 40,
                frame: 1,
                confidence: 0.9 - 0.1 * i as f64,
            });
        }
        // Point the vectors at (30, 30) over the 10 px vertical offset.
        for d in &dets {
            let dx = 30.0 - d.x as f32;
            let n = (dx * dx + 100.0 + 1.0).sqrt();
            f.set(d.pixel(), [dx / n, -10.0 / n, 1.0 / n]);
        }
        let ev = associate_frame(&mut reg, &dets, &f, &prev, &peaks, &TrackerConfig::default()).unwrap();
        assert_eq!(ev.divisions.len(), 1);
        assert_eq!(ev.new_cells.len(), 1);
        assert_eq!(ev.excess_claims, 1);
        let daughters: Vec<usize> = ev.divisions[0].daughters.iter().map(|d| d.1).collect();
        assert_eq!(daughters, vec![0, 1]);
        assert_eq!(ev.new_cells[0].1, 2);
        assert_eq!(reg.diagnostics.excess_division_claims, 1);
    }
}
