use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{csv_error, csv_writer, data_records, field, format_decimal, optional_field, real_field, record_line, TRACKS_HEADER};
use crate::error::{Error, Result};
use crate::tracker::{TrackId, TrackPoint, TrackRegistry, TrackStatus, Trajectory};

/// Writes one row per trajectory point, trajectories in id order.
pub fn write_tracks<W: Write>(writer: W, registry: &TrackRegistry) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(TRACKS_HEADER).map_err(csv_error)?;
    for t in registry.trajectories() {
        let parent = t.parent.map(|p| p.to_string()).unwrap_or_default();
        for p in &t.points {
            w.write_record([
                t.id.to_string(),
                p.frame.to_string(),
                format_decimal(p.x),
                format_decimal(p.y),
                u8::from(p.interpolated).to_string(),
                parent.clone(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(Error::Io)
}

/// Reads a tracks table into a registry of closed trajectories.
pub fn read_tracks<R: Read>(reader: R) -> Result<TrackRegistry> {
    let mut tracks: BTreeMap<u32, Trajectory> = BTreeMap::new();
    for rec in data_records(reader, &TRACKS_HEADER)? {
        let rec = rec?;
        let line = record_line(&rec);
        let id: u32 = field(&rec, 0, "track_id")?;
        let interpolated = match &rec[4] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line, format!("invalid interpolated flag `{other}`"))),
        };
        let point = TrackPoint {
            frame: field(&rec, 1, "frame")?,
            x: real_field(&rec, 2, "x")?,
            y: real_field(&rec, 3, "y")?,
            interpolated,
        };
        let parent = optional_field(&rec, 5, "parent_track")?.map(TrackId);
        let t = tracks.entry(id).or_insert_with(|| Trajectory {
            id: TrackId(id),
            birth_frame: point.frame,
            points: Vec::new(),
            parent,
            status: TrackStatus::Closed,
        });
        if t.parent != parent {
            return Err(Error::parse(line, format!("track {id} has inconsistent parents")));
        }
        if t.last_frame().is_some_and(|f| point.frame <= f) {
            return Err(Error::parse(line, format!("track {id} frames must increase")));
        }
        t.points.push(point);
    }
    TrackRegistry::from_trajectories(tracks.into_values())
}

pub fn read_tracks_file(path: impl AsRef<Path>) -> Result<TrackRegistry> {
    read_tracks(BufReader::new(File::open(path)?))
}

pub fn write_tracks_file(path: impl AsRef<Path>, registry: &TrackRegistry) -> Result<()> {
    write_tracks(BufWriter::new(File::create(path)?), registry)
}
