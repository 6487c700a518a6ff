use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{csv_error, csv_writer, data_records, field, format_decimal, optional_field, real_field, ANNOTATION_HEADER};
use crate::error::{Error, Result};
use crate::field::Annotation;

/// Parses an annotation table. Only the syntax is checked here; lineage and
/// grid bounds are checked by [`crate::field::validate_annotations`].
pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<Annotation>> {
    data_records(reader, &ANNOTATION_HEADER)?
        .map(|rec| {
            let rec = rec?;
            Ok(Annotation {
                frame: field(&rec, 0, "frame")?,
                cell_id: field(&rec, 1, "cell_id")?,
                x: real_field(&rec, 2, "x")?,
                y: real_field(&rec, 3, "y")?,
                parent_id: optional_field(&rec, 4, "parent_id")?,
            })
        })
        .collect()
}

pub fn write_annotations<W: Write>(writer: W, annotations: &[Annotation]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(ANNOTATION_HEADER).map_err(csv_error)?;
    for a in annotations {
        w.write_record([
            a.frame.to_string(),
            a.cell_id.to_string(),
            format_decimal(a.x),
            format_decimal(a.y),
            a.parent_id.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(Error::Io)
}

pub fn read_annotations_file(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    read_annotations(BufReader::new(File::open(path)?))
}

pub fn write_annotations_file(path: impl AsRef<Path>, annotations: &[Annotation]) -> Result<()> {
    write_annotations(BufWriter::new(File::create(path)?), annotations)
}
