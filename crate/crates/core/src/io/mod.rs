//! File formats.
//!
//! Text formats are comma-separated UTF-8 with a mandatory header row.
//! Reals are written with 9 significant digits so files diff cleanly and
//! re-writing a file that was read back reproduces it byte for byte.

mod annotations;
mod mpm;
mod tracks;

use csv::StringRecord;

use crate::error::{Error, Result};

pub use annotations::{read_annotations, read_annotations_file, write_annotations, write_annotations_file};
pub use mpm::{mpm_file_name, read_mpm, read_mpm_file, write_mpm, write_mpm_file, FileProvider, MPM_MAGIC};
pub use tracks::{read_tracks, read_tracks_file, write_tracks, write_tracks_file};

pub const ANNOTATION_HEADER: [&str; 5] = ["frame", "cell_id", "x", "y", "parent_id"];
pub const TRACKS_HEADER: [&str; 6] = ["track_id", "frame", "x", "y", "interpolated", "parent_track"];

/// Formats `v` with at most 9 significant digits in plain decimal notation,
/// without trailing zeros.
pub fn format_decimal(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();

    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', point - digits.len()));
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

fn csv_reader<R: std::io::Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn csv_writer<W: std::io::Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(writer)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::parse(line, format!("{other:?}")),
    }
}

fn record_line(record: &StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Iterates data records after checking the header. An empty input has no
/// records.
fn data_records<R: std::io::Read>(
    reader: R,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<StringRecord>>> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records().peekable();
    match records.peek() {
        None => {}
        Some(Err(_)) => {
            let e = records.next().unwrap().unwrap_err();
            return Err(csv_error(e));
        }
        Some(Ok(first)) => {
            if first.iter().ne(header.iter().copied()) {
                return Err(Error::parse(
                    record_line(first),
                    format!("expected header `{}`", header.join(",")),
                ));
            }
            records.next();
        }
    }
    let width = header.len();
    Ok(records
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|r| !matches!(r, Ok(rec) if rec.len() == 1 && rec[0].is_empty()))
        .map(move |r| {
            let rec = r.map_err(csv_error)?;
            if rec.len() != width {
                return Err(Error::parse(
                    record_line(&rec),
                    format!("expected {width} fields, found {}", rec.len()),
                ));
            }
            Ok(rec)
        }))
}

fn field<T: std::str::FromStr>(rec: &StringRecord, i: usize, name: &str) -> Result<T> {
    rec[i].parse().map_err(|_| {
        Error::parse(record_line(rec), format!("invalid {name} `{}`", &rec[i]))
    })
}

fn real_field(rec: &StringRecord, i: usize, name: &str) -> Result<f64> {
    let v: f64 = field(rec, i, name)?;
    if !v.is_finite() {
        return Err(Error::parse(record_line(rec), format!("{name} must be finite")));
    }
    Ok(v)
}

fn optional_field(rec: &StringRecord, i: usize, name: &str) -> Result<Option<u32>> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        field(rec, i, name).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(0.0), "0");
        assert_eq!(format_decimal(-0.0), "0");
        assert_eq!(format_decimal(12.5), "12.5");
        assert_eq!(format_decimal(100.0), "100");
        assert_eq!(format_decimal(123456789012.0), "123456789000");
        assert_eq!(format_decimal(1.0 / 3.0), "0.333333333");
        assert_eq!(format_decimal(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_decimal(0.000123), "0.000123");
        assert_eq!(format_decimal(255.999999999), "256");
    }

    #[test]
    fn decimals_are_stable_after_one_pass() {
        for v in [std::f64::consts::PI, 1e-7, 98765.4321123, -0.1, 7.0e20] {
            let s = format_decimal(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(format_decimal(back), s);
        }
    }
}
