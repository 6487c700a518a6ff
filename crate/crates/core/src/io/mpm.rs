use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::MpmField;
use crate::provider::MpmProvider;

pub const MPM_MAGIC: [u8; 4] = *b"MPM1";

/// `mpm_{earlier:06}_{later:06}.mpm`
pub fn mpm_file_name(earlier: u32, later: u32) -> String {
    format!("mpm_{earlier:06}_{later:06}.mpm")
}

fn parse_file_name(name: &str) -> Option<(u32, u32)> {
    let stem = name.strip_prefix("mpm_")?.strip_suffix(".mpm")?;
    let (a, b) = stem.split_once('_')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

pub fn write_mpm<W: Write>(mut writer: W, field: &MpmField) -> Result<()> {
    let dims = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidInput(format!("dimension {v} exceeds u32")))
    };
    writer.write_all(&MPM_MAGIC)?;
    for v in [dims(field.width)?, dims(field.height)?, field.frame_t, field.gap] {
        writer.write_all(&v.to_le_bytes())?;
    }
    let mut payload = Vec::with_capacity(field.vectors.len() * 12);
    for v in &field.vectors {
        for c in v {
            payload.extend_from_slice(&c.to_le_bytes());
        }
    }
    writer.write_all(&payload)?;
    writer.flush()?;
    Ok(())
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::InvalidInput("MPM file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_mpm<R: Read>(mut reader: R) -> Result<MpmField> {
    let mut head = [0u8; 20];
    reader.read_exact(&mut head).map_err(truncated)?;
    if head[..4] != MPM_MAGIC {
        return Err(Error::InvalidInput("not an MPM1 file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (width, height, frame_t, gap) = (word(0) as usize, word(1) as usize, word(2), word(3));
    if gap == 0 || gap > frame_t {
        return Err(Error::InvalidInput(format!(
            "MPM header has gap {gap} for frame {frame_t}"
        )));
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(12))
        .ok_or_else(|| Error::InvalidInput("MPM dimensions overflow".into()))?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != len {
        return Err(Error::InvalidInput(format!(
            "MPM payload has {} bytes, expected {len}",
            payload.len()
        )));
    }
    let vectors = payload
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[4 * i..4 * i + 4].try_into().unwrap());
            [f(0), f(1), f(2)]
        })
        .collect();
    Ok(MpmField {
        width,
        height,
        frame_t,
        gap,
        vectors,
    })
}

pub fn read_mpm_file(path: impl AsRef<Path>) -> Result<MpmField> {
    read_mpm(BufReader::new(File::open(path)?))
}

pub fn write_mpm_file(path: impl AsRef<Path>, field: &MpmField) -> Result<()> {
    write_mpm(BufWriter::new(File::create(path)?), field)
}

/// Serves fields stored as `mpm_{earlier:06}_{later:06}.mpm` files in one
/// directory.
#[derive(Debug, Clone)]
pub struct FileProvider {
    files: BTreeMap<(u32, u32), PathBuf>,
    grid: (usize, usize),
}

impl FileProvider {
    /// Indexes `dir`. The grid is taken from the first file; an empty
    /// directory gives a provider with no fields and a 0x0 grid.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            if let Some(key) = name.to_str().and_then(parse_file_name) {
                files.insert(key, entry.path());
            }
        }
        let grid = match files.values().next() {
            Some(path) => {
                let f = read_mpm_file(path)?;
                (f.width, f.height)
            }
            None => (0, 0),
        };
        Ok(FileProvider { files, grid })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.files.keys().copied()
    }

    /// Smallest and largest frame named by any file.
    pub fn frame_range(&self) -> Option<(u32, u32)> {
        let first = self.files.keys().map(|k| k.0).min()?;
        let last = self.files.keys().map(|k| k.1).max()?;
        Some((first, last))
    }
}

impl MpmProvider for FileProvider {
    fn grid(&self) -> (usize, usize) {
        self.grid
    }

    fn field(&self, earlier: u32, later: u32) -> Result<MpmField> {
        let path = self
            .files
            .get(&(earlier, later))
            .ok_or(Error::Unavailable { earlier, later })?;
        let f = read_mpm_file(path)?;
        if f.frame_t != later || f.gap != later - earlier || (f.width, f.height) != self.grid {
            return Err(Error::DimensionMismatch(format!(
                "{} does not hold a {}x{} field for ({earlier}, {later})",
                path.display(),
                self.grid.0,
                self.grid.1
            )));
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Pixel;

    fn sample() -> MpmField {
        let mut f = MpmField::zeros(3, 2, 7, 2);
        f.set(Pixel::new(1, 1), [0.25, -0.5, f32::MIN_POSITIVE]);
        f.set(Pixel::new(2, 0), [-0.0, 1.0, 0.125]);
        f
    }

    #[test]
    fn layout() {
        let mut buf = Vec::new();
        write_mpm(&mut buf, &sample()).unwrap();
        assert_eq!(buf.len(), 20 + 12 * 6);
        assert_eq!(&buf[..4], b"MPM1");
        assert_eq!(&buf[4..8], &[3, 0, 0, 0]);
        assert_eq!(&buf[16..20], &[2, 0, 0, 0]);
        let back = read_mpm(&buf[..]).unwrap();
        assert_eq!(back.vectors.iter().flatten().map(|c| c.to_bits()).collect::<Vec<_>>(),
                   sample().vectors.iter().flatten().map(|c| c.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        write_mpm(&mut buf, &sample()).unwrap();
        assert!(matches!(read_mpm(&buf[..buf.len() - 1]), Err(Error::InvalidInput(_))));
        let mut longer = buf.clone();
        longer.push(0);
        assert!(read_mpm(&longer[..]).is_err());
        buf[0] = b'X';
        assert!(read_mpm(&buf[..]).is_err());
        assert!(read_mpm(&b"MPM1"[..]).is_err());
    }

    #[test]
    fn file_provider() {
        let dir = tempfile::tempdir().unwrap();
        write_mpm_file(dir.path().join(mpm_file_name(5, 7)), &sample()).unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let p = FileProvider::open(dir.path()).unwrap();
        assert_eq!(p.grid(), (3, 2));
        assert_eq!(p.frame_range(), Some((5, 7)));
        assert_eq!(p.field(5, 7).unwrap(), sample());
        assert!(matches!(p.field(6, 7), Err(Error::Unavailable { .. })));
        assert_eq!(parse_file_name(&mpm_file_name(12, 13)), Some((12, 13)));
    }
}
