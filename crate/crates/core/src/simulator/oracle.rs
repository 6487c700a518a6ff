use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::field::{encode_mpm, validate_annotations, Annotation, EncoderConfig, MpmField};
use crate::provider::MpmProvider;

/// Encodes exact fields from ground-truth annotations.
///
/// Each cell at the later frame is paired with its own position at the
/// earlier frame, or with the nearest ancestor that was present then when
/// it was born inside the gap. Cells with no such ancestor are encoded as
/// stationary.
#[derive(Debug, Clone)]
pub struct OracleProvider {
    cfg: EncoderConfig,
    by_frame: BTreeMap<u32, Vec<Annotation>>,
    positions: HashMap<(u32, u32), (f64, f64)>,
    parents: HashMap<u32, u32>,
    first_frames: HashMap<u32, u32>,
}

impl OracleProvider {
    pub fn new(annotations: &[Annotation], cfg: EncoderConfig) -> Result<Self> {
        cfg.validate()?;
        validate_annotations(annotations, cfg.width, cfg.height)?;
        let mut by_frame: BTreeMap<u32, Vec<Annotation>> = BTreeMap::new();
        let mut positions = HashMap::new();
        let mut parents = HashMap::new();
        let mut first_frames: HashMap<u32, u32> = HashMap::new();
        for a in annotations {
            by_frame.entry(a.frame).or_default().push(*a);
            positions.insert((a.cell_id, a.frame), (a.x, a.y));
            if let Some(p) = a.parent_id {
                parents.insert(a.cell_id, p);
            }
            let first = first_frames.entry(a.cell_id).or_insert(a.frame);
            *first = (*first).min(a.frame);
        }
        for cells in by_frame.values_mut() {
            cells.sort_by_key(|a| a.cell_id);
        }
        Ok(OracleProvider {
            cfg,
            by_frame,
            positions,
            parents,
            first_frames,
        })
    }

    pub fn encoder(&self) -> &EncoderConfig {
        &self.cfg
    }

    /// First and last annotated frame.
    pub fn frame_range(&self) -> Option<(u32, u32)> {
        Some((*self.by_frame.keys().next()?, *self.by_frame.keys().next_back()?))
    }

    pub fn cells_at(&self, frame: u32) -> &[Annotation] {
        self.by_frame.get(&frame).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn first_frame_of(&self, cell: u32) -> Option<u32> {
        self.first_frames.get(&cell).copied()
    }

    fn source(&self, cell: u32, earlier: u32) -> Option<(f64, f64)> {
        let mut c = cell;
        loop {
            if let Some(&p) = self.positions.get(&(c, earlier)) {
                return Some(p);
            }
            c = *self.parents.get(&c)?;
        }
    }

    /// Annotation pairs for `(earlier, later)`, leaving out `excluded` cells.
    pub fn pairs(&self, earlier: u32, later: u32, excluded: &HashSet<u32>) -> Vec<(Annotation, Annotation)> {
        self.cells_at(later)
            .iter()
            .filter(|a| !excluded.contains(&a.cell_id))
            .map(|a| {
                let (x, y) = self.source(a.cell_id, earlier).unwrap_or((a.x, a.y));
                let prev = Annotation {
                    frame: earlier,
                    x,
                    y,
                    ..*a
                };
                (*a, prev)
            })
            .collect()
    }

    pub fn encode_without(&self, earlier: u32, later: u32, excluded: &HashSet<u32>) -> Result<MpmField> {
        if later <= earlier {
            return Err(Error::Unavailable { earlier, later });
        }
        // A sequence without cells has no frame bounds: every field is zero.
        let (first, last) = self.frame_range().unwrap_or((earlier, later));
        if earlier < first || later > last {
            return Err(Error::Unavailable { earlier, later });
        }
        encode_mpm(&self.pairs(earlier, later, excluded), &self.cfg, later, later - earlier)
    }
}

impl MpmProvider for OracleProvider {
    fn grid(&self) -> (usize, usize) {
        (self.cfg.width, self.cfg.height)
    }

    fn field(&self, earlier: u32, later: u32) -> Result<MpmField> {
        self.encode_without(earlier, later, &HashSet::new())
    }
}
