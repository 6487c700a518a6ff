//! Motion-and-position map (MPM) cell tracking.
//!
//! An MPM is a dense grid of 3-vectors computed for a pair of frames. The
//! vector magnitudes form a likelihood map of cell positions in the later
//! frame, and the vector directions point back to where each cell was in the
//! earlier frame. This crate covers the whole loop around that
//! representation:
//!
//! * [`field`]: ground-truth encoding from point annotations, likelihood
//!   extraction and the field comparison loss.
//! * [`detector`]: smoothing and peak detection on likelihood maps.
//! * [`tracker`]: frame-by-frame association, division registration and
//!   gap recovery with interpolation.
//! * [`metrics`]: detection precision/recall/F1, association accuracy and
//!   target effectiveness.
//! * [`simulator`]: synthetic lineages, an exact oracle field provider and a
//!   degraded wrapper around it.
//! * [`io`]: annotation, track and binary field file formats.

pub mod detector;
pub mod error;
pub mod field;
pub mod io;
pub mod metrics;
pub mod provider;
mod rng;
pub mod simulator;
pub mod tracker;

pub use detector::{Detection, DetectorConfig};
pub use error::{Error, Result};
pub use field::{Annotation, EncoderConfig, LikelihoodMap, MpmField, Pixel};
pub use provider::MpmProvider;
pub use tracker::{TrackId, TrackRegistry, TrackerConfig, Trajectory};
