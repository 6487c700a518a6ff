//! Source of MPM fields for frame pairs.
//!
//! The tracker never looks at images; it only asks a provider for the field
//! between two frames. Implementations in this crate encode fields from
//! annotations ([`crate::simulator::OracleProvider`]), perturb another
//! provider's output ([`crate::simulator::DegradedProvider`]) or read them
//! from disk ([`crate::io::FileProvider`]).

use crate::error::Result;
use crate::field::MpmField;

pub trait MpmProvider {
    /// Grid size `(width, height)` of every field this provider returns.
    fn grid(&self) -> (usize, usize);

    /// Field for `(earlier, later)` with `gap = later - earlier`, or
    /// [`crate::Error::Unavailable`].
    fn field(&self, earlier: u32, later: u32) -> Result<MpmField>;
}

impl<P: MpmProvider + ?Sized> MpmProvider for &P {
    fn grid(&self) -> (usize, usize) {
        (**self).grid()
    }

    fn field(&self, earlier: u32, later: u32) -> Result<MpmField> {
        (**self).field(earlier, later)
    }
}

impl<P: MpmProvider + ?Sized> MpmProvider for Box<P> {
    fn grid(&self) -> (usize, usize) {
        (**self).grid()
    }

    fn field(&self, earlier: u32, later: u32) -> Result<MpmField> {
        (**self).field(earlier, later)
    }
}
