//! Inter-keystroke timing side channel against PIN pads.
//!
//! A PIN pad emits the same feedback beep for every key, but the *gaps*
//! between beeps correlate with the distance a finger travels between
//! keys. This crate turns recordings of those beeps into keystroke
//! timestamps, models per-distance gap distributions, and ranks candidate
//! 4-digit PINs by how well an observed gap sequence fits each PIN's
//! distance triplet, optionally narrowed by knowledge of one digit, of the
//! pressed key set, or of typing behavior.
//!
//! The crate is `no_std` (alloc required); all IO, file formats and the
//! CLI live in the companion `pinsound-tools` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attack;
pub mod audio;
pub mod eval;
pub mod keypad;
pub mod special;
pub mod synth;
pub mod timing;
pub mod trace;

pub use keypad::{DistanceClass, DistanceTriplet, KeypadLayout, Pin};
pub use timing::{GapSequence, TimingModel};
pub use trace::{KeystrokeTrace, TypistMode};
