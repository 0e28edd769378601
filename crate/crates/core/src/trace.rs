//! Keystroke traces: the four press timestamps of one PIN entry, with
//! optional ground truth for training and evaluation.

use alloc::string::String;
use core::fmt;

use crate::keypad::Pin;

/// How the PIN was typed. Single-finger entries exhibit distance-correlated
/// inter-keystroke gaps; other entries do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypistMode {
    SingleFinger,
    Other,
    /// Pooled / unconditioned data.
    Mixed,
}

impl TypistMode {
    pub fn label(self) -> &'static str {
        match self {
            TypistMode::SingleFinger => "single_finger",
            TypistMode::Other => "other",
            TypistMode::Mixed => "mixed",
        }
    }

    pub fn from_label(s: &str) -> Option<TypistMode> {
        match s {
            "single_finger" => Some(TypistMode::SingleFinger),
            "other" => Some(TypistMode::Other),
            "mixed" => Some(TypistMode::Mixed),
            _ => None,
        }
    }
}

impl fmt::Display for TypistMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One PIN entry: four press timestamps in milliseconds from clip start.
#[derive(Debug, Clone, PartialEq)]
pub struct KeystrokeTrace {
    pub trace_id: String,
    pub timestamps_ms: [f64; 4],
    /// Ground-truth PIN, present for generated/labeled data.
    pub pin: Option<Pin>,
    pub typist_mode: TypistMode,
}

impl KeystrokeTrace {
    /// The three consecutive timestamp differences in ms.
    pub fn gaps_ms(&self) -> [f64; 3] {
        let t = &self.timestamps_ms;
        [t[1] - t[0], t[2] - t[1], t[3] - t[2]]
    }
}
