//! PIN ranking from observed gaps, plus composition with side knowledge.
//!
//! The base ranking orders all 10,000 PINs by the likelihood of their
//! distance triplet under a fitted timing model. Side knowledge — one
//! known digit at a known position ("VPK") or the set of pressed keys
//! ("thermal") — filters that ranking without reordering it.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::keypad::{KeypadLayout, Pin, TripletIndex};
use crate::timing::{GapSequence, TimingModel};
use crate::trace::TypistMode;

/// What the adversary knows beyond the audio.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeSpec {
    /// One known digit and its 0-based position.
    pub vpk: Option<(usize, u8)>,
    /// Exact set of distinct keys pressed (from a heat map).
    pub thermal_keys: Option<BTreeSet<u8>>,
    /// Typist mode to condition the timing model on.
    pub typist_mode: Option<TypistMode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnowledgeError {
    BadPosition(usize),
    BadDigit(u8),
    BadThermalSize(usize),
    /// The known digit cannot be outside the pressed-key set.
    VpkOutsideThermal { digit: u8 },
}

impl fmt::Display for KnowledgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnowledgeError::BadPosition(p) => write!(f, "PIN position out of range: {p}"),
            KnowledgeError::BadDigit(d) => write!(f, "digit out of range: {d}"),
            KnowledgeError::BadThermalSize(n) => {
                write!(f, "thermal key set must have 1 to 4 keys, got {n}")
            }
            KnowledgeError::VpkOutsideThermal { digit } => write!(
                f,
                "known digit {digit} is not in the thermal key set"
            ),
        }
    }
}

impl KnowledgeSpec {
    pub fn none() -> KnowledgeSpec {
        KnowledgeSpec::default()
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        if let Some((pos, digit)) = self.vpk {
            if pos > 3 {
                return Err(KnowledgeError::BadPosition(pos));
            }
            if digit > 9 {
                return Err(KnowledgeError::BadDigit(digit));
            }
        }
        if let Some(keys) = &self.thermal_keys {
            if keys.is_empty() || keys.len() > 4 {
                return Err(KnowledgeError::BadThermalSize(keys.len()));
            }
            if let Some(&d) = keys.iter().find(|&&d| d > 9) {
                return Err(KnowledgeError::BadDigit(d));
            }
            if let Some((_, digit)) = self.vpk {
                if !keys.contains(&digit) {
                    return Err(KnowledgeError::VpkOutsideThermal { digit });
                }
            }
        }
        Ok(())
    }

    /// Does a PIN satisfy every piece of knowledge?
    pub fn admits(&self, pin: Pin) -> bool {
        if let Some((pos, digit)) = self.vpk {
            if pin.digit(pos) != digit {
                return false;
            }
        }
        if let Some(keys) = &self.thermal_keys {
            if &pin.distinct_digits() != keys {
                return false;
            }
        }
        true
    }
}

/// Ordered candidate PINs with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PinRanking {
    candidates: Vec<(Pin, f64)>,
    pub knowledge_echo: KnowledgeSpec,
    pub model_id: String,
}

impl PinRanking {
    pub fn candidates(&self) -> &[(Pin, f64)] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn pins(&self) -> impl Iterator<Item = Pin> + '_ {
        self.candidates.iter().map(|(p, _)| *p)
    }
}

fn model_id_for(model: &TimingModel) -> String {
    let mut s = String::from("gamma-");
    s.push_str(model.typist_mode().label());
    s
}

/// Rank all 10,000 PINs by the likelihood of their distance triplet.
///
/// Triplets are scored in descending joint log-likelihood; within a
/// triplet, PINs are appended in ascending numeric order. Every PIN in a
/// triplet carries the triplet's score, so ties are resolved purely by
/// that deterministic order.
pub fn base_attack(
    model: &TimingModel,
    gaps: &GapSequence,
    layout: &KeypadLayout,
    index: &TripletIndex,
) -> PinRanking {
    let _ = layout; // index is derived from it; kept for call-site symmetry
    let ranked = model.rank_triplets(gaps, index);
    let mut candidates = Vec::with_capacity(10_000);
    for &(triplet, score) in ranked.entries() {
        for &pin in index.pins(triplet) {
            candidates.push((pin, score));
        }
    }
    debug_assert_eq!(candidates.len(), 10_000);
    PinRanking {
        candidates,
        knowledge_echo: KnowledgeSpec::none(),
        model_id: model_id_for(model),
    }
}

/// Keep only candidates with `digit` at `position`; order preserved.
pub fn filter_vpk(ranking: &PinRanking, position: usize, digit: u8) -> PinRanking {
    let candidates = ranking
        .candidates
        .iter()
        .filter(|(p, _)| p.digit(position) == digit)
        .copied()
        .collect();
    let mut echo = ranking.knowledge_echo.clone();
    echo.vpk = Some((position, digit));
    PinRanking {
        candidates,
        knowledge_echo: echo,
        model_id: ranking.model_id.clone(),
    }
}

/// Keep only candidates whose distinct-digit set equals `keys` exactly.
pub fn filter_thermal(ranking: &PinRanking, keys: &BTreeSet<u8>) -> PinRanking {
    let candidates = ranking
        .candidates
        .iter()
        .filter(|(p, _)| &p.distinct_digits() == keys)
        .copied()
        .collect();
    let mut echo = ranking.knowledge_echo.clone();
    echo.thermal_keys = Some(keys.clone());
    PinRanking {
        candidates,
        knowledge_echo: echo,
        model_id: ranking.model_id.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackError {
    Knowledge(KnowledgeError),
    /// No model fitted for the requested mode and no mixed fallback.
    MissingModel(TypistMode),
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackError::Knowledge(e) => write!(f, "invalid knowledge: {e}"),
            AttackError::MissingModel(m) => {
                write!(f, "no timing model for mode '{}'", m.label())
            }
        }
    }
}

impl From<KnowledgeError> for AttackError {
    fn from(e: KnowledgeError) -> AttackError {
        AttackError::Knowledge(e)
    }
}

/// A set of fitted models keyed by typist mode.
#[derive(Debug, Clone, Default)]
pub struct ModelBank {
    models: Vec<(TypistMode, TimingModel)>,
}

impl ModelBank {
    pub fn new() -> ModelBank {
        ModelBank::default()
    }

    pub fn insert(&mut self, mode: TypistMode, model: TimingModel) {
        self.models.retain(|(m, _)| *m != mode);
        self.models.push((mode, model));
    }

    pub fn get(&self, mode: TypistMode) -> Option<&TimingModel> {
        self.models.iter().find(|(m, _)| *m == mode).map(|(_, t)| t)
    }

    /// Mode-conditioned lookup with fallback to the mixed model.
    pub fn select(&self, mode: Option<TypistMode>) -> Result<&TimingModel, AttackError> {
        let wanted = mode.unwrap_or(TypistMode::Mixed);
        self.get(wanted)
            .or_else(|| self.get(TypistMode::Mixed))
            .ok_or(AttackError::MissingModel(wanted))
    }
}

/// Full attack: pick the mode-conditioned model, rank, then filter by
/// whatever knowledge is available. Filters are pure predicates, so
/// their application order cannot change the candidate set.
pub fn run_attack(
    bank: &ModelBank,
    gaps: &GapSequence,
    knowledge: &KnowledgeSpec,
    layout: &KeypadLayout,
    index: &TripletIndex,
) -> Result<PinRanking, AttackError> {
    knowledge.validate()?;
    let model = bank.select(knowledge.typist_mode)?;
    let mut ranking = base_attack(model, gaps, layout, index);
    if let Some(keys) = &knowledge.thermal_keys {
        ranking = filter_thermal(&ranking, keys);
    }
    if let Some((pos, digit)) = knowledge.vpk {
        ranking = filter_vpk(&ranking, pos, digit);
    }
    ranking.knowledge_echo.typist_mode = knowledge.typist_mode;
    Ok(ranking)
}

/// 1-based position of the true PIN, or `None` if a filter removed it.
pub fn attempts_to_guess(ranking: &PinRanking, true_pin: Pin) -> Option<usize> {
    ranking
        .candidates
        .iter()
        .position(|(p, _)| *p == true_pin)
        .map(|i| i + 1)
}
