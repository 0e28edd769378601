//! PIN-pad geometry: key grid, inter-key distance classes, PIN/triplet
//! mappings and key-set combinatorics.
//!
//! Distances are compared as exact squared integers. On the unit grid the
//! eight realizable squared distances are {0, 1, 4, 9, 2, 8, 5, 10}, all
//! distinct, so no floating point is involved anywhere in the mapping.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

/// One of the eight inter-key distance classes on the standard keypad.
///
/// The discriminant order (Z < U1 < U2 < U3 < D1 < D2 < SD < LD) is the
/// canonical tie-break order used by ranking code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistanceClass {
    /// Same key twice (squared distance 0).
    Z,
    /// One step along a row or column (1).
    U1,
    /// Two steps along a row or column (4).
    U2,
    /// Three steps along a column (9).
    U3,
    /// Short diagonal, one step each way (2).
    D1,
    /// Long diagonal, two steps each way (8).
    D2,
    /// Knight-style short diagonal (5).
    SD,
    /// Knight-style long diagonal (10), e.g. keys 1 and 0.
    LD,
}

impl DistanceClass {
    pub const ALL: [DistanceClass; 8] = [
        DistanceClass::Z,
        DistanceClass::U1,
        DistanceClass::U2,
        DistanceClass::U3,
        DistanceClass::D1,
        DistanceClass::D2,
        DistanceClass::SD,
        DistanceClass::LD,
    ];

    /// Exact squared Euclidean grid distance for this class.
    pub fn squared_value(self) -> u32 {
        match self {
            DistanceClass::Z => 0,
            DistanceClass::U1 => 1,
            DistanceClass::U2 => 4,
            DistanceClass::U3 => 9,
            DistanceClass::D1 => 2,
            DistanceClass::D2 => 8,
            DistanceClass::SD => 5,
            DistanceClass::LD => 10,
        }
    }

    /// Inverse of [`squared_value`](Self::squared_value).
    pub fn from_squared(sq: u32) -> Option<DistanceClass> {
        DistanceClass::ALL.iter().copied().find(|c| c.squared_value() == sq)
    }

    /// Euclidean distance in key-pitch units.
    pub fn distance(self) -> f64 {
        libm::sqrt(self.squared_value() as f64)
    }

    pub fn tag(self) -> &'static str {
        match self {
            DistanceClass::Z => "Z",
            DistanceClass::U1 => "U1",
            DistanceClass::U2 => "U2",
            DistanceClass::U3 => "U3",
            DistanceClass::D1 => "D1",
            DistanceClass::D2 => "D2",
            DistanceClass::SD => "SD",
            DistanceClass::LD => "LD",
        }
    }

    pub fn from_tag(tag: &str) -> Option<DistanceClass> {
        DistanceClass::ALL.iter().copied().find(|c| c.tag() == tag)
    }
}

impl fmt::Display for DistanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Ordered distance classes between the consecutive digits of a 4-digit PIN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DistanceTriplet(pub [DistanceClass; 3]);

impl fmt::Display for DistanceTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// A 4-digit PIN. Leading zeros are significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pin {
    digits: [u8; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinError {
    DigitOutOfRange(u8),
    BadLength(usize),
    BadChar(char),
}

impl fmt::Display for PinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PinError::DigitOutOfRange(d) => write!(f, "digit out of range: {d}"),
            PinError::BadLength(n) => write!(f, "PIN must have exactly 4 digits, got {n}"),
            PinError::BadChar(c) => write!(f, "invalid PIN character: {c:?}"),
        }
    }
}

impl Pin {
    pub fn new(digits: [u8; 4]) -> Result<Pin, PinError> {
        if let Some(&d) = digits.iter().find(|&&d| d > 9) {
            return Err(PinError::DigitOutOfRange(d));
        }
        Ok(Pin { digits })
    }

    /// PIN from its numeric value 0..=9999 (e.g. 22 is "0022").
    pub fn from_index(idx: u16) -> Pin {
        debug_assert!(idx < 10_000);
        Pin {
            digits: [
                (idx / 1000 % 10) as u8,
                (idx / 100 % 10) as u8,
                (idx / 10 % 10) as u8,
                (idx % 10) as u8,
            ],
        }
    }

    /// Numeric value in 0..=9999; defines the canonical ascending order.
    pub fn index(self) -> u16 {
        self.digits
            .iter()
            .fold(0u16, |acc, &d| acc * 10 + d as u16)
    }

    pub fn digits(self) -> [u8; 4] {
        self.digits
    }

    pub fn digit(self, position: usize) -> u8 {
        self.digits[position]
    }

    /// Set of distinct digits used by this PIN.
    pub fn distinct_digits(self) -> BTreeSet<u8> {
        self.digits.iter().copied().collect()
    }

    /// Iterator over all 10,000 PINs in ascending numeric order.
    pub fn all() -> impl Iterator<Item = Pin> {
        (0u16..10_000).map(Pin::from_index)
    }

    pub fn parse(s: &str) -> Result<Pin, PinError> {
        if s.chars().count() != 4 {
            return Err(PinError::BadLength(s.chars().count()));
        }
        let mut digits = [0u8; 4];
        for (i, c) in s.chars().enumerate() {
            digits[i] = c.to_digit(10).ok_or(PinError::BadChar(c))? as u8;
        }
        Ok(Pin { digits })
    }
}

impl fmt::Display for Pin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}{}",
            self.digits[0], self.digits[1], self.digits[2], self.digits[3]
        )
    }
}

/// Grid geometry of the 10 keys.
///
/// The standard layout is rows `[1 2 3]`, `[4 5 6]`, `[7 8 9]`, `[. 0 .]`
/// with 0 at row 3, column 1. Alternative grids may be supplied as long as
/// they realize only the eight canonical distance classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypadLayout {
    key_positions: [(i32, i32); 10],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutError {
    DuplicatePosition(u8, u8),
    NonCanonicalDistance { a: u8, b: u8, squared: u32 },
}

impl fmt::Display for LayoutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutError::DuplicatePosition(a, b) => {
                write!(f, "keys {a} and {b} share a grid position")
            }
            LayoutError::NonCanonicalDistance { a, b, squared } => write!(
                f,
                "keys {a} and {b} have non-canonical squared distance {squared}"
            ),
        }
    }
}

impl KeypadLayout {
    /// The standard ATM/PoS layout.
    pub fn standard() -> KeypadLayout {
        // index = digit; 0 sits below the 8 key
        KeypadLayout {
            key_positions: [
                (3, 1), // 0
                (0, 0), // 1
                (0, 1), // 2
                (0, 2), // 3
                (1, 0), // 4
                (1, 1), // 5
                (1, 2), // 6
                (2, 0), // 7
                (2, 1), // 8
                (2, 2), // 9
            ],
        }
    }

    /// Build a custom grid. `positions[d]` is the (row, col) of digit `d`.
    pub fn from_positions(positions: [(i32, i32); 10]) -> Result<KeypadLayout, LayoutError> {
        for a in 0..10 {
            for b in (a + 1)..10 {
                if positions[a] == positions[b] {
                    return Err(LayoutError::DuplicatePosition(a as u8, b as u8));
                }
            }
        }
        let layout = KeypadLayout {
            key_positions: positions,
        };
        for a in 0..10u8 {
            for b in 0..10u8 {
                let sq = layout.squared_distance(a, b);
                if DistanceClass::from_squared(sq).is_none() {
                    return Err(LayoutError::NonCanonicalDistance { a, b, squared: sq });
                }
            }
        }
        Ok(layout)
    }

    pub fn position(&self, digit: u8) -> (i32, i32) {
        self.key_positions[digit as usize]
    }

    fn squared_distance(&self, a: u8, b: u8) -> u32 {
        let (ra, ca) = self.position(a);
        let (rb, cb) = self.position(b);
        ((ra - rb).pow(2) + (ca - cb).pow(2)) as u32
    }

    /// Distance class between two keys. Symmetric and total on valid digits.
    pub fn distance_class(&self, a: u8, b: u8) -> DistanceClass {
        DistanceClass::from_squared(self.squared_distance(a, b))
            .expect("layout invariant: all pair distances are canonical")
    }

    /// The unique distance triplet of a PIN.
    pub fn triplet_of_pin(&self, pin: Pin) -> DistanceTriplet {
        let d = pin.digits();
        DistanceTriplet([
            self.distance_class(d[0], d[1]),
            self.distance_class(d[1], d[2]),
            self.distance_class(d[2], d[3]),
        ])
    }

    /// All PINs whose triplet equals `t`, ascending numeric order.
    /// Empty for infeasible triplets.
    pub fn pins_of_triplet(&self, t: DistanceTriplet) -> Vec<Pin> {
        Pin::all().filter(|&p| self.triplet_of_pin(p) == t).collect()
    }

    /// Precomputed triplet → PIN index over the full 10,000-PIN space.
    pub fn triplet_index(&self) -> TripletIndex {
        let mut map: BTreeMap<DistanceTriplet, Vec<Pin>> = BTreeMap::new();
        for pin in Pin::all() {
            map.entry(self.triplet_of_pin(pin)).or_default().push(pin);
        }
        TripletIndex { map }
    }
}

/// Cached triplet → PINs mapping for repeated queries.
#[derive(Debug, Clone)]
pub struct TripletIndex {
    map: BTreeMap<DistanceTriplet, Vec<Pin>>,
}

impl TripletIndex {
    /// PINs of a triplet, ascending numeric order; empty slice if infeasible.
    pub fn pins(&self, t: DistanceTriplet) -> &[Pin] {
        self.map.get(&t).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_feasible(&self, t: DistanceTriplet) -> bool {
        self.map.contains_key(&t)
    }

    /// Feasible triplets in canonical (ascending class) order.
    pub fn feasible_triplets(&self) -> impl Iterator<Item = DistanceTriplet> + '_ {
        self.map.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Key-set class observed through a heat map: how many distinct keys were
/// pressed and which ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThermalClass {
    pub class_id: u8,
    pub key_set: BTreeSet<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThermalError {
    EmptyKeySet,
    KeySetTooLarge(usize),
    DigitOutOfRange(u8),
}

impl fmt::Display for ThermalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThermalError::EmptyKeySet => f.write_str("thermal key set is empty"),
            ThermalError::KeySetTooLarge(n) => {
                write!(f, "thermal key set has {n} keys, a 4-digit PIN uses at most 4")
            }
            ThermalError::DigitOutOfRange(d) => write!(f, "digit out of range: {d}"),
        }
    }
}

/// Class of a PIN by its number of distinct digits.
pub fn thermal_class_of(pin: Pin) -> ThermalClass {
    let key_set = pin.distinct_digits();
    ThermalClass {
        class_id: key_set.len() as u8,
        key_set,
    }
}

/// All PINs whose distinct-digit set equals `key_set` exactly, ascending.
///
/// Candidate counts are 1, 14, 36 and 24 for set sizes 1 through 4.
pub fn thermal_candidates(key_set: &BTreeSet<u8>) -> Result<Vec<Pin>, ThermalError> {
    if key_set.is_empty() {
        return Err(ThermalError::EmptyKeySet);
    }
    if key_set.len() > 4 {
        return Err(ThermalError::KeySetTooLarge(key_set.len()));
    }
    if let Some(&d) = key_set.iter().find(|&&d| d > 9) {
        return Err(ThermalError::DigitOutOfRange(d));
    }
    Ok(Pin::all()
        .filter(|p| &p.distinct_digits() == key_set)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pin(s: &str) -> Pin {
        Pin::parse(s).unwrap()
    }

    #[test]
    fn distance_class_examples() {
        let layout = KeypadLayout::standard();
        assert_eq!(layout.distance_class(5, 5), DistanceClass::Z);
        // 1 and 0 are the farthest pair on the pad
        assert_eq!(layout.distance_class(1, 0), DistanceClass::LD);
        assert_eq!(layout.distance_class(2, 0), DistanceClass::U3);
    }

    #[test]
    fn distance_class_symmetric_and_total() {
        let layout = KeypadLayout::standard();
        for a in 0..10 {
            for b in 0..10 {
                assert_eq!(layout.distance_class(a, b), layout.distance_class(b, a));
            }
        }
    }

    #[test]
    fn eight_canonical_squared_values() {
        let layout = KeypadLayout::standard();
        let mut seen = BTreeSet::new();
        for a in 0..10 {
            for b in 0..10 {
                seen.insert(layout.distance_class(a, b).squared_value());
            }
        }
        let expected: BTreeSet<u32> = [0, 1, 4, 9, 2, 8, 5, 10].into_iter().collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn triplet_of_pin_examples() {
        let layout = KeypadLayout::standard();
        use DistanceClass::*;
        assert_eq!(layout.triplet_of_pin(pin("5566")), DistanceTriplet([Z, U1, Z]));
        assert_eq!(layout.triplet_of_pin(pin("5555")), DistanceTriplet([Z, Z, Z]));
        // 2 -> 0 spans the full column (squared distance 9)
        assert_eq!(layout.triplet_of_pin(pin("8520")), DistanceTriplet([U1, U1, U3]));
        assert_eq!(layout.triplet_of_pin(pin("8521")), DistanceTriplet([U1, U1, U1]));
    }

    #[test]
    fn pins_of_triplet_examples() {
        let layout = KeypadLayout::standard();
        use DistanceClass::*;
        let pins = layout.pins_of_triplet(DistanceTriplet([Z, U3, Z]));
        assert_eq!(pins, vec![pin("0022"), pin("2200")]);

        assert_eq!(layout.pins_of_triplet(DistanceTriplet([Z, Z, Z])).len(), 10);
        assert_eq!(
            layout.pins_of_triplet(DistanceTriplet([U1, U1, U1])).len(),
            216
        );
    }

    #[test]
    fn pins_of_triplet_corrected_worked_example() {
        // estimated distances 3, 0, sqrt(2) enumerate to these four PINs
        let layout = KeypadLayout::standard();
        use DistanceClass::*;
        let pins = layout.pins_of_triplet(DistanceTriplet([U3, Z, D1]));
        assert_eq!(pins, vec![pin("0224"), pin("0226"), pin("2007"), pin("2009")]);
    }

    #[test]
    fn triplet_partition_covers_all_pins() {
        let layout = KeypadLayout::standard();
        let index = layout.triplet_index();
        let total: usize = index
            .feasible_triplets()
            .map(|t| index.pins(t).len())
            .sum();
        assert_eq!(total, 10_000);
        // no overlaps: every PIN maps to exactly one triplet by construction,
        // so matching totals plus per-set uniqueness suffice
        for t in index.feasible_triplets() {
            for p in index.pins(t) {
                assert_eq!(layout.triplet_of_pin(*p), t);
            }
        }
    }

    #[test]
    fn triplet_index_matches_brute_force() {
        let layout = KeypadLayout::standard();
        let index = layout.triplet_index();
        use DistanceClass::*;
        for t in [
            DistanceTriplet([Z, Z, Z]),
            DistanceTriplet([U1, U1, U1]),
            DistanceTriplet([LD, SD, D2]),
            DistanceTriplet([LD, LD, LD]),
        ] {
            assert_eq!(index.pins(t), layout.pins_of_triplet(t).as_slice());
        }
    }

    #[test]
    fn thermal_class_examples() {
        assert_eq!(thermal_class_of(pin("5555")).class_id, 1);
        assert_eq!(
            thermal_class_of(pin("5555")).key_set,
            BTreeSet::from([5u8])
        );
        let c = thermal_class_of(pin("0022"));
        assert_eq!(c.class_id, 2);
        assert_eq!(c.key_set, BTreeSet::from([0u8, 2]));
        let c = thermal_class_of(pin("0258"));
        assert_eq!(c.class_id, 4);
        assert_eq!(c.key_set, BTreeSet::from([0u8, 2, 5, 8]));
    }

    #[test]
    fn thermal_candidates_counts() {
        let single = thermal_candidates(&BTreeSet::from([5u8])).unwrap();
        assert_eq!(single, vec![pin("5555")]);

        let two = thermal_candidates(&BTreeSet::from([0u8, 2])).unwrap();
        assert_eq!(two.len(), 14);
        for p in [pin("0022"), pin("0202"), pin("0002")] {
            assert!(two.contains(&p));
        }

        let four = thermal_candidates(&BTreeSet::from([0u8, 2, 5, 8])).unwrap();
        assert_eq!(four.len(), 24);
    }

    #[test]
    fn thermal_candidates_errors() {
        assert_eq!(
            thermal_candidates(&BTreeSet::new()),
            Err(ThermalError::EmptyKeySet)
        );
        let five: BTreeSet<u8> = [1u8, 2, 3, 4, 5].into_iter().collect();
        assert_eq!(
            thermal_candidates(&five),
            Err(ThermalError::KeySetTooLarge(5))
        );
    }

    #[test]
    fn thermal_partition_sums_to_all_pins() {
        // 10*1 + 45*14 + 120*36 + 210*24 = 10,000
        let mut total = 0usize;
        for mask in 1u16..1024 {
            let key_set: BTreeSet<u8> = (0..10).filter(|d| mask & (1 << d) != 0).collect();
            if key_set.len() > 4 {
                continue;
            }
            total += thermal_candidates(&key_set).unwrap().len();
        }
        assert_eq!(total, 10_000);
    }

    #[test]
    fn pin_parse_and_display_round_trip() {
        for s in ["0000", "0022", "8520", "9999"] {
            assert_eq!(alloc::format!("{}", pin(s)), s);
        }
        assert!(Pin::parse("123").is_err());
        assert!(Pin::parse("12a4").is_err());
        assert!(Pin::new([1, 2, 3, 10]).is_err());
    }

    #[test]
    fn custom_layout_validation() {
        let mut positions = KeypadLayout::standard().key_positions;
        positions[0] = (0, 0); // collides with key 1
        assert!(matches!(
            KeypadLayout::from_positions(positions),
            Err(LayoutError::DuplicatePosition(0, 1))
        ));

        let mut positions = KeypadLayout::standard().key_positions;
        positions[0] = (7, 7); // distance to everything off the canonical set
        assert!(matches!(
            KeypadLayout::from_positions(positions),
            Err(LayoutError::NonCanonicalDistance { .. })
        ));

        assert!(KeypadLayout::from_positions(KeypadLayout::standard().key_positions).is_ok());
    }
}
