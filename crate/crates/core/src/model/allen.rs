//! Qualitative relations between time intervals (Allen's interval algebra).

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A proper time interval with `start < end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    start: f64,
    end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        // NaN endpoints fail this comparison as well
        if !(start < end) {
            return Err(Error::InvalidInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }
}

/// The thirteen basic relations between two intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllenRelation {
    Precedes,
    PrecededBy,
    Meets,
    MetBy,
    Overlaps,
    OverlappedBy,
    Starts,
    StartedBy,
    During,
    Contains,
    Finishes,
    FinishedBy,
    Equals,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Precedes,
        AllenRelation::PrecededBy,
        AllenRelation::Meets,
        AllenRelation::MetBy,
        AllenRelation::Overlaps,
        AllenRelation::OverlappedBy,
        AllenRelation::Starts,
        AllenRelation::StartedBy,
        AllenRelation::During,
        AllenRelation::Contains,
        AllenRelation::Finishes,
        AllenRelation::FinishedBy,
        AllenRelation::Equals,
    ];

    /// The relation of `y` to `x` when `self` is the relation of `x` to `y`.
    pub fn inverse(self) -> Self {
        use AllenRelation::*;
        match self {
            Precedes => PrecededBy,
            PrecededBy => Precedes,
            Meets => MetBy,
            MetBy => Meets,
            Overlaps => OverlappedBy,
            OverlappedBy => Overlaps,
            Starts => StartedBy,
            StartedBy => Starts,
            During => Contains,
            Contains => During,
            Finishes => FinishedBy,
            FinishedBy => Finishes,
            Equals => Equals,
        }
    }

    /// Conventional short symbol (`<`, `m`, `o`, `s`, `d`, `f`, `=` and their inverses).
    pub fn symbol(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Precedes => "<",
            PrecededBy => ">",
            Meets => "m",
            MetBy => "mi",
            Overlaps => "o",
            OverlappedBy => "oi",
            Starts => "s",
            StartedBy => "si",
            During => "d",
            Contains => "di",
            Finishes => "f",
            FinishedBy => "fi",
            Equals => "=",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Classifies how `x` relates to `y`.
pub fn allen_relation(x: &Interval, y: &Interval) -> AllenRelation {
    use AllenRelation::*;
    if x.end < y.start {
        return Precedes;
    }
    if y.end < x.start {
        return PrecededBy;
    }
    if x.end == y.start {
        return Meets;
    }
    if y.end == x.start {
        return MetBy;
    }
    // interiors overlap from here on
    let starts = x.start.partial_cmp(&y.start).expect("finite endpoints");
    let ends = x.end.partial_cmp(&y.end).expect("finite endpoints");
    match (starts, ends) {
        (Ordering::Equal, Ordering::Equal) => Equals,
        (Ordering::Equal, Ordering::Less) => Starts,
        (Ordering::Equal, Ordering::Greater) => StartedBy,
        (Ordering::Greater, Ordering::Equal) => Finishes,
        (Ordering::Less, Ordering::Equal) => FinishedBy,
        (Ordering::Greater, Ordering::Less) => During,
        (Ordering::Less, Ordering::Greater) => Contains,
        (Ordering::Less, Ordering::Less) => Overlaps,
        (Ordering::Greater, Ordering::Greater) => OverlappedBy,
    }
}
