//! Krippendorff's alpha over a coincidence matrix.
//!
//! Values are stored as `f64`; nominal data compares them for equality,
//! interval data uses the squared difference. Units coded by fewer than two
//! coders are not pairable and contribute nothing.

use std::collections::BTreeMap;

use crate::{Result, StatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Nominal,
    Interval,
}

impl Level {
    #[inline]
    fn delta2(self, a: f64, b: f64) -> f64 {
        match self {
            Level::Nominal => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            Level::Interval => (a - b) * (a - b),
        }
    }
}

/// Partial map `(unit, coder) -> value`.
#[derive(Debug, Clone)]
pub struct ReliabilityData {
    level: Level,
    units: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ReliabilityData {
    pub fn new(level: Level) -> Self {
        Self { level, units: BTreeMap::new() }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// Records a value; a second value for the same `(unit, coder)` replaces the first.
    pub fn insert(&mut self, unit: impl Into<String>, coder: impl Into<String>, value: f64) {
        self.units.entry(unit.into()).or_default().insert(coder.into(), value);
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Units with at least two values.
    pub fn pairable_units(&self) -> usize {
        self.units.values().filter(|c| c.len() >= 2).count()
    }

    pub fn coders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.units.values().flat_map(|c| c.keys().map(String::as_str)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted distinct values over pairable units.
    pub fn domain(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .units
            .values()
            .filter(|c| c.len() >= 2)
            .flat_map(|c| c.values().copied())
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    pub fn coincidences(&self) -> CoincidenceMatrix {
        let mut m = CoincidenceMatrix::new(self.level, self.domain());
        for coded in self.units.values() {
            m.add_unit(coded.values().copied());
        }
        m
    }

    /// One coincidence matrix per group of units, all over the same domain.
    /// `group` maps a unit id to its resampling case (e.g. its conversation).
    pub fn grouped_coincidences<G, F>(&self, group: F) -> BTreeMap<G, CoincidenceMatrix>
    where
        G: Ord,
        F: Fn(&str) -> G,
    {
        let domain = self.domain();
        let mut out: BTreeMap<G, CoincidenceMatrix> = BTreeMap::new();
        for (unit, coded) in &self.units {
            out.entry(group(unit))
                .or_insert_with(|| CoincidenceMatrix::new(self.level, domain.clone()))
                .add_unit(coded.values().copied());
        }
        out
    }
}

/// Value-by-value coincidence counts `o_ck`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMatrix {
    level: Level,
    domain: Vec<f64>,
    counts: Vec<f64>,
}

impl CoincidenceMatrix {
    pub fn new(level: Level, domain: Vec<f64>) -> Self {
        let k = domain.len();
        Self { level, domain, counts: vec![0.0; k * k] }
    }

    pub fn domain(&self) -> &[f64] {
        &self.domain
    }

    fn index(&self, v: f64) -> usize {
        self.domain
            .binary_search_by(|d| d.total_cmp(&v))
            .expect("value outside the coincidence domain")
    }

    /// Add one unit's values. Units with fewer than two values are ignored.
    pub fn add_unit<I: IntoIterator<Item = f64>>(&mut self, values: I) {
        let values: Vec<f64> = values.into_iter().collect();
        let m = values.len();
        if m < 2 {
            return;
        }
        let k = self.domain.len();
        let mut tally = vec![0.0f64; k];
        for v in &values {
            tally[self.index(*v)] += 1.0;
        }
        let w = 1.0 / (m as f64 - 1.0);
        for c in 0..k {
            if tally[c] == 0.0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d { tally[c] * (tally[c] - 1.0) } else { tally[c] * tally[d] };
                self.counts[c * k + d] += pairs * w;
            }
        }
    }

    /// Adds another matrix over the same domain.
    pub fn accumulate(&mut self, other: &CoincidenceMatrix) {
        assert_eq!(self.domain, other.domain, "coincidence domains differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Total number of pairable values `n`.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn observed_disagreement(&self) -> f64 {
        let k = self.domain.len();
        let n = self.total();
        let mut acc = 0.0;
        for c in 0..k {
            for d in 0..k {
                acc += self.counts[c * k + d] * self.level.delta2(self.domain[c], self.domain[d]);
            }
        }
        acc / n
    }

    pub fn expected_disagreement(&self) -> f64 {
        let k = self.domain.len();
        let n = self.total();
        let marg: Vec<f64> = (0..k).map(|c| self.counts[c * k..(c + 1) * k].iter().sum()).collect();
        let mut acc = 0.0;
        for c in 0..k {
            for d in 0..k {
                acc += marg[c] * marg[d] * self.level.delta2(self.domain[c], self.domain[d]);
            }
        }
        acc / (n * (n - 1.0))
    }

    pub fn alpha(&self) -> Result<f64> {
        let n = self.total();
        if n < 2.0 {
            return Err(StatError::NoOverlap);
        }
        let de = self.expected_disagreement();
        if de <= 0.0 {
            return Err(StatError::UndefinedAlpha);
        }
        Ok(1.0 - self.observed_disagreement() / de)
    }
}

pub fn krippendorff_alpha(data: &ReliabilityData) -> Result<f64> {
    if data.pairable_units() == 0 {
        return Err(StatError::NoOverlap);
    }
    data.coincidences().alpha()
}
