//! Enumerations of the finite words: rank/unrank bijections, the block
//! (prefix-shift-compatible) construction, the staged bad construction, and
//! validators for both.

use serde::Serialize;

use crate::error::Result;
use crate::words::FiniteWord;

mod bad;
mod block;

pub use bad::{validate_bad, BadEnumeration, BadStage, DEFAULT_STAGE_CEILING};
pub use block::{BlockEnumeration, DEFAULT_WORD_CEILING};

/// A bijective listing of all finite words, indices starting at 1.
///
/// `word_at` and `index_of` are mutually inverse on every queried value.
/// Implementations memoize internally behind a lock, so shared references are
/// safe across threads.
pub trait Enumeration: Send + Sync {
    fn name(&self) -> &str;

    fn word_at(&self, k: u64) -> Result<FiniteWord>;

    fn index_of(&self, w: &FiniteWord) -> Result<u64>;

    /// True when the index of every proper extension of a word is strictly
    /// larger than the index of the word itself. For such enumerations the
    /// first distinguishing index of two points is attained at one of their
    /// shortest distinguishing prefixes.
    fn prefix_monotone(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    FirstWordNotEmpty,
    PrefixNotEarlier,
    ShiftNotEarlier,
    Duplicate,
    SpecialSlotMismatch,
    StartsWithBannedLetter,
    ContainsBannedLetter,
    CutoffNotIncreasing,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: u64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageWitness {
    /// How many base words were probed.
    pub words: u64,
    /// Every probed base word appears at some index <= this one.
    pub witness_index: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub enumeration: String,
    pub checked: u64,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageWitness>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks prefix-shift compatibility of the first `k_max` entries: the empty
/// word sits at index 1, every proper prefix and every shift image of an
/// entry occurs at a smaller index, and entries are pairwise distinct.
/// Violations are report content, not errors.
pub fn validate_pscomp(e: &dyn Enumeration, k_max: u64) -> Result<ValidationReport> {
    use std::collections::HashMap;

    let mut report = ValidationReport {
        enumeration: e.name().to_string(),
        checked: k_max,
        violations: Vec::new(),
        coverage: None,
    };
    let mut seen: HashMap<FiniteWord, u64> = HashMap::new();
    for k in 1..=k_max {
        let w = e.word_at(k)?;
        if k == 1 && !w.is_empty() {
            report.violations.push(Violation {
                kind: ViolationKind::FirstWordNotEmpty,
                index: 1,
                detail: format!("p_1 = {w}, expected e"),
            });
        }
        if let Some(&prev) = seen.get(&w) {
            report.violations.push(Violation {
                kind: ViolationKind::Duplicate,
                index: k,
                detail: format!("{w} already listed at index {prev}"),
            });
        }
        for cut in 0..w.len() {
            let prefix = FiniteWord::new(w.letters()[..cut].to_vec());
            match seen.get(&prefix) {
                Some(&m) if m < k => {}
                _ => report.violations.push(Violation {
                    kind: ViolationKind::PrefixNotEarlier,
                    index: k,
                    detail: format!("prefix {prefix} of {w} not listed before index {k}"),
                }),
            }
        }
        if w.len() >= 2 {
            let img = w.shift();
            match seen.get(&img) {
                Some(&m) if m < k => {}
                _ => report.violations.push(Violation {
                    kind: ViolationKind::ShiftNotEarlier,
                    index: k,
                    detail: format!("shift image {img} of {w} not listed before index {k}"),
                }),
            }
        }
        seen.entry(w).or_insert(k);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::parse_word;

    struct TableEnumeration(Vec<FiniteWord>);

    impl Enumeration for TableEnumeration {
        fn name(&self) -> &str {
            "table"
        }
        fn word_at(&self, k: u64) -> Result<FiniteWord> {
            Ok(self.0[(k - 1) as usize].clone())
        }
        fn index_of(&self, w: &FiniteWord) -> Result<u64> {
            Ok(self.0.iter().position(|u| u == w).unwrap() as u64 + 1)
        }
    }

    #[test]
    fn pscomp_validator_flags_bad_first_word() {
        let e = TableEnumeration(vec![parse_word("1").unwrap()]);
        let report = validate_pscomp(&e, 1).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::FirstWordNotEmpty));
    }

    #[test]
    fn pscomp_validator_flags_missing_prefix_and_shift() {
        let e = TableEnumeration(vec![
            parse_word("e").unwrap(),
            parse_word("2.1").unwrap(),
        ]);
        let report = validate_pscomp(&e, 2).unwrap();
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind.clone()).collect();
        assert!(kinds.contains(&ViolationKind::PrefixNotEarlier));
        assert!(kinds.contains(&ViolationKind::ShiftNotEarlier));
    }
}
