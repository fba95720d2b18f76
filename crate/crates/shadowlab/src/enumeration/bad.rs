//! The staged "bad" enumeration. Stage n picks four fresh letters
//! a1, a2, a3, b, plants the word a1.a2.a3 at index i_n - n, and fills the
//! remaining indices up to i_n with the earliest unused words of a fixed base
//! listing that neither start with a2 nor contain b. Its OTW metric defeats
//! Lipschitz shadowing while remaining uniformly equivalent to every other
//! OTW metric.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::words::{FiniteWord, Letter};

use super::{
    BlockEnumeration, CoverageWitness, Enumeration, ValidationReport, Violation, ViolationKind,
};

pub const DEFAULT_STAGE_CEILING: u32 = 700;

/// One completed stage of the construction.
#[derive(Clone, Debug, Serialize)]
pub struct BadStage {
    pub n: u32,
    /// Cutoff index i_n.
    pub cutoff: u64,
    /// Index i_n - n of the planted three-letter word.
    pub special_index: u64,
    pub a1: u32,
    pub a2: u32,
    pub a3: u32,
    pub b: u32,
}

impl BadStage {
    pub fn special_word(&self) -> FiniteWord {
        FiniteWord::from_ids(&[self.a1, self.a2, self.a3]).expect("letters are >= 1")
    }
}

struct State {
    /// assigned[k-1] = q_k.
    assigned: Vec<FiniteWord>,
    index_by_word: HashMap<FiniteWord, u64>,
    stages: Vec<BadStage>,
    /// Letters occurring in the assigned words (S_n after stage n).
    letters_used: BTreeSet<u32>,
    /// Base indices at or below this are all consumed.
    base_floor: u64,
}

pub struct BadEnumeration {
    base: Arc<BlockEnumeration>,
    state: Mutex<State>,
    stage_ceiling: u32,
}

impl Default for BadEnumeration {
    fn default() -> Self {
        BadEnumeration::new(Arc::new(BlockEnumeration::default()), DEFAULT_STAGE_CEILING)
    }
}

impl BadEnumeration {
    /// The fixed base listing is the block enumeration; `stage_ceiling` caps
    /// materialization so a lookup that would run forever surfaces as a
    /// resource error instead.
    pub fn new(base: Arc<BlockEnumeration>, stage_ceiling: u32) -> Self {
        BadEnumeration {
            base,
            state: Mutex::new(State {
                assigned: Vec::new(),
                index_by_word: HashMap::new(),
                stages: Vec::new(),
                letters_used: BTreeSet::new(),
                base_floor: 0,
            }),
            stage_ceiling,
        }
    }

    pub fn base(&self) -> &Arc<BlockEnumeration> {
        &self.base
    }

    pub fn stage_ceiling(&self) -> u32 {
        self.stage_ceiling
    }

    fn assign(state: &mut State, word: FiniteWord) {
        let index = state.assigned.len() as u64 + 1;
        for &a in word.letters() {
            state.letters_used.insert(a.id());
        }
        state.index_by_word.insert(word.clone(), index);
        state.assigned.push(word);
    }

    fn build_stage(&self, state: &mut State) -> Result<()> {
        let n = state.stages.len() as u32 + 1;
        if n > self.stage_ceiling {
            return Err(Error::Resource(format!(
                "bad enumeration stage ceiling {} reached",
                self.stage_ceiling
            )));
        }
        // Four smallest letters absent from every word assigned so far.
        let mut fresh = Vec::with_capacity(4);
        let mut candidate = 1u32;
        while fresh.len() < 4 {
            if !state.letters_used.contains(&candidate) {
                fresh.push(candidate);
            }
            candidate += 1;
        }
        let (a1, a2, a3, b) = (fresh[0], fresh[1], fresh[2], fresh[3]);
        let prev_cutoff = state.stages.last().map_or(0, |s| s.cutoff);
        // Minimal growth satisfying i_n - n > i_{n-1}, with i_1 = 4.
        let cutoff = if n == 1 { 4 } else { prev_cutoff + n as u64 + 1 };
        let special_index = cutoff - n as u64;
        let a2_letter = Letter::new(a2).expect("nonzero");
        let b_letter = Letter::new(b).expect("nonzero");

        let mut scan = state.base_floor;
        for k in prev_cutoff + 1..=cutoff {
            if k == special_index {
                Self::assign(state, FiniteWord::from_ids(&[a1, a2, a3]).expect("nonzero"));
                continue;
            }
            // Earliest unused base word avoiding the stage restrictions.
            let filler = loop {
                scan += 1;
                let w = self.base.word_at(scan)?;
                if state.index_by_word.contains_key(&w) {
                    continue;
                }
                if w.starts_with(a2_letter) || w.contains(b_letter) {
                    continue;
                }
                break w;
            };
            Self::assign(state, filler);
            // Restart below the floor only when earlier skips can have
            // become eligible, i.e. at the next stage.
        }
        while {
            let w = self.base.word_at(state.base_floor + 1)?;
            state.index_by_word.contains_key(&w)
        } {
            state.base_floor += 1;
        }
        state.stages.push(BadStage { n, cutoff, special_index, a1, a2, a3, b });
        Ok(())
    }

    /// Materializes stages until at least `k` indices are assigned.
    fn ensure_index(&self, k: u64) -> Result<()> {
        let mut state = self.state.lock().expect("poisoned");
        while (state.assigned.len() as u64) < k {
            self.build_stage(&mut state)?;
        }
        Ok(())
    }

    pub fn ensure_stages(&self, n: u32) -> Result<()> {
        let mut state = self.state.lock().expect("poisoned");
        while (state.stages.len() as u32) < n {
            self.build_stage(&mut state)?;
        }
        Ok(())
    }

    pub fn stages(&self) -> Vec<BadStage> {
        self.state.lock().expect("poisoned").stages.clone()
    }

    pub fn stage(&self, n: u32) -> Result<BadStage> {
        self.ensure_stages(n)?;
        let state = self.state.lock().expect("poisoned");
        Ok(state.stages[(n - 1) as usize].clone())
    }
}

impl Enumeration for BadEnumeration {
    fn name(&self) -> &str {
        "bad"
    }

    fn word_at(&self, k: u64) -> Result<FiniteWord> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        self.ensure_index(k)?;
        let state = self.state.lock().expect("poisoned");
        Ok(state.assigned[(k - 1) as usize].clone())
    }

    fn index_of(&self, w: &FiniteWord) -> Result<u64> {
        loop {
            {
                let state = self.state.lock().expect("poisoned");
                if let Some(&k) = state.index_by_word.get(w) {
                    return Ok(k);
                }
            }
            let mut state = self.state.lock().expect("poisoned");
            if state.index_by_word.contains_key(w) {
                continue;
            }
            self.build_stage(&mut state).map_err(|e| match e {
                Error::Resource(_) => Error::Resource(format!(
                    "word {w} not assigned within {} stages of the bad enumeration",
                    self.stage_ceiling
                )),
                other => other,
            })?;
        }
    }
}

/// Checks Lemma-style stage conditions for every completed stage up to
/// `n_max`: the special slot holds a1.a2.a3, no entry up to the cutoff starts
/// with a2 or contains b, cutoffs grow as required, and entries are pairwise
/// distinct. Also probes coverage: each of the first `coverage_words` base
/// words must appear at some materialized index, recording the witness.
pub fn validate_bad(
    e: &BadEnumeration,
    n_max: u32,
    coverage_words: u64,
) -> Result<ValidationReport> {
    e.ensure_stages(n_max)?;
    let mut violations = Vec::new();
    let stages = e.stages();
    let stages = &stages[..n_max as usize];
    let checked = stages.last().map_or(0, |s| s.cutoff);

    let mut prev_cutoff = 0u64;
    for stage in stages {
        let special = e.word_at(stage.special_index)?;
        if special != stage.special_word() {
            violations.push(Violation {
                kind: ViolationKind::SpecialSlotMismatch,
                index: stage.special_index,
                detail: format!(
                    "stage {}: q_{} = {special}, expected {}",
                    stage.n,
                    stage.special_index,
                    stage.special_word()
                ),
            });
        }
        if stage.cutoff - stage.n as u64 <= prev_cutoff {
            violations.push(Violation {
                kind: ViolationKind::CutoffNotIncreasing,
                index: stage.cutoff,
                detail: format!("stage {}: i_n - n <= i_(n-1)", stage.n),
            });
        }
        prev_cutoff = stage.cutoff;
        let a2 = Letter::new(stage.a2).expect("nonzero");
        let b = Letter::new(stage.b).expect("nonzero");
        for k in 1..=stage.cutoff {
            let w = e.word_at(k)?;
            if w.starts_with(a2) {
                violations.push(Violation {
                    kind: ViolationKind::StartsWithBannedLetter,
                    index: k,
                    detail: format!("stage {}: q_{k} = {w} starts with a2 = {a2}", stage.n),
                });
            }
            if w.contains(b) {
                violations.push(Violation {
                    kind: ViolationKind::ContainsBannedLetter,
                    index: k,
                    detail: format!("stage {}: q_{k} = {w} contains b = {b}", stage.n),
                });
            }
        }
    }

    // Global injectivity over everything materialized.
    {
        let mut seen: HashMap<FiniteWord, u64> = HashMap::new();
        let total = {
            let state = e.state.lock().expect("poisoned");
            state.assigned.len() as u64
        };
        for k in 1..=total {
            let w = e.word_at(k)?;
            if let Some(&prev) = seen.get(&w) {
                violations.push(Violation {
                    kind: ViolationKind::Duplicate,
                    index: k,
                    detail: format!("{w} already assigned at index {prev}"),
                });
            }
            seen.insert(w, k);
        }
    }

    let mut witness = 0u64;
    for j in 1..=coverage_words {
        let w = e.base().word_at(j)?;
        let k = e.index_of(&w)?;
        witness = witness.max(k);
    }

    Ok(ValidationReport {
        enumeration: e.name().to_string(),
        checked,
        violations,
        coverage: Some(CoverageWitness { words: coverage_words, witness_index: witness }),
    })
}
