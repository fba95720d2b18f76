//! The block enumeration: list B_1, then B_2 \ B_1, then B_3 \ B_2, ...,
//! where B_N holds the words of length <= N over the letters {1..N}. Inside
//! each block, words are ordered by length, then lexicographically. Prefixes
//! and shift images are strictly shorter, so this order is prefix-closed and
//! shift-closed on every prefix of the listing.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::words::{FiniteWord, Letter};

pub const DEFAULT_WORD_CEILING: usize = 2_000_000;

struct State {
    /// words[k-1] is the k-th word of the listing.
    words: Vec<FiniteWord>,
    /// Next block number to materialize.
    next_block: u32,
}

pub struct BlockEnumeration {
    state: Mutex<State>,
    word_ceiling: usize,
}

impl Default for BlockEnumeration {
    fn default() -> Self {
        BlockEnumeration::new(DEFAULT_WORD_CEILING)
    }
}

/// Number of length-`len` words over the letters {1..m}; the empty alphabet
/// only carries the empty word, which belongs to no block below B_1.
fn count_words(m: u128, len: u32) -> Option<u128> {
    if m == 0 {
        return Some(0);
    }
    m.checked_pow(len)
}

/// |B_n| = sum over k <= n of n^k, with B_0 empty.
fn block_size(n: u32) -> Option<u128> {
    if n == 0 {
        return Some(0);
    }
    let mut total: u128 = 0;
    for k in 0..=n {
        total = total.checked_add(count_words(n as u128, k)?)?;
    }
    Some(total)
}

/// Number of length-|w| words over {1..m} lexicographically smaller than w.
/// w may contain letters above m.
fn lex_rank_bounded(w: &FiniteWord, m: u128) -> Option<u128> {
    let len = w.len() as u32;
    let mut total: u128 = 0;
    for (i, &a) in w.letters().iter().enumerate() {
        let a = a.id() as u128;
        let choices = a.saturating_sub(1).min(m);
        let tail = count_words(m, len - 1 - i as u32)?;
        total = total.checked_add(choices.checked_mul(tail)?)?;
        if a > m {
            // No word bounded by m shares the prefix through position i.
            break;
        }
    }
    Some(total)
}

/// Closed-form index of a word in the block order. Exact; equivalent to
/// scanning the materialized listing (cross-checked in tests).
fn analytic_index(w: &FiniteWord) -> Option<u128> {
    if w.is_empty() {
        return Some(1);
    }
    let len = w.len() as u32;
    let max_letter = w.max_letter().expect("nonempty").id();
    let n = len.max(max_letter);
    let prev = n - 1;

    let mut index = block_size(prev)?;
    // New words of the block that are strictly shorter.
    for l in 0..len {
        let in_block = count_words(n as u128, l)?;
        let in_prev = if l <= prev { count_words(prev as u128, l)? } else { 0 };
        index = index.checked_add(in_block - in_prev)?;
    }
    // New words of the same length that sort lexicographically earlier.
    let lt_block = lex_rank_bounded(w, n as u128)?;
    let lt_prev = if len <= prev { lex_rank_bounded(w, prev as u128)? } else { 0 };
    index.checked_add(lt_block - lt_prev)?.checked_add(1)
}

impl BlockEnumeration {
    pub fn new(word_ceiling: usize) -> Self {
        BlockEnumeration {
            state: Mutex::new(State { words: Vec::new(), next_block: 1 }),
            word_ceiling,
        }
    }

    fn materialize_block(state: &mut State) {
        let n = state.next_block;
        let prev = n - 1;
        for len in 0..=n {
            if len == 0 {
                if prev == 0 {
                    state.words.push(FiniteWord::empty());
                }
                continue;
            }
            // Odometer over {1..n}^len in lexicographic order.
            let mut digits = vec![1u32; len as usize];
            loop {
                let is_new = len > prev || digits.iter().any(|&d| d > prev);
                if is_new {
                    let letters =
                        digits.iter().map(|&d| Letter::new(d).expect("nonzero")).collect();
                    state.words.push(FiniteWord::new(letters));
                }
                let mut pos = len as usize;
                let mut advanced = false;
                while pos > 0 {
                    pos -= 1;
                    if digits[pos] < n {
                        digits[pos] += 1;
                        for d in &mut digits[pos + 1..] {
                            *d = 1;
                        }
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
        }
        state.next_block += 1;
    }

    fn ensure_len(&self, k: usize) -> Result<()> {
        let mut state = self.state.lock().expect("poisoned");
        while state.words.len() < k {
            if state.words.len() >= self.word_ceiling {
                return Err(Error::Resource(format!(
                    "block enumeration word ceiling {} reached while seeking index {k}",
                    self.word_ceiling
                )));
            }
            Self::materialize_block(&mut state);
        }
        Ok(())
    }
}

impl super::Enumeration for BlockEnumeration {
    fn name(&self) -> &str {
        "block"
    }

    fn word_at(&self, k: u64) -> Result<FiniteWord> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        self.ensure_len(k as usize)?;
        let state = self.state.lock().expect("poisoned");
        Ok(state.words[(k - 1) as usize].clone())
    }

    fn index_of(&self, w: &FiniteWord) -> Result<u64> {
        let idx = analytic_index(w).ok_or_else(|| {
            Error::Resource(format!("block index of {w} overflows the supported range"))
        })?;
        u64::try_from(idx).map_err(|_| {
            Error::Resource(format!("block index of {w} exceeds the 64-bit index range"))
        })
    }

    fn prefix_monotone(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::Enumeration;
    use crate::words::parse_word;

    fn w(s: &str) -> FiniteWord {
        parse_word(s).unwrap()
    }

    #[test]
    fn first_entries_follow_the_hand_enumeration() {
        let e = BlockEnumeration::default();
        let expected = ["e", "1", "2", "1.1", "1.2", "2.1", "2.2", "3"];
        for (i, s) in expected.iter().enumerate() {
            assert_eq!(e.word_at(i as u64 + 1).unwrap(), w(s), "index {}", i + 1);
        }
        assert!(e.word_at(0).is_err());
    }

    #[test]
    fn shift_closure_witness() {
        let e = BlockEnumeration::default();
        assert_eq!(e.index_of(&w("1")).unwrap(), 2);
        assert_eq!(e.index_of(&w("2.1")).unwrap(), 6);
    }

    #[test]
    fn analytic_index_matches_materialized_listing() {
        let e = BlockEnumeration::default();
        for k in 1..=20_000u64 {
            let word = e.word_at(k).unwrap();
            assert_eq!(e.index_of(&word).unwrap(), k, "word {word}");
        }
    }

    #[test]
    fn index_is_monotone_along_prefix_extensions() {
        let e = BlockEnumeration::default();
        for k in 1..=3_000u64 {
            let word = e.word_at(k).unwrap();
            for cut in 0..word.len() {
                let prefix = FiniteWord::new(word.letters()[..cut].to_vec());
                assert!(e.index_of(&prefix).unwrap() < k);
            }
        }
    }

    #[test]
    fn large_letter_indices_do_not_scan() {
        let e = BlockEnumeration::default();
        // "13" opens block 13.
        assert_eq!(e.index_of(&w("13")).unwrap() - 1, block_size(12).unwrap() as u64);
        // Deep blocks overflow the 64-bit range and surface as resource errors.
        assert!(e.index_of(&w("64")).is_err());
    }
}
