//! Letters, finite words, and eventually periodic points of the OTW full shift.
//!
//! The alphabet is the set of positive naturals. A [`Point`] is either a
//! finite word (including the empty word) or an eventually periodic infinite
//! sequence stored in canonical form: primitive period, minimal preamble.
//! Canonical form makes structural equality coincide with equality of the
//! underlying sequences.

use std::fmt;
use std::num::NonZeroU32;

use num_integer::Integer;

use crate::error::{Error, Result};

/// A letter of the alphabet, identified with a natural number >= 1.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(NonZeroU32);

impl Letter {
    pub fn new(id: u32) -> Result<Letter> {
        NonZeroU32::new(id).map(Letter).ok_or(Error::ZeroLetter)
    }

    pub fn id(self) -> u32 {
        self.0.get()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite (possibly empty) word over the alphabet.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct FiniteWord(Vec<Letter>);

impl FiniteWord {
    pub fn empty() -> FiniteWord {
        FiniteWord(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> FiniteWord {
        FiniteWord(letters)
    }

    /// Builds a word from raw ids, rejecting 0.
    pub fn from_ids(ids: &[u32]) -> Result<FiniteWord> {
        ids.iter().map(|&id| Letter::new(id)).collect::<Result<_>>().map(FiniteWord)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn max_letter(&self) -> Option<Letter> {
        self.0.iter().copied().max()
    }

    pub fn contains(&self, a: Letter) -> bool {
        self.0.contains(&a)
    }

    pub fn starts_with(&self, a: Letter) -> bool {
        self.first() == Some(a)
    }

    pub fn is_prefix_of(&self, other: &FiniteWord) -> bool {
        other.0.starts_with(&self.0)
    }

    /// The shift image with the OTW convention: words of length <= 1 map to
    /// the empty word.
    pub fn shift(&self) -> FiniteWord {
        if self.0.len() <= 1 {
            FiniteWord::empty()
        } else {
            FiniteWord(self.0[1..].to_vec())
        }
    }
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        for a in &self.0 {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{a}")?;
            first = false;
        }
        Ok(())
    }
}

/// Length of a point: finite, or infinite for eventually periodic sequences.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Length {
    Finite(usize),
    Infinite,
}

impl Length {
    pub fn at_least(self, k: usize) -> bool {
        match self {
            Length::Finite(n) => n >= k,
            Length::Infinite => true,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Repr {
    Finite(FiniteWord),
    // Invariant: period is primitive and nonempty, preamble is minimal.
    Infinite { preamble: FiniteWord, period: FiniteWord },
}

/// A point of the OTW full shift: a finite word or an eventually periodic
/// infinite sequence in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Point {
    repr: Repr,
}

/// Smallest primitive root of a word: the shortest prefix whose repetition
/// gives the word back.
fn primitive_root(word: &FiniteWord) -> FiniteWord {
    let letters = word.letters();
    let n = letters.len();
    for d in 1..=n {
        if n % d == 0 && letters.chunks(d).all(|c| c == &letters[..d]) {
            return FiniteWord(letters[..d].to_vec());
        }
    }
    word.clone()
}

impl Point {
    pub fn finite(word: FiniteWord) -> Point {
        Point { repr: Repr::Finite(word) }
    }

    pub fn empty() -> Point {
        Point::finite(FiniteWord::empty())
    }

    /// Canonicalizes `preamble . period^omega`: reduces the period to its
    /// primitive root, then absorbs trailing preamble letters into the
    /// periodic tail. Rejects an empty period.
    pub fn eventually_periodic(preamble: FiniteWord, period: FiniteWord) -> Result<Point> {
        if period.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        let mut pre = preamble.0;
        let mut per = primitive_root(&period).0;
        // pre.a.(p1..pk)^omega = pre.(a.p1..p_{k-1})^omega when pk = a.
        while let (Some(&a), Some(&b)) = (pre.last(), per.last()) {
            if a != b {
                break;
            }
            pre.pop();
            per.rotate_right(1);
        }
        Ok(Point {
            repr: Repr::Infinite { preamble: FiniteWord(pre), period: FiniteWord(per) },
        })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.repr, Repr::Infinite { .. })
    }

    pub fn as_finite(&self) -> Option<&FiniteWord> {
        match &self.repr {
            Repr::Finite(w) => Some(w),
            Repr::Infinite { .. } => None,
        }
    }

    /// Canonical (preamble, period) of an infinite point.
    pub fn as_eventually_periodic(&self) -> Option<(&FiniteWord, &FiniteWord)> {
        match &self.repr {
            Repr::Finite(_) => None,
            Repr::Infinite { preamble, period } => Some((preamble, period)),
        }
    }

    pub fn len(&self) -> Length {
        match &self.repr {
            Repr::Finite(w) => Length::Finite(w.len()),
            Repr::Infinite { .. } => Length::Infinite,
        }
    }

    pub fn letter_at(&self, i: usize) -> Option<Letter> {
        match &self.repr {
            Repr::Finite(w) => w.letters().get(i).copied(),
            Repr::Infinite { preamble, period } => {
                if i < preamble.len() {
                    Some(preamble.letters()[i])
                } else {
                    let j = (i - preamble.len()) % period.len();
                    Some(period.letters()[j])
                }
            }
        }
    }

    pub fn first_letter(&self) -> Option<Letter> {
        self.letter_at(0)
    }

    pub fn first_letters(&self, k: usize) -> Vec<Letter> {
        (0..k).map_while(|i| self.letter_at(i)).collect()
    }

    /// The OTW shift map: drops the first letter, sending points of length
    /// <= 1 to the empty word.
    pub fn shift(&self) -> Point {
        match &self.repr {
            Repr::Finite(w) => Point::finite(w.shift()),
            Repr::Infinite { preamble, period } => {
                if preamble.is_empty() {
                    let mut per = period.0.clone();
                    per.rotate_left(1);
                    Point::eventually_periodic(FiniteWord::empty(), FiniteWord(per))
                        .expect("period stays nonempty")
                } else {
                    Point::eventually_periodic(preamble.shift_keep(), period.clone())
                        .expect("period stays nonempty")
                }
            }
        }
    }

    /// m-fold shift, computed without m individual rotations.
    pub fn iterate_shift(&self, m: usize) -> Point {
        match &self.repr {
            Repr::Finite(w) => {
                if m >= w.len() {
                    Point::empty()
                } else {
                    Point::finite(FiniteWord(w.letters()[m..].to_vec()))
                }
            }
            Repr::Infinite { preamble, period } => {
                if m <= preamble.len() {
                    Point::eventually_periodic(
                        FiniteWord(preamble.letters()[m..].to_vec()),
                        period.clone(),
                    )
                    .expect("period stays nonempty")
                } else {
                    let mut per = period.0.clone();
                    per.rotate_left((m - preamble.len()) % period.len());
                    Point::eventually_periodic(FiniteWord::empty(), FiniteWord(per))
                        .expect("period stays nonempty")
                }
            }
        }
    }
}

impl FiniteWord {
    // Like `shift` but keeps a length-1 word dropping to empty; used where the
    // OTW length-1 convention must not apply (preamble handling).
    fn shift_keep(&self) -> FiniteWord {
        if self.0.is_empty() {
            FiniteWord::empty()
        } else {
            FiniteWord(self.0[1..].to_vec())
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite(w) => write!(f, "{w}"),
            Repr::Infinite { preamble, period } => {
                if !preamble.is_empty() {
                    write!(f, "{preamble}")?;
                }
                write!(f, "({period})")
            }
        }
    }
}

/// The prefix relation: true iff `u = e`, or `x` has at least `|u|` letters
/// and they agree with `u`.
pub fn prefix_check(u: &FiniteWord, x: &Point) -> bool {
    if u.is_empty() {
        return true;
    }
    if !x.len().at_least(u.len()) {
        return false;
    }
    u.letters().iter().enumerate().all(|(i, &a)| x.letter_at(i) == Some(a))
}

/// First disagreement index `N(x, y)` of the product model; `None` means the
/// points are equal. Both points must be infinite.
pub fn first_diff_index(x: &Point, y: &Point) -> Result<Option<u64>> {
    let (px, qx) = x
        .as_eventually_periodic()
        .ok_or(Error::FiniteInProductModel("first_diff_index"))?;
    let (py, qy) = y
        .as_eventually_periodic()
        .ok_or(Error::FiniteInProductModel("first_diff_index"))?;
    // Beyond this bound, agreement of the eventually periodic tails is forced.
    let bound = px.len() + py.len() + qx.len().lcm(&qy.len());
    for i in 0..bound {
        if x.letter_at(i) != y.letter_at(i) {
            return Ok(Some(i as u64));
        }
    }
    debug_assert_eq!(x, y, "agreement past the tail bound implies equality");
    Ok(None)
}

// ---------------------------------------------------------------------------
// Word-literal grammar.
//
//   finite word    = "e" | digits ("." digits)*
//   infinite point = [finiteword] "(" finiteword ")"
// ---------------------------------------------------------------------------

fn parse_letters(text: &str, offset: usize) -> Result<Vec<Letter>> {
    let mut letters = Vec::new();
    let mut pos = offset;
    for part in text.split('.') {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse {
                position: pos,
                message: format!("expected a letter id, found {part:?}"),
            });
        }
        let id: u32 = part.parse().map_err(|_| Error::Parse {
            position: pos,
            message: format!("letter id {part:?} out of range"),
        })?;
        if id == 0 {
            return Err(Error::Parse { position: pos, message: "letter id 0 is invalid".into() });
        }
        letters.push(Letter::new(id).expect("nonzero"));
        pos += part.len() + 1;
    }
    Ok(letters)
}

/// Parses a finite-word literal ("e", "1.2.3").
pub fn parse_word(text: &str) -> Result<FiniteWord> {
    if text == "e" {
        return Ok(FiniteWord::empty());
    }
    parse_letters(text, 0).map(FiniteWord)
}

/// Parses a point literal: "e", "1.2.3", "1.2.3(4)", "(1.1)". Infinite points
/// are canonicalized on parse.
pub fn parse_point(text: &str) -> Result<Point> {
    match text.find('(') {
        None => parse_word(text).map(Point::finite),
        Some(open) => {
            if !text.ends_with(')') {
                return Err(Error::Parse {
                    position: text.len(),
                    message: "expected closing ')'".into(),
                });
            }
            let pre_text = &text[..open];
            let per_text = &text[open + 1..text.len() - 1];
            let preamble = if pre_text.is_empty() {
                FiniteWord::empty()
            } else {
                FiniteWord(parse_letters(pre_text, 0)?)
            };
            if per_text.is_empty() {
                return Err(Error::Parse {
                    position: open + 1,
                    message: "period must be nonempty".into(),
                });
            }
            let period = FiniteWord(parse_letters(per_text, open + 1)?);
            Point::eventually_periodic(preamble, period)
        }
    }
}

/// Formats a point using the word-literal grammar; inverse of [`parse_point`]
/// on canonical forms.
pub fn format_point(x: &Point) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &str) -> Point {
        parse_point(s).unwrap()
    }

    fn w(s: &str) -> FiniteWord {
        parse_word(s).unwrap()
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["e", "1", "1.2.3", "1.2.3(4)", "(7)", "3(1.2)"] {
            assert_eq!(format_point(&pt(s)), s);
        }
        assert_eq!(pt("(1.1)"), pt("(1)"));
        assert_eq!(format_point(&pt("(1.1)")), "(1)");
        assert!(parse_point("0").is_err());
        assert!(parse_point("1.(2)").is_err());
        assert!(parse_point("(e)").is_err());
        assert!(parse_point("1(2").is_err());
    }

    #[test]
    fn canonical_forms() {
        // Primitive-root reduction.
        assert_eq!(pt("(1.2.1.2)"), pt("(1.2)"));
        // Trailing preamble letters absorb into the tail.
        assert_eq!(
            Point::eventually_periodic(w("1.2"), w("2")).unwrap(),
            pt("1(2)")
        );
        assert_eq!(pt("3(1.2)"), pt("3(1.2)"));
        // Idempotence through the accessors.
        let p = pt("1.2(3.2)");
        let (pre, per) = p.as_eventually_periodic().unwrap();
        assert_eq!(Point::eventually_periodic(pre.clone(), per.clone()).unwrap(), p);
        assert!(Point::eventually_periodic(w("1"), FiniteWord::empty()).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(Point::empty().shift(), Point::empty());
        assert_eq!(pt("1").shift(), Point::empty());
        assert_eq!(pt("1.2.3").shift(), pt("2.3"));
        assert_eq!(pt("1.2.3(4)").shift(), pt("2.3(4)"));
        assert_eq!(pt("(1.2)").shift(), pt("(2.1)"));
    }

    #[test]
    fn iterate_shift_examples() {
        assert_eq!(pt("1.2.3").iterate_shift(0), pt("1.2.3"));
        assert_eq!(pt("(1.2)").iterate_shift(2), pt("(1.2)"));
        assert_eq!(pt("1.2.3").iterate_shift(5), Point::empty());
        let x = pt("1.2(3.4.5)");
        for m in 0..20 {
            for n in 0..20 {
                assert_eq!(x.iterate_shift(m + n), x.iterate_shift(n).iterate_shift(m));
            }
        }
    }

    #[test]
    fn prefix_check_examples() {
        assert!(prefix_check(&w("e"), &pt("e")));
        assert!(prefix_check(&w("e"), &pt("(9)")));
        assert!(prefix_check(&w("1.2"), &pt("1(2)")));
        assert!(!prefix_check(&w("1.2.3"), &pt("1.2")));
        assert!(prefix_check(&w("1.2"), &pt("1.2")));
        assert!(!prefix_check(&w("2"), &pt("1.2.3")));
    }

    #[test]
    fn first_diff_examples() {
        let x = pt("1.2.3(9)");
        assert_eq!(first_diff_index(&x, &x).unwrap(), None);
        assert_eq!(first_diff_index(&x, &pt("1.2.4(9)")).unwrap(), Some(2));
        assert_eq!(first_diff_index(&pt("(1)"), &pt("(2)")).unwrap(), Some(0));
        // Same long prefix, different tails.
        assert_eq!(first_diff_index(&pt("1.2(3)"), &pt("1.2.3.3(4)")).unwrap(), Some(4));
        assert!(first_diff_index(&pt("1.2"), &x).is_err());
    }

    #[test]
    fn letter_access() {
        let x = pt("1.2(3.4)");
        let expected = [1, 2, 3, 4, 3, 4, 3, 4];
        for (i, id) in expected.iter().enumerate() {
            assert_eq!(x.letter_at(i).unwrap().id(), *id);
        }
        assert_eq!(pt("1.2").letter_at(2), None);
        assert_eq!(x.first_letters(5).len(), 5);
        assert_eq!(pt("1.2").first_letters(5).len(), 2);
    }
}
