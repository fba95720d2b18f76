//! Exact distances: the OTW ultrametric attached to an enumeration, prefix
//! ultrametrics for a rate sequence (the standard product metric is the
//! dyadic instance), a brute-force scan oracle, and the regularity criterion.
//!
//! A distance is represented by its rank: the distinguishing index (OTW) or
//! the first disagreement position (rate model). The numeric value 2^-rank or
//! r_rank is only materialized as an exact rational when a comparison against
//! a rational threshold is needed.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::enumeration::Enumeration;
use crate::error::{Error, Result};
use crate::words::{first_diff_index, prefix_check, FiniteWord, Point};

/// Rank of an ultrametric distance; larger rank means smaller distance, and
/// `Infinite` means the points are equal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Rank {
    Finite(u64),
    Infinite,
}

impl Rank {
    pub fn is_infinite(self) -> bool {
        matches!(self, Rank::Infinite)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Rank::Finite(n) => Some(n),
            Rank::Infinite => None,
        }
    }
}

/// Which metric family a distance was measured in. Ranks of different models
/// are not comparable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ModelTag {
    Otw(String),
    Rate(String),
}

impl ModelTag {
    pub fn label(&self) -> String {
        match self {
            ModelTag::Otw(name) => format!("otw:{name}"),
            ModelTag::Rate(name) => format!("rate:{name}"),
        }
    }
}

/// An exact symbolic distance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UltraDistance {
    pub model: ModelTag,
    pub rank: Rank,
}

/// 2^-n as an exact rational.
pub fn pow2_recip(n: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << n)
}

/// Compact exact formatting: integers as-is, dyadic reciprocals as "2^-k",
/// everything else as "a/b".
pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    if r.numer().is_one() && r.denom().is_positive() {
        let denom = r.denom().magnitude();
        if denom.count_ones() == 1 {
            return format!("2^-{}", denom.trailing_zeros().unwrap_or(0));
        }
    }
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses "2^-k", "a/b", or a plain integer.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = |m: &str| Error::Invalid(format!("cannot parse rational {text:?}: {m}"));
    if let Some(exp) = text.strip_prefix("2^-") {
        let k: u64 = exp.parse().map_err(|_| bad("bad exponent"))?;
        return Ok(pow2_recip(k));
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = den.parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = text.parse().map_err(|_| bad("not a number"))?;
    Ok(BigRational::from(n))
}

// ---------------------------------------------------------------------------
// Rate sequences and prefix ultrametrics.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum RateKind {
    Dyadic,
    Harmonic,
    /// factor * 2^-n.
    ScaledDyadic(BigRational),
    Table(Arc<Vec<BigRational>>),
}

/// A strictly decreasing null sequence of exact positive rationals.
#[derive(Clone, Debug)]
pub struct RateSequence {
    name: String,
    kind: RateKind,
}

impl RateSequence {
    /// r_n = 2^-n: the standard product ultrametric.
    pub fn dyadic() -> RateSequence {
        RateSequence { name: "dyadic".into(), kind: RateKind::Dyadic }
    }

    /// r_n = 1/(n+1).
    pub fn harmonic() -> RateSequence {
        RateSequence { name: "harmonic".into(), kind: RateKind::Harmonic }
    }

    /// r_n = factor * 2^-n, for bi-Lipschitz rescaling experiments.
    pub fn scaled_dyadic(factor: BigRational) -> Result<RateSequence> {
        if !factor.is_positive() {
            return Err(Error::Invalid("rate scale factor must be positive".into()));
        }
        Ok(RateSequence {
            name: format!("dyadic*{}", rational_to_string(&factor)),
            kind: RateKind::ScaledDyadic(factor),
        })
    }

    /// An explicit finite table, for validator tests; queries past the end
    /// are resource errors.
    pub fn table(name: &str, values: Vec<BigRational>) -> RateSequence {
        RateSequence { name: name.into(), kind: RateKind::Table(Arc::new(values)) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, n: u64) -> Result<BigRational> {
        match &self.kind {
            RateKind::Dyadic => Ok(pow2_recip(n)),
            RateKind::Harmonic => Ok(BigRational::new(BigInt::one(), BigInt::from(n + 1))),
            RateKind::ScaledDyadic(factor) => Ok(factor * pow2_recip(n)),
            RateKind::Table(values) => values.get(n as usize).cloned().ok_or_else(|| {
                Error::Resource(format!("rate table {} has no entry {n}", self.name))
            }),
        }
    }

    /// Least n with r_n < eps.
    pub fn first_below(&self, eps: &BigRational) -> Result<u64> {
        const CAP: u64 = 1 << 20;
        for n in 0..CAP {
            if &self.value(n)? < eps {
                return Ok(n);
            }
        }
        Err(Error::Resource(format!(
            "rate {} did not drop below {} within {CAP} terms",
            self.name,
            rational_to_string(eps)
        )))
    }
}

/// d(x, y) = r_{N(x,y)} on infinite points.
pub fn prefix_ultrametric_distance(r: &RateSequence, x: &Point, y: &Point) -> Result<UltraDistance> {
    let rank = match first_diff_index(x, y)? {
        None => Rank::Infinite,
        Some(n) => Rank::Finite(n),
    };
    Ok(UltraDistance { model: ModelTag::Rate(r.name.clone()), rank })
}

// ---------------------------------------------------------------------------
// OTW distances.
// ---------------------------------------------------------------------------

/// Position of the first divergence of two points viewed as (possibly
/// finite) sequences: the first index where letters differ or exactly one
/// point has ended. `None` means the points are equal.
fn first_divergence(x: &Point, y: &Point) -> Option<usize> {
    if x == y {
        return None;
    }
    let bound = match (x.as_eventually_periodic(), y.as_eventually_periodic()) {
        (Some((px, qx)), Some((py, qy))) => {
            px.len() + py.len() + num_integer::lcm(qx.len(), qy.len())
        }
        (Some(_), None) | (None, Some(_)) | (None, None) => {
            let fin_bound = |p: &Point| match p.as_finite() {
                Some(w) => w.len() + 1,
                None => 0,
            };
            fin_bound(x).max(fin_bound(y))
        }
    };
    (0..bound).find(|&i| x.letter_at(i) != y.letter_at(i))
}

/// The shortest finite words that are a prefix of exactly one of x, y.
/// Nonempty whenever x != y; holds one word when one point is a proper
/// prefix of the other, two otherwise.
fn shortest_distinguishing_prefixes(x: &Point, y: &Point) -> Vec<FiniteWord> {
    let Some(i) = first_divergence(x, y) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for p in [x, y] {
        if p.len().at_least(i + 1) {
            out.push(FiniteWord::new(p.first_letters(i + 1)));
        }
    }
    out
}

/// OTW distance d_P(x, y): rank is the least enumeration index whose prefix
/// test distinguishes the two points.
///
/// An upper bound is the smallest index among the shortest distinguishing
/// prefixes; for prefix-monotone enumerations that bound is already the
/// answer, otherwise the range up to the bound is scanned.
pub fn otw_distance(e: &dyn Enumeration, x: &Point, y: &Point) -> Result<UltraDistance> {
    let model = ModelTag::Otw(e.name().to_string());
    let candidates = shortest_distinguishing_prefixes(x, y);
    if candidates.is_empty() {
        return Ok(UltraDistance { model, rank: Rank::Infinite });
    }
    let mut bound = u64::MAX;
    for w in &candidates {
        bound = bound.min(e.index_of(w)?);
    }
    if e.prefix_monotone() {
        return Ok(UltraDistance { model, rank: Rank::Finite(bound) });
    }
    for j in 1..=bound {
        let w = e.word_at(j)?;
        if prefix_check(&w, x) != prefix_check(&w, y) {
            return Ok(UltraDistance { model, rank: Rank::Finite(j) });
        }
    }
    unreachable!("a distinguishing word exists at or below the bound");
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleOutcome {
    Distinguished(u64),
    NoneWithin(u64),
}

/// Brute-force linear scan with no shortcut bound; the independent
/// cross-check for [`otw_distance`].
pub fn otw_distance_oracle(
    e: &dyn Enumeration,
    x: &Point,
    y: &Point,
    scan_limit: u64,
) -> Result<OracleOutcome> {
    for j in 1..=scan_limit {
        let w = e.word_at(j)?;
        if prefix_check(&w, x) != prefix_check(&w, y) {
            return Ok(OracleOutcome::Distinguished(j));
        }
    }
    Ok(OracleOutcome::NoneWithin(scan_limit))
}

// ---------------------------------------------------------------------------
// A metric handle usable by the shadowing engine.
// ---------------------------------------------------------------------------

/// A metric on the shift space: either the OTW ultrametric of an enumeration
/// (total on all points) or a prefix ultrametric (infinite points only).
#[derive(Clone)]
pub enum Metric {
    Otw(Arc<dyn Enumeration>),
    Rate(RateSequence),
}

impl Metric {
    pub fn model(&self) -> ModelTag {
        match self {
            Metric::Otw(e) => ModelTag::Otw(e.name().to_string()),
            Metric::Rate(r) => ModelTag::Rate(r.name().to_string()),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<UltraDistance> {
        match self {
            Metric::Otw(e) => otw_distance(e.as_ref(), x, y),
            Metric::Rate(r) => prefix_ultrametric_distance(r, x, y),
        }
    }

    /// The distance rank if it is <= cap, `None` otherwise (including equal
    /// points). Never materializes enumeration indices beyond `cap`.
    pub fn rank_within(&self, x: &Point, y: &Point, cap: u64) -> Result<Option<u64>> {
        match self {
            Metric::Otw(e) => {
                if x == y {
                    return Ok(None);
                }
                match otw_distance_oracle(e.as_ref(), x, y, cap)? {
                    OracleOutcome::Distinguished(j) => Ok(Some(j)),
                    OracleOutcome::NoneWithin(_) => Ok(None),
                }
            }
            Metric::Rate(_) => Ok(first_diff_index(x, y)?.filter(|&n| n <= cap)),
        }
    }

    /// Exact value of a distance of the given rank in this metric.
    pub fn value_of_rank(&self, rank: Rank) -> Result<BigRational> {
        match rank {
            Rank::Infinite => Ok(BigRational::zero()),
            Rank::Finite(n) => match self {
                Metric::Otw(_) => Ok(pow2_recip(n)),
                Metric::Rate(r) => r.value(n),
            },
        }
    }

    /// Ranks r with value(r) >= threshold are exactly 0..strict_cap, so
    /// d(x, y) < threshold iff no distinguishing rank <= strict_cap exists.
    pub fn strict_cap(&self, threshold: &BigRational) -> Result<u64> {
        match self {
            Metric::Otw(_) => Ok(RateSequence::dyadic().first_below(threshold)?.saturating_sub(1)),
            Metric::Rate(r) => Ok(r.first_below(threshold)?.saturating_sub(1)),
        }
    }

    /// Exact strict comparison d(x, y) < threshold.
    pub fn distance_lt(&self, x: &Point, y: &Point, threshold: &BigRational) -> Result<bool> {
        if !threshold.is_positive() {
            return Ok(false);
        }
        match self {
            Metric::Otw(_) => {
                let first_small = RateSequence::dyadic().first_below(threshold)?;
                if first_small <= 1 {
                    // Every OTW distance is 0 or 2^-j with j >= 1.
                    return Ok(true);
                }
                Ok(self.rank_within(x, y, first_small - 1)?.is_none())
            }
            Metric::Rate(r) => match first_diff_index(x, y)? {
                None => Ok(true),
                Some(n) => Ok(&r.value(n)? < threshold),
            },
        }
    }
}

/// Builds a metric from a textual spec: "prod", "rate:dyadic",
/// "rate:harmonic", "otw:block", or "otw:bad". `stage_ceiling` bounds the bad
/// enumeration's materialization.
pub fn metric_from_spec(spec: &str, stage_ceiling: u32) -> Result<Metric> {
    use crate::enumeration::{BadEnumeration, BlockEnumeration};
    match spec {
        "prod" | "rate:dyadic" => Ok(Metric::Rate(RateSequence::dyadic())),
        "rate:harmonic" => Ok(Metric::Rate(RateSequence::harmonic())),
        "otw:block" => Ok(Metric::Otw(Arc::new(BlockEnumeration::default()))),
        "otw:bad" => Ok(Metric::Otw(Arc::new(BadEnumeration::new(
            Arc::new(BlockEnumeration::default()),
            stage_ceiling,
        )))),
        other => Err(Error::Invalid(format!(
            "unknown metric {other:?}; expected prod, rate:dyadic, rate:harmonic, otw:block, or otw:bad"
        ))),
    }
}

impl std::fmt::Debug for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Metric({})", self.model().label())
    }
}

impl Serialize for UltraDistance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("UltraDistance", 3)?;
        s.serialize_field("model", &self.model.label())?;
        match self.rank {
            Rank::Infinite => s.serialize_field("rank", "inf")?,
            Rank::Finite(n) => s.serialize_field("rank", &n)?,
        }
        let value = match (&self.model, self.rank) {
            (_, Rank::Infinite) => "0".to_string(),
            (ModelTag::Otw(_), Rank::Finite(n)) => format!("2^-{n}"),
            (ModelTag::Rate(_), Rank::Finite(n)) => format!("r_{n}"),
        };
        s.serialize_field("value", &value)?;
        s.end()
    }
}

// ---------------------------------------------------------------------------
// Regularity criterion.
// ---------------------------------------------------------------------------

/// Outcome of instantiating the analytic bounds alpha_n <= r_n and
/// eta_n >= r_(n-1) and checking alpha_n <= C * eta_(n+p) with C = 1.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityProfile {
    pub rate: String,
    pub order: u32,
    pub n_max: u64,
    pub c: u32,
    pub holds: bool,
    /// First n where r_(n+1) >= r_n, if monotonicity fails.
    pub monotone_violation: Option<u64>,
}

pub fn regularity_check(r: &RateSequence, p: u32, n_max: u64) -> Result<RegularityProfile> {
    if p < 1 {
        return Err(Error::Invalid("order p must be >= 1".into()));
    }
    let mut monotone_violation = None;
    for n in 0..n_max + p as u64 {
        if r.value(n + 1)? >= r.value(n)? {
            monotone_violation = Some(n);
            break;
        }
    }
    let mut holds = monotone_violation.is_none();
    if holds {
        // alpha_n <= eta_(n+p) instantiated as r_n <= r_(n+p-1).
        for n in 0..=n_max {
            if r.value(n)? < r.value(n + p as u64 - 1)? {
                holds = false;
                break;
            }
        }
    }
    Ok(RegularityProfile {
        rate: r.name().to_string(),
        order: p,
        n_max,
        c: 1,
        holds,
        monotone_violation,
    })
}

// ---------------------------------------------------------------------------
// Empirical modulus-of-continuity table.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ModulusRow {
    pub rank: u64,
    pub pairs: u64,
    /// Smallest rank the other metric assigned among these pairs.
    pub min_other_rank: Option<u64>,
    /// rank - min_other_rank; how much closeness can degrade.
    pub deficit: Option<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusTable {
    pub first: String,
    pub second: String,
    pub equal_pairs: u64,
    pub forward: Vec<ModulusRow>,
    pub backward: Vec<ModulusRow>,
}

/// Report-only sampled evidence for uniform equivalence of two metrics.
pub fn modulus_table(d1: &Metric, d2: &Metric, pairs: &[(Point, Point)]) -> Result<ModulusTable> {
    use std::collections::BTreeMap;

    let mut equal_pairs = 0u64;
    let mut ranks = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let r1 = d1.distance(x, y)?.rank;
        let r2 = d2.distance(x, y)?.rank;
        if r1.is_infinite() && r2.is_infinite() {
            equal_pairs += 1;
        }
        ranks.push((r1, r2));
    }

    let direction = |swap: bool| -> Vec<ModulusRow> {
        let mut by_rank: BTreeMap<u64, (u64, Option<u64>)> = BTreeMap::new();
        for &(r1, r2) in &ranks {
            let (a, b) = if swap { (r2, r1) } else { (r1, r2) };
            let Rank::Finite(a) = a else { continue };
            let entry = by_rank.entry(a).or_insert((0, None));
            entry.0 += 1;
            if let Rank::Finite(b) = b {
                entry.1 = Some(entry.1.map_or(b, |m: u64| m.min(b)));
            }
        }
        by_rank
            .into_iter()
            .map(|(rank, (pairs, min_other))| ModulusRow {
                rank,
                pairs,
                min_other_rank: min_other,
                deficit: min_other.map(|m| rank as i64 - m as i64),
            })
            .collect()
    };

    Ok(ModulusTable {
        first: d1.model().label(),
        second: d2.model().label(),
        equal_pairs,
        forward: direction(false),
        backward: direction(true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{BadEnumeration, BlockEnumeration};
    use crate::words::parse_point;

    fn pt(s: &str) -> Point {
        parse_point(s).unwrap()
    }

    #[test]
    fn otw_distance_examples() {
        let block = BlockEnumeration::default();
        let x = pt("(1)");
        assert_eq!(otw_distance(&block, &x, &x).unwrap().rank, Rank::Infinite);
        // q_1 = e is a prefix of both, q_2 = 1 distinguishes.
        let d = otw_distance(&block, &pt("(1)"), &pt("(2)")).unwrap();
        assert_eq!(d.rank, Rank::Finite(2));

        let bad = BadEnumeration::default();
        let d = otw_distance(&bad, &pt("2.3(4)"), &pt("4.1.2.3(4)")).unwrap();
        assert_eq!(d.rank, Rank::Finite(6));
    }

    #[test]
    fn oracle_examples() {
        let block = BlockEnumeration::default();
        let x = pt("(1)");
        assert_eq!(
            otw_distance_oracle(&block, &x, &x, 100).unwrap(),
            OracleOutcome::NoneWithin(100)
        );
        assert_eq!(
            otw_distance_oracle(&block, &pt("(1)"), &pt("(2)"), 1).unwrap(),
            OracleOutcome::NoneWithin(1)
        );
        assert_eq!(
            otw_distance_oracle(&block, &pt("(1)"), &pt("(2)"), 2).unwrap(),
            OracleOutcome::Distinguished(2)
        );
    }

    #[test]
    fn otw_distance_handles_finite_points() {
        let block = BlockEnumeration::default();
        // e is a proper prefix of everything; "1" distinguishes it from (1).
        let d = otw_distance(&block, &Point::empty(), &pt("(1)")).unwrap();
        assert_eq!(d.rank, Rank::Finite(2));
        // The only distinguishing word is 1.2.1 itself, the 17th block word.
        let d = otw_distance(&block, &pt("1.2"), &pt("1.2.1")).unwrap();
        assert_eq!(d.rank, Rank::Finite(17));
    }

    #[test]
    fn prefix_ultrametric_examples() {
        let r = RateSequence::dyadic();
        let d = prefix_ultrametric_distance(&r, &pt("1.2.3(9)"), &pt("1.2.4(9)")).unwrap();
        assert_eq!(d.rank, Rank::Finite(2));
        let x = pt("(5)");
        assert_eq!(prefix_ultrametric_distance(&r, &x, &x).unwrap().rank, Rank::Infinite);
        assert!(prefix_ultrametric_distance(&r, &pt("1.2"), &x).is_err());

        let harmonic = RateSequence::harmonic();
        let d = prefix_ultrametric_distance(&harmonic, &pt("1.2.3(7)"), &pt("1.2.3.9(7)")).unwrap();
        assert_eq!(d.rank, Rank::Finite(3));
        assert_eq!(harmonic.value(3).unwrap(), parse_rational("1/4").unwrap());
    }

    #[test]
    fn strict_threshold_comparisons() {
        let block: Arc<dyn Enumeration> = Arc::new(BlockEnumeration::default());
        let m = Metric::Otw(block);
        let (x, y) = (pt("(1)"), pt("(2)")); // rank 2, value 1/4
        assert!(m.distance_lt(&x, &y, &parse_rational("1/2").unwrap()).unwrap());
        assert!(!m.distance_lt(&x, &y, &parse_rational("1/4").unwrap()).unwrap());
        assert!(!m.distance_lt(&x, &y, &parse_rational("2^-3").unwrap()).unwrap());
        assert!(m.distance_lt(&x, &x, &parse_rational("2^-40").unwrap()).unwrap());
    }

    #[test]
    fn regularity_examples() {
        let dyadic = RateSequence::dyadic();
        assert!(regularity_check(&dyadic, 1, 64).unwrap().holds);
        let harmonic = RateSequence::harmonic();
        assert!(regularity_check(&harmonic, 2, 64).unwrap().holds);

        let bad_table = RateSequence::table(
            "ascent",
            vec![
                parse_rational("1/2").unwrap(),
                parse_rational("1/4").unwrap(),
                parse_rational("1/3").unwrap(),
                parse_rational("1/8").unwrap(),
                parse_rational("1/16").unwrap(),
            ],
        );
        let profile = regularity_check(&bad_table, 1, 3).unwrap();
        assert!(!profile.holds);
        assert_eq!(profile.monotone_violation, Some(1));
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(rational_to_string(&parse_rational("2^-5").unwrap()), "2^-5");
        assert_eq!(rational_to_string(&parse_rational("3/2").unwrap()), "3/2");
        assert_eq!(rational_to_string(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_err());
    }
}
