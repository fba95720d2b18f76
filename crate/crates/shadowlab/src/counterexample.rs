//! Failure of Lipschitz shadowing under the bad OTW metric, packaged as a
//! machine-checkable certificate.
//!
//! The refutation is symbolic, not search-based: the space of potential
//! shadowing points is infinite, so the instance carries the finite
//! implication chain (a threshold gap, two prefix-agreement facts, and a pair
//! of conflicting letter equations) and the verifier re-derives every link
//! exactly. The sampled cross-check is supplementary evidence only.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::enumeration::{BadEnumeration, BadStage, Enumeration};
use crate::error::{Error, Result};
use crate::metrics::{pow2_recip, rational_to_string, Metric, ModelTag};
use crate::shadowing::{shadow_horizon, verify_pseudo_orbit, PseudoOrbit};
use crate::words::{prefix_check, FiniteWord, Letter, Point};

/// A fully assembled instance of the counterexample: the stage parameters,
/// the planted word w = a1.a2.a3, delta = 2^-i_n, and the period-2 orbit
/// [a1.a2.a3.(b), b.a1.a2.a3.(b)].
#[derive(Clone)]
pub struct CounterexampleInstance {
    pub enumeration: Arc<BadEnumeration>,
    pub l: BigRational,
    pub delta0: BigRational,
    pub n: u32,
    pub stage: BadStage,
    pub w: FiniteWord,
    pub delta: BigRational,
    pub orbit: PseudoOrbit,
}

/// 2^n as an exact rational.
fn pow2(n: u32) -> BigRational {
    BigRational::from(BigInt::one() << n)
}

/// Builds the instance for the least stage n with 2^n > L and 2^-i_n < delta0,
/// and checks strictly that the orbit is a delta-pseudo-orbit.
pub fn build_counterexample(
    enumeration: Arc<BadEnumeration>,
    l: &BigRational,
    delta0: &BigRational,
) -> Result<CounterexampleInstance> {
    if !l.is_positive() || !delta0.is_positive() {
        return Err(Error::Invalid("L and delta0 must be positive".into()));
    }
    let mut n = 1u32;
    let stage = loop {
        let stage = enumeration.stage(n)?;
        if pow2(n) > *l && pow2_recip(stage.cutoff) < *delta0 {
            break stage;
        }
        n += 1;
    };
    let w = stage.special_word();
    debug_assert_eq!(enumeration.word_at(stage.special_index)?, w);
    let delta = pow2_recip(stage.cutoff);

    let ids = |head: &[u32]| FiniteWord::from_ids(head).expect("letters are >= 1");
    let even = Point::eventually_periodic(w.clone(), ids(&[stage.b]))?;
    let odd = Point::eventually_periodic(
        ids(&[stage.b, stage.a1, stage.a2, stage.a3]),
        ids(&[stage.b]),
    )?;
    let orbit = PseudoOrbit::new(
        Vec::new(),
        vec![even, odd],
        delta.clone(),
        ModelTag::Otw(enumeration.name().to_string()),
    )?;
    let metric = Metric::Otw(enumeration.clone());
    if !verify_pseudo_orbit(&orbit, &metric)? {
        return Err(Error::Invalid(
            "internal error: the counterexample orbit failed strict verification".into(),
        ));
    }
    Ok(CounterexampleInstance {
        enumeration,
        l: l.clone(),
        delta0: delta0.clone(),
        n,
        stage,
        w,
        delta,
        orbit,
    })
}

// ---------------------------------------------------------------------------
// The certificate.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct GapFact {
    /// L * delta.
    pub lhs: String,
    /// 2^-(i_n - n), the distance forced when w prefixes exactly one point.
    pub rhs: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementFact {
    /// The orbit time: w prefixes x^m, so the gap forces w to prefix
    /// shift^m(x) for any hypothetical L*delta-shadowing point x.
    pub m: u64,
    pub word: String,
    /// w prefixes x^m (checked on the orbit itself).
    pub holds: bool,
}

/// A constraint "x_(position) = letter" on the letters of a hypothetical
/// shadowing point, positions counted from 1.
#[derive(Clone, Debug, Serialize)]
pub struct LetterEquation {
    pub positions: Vec<u64>,
    pub letters: Vec<u32>,
    /// Which agreement fact the equation is derived from.
    pub from_m: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Conflict {
    pub position: u64,
    pub first: u32,
    pub second: u32,
    /// The two forced values differ, closing the refutation.
    pub distinct: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefutationCertificate {
    /// i_n - n: the index of the planted word w in the bad enumeration.
    pub threshold_rank: u64,
    pub gap_fact: GapFact,
    pub agreement_facts: Vec<AgreementFact>,
    pub letter_equations: Vec<LetterEquation>,
    pub conflict: Conflict,
}

/// Emits the certificate refuting L*delta-shadowing of the instance's orbit.
/// Fails loudly if w's letters are not pairwise distinct, since the final
/// conflict needs a1 != a3.
pub fn certify_no_shadowing(inst: &CounterexampleInstance) -> Result<RefutationCertificate> {
    let s = &inst.stage;
    let letters = [s.a1, s.a2, s.a3];
    if letters[0] == letters[1] || letters[1] == letters[2] || letters[0] == letters[2] {
        return Err(Error::Invalid(format!(
            "planted word {} must have pairwise distinct letters",
            inst.w
        )));
    }
    let threshold_rank = s.special_index;
    let bound = &inst.l * &inst.delta;
    let forced = pow2_recip(threshold_rank);
    let gap_fact = GapFact {
        lhs: rational_to_string(&bound),
        rhs: rational_to_string(&forced),
        holds: bound < forced,
    };
    let agreement_facts = [0u64, 2u64]
        .into_iter()
        .map(|m| AgreementFact {
            m,
            word: inst.w.to_string(),
            holds: prefix_check(&inst.w, inst.orbit.point_at(m as usize)),
        })
        .collect();
    let letter_equations = vec![
        LetterEquation { positions: vec![1, 2, 3], letters: letters.to_vec(), from_m: 0 },
        LetterEquation { positions: vec![3, 4, 5], letters: letters.to_vec(), from_m: 2 },
    ];
    let conflict = Conflict {
        position: 3,
        first: s.a3,
        second: s.a1,
        distinct: s.a1 != s.a3,
    };
    Ok(RefutationCertificate {
        threshold_rank,
        gap_fact,
        agreement_facts,
        letter_equations,
        conflict,
    })
}

/// Outcome of independent certificate verification.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub accepted: bool,
    /// The first fact that failed, when rejected.
    pub first_failure: Option<String>,
}

impl Verdict {
    fn reject(reason: impl Into<String>) -> Verdict {
        Verdict { accepted: false, first_failure: Some(reason.into()) }
    }
}

/// Re-derives every certificate fact from the instance alone and accepts iff
/// all of them hold.
pub fn verify_certificate(
    inst: &CounterexampleInstance,
    cert: &RefutationCertificate,
) -> Result<Verdict> {
    let s = &inst.stage;
    if pow2(inst.n) <= inst.l {
        return Ok(Verdict::reject(format!("2^{} <= L", inst.n)));
    }
    if pow2_recip(s.cutoff) >= inst.delta0 {
        return Ok(Verdict::reject(format!("2^-{} >= delta0", s.cutoff)));
    }
    if cert.threshold_rank != s.cutoff - s.n as u64 {
        return Ok(Verdict::reject("threshold rank is not i_n - n"));
    }
    let planted = inst.enumeration.word_at(cert.threshold_rank)?;
    if planted != inst.w {
        return Ok(Verdict::reject(format!(
            "word at the threshold index is {planted}, not {}",
            inst.w
        )));
    }
    // Fact (a): the gap. A point x with w prefixing exactly one of
    // (shift^m(x), x^m) would sit at distance >= 2^-(i_n - n) > L * delta.
    if &inst.delta != &pow2_recip(s.cutoff) {
        return Ok(Verdict::reject("delta is not 2^-i_n"));
    }
    if !(&inst.l * &inst.delta < pow2_recip(cert.threshold_rank)) || !cert.gap_fact.holds {
        return Ok(Verdict::reject("gap fact L*delta < 2^-(i_n - n) fails"));
    }
    // Fact (b): w prefixes x^(2k), checked at k = 0, 1.
    for (k, fact) in cert.agreement_facts.iter().enumerate() {
        if fact.m != 2 * k as u64 {
            return Ok(Verdict::reject("agreement facts must cover m = 0 and m = 2"));
        }
        if !fact.holds || !prefix_check(&inst.w, inst.orbit.point_at(fact.m as usize)) {
            return Ok(Verdict::reject(format!("w does not prefix x^{}", fact.m)));
        }
    }
    // Fact (c): the propagated equations and the conflict. "w prefixes x"
    // pins x_1 x_2 x_3 = a1 a2 a3; "w prefixes shift^2(x)" pins
    // x_3 x_4 x_5 = a1 a2 a3; both pin x_3.
    let expected = [s.a1, s.a2, s.a3];
    let eq_ok = |eq: &LetterEquation, positions: &[u64], m: u64| {
        eq.positions == positions && eq.letters == expected && eq.from_m == m
    };
    if cert.letter_equations.len() != 2
        || !eq_ok(&cert.letter_equations[0], &[1, 2, 3], 0)
        || !eq_ok(&cert.letter_equations[1], &[3, 4, 5], 2)
    {
        return Ok(Verdict::reject("letter equations do not match the agreement facts"));
    }
    if cert.conflict.position != 3
        || cert.conflict.first != s.a3
        || cert.conflict.second != s.a1
    {
        return Ok(Verdict::reject("conflict does not pin x_3 to both a3 and a1"));
    }
    if s.a1 == s.a3 || !cert.conflict.distinct {
        return Ok(Verdict::reject("a1 = a3: the forced values do not conflict"));
    }
    Ok(Verdict { accepted: true, first_failure: None })
}

// ---------------------------------------------------------------------------
// Sampled cross-check.
// ---------------------------------------------------------------------------

/// All points c1.c2.c3.c4.c5.(b) with each c_i in {a1, a2, a3, b}: the 1024
/// candidates nearest in spirit to the orbit.
pub fn default_candidate_family(stage: &BadStage) -> Vec<Point> {
    let alphabet = [stage.a1, stage.a2, stage.a3, stage.b];
    let mut family = Vec::with_capacity(alphabet.len().pow(5));
    for index in 0..alphabet.len().pow(5) {
        let mut rest = index;
        let mut pre = Vec::with_capacity(5);
        for _ in 0..5 {
            pre.push(Letter::new(alphabet[rest % alphabet.len()]).expect("nonzero"));
            rest /= alphabet.len();
        }
        let point = Point::eventually_periodic(
            FiniteWord::new(pre),
            FiniteWord::from_ids(&[stage.b]).expect("nonzero"),
        )
        .expect("period is nonempty");
        family.push(point);
    }
    family
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub candidates: usize,
    /// Every candidate's shadowing error strictly exceeds L * delta.
    pub all_exceed: bool,
    /// True for an empty family: a pass with no evidence.
    pub vacuous: bool,
    /// Smallest error/delta ratio across candidates (exact power of 2).
    pub worst_ratio: String,
}

/// Evaluates the shadowing error of every candidate against the orbit under
/// the bad metric and reports whether all errors exceed L * delta.
///
/// Ranks are compared against the largest rank whose distance still exceeds
/// the bound, so no enumeration index past i_n is ever materialized.
pub fn empirical_cross_check(
    inst: &CounterexampleInstance,
    candidates: &[Point],
) -> Result<CrossCheck> {
    if candidates.is_empty() {
        return Ok(CrossCheck {
            candidates: 0,
            all_exceed: true,
            vacuous: true,
            worst_ratio: "inf".to_string(),
        });
    }
    let metric = Metric::Otw(inst.enumeration.clone() as Arc<dyn Enumeration>);
    let bound = &inst.l * &inst.delta;
    // Largest rank r with 2^-r > L * delta; error > bound iff some transition
    // has rank <= r0.
    let mut r0 = 0u64;
    while pow2_recip(r0 + 1) > bound {
        r0 += 1;
    }
    let mut all_exceed = true;
    let mut largest_min_rank = 0u64;
    for x in candidates {
        let horizon = shadow_horizon(x, &inst.orbit);
        let mut min_rank: Option<u64> = None;
        for m in 0..=horizon {
            let shifted = x.iterate_shift(m as usize);
            if let Some(r) = metric.rank_within(&shifted, inst.orbit.point_at(m as usize), r0)? {
                min_rank = Some(min_rank.map_or(r, |best| best.min(r)));
            }
        }
        match min_rank {
            Some(r) => largest_min_rank = largest_min_rank.max(r),
            None => {
                // No transition within rank r0: error <= 2^-(r0+1) <= bound.
                all_exceed = false;
            }
        }
    }
    // error/delta = 2^(i_n - min_rank); the worst candidate maximizes min_rank.
    let worst_ratio = if all_exceed {
        rational_to_string(&(pow2_recip(largest_min_rank) / &inst.delta))
    } else {
        format!("<= {}", rational_to_string(&(&bound / &inst.delta)))
    };
    Ok(CrossCheck {
        candidates: candidates.len(),
        all_exceed,
        vacuous: false,
        worst_ratio,
    })
}

/// The even-transition sharpness check: no enumeration index up to i_n
/// distinguishes shift(x^0) from x^1, i.e. the transition rank strictly
/// exceeds the cutoff.
pub fn even_transition_exceeds_cutoff(inst: &CounterexampleInstance) -> Result<bool> {
    use crate::metrics::{otw_distance_oracle, OracleOutcome};
    let shifted = inst.orbit.point_at(0).shift();
    Ok(matches!(
        otw_distance_oracle(
            inst.enumeration.as_ref(),
            &shifted,
            inst.orbit.point_at(1),
            inst.stage.cutoff,
        )?,
        OracleOutcome::NoneWithin(_)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{otw_distance, parse_rational, Rank};
    use crate::words::{parse_point, parse_word};

    fn instance(l: &str) -> CounterexampleInstance {
        build_counterexample(
            Arc::new(BadEnumeration::default()),
            &parse_rational(l).unwrap(),
            &BigRational::one(),
        )
        .unwrap()
    }

    #[test]
    fn stage_one_instance_matches_the_hand_simulation() {
        let inst = instance("1");
        assert_eq!((inst.n, inst.stage.cutoff), (1, 4));
        assert_eq!(inst.delta, parse_rational("2^-4").unwrap());
        assert_eq!(inst.w, parse_word("1.2.3").unwrap());
        assert_eq!(*inst.orbit.point_at(0), parse_point("1.2.3(4)").unwrap());
        assert_eq!(*inst.orbit.point_at(1), parse_point("4.1.2.3(4)").unwrap());
    }

    #[test]
    fn stage_two_instance_matches_the_hand_simulation() {
        let inst = instance("2");
        assert_eq!((inst.n, inst.stage.cutoff), (2, 7));
        assert_eq!(inst.delta, parse_rational("2^-7").unwrap());
        assert_eq!(inst.w, parse_word("4.5.6").unwrap());
    }

    #[test]
    fn odd_transitions_are_exact() {
        let inst = instance("4");
        let metric = Metric::Otw(inst.enumeration.clone() as Arc<dyn Enumeration>);
        let d = metric.distance(&inst.orbit.point_at(1).shift(), inst.orbit.point_at(2)).unwrap();
        assert_eq!(d.rank, Rank::Infinite);
    }

    #[test]
    fn even_transition_rank_exceeds_the_cutoff() {
        let inst = instance("1");
        assert!(even_transition_exceeds_cutoff(&inst).unwrap());
        // Small stage: the exact rank is also computable and agrees.
        let d = otw_distance(
            inst.enumeration.as_ref(),
            &inst.orbit.point_at(0).shift(),
            inst.orbit.point_at(1),
        )
        .unwrap();
        assert!(d.rank > Rank::Finite(inst.stage.cutoff));
    }

    #[test]
    fn certificates_round_trip_for_all_required_constants() {
        for l in ["1", "2", "4", "8", "16", "256"] {
            let inst = instance(l);
            let cert = certify_no_shadowing(&inst).unwrap();
            let verdict = verify_certificate(&inst, &cert).unwrap();
            assert!(verdict.accepted, "L = {l}: {:?}", verdict.first_failure);
        }
    }

    #[test]
    fn stage_conflicts_match_the_derivation() {
        let c1 = certify_no_shadowing(&instance("1")).unwrap();
        assert_eq!((c1.conflict.first, c1.conflict.second), (3, 1));
        let c2 = certify_no_shadowing(&instance("2")).unwrap();
        assert_eq!((c2.conflict.first, c2.conflict.second), (6, 4));
        assert_eq!(c2.threshold_rank, 5);
    }

    #[test]
    fn tampered_certificates_are_rejected() {
        let inst = instance("1");
        let mut cert = certify_no_shadowing(&inst).unwrap();
        cert.threshold_rank += 1;
        let verdict = verify_certificate(&inst, &cert).unwrap();
        assert!(!verdict.accepted);
        assert!(verdict.first_failure.unwrap().contains("threshold"));
    }

    #[test]
    fn monotone_stage_selection() {
        let mut previous = 0;
        for l in ["1", "2", "4", "8", "16", "256"] {
            let inst = instance(l);
            assert!(inst.n >= previous, "stage decreased at L = {l}");
            previous = inst.n;
        }
    }

    #[test]
    fn cross_check_rejects_every_candidate() {
        let inst = instance("1");
        let family = default_candidate_family(&inst.stage);
        assert_eq!(family.len(), 1024);
        let check = empirical_cross_check(&inst, &family).unwrap();
        assert!(check.all_exceed);
        assert!(!check.vacuous);
    }

    #[test]
    fn cross_check_on_the_empty_family_is_vacuous() {
        let inst = instance("1");
        let check = empirical_cross_check(&inst, &[]).unwrap();
        assert!(check.all_exceed && check.vacuous);
    }

    #[test]
    fn certify_requires_distinct_letters() {
        let mut inst = instance("1");
        inst.stage.a3 = inst.stage.a1;
        assert!(certify_no_shadowing(&inst).is_err());
    }
}
