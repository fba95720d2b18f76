//! Seeded sample generators: random eventually periodic points, correlated
//! pairs, transition graphs for shifts of order 2, and random pseudo-orbits.
//!
//! Pseudo-orbits are built by the ribbon construction: take the true orbit of
//! an eventually periodic skeleton, then perturb each term's tail beyond a
//! copy depth chosen so every transition stays strictly below delta. The
//! orbit is delta-close by construction; callers re-verify independently.

use std::collections::HashSet;

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{Metric, RateSequence};
use crate::shadowing::{ProbeSystem, PseudoOrbit};
use crate::words::{FiniteWord, Letter, Point};

/// Largest letter id the free generators emit. Kept small so that every
/// enumeration index a distance computation touches stays within u64.
pub const MAX_LETTER: u32 = 8;

// ---------------------------------------------------------------------------
// Transition graphs (shifts of order 2).
// ---------------------------------------------------------------------------

/// The de Bruijn presentation of a shift of order 2 on a finite alphabet
/// slice: all length-2 blocks are allowed except an explicit forbidden set.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    bound: u32,
    forbidden: HashSet<(u32, u32)>,
}

impl TransitionGraph {
    pub fn with_forbidden(bound: u32, forbidden: &[(u32, u32)]) -> Result<TransitionGraph> {
        if bound == 0 {
            return Err(Error::Invalid("letter bound must be >= 1".into()));
        }
        let mut set = HashSet::new();
        for &(a, b) in forbidden {
            if a == 0 || b == 0 || a > bound || b > bound {
                return Err(Error::Invalid(format!(
                    "forbidden block {a}.{b} uses letters outside 1..={bound}"
                )));
            }
            set.insert((a, b));
        }
        let g = TransitionGraph { bound, forbidden: set };
        for a in 1..=bound {
            if g.successors(a).is_empty() || g.predecessors(a).is_empty() {
                return Err(Error::Invalid(format!(
                    "letter {a} has no {} in the transition graph",
                    if g.successors(a).is_empty() { "successor" } else { "predecessor" }
                )));
            }
        }
        Ok(g)
    }

    pub fn full(bound: u32) -> Result<TransitionGraph> {
        TransitionGraph::with_forbidden(bound, &[])
    }

    /// A standing order-2 example: letters 1..4 with 1.1 and 2.3 forbidden.
    pub fn example() -> TransitionGraph {
        TransitionGraph::with_forbidden(4, &[(1, 1), (2, 3)]).expect("static graph is valid")
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn allows(&self, a: u32, b: u32) -> bool {
        (1..=self.bound).contains(&a)
            && (1..=self.bound).contains(&b)
            && !self.forbidden.contains(&(a, b))
    }

    /// Block oracle of the order-2 shift: letters in range and every adjacent
    /// pair allowed.
    pub fn block_allowed(&self, block: &[Letter]) -> bool {
        block.iter().all(|a| (1..=self.bound).contains(&a.id()))
            && block.windows(2).all(|w| self.allows(w[0].id(), w[1].id()))
    }

    pub fn successors(&self, a: u32) -> Vec<u32> {
        (1..=self.bound).filter(|&b| self.allows(a, b)).collect()
    }

    pub fn predecessors(&self, b: u32) -> Vec<u32> {
        (1..=self.bound).filter(|&a| self.allows(a, b)).collect()
    }
}

// ---------------------------------------------------------------------------
// Random points and correlated pairs.
// ---------------------------------------------------------------------------

/// Size envelope for sampled points. The bounds cap the worst-case length of
/// a shortest distinguishing prefix, which in turn keeps every enumeration
/// index a distance computation can touch within reach (machine range for
/// the block listing, the stage ceiling for the bad listing).
#[derive(Clone, Copy, Debug)]
pub struct SampleParams {
    pub letter_bound: u32,
    pub max_preamble: usize,
    pub max_period: usize,
    /// Longest prefix a correlated point copies from its anchor.
    pub max_overlap: usize,
    /// Extra random preamble letters a correlated point appends.
    pub max_extra: usize,
}

impl SampleParams {
    /// Defaults for the rate metrics and the block OTW metric: every
    /// distinguishing prefix stays short enough for u64 block indices.
    pub fn standard() -> SampleParams {
        SampleParams {
            letter_bound: MAX_LETTER,
            max_preamble: 3,
            max_period: 3,
            max_overlap: 4,
            max_extra: 2,
        }
    }

    /// Tight bounds for the bad OTW metric, whose indices are only reachable
    /// through staged materialization.
    pub fn compact() -> SampleParams {
        SampleParams {
            letter_bound: 4,
            max_preamble: 1,
            max_period: 2,
            max_overlap: 2,
            max_extra: 1,
        }
    }
}

fn random_letter(rng: &mut ChaCha8Rng, bound: u32) -> Letter {
    Letter::new(rng.gen_range(1..=bound)).expect("bound >= 1")
}

/// A random eventually periodic point within the parameter envelope.
pub fn random_point(params: &SampleParams, rng: &mut ChaCha8Rng) -> Point {
    let pre: Vec<Letter> = (0..rng.gen_range(0..=params.max_preamble))
        .map(|_| random_letter(rng, params.letter_bound))
        .collect();
    let per: Vec<Letter> = (0..rng.gen_range(1..=params.max_period))
        .map(|_| random_letter(rng, params.letter_bound))
        .collect();
    Point::eventually_periodic(FiniteWord::new(pre), FiniteWord::new(per))
        .expect("period is nonempty")
}

/// A point correlated with `x`: with small probability `x` itself, otherwise
/// a copy of a random-length prefix of `x` continued randomly. Correlation
/// makes sampled distances span many ranks instead of clustering at rank 0.
pub fn random_nearby_point(x: &Point, params: &SampleParams, rng: &mut ChaCha8Rng) -> Point {
    if rng.gen_range(0..8) == 0 {
        return x.clone();
    }
    let overlap = rng.gen_range(0..=params.max_overlap);
    let mut pre = x.first_letters(overlap);
    for _ in 0..rng.gen_range(0..=params.max_extra) {
        pre.push(random_letter(rng, params.letter_bound));
    }
    let per: Vec<Letter> = (0..rng.gen_range(1..=params.max_period))
        .map(|_| random_letter(rng, params.letter_bound))
        .collect();
    Point::eventually_periodic(FiniteWord::new(pre), FiniteWord::new(per))
        .expect("period is nonempty")
}

pub fn random_pair(params: &SampleParams, rng: &mut ChaCha8Rng) -> (Point, Point) {
    let x = random_point(params, rng);
    let y = random_nearby_point(&x, params, rng);
    (x, y)
}

pub fn random_triple(params: &SampleParams, rng: &mut ChaCha8Rng) -> (Point, Point, Point) {
    let x = random_point(params, rng);
    let y = random_nearby_point(&x, params, rng);
    let z = if rng.gen_range(0..2) == 0 {
        random_nearby_point(&x, params, rng)
    } else {
        random_nearby_point(&y, params, rng)
    };
    (x, y, z)
}

// ---------------------------------------------------------------------------
// Random pseudo-orbits.
// ---------------------------------------------------------------------------

/// Copy depth D such that two infinite points sharing their first D - 1
/// letters are strictly closer than `delta` in the given metric.
pub fn required_copy_depth(metric: &Metric, delta: &BigRational) -> Result<usize> {
    match metric {
        Metric::Rate(r) => Ok(r.first_below(delta)? as usize + 1),
        Metric::Otw(e) => {
            // No word listed before the strict cap can distinguish two
            // infinite points that agree beyond the longest such word.
            let cap = RateSequence::dyadic().first_below(delta)?.saturating_sub(1);
            let mut max_len = 0;
            for j in 1..=cap {
                max_len = max_len.max(e.word_at(j)?.len());
            }
            Ok(max_len + 2)
        }
    }
}

fn choose(items: &[u32], rng: &mut ChaCha8Rng) -> u32 {
    items[rng.gen_range(0..items.len())]
}

/// Letter skeleton of the ideal orbit: `pre` then `cyc` repeated.
struct Skeleton {
    pre: Vec<u32>,
    cyc: Vec<u32>,
}

impl Skeleton {
    fn at(&self, i: usize) -> u32 {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.cyc[(i - self.pre.len()) % self.cyc.len()]
        }
    }
}

fn free_skeleton(rng: &mut ChaCha8Rng, bound: u32) -> Skeleton {
    let pre = (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(1..=bound)).collect();
    let cyc = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(1..=bound)).collect();
    Skeleton { pre, cyc }
}

/// A skeleton whose letter sequence is a path in the graph: the cycle is a
/// random-walk loop, the preamble a backward walk into the cycle's start.
fn graph_skeleton(g: &TransitionGraph, rng: &mut ChaCha8Rng) -> Skeleton {
    let mut path = vec![rng.gen_range(1..=g.bound())];
    let cyc = loop {
        let next = choose(&g.successors(*path.last().expect("nonempty")), rng);
        if let Some(i) = path.iter().position(|&v| v == next) {
            break path[i..].to_vec();
        }
        path.push(next);
    };
    let mut pre = Vec::new();
    let mut head = cyc[0];
    for _ in 0..rng.gen_range(0..=3) {
        head = choose(&g.predecessors(head), rng);
        pre.insert(0, head);
    }
    Skeleton { pre, cyc }
}

/// Tail continuation after a letter `from` along the graph: walks forward
/// until a vertex repeats; the letters strictly after `from` are
/// `pre_ext . per^omega` with every adjacent pair (including the wrap and
/// the junction with `from`) an edge of the graph.
fn graph_tail(g: &TransitionGraph, rng: &mut ChaCha8Rng, from: u32) -> (Vec<u32>, Vec<u32>) {
    let mut path = vec![from];
    loop {
        let next = choose(&g.successors(*path.last().expect("nonempty")), rng);
        if let Some(i) = path.iter().position(|&v| v == next) {
            return (path[1..].to_vec(), path[i..].to_vec());
        }
        path.push(next);
    }
}

fn free_tail(rng: &mut ChaCha8Rng, bound: u32) -> (Vec<u32>, Vec<u32>) {
    let pre = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(1..=bound)).collect();
    let per = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=bound)).collect();
    (pre, per)
}

fn point_from_ids(pre: Vec<u32>, per: Vec<u32>) -> Result<Point> {
    Ok(Point::eventually_periodic(
        FiniteWord::from_ids(&pre)?,
        FiniteWord::from_ids(&per)?,
    )?)
}

/// A random delta-pseudo-orbit for the probe system, in the given metric.
/// Each term copies the ideal skeleton to the required depth and is either
/// exactly the ideal orbit point or perturbed beyond the copy depth; for
/// order-2 systems every term stays inside the shift space.
pub fn random_pseudo_orbit(
    system: &ProbeSystem,
    metric: &Metric,
    delta: &BigRational,
    rng: &mut ChaCha8Rng,
) -> Result<PseudoOrbit> {
    let depth = required_copy_depth(metric, delta)?;
    let graph = match system {
        ProbeSystem::Product { graph, .. } => graph.as_ref(),
        ProbeSystem::PscompOtw(_) => None,
    };
    let bound = graph.map_or(MAX_LETTER, TransitionGraph::bound);
    let skel = match graph {
        Some(g) => graph_skeleton(g, rng),
        None => free_skeleton(rng, bound),
    };
    let ideal_orbit_start = point_from_ids(skel.pre.clone(), skel.cyc.clone())?;

    let total = skel.pre.len() + skel.cyc.len();
    let mut terms = Vec::with_capacity(total);
    for m in 0..total {
        if rng.gen_range(0..3) == 0 {
            terms.push(ideal_orbit_start.iterate_shift(m));
            continue;
        }
        let ideal: Vec<u32> = (0..depth).map(|j| skel.at(m + j)).collect();
        let last = *ideal.last().expect("depth >= 1");
        let (tail_pre, tail_per) = match graph {
            Some(g) => graph_tail(g, rng, last),
            None => free_tail(rng, bound),
        };
        let mut pre = ideal;
        pre.extend(tail_pre);
        terms.push(point_from_ids(pre, tail_per)?);
    }
    let cycle = terms.split_off(skel.pre.len());
    PseudoOrbit::new(terms, cycle, delta.clone(), metric.model())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::BlockEnumeration;
    use crate::metrics::parse_rational;
    use crate::shadowing::verify_pseudo_orbit;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn transition_graph_example() {
        let g = TransitionGraph::example();
        assert!(!g.allows(1, 1));
        assert!(!g.allows(2, 3));
        assert!(g.allows(1, 2));
        assert!(g.block_allowed(&FiniteWord::from_ids(&[1, 2, 4, 1]).unwrap().letters().to_vec()));
        assert!(!g.block_allowed(&FiniteWord::from_ids(&[4, 2, 3]).unwrap().letters().to_vec()));
        assert!(TransitionGraph::with_forbidden(2, &[(1, 1), (2, 1)]).is_err());
    }

    #[test]
    fn generated_orbits_verify_under_the_rate_metric() {
        let metric = Metric::Rate(RateSequence::dyadic());
        let system = ProbeSystem::Product {
            rate: RateSequence::dyadic(),
            order: 1,
            graph: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for delta in ["1/2", "2^-5", "3/17"] {
            let delta = parse_rational(delta).unwrap();
            for _ in 0..25 {
                let orbit = random_pseudo_orbit(&system, &metric, &delta, &mut rng).unwrap();
                assert!(verify_pseudo_orbit(&orbit, &metric).unwrap());
            }
        }
    }

    #[test]
    fn generated_orbits_respect_the_order_two_graph() {
        let g = TransitionGraph::example();
        let metric = Metric::Rate(RateSequence::dyadic());
        let system = ProbeSystem::Product {
            rate: RateSequence::dyadic(),
            order: 2,
            graph: Some(g.clone()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let delta = parse_rational("2^-4").unwrap();
        for _ in 0..40 {
            let orbit = random_pseudo_orbit(&system, &metric, &delta, &mut rng).unwrap();
            assert!(verify_pseudo_orbit(&orbit, &metric).unwrap());
            for m in 0..orbit.transition_count() {
                let head = orbit.point_at(m).first_letters(12);
                assert!(g.block_allowed(&head), "term {m} leaves the shift space");
            }
        }
    }

    #[test]
    fn generated_orbits_verify_under_the_otw_metric() {
        let block: Arc<dyn crate::enumeration::Enumeration> =
            Arc::new(BlockEnumeration::default());
        let metric = Metric::Otw(block.clone());
        let system = ProbeSystem::PscompOtw(block);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for delta in ["1/4", "2^-7"] {
            let delta = parse_rational(delta).unwrap();
            for _ in 0..20 {
                let orbit = random_pseudo_orbit(&system, &metric, &delta, &mut rng).unwrap();
                assert!(verify_pseudo_orbit(&orbit, &metric).unwrap());
            }
        }
    }

    #[test]
    fn sampled_points_are_canonical_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = SampleParams::standard();
        for _ in 0..200 {
            let (x, y, z) = random_triple(&params, &mut rng);
            for p in [&x, &y, &z] {
                assert!(p.is_infinite());
                assert!(p.first_letters(20).iter().all(|a| a.id() <= MAX_LETTER));
            }
        }
    }
}
