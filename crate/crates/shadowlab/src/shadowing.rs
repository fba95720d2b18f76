//! Pseudo-orbits, exact shadowing errors, the two constructive
//! shadowing-point algorithms, and the Lipschitz probe harness.
//!
//! Pseudo-orbits are eventually periodic sequences of eventually periodic
//! points, so every supremum that appears is a minimum over a finite,
//! certified horizon.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::enumeration::{validate_pscomp, Enumeration};
use crate::error::{Error, Result};
use crate::metrics::{
    parse_rational, pow2_recip, rational_to_string, Metric, ModelTag, Rank, RateSequence,
};
use crate::words::{FiniteWord, Letter, Point};

/// An eventually periodic delta-pseudo-orbit: `pre` followed by `cycle`
/// repeated forever, carrying its delta certificate and metric tag.
#[derive(Clone, Debug)]
pub struct PseudoOrbit {
    pre: Vec<Point>,
    cycle: Vec<Point>,
    delta: BigRational,
    model: ModelTag,
}

impl PseudoOrbit {
    pub fn new(
        pre: Vec<Point>,
        cycle: Vec<Point>,
        delta: BigRational,
        model: ModelTag,
    ) -> Result<PseudoOrbit> {
        if cycle.is_empty() {
            return Err(Error::Invalid("pseudo-orbit cycle must be nonempty".into()));
        }
        if !delta.is_positive() {
            return Err(Error::Invalid("delta must be positive".into()));
        }
        Ok(PseudoOrbit { pre, cycle, delta, model })
    }

    pub fn pre(&self) -> &[Point] {
        &self.pre
    }

    pub fn cycle(&self) -> &[Point] {
        &self.cycle
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn model(&self) -> &ModelTag {
        &self.model
    }

    pub fn point_at(&self, m: usize) -> &Point {
        if m < self.pre.len() {
            &self.pre[m]
        } else {
            &self.cycle[(m - self.pre.len()) % self.cycle.len()]
        }
    }

    /// Number of distinct transitions: every later transition repeats one of
    /// the first pre + cycle ones.
    pub fn transition_count(&self) -> usize {
        self.pre.len() + self.cycle.len()
    }
}

fn check_model(orbit: &PseudoOrbit, metric: &Metric) -> Result<()> {
    if orbit.model != metric.model() {
        return Err(Error::Invalid(format!(
            "orbit carries metric tag {} but was checked under {}",
            orbit.model.label(),
            metric.model().label()
        )));
    }
    Ok(())
}

/// Exact strict check of d(shift(x^m), x^(m+1)) < delta over every
/// transition: the pre part, the seam into the cycle, and the cycle
/// including its wrap. Terms of length 0 are rejected: the shift is applied
/// to every term, and the Deaconu-Renault domain excludes the empty word.
pub fn verify_pseudo_orbit(orbit: &PseudoOrbit, metric: &Metric) -> Result<bool> {
    check_model(orbit, metric)?;
    for m in 0..orbit.transition_count() {
        let here = orbit.point_at(m);
        if !here.len().at_least(1) {
            return Err(Error::Invalid(format!(
                "pseudo-orbit term {m} is the empty word, outside the domain of the shift"
            )));
        }
        let next = orbit.point_at(m + 1);
        if !metric.distance_lt(&here.shift(), next, &orbit.delta)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A shadowing-error certificate: the minimum over the certified horizon
/// equals the infimum over all times because both the orbit and the shifted
/// point are eventually periodic in m.
#[derive(Clone, Debug)]
pub struct ShadowResult {
    pub point: Point,
    pub error_rank: Rank,
    pub checked_horizon: u64,
}

fn tail_shape(x: &Point) -> (usize, usize) {
    match x.as_eventually_periodic() {
        Some((pre, per)) => (pre.len(), per.len()),
        None => (x.as_finite().map_or(0, FiniteWord::len), 1),
    }
}

/// Horizon past which the pair (shift^m(x), x^m) repeats.
pub fn shadow_horizon(x: &Point, orbit: &PseudoOrbit) -> u64 {
    let (pre_x, per_x) = tail_shape(x);
    (orbit.pre.len() + pre_x + orbit.cycle.len().lcm(&per_x)) as u64
}

/// Minimum distance rank between shift^m(x) and the orbit over m <= m_max.
pub fn worst_rank_up_to(
    x: &Point,
    orbit: &PseudoOrbit,
    metric: &Metric,
    m_max: u64,
) -> Result<Rank> {
    let mut worst = Rank::Infinite;
    for m in 0..=m_max {
        let d = metric.distance(&x.iterate_shift(m as usize), orbit.point_at(m as usize))?;
        worst = worst.min(d.rank);
    }
    Ok(worst)
}

/// Exact shadowing error of x against the orbit.
pub fn shadowing_error(x: &Point, orbit: &PseudoOrbit, metric: &Metric) -> Result<ShadowResult> {
    check_model(orbit, metric)?;
    let horizon = shadow_horizon(x, orbit);
    Ok(ShadowResult {
        point: x.clone(),
        error_rank: worst_rank_up_to(x, orbit, metric, horizon)?,
        checked_horizon: horizon,
    })
}

/// Like [`shadowing_error`] but never looks past rank `cap`: returns the
/// exact minimum rank when it is <= cap, `None` otherwise. This is the form
/// usable under enumerations whose deep indices are expensive.
pub fn shadowing_error_within(
    x: &Point,
    orbit: &PseudoOrbit,
    metric: &Metric,
    cap: u64,
) -> Result<Option<u64>> {
    check_model(orbit, metric)?;
    let horizon = shadow_horizon(x, orbit);
    let mut worst: Option<u64> = None;
    for m in 0..=horizon {
        if let Some(rank) =
            metric.rank_within(&x.iterate_shift(m as usize), orbit.point_at(m as usize), cap)?
        {
            worst = Some(worst.map_or(rank, |w| w.min(rank)));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Constructive shadowing points.
// ---------------------------------------------------------------------------

/// The product-model construction: z_m is the first letter of x^m. Valid for
/// a rate-sequence pseudo-orbit with delta <= r_(p-1) (the analytic bound for
/// eta_p); on a shift of finite order p, the optional `block_oracle` is the
/// allowed-block predicate and every p-block of z is checked against it.
pub fn product_shadow_point(
    orbit: &PseudoOrbit,
    rate: &RateSequence,
    order: u32,
    block_oracle: Option<&dyn Fn(&[Letter]) -> bool>,
) -> Result<Point> {
    if order < 1 {
        return Err(Error::Invalid("order p must be >= 1".into()));
    }
    if orbit.model != ModelTag::Rate(rate.name().to_string()) {
        return Err(Error::Invalid("orbit metric tag does not match the rate sequence".into()));
    }
    let eta_p_bound = rate.value(order as u64 - 1)?;
    if orbit.delta > eta_p_bound {
        return Err(Error::Invalid(format!(
            "delta {} exceeds the eta_p bound r_(p-1) = {}",
            rational_to_string(&orbit.delta),
            rational_to_string(&eta_p_bound)
        )));
    }
    let first_letter = |x: &Point| -> Result<Letter> {
        if !x.is_infinite() {
            return Err(Error::FiniteInProductModel("product_shadow_point"));
        }
        Ok(x.first_letter().expect("infinite points have a first letter"))
    };
    let pre: Vec<Letter> = orbit.pre.iter().map(&first_letter).collect::<Result<_>>()?;
    let per: Vec<Letter> = orbit.cycle.iter().map(&first_letter).collect::<Result<_>>()?;
    let z = Point::eventually_periodic(FiniteWord::new(pre), FiniteWord::new(per))?;

    if let Some(allowed) = block_oracle {
        let p = order as usize;
        let window = orbit.pre.len() + orbit.cycle.len();
        for i in 0..window {
            let block: Vec<Letter> = (i..i + p)
                .map(|j| z.letter_at(j).expect("z is infinite"))
                .collect();
            if !allowed(&block) {
                let word = FiniteWord::new(block);
                return Err(Error::Invalid(format!(
                    "constructed point leaves the shift space: block {word} at position {i} is forbidden"
                )));
            }
        }
    }
    Ok(z)
}

/// The OTW construction of a 2*delta-shadowing point for a prefix-shift-
/// compatible enumeration. Requires 0 < delta <= 1/4; picks j with
/// 2^-j <= delta < 2^-(j-1), sets N = j - 1 and F = {p_1, ..., p_N}, and
/// rebuilds x letter by letter: the letter forced by the unique one-letter
/// word of F prefixing x^n, or a letter absent from all of F.
pub fn otw_good_shadow_point(
    e: &dyn Enumeration,
    orbit: &PseudoOrbit,
    delta: &BigRational,
) -> Result<Point> {
    if orbit.model != ModelTag::Otw(e.name().to_string()) {
        return Err(Error::Invalid("orbit metric tag does not match the enumeration".into()));
    }
    if !delta.is_positive() || delta > &parse_rational("1/4").expect("literal") {
        return Err(Error::Invalid("the construction needs 0 < delta <= delta_0 = 1/4".into()));
    }
    // Minimal j with 2^-j <= delta; delta <= 1/4 forces j >= 2.
    let mut j = 1u64;
    while &pow2_recip(j) > delta {
        j += 1;
    }
    let n_entries = j - 1;
    let report = validate_pscomp(e, n_entries)?;
    if !report.is_clean() {
        return Err(Error::Invalid(format!(
            "enumeration {} is not prefix-shift compatible on its first {n_entries} entries: {}",
            e.name(),
            report.violations[0].detail
        )));
    }

    let mut one_letter = std::collections::HashSet::new();
    let mut used_letters = std::collections::HashSet::new();
    for i in 1..=n_entries {
        let w = e.word_at(i)?;
        if w.len() == 1 {
            one_letter.insert(w.letters()[0]);
        }
        for &a in w.letters() {
            used_letters.insert(a.id());
        }
    }
    let fresh = {
        let mut id = 1u32;
        while used_letters.contains(&id) {
            id += 1;
        }
        Letter::new(id).expect("nonzero")
    };

    let pick = |term: &Point| -> Letter {
        match term.first_letter() {
            Some(a) if one_letter.contains(&a) => a,
            _ => fresh,
        }
    };
    let pre: Vec<Letter> = orbit.pre.iter().map(|t| pick(t)).collect();
    let per: Vec<Letter> = orbit.cycle.iter().map(|t| pick(t)).collect();
    Point::eventually_periodic(FiniteWord::new(pre), FiniteWord::new(per))
}

// ---------------------------------------------------------------------------
// Lipschitz probe harness.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub delta: String,
    pub trials: u32,
    /// The Lipschitz bound L * delta every trial's error must stay within.
    pub bound: String,
    /// Trials whose shadowing error exceeded the bound.
    pub violations: u32,
    /// Largest error seen across trials, as an exact value when some error
    /// exceeded the bound, "<= bound" otherwise.
    pub worst_error: String,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzProbe {
    pub system: String,
    pub l: String,
    pub delta0: String,
    pub trials: u32,
    pub seed: u64,
    pub rows: Vec<ProbeRow>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub grid: Vec<BigRational>,
    pub l: BigRational,
    pub trials: u32,
    pub seed: u64,
}

/// Systems the probe can drive with a constructive shadowing algorithm.
pub enum ProbeSystem {
    /// The OTW metric of a prefix-shift-compatible enumeration; the L = 2
    /// constructor. delta_0 = 1/4.
    PscompOtw(std::sync::Arc<dyn Enumeration>),
    /// A prefix ultrametric on a shift of finite order; the L = 1 first-letter
    /// constructor. delta_0 = r_(p-1). `graph` constrains pseudo-orbits to an
    /// order-2 shift and doubles as its block oracle.
    Product {
        rate: RateSequence,
        order: u32,
        graph: Option<crate::sampling::TransitionGraph>,
    },
}

impl ProbeSystem {
    pub fn label(&self) -> String {
        match self {
            ProbeSystem::PscompOtw(e) => format!("pscomp:{}", e.name()),
            ProbeSystem::Product { rate, order, graph } => {
                let space = if graph.is_some() { "order-2 shift" } else { "full shift" };
                format!("product:{} p={order} ({space})", rate.name())
            }
        }
    }

    pub fn delta0(&self) -> Result<BigRational> {
        match self {
            ProbeSystem::PscompOtw(_) => Ok(parse_rational("1/4").expect("literal")),
            ProbeSystem::Product { rate, order, .. } => rate.value(*order as u64 - 1),
        }
    }

    fn metric(&self) -> Metric {
        match self {
            ProbeSystem::PscompOtw(e) => Metric::Otw(e.clone()),
            ProbeSystem::Product { rate, .. } => Metric::Rate(rate.clone()),
        }
    }
}

/// Largest rank whose distance value still exceeds `bound`; `None` when even
/// rank 0 is within the bound (the check then passes vacuously).
fn violation_cap(metric: &Metric, bound: &BigRational) -> Result<Option<u64>> {
    if &metric.value_of_rank(Rank::Finite(0))? <= bound {
        return Ok(None);
    }
    let mut r = 0u64;
    loop {
        if &metric.value_of_rank(Rank::Finite(r + 1))? <= bound {
            return Ok(Some(r));
        }
        r += 1;
        if r > (1 << 20) {
            return Err(Error::Resource(format!(
                "metric values did not drop to {} within 2^20 ranks",
                rational_to_string(bound)
            )));
        }
    }
}

/// Runs the probe grid: for each delta, generates random pseudo-orbits,
/// applies the system's constructor, and checks the exact shadowing error
/// against L * delta. Errors are compared by rank against the violation cap,
/// so no distance beyond the bound's precision is ever materialized.
pub fn lipschitz_probe(system: &ProbeSystem, config: &ProbeConfig) -> Result<LipschitzProbe> {
    use rand::SeedableRng;

    let delta0 = system.delta0()?;
    let metric = system.metric();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.grid.len());
    let mut all_pass = true;

    for delta in &config.grid {
        if delta > &delta0 || !delta.is_positive() {
            return Err(Error::Invalid(format!(
                "grid value {} outside (0, delta_0 = {}]",
                rational_to_string(delta),
                rational_to_string(&delta0)
            )));
        }
        let bound = &config.l * delta;
        let cap = violation_cap(&metric, &bound)?;
        let mut violations = 0u32;
        let mut worst_violation: Option<u64> = None;
        let mut failures = Vec::new();
        for trial in 0..config.trials {
            match run_probe_trial(system, &metric, delta, cap, &mut rng) {
                Ok(None) => {}
                Ok(Some(rank)) => {
                    violations += 1;
                    worst_violation = Some(worst_violation.map_or(rank, |w| w.min(rank)));
                }
                Err(e) => failures.push(format!("trial {trial}: {e}")),
            }
        }
        let pass = failures.is_empty() && violations == 0;
        all_pass &= pass;
        rows.push(ProbeRow {
            delta: rational_to_string(delta),
            trials: config.trials,
            bound: rational_to_string(&bound),
            violations,
            worst_error: match worst_violation {
                Some(rank) => rational_to_string(&metric.value_of_rank(Rank::Finite(rank))?),
                None => format!("<= {}", rational_to_string(&bound)),
            },
            pass,
            failures,
        });
    }

    Ok(LipschitzProbe {
        system: system.label(),
        l: rational_to_string(&config.l),
        delta0: rational_to_string(&delta0),
        trials: config.trials,
        seed: config.seed,
        rows,
        pass: all_pass,
    })
}

/// One trial: generate, verify, construct, and measure. Returns the exact
/// error rank when it violates the bound (rank <= cap), `None` otherwise.
fn run_probe_trial(
    system: &ProbeSystem,
    metric: &Metric,
    delta: &BigRational,
    cap: Option<u64>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Option<u64>> {
    let orbit = crate::sampling::random_pseudo_orbit(system, metric, delta, rng)?;
    if !verify_pseudo_orbit(&orbit, metric)? {
        return Err(Error::Invalid("generated orbit failed verification".into()));
    }
    let point = match system {
        ProbeSystem::PscompOtw(e) => otw_good_shadow_point(e.as_ref(), &orbit, delta)?,
        ProbeSystem::Product { rate, order, graph } => {
            let oracle = graph
                .as_ref()
                .map(|g| move |block: &[Letter]| g.block_allowed(block));
            match &oracle {
                Some(f) => product_shadow_point(&orbit, rate, *order, Some(f))?,
                None => product_shadow_point(&orbit, rate, *order, None)?,
            }
        }
    };
    match cap {
        Some(cap) => shadowing_error_within(&point, &orbit, metric, cap),
        None => Ok(None),
    }
}
