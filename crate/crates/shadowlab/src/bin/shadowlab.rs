//! Command-line front end: exact distances, Lipschitz probes, the
//! counterexample pipeline, enumeration validators, and modulus tables.
//!
//! Every run emits one JSON report (or a CSV export of its rows) and exits 0
//! iff every check in the report passed.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::SeedableRng;
use serde_json::json;

use shadowlab::counterexample::{
    build_counterexample, certify_no_shadowing, default_candidate_family,
    empirical_cross_check, even_transition_exceeds_cutoff, verify_certificate,
};
use shadowlab::enumeration::{
    validate_bad, validate_pscomp, BadEnumeration, BlockEnumeration, Enumeration,
    DEFAULT_STAGE_CEILING,
};
use shadowlab::metrics::{
    metric_from_spec, modulus_table, parse_rational, pow2_recip, rational_to_string, Metric,
    RateSequence,
};
use shadowlab::report::Report;
use shadowlab::sampling::{random_pair, SampleParams};
use shadowlab::shadowing::{lipschitz_probe, verify_pseudo_orbit, ProbeConfig, ProbeSystem};
use shadowlab::words::parse_point;
use shadowlab::{Error, Result};

#[derive(Parser)]
#[command(name = "shadowlab", version, about = "Exact experiments on shift spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distance between two point literals.
    Distance {
        x: String,
        y: String,
        /// prod | rate:dyadic | rate:harmonic | otw:block | otw:bad
        #[arg(long)]
        metric: String,
    },
    /// Lipschitz shadowing probe over a delta grid.
    Probe {
        #[arg(long)]
        metric: String,
        /// Lipschitz constant to test against.
        #[arg(long = "L", default_value = "2")]
        l: String,
        /// Largest admissible delta; defaults to the system's own threshold.
        #[arg(long)]
        delta0: Option<String>,
        /// Comma-separated exact deltas; defaults to 2^-2 .. 2^-12.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<String>>,
        /// Single delta, shorthand for a one-point grid.
        #[arg(long, conflicts_with = "grid")]
        delta: Option<String>,
        #[arg(long, default_value_t = 50)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build, certify, verify, and cross-check the counterexample.
    Counterexample {
        #[arg(long = "L", default_value = "2")]
        l: String,
        #[arg(long, default_value = "1")]
        delta0: String,
    },
    /// Validate an enumeration.
    Validate {
        /// block | bad
        #[arg(long = "enum")]
        enumeration: String,
        /// Stages to check for the bad enumeration.
        #[arg(long, default_value_t = 6)]
        stages: u32,
        /// Entries to check (block) or base words to cover (bad).
        #[arg(long)]
        entries: Option<u64>,
    },
    /// Sampled modulus-of-continuity table between two metrics.
    Modulus {
        /// Pass twice: the two metrics to compare.
        #[arg(long, action = clap::ArgAction::Append, required = true)]
        metric: Vec<String>,
        /// Number of sampled pairs.
        #[arg(long, default_value_t = 500)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn stage_ceiling() -> Result<u32> {
    match std::env::var("SHADOWLAB_STAGE_CEILING") {
        Ok(text) => text.parse().map_err(|_| {
            Error::Invalid(format!("SHADOWLAB_STAGE_CEILING must be a positive integer, got {text:?}"))
        }),
        Err(_) => Ok(DEFAULT_STAGE_CEILING),
    }
}

fn bad_enumeration() -> Result<Arc<BadEnumeration>> {
    Ok(Arc::new(BadEnumeration::new(Arc::new(BlockEnumeration::default()), stage_ceiling()?)))
}

fn parse_metric(spec: &str) -> Result<Metric> {
    metric_from_spec(spec, stage_ceiling()?)
}

fn default_grid() -> Vec<BigRational> {
    (2..=12).map(pow2_recip).collect()
}

fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Distance { x, y, metric } => cmd_distance(x, y, metric),
        Command::Probe { metric, l, delta0, grid, delta, trials, seed } => {
            cmd_probe(metric, l, delta0.as_deref(), grid.as_deref(), delta.as_deref(), *trials, *seed)
        }
        Command::Counterexample { l, delta0 } => cmd_counterexample(l, delta0),
        Command::Validate { enumeration, stages, entries } => {
            cmd_validate(enumeration, *stages, *entries)
        }
        Command::Modulus { metric, trials, seed } => cmd_modulus(metric, *trials, *seed),
    }
}

fn cmd_distance(x_text: &str, y_text: &str, metric_spec: &str) -> Result<Report> {
    let metric = parse_metric(metric_spec)?;
    let x = parse_point(x_text)?;
    let y = parse_point(y_text)?;
    let d = metric.distance(&x, &y)?;
    let value = rational_to_string(&metric.value_of_rank(d.rank)?);
    let mut report = Report::new(
        "distance",
        json!({"x": x_text, "y": y_text, "metric": metric_spec}),
    );
    report.push_row(&json!({
        "x": x.to_string(),
        "y": y.to_string(),
        "distance": d,
        "value_exact": value,
    }))?;
    Ok(report)
}

fn cmd_probe(
    metric_spec: &str,
    l_text: &str,
    delta0_text: Option<&str>,
    grid_text: Option<&[String]>,
    delta_text: Option<&str>,
    trials: u32,
    seed: u64,
) -> Result<Report> {
    let system = match metric_spec {
        "otw:block" => ProbeSystem::PscompOtw(Arc::new(BlockEnumeration::default())),
        "prod" | "rate:dyadic" => {
            ProbeSystem::Product { rate: RateSequence::dyadic(), order: 1, graph: None }
        }
        "rate:harmonic" => {
            ProbeSystem::Product { rate: RateSequence::harmonic(), order: 1, graph: None }
        }
        "otw:bad" => {
            return Err(Error::Invalid(
                "the bad metric has no constructive shadowing algorithm; \
                 use the counterexample subcommand"
                    .into(),
            ))
        }
        other => return Err(Error::Invalid(format!("unknown probe metric {other:?}"))),
    };
    let l = parse_rational(l_text)?;
    let grid: Vec<BigRational> = match (grid_text, delta_text) {
        (Some(grid), _) => grid.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
        (None, Some(delta)) => vec![parse_rational(delta)?],
        (None, None) => default_grid(),
    };
    if let Some(delta0) = delta0_text {
        let delta0 = parse_rational(delta0)?;
        for value in &grid {
            if value > &delta0 {
                return Err(Error::Invalid(format!(
                    "grid value {} exceeds delta0 {}",
                    rational_to_string(value),
                    rational_to_string(&delta0)
                )));
            }
        }
    }
    let config = ProbeConfig { grid, l, trials, seed };
    let probe = lipschitz_probe(&system, &config)?;
    let mut report = Report::new(
        "probe",
        json!({
            "metric": metric_spec,
            "system": probe.system,
            "L": probe.l,
            "delta0": probe.delta0,
            "trials": trials,
            "seed": seed,
        }),
    );
    for row in &probe.rows {
        report.push_row(row)?;
    }
    report.check("lipschitz_bound", probe.pass, None);
    Ok(report)
}

fn cmd_counterexample(l_text: &str, delta0_text: &str) -> Result<Report> {
    let l = parse_rational(l_text)?;
    let delta0 = parse_rational(delta0_text)?;
    let enumeration = bad_enumeration()?;
    let inst = build_counterexample(enumeration, &l, &delta0)?;

    let metric = Metric::Otw(inst.enumeration.clone() as Arc<dyn Enumeration>);
    let orbit_ok = verify_pseudo_orbit(&inst.orbit, &metric)?;
    let cert = certify_no_shadowing(&inst)?;
    let verdict = verify_certificate(&inst, &cert)?;
    let family = default_candidate_family(&inst.stage);
    let cross = empirical_cross_check(&inst, &family)?;
    let sharp = even_transition_exceeds_cutoff(&inst)?;

    let mut report = Report::new(
        "counterexample",
        json!({"L": l_text, "delta0": delta0_text}),
    );
    report.push_row(&json!({
        "n": inst.n,
        "cutoff": inst.stage.cutoff,
        "delta": rational_to_string(&inst.delta),
        "w": inst.w.to_string(),
        "orbit": [inst.orbit.point_at(0).to_string(), inst.orbit.point_at(1).to_string()],
    }))?;
    report.push_row(&cert)?;
    report.push_row(&verdict)?;
    report.push_row(&cross)?;
    report.check("pseudo_orbit_strict", orbit_ok, None);
    report.check("certificate_accepted", verdict.accepted, verdict.first_failure.clone());
    report.check("cross_check_all_exceed", cross.all_exceed && !cross.vacuous, None);
    report.check("even_transition_rank_exceeds_cutoff", sharp, None);
    Ok(report)
}

fn cmd_validate(enumeration: &str, stages: u32, entries: Option<u64>) -> Result<Report> {
    let mut report = Report::new(
        "validate",
        json!({"enum": enumeration, "stages": stages, "entries": entries}),
    );
    match enumeration {
        "block" => {
            let block = BlockEnumeration::default();
            let entries = entries.unwrap_or(10_000);
            let validation = validate_pscomp(&block, entries)?;
            let mut round_trip = true;
            for k in 1..=entries {
                if block.index_of(&block.word_at(k)?)? != k {
                    round_trip = false;
                    break;
                }
            }
            report.push_row(&validation)?;
            report.check("pscomp_clean", validation.is_clean(), None);
            report.check("round_trip", round_trip, None);
        }
        "bad" => {
            let bad = bad_enumeration()?;
            let coverage = entries.unwrap_or(100);
            let validation = validate_bad(&bad, stages, coverage)?;
            report.push_row(&validation)?;
            report.check("stage_conditions_clean", validation.is_clean(), None);
        }
        other => return Err(Error::Invalid(format!("unknown enumeration {other:?}"))),
    }
    Ok(report)
}

fn cmd_modulus(metric_specs: &[String], trials: u32, seed: u64) -> Result<Report> {
    if metric_specs.len() != 2 {
        return Err(Error::Invalid(
            "modulus needs exactly two --metric arguments".into(),
        ));
    }
    let d1 = parse_metric(&metric_specs[0])?;
    let d2 = parse_metric(&metric_specs[1])?;
    // The bad metric constrains how deep sampled points may agree.
    let params = if metric_specs.iter().any(|m| m == "otw:bad") {
        SampleParams::compact()
    } else {
        SampleParams::standard()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = (0..trials).map(|_| random_pair(&params, &mut rng)).collect();
    let table = modulus_table(&d1, &d2, &pairs)?;
    let mut report = Report::new(
        "modulus",
        json!({
            "first": metric_specs[0],
            "second": metric_specs[1],
            "trials": trials,
            "seed": seed,
            "equal_pairs": table.equal_pairs,
        }),
    );
    for row in &table.forward {
        report.push_row(&json!({"direction": "forward", "rank": row.rank,
            "pairs": row.pairs, "min_other_rank": row.min_other_rank, "deficit": row.deficit}))?;
    }
    for row in &table.backward {
        report.push_row(&json!({"direction": "backward", "rank": row.rank,
            "pairs": row.pairs, "min_other_rank": row.min_other_rank, "deficit": row.deficit}))?;
    }
    // Report-only evidence: no pass/fail claim beyond successful sampling.
    report.check("table_emitted", true, None);
    Ok(report)
}

fn emit(report: &Report, out: Option<&PathBuf>, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.rows_to_csv(),
    };
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli.command) {
        Ok(mut report) => {
            report.wall_ms = started.elapsed().as_millis();
            if let Err(e) = emit(&report, cli.out.as_ref(), cli.format) {
                eprintln!("{}", json!({"error": e.to_string()}));
                std::process::exit(2);
            }
            std::process::exit(if report.pass() { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.to_string()}));
            std::process::exit(2);
        }
    }
}
