//! One function per table-producing subcommand.

use std::path::Path;

use log::{info, warn};
use momentbound::emm::{self, EnergyBounds, FeasibilityInterval, Target, Verdict};
use momentbound::gep::{bound_series, BoundSeries, SeriesOptions};
use momentbound::moments::{
    load_moments, save_moments, solve_pt_missing_moments, GridSpec, MomentRecursion,
    MomentSequence, RecursionName,
};
use momentbound::pade::{self, PadeOptions};
use momentbound::real::{MpFloat, Precision, Real};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{num, Artifact, Table};

/// Floor on the escalation precision used when the 64-bit tier runs out.
const ESCALATION_DIGITS: u32 = 50;
/// The Gaussian trial's Barta bound; no λ_min may fall below it.
const GAUSSIAN_FLOOR: f64 = -2.0;

pub const BARTA_HEADER: [&str; 3] = ["dim", "q", "lambda_min"];
pub const PT_HEADER: [&str; 2] = ["q", "lambda_min"];
pub const BOUNDS_HEADER: [&str; 3] = ["pstar", "lower", "upper"];
pub const PADE_HEADER: [&str; 3] = ["q", "lower", "upper"];

pub fn run_table(cfg: &RunConfig) -> Result<Artifact, CliError> {
    match &cfg.command {
        Command::BartaSeries { max_dim } => barta_series(cfg, *max_dim),
        Command::PtSeries { max_q, energy } => pt_series(cfg, *max_q, *energy),
        Command::Theorem4Bounds { pstar, epub } => {
            bound_table(cfg, pstar, |q| emm::theorem4_bounds(q, *epub, cfg.tol))
        }
        Command::EmmBounds { pstar } => {
            bound_table(cfg, pstar, |q| emm::emm_energy_bounds(q, cfg.tol))
        }
        Command::PadeBounds { q } => pade_bounds(cfg, q),
        Command::Verify { .. } => unreachable!("verify is dispatched separately"),
    }
}

fn working_precision(cfg: &RunConfig) -> Precision {
    if cfg.is_double() {
        Precision::DOUBLE
    } else {
        Precision::from_digits(cfg.precision)
    }
}

fn series_options(cfg: &RunConfig) -> SeriesOptions {
    SeriesOptions {
        escalation_precision: Precision::from_digits(cfg.precision.max(ESCALATION_DIGITS)),
        ..SeriesOptions::default()
    }
}

/// Where the sequence came from, for the audit record.
enum Source {
    Cache,
    CachedRecipe,
    Fresh,
}

impl Source {
    fn label(&self) -> &'static str {
        match self {
            Source::Cache => "cache",
            Source::CachedRecipe => "cached-recipe",
            Source::Fresh => "fresh",
        }
    }
}

/// Reads a compatible recipe (and, when precise and long enough, the stored
/// values) from the cache.
fn probe_cache(
    path: &Path,
    name: RecursionName,
    energy: Option<f64>,
    order: usize,
    prec: Precision,
) -> Option<(MomentRecursion, Option<MomentSequence<MpFloat>>)> {
    if !path.exists() {
        return None;
    }
    let stored: MomentSequence<MpFloat> = match load_moments(path) {
        Ok(s) => s,
        Err(e) => {
            warn!("ignoring unreadable moments cache {}: {e}", path.display());
            return None;
        }
    };
    let recipe = stored.recipe()?.clone();
    let energy_ok = match (energy, recipe.energy()) {
        (None, _) => true,
        (Some(want), Some(have)) => (want - have).abs() <= 1e-9 * want.abs().max(1.0),
        (Some(_), None) => false,
    };
    if recipe.name != name || !energy_ok {
        warn!(
            "moments cache {} holds a different sequence; recomputing",
            path.display()
        );
        return None;
    }
    let values_ok = stored.max_order() >= order && stored.precision().bits() >= prec.bits();
    Some((recipe, values_ok.then_some(stored)))
}

fn store_cache<R: Real>(path: &Path, seq: &MomentSequence<R>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    save_moments(seq, tmp.path())?;
    tmp.persist(path).map_err(|e| e.error)?;
    info!("wrote moments cache {}", path.display());
    Ok(())
}

/// Loads or builds a sequence of at least `order`, refreshing the cache when
/// it had to be regenerated.
fn sequence<R: Real>(
    cfg: &RunConfig,
    name: RecursionName,
    energy: Option<f64>,
    order: usize,
    fresh_recipe: impl FnOnce() -> Result<MomentRecursion, CliError>,
) -> Result<(MomentSequence<R>, MomentRecursion, Source), CliError> {
    let prec = working_precision(cfg);
    let cached = cfg
        .moments_cache
        .as_deref()
        .and_then(|p| probe_cache(p, name, energy, order, prec));
    let (recipe, source) = match cached {
        Some((recipe, Some(stored))) => {
            let seq = stored.truncated(order)?.convert::<R>(prec);
            return Ok((seq, recipe, Source::Cache));
        }
        Some((recipe, None)) => (recipe, Source::CachedRecipe),
        None => (fresh_recipe()?, Source::Fresh),
    };
    let seq = recipe.generate::<R>(order, prec)?;
    if let Some(path) = &cfg.moments_cache {
        store_cache(path, &seq)?;
    }
    Ok((seq, recipe, source))
}

fn series_in_tier(
    cfg: &RunConfig,
    name: RecursionName,
    energy: Option<f64>,
    n_max: usize,
    fresh_recipe: impl FnOnce() -> Result<MomentRecursion, CliError>,
) -> Result<(BoundSeries, MomentRecursion, Source), CliError> {
    // The PT recursion starts beyond μ_6, so short series still need μ_8.
    let order = (2 * n_max + 4).max(8);
    let opts = series_options(cfg);
    let out = if cfg.is_double() {
        let (seq, r, s) = sequence::<f64>(cfg, name, energy, order, fresh_recipe)?;
        (bound_series(&seq, n_max, &opts)?, r, s)
    } else {
        let (seq, r, s) = sequence::<MpFloat>(cfg, name, energy, order, fresh_recipe)?;
        (bound_series(&seq, n_max, &opts)?, r, s)
    };
    let escalated: Vec<usize> = out
        .0
        .entries
        .iter()
        .filter(|e| cfg.is_double() && e.precision_bits > Precision::DOUBLE.bits())
        .map(|e| e.dim())
        .collect();
    if !escalated.is_empty() {
        warn!(
            "64-bit precision insufficient at dims {escalated:?}; recomputed at {}",
            opts.escalation_precision
        );
    }
    Ok(out)
}

fn entries_json(series: &BoundSeries) -> Vec<Value> {
    series
        .entries
        .iter()
        .map(|e| {
            json!({
                "dim": e.dim(),
                "q": e.q(),
                "lambda_min": e.lambda_min,
                "lambda_max": e.lambda_max,
                "precision_bits": e.precision_bits,
                "pivot_ratio": e.pivot_ratio,
            })
        })
        .collect()
}

fn barta_series(cfg: &RunConfig, max_dim: usize) -> Result<Artifact, CliError> {
    let (series, _, source) =
        series_in_tier(cfg, RecursionName::GaussianTrial, None, max_dim - 1, || {
            Ok(MomentRecursion::gaussian())
        })?;
    if let Some(e) = series
        .entries
        .iter()
        .find(|e| e.lambda_min < GAUSSIAN_FLOOR)
    {
        return Err(CliError::Invariant(format!(
            "lambda_min {} at dim {} is below the Barta bound {GAUSSIAN_FLOOR}",
            e.lambda_min,
            e.dim()
        )));
    }
    let mut table = Table::new(&BARTA_HEADER);
    for e in &series.entries {
        table.row(&[e.dim().to_string(), e.q().to_string(), num(e.lambda_min)]);
    }
    Ok(Artifact {
        csv: table.finish(),
        json: json!({
            "command": "barta-series",
            "trial": series.trial_id,
            "precision_digits": cfg.precision,
            "moments": source.label(),
            "paired_dims": series.paired_dims,
            "rows": entries_json(&series),
        }),
    })
}

fn pt_series(cfg: &RunConfig, max_q: usize, energy: f64) -> Result<Artifact, CliError> {
    let mut oracle = Value::Null;
    let (series, recipe, source) = series_in_tier(
        cfg,
        RecursionName::PTCubicDensity,
        Some(energy),
        max_q / 2 - 2,
        || {
            let res = solve_pt_missing_moments(energy, &GridSpec::default())?;
            info!(
                "PT oracle: missing moments {:?}, Barta infimum {} at x = {}",
                res.missing, res.barta_infimum, res.barta_argmin
            );
            oracle = json!({
                "energy": res.energy,
                "refinements": res.refinements,
                "missing": res.missing,
                "mu8": res.mu8,
                "odd_residual": res.odd_residual,
                "mismatch": res.mismatch,
                "barta_infimum": res.barta_infimum,
                "barta_argmin": res.barta_argmin,
                "grid_points": res.grid_points,
            });
            Ok(MomentRecursion::pt_cubic(res.energy, res.missing))
        },
    )?;
    let mut table = Table::new(&PT_HEADER);
    for e in &series.entries {
        table.row(&[e.q().to_string(), num(e.lambda_min)]);
    }
    Ok(Artifact {
        csv: table.finish(),
        json: json!({
            "command": "pt-series",
            "energy": recipe.energy(),
            "missing_moments": recipe.missing_moments,
            "precision_digits": cfg.precision,
            "moments": source.label(),
            "oracle": oracle,
            "rows": entries_json(&series),
        }),
    })
}

fn verdict_json(v: &Verdict) -> Value {
    let witness = match v {
        Verdict::Feasible { witness, .. } => json!(witness),
        _ => Value::Null,
    };
    json!({
        "verdict": v.label(),
        "cuts": v.cuts(),
        "witness_hash": v.witness_hash(),
        "witness": witness,
    })
}

fn interval_json(iv: &FeasibilityInterval) -> Value {
    let target = match iv.target {
        Target::SupLambdaMin => "sup-lambda-min",
        Target::InfLambdaMax => "inf-lambda-max",
        Target::EmmEnergy => "emm-energy",
    };
    let probes: Vec<Value> = iv
        .probes
        .iter()
        .map(|p| {
            let mut v = verdict_json(&p.verdict);
            v["value"] = json!(p.value);
            v
        })
        .collect();
    json!({
        "target": target,
        "lo": iv.lo,
        "hi": iv.hi,
        "total_cuts": iv.total_cuts(),
        "probes": probes,
    })
}

fn bound_table(
    cfg: &RunConfig,
    pstar: &[usize],
    solve: impl Fn(usize) -> Result<EnergyBounds, emm::EmmError>,
) -> Result<Artifact, CliError> {
    let mut table = Table::new(&BOUNDS_HEADER);
    let mut rows = Vec::new();
    for &p in pstar {
        let b = solve(2 * p)?;
        b.lower_edge.validate_ordering()?;
        b.upper_edge.validate_ordering()?;
        info!("P* = {p}: [{}, {}]", b.lower, b.upper);
        table.row(&[p.to_string(), num(b.lower), num(b.upper)]);
        rows.push(json!({
            "pstar": p,
            "q": b.q,
            "lower": b.lower,
            "upper": b.upper,
            "lower_edge": interval_json(&b.lower_edge),
            "upper_edge": interval_json(&b.upper_edge),
        }));
    }
    let mut json = json!({
        "command": cfg.command.name(),
        "tol": cfg.tol,
        "margin": emm::DEFAULT_MARGIN,
        "max_cuts": emm::DEFAULT_MAX_CUTS,
        "rows": rows,
    });
    if let Command::Theorem4Bounds { epub, .. } = cfg.command {
        json["epub"] = json!(epub);
    }
    Ok(Artifact {
        csv: table.finish(),
        json,
    })
}

fn pade_bounds(cfg: &RunConfig, orders: &[usize]) -> Result<Artifact, CliError> {
    let opts = PadeOptions {
        extended_digits: PadeOptions::default().extended_digits.max(cfg.precision),
        ..PadeOptions::default()
    };
    let mut table = Table::new(&PADE_HEADER);
    let mut rows = Vec::new();
    for &q in orders {
        let b = pade::pade_energy_bounds_with(q, cfg.tol, &opts)?;
        table.row(&[q.to_string(), num(b.lower), num(b.upper)]);
        rows.push(json!({
            "q": q,
            "lower": b.lower,
            "upper": b.upper,
            "lower_bracket": [b.lower_bracket.0, b.lower_bracket.1],
            "upper_bracket": [b.upper_bracket.0, b.upper_bracket.1],
            "evaluations": b.evaluations,
            "discarded_probes": b.discarded,
        }));
    }
    Ok(Artifact {
        csv: table.finish(),
        json: json!({
            "command": "pade-bounds",
            "tol": cfg.tol,
            "probe_points": opts.probe_points,
            "rows": rows,
        }),
    })
}
