//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use momentbound::gep::verify_theorem2;
use momentbound::pade::{pade_table, PadeOptions};
use serde_json::Value;

/// Ground-state energy of `x⁴` to 16 digits, for the sandwich check.
const QUARTIC_GROUND: f64 = 1.0603620904841829;

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let msg = format!("{what} = {got:.10} (want {want} ± {tol:e})");
        if (got - want).abs() <= tol {
            self.notes.push(msg);
        } else {
            self.failures.push(msg);
        }
    }

    fn that(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn within(&mut self, what: &str, elapsed: Duration, budget: Duration) {
        self.that(
            elapsed <= budget,
            format!(
                "{what} took {:.2}s (budget {}s)",
                elapsed.as_secs_f64(),
                budget.as_secs()
            ),
        );
    }
}

fn cli(args: &[&str]) -> Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_momentbound"))
        .env_remove("MOMENTBOUND_PRECISION")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "`momentbound {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok((
        String::from_utf8(out.stdout).map_err(|e| e.to_string())?,
        elapsed,
    ))
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

fn nonincreasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()))
}

fn table1_double(c: &mut Check) -> Result<(), String> {
    let expected = [
        0.75, -0.25, -0.25, -0.45810, -0.82522, -0.82522, -1.06261, -1.06261,
    ];
    let (text, elapsed) = cli(&["barta-series", "--max-dim", "8"])?;
    let rows = csv_rows(&text);
    c.that(rows.len() == 8, format!("{} rows", rows.len()));
    for (row, want) in rows.iter().zip(expected) {
        c.near(&format!("dim {}", row[0]), row[2], want, 1e-4);
    }
    c.within("barta-series", elapsed, Duration::from_secs(1));
    Ok(())
}

fn table1_extended(c: &mut Check) -> Result<(), String> {
    let (text, elapsed) = cli(&["barta-series", "--max-dim", "30", "--precision", "50"])?;
    let rows = csv_rows(&text);
    c.that(rows.len() == 30, format!("{} rows", rows.len()));
    let lmin: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    c.near("dim 21", lmin[20], -1.56786, 1e-4);
    c.near("dim 30", lmin[29], -1.68637, 1e-4);
    c.that(lmin.iter().all(|&l| l >= -2.0), "all lambda_min >= -2");
    c.that(nonincreasing(&lmin), "series nonincreasing");
    c.within(
        "barta-series at 50 digits",
        elapsed,
        Duration::from_secs(120),
    );
    Ok(())
}

fn degeneracy(c: &mut Check) -> Result<(), String> {
    let start = Instant::now();
    let e = 1.060362090484;
    for m2 in [0.34, 0.36, 0.38] {
        let r = verify_theorem2(e, (1.0 - m2, m2), 3, Some(1e-10)).map_err(|x| x.to_string())?;
        c.that(
            r.passed(),
            format!(
                "(mu0, mu2) = ({}, {m2}): max |lambda - E| = {:.2e}",
                1.0 - m2,
                r.max_deviation
            ),
        );
    }
    c.within(
        "three degeneracy checks",
        start.elapsed(),
        Duration::from_secs(1),
    );
    Ok(())
}

/// Per-order bounds and their edge brackets from a JSON artifact.
struct Bounds {
    pstar: u64,
    lower: f64,
    upper: f64,
    lower_edge: (f64, f64),
    upper_edge: (f64, f64),
}

fn bounds(args: &[&str]) -> Result<(Vec<Bounds>, Duration), String> {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let (text, elapsed) = cli(&full)?;
    let json: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let edge = |v: &Value| (v["lo"].as_f64().unwrap(), v["hi"].as_f64().unwrap());
    let rows = json["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .map(|r| Bounds {
            pstar: r["pstar"].as_u64().unwrap(),
            lower: r["lower"].as_f64().unwrap(),
            upper: r["upper"].as_f64().unwrap(),
            lower_edge: edge(&r["lower_edge"]),
            upper_edge: edge(&r["upper_edge"]),
        })
        .collect();
    Ok((rows, elapsed))
}

/// `x_1 ≤ x_2 ≤ …` is attainable with each `x_i` in its bracket iff no
/// earlier bracket starts above a later one's end.
fn chain_consistent(brackets: &[(f64, f64)]) -> bool {
    (0..brackets.len()).all(|i| (i + 1..brackets.len()).all(|j| brackets[i].0 <= brackets[j].1))
}

fn theorem4(c: &mut Check, emm: &[Bounds]) -> Result<(), String> {
    let (rows, elapsed) = bounds(&["theorem4-bounds", "--pstar", "6,8,12", "--epub", "2"])?;
    let expected = [(6, 0.934, 1.170), (8, 1.027, 1.080), (12, 1.0602, 1.0613)];
    for (b, (p, lo, hi)) in rows.iter().zip(expected) {
        c.that(b.pstar == p, format!("row for P* = {}", b.pstar));
        c.near(&format!("P*={p} lower"), b.lower, lo, 0.002);
        c.near(&format!("P*={p} upper"), b.upper, hi, 0.002);
    }
    for t in &rows {
        let Some(e) = emm.iter().find(|e| e.pstar == t.pstar) else {
            c.that(false, format!("no EMM row for P* = {}", t.pstar));
            continue;
        };
        let chain = [
            t.lower_edge,
            e.lower_edge,
            (QUARTIC_GROUND, QUARTIC_GROUND),
            e.upper_edge,
            t.upper_edge,
        ];
        c.that(
            chain_consistent(&chain),
            format!(
                "P*={} sandwich inf lambda_max {:?} <= EMM lower {:?} <= E_gr <= EMM upper {:?} <= sup lambda_min {:?}",
                t.pstar, t.lower_edge, e.lower_edge, e.upper_edge, t.upper_edge
            ),
        );
    }
    c.within("theorem4-bounds", elapsed, Duration::from_secs(600));
    Ok(())
}

fn emm_column(c: &mut Check, rows: &[Bounds]) {
    for (p, lo, hi) in [(6, 0.934, 1.150), (12, 1.0602, 1.0610)] {
        match rows.iter().find(|b| b.pstar == p) {
            Some(b) => {
                c.near(&format!("P*={p} lower"), b.lower, lo, 0.002);
                c.near(&format!("P*={p} upper"), b.upper, hi, 0.002);
            }
            None => c.that(false, format!("no row for P* = {p}")),
        }
    }
}

fn pt_table(c: &mut Check) -> Result<(), String> {
    let (text, _) = cli(&["pt-series", "--max-q", "60", "--format", "json"])?;
    let json: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let rows = json["rows"].as_array().ok_or("no rows")?;
    let at = |q: u64| {
        rows.iter()
            .find(|r| r["q"].as_u64() == Some(q))
            .and_then(|r| r["lambda_min"].as_f64())
            .unwrap_or(f64::NAN)
    };
    c.near("Q=4 lambda_min", at(4), 0.7651830316, 1e-3);
    c.near("Q=60 lambda_min", at(60), -1.5882508326, 5e-2);
    let lmin: Vec<f64> = rows
        .iter()
        .map(|r| r["lambda_min"].as_f64().unwrap())
        .collect();
    c.that(
        nonincreasing(&lmin),
        format!("series nonincreasing over {} orders", lmin.len()),
    );
    let inf = json["oracle"]["barta_infimum"].as_f64().unwrap_or(f64::NAN);
    c.near("Barta-function infimum", inf, -1.782, 0.01);
    Ok(())
}

fn properties(c: &mut Check) -> Result<(), String> {
    let (text, _) = cli(&["verify", "--suite", "properties", "--seed", "7"])?;
    let want = [
        ("quasiconvexity", 100),
        ("roots", 1),
        ("scale", 3),
        ("certificates", 1),
    ];
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let (name, checks, violations) = (cells[0], cells[1].parse::<usize>().unwrap(), cells[2]);
        let min = want.iter().find(|w| w.0 == name).map_or(1, |w| w.1);
        c.that(
            violations == "0" && checks >= min,
            format!("{name}: {checks} checks, {violations} violations"),
        );
    }
    c.that(text.lines().count() == 5, "four property suites ran");
    Ok(())
}

fn pade(c: &mut Check) -> Result<(), String> {
    let tol = 1e-9;
    let (text, _) = cli(&[
        "pade-bounds",
        "--q",
        "4,5,6,7,8,9,10,11,12,13,14",
        "--tol",
        "1e-9",
    ])?;
    let rows = csv_rows(&text);
    c.that(rows.len() == 11, format!("{} orders", rows.len()));
    c.that(
        rows.iter().all(|r| r[1] <= 1.0 && 1.0 <= r[2]),
        "every interval contains E = 1",
    );
    let widths: Vec<f64> = rows.iter().map(|r| r[2] - r[1]).collect();
    c.that(
        widths.windows(2).all(|w| w[1] < w[0]),
        format!(
            "widths strictly decrease: {:.3e} -> {:.3e}",
            widths[0],
            widths[widths.len() - 1]
        ),
    );
    c.that(
        rows.windows(2)
            .all(|w| w[1][1] >= w[0][1] - 2.0 * tol && w[1][2] <= w[0][2] + 2.0 * tol),
        "each interval lies inside the previous one",
    );
    let opts = PadeOptions::default();
    let nested = (4..=14)
        .map(|q| pade_table(1.0, q, &opts).map(|t| t.feasible()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    c.that(
        nested.iter().all(|&n| n),
        "nesting inequalities hold at E = 1 for Q = 4..14",
    );
    Ok(())
}

fn report(id: usize, title: &str, start: Instant, outcome: Result<Check, String>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(c) if c.failures.is_empty() => {
            println!(
                "criterion {id} [{title}]: PASS ({secs:.1}s) {}",
                c.notes.join("; ")
            );
            true
        }
        Ok(c) => {
            println!(
                "criterion {id} [{title}]: FAIL ({secs:.1}s) {} | passing: {}",
                c.failures.join("; "),
                c.notes.join("; ")
            );
            false
        }
        Err(e) => {
            println!("criterion {id} [{title}]: FAIL ({secs:.1}s) {e}");
            false
        }
    }
}

fn run(f: impl FnOnce(&mut Check) -> Result<(), String>) -> Result<Check, String> {
    let mut c = Check::new();
    f(&mut c).map(|_| c)
}

fn main() -> ExitCode {
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "Gaussian series, 64-bit", t, run(table1_double));
    let t = Instant::now();
    all &= report(2, "Gaussian series, 50 digits", t, run(table1_extended));
    let t = Instant::now();
    all &= report(
        3,
        "degeneracy at the quartic ground state",
        t,
        run(degeneracy),
    );

    let t = Instant::now();
    let emm = bounds(&["emm-bounds", "--pstar", "6,8,12"]);
    let emm_time = t.elapsed();
    let t = Instant::now();
    let outcome = match &emm {
        Ok((rows, _)) => run(|c| theorem4(c, rows)),
        Err(e) => Err(format!("EMM bounds for the sandwich: {e}")),
    };
    all &= report(4, "polytope bounds and sandwich", t, outcome);
    let outcome = match &emm {
        Ok((rows, _)) => run(|c| {
            emm_column(c, rows);
            Ok(())
        }),
        Err(e) => Err(e.clone()),
    };
    all &= report(
        5,
        "LP cutting-plane bounds",
        Instant::now() - emm_time,
        outcome,
    );

    let t = Instant::now();
    all &= report(6, "PT series from the ODE oracle", t, run(pt_table));
    let t = Instant::now();
    all &= report(7, "property suites", t, run(properties));
    let t = Instant::now();
    all &= report(8, "Padé nesting for the harmonic oscillator", t, run(pade));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
