//! Command-line flags, the `key = value` config file, and their merge into
//! a [`RunConfig`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Environment variable supplying the default working precision in digits.
pub const PRECISION_ENV: &str = "MOMENTBOUND_PRECISION";
/// Digits at or below which the 64-bit tier is used.
pub const DOUBLE_DIGITS: u32 = 15;
const MAX_DIGITS: u32 = 10_000;
const PT_DEFAULT_DIGITS: u32 = 50;

#[derive(Debug, Parser)]
#[command(
    name = "momentbound",
    version,
    about = "Moment-space ground-state energy bounds"
)]
pub struct Cli {
    /// Config file of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Working precision in decimal digits (>= 15; 15 selects 64-bit floats).
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Artifact path; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Moment sequence file reused across runs when compatible.
    #[arg(long, global = true)]
    pub moments_cache: Option<PathBuf>,
    /// Bisection tolerance for the bound searches.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized probes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Raise log verbosity (repeat for more).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// λ_min series for the Gaussian trial sequence.
    BartaSeries {
        #[arg(long)]
        max_dim: Option<usize>,
    },
    /// λ_min series for the PT-symmetric cubic density from the ODE oracle.
    PtSeries {
        #[arg(long)]
        max_q: Option<usize>,
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Bounds from the E_pub-constrained moment polytope.
    Theorem4Bounds(BoundArgs),
    /// Bounds from LP cutting-plane feasibility in energy.
    EmmBounds(BoundArgs),
    /// Feasibility interval from nested Padé approximants of the harmonic oscillator.
    PadeBounds {
        /// Comma-separated Padé orders.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<usize>>,
    },
    /// Runs invariant suites; exits 4 on any violation.
    Verify {
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Comma-separated P* values; the moment order is 2P*.
    #[arg(long, value_delimiter = ',')]
    pub pstar: Option<Vec<usize>>,
    /// Upper energy bound E_pub (polytope bounds only).
    #[arg(long)]
    pub epub: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Monotonicity,
    Degeneracy,
    /// Quasi-convexity, root equivalence, scale invariance and certificates.
    Properties,
    Quasiconvexity,
    Roots,
    Scale,
    Certificates,
    Pade,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    BartaSeries { max_dim: usize },
    PtSeries { max_q: usize, energy: f64 },
    Theorem4Bounds { pstar: Vec<usize>, epub: f64 },
    EmmBounds { pstar: Vec<usize> },
    PadeBounds { q: Vec<usize> },
    Verify { suite: Suite },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BartaSeries { .. } => "barta-series",
            Command::PtSeries { .. } => "pt-series",
            Command::Theorem4Bounds { .. } => "theorem4-bounds",
            Command::EmmBounds { .. } => "emm-bounds",
            Command::PadeBounds { .. } => "pade-bounds",
            Command::Verify { .. } => "verify",
        }
    }

    /// The PT series is ill-conditioned beyond what the 64-bit escalation
    /// rule detects, so it starts in extended precision.
    fn default_precision(&self) -> u32 {
        match self {
            Command::PtSeries { .. } => PT_DEFAULT_DIGITS,
            _ => DOUBLE_DIGITS,
        }
    }

    fn default_tol(&self) -> f64 {
        match self {
            Command::PadeBounds { .. } => 1e-6,
            _ => 1e-4,
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Decimal digits; [`DOUBLE_DIGITS`] selects the 64-bit tier.
    pub precision: u32,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub moments_cache: Option<PathBuf>,
    pub tol: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn is_double(&self) -> bool {
        self.precision <= DOUBLE_DIGITS
    }
}

const KEYS: &[&str] = &[
    "precision",
    "format",
    "output",
    "moments-cache",
    "tol",
    "seed",
    "max-dim",
    "max-q",
    "energy",
    "pstar",
    "epub",
    "q",
    "suite",
];

/// Parses `key = value` lines; `#` starts a comment, `_` and `-` are
/// interchangeable in keys.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "config line {}: duplicate key {key:?}",
                i + 1
            )));
        }
    }
    Ok(out)
}

struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.file
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    CliError::Config(format!("config key {key:?}: cannot parse {v:?}"))
                })
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.file
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<usize>, _>>()
                    .map_err(|_| CliError::Config(format!("config key {key:?}: bad list {v:?}")))
            })
            .transpose()
    }

    fn value_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.file
            .get(key)
            .map(|v| {
                T::from_str(v, true).map_err(|_| {
                    CliError::Config(format!("config key {key:?}: unknown value {v:?}"))
                })
            })
            .transpose()
    }
}

/// Merges flags over the config file over built-in defaults. The
/// environment only supplies the default precision.
pub fn resolve(cli: Cli, env_precision: Option<String>) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(p) => parse_config_file(&read_config(p)?)?,
        None => BTreeMap::new(),
    };
    let layer = Layer { file };

    let env_default = env_precision
        .map(|v| {
            v.trim().parse::<u32>().map_err(|_| {
                CliError::Config(format!("{PRECISION_ENV}={v:?} is not a digit count"))
            })
        })
        .transpose()?;
    let explicit_precision = cli.precision.or(layer.get("precision")?).or(env_default);

    let command = match cli.command {
        CommandArgs::BartaSeries { max_dim } => {
            let max_dim = max_dim.or(layer.get("max-dim")?).unwrap_or(8);
            if max_dim == 0 {
                return Err(CliError::Config("max-dim must be at least 1".into()));
            }
            Command::BartaSeries { max_dim }
        }
        CommandArgs::PtSeries { max_q, energy } => {
            let max_q = max_q.or(layer.get("max-q")?).unwrap_or(60);
            if max_q < 4 || max_q % 2 == 1 {
                return Err(CliError::Config(format!(
                    "max-q must be even and >= 4, got {max_q}"
                )));
            }
            let energy = energy
                .or(layer.get("energy")?)
                .unwrap_or(momentbound::moments::PT_ENERGY);
            if !(energy.is_finite() && energy > 0.0) {
                return Err(CliError::Config(format!(
                    "energy must be positive, got {energy}"
                )));
            }
            Command::PtSeries { max_q, energy }
        }
        CommandArgs::Theorem4Bounds(b) => {
            let epub = b
                .epub
                .or(layer.get("epub")?)
                .unwrap_or(momentbound::emm::DEFAULT_EPUB);
            if !(epub.is_finite() && epub > 0.0) {
                return Err(CliError::Config(format!(
                    "epub must be positive, got {epub}"
                )));
            }
            Command::Theorem4Bounds {
                pstar: pstar_list(b.pstar, &layer)?,
                epub,
            }
        }
        CommandArgs::EmmBounds(b) => {
            if b.epub.is_some() {
                return Err(CliError::Config("emm-bounds takes no --epub".into()));
            }
            Command::EmmBounds {
                pstar: pstar_list(b.pstar, &layer)?,
            }
        }
        CommandArgs::PadeBounds { q } => {
            let q = match q {
                Some(q) => q,
                None => layer.list("q")?.unwrap_or_else(|| (4..=14).collect()),
            };
            if q.is_empty() || q.iter().any(|&x| x < 2) {
                return Err(CliError::Config(format!(
                    "pade orders must be >= 2, got {q:?}"
                )));
            }
            Command::PadeBounds { q }
        }
        CommandArgs::Verify { suite } => Command::Verify {
            suite: match suite {
                Some(s) => s,
                None => layer.value_enum("suite")?.unwrap_or(Suite::All),
            },
        },
    };

    let precision = explicit_precision.unwrap_or_else(|| command.default_precision());
    if !(DOUBLE_DIGITS..=MAX_DIGITS).contains(&precision) {
        return Err(CliError::Config(format!(
            "precision must be between {DOUBLE_DIGITS} and {MAX_DIGITS} digits, got {precision}"
        )));
    }
    let tol = cli
        .tol
        .or(layer.get("tol")?)
        .unwrap_or_else(|| command.default_tol());
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Config(format!("tol must be positive, got {tol}")));
    }
    let format = match cli.format {
        Some(f) => f,
        None => layer.value_enum("format")?.unwrap_or(Format::Csv),
    };

    Ok(RunConfig {
        command,
        precision,
        format,
        output: cli.output.or(layer.get("output")?),
        moments_cache: cli.moments_cache.or(layer.get("moments-cache")?),
        tol,
        seed: cli.seed.or(layer.get("seed")?).unwrap_or(0),
    })
}

fn pstar_list(flag: Option<Vec<usize>>, layer: &Layer) -> Result<Vec<usize>, CliError> {
    let list = match flag {
        Some(v) => v,
        None => layer.list("pstar")?.unwrap_or_else(|| vec![6, 8, 12]),
    };
    if list.is_empty() || list.iter().any(|&p| p < 3) {
        return Err(CliError::Config(format!(
            "pstar values must be >= 3, got {list:?}"
        )));
    }
    Ok(list)
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("momentbound").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_per_command() {
        let c = resolve(parse(&["theorem4-bounds"]), None).unwrap();
        assert_eq!(
            c.command,
            Command::Theorem4Bounds {
                pstar: vec![6, 8, 12],
                epub: 2.0
            }
        );
        assert_eq!(c.precision, 15);
        assert_eq!(c.tol, 1e-4);
        assert_eq!(c.format, Format::Csv);
        let c = resolve(parse(&["pade-bounds"]), None).unwrap();
        assert_eq!(
            c.command,
            Command::PadeBounds {
                q: (4..=14).collect()
            }
        );
        assert_eq!(c.tol, 1e-6);
        assert_eq!(resolve(parse(&["pt-series"]), None).unwrap().precision, 50);
        let c = resolve(parse(&["pt-series"]), Some("15".into())).unwrap();
        assert_eq!(c.precision, 15);
    }

    #[test]
    fn flags_beat_file_beats_env() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "# comment\nprecision = 40\nmax_dim = 12 # trailing\nformat = json"
        )
        .unwrap();
        let path = f.path().to_str().unwrap().to_string();

        let c = resolve(
            parse(&["barta-series", "--config", &path]),
            Some("30".into()),
        )
        .unwrap();
        assert_eq!(c.precision, 40);
        assert_eq!(c.command, Command::BartaSeries { max_dim: 12 });
        assert_eq!(c.format, Format::Json);

        let c = resolve(
            parse(&[
                "barta-series",
                "--config",
                &path,
                "--precision",
                "60",
                "--max-dim",
                "3",
            ]),
            Some("30".into()),
        )
        .unwrap();
        assert_eq!(c.precision, 60);
        assert_eq!(c.command, Command::BartaSeries { max_dim: 3 });

        let c = resolve(parse(&["barta-series"]), Some("30".into())).unwrap();
        assert_eq!(c.precision, 30);
    }

    #[test]
    fn env_sets_only_precision() {
        let c = resolve(parse(&["pade-bounds"]), Some("20".into())).unwrap();
        assert_eq!(c.precision, 20);
        assert!(matches!(
            resolve(parse(&["pade-bounds"]), Some("lots".into())),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn rejects_low_precision_and_bad_keys() {
        assert!(matches!(
            resolve(parse(&["barta-series", "--precision", "10"]), None),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse_config_file("colour = red"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse_config_file("tol 1e-3"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse_config_file("tol = 1\ntol = 2"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn lists_and_enums_from_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "pstar = 6, 12\nsuite = pade\nq = 4,5").unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let c = resolve(parse(&["emm-bounds", "--config", &path]), None).unwrap();
        assert_eq!(c.command, Command::EmmBounds { pstar: vec![6, 12] });
        let c = resolve(parse(&["verify", "--config", &path]), None).unwrap();
        assert_eq!(c.command, Command::Verify { suite: Suite::Pade });
        let c = resolve(parse(&["pade-bounds", "--config", &path]), None).unwrap();
        assert_eq!(c.command, Command::PadeBounds { q: vec![4, 5] });
    }
}
