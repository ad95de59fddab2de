//! Moment sequences: generation from the supported recursions, validation,
//! and a plain-text cache format.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::real::{MpFloat, Precision, Real};

pub mod pt_oracle;

pub use pt_oracle::{solve_pt_missing_moments, GridSpec, PtOracleResult};

/// Eigenvalue of the PT-symmetric cubic oscillator ground state.
pub const PT_ENERGY: f64 = 1.1562670719881133;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("max order must be even, got {0}")]
    OddMaxOrder(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("missing moment {name} must be positive, got {value}")]
    NonPositiveMissing { name: &'static str, value: f64 },
    #[error("moment sequence invariant violated: {0}")]
    Invariant(String),
    #[error("cannot combine sequences with normalizations {0} and {1}")]
    MixedNormalization(Normalization, Normalization),
    #[error("malformed moment file at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("boundary-value matching did not converge: {0}")]
    OracleNonConvergence(String),
    #[error("propagated oracle moments lose Hankel positivity at dimension {dim}")]
    OracleLossOfPositivity { dim: usize },
    #[error("unusable quadrature grid: {0}")]
    DegenerateGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// Whole real line.
    Hamburger,
    /// Half line.
    Stieltjes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalization {
    Mu0EqualsOne,
    Mu0PlusMuQEqualsOne,
    None,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!("unknown {}: {other:?}", stringify!($ty))),
                }
            }
        }
    };
}

text_enum!(MomentKind { Hamburger => "hamburger", Stieltjes => "stieltjes" });
text_enum!(Normalization {
    Mu0EqualsOne => "mu0=1",
    Mu0PlusMuQEqualsOne => "mu0+muQ=1",
    None => "none",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecursionName {
    GaussianTrial,
    QuarticMomentEquation,
    HarmonicStieltjes,
    PTCubicDensity,
}

text_enum!(RecursionName {
    GaussianTrial => "gaussian",
    QuarticMomentEquation => "quartic",
    HarmonicStieltjes => "harmonic-stieltjes",
    PTCubicDensity => "pt-cubic",
});

/// A recipe that regenerates a moment sequence at any precision.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecursion {
    pub name: RecursionName,
    /// Named real parameters; `"energy"` where applicable.
    pub parameters: BTreeMap<String, f64>,
    /// Initialization moments the recursion cannot determine.
    pub missing_moments: Vec<f64>,
}

impl MomentRecursion {
    pub fn gaussian() -> Self {
        Self::new(RecursionName::GaussianTrial, None, vec![])
    }

    pub fn quartic(energy: f64, mu0: f64, mu2: f64) -> Self {
        Self::new(
            RecursionName::QuarticMomentEquation,
            Some(energy),
            vec![mu0, mu2],
        )
    }

    pub fn harmonic_stieltjes(energy: f64) -> Self {
        Self::new(RecursionName::HarmonicStieltjes, Some(energy), vec![])
    }

    /// `missing` holds μ_2, μ_4, μ_6; μ_0 = 1.
    pub fn pt_cubic(energy: f64, missing: [f64; 3]) -> Self {
        Self::new(
            RecursionName::PTCubicDensity,
            Some(energy),
            vec![1.0, missing[0], missing[1], missing[2]],
        )
    }

    fn new(name: RecursionName, energy: Option<f64>, missing_moments: Vec<f64>) -> Self {
        let mut parameters = BTreeMap::new();
        if let Some(e) = energy {
            parameters.insert("energy".to_string(), e);
        }
        MomentRecursion {
            name,
            parameters,
            missing_moments,
        }
    }

    pub fn energy(&self) -> Option<f64> {
        self.parameters.get("energy").copied()
    }

    fn expected_missing(&self) -> usize {
        match self.name {
            RecursionName::GaussianTrial | RecursionName::HarmonicStieltjes => 0,
            RecursionName::QuarticMomentEquation => 2,
            RecursionName::PTCubicDensity => 4,
        }
    }

    pub fn validate(&self) -> Result<(), MomentError> {
        if self.missing_moments.len() != self.expected_missing() {
            return Err(MomentError::Precondition(format!(
                "{} recursion takes {} missing moments, got {}",
                self.name,
                self.expected_missing(),
                self.missing_moments.len()
            )));
        }
        let needs_energy = !matches!(self.name, RecursionName::GaussianTrial);
        if needs_energy && self.energy().is_none() {
            return Err(MomentError::Precondition(format!(
                "{} recursion needs an energy parameter",
                self.name
            )));
        }
        Ok(())
    }

    pub fn generate<R: Real>(
        &self,
        max_order: usize,
        prec: Precision,
    ) -> Result<MomentSequence<R>, MomentError> {
        self.validate()?;
        let e = self.energy().unwrap_or(0.0);
        let m = &self.missing_moments;
        let energy = R::from_f64(e, prec);
        match self.name {
            RecursionName::GaussianTrial => generate_gaussian_moments(max_order, prec),
            RecursionName::QuarticMomentEquation => generate_quartic_sequence(
                &energy,
                &R::from_f64(m[0], prec),
                &R::from_f64(m[1], prec),
                max_order,
            ),
            RecursionName::HarmonicStieltjes => generate_harmonic_stieltjes(&energy, max_order),
            RecursionName::PTCubicDensity => generate_pt_density_moments(
                &energy,
                [
                    R::from_f64(m[1], prec),
                    R::from_f64(m[2], prec),
                    R::from_f64(m[3], prec),
                ],
                max_order,
            ),
        }
    }
}

/// Real moments μ_0..μ_Q with parity and normalization metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<R> {
    values: Vec<R>,
    kind: MomentKind,
    parity_even: bool,
    normalization: Normalization,
    positive_claim: bool,
    recipe: Option<MomentRecursion>,
}

impl<R: Real> MomentSequence<R> {
    /// Builds and validates a sequence.
    pub fn new(
        values: Vec<R>,
        kind: MomentKind,
        parity_even: bool,
        normalization: Normalization,
        positive_claim: bool,
    ) -> Result<Self, MomentError> {
        let seq = MomentSequence {
            values,
            kind,
            parity_even,
            normalization,
            positive_claim,
            recipe: None,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn with_recipe(mut self, recipe: MomentRecursion) -> Self {
        self.recipe = Some(recipe);
        self
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn get(&self, p: usize) -> &R {
        &self.values[p]
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn parity_even(&self) -> bool {
        self.parity_even
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Whether the sequence claims to be the moments of a positive function.
    pub fn positive_claim(&self) -> bool {
        self.positive_claim
    }

    pub fn recipe(&self) -> Option<&MomentRecursion> {
        self.recipe.as_ref()
    }

    pub fn precision(&self) -> Precision {
        self.values[0].precision()
    }

    pub fn validate(&self) -> Result<(), MomentError> {
        let v = &self.values;
        if v.is_empty() {
            return Err(MomentError::Invariant("empty moment sequence".into()));
        }
        if let Some(p) = v.iter().position(|x| !x.is_finite()) {
            return Err(MomentError::Invariant(format!("μ_{p} is not finite")));
        }
        if self.parity_even {
            if let Some(p) = (1..v.len()).step_by(2).find(|&p| !v[p].is_zero()) {
                return Err(MomentError::Invariant(format!(
                    "parity-even sequence has nonzero odd moment μ_{p} = {}",
                    v[p].to_f64()
                )));
            }
        }
        let zero = v[0].lift(0.0);
        if self.positive_claim {
            let step = if self.kind == MomentKind::Hamburger {
                2
            } else {
                1
            };
            if let Some(p) = (0..v.len()).step_by(step).find(|&p| v[p] <= zero) {
                return Err(MomentError::Invariant(format!(
                    "positive-function claim requires μ_{p} > 0, got {}",
                    v[p].to_f64()
                )));
            }
        }
        let tol = v[0].lift(1e-12).max_of_eps();
        match self.normalization {
            Normalization::Mu0EqualsOne => {
                if (v[0].clone() - v[0].lift(1.0)).abs() > tol {
                    return Err(MomentError::Invariant(format!(
                        "μ_0 = {} but normalization requires 1",
                        v[0].to_f64()
                    )));
                }
            }
            Normalization::Mu0PlusMuQEqualsOne => {
                let q = v.len() - 1;
                let s = v[0].clone() + v[q].clone();
                if (s.clone() - v[0].lift(1.0)).abs() > tol {
                    return Err(MomentError::Invariant(format!(
                        "μ_0 + μ_Q = {} but normalization requires 1",
                        s.to_f64()
                    )));
                }
                let bound = v[0].lift(1.0) + tol;
                if let Some(p) = v.iter().position(|x| x.abs() > bound) {
                    return Err(MomentError::Invariant(format!(
                        "|μ_{p}| = {} exceeds 1 under μ_0 + μ_Q = 1",
                        v[p].to_f64()
                    )));
                }
            }
            Normalization::None => {}
        }
        Ok(())
    }

    /// Multiplies every moment by `c > 0`. The normalization tag is dropped.
    pub fn scaled(&self, c: &R) -> Result<Self, MomentError> {
        if !(c.clone() > c.lift(0.0)) {
            return Err(MomentError::Precondition(
                "scale factor must be positive".into(),
            ));
        }
        let values = self.values.iter().map(|x| x.clone() * c.clone()).collect();
        Ok(MomentSequence {
            values,
            normalization: Normalization::None,
            recipe: None,
            ..self.clone()
        })
    }

    /// First `q + 1` moments.
    pub fn truncated(&self, q: usize) -> Result<Self, MomentError> {
        if q > self.max_order() {
            return Err(MomentError::Precondition(format!(
                "cannot truncate order {} sequence to {q}",
                self.max_order()
            )));
        }
        let normalization = match self.normalization {
            Normalization::Mu0PlusMuQEqualsOne if q != self.max_order() => Normalization::None,
            n => n,
        };
        Ok(MomentSequence {
            values: self.values[..=q].to_vec(),
            normalization,
            ..self.clone()
        })
    }

    /// `s·a + (1−s)·b`. Both inputs must share a normalization.
    pub fn convex_combination(a: &Self, b: &Self, s: &R) -> Result<Self, MomentError> {
        if a.normalization != b.normalization {
            return Err(MomentError::MixedNormalization(
                a.normalization,
                b.normalization,
            ));
        }
        if a.values.len() != b.values.len() || a.kind != b.kind {
            return Err(MomentError::Precondition(
                "convex combination needs sequences of equal order and kind".into(),
            ));
        }
        let t = s.lift(1.0) - s.clone();
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| s.clone() * x.clone() + t.clone() * y.clone())
            .collect();
        Ok(MomentSequence {
            values,
            kind: a.kind,
            parity_even: a.parity_even && b.parity_even,
            normalization: a.normalization,
            positive_claim: a.positive_claim && b.positive_claim,
            recipe: None,
        })
    }

    /// Re-represents the values at another scalar type through their exact decimal form.
    pub fn convert<S: Real>(&self, prec: Precision) -> MomentSequence<S> {
        let values = self
            .values
            .iter()
            .map(|x| {
                if x.is_zero() {
                    S::zero(prec)
                } else {
                    S::parse_decimal(&x.to_decimal(), prec).expect("decimal form parses")
                }
            })
            .collect();
        MomentSequence {
            values,
            kind: self.kind,
            parity_even: self.parity_even,
            normalization: self.normalization,
            positive_claim: self.positive_claim,
            recipe: self.recipe.clone(),
        }
    }

    /// Regenerates from the recipe at a higher precision when one is known.
    pub fn regenerate_mp(&self, prec: Precision) -> Result<MomentSequence<MpFloat>, MomentError> {
        match &self.recipe {
            Some(r) => {
                let fresh = r.generate::<MpFloat>(self.max_order(), prec)?;
                Ok(MomentSequence {
                    normalization: self.normalization,
                    ..fresh
                })
            }
            None => Ok(self.convert(prec)),
        }
    }
}

trait TolFloor {
    fn max_of_eps(self) -> Self;
}

impl<R: Real> TolFloor for R {
    /// Never tighter than a few ulps at the value's precision.
    fn max_of_eps(self) -> Self {
        let floor = self.epsilon() * self.lift(64.0);
        R::max_of(self, floor)
    }
}

fn require_even(max_order: usize) -> Result<(), MomentError> {
    if max_order % 2 == 1 {
        Err(MomentError::OddMaxOrder(max_order))
    } else {
        Ok(())
    }
}

/// Moments of the Gaussian trial `exp(-x²)`, normalized to μ_0 = 1.
pub fn generate_gaussian_moments<R: Real>(
    max_order: usize,
    prec: Precision,
) -> Result<MomentSequence<R>, MomentError> {
    require_even(max_order)?;
    let mut v = vec![R::zero(prec); max_order + 1];
    v[0] = R::one(prec);
    let two = R::from_f64(2.0, prec);
    for p in (0..max_order.saturating_sub(1)).step_by(2) {
        v[p + 2] = R::from_i64(1 + p as i64, prec) / two.clone() * v[p].clone();
    }
    Ok(MomentSequence::new(
        v,
        MomentKind::Hamburger,
        true,
        Normalization::Mu0EqualsOne,
        true,
    )?
    .with_recipe(MomentRecursion::gaussian()))
}

/// Parity-even moments obeying the quartic moment equation
/// `μ_{p+4} = E μ_p + p(p−1) μ_{p−2}`.
pub fn generate_quartic_sequence<R: Real>(
    energy: &R,
    mu0: &R,
    mu2: &R,
    max_order: usize,
) -> Result<MomentSequence<R>, MomentError> {
    require_even(max_order)?;
    if max_order < 4 {
        return Err(MomentError::Precondition(format!(
            "quartic sequence needs max order >= 4, got {max_order}"
        )));
    }
    if !(mu0.clone() > mu0.lift(0.0)) {
        return Err(MomentError::Precondition(format!(
            "μ_0 must be positive, got {}",
            mu0.to_f64()
        )));
    }
    let prec = energy.precision();
    let mut v = vec![R::zero(prec); max_order + 1];
    v[0] = mu0.clone();
    v[2] = mu2.clone();
    for p in (0..=max_order - 4).step_by(2) {
        let mut next = energy.clone() * v[p].clone();
        if p >= 2 {
            next += R::from_i64((p * (p - 1)) as i64, prec) * v[p - 2].clone();
        }
        v[p + 4] = next;
    }
    let normalization = if mu0.clone() == mu0.lift(1.0) {
        Normalization::Mu0EqualsOne
    } else {
        Normalization::None
    };
    let recipe = MomentRecursion::quartic(energy.to_f64(), mu0.to_f64(), mu2.to_f64());
    Ok(
        MomentSequence::new(v, MomentKind::Hamburger, true, normalization, false)?
            .with_recipe(recipe),
    )
}

/// Stieltjes moments of the harmonic-oscillator ground state as functions of
/// the energy: `u_{ρ+1} = E u_ρ + 2ρ(2ρ−1) u_{ρ−1}`, `u_0 = 1`.
pub fn generate_harmonic_stieltjes<R: Real>(
    energy: &R,
    max_order: usize,
) -> Result<MomentSequence<R>, MomentError> {
    if max_order < 1 {
        return Err(MomentError::Precondition(
            "harmonic sequence needs max order >= 1".into(),
        ));
    }
    let prec = energy.precision();
    let mut u = vec![R::zero(prec); max_order + 1];
    u[0] = R::one(prec);
    u[1] = energy.clone();
    for rho in 1..max_order {
        let c = (2 * rho * (2 * rho - 1)) as i64;
        u[rho + 1] = energy.clone() * u[rho].clone() + R::from_i64(c, prec) * u[rho - 1].clone();
    }
    Ok(MomentSequence::new(
        u,
        MomentKind::Stieltjes,
        false,
        Normalization::Mu0EqualsOne,
        false,
    )?
    .with_recipe(MomentRecursion::harmonic_stieltjes(energy.to_f64())))
}

/// Moments of the PT-symmetric cubic density `|Φ|²` from μ_0 = 1 and the
/// missing moments μ_2, μ_4, μ_6, via
/// `4μ_{p+7} = (p+4)p(p−1)(p−2) μ_{p−3} + 4ℰ p(p+4) μ_{p−1}`.
pub fn generate_pt_density_moments<R: Real>(
    energy: &R,
    missing: [R; 3],
    max_order: usize,
) -> Result<MomentSequence<R>, MomentError> {
    if max_order < 7 {
        return Err(MomentError::Precondition(format!(
            "PT sequence needs max order >= 7, got {max_order}"
        )));
    }
    for (name, value) in ["μ_2", "μ_4", "μ_6"].iter().zip(&missing) {
        if !(value.clone() > value.lift(0.0)) {
            return Err(MomentError::NonPositiveMissing {
                name,
                value: value.to_f64(),
            });
        }
    }
    let prec = energy.precision();
    let mut v = vec![R::zero(prec); max_order + 1];
    v[0] = R::one(prec);
    let [m2, m4, m6] = missing;
    v[2] = m2;
    v[4] = m4;
    v[6] = m6;
    let four = R::from_f64(4.0, prec);
    for p in (1..).step_by(2).take_while(|p| p + 7 <= max_order) {
        let pi = p as i64;
        let mut rhs =
            four.clone() * energy.clone() * R::from_i64(pi * (pi + 4), prec) * v[p - 1].clone();
        if p >= 3 {
            rhs += R::from_i64((pi + 4) * pi * (pi - 1) * (pi - 2), prec) * v[p - 3].clone();
        }
        v[p + 7] = rhs / four.clone();
    }
    let recipe = MomentRecursion::pt_cubic(
        energy.to_f64(),
        [v[2].to_f64(), v[4].to_f64(), v[6].to_f64()],
    );
    Ok(MomentSequence::new(
        v,
        MomentKind::Hamburger,
        true,
        Normalization::Mu0EqualsOne,
        true,
    )?
    .with_recipe(recipe))
}

const FILE_MAGIC: &str = "# momentbound moment sequence v1";

/// Writes the sequence as a commented header followed by one decimal per line.
pub fn save_moments<R: Real>(seq: &MomentSequence<R>, path: &Path) -> Result<(), MomentError> {
    let mut out = String::new();
    out.push_str(FILE_MAGIC);
    out.push('\n');
    let mut header = |k: &str, v: String| out.push_str(&format!("# {k}: {v}\n"));
    header("kind", seq.kind.to_string());
    header("parity_even", seq.parity_even.to_string());
    header("normalization", seq.normalization.to_string());
    header("positive", seq.positive_claim.to_string());
    header("precision_bits", seq.precision().bits().to_string());
    header("max_order", seq.max_order().to_string());
    if let Some(r) = &seq.recipe {
        header("recipe", r.name.to_string());
        for (k, v) in &r.parameters {
            header(&format!("param.{k}"), format!("{v:e}"));
        }
        let missing: Vec<String> = r.missing_moments.iter().map(|x| format!("{x:e}")).collect();
        header("missing", missing.join(","));
    }
    for x in &seq.values {
        out.push_str(&x.to_decimal());
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a file written by [`save_moments`] and validates its invariants.
pub fn load_moments<R: Real>(path: &Path) -> Result<MomentSequence<R>, MomentError> {
    let text = fs::read_to_string(path)?;
    parse_moments(&text)
}

pub fn parse_moments<R: Real>(text: &str) -> Result<MomentSequence<R>, MomentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == FILE_MAGIC => {}
        _ => {
            return Err(MomentError::Malformed {
                line: 1,
                msg: "missing file header".into(),
            })
        }
    }
    let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut values = Vec::new();
    let mut prec = Precision::DOUBLE;
    let mut body_started = false;
    for (i, raw) in lines {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if body_started {
                return Err(MomentError::Malformed {
                    line: lineno,
                    msg: "header line after moment values".into(),
                });
            }
            let (k, v) = rest.split_once(':').ok_or_else(|| MomentError::Malformed {
                line: lineno,
                msg: "header line without ':'".into(),
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k == "precision_bits" {
                let bits = v.parse().map_err(|_| MomentError::Malformed {
                    line: lineno,
                    msg: format!("bad precision {v:?}"),
                })?;
                prec = Precision::from_bits(bits);
            }
            header.insert(k, (lineno, v));
            continue;
        }
        body_started = true;
        let x = R::parse_decimal(line, prec).ok_or_else(|| MomentError::Malformed {
            line: lineno,
            msg: format!("not a number: {line:?}"),
        })?;
        values.push(x);
    }

    fn field<T: FromStr>(
        header: &BTreeMap<String, (usize, String)>,
        key: &str,
    ) -> Result<T, MomentError> {
        let (line, v) = header.get(key).ok_or_else(|| MomentError::Malformed {
            line: 1,
            msg: format!("missing header field {key:?}"),
        })?;
        v.parse().map_err(|_| MomentError::Malformed {
            line: *line,
            msg: format!("bad value {v:?} for {key:?}"),
        })
    }

    let kind: MomentKind = field(&header, "kind")?;
    let parity_even: bool = field(&header, "parity_even")?;
    let normalization: Normalization = field(&header, "normalization")?;
    let positive: bool = field(&header, "positive")?;
    let max_order: usize = field(&header, "max_order")?;
    if values.len() != max_order + 1 {
        return Err(MomentError::Malformed {
            line: text.lines().count(),
            msg: format!("expected {} moments, found {}", max_order + 1, values.len()),
        });
    }
    let mut seq = MomentSequence::new(values, kind, parity_even, normalization, positive)?;
    if header.contains_key("recipe") {
        let name: RecursionName = field(&header, "recipe")?;
        let mut parameters = BTreeMap::new();
        for (k, (line, v)) in &header {
            if let Some(p) = k.strip_prefix("param.") {
                let x: f64 = v.parse().map_err(|_| MomentError::Malformed {
                    line: *line,
                    msg: format!("bad parameter {v:?}"),
                })?;
                parameters.insert(p.to_string(), x);
            }
        }
        let missing_moments = match header.get("missing") {
            Some((_, v)) if !v.is_empty() => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| MomentError::Malformed {
                    line: header["missing"].0,
                    msg: format!("bad missing-moment list {v:?}"),
                })?,
            _ => vec![],
        };
        let recipe = MomentRecursion {
            name,
            parameters,
            missing_moments,
        };
        recipe.validate()?;
        seq = seq.with_recipe(recipe);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const D: Precision = Precision::DOUBLE;

    #[test]
    fn gaussian_low_orders() {
        let s = generate_gaussian_moments::<f64>(4, D).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0, 0.5, 0.0, 0.75]);
        let s = generate_gaussian_moments::<f64>(0, D).unwrap();
        assert_eq!(s.values(), &[1.0]);
        let s = generate_gaussian_moments::<f64>(8, D).unwrap();
        assert_eq!(*s.get(8), 105.0 / 16.0);
        assert!(matches!(
            generate_gaussian_moments::<f64>(5, D),
            Err(MomentError::OddMaxOrder(5))
        ));
    }

    #[test]
    fn gaussian_alternate_recursion() {
        // −p(p−1)μ_{p−2} + 4μ_{p+2} = 2μ_p for even p.
        let s = generate_gaussian_moments::<f64>(40, D).unwrap();
        for p in (0..=38).step_by(2) {
            let lower = if p >= 2 {
                (p * (p - 1)) as f64 * s.get(p - 2)
            } else {
                0.0
            };
            assert_relative_eq!(
                -lower + 4.0 * s.get(p + 2),
                2.0 * s.get(p),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn quartic_examples() {
        let s = generate_quartic_sequence(&1.0f64, &1.0, &0.5, 8).unwrap();
        assert_eq!(&s.values()[4..], &[1.0, 0.0, 2.5, 0.0, 7.0]);
        let s = generate_quartic_sequence(&0.0f64, &1.0, &0.0, 4).unwrap();
        assert_eq!(*s.get(4), 0.0);
        assert!(generate_quartic_sequence(&1.0f64, &0.0, &0.5, 8).is_err());
    }

    #[test]
    fn harmonic_examples() {
        let s = generate_harmonic_stieltjes(&1.0f64, 2).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 3.0]);
        let s = generate_harmonic_stieltjes(&0.0f64, 2).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0, 2.0]);
        let s = generate_harmonic_stieltjes(&2.0f64, 3).unwrap();
        assert_eq!(*s.get(3), 36.0);
    }

    #[test]
    fn harmonic_at_unit_energy_is_gaussian_density() {
        // exp(−x²/2) has even moments (2ρ−1)!!.
        let s = generate_harmonic_stieltjes(&1.0f64, 8).unwrap();
        let mut df = 1.0;
        for rho in 0..=8 {
            assert_eq!(*s.get(rho), df);
            df *= (2 * rho + 1) as f64;
        }
    }

    #[test]
    fn pt_recursion_rows() {
        let e = PT_ENERGY;
        let s = generate_pt_density_moments(&e, [0.5, 0.75, 1.8], 12).unwrap();
        assert_eq!(*s.get(8), 5.0 * e);
        assert_relative_eq!(
            *s.get(10),
            (7.0 * 6.0 + 4.0 * e * 21.0 * 0.5) / 4.0,
            max_relative = 1e-15
        );
        assert!(s.values().iter().skip(1).step_by(2).all(|x| *x == 0.0));
        assert!(matches!(
            generate_pt_density_moments(&e, [0.5, -0.1, 1.8], 12),
            Err(MomentError::NonPositiveMissing { name: "μ_4", .. })
        ));
    }

    #[test]
    fn invariants_enforced() {
        let bad_parity = MomentSequence::new(
            vec![1.0, 0.1, 0.5],
            MomentKind::Hamburger,
            true,
            Normalization::None,
            false,
        );
        assert!(bad_parity.is_err());
        let nonpositive = MomentSequence::new(
            vec![1.0, 0.0, -0.1],
            MomentKind::Hamburger,
            true,
            Normalization::None,
            true,
        );
        assert!(nonpositive.is_err());
        let norm = MomentSequence::new(
            vec![0.4, 0.0, 0.6],
            MomentKind::Hamburger,
            true,
            Normalization::Mu0PlusMuQEqualsOne,
            true,
        );
        assert!(norm.is_ok());
        let over = MomentSequence::new(
            vec![0.4, 0.0, 1.2, 0.0, 0.6],
            MomentKind::Hamburger,
            true,
            Normalization::Mu0PlusMuQEqualsOne,
            true,
        );
        assert!(over.is_err());
    }

    #[test]
    fn mixing_normalizations_is_an_error() {
        let a = generate_gaussian_moments::<f64>(4, D).unwrap();
        let b = a.scaled(&2.0).unwrap();
        assert!(matches!(
            MomentSequence::convex_combination(&a, &b, &0.5),
            Err(MomentError::MixedNormalization(..))
        ));
    }

    #[test]
    fn save_load_round_trip_multiprecision() {
        let prec = Precision::from_digits(50);
        let s = generate_gaussian_moments::<MpFloat>(20, prec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        save_moments(&s, &path).unwrap();
        let back: MomentSequence<MpFloat> = load_moments(&path).unwrap();
        assert_eq!(back, s);
        let regenerated = back.regenerate_mp(prec).unwrap();
        assert_eq!(regenerated.values(), s.values());
    }

    #[test]
    fn load_rejects_nonpositive_claim() {
        let text = format!(
            "{FILE_MAGIC}\n# kind: hamburger\n# parity_even: true\n# normalization: none\n# positive: true\n# precision_bits: 53\n# max_order: 2\n0\n0\n1\n"
        );
        assert!(matches!(
            parse_moments::<f64>(&text),
            Err(MomentError::Invariant(_))
        ));
        assert!(matches!(
            parse_moments::<f64>("garbage"),
            Err(MomentError::Malformed { line: 1, .. })
        ));
    }
}
