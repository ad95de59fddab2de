//! Cutting-plane feasibility over the moment polytope and the bisections
//! built on it.
//!
//! A [`LinearConstraintSet`] holds linear constraints written over the
//! moments `μ_0..μ_Q`. The LP itself runs over a smaller set of variables `y`
//! related to the moments by a fixed linear map `μ = L·y`:
//!
//! * polytope mode: `y_k = μ_k / w_k`, one variable per free moment, where
//!   `w` is a positive seed sequence used purely for scaling;
//! * energy mode: `y = (μ_0, μ_2)` and every higher moment follows from the
//!   quartic moment recursion at a fixed energy.
//!
//! Positivity of each Hankel block `B(μ)` is imposed lazily. Whenever the LP
//! centre violates `D·B·D ⪰ ε` (with `D` the fixed Jacobi scaling from the
//! seed), every eigenvector `v` with eigenvalue below `ε` yields the linear
//! cut `⟨Dv|B(μ)|Dv⟩ ≥ ε`.

use std::fmt;

use log::{debug, info};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hankel::{build_strided, check_matrix_positivity, HankelError};
use crate::linalg::{LinalgError, Matrix, SymmetricEigen};
use crate::lp::{max_uniform_slack, LpError, Relation, Row};
use crate::moments::MomentKind;

pub const DEFAULT_EPUB: f64 = 2.0;
pub const DEFAULT_MARGIN: f64 = 1e-8;
pub const DEFAULT_MAX_CUTS: usize = 400;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-3;

/// LP optimum at or below this uniform slack is read as "empty".
const SLACK_FLOOR: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmmError {
    #[error("moment order Q = {0} must be even and at least 6")]
    BadOrder(usize),
    #[error("E_pub must be positive and finite, got {0}")]
    BadEpub(f64),
    #[error("probe at {value} is indeterminate after {cuts} cuts")]
    Indeterminate { value: f64, cuts: usize },
    #[error("bracket end {value} should be {expected} but the probe says {found}")]
    BadBracket {
        value: f64,
        expected: &'static str,
        found: &'static str,
    },
    #[error("recorded verdicts break the expected ordering at {0}")]
    Ordering(f64),
    #[error("no feasible energy found on [{lo}, {hi}]")]
    EmptyFeasibleSet { lo: f64, hi: f64 },
    #[error("feasible energies reach the scan edge {0}; widen the window or raise Q")]
    UnboundedScan(f64),
    #[error("feasible energies form more than one interval (gap at {0})")]
    Islands(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Hankel(#[from] HankelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    /// Coefficients over `μ_0..μ_Q`.
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
    /// Required excess over `rhs` for `≥` rows; ignored for equalities.
    pub margin: f64,
}

impl LinearConstraint {
    pub fn evaluate(&self, mu: &[f64]) -> f64 {
        self.coefficients.iter().zip(mu).map(|(c, m)| c * m).sum()
    }

    /// Signed excess `c·μ − rhs − margin` (`−|c·μ − rhs|` for equalities).
    pub fn excess(&self, mu: &[f64]) -> f64 {
        let v = self.evaluate(mu) - self.rhs;
        match self.relation {
            Relation::Ge => v - self.margin,
            Relation::Eq => -v.abs(),
        }
    }
}

/// Which side of the spectrum a λ probe constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMode {
    /// `H − λU ⪰ 0`: some admissible μ has `λ_min ≥ λ`.
    LowerCut,
    /// `λU − H ⪰ 0`: some admissible μ has `λ_max ≤ λ`.
    UpperCut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraintSet {
    q: usize,
    kind: MomentKind,
    epub: Option<f64>,
    energy: Option<f64>,
    normalization: LinearConstraint,
    constraints: Vec<LinearConstraint>,
    moment_bounds: Vec<(f64, f64)>,
    /// `map[k]` expresses `μ_k` over the LP variables.
    map: Vec<Vec<f64>>,
    seed: Vec<f64>,
    margin: f64,
    max_cuts: usize,
}

/// Seed sequence that saturates every `E_pub` inequality, normalized so
/// `μ_0 + μ_Q = 1`. Odd orders take the geometric mean of their neighbours.
fn saturated_seed(q: usize, epub: f64) -> Vec<f64> {
    let mut w = vec![0.0; q + 1];
    w[0] = 1.0;
    w[2] = 0.5;
    for p in (0..=q.saturating_sub(4)).step_by(2) {
        let prev = if p >= 2 { w[p - 2] } else { 0.0 };
        w[p + 4] = epub * w[p] + (p * p.saturating_sub(1)) as f64 * prev;
    }
    let s = w[0] + w[q];
    for k in (0..=q).step_by(2) {
        w[k] /= s;
    }
    for k in (1..q).step_by(2) {
        w[k] = (w[k - 1] * w[k + 1]).sqrt();
    }
    w
}

fn unit(q: usize, k: usize, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; q + 1];
    v[k] = c;
    v
}

/// Linear form of `μ_{k+4} − λμ_k − k(k−1)μ_{k−2}`, the `(H − λU)` entry at
/// index sum `k`.
fn shifted_form(q: usize, k: usize, lambda: f64) -> Vec<f64> {
    let mut v = vec![0.0; q + 1];
    v[k + 4] += 1.0;
    v[k] -= lambda;
    if k >= 2 {
        v[k - 2] -= (k * (k - 1)) as f64;
    }
    v
}

/// The polytope `U_Q` for λ probes: normalization `μ_0 + μ_Q = 1`, the
/// moment cube, pinned or boxed odd moments, and the `E_pub` rows
/// `E_pub·μ_p + p(p−1)·μ_{p−2} − μ_{p+4} ≥ ε` for even `p`.
pub fn build_polytope(
    q: usize,
    epub: f64,
    kind: MomentKind,
) -> Result<LinearConstraintSet, EmmError> {
    if q < 6 || q % 2 == 1 {
        return Err(EmmError::BadOrder(q));
    }
    if !(epub.is_finite() && epub > 0.0) {
        return Err(EmmError::BadEpub(epub));
    }
    let seed = saturated_seed(q, epub);
    let mut normalization = unit(q, 0, 1.0);
    normalization[q] += 1.0;
    let normalization = LinearConstraint {
        coefficients: normalization,
        relation: Relation::Eq,
        rhs: 1.0,
        margin: 0.0,
    };
    let moment_bounds = (0..=q)
        .map(|k| match (k % 2, kind) {
            (0, _) => (0.0, 1.0),
            (_, MomentKind::Stieltjes) => (0.0, 0.0),
            (_, MomentKind::Hamburger) => (-1.0, 1.0),
        })
        .collect();
    let mut constraints = Vec::new();
    for p in (0..=q - 4).step_by(2) {
        let mut c = unit(q, p, epub);
        if p >= 2 {
            c[p - 2] += (p * (p - 1)) as f64;
        }
        c[p + 4] -= 1.0;
        constraints.push(LinearConstraint {
            coefficients: c,
            relation: Relation::Ge,
            rhs: 0.0,
            margin: DEFAULT_MARGIN * seed[p + 4],
        });
    }
    let free: Vec<usize> = match kind {
        MomentKind::Stieltjes => (0..=q).step_by(2).collect(),
        MomentKind::Hamburger => (0..=q).collect(),
    };
    let map = (0..=q)
        .map(|k| {
            free.iter()
                .map(|&j| if j == k { seed[k] } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(LinearConstraintSet {
        q,
        kind,
        epub: Some(epub),
        energy: None,
        normalization,
        constraints,
        moment_bounds,
        map,
        seed,
        margin: DEFAULT_MARGIN,
        max_cuts: DEFAULT_MAX_CUTS,
    })
}

/// Polytope of Stieltjes quartic moment sequences at a fixed energy: the
/// variables are `(μ_0, μ_2)` with `μ_0 + μ_2 = 1`, and the U blocks are the
/// only positivity constraints.
pub fn build_energy_polytope(q: usize, energy: f64) -> Result<LinearConstraintSet, EmmError> {
    if q < 6 || q % 2 == 1 {
        return Err(EmmError::BadOrder(q));
    }
    let column = |mu0: f64, mu2: f64| {
        let mut m = vec![0.0; q + 1];
        m[0] = mu0;
        m[2] = mu2;
        for p in (0..=q - 4).step_by(2) {
            let prev = if p >= 2 { m[p - 2] } else { 0.0 };
            m[p + 4] = energy * m[p] + (p * p.saturating_sub(1)) as f64 * prev;
        }
        m
    };
    let a = column(1.0, 0.0);
    let b = column(0.0, 1.0);
    let map = (0..=q).map(|k| vec![a[k], b[k]]).collect();
    let mut normalization = unit(q, 0, 1.0);
    normalization[2] = 1.0;
    Ok(LinearConstraintSet {
        q,
        kind: MomentKind::Stieltjes,
        epub: None,
        energy: Some(energy),
        normalization: LinearConstraint {
            coefficients: normalization,
            relation: Relation::Eq,
            rhs: 1.0,
            margin: 0.0,
        },
        constraints: Vec::new(),
        moment_bounds: (0..=q)
            .map(|k| match k {
                0 | 2 => (0.0, 1.0),
                _ if k % 2 == 0 => (0.0, f64::INFINITY),
                _ => (0.0, 0.0),
            })
            .collect(),
        map,
        seed: saturated_seed(q, DEFAULT_EPUB),
        margin: DEFAULT_MARGIN,
        max_cuts: DEFAULT_MAX_CUTS,
    })
}

impl LinearConstraintSet {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn epub(&self) -> Option<f64> {
        self.epub
    }

    pub fn energy(&self) -> Option<f64> {
        self.energy
    }

    pub fn normalization(&self) -> &LinearConstraint {
        &self.normalization
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn moment_bounds(&self) -> &[(f64, f64)] {
        &self.moment_bounds
    }

    pub fn seed_scale(&self) -> &[f64] {
        &self.seed
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn max_cuts(&self) -> usize {
        self.max_cuts
    }

    pub fn variable_count(&self) -> usize {
        self.map[0].len()
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_max_cuts(mut self, max_cuts: usize) -> Self {
        self.max_cuts = max_cuts;
        self
    }

    /// Moments for LP variables `y`.
    pub fn moments_of(&self, y: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn to_variables(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.variable_count()];
        for (c, row) in coefficients.iter().zip(&self.map) {
            if *c != 0.0 {
                for (o, l) in out.iter_mut().zip(row) {
                    *o += c * l;
                }
            }
        }
        out
    }

    /// Variable box plus the rows that carry the rest of the linear system.
    fn lp_system(&self) -> (Vec<f64>, Vec<f64>, Vec<Row>) {
        let n = self.variable_count();
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        let mut rows = Vec::new();
        for (k, &(lo, hi)) in self.moment_bounds.iter().enumerate() {
            let nz: Vec<usize> = (0..n).filter(|&j| self.map[k][j] != 0.0).collect();
            if nz.is_empty() {
                continue;
            }
            if let [j] = nz.as_slice() {
                let c = self.map[k][*j];
                if c > 0.0 {
                    lower[*j] = lower[*j].max(lo / c);
                    upper[*j] = upper[*j].min(hi / c);
                }
            }
            // Bounds also enter as rows so the LP centre keeps clear of them.
            if lo < hi {
                let coef = &self.map[k];
                if lo.is_finite() {
                    rows.push(Row {
                        coef: coef.clone(),
                        relation: Relation::Ge,
                        rhs: lo,
                    });
                }
                if hi.is_finite() {
                    rows.push(Row {
                        coef: coef.iter().map(|v| -v).collect(),
                        relation: Relation::Ge,
                        rhs: -hi,
                    });
                }
            }
        }
        for c in std::iter::once(&self.normalization).chain(&self.constraints) {
            rows.push(self.lp_row(c));
        }
        (lower, upper, rows)
    }

    fn lp_row(&self, c: &LinearConstraint) -> Row {
        let rhs = match c.relation {
            Relation::Ge => c.rhs + c.margin,
            Relation::Eq => c.rhs,
        };
        Row {
            coef: self.to_variables(&c.coefficients),
            relation: c.relation,
            rhs,
        }
    }

    /// Hankel blocks whose positivity is imposed by cuts.
    fn blocks(&self, probe: Option<(f64, CutMode)>) -> Vec<Block> {
        let q = self.q;
        let w = &self.seed;
        let mut out = Vec::new();
        match self.kind {
            MomentKind::Stieltjes => {
                for (off, dim) in [(0, q / 4 + 1), (2, (q - 2) / 4 + 1)] {
                    out.push(Block::new(
                        "U",
                        (0..2 * dim - 1)
                            .map(|s| unit(q, off + 2 * s, 1.0))
                            .collect(),
                        (0..dim).map(|a| w[off + 4 * a]).collect(),
                    ));
                }
            }
            MomentKind::Hamburger => {
                let dim = q / 2 + 1;
                out.push(Block::new(
                    "U",
                    (0..2 * dim - 1).map(|s| unit(q, s, 1.0)).collect(),
                    (0..dim).map(|a| w[2 * a]).collect(),
                ));
            }
        }
        if let Some((lambda, mode)) = probe {
            let sign = match mode {
                CutMode::LowerCut => 1.0,
                CutMode::UpperCut => -1.0,
            };
            let form = |k: usize| -> Vec<f64> {
                shifted_form(q, k, lambda)
                    .into_iter()
                    .map(|v| sign * v)
                    .collect()
            };
            let n = (q - 4) / 2;
            match self.kind {
                MomentKind::Stieltjes => {
                    let mut parts = vec![(0, n / 2 + 1)];
                    if n >= 1 {
                        parts.push((2, (n - 1) / 2 + 1));
                    }
                    for (off, dim) in parts {
                        out.push(Block::new(
                            "H",
                            (0..2 * dim - 1).map(|s| form(off + 2 * s)).collect(),
                            (0..dim).map(|a| w[off + 4 * a + 4]).collect(),
                        ));
                    }
                }
                MomentKind::Hamburger => {
                    out.push(Block::new(
                        "H",
                        (0..=2 * n).map(form).collect(),
                        (0..=n).map(|a| w[2 * a + 4]).collect(),
                    ));
                }
            }
        }
        out
    }
}

/// Hankel block `B_ab = form[a+b]·μ`, checked as `D·B·D`.
struct Block {
    label: &'static str,
    forms: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

impl Block {
    fn new(label: &'static str, forms: Vec<Vec<f64>>, seed_diag: Vec<f64>) -> Self {
        let scale = seed_diag
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
            .collect();
        Block {
            label,
            forms,
            scale,
        }
    }

    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn scaled(&self, mu: &[f64]) -> Matrix<f64> {
        let vals: Vec<f64> = self
            .forms
            .iter()
            .map(|f| f.iter().zip(mu).map(|(a, b)| a * b).sum())
            .collect();
        Matrix::from_fn(self.dim(), self.dim(), |a, b| {
            self.scale[a] * vals[a + b] * self.scale[b]
        })
    }

    /// Moment coefficients of `⟨Dv|B(μ)|Dv⟩`.
    fn cut(&self, v: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = v.iter().zip(&self.scale).map(|(a, d)| a * d).collect();
        let mut c = vec![0.0; self.forms[0].len()];
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let f = u[a] * u[b];
                for (ck, fk) in c.iter_mut().zip(&self.forms[a + b]) {
                    *ck += f * fk;
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible { witness: Vec<f64>, cuts: usize },
    Infeasible { cuts: usize },
    Indeterminate { cuts: usize },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }

    pub fn cuts(&self) -> usize {
        match self {
            Verdict::Feasible { cuts, .. }
            | Verdict::Infeasible { cuts }
            | Verdict::Indeterminate { cuts } => *cuts,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Feasible { .. } => "feasible",
            Verdict::Infeasible { .. } => "infeasible",
            Verdict::Indeterminate { .. } => "indeterminate",
        }
    }

    /// Short SHA-256 digest of the witness moments, or `-` without one.
    pub fn witness_hash(&self) -> String {
        match self {
            Verdict::Feasible { witness, .. } => {
                let mut h = Sha256::new();
                for v in witness {
                    h.update(v.to_le_bytes());
                }
                h.finalize()
                    .iter()
                    .take(8)
                    .map(|b| format!("{b:02x}"))
                    .collect()
            }
            _ => "-".into(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} cuts={} witness={}",
            self.label(),
            self.cuts(),
            self.witness_hash()
        )
    }
}

fn run_cutting_loop(poly: &LinearConstraintSet, blocks: &[Block]) -> Result<Verdict, EmmError> {
    let (lower, upper, mut rows) = poly.lp_system();
    let mut cuts = 0;
    loop {
        let sol = max_uniform_slack(&lower, &upper, &rows, 1.0)?;
        if sol.slack <= SLACK_FLOOR {
            return Ok(Verdict::Infeasible { cuts });
        }
        let mu = poly.moments_of(&sol.x);
        let mut violated = false;
        for block in blocks {
            let eig = SymmetricEigen::new(&block.scaled(&mu))?;
            for (k, value) in eig.values.iter().enumerate() {
                if *value >= poly.margin {
                    break;
                }
                violated = true;
                if cuts >= poly.max_cuts {
                    break;
                }
                let cut = LinearConstraint {
                    coefficients: block.cut(&eig.vector(k)),
                    relation: Relation::Ge,
                    rhs: 0.0,
                    margin: poly.margin,
                };
                debug!(
                    "cut {} on {} block, eigenvalue {:.3e}",
                    cuts, block.label, value
                );
                rows.push(poly.lp_row(&cut));
                cuts += 1;
            }
        }
        if !violated {
            return Ok(Verdict::Feasible { witness: mu, cuts });
        }
        if cuts >= poly.max_cuts {
            return Ok(Verdict::Indeterminate { cuts });
        }
    }
}

/// Decides whether some μ in the polytope satisfies the mode's λ constraint.
pub fn feasible_point(
    poly: &LinearConstraintSet,
    lambda: f64,
    mode: CutMode,
) -> Result<Verdict, EmmError> {
    let verdict = run_cutting_loop(poly, &poly.blocks(Some((lambda, mode))))?;
    info!(
        "emm-probe q={} mode={:?} lambda={:.12} verdict={}",
        poly.q, mode, lambda, verdict
    );
    Ok(verdict)
}

/// Decides whether the energy polytope contains a positive moment sequence.
pub fn energy_feasible(poly: &LinearConstraintSet) -> Result<Verdict, EmmError> {
    let verdict = run_cutting_loop(poly, &poly.blocks(None))?;
    info!(
        "emm-probe q={} energy={:.12} verdict={}",
        poly.q,
        poly.energy.unwrap_or(f64::NAN),
        verdict
    );
    Ok(verdict)
}

/// Re-check of a feasible witness through the hankel module: every linear
/// row holds to `tol`, and every positivity block, scaled by the polytope's
/// seed diagonal, has minimal eigenvalue at least `floor`.
pub fn verify_certificate(
    poly: &LinearConstraintSet,
    probe: Option<(f64, CutMode)>,
    mu: &[f64],
    floor: f64,
    tol: f64,
) -> Result<bool, EmmError> {
    let q = poly.q;
    if mu.len() != q + 1 {
        return Ok(false);
    }
    for (k, &(lo, hi)) in poly.moment_bounds.iter().enumerate() {
        if mu[k] < lo - tol || mu[k] > hi + tol {
            return Ok(false);
        }
    }
    if poly.normalization.excess(mu) < -tol {
        return Ok(false);
    }
    if poly.constraints.iter().any(|c| c.excess(mu) < -tol) {
        return Ok(false);
    }
    // (block, seed order of each diagonal entry)
    let mut mats: Vec<(Matrix<f64>, Vec<usize>)> = Vec::new();
    let strided = |values: &[f64], off: usize, stride: usize, n: usize, diag0: usize| {
        build_strided(values, off, stride, n).map(|h| {
            (
                h.into_entries(),
                (0..=n).map(|a| diag0 + 2 * stride * a).collect::<Vec<_>>(),
            )
        })
    };
    match poly.kind {
        MomentKind::Stieltjes => {
            mats.push(strided(mu, 0, 2, q / 4, 0)?);
            mats.push(strided(mu, 2, 2, (q - 2) / 4, 2)?);
        }
        MomentKind::Hamburger => mats.push(strided(mu, 0, 1, q / 2, 0)?),
    }
    if let Some((lambda, mode)) = probe {
        let n = (q - 4) / 2;
        let sign = if mode == CutMode::LowerCut { 1.0 } else { -1.0 };
        let nu: Vec<f64> = (0..=2 * n)
            .map(|k| {
                let prev = if k >= 2 {
                    (k * (k - 1)) as f64 * mu[k - 2]
                } else {
                    0.0
                };
                sign * (mu[k + 4] - lambda * mu[k] - prev)
            })
            .collect();
        match poly.kind {
            MomentKind::Stieltjes => {
                mats.push(strided(&nu, 0, 2, n / 2, 4)?);
                if n >= 1 {
                    mats.push(strided(&nu, 2, 2, (n - 1) / 2, 6)?);
                }
            }
            MomentKind::Hamburger => mats.push(strided(&nu, 0, 1, n, 4)?),
        }
    }
    for (m, diag) in &mats {
        let d: Vec<f64> = diag.iter().map(|&k| 1.0 / poly.seed[k].sqrt()).collect();
        let scaled = Matrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j]);
        let report = check_matrix_positivity(&scaled, Some(0.0))?;
        if report.min_eigenvalue < floor {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    SupLambdaMin,
    InfLambdaMax,
    EmmEnergy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub value: f64,
    pub verdict: Verdict,
}

/// Final bracket `[lo, hi]` of a bisection with every recorded probe.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityInterval {
    pub lo: f64,
    pub hi: f64,
    pub target: Target,
    pub probes: Vec<ProbeRecord>,
}

impl FeasibilityInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn total_cuts(&self) -> usize {
        self.probes.iter().map(|p| p.verdict.cuts()).sum()
    }

    /// Checks that feasible probes all sit on the expected side of every
    /// infeasible one: below for `SupLambdaMin`, above for `InfLambdaMax`,
    /// and contiguous for `EmmEnergy`.
    pub fn validate_ordering(&self) -> Result<(), EmmError> {
        let mut sorted: Vec<&ProbeRecord> = self
            .probes
            .iter()
            .filter(|p| !matches!(p.verdict, Verdict::Indeterminate { .. }))
            .collect();
        sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
        let flags: Vec<bool> = sorted.iter().map(|p| p.verdict.is_feasible()).collect();
        let bad = match self.target {
            Target::SupLambdaMin => flags.windows(2).position(|w| !w[0] && w[1]),
            Target::InfLambdaMax => flags.windows(2).position(|w| w[0] && !w[1]),
            Target::EmmEnergy => {
                let first = flags.iter().position(|f| *f);
                let last = flags.iter().rposition(|f| *f);
                match (first, last) {
                    (Some(a), Some(b)) => (a..=b).find(|&i| !flags[i]).map(|i| i.saturating_sub(1)),
                    _ => None,
                }
            }
        };
        match bad {
            Some(i) => Err(EmmError::Ordering(sorted[i + 1].value)),
            None => Ok(()),
        }
    }
}

fn require(value: f64, verdict: &Verdict, want_feasible: bool) -> Result<(), EmmError> {
    match verdict {
        Verdict::Indeterminate { cuts } => Err(EmmError::Indeterminate { value, cuts: *cuts }),
        v if v.is_feasible() != want_feasible => Err(EmmError::BadBracket {
            value,
            expected: if want_feasible {
                "feasible"
            } else {
                "infeasible"
            },
            found: v.label(),
        }),
        _ => Ok(()),
    }
}

/// Shared bisection: `feasible_side_low` says whether feasibility lies at the
/// low end of the bracket.
fn bisect<F>(
    bracket: (f64, f64),
    tol: f64,
    target: Target,
    feasible_side_low: bool,
    probe: F,
) -> Result<FeasibilityInterval, EmmError>
where
    F: Fn(f64) -> Result<Verdict, EmmError>,
{
    let (mut lo, mut hi) = bracket;
    let mut probes = Vec::new();
    if lo == hi {
        return Ok(FeasibilityInterval {
            lo,
            hi,
            target,
            probes,
        });
    }
    for (x, want) in [(lo, feasible_side_low), (hi, !feasible_side_low)] {
        let v = probe(x)?;
        require(x, &v, want)?;
        probes.push(ProbeRecord {
            value: x,
            verdict: v,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = probe(mid)?;
        if let Verdict::Indeterminate { cuts } = v {
            return Err(EmmError::Indeterminate { value: mid, cuts });
        }
        if v.is_feasible() == feasible_side_low {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(ProbeRecord {
            value: mid,
            verdict: v,
        });
    }
    let out = FeasibilityInterval {
        lo,
        hi,
        target,
        probes,
    };
    out.validate_ordering()?;
    Ok(out)
}

/// Brackets `sup_μ λ_min(μ)` over the polytope; `bracket.0` must be feasible
/// for [`CutMode::LowerCut`] and `bracket.1` infeasible. The upper end of
/// the result is an upper bound on the ground-state energy.
pub fn bisect_sup_lambda_min(
    poly: &LinearConstraintSet,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FeasibilityInterval, EmmError> {
    bisect(bracket, tol, Target::SupLambdaMin, true, |l| {
        feasible_point(poly, l, CutMode::LowerCut)
    })
}

/// Brackets `inf_μ λ_max(μ)`; `bracket.0` must be infeasible for
/// [`CutMode::UpperCut`] and `bracket.1` feasible. The lower end of the
/// result is a lower bound on the ground-state energy.
pub fn bisect_inf_lambda_max(
    poly: &LinearConstraintSet,
    bracket: (f64, f64),
    tol: f64,
) -> Result<FeasibilityInterval, EmmError> {
    bisect(bracket, tol, Target::InfLambdaMax, false, |l| {
        feasible_point(poly, l, CutMode::UpperCut)
    })
}

/// Outer bounds from both bisections at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBounds {
    pub q: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_edge: FeasibilityInterval,
    pub upper_edge: FeasibilityInterval,
}

/// `(inf λ_max, sup λ_min)` over the `E_pub`-constrained polytope, reported
/// as the outer ends of each bracket.
pub fn theorem4_bounds(q: usize, epub: f64, tol: f64) -> Result<EnergyBounds, EmmError> {
    let poly = build_polytope(q, epub, MomentKind::Stieltjes)?;
    let (sup, inf) = rayon::join(
        || bisect_sup_lambda_min(&poly, (0.0, epub), tol),
        || bisect_inf_lambda_max(&poly, (0.0, epub), tol),
    );
    let (sup, inf) = (sup?, inf?);
    Ok(EnergyBounds {
        q,
        lower: inf.lo,
        upper: sup.hi,
        lower_edge: inf,
        upper_edge: sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyScan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub refinements: usize,
}

impl Default for EnergyScan {
    fn default() -> Self {
        EnergyScan {
            lo: 0.0,
            hi: 4.0,
            step: 0.05,
            refinements: 5,
        }
    }
}

fn energy_verdict(q: usize, e: f64, max_cuts: usize) -> Result<Verdict, EmmError> {
    energy_feasible(&build_energy_polytope(q, e)?.with_max_cuts(max_cuts))
}

/// Classic energy bounds with the default scan window.
pub fn emm_energy_bounds(q: usize, tol: f64) -> Result<EnergyBounds, EmmError> {
    emm_energy_bounds_with(q, tol, EnergyScan::default())
}

/// Grid scan for feasible energies (refined when none are found), an
/// island check, then bisection on both edges. Bounds are the infeasible
/// sides of the edge brackets.
pub fn emm_energy_bounds_with(
    q: usize,
    tol: f64,
    scan: EnergyScan,
) -> Result<EnergyBounds, EmmError> {
    if q < 6 || q % 2 == 1 {
        return Err(EmmError::BadOrder(q));
    }
    let mut step = scan.step;
    let mut grid: Vec<(f64, Verdict)> = Vec::new();
    for _ in 0..=scan.refinements {
        let n = ((scan.hi - scan.lo) / step).round() as usize;
        grid = (0..=n)
            .into_par_iter()
            .map(|i| {
                let e = scan.lo + step * i as f64;
                energy_verdict(q, e, DEFAULT_MAX_CUTS).map(|v| (e, v))
            })
            .collect::<Result<_, _>>()?;
        if grid.iter().any(|(_, v)| v.is_feasible()) {
            break;
        }
        step *= 0.5;
    }
    let first = grid.iter().position(|(_, v)| v.is_feasible());
    let last = grid.iter().rposition(|(_, v)| v.is_feasible());
    let (Some(a), Some(b)) = (first, last) else {
        return Err(EmmError::EmptyFeasibleSet {
            lo: scan.lo,
            hi: scan.hi,
        });
    };
    if let Some((e, v)) = grid[a..=b].iter().find(|(_, v)| !v.is_feasible()) {
        return Err(match v {
            Verdict::Indeterminate { cuts } => EmmError::Indeterminate {
                value: *e,
                cuts: *cuts,
            },
            _ => EmmError::Islands(*e),
        });
    }
    if a == 0 || b + 1 == grid.len() {
        return Err(EmmError::UnboundedScan(if a == 0 {
            scan.lo
        } else {
            scan.hi
        }));
    }
    let probe = |e: f64| energy_verdict(q, e, DEFAULT_MAX_CUTS);
    let (lower_edge, upper_edge) = rayon::join(
        || {
            bisect(
                (grid[a - 1].0, grid[a].0),
                tol,
                Target::EmmEnergy,
                false,
                probe,
            )
        },
        || {
            bisect(
                (grid[b].0, grid[b + 1].0),
                tol,
                Target::EmmEnergy,
                true,
                probe,
            )
        },
    );
    let (lower_edge, upper_edge) = (lower_edge?, upper_edge?);
    Ok(EnergyBounds {
        q,
        lower: lower_edge.lo,
        upper: upper_edge.hi,
        lower_edge,
        upper_edge,
    })
}
