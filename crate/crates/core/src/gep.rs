//! The symmetric pair `(H, U)` of a moment sequence and its extremal
//! generalized eigenvalues.
//!
//! For the quartic operator `−∂² + x⁴` and trial moments μ,
//! `H_ij = −k(k−1) μ_{k−2} + μ_{k+4}` and `U_ij = μ_k` with `k = i + j`.
//! The generalized problem `H v = λ U v` is reduced with `U = RᵀR` to the
//! symmetric matrix `R⁻ᵀ H R⁻¹`; its extreme eigenvalues bound the Barta
//! ratio of the trial function from inside.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{Cholesky, LinalgError, Matrix, SymmetricEigen};
use crate::moments::{generate_quartic_sequence, MomentError, MomentSequence};
use crate::real::{MpFloat, Precision, Real};

#[derive(Debug, Error)]
pub enum GepError {
    #[error("pair of dimension {dim} needs μ_{needed}, sequence stops at μ_{max_order}")]
    InsufficientMoments {
        dim: usize,
        needed: usize,
        max_order: usize,
    },
    #[error("U is not positive definite at N = {n} (Cholesky pivot {pivot} = {value:e})")]
    UNotPositiveDefinite { n: usize, pivot: usize, value: f64 },
    #[error("eigen-solver failed at N = {n}: {source}")]
    Eigen { n: usize, source: LinalgError },
    #[error("{which} series not monotone at N = {n}: {previous} -> {next}")]
    Monotonicity {
        n: usize,
        which: &'static str,
        previous: f64,
        next: f64,
    },
    #[error(
        "generalized eigenvalue {index} = {value} deviates from E by {deviation:e} (tol {tol:e})"
    )]
    Degeneracy {
        index: usize,
        value: f64,
        deviation: f64,
        tol: f64,
    },
    #[error(transparent)]
    Moments(#[from] MomentError),
}

/// `H` and `U` of dimension `N + 1`.
#[derive(Debug, Clone)]
pub struct SymmetricPair<R> {
    pub h: Matrix<R>,
    pub u: Matrix<R>,
    n: usize,
}

impl<R: Real> SymmetricPair<R> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Moment order `Q = 2N + 4` the pair consumes.
    pub fn q(&self) -> usize {
        2 * self.n + 4
    }
}

/// `H` entry for index sum `k`: `−k(k−1) μ_{k−2} + μ_{k+4}`.
pub(crate) fn h_entry<R: Real>(mu: &[R], k: usize) -> R {
    let mut v = mu[k + 4].clone();
    if k >= 2 {
        v -= mu[k].lift((k * (k - 1)) as f64) * mu[k - 2].clone();
    }
    v
}

/// Builds the pair without checking `U`.
pub fn build_pair_unchecked<R: Real>(
    seq: &MomentSequence<R>,
    n: usize,
) -> Result<SymmetricPair<R>, GepError> {
    let needed = 2 * n + 4;
    if seq.max_order() < needed {
        return Err(GepError::InsufficientMoments {
            dim: n + 1,
            needed,
            max_order: seq.max_order(),
        });
    }
    let mu = seq.values();
    Ok(SymmetricPair {
        h: Matrix::from_fn(n + 1, n + 1, |i, j| h_entry(mu, i + j)),
        u: Matrix::from_fn(n + 1, n + 1, |i, j| mu[i + j].clone()),
        n,
    })
}

/// Builds the pair and requires `U` to be positive definite.
pub fn build_pair<R: Real>(
    seq: &MomentSequence<R>,
    n: usize,
) -> Result<SymmetricPair<R>, GepError> {
    let pair = build_pair_unchecked(seq, n)?;
    reduce(&pair)?;
    Ok(pair)
}

/// Cholesky reduction of a pair.
#[derive(Debug, Clone)]
pub struct ReducedPair<R> {
    pub cholesky: Cholesky<R>,
    /// `R⁻ᵀ H R⁻¹`.
    pub reduced: Matrix<R>,
}

impl<R: Real> ReducedPair<R> {
    pub fn pivot_ratio(&self) -> f64 {
        self.cholesky.pivot_ratio()
    }
}

pub fn reduce<R: Real>(pair: &SymmetricPair<R>) -> Result<ReducedPair<R>, GepError> {
    let cholesky = Cholesky::new(&pair.u).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { pivot, value } => GepError::UNotPositiveDefinite {
            n: pair.n,
            pivot,
            value,
        },
        other => GepError::Eigen {
            n: pair.n,
            source: other,
        },
    })?;
    let reduced = cholesky.congruence(&pair.h);
    Ok(ReducedPair { cholesky, reduced })
}

/// All generalized eigenvalues, ascending.
pub fn generalized_eigenvalues<R: Real>(pair: &SymmetricPair<R>) -> Result<Vec<R>, GepError> {
    let red = reduce(pair)?;
    let eig = SymmetricEigen::new(&red.reduced)
        .map_err(|source| GepError::Eigen { n: pair.n, source })?;
    Ok(eig.values)
}

/// `(λ_min, λ_max)` of `H v = λ U v`.
pub fn extremal_eigenvalues<R: Real>(pair: &SymmetricPair<R>) -> Result<(R, R), GepError> {
    let values = generalized_eigenvalues(pair)?;
    let hi = values.last().expect("non-empty spectrum").clone();
    Ok((values[0].clone(), hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEntry {
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Working precision the entry was computed at.
    pub precision_bits: u32,
    /// Cholesky pivot ratio of `U` at that precision.
    pub pivot_ratio: f64,
}

impl BoundEntry {
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn q(&self) -> usize {
        2 * self.n + 4
    }
}

/// Extremal eigenvalues for `N = 0..=N_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSeries {
    pub entries: Vec<BoundEntry>,
    pub trial_id: String,
    /// Dimensions whose λ_min repeats the previous one (observed, not enforced).
    pub paired_dims: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SeriesOptions {
    /// Retry in multiprecision when the 64-bit pivot ratio falls below `escalation_threshold`.
    pub escalate: bool,
    pub escalation_threshold: f64,
    pub escalation_precision: Precision,
    /// Relative slack allowed in the monotonicity assertions.
    pub monotonicity_tol: f64,
    pub pairing_tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            escalate: true,
            escalation_threshold: 1e-13,
            escalation_precision: Precision::from_digits(50),
            monotonicity_tol: 1e-12,
            pairing_tol: 1e-10,
        }
    }
}

fn entry_at<R: Real>(seq: &MomentSequence<R>, n: usize) -> Result<(BoundEntry, bool), GepError> {
    let pair = build_pair_unchecked(seq, n)?;
    let red = reduce(&pair);
    let red = match red {
        Ok(r) => r,
        // A double-precision Cholesky failure may be an artifact of rounding.
        Err(GepError::UNotPositiveDefinite { .. }) if seq.precision().is_double() => {
            let e = BoundEntry {
                n,
                lambda_min: f64::NAN,
                lambda_max: f64::NAN,
                precision_bits: seq.precision().bits(),
                pivot_ratio: 0.0,
            };
            return Ok((e, true));
        }
        Err(e) => return Err(e),
    };
    let eig = SymmetricEigen::new(&red.reduced).map_err(|source| GepError::Eigen { n, source })?;
    let entry = BoundEntry {
        n,
        lambda_min: eig.min().to_f64(),
        lambda_max: eig.max().to_f64(),
        precision_bits: seq.precision().bits(),
        pivot_ratio: red.pivot_ratio(),
    };
    Ok((entry, false))
}

/// Computes the bound series, checking monotonicity in `N` (λ_min
/// nonincreasing, λ_max nondecreasing). Dimensions are evaluated in parallel;
/// the result does not depend on scheduling.
pub fn bound_series<R: Real>(
    seq: &MomentSequence<R>,
    n_max: usize,
    opts: &SeriesOptions,
) -> Result<BoundSeries, GepError> {
    let needed = 2 * n_max + 4;
    if seq.max_order() < needed {
        return Err(GepError::InsufficientMoments {
            dim: n_max + 1,
            needed,
            max_order: seq.max_order(),
        });
    }
    let first: Vec<(BoundEntry, bool)> = (0..=n_max)
        .into_par_iter()
        .map(|n| entry_at(seq, n))
        .collect::<Result<_, _>>()?;

    let escalatable = opts.escalate && seq.precision().is_double();
    let needs_mp: Vec<usize> = first
        .iter()
        .filter(|(e, failed)| *failed || (escalatable && e.pivot_ratio < opts.escalation_threshold))
        .map(|(e, _)| e.n)
        .collect();

    let mut entries: Vec<BoundEntry> = first.into_iter().map(|(e, _)| e).collect();
    if !needs_mp.is_empty() {
        if !escalatable {
            let n = needs_mp[0];
            return Err(GepError::UNotPositiveDefinite {
                n,
                pivot: 0,
                value: f64::NAN,
            });
        }
        log::info!(
            "escalating {} dimension(s) to {} for ill-conditioned U",
            needs_mp.len(),
            opts.escalation_precision
        );
        let mp: MomentSequence<MpFloat> = seq.regenerate_mp(opts.escalation_precision)?;
        let redone: Vec<(BoundEntry, bool)> = needs_mp
            .par_iter()
            .map(|&n| entry_at(&mp, n))
            .collect::<Result<_, _>>()?;
        for (e, _) in redone {
            entries[e.n] = e;
        }
    }

    check_monotone(&entries, opts.monotonicity_tol)?;
    let paired_dims = entries
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0].lambda_min, w[1].lambda_min);
            (a - b).abs() <= opts.pairing_tol * (1.0 + a.abs())
        })
        .map(|w| w[1].dim())
        .collect();
    let trial_id = match seq.recipe() {
        Some(r) => format!("{}", r.name),
        None => "sequence".to_string(),
    };
    Ok(BoundSeries {
        entries,
        trial_id,
        paired_dims,
    })
}

fn check_monotone(entries: &[BoundEntry], tol: f64) -> Result<(), GepError> {
    for w in entries.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.lambda_min > a.lambda_min + tol * (1.0 + a.lambda_min.abs()) {
            return Err(GepError::Monotonicity {
                n: b.n,
                which: "lambda_min",
                previous: a.lambda_min,
                next: b.lambda_min,
            });
        }
        if b.lambda_max < a.lambda_max - tol * (1.0 + a.lambda_max.abs()) {
            return Err(GepError::Monotonicity {
                n: b.n,
                which: "lambda_max",
                previous: a.lambda_max,
                next: b.lambda_max,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DegeneracyReport {
    pub energy: f64,
    pub eigenvalues: Vec<f64>,
    /// Largest |λ_j − E|.
    pub max_deviation: f64,
    pub worst_index: usize,
    pub tol: f64,
}

impl DegeneracyReport {
    pub fn spread(&self) -> f64 {
        let lo = self
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tol
    }

    pub fn check(&self) -> Result<(), GepError> {
        if self.passed() {
            Ok(())
        } else {
            Err(GepError::Degeneracy {
                index: self.worst_index,
                value: self.eigenvalues[self.worst_index],
                deviation: self.max_deviation,
                tol: self.tol,
            })
        }
    }
}

/// Default degeneracy tolerance, `1e−10·(|E| + 1)`.
pub fn degeneracy_tol(energy: f64) -> f64 {
    1e-10 * (energy.abs() + 1.0)
}

/// Builds the moment-equation sequence at `energy` from `(μ_0, μ_2)` and
/// measures how far the generalized spectrum at dimension `N + 1` is from
/// collapsing onto `energy`.
pub fn verify_theorem2(
    energy: f64,
    missing: (f64, f64),
    n: usize,
    tol: Option<f64>,
) -> Result<DegeneracyReport, GepError> {
    let seq = generate_quartic_sequence(&energy, &missing.0, &missing.1, 2 * n + 4)?;
    degeneracy_of(&seq, energy, n, tol)
}

/// Degeneracy report for an arbitrary sequence measured against `energy`.
pub fn degeneracy_of<R: Real>(
    seq: &MomentSequence<R>,
    energy: f64,
    n: usize,
    tol: Option<f64>,
) -> Result<DegeneracyReport, GepError> {
    let pair = build_pair(seq, n)?;
    let eigenvalues: Vec<f64> = generalized_eigenvalues(&pair)?
        .iter()
        .map(Real::to_f64)
        .collect();
    let (worst_index, max_deviation) = eigenvalues
        .iter()
        .map(|l| (l - energy).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    Ok(DegeneracyReport {
        energy,
        eigenvalues,
        max_deviation,
        worst_index,
        tol: tol.unwrap_or_else(|| degeneracy_tol(energy)),
    })
}

#[derive(Debug, Clone)]
pub struct SegmentPoint {
    pub s: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone)]
pub struct QuasiConvexityReport {
    pub points: Vec<SegmentPoint>,
    /// `min(λ_min(a), λ_min(b))`.
    pub lower_floor: f64,
    /// `max(λ_max(a), λ_max(b))`.
    pub upper_ceiling: f64,
    /// `(s, amount)` where λ_min dipped below the floor by more than tol.
    pub min_violations: Vec<(f64, f64)>,
    /// `(s, amount)` where λ_max rose above the ceiling by more than tol.
    pub max_violations: Vec<(f64, f64)>,
    /// Values of `s` where `U` was not positive definite.
    pub domain_gaps: Vec<f64>,
}

impl QuasiConvexityReport {
    pub fn holds(&self) -> bool {
        self.min_violations.is_empty() && self.max_violations.is_empty()
    }
}

/// Evaluates λ_min and λ_max along `s·a + (1−s)·b` and compares them to the
/// endpoint extremes.
pub fn quasiconvexity_probe<R: Real>(
    seq_a: &MomentSequence<R>,
    seq_b: &MomentSequence<R>,
    n: usize,
    s_grid: &[f64],
    tol: f64,
) -> Result<QuasiConvexityReport, GepError> {
    let (a_min, a_max) = extremal_eigenvalues(&build_pair(seq_a, n)?)?;
    let (b_min, b_max) = extremal_eigenvalues(&build_pair(seq_b, n)?)?;
    let lower_floor = a_min.to_f64().min(b_min.to_f64());
    let upper_ceiling = a_max.to_f64().max(b_max.to_f64());
    let prec = seq_a.precision();
    let mut report = QuasiConvexityReport {
        points: vec![],
        lower_floor,
        upper_ceiling,
        min_violations: vec![],
        max_violations: vec![],
        domain_gaps: vec![],
    };
    for &s in s_grid {
        let mix = MomentSequence::convex_combination(seq_a, seq_b, &R::from_f64(s, prec))?;
        let pair = build_pair_unchecked(&mix, n)?;
        let (lo, hi) = match extremal_eigenvalues(&pair) {
            Ok((lo, hi)) => (lo.to_f64(), hi.to_f64()),
            Err(GepError::UNotPositiveDefinite { .. }) => {
                report.domain_gaps.push(s);
                continue;
            }
            Err(e) => return Err(e),
        };
        let slack = tol * (1.0 + lower_floor.abs().max(upper_ceiling.abs()));
        if lo < lower_floor - slack {
            report.min_violations.push((s, lower_floor - lo));
        }
        if hi > upper_ceiling + slack {
            report.max_violations.push((s, hi - upper_ceiling));
        }
        report.points.push(SegmentPoint {
            s,
            lambda_min: lo,
            lambda_max: hi,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::generate_gaussian_moments;
    use approx::assert_relative_eq;

    const D: Precision = Precision::DOUBLE;

    #[test]
    fn gaussian_pairs_by_hand() {
        let g = generate_gaussian_moments::<f64>(12, D).unwrap();
        let p0 = build_pair(&g, 0).unwrap();
        assert_eq!(p0.h[(0, 0)], 0.75);
        assert_eq!(p0.u[(0, 0)], 1.0);
        let p1 = build_pair(&g, 1).unwrap();
        assert_eq!(p1.h.row(0), &[0.75, 0.0]);
        assert_eq!(p1.h.row(1), &[0.0, -0.125]);
        assert_eq!(p1.u.row(1), &[0.0, 0.5]);
        let (lo, hi) = extremal_eigenvalues(&p0).unwrap();
        assert_eq!((lo, hi), (0.75, 0.75));
        let (lo, hi) = extremal_eigenvalues(&p1).unwrap();
        assert_relative_eq!(lo, -0.25, epsilon = 1e-15);
        assert_relative_eq!(hi, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn quartic_pair_is_proportional() {
        let e = 1.060362090484;
        let s = generate_quartic_sequence(&e, &0.64, &0.36, 12).unwrap();
        let p = build_pair(&s, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(p.h[(i, j)], e * p.u[(i, j)], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn insufficient_moments() {
        let g = generate_gaussian_moments::<f64>(8, D).unwrap();
        assert!(matches!(
            build_pair(&g, 3),
            Err(GepError::InsufficientMoments { needed: 10, .. })
        ));
    }

    #[test]
    fn theorem2_rejects_non_pd_missing_pair() {
        // μ_2/μ_0 = 0.36 leaves the odd 2×2 block of U indefinite at N = 3.
        assert!(matches!(
            verify_theorem2(1.06, (1.0, 0.36), 3, None),
            Err(GepError::UNotPositiveDefinite { n: 3, .. })
        ));
    }

    #[test]
    fn theorem2_examples() {
        let r = verify_theorem2(1.06, (0.64, 0.36), 3, None).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.max_deviation < 1e-10);
        // E = 0 leaves μ_4 = 0, so U is singular from dimension 3 on;
        // at N = 1 (U = diag(1, μ_2)) the degeneracy is still visible.
        let r = verify_theorem2(0.0, (1.0, 0.5), 1, None).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.eigenvalues.iter().all(|l| l.abs() < 1e-12));
    }

    #[test]
    fn theorem2_breaks_under_perturbation() {
        let e = 1.06;
        let s = generate_quartic_sequence(&e, &0.64, &0.36, 10).unwrap();
        let mut v = s.values().to_vec();
        v[6] += 1e-6;
        let bumped = MomentSequence::new(v, s.kind(), true, s.normalization(), false).unwrap();
        let r = degeneracy_of(&bumped, e, 3, None).unwrap();
        assert!(!r.passed());
        assert!(r.spread() > 1e-8);
        assert!(matches!(r.check(), Err(GepError::Degeneracy { .. })));
    }

    #[test]
    fn gaussian_table_rows() {
        let g = generate_gaussian_moments::<f64>(2 * 7 + 4, D).unwrap();
        let s = bound_series(&g, 7, &SeriesOptions::default()).unwrap();
        let expect = [
            0.75, -0.25, -0.25, -0.4581, -0.82522, -0.82522, -1.06261, -1.06261,
        ];
        for (e, x) in s.entries.iter().zip(expect) {
            assert!(
                (e.lambda_min - x).abs() < 1e-4,
                "dim {}: {}",
                e.dim(),
                e.lambda_min
            );
        }
        assert_eq!(s.paired_dims, vec![3, 6, 8]);
    }

    #[test]
    fn monotonicity_violation_detected() {
        let mk = |lo: f64| BoundEntry {
            n: 0,
            lambda_min: lo,
            lambda_max: 1.0,
            precision_bits: 53,
            pivot_ratio: 1.0,
        };
        assert!(check_monotone(&[mk(0.5), mk(0.4)], 1e-12).is_ok());
        assert!(matches!(
            check_monotone(&[mk(0.4), mk(0.5)], 1e-12),
            Err(GepError::Monotonicity {
                which: "lambda_min",
                ..
            })
        ));
    }

    #[test]
    fn identical_segment_is_flat() {
        let g = generate_gaussian_moments::<f64>(12, D).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let r = quasiconvexity_probe(&g, &g, 2, &grid, 1e-12).unwrap();
        assert!(r.holds());
        for p in &r.points {
            assert_relative_eq!(p.lambda_min, r.lower_floor, epsilon = 1e-13);
            assert_relative_eq!(p.lambda_max, r.upper_ceiling, epsilon = 1e-13);
        }
    }
}
