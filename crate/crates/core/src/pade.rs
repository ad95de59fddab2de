//! Padé bounds for Stieltjes series built from moment sequences.
//!
//! With Stieltjes moments `u_k` the series `I(s) = Σ (−s)^k u_k` has Padé
//! approximants that nest for every `s > 0`: the `[M−1|M]` chain increases
//! with `M`, the `[M|M]` chain decreases, and every lower member sits below
//! every upper one. For the harmonic oscillator the moments are generated as
//! functions of a trial energy. Energies for which nesting fails at some
//! probe point cannot be physical, and the surviving energies form an
//! interval that tightens as more moments are used.

use rayon::prelude::*;
use thiserror::Error;

use crate::moments::{generate_harmonic_stieltjes, MomentError, MomentSequence};
use crate::real::{MpFloat, Precision, Real};

#[derive(Debug, Error)]
pub enum PadeError {
    #[error("[{l}|{m}] needs u_{needed} but the sequence stops at u_{max_order}")]
    InsufficientMoments {
        l: usize,
        m: usize,
        needed: usize,
        max_order: usize,
    },
    #[error("denominator system for [{l}|{m}] is singular")]
    Singular { l: usize, m: usize },
    #[error("probe point must be positive, got {0}")]
    NonPositiveProbe(f64),
    #[error("moment order Q = {0} must be at least 3")]
    BadOrder(usize),
    #[error("no energy on [{lo}, {hi}] passes the nesting test")]
    EmptyFeasibleSet { lo: f64, hi: f64 },
    #[error("feasible energies reach the scan edge {0}; widen the window or raise Q")]
    UnboundedScan(f64),
    #[error("feasible energies form more than one interval (gap at {0})")]
    Islands(f64),
    #[error(transparent)]
    Moments(#[from] MomentError),
}

pub const DEFAULT_PROBE_POINTS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Option<Vec<R>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(R::zero(b[0].precision()), |m, v| R::max_of(m, v.abs()));
    if scale.is_zero() {
        return None;
    }
    let tiny = scale.epsilon() * scale.clone() * scale.lift(n as f64);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() <= tiny {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col].clone() / a[col][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = f.clone() * a[col][c].clone();
                a[r][c] -= v;
            }
            let v = f * b[col].clone();
            b[r] -= v;
        }
    }
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut v = b[i].clone();
        for j in i + 1..n {
            v -= a[i][j].clone() * x[j].clone();
        }
        x[i] = v / a[i][i].clone();
    }
    Some(x)
}

/// Numerator and denominator coefficients of `[L|M]` for the power series
/// with coefficients `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant<R> {
    pub numerator: Vec<R>,
    pub denominator: Vec<R>,
}

impl<R: Real> Approximant<R> {
    pub fn new(c: &[R], l: usize, m: usize) -> Result<Self, PadeError> {
        let needed = l + m;
        if needed >= c.len() {
            return Err(PadeError::InsufficientMoments {
                l,
                m,
                needed,
                max_order: c.len() - 1,
            });
        }
        let prec = c[0].precision();
        let coef = |k: isize| {
            if k < 0 {
                R::zero(prec)
            } else {
                c[k as usize].clone()
            }
        };
        let mut q = vec![R::one(prec)];
        if m > 0 {
            // Σ_{j=1..M} q_j c_{L+i−j} = −c_{L+i}, i = 1..M.
            let a = (1..=m)
                .map(|i| {
                    (1..=m)
                        .map(|j| coef(l as isize + i as isize - j as isize))
                        .collect()
                })
                .collect();
            let b = (1..=m).map(|i| -c[l + i].clone()).collect();
            q.extend(solve_dense(a, b).ok_or(PadeError::Singular { l, m })?);
        }
        let p = (0..=l)
            .map(|k| {
                (0..=k.min(m)).fold(R::zero(prec), |acc, j| {
                    acc + q[j].clone() * c[k - j].clone()
                })
            })
            .collect();
        Ok(Approximant {
            numerator: p,
            denominator: q,
        })
    }

    fn horner(coefs: &[R], s: &R) -> R {
        coefs
            .iter()
            .rev()
            .fold(s.lift(0.0), |acc, c| acc * s.clone() + c.clone())
    }

    /// Denominator at `s` and its size relative to `Σ |q_j| s^j`.
    pub fn denominator_at(&self, s: &R) -> (R, R) {
        let v = Self::horner(&self.denominator, s);
        let mag: Vec<R> = self.denominator.iter().map(|q| q.abs()).collect();
        let scale = Self::horner(&mag, s);
        let rel = v.abs() / scale;
        (v, rel)
    }

    pub fn value(&self, s: &R) -> R {
        Self::horner(&self.numerator, s) / Self::horner(&self.denominator, s)
    }
}

/// Series coefficients `c_k = (−1)^k u_k` of `I(s)`.
pub fn series_coefficients<R: Real>(moments: &MomentSequence<R>) -> Vec<R> {
    moments
        .values()
        .iter()
        .enumerate()
        .map(|(k, u)| if k % 2 == 0 { u.clone() } else { -u.clone() })
        .collect()
}

/// `[L|M](s)`: numerator degree `L`, denominator degree `M`.
pub fn pade_value<R: Real>(
    moments: &MomentSequence<R>,
    l: usize,
    m: usize,
    s: &R,
) -> Result<R, PadeError> {
    if !(s.to_f64() > 0.0) {
        return Err(PadeError::NonPositiveProbe(s.to_f64()));
    }
    Ok(Approximant::new(&series_coefficients(moments), l, m)?.value(s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PadeOptions {
    pub probe_points: Vec<f64>,
    /// Above this denominator degree the table is built in extended precision.
    pub max_double_degree: usize,
    pub extended_digits: u32,
    /// Probe discarded when `|Q(s)| / Σ|q_j|s^j` falls below this.
    pub denominator_floor: f64,
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_step: f64,
    pub refinements: usize,
}

impl Default for PadeOptions {
    fn default() -> Self {
        PadeOptions {
            probe_points: DEFAULT_PROBE_POINTS.to_vec(),
            max_double_degree: 6,
            extended_digits: 60,
            denominator_floor: 1e-12,
            scan_lo: 0.0,
            scan_hi: 4.0,
            scan_step: 0.05,
            refinements: 10,
        }
    }
}

/// Nesting chains at one probe point, in `f64` for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeChains {
    pub s: f64,
    /// `[M−1|M]` for `M = 1, 2, ...`.
    pub lower: Vec<f64>,
    /// `[M|M]` for `M = 0, 1, ...`.
    pub upper: Vec<f64>,
    pub nested: bool,
}

/// Nesting report for one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeTable {
    pub energy: f64,
    pub q: usize,
    pub probes: Vec<ProbeChains>,
    pub discarded: Vec<f64>,
    /// Set when the denominator system itself is singular at this energy.
    pub degenerate: bool,
}

impl PadeTable {
    /// Nesting holds at every retained probe and at least one was retained.
    pub fn feasible(&self) -> bool {
        !self.degenerate && !self.probes.is_empty() && self.probes.iter().all(|p| p.nested)
    }
}

fn chains_nested<R: Real>(lower: &[R], upper: &[R]) -> bool {
    let slack = |a: &R, b: &R| {
        let m = R::max_of(a.abs(), b.abs());
        m.epsilon() * m * a.lift(64.0)
    };
    let le = |a: &R, b: &R| a.clone() <= b.clone() + slack(a, b);
    lower.windows(2).all(|w| le(&w[0], &w[1]))
        && upper.windows(2).all(|w| le(&w[1], &w[0]))
        && match (lower.last(), upper.last()) {
            (Some(lo), Some(hi)) => le(lo, hi),
            _ => true,
        }
}

fn table_in<R: Real>(energy: &R, q: usize, opts: &PadeOptions) -> Result<PadeTable, PadeError> {
    let seq = generate_harmonic_stieltjes(energy, q)?;
    let c = series_coefficients(&seq);
    let mut lower_ap = Vec::new();
    let mut upper_ap = Vec::new();
    let build = |l, m| match Approximant::new(&c, l, m) {
        Ok(a) => Ok(Some(a)),
        Err(PadeError::Singular { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let mut degenerate = false;
    for m in 1..=(q + 1) / 2 {
        match build(m - 1, m)? {
            Some(a) => lower_ap.push(a),
            None => degenerate = true,
        }
    }
    for m in 0..=q / 2 {
        match build(m, m)? {
            Some(a) => upper_ap.push(a),
            None => degenerate = true,
        }
    }
    let mut table = PadeTable {
        energy: energy.to_f64(),
        q,
        probes: Vec::new(),
        discarded: Vec::new(),
        degenerate,
    };
    if degenerate {
        return Ok(table);
    }
    let floor = energy.lift(opts.denominator_floor);
    for &s in &opts.probe_points {
        if !(s > 0.0) {
            return Err(PadeError::NonPositiveProbe(s));
        }
        let sr = energy.lift(s);
        let near_pole = lower_ap
            .iter()
            .chain(&upper_ap)
            .any(|a| a.denominator_at(&sr).1 <= floor);
        if near_pole {
            table.discarded.push(s);
            continue;
        }
        let lower: Vec<R> = lower_ap.iter().map(|a| a.value(&sr)).collect();
        let upper: Vec<R> = upper_ap.iter().map(|a| a.value(&sr)).collect();
        table.probes.push(ProbeChains {
            s,
            nested: chains_nested(&lower, &upper),
            lower: lower.iter().map(Real::to_f64).collect(),
            upper: upper.iter().map(Real::to_f64).collect(),
        });
    }
    Ok(table)
}

/// Padé chains of the harmonic-oscillator Stieltjes moments `u_0..u_Q` at
/// trial energy `E`, in extended precision once the denominator degree
/// exceeds `opts.max_double_degree`.
pub fn pade_table(energy: f64, q: usize, opts: &PadeOptions) -> Result<PadeTable, PadeError> {
    if q < 3 {
        return Err(PadeError::BadOrder(q));
    }
    if q.div_ceil(2) > opts.max_double_degree {
        let prec = Precision::from_digits(opts.extended_digits);
        table_in(&MpFloat::from_f64(energy, prec), q, opts)
    } else {
        table_in(&energy, q, opts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PadeBounds {
    pub q: usize,
    /// Outer ends of the edge brackets.
    pub lower: f64,
    pub upper: f64,
    /// `(infeasible, feasible)` and `(feasible, infeasible)` edge brackets.
    pub lower_bracket: (f64, f64),
    pub upper_bracket: (f64, f64),
    pub evaluations: usize,
    /// Probe points dropped near a denominator zero, summed over evaluations.
    pub discarded: usize,
}

pub fn pade_energy_bounds(q: usize, tol: f64) -> Result<PadeBounds, PadeError> {
    pade_energy_bounds_with(q, tol, &PadeOptions::default())
}

/// Grid scan (refined until a feasible energy appears), island check, then
/// bisection of both edges to `tol`.
pub fn pade_energy_bounds_with(
    q: usize,
    tol: f64,
    opts: &PadeOptions,
) -> Result<PadeBounds, PadeError> {
    let mut evaluations = 0;
    let mut discarded = 0;
    let mut step = opts.scan_step;
    let mut grid: Vec<(f64, bool)> = Vec::new();
    for _ in 0..=opts.refinements {
        let n = ((opts.scan_hi - opts.scan_lo) / step).round() as usize;
        let tables: Vec<PadeTable> = (0..=n)
            .into_par_iter()
            .map(|i| pade_table(opts.scan_lo + step * i as f64, q, opts))
            .collect::<Result<_, _>>()?;
        evaluations += tables.len();
        discarded += tables.iter().map(|t| t.discarded.len()).sum::<usize>();
        grid = tables.iter().map(|t| (t.energy, t.feasible())).collect();
        if grid.iter().any(|g| g.1) {
            break;
        }
        step *= 0.5;
    }
    let (Some(a), Some(b)) = (
        grid.iter().position(|g| g.1),
        grid.iter().rposition(|g| g.1),
    ) else {
        return Err(PadeError::EmptyFeasibleSet {
            lo: opts.scan_lo,
            hi: opts.scan_hi,
        });
    };
    if let Some(g) = grid[a..=b].iter().find(|g| !g.1) {
        return Err(PadeError::Islands(g.0));
    }
    if a == 0 || b + 1 == grid.len() {
        return Err(PadeError::UnboundedScan(if a == 0 {
            opts.scan_lo
        } else {
            opts.scan_hi
        }));
    }
    let mut edge = |mut infeasible: f64, mut feasible: f64| -> Result<(f64, f64), PadeError> {
        while (feasible - infeasible).abs() > tol {
            let mid = 0.5 * (infeasible + feasible);
            let t = pade_table(mid, q, opts)?;
            evaluations += 1;
            discarded += t.discarded.len();
            if t.feasible() {
                feasible = mid;
            } else {
                infeasible = mid;
            }
        }
        Ok((infeasible, feasible))
    };
    let lower_bracket = edge(grid[a - 1].0, grid[a].0)?;
    let (hi_out, hi_in) = edge(grid[b + 1].0, grid[b].0)?;
    Ok(PadeBounds {
        q,
        lower: lower_bracket.0,
        upper: hi_out,
        lower_bracket,
        upper_bracket: (hi_in, hi_out),
        evaluations,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{MomentKind, Normalization};
    use approx::assert_relative_eq;

    fn seq(values: Vec<f64>) -> MomentSequence<f64> {
        MomentSequence::new(
            values,
            MomentKind::Stieltjes,
            false,
            Normalization::Mu0EqualsOne,
            false,
        )
        .unwrap()
    }

    #[test]
    fn zero_zero_is_first_moment() {
        let u = generate_harmonic_stieltjes(&1.0f64, 4).unwrap();
        assert_eq!(pade_value(&u, 0, 0, &0.7).unwrap(), 1.0);
    }

    #[test]
    fn exponential_moments_match_closed_form() {
        // u_k = k! is the Stieltjes series of ∫ e^{−y}/(1+sy) dy; [0|1] = 1/(1+s).
        let u = seq(vec![1.0, 1.0, 2.0, 6.0, 24.0]);
        assert_relative_eq!(
            pade_value(&u, 0, 1, &0.5).unwrap(),
            1.0 / 1.5,
            epsilon = 1e-15
        );
        // [1|1] = (1 + s)/(1 + 2s).
        assert_relative_eq!(
            pade_value(&u, 1, 1, &0.5).unwrap(),
            1.5 / 2.0,
            epsilon = 1e-15
        );
        // [1|2] = (1 + 3s)/(1 + 4s + 2s²).
        let s = 0.5;
        assert_relative_eq!(
            pade_value(&u, 1, 2, &s).unwrap(),
            (1.0 + 3.0 * s) / (1.0 + 4.0 * s + 2.0 * s * s),
            epsilon = 1e-14
        );
    }

    #[test]
    fn nesting_order_at_physical_energy() {
        let u = generate_harmonic_stieltjes(&1.0f64, 6).unwrap();
        let v = |l, m| pade_value(&u, l, m, &1.0).unwrap();
        assert!(v(0, 1) <= v(1, 2));
        assert!(v(1, 2) <= v(1, 1));
        assert!(v(1, 1) <= v(0, 0));
    }

    #[test]
    fn unphysical_energy_breaks_nesting() {
        let t = pade_table(3.0, 6, &PadeOptions::default()).unwrap();
        assert!(!t.feasible());
        let t = pade_table(1.0, 6, &PadeOptions::default()).unwrap();
        assert!(t.feasible(), "{t:?}");
    }

    #[test]
    fn extended_precision_for_high_degree() {
        let t = pade_table(1.0, 16, &PadeOptions::default()).unwrap();
        assert!(t.feasible(), "{t:?}");
        assert_eq!(t.probes[0].upper.len(), 9);
    }

    #[test]
    fn insufficient_moments_and_bad_probe() {
        let u = generate_harmonic_stieltjes(&1.0f64, 3).unwrap();
        assert!(matches!(
            pade_value(&u, 2, 2, &1.0),
            Err(PadeError::InsufficientMoments { needed: 4, .. })
        ));
        assert!(matches!(
            pade_value(&u, 0, 1, &-1.0),
            Err(PadeError::NonPositiveProbe(_))
        ));
    }

    #[test]
    fn singular_denominator_is_reported() {
        // u_1 = 0 makes the [0|1] system 0·q_1 = −c_1 with c_1 = 0.
        let u = seq(vec![1.0, 0.0, 1.0]);
        assert!(matches!(
            pade_value(&u, 1, 1, &1.0),
            Err(PadeError::Singular { l: 1, m: 1 })
        ));
    }

    #[test]
    fn interval_brackets_one() {
        let b = pade_energy_bounds(6, 1e-6).unwrap();
        assert!(b.lower < 1.0 && 1.0 < b.upper);
        // Positivity edges of the u_0..u_6 Hankel blocks, computed independently.
        assert!((b.lower - 0.9120768).abs() < 2e-6, "{b:?}");
        assert!((b.upper - 1.0414303).abs() < 2e-6, "{b:?}");
        let coarse = pade_energy_bounds(6, 1.0).unwrap();
        assert!(
            coarse.upper - coarse.lower <= 0.1 + 2.0 * PadeOptions::default().scan_step + 1e-12
        );
    }
}
