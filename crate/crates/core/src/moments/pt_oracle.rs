//! Numerical oracle for the missing moments of the PT-symmetric cubic
//! density `S(x) = |Φ(x)|²`, where `−Φ″ − (ix)³Φ = ℰΦ`.
//!
//! Each half line is shot inward from `±L` with WKB-decaying data and the two
//! solutions are matched at `x = 0`. The wavefunction is carried in Riccati
//! form, `ψ = Φ′/Φ` plus the log-amplitude `ln|Φ|`, which stays smooth where
//! `Φ` itself oscillates over dozens of decades. Moments of `S` are integrated
//! alongside as extra ODE components.

use num_complex::Complex64;
use ode_solvers::dop_shared::OutputType;
use ode_solvers::{Dop853, SVector, System};

use super::{generate_pt_density_moments, MomentError};
use crate::linalg::{Cholesky, Matrix};
use crate::real::{MpFloat, Precision, Real};

/// Integration and validation parameters.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Half-width `L` of the truncated interval `[−L, L]`.
    pub half_width: f64,
    /// Spacing of the dense output grid used for the Barta scan.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Largest acceptable log-derivative mismatch at `x = 0` before ℰ is refined.
    pub match_tol: f64,
    pub max_refinements: usize,
    /// Highest moment order at which the propagated sequence must stay Hankel-positive.
    pub check_order: usize,
    pub check_precision: Precision,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: 12.0,
            step: 1e-3,
            rtol: 1e-12,
            atol: 1e-14,
            match_tol: 1e-8,
            max_refinements: 8,
            check_order: 60,
            check_precision: Precision::from_digits(50),
        }
    }
}

impl GridSpec {
    fn intervals_per_side(&self) -> usize {
        (self.half_width / self.step).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct PtOracleResult {
    /// Energy the moments belong to; differs from the input only after refinement.
    pub energy: f64,
    pub refinements: usize,
    /// μ_2, μ_4, μ_6 with μ_0 = 1.
    pub missing: [f64; 3],
    /// Quadrature μ_8, to be compared with 5ℰ.
    pub mu8: f64,
    /// Largest |μ_p| over odd p ≤ 7; vanishes for an exactly PT-symmetric density.
    pub odd_residual: f64,
    /// Relative log-derivative mismatch at `x = 0`.
    pub mismatch: f64,
    /// Infimum of `2ℰ − 2|Φ′/Φ|² + x⁴` over the grid.
    pub barta_infimum: f64,
    pub barta_argmin: f64,
    pub grid_points: usize,
}

const NMOM: usize = 9;
const T_INDEX: usize = 3 + NMOM;
/// `[Re ψ, Im ψ, ln|Φ| − a₀, I_0..I_8, t]`.
type State = SVector<f64, 13>;

/// `t` runs from 0 at the outer edge to `L` at the origin; `x = side·(L − t)`.
///
/// `t` is carried as a state component: ode_solvers 0.5 evaluates its stages
/// at the wrong abscissae, which only autonomous systems tolerate.
#[derive(Clone)]
struct HalfLine {
    energy: f64,
    side: f64,
    half_width: f64,
    /// Log-amplitude offset keeping `S` near unity at the origin.
    log_offset: f64,
}

impl System<f64, State> for HalfLine {
    fn system(&self, _t: f64, y: &State, dy: &mut State) {
        let x = self.side * (self.half_width - y[T_INDEX]);
        let psi = Complex64::new(y[0], y[1]);
        // dψ/dx = (ix³ − ℰ) − ψ², and d/dt = −side·d/dx.
        let dpsi_dt = -self.side * (Complex64::new(-self.energy, x * x * x) - psi * psi);
        dy[0] = dpsi_dt.re;
        dy[1] = dpsi_dt.im;
        dy[2] = -self.side * psi.re;
        let s = (2.0 * (y[2] - self.log_offset)).exp();
        let mut xp = 1.0;
        for p in 0..NMOM {
            dy[3 + p] = xp * s;
            xp *= x;
        }
        dy[T_INDEX] = 1.0;
    }
}

struct HalfSolution {
    /// States on the dense grid, used only for the Barta scan.
    ys: Vec<State>,
    /// State at the origin.
    end: State,
    side: f64,
    half_width: f64,
}

impl HalfSolution {
    fn end(&self) -> &State {
        &self.end
    }

    fn psi(y: &State) -> Complex64 {
        Complex64::new(y[0], y[1])
    }

    fn x(&self, y: &State) -> f64 {
        self.side * (self.half_width - y[T_INDEX])
    }
}

fn integrate_half(energy: f64, side: f64, grid: &GridSpec) -> Result<HalfSolution, MomentError> {
    let l = grid.half_width;
    let n = grid.intervals_per_side();
    let dx = l / n as f64;
    // WKB decay: Φ ~ |x|^{−3/4} exp(−(2/5) ω |x|^{5/2}), ω = e^{±iπ/4}.
    let omega = Complex64::from_polar(1.0, side * std::f64::consts::FRAC_PI_4);
    let psi0 = side * (-omega * l.powf(1.5) - 0.75 / l);
    let mut y0 = State::zeros();
    y0[0] = psi0.re;
    y0[1] = psi0.im;

    let sys = HalfLine {
        energy,
        side,
        half_width: l,
        log_offset: 0.4 * omega.re * l.powf(2.5),
    };
    let solve = |x_end: f64, out: OutputType| {
        let mut solver = Dop853::from_param(
            sys.clone(),
            0.0,
            x_end,
            dx,
            y0,
            grid.rtol,
            grid.atol,
            0.9,
            0.0,
            0.333,
            6.0,
            l,
            dx.min(1e-3),
            1_000_000,
            u32::MAX,
            out,
        );
        solver.integrate().map_err(|e| {
            MomentError::OracleNonConvergence(format!("ODE integration failed: {e}"))
        })?;
        Ok::<_, MomentError>(solver.y_out().clone())
    };
    // The dense grid drifts by accumulated rounding and is interpolated, so
    // the state at the origin comes from a run whose last step lands on it.
    let end = *solve(l, OutputType::Sparse)?
        .last()
        .ok_or_else(|| MomentError::OracleNonConvergence("empty ODE solution".into()))?;
    // Overshoot by half a cell so the dense grid point at the origin is emitted.
    let mut ys = solve(l + 0.5 * dx, OutputType::Dense)?;
    if ys.len() < n + 1 {
        return Err(MomentError::OracleNonConvergence(format!(
            "dense output stopped after {} of {} grid points",
            ys.len(),
            n + 1
        )));
    }
    ys.truncate(n + 1);
    Ok(HalfSolution {
        ys,
        end,
        side,
        half_width: l,
    })
}

struct Shot {
    right: HalfSolution,
    left: HalfSolution,
    /// Weight taking the left density onto the right one at the origin.
    scale: f64,
    psi_right: Complex64,
    psi_left: Complex64,
}

impl Shot {
    fn run(energy: f64, grid: &GridSpec) -> Result<Self, MomentError> {
        let right = integrate_half(energy, 1.0, grid)?;
        let left = integrate_half(energy, -1.0, grid)?;
        let (yr, yl) = (right.end(), left.end());
        // |Φ_R(0)|² / |Φ_L(0)|² from the log-amplitudes.
        let scale = (2.0 * (yr[2] - yl[2])).exp();
        let psi_right = HalfSolution::psi(yr);
        let psi_left = HalfSolution::psi(yl);
        if !(scale.is_finite() && psi_right.is_finite() && psi_left.is_finite()) {
            return Err(MomentError::OracleNonConvergence(
                "wavefunction vanished or overflowed at the matching point".into(),
            ));
        }
        Ok(Shot {
            right,
            left,
            scale,
            psi_right,
            psi_left,
        })
    }

    /// PT symmetry forces `Re ψ(0) = 0`; this is half the real jump.
    fn residual(&self) -> f64 {
        0.5 * (self.psi_right - self.psi_left).re
    }

    fn mismatch(&self) -> f64 {
        (self.psi_right - self.psi_left).norm() / (1.0 + self.psi_right.norm())
    }

    /// Normalized moments μ_0..μ_8 (μ_0 = 1).
    fn moments(&self) -> [f64; NMOM] {
        let w = self.scale;
        let (yr, yl) = (self.right.end(), self.left.end());
        let mut mu = [0.0; NMOM];
        for (p, m) in mu.iter_mut().enumerate() {
            *m = yr[3 + p] + w * yl[3 + p];
        }
        let norm = mu[0];
        mu.iter_mut().for_each(|m| *m /= norm);
        mu
    }

    fn barta_scan(&self, energy: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for half in [&self.right, &self.left] {
            for y in &half.ys {
                let x = half.x(y);
                let psi = HalfSolution::psi(y);
                let b = 2.0 * energy - 2.0 * psi.norm_sqr() + x.powi(4);
                if b < best.0 {
                    best = (b, x);
                }
            }
        }
        best
    }
}

/// Solves for μ_2, μ_4, μ_6 of the normalized PT density at energy ℰ.
///
/// The supplied ℰ is used as is when the two half-line solutions already
/// match; otherwise it is refined by a secant iteration on the matching
/// residual, and the refined value is reported.
pub fn solve_pt_missing_moments(
    energy: f64,
    grid: &GridSpec,
) -> Result<PtOracleResult, MomentError> {
    let ok = grid.half_width > 0.0 && grid.step > 0.0 && grid.half_width.is_finite();
    if !ok || grid.intervals_per_side() < 16 {
        return Err(MomentError::DegenerateGrid(format!(
            "half-width {} with step {} gives fewer than 16 cells per side",
            grid.half_width, grid.step
        )));
    }

    let mut e = energy;
    let mut shot = Shot::run(e, grid)?;
    let mut refinements = 0;
    let mut prev: Option<(f64, f64)> = None;
    while shot.mismatch() > grid.match_tol {
        if refinements >= grid.max_refinements {
            return Err(MomentError::OracleNonConvergence(format!(
                "log-derivative mismatch {:e} after {refinements} refinements of ℰ (now {e})",
                shot.mismatch()
            )));
        }
        let r = shot.residual();
        let next = match prev {
            Some((e0, r0)) if r != r0 => e - r * (e - e0) / (r - r0),
            _ => e * (1.0 + 1e-7),
        };
        prev = Some((e, r));
        e = next;
        shot = Shot::run(e, grid)?;
        refinements += 1;
    }
    if refinements > 0 {
        log::info!("PT oracle refined energy {energy} -> {e} in {refinements} steps");
    }

    let mu = shot.moments();
    let (barta_infimum, barta_argmin) = shot.barta_scan(e);
    let odd_residual = mu
        .iter()
        .skip(1)
        .step_by(2)
        .fold(0.0f64, |a, m| a.max(m.abs()));
    let result = PtOracleResult {
        energy: e,
        refinements,
        missing: [mu[2], mu[4], mu[6]],
        mu8: mu[8],
        odd_residual,
        mismatch: shot.mismatch(),
        barta_infimum,
        barta_argmin,
        grid_points: 2 * shot.right.ys.len() - 1,
    };
    check_propagated_positivity(&result, grid)?;
    Ok(result)
}

/// Propagates the oracle moments through the recursion and requires every
/// Hankel matrix up to `grid.check_order` to be positive definite.
fn check_propagated_positivity(res: &PtOracleResult, grid: &GridSpec) -> Result<(), MomentError> {
    let prec = grid.check_precision;
    let order = grid.check_order.max(8) & !1;
    let missing = res.missing.map(|m| MpFloat::from_f64(m, prec));
    let seq = generate_pt_density_moments(&MpFloat::from_f64(res.energy, prec), missing, order)?;
    let dim = order / 2 + 1;
    let h = Matrix::from_fn(dim, dim, |i, j| seq.get(i + j).clone());
    match Cholesky::new(&h) {
        Ok(_) => Ok(()),
        Err(crate::linalg::LinalgError::NotPositiveDefinite { pivot, .. }) => {
            Err(MomentError::OracleLossOfPositivity { dim: pivot + 1 })
        }
        Err(e) => Err(MomentError::OracleNonConvergence(e.to_string())),
    }
}
