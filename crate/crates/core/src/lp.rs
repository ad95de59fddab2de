//! Bounded-variable primal simplex for the "maximize the uniform slack"
//! linear program used by the cutting-plane loop.
//!
//! Given box bounds `l ≤ x ≤ u`, inequality rows `a·x ≥ b` and equality rows
//! `a·x = b`, [`max_uniform_slack`] solves
//!
//! ```text
//!   maximize t  subject to  â_i·x − t ≥ b̂_i,  l ≤ x ≤ u,  t ≤ cap
//! ```
//!
//! where `(â_i, b̂_i)` are the inequality rows scaled to unit norm, so `t` is
//! the Euclidean distance from `x` to the nearest inequality hyperplane.
//! Equalities are eliminated by substitution first. Starting with every `x`
//! at a bound and `t` very negative is feasible, so no phase one is needed.
//! Entering and leaving variables follow Bland's rule.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("equality constraints are inconsistent (residual {0:e})")]
    InconsistentEqualities(f64),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coef: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackSolution {
    pub x: Vec<f64>,
    /// Optimal uniform slack `t`; negative means the inequalities cannot all hold.
    pub slack: f64,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const ROW_NORM_TOL: f64 = 1e-14;
const MAX_PIVOTS: usize = 50_000;

struct Substitution {
    var: usize,
    /// `x_var = (rhs − Σ_{j≠var} coef_j x_j) / coef_var`.
    coef: Vec<f64>,
    rhs: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximizes the uniform slack `t ≤ cap` over the rows and box.
pub fn max_uniform_slack(
    lower: &[f64],
    upper: &[f64],
    rows: &[Row],
    cap: f64,
) -> Result<SlackSolution, LpError> {
    let n = lower.len();
    if upper.len() != n || rows.iter().any(|r| r.coef.len() != n) {
        return Err(LpError::Dimension(
            "row or bound length differs from variable count".into(),
        ));
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in rows {
        match r.relation {
            Relation::Ge => ineq.push((r.coef.clone(), r.rhs)),
            Relation::Eq => eqs.push((r.coef.clone(), r.rhs)),
        }
    }

    // Eliminate equalities; the eliminated variable's bounds become rows.
    let mut subs: Vec<Substitution> = Vec::new();
    while let Some((a, b)) = eqs.pop() {
        let (k, ak) = a.iter().enumerate().fold((0, 0.0f64), |best, (j, v)| {
            if v.abs() > best.1.abs() {
                (j, *v)
            } else {
                best
            }
        });
        if ak.abs() <= ROW_NORM_TOL * (1.0 + norm(&a)) {
            if b.abs() > 1e-12 {
                return Err(LpError::InconsistentEqualities(b));
            }
            continue;
        }
        let substitute = |row: &mut Vec<f64>, rhs: &mut f64| {
            let c = row[k];
            if c != 0.0 {
                for j in 0..n {
                    row[j] -= c * a[j] / ak;
                }
                row[k] = 0.0;
                *rhs -= c * b / ak;
            }
        };
        for (row, rhs) in ineq.iter_mut().chain(eqs.iter_mut()) {
            substitute(row, rhs);
        }
        // x_k = b/ak − Σ (a_j/ak) x_j.
        let expr: Vec<f64> = (0..n)
            .map(|j| if j == k { 0.0 } else { -a[j] / ak })
            .collect();
        let c0 = b / ak;
        if lo[k].is_finite() {
            ineq.push((expr.clone(), lo[k] - c0));
        }
        if hi[k].is_finite() {
            ineq.push((expr.iter().map(|v| -v).collect(), c0 - hi[k]));
        }
        lo[k] = 0.0;
        hi[k] = 0.0;
        subs.push(Substitution {
            var: k,
            coef: a.clone(),
            rhs: b,
        });
    }

    // Normalize rows; empty rows are either vacuous or make the LP infeasible.
    let mut norm_rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(ineq.len());
    let mut forced_slack = f64::INFINITY;
    for (a, b) in ineq {
        let s = norm(&a);
        if s <= ROW_NORM_TOL {
            // 0 ≥ b: any positive b is an irreparable violation.
            if b > 0.0 {
                forced_slack = forced_slack.min(-b);
            }
            continue;
        }
        norm_rows.push((a.iter().map(|v| v / s).collect(), b / s));
    }

    let mut x0: Vec<f64> = (0..n)
        .map(|j| {
            if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            }
        })
        .collect();
    let mut solved = Simplex::new(&lo, &hi, &norm_rows, &x0, cap).run()?;
    x0.copy_from_slice(&solved.x);
    for s in subs.iter().rev() {
        let mut v = s.rhs;
        for j in 0..n {
            if j != s.var {
                v -= s.coef[j] * x0[j];
            }
        }
        x0[s.var] = v / s.coef[s.var];
    }
    solved.x = x0;
    solved.slack = solved.slack.min(forced_slack);
    Ok(solved)
}

/// Dictionary `basic_i = Σ_j D_ij · nonbasic_j`, plus the objective row.
struct Simplex {
    /// Variables: structural `0..n`, slack `t` at `n`, logicals after.
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    dict: Vec<Vec<f64>>,
    cost: Vec<f64>,
    n: usize,
}

impl Simplex {
    fn new(lo: &[f64], hi: &[f64], rows: &[(Vec<f64>, f64)], x0: &[f64], cap: f64) -> Self {
        let n = lo.len();
        let m = rows.len();
        let t_idx = n;
        // Start t low enough that every row holds with x at its start point.
        let mut t0: f64 = -1.0;
        for (a, b) in rows {
            let ax: f64 = a.iter().zip(x0).map(|(u, v)| u * v).sum();
            t0 = t0.min(ax - b - 1.0);
        }
        let t0 = t0.min(cap);
        let mut lower = lo.to_vec();
        let mut upper = hi.to_vec();
        lower.push(t0);
        upper.push(cap);
        let mut value = x0.to_vec();
        value.push(t0);
        let mut dict = Vec::with_capacity(m);
        for (a, b) in rows {
            let mut row = a.clone();
            row.push(-1.0);
            let v: f64 = row.iter().zip(&value[..=n]).map(|(u, v)| u * v).sum();
            lower.push(*b);
            upper.push(f64::INFINITY);
            dict.push(row);
            value.push(v);
        }
        let mut cost = vec![0.0; n + 1];
        cost[t_idx] = 1.0;
        Simplex {
            lower,
            upper,
            value,
            basic: (n + 1..n + 1 + m).collect(),
            nonbasic: (0..=n).collect(),
            dict,
            cost,
            n,
        }
    }

    fn refresh_basics(&mut self) {
        for (i, &b) in self.basic.iter().enumerate() {
            let v: f64 = self.dict[i]
                .iter()
                .zip(&self.nonbasic)
                .map(|(d, &j)| d * self.value[j])
                .sum();
            self.value[b] = v;
        }
    }

    fn run(mut self) -> Result<SlackSolution, LpError> {
        let mut pivots = 0;
        loop {
            if pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit(MAX_PIVOTS));
            }
            // Bland: lowest-index improving nonbasic variable.
            let mut entering: Option<(usize, f64)> = None;
            for (q, &j) in self.nonbasic.iter().enumerate() {
                let d = self.cost[q];
                let can_up = d > COST_TOL && self.value[j] < self.upper[j];
                let can_down = d < -COST_TOL && self.value[j] > self.lower[j];
                if (can_up || can_down) && entering.map_or(true, |(q0, _)| j < self.nonbasic[q0]) {
                    entering = Some((q, d.signum()));
                }
            }
            let Some((q, dir)) = entering else {
                break;
            };
            let jq = self.nonbasic[q];

            // Ratio test; ties go to the lowest variable index.
            let mut step = self.upper[jq] - self.lower[jq];
            let mut leaving: Option<usize> = None;
            for (i, row) in self.dict.iter().enumerate() {
                let rate = row[q] * dir;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basic[i];
                let room = if rate > 0.0 {
                    (self.upper[b] - self.value[b]) / rate
                } else {
                    (self.value[b] - self.lower[b]) / -rate
                };
                let room = room.max(0.0);
                if !room.is_finite() {
                    continue;
                }
                let slop = if step.is_finite() {
                    1e-15 * (1.0 + step.abs())
                } else {
                    0.0
                };
                let better = room < step - slop
                    || (room <= step + slop && leaving.map_or(false, |l| b < self.basic[l]));
                if better {
                    step = room;
                    leaving = Some(i);
                }
            }
            if !step.is_finite() {
                return Err(LpError::Unbounded);
            }
            self.value[jq] += dir * step;
            match leaving {
                None => {
                    // Bound flip: snap exactly onto the opposite bound.
                    self.value[jq] = if dir > 0.0 {
                        self.upper[jq]
                    } else {
                        self.lower[jq]
                    };
                }
                Some(r) => {
                    let b = self.basic[r];
                    // Snap the leaving variable onto the bound it hit.
                    let rate = self.dict[r][q] * dir;
                    let target = if rate > 0.0 {
                        self.upper[b]
                    } else {
                        self.lower[b]
                    };
                    self.pivot(r, q);
                    self.value[b] = target;
                }
            }
            self.refresh_basics();
            pivots += 1;
        }
        let x = self.value[..self.n].to_vec();
        Ok(SlackSolution {
            x,
            slack: self.value[self.n],
            pivots,
        })
    }

    /// Exchanges basic row `r` with nonbasic column `q`.
    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.dict[r][q];
        let mut new_row: Vec<f64> = self.dict[r].iter().map(|v| -v / p).collect();
        new_row[q] = 1.0 / p;
        for i in 0..self.dict.len() {
            if i == r {
                continue;
            }
            let f = self.dict[i][q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.dict[i];
            for (k, nv) in new_row.iter().enumerate() {
                if k == q {
                    row[k] = f * nv;
                } else {
                    row[k] += f * nv;
                }
            }
        }
        let f = self.cost[q];
        if f != 0.0 {
            for (k, nv) in new_row.iter().enumerate() {
                if k == q {
                    self.cost[k] = f * nv;
                } else {
                    self.cost[k] += f * nv;
                }
            }
        }
        self.dict[r] = new_row;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[q]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ge(coef: &[f64], rhs: f64) -> Row {
        Row {
            coef: coef.to_vec(),
            relation: Relation::Ge,
            rhs,
        }
    }

    #[test]
    fn chebyshev_center_of_unit_square() {
        // 0 ≤ x, y ≤ 1 written as rows so the slack sees all four sides.
        let rows = vec![
            ge(&[1.0, 0.0], 0.0),
            ge(&[-1.0, 0.0], -1.0),
            ge(&[0.0, 1.0], 0.0),
            ge(&[0.0, -1.0], -1.0),
        ];
        let inf = f64::INFINITY;
        let s = max_uniform_slack(&[-inf, -inf], &[inf, inf], &rows, 10.0).unwrap();
        assert_relative_eq!(s.slack, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.x[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn triangle_incircle() {
        // x ≥ 0, y ≥ 0, x + y ≤ 1: inradius 1/(2 + √2).
        let rows = vec![
            ge(&[1.0, 0.0], 0.0),
            ge(&[0.0, 1.0], 0.0),
            ge(&[-1.0, -1.0], -1.0),
        ];
        let inf = f64::INFINITY;
        let s = max_uniform_slack(&[-inf, -inf], &[inf, inf], &rows, 10.0).unwrap();
        let r = 1.0 / (2.0 + 2f64.sqrt());
        assert_relative_eq!(s.slack, r, epsilon = 1e-12);
        assert_relative_eq!(s.x[0], r, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_rows_give_negative_slack() {
        let rows = vec![ge(&[1.0], 1.0), ge(&[-1.0], 0.0)];
        let s = max_uniform_slack(&[-10.0], &[10.0], &rows, 10.0).unwrap();
        assert!(s.slack < 0.0);
        assert_relative_eq!(s.slack, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn box_bounds_respected_and_cap_applies() {
        let rows = vec![ge(&[1.0, 1.0], 0.0)];
        let s = max_uniform_slack(&[0.0, 0.0], &[1.0, 2.0], &rows, 0.25).unwrap();
        assert_relative_eq!(s.slack, 0.25, epsilon = 1e-12);
        assert!(s
            .x
            .iter()
            .zip([1.0, 2.0])
            .all(|(x, u)| *x >= 0.0 && *x <= u));
        let s = max_uniform_slack(&[0.0, 0.0], &[1.0, 2.0], &rows, 100.0).unwrap();
        assert_relative_eq!(s.slack, 3.0 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn equality_is_eliminated() {
        // x + y = 1 with 0 ≤ x, y ≤ 1; maximize distance to x ≥ 0.2 and y ≥ 0.2.
        let rows = vec![
            Row {
                coef: vec![1.0, 1.0],
                relation: Relation::Eq,
                rhs: 1.0,
            },
            ge(&[1.0, 0.0], 0.2),
            ge(&[0.0, 1.0], 0.2),
        ];
        let s = max_uniform_slack(&[0.0, 0.0], &[1.0, 1.0], &rows, 10.0).unwrap();
        assert_relative_eq!(s.x[0] + s.x[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.x[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.slack, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn eliminated_bounds_become_rows() {
        // x + y = 1, y ∈ [0, 0.1] forces x ∈ [0.9, 1].
        let rows = vec![
            Row {
                coef: vec![1.0, 1.0],
                relation: Relation::Eq,
                rhs: 1.0,
            },
            ge(&[-1.0, 0.0], -0.5),
        ];
        let s = max_uniform_slack(&[0.0, 0.0], &[1.0, 0.1], &rows, 10.0).unwrap();
        assert!(s.slack < 0.0, "{s:?}");
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Many rows through the same vertex.
        let mut rows = Vec::new();
        for k in 0..40 {
            let a = (k as f64) * 0.05;
            rows.push(ge(&[a.cos(), a.sin()], 0.0));
        }
        let s = max_uniform_slack(&[-1.0, -1.0], &[1.0, 1.0], &rows, 10.0).unwrap();
        assert!(s.slack > 0.0);
        for r in &rows {
            let v = r.coef[0] * s.x[0] + r.coef[1] * s.x[1];
            assert!(v >= s.slack - 1e-10);
        }
    }
}
