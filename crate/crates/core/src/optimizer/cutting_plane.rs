//! Cutting-plane solver for the 0-1 nulling-assignment programs.
//!
//! The integer constraints are relaxed and the LP solved; while the optimal
//! vertex is fractional, a rounded nonnegative-combination cut is derived
//! from an exact reconstruction of the fractional tableau row and appended,
//! and the LP is re-solved. Cuts never remove integer-feasible points, so
//! the first integral optimum is the program's optimum. If the cut budget
//! runs out the solver falls back to branch-and-bound on the most
//! fractional variable.

use num_rational::BigRational;

use super::exact::{
    basic_values, chvatal_gomory_cut, fractional_part, inverse_row, is_integral, rational_from_f64,
};
use super::simplex::{simplex_solve, simplex_solve_masked, SimplexError, SimplexOptions};
use super::{IntegerProgram, OptimizerError};

/// Iteration budgets and tolerances for the integer solve.
#[derive(Debug, Clone)]
pub struct CutLimits {
    /// Cuts added before falling back to branch-and-bound.
    pub max_cuts: usize,
    /// Distance to the nearest integer below which a float value counts
    /// as integral.
    pub integrality_tol: f64,
    /// Node budget for the branch-and-bound fallback.
    pub max_bb_nodes: usize,
    pub simplex: SimplexOptions,
}

impl Default for CutLimits {
    fn default() -> Self {
        Self {
            max_cuts: 500,
            integrality_tol: 1e-6,
            max_bb_nodes: 500_000,
            simplex: SimplexOptions::default(),
        }
    }
}

/// An integral solution of the relaxed-and-cut program.
#[derive(Debug, Clone)]
pub struct IlpSolution {
    pub x: Vec<u8>,
    pub objective: f64,
    pub cuts_added: usize,
    pub used_branch_and_bound: bool,
}

/// Shared objective evaluation so cross-method comparisons see identical
/// floating-point accumulation.
pub fn objective_value(c: &[f64], x: &[u8]) -> f64 {
    let mut acc = 0.0;
    for (ci, &xi) in c.iter().zip(x) {
        if xi != 0 {
            acc += ci;
        }
    }
    acc
}

fn integer_feasible(x: &[u8], rows: &[Vec<i64>], rhs: &[f64]) -> bool {
    rows.iter().zip(rhs).all(|(row, &b)| {
        let lhs: i64 = row.iter().zip(x).map(|(&a, &xi)| a * xi as i64).sum();
        (lhs as f64) <= b + 1e-9
    })
}

fn float_integral(x: &[f64], tol: f64) -> bool {
    x.iter().all(|&v| (v - v.round()).abs() <= tol)
}

fn round_binary(x: &[f64]) -> Vec<u8> {
    x.iter()
        .map(|&v| if v.round() >= 1.0 { 1u8 } else { 0u8 })
        .collect()
}

/// Solution plus the final constraint system including every cut added.
pub(crate) type SolvedSystem = (IlpSolution, Vec<Vec<i64>>, Vec<f64>);

/// Gomory cutting-plane loop. Returns the optimal binary vector of
/// `max c·x  s.t.  A x ≤ b, x binary` (with the box rows part of `A`),
/// plus the final constraint system including every cut added.
pub(crate) fn solve_with_rows(
    ip: &IntegerProgram,
    limits: &CutLimits,
) -> Result<SolvedSystem, OptimizerError> {
    let n = ip.num_vars();
    let mut rows_int: Vec<Vec<i64>> = ip.a.clone();
    let mut rows_f: Vec<Vec<f64>> = rows_int
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let mut rhs_f: Vec<f64> = ip.b.clone();
    let mut rhs_rat: Vec<BigRational> = rhs_f.iter().map(|&v| rational_from_f64(v)).collect();
    let mut cuts_added = 0usize;

    loop {
        let sol = simplex_solve(&ip.c, &rows_f, &rhs_f, &limits.simplex).map_err(map_lp_err)?;
        if float_integral(&sol.x, limits.integrality_tol) {
            let xr = round_binary(&sol.x);
            if integer_feasible(&xr, &rows_int, &rhs_f) {
                let solution = IlpSolution {
                    objective: objective_value(&ip.c, &xr),
                    x: xr,
                    cuts_added,
                    used_branch_and_bound: false,
                };
                return Ok((solution, rows_int, rhs_f));
            }
        }
        // Exact basic values decide integrality; float fuzz does not.
        let vals = basic_values(&rows_int, n, &sol.basis, &rhs_rat)
            .ok_or(OptimizerError::SingularBasis)?;
        let mut worst: Option<(usize, f64)> = None;
        for (pos, val) in vals.iter().enumerate() {
            if sol.basis[pos] < n && !is_integral(val) {
                let f = rational_to_f64(&fractional_part(val));
                let dist = f.min(1.0 - f);
                if worst.is_none_or(|(_, w)| dist > w) {
                    worst = Some((pos, dist));
                }
            }
        }
        let Some((pos, _)) = worst else {
            // Exactly integral vertex; extract it from the exact values.
            let mut x = vec![0u8; n];
            for (p, val) in vals.iter().enumerate() {
                if sol.basis[p] < n {
                    let v: i64 = val
                        .to_integer()
                        .try_into()
                        .map_err(|_| OptimizerError::SingularBasis)?;
                    if !(0..=1).contains(&v) {
                        return Err(OptimizerError::SolverFailure(
                            "integral vertex outside the unit box".into(),
                        ));
                    }
                    x[sol.basis[p]] = v as u8;
                }
            }
            if !integer_feasible(&x, &rows_int, &rhs_f) {
                return Err(OptimizerError::SolverFailure(
                    "extracted vertex violates a constraint".into(),
                ));
            }
            let solution = IlpSolution {
                objective: objective_value(&ip.c, &x),
                x,
                cuts_added,
                used_branch_and_bound: false,
            };
            return Ok((solution, rows_int, rhs_f));
        };
        if cuts_added >= limits.max_cuts {
            let x = branch_and_bound(&ip.c, &rows_int, &rows_f, &rhs_f, limits)?;
            let solution = IlpSolution {
                objective: objective_value(&ip.c, &x),
                x,
                cuts_added,
                used_branch_and_bound: true,
            };
            return Ok((solution, rows_int, rhs_f));
        }
        let y = inverse_row(&rows_int, n, &sol.basis, pos).ok_or(OptimizerError::SingularBasis)?;
        let cut = chvatal_gomory_cut(&rows_int, &rhs_rat, &y, n)
            .ok_or_else(|| OptimizerError::SolverFailure("cut coefficients overflow".into()))?;
        // The basic value at `pos` is fractional, so the cut removes the
        // current vertex; fall back to branch-and-bound if floating-point
        // degeneracy ever breaks that instead of looping.
        let violation: f64 = cut
            .coeffs
            .iter()
            .zip(&sol.x)
            .map(|(&a, &xv)| a as f64 * xv)
            .sum::<f64>()
            - cut.rhs_floor as f64;
        if violation <= 1e-9 {
            let x = branch_and_bound(&ip.c, &rows_int, &rows_f, &rhs_f, limits)?;
            let solution = IlpSolution {
                objective: objective_value(&ip.c, &x),
                x,
                cuts_added,
                used_branch_and_bound: true,
            };
            return Ok((solution, rows_int, rhs_f));
        }
        rows_f.push(cut.coeffs.iter().map(|&v| v as f64).collect());
        rows_int.push(cut.coeffs);
        rhs_f.push(cut.rhs_floor as f64);
        rhs_rat.push(BigRational::from_integer(cut.rhs_floor.into()));
        cuts_added += 1;
    }
}

/// Gomory cutting-plane solve of `max c·x  s.t.  A x ≤ b, x binary`:
/// relax, cut while the optimal vertex is fractional, fall back to
/// branch-and-bound past the cut budget.
pub fn solve_cutting_plane(
    ip: &IntegerProgram,
    limits: &CutLimits,
) -> Result<IlpSolution, OptimizerError> {
    solve_with_rows(ip, limits).map(|(sol, _, _)| sol)
}

fn map_lp_err(e: SimplexError) -> OptimizerError {
    match e {
        SimplexError::Infeasible => OptimizerError::Infeasible,
        other => OptimizerError::Simplex(other),
    }
}

fn rational_to_f64(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(0.5)
}

/// Depth-first branch-and-bound over the binary variables with LP bounds.
fn branch_and_bound(
    c: &[f64],
    rows_int: &[Vec<i64>],
    rows_f: &[Vec<f64>],
    rhs: &[f64],
    limits: &CutLimits,
) -> Result<Vec<u8>, OptimizerError> {
    struct State<'a> {
        c: &'a [f64],
        rows_int: &'a [Vec<i64>],
        rows_f: &'a [Vec<f64>],
        limits: &'a CutLimits,
        incumbent: Option<(Vec<u8>, f64)>,
        nodes: usize,
    }

    fn recurse(
        st: &mut State,
        fixed: &mut Vec<i8>,
        rhs: &[f64],
        base_obj: f64,
    ) -> Result<(), OptimizerError> {
        st.nodes += 1;
        if st.nodes > st.limits.max_bb_nodes {
            return Err(OptimizerError::BranchAndBoundBudget {
                nodes: st.limits.max_bb_nodes,
            });
        }
        let banned: Vec<bool> = fixed.iter().map(|&f| f != -1).collect();
        let lp = match simplex_solve_masked(st.c, st.rows_f, rhs, Some(&banned), &st.limits.simplex)
        {
            Ok(sol) => sol,
            Err(SimplexError::Infeasible) => return Ok(()),
            Err(e) => return Err(OptimizerError::Simplex(e)),
        };
        let ub = lp.objective + base_obj;
        if let Some((_, best)) = &st.incumbent {
            if ub <= *best {
                return Ok(());
            }
        }
        if float_integral(&lp.x, st.limits.integrality_tol) {
            // The rhs is already adjusted for the fixings, so the free part
            // alone must satisfy it; fixed columns were subtracted out.
            let free = round_binary(&lp.x);
            if integer_feasible(&free, st.rows_int, rhs) {
                let full: Vec<u8> = free
                    .iter()
                    .zip(fixed.iter())
                    .map(|(&v, &f)| if f == -1 { v } else { f as u8 })
                    .collect();
                let val = objective_value(st.c, &full);
                if st.incumbent.as_ref().is_none_or(|(_, b)| val > *b) {
                    st.incumbent = Some((full, val));
                }
                return Ok(());
            }
        }
        // Branch on the most fractional free variable.
        let mut target: Option<(usize, f64)> = None;
        for j in 0..fixed.len() {
            if fixed[j] == -1 {
                let f = lp.x[j] - lp.x[j].floor();
                let dist = f.min(1.0 - f);
                if target.is_none_or(|(_, d)| dist > d) {
                    target = Some((j, dist));
                }
            }
        }
        let Some((j, _)) = target else {
            return Ok(());
        };
        let order: [i8; 2] = if st.c[j] >= 0.0 { [1, 0] } else { [0, 1] };
        for v in order {
            fixed[j] = v;
            if v == 1 {
                let mut adjusted = rhs.to_vec();
                let mut feasible = true;
                for (i, row) in st.rows_int.iter().enumerate() {
                    adjusted[i] -= row[j] as f64;
                    if adjusted[i] < 0.0 && row.iter().all(|&a| a >= 0) {
                        feasible = false;
                        break;
                    }
                }
                if feasible {
                    recurse(st, fixed, &adjusted, base_obj + st.c[j])?;
                }
            } else {
                recurse(st, fixed, rhs, base_obj)?;
            }
            fixed[j] = -1;
        }
        Ok(())
    }

    let mut st = State {
        c,
        rows_int,
        rows_f,
        limits,
        incumbent: None,
        nodes: 0,
    };
    let mut fixed = vec![-1i8; c.len()];
    recurse(&mut st, &mut fixed, rhs, 0.0)?;
    st.incumbent
        .map(|(x, _)| x)
        .ok_or(OptimizerError::Infeasible)
}
