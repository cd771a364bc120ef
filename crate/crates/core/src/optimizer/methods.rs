//! Scenario-level solvers: each consumes a [`Scenario`] and produces a
//! feasible nulling assignment with its exact re-evaluated sum rate.

use std::time::Instant;

use crate::hetnet::{sum_rate, sum_rate_unchecked, NullingAssignment, Scenario};

use super::cutting_plane::{objective_value, solve_cutting_plane, CutLimits};
use super::poly::{
    expand, interference_brackets, nulling_probability, nulling_probability_per_station,
    variable_index, WeightRule,
};
use super::simplex::simplex_solve;
use super::{IntegerProgram, Method, OptimizerError, SolveReport};

/// Brute force enumerates at most this many variables.
pub const BRUTE_FORCE_VARIABLE_LIMIT: usize = 22;

/// Knobs shared by the optimizing methods.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Truncation order of the interference-product expansion.
    pub max_order: usize,
    /// Truncation order for the upper-bound program. Past order 2 the
    /// expansion coefficients alternate sign and the mean replacement is no
    /// longer one-sided.
    pub p4_max_order: usize,
    /// Monomial budget for the expansion.
    pub max_terms: usize,
    /// Use one linearization probability per station instead of the
    /// network-wide value.
    pub per_station_probability: bool,
    pub limits: CutLimits,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_order: 3,
            p4_max_order: 2,
            max_terms: 8_000_000,
            per_station_probability: false,
            limits: CutLimits::default(),
        }
    }
}

const NATS_TO_BITS: f64 = std::f64::consts::LOG2_E;

fn report(
    s: &Scenario,
    assignment: NullingAssignment,
    objective_linearized: Option<f64>,
    method: Method,
    cuts_added: usize,
    started: Instant,
) -> Result<SolveReport, OptimizerError> {
    let rate_nats = sum_rate(s, &assignment)?;
    Ok(SolveReport {
        assignment,
        objective_linearized,
        objective_exact_rate: rate_nats * NATS_TO_BITS,
        method,
        cuts_added,
        solve_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Reshapes a column-stacked solver vector into an assignment matrix.
pub fn assignment_from_vector(s: &Scenario, x: &[u8]) -> NullingAssignment {
    let (k_n, j_n) = (s.user_count(), s.station_count());
    debug_assert_eq!(x.len(), k_n * j_n);
    let mut n = NullingAssignment::zeros(k_n, j_n);
    for j in 0..j_n {
        for k in 0..k_n {
            if x[variable_index(k, j, k_n)] != 0 {
                n.set(k, j, true);
            }
        }
    }
    n
}

fn assignment_to_vector(s: &Scenario, n: &NullingAssignment) -> Vec<u8> {
    let (k_n, j_n) = (s.user_count(), s.station_count());
    let mut x = vec![0u8; k_n * j_n];
    for j in 0..j_n {
        for k in 0..k_n {
            if n.get(k, j) {
                x[variable_index(k, j, k_n)] = 1;
            }
        }
    }
    x
}

fn expectation_rule(s: &Scenario, opts: &SolveOptions) -> WeightRule {
    if opts.per_station_probability {
        WeightRule::ExpectationMatchedPerStation {
            p: nulling_probability_per_station(s),
            users: s.user_count(),
        }
    } else {
        WeightRule::ExpectationMatched {
            p: nulling_probability(s),
        }
    }
}

fn assemble_program(s: &Scenario, c: Vec<f64>) -> IntegerProgram {
    let (k_n, j_n) = (s.user_count(), s.station_count());
    let q: Vec<Vec<i64>> = (0..j_n)
        .map(|j| (0..k_n).map(|k| s.multipath[k][j] as i64).collect())
        .collect();
    let budgets: Vec<f64> = (0..j_n).map(|j| s.nulling_budget(j) as f64).collect();
    let served: Vec<Vec<bool>> = (0..j_n)
        .map(|j| (0..k_n).map(|k| s.is_served_by(k, j)).collect())
        .collect();
    IntegerProgram::from_knapsack_rows(k_n, j_n, c, &q, &budgets, &served)
}

/// Builds the linearized minimize-interference program: the truncated
/// expansion is linearized under the budget-probability rule and negated so
/// the program maximizes improvement.
pub fn build_linearized_program(
    s: &Scenario,
    opts: &SolveOptions,
) -> Result<IntegerProgram, OptimizerError> {
    let brackets = interference_brackets(s);
    let expansion = expand(&brackets, opts.max_order, opts.max_terms)?;
    let rule = expectation_rule(s, opts);
    let n_vars = s.user_count() * s.station_count();
    let c: Vec<f64> = expansion
        .linearize(&rule, n_vars)
        .into_iter()
        .map(|v| -v)
        .collect();
    Ok(assemble_program(s, c))
}

/// Builds the arithmetic-mean surrogate program in its native maximize
/// orientation (no negation): its optimum dominates the truncated product
/// surrogate of every feasible assignment.
pub fn build_upper_bound_program(
    s: &Scenario,
    opts: &SolveOptions,
) -> Result<(IntegerProgram, f64), OptimizerError> {
    let brackets = interference_brackets(s);
    let expansion = expand(&brackets, opts.p4_max_order, opts.max_terms)?;
    let n_vars = s.user_count() * s.station_count();
    let c = expansion.linearize(&WeightRule::UpperBound, n_vars);
    Ok((assemble_program(s, c), expansion.constant_term()))
}

/// Truncated-expansion value of the interference product at `n`, constant
/// included. This is the surrogate the upper-bound program dominates.
pub fn product_surrogate_value(
    s: &Scenario,
    n: &NullingAssignment,
    max_order: usize,
    max_terms: usize,
) -> Result<f64, OptimizerError> {
    let brackets = interference_brackets(s);
    let expansion = expand(&brackets, max_order, max_terms)?;
    Ok(expansion.evaluate(&assignment_to_vector(s, n)))
}

/// The all-zeros baseline.
pub fn solve_no_nulling(s: &Scenario) -> Result<SolveReport, OptimizerError> {
    let started = Instant::now();
    let n = NullingAssignment::zeros(s.user_count(), s.station_count());
    report(s, n, Some(0.0), Method::NoNulling, 0, started)
}

/// Greedy baseline: every BS independently nulls its strongest received
/// interferers in power order until the next candidate no longer fits its
/// spare DoF.
pub fn solve_heuristic(s: &Scenario) -> Result<SolveReport, OptimizerError> {
    let started = Instant::now();
    let (k_n, j_n) = (s.user_count(), s.station_count());
    let mut n = NullingAssignment::zeros(k_n, j_n);
    for j in 0..j_n {
        let budget = s.nulling_budget(j);
        let mut candidates: Vec<usize> = (0..k_n).filter(|&k| !s.is_served_by(k, j)).collect();
        candidates.sort_by(|&a, &b| {
            let pa = s.user_power_lin(a) * s.gains[a][j];
            let pb = s.user_power_lin(b) * s.gains[b][j];
            pb.partial_cmp(&pa).unwrap().then(a.cmp(&b))
        });
        let mut used = 0usize;
        for k in candidates {
            let need = s.multipath[k][j] as usize;
            if used + need > budget {
                break;
            }
            n.set(k, j, true);
            used += need;
        }
    }
    report(s, n, None, Method::Heuristic, 0, started)
}

/// Cutting-plane solve of the linearized program, re-evaluated on the exact
/// rate model.
pub fn solve_cutting_plane_report(
    s: &Scenario,
    opts: &SolveOptions,
) -> Result<SolveReport, OptimizerError> {
    let started = Instant::now();
    let ip = build_linearized_program(s, opts)?;
    let sol = solve_cutting_plane(&ip, &opts.limits)?;
    let assignment = assignment_from_vector(s, &sol.x);
    report(
        s,
        assignment,
        Some(sol.objective),
        Method::CuttingPlane,
        sol.cuts_added,
        started,
    )
}

/// Fixed-multipath fast path: with every user contributing the same number
/// of paths at a given BS, the budget rows collapse to all-ones rows whose
/// constraint matrix is totally unimodular, so one LP relaxation already
/// has an integral optimum.
pub fn solve_unimodular(s: &Scenario, opts: &SolveOptions) -> Result<SolveReport, OptimizerError> {
    let started = Instant::now();
    let (k_n, j_n) = (s.user_count(), s.station_count());
    let mut per_station_paths = vec![1i64; j_n];
    for j in 0..j_n {
        if k_n > 0 {
            let first = s.multipath[0][j];
            if (1..k_n).any(|k| s.multipath[k][j] != first) {
                return Err(OptimizerError::NotSpecialCase { j });
            }
            per_station_paths[j] = first as i64;
        }
    }
    let ip = build_linearized_program(s, opts)?;
    let ones: Vec<Vec<i64>> = (0..j_n).map(|_| vec![1i64; k_n]).collect();
    // Integer points are unchanged by dividing each budget row by its path
    // count and flooring, and the floored bounds keep the LP vertices
    // integral.
    let budgets: Vec<f64> = (0..j_n)
        .map(|j| (s.nulling_budget(j) as f64 / per_station_paths[j] as f64).floor())
        .collect();
    let served: Vec<Vec<bool>> = (0..j_n)
        .map(|j| (0..k_n).map(|k| s.is_served_by(k, j)).collect())
        .collect();
    let relaxed =
        IntegerProgram::from_knapsack_rows(k_n, j_n, ip.c.clone(), &ones, &budgets, &served);
    let rows_f: Vec<Vec<f64>> = relaxed
        .a
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let lp =
        simplex_solve(&relaxed.c, &rows_f, &relaxed.b, &opts.limits.simplex).map_err(
            |e| match e {
                super::simplex::SimplexError::Infeasible => OptimizerError::Infeasible,
                other => OptimizerError::Simplex(other),
            },
        )?;
    let max_frac =
        lp.x.iter()
            .map(|&v| (v - v.round()).abs())
            .fold(0.0f64, f64::max);
    if max_frac > opts.limits.integrality_tol {
        return Err(OptimizerError::UnimodularIntegralityFailure { max_frac });
    }
    let x: Vec<u8> =
        lp.x.iter()
            .map(|&v| if v.round() >= 1.0 { 1 } else { 0 })
            .collect();
    let assignment = assignment_from_vector(s, &x);
    report(
        s,
        assignment,
        Some(objective_value(&relaxed.c, &x)),
        Method::LpUnimodular,
        0,
        started,
    )
}

/// Enumerates per-station feasible nulling sets and walks their cross
/// product, tracking the exact-rate maximizer. Ties keep the first point in
/// enumeration order, which visits fewer nulls first.
fn enumerate_assignments<F: FnMut(&NullingAssignment)>(
    s: &Scenario,
    mut visit: F,
) -> Result<(), OptimizerError> {
    let (k_n, j_n) = (s.user_count(), s.station_count());
    let vars = k_n * j_n;
    if vars > BRUTE_FORCE_VARIABLE_LIMIT {
        return Err(OptimizerError::TooManyVariables {
            vars,
            limit: BRUTE_FORCE_VARIABLE_LIMIT,
        });
    }
    // Per-station subsets of nullable users within the spare budget.
    let mut station_sets: Vec<Vec<Vec<usize>>> = Vec::with_capacity(j_n);
    for j in 0..j_n {
        let candidates: Vec<usize> = (0..k_n).filter(|&k| !s.is_served_by(k, j)).collect();
        let budget = s.nulling_budget(j);
        let mut sets = Vec::new();
        let mut current = Vec::new();
        #[allow(clippy::too_many_arguments)]
        fn grow(
            s: &Scenario,
            j: usize,
            candidates: &[usize],
            from: usize,
            budget: usize,
            used: usize,
            current: &mut Vec<usize>,
            sets: &mut Vec<Vec<usize>>,
        ) {
            sets.push(current.clone());
            for (idx, &k) in candidates.iter().enumerate().skip(from) {
                let need = s.multipath[k][j] as usize;
                if used + need <= budget {
                    current.push(k);
                    grow(
                        s,
                        j,
                        candidates,
                        idx + 1,
                        budget,
                        used + need,
                        current,
                        sets,
                    );
                    current.pop();
                }
            }
        }
        grow(s, j, &candidates, 0, budget, 0, &mut current, &mut sets);
        station_sets.push(sets);
    }
    let mut n = NullingAssignment::zeros(k_n, j_n);
    fn walk<F: FnMut(&NullingAssignment)>(
        station_sets: &[Vec<Vec<usize>>],
        j: usize,
        n: &mut NullingAssignment,
        visit: &mut F,
    ) {
        if j == station_sets.len() {
            visit(n);
            return;
        }
        for set in &station_sets[j] {
            for &k in set {
                n.set(k, j, true);
            }
            walk(station_sets, j + 1, n, visit);
            for &k in set {
                n.set(k, j, false);
            }
        }
    }
    walk(&station_sets, 0, &mut n, &mut visit);
    Ok(())
}

/// Exhaustive oracle: the feasible assignment maximizing the exact sum rate.
pub fn solve_brute_force(s: &Scenario) -> Result<SolveReport, OptimizerError> {
    let started = Instant::now();
    let mut best: Option<(NullingAssignment, f64)> = None;
    enumerate_assignments(s, |n| {
        let rate = sum_rate_unchecked(s, n);
        if best.as_ref().is_none_or(|(_, b)| rate > *b) {
            best = Some((n.clone(), rate));
        }
    })?;
    let (assignment, _) = best.expect("the all-zeros assignment is always feasible");
    report(s, assignment, None, Method::BruteForce, 0, started)
}

/// Exact extrema of the interference product over all feasible assignments:
/// `(minimizer, min, maximizer, max)`.
pub fn brute_force_product_extrema(
    s: &Scenario,
) -> Result<(NullingAssignment, f64, NullingAssignment, f64), OptimizerError> {
    let mut lo: Option<(NullingAssignment, f64)> = None;
    let mut hi: Option<(NullingAssignment, f64)> = None;
    enumerate_assignments(s, |n| {
        let v = super::poly::interference_product(s, n);
        if lo.as_ref().is_none_or(|(_, b)| v < *b) {
            lo = Some((n.clone(), v));
        }
        if hi.as_ref().is_none_or(|(_, b)| v > *b) {
            hi = Some((n.clone(), v));
        }
    })?;
    let (ln, lv) = lo.expect("nonempty enumeration");
    let (hn, hv) = hi.expect("nonempty enumeration");
    Ok((ln, lv, hn, hv))
}

/// The upper-bound solve plus the data needed to compare it against
/// surrogate values of other assignments.
#[derive(Debug, Clone)]
pub struct UpperBoundOutcome {
    pub report: SolveReport,
    /// Optimal surrogate value including the constant term: an upper bound
    /// on [`product_surrogate_value`] at the same truncation order for every
    /// feasible assignment.
    pub surrogate_bound: f64,
    pub surrogate_constant: f64,
}

/// Solves the arithmetic-mean surrogate program by cutting planes.
pub fn solve_upper_bound_p4(
    s: &Scenario,
    opts: &SolveOptions,
) -> Result<UpperBoundOutcome, OptimizerError> {
    let started = Instant::now();
    let (ip, constant) = build_upper_bound_program(s, opts)?;
    let sol = solve_cutting_plane(&ip, &opts.limits)?;
    let assignment = assignment_from_vector(s, &sol.x);
    let report = report(
        s,
        assignment,
        Some(sol.objective),
        Method::UpperBoundP4,
        sol.cuts_added,
        started,
    )?;
    Ok(UpperBoundOutcome {
        report,
        surrogate_bound: constant + sol.objective,
        surrogate_constant: constant,
    })
}

/// Runs the requested method on the scenario.
pub fn solve(
    s: &Scenario,
    method: Method,
    opts: &SolveOptions,
) -> Result<SolveReport, OptimizerError> {
    match method {
        Method::NoNulling => solve_no_nulling(s),
        Method::Heuristic => solve_heuristic(s),
        Method::CuttingPlane => solve_cutting_plane_report(s, opts),
        Method::LpUnimodular => solve_unimodular(s, opts),
        Method::BruteForce => solve_brute_force(s),
        Method::UpperBoundP4 => solve_upper_bound_p4(s, opts).map(|o| o.report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarray::ArrayGeometry;
    use crate::hetnet::{BaseStation, User};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mbs(dof: usize) -> BaseStation {
        BaseStation {
            id: 0,
            position: [0.0, 0.0],
            tx_power_dbm: 20.0,
            gain_ratio: 100.0,
            dof_budget: dof,
            array: None,
        }
    }

    fn sbs(id: usize, dof: usize) -> BaseStation {
        BaseStation {
            id,
            position: [50.0 * id as f64, 0.0],
            tx_power_dbm: 15.0,
            gain_ratio: 10.0,
            dof_budget: dof,
            array: Some(ArrayGeometry::nested(2, 2).unwrap()),
        }
    }

    fn user(id: usize, serving: usize, dbm: f64) -> User {
        User {
            id,
            position: [5.0 * id as f64, 2.0],
            tx_power_dbm: dbm,
            serving_bs: serving,
        }
    }

    pub(crate) fn random_scenario(
        rng: &mut ChaCha8Rng,
        max_users: usize,
        max_sbs: usize,
        q_max: u32,
    ) -> Scenario {
        loop {
            let j_n = rng.gen_range(1..=max_sbs);
            let k_n = rng.gen_range(1..=max_users);
            let mut stations = vec![mbs(rng.gen_range(8..40))];
            for j in 1..=j_n {
                stations.push(sbs(j, rng.gen_range(5..=11)));
            }
            let users: Vec<User> = (0..k_n)
                .map(|k| user(k, rng.gen_range(0..=j_n), rng.gen_range(0.0..15.0)))
                .collect();
            let gains: Vec<Vec<f64>> = (0..k_n)
                .map(|_| {
                    (0..=j_n)
                        .map(|_| 10f64.powf(rng.gen_range(-5.0..-1.0)))
                        .collect()
                })
                .collect();
            let q: Vec<Vec<u32>> = (0..k_n)
                .map(|_| (0..=j_n).map(|_| rng.gen_range(1..=q_max)).collect())
                .collect();
            if let Ok(s) = Scenario::new(stations, users, gains, q, 1.0, 0.0) {
                return s;
            }
        }
    }

    fn toy_scenario() -> Scenario {
        // Three interferers at one SBS with power order 5 > 3 > 1.
        let stations = vec![mbs(30), sbs(1, 5)];
        let mut users = vec![
            user(0, 0, 0.0),
            user(1, 0, 0.0),
            user(2, 0, 0.0),
            user(3, 1, 0.0),
        ];
        users[0].tx_power_dbm = 10.0 * 5f64.log10(); // linear 5
        users[1].tx_power_dbm = 10.0 * 3f64.log10(); // linear 3
        users[2].tx_power_dbm = 0.0; // linear 1
        let gains = vec![
            vec![1e-3, 1.0],
            vec![1e-3, 1.0],
            vec![1e-3, 1.0],
            vec![1e-3, 1e-2],
        ];
        let q = vec![vec![1, 1]; 4];
        Scenario::new(stations, users, gains, q, 1.0, 0.0).unwrap()
    }

    #[test]
    fn heuristic_ranks_by_received_power() {
        // SBS budget: dof 5 − serve 1 − noise 1 = 3 nulls... shrink to 2 by
        // using dof 4.
        let mut s = toy_scenario();
        s.bss[1].dof_budget = 4; // budget for exactly 2 unit-q nulls
        let rep = solve_heuristic(&s).unwrap();
        assert!(rep.assignment.get(0, 1), "strongest interferer nulled");
        assert!(rep.assignment.get(1, 1), "second interferer nulled");
        assert!(!rep.assignment.get(2, 1), "weakest interferer skipped");
    }

    #[test]
    fn heuristic_zero_budget_is_no_nulling() {
        let mut s = toy_scenario();
        s.bss[0].dof_budget = 4; // serve 3 MUs with q=1 plus noise: no slack
        s.bss[1].dof_budget = 2;
        let rep = solve_heuristic(&s).unwrap();
        assert_eq!(rep.assignment.count_ones(), 0);
    }

    #[test]
    fn heuristic_ample_budget_nulls_everything() {
        let s = toy_scenario(); // budgets 30 and 5 dwarf the demand
        let rep = solve_heuristic(&s).unwrap();
        // Every non-served pair gets nulled.
        for k in 0..4 {
            for j in 0..2 {
                assert_eq!(rep.assignment.get(k, j), !s.is_served_by(k, j));
            }
        }
    }

    #[test]
    fn brute_force_dominates_every_other_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let opts = SolveOptions::default();
        for _ in 0..60 {
            let s = random_scenario(&mut rng, 4, 2, 2);
            let bf = solve_brute_force(&s).unwrap();
            let cp = solve_cutting_plane_report(&s, &opts).unwrap();
            let h = solve_heuristic(&s).unwrap();
            let z = solve_no_nulling(&s).unwrap();
            assert!(bf.objective_exact_rate >= cp.objective_exact_rate - 1e-9);
            assert!(bf.objective_exact_rate >= h.objective_exact_rate - 1e-9);
            assert!(bf.objective_exact_rate >= z.objective_exact_rate - 1e-9);
            assert!(h.objective_exact_rate >= z.objective_exact_rate - 1e-9);
        }
    }

    #[test]
    fn per_station_probability_path_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let opts = SolveOptions {
            per_station_probability: true,
            ..SolveOptions::default()
        };
        for _ in 0..10 {
            let s = random_scenario(&mut rng, 5, 2, 3);
            let rep = solve_cutting_plane_report(&s, &opts).unwrap();
            assert!(rep.assignment.validate(&s).is_ok());
        }
    }

    #[test]
    fn brute_force_guard_rejects_large_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_scenario(&mut rng, 1, 1, 1);
        let _ = s;
        // 12 users × 2 stations = 24 variables > 22.
        let stations = vec![mbs(60), sbs(1, 11)];
        let users: Vec<User> = (0..12).map(|k| user(k, 0, 0.0)).collect();
        let gains = vec![vec![1e-4, 1e-4]; 12];
        let q = vec![vec![1, 1]; 12];
        let s = Scenario::new(stations, users, gains, q, 1.0, 0.0).unwrap();
        match solve_brute_force(&s) {
            Err(OptimizerError::TooManyVariables {
                vars: 24,
                limit: 22,
            }) => {}
            other => panic!("expected TooManyVariables, got {other:?}"),
        }
    }

    #[test]
    fn single_feasible_point_is_returned() {
        // Budgets exactly cover serving plus noise: only all-zeros feasible.
        let stations = vec![mbs(2), sbs(1, 2)];
        let users = vec![user(0, 0, 0.0), user(1, 1, 0.0)];
        let gains = vec![vec![1e-3, 1e-3], vec![1e-4, 1e-2]];
        let q = vec![vec![1, 1]; 2];
        let s = Scenario::new(stations, users, gains, q, 1.0, 0.0).unwrap();
        let rep = solve_brute_force(&s).unwrap();
        assert_eq!(rep.assignment.count_ones(), 0);
    }

    #[test]
    fn cutting_plane_assignment_is_feasible_and_reports_surrogate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = random_scenario(&mut rng, 5, 2, 3);
            let rep = solve_cutting_plane_report(&s, &SolveOptions::default()).unwrap();
            assert!(rep.assignment.validate(&s).is_ok());
            assert!(rep.objective_linearized.is_some());
        }
    }

    #[test]
    fn build_linearized_program_assembles_the_documented_structure() {
        // Two users, one small cell, unit multipath.
        let stations = vec![mbs(10), sbs(1, 5)];
        let users = vec![user(0, 0, 0.0), user(1, 1, 0.0)];
        let gains = vec![vec![1e-3, 1e-4], vec![1e-5, 1e-2]];
        let q = vec![vec![1, 1]; 2];
        let s = Scenario::new(stations, users, gains, q, 1.0, 0.0).unwrap();
        let ip = build_linearized_program(&s, &SolveOptions::default()).unwrap();
        ip.validate().unwrap();
        assert_eq!(ip.a.len(), 6);
        assert_eq!(ip.a[0], vec![1, 1, 0, 0]);
        assert_eq!(ip.a[1], vec![0, 0, 1, 1]);
        // Budgets: D − serving load − 1 per station.
        assert_eq!(ip.b[0], (10 - 1 - 1) as f64);
        assert_eq!(ip.b[1], (5 - 1 - 1) as f64);
        // Bound rows forbid nulling served users.
        assert_eq!(&ip.b[2..], &[0.0, 1.0, 1.0, 0.0]);
        // Improving flips get positive objective weight after negation.
        let k_users = s.user_count();
        assert!(ip.c[variable_index(1, 0, k_users)] > 0.0);
        assert!(ip.c[variable_index(0, 1, k_users)] > 0.0);
    }

    #[test]
    fn unimodular_handles_fractional_capacity() {
        // Spare budget 5 with two paths per link: capacity 5/2 floors to 2,
        // and the LP vertex stays integral.
        let stations = vec![mbs(30), sbs(1, 8)];
        let users = vec![
            user(0, 0, 8.0),
            user(1, 0, 4.0),
            user(2, 0, 0.0),
            user(3, 1, 0.0),
        ];
        let gains = vec![
            vec![1e-3, 2e-3],
            vec![1e-3, 1e-3],
            vec![1e-3, 5e-4],
            vec![1e-4, 1e-2],
        ];
        let q = vec![vec![1, 2]; 4]; // L_0 = 1, L_1 = 2
        let s = Scenario::new(stations, users, gains, q, 1.0, 0.0).unwrap();
        assert_eq!(s.nulling_budget(1), 5);
        let opts = SolveOptions::default();
        let uni = solve_unimodular(&s, &opts).unwrap();
        // At most two of the three macro users fit into the floored budget.
        let nulled_at_sbs: usize = (0..4).filter(|&k| uni.assignment.get(k, 1)).count();
        assert!(nulled_at_sbs <= 2);
        let cp = solve_cutting_plane_report(&s, &opts).unwrap();
        assert_eq!(
            uni.objective_linearized.unwrap(),
            cp.objective_linearized.unwrap()
        );
    }

    #[test]
    fn unimodular_requires_fixed_multipath() {
        let mut s = toy_scenario();
        s.multipath[0][1] = 2; // mix path counts at BS 1
        match solve_unimodular(&s, &SolveOptions::default()) {
            Err(OptimizerError::NotSpecialCase { j: 1 }) => {}
            other => panic!("expected NotSpecialCase, got {other:?}"),
        }
    }

    #[test]
    fn unimodular_matches_cutting_plane_on_unit_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let opts = SolveOptions::default();
        for _ in 0..30 {
            let s = random_scenario(&mut rng, 5, 2, 1); // q ≡ 1 everywhere
            let uni = solve_unimodular(&s, &opts).unwrap();
            let cp = solve_cutting_plane_report(&s, &opts).unwrap();
            let (a, b) = (
                uni.objective_linearized.unwrap(),
                cp.objective_linearized.unwrap(),
            );
            assert!((a - b).abs() < 1e-9, "unimodular {a} vs cutting plane {b}");
        }
    }

    #[test]
    fn p4_bound_dominates_enumerated_surrogates() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let opts = SolveOptions::default();
        for _ in 0..25 {
            let s = random_scenario(&mut rng, 4, 2, 2);
            let outcome = solve_upper_bound_p4(&s, &opts).unwrap();
            let mut max_violation = f64::NEG_INFINITY;
            enumerate_assignments(&s, |n| {
                let v = product_surrogate_value(&s, n, opts.p4_max_order, opts.max_terms).unwrap();
                max_violation = max_violation.max(v - outcome.surrogate_bound);
            })
            .unwrap();
            assert!(
                max_violation <= 1e-9,
                "surrogate exceeded the bound by {max_violation}"
            );
        }
    }

    #[test]
    fn p4_and_p3_coefficients_agree_at_unit_probability_order_one() {
        // With only order-1 monomials retained the two weight rules assign
        // identical magnitudes; the programs differ by orientation only.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_scenario(&mut rng, 4, 2, 2);
        let opts = SolveOptions {
            max_order: 1,
            p4_max_order: 1,
            ..SolveOptions::default()
        };
        let p3 = build_linearized_program(&s, &opts).unwrap();
        let (p4, _) = build_upper_bound_program(&s, &opts).unwrap();
        for (a, b) in p3.c.iter().zip(&p4.c) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn dispatcher_covers_every_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let s = random_scenario(&mut rng, 3, 1, 1);
        let opts = SolveOptions::default();
        for m in Method::ALL {
            let rep = solve(&s, m, &opts).unwrap_or_else(|e| panic!("{m} failed: {e}"));
            assert_eq!(rep.method, m);
            assert!(rep.assignment.validate(&s).is_ok());
            assert!(rep.objective_exact_rate >= 0.0);
        }
    }
}
