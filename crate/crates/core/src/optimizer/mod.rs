//! The nulling-assignment optimization chain.
//!
//! The exact sum-rate objective is approximated in the high-SINR regime by
//! a product of per-user interference denominators ([`poly::interference_product`]),
//! expanded into a truncated multilinear polynomial, linearized, and solved
//! as a 0-1 program by Gomory cutting planes ([`cutting_plane`]). A
//! fixed-multipath special case admits a single LP solve
//! ([`solve_unimodular`]); an arithmetic-mean linearization yields a
//! surrogate upper bound ([`solve_upper_bound_p4`]); a greedy heuristic and
//! a brute-force oracle serve as baselines.

pub mod cutting_plane;
mod exact;
mod methods;
pub mod poly;
pub mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hetnet::HetnetError;

pub use cutting_plane::{objective_value, solve_cutting_plane, CutLimits, IlpSolution};
pub use methods::{
    assignment_from_vector, brute_force_product_extrema, build_linearized_program,
    build_upper_bound_program, product_surrogate_value, solve, solve_brute_force,
    solve_cutting_plane_report, solve_heuristic, solve_no_nulling, solve_unimodular,
    solve_upper_bound_p4, SolveOptions, UpperBoundOutcome, BRUTE_FORCE_VARIABLE_LIMIT,
};
pub use poly::{
    expand_objective, expand_product, interference_product, interference_product_neg_log,
    linearize, nulling_probability, nulling_probability_per_station, variable_index,
    PolynomialObjective, WeightRule,
};
pub use simplex::{simplex_solve, LpSolution, SimplexError, SimplexOptions};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("integer program is infeasible")]
    Infeasible,
    #[error("LP solve failed: {0}")]
    Simplex(SimplexError),
    #[error("truncated expansion needs about {estimated} monomials, above the limit of {limit}; use a smaller instance or a lower max_order")]
    ExpansionTooLarge { estimated: usize, limit: usize },
    #[error("brute force is limited to {limit} variables, instance has {vars}")]
    TooManyVariables { vars: usize, limit: usize },
    #[error("not in the fixed-multipath special case: BS {j} sees mixed multipath counts")]
    NotSpecialCase { j: usize },
    #[error(
        "LP relaxation of the unimodular program came back fractional (deviation {max_frac:.3e})"
    )]
    UnimodularIntegralityFailure { max_frac: f64 },
    #[error("branch-and-bound node budget of {nodes} exhausted")]
    BranchAndBoundBudget { nodes: usize },
    #[error("singular basis during exact tableau reconstruction")]
    SingularBasis,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("malformed integer program text: {0}")]
    ParseError(String),
    #[error(transparent)]
    Hetnet(#[from] HetnetError),
}

/// Which solver produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NoNulling,
    Heuristic,
    CuttingPlane,
    LpUnimodular,
    BruteForce,
    UpperBoundP4,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::NoNulling,
        Method::Heuristic,
        Method::CuttingPlane,
        Method::LpUnimodular,
        Method::BruteForce,
        Method::UpperBoundP4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::NoNulling => "no_nulling",
            Method::Heuristic => "heuristic",
            Method::CuttingPlane => "cutting_plane",
            Method::LpUnimodular => "lp_unimodular",
            Method::BruteForce => "brute_force",
            Method::UpperBoundP4 => "upper_bound_p4",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// The linear 0-1 program `max c·x  s.t.  A x ≤ b` over the column-stacked
/// nulling variables (user index fastest, station outer). `A` stacks one
/// multipath-weighted budget row per station over an identity block whose
/// right-hand sides forbid nulling served users.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerProgram {
    pub users: usize,
    pub stations: usize,
    pub c: Vec<f64>,
    pub a: Vec<Vec<i64>>,
    pub b: Vec<f64>,
}

impl IntegerProgram {
    /// Assembles the block structure from per-station budget rows.
    /// `q[j][k]` is the multipath weight, `budgets[j]` the spare DoF, and
    /// `served[j][k]` pins variable (k, j) to zero.
    pub fn from_knapsack_rows(
        users: usize,
        stations: usize,
        c: Vec<f64>,
        q: &[Vec<i64>],
        budgets: &[f64],
        served: &[Vec<bool>],
    ) -> Self {
        let n = users * stations;
        debug_assert_eq!(c.len(), n);
        let mut a = Vec::with_capacity(stations + n);
        let mut b = Vec::with_capacity(stations + n);
        for j in 0..stations {
            let mut row = vec![0i64; n];
            for k in 0..users {
                row[j * users + k] = q[j][k];
            }
            a.push(row);
            b.push(budgets[j]);
        }
        for j in 0..stations {
            for k in 0..users {
                let mut row = vec![0i64; n];
                row[j * users + k] = 1;
                a.push(row);
                b.push(if served[j][k] { 0.0 } else { 1.0 });
            }
        }
        Self {
            users,
            stations,
            c,
            a,
            b,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.users * self.stations
    }

    pub fn num_rows(&self) -> usize {
        self.a.len()
    }

    pub fn var_index(&self, k: usize, j: usize) -> usize {
        variable_index(k, j, self.users)
    }

    /// Checks the budget-block over identity-block shape.
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let n = self.num_vars();
        let expect_rows = self.stations + n;
        if self.a.len() != expect_rows || self.b.len() != expect_rows || self.c.len() != n {
            return Err(OptimizerError::ParseError(format!(
                "expected {expect_rows} rows over {n} columns"
            )));
        }
        for (j, row) in self.a[..self.stations].iter().enumerate() {
            if row.len() != n {
                return Err(OptimizerError::ParseError(format!(
                    "row {j} has wrong width"
                )));
            }
            for (col, &v) in row.iter().enumerate() {
                let in_block = col / self.users == j;
                if in_block && v < 1 {
                    return Err(OptimizerError::ParseError(format!(
                        "budget row {j} needs a positive weight at column {col}"
                    )));
                }
                if !in_block && v != 0 {
                    return Err(OptimizerError::ParseError(format!(
                        "budget row {j} has a nonzero entry outside its block"
                    )));
                }
            }
        }
        for (t, row) in self.a[self.stations..].iter().enumerate() {
            if row.len() != n {
                return Err(OptimizerError::ParseError(format!(
                    "bound row {t} has wrong width"
                )));
            }
            for (col, &v) in row.iter().enumerate() {
                let expect = if col == t { 1 } else { 0 };
                if v != expect {
                    return Err(OptimizerError::ParseError(format!(
                        "bound row {t} is not a unit row"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text serialization: a dimensions line `rows cols`, the
    /// objective, the constraint rows, and the bound vector.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.num_rows(), self.num_vars()));
        let joined: Vec<String> = self.c.iter().map(|v| format!("{v}")).collect();
        out.push_str(&joined.join(" "));
        out.push('\n');
        for row in &self.a {
            let joined: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&joined.join(" "));
            out.push('\n');
        }
        let joined: Vec<String> = self.b.iter().map(|v| format!("{v}")).collect();
        out.push_str(&joined.join(" "));
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OptimizerError> {
        let bad = |msg: &str| OptimizerError::ParseError(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let dims = lines.next().ok_or_else(|| bad("missing dimensions line"))?;
        let mut it = dims.split_whitespace();
        let rows: usize = it
            .next()
            .ok_or_else(|| bad("missing row count"))?
            .parse()
            .map_err(|_| bad("bad row count"))?;
        let cols: usize = it
            .next()
            .ok_or_else(|| bad("missing column count"))?
            .parse()
            .map_err(|_| bad("bad column count"))?;
        if rows <= cols {
            return Err(bad("row count must exceed column count"));
        }
        let stations = rows - cols;
        if stations == 0 || !cols.is_multiple_of(stations) {
            return Err(bad(
                "dimensions do not describe a budget-plus-identity program",
            ));
        }
        let users = cols / stations;
        let parse_f64_line = |line: &str, expect: usize| -> Result<Vec<f64>, OptimizerError> {
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            let vals = vals.map_err(|_| bad("bad float"))?;
            if vals.len() != expect {
                return Err(bad("wrong number of entries"));
            }
            Ok(vals)
        };
        let c = parse_f64_line(
            lines.next().ok_or_else(|| bad("missing objective line"))?,
            cols,
        )?;
        let mut a = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = lines.next().ok_or_else(|| bad("missing constraint row"))?;
            let vals: Result<Vec<i64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            let vals = vals.map_err(|_| bad("bad integer"))?;
            if vals.len() != cols {
                return Err(bad("wrong constraint row width"));
            }
            a.push(vals);
        }
        let b = parse_f64_line(lines.next().ok_or_else(|| bad("missing bound line"))?, rows)?;
        if lines.next().is_some() {
            return Err(bad("trailing content"));
        }
        let ip = Self {
            users,
            stations,
            c,
            a,
            b,
        };
        ip.validate()?;
        Ok(ip)
    }
}

/// Outcome of one solver run on one scenario. Rates are reported in
/// bits/s/Hz; `objective_linearized` is the solver's own surrogate value
/// where one exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub assignment: crate::hetnet::NullingAssignment,
    pub objective_linearized: Option<f64>,
    pub objective_exact_rate: f64,
    pub method: Method,
    pub cuts_added: usize,
    pub solve_time_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_assembly_matches_block_structure() {
        // Two users, one small cell (stations = 2), unit multipath.
        let q = vec![vec![1i64, 1], vec![1, 1]];
        let served = vec![vec![true, false], vec![false, true]];
        let ip = IntegerProgram::from_knapsack_rows(2, 2, vec![0.0; 4], &q, &[3.0, 4.0], &served);
        assert_eq!(ip.a.len(), 6);
        assert_eq!(ip.a[0], vec![1, 1, 0, 0]);
        assert_eq!(ip.a[1], vec![0, 0, 1, 1]);
        for t in 0..4 {
            let mut expect = vec![0i64; 4];
            expect[t] = 1;
            assert_eq!(ip.a[2 + t], expect);
        }
        assert_eq!(ip.b, vec![3.0, 4.0, 0.0, 1.0, 1.0, 0.0]);
        ip.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let q = vec![vec![2i64, 1, 3], vec![1, 1, 1]];
        let served = vec![vec![false, true, false], vec![true, false, false]];
        let ip = IntegerProgram::from_knapsack_rows(
            3,
            2,
            vec![0.5, -1.25, 2.0, 0.0, 3.5, 0.125],
            &q,
            &[5.0, 2.0],
            &served,
        );
        let text = ip.to_text();
        let back = IntegerProgram::from_text(&text).unwrap();
        assert_eq!(back, ip);
    }

    #[test]
    fn text_rejects_malformed_input() {
        assert!(IntegerProgram::from_text("").is_err());
        assert!(IntegerProgram::from_text("3 3\n1 2 3\n").is_err());
        // Dimensions that cannot come from a budget-plus-identity program.
        assert!(
            IntegerProgram::from_text("5 3\n1 2 3\n1 1 1\n1 0 0\n0 1 0\n0 0 1\n1 1\n").is_err()
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            let s = m.as_str();
            assert_eq!(s.parse::<Method>().unwrap(), m);
        }
        assert!("fancy".parse::<Method>().is_err());
    }
}
