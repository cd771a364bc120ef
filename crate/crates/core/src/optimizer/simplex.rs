//! Dense two-phase primal simplex for `max c·x  s.t.  Ax ≤ b, x ≥ 0`.
//!
//! Pivoting uses the largest-coefficient rule and falls back to Bland's
//! rule after a run of degenerate pivots, which prevents cycling. The
//! returned basis indexes structural variables `0..n` and slack variables
//! `n..n+m`, which downstream exact arithmetic uses to reconstruct tableau
//! rows for cut generation.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SimplexError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_before_bland: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            tol: 1e-9,
            stall_before_bland: 40,
        }
    }
}

/// An optimal basic feasible solution.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic column per row: structural `0..n`, slack `n..n+m`.
    pub basis: Vec<usize>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    zrow: Vec<f64>,
    zval: f64,
    basis: Vec<usize>,
    width: usize,
    enterable: Vec<bool>,
    tol: f64,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..self.width {
                    self.rows[i][j] -= factor * pivot_row[j];
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= factor * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -self.tol {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let zfac = self.zrow[col];
        if zfac != 0.0 {
            for j in 0..self.width {
                self.zrow[j] -= zfac * pivot_row[j];
            }
            self.zrow[col] = 0.0;
            self.zval -= zfac * pivot_rhs;
        }
        self.basis[row] = col;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        if bland {
            (0..self.width).find(|&j| self.enterable[j] && self.zrow[j] < -self.tol)
        } else {
            let mut best = None;
            let mut best_val = -self.tol;
            for j in 0..self.width {
                if self.enterable[j] && self.zrow[j] < best_val {
                    best_val = self.zrow[j];
                    best = Some(j);
                }
            }
            best
        }
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][col];
            if a > self.tol {
                let ratio = self.rhs[i] / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        // Smallest ratio; ties go to the smallest basic index,
                        // which combines with Bland's rule against cycling.
                        if ratio < br - self.tol
                            || (ratio < br + self.tol && self.basis[i] < self.basis[bi])
                        {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs pivots until optimality; returns false on iteration exhaustion.
    fn optimize(&mut self, opts: &SimplexOptions) -> Result<(), SimplexError> {
        let mut stall = 0usize;
        let mut bland = false;
        for _ in 0..opts.max_iters {
            let Some(col) = self.entering(bland) else {
                return Ok(());
            };
            let Some(row) = self.leaving(col) else {
                return Err(SimplexError::Unbounded);
            };
            let degenerate = self.rhs[row].abs() <= self.tol;
            self.pivot(row, col);
            if degenerate {
                stall += 1;
                if stall > opts.stall_before_bland {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
        Err(SimplexError::IterationLimit)
    }
}

/// Solves `max c·x  s.t.  Ax ≤ b, x ≥ 0`. `banned` marks structural
/// variables pinned at zero (used by branch-and-bound).
pub fn simplex_solve_masked(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    banned: Option<&[bool]>,
    opts: &SimplexOptions,
) -> Result<LpSolution, SimplexError> {
    let n = c.len();
    let m = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);

    let negative_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative_rows.len();
    let width = n + m + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_col = n + m;
    for i in 0..m {
        let mut row = vec![0.0; width];
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = flip * a[i][j];
        }
        row[n + i] = flip;
        if flip < 0.0 {
            row[art_col] = 1.0;
            basis.push(art_col);
            art_col += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
        rhs.push(flip * b[i]);
    }

    let mut enterable = vec![true; width];
    if let Some(mask) = banned {
        for (j, &is_banned) in mask.iter().enumerate() {
            if is_banned {
                enterable[j] = false;
            }
        }
    }

    let mut t = Tableau {
        rows,
        rhs,
        zrow: vec![0.0; width],
        zval: 0.0,
        basis,
        width,
        enterable,
        tol: opts.tol,
    };

    if n_art > 0 {
        // Phase 1: maximize −Σ artificials; reduced costs from the basis.
        for j in 0..width {
            let mut z = 0.0;
            for (i, row) in t.rows.iter().enumerate() {
                if t.basis[i] >= n + m {
                    z -= row[j];
                }
            }
            let cj = if j >= n + m { -1.0 } else { 0.0 };
            t.zrow[j] = z - cj;
        }
        t.zval = -t
            .rhs
            .iter()
            .zip(&t.basis)
            .filter(|(_, &b)| b >= n + m)
            .map(|(r, _)| *r)
            .sum::<f64>();
        t.optimize(opts)?;
        if t.zval < -1e-7 {
            return Err(SimplexError::Infeasible);
        }
        // Pivot remaining artificials out, dropping redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n + m {
                let col = (0..n + m).find(|&j| t.enterable[j] && t.rows[i][j].abs() > opts.tol);
                match col {
                    Some(c) => t.pivot(i, c),
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for j in n + m..width {
            t.enterable[j] = false;
        }
    }

    // Phase 2 reduced costs for the real objective.
    let cost = |j: usize| if j < n { c[j] } else { 0.0 };
    for j in 0..width {
        let mut z = 0.0;
        for (i, row) in t.rows.iter().enumerate() {
            let cb = cost(t.basis[i]);
            if cb != 0.0 {
                z += cb * row[j];
            }
        }
        t.zrow[j] = z - cost(j);
    }
    t.zval = t.rhs.iter().zip(&t.basis).map(|(r, &b)| r * cost(b)).sum();
    t.optimize(opts)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rhs[i];
        }
    }
    Ok(LpSolution {
        x,
        objective: t.zval,
        basis: t.basis,
    })
}

/// Solves `max c·x  s.t.  Ax ≤ b, x ≥ 0` with every variable allowed.
pub fn simplex_solve(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    opts: &SimplexOptions,
) -> Result<LpSolution, SimplexError> {
    simplex_solve_masked(c, a, b, None, opts)
}
