//! Exact rational reconstruction of simplex tableau rows.
//!
//! Gomory cuts derived from floating-point tableaus can be invalid, so the
//! cut generator re-derives the needed row of `B⁻¹` exactly from the final
//! basis and the original integer constraint data. The linear solves run
//! fraction-free (Bareiss elimination) over `i128`, escalating to `BigInt`
//! on overflow; back-substitution produces exact rationals.
//!
//! The basis of an `Ax ≤ b` program is mostly slack columns, so the solves
//! reduce to a square system over only the rows whose slack is nonbasic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Integer arithmetic that reports overflow instead of wrapping.
trait ExactInt: Clone + PartialEq {
    fn from_i128(v: i128) -> Self;
    fn is_zero_(&self) -> bool;
    fn mul_(&self, other: &Self) -> Option<Self>;
    fn sub_(&self, other: &Self) -> Option<Self>;
    fn exact_div(&self, other: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;
}

impl ExactInt for i128 {
    fn from_i128(v: i128) -> Self {
        v
    }
    fn is_zero_(&self) -> bool {
        *self == 0
    }
    fn mul_(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }
    fn sub_(&self, other: &Self) -> Option<Self> {
        self.checked_sub(*other)
    }
    fn exact_div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl ExactInt for BigInt {
    fn from_i128(v: i128) -> Self {
        BigInt::from(v)
    }
    fn is_zero_(&self) -> bool {
        self.is_zero()
    }
    fn mul_(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn sub_(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
    fn exact_div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

enum SolveOutcome {
    Solved(Vec<BigRational>),
    Singular,
    Overflow,
}

/// Fraction-free Gaussian elimination on the augmented system, then exact
/// rational back-substitution.
fn bareiss_solve<T: ExactInt>(mut m: Vec<Vec<T>>) -> SolveOutcome {
    let n = m.len();
    if n == 0 {
        return SolveOutcome::Solved(Vec::new());
    }
    debug_assert!(m.iter().all(|r| r.len() == n + 1));
    let mut prev = T::from_i128(1);
    for k in 0..n {
        let pivot_row = (k..n).find(|&p| !m[p][k].is_zero_());
        let Some(p) = pivot_row else {
            return SolveOutcome::Singular;
        };
        m.swap(k, p);
        for i in k + 1..n {
            for j in k + 1..=n {
                let lhs = match m[k][k].mul_(&m[i][j]) {
                    Some(v) => v,
                    None => return SolveOutcome::Overflow,
                };
                let rhs = match m[i][k].mul_(&m[k][j]) {
                    Some(v) => v,
                    None => return SolveOutcome::Overflow,
                };
                let num = match lhs.sub_(&rhs) {
                    Some(v) => v,
                    None => return SolveOutcome::Overflow,
                };
                m[i][j] = num.exact_div(&prev);
            }
            m[i][k] = T::from_i128(0);
        }
        prev = m[k][k].clone();
    }
    // Back-substitution in rationals on the upper-triangular system.
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from(m[i][n].to_bigint());
        for j in i + 1..n {
            acc -= BigRational::from(m[i][j].to_bigint()) * &x[j];
        }
        x[i] = acc / BigRational::from(m[i][i].to_bigint());
    }
    SolveOutcome::Solved(x)
}

/// Solves the square integer system exactly. `None` means singular.
fn solve_int_system(matrix: &[Vec<i128>], rhs: &[i128]) -> Option<Vec<BigRational>> {
    let n = matrix.len();
    let mut aug: Vec<Vec<i128>> = Vec::with_capacity(n);
    for (row, &r) in matrix.iter().zip(rhs) {
        let mut v = row.clone();
        v.push(r);
        aug.push(v);
    }
    match bareiss_solve(aug) {
        SolveOutcome::Solved(x) => Some(x),
        SolveOutcome::Singular => None,
        SolveOutcome::Overflow => {
            let aug_big: Vec<Vec<BigInt>> = matrix
                .iter()
                .zip(rhs)
                .map(|(row, &r)| {
                    let mut v: Vec<BigInt> = row.iter().map(|&e| BigInt::from(e)).collect();
                    v.push(BigInt::from(r));
                    v
                })
                .collect();
            match bareiss_solve(aug_big) {
                SolveOutcome::Solved(x) => Some(x),
                _ => None,
            }
        }
    }
}

/// Splits the basis into rows covered by a basic slack (whose multiplier
/// component is immediate) and the residual square system over the rest.
struct ReducedBasis {
    /// Rows without a basic slack, in ascending order.
    open_rows: Vec<usize>,
    /// Basis positions holding structural variables.
    struct_positions: Vec<usize>,
    /// Row covered by the basic slack at each basis position, if any.
    slack_row_of_position: Vec<Option<usize>>,
}

fn reduce_basis(n_struct: usize, n_rows: usize, basis: &[usize]) -> ReducedBasis {
    let mut covered = vec![false; n_rows];
    let mut slack_row_of_position = vec![None; basis.len()];
    let mut struct_positions = Vec::new();
    for (pos, &col) in basis.iter().enumerate() {
        if col >= n_struct {
            let row = col - n_struct;
            covered[row] = true;
            slack_row_of_position[pos] = Some(row);
        } else {
            struct_positions.push(pos);
        }
    }
    let open_rows: Vec<usize> = (0..n_rows).filter(|&r| !covered[r]).collect();
    ReducedBasis {
        open_rows,
        struct_positions,
        slack_row_of_position,
    }
}

/// Row `position` of `B⁻¹` as exact rationals, one per constraint row.
/// `rows` are the integer constraint rows (originals plus cuts) and the
/// basis indexes `[A | I]` columns. Returns `None` on a singular basis.
pub(crate) fn inverse_row(
    rows: &[Vec<i64>],
    n_struct: usize,
    basis: &[usize],
    position: usize,
) -> Option<Vec<BigRational>> {
    let m = rows.len();
    let red = reduce_basis(n_struct, m, basis);
    let mut y: Vec<BigRational> = vec![BigRational::zero(); m];
    // Slack-covered rows contribute a unit only if they sit at `position`.
    if let Some(r) = red.slack_row_of_position[position] {
        y[r] = BigRational::one();
    }
    let k = red.open_rows.len();
    if k > 0 {
        let mut matrix = vec![vec![0i128; k]; k];
        let mut rhs = vec![0i128; k];
        for (eq, &pos) in red.struct_positions.iter().enumerate() {
            let var = basis[pos];
            for (uc, &row) in red.open_rows.iter().enumerate() {
                matrix[eq][uc] = rows[row][var] as i128;
            }
            let mut r: i128 = if pos == position { 1 } else { 0 };
            if let Some(slack_row) = red.slack_row_of_position[position] {
                r -= rows[slack_row][var] as i128;
            }
            rhs[eq] = r;
        }
        let sol = solve_int_system(&matrix, &rhs)?;
        for (uc, &row) in red.open_rows.iter().enumerate() {
            y[row] = sol[uc].clone();
        }
    }
    Some(y)
}

/// Exact values of the basic variables `B⁻¹·rhs`, one per basis position.
pub(crate) fn basic_values(
    rows: &[Vec<i64>],
    n_struct: usize,
    basis: &[usize],
    rhs: &[BigRational],
) -> Option<Vec<BigRational>> {
    let m = rows.len();
    let red = reduce_basis(n_struct, m, basis);
    let k = red.open_rows.len();
    // Structural basic values come from the open-row equations. The rhs
    // may be rational, so scale to integers by the common denominator.
    let mut struct_vals: Vec<BigRational> = Vec::with_capacity(k);
    if k > 0 {
        let mut den = BigInt::one();
        for &row in &red.open_rows {
            den = num_integer::lcm(den, rhs[row].denom().clone());
        }
        let den_rat = BigRational::from(den.clone());
        let to_i128 = |v: &BigInt| -> Option<i128> { TryInto::<i128>::try_into(v.clone()).ok() };
        let mut matrix = vec![vec![0i128; k]; k];
        let mut rvec = vec![0i128; k];
        let mut fits = true;
        for (eq, &row) in red.open_rows.iter().enumerate() {
            for (vc, &pos) in red.struct_positions.iter().enumerate() {
                matrix[eq][vc] = rows[row][basis[pos]] as i128;
            }
            let scaled = (&rhs[row] * &den_rat).to_integer();
            match to_i128(&scaled) {
                Some(v) => rvec[eq] = v,
                None => {
                    fits = false;
                    break;
                }
            }
        }
        let sol = if fits {
            solve_int_system(&matrix, &rvec)?
        } else {
            let aug: Vec<Vec<BigInt>> = red
                .open_rows
                .iter()
                .map(|&row| {
                    let mut v: Vec<BigInt> = red
                        .struct_positions
                        .iter()
                        .map(|&pos| BigInt::from(rows[row][basis[pos]]))
                        .collect();
                    v.push((&rhs[row] * &den_rat).to_integer());
                    v
                })
                .collect();
            match bareiss_solve(aug) {
                SolveOutcome::Solved(x) => x,
                _ => return None,
            }
        };
        struct_vals = sol.into_iter().map(|v| v / &den_rat).collect();
    }
    let mut out = vec![BigRational::zero(); basis.len()];
    for (vc, &pos) in red.struct_positions.iter().enumerate() {
        out[pos] = struct_vals[vc].clone();
    }
    // Slack values follow by substitution on their own rows.
    for (pos, maybe_row) in red.slack_row_of_position.iter().enumerate() {
        if let Some(row) = *maybe_row {
            let mut acc = rhs[row].clone();
            for (vc, &spos) in red.struct_positions.iter().enumerate() {
                let coef = rows[row][basis[spos]];
                if coef != 0 {
                    acc -= BigRational::from(BigInt::from(coef)) * &struct_vals[vc];
                }
            }
            out[pos] = acc;
        }
    }
    Some(out)
}

/// Fractional part in `[0, 1)`.
pub(crate) fn fractional_part(v: &BigRational) -> BigRational {
    v - v.floor()
}

/// A cutting plane `coeffs · x ≤ rhs_floor` with integer data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CutRow {
    pub coeffs: Vec<i64>,
    pub rhs_floor: i64,
}

/// Derives the rounded nonnegative-combination cut from the exact inverse
/// row: multipliers are the fractional parts of `y`, the coefficient vector
/// is floored component-wise, and the right-hand side is floored. Valid for
/// every nonnegative integer point of `rows·x ≤ rhs`; violated by the
/// current vertex exactly when the basic value is fractional.
pub(crate) fn chvatal_gomory_cut(
    rows: &[Vec<i64>],
    rhs: &[BigRational],
    y: &[BigRational],
    n_struct: usize,
) -> Option<CutRow> {
    let fracs: Vec<BigRational> = y.iter().map(fractional_part).collect();
    let mut coeffs = Vec::with_capacity(n_struct);
    for j in 0..n_struct {
        let mut acc = BigRational::zero();
        for (i, f) in fracs.iter().enumerate() {
            if !f.is_zero() {
                let a = rows[i][j];
                if a != 0 {
                    acc += f * BigRational::from(BigInt::from(a));
                }
            }
        }
        let floored = acc.floor().to_integer();
        coeffs.push(TryInto::<i64>::try_into(floored).ok()?);
    }
    let mut b_star = BigRational::zero();
    for (i, f) in fracs.iter().enumerate() {
        if !f.is_zero() {
            b_star += f * &rhs[i];
        }
    }
    let rhs_floor = TryInto::<i64>::try_into(b_star.floor().to_integer()).ok()?;
    Some(CutRow { coeffs, rhs_floor })
}

/// Exact check that a rational is integral.
pub(crate) fn is_integral(v: &BigRational) -> bool {
    v.denom().is_one() || v.numer().is_zero()
}

/// Converts an f64 (exactly representable as a dyadic rational) for exact
/// arithmetic against the integer rows.
pub(crate) fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite rhs required")
}
