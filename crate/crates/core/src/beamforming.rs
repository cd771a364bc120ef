//! Co-array beamforming weight design: pass a set of desired directions at
//! unit gain while nulling a set of interference directions (and optionally
//! the noise term), then evaluate the resulting beam pattern.
//!
//! The constraint system stacks conjugate-transposed co-array manifold
//! columns, one row per constrained direction, plus the flattened-identity
//! row when noise is nulled. The system is generally underdetermined; we
//! return the minimum-norm least-squares solution, which limits white-noise
//! gain among all exact solutions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::coarray::{coarray_manifold_column, flattened_identity, ArrayGeometry, SourceEnsemble};

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("pattern constraints need {rows} rows but the co-array supports at most {dof}")]
    DofExceeded { rows: usize, dof: usize },
    #[error("desired and null directions must be pairwise distinct")]
    DuplicateDirection,
    #[error("at least one desired direction is required for a solve")]
    NoDesiredDirection,
    #[error("unachievable pattern: solve residual {residual:.3e} exceeds tolerance")]
    UnachievablePattern { residual: f64 },
}

/// Directions the pattern must pass (`B = 1`) and null (`B = 0`).
#[derive(Debug, Clone)]
pub struct NullingSpec {
    pub desired_dirs: Vec<f64>,
    pub null_dirs: Vec<f64>,
    /// When set, one extra row forces the noise weight `w^H·vec(I)` to zero.
    pub null_noise: bool,
}

impl NullingSpec {
    pub fn new(desired_dirs: Vec<f64>, null_dirs: Vec<f64>) -> Result<Self, BeamformingError> {
        let spec = Self {
            desired_dirs,
            null_dirs,
            null_noise: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn without_noise_null(mut self) -> Self {
        self.null_noise = false;
        self
    }

    fn validate(&self) -> Result<(), BeamformingError> {
        let all: Vec<f64> = self
            .desired_dirs
            .iter()
            .chain(self.null_dirs.iter())
            .copied()
            .collect();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                if all[i] == all[j] {
                    return Err(BeamformingError::DuplicateDirection);
                }
            }
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.desired_dirs.len() + self.null_dirs.len() + usize::from(self.null_noise)
    }
}

/// Solved co-array weights along with the achieved residual norm.
/// A residual below the solve tolerance certifies the pattern constraints.
#[derive(Debug, Clone)]
pub struct CoArrayWeights {
    pub w: Vec<Complex64>,
    pub residual: f64,
}

/// Tolerances for the weight solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Residual above which a rank-deficient system is reported unachievable.
    pub residual_tol: f64,
    /// Certified null depth: |B(η)| stays below this when the solve residual
    /// is within `residual_tol`.
    pub null_tol: f64,
    /// Relative singular-value cutoff for the pseudo-inverse.
    pub sv_rcond: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            null_tol: 1e-6,
            sv_rcond: 1e-12,
        }
    }
}

/// Stacks the pattern constraints into `(M, rhs)` with one row per desired
/// direction, one per null direction, and the noise row last.
pub fn build_constraint_system(
    geometry: &ArrayGeometry,
    spec: &NullingSpec,
) -> Result<(DMatrix<Complex64>, DVector<f64>), BeamformingError> {
    spec.validate()?;
    let n = geometry.sensor_count();
    let dof = n * n;
    let rows = spec.row_count();
    if rows > dof {
        return Err(BeamformingError::DofExceeded { rows, dof });
    }
    let mut m = DMatrix::<Complex64>::zeros(rows, dof);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for &theta in &spec.desired_dirs {
        let col = coarray_manifold_column(geometry, theta);
        for (c, v) in col.iter().enumerate() {
            m[(r, c)] = v.conj();
        }
        rhs[r] = 1.0;
        r += 1;
    }
    for &theta in &spec.null_dirs {
        let col = coarray_manifold_column(geometry, theta);
        for (c, v) in col.iter().enumerate() {
            m[(r, c)] = v.conj();
        }
        r += 1;
    }
    if spec.null_noise {
        for (c, v) in flattened_identity(n).iter().enumerate() {
            m[(r, c)] = v.conj();
        }
    }
    Ok((m, rhs))
}

/// Minimum-norm least-squares weights for the pattern constraints.
pub fn solve_weights(
    geometry: &ArrayGeometry,
    spec: &NullingSpec,
    opts: &SolveOptions,
) -> Result<CoArrayWeights, BeamformingError> {
    if spec.desired_dirs.is_empty() {
        return Err(BeamformingError::NoDesiredDirection);
    }
    let (m, rhs) = build_constraint_system(geometry, spec)?;
    let rhs_c =
        DVector::<Complex64>::from_iterator(rhs.len(), rhs.iter().map(|&v| Complex64::new(v, 0.0)));
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = (max_sv * opts.sv_rcond).max(f64::MIN_POSITIVE);
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= eps);
    let w = svd
        .solve(&rhs_c, eps)
        .expect("svd computed with singular vectors");
    let residual = (&m * &w - &rhs_c).norm();
    if rank_deficient && residual > opts.residual_tol {
        return Err(BeamformingError::UnachievablePattern { residual });
    }
    Ok(CoArrayWeights {
        w: w.iter().copied().collect(),
        residual,
    })
}

/// Beam pattern `B(θ) = w^H (a*(θ) ⊗ a(θ))`.
pub fn beam_pattern(geometry: &ArrayGeometry, w: &[Complex64], theta: f64) -> Complex64 {
    let col = coarray_manifold_column(geometry, theta);
    assert_eq!(w.len(), col.len(), "weight length must be N^2");
    w.iter()
        .zip(col.iter())
        .map(|(wi, ci)| wi.conj() * ci)
        .sum()
}

/// Output power of the filtered co-array signal: the sources weighted by
/// their beam-pattern values plus the noise term `σ_n²·w^H·vec(I)`. The
/// real part is returned; for weights from a valid nulling solve this is
/// the sum of desired-source powers up to the residual.
pub fn filtered_power(geometry: &ArrayGeometry, w: &[Complex64], ensemble: &SourceEnsemble) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &theta) in ensemble.directions.iter().enumerate() {
        acc += beam_pattern(geometry, w, theta) * ensemble.powers[i];
    }
    let n = geometry.sensor_count();
    let noise_gain: Complex64 = flattened_identity(n)
        .iter()
        .zip(w.iter())
        .map(|(oi, wi)| wi.conj() * oi)
        .sum();
    acc += ensemble.noise_power * noise_gain;
    acc.re
}
