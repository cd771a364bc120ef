//! Physical array geometry, steering vectors, and the second-order
//! difference co-array.
//!
//! Sensor positions are stored as exact integers in units of the unit
//! spacing `d` (default `d = λ/2`), so lag-set computation is exact; the
//! wavelength enters only through steering-vector phases. With
//! `unit_spacing_halves_lambda = s`, the phase of sensor `p` toward
//! direction `θ` is `π·s·p·sin θ`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoarrayError {
    #[error("array must contain at least one sensor")]
    Empty,
    #[error("sensor positions must be strictly increasing (offending index {0})")]
    NotIncreasing(usize),
    #[error("nested array levels must both be nonzero")]
    ZeroNestedLevel,
    #[error("autocorrelation input must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("source ensemble invalid: {0}")]
    BadEnsemble(String),
}

/// A linear antenna array with integer sensor positions in units of the
/// unit spacing (a multiple of half the carrier wavelength).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Unit spacing as an integer multiple of λ/2. 1 means d = λ/2.
    #[serde(default = "default_unit_spacing")]
    pub unit_spacing_halves_lambda: u32,
    /// Strictly increasing sensor positions in units of the unit spacing.
    pub positions: Vec<i64>,
}

fn default_unit_spacing() -> u32 {
    1
}

impl ArrayGeometry {
    /// Builds a geometry from raw positions, validating the invariants.
    pub fn new(positions: Vec<i64>) -> Result<Self, CoarrayError> {
        Self::with_spacing(positions, 1)
    }

    pub fn with_spacing(
        positions: Vec<i64>,
        unit_spacing_halves_lambda: u32,
    ) -> Result<Self, CoarrayError> {
        if positions.is_empty() {
            return Err(CoarrayError::Empty);
        }
        for i in 1..positions.len() {
            if positions[i] <= positions[i - 1] {
                return Err(CoarrayError::NotIncreasing(i));
            }
        }
        Ok(Self {
            unit_spacing_halves_lambda,
            positions,
        })
    }

    /// Two-level nested construction: a dense inner ULA at spacings
    /// `1..=n1` and a sparse outer ULA at positions `(n1+1)·{1..=n2}`.
    /// The resulting difference co-array is hole-free.
    pub fn nested(n1: usize, n2: usize) -> Result<Self, CoarrayError> {
        if n1 == 0 || n2 == 0 {
            return Err(CoarrayError::ZeroNestedLevel);
        }
        let mut positions: Vec<i64> = (1..=n1 as i64).collect();
        for m in 1..=n2 as i64 {
            let p = (n1 as i64 + 1) * m;
            if !positions.contains(&p) {
                positions.push(p);
            }
        }
        positions.sort_unstable();
        Self::new(positions)
    }

    pub fn sensor_count(&self) -> usize {
        self.positions.len()
    }
}

/// The difference co-array of a physical array: every pairwise position
/// difference, and the half-width of the largest hole-free central segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoArray {
    /// Sorted distinct lag values `d_i − d_j`, always symmetric about 0.
    pub lags: Vec<i64>,
    /// Largest `L` such that every lag in `−L..=L` is present.
    pub contiguous_aperture: i64,
}

impl CoArray {
    pub fn lag_count(&self) -> usize {
        self.lags.len()
    }

    /// A co-array is hole-free when its lags are exactly `−L..=L`.
    pub fn is_hole_free(&self) -> bool {
        self.lags.len() as i64 == 2 * self.contiguous_aperture + 1
    }
}

/// Enumerates all ordered pairwise differences of the sensor positions.
pub fn difference_coarray(geometry: &ArrayGeometry) -> CoArray {
    let mut lags: Vec<i64> = geometry
        .positions
        .iter()
        .flat_map(|&a| geometry.positions.iter().map(move |&b| a - b))
        .collect();
    lags.sort_unstable();
    lags.dedup();
    let present: std::collections::HashSet<i64> = lags.iter().copied().collect();
    let mut aperture = 0i64;
    while present.contains(&(aperture + 1)) && present.contains(&(-(aperture + 1))) {
        aperture += 1;
    }
    CoArray {
        lags,
        contiguous_aperture: aperture,
    }
}

/// Maximum number of distinct nonzero lags an N-sensor array can produce.
pub fn max_dof(n_sensors: usize) -> usize {
    n_sensors * (n_sensors - 1)
}

/// Narrowband sources impinging on the array, plus the white-noise floor.
#[derive(Debug, Clone)]
pub struct SourceEnsemble {
    /// Directions in radians, within (−π/2, π/2), pairwise distinct.
    pub directions: Vec<f64>,
    /// Per-source powers (linear units), same length as `directions`.
    pub powers: Vec<f64>,
    /// White noise power (linear units).
    pub noise_power: f64,
}

impl SourceEnsemble {
    pub fn new(
        directions: Vec<f64>,
        powers: Vec<f64>,
        noise_power: f64,
    ) -> Result<Self, CoarrayError> {
        if directions.len() != powers.len() {
            return Err(CoarrayError::BadEnsemble(format!(
                "{} directions but {} powers",
                directions.len(),
                powers.len()
            )));
        }
        if powers.iter().any(|&p| p < 0.0) || noise_power < 0.0 {
            return Err(CoarrayError::BadEnsemble("negative power".into()));
        }
        for i in 0..directions.len() {
            for j in (i + 1)..directions.len() {
                if directions[i] == directions[j] {
                    return Err(CoarrayError::BadEnsemble(format!(
                        "duplicate direction at indices {i} and {j}"
                    )));
                }
            }
        }
        Ok(Self {
            directions,
            powers,
            noise_power,
        })
    }
}

/// Phase of sensor `position` toward `theta`: `(2π/λ)·d·sinθ` with
/// `d = position · s · λ/2`.
fn sensor_phase(geometry: &ArrayGeometry, position: i64, theta: f64) -> f64 {
    std::f64::consts::PI
        * geometry.unit_spacing_halves_lambda as f64
        * position as f64
        * theta.sin()
}

/// The physical-array steering vector a(θ): unit-modulus entries with phase
/// `(2π/λ)·d_i·sinθ`.
pub fn steering_vector(geometry: &ArrayGeometry, theta: f64) -> Vec<Complex64> {
    geometry
        .positions
        .iter()
        .map(|&p| Complex64::from_polar(1.0, sensor_phase(geometry, p, theta)))
        .collect()
}

/// The co-array manifold column a*(θ) ⊗ a(θ) of length N². Under
/// column-major flattening the entry at outer index `i`, inner index `j`
/// has phase `(2π/λ)(d_j − d_i)sinθ`, i.e. a steering vector on the
/// difference co-array.
pub fn coarray_manifold_column(geometry: &ArrayGeometry, theta: f64) -> Vec<Complex64> {
    let a = steering_vector(geometry, theta);
    let n = a.len();
    let mut out = Vec::with_capacity(n * n);
    for &outer in &a {
        let c = outer.conj();
        for &inner in &a {
            out.push(c * inner);
        }
    }
    out
}

/// The flattened identity indicator: vec(I_N), with ones at the zero-lag
/// entries of the co-array manifold.
pub fn flattened_identity(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    v
}

/// How the autocorrelation matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceEstimate {
    /// The analytic model `F·diag(σ²)·F^H + σ_n²·I` directly.
    Ideal,
    /// Empirical average of `r[m]r[m]^H` over i.i.d. circular complex
    /// Gaussian snapshots.
    Sampled { snapshots: usize, seed: u64 },
}

/// Autocorrelation matrix of the received signal, either analytic or
/// estimated from simulated snapshots. Hermitian by construction; the
/// sampled estimate converges to the ideal matrix as snapshots grow.
pub fn sample_autocorrelation(
    geometry: &ArrayGeometry,
    ensemble: &SourceEnsemble,
    estimate: CovarianceEstimate,
) -> Vec<Vec<Complex64>> {
    let n = geometry.sensor_count();
    match estimate {
        CovarianceEstimate::Ideal => {
            let mut omega = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for (d, &theta) in ensemble.directions.iter().enumerate() {
                let f = steering_vector(geometry, theta);
                let p = ensemble.powers[d];
                for i in 0..n {
                    for j in 0..n {
                        omega[i][j] += p * f[i] * f[j].conj();
                    }
                }
            }
            for (i, row) in omega.iter_mut().enumerate() {
                row[i] += ensemble.noise_power;
            }
            omega
        }
        CovarianceEstimate::Sampled { snapshots, seed } => {
            assert!(snapshots >= 1, "at least one snapshot required");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0f64, std::f64::consts::FRAC_1_SQRT_2).unwrap();
            let manifold: Vec<Vec<Complex64>> = ensemble
                .directions
                .iter()
                .map(|&t| steering_vector(geometry, t))
                .collect();
            let amp: Vec<f64> = ensemble.powers.iter().map(|p| p.sqrt()).collect();
            let noise_amp = ensemble.noise_power.sqrt();
            let mut omega = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            let mut r = vec![Complex64::new(0.0, 0.0); n];
            for _ in 0..snapshots {
                for slot in r.iter_mut() {
                    *slot = noise_amp
                        * Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
                for (d, f) in manifold.iter().enumerate() {
                    let s =
                        amp[d] * Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                    for (slot, &fi) in r.iter_mut().zip(f.iter()) {
                        *slot += s * fi;
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        omega[i][j] += r[i] * r[j].conj();
                    }
                }
            }
            let scale = 1.0 / snapshots as f64;
            for row in omega.iter_mut() {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
            omega
        }
    }
}

/// Column-major stacking of a square complex matrix.
pub fn vectorize_autocorrelation(omega: &[Vec<Complex64>]) -> Result<Vec<Complex64>, CoarrayError> {
    let n = omega.len();
    for row in omega {
        if row.len() != n {
            return Err(CoarrayError::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
    }
    let mut z = Vec::with_capacity(n * n);
    for col in 0..n {
        for row in omega.iter() {
            z.push(row[col]);
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn nested_positions_match_construction_rule() {
        assert_eq!(ArrayGeometry::nested(1, 1).unwrap().positions, vec![1, 2]);
        assert_eq!(
            ArrayGeometry::nested(2, 2).unwrap().positions,
            vec![1, 2, 3, 6]
        );
        assert_eq!(
            ArrayGeometry::nested(3, 3).unwrap().positions,
            vec![1, 2, 3, 4, 8, 12]
        );
    }

    #[test]
    fn nested_rejects_zero_levels() {
        assert!(ArrayGeometry::nested(0, 1).is_err());
        assert!(ArrayGeometry::nested(1, 0).is_err());
    }

    #[test]
    fn geometry_rejects_unsorted_or_empty() {
        assert!(ArrayGeometry::new(vec![]).is_err());
        assert!(ArrayGeometry::new(vec![0, 2, 2]).is_err());
        assert!(ArrayGeometry::new(vec![3, 1]).is_err());
    }

    #[test]
    fn difference_coarray_single_sensor() {
        let g = ArrayGeometry::new(vec![0]).unwrap();
        let ca = difference_coarray(&g);
        assert_eq!(ca.lags, vec![0]);
        assert_eq!(ca.contiguous_aperture, 0);
    }

    #[test]
    fn difference_coarray_nested_2_2_is_hole_free() {
        let g = ArrayGeometry::new(vec![1, 2, 3, 6]).unwrap();
        let ca = difference_coarray(&g);
        assert_eq!(ca.lags, (-5..=5).collect::<Vec<_>>());
        assert_eq!(ca.lag_count(), 11);
        assert!(ca.is_hole_free());
    }

    #[test]
    fn difference_coarray_with_holes() {
        let g = ArrayGeometry::new(vec![0, 1, 4]).unwrap();
        let ca = difference_coarray(&g);
        assert_eq!(ca.lags, vec![-4, -3, -1, 0, 1, 3, 4]);
        assert_eq!(ca.contiguous_aperture, 1);
        assert!(!ca.is_hole_free());
    }

    #[test]
    fn max_dof_values() {
        assert_eq!(max_dof(1), 0);
        assert_eq!(max_dof(6), 30);
        assert_eq!(max_dof(10), 90);
    }

    #[test]
    fn steering_vector_broadside_is_all_ones() {
        let g = ArrayGeometry::nested(3, 3).unwrap();
        for v in steering_vector(&g, 0.0) {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_vector_half_wavelength_endfire() {
        // positions {0, λ/2}: phase π at θ = π/2.
        let g = ArrayGeometry::new(vec![0, 1]).unwrap();
        let v = steering_vector(&g, std::f64::consts::FRAC_PI_2);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((v[1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_vector_phases_at_30_degrees() {
        // positions {0, λ/2, λ}: phases [0, π/2, π] at θ = π/6.
        let g = ArrayGeometry::new(vec![0, 1, 2]).unwrap();
        let v = steering_vector(&g, std::f64::consts::FRAC_PI_6);
        let phases: Vec<f64> = v.iter().map(|z| z.arg()).collect();
        assert!(phases[0].abs() < 1e-12);
        assert!((phases[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // arg() folds π to ±π; compare against |π|.
        assert!((phases[2].abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn manifold_column_broadside_and_endfire() {
        let g = ArrayGeometry::new(vec![0, 1]).unwrap();
        let col0 = coarray_manifold_column(&g, 0.0);
        assert_eq!(col0.len(), 4);
        for v in col0 {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let col = coarray_manifold_column(&g, std::f64::consts::FRAC_PI_2);
        let expect = [c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)];
        for (v, e) in col.iter().zip(expect.iter()) {
            assert!((v - e).norm() < 1e-12);
        }
    }

    #[test]
    fn manifold_column_zero_lag_entries_are_one() {
        let g = ArrayGeometry::nested(2, 3).unwrap();
        let n = g.sensor_count();
        let col = coarray_manifold_column(&g, 0.7);
        for i in 0..n {
            assert!((col[i * n + i] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    /// Restricted to one representative entry per distinct lag, the
    /// manifold column is the steering vector of the co-array geometry.
    #[test]
    fn manifold_column_restricted_to_lags_is_coarray_steering() {
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let n = g.sensor_count();
        let theta = -0.43;
        let col = coarray_manifold_column(&g, theta);
        let ca = difference_coarray(&g);
        let virtual_geom = ArrayGeometry {
            unit_spacing_halves_lambda: 1,
            positions: ca.lags.clone(),
        };
        let sv = steering_vector(&virtual_geom, theta);
        for (lag_idx, &lag) in ca.lags.iter().enumerate() {
            // find one (i, j) with d_j − d_i = lag
            let mut found = false;
            'outer: for i in 0..n {
                for j in 0..n {
                    if g.positions[j] - g.positions[i] == lag {
                        assert!((col[i * n + j] - sv[lag_idx]).norm() < 1e-12);
                        found = true;
                        break 'outer;
                    }
                }
            }
            assert!(found);
        }
    }

    #[test]
    fn ideal_autocorrelation_single_source_no_noise() {
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let ens = SourceEnsemble::new(vec![0.3], vec![1.0], 0.0).unwrap();
        let omega = sample_autocorrelation(&g, &ens, CovarianceEstimate::Ideal);
        let f = steering_vector(&g, 0.3);
        for i in 0..4 {
            for j in 0..4 {
                assert!((omega[i][j] - f[i] * f[j].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ideal_autocorrelation_noise_only_is_identity() {
        let g = ArrayGeometry::nested(1, 2).unwrap();
        let ens = SourceEnsemble::new(vec![], vec![], 1.0).unwrap();
        let omega = sample_autocorrelation(&g, &ens, CovarianceEstimate::Ideal);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((omega[i][j] - c(e, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn sampled_autocorrelation_converges_to_ideal() {
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let th = 30f64.to_radians();
        let ens = SourceEnsemble::new(vec![th, -th], vec![1.0, 1.0], 0.5).unwrap();
        let ideal = sample_autocorrelation(&g, &ens, CovarianceEstimate::Ideal);
        let sampled = sample_autocorrelation(
            &g,
            &ens,
            CovarianceEstimate::Sampled {
                snapshots: 100_000,
                seed: 7,
            },
        );
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                num += (sampled[i][j] - ideal[i][j]).norm_sqr();
                den += ideal[i][j].norm_sqr();
            }
        }
        assert!(
            num.sqrt() < 0.05 * den.sqrt(),
            "relative Frobenius error {} too large",
            num.sqrt() / den.sqrt()
        );
    }

    #[test]
    fn sampled_autocorrelation_is_hermitian() {
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let ens = SourceEnsemble::new(vec![0.2], vec![2.0], 1.0).unwrap();
        let omega = sample_autocorrelation(
            &g,
            &ens,
            CovarianceEstimate::Sampled {
                snapshots: 64,
                seed: 1,
            },
        );
        for i in 0..4 {
            for j in 0..4 {
                assert!((omega[i][j] - omega[j][i].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vectorize_identity_and_rejects_non_square() {
        let eye = vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let z = vectorize_autocorrelation(&eye).unwrap();
        assert_eq!(z, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let bad = vec![vec![c(1.0, 0.0); 3], vec![c(0.0, 0.0); 3]];
        assert!(vectorize_autocorrelation(&bad).is_err());
    }

    #[test]
    fn vectorized_ideal_matches_manifold_combination() {
        // vec(Ω) for sources with powers (2, 3) is 2·col(θ₁) + 3·col(θ₂).
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let ens = SourceEnsemble::new(vec![0.4, -0.9], vec![2.0, 3.0], 0.0).unwrap();
        let omega = sample_autocorrelation(&g, &ens, CovarianceEstimate::Ideal);
        let z = vectorize_autocorrelation(&omega).unwrap();
        let c1 = coarray_manifold_column(&g, 0.4);
        let c2 = coarray_manifold_column(&g, -0.9);
        for i in 0..16 {
            assert!((z[i] - (2.0 * c1[i] + 3.0 * c2[i])).norm() < 1e-12);
        }
        // And with one unit-power source, vec(Ω) is the manifold column itself.
        let ens1 = SourceEnsemble::new(vec![0.4], vec![1.0], 0.0).unwrap();
        let z1 = vectorize_autocorrelation(&sample_autocorrelation(
            &g,
            &ens1,
            CovarianceEstimate::Ideal,
        ))
        .unwrap();
        for i in 0..16 {
            assert!((z1[i] - c1[i]).norm() < 1e-13);
        }
    }

    /// After removing the noise term, the vectorized ideal autocorrelation
    /// lies in the span of the true directions' manifold columns.
    #[test]
    fn vectorized_autocorrelation_lies_in_manifold_span() {
        use nalgebra::{DMatrix, DVector};
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let dirs = [0.35, -0.75];
        let ens = SourceEnsemble::new(dirs.to_vec(), vec![1.7, 0.4], 0.9).unwrap();
        let omega = sample_autocorrelation(&g, &ens, CovarianceEstimate::Ideal);
        let z = vectorize_autocorrelation(&omega).unwrap();
        let ones = flattened_identity(4);
        let target = DVector::<Complex64>::from_iterator(
            16,
            z.iter().zip(ones.iter()).map(|(zi, oi)| zi - 0.9 * oi),
        );
        let mut basis = DMatrix::<Complex64>::zeros(16, 2);
        for (c, &theta) in dirs.iter().enumerate() {
            for (r, v) in coarray_manifold_column(&g, theta).iter().enumerate() {
                basis[(r, c)] = *v;
            }
        }
        let fitted = basis.clone().svd(true, true).solve(&target, 1e-14).unwrap();
        let residual = (&basis * fitted - target).norm();
        assert!(residual < 1e-10, "span residual {residual}");
    }

    #[test]
    fn lag_set_symmetric_and_bounded_for_random_geometries() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(1..=7);
            let mut pos: Vec<i64> = Vec::new();
            let mut cur = 0i64;
            for _ in 0..n {
                pos.push(cur);
                cur += rng.gen_range(1..=5);
            }
            let g = ArrayGeometry::new(pos).unwrap();
            let ca = difference_coarray(&g);
            assert!(ca.lags.contains(&0));
            for &l in &ca.lags {
                assert!(ca.lags.contains(&-l));
            }
            assert!(ca.lag_count() <= max_dof(n) + 1);
        }
    }

    #[test]
    fn lag_bound_tight_when_differences_distinct() {
        // {0, 1, 4} has 3·2+1 = 7 distinct lags: all pairwise differences differ.
        let ca = difference_coarray(&ArrayGeometry::new(vec![0, 1, 4]).unwrap());
        assert_eq!(ca.lag_count(), max_dof(3) + 1);

        // Exhaustively over small geometries: the bound is met with equality
        // exactly when the ordered pairwise differences are all distinct.
        for bits in 0u32..(1 << 8) {
            let mut positions = vec![0i64];
            positions.extend(
                (0..8)
                    .filter(|b| (bits >> b) & 1 == 1)
                    .map(|b| b as i64 + 1),
            );
            if positions.len() < 2 || positions.len() > 4 {
                continue;
            }
            let n = positions.len();
            let mut diffs: Vec<i64> = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        diffs.push(positions[i] - positions[j]);
                    }
                }
            }
            let total = diffs.len();
            diffs.sort_unstable();
            diffs.dedup();
            let all_distinct = diffs.len() == total;
            let ca = difference_coarray(&ArrayGeometry::new(positions.clone()).unwrap());
            assert_eq!(
                ca.lag_count() == max_dof(n) + 1,
                all_distinct,
                "positions {positions:?}"
            );
        }
    }

    #[test]
    fn nested_coarrays_hole_free_with_expected_aperture() {
        for n1 in 1..=6usize {
            for n2 in 1..=6usize {
                let g = ArrayGeometry::nested(n1, n2).unwrap();
                let ca = difference_coarray(&g);
                let expect = (n2 * (n1 + 1) - 1) as i64;
                assert_eq!(ca.contiguous_aperture, expect, "nested({n1},{n2})");
                assert!(ca.is_hole_free(), "nested({n1},{n2}) has holes");
                assert!(ca.lag_count() <= max_dof(g.sensor_count()) + 1);
            }
        }
    }

    #[test]
    fn geometry_round_trips_through_json() {
        let g = ArrayGeometry::nested(2, 2).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"positions\":[1,2,3,6]"));
        let back: ArrayGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        // spacing field defaults to 1 when omitted
        let short: ArrayGeometry = serde_json::from_str("{\"positions\":[0,1]}").unwrap();
        assert_eq!(short.unit_spacing_halves_lambda, 1);
    }
}
