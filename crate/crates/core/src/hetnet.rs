//! Two-tier network model: placements, powers, path loss, association,
//! multipath counts, and the exact per-user rate expressions.
//!
//! Conventions:
//! * BS index 0 is the macro BS; indices `1..=J` are small-cell BSs.
//! * Transmit powers are configured in dBm and normalized at construction
//!   so that `noise_ref_dbm` maps to linear power 1.0. With the default
//!   noise floor `ε_N = 1` this makes every power a ratio to noise.
//! * Rates are computed with natural logs (nats/s/Hz); conversion to
//!   bits/s/Hz happens at the reporting layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarray::{difference_coarray, ArrayGeometry};

#[derive(Debug, Error)]
pub enum HetnetError {
    #[error("scenario has no base stations")]
    NoBaseStations,
    #[error("{what} matrix must be {expect_rows}x{expect_cols}")]
    BadDimensions {
        what: &'static str,
        expect_rows: usize,
        expect_cols: usize,
    },
    #[error("gain for user {k} and BS {j} must be positive")]
    NonPositiveGain { k: usize, j: usize },
    #[error("multipath count for user {k} and BS {j} must be at least 1")]
    ZeroMultipath { k: usize, j: usize },
    #[error("user {k} references BS {j} but only {count} exist")]
    BadServingBs { k: usize, j: usize, count: usize },
    #[error("BS {j} DoF budget must be at least 1")]
    ZeroDofBudget { j: usize },
    #[error("BS {j} DoF budget {budget} exceeds its co-array lag count {lags}")]
    DofBeyondCoarray {
        j: usize,
        budget: usize,
        lags: usize,
    },
    #[error("BS {j} array gain ratio must be positive")]
    NonPositiveRatio { j: usize },
    #[error("serving load at BS {j} needs {needed} DoF but budget is {budget}: no nulling assignment can be feasible")]
    InfeasibleBaseLoad {
        j: usize,
        needed: usize,
        budget: usize,
    },
    #[error("record id {found} at index {index} does not match its position")]
    MisnumberedRecord { index: usize, found: usize },
    #[error("nulling assignment infeasible: {0}")]
    InfeasibleAssignment(#[from] FeasibilityViolation),
    #[error("scenario has no macro users")]
    NoMacroUsers,
}

/// A constraint violated by a candidate nulling assignment.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeasibilityViolation {
    #[error("n[{k},{j}] = 1 but BS {j} serves user {k}")]
    NullsOwnUser { k: usize, j: usize },
    #[error("BS {j} uses {used} DoF but its budget is {budget}")]
    DofBudgetExceeded {
        j: usize,
        used: usize,
        budget: usize,
    },
    #[error("assignment is {rows}x{cols} but the scenario is {expect_rows}x{expect_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expect_rows: usize,
        expect_cols: usize,
    },
}

/// Which path-loss law applies to a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    /// Macro BS ↔ any user.
    Macro,
    /// Small BS ↔ user outside its cell.
    SmallOutdoor,
    /// Small BS ↔ its own (indoor) user.
    SmallIndoor,
}

/// Log-distance path-loss intercepts (dB at 1 m) and exponents per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathLossConfig {
    pub macro_intercept_db: f64,
    pub macro_exponent: f64,
    pub small_outdoor_intercept_db: f64,
    pub small_outdoor_exponent: f64,
    pub small_indoor_intercept_db: f64,
    pub small_indoor_exponent: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            macro_intercept_db: 38.0,
            macro_exponent: 3.5,
            small_outdoor_intercept_db: 30.5,
            small_outdoor_exponent: 3.67,
            small_indoor_intercept_db: 38.46,
            small_indoor_exponent: 2.0,
        }
    }
}

impl PathLossConfig {
    fn params(&self, class: LinkClass) -> (f64, f64) {
        match class {
            LinkClass::Macro => (self.macro_intercept_db, self.macro_exponent),
            LinkClass::SmallOutdoor => {
                (self.small_outdoor_intercept_db, self.small_outdoor_exponent)
            }
            LinkClass::SmallIndoor => (self.small_indoor_intercept_db, self.small_indoor_exponent),
        }
    }

    pub fn path_loss_db(&self, class: LinkClass, distance_m: f64) -> f64 {
        let (intercept, exponent) = self.params(class);
        let d = distance_m.max(1.0);
        intercept + 10.0 * exponent * d.log10()
    }
}

/// Deterministic linear power gain for a link; distances below 1 m clamp
/// to the 1 m reference.
pub fn path_gain(cfg: &PathLossConfig, class: LinkClass, tx: [f64; 2], rx: [f64; 2]) -> f64 {
    let d = ((tx[0] - rx[0]).powi(2) + (tx[1] - rx[1]).powi(2)).sqrt();
    10f64.powf(-cfg.path_loss_db(class, d) / 10.0)
}

/// A base station. Index 0 is the macro BS with a conventional linear
/// array; small BSs carry a nested array and its co-array DoF budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub position: [f64; 2],
    pub tx_power_dbm: f64,
    /// The array-gain ratio (M−S+1)/S; only the ratio enters the rates.
    pub gain_ratio: f64,
    /// Directions this BS can resolve (including the one reserved for noise).
    pub dof_budget: usize,
    /// Nested array geometry (small BSs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<ArrayGeometry>,
}

/// A user terminal associated with exactly one BS.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    pub position: [f64; 2],
    pub tx_power_dbm: f64,
    pub serving_bs: usize,
}

/// Binary nulling decisions: `get(k, j)` is true when BS `j` nulls the
/// interference exchanged with user `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentDoc", into = "AssignmentDoc")]
pub struct NullingAssignment {
    entries: Vec<u8>,
    users: usize,
    stations: usize,
}

/// JSON form of an assignment: one row of 0/1 flags per user.
#[derive(Serialize, Deserialize)]
struct AssignmentDoc {
    users: usize,
    stations: usize,
    rows: Vec<Vec<u8>>,
}

impl From<NullingAssignment> for AssignmentDoc {
    fn from(n: NullingAssignment) -> Self {
        let rows = (0..n.users)
            .map(|k| n.entries[k * n.stations..(k + 1) * n.stations].to_vec())
            .collect();
        Self {
            users: n.users,
            stations: n.stations,
            rows,
        }
    }
}

impl TryFrom<AssignmentDoc> for NullingAssignment {
    type Error = String;
    fn try_from(doc: AssignmentDoc) -> Result<Self, Self::Error> {
        if doc.rows.len() != doc.users {
            return Err(format!(
                "expected {} rows, got {}",
                doc.users,
                doc.rows.len()
            ));
        }
        let mut entries = Vec::with_capacity(doc.users * doc.stations);
        for row in &doc.rows {
            if row.len() != doc.stations {
                return Err(format!("expected {} columns per row", doc.stations));
            }
            for &v in row {
                if v > 1 {
                    return Err("assignment entries must be 0 or 1".into());
                }
                entries.push(v);
            }
        }
        Ok(Self {
            entries,
            users: doc.users,
            stations: doc.stations,
        })
    }
}

impl NullingAssignment {
    pub fn zeros(users: usize, stations: usize) -> Self {
        Self {
            entries: vec![0; users * stations],
            users,
            stations,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    pub fn get(&self, k: usize, j: usize) -> bool {
        self.entries[k * self.stations + j] != 0
    }

    pub fn set(&mut self, k: usize, j: usize, value: bool) {
        self.entries[k * self.stations + j] = u8::from(value);
    }

    pub fn count_ones(&self) -> usize {
        self.entries.iter().map(|&v| v as usize).sum()
    }

    /// Checks the serving-conflict and per-BS DoF constraints, naming the
    /// first violated one.
    pub fn validate(&self, scenario: &Scenario) -> Result<(), FeasibilityViolation> {
        let (k_n, j_n) = (scenario.user_count(), scenario.station_count());
        if self.users != k_n || self.stations != j_n {
            return Err(FeasibilityViolation::ShapeMismatch {
                rows: self.users,
                cols: self.stations,
                expect_rows: k_n,
                expect_cols: j_n,
            });
        }
        for k in 0..k_n {
            for j in 0..j_n {
                if self.get(k, j) && scenario.users[k].serving_bs == j {
                    return Err(FeasibilityViolation::NullsOwnUser { k, j });
                }
            }
        }
        for j in 0..j_n {
            let used = scenario.dof_used(self, j);
            let budget = scenario.bss[j].dof_budget;
            if used > budget {
                return Err(FeasibilityViolation::DofBudgetExceeded { j, used, budget });
            }
        }
        Ok(())
    }
}

/// A fully specified network instance. Immutable after construction; all
/// rate evaluations are pure functions over it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub bss: Vec<BaseStation>,
    pub users: Vec<User>,
    /// Linear power gains, `gains[k][j]`.
    pub gains: Vec<Vec<f64>>,
    /// Multipath counts `q[k][j] ≥ 1`.
    pub multipath: Vec<Vec<u32>>,
    /// Noise floor added to every interference denominator.
    pub noise_floor: f64,
    /// dBm level normalized to linear power 1.0.
    pub noise_ref_dbm: f64,
    user_power: Vec<f64>,
    bs_power: Vec<f64>,
}

fn dbm_to_linear(dbm: f64, reference_dbm: f64) -> f64 {
    10f64.powf((dbm - reference_dbm) / 10.0)
}

impl Scenario {
    pub fn new(
        bss: Vec<BaseStation>,
        users: Vec<User>,
        gains: Vec<Vec<f64>>,
        multipath: Vec<Vec<u32>>,
        noise_floor: f64,
        noise_ref_dbm: f64,
    ) -> Result<Self, HetnetError> {
        if bss.is_empty() {
            return Err(HetnetError::NoBaseStations);
        }
        let j_n = bss.len();
        let k_n = users.len();
        for (i, bs) in bss.iter().enumerate() {
            if bs.id != i {
                return Err(HetnetError::MisnumberedRecord {
                    index: i,
                    found: bs.id,
                });
            }
            if bs.dof_budget == 0 {
                return Err(HetnetError::ZeroDofBudget { j: i });
            }
            if bs.gain_ratio <= 0.0 {
                return Err(HetnetError::NonPositiveRatio { j: i });
            }
            if let Some(array) = &bs.array {
                let lags = difference_coarray(array).lag_count();
                if bs.dof_budget > lags {
                    return Err(HetnetError::DofBeyondCoarray {
                        j: i,
                        budget: bs.dof_budget,
                        lags,
                    });
                }
            }
        }
        for (k, u) in users.iter().enumerate() {
            if u.id != k {
                return Err(HetnetError::MisnumberedRecord {
                    index: k,
                    found: u.id,
                });
            }
            if u.serving_bs >= j_n {
                return Err(HetnetError::BadServingBs {
                    k,
                    j: u.serving_bs,
                    count: j_n,
                });
            }
        }
        if gains.len() != k_n || gains.iter().any(|r| r.len() != j_n) {
            return Err(HetnetError::BadDimensions {
                what: "gain",
                expect_rows: k_n,
                expect_cols: j_n,
            });
        }
        if multipath.len() != k_n || multipath.iter().any(|r| r.len() != j_n) {
            return Err(HetnetError::BadDimensions {
                what: "multipath",
                expect_rows: k_n,
                expect_cols: j_n,
            });
        }
        for k in 0..k_n {
            for j in 0..j_n {
                if gains[k][j] <= 0.0 || gains[k][j].is_nan() {
                    return Err(HetnetError::NonPositiveGain { k, j });
                }
                if multipath[k][j] == 0 {
                    return Err(HetnetError::ZeroMultipath { k, j });
                }
            }
        }
        let user_power = users
            .iter()
            .map(|u| dbm_to_linear(u.tx_power_dbm, noise_ref_dbm))
            .collect();
        let bs_power = bss
            .iter()
            .map(|b| dbm_to_linear(b.tx_power_dbm, noise_ref_dbm))
            .collect();
        let scenario = Self {
            bss,
            users,
            gains,
            multipath,
            noise_floor,
            noise_ref_dbm,
            user_power,
            bs_power,
        };
        // Even the all-zero assignment must fit the per-BS budgets.
        for j in 0..j_n {
            let needed = scenario.base_load(j) + 1;
            let budget = scenario.bss[j].dof_budget;
            if needed > budget {
                return Err(HetnetError::InfeasibleBaseLoad { j, needed, budget });
            }
        }
        Ok(scenario)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn station_count(&self) -> usize {
        self.bss.len()
    }

    pub fn small_cell_count(&self) -> usize {
        self.bss.len() - 1
    }

    pub fn is_served_by(&self, k: usize, j: usize) -> bool {
        self.users[k].serving_bs == j
    }

    /// Linear (noise-normalized) transmit power of user `k`.
    pub fn user_power_lin(&self, k: usize) -> f64 {
        self.user_power[k]
    }

    /// Linear (noise-normalized) transmit power of BS `j`.
    pub fn bs_power_lin(&self, j: usize) -> f64 {
        self.bs_power[j]
    }

    /// DoF consumed at BS `j` by serving its own users (noise slot excluded).
    pub fn base_load(&self, j: usize) -> usize {
        (0..self.user_count())
            .filter(|&k| self.is_served_by(k, j))
            .map(|k| self.multipath[k][j] as usize)
            .sum()
    }

    /// Total DoF used at BS `j` under `n`: serving load, nulling load, and
    /// the slot reserved for noise.
    pub fn dof_used(&self, n: &NullingAssignment, j: usize) -> usize {
        let nulling: usize = (0..self.user_count())
            .filter(|&k| n.get(k, j))
            .map(|k| self.multipath[k][j] as usize)
            .sum();
        self.base_load(j) + nulling + 1
    }

    /// Spare DoF at BS `j` available for nulling.
    pub fn nulling_budget(&self, j: usize) -> usize {
        self.bss[j].dof_budget - self.base_load(j) - 1
    }
}

/// Serialized form of a scenario: powers stay in dBm and gains in dB.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub noise_ref_dbm: f64,
    pub epsilon_n: f64,
    pub base_stations: Vec<BaseStation>,
    pub users: Vec<User>,
    /// Large-scale gains in dB, one row per user, one column per BS.
    pub gains_db: Vec<Vec<f64>>,
    /// Multipath counts, same shape as `gains_db`.
    pub multipath: Vec<Vec<u32>>,
}

impl Scenario {
    pub fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            noise_ref_dbm: self.noise_ref_dbm,
            epsilon_n: self.noise_floor,
            base_stations: self.bss.clone(),
            users: self.users.clone(),
            gains_db: self
                .gains
                .iter()
                .map(|row| row.iter().map(|g| 10.0 * g.log10()).collect())
                .collect(),
            multipath: self.multipath.clone(),
        }
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, HetnetError> {
        let gains = doc
            .gains_db
            .iter()
            .map(|row| row.iter().map(|db| 10f64.powf(db / 10.0)).collect())
            .collect();
        Scenario::new(
            doc.base_stations,
            doc.users,
            gains,
            doc.multipath,
            doc.epsilon_n,
            doc.noise_ref_dbm,
        )
    }
}

/// Uplink interference at small BS `j` toward its user `k`: every other
/// user not nulled at `j`.
fn small_cell_ul_interference(s: &Scenario, n: &NullingAssignment, k: usize, j: usize) -> f64 {
    (0..s.user_count())
        .filter(|&k2| k2 != k && !n.get(k2, j))
        .map(|k2| s.user_power_lin(k2) * s.gains[k2][j])
        .sum()
}

/// Downlink interference at user `k` from small BSs other than `j`.
fn small_cell_dl_interference(s: &Scenario, n: &NullingAssignment, k: usize, j: usize) -> f64 {
    (1..s.station_count())
        .filter(|&j2| j2 != j && !n.get(k, j2))
        .map(|j2| s.bs_power_lin(j2) * s.gains[k][j2])
        .sum()
}

/// Sum of uplink and downlink rate (nats/s/Hz) for small-cell user `k`
/// served by BS `j`.
pub fn rate_small_cell_user(s: &Scenario, n: &NullingAssignment, k: usize, j: usize) -> f64 {
    assert!(
        j >= 1 && s.is_served_by(k, j),
        "user {k} is not a small-cell user of BS {j}"
    );
    let ratio = s.bss[j].gain_ratio;
    let ul_den = s.noise_floor + small_cell_ul_interference(s, n, k, j);
    let ul = (1.0 + ratio * s.user_power_lin(k) * s.gains[k][j] / ul_den).ln();
    let dl_den = s.noise_floor + small_cell_dl_interference(s, n, k, j);
    let dl = (1.0 + ratio * s.bs_power_lin(j) * s.gains[k][j] / dl_den).ln();
    ul + dl
}

/// Macro-tier uplink interference: only small-cell users contribute (the
/// massive array averages out other macro users), each unless nulled at
/// the macro BS.
fn macro_ul_interference(s: &Scenario, n: &NullingAssignment) -> f64 {
    (0..s.user_count())
        .filter(|&k2| s.users[k2].serving_bs >= 1 && !n.get(k2, 0))
        .map(|k2| s.user_power_lin(k2) * s.gains[k2][0])
        .sum()
}

/// Small-BS downlink interference at macro user `k`, each SBS unless it
/// nulls toward `k`.
fn macro_dl_interference(s: &Scenario, n: &NullingAssignment, k: usize) -> f64 {
    (1..s.station_count())
        .filter(|&j| !n.get(k, j))
        .map(|j| s.bs_power_lin(j) * s.gains[k][j])
        .sum()
}

/// Sum of uplink and downlink rate (nats/s/Hz) for macro user `k`.
pub fn rate_macro_user(s: &Scenario, n: &NullingAssignment, k: usize) -> f64 {
    assert!(s.is_served_by(k, 0), "user {k} is not a macro user");
    let ratio = s.bss[0].gain_ratio;
    let ul_den = s.noise_floor + macro_ul_interference(s, n);
    let ul = (1.0 + ratio * s.user_power_lin(k) * s.gains[k][0] / ul_den).ln();
    let dl_den = s.noise_floor + macro_dl_interference(s, n, k);
    let dl = (1.0 + ratio * s.bs_power_lin(0) * s.gains[k][0] / dl_den).ln();
    ul + dl
}

/// Network sum rate (nats/s/Hz) under assignment `n`. The assignment is
/// validated first and the violated constraint reported on failure.
pub fn sum_rate(s: &Scenario, n: &NullingAssignment) -> Result<f64, HetnetError> {
    n.validate(s)?;
    Ok(sum_rate_unchecked(s, n))
}

/// Sum rate without feasibility validation, for enumeration loops that
/// check constraints separately.
pub fn sum_rate_unchecked(s: &Scenario, n: &NullingAssignment) -> f64 {
    (0..s.user_count())
        .map(|k| {
            let j = s.users[k].serving_bs;
            if j == 0 {
                rate_macro_user(s, n, k)
            } else {
                rate_small_cell_user(s, n, k, j)
            }
        })
        .sum()
}

/// Downlink SINR of macro user `k`, optionally including the array-gain
/// factor.
pub fn mu_downlink_sinr(
    s: &Scenario,
    n: &NullingAssignment,
    k: usize,
    include_array_gain: bool,
) -> f64 {
    let gain = if include_array_gain {
        s.bss[0].gain_ratio
    } else {
        1.0
    };
    gain * s.bs_power_lin(0) * s.gains[k][0] / (s.noise_floor + macro_dl_interference(s, n, k))
}

/// Fraction of macro users whose downlink SINR falls below `gamma_out_db`.
pub fn outage_probability_mu(
    s: &Scenario,
    n: &NullingAssignment,
    gamma_out_db: f64,
    include_array_gain: bool,
) -> Result<f64, HetnetError> {
    let mus: Vec<usize> = (0..s.user_count())
        .filter(|&k| s.is_served_by(k, 0))
        .collect();
    if mus.is_empty() {
        return Err(HetnetError::NoMacroUsers);
    }
    let threshold = 10f64.powf(gamma_out_db / 10.0);
    let below = mus
        .iter()
        .filter(|&&k| mu_downlink_sinr(s, n, k, include_array_gain) < threshold)
        .count();
    Ok(below as f64 / mus.len() as f64)
}
