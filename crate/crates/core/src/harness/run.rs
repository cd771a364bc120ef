//! Monte Carlo experiment runner, aggregation, and CSV emission.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hetnet::{outage_probability_mu, HetnetError};
use crate::optimizer::{product_surrogate_value, solve, solve_upper_bound_p4, Method};

use super::config::ExperimentConfig;
use super::generate::generate_scenario;
use super::HarnessError;

/// One method's outcome on one trial. The CSV columns are the fields up to
/// `seed`; the trailing fields are in-memory extras for invariant checks.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub trial_id: usize,
    pub n_sbs: usize,
    pub n_users: usize,
    pub method: Method,
    pub sum_rate_bps_hz: f64,
    pub sum_rate_bps: f64,
    pub mu_outage_prob: f64,
    pub cuts_added: usize,
    pub solve_time_ms: f64,
    pub seed: u64,
    /// Truncated product-surrogate value of the returned assignment (the
    /// upper-bound method records its bound instead); `None` when the
    /// expansion guard or a solver error prevented it.
    pub surrogate_value: Option<f64>,
    /// Solver failure for this row; errored rows are skipped by aggregates.
    pub error: Option<String>,
}

/// Deterministic per-trial stream id, mixing the sweep point in so every
/// (sweep, trial) pair draws independently.
fn trial_stream(sweep_index: usize, trial: usize) -> u64 {
    ((sweep_index as u64) << 32) ^ trial as u64
}

/// Cartesian sweep points in declaration order.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    let mut points = Vec::new();
    for &sbs in &config.n_sbs.values() {
        for &users in &config.n_users.values() {
            points.push((sbs, users));
        }
    }
    points
}

/// Runs every sweep point, trial, and method; one report row per
/// (trial, method). Per-trial solver errors are recorded in the row and the
/// run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialReport>, HarnessError> {
    config.validate()?;
    let opts = config.solve_options();
    let mut reports = Vec::new();
    let mut any_ok = false;
    let mut any_err = false;
    for (sweep_index, &(n_sbs, n_users)) in sweep_points(config).iter().enumerate() {
        for trial in 0..config.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial_stream(sweep_index, trial));
            let scenario = generate_scenario(config, n_sbs, n_users, &mut rng)?;
            for &method in &config.methods {
                let mut row = TrialReport {
                    trial_id: trial,
                    n_sbs,
                    n_users,
                    method,
                    sum_rate_bps_hz: 0.0,
                    sum_rate_bps: 0.0,
                    mu_outage_prob: 0.0,
                    cuts_added: 0,
                    solve_time_ms: 0.0,
                    seed: config.seed,
                    surrogate_value: None,
                    error: None,
                };
                let outcome = if method == Method::UpperBoundP4 {
                    solve_upper_bound_p4(&scenario, &opts).map(|o| {
                        row.surrogate_value = Some(o.surrogate_bound);
                        o.report
                    })
                } else {
                    solve(&scenario, method, &opts).inspect(|rep| {
                        row.surrogate_value = product_surrogate_value(
                            &scenario,
                            &rep.assignment,
                            opts.p4_max_order,
                            opts.max_terms,
                        )
                        .ok();
                    })
                };
                match outcome {
                    Ok(rep) => {
                        row.sum_rate_bps_hz = rep.objective_exact_rate;
                        row.sum_rate_bps = rep.objective_exact_rate * config.bandwidth;
                        row.cuts_added = rep.cuts_added;
                        if config.record_timing {
                            row.solve_time_ms = rep.solve_time_ms;
                        }
                        row.mu_outage_prob = match outage_probability_mu(
                            &scenario,
                            &rep.assignment,
                            config.gamma_out_db,
                            config.outage_include_array_gain,
                        ) {
                            Ok(p) => p,
                            Err(HetnetError::NoMacroUsers) => 0.0,
                            Err(e) => return Err(HarnessError::Hetnet(e)),
                        };
                        any_ok = true;
                    }
                    Err(e) => {
                        row.error = Some(e.to_string());
                        any_err = true;
                    }
                }
                reports.push(row);
            }
        }
    }
    if any_err && !any_ok {
        return Err(HarnessError::AllTrialsFailed);
    }
    Ok(reports)
}

/// Aggregated mean and standard error for one metric at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: usize,
    pub method: Method,
    pub metric: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per (sweep point, method): mean, standard error, and count for the sum
/// rate and macro-user outage. Errored rows are skipped. The sweep value
/// reported is whichever parameter the config sweeps (small-cell count by
/// default).
pub fn aggregate(config: &ExperimentConfig, reports: &[TrialReport]) -> Vec<SummaryRow> {
    let sweep_on_users = config.n_users.is_sweep() && !config.n_sbs.is_sweep();
    let mut rows = Vec::new();
    for &(n_sbs, n_users) in &sweep_points(config) {
        let sweep_value = if sweep_on_users { n_users } else { n_sbs };
        for &method in &config.methods {
            let selected: Vec<&TrialReport> = reports
                .iter()
                .filter(|r| {
                    r.n_sbs == n_sbs
                        && r.n_users == n_users
                        && r.method == method
                        && r.error.is_none()
                })
                .collect();
            if selected.is_empty() {
                continue;
            }
            let rates: Vec<f64> = selected.iter().map(|r| r.sum_rate_bps_hz).collect();
            let outages: Vec<f64> = selected.iter().map(|r| r.mu_outage_prob).collect();
            let (mean, stderr) = mean_and_stderr(&rates);
            rows.push(SummaryRow {
                sweep_value,
                method,
                metric: "sum_rate_bps_hz",
                mean,
                stderr,
                n: rates.len(),
            });
            let (mean, stderr) = mean_and_stderr(&outages);
            rows.push(SummaryRow {
                sweep_value,
                method,
                metric: "mu_outage_prob",
                mean,
                stderr,
                n: outages.len(),
            });
        }
    }
    rows
}

/// Nine significant digits, matching the file-format contract.
fn fmt(v: f64) -> String {
    format!("{v:.8e}")
}

pub const TRIALS_HEADER: &str = "trial_id,n_sbs,n_users,method,sum_rate_bps_hz,sum_rate_bps,mu_outage_prob,cuts_added,solve_time_ms,seed";

pub fn write_trials_csv<W: Write>(mut w: W, reports: &[TrialReport]) -> std::io::Result<()> {
    writeln!(w, "{TRIALS_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.n_sbs,
            r.n_users,
            r.method,
            fmt(r.sum_rate_bps_hz),
            fmt(r.sum_rate_bps),
            fmt(r.mu_outage_prob),
            r.cuts_added,
            fmt(r.solve_time_ms),
            r.seed
        )?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str = "sweep_value,method,metric,mean,stderr,n";

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.sweep_value,
            r.method,
            r.metric,
            fmt(r.mean),
            fmt(r.stderr),
            r.n
        )?;
    }
    Ok(())
}

/// Full pipeline: run the experiment and write `trials.csv` and
/// `summary.csv` into `out_dir`.
pub fn simulate(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<TrialReport>, HarnessError> {
    let reports = run_experiment(config)?;
    std::fs::create_dir_all(out_dir)?;
    let trials = std::fs::File::create(out_dir.join("trials.csv"))?;
    write_trials_csv(std::io::BufWriter::new(trials), &reports)?;
    let summary_rows = aggregate(config, &reports);
    let summary = std::fs::File::create(out_dir.join("summary.csv"))?;
    write_summary_csv(std::io::BufWriter::new(summary), &summary_rows)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepValues;
    use crate::hetnet::{sum_rate, NullingAssignment};

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n_sbs: SweepValues::One(2),
            n_users: SweepValues::One(8),
            trials: 3,
            seed: 42,
            methods: vec![Method::NoNulling, Method::Heuristic],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn no_nulling_rows_match_direct_rate_evaluation() {
        let config = tiny_config();
        let reports = run_experiment(&config).unwrap();
        for r in reports.iter().filter(|r| r.method == Method::NoNulling) {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial_stream(0, r.trial_id));
            let s = generate_scenario(&config, r.n_sbs, r.n_users, &mut rng).unwrap();
            let zeros = NullingAssignment::zeros(s.user_count(), s.station_count());
            let expect = sum_rate(&s, &zeros).unwrap() * std::f64::consts::LOG2_E;
            assert!((r.sum_rate_bps_hz - expect).abs() < 1e-12);
            assert!((r.sum_rate_bps - expect * config.bandwidth).abs() < 1e-6);
        }
    }

    #[test]
    fn reports_cover_every_trial_and_method() {
        let config = tiny_config();
        let reports = run_experiment(&config).unwrap();
        assert_eq!(reports.len(), config.trials * config.methods.len());
        for r in &reports {
            assert!(r.error.is_none(), "unexpected error: {:?}", r.error);
            assert!(r.sum_rate_bps_hz >= 0.0);
            assert!((0.0..=1.0).contains(&r.mu_outage_prob));
        }
    }

    #[test]
    fn identical_seeds_give_identical_csv_bytes() {
        let config = tiny_config();
        let mut a = Vec::new();
        write_trials_csv(&mut a, &run_experiment(&config).unwrap()).unwrap();
        let mut b = Vec::new();
        write_trials_csv(&mut b, &run_experiment(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_mean_and_stderr_by_hand() {
        let config = ExperimentConfig {
            methods: vec![Method::NoNulling],
            ..tiny_config()
        };
        let mk = |trial_id: usize, rate: f64| TrialReport {
            trial_id,
            n_sbs: 2,
            n_users: 8,
            method: Method::NoNulling,
            sum_rate_bps_hz: rate,
            sum_rate_bps: 0.0,
            mu_outage_prob: 0.25,
            cuts_added: 0,
            solve_time_ms: 0.0,
            seed: 1,
            surrogate_value: None,
            error: None,
        };
        // Two trials with rates 4 and 6: mean 5, stderr 1.
        let rows = aggregate(&config, &[mk(0, 4.0), mk(1, 6.0)]);
        let rate_row = rows.iter().find(|r| r.metric == "sum_rate_bps_hz").unwrap();
        assert_eq!(rate_row.mean, 5.0);
        assert_eq!(rate_row.stderr, 1.0);
        assert_eq!(rate_row.n, 2);
        // A single trial has stderr 0 by convention.
        let rows = aggregate(&config, &[mk(0, 4.0)]);
        let rate_row = rows.iter().find(|r| r.metric == "sum_rate_bps_hz").unwrap();
        assert_eq!(rate_row.mean, 4.0);
        assert_eq!(rate_row.stderr, 0.0);
    }

    /// Merging two aggregates reproduces the aggregate of the union.
    #[test]
    fn aggregates_merge_consistently() {
        let config = ExperimentConfig {
            methods: vec![Method::NoNulling],
            ..tiny_config()
        };
        let mk = |trial_id: usize, rate: f64| TrialReport {
            trial_id,
            n_sbs: 2,
            n_users: 8,
            method: Method::NoNulling,
            sum_rate_bps_hz: rate,
            sum_rate_bps: 0.0,
            mu_outage_prob: 0.0,
            cuts_added: 0,
            solve_time_ms: 0.0,
            seed: 1,
            surrogate_value: None,
            error: None,
        };
        let part_a: Vec<TrialReport> = vec![mk(0, 2.0), mk(1, 3.0), mk(2, 7.0)];
        let part_b: Vec<TrialReport> = vec![mk(3, 4.0), mk(4, 9.0)];
        let all: Vec<TrialReport> = part_a.iter().chain(&part_b).cloned().collect();
        let find = |rows: &[SummaryRow]| -> (f64, f64, usize) {
            let r = rows.iter().find(|r| r.metric == "sum_rate_bps_hz").unwrap();
            (r.mean, r.stderr, r.n)
        };
        let (ma, sa, na) = find(&aggregate(&config, &part_a));
        let (mb, sb, nb) = find(&aggregate(&config, &part_b));
        let (m_all, s_all, n_all) = find(&aggregate(&config, &all));
        assert_eq!(n_all, na + nb);
        // Weighted mean merge.
        let merged_mean = (ma * na as f64 + mb * nb as f64) / n_all as f64;
        assert!((merged_mean - m_all).abs() < 1e-12);
        // Merge the spread via sums of squares (stderr² · n · (n−1) = M2).
        let m2 = |s: f64, m: f64, n: usize| s * s * n as f64 * (n as f64 - 1.0) + n as f64 * m * m;
        let total_sq = m2(sa, ma, na) + m2(sb, mb, nb);
        let merged_var =
            (total_sq - n_all as f64 * merged_mean * merged_mean) / (n_all as f64 - 1.0);
        assert!(((merged_var / n_all as f64).sqrt() - s_all).abs() < 1e-9);
    }

    #[test]
    fn errored_rows_are_recorded_and_skipped() {
        // Brute force on a 3-station, 10-user draw exceeds the variable
        // guard, so every brute-force row errors while others succeed.
        let config = ExperimentConfig {
            n_sbs: SweepValues::One(2),
            n_users: SweepValues::One(10),
            trials: 2,
            methods: vec![Method::NoNulling, Method::BruteForce],
            ..ExperimentConfig::default()
        };
        let reports = run_experiment(&config).unwrap();
        let failed: Vec<&TrialReport> = reports
            .iter()
            .filter(|r| r.method == Method::BruteForce)
            .collect();
        assert!(failed.iter().all(|r| r.error.is_some()));
        let rows = aggregate(&config, &reports);
        assert!(rows.iter().all(|r| r.method != Method::BruteForce));
        assert!(rows.iter().any(|r| r.method == Method::NoNulling));
    }

    #[test]
    fn all_methods_failing_is_an_error() {
        let config = ExperimentConfig {
            n_sbs: SweepValues::One(2),
            n_users: SweepValues::One(10),
            trials: 1,
            methods: vec![Method::BruteForce],
            ..ExperimentConfig::default()
        };
        match run_experiment(&config) {
            Err(HarnessError::AllTrialsFailed) => {}
            other => panic!("expected AllTrialsFailed, got {other:?}"),
        }
    }

    #[test]
    fn simulate_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config();
        simulate(&config, dir.path()).unwrap();
        let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
        assert!(trials.starts_with(TRIALS_HEADER));
        assert_eq!(
            trials.lines().count(),
            1 + config.trials * config.methods.len()
        );
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with(SUMMARY_HEADER));
    }
}
