//! Random scenario generation: placements, association, powers, gains,
//! and multipath draws, all from one seeded stream.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::coarray::ArrayGeometry;
use crate::hetnet::{path_gain, BaseStation, HetnetError, LinkClass, Scenario, User};

use super::config::ExperimentConfig;
use super::HarnessError;

const PLACEMENT_ATTEMPT_CAP: usize = 10_000;
const GENERATION_ATTEMPT_CAP: usize = 100;

fn uniform_disk_point(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    [r * phi.cos(), r * phi.sin()]
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Small-cell centers uniform in the macro disk with a minimum pairwise
/// separation, by rejection sampling.
fn place_small_cells(
    config: &ExperimentConfig,
    n_sbs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<[f64; 2]>, HarnessError> {
    let separation = config.sbs_separation();
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(n_sbs);
    let mut attempts = 0usize;
    while centers.len() < n_sbs {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPT_CAP {
            return Err(HarnessError::Placement {
                n_sbs,
                separation,
                attempts: PLACEMENT_ATTEMPT_CAP,
            });
        }
        let p = uniform_disk_point(rng, config.macro_radius);
        if centers.iter().all(|&c| distance(c, p) >= separation) {
            centers.push(p);
        }
    }
    Ok(centers)
}

/// Coverage-rule association: the nearest small cell within the small-cell
/// radius serves the user, otherwise the macro BS does.
fn associate(position: [f64; 2], centers: &[[f64; 2]], small_radius: f64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in centers.iter().enumerate() {
        let d = distance(c, position);
        if d <= small_radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map_or(0, |(i, _)| i + 1)
}

/// Macro-user power level by distance quintile: the nearest fifth gets the
/// first level, the farthest the last.
fn mue_power_levels(users: &[([f64; 2], usize)], levels: &[f64]) -> Vec<Option<f64>> {
    let mut macro_users: Vec<(usize, f64)> = users
        .iter()
        .enumerate()
        .filter(|(_, (_, serving))| *serving == 0)
        .map(|(k, (pos, _))| (k, (pos[0].powi(2) + pos[1].powi(2)).sqrt()))
        .collect();
    macro_users.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let count = macro_users.len();
    let mut out = vec![None; users.len()];
    for (rank, (k, _)) in macro_users.into_iter().enumerate() {
        let idx = (rank * levels.len() / count.max(1)).min(levels.len() - 1);
        out[k] = Some(levels[idx]);
    }
    out
}

/// Draws one scenario. Infeasible draws (serving load already exceeding a
/// DoF budget) are retried with fresh randomness up to a fixed cap.
pub fn generate_scenario(
    config: &ExperimentConfig,
    n_sbs: usize,
    n_users: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Scenario, HarnessError> {
    let mut last_err: Option<HetnetError> = None;
    for _ in 0..GENERATION_ATTEMPT_CAP {
        let centers = place_small_cells(config, n_sbs, rng)?;
        let mut bss = Vec::with_capacity(n_sbs + 1);
        bss.push(BaseStation {
            id: 0,
            position: [0.0, 0.0],
            tx_power_dbm: config.powers.mbs_dbm,
            gain_ratio: config.ratio_mbs,
            dof_budget: config.dof_mbs,
            array: None,
        });
        let [n1, n2] = config.sbs_nested_levels;
        let array = ArrayGeometry::nested(n1, n2).expect("config validated");
        for (i, &c) in centers.iter().enumerate() {
            bss.push(BaseStation {
                id: i + 1,
                position: c,
                tx_power_dbm: config.powers.sbs_dbm,
                gain_ratio: config.ratio_sbs,
                dof_budget: config.dof_sbs,
                array: Some(array.clone()),
            });
        }
        let placed: Vec<([f64; 2], usize)> = (0..n_users)
            .map(|_| {
                let p = uniform_disk_point(rng, config.macro_radius);
                let serving = associate(p, &centers, config.small_radius);
                (p, serving)
            })
            .collect();
        let mue_levels = mue_power_levels(&placed, &config.powers.mue_dbm_levels);
        let users: Vec<User> = placed
            .iter()
            .enumerate()
            .map(|(k, &(position, serving_bs))| User {
                id: k,
                position,
                tx_power_dbm: mue_levels[k].unwrap_or(config.powers.sue_dbm),
                serving_bs,
            })
            .collect();
        let gains: Vec<Vec<f64>> = users
            .iter()
            .map(|u| {
                bss.iter()
                    .map(|bs| {
                        let class = if bs.id == 0 {
                            LinkClass::Macro
                        } else if u.serving_bs == bs.id {
                            LinkClass::SmallIndoor
                        } else {
                            LinkClass::SmallOutdoor
                        };
                        path_gain(&config.path_loss, class, bs.position, u.position)
                    })
                    .collect()
            })
            .collect();
        let multipath: Vec<Vec<u32>> = (0..n_users)
            .map(|_| {
                (0..=n_sbs)
                    .map(|_| match config.fixed_multipath {
                        Some(l) => l,
                        None => rng.gen_range(1..=config.q_max),
                    })
                    .collect()
            })
            .collect();
        match Scenario::new(
            bss,
            users,
            gains,
            multipath,
            config.epsilon_n,
            config.noise_floor_dbm,
        ) {
            Ok(s) => return Ok(s),
            Err(e @ HetnetError::InfeasibleBaseLoad { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(HarnessError::Hetnet(e)),
        }
    }
    Err(HarnessError::InfeasibleGeneration {
        attempts: GENERATION_ATTEMPT_CAP,
        last: last_err.expect("loop exits early unless a draw failed"),
    })
}
