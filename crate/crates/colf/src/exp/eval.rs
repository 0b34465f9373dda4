//! Evaluation protocols: SR/OGD metrics over trials and seeds, with either
//! ground-truth vector observations or the grounded perception pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{
    follower_obs, follower_obs_with_goal, leader_obs, metrics, obs_parts, rel_in_base, reset,
    step, DoneReason, GoalMode, ObsParts, RobotState, ScenarioConfig, WorldState, OBS_TILDE_DIM,
};
use crate::error::{Error, Result};
use crate::grounding::{
    estimate_position, render_synthetic, scene_entities, CameraModel, DepthMode, EstimateHolder,
    Extrinsics, GroundingStatus, MisalignmentModel, TAU,
};
use crate::policy::{ActMode, PolicyPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionMode {
    #[default]
    Vector,
    Grounded,
}

impl FromStr for PerceptionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vector" => Ok(PerceptionMode::Vector),
            "grounded" => Ok(PerceptionMode::Grounded),
            other => Err(Error::InvalidConfig(format!("unknown perception mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub perception: PerceptionMode,
    /// Follower-side misalignment; the leader always runs the identity
    /// model (it is assumed to ground the instruction correctly).
    pub follower_mis: MisalignmentModel,
    /// Sample actions instead of taking the mean (default mean).
    pub sample_actions: bool,
    /// When set, write one JSON line per step to
    /// `<path>/trajectories.jsonl`.
    pub trajectory_dir: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seeds: vec![0, 1, 2],
            perception: PerceptionMode::Vector,
            follower_mis: MisalignmentModel::identity(),
            sample_actions: false,
            trajectory_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    pub trials: usize,
    /// NaN sentinels when trials == 0.
    pub sr_065: f64,
    pub sr_075: f64,
    /// Real-robot-protocol parity mode: OGD within 0.20 m of the minimum
    /// achievable distance.
    pub sr_real: f64,
    pub mean_ogd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_seed: Vec<SeedEval>,
    pub trials_per_seed: usize,
    pub sr_065_mean: f64,
    pub sr_065_std: f64,
    pub sr_075_mean: f64,
    pub sr_075_std: f64,
    pub ogd_mean: f64,
    pub ogd_std: f64,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl EvalReport {
    pub fn from_seeds(per_seed: Vec<SeedEval>, trials_per_seed: usize) -> Self {
        let col = |f: fn(&SeedEval) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
        let (sr_065_mean, sr_065_std) = mean_std(&col(|s| s.sr_065));
        let (sr_075_mean, sr_075_std) = mean_std(&col(|s| s.sr_075));
        let (ogd_mean, ogd_std) = mean_std(&col(|s| s.mean_ogd));
        Self {
            per_seed,
            trials_per_seed,
            sr_065_mean,
            sr_065_std,
            sr_075_mean,
            sr_075_std,
            ogd_mean,
            ogd_std,
        }
    }
}

/// Minimum achievable object-goal distance: box face tangent to the goal
/// cylinder (0 for point goals).
pub fn min_achievable_ogd(config: &ScenarioConfig) -> f64 {
    match config.goal_mode {
        GoalMode::Cylinder => {
            config.goal_radius + config.object_half_extents[0].min(config.object_half_extents[1])
        }
        GoalMode::Point => 0.0,
    }
}

/// Per-robot estimates: `[object (x, y), goal (x, y)]` in world coordinates.
pub type RobotEstimates = [[f64; 2]; 2];

/// Build observation components exclusively from perception estimates; the
/// world state contributes only robot proprioception. This function cannot
/// read the true object or goal positions — the grounded-mode leakage
/// guard is structural.
pub fn grounded_obs_parts(robots: &[RobotState; 2], estimates: &[RobotEstimates; 2]) -> ObsParts {
    let mut o_obj = [[0.0; 2]; 2];
    let mut o_goal = [[0.0; 2]; 2];
    let mut o_tilde = [[0.0; OBS_TILDE_DIM]; 2];
    for i in 0..2 {
        let r = &robots[i];
        let other = &robots[1 - i];
        o_obj[i] = rel_in_base(r.pos, r.yaw, estimates[i][0]);
        o_goal[i] = rel_in_base(r.pos, r.yaw, estimates[i][1]);
        let other_rel = rel_in_base(r.pos, r.yaw, other.pos);
        o_tilde[i] = [
            r.twist[0],
            r.twist[1],
            0.0,
            0.0,
            0.0,
            -1.0,
            other_rel[0],
            other_rel[1],
            wrap_angle(other.yaw - r.yaw),
        ];
    }
    ObsParts { o_obj, o_goal, o_tilde }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// Surface-to-center range correction: the grounding pipeline back-projects
/// the camera-facing surface; push the planar estimate away from the robot
/// by the entity's nominal radius so it approximates the centroid.
fn center_correct(robot_pos: [f64; 2], planar: [f64; 2], offset: f64) -> [f64; 2] {
    let d = [planar[0] - robot_pos[0], planar[1] - robot_pos[1]];
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if n < 1e-9 {
        return planar;
    }
    [planar[0] + offset * d[0] / n, planar[1] + offset * d[1] / n]
}

struct RobotPerception {
    obj_holder: EstimateHolder,
    goal_holder: EstimateHolder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajRecord {
    pub kind: String,
    pub seed: u64,
    pub trial: usize,
    pub step: usize,
    /// Per robot: x, y, yaw.
    pub robots: [[f64; 3]; 2],
    pub object: [f64; 3],
    pub goals: Vec<[f64; 2]>,
    pub instructed_goal: usize,
    pub leader_action: [f64; 3],
    pub follower_action: [f64; 3],
    pub rewards: [f64; 2],
    pub r_obj: f64,
    /// World-frame perception estimates per robot (grounded mode only).
    pub estimates: Option<[RobotEstimates; 2]>,
    pub done: bool,
    pub reason: String,
    pub ogd: f64,
}

/// Evaluate a policy pair. Trials are sequential and deterministic per
/// evaluation seed; actions are distribution means unless sampling is
/// requested.
pub fn evaluate(
    pair: &PolicyPair,
    scenario: &ScenarioConfig,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    scenario.validate()?;
    opts.follower_mis.validate()?;
    if pair.n_goals != scenario.goals.len() {
        return Err(Error::DimensionMismatch(format!(
            "checkpoint expects {} goal(s), scenario has {}",
            pair.n_goals,
            scenario.goals.len()
        )));
    }
    let wiring = pair.wiring();
    let act_mode = if opts.sample_actions { ActMode::Sample } else { ActMode::Mean };

    let mut writer = match &opts.trajectory_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(BufWriter::new(File::create(dir.join("trajectories.jsonl"))?))
        }
        None => None,
    };

    let cam = CameraModel::working(scenario.camera);
    let obj_offset = scenario.object_half_extents[0].min(scenario.object_half_extents[1]);
    let goal_offset = scenario.goal_radius;

    let mut per_seed = Vec::with_capacity(opts.seeds.len());
    for &seed in &opts.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ogds = Vec::with_capacity(opts.trials);
        for trial in 0..opts.trials {
            let (mut state, _) = reset(scenario, &mut rng)?;
            // Per-trial grounding commitment: the follower either grounds
            // the instruction correctly or to the wrong landmark for the
            // whole trial.
            let follower_swapped = opts.perception == PerceptionMode::Grounded
                && opts.follower_mis.p_wrong > 0.0
                && rng.random::<f64>() < opts.follower_mis.p_wrong;
            let follower_goal_mis = MisalignmentModel {
                p_wrong: if follower_swapped { 1.0 } else { 0.0 },
                ..opts.follower_mis
            };
            let follower_obj_mis =
                MisalignmentModel { p_wrong: 0.0, ..opts.follower_mis };
            let leader_mis = MisalignmentModel::identity();
            let mut perception = [
                RobotPerception { obj_holder: EstimateHolder::new(), goal_holder: EstimateHolder::new() },
                RobotPerception { obj_holder: EstimateHolder::new(), goal_holder: EstimateHolder::new() },
            ];

            loop {
                let (parts, estimates) = match opts.perception {
                    PerceptionMode::Vector => (obs_parts(&state, scenario), None),
                    PerceptionMode::Grounded => {
                        let ents = scene_entities(&state, scenario);
                        let mut est: [RobotEstimates; 2] = [[[0.0; 2]; 2]; 2];
                        for i in 0..2 {
                            let r = &state.robots[i];
                            let ext = Extrinsics::from_robot(r.pos, r.yaw, cam.mount_height);
                            let out = render_synthetic(&ents, &cam, &ext)?;
                            // Goal candidates: instructed landmark first.
                            let mut goal_maps = vec![out.maps[1 + scenario.instructed_goal].clone()];
                            for (g, m) in out.maps[1..].iter().enumerate() {
                                if g != scenario.instructed_goal {
                                    goal_maps.push(m.clone());
                                }
                            }
                            let (obj_mis, goal_mis) = if i == 0 {
                                (&leader_mis, &leader_mis)
                            } else {
                                (&follower_obj_mis, &follower_goal_mis)
                            };
                            let obj_res = estimate_position(
                                &cam, &ext, &out.maps[0..1], &out.depth, TAU, obj_mis,
                                DepthMode::RegionMedian, &mut rng,
                            )?;
                            let goal_res = estimate_position(
                                &cam, &ext, &goal_maps, &out.depth, TAU, goal_mis,
                                DepthMode::RegionMedian, &mut rng,
                            )?;
                            let obj_corrected = if obj_res.status == GroundingStatus::Ok {
                                crate::grounding::GroundingResult {
                                    planar: center_correct(r.pos, obj_res.planar, obj_offset),
                                    ..obj_res
                                }
                            } else {
                                obj_res
                            };
                            let goal_corrected = if goal_res.status == GroundingStatus::Ok {
                                crate::grounding::GroundingResult {
                                    planar: center_correct(r.pos, goal_res.planar, goal_offset),
                                    ..goal_res
                                }
                            } else {
                                goal_res
                            };
                            est[i][0] = perception[i].obj_holder.update(&obj_corrected);
                            est[i][1] = perception[i].goal_holder.update(&goal_corrected);
                        }
                        (grounded_obs_parts(&state.robots, &est), Some(est))
                    }
                };

                let l_in = leader_obs(&parts);
                let f_in = if wiring.follower_sees_goal {
                    follower_obs_with_goal(&parts)
                } else {
                    follower_obs(&parts)
                };
                let (la, _, _) = pair.leader.act(&l_in, act_mode, &mut rng)?;
                let (fa, _, _) = pair.follower.act(&f_in, act_mode, &mut rng)?;
                let la3 = [la[0], la[1], la[2]];
                let fa3 = [fa[0], fa[1], fa[2]];
                let outcome = step(&state, &la3, &fa3, scenario)?;
                state = outcome.state;

                if let Some(w) = writer.as_mut() {
                    let (ogd, _) = metrics(&state, scenario, 0.65);
                    let rec = TrajRecord {
                        kind: "step".into(),
                        seed,
                        trial,
                        step: state.step,
                        robots: [
                            [state.robots[0].pos[0], state.robots[0].pos[1], state.robots[0].yaw],
                            [state.robots[1].pos[0], state.robots[1].pos[1], state.robots[1].yaw],
                        ],
                        object: [state.object.pos[0], state.object.pos[1], state.object.yaw],
                        goals: state.goals.clone(),
                        instructed_goal: scenario.instructed_goal,
                        leader_action: la3,
                        follower_action: fa3,
                        rewards: outcome.reward.total,
                        r_obj: outcome.reward.r_obj,
                        estimates,
                        done: outcome.done,
                        reason: reason_str(outcome.reason).into(),
                        ogd,
                    };
                    writeln!(w, "{}", serde_json::to_string(&rec)?)?;
                }
                if outcome.done {
                    break;
                }
            }
            let (ogd, _) = metrics(&state, scenario, 0.65);
            ogds.push(ogd);
        }

        let n = ogds.len();
        let frac = |pred: &dyn Fn(f64) -> bool| {
            if n == 0 {
                f64::NAN
            } else {
                ogds.iter().filter(|&&d| pred(d)).count() as f64 / n as f64
            }
        };
        let real_thresh = min_achievable_ogd(scenario) + 0.20;
        per_seed.push(SeedEval {
            seed,
            trials: n,
            sr_065: frac(&|d| d < 0.65),
            sr_075: frac(&|d| d < 0.75),
            sr_real: frac(&|d| d <= real_thresh),
            mean_ogd: if n == 0 { f64::NAN } else { ogds.iter().sum::<f64>() / n as f64 },
        });
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    Ok(EvalReport::from_seeds(per_seed, opts.trials))
}

pub fn reason_str(reason: DoneReason) -> &'static str {
    match reason {
        DoneReason::None => "none",
        DoneReason::Horizon => "horizon",
        DoneReason::Collision => "collision",
    }
}

/// Final per-trial OGD for a logged trajectory, recomputed from the logged
/// poses (replay oracle for the export path).
pub fn replay_ogd(record: &TrajRecord, scenario: &ScenarioConfig) -> f64 {
    let state = WorldState {
        robots: [
            RobotState {
                pos: [record.robots[0][0], record.robots[0][1]],
                yaw: record.robots[0][2],
                twist: [0.0; 3],
            },
            RobotState {
                pos: [record.robots[1][0], record.robots[1][1]],
                yaw: record.robots[1][2],
                twist: [0.0; 3],
            },
        ],
        object: crate::env::ObjectState {
            pos: [record.object[0], record.object[1]],
            yaw: record.object[2],
            twist: [0.0; 3],
        },
        goals: record.goals.clone(),
        step: record.step,
        terminated: record.done,
    };
    metrics(&state, scenario, 0.65).0
}
