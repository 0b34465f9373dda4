//! Deterministic 2D quasi-static cooperative-pushing environment: two disc
//! robots push a rigid rectangular object toward a goal landmark.
//!
//! Contact is resolved with a penetration-based quasi-static model: per
//! substep each robot disc's minimal translation vector out of the object
//! rectangle is split between the object (translation plus rotation via the
//! contact lever arm) and the robot. The object carries no momentum between
//! steps.

pub mod config;
pub mod contact;
mod obs;
mod vec_env;

pub use config::{CameraPreset, GoalMode, ScenarioConfig, SpawnBox};
pub use obs::{
    follower_obs, follower_obs_with_goal, global_state, global_state_dim, leader_obs,
    obs_parts, observation_pair, rel_in_base, ObsParts, ObservationPair, FOLLOWER_OBS_DIM,
    LEADER_OBS_DIM, OBS_TILDE_DIM,
};
pub use vec_env::VecEnv;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use contact::{apply_at_point, disc_disc_mtv, disc_rect_contact, norm, rot, RectPose};

/// Leader index in all per-robot arrays.
pub const LEADER: usize = 0;
/// Follower index in all per-robot arrays.
pub const FOLLOWER: usize = 1;

/// Robot-object proximity reward weights (leader, follower).
pub const REWARD_W: [f64; 2] = [2.5, 3.0];
/// Object-goal proximity reward coefficient.
pub const R_OBJ_COEF: f64 = 6.0;
/// Termination penalty on robot-robot collision.
pub const R_TERM: f64 = -2.0;

/// Share of the resolution displacement taken by the object.
const KAPPA: f64 = 0.5;
const SUBSTEPS: usize = 4;
const PENETRATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pos: [f64; 2],
    pub yaw: f64,
    /// Commanded base-frame twist (vx, vy, omega_z).
    pub twist: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectState {
    pub pos: [f64; 2],
    pub yaw: f64,
    /// World-frame twist realized over the last step (vx, vy, omega_z).
    pub twist: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robots: [RobotState; 2],
    pub object: ObjectState,
    /// Per-episode goal landmark positions.
    pub goals: Vec<[f64; 2]>,
    pub step: usize,
    pub terminated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    None,
    Horizon,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Robot-object proximity reward per robot.
    pub r_rob: [f64; 2],
    /// Shared object-goal proximity reward.
    pub r_obj: f64,
    /// Termination penalty (0 or -2).
    pub r_term: f64,
    /// Totals per robot: r_rob[i] + r_obj + r_term.
    pub total: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: WorldState,
    pub obs: ObservationPair,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub reason: DoneReason,
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

fn object_rect(state: &WorldState, config: &ScenarioConfig) -> RectPose {
    RectPose {
        pos: state.object.pos,
        yaw: state.object.yaw,
        half_extents: config.object_half_extents,
    }
}

/// 1 / (per-unit-mass planar inertia) of the object box.
fn inv_inertia(config: &ScenarioConfig) -> f64 {
    let w = 2.0 * config.object_half_extents[0];
    let h = 2.0 * config.object_half_extents[1];
    12.0 / (w * w + h * h)
}

/// Sample initial robot poses in the configured boxes; resample on overlap.
pub fn reset<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Result<(WorldState, ObservationPair)> {
    config.validate()?;
    let mut goals = config.goals.clone();
    if let Some([bx, by]) = config.goal_sample_box {
        goals[config.instructed_goal] =
            [rng.random_range(bx[0]..bx[1]), rng.random_range(by[0]..by[1])];
    }

    let object = ObjectState {
        pos: config.object_init_pos,
        yaw: config.object_init_yaw,
        twist: [0.0; 3],
    };
    let obj_rect = RectPose {
        pos: object.pos,
        yaw: object.yaw,
        half_extents: config.object_half_extents,
    };

    let sample_robot = |rng: &mut R, b: &SpawnBox| RobotState {
        pos: [rng.random_range(b.x[0]..b.x[1]), rng.random_range(b.y[0]..b.y[1])],
        yaw: b.yaw,
        twist: [0.0; 3],
    };

    for _ in 0..100 {
        let leader = sample_robot(rng, &config.leader_spawn);
        let follower = sample_robot(rng, &config.follower_spawn);
        let mut ok = disc_disc_mtv(leader.pos, config.robot_radius, follower.pos, config.robot_radius)
            .is_none();
        for r in [&leader, &follower] {
            ok &= disc_rect_contact(r.pos, config.robot_radius, &obj_rect).is_none();
            if config.goal_mode == GoalMode::Cylinder {
                for g in &goals {
                    ok &= disc_disc_mtv(r.pos, config.robot_radius, *g, config.goal_radius).is_none();
                }
            }
        }
        if ok {
            let state = WorldState {
                robots: [leader, follower],
                object,
                goals,
                step: 0,
                terminated: false,
            };
            let obs = obs::observation_pair(&obs_parts(&state, config));
            return Ok((state, obs));
        }
    }
    Err(Error::InvalidConfig("could not sample non-overlapping initial poses in 100 tries".into()))
}

/// Resolve robot-object and object/robot-cylinder penetrations in place.
/// Returns true if any robot-object contact occurred.
fn resolve_contacts(state: &mut WorldState, config: &ScenarioConfig) -> bool {
    let inv_i = inv_inertia(config);
    let cylinders: Vec<[f64; 2]> =
        if config.goal_mode == GoalMode::Cylinder { state.goals.clone() } else { Vec::new() };
    let mut any_contact = false;

    for _ in 0..12 {
        let mut max_pen: f64 = 0.0;
        for i in 0..2 {
            let rect = object_rect(state, config);
            if let Some(c) = disc_rect_contact(state.robots[i].pos, config.robot_radius, &rect) {
                any_contact = true;
                max_pen = max_pen.max(c.depth);
                let d_obj = [-KAPPA * c.mtv[0], -KAPPA * c.mtv[1]];
                let disp = apply_at_point(&rect, d_obj, c.point, inv_i);
                state.object.pos[0] += disp.translation[0];
                state.object.pos[1] += disp.translation[1];
                state.object.yaw = wrap_angle(state.object.yaw + disp.rotation);
                state.robots[i].pos[0] += (1.0 - KAPPA) * c.mtv[0];
                state.robots[i].pos[1] += (1.0 - KAPPA) * c.mtv[1];
            }
        }
        for g in &cylinders {
            let rect = object_rect(state, config);
            if let Some(c) = disc_rect_contact(*g, config.goal_radius, &rect) {
                // The cylinder is static: the object takes the full correction.
                max_pen = max_pen.max(c.depth);
                let disp = apply_at_point(&rect, [-c.mtv[0], -c.mtv[1]], c.point, inv_i);
                state.object.pos[0] += disp.translation[0];
                state.object.pos[1] += disp.translation[1];
                state.object.yaw = wrap_angle(state.object.yaw + disp.rotation);
            }
            for i in 0..2 {
                if let Some(mtv) =
                    disc_disc_mtv(state.robots[i].pos, config.robot_radius, *g, config.goal_radius)
                {
                    max_pen = max_pen.max(norm(mtv));
                    state.robots[i].pos[0] += mtv[0];
                    state.robots[i].pos[1] += mtv[1];
                }
            }
        }
        if max_pen < 1e-9 {
            break;
        }
    }

    // Translation-only projection pass to pin the non-penetration invariant.
    for _ in 0..16 {
        let mut max_pen: f64 = 0.0;
        for g in &cylinders {
            let rect = object_rect(state, config);
            if let Some(c) = disc_rect_contact(*g, config.goal_radius, &rect) {
                max_pen = max_pen.max(c.depth);
                state.object.pos[0] -= c.mtv[0];
                state.object.pos[1] -= c.mtv[1];
            }
        }
        for i in 0..2 {
            let rect = object_rect(state, config);
            if let Some(c) = disc_rect_contact(state.robots[i].pos, config.robot_radius, &rect) {
                max_pen = max_pen.max(c.depth);
                state.robots[i].pos[0] += c.mtv[0];
                state.robots[i].pos[1] += c.mtv[1];
            }
            for g in &cylinders {
                if let Some(mtv) =
                    disc_disc_mtv(state.robots[i].pos, config.robot_radius, *g, config.goal_radius)
                {
                    max_pen = max_pen.max(norm(mtv));
                    state.robots[i].pos[0] += mtv[0];
                    state.robots[i].pos[1] += mtv[1];
                }
            }
        }
        if max_pen < PENETRATION_TOL {
            break;
        }
    }
    any_contact
}

/// Advance one control step. Actions are base-frame twists, clipped to the
/// configured bounds before integration.
pub fn step(
    state: &WorldState,
    action_leader: &[f64; 3],
    action_follower: &[f64; 3],
    config: &ScenarioConfig,
) -> Result<StepOutcome> {
    if state.terminated {
        return Err(Error::Contract("stepping a terminated environment".into()));
    }
    for a in [action_leader, action_follower] {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action".into()));
        }
    }

    let mut next = state.clone();
    let clip = |a: &[f64; 3]| {
        [
            a[0].clamp(-config.v_max, config.v_max),
            a[1].clamp(-config.v_max, config.v_max),
            a[2].clamp(-config.omega_max, config.omega_max),
        ]
    };
    next.robots[LEADER].twist = clip(action_leader);
    next.robots[FOLLOWER].twist = clip(action_follower);

    let obj_start = (next.object.pos, next.object.yaw);
    let dt_sub = config.dt / SUBSTEPS as f64;
    let mut contact_any = false;
    for _ in 0..SUBSTEPS {
        for r in &mut next.robots {
            let v_world = rot([r.twist[0], r.twist[1]], r.yaw);
            r.pos[0] += v_world[0] * dt_sub;
            r.pos[1] += v_world[1] * dt_sub;
            r.yaw = wrap_angle(r.yaw + r.twist[2] * dt_sub);
        }
        contact_any |= resolve_contacts(&mut next, config);
    }

    // Quasi-static object twist: realized displacement over the step.
    if contact_any {
        next.object.twist = [
            (next.object.pos[0] - obj_start.0[0]) / config.dt,
            (next.object.pos[1] - obj_start.0[1]) / config.dt,
            wrap_angle(next.object.yaw - obj_start.1) / config.dt,
        ];
    } else {
        next.object.twist = [0.0; 3];
    }

    next.step += 1;
    let (done, reason) = check_termination(&next, config);
    next.terminated = done;

    let reward = compute_rewards(&next, config);
    let obs = obs::observation_pair(&obs_parts(&next, config));
    Ok(StepOutcome { state: next, obs, reward, done, reason })
}

/// Reward terms evaluated on the given (post-step) state.
pub fn compute_rewards(state: &WorldState, config: &ScenarioConfig) -> RewardBreakdown {
    let goal = state.goals[config.instructed_goal];
    let obj = state.object.pos;

    let mut r_rob = [0.0; 2];
    for i in 0..2 {
        let r = &state.robots[i];
        let d = [obj[0] - r.pos[0], obj[1] - r.pos[1]];
        let dist = norm(d);
        // cos of the angle between the robot heading and the displacement
        // toward the object; defined as 1 (theta = 0) at zero distance.
        let cos_theta = if dist > 1e-12 {
            let heading = [r.yaw.cos(), r.yaw.sin()];
            (heading[0] * d[0] + heading[1] * d[1]) / dist
        } else {
            1.0
        };
        r_rob[i] = REWARD_W[i] * (-dist).exp() * (cos_theta + 0.2);
    }

    let dg = norm([obj[0] - goal[0], obj[1] - goal[1]]);
    let r_obj = R_OBJ_COEF * (-dg).exp();
    let r_term = if robots_collide(state, config) { R_TERM } else { 0.0 };
    RewardBreakdown {
        r_rob,
        r_obj,
        r_term,
        total: [r_rob[0] + r_obj + r_term, r_rob[1] + r_obj + r_term],
    }
}

fn robots_collide(state: &WorldState, config: &ScenarioConfig) -> bool {
    let d = norm([
        state.robots[0].pos[0] - state.robots[1].pos[0],
        state.robots[0].pos[1] - state.robots[1].pos[1],
    ]);
    d < 2.0 * config.robot_radius
}

pub fn check_termination(state: &WorldState, config: &ScenarioConfig) -> (bool, DoneReason) {
    if robots_collide(state, config) {
        (true, DoneReason::Collision)
    } else if state.step >= config.horizon {
        (true, DoneReason::Horizon)
    } else {
        (false, DoneReason::None)
    }
}

/// End-of-trial metrics: object-goal distance and the success flag at
/// threshold `delta`.
pub fn metrics(state: &WorldState, config: &ScenarioConfig, delta: f64) -> (f64, bool) {
    let goal = state.goals[config.instructed_goal];
    let ogd = norm([state.object.pos[0] - goal[0], state.object.pos[1] - goal[1]]);
    (ogd, ogd < delta)
}

/// Maximum penetration depth among robot-object and object/robot-cylinder
/// pairs; diagnostics for the non-penetration invariant.
pub fn max_penetration(state: &WorldState, config: &ScenarioConfig) -> f64 {
    let rect = object_rect(state, config);
    let mut pen: f64 = 0.0;
    for r in &state.robots {
        if let Some(c) = disc_rect_contact(r.pos, config.robot_radius, &rect) {
            pen = pen.max(c.depth);
        }
    }
    if config.goal_mode == GoalMode::Cylinder {
        for g in &state.goals {
            if let Some(c) = disc_rect_contact(*g, config.goal_radius, &rect) {
                pen = pen.max(c.depth);
            }
            for r in &state.robots {
                if let Some(mtv) = disc_disc_mtv(r.pos, config.robot_radius, *g, config.goal_radius) {
                    pen = pen.max(norm(mtv));
                }
            }
        }
    }
    pen
}
