//! Observation construction. All relative quantities are expressed in the
//! observing robot's base frame so that observations are invariant to a
//! global rotation of the world.
//!
//! Leader observation (13): [o_obj(2), o_goal(2), o_tilde(9)].
//! Follower observation (11): [o_obj(2), o_tilde(9)].
//! o_tilde (9): base-frame linear velocity (3, vz = 0), gravity vector in
//! the robot frame (3, constant (0, 0, -1) in the planar sim), other-robot
//! relative planar position (2), other-robot relative yaw (1).

use super::config::ScenarioConfig;
use super::contact::rot;
use super::WorldState;

pub const LEADER_OBS_DIM: usize = 13;
pub const FOLLOWER_OBS_DIM: usize = 11;
pub const OBS_TILDE_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    pub leader: Vec<f64>,
    pub follower: Vec<f64>,
    /// Goal-conditioned variant for symmetric baselines.
    pub follower_with_goal: Vec<f64>,
}

/// Raw observation components per robot, before wiring into policy inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsParts {
    /// Object position relative to each robot, base frame.
    pub o_obj: [[f64; 2]; 2],
    /// Instructed-goal position relative to each robot, base frame.
    pub o_goal: [[f64; 2]; 2],
    /// Remaining local observation per robot.
    pub o_tilde: [[f64; OBS_TILDE_DIM]; 2],
}

/// Express world point `p` in the robot base frame.
pub fn rel_in_base(robot_pos: [f64; 2], robot_yaw: f64, p: [f64; 2]) -> [f64; 2] {
    rot([p[0] - robot_pos[0], p[1] - robot_pos[1]], -robot_yaw)
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

pub fn obs_parts(state: &WorldState, config: &ScenarioConfig) -> ObsParts {
    let goal = state.goals[config.instructed_goal];
    let mut o_obj = [[0.0; 2]; 2];
    let mut o_goal = [[0.0; 2]; 2];
    let mut o_tilde = [[0.0; OBS_TILDE_DIM]; 2];
    for i in 0..2 {
        let r = &state.robots[i];
        let other = &state.robots[1 - i];
        o_obj[i] = rel_in_base(r.pos, r.yaw, state.object.pos);
        o_goal[i] = rel_in_base(r.pos, r.yaw, goal);
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

/// Assemble the asymmetric leader/follower observation pair.
pub fn observation_pair(parts: &ObsParts) -> ObservationPair {
    ObservationPair {
        leader: leader_obs(parts),
        follower: follower_obs(parts),
        follower_with_goal: follower_obs_with_goal(parts),
    }
}

pub fn leader_obs(parts: &ObsParts) -> Vec<f64> {
    let mut v = Vec::with_capacity(LEADER_OBS_DIM);
    v.extend_from_slice(&parts.o_obj[0]);
    v.extend_from_slice(&parts.o_goal[0]);
    v.extend_from_slice(&parts.o_tilde[0]);
    v
}

/// Goal-blind follower observation (11).
pub fn follower_obs(parts: &ObsParts) -> Vec<f64> {
    let mut v = Vec::with_capacity(FOLLOWER_OBS_DIM);
    v.extend_from_slice(&parts.o_obj[1]);
    v.extend_from_slice(&parts.o_tilde[1]);
    v
}

/// Goal-conditioned follower observation (13), used by the symmetric
/// baselines where both robots see the goal.
pub fn follower_obs_with_goal(parts: &ObsParts) -> Vec<f64> {
    let mut v = Vec::with_capacity(LEADER_OBS_DIM);
    v.extend_from_slice(&parts.o_obj[1]);
    v.extend_from_slice(&parts.o_goal[1]);
    v.extend_from_slice(&parts.o_tilde[1]);
    v
}

/// Centralized-critic input: absolute robot poses, object pose, goal
/// position(s), and (iff `aac`) the object twist.
pub fn global_state(state: &WorldState, aac: bool) -> Vec<f64> {
    let mut v = Vec::with_capacity(global_state_dim(state.goals.len(), aac));
    for r in &state.robots {
        v.extend_from_slice(&[r.pos[0], r.pos[1], r.yaw]);
    }
    v.extend_from_slice(&[state.object.pos[0], state.object.pos[1], state.object.yaw]);
    for g in &state.goals {
        v.extend_from_slice(g);
    }
    if aac {
        v.extend_from_slice(&state.object.twist);
    }
    v
}

pub fn global_state_dim(n_goals: usize, aac: bool) -> usize {
    9 + 2 * n_goals + if aac { 3 } else { 0 }
}
