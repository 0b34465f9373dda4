//! C ABI for the cooperative-pushing environment and policy checkpoints.
//!
//! All functions are `extern "C"`, operate on opaque handles, and return a
//! status code. On any failure the thread-local error message is updated and
//! can be read with [`colf_last_error_message`]. Pointers passed in must be
//! valid for the documented lengths; null pointers are rejected with
//! `COLF_STATUS_NULL_POINTER`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use colf::env::{ScenarioConfig, VecEnv};
use colf::policy::{ActMode, PolicyPair, ACTION_DIM};

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColfStatus {
    ColfStatusOk = 0,
    ColfStatusNullPointer = 1,
    ColfStatusInvalidArgument = 2,
    ColfStatusRuntimeError = 3,
    ColfStatusPanic = 4,
}

use ColfStatus::*;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Copy the last error message for this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes). Returns the full message length in bytes,
/// excluding the terminator. `buf` may be null to query the length.
#[no_mangle]
pub extern "C" fn colf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Opaque batch-environment handle.
pub struct ColfEnv {
    envs: VecEnv,
}

/// Opaque policy-pair handle.
pub struct ColfPolicy {
    pair: PolicyPair,
    rng: ChaCha8Rng,
}

fn guard(f: impl FnOnce() -> ColfStatus) -> ColfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            ColfStatusPanic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Create a batch of `n_envs` environments from a scenario preset name or a
/// TOML file path. On success writes the handle to `out`.
///
/// # Safety
/// `scenario` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colf_env_create(
    scenario: *const c_char,
    n_envs: usize,
    seed: u64,
    out: *mut *mut ColfEnv,
) -> ColfStatus {
    guard(|| {
        if out.is_null() {
            set_error("out handle pointer is null");
            return ColfStatusNullPointer;
        }
        let Some(name) = (unsafe { cstr(scenario) }) else {
            set_error("scenario string is null or not UTF-8");
            return ColfStatusNullPointer;
        };
        if n_envs == 0 {
            set_error("n_envs must be positive");
            return ColfStatusInvalidArgument;
        }
        let cfg = match ScenarioConfig::preset_or_file(name) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return ColfStatusInvalidArgument;
            }
        };
        match VecEnv::new(cfg, n_envs, seed) {
            Ok(envs) => {
                unsafe { *out = Box::into_raw(Box::new(ColfEnv { envs })) };
                ColfStatusOk
            }
            Err(e) => {
                set_error(&e.to_string());
                ColfStatusRuntimeError
            }
        }
    })
}

/// Destroy an environment handle. Passing null is a no-op.
///
/// # Safety
/// `env` must be a handle returned by `colf_env_create`, used at most once.
#[no_mangle]
pub unsafe extern "C" fn colf_env_destroy(env: *mut ColfEnv) {
    if !env.is_null() {
        drop(unsafe { Box::from_raw(env) });
    }
}

/// Number of environment instances in the batch.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colf_env_num_envs(env: *const ColfEnv) -> usize {
    if env.is_null() {
        return 0;
    }
    unsafe { &*env }.envs.len()
}

/// Per-agent observation vector length: agent 0 is the leader (13), agent 1
/// the goal-blind follower (11), agent 2 the goal-conditioned follower (13).
#[no_mangle]
pub extern "C" fn colf_env_obs_dim(agent: c_int) -> usize {
    match agent {
        0 | 2 => colf::env::LEADER_OBS_DIM,
        1 => colf::env::FOLLOWER_OBS_DIM,
        _ => 0,
    }
}

/// Action vector length per robot.
#[no_mangle]
pub extern "C" fn colf_action_dim() -> usize {
    ACTION_DIM
}

/// Write the current observations for `agent` (see `colf_env_obs_dim`) into
/// `buf`, row-major `[n_envs][dim]`. `buf_len` must be exactly `n_envs*dim`.
///
/// # Safety
/// `env` must be a live handle; `buf` must point to `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn colf_env_observe(
    env: *const ColfEnv,
    agent: c_int,
    buf: *mut f64,
    buf_len: usize,
) -> ColfStatus {
    guard(|| {
        if env.is_null() || buf.is_null() {
            set_error("env or buffer is null");
            return ColfStatusNullPointer;
        }
        let dim = colf_env_obs_dim(agent);
        if dim == 0 {
            set_error("agent must be 0 (leader), 1 (follower), or 2 (follower+goal)");
            return ColfStatusInvalidArgument;
        }
        let h = unsafe { &*env };
        let n = h.envs.len();
        if buf_len != n * dim {
            set_error(&format!("buffer length {} != n_envs*dim = {}", buf_len, n * dim));
            return ColfStatusInvalidArgument;
        }
        let obs = h.envs.observations();
        let out = unsafe { std::slice::from_raw_parts_mut(buf, buf_len) };
        for (e, pair) in obs.iter().enumerate() {
            let row: &[f64] = match agent {
                0 => &pair.leader,
                1 => &pair.follower,
                _ => &pair.follower_with_goal,
            };
            out[e * dim..(e + 1) * dim].copy_from_slice(row);
        }
        ColfStatusOk
    })
}

/// Step every environment instance. `actions` is row-major
/// `[n_envs][6]`: leader (vx, vy, omega) then follower (vx, vy, omega).
/// Outputs (each may be null to skip): `rewards` `[n_envs][2]`,
/// `r_obj` `[n_envs]`, `dones` `[n_envs]` (0/1). Finished instances reset
/// automatically.
///
/// # Safety
/// `env` must be a live handle and each non-null buffer must have the
/// documented length.
#[no_mangle]
pub unsafe extern "C" fn colf_env_step(
    env: *mut ColfEnv,
    actions: *const f64,
    actions_len: usize,
    rewards: *mut f64,
    r_obj: *mut f64,
    dones: *mut u8,
) -> ColfStatus {
    guard(|| {
        if env.is_null() || actions.is_null() {
            set_error("env or actions is null");
            return ColfStatusNullPointer;
        }
        let h = unsafe { &mut *env };
        let n = h.envs.len();
        if actions_len != n * 2 * ACTION_DIM {
            set_error(&format!("actions length {} != n_envs*6 = {}", actions_len, n * 6));
            return ColfStatusInvalidArgument;
        }
        let a = unsafe { std::slice::from_raw_parts(actions, actions_len) };
        let pairs: Vec<([f64; 3], [f64; 3])> = (0..n)
            .map(|e| {
                let r = &a[e * 6..(e + 1) * 6];
                ([r[0], r[1], r[2]], [r[3], r[4], r[5]])
            })
            .collect();
        let step = match h.envs.step_all(&pairs) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return ColfStatusRuntimeError;
            }
        };
        if !rewards.is_null() {
            let out = unsafe { std::slice::from_raw_parts_mut(rewards, n * 2) };
            for e in 0..n {
                out[e * 2] = step.rewards[e][0];
                out[e * 2 + 1] = step.rewards[e][1];
            }
        }
        if !r_obj.is_null() {
            let out = unsafe { std::slice::from_raw_parts_mut(r_obj, n) };
            out.copy_from_slice(&step.r_obj);
        }
        if !dones.is_null() {
            let out = unsafe { std::slice::from_raw_parts_mut(dones, n) };
            for e in 0..n {
                out[e] = u8::from(step.dones[e]);
            }
        }
        ColfStatusOk
    })
}

/// Load a policy pair from a checkpoint file. On success writes the handle
/// to `out`. The handle owns a deterministic RNG seeded with 0; see
/// `colf_policy_reseed`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_load(
    path: *const c_char,
    out: *mut *mut ColfPolicy,
) -> ColfStatus {
    guard(|| {
        if out.is_null() {
            set_error("out handle pointer is null");
            return ColfStatusNullPointer;
        }
        let Some(p) = (unsafe { cstr(path) }) else {
            set_error("path string is null or not UTF-8");
            return ColfStatusNullPointer;
        };
        match PolicyPair::load(std::path::Path::new(p)) {
            Ok((pair, _)) => {
                let h = ColfPolicy { pair, rng: ChaCha8Rng::seed_from_u64(0) };
                unsafe { *out = Box::into_raw(Box::new(h)) };
                ColfStatusOk
            }
            Err(e) => {
                set_error(&e.to_string());
                ColfStatusRuntimeError
            }
        }
    })
}

/// Destroy a policy handle. Passing null is a no-op.
///
/// # Safety
/// `policy` must be a handle returned by `colf_policy_load`, used at most once.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_destroy(policy: *mut ColfPolicy) {
    if !policy.is_null() {
        drop(unsafe { Box::from_raw(policy) });
    }
}

/// Reseed the handle's sampling RNG (only affects `sample != 0` actions).
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_reseed(policy: *mut ColfPolicy, seed: u64) -> ColfStatus {
    if policy.is_null() {
        set_error("policy is null");
        return ColfStatusNullPointer;
    }
    unsafe { &mut *policy }.rng = ChaCha8Rng::seed_from_u64(seed);
    ColfStatusOk
}

/// Copy the method name ("mappo", "colf", ...) into `buf`, NUL-terminated
/// and truncated to `len` bytes. Returns the full name length in bytes.
///
/// # Safety
/// `policy` must be a live handle; `buf` must point to `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_method_name(
    policy: *const ColfPolicy,
    buf: *mut c_char,
    len: usize,
) -> usize {
    if policy.is_null() {
        return 0;
    }
    let name = unsafe { &*policy }.pair.method.name();
    let bytes = name.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
    }
    bytes.len()
}

/// Observation length expected by `agent` (0 leader, 1 follower) of this
/// policy. The follower length depends on the method wiring.
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_obs_dim(policy: *const ColfPolicy, agent: c_int) -> usize {
    if policy.is_null() {
        return 0;
    }
    let pair = &unsafe { &*policy }.pair;
    match agent {
        0 => pair.leader.obs_dim,
        1 => pair.follower.obs_dim,
        _ => 0,
    }
}

/// Compute one action for `agent` (0 leader, 1 follower). `obs_len` must
/// equal `colf_policy_obs_dim`. With `sample == 0` the deterministic
/// distribution mean is returned; otherwise an action is drawn from the
/// handle's RNG. `action` receives 3 doubles.
///
/// # Safety
/// `policy` must be a live handle; `obs` must point to `obs_len` doubles and
/// `action` to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn colf_policy_act(
    policy: *mut ColfPolicy,
    agent: c_int,
    obs: *const f64,
    obs_len: usize,
    sample: c_int,
    action: *mut f64,
) -> ColfStatus {
    guard(|| {
        if policy.is_null() || obs.is_null() || action.is_null() {
            set_error("policy, obs, or action is null");
            return ColfStatusNullPointer;
        }
        let h = unsafe { &mut *policy };
        let net = match agent {
            0 => &h.pair.leader,
            1 => &h.pair.follower,
            _ => {
                set_error("agent must be 0 (leader) or 1 (follower)");
                return ColfStatusInvalidArgument;
            }
        };
        if obs_len != net.obs_dim {
            set_error(&format!("obs length {} != expected {}", obs_len, net.obs_dim));
            return ColfStatusInvalidArgument;
        }
        let o = unsafe { std::slice::from_raw_parts(obs, obs_len) };
        let mode = if sample == 0 { ActMode::Mean } else { ActMode::Sample };
        match net.act(o, mode, &mut h.rng) {
            Ok((a, _, _)) => {
                let out = unsafe { std::slice::from_raw_parts_mut(action, ACTION_DIM) };
                out.copy_from_slice(&a.to_vec());
                ColfStatusOk
            }
            Err(e) => {
                set_error(&e.to_string());
                ColfStatusRuntimeError
            }
        }
    })
}
