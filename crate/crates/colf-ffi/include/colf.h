/* C ABI for the cooperative-pushing environment and policies. */

#ifndef COLF_H
#define COLF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum ColfStatus {
  COLF_STATUS_OK = 0,
  COLF_STATUS_NULL_POINTER = 1,
  COLF_STATUS_INVALID_ARGUMENT = 2,
  COLF_STATUS_RUNTIME_ERROR = 3,
  COLF_STATUS_PANIC = 4,
} ColfStatus;

/**
 * Opaque batch-environment handle.
 */
typedef struct ColfEnv ColfEnv;

/**
 * Opaque policy-pair handle.
 */
typedef struct ColfPolicy ColfPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message for this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes). Returns the full message length in bytes,
 * excluding the terminator. `buf` may be null to query the length.
 */
uintptr_t colf_last_error_message(char *buf, uintptr_t len);

/**
 * Create a batch of `n_envs` environments from a scenario preset name or a
 * TOML file path. On success writes the handle to `out`.
 *
 * # Safety
 * `scenario` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ColfStatus colf_env_create(const char *scenario,
                                uintptr_t n_envs,
                                uint64_t seed,
                                struct ColfEnv **out);

/**
 * Destroy an environment handle. Passing null is a no-op.
 *
 * # Safety
 * `env` must be a handle returned by `colf_env_create`, used at most once.
 */
void colf_env_destroy(struct ColfEnv *env);

/**
 * Number of environment instances in the batch.
 *
 * # Safety
 * `env` must be a live handle.
 */
uintptr_t colf_env_num_envs(const struct ColfEnv *env);

/**
 * Per-agent observation vector length: agent 0 is the leader (13), agent 1
 * the goal-blind follower (11), agent 2 the goal-conditioned follower (13).
 */
uintptr_t colf_env_obs_dim(int agent);

/**
 * Action vector length per robot.
 */
uintptr_t colf_action_dim(void);

/**
 * Write the current observations for `agent` (see `colf_env_obs_dim`) into
 * `buf`, row-major `[n_envs][dim]`. `buf_len` must be exactly `n_envs*dim`.
 *
 * # Safety
 * `env` must be a live handle; `buf` must point to `buf_len` doubles.
 */
enum ColfStatus colf_env_observe(const struct ColfEnv *env,
                                 int agent,
                                 double *buf,
                                 uintptr_t buf_len);

/**
 * Step every environment instance. `actions` is row-major
 * `[n_envs][6]`: leader (vx, vy, omega) then follower (vx, vy, omega).
 * Outputs (each may be null to skip): `rewards` `[n_envs][2]`,
 * `r_obj` `[n_envs]`, `dones` `[n_envs]` (0/1). Finished instances reset
 * automatically.
 *
 * # Safety
 * `env` must be a live handle and each non-null buffer must have the
 * documented length.
 */
enum ColfStatus colf_env_step(struct ColfEnv *env,
                              const double *actions,
                              uintptr_t actions_len,
                              double *rewards,
                              double *r_obj,
                              uint8_t *dones);

/**
 * Load a policy pair from a checkpoint file. On success writes the handle
 * to `out`. The handle owns a deterministic RNG seeded with 0; see
 * `colf_policy_reseed`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ColfStatus colf_policy_load(const char *path, struct ColfPolicy **out);

/**
 * Destroy a policy handle. Passing null is a no-op.
 *
 * # Safety
 * `policy` must be a handle returned by `colf_policy_load`, used at most once.
 */
void colf_policy_destroy(struct ColfPolicy *policy);

/**
 * Reseed the handle's sampling RNG (only affects `sample != 0` actions).
 *
 * # Safety
 * `policy` must be a live handle.
 */
enum ColfStatus colf_policy_reseed(struct ColfPolicy *policy, uint64_t seed);

/**
 * Copy the method name ("mappo", "colf", ...) into `buf`, NUL-terminated
 * and truncated to `len` bytes. Returns the full name length in bytes.
 *
 * # Safety
 * `policy` must be a live handle; `buf` must point to `len` bytes or be null.
 */
uintptr_t colf_policy_method_name(const struct ColfPolicy *policy, char *buf, uintptr_t len);

/**
 * Observation length expected by `agent` (0 leader, 1 follower) of this
 * policy. The follower length depends on the method wiring.
 *
 * # Safety
 * `policy` must be a live handle.
 */
uintptr_t colf_policy_obs_dim(const struct ColfPolicy *policy, int agent);

/**
 * Compute one action for `agent` (0 leader, 1 follower). `obs_len` must
 * equal `colf_policy_obs_dim`. With `sample == 0` the deterministic
 * distribution mean is returned; otherwise an action is drawn from the
 * handle's RNG. `action` receives 3 doubles.
 *
 * # Safety
 * `policy` must be a live handle; `obs` must point to `obs_len` doubles and
 * `action` to 3 doubles.
 */
enum ColfStatus colf_policy_act(struct ColfPolicy *policy,
                                int agent,
                                const double *obs,
                                uintptr_t obs_len,
                                int sample,
                                double *action);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLF_H */
