#ifndef SNDIFF_H
#define SNDIFF_H

/* C interface to the small-noise diffusion toolkit: model construction from
 * JSON, path simulation, action evaluation and minimization, and the
 * experiment runner. All functions return sn_status; on failure,
 * sn_last_error() describes the problem (thread-local). */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    SN_OK = 0,
    SN_ERR_INVALID_ARGUMENT = 1,
    SN_ERR_RUNTIME = 2
} sn_status;

typedef struct sn_model sn_model;
typedef struct sn_path sn_path;

const char* sn_version(void);
const char* sn_rng_id(void);
const char* sn_last_error(void);

/* Model from its JSON description (same schema the CLI configs use). */
sn_status sn_model_create(const char* model_json, sn_model** out);
void sn_model_free(sn_model* model);
int sn_model_state_size(const sn_model* model);

/* Simulate a single path. sim_json holds dt, T, scheme, seed, noise_off. */
sn_status sn_simulate(const sn_model* model, const double* x0, size_t x0_len,
                      const char* sim_json, sn_path** out);
void sn_path_free(sn_path* path);
int sn_path_nodes(const sn_path* path);
int sn_path_state_size(const sn_path* path);
double sn_path_dt(const sn_path* path);
sn_status sn_path_state(const sn_path* path, int node, double* out, size_t out_len);

/* Action (rate-functional value) of a discrete path under the model. */
sn_status sn_action(const sn_model* model, const sn_path* path, double* out);

/* Minimum-action path between fixed endpoints over `slices` time intervals. */
sn_status sn_minimize_action(const sn_model* model, const double* x0, const double* x1,
                             size_t len, double horizon, int slices, sn_path** path_out,
                             double* action_out);

/* Run a full experiment config (JSON). exit_status receives 0 when every
 * check in the experiment passed. summary_json, if non-NULL, receives the
 * summary document; free it with sn_string_free. */
sn_status sn_run_experiment(const char* config_json, int* exit_status, char** summary_json);
void sn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
