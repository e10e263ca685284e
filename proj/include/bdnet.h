#ifndef BDNET_H
#define BDNET_H

/* C interface to the backdoor toolkit. All functions return a bd_status;
 * on failure a human-readable message is available from bd_last_error()
 * until the next failing call on the same thread. Handles returned through
 * out-parameters are owned by the caller and released with the matching
 * _free function. NULL handles are safe to free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bd_status {
  BD_OK = 0,
  BD_INVALID_ARGUMENT = 1,
  BD_SHAPE_MISMATCH = 2,
  BD_NUMERIC_ERROR = 3,
  BD_FORMAT_ERROR = 4,
  BD_CORRUPT_FILE = 5,
  BD_IO_ERROR = 6,
  BD_CONFIG_ERROR = 7,
  BD_EVALUATION_ERROR = 8,
  BD_NOT_FOUND = 9
} bd_status;

typedef enum bd_outcome {
  BD_OUTCOME_FAILED = 0,
  BD_OUTCOME_PLAUSIBLE = 1,
  BD_OUTCOME_SUCCESSFUL = 2
} bd_outcome;

const char* bd_status_name(bd_status status);

/* Message from the most recent failing call on this thread; empty string
 * when nothing failed yet. The pointer stays valid until the next failing
 * call on the same thread. */
const char* bd_last_error(void);

/* Identifier of the seed-derivation scheme used for all randomness. */
const char* bd_seed_scheme(void);

/* ---- models ---------------------------------------------------------- */

typedef struct bd_network bd_network;

bd_status bd_network_load(const char* path, bd_network** out);
bd_status bd_network_save(const bd_network* net, const char* path);
void bd_network_free(bd_network* net);

bd_status bd_network_input_size(const bd_network* net, size_t* out);
bd_status bd_network_output_size(const bd_network* net, size_t* out);

/* Runs inference on one flat row-major input. output_len must equal the
 * network's output size. */
bd_status bd_network_forward(const bd_network* net, const float* input,
                             size_t input_len, float* output, size_t output_len);

/* Lowercase SHA-256 hex of the file bytes; hex_out must hold 65 chars. */
bd_status bd_model_hash(const char* path, char* hex_out, size_t hex_cap);

/* *match_out is 1 when the file digest equals expected_hex, else 0. */
bd_status bd_model_verify(const char* path, const char* expected_hex,
                          int* match_out);

/* ---- commands -------------------------------------------------------- */

/* Key/value configuration, same vocabulary as the CLI flags and config
 * files. Keys set later override earlier values. */
typedef struct bd_config bd_config;

bd_status bd_config_create(bd_config** out);
void bd_config_free(bd_config* cfg);
bd_status bd_config_set(bd_config* cfg, const char* key, const char* value);
bd_status bd_config_load_file(bd_config* cfg, const char* path);

/* Writes a synthetic digit dataset. Requires key "out". */
bd_status bd_cmd_gen_digits(const bd_config* cfg, uint32_t* records_out);

/* Trains the 6-class fixture classifier. Requires "dataset" and
 * "model_out". Outputs may be NULL when not wanted; digest_hex_out must
 * hold 65 chars when given. */
bd_status bd_cmd_train_fixture(const bd_config* cfg, double* holdout_accuracy_out,
                               char* digest_hex_out, size_t digest_hex_cap);

/* Enrolls identities and calibrates the verification threshold. Requires
 * "model", "gallery", "calibration", "store_out". */
bd_status bd_cmd_enroll(const bd_config* cfg, double* threshold_out,
                        double* calibration_accuracy_out);

/* Runs the weight-perturbation attack; artifacts land in "out_dir" and the
 * numbers are exposed through the report handle. */
typedef struct bd_report bd_report;

bd_status bd_cmd_attack(const bd_config* cfg, bd_report** out);
void bd_report_free(bd_report* report);

bd_outcome bd_report_outcome(const bd_report* report);
double bd_report_baseline_accuracy(const bd_report* report);
double bd_report_tfp_before(const bd_report* report);
double bd_report_tfp_after(const bd_report* report);
double bd_report_a1_before(const bd_report* report);
double bd_report_a1_after(const bd_report* report);
/* Strings remain valid for the life of the report handle. */
const char* bd_report_digest_before(const bd_report* report);
const char* bd_report_digest_after(const bd_report* report);
const char* bd_report_model_path(const bd_report* report);
const char* bd_report_trace_path(const bd_report* report);
const char* bd_report_pair_path(const bd_report* report);
const char* bd_report_summary_path(const bd_report* report);
size_t bd_report_warning_count(const bd_report* report);
/* NULL when index is out of range. */
const char* bd_report_warning(const bd_report* report, size_t index);

/* Compares the model file digest against an expected hex digest.
 * *match_out is 1 on match, 0 on mismatch. */
bd_status bd_cmd_audit(const char* model_path, const char* expected_hex,
                       int* match_out);

/* Aggregates per-run pair.csv files into report_pairs.csv and
 * report_averages.csv under out_dir. */
bd_status bd_cmd_report(const char* const* pair_csv_paths, size_t count,
                        const char* out_dir, uint32_t* rows_total_out,
                        uint32_t* rows_kept_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BDNET_H */
