/*
 * tsrnn: C API for the time-series RNN classification engine.
 *
 * Every function returns a tsrnn_status; on failure tsrnn_last_error() holds
 * a thread-local description. Handles are opaque and must be released with
 * the matching *_free function. Strings returned through char** out
 * parameters are released with tsrnn_string_free.
 */
#ifndef TSRNN_H
#define TSRNN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsrnn_status {
  TSRNN_OK = 0,
  TSRNN_ERR_INVALID = 1, /* bad arguments, shapes, config */
  TSRNN_ERR_IO = 2,      /* file access or parse failure */
  TSRNN_ERR_NUMERIC = 3, /* non-finite values detected at runtime */
  TSRNN_ERR_INTERNAL = 4
} tsrnn_status;

typedef struct tsrnn_dataset tsrnn_dataset;
typedef struct tsrnn_model tsrnn_model;

const char* tsrnn_version(void);
const char* tsrnn_status_name(tsrnn_status s);
/* thread-local message of the most recent failure; empty string if none */
const char* tsrnn_last_error(void);

/* ---- datasets -------------------------------------------------------- */

tsrnn_status tsrnn_dataset_load_csv(const char* path, int num_classes, tsrnn_dataset** out);
/* profiles_json NULL selects the built-in benchmark profile set;
 * counts_json is {"<class id>": count, ...} or NULL for 1000 per class */
tsrnn_status tsrnn_dataset_synth(const char* profiles_json, const char* counts_json,
                                 unsigned long long seed, tsrnn_dataset** out);
tsrnn_status tsrnn_dataset_save_csv(const tsrnn_dataset* ds, const char* path);
tsrnn_status tsrnn_dataset_summary_json(const tsrnn_dataset* ds, char** out_json);
int tsrnn_dataset_size(const tsrnn_dataset* ds);
int tsrnn_dataset_timesteps(const tsrnn_dataset* ds);
int tsrnn_dataset_channels(const tsrnn_dataset* ds);
void tsrnn_dataset_free(tsrnn_dataset* ds);

/* ---- models ---------------------------------------------------------- */

/* config_json follows the run-configuration schema (may be NULL for
 * defaults); the "model" field selects lstm, gru, rf or logistic */
tsrnn_status tsrnn_model_train(const tsrnn_dataset* ds, const char* config_json,
                               tsrnn_model** out);
tsrnn_status tsrnn_model_save(const tsrnn_model* m, const char* path_prefix);
tsrnn_status tsrnn_model_load(const char* path_prefix, tsrnn_model** out);
/* features: timestep-major flattened series in the dataset's value range;
 * probs_out may be NULL, otherwise it receives num_classes entries;
 * label_out receives the 1-based predicted class */
tsrnn_status tsrnn_model_predict(const tsrnn_model* m, const double* features,
                                 size_t feature_count, double* probs_out, int* label_out);
int tsrnn_model_num_classes(const tsrnn_model* m);
void tsrnn_model_free(tsrnn_model* m);

/* ---- pipeline commands ------------------------------------------------ */

tsrnn_status tsrnn_run_prep(const char* stack_json, const char* labels_json, const char* out_dir,
                            const char* config_json);
/* summary_out (optional) receives the class-count table */
tsrnn_status tsrnn_run_synth(const char* out_csv, const char* config_json, char** summary_out);
tsrnn_status tsrnn_run_xval(const char* dataset_csv, const char* out_dir,
                            const char* config_json);
tsrnn_status tsrnn_run_train(const char* dataset_csv, const char* out_dir,
                             const char* config_json);
tsrnn_status tsrnn_run_report(const char* predictions_csv, const char* out_dir,
                              const char* config_json);
/* json_report_path (optional) receives the machine-readable report;
 * report_out (optional) receives the human-readable report; returns
 * TSRNN_ERR_NUMERIC when any gradient check fails */
tsrnn_status tsrnn_run_gradcheck(const char* config_json, const char* json_report_path,
                                 char** report_out);

void tsrnn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* TSRNN_H */
