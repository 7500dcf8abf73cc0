/*
 * C interface to the physics-informed EMG regression library.
 *
 * All functions return an msk_status. On failure a description is available
 * from msk_last_error() until the next call on the same thread. Handles are
 * opaque and owned by the caller; release them with the matching *_free.
 */
#ifndef MSK_PINN_H
#define MSK_PINN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MSK_API __declspec(dllexport)
#else
#define MSK_API __attribute__((visibility("default")))
#endif

typedef enum msk_status {
  MSK_OK = 0,
  MSK_ERR_INVALID_ARGUMENT = 1,
  MSK_ERR_SHAPE = 2,
  MSK_ERR_NUMERIC = 3,
  MSK_ERR_IO = 4,
  MSK_ERR_INVARIANT = 5,
  MSK_ERR_INTERNAL = 6,
  /* A sweep or ablation finished but some runs failed (see its CSV). */
  MSK_ERR_PARTIAL = 7
} msk_status;

typedef struct msk_config msk_config;
typedef struct msk_dataset msk_dataset;
typedef struct msk_model msk_model;

typedef void (*msk_log_fn)(const char* line, void* user);

MSK_API const char* msk_version(void);
MSK_API const char* msk_last_error(void);
MSK_API const char* msk_status_name(msk_status status);

/* Progress lines from long-running calls; pass NULL to silence. */
MSK_API void msk_set_log_callback(msk_log_fn fn, void* user);

/* preset: "wrist" or "knee". */
MSK_API msk_status msk_config_preset(const char* preset, msk_config** out);
MSK_API msk_status msk_config_load(const char* path, msk_config** out);
MSK_API msk_status msk_config_parse(const char* ini_text, msk_config** out);
MSK_API msk_status msk_config_set_seed(msk_config* cfg, uint64_t seed);
MSK_API msk_status msk_config_set_dataset_seed(msk_config* cfg, uint64_t seed);
MSK_API msk_status msk_config_set_output_dir(msk_config* cfg, const char* dir);
/* Borrowed pointer, valid until the config is modified or freed. */
MSK_API const char* msk_config_output_dir(const msk_config* cfg);
/* Resolved configuration as INI text; free with msk_string_free. */
MSK_API msk_status msk_config_to_ini(const msk_config* cfg, char** out);
MSK_API void msk_config_free(msk_config* cfg);
MSK_API void msk_string_free(char* s);

/* Simulate and write trial CSVs plus dataset.ini under out_dir. out may be NULL. */
MSK_API msk_status msk_generate(const msk_config* cfg, const char* out_dir, msk_dataset** out);
MSK_API msk_status msk_dataset_load(const char* dir, msk_dataset** out);
MSK_API size_t msk_dataset_trial_count(const msk_dataset* ds);
MSK_API size_t msk_dataset_muscle_count(const msk_dataset* ds);
MSK_API void msk_dataset_free(msk_dataset* ds);

/* Train the configured method; writes checkpoint/, history.csv, loss.svg,
 * split.csv and config.ini under out_dir. out may be NULL. */
MSK_API msk_status msk_train(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, msk_model** out);
MSK_API msk_status msk_model_save(const msk_model* model, const char* dir);
MSK_API msk_status msk_model_load(const char* dir, msk_model** out);
MSK_API void msk_model_free(msk_model* model);

/* Evaluate on the test side of a split manifest file; writes report.csv and
 * overlay SVGs. mean_nrmse may be NULL. */
MSK_API msk_status msk_eval(const msk_model* model, const msk_dataset* ds, const char* split_path,
                            const char* out_dir, double* mean_nrmse);

/* ds may be NULL, in which case the dataset is generated from cfg under
 * out_dir/dataset. */
MSK_API msk_status msk_sweep_datasize(const msk_config* cfg, const msk_dataset* ds, const char* out_dir,
                                      size_t jobs);
MSK_API msk_status msk_ablate(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, size_t jobs);

#ifdef __cplusplus
}
#endif

#endif /* MSK_PINN_H */
