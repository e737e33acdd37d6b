/*
 * freqiqa - blind image quality assessment from blockwise DFT statistics
 * of the grayscale image and its MSCN-normalized field, scored with an
 * exponential-kernel Gaussian Process Regression model.
 *
 * C interface of the shared library. All functions return FQA_OK on
 * success; on failure they return an error code and leave a message
 * retrievable with fqa_last_error() (thread-local). Objects returned
 * through fqa_* handles must be released with the matching *_free call.
 */
#ifndef FREQIQA_H
#define FREQIQA_H

#include <stddef.h>
#include <stdint.h>

#ifdef _WIN32
#ifdef FQA_BUILDING
#define FQA_API __declspec(dllexport)
#else
#define FQA_API __declspec(dllimport)
#endif
#else
#define FQA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fqa_status {
    FQA_OK = 0,
    FQA_ERROR_USAGE = 1,   /* bad arguments or preconditions */
    FQA_ERROR_DATA = 2,    /* unreadable or malformed inputs */
    FQA_ERROR_NUMERIC = 3  /* numerical failure (factorization, ...) */
} fqa_status;

#define FQA_FEATURE_COUNT 24

FQA_API const char* fqa_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
FQA_API const char* fqa_last_error(void);

/* ---- images ---- */

typedef struct fqa_image fqa_image;

/* Decode an 8-bit raster image and convert to grayscale (BT.601 luma). */
FQA_API fqa_status fqa_image_load(const char* path, fqa_image** out);

/* Wrap a row-major buffer of luminance samples (copied). */
FQA_API fqa_status fqa_image_create(const double* data, int32_t width, int32_t height,
                                    fqa_image** out);

FQA_API fqa_status fqa_image_save_png(const fqa_image* img, const char* path);
FQA_API void fqa_image_free(fqa_image* img);
FQA_API int32_t fqa_image_width(const fqa_image* img);
FQA_API int32_t fqa_image_height(const fqa_image* img);
/* Borrowed pointer, valid until fqa_image_free. */
FQA_API const double* fqa_image_data(const fqa_image* img);

/* ---- feature extraction ---- */

typedef struct fqa_extract_options {
    /* Normalization factors for the four sum-parameter sets. */
    double nf_gray_lf;  /* default 1000 */
    double nf_mscn_lf;  /* default 100  */
    double nf_gray_hf;  /* default 100  */
    double nf_mscn_hf;  /* default 20   */
    /* Normalized sums at or below this count as zero-valued. */
    double zero_epsilon; /* default 1e-6 */
} fqa_extract_options;

FQA_API void fqa_extract_options_default(fqa_extract_options* opts);

/* 24 features in the frozen layout: per sum-parameter set five histogram
 * bins (S_g_LF, S_m_LF, S_g_HF, S_m_HF), then means of the 100 largest and
 * 100 smallest HF sums. `features` must hold FQA_FEATURE_COUNT doubles.
 * Pass opts=NULL for defaults. */
FQA_API fqa_status fqa_extract(const fqa_image* img, const fqa_extract_options* opts,
                               double* features);

/* Extract every image of a manifest into a feature CSV
 * (header path,f1..f24,score). threads<=0 uses all cores. No partial
 * output file is left behind on failure. */
FQA_API fqa_status fqa_extract_manifest(const char* manifest_path,
                                        const fqa_extract_options* opts, int32_t threads,
                                        const char* out_csv_path);

/* Debug dumps: MSCN field as an ASCII float grid; one block's
 * center-shifted DFT magnitude grid (from_mscn selects the field). */
FQA_API fqa_status fqa_dump_mscn(const fqa_image* img, const char* out_path);
FQA_API fqa_status fqa_dump_block_spectrum(const fqa_image* img, int32_t block_row,
                                           int32_t block_col, int32_t from_mscn,
                                           const char* out_path);

/* ---- distortion synthesis ---- */

/* kind: "gblur" (sigma px), "awgn" (sigma gray levels), "blocky" (q >= 1). */
FQA_API fqa_status fqa_distort(const fqa_image* img, const char* kind, double level,
                               uint64_t seed, fqa_image** out);

/* ---- regression model ---- */

typedef struct fqa_model fqa_model;

typedef struct fqa_train_options {
    uint64_t seed;
    int32_t restarts;              /* evidence-maximization restarts, default 5 */
    int32_t max_iterations;        /* quasi-Newton iterations per restart */
    double pinned_noise_variance;  /* pin the noise variance; < 0 to optimize */
} fqa_train_options;

FQA_API void fqa_train_options_default(fqa_train_options* opts);

/* Fit on a feature CSV that carries the score column. */
FQA_API fqa_status fqa_train_csv(const char* features_csv_path,
                                 const fqa_train_options* opts, fqa_model** out);

FQA_API fqa_status fqa_model_save(const fqa_model* model, const char* path);
FQA_API fqa_status fqa_model_load(const char* path, fqa_model** out);
FQA_API void fqa_model_free(fqa_model* model);

/* Predictive posterior mean and variance for one feature vector. */
FQA_API fqa_status fqa_predict(const fqa_model* model, const double* features, double* mean,
                               double* variance);

/* Predict every row of a feature CSV. Returns a malloc'd CSV document with
 * header path,mean,variance; release with fqa_string_free. */
FQA_API fqa_status fqa_predict_csv(const fqa_model* model, const char* features_csv_path,
                                   char** out_csv);

/* ---- experiment harness ----
 *
 * Heavyweight operations take a JSON options document and return a
 * malloc'd JSON result released with fqa_string_free. Common options:
 *   {"train_fraction":0.8, "iterations":1000, "seed":0,
 *    "split_unit":"by_content"|"by_sample", "threads":0,
 *    "extract":{"nf":[1000,100,100,20], "zero_epsilon":1e-6},
 *    "train":{"restarts":5, "max_iterations":100,
 *             "pinned_noise_variance":-1}}
 * Every field is optional. */

FQA_API fqa_status fqa_evaluate_model(const fqa_model* model, const char* manifest_path,
                                      const char* options_json, char** report_json);
FQA_API fqa_status fqa_run_experiment(const char* manifest_path, const char* options_json,
                                      char** result_json);
FQA_API fqa_status fqa_cross_database(const char* train_manifest_path,
                                      const char* test_manifest_path,
                                      const char* options_json, char** report_json);
FQA_API fqa_status fqa_feature_ablation(const char* manifest_path, const char* options_json,
                                        char** result_json);
FQA_API fqa_status fqa_benchmark(const char* manifest_path, int32_t repeat,
                                 const char* options_json, char** result_json);

/* Synthetic ladder generator. Options:
 *   {"out_dir":..., "kind":"gblur"|"awgn"|"blocky"|"mixed",
 *    "levels":[...], "contents":20, "size":192, "seed":0,
 *    "source_manifest": optional path to draw contents from}
 * Writes PNG files plus a manifest; the result names the manifest. */
FQA_API fqa_status fqa_synth_ladder(const char* options_json, char** result_json);

FQA_API void fqa_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* FREQIQA_H */
