// Copyright 2026 The taskcodec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the taskcodec library. All functions return a
 * tcc_status; on failure tcc_last_error() describes the problem (per
 * thread, valid until the next call on that thread). Strings returned
 * through char** are owned by the caller and released with
 * tcc_string_free. */

#ifndef TASKCODEC_TASKCODEC_H_
#define TASKCODEC_TASKCODEC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TCC_API __declspec(dllexport)
#else
#define TCC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tcc_status {
  TCC_OK = 0,
  TCC_E_USAGE = 1,
  TCC_E_DATA = 2,
  TCC_E_NUMERIC = 3,
  TCC_E_FORMAT = 4,
  TCC_E_WRONG_MODEL = 5,
  TCC_E_IO = 6,
  TCC_E_INTERNAL = 7
} tcc_status;

typedef struct tcc_config tcc_config;
typedef struct tcc_model tcc_model;

TCC_API const char* tcc_version(void);
TCC_API const char* tcc_last_error(void);
/* Process exit code for a status: 0 ok, 1 usage, 3 numeric, 2 otherwise. */
TCC_API int tcc_exit_code(tcc_status status);
TCC_API void tcc_string_free(char* s);

/* Run configuration (key = value text; see the README for keys). */
TCC_API tcc_status tcc_config_new(tcc_config** out);
TCC_API tcc_status tcc_config_load(const char* path, tcc_config** out);
TCC_API tcc_status tcc_config_set(tcc_config* config, const char* key,
                                  const char* value);
TCC_API tcc_status tcc_config_text(const tcc_config* config, char** text);
TCC_API void tcc_config_free(tcc_config* config);

/* Trains one run and writes checkpoint.bin, epochs.csv and summary.json
 * into out_dir. A numeric abort still writes the last good checkpoint
 * and returns TCC_E_NUMERIC. summary_json may be NULL. */
TCC_API tcc_status tcc_train(const tcc_config* config, const char* out_dir,
                             char** summary_json);
/* TACTIC run per beta into out_dir/beta_<i>/, plus out_dir/records.json. */
TCC_API tcc_status tcc_sweep(const tcc_config* config, const double* betas,
                             size_t count, const char* out_dir,
                             char** records_json);
/* Baseline head per JPEG quality; writes records JSON to out_path. */
TCC_API tcc_status tcc_jpeg_baseline(const tcc_config* config,
                                     const int* qualities, size_t count,
                                     const char* out_path, char** records_json);
/* Merges record files (records.json / summary.json) into a CSV and SVG. */
TCC_API tcc_status tcc_report(const char* const* record_files, size_t count,
                              const char* csv_path, const char* svg_path);

TCC_API tcc_status tcc_model_load(const char* checkpoint, tcc_model** out);
TCC_API void tcc_model_free(tcc_model* model);
/* bpp may be NULL. */
TCC_API tcc_status tcc_compress_file(const tcc_model* model, const char* input,
                                     const char* output, double* bpp);
TCC_API tcc_status tcc_decompress_file(const tcc_model* model,
                                       const char* input, const char* output);

/* Procedural dataset: task "classification" (count per class) or
 * "segmentation" (count scenes, background + 3 textures). contrast scales the class evidence
 * (1 is the default strength). */
TCC_API tcc_status tcc_synth_dataset(const char* dir, const char* task,
                                     int count, int size, double contrast,
                                     uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* TASKCODEC_TASKCODEC_H_ */
