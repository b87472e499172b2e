/*
 * strokeid: script identification of cropped text lines with convolutional
 * stroke-part features and a Naive-Bayes Nearest-Neighbor classifier.
 *
 * Every function returns a strokeid_status; on failure a thread-local message
 * is available from strokeid_last_error() until the next call on the same
 * thread. Objects are opaque and released with their matching *_free call.
 * Models and indexes are immutable once built and may be shared between
 * threads.
 */
#ifndef STROKEID_H
#define STROKEID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(STROKEID_BUILDING)
#    define STROKEID_API __declspec(dllexport)
#  else
#    define STROKEID_API __declspec(dllimport)
#  endif
#else
#  define STROKEID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum strokeid_status {
  STROKEID_OK = 0,
  STROKEID_ERR_INVALID_ARGUMENT = 1,
  STROKEID_ERR_PRECONDITION = 2,
  STROKEID_ERR_IO = 3,
  STROKEID_ERR_DECODE = 4,
  STROKEID_ERR_FORMAT = 5,
  STROKEID_ERR_INTERNAL = 6
} strokeid_status;

typedef enum strokeid_index_mode {
  STROKEID_INDEX_EXACT = 0,
  STROKEID_INDEX_KDFOREST = 1
} strokeid_index_mode;

typedef struct strokeid_model strokeid_model;
typedef struct strokeid_classifier strokeid_classifier;
typedef struct strokeid_result strokeid_result;

typedef void (*strokeid_log_fn)(const char* message, void* user);

STROKEID_API const char* strokeid_version(void);
STROKEID_API const char* strokeid_last_error(void);
STROKEID_API const char* strokeid_status_name(strokeid_status status);
STROKEID_API void strokeid_string_free(char* s);

/* ---- training -------------------------------------------------------- */

typedef struct strokeid_train_options {
  uint32_t k;            /* convolutional kernels, default 256 */
  uint32_t step;         /* sliding-window step, default 8 */
  uint64_t dict_patches; /* 8x8 patches for dictionary learning, default 100000 */
  uint32_t kmeans_iters; /* default 10 */
  int weighted;          /* learn template weights */
  uint64_t seed;
  float eps_cn;          /* contrast-normalization regularizer, default 10 */
  float eps_zca;         /* whitening regularizer, default 0.1 */
  strokeid_log_fn log;   /* optional progress sink */
  void* log_user;
} strokeid_train_options;

STROKEID_API void strokeid_train_options_init(strokeid_train_options* opts);

/* train_dir holds one sub-directory of PNG/JPEG lines per class label. */
STROKEID_API strokeid_status strokeid_train(const char* train_dir, const strokeid_train_options* opts,
                                            strokeid_model** out);

/* ---- model container ------------------------------------------------- */

STROKEID_API strokeid_status strokeid_model_load(const char* path, strokeid_model** out);
STROKEID_API strokeid_status strokeid_model_save(const strokeid_model* model, const char* path);
STROKEID_API void strokeid_model_free(strokeid_model* model);

/* Fills template weights in place; needs at least two classes. */
STROKEID_API strokeid_status strokeid_model_compute_weights(strokeid_model* model);

typedef struct strokeid_model_info {
  uint32_t version;
  uint32_t k;
  uint32_t descriptor_dim;
  uint32_t num_classes;
  uint64_t num_templates;
  double weight_min;
  double weight_mean;
  double weight_max;
} strokeid_model_info;

STROKEID_API strokeid_status strokeid_model_get_info(const strokeid_model* model, strokeid_model_info* info);

/* Label pointer stays valid for the model's lifetime. */
STROKEID_API strokeid_status strokeid_model_get_class(const strokeid_model* model, uint32_t index,
                                                      const char** label, uint64_t* num_templates);

/* ---- classification -------------------------------------------------- */

typedef struct strokeid_classify_options {
  uint32_t step;               /* default 8 */
  int weighted;                /* use weighted image-to-class distances */
  strokeid_index_mode index;   /* default exact */
  uint32_t trees;              /* kd-forest trees, default 4 */
  uint32_t checks;             /* kd-forest leaf checks, default 128 */
  uint64_t seed;               /* kd-forest construction seed */
} strokeid_classify_options;

STROKEID_API void strokeid_classify_options_init(strokeid_classify_options* opts);

/* Binds a model to options, building the kd-forest when requested. The model
 * must outlive the classifier. */
STROKEID_API strokeid_status strokeid_classifier_create(const strokeid_model* model,
                                                        const strokeid_classify_options* opts,
                                                        strokeid_classifier** out);
STROKEID_API void strokeid_classifier_free(strokeid_classifier* clf);

STROKEID_API strokeid_status strokeid_classify_file(const strokeid_classifier* clf, const char* path,
                                                    strokeid_result** out);

/* Row-major luminance in [0, 255]. */
STROKEID_API strokeid_status strokeid_classify_gray(const strokeid_classifier* clf, const float* pixels,
                                                    uint32_t width, uint32_t height, strokeid_result** out);

STROKEID_API const char* strokeid_result_label(const strokeid_result* r);
STROKEID_API uint32_t strokeid_result_num_classes(const strokeid_result* r);
STROKEID_API uint64_t strokeid_result_num_queries(const strokeid_result* r);
STROKEID_API strokeid_status strokeid_result_class(const strokeid_result* r, uint32_t index, const char** label,
                                                   double* distance);
/* JSON record: {"label", "per_class": {label: distance}, "num_queries"}. */
STROKEID_API strokeid_status strokeid_result_json(const strokeid_result* r, char** json_out);
STROKEID_API void strokeid_result_free(strokeid_result* r);

/* ---- evaluation (results are JSON strings, free with strokeid_string_free) */

/* test_dir uses the training layout; reports line accuracy and confusion. */
STROKEID_API strokeid_status strokeid_eval_lines(const strokeid_classifier* clf, const char* test_dir,
                                                 char** json_out);

/* clf may be NULL for localization-only evaluation. */
STROKEID_API strokeid_status strokeid_eval_joint(const strokeid_classifier* clf, const char* scenes_dir,
                                                 const char* dets_dir, double iou_thresh, char** json_out);

/* common_labels: comma-separated list of labels shared by both domains. */
STROKEID_API strokeid_status strokeid_eval_cross_domain(const strokeid_classifier* clf, const char* test_dir,
                                                        const char* common_labels, char** json_out);

/* ---- synthetic corpora ----------------------------------------------- */

typedef struct strokeid_synth_options {
  uint32_t num_scripts;        /* 2..6 */
  uint32_t samples_per_script; /* train split */
  uint32_t test_samples_per_script;
  uint32_t min_width;          /* default 64 */
  uint32_t max_width;          /* default 512 */
  double noise_sigma;
  uint32_t style;              /* 1 or 2 */
  uint32_t num_scenes;
  uint64_t seed;
} strokeid_synth_options;

STROKEID_API void strokeid_synth_options_init(strokeid_synth_options* opts);
STROKEID_API strokeid_status strokeid_synth(const strokeid_synth_options* opts, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* STROKEID_H */
