/* C interface to the confusion-detection library.
 *
 * All functions returning cd_status report failures through the status code
 * and a thread-local message available from cd_last_error(). Handles are
 * opaque; every *_free function accepts NULL. A handle may be read from
 * several threads at once, but cd_stream handles accept one writer only.
 */
#ifndef CONFDETECT_H
#define CONFDETECT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CONFDETECT_BUILDING)
#    define CD_API __declspec(dllexport)
#  else
#    define CD_API __declspec(dllimport)
#  endif
#else
#  define CD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cd_status {
    CD_OK = 0,
    CD_ERR_INVALID_ARGUMENT = 1,
    CD_ERR_DATA = 2,
    CD_ERR_IO = 3,
    CD_ERR_VERSION = 4,
    CD_ERR_CORRUPT = 5,
    CD_ERR_INSUFFICIENT = 6,
    CD_ERR_INTERNAL = 7
} cd_status;

CD_API const char* cd_version(void);
CD_API const char* cd_status_name(cd_status status);
/* Message of the most recent failure on the calling thread ("" if none). */
CD_API const char* cd_last_error(void);

typedef struct cd_corpus cd_corpus;   /* synchronized sessions */
typedef struct cd_labeled cd_labeled; /* labeled samples with their feature layout */
typedef struct cd_forest cd_forest;
typedef struct cd_stream cd_stream;
typedef struct cd_report cd_report;

/* One tracker frame, same fields and units as the recording CSV. */
typedef struct cd_sample {
    double timestamp;
    double por_x, por_y;
    double pupil_pos_x, pupil_pos_y;
    double pupil_diam;
    double gyro_x, gyro_y, gyro_z;
    double acc_x, acc_y, acc_z;
    int valid;
} cd_sample;

#define CD_DEFAULT_SEED 20211u
#define CD_DEFAULT_LAYOUT "por_x,por_y,pupil_diam,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z"

/* ---- synthetic corpus ---------------------------------------------------- */

typedef struct cd_synth_config {
    size_t n_subjects;
    double duration;             /* seconds per session */
    double rate;                 /* Hz */
    size_t events_per_session;
    double half_width;           /* seconds */
    double pupil_diam_delta;     /* mm */
    double por_scatter_gain;
    double head_motion_gain;
    double subject_variation;    /* per-subject offset sd, in channel sds */
    double drift;                /* slow drift sd, in channel sds; 0 = off */
    double drift_time_constant;  /* seconds */
    double dropout_rate;
    uint64_t seed;
} cd_synth_config;

CD_API void cd_synth_config_default(cd_synth_config* config);
/* Zero effect sizes: pupil delta 0, gains 1. */
CD_API void cd_synth_config_null_effect(cd_synth_config* config);

CD_API cd_status cd_corpus_synthesize(const cd_synth_config* config, cd_corpus** out);
/* Reads every <id>.csv + <id>.json pair in dir and synchronizes them. */
CD_API cd_status cd_corpus_load_dir(const char* dir, cd_corpus** out);
CD_API cd_status cd_corpus_export_dir(const cd_corpus* corpus, const char* dir);
CD_API size_t cd_corpus_session_count(const cd_corpus* corpus);
CD_API size_t cd_corpus_sample_count(const cd_corpus* corpus, size_t session);
CD_API cd_status cd_corpus_get_sample(const cd_corpus* corpus, size_t session, size_t index, cd_sample* out);
CD_API void cd_corpus_free(cd_corpus* corpus);

/* ---- labeling ------------------------------------------------------------ */

/* layout: comma-separated channel names, NULL for the default layout. */
CD_API cd_status cd_corpus_label(const cd_corpus* corpus, const char* layout, double half_width, cd_labeled** out);
CD_API cd_status cd_labeled_read_csv(const char* path, cd_labeled** out);
CD_API cd_status cd_labeled_write_csv(const cd_labeled* labeled, const char* path);
CD_API cd_status cd_labeled_counts(const cd_labeled* labeled, size_t* n_event, size_t* n_noevent);
/* Writes {"seed","train","test"} for a participant-wise split. */
CD_API cd_status cd_labeled_write_split(const cd_labeled* labeled, double train_fraction, uint64_t seed,
                                        const char* path);
CD_API void cd_labeled_free(cd_labeled* labeled);

/* ---- forest -------------------------------------------------------------- */

typedef struct cd_forest_params {
    size_t n_trees;
    size_t max_depth;          /* 0 = unlimited */
    size_t min_leaf;
    size_t features_per_split; /* 0 = ceil(sqrt(channels)) */
    int bootstrap;
    uint64_t seed;
    unsigned threads;          /* 0 = hardware concurrency */
} cd_forest_params;

CD_API void cd_forest_params_default(cd_forest_params* params);

/* Balances the corpus and trains a forest. With cv_folds >= 2 the tree count
 * is chosen by k-fold validation; *selected_trees (optional) receives it and
 * cv_curve (optional, params->n_trees entries) the mean validation costs. */
CD_API cd_status cd_forest_train(const cd_labeled* labeled, const cd_forest_params* params, size_t cv_folds,
                                 cd_forest** out, size_t* selected_trees, double* cv_curve);
CD_API cd_status cd_forest_load(const char* path, cd_forest** out);
CD_API cd_status cd_forest_from_json(const char* json, size_t length, cd_forest** out);
CD_API cd_status cd_forest_save(const cd_forest* forest, const char* path);
CD_API size_t cd_forest_tree_count(const cd_forest* forest);
CD_API size_t cd_forest_channel_count(const cd_forest* forest);
/* Copies the comma-separated layout into buf; *needed gets the full length + 1. */
CD_API cd_status cd_forest_layout(const cd_forest* forest, char* buf, size_t capacity, size_t* needed);
CD_API cd_status cd_forest_predict(const cd_forest* forest, const double* features, size_t n_features,
                                   int* is_event, double* vote_fraction);
CD_API void cd_forest_free(cd_forest* forest);

/* ---- streaming ----------------------------------------------------------- */

#define CD_DEFAULT_QUEUE_CAPACITY 2000u

typedef enum cd_outcome { CD_OUTCOME_WARMUP = 0, CD_OUTCOME_NO_EVENT = 1, CD_OUTCOME_EVENT = 2 } cd_outcome;

typedef struct cd_decision {
    uint64_t step; /* 1-based number of samples consumed */
    cd_outcome outcome;
    double vote_fraction;
    double latency_s;
} cd_decision;

CD_API int cd_is_recording_header(const char* line);
CD_API cd_status cd_parse_recording_row(const char* line, cd_sample* out);

CD_API cd_status cd_stream_create(const cd_forest* forest, size_t capacity, cd_stream** out);
CD_API cd_status cd_stream_step(cd_stream* stream, const cd_sample* sample, cd_decision* out);
/* Writes {"step":..,"label":..,"vote":..,"latency_s":..} without newline. */
CD_API cd_status cd_decision_json(const cd_decision* decision, char* buf, size_t capacity, size_t* needed);
CD_API size_t cd_stream_occupancy(const cd_stream* stream);
CD_API void cd_stream_free(cd_stream* stream);

typedef struct cd_bench_result {
    size_t n_runs;
    size_t capacity;
    double mean_latency_s;
    double frame_rate;
} cd_bench_result;

CD_API cd_status cd_bench(const cd_forest* forest, const cd_sample* samples, size_t n_samples, size_t n_runs,
                          size_t capacity, cd_bench_result* out);

/* ---- experiment ---------------------------------------------------------- */

typedef struct cd_experiment_config {
    size_t n_runs;
    size_t test_picks_per_class;
    double train_fraction;
    size_t cv_folds;        /* 0 = off */
    int sample_level_split; /* nonzero: pooled sample split (leaks subjects) */
    uint64_t seed;
    cd_forest_params forest;
} cd_experiment_config;

typedef struct cd_report_summary {
    uint64_t tn, fp, fn, tp;
    double mean_accuracy;
    double mean_cost;
    double cv_mean_accuracy;
    size_t n_runs;
} cd_report_summary;

CD_API void cd_experiment_config_default(cd_experiment_config* config);
CD_API cd_status cd_experiment_run(const cd_labeled* labeled, const cd_experiment_config* config, cd_report** out);
/* report.json, confusion_matrix.csv and loss_vs_trees.csv */
CD_API cd_status cd_report_write(const cd_report* report, const char* dir);
CD_API cd_status cd_report_summary_get(const cd_report* report, cd_report_summary* out);
CD_API void cd_report_free(cd_report* report);

CD_API cd_status cd_accuracy(uint64_t tn, uint64_t fp, uint64_t fn, uint64_t tp, double* out);

/* Writes text to path through a temporary file and rename. */
CD_API cd_status cd_write_file_atomic(const char* path, const char* text, size_t length);

#ifdef __cplusplus
}
#endif

#endif /* CONFDETECT_H */
