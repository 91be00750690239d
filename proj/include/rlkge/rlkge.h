#ifndef RLKGE_H
#define RLKGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RLKGE_API __declspec(dllexport)
#else
#define RLKGE_API __attribute__((visibility("default")))
#endif

/* Status codes double as CLI exit codes. */
typedef enum rlkge_status {
  RLKGE_OK = 0,
  RLKGE_ERR_USAGE = 1,   /* bad argument, unknown key/preset/mode */
  RLKGE_ERR_DATA = 2,    /* unreadable or malformed input, I/O failure */
  RLKGE_ERR_NUMERIC = 3, /* non-finite loss or gradient, diverging k-means */
  RLKGE_ERR_INTERNAL = 4
} rlkge_status;

typedef struct rlkge_graph rlkge_graph;
typedef struct rlkge_config rlkge_config;
typedef struct rlkge_model rlkge_model;

/* Message of the last failed call on this thread ("" if none). */
RLKGE_API const char* rlkge_last_error(void);
RLKGE_API const char* rlkge_version(void);

/* trace, debug, info, warn, error, off. Logs go to stderr. */
RLKGE_API rlkge_status rlkge_set_log_level(const char* level);

/* Frees strings returned through char** out-parameters. */
RLKGE_API void rlkge_string_free(char* s);

/* Graph directory: train.txt, valid.txt, test.txt (tab-separated h r t). */
RLKGE_API rlkge_status rlkge_graph_load(const char* dir, rlkge_graph** out);
RLKGE_API rlkge_status rlkge_graph_save(const rlkge_graph* graph, const char* dir);
RLKGE_API rlkge_status rlkge_graph_counts(const rlkge_graph* graph, size_t* entities,
                                          size_t* relations, size_t* train, size_t* valid,
                                          size_t* test);
RLKGE_API void rlkge_graph_free(rlkge_graph* graph);

/* preset may be NULL for defaults. */
RLKGE_API rlkge_status rlkge_config_new(const char* preset, rlkge_config** out);
RLKGE_API rlkge_status rlkge_config_set(rlkge_config* cfg, const char* key, const char* value);
RLKGE_API rlkge_status rlkge_config_apply_file(rlkge_config* cfg, const char* path);
RLKGE_API rlkge_status rlkge_config_to_text(const rlkge_config* cfg, char** out);
RLKGE_API void rlkge_config_free(rlkge_config* cfg);

/* Newline-separated preset names. */
RLKGE_API rlkge_status rlkge_preset_names(char** out);

typedef struct rlkge_noise_stats {
  size_t target;
  size_t injected;
  size_t skipped;
  size_t classification_skipped;
} rlkge_noise_stats;

/* Reads a clean graph directory and writes to out_dir: train.txt (clean +
 * injected), valid.txt, test.txt, train_noise_labels.txt,
 * valid_classification.tsv and test_classification.tsv. stats may be NULL. */
RLKGE_API rlkge_status rlkge_inject_noise_dir(const char* in_dir, const char* out_dir, double rate,
                                              uint64_t seed, rlkge_noise_stats* stats);

/* Writes the rule-generated synthetic graph (200 entities, 20 relations). */
RLKGE_API rlkge_status rlkge_make_synthetic_dir(const char* out_dir, uint64_t seed);

/* mode: plain, strl, mtrl, xscore. clusters_file may be NULL. kept may be NULL. */
RLKGE_API rlkge_status rlkge_train_dir(const rlkge_graph* graph, const char* mode,
                                       const rlkge_config* cfg, const char* out_dir,
                                       const char* clusters_file, size_t* kept);

/* k-means over the relation vectors of a TransE checkpoint; writes
 * relation<TAB>cluster lines to out_path. wcss may be NULL. */
RLKGE_API rlkge_status rlkge_cluster_checkpoint(const char* checkpoint, size_t k, uint64_t seed,
                                                size_t max_iters, const char* out_path,
                                                double* wcss);

RLKGE_API rlkge_status rlkge_model_load(const char* path, rlkge_model** out);
RLKGE_API rlkge_status rlkge_model_score(const rlkge_model* model, const char* head,
                                         const char* relation, const char* tail, double* out);
RLKGE_API void rlkge_model_free(rlkge_model* model);

/* JSON report. labels and mask may be NULL. */
RLKGE_API rlkge_status rlkge_evaluate(const char* checkpoint, const char* graph_dir,
                                      const char* labels, const char* mask, size_t threads,
                                      char** json_out);

/* JSON report of an end-to-end preset run. graph_dir may be NULL for
 * synthetic-n1. */
RLKGE_API rlkge_status rlkge_experiment(const char* preset, uint64_t seed, size_t threads,
                                        const char* graph_dir, char** json_out);

#ifdef __cplusplus
}
#endif

#endif
