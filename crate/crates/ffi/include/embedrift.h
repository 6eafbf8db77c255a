#ifndef EMBEDRIFT_H
#define EMBEDRIFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmbedriftStatus {
  EMBEDRIFT_STATUS_OK = 0,
  EMBEDRIFT_STATUS_NULL_ARGUMENT = 1,
  EMBEDRIFT_STATUS_INVALID_UTF8 = 2,
  EMBEDRIFT_STATUS_IO = 3,
  EMBEDRIFT_STATUS_FORMAT = 4,
  EMBEDRIFT_STATUS_DIMENSION = 5,
  EMBEDRIFT_STATUS_CONFIG = 6,
  EMBEDRIFT_STATUS_PARSE = 7,
  EMBEDRIFT_STATUS_VERSION = 8,
  EMBEDRIFT_STATUS_UNKNOWN_TOKEN = 9,
  EMBEDRIFT_STATUS_UNDEFINED = 10,
  EMBEDRIFT_STATUS_BUFFER_TOO_SMALL = 11,
  EMBEDRIFT_STATUS_PANIC = 12,
} EmbedriftStatus;

typedef enum EmbedriftVectorFormat {
  EMBEDRIFT_VECTOR_FORMAT_AUTO = 0,
  EMBEDRIFT_VECTOR_FORMAT_BINARY = 1,
  EMBEDRIFT_VECTOR_FORMAT_TEXT = 2,
} EmbedriftVectorFormat;

typedef enum EmbedriftCorpusFormat {
  EMBEDRIFT_CORPUS_FORMAT_TSV = 0,
  EMBEDRIFT_CORPUS_FORMAT_PLAIN = 1,
} EmbedriftCorpusFormat;

/*
 Filtered token documents.
 */
typedef struct EmbedriftCorpus EmbedriftCorpus;

/*
 Ranked neighbors of one query.
 */
typedef struct EmbedriftNeighbors EmbedriftNeighbors;

/*
 Refined table plus the full update log.
 */
typedef struct EmbedriftRun EmbedriftRun;

/*
 Token vectors of a fixed dimension.
 */
typedef struct EmbedriftTable EmbedriftTable;

typedef struct EmbedriftCorpusStats {
  size_t total_tokens;
  size_t unique_tokens;
  size_t documents;
} EmbedriftCorpusStats;

typedef struct EmbedriftRefineConfig {
  size_t window_size;
  float learning_rate;
  uint32_t epochs;
  float zero_norm_epsilon;
  bool normalize_pretrained;
  bool include_pretrained;
} EmbedriftRefineConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or an empty string.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *embedrift_last_error(void);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EmbedriftStatus embedrift_table_load(const char *path,
                                          enum EmbedriftVectorFormat format,
                                          struct EmbedriftTable **out);

/*
 # Safety
 `out` must be a valid pointer.
 */
enum EmbedriftStatus embedrift_table_new(size_t dim, struct EmbedriftTable **out);

/*
 Inserts or replaces `token`. `values` must hold exactly the table dimension.

 # Safety
 `table` must come from this library, `token` must be NUL-terminated and
 `values` must point to `len` floats.
 */
enum EmbedriftStatus embedrift_table_insert(struct EmbedriftTable *table,
                                            const char *token,
                                            const float *values,
                                            size_t len);

/*
 # Safety
 `table` must be null or come from this library and not be used afterwards.
 */
void embedrift_table_free(struct EmbedriftTable *table);

/*
 Dimension of the table, or 0 for a null handle.

 # Safety
 `table` must be null or come from this library.
 */
size_t embedrift_table_dim(const struct EmbedriftTable *table);

/*
 Number of entries, or 0 for a null handle.

 # Safety
 `table` must be null or come from this library.
 */
size_t embedrift_table_len(const struct EmbedriftTable *table);

/*
 Copies the vector of `token` into `out`, which has room for `capacity`
 floats.

 # Safety
 `table` must come from this library, `token` must be NUL-terminated and
 `out` must point to `capacity` writable floats.
 */
enum EmbedriftStatus embedrift_table_lookup(const struct EmbedriftTable *table,
                                            const char *token,
                                            float *out,
                                            size_t capacity);

/*
 Writes the table in word2vec text format.

 # Safety
 `table` must come from this library and `path` must be NUL-terminated.
 */
enum EmbedriftStatus embedrift_table_save_text(const struct EmbedriftTable *table,
                                               const char *path);

/*
 Cosine similarity of two vectors of length `len`; 0 if either is zero.

 # Safety
 `a` and `b` must point to `len` floats and `out` must be valid.
 */
enum EmbedriftStatus embedrift_cosine(const float *a, const float *b, size_t len, float *out);

/*
 Loads a corpus with the default filter (content POS tags, lemmas,
 lowercasing except proper nouns). `stopwords_path` may be null.

 # Safety
 String arguments must be NUL-terminated (or null where allowed) and `out`
 must be valid.
 */
enum EmbedriftStatus embedrift_corpus_load(const char *path,
                                           enum EmbedriftCorpusFormat format,
                                           const char *stopwords_path,
                                           struct EmbedriftCorpus **out);

/*
 # Safety
 `corpus` must be null or come from this library and not be used afterwards.
 */
void embedrift_corpus_free(struct EmbedriftCorpus *corpus);

/*
 # Safety
 `corpus` must come from this library and `out` must be valid.
 */
enum EmbedriftStatus embedrift_corpus_stats(const struct EmbedriftCorpus *corpus,
                                            struct EmbedriftCorpusStats *out);

/*
 Window 13, learning rate 0.01, 2 epochs, pre-trained vectors normalized.
 */
struct EmbedriftRefineConfig embedrift_refine_config_default(void);

/*
 Refines `pretrained` over `corpus`. Neither input is modified.

 # Safety
 Handles must come from this library and `config` and `out` must be valid.
 */
enum EmbedriftStatus embedrift_refine(const struct EmbedriftCorpus *corpus,
                                      const struct EmbedriftTable *pretrained,
                                      const struct EmbedriftRefineConfig *config,
                                      struct EmbedriftRun **out);

/*
 # Safety
 `run` must be null or come from this library and not be used afterwards.
 */
void embedrift_run_free(struct EmbedriftRun *run);

/*
 Copies the refined table into a new handle.

 # Safety
 `run` must come from this library and `out` must be valid.
 */
enum EmbedriftStatus embedrift_run_table(const struct EmbedriftRun *run,
                                         struct EmbedriftTable **out);

/*
 Number of recorded snapshots, or 0 for a null handle.

 # Safety
 `run` must be null or come from this library.
 */
size_t embedrift_run_snapshot_count(const struct EmbedriftRun *run);

/*
 Number of snapshots recorded for `token`.

 # Safety
 `run` must come from this library, `token` must be NUL-terminated and
 `out` must be valid.
 */
enum EmbedriftStatus embedrift_run_history_len(const struct EmbedriftRun *run,
                                               const char *token,
                                               size_t *out);

/*
 Writes the update log as JSON lines.

 # Safety
 `run` must come from this library and `path` must be NUL-terminated.
 */
enum EmbedriftStatus embedrift_run_export_trajectory(const struct EmbedriftRun *run,
                                                     const char *path);

/*
 The `k` nearest neighbors of `token` by cosine similarity.

 # Safety
 `table` must come from this library, `token` must be NUL-terminated and
 `out` must be valid.
 */
enum EmbedriftStatus embedrift_nearest_neighbors(const struct EmbedriftTable *table,
                                                 const char *token,
                                                 size_t k,
                                                 struct EmbedriftNeighbors **out);

/*
 # Safety
 `list` must be null or come from this library.
 */
size_t embedrift_neighbors_len(const struct EmbedriftNeighbors *list);

/*
 Entry `index` of `list`. The token pointer stays valid until the list is
 freed.

 # Safety
 `list` must come from this library and the out-pointers must be valid.
 */
enum EmbedriftStatus embedrift_neighbors_get(const struct EmbedriftNeighbors *list,
                                             size_t index,
                                             const char **token,
                                             float *score);

/*
 # Safety
 `list` must be null or come from this library and not be used afterwards.
 */
void embedrift_neighbors_free(struct EmbedriftNeighbors *list);

/*
 Cosine between the refined and original vectors of `token`. Sets
 `present` to false (and `out` to 0) when `original` lacks the token.

 # Safety
 Handles must come from this library, `token` must be NUL-terminated and
 the out-pointers must be valid.
 */
enum EmbedriftStatus embedrift_drift(const struct EmbedriftTable *refined,
                                     const struct EmbedriftTable *original,
                                     const char *token,
                                     float *out,
                                     bool *present);

/*
 Mean drift over all tokens present in both tables.

 # Safety
 Handles must come from this library and `out` must be valid.
 */
enum EmbedriftStatus embedrift_mean_drift(const struct EmbedriftTable *refined,
                                          const struct EmbedriftTable *original,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBEDRIFT_H */
