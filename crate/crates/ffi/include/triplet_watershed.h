#ifndef TRIPLET_WATERSHED_H
#define TRIPLET_WATERSHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum TwStatus {
  TW_STATUS_OK = 0,
  TW_STATUS_NULL_POINTER = 1,
  TW_STATUS_INVALID_ARGUMENT = 2,
  TW_STATUS_INVALID_GRAPH = 3,
  TW_STATUS_IO = 4,
  TW_STATUS_FORMAT = 5,
  TW_STATUS_NUMERIC = 6,
  TW_STATUS_PANIC = 7,
} TwStatus;

/**
 * Image cube with ground-truth labels.
 */
typedef struct TwDataset TwDataset;

/**
 * Edge-weighted undirected graph.
 */
typedef struct TwGraph TwGraph;

/**
 * Trained embedding network.
 */
typedef struct TwModel TwModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *tw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tw_version(void);

/**
 * Builds a graph from parallel edge arrays `us`, `vs`, `ws` of length
 * `n_edges`. Weights must be finite and positive.
 *
 * # Safety
 * The arrays must hold `n_edges` elements and `out` must be writable.
 */
enum TwStatus tw_graph_new(size_t n_vertices,
                           const size_t *us,
                           const size_t *vs,
                           const double *ws,
                           size_t n_edges,
                           struct TwGraph **out);

/**
 * # Safety
 * `g` must come from `tw_graph_new` and not be used afterwards. Null is ignored.
 */
void tw_graph_free(struct TwGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or null (which yields 0).
 */
size_t tw_graph_n_vertices(const struct TwGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or null (which yields 0).
 */
size_t tw_graph_n_edges(const struct TwGraph *g);

/**
 * Replaces all edge weights, in edge order.
 *
 * # Safety
 * `g` must be a live handle; `ws` must hold `n` values.
 */
enum TwStatus tw_graph_set_weights(struct TwGraph *g, const double *ws, size_t n);

/**
 * Seeded watershed with orphan resolution. Writes one class id per vertex
 * to `out_labels` (length `tw_graph_n_vertices`), or -1 for vertices no
 * seed can reach.
 *
 * # Safety
 * `g` must be live; the seed arrays must hold `n_seeds` values and
 * `out_labels` must hold one slot per vertex.
 */
enum TwStatus tw_watershed(const struct TwGraph *g,
                           const size_t *seed_vertices,
                           const uint32_t *seed_classes,
                           size_t n_seeds,
                           int64_t *out_labels);

/**
 * Minimax path weight between `u` and `v`. Disconnected pairs set
 * `*out_disconnected` and leave `*out_value` at `DBL_MAX`.
 *
 * # Safety
 * `g` must be live and both out pointers writable.
 */
enum TwStatus tw_pass_value(const struct TwGraph *g,
                            size_t u,
                            size_t v,
                            double *out_value,
                            bool *out_disconnected);

/**
 * Loads a dataset directory (`cube.json`, `cube.f32`, `labels.u16`).
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` writable.
 */
enum TwStatus tw_dataset_load(const char *dir, struct TwDataset **out);

/**
 * # Safety
 * `ds` must come from `tw_dataset_load` and not be used afterwards.
 */
void tw_dataset_free(struct TwDataset *ds);

/**
 * # Safety
 * `ds` must be live; every out pointer must be writable.
 */
enum TwStatus tw_dataset_dims(const struct TwDataset *ds,
                              size_t *height,
                              size_t *width,
                              size_t *bands,
                              size_t *classes);

/**
 * Copies the per-pixel labels (row-major, 0 = unlabelled) into `out`.
 *
 * # Safety
 * `ds` must be live and `out` must hold `len` values.
 */
enum TwStatus tw_dataset_labels(const struct TwDataset *ds, uint16_t *out, size_t len);

/**
 * Loads a `TWNET1` model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum TwStatus tw_model_load(const char *path, struct TwModel **out);

/**
 * # Safety
 * `m` must come from `tw_model_load` and not be used afterwards.
 */
void tw_model_free(struct TwModel *m);

/**
 * Values per input sample (`bands * patch * patch`), 0 for null.
 *
 * # Safety
 * `m` must be a live handle or null.
 */
size_t tw_model_input_len(const struct TwModel *m);

/**
 * Embedding width, 0 for null.
 *
 * # Safety
 * `m` must be a live handle or null.
 */
size_t tw_model_output_dim(const struct TwModel *m);

/**
 * Embeds `n_samples` channel-first patches stored back to back in
 * `input`, writing `n_samples * tw_model_output_dim` values to `out`.
 *
 * # Safety
 * `m` must be live; `input` and `out` must hold the stated lengths.
 */
enum TwStatus tw_model_embed(const struct TwModel *m,
                             const double *input,
                             size_t n_samples,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIPLET_WATERSHED_H */
