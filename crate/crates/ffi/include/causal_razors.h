#ifndef CAUSAL_RAZORS_H
#define CAUSAL_RAZORS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes shared by every fallible function.
typedef enum RzStatus {
  RZ_STATUS_OK = 0,
  RZ_STATUS_NULL_ARGUMENT = 1,
  RZ_STATUS_INVALID_UTF8 = 2,
  RZ_STATUS_PARSE = 3,
  RZ_STATUS_INVALID_INPUT = 4,
  RZ_STATUS_DIMENSION_MISMATCH = 5,
  RZ_STATUS_CEILING = 6,
  RZ_STATUS_NOT_MARKOVIAN = 7,
  RZ_STATUS_UNKNOWN_EXAMPLE = 8,
  RZ_STATUS_MISSING_RANGES = 9,
  RZ_STATUS_IO = 10,
  // A check ran and reported a mismatch (e.g. a failed catalog fact).
  RZ_STATUS_MISMATCH = 11,
  RZ_STATUS_PANIC = 99,
} RzStatus;

// A DAG handle.
typedef struct RzDag RzDag;

// An independence model, with ranges and theta-tables when it came from them.
typedef struct RzModel RzModel;

// Library version as a static nul-terminated string.
const char *rz_version(void);

// Message of the last failure on this thread, or null. Free with
// [`rz_string_free`].
char *rz_last_error(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void rz_string_free(char *s);

// Parses a DAG from the multi-line `m=<m>` / `j -> k` format or the inline
// `m:1->2,2->3` form.
//
// # Safety
// `text` must be a valid C string; `out` must be writable.
enum RzStatus rz_dag_parse(const char *text, struct RzDag **out);

// # Safety
// `dag` must be null or a handle from [`rz_dag_parse`], freed once.
void rz_dag_free(struct RzDag *dag);

// Vertex count, or 0 for a null handle.
//
// # Safety
// `dag` must be null or a live handle.
size_t rz_dag_vertex_count(const struct RzDag *dag);

// Multi-line text form.
//
// # Safety
// `dag` must be a live handle; `out` must be writable.
enum RzStatus rz_dag_to_string(const struct RzDag *dag, char **out);

// Whether `i` and `j` are d-separated given the vertices in `given`, where
// bit `v - 1` stands for vertex `v`.
//
// # Safety
// `dag` must be a live handle; `out` must be writable.
enum RzStatus rz_dag_d_separated(const struct RzDag *dag,
                                 size_t i,
                                 size_t j,
                                 uint32_t given,
                                 bool *out);

// Reads either an independence-model JSON document or a theta-table model,
// from which the exact independence model is extracted.
//
// # Safety
// `json` must be a valid C string; `out` must be writable.
enum RzStatus rz_model_from_json(const char *json, struct RzModel **out);

// Model of a built-in catalog entry (id or alias, case-insensitive).
//
// # Safety
// `id` must be a valid C string; `out` must be writable.
enum RzStatus rz_model_from_catalog(const char *id, struct RzModel **out);

// # Safety
// `model` must be null or a handle from this library, freed once.
void rz_model_free(struct RzModel *model);

// Number of statements in the model, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t rz_model_len(const struct RzModel *model);

// # Safety
// `model` must be a live handle; `out` must be writable.
enum RzStatus rz_model_to_json(const struct RzModel *model, char **out);

// Verdict on all thirteen razors as JSON. Enumerative razors are decided
// when the vertex count is at most `ceiling`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum RzStatus rz_classify_json(const struct RzDag *dag,
                               const struct RzModel *model,
                               size_t ceiling,
                               char **out);

// Free-parameter count under comma-separated ranges such as `2,3,2`.
//
// # Safety
// `dag` must be a live handle, `ranges` a valid C string, `out` writable.
enum RzStatus rz_param_count(const struct RzDag *dag, const char *ranges, uint64_t *out);

// Recomputes every stored fact of one catalog entry, or of all entries when
// `id` is null. Writes the number of failed facts to `failed` and returns
// [`RzStatus::Mismatch`] when it is nonzero.
//
// # Safety
// `id` must be null or a valid C string; `failed` must be writable.
enum RzStatus rz_catalog_verify(const char *id, size_t ceiling, size_t *failed);

#endif  /* CAUSAL_RAZORS_H */
