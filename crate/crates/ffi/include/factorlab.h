#ifndef FACTORLAB_H
#define FACTORLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_INPUT = 2,
  FL_STATUS_UNSUPPORTED = 3,
  FL_STATUS_CAP_EXCEEDED = 4,
  FL_STATUS_BUFFER_TOO_SMALL = 5,
  FL_STATUS_PANIC = 6,
} FlStatus;

typedef enum FlTypeKind {
  FL_TYPE_KIND_I_FINITE = 0,
  FL_TYPE_KIND_I_INFINITE = 1,
  FL_TYPE_KIND_II1 = 2,
  FL_TYPE_KIND_II_INFINITE = 3,
  FL_TYPE_KIND_III0 = 4,
  FL_TYPE_KIND_III_LAMBDA = 5,
  FL_TYPE_KIND_III1 = 6,
  FL_TYPE_KIND_UNDETERMINED = 7,
} FlTypeKind;

/**
 * Opaque commuting-projector lattice model.
 */
typedef struct FlLattice FlLattice;

/**
 * Opaque Schmidt spectrum.
 */
typedef struct FlSpectrum FlSpectrum;

/**
 * Flattened factor type. `n` is set for `IFinite`, `lambda` for `IIILambda`.
 */
typedef struct FlFactorType {
  enum FlTypeKind kind;
  uint64_t n;
  double lambda;
} FlFactorType;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `fl_*` call on the same thread.
 */
const char *fl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fl_version(void);

/**
 * Normalized spectrum from `len` non-negative weights.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum FlStatus fl_spectrum_new(const double *weights, size_t len, struct FlSpectrum **out);

/**
 * `[1, λ] / (1 + λ)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FlStatus fl_spectrum_powers(double lambda, struct FlSpectrum **out);

/**
 * # Safety
 * `s` must be null or a handle from this library that was not freed yet.
 */
void fl_spectrum_free(struct FlSpectrum *s);

/**
 * Exact tensor product.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum FlStatus fl_spectrum_tensor(const struct FlSpectrum *a,
                                 const struct FlSpectrum *b,
                                 struct FlSpectrum **out);

/**
 * `k`-fold tensor power with default pruning (tail mass up to 1e-12 per step).
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_spectrum_tensor_power(const struct FlSpectrum *s,
                                       size_t k,
                                       struct FlSpectrum **out);

/**
 * Number of distinct weights.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_spectrum_num_levels(const struct FlSpectrum *s, size_t *out);

/**
 * Entropy in nats.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_spectrum_entropy(const struct FlSpectrum *s, double *out);

/**
 * Overlap of the two states after optimal local unitaries.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum FlStatus fl_fidelity(const struct FlSpectrum *a, const struct FlSpectrum *b, double *out);

/**
 * Factor type of the infinite tensor product of copies of `s`. With
 * `ambient`, the result is tensored with I_∞.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FlStatus fl_classify(const struct FlSpectrum *s, bool ambient, struct FlFactorType *out);

/**
 * Writes the type label (e.g. `III_0.5`) into `buf` with a trailing NUL.
 * `needed` receives the required size including the NUL; with a short
 * buffer the call fails with `BufferTooSmall` and writes nothing else.
 *
 * # Safety
 * `s` must be a live handle; `buf` must hold `cap` writable bytes (may be
 * null when `cap` is 0); `needed` must be writable.
 */
enum FlStatus fl_classify_label(const struct FlSpectrum *s,
                                bool ambient,
                                char *buf,
                                size_t cap,
                                size_t *needed);

/**
 * Embezzlement distances `sqrt(2 - 2F)` and `2 sqrt(1 - F^2)` of `target`
 * from `resource`.
 *
 * # Safety
 * Handles must be live; `vector` and `trace` must be writable.
 */
enum FlStatus fl_embezzlement_error(const struct FlSpectrum *resource,
                                    const struct FlSpectrum *target,
                                    double *vector,
                                    double *trace);

/**
 * Closed-form `2(1 - sqrt λ)/(1 + sqrt λ)`; NaN outside `(0, 1]`.
 */
double fl_kappa_max_formula(double lambda);

/**
 * Exact LOCC convertibility `source -> target`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum FlStatus fl_convertible(const struct FlSpectrum *source,
                             const struct FlSpectrum *target,
                             bool *out);

/**
 * Best overlap with `target` reachable from `source` by LOCC.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum FlStatus fl_max_conversion_fidelity(const struct FlSpectrum *source,
                                         const struct FlSpectrum *target,
                                         double *out);

/**
 * Bell pairs distillable from `source` with overlap at least `1 - eps`.
 *
 * # Safety
 * `source` must be live; `out` must be writable.
 */
enum FlStatus fl_distillable_bells(const struct FlSpectrum *source, double eps, uint32_t *out);

/**
 * Lattice model on a `dimension`-dimensional box. `boundary` is 0 for
 * open, 1 for periodic; `rho` is the edge spectrum.
 *
 * # Safety
 * `extent` must point to `dimension` readable values; `rho` must be live;
 * `out` must be writable.
 */
enum FlStatus fl_lattice_new(size_t dimension,
                             const size_t *extent,
                             uint32_t boundary,
                             size_t m,
                             const struct FlSpectrum *rho,
                             struct FlLattice **out);

/**
 * # Safety
 * `l` must be null or a live handle from [`fl_lattice_new`].
 */
void fl_lattice_free(struct FlLattice *l);

/**
 * Whether all edge projectors commute (within 1e-12).
 *
 * # Safety
 * `l` must be live; `out` must be writable.
 */
enum FlStatus fl_lattice_commuting_check(const struct FlLattice *l, bool *out);

/**
 * Ground energy, its degeneracy and the gap (NaN if there is one level).
 *
 * # Safety
 * `l` must be live; output pointers must be writable.
 */
enum FlStatus fl_lattice_ground(const struct FlLattice *l,
                                double *energy,
                                uint64_t *degeneracy,
                                double *gap);

/**
 * Entropy (nats) of `ℓ` consecutive sites of the half-filled XX chain.
 *
 * # Safety
 * `out` must be writable.
 */
enum FlStatus fl_xx_entropy(size_t l, double *out);

/**
 * Half-chain entropy (nats) of the `s`-colored Motzkin chain of length `l`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FlStatus fl_motzkin_entropy(size_t l, uint32_t s, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACTORLAB_H */
