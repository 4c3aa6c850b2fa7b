/* C ABI for the bellforge toolkit.
 *
 * Maintained by hand alongside crates/ffi/src/lib.rs; keep the two in sync.
 *
 * Conventions:
 *   - Every function returns a BfStatus; outputs are written through `out`
 *     pointers only on BF_OK.
 *   - BfExpr handles come from the bf_expr_* constructors and must be
 *     released with bf_expr_free().
 *   - Returned strings are NUL-terminated, owned by the library, and must
 *     be released with bf_string_free().
 */

#ifndef BELLFORGE_H
#define BELLFORGE_H

#include <stdbool.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum BfStatus {
  BF_OK = 0,
  BF_NULL_ARGUMENT = 1,
  BF_INVALID_ARGUMENT = 2,
  BF_PARSE_ERROR = 3,
  BF_UNKNOWN_NAME = 4,
  BF_LIMIT_EXCEEDED = 5,
  BF_WRONG_FORM = 6,
  BF_SEARCH_EXHAUSTED = 7,
  BF_INTERNAL = 8,
} BfStatus;

/* Opaque expression handle. */
typedef struct BfExpr BfExpr;

/* Short description of a status code; static storage, do not free. */
const char *bf_status_name(BfStatus status);

/* Release a string returned by this library. */
void bf_string_free(char *ptr);

/* Build a built-in expression by catalog name
 * ("I2222", "I3322_SYM", "I5322", "CH_PROB"). */
BfStatus bf_expr_builtin(const char *name, BfExpr **out);

/* Build the k-settings chain inequality (k >= 2). */
BfStatus bf_expr_gen_ikk(uint32_t k, BfExpr **out);

/* Parse one catalog-entry JSON object into an expression handle. */
BfStatus bf_expr_from_catalog_json(const char *json, BfExpr **out);

/* Render the expression as a catalog-entry JSON object with the given
 * name. Free the result with bf_string_free(). */
BfStatus bf_expr_catalog_json(const BfExpr *expr, const char *name, char **out);

/* Clone an expression handle. */
BfStatus bf_expr_clone(const BfExpr *expr, BfExpr **out);

/* Release an expression handle. */
void bf_expr_free(BfExpr *expr);

/* Setting counts of the expression. */
BfStatus bf_expr_dims(const BfExpr *expr, uint32_t *m, uint32_t *n);

/* Exact local bound at unit bounds, rounded to double. */
BfStatus bf_vertex_max(const BfExpr *expr, double *out);

/* Whether the expression is a valid inequality (local bound <= 0). */
BfStatus bf_is_valid_bellch(const BfExpr *expr, bool *out);

/* Search for a decomposition proof; on success the certificate JSON is
 * returned through `out` (free with bf_string_free()). max_depth = 0 uses
 * the default depth m + n. Returns BF_SEARCH_EXHAUSTED when no certificate
 * is found within the depth budget. */
BfStatus bf_prove(const BfExpr *expr, uint32_t max_depth, char **out);

/* Check a certificate (JSON) against the expression. `accepted` reports the
 * verdict; the status is BF_OK whenever the check itself ran. */
BfStatus bf_verify_certificate(const BfExpr *expr, const char *cert_json,
                               bool *accepted);

/* Maximize the quantum violation of the expression (converted to
 * probability form if needed). Writes the best value, the state angle over
 * pi, and the critical noise weight (NaN when the optimum does not
 * violate). Deterministic in `seed`. */
BfStatus bf_maximize(const BfExpr *expr, uint32_t restarts, uint64_t seed,
                     double *out_q, double *out_theta_over_pi,
                     double *out_lambda_max);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BELLFORGE_H */
