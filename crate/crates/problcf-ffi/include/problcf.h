/* C interface to the problcf probabilistic fatigue-life library.
 *
 * Conventions:
 *   - Handles are opaque; create with *_new-style constructors, release
 *     with the matching *_free. Freeing NULL is a no-op.
 *   - Every fallible function returns a problcf_status; output pointers
 *     are written only on PROBLCF_OK.
 *   - problcf_last_error_message() describes the most recent failure on
 *     the calling thread; the pointer is valid until the next failing
 *     call on that thread.
 *
 * Kept in sync with src/lib.rs by hand; tests/capi.rs compiles a C
 * program against this header and the built library to catch drift.
 */

#ifndef PROBLCF_H
#define PROBLCF_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum problcf_status {
  PROBLCF_OK = 0,
  PROBLCF_INVALID_ARGUMENT = 1,
  PROBLCF_DOMAIN_ERROR = 2,
  PROBLCF_OUT_OF_RANGE = 3,
  PROBLCF_SCHEMA_ERROR = 4,
  PROBLCF_NON_CONVERGENCE = 5,
  PROBLCF_IO_ERROR = 6,
  PROBLCF_NULL_POINTER = 7,
  PROBLCF_UTF8_ERROR = 8,
  PROBLCF_PANIC = 9,
} problcf_status;

typedef struct problcf_model problcf_model;
typedef struct problcf_campaign problcf_campaign;

/* Message of the most recent failure on this thread. */
const char *problcf_last_error_message(void);

/* Library version as a static string. */
const char *problcf_version(void);

/* Creates a material model: elastic modulus, the four strain-life
 * parameters (sigma_f, b < 0, eps_f, c < 0), the scatter shape m >= 1,
 * and the reference surface area a_ref > 0 (mm^2). */
problcf_status problcf_model_new(double elastic_modulus, double sigma_f,
                                 double b, double eps_f, double c, double m,
                                 double a_ref, problcf_model **out);

void problcf_model_free(problcf_model *model);

/* Writes the parameters to out[7] in the order:
 * elastic_modulus, sigma_f, b, eps_f, c, m, a_ref. */
problcf_status problcf_model_params(const problcf_model *model, double *out);

/* Median strain amplitude sustained for `cycles` cycles (unit specimen). */
problcf_status problcf_model_strain_at(const problcf_model *model,
                                       double cycles, double *out_strain);

/* Median life in cycles at `strain` (unit specimen). */
problcf_status problcf_model_cycles_at(const problcf_model *model,
                                       double strain, double *out_cycles);

/* Life quantile at failure probability p in (0,1) for a specimen of
 * gauge surface area `area_mm2` held at `strain`. */
problcf_status problcf_model_life_quantile(const problcf_model *model,
                                           double strain, double area_mm2,
                                           double p, double *out_cycles);

/* Probability that the specimen survives `cycles` without a crack. */
problcf_status problcf_model_survival(const problcf_model *model,
                                      double strain, double area_mm2,
                                      double cycles, double *out_survival);

/* Area-adjusted curve coefficients sigma_f(area) and eps_f(area). */
problcf_status problcf_model_coefficients_for_area(const problcf_model *model,
                                                   double area_mm2,
                                                   double *out_sigma_f,
                                                   double *out_eps_f);

/* Reads a test campaign from CSV with columns
 * specimen_id,strain_amplitude,cycles_to_initiation,gauge_area_mm2
 * (optional: temperature_c,load_ratio). Nonzero `strain_is_percent`
 * means the strain column is in percent. */
problcf_status problcf_campaign_read_csv(const char *path,
                                         int strain_is_percent,
                                         problcf_campaign **out);

void problcf_campaign_free(problcf_campaign *campaign);

problcf_status problcf_campaign_len(const problcf_campaign *campaign,
                                    size_t *out_len);

/* Maximum-likelihood fit of (sigma_f, b, eps_f, c, m) with the elastic
 * modulus held fixed. out_converged is 1 when the optimizer's gradient
 * check passed, else 0. */
problcf_status problcf_fit(const problcf_campaign *campaign,
                           double elastic_modulus, double a_ref,
                           problcf_model **out_model,
                           double *out_log_likelihood, int *out_converged);

#ifdef __cplusplus
}
#endif

#endif /* PROBLCF_H */
