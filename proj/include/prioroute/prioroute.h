/* C interface to the prioroute library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * call returns a pr_status; on failure pr_last_error() describes the
 * problem for the calling thread. Strings returned through char** out
 * parameters are owned by the caller and released with pr_string_free.
 */
#ifndef PRIOROUTE_H
#define PRIOROUTE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PR_API __declspec(dllexport)
#else
#define PR_API __attribute__((visibility("default")))
#endif

typedef enum {
  PR_OK = 0,
  PR_VERIFY_FAILED = 1, /* the flow is not an equilibrium */
  PR_INPUT_ERROR = 2,   /* bad arguments, files or instance data */
  PR_SOLVER_ERROR = 3   /* no convergence or failed certification */
} pr_status;

typedef struct pr_instance pr_instance;
typedef struct pr_prices pr_prices;

typedef enum {
  PR_METHOD_NEWTON = 0,
  PR_METHOD_PAIRWISE = 1,
  PR_METHOD_FRANK_WOLFE = 2
} pr_method;

typedef struct {
  double relative_gap;       /* duality-gap target relative to 1 + |potential| */
  double critical_tolerance; /* relative band around each threshold */
  double certify_epsilon;    /* accepted Wardrop violation, scaled by max(1, lambda) */
  long max_iterations;
  pr_method method;
  int jobs; /* worker threads for sweeps */
} pr_options;

PR_API void pr_options_default(pr_options* options);

PR_API const char* pr_last_error(void);
PR_API void pr_string_free(char* s);

PR_API pr_status pr_instance_load(const char* path, pr_instance** out);
PR_API pr_status pr_instance_from_json(const char* json, pr_instance** out);
PR_API pr_status pr_instance_to_json(const pr_instance* instance, char** out);
PR_API pr_status pr_instance_summary(const pr_instance* instance, size_t* nodes, size_t* edges,
                                     double* demand);
PR_API void pr_instance_free(pr_instance* instance);

/* Builds an instance from a generator description such as
 *   {"family": "gk", "k": 6, "compressed": true}
 * Families: single_edge (a, b, omega, r), pigou (r), braess (demand,
 * shortcut), gk (k, compressed), random (seed, topology, links, layers,
 * width, a_lo, a_hi, b_lo, b_hi, demand_lo, demand_hi, extra_commodities).
 * single_edge also yields its price vector through prices_out when that is
 * not NULL; other families yield NULL. */
PR_API pr_status pr_generate(const char* spec_json, pr_instance** out, pr_prices** prices_out);

/* Price specs: "marginal", "none", "uniform:<omega>", or a path to a price
 * file. */
PR_API pr_status pr_prices_parse(const pr_instance* instance, const char* spec,
                                 const pr_options* options, pr_prices** out);
PR_API pr_status pr_prices_to_json(const pr_instance* instance, const pr_prices* prices,
                                   char** out);
PR_API void pr_prices_free(pr_prices* prices);

/* Equilibrium as JSON plus a text table (either output may be NULL). */
PR_API pr_status pr_solve(const pr_instance* instance, const pr_prices* prices,
                          const pr_options* options, char** json_out, char** table_out);

PR_API pr_status pr_poa(const pr_instance* instance, const pr_prices* prices,
                        const pr_options* options, char** json_out);

/* Uniform-fee sweep over n points of [lo, hi]; lo < 0 or hi < 0 selects the
 * default range. Writes CSV rows omega,cost,poa,converged and optionally
 * an SVG chart. */
PR_API pr_status pr_sweep(const pr_instance* instance, double lo, double hi, int n,
                          int logarithmic, const pr_options* options, char** csv_out,
                          char** svg_out);

/* Returns PR_OK when the flow file is an equilibrium within epsilon and
 * PR_VERIFY_FAILED otherwise; the JSON report names a witness path pair. */
PR_API pr_status pr_verify(const pr_instance* instance, const pr_prices* prices,
                           const char* flow_json, double epsilon, char** report_out);

/* Single-edge equilibrium cost against total flow. */
PR_API pr_status pr_figure1(double a, double b, double omega, double r_max, int samples,
                            char** svg_out, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* PRIOROUTE_H */
