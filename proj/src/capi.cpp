#include "stiefelcdf/stiefelcdf.h"

#include "cdf/commands.hpp"
#include "cdf/run_config.hpp"

#include <iostream>
#include <new>
#include <string>

struct cdf_matrix {
  cdf::Matrix m;
};
struct cdf_problem {
  cdf::ProblemDefinition p;
};
struct cdf_solver_config {
  cdf::SolverConfig c;
};
struct cdf_result {
  cdf::SolverResult r;
};

namespace {

thread_local std::string g_last_error;

cdf_status fail(cdf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename Body>
cdf_status guard(Body&& body) {
  try {
    body();
    return CDF_OK;
  } catch (const cdf::DimensionError& e) {
    return fail(CDF_ERR_DIMENSION, e.what());
  } catch (const cdf::ValidationError& e) {
    return fail(CDF_ERR_VALIDATION, e.what());
  } catch (const cdf::NumericalError& e) {
    return fail(CDF_ERR_NUMERICAL, e.what());
  } catch (const cdf::DivergenceError& e) {
    return fail(CDF_ERR_DIVERGENCE, e.what());
  } catch (const cdf::SafeguardViolation& e) {
    return fail(CDF_ERR_SAFEGUARD, e.what());
  } catch (const cdf::ConfigError& e) {
    return fail(CDF_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CDF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CDF_ERR_INTERNAL, e.what());
  }
}

#define CDF_REQUIRE(ptr)                                                  \
  do {                                                                    \
    if (!(ptr)) return fail(CDF_ERR_NULL_ARGUMENT, #ptr " is NULL");      \
  } while (0)

cdf_status emit(cdf::Matrix m, cdf_matrix** out) {
  *out = new cdf_matrix{std::move(m)};
  return CDF_OK;
}

Eigen::Index as_index(size_t v) {
  if (v > static_cast<size_t>(Eigen::NumTraits<Eigen::Index>::highest()))
    throw cdf::DimensionError("dimension overflows the index type");
  return static_cast<Eigen::Index>(v);
}

}  // namespace

extern "C" {

const char* cdf_version(void) { return "1.0.0"; }

const char* cdf_last_error(void) { return g_last_error.c_str(); }

const char* cdf_status_name(cdf_status status) {
  switch (status) {
    case CDF_OK: return "ok";
    case CDF_ERR_NULL_ARGUMENT: return "null_argument";
    case CDF_ERR_DIMENSION: return "dimension";
    case CDF_ERR_VALIDATION: return "validation";
    case CDF_ERR_NUMERICAL: return "numerical";
    case CDF_ERR_DIVERGENCE: return "divergence";
    case CDF_ERR_SAFEGUARD: return "safeguard";
    case CDF_ERR_CONFIG: return "config";
    case CDF_ERR_OUT_OF_RANGE: return "out_of_range";
    case CDF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

cdf_status cdf_matrix_create(size_t rows, size_t cols, const double* data,
                             cdf_matrix** out) {
  CDF_REQUIRE(out);
  return guard([&] {
    cdf::Matrix m = cdf::Matrix::Zero(as_index(rows), as_index(cols));
    if (data)
      m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(data, m.rows(), m.cols());
    emit(std::move(m), out);
  });
}

void cdf_matrix_free(cdf_matrix* m) { delete m; }

size_t cdf_matrix_rows(const cdf_matrix* m) {
  return m ? static_cast<size_t>(m->m.rows()) : 0;
}

size_t cdf_matrix_cols(const cdf_matrix* m) {
  return m ? static_cast<size_t>(m->m.cols()) : 0;
}

cdf_status cdf_matrix_get(const cdf_matrix* m, size_t i, size_t j, double* out) {
  CDF_REQUIRE(m);
  CDF_REQUIRE(out);
  if (i >= cdf_matrix_rows(m) || j >= cdf_matrix_cols(m))
    return fail(CDF_ERR_OUT_OF_RANGE, "matrix index out of range");
  *out = m->m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return CDF_OK;
}

cdf_status cdf_matrix_copy(const cdf_matrix* m, double* buf, size_t len) {
  CDF_REQUIRE(m);
  CDF_REQUIRE(buf);
  if (len < static_cast<size_t>(m->m.size()))
    return fail(CDF_ERR_OUT_OF_RANGE, "buffer smaller than rows * cols");
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      buf, m->m.rows(), m->m.cols()) = m->m;
  return CDF_OK;
}

cdf_status cdf_apply_A(const cdf_matrix* x, cdf_matrix** out) {
  CDF_REQUIRE(x);
  CDF_REQUIRE(out);
  return guard([&] { emit(cdf::apply_A(x->m), out); });
}

cdf_status cdf_jacobian_apply(const cdf_matrix* x, const cdf_matrix* d,
                              cdf_matrix** out) {
  CDF_REQUIRE(x);
  CDF_REQUIRE(d);
  CDF_REQUIRE(out);
  return guard([&] { emit(cdf::jacobian_apply(x->m, d->m), out); });
}

cdf_status cdf_project_stiefel(const cdf_matrix* x, cdf_matrix** out) {
  CDF_REQUIRE(x);
  CDF_REQUIRE(out);
  return guard([&] { emit(cdf::project_stiefel(x->m).matrix(), out); });
}

cdf_status cdf_inverse_A(const cdf_matrix* y, cdf_matrix** out) {
  CDF_REQUIRE(y);
  CDF_REQUIRE(out);
  return guard([&] { emit(cdf::inverse_A(y->m), out); });
}

cdf_status cdf_feasibility_violation(const cdf_matrix* x, double* out) {
  CDF_REQUIRE(x);
  CDF_REQUIRE(out);
  return guard([&] { *out = cdf::feasibility_violation(x->m); });
}

cdf_status cdf_problem_quadratic_trace(const cdf_matrix* a, size_t p,
                                       cdf_problem** out) {
  CDF_REQUIRE(a);
  CDF_REQUIRE(out);
  return guard([&] {
    *out = new cdf_problem{cdf::make_quadratic_trace(a->m, as_index(p))};
  });
}

cdf_status cdf_problem_sparse_pca(const cdf_matrix* sigma, double gamma,
                                  size_t p, cdf_problem** out) {
  CDF_REQUIRE(sigma);
  CDF_REQUIRE(out);
  return guard([&] {
    *out = new cdf_problem{cdf::make_sparse_pca(sigma->m, gamma, as_index(p))};
  });
}

cdf_status cdf_problem_l1_pca(const cdf_matrix* a, size_t p, cdf_problem** out) {
  CDF_REQUIRE(a);
  CDF_REQUIRE(out);
  return guard([&] { *out = new cdf_problem{cdf::make_l1_pca(a->m, as_index(p))}; });
}

cdf_status cdf_problem_zero(size_t n, size_t p, cdf_problem** out) {
  CDF_REQUIRE(out);
  return guard([&] {
    *out = new cdf_problem{cdf::make_zero(as_index(n), as_index(p))};
  });
}

cdf_status cdf_problem_attach_l1(cdf_problem* problem, double gamma) {
  CDF_REQUIRE(problem);
  return guard([&] {
    problem->p = cdf::attach_l1_regularizer(problem->p, gamma);
  });
}

cdf_status cdf_problem_attach_noise(cdf_problem* problem, double sigma,
                                    double bound, uint64_t seed) {
  CDF_REQUIRE(problem);
  if (!(sigma >= 0.0) || !(bound >= 0.0))
    return fail(CDF_ERR_VALIDATION, "noise sigma and bound must be >= 0");
  return guard([&] {
    cdf::NoiseModel model;
    model.sigma = sigma;
    model.bound = bound;
    model.seed = seed;
    problem->p = cdf::attach_noise(problem->p, model);
  });
}

cdf_status cdf_problem_value(const cdf_problem* problem, const cdf_matrix* x,
                             double* out) {
  CDF_REQUIRE(problem);
  CDF_REQUIRE(x);
  CDF_REQUIRE(out);
  return guard([&] { *out = problem->p.value(x->m); });
}

cdf_status cdf_penalty_value(const cdf_problem* problem, const cdf_matrix* x,
                             double beta, double* out) {
  CDF_REQUIRE(problem);
  CDF_REQUIRE(x);
  CDF_REQUIRE(out);
  return guard([&] { *out = cdf::ncdf_value(problem->p, x->m, beta); });
}

void cdf_problem_free(cdf_problem* problem) { delete problem; }

cdf_status cdf_solver_config_create(cdf_solver_config** out) {
  CDF_REQUIRE(out);
  return guard([&] { *out = new cdf_solver_config{}; });
}

cdf_status cdf_solver_config_set(cdf_solver_config* cfg, const char* key,
                                 const char* value) {
  CDF_REQUIRE(cfg);
  CDF_REQUIRE(key);
  CDF_REQUIRE(value);
  return guard([&] { cdf::set_solver_field(cfg->c, key, value); });
}

cdf_status cdf_solver_config_set_x0(cdf_solver_config* cfg, const cdf_matrix* x0) {
  CDF_REQUIRE(cfg);
  return guard([&] {
    if (x0) cfg->c.x0 = x0->m;
    else cfg->c.x0.reset();
  });
}

cdf_status cdf_solver_config_estimate_safeguards(cdf_solver_config* cfg,
                                                 const cdf_problem* problem,
                                                 int samples, int set_beta) {
  CDF_REQUIRE(cfg);
  CDF_REQUIRE(problem);
  if (samples < 1) return fail(CDF_ERR_VALIDATION, "samples must be >= 1");
  return guard([&] {
    const auto est =
        cdf::estimate_constants(problem->p, samples, cfg->c.seed).inflated();
    cfg->c.safeguards = est;
    if (set_beta) cfg->c.beta = cdf::safeguard_beta(est);
  });
}

void cdf_solver_config_free(cdf_solver_config* cfg) { delete cfg; }

cdf_status cdf_solve(const cdf_problem* problem, const cdf_solver_config* cfg,
                     const char* algorithm, cdf_result** out) {
  CDF_REQUIRE(problem);
  CDF_REQUIRE(cfg);
  CDF_REQUIRE(algorithm);
  CDF_REQUIRE(out);
  const auto algo = cdf::parse_algorithm(algorithm);
  if (!algo)
    return fail(CDF_ERR_CONFIG, std::string("unknown algorithm '") + algorithm + "'");
  return guard([&] {
    *out = new cdf_result{cdf::run_solver(*algo, problem->p, cfg->c)};
  });
}

long cdf_result_iterations(const cdf_result* r) { return r ? r->r.iterations : 0; }

const char* cdf_result_termination(const cdf_result* r) {
  return r ? cdf::termination_name(r->r.reason) : "";
}

double cdf_result_seconds(const cdf_result* r) { return r ? r->r.seconds : 0.0; }

cdf_status cdf_result_final_x(const cdf_result* r, cdf_matrix** out) {
  CDF_REQUIRE(r);
  CDF_REQUIRE(out);
  return guard([&] { emit(r->r.final_x, out); });
}

cdf_status cdf_result_projected_x(const cdf_result* r, cdf_matrix** out) {
  CDF_REQUIRE(r);
  CDF_REQUIRE(out);
  return guard([&] { emit(r->r.projected.matrix(), out); });
}

size_t cdf_result_trace_length(const cdf_result* r) {
  return r ? r->r.trace.size() : 0;
}

cdf_status cdf_result_trace_row(const cdf_result* r, size_t i, cdf_trace_row* out) {
  CDF_REQUIRE(r);
  CDF_REQUIRE(out);
  if (i >= r->r.trace.size())
    return fail(CDF_ERR_OUT_OF_RANGE, "trace row out of range");
  const auto& rec = r->r.trace[i];
  *out = {rec.iter, rec.f, rec.h, rec.feas, rec.stat, rec.seconds};
  return CDF_OK;
}

void cdf_result_free(cdf_result* r) { delete r; }

int cdf_cmd_run(const char* config_path) {
  if (!config_path) {
    std::cerr << "config error: no config path\n";
    return cdf::kExitConfig;
  }
  return cdf::cmd_run(config_path, std::cout, std::cerr);
}

int cdf_cmd_verify(uint64_t seed, int samples) {
  if (samples < 1) {
    std::cerr << "config error: samples must be >= 1\n";
    return cdf::kExitConfig;
  }
  return cdf::cmd_verify(seed, samples, std::cout, std::cerr);
}

int cdf_cmd_grid(const char* config_path) {
  if (!config_path) {
    std::cerr << "config error: no config path\n";
    return cdf::kExitConfig;
  }
  return cdf::cmd_grid(config_path, std::cout, std::cerr);
}

}  // extern "C"
