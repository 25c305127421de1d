#include "cdf/problems.hpp"

#include "cdf/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace cdf {

namespace {

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(what) + ": matrix must be square");
  if (!a.allFinite())
    throw ValidationError(std::string(what) + ": non-finite entry");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError(std::string(what) + ": matrix is not symmetric");
}

void require_columns(Eigen::Index n, Eigen::Index p, const char* what) {
  if (p < 1 || p > n)
    throw DimensionError(std::string(what) + ": need 1 <= p <= n");
}

double spectral_norm_symmetric(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Matrix soft_threshold(const Matrix& x, double threshold) {
  return x.unaryExpr([threshold](double v) {
    return sign_or_zero(v) * std::max(std::fabs(v) - threshold, 0.0);
  });
}

Regularizer make_l1_regularizer(double gamma, Eigen::Index n, Eigen::Index p) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw ValidationError("l1 regularizer: gamma must be >= 0");
  Regularizer reg;
  reg.name = "l1";
  reg.gamma = gamma;
  reg.lipschitz = gamma * std::sqrt(static_cast<double>(n * p));
  reg.r_value = [](const Matrix& x) { return x.cwiseAbs().sum(); };
  reg.prox = [gamma](const Matrix& x, double tau) {
    return soft_threshold(x, tau * gamma);
  };
  reg.combine_subgradient = [gamma](const Matrix& x, const Matrix& g) {
    Matrix out(g.rows(), g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double v = x(i, j);
        const double gi = g(i, j);
        if (v != 0.0)
          out(i, j) = gi + gamma * sign_or_zero(v);
        else
          out(i, j) = sign_or_zero(gi) * std::max(std::fabs(gi) - gamma, 0.0);
      }
    return out;
  };
  return reg;
}

Matrix draw_noise(const NoiseModel& model, Eigen::Index rows,
                  Eigen::Index cols, Rng& rng) {
  if (model.sigma == 0.0) return Matrix::Zero(rows, cols);
  Matrix xi = model.sigma * gaussian_matrix(rows, cols, rng);
  const double bound = model.effective_bound();
  const double norm = xi.norm();
  if (norm > bound) xi *= bound / norm;
  return xi;
}

double ProblemDefinition::value(const Matrix& x) const {
  double v = phi_value(x);
  if (reg) v += reg->value(x);
  return v;
}

Matrix ProblemDefinition::subgradient(const Matrix& x, Rng& rng) const {
  Matrix g = phi_subgrad(x, rng);
  if (reg) return reg->combine_subgradient(x, g);
  return g;
}

Matrix ProblemDefinition::exact_subgradient(const Matrix& x) const {
  Rng unused = make_rng(0);
  Matrix g = phi_subgrad_exact ? phi_subgrad_exact(x, unused)
                               : phi_subgrad(x, unused);
  if (reg) return reg->combine_subgradient(x, g);
  return g;
}

ProblemDefinition make_quadratic_trace(const Matrix& a, Eigen::Index p) {
  require_symmetric(a, "quadratic_trace");
  require_columns(a.rows(), p, "quadratic_trace");
  ProblemDefinition prob;
  prob.name = "quadratic_trace";
  prob.n = a.rows();
  prob.p = p;
  prob.phi_value = [a](const Matrix& x) {
    return -(x.transpose() * a * x).trace();
  };
  prob.phi_subgrad = [a](const Matrix& x, Rng&) -> Matrix {
    return -2.0 * a * x;
  };
  prob.phi_subgrad_exact = prob.phi_subgrad;
  prob.lipschitz_est =
      2.0 * spectral_norm_symmetric(a) * std::sqrt(2.0 * static_cast<double>(p));
  prob.smooth = true;
  return prob;
}

ProblemDefinition make_sparse_pca(const Matrix& sigma, double gamma,
                                  Eigen::Index p) {
  require_symmetric(sigma, "sparse_pca");
  if (!(gamma >= 0.0)) throw ValidationError("sparse_pca: gamma must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
    throw ValidationError("sparse_pca: covariance is not positive semidefinite");
  ProblemDefinition prob = make_quadratic_trace(sigma, p);
  prob.name = "sparse_pca";
  prob.reg = make_l1_regularizer(gamma, prob.n, p);
  return prob;
}

ProblemDefinition make_l1_pca(const Matrix& a, Eigen::Index p) {
  if (a.rows() < 1 || a.cols() < 1)
    throw DimensionError("l1_pca: data matrix must be non-empty");
  if (!a.allFinite()) throw ValidationError("l1_pca: non-finite entry");
  require_columns(a.cols(), p, "l1_pca");
  ProblemDefinition prob;
  prob.name = "l1_pca";
  prob.n = a.cols();
  prob.p = p;
  prob.phi_value = [a](const Matrix& x) { return -(a * x).cwiseAbs().sum(); };
  prob.phi_subgrad = [a](const Matrix& x, Rng&) -> Matrix {
    const Matrix s = (a * x).unaryExpr(&sign_or_zero);
    return -a.transpose() * s;
  };
  prob.phi_subgrad_exact = prob.phi_subgrad;
  Eigen::JacobiSVD<Matrix> svd(a);
  prob.lipschitz_est = svd.singularValues()(0) *
                       std::sqrt(static_cast<double>(a.rows() * p));
  prob.smooth = false;
  return prob;
}

ProblemDefinition make_linear(const Matrix& c) {
  validate_matrix(c, "C");
  ProblemDefinition prob;
  prob.name = "linear";
  prob.n = c.rows();
  prob.p = c.cols();
  prob.phi_value = [c](const Matrix& x) { return (c.array() * x.array()).sum(); };
  prob.phi_subgrad = [c](const Matrix&, Rng&) -> Matrix { return c; };
  prob.phi_subgrad_exact = prob.phi_subgrad;
  prob.lipschitz_est = c.norm();
  prob.smooth = true;
  return prob;
}

ProblemDefinition make_zero(Eigen::Index n, Eigen::Index p) {
  require_columns(n, p, "zero");
  ProblemDefinition prob;
  prob.name = "zero";
  prob.n = n;
  prob.p = p;
  prob.phi_value = [](const Matrix&) { return 0.0; };
  prob.phi_subgrad = [](const Matrix& x, Rng&) -> Matrix {
    return Matrix::Zero(x.rows(), x.cols());
  };
  prob.phi_subgrad_exact = prob.phi_subgrad;
  prob.smooth = true;
  return prob;
}

ProblemDefinition attach_l1_regularizer(ProblemDefinition problem,
                                        double gamma) {
  if (problem.reg)
    throw ConfigError("attach_l1_regularizer: problem already has a regularizer");
  problem.reg = make_l1_regularizer(gamma, problem.n, problem.p);
  return problem;
}

ProblemDefinition attach_noise(ProblemDefinition problem,
                               const NoiseModel& model) {
  if (!(model.sigma >= 0.0) || !(model.bound >= 0.0))
    throw ValidationError("attach_noise: sigma and bound must be >= 0");
  if (model.sigma == 0.0) return problem;
  if (!problem.phi_subgrad_exact) problem.phi_subgrad_exact = problem.phi_subgrad;
  ProblemSubgrad inner = problem.phi_subgrad;
  problem.phi_subgrad = [inner, model](const Matrix& x, Rng& rng) -> Matrix {
    Matrix g = inner(x, rng);
    Rng stream = make_rng(model.seed, rng());
    return g + draw_noise(model, g.rows(), g.cols(), stream);
  };
  problem.noise = model;
  problem.smooth = false;
  return problem;
}

Matrix random_stiefel(Eigen::Index n, Eigen::Index p, Rng& rng) {
  return project_stiefel(gaussian_matrix(n, p, rng)).matrix();
}

Matrix sample_at_violation(Eigen::Index n, Eigen::Index p, double radius,
                           Rng& rng) {
  if (!(radius >= 0.0)) throw ValidationError("sample_at_violation: radius < 0");
  const Matrix q = random_stiefel(n, p, rng);
  const Matrix v = random_stiefel(p, p, rng);
  // X^T X - I = V diag(mu) V^T with ||mu|| = radius, so the violation is
  // exact; mu_i > -1 keeps the symmetric factor I + E positive definite.
  Vector mu = gaussian_matrix(p, 1, rng).col(0);
  const double norm = mu.norm();
  if (norm > 0.0) mu *= radius / norm;
  Vector s(p);
  for (Eigen::Index i = 0; i < p; ++i)
    s(i) = std::sqrt(std::max(1.0 + mu(i), 1e-12));
  return q * (v * s.asDiagonal() * v.transpose());
}

Matrix sample_in_shell(Eigen::Index n, Eigen::Index p, double r, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  // 1 - U lies in (0, 1], so the radius never collapses to zero.
  const double radius = r * (1.0 - uni(rng));
  return sample_at_violation(n, p, radius, rng);
}

ConstantEstimates estimate_constants(const ProblemDefinition& problem,
                                     int samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("estimate_constants: samples < 1");
  Rng rng = make_rng(seed, 0xC0457);
  ConstantEstimates est;
  for (int s = 0; s < samples; ++s) {
    const Matrix x = sample_in_shell(problem.n, problem.p, 1.0, rng);
    const Matrix w = problem.subgradient(apply_A(x), rng);
    est.m1 = std::max(est.m1, w.norm());
    est.m_tilde = std::max(est.m_tilde, jacobian_apply(x, w).norm());
    est.m_hat = std::max(est.m_hat, problem.subgradient(x, rng).norm());
  }
  return est;
}

// ---------------------------------------------------------------------------

MlpLoss::MlpLoss(std::vector<Sample> data, MlpShape shape)
    : data_(std::move(data)), shape_(shape) {
  if (data_.empty()) throw ValidationError("mlp: empty dataset");
  if (shape_.input < 1 || shape_.hidden < 1 || shape_.output < 1)
    throw DimensionError("mlp: widths must be positive");
  if (shape_.input < shape_.hidden)
    throw DimensionError("mlp: Stiefel block needs input >= hidden");
  for (const auto& s : data_)
    if (s.x.size() != shape_.input || s.y.size() != shape_.output)
      throw DimensionError("mlp: sample dimensions do not match widths");
}

namespace {

void check_params(const MlpParams& p, const MlpShape& s) {
  if (p.x.rows() != s.input || p.x.cols() != s.hidden ||
      p.b1.size() != s.hidden || p.w2.rows() != s.output ||
      p.w2.cols() != s.hidden || p.b2.size() != s.output)
    throw DimensionError("mlp: parameter shapes do not match widths");
}

}  // namespace

double MlpLoss::value(const MlpParams& params) const {
  check_params(params, shape_);
  double total = 0.0;
  for (const auto& s : data_) {
    const Vector z = params.x.transpose() * s.x + params.b1;
    const Vector a = z.cwiseMax(0.0);
    total += (params.w2 * a + params.b2 - s.y).squaredNorm();
  }
  return total / static_cast<double>(data_.size());
}

MlpGradient MlpLoss::gradient(const MlpParams& params) const {
  check_params(params, shape_);
  MlpGradient g{Matrix::Zero(shape_.input, shape_.hidden),
                Vector::Zero(shape_.hidden),
                Matrix::Zero(shape_.output, shape_.hidden),
                Vector::Zero(shape_.output)};
  const double scale = 2.0 / static_cast<double>(data_.size());
  for (const auto& s : data_) {
    const Vector z = params.x.transpose() * s.x + params.b1;
    const Vector a = z.cwiseMax(0.0);
    const Vector e = scale * (params.w2 * a + params.b2 - s.y);
    g.w2.noalias() += e * a.transpose();
    g.b2 += e;
    Vector dz = params.w2.transpose() * e;
    for (Eigen::Index i = 0; i < dz.size(); ++i)
      if (!(z(i) > 0.0)) dz(i) = 0.0;
    g.x.noalias() += s.x * dz.transpose();
    g.b1 += dz;
  }
  return g;
}

ProblemDefinition make_orthogonal_mlp(std::vector<Sample> data,
                                      const MlpShape& shape,
                                      const MlpParams& fixed) {
  auto loss = std::make_shared<const MlpLoss>(std::move(data), shape);
  check_params(fixed, shape);
  ProblemDefinition prob;
  prob.name = "orthogonal_mlp";
  prob.n = shape.input;
  prob.p = shape.hidden;
  prob.phi_value = [loss, fixed](const Matrix& x) {
    MlpParams params = fixed;
    params.x = x;
    return loss->value(params);
  };
  prob.phi_subgrad = [loss, fixed](const Matrix& x, Rng&) -> Matrix {
    MlpParams params = fixed;
    params.x = x;
    return loss->gradient(params).x;
  };
  prob.phi_subgrad_exact = prob.phi_subgrad;
  prob.smooth = false;
  return prob;
}

// ---------------------------------------------------------------------------

Matrix load_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      double v = 0.0;
      const char* b = first == std::string::npos ? cell.data() : cell.data() + first;
      const char* e = first == std::string::npos ? cell.data() : cell.data() + last + 1;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e || !std::isfinite(v))
        throw ConfigError(path + ":" + std::to_string(line_no) + ": column " +
                          std::to_string(col) + ": not a finite number");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": ragged row (expected " +
                        std::to_string(rows.front().size()) + " columns)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix synthetic_gaussian(Eigen::Index rows, Eigen::Index cols,
                          std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xDA7A);
  return gaussian_matrix(rows, cols, rng);
}

Matrix synthetic_sparse_covariance(Eigen::Index n, Eigen::Index p,
                                   std::uint64_t seed) {
  require_columns(n, p, "sparse_covariance");
  Rng rng = make_rng(seed, 0x5C0F);
  std::bernoulli_distribution coin(0.5);
  Matrix sigma = Matrix::Zero(n, n);
  const Eigen::Index base = n / p;
  Eigen::Index start = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index size = j + 1 == p ? n - start : base;
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = coin(rng) ? 1.0 : -1.0;
    v /= std::sqrt(static_cast<double>(size));
    const double lambda = 4.0 + 2.0 * static_cast<double>(p - 1 - j);
    const Matrix z = gaussian_matrix(size, size, rng);
    sigma.block(start, start, size, size) =
        lambda * v * v.transpose() +
        (0.5 / static_cast<double>(size)) * z * z.transpose();
    start += size;
  }
  return (sigma + sigma.transpose()) / 2.0;
}

}  // namespace cdf
