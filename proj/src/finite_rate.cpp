#include <algorithm>
#include <cmath>
#include <limits>

#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"

namespace raredyn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxAscentIterations = 10000;
constexpr double kGradientTol = 1e-10;
constexpr double kArmijoC = 1e-4;
// An objective above this value along the ascent is taken as divergence to +inf.
constexpr double kDivergenceThreshold = 1e3;

void validate_sigma(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma) {
  if (static_cast<std::size_t>(sigma.size()) != kernel.size())
    throw Error(ErrorCode::InvalidMeasure, "measure size differs from state count");
  double s = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!std::isfinite(sigma[i]) || sigma[i] < 0.0) throw Error(ErrorCode::InvalidMeasure, "negative or non-finite weight");
    s += sigma[i];
  }
  if (std::abs(s - 1.0) > 1e-12) throw Error(ErrorCode::InvalidMeasure, "weights do not sum to 1");
}

// DV objective restricted to the support: log P entries (-inf for zeros),
// weights sigma_S, and the row-softmax W used by gradient and Hessian.
struct SupportProblem {
  Eigen::MatrixXd log_p;  // m x m
  Eigen::VectorXd sigma;  // m

  double value(const Eigen::VectorXd& u, Eigen::MatrixXd* softmax = nullptr) const {
    const auto m = sigma.size();
    double total = 0.0;
    if (softmax) softmax->resize(m, m);
    for (Eigen::Index x = 0; x < m; ++x) {
      double mx = kNegInf;
      for (Eigen::Index y = 0; y < m; ++y)
        if (log_p(x, y) != kNegInf) mx = std::max(mx, log_p(x, y) + u[y]);
      double s = 0.0;
      for (Eigen::Index y = 0; y < m; ++y)
        if (log_p(x, y) != kNegInf) s += std::exp(log_p(x, y) + u[y] - mx);
      const double lse = mx + std::log(s);
      total += sigma[x] * (u[x] - lse);
      if (softmax)
        for (Eigen::Index y = 0; y < m; ++y)
          (*softmax)(x, y) = log_p(x, y) == kNegInf ? 0.0 : std::exp(log_p(x, y) + u[y] - lse);
    }
    return total;
  }
};

}  // namespace

double dv_objective(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const Eigen::VectorXd& u) {
  const std::size_t n = kernel.size();
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double w = sigma[static_cast<Eigen::Index>(x)];
    if (w == 0.0) continue;
    double mx = kNegInf;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) mx = std::max(mx, std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)]);
    if (mx == kNegInf) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) s += std::exp(std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)] - mx);
    total += w * (u[static_cast<Eigen::Index>(x)] - mx - std::log(s));
  }
  return total;
}

Eigen::VectorXd dv_gradient(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const Eigen::VectorXd& u) {
  const std::size_t n = kernel.size();
  Eigen::VectorXd g = sigma;
  for (std::size_t x = 0; x < n; ++x) {
    const double w = sigma[static_cast<Eigen::Index>(x)];
    if (w == 0.0) continue;
    double mx = kNegInf;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) mx = std::max(mx, std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)]);
    double s = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) s += std::exp(std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)] - mx);
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0)
        g[static_cast<Eigen::Index>(y)] -=
            w * std::exp(std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)] - mx) / s;
  }
  return g;
}

RateResult rate_dv(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma) {
  validate_sigma(kernel, sigma);
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < kernel.size(); ++x)
    if (sigma[static_cast<Eigen::Index>(x)] > 0.0) support.push_back(x);
  const auto m = static_cast<Eigen::Index>(support.size());

  RateResult res;
  // Off the support the optimal u is -inf, so only P restricted to the
  // support matters; a supported row with no mass inside makes I infinite.
  SupportProblem prob;
  prob.log_p.resize(m, m);
  prob.sigma.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    prob.sigma[a] = sigma[static_cast<Eigen::Index>(support[static_cast<std::size_t>(a)])];
    double inside = 0.0;
    for (Eigen::Index b = 0; b < m; ++b) {
      const double p = kernel.p(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
      prob.log_p(a, b) = p > 0.0 ? std::log(p) : kNegInf;
      inside += p;
    }
    if (inside == 0.0) {
      res.value = RateValue::infinity();
      return res;
    }
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd W;
  double J = prob.value(u, &W);
  int it = 0;
  double gnorm = 0.0;
  for (; it < kMaxAscentIterations; ++it) {
    const Eigen::VectorXd g = prob.sigma - W.transpose() * prob.sigma;
    gnorm = g.cwiseAbs().maxCoeff();
    if (gnorm < kGradientTol) break;
    // Negative Hessian: sum_x sigma_x (diag(W_x) - W_x W_x^T), PSD.
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index x = 0; x < m; ++x) {
      const Eigen::VectorXd w = W.row(x).transpose();
      H.diagonal() += prob.sigma[x] * w;
      H.noalias() -= prob.sigma[x] * (w * w.transpose());
    }
    const double damping = 1e-12 * (1.0 + H.trace());
    H.diagonal().array() += damping;
    const Eigen::VectorXd d = H.ldlt().solve(g);
    const double slope = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::MatrixXd W_new;
    for (int halving = 0; halving < 60; ++halving, alpha *= 0.5) {
      const Eigen::VectorXd trial = u + alpha * d;
      const double J_new = prob.value(trial, &W_new);
      if (std::isfinite(J_new) && J_new >= J + kArmijoC * alpha * slope) {
        u = trial;
        J = J_new;
        W = std::move(W_new);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (J > kDivergenceThreshold) {
      res.value = RateValue::infinity();
      res.iterations = it + 1;
      return res;
    }
  }
  res.value = RateValue::finite(std::max(0.0, J));
  res.iterations = it;
  res.gradient_norm = gnorm;
  Eigen::VectorXd full = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kernel.size()), u.minCoeff() - 60.0);
  for (Eigen::Index a = 0; a < m; ++a) full[static_cast<Eigen::Index>(support[static_cast<std::size_t>(a)])] = u[a];
  res.optimizer = full;
  return res;
}

Potential induced_potential(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& u) {
  const std::size_t n = kernel.size();
  std::vector<double> v(n);
  for (std::size_t x = 0; x < n; ++x) {
    double mx = kNegInf;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) mx = std::max(mx, std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)]);
    double s = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      if (kernel.p(x, y) > 0.0) s += std::exp(std::log(kernel.p(x, y)) + u[static_cast<Eigen::Index>(y)] - mx);
    v[x] = u[static_cast<Eigen::Index>(x)] - (mx + std::log(s));
  }
  return Potential(std::move(v));
}

double rate_legendre(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const PotentialFamily& family) {
  validate_sigma(kernel, sigma);
  double best = 0.0;  // V = 0 always belongs to the family: Lambda(0) = 0
  for (const auto& V : family) best = std::max(best, integrate(V, sigma) - pressure(kernel, V).lambda);
  return best;
}

}  // namespace raredyn
