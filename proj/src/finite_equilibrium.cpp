#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"

namespace raredyn {

namespace {

constexpr double kTieTol = 1e-10;

Eigen::MatrixXd class_block(const FiniteMarkovKernel& kernel, const Potential& V, const std::vector<std::size_t>& states) {
  const auto m = static_cast<Eigen::Index>(states.size());
  double vmax = -std::numeric_limits<double>::infinity();
  for (auto s : states) vmax = std::max(vmax, V[s]);
  Eigen::MatrixXd b(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      b(i, j) = kernel.p(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]) *
                std::exp(V[states[static_cast<std::size_t>(j)]] - vmax);
  return b;
}

}  // namespace

EquilibriumResult equilibrium_states(const FiniteMarkovKernel& kernel, const Potential& V) {
  const PressureResult pr = pressure(kernel, V);
  EquilibriumResult res;
  res.lambda = pr.lambda;
  const auto n = static_cast<Eigen::Index>(kernel.size());
  for (const auto& c : pr.classes) {
    if (c.log_radius < pr.lambda - kTieTol) continue;
    const PerronTriple t = perron_triple_of_matrix(class_block(kernel, V, c.states), c.period);
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < c.states.size(); ++i)
      sigma[static_cast<Eigen::Index>(c.states[i])] =
          std::max(0.0, t.h[static_cast<Eigen::Index>(i)] * t.mu[static_cast<Eigen::Index>(i)]);
    sigma /= sigma.sum();
    res.states.push_back(std::move(sigma));
  }
  res.unique = res.states.size() == 1;
  return res;
}

MembershipResult membership_test(const FiniteMarkovKernel& kernel, const Potential& V) {
  MembershipResult res;
  res.pressure = pressure(kernel, V);
  res.equilibrium = equilibrium_states(kernel, V);
  if (!res.pressure.net_converges) res.reasons.push_back("per-state rates differ");
  if (!res.equilibrium.unique) res.reasons.push_back("non-unique equilibrium");
  res.in_V = res.reasons.empty();
  return res;
}

MixingResult invariant_and_mixing(const FiniteMarkovKernel& kernel) {
  const auto classes = communicating_classes(kernel);
  std::vector<const CommunicatingClass*> closed;
  for (const auto& c : classes)
    if (c.closed) closed.push_back(&c);
  if (closed.size() != 1) {
    std::ostringstream os;
    os << "chain has " << closed.size() << " closed classes";
    throw Error(ErrorCode::NotMixing, os.str());
  }
  if (closed[0]->period != 1) {
    std::ostringstream os;
    os << "closed class has period " << closed[0]->period;
    throw Error(ErrorCode::NotMixing, os.str());
  }
  // Unique closed aperiodic class: mu_* lives on it and is its Perron left vector.
  const auto& states = closed[0]->states;
  const Potential zero = Potential::constant(kernel.size(), 0.0);
  const PerronTriple t = perron_triple_of_matrix(class_block(kernel, zero, states), 1);
  MixingResult res;
  res.mu_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kernel.size()));
  for (std::size_t i = 0; i < states.size(); ++i)
    res.mu_star[static_cast<Eigen::Index>(states[i])] = std::max(0.0, t.mu[static_cast<Eigen::Index>(i)]);
  res.mu_star /= res.mu_star.sum();

  Eigen::EigenSolver<Eigen::MatrixXd> es(kernel.matrix(), false);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mods.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  res.second_modulus = mods.size() > 1 ? std::min(1.0, mods[1]) : 0.0;
  if (res.second_modulus >= 1.0 - 1e-12) throw Error(ErrorCode::NotMixing, "second eigenvalue on the unit circle");
  res.gamma = res.second_modulus > 0.0 ? -std::log(res.second_modulus) : std::numeric_limits<double>::infinity();
  return res;
}

double clt_variance(const FiniteMarkovKernel& kernel, const Potential& f) {
  if (f.size() != kernel.size()) throw Error(ErrorCode::InvalidArgument, "function size differs from state count");
  for (double v : f.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite observable");
  const Eigen::VectorXd mu = invariant_and_mixing(kernel).mu_star;
  const auto n = static_cast<Eigen::Index>(kernel.size());
  const Eigen::VectorXd fv = f.vec();
  const Eigen::VectorXd rhs_f = fv.array() - fv.dot(mu);

  Eigen::MatrixXd A(n + 1, n);
  A.topRows(n) = Eigen::MatrixXd::Identity(n, n) - kernel.matrix();
  A.row(n) = mu.transpose();
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = rhs_f;
  rhs[n] = 0.0;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < n) throw Error(ErrorCode::SolveFailed, "Poisson system is singular beyond the constants");
  const Eigen::VectorXd psi = qr.solve(rhs);
  const double residual = (A * psi - rhs).cwiseAbs().maxCoeff();
  if (residual > 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff())) throw Error(ErrorCode::SolveFailed, "Poisson residual too large");
  const Eigen::VectorXd Ppsi = kernel.matrix() * psi;
  const double var = mu.dot(psi.cwiseProduct(psi)) - mu.dot(Ppsi.cwiseProduct(Ppsi));
  return std::max(0.0, var);
}

DualityCheck duality_check(const FiniteMarkovKernel& kernel, const Potential& V) {
  const EquilibriumResult eq = equilibrium_states(kernel, V);
  if (!eq.unique || eq.states.empty())
    throw Error(ErrorCode::NotIrreducible, "duality check needs a unique equilibrium state");
  DualityCheck d;
  d.sigma = eq.states[0];
  d.pressure = pressure(kernel, V).lambda;
  // Collatz-Wielandt: max_x log (Q h)(x) / h(x) bounds Lambda from above for
  // any positive h, so the reported gap never goes negative from rounding in
  // the eigen solve.
  if (communicating_classes(kernel).size() == 1) {
    const TiltedKernel tk(kernel, V);
    const PerronTriple t = perron_triple(tk);
    const Eigen::ArrayXd ratio = (tk.matrix * t.h).array() / t.h.array();
    d.pressure = std::max(d.pressure, std::log(ratio.maxCoeff()));
  }
  const RateValue I = rate_flow(kernel, d.sigma);
  d.legendre = I.is_finite() ? V.vec().dot(d.sigma) - I.value() : -std::numeric_limits<double>::infinity();
  d.gap = d.pressure - d.legendre;
  // A negative difference within a few ulps of the operands is rounding in
  // the subtraction itself.
  const double ulp_scale = std::max({1.0, std::abs(d.pressure), std::abs(d.legendre)});
  if (d.gap < 0.0 && -d.gap <= 8.0 * std::numeric_limits<double>::epsilon() * ulp_scale) d.gap = 0.0;
  return d;
}

double feynman_kac_residual(const TiltedKernel& tk, const Potential& f, std::size_t n) {
  const PerronTriple t = perron_triple(tk);
  // Shift f to g = f + c >= 1 and run both g and 1 in the log domain, so
  // lambda^n never has to be formed.
  const Eigen::VectorXd fv = f.vec();
  const double c = 1.0 - fv.minCoeff();
  const Eigen::VectorXd log_g = (fv.array() + c).log().matrix();
  const double shift = static_cast<double>(n) * t.log_lambda;
  const Eigen::VectorXd qg = (feynman_kac_log_apply(tk, log_g, n).array() - shift).exp().matrix();
  const Eigen::VectorXd q1 =
      (feynman_kac_log_apply(tk, Eigen::VectorXd::Zero(fv.size()), n).array() - shift).exp().matrix();
  const Eigen::VectorXd limit = fv.dot(t.mu) * t.h;
  return (qg - c * q1 - limit).cwiseAbs().maxCoeff();
}

}  // namespace raredyn
