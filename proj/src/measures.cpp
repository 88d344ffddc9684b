#include "raredyn/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "raredyn/errors.hpp"
#include "raredyn/lp.hpp"

namespace raredyn {

namespace {

struct SignedUnion {
  std::vector<State> atoms;
  std::vector<double> mu;
  std::vector<double> nu;
};

SignedUnion merge_supports(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.atoms.size() != mu.weights.size() || nu.atoms.size() != nu.weights.size())
    throw Error(ErrorCode::InvalidMeasure, "atoms/weights size mismatch");
  std::map<State, std::size_t> index;
  SignedUnion u;
  auto add = [&](const State& atom, double w, bool first) {
    auto [it, inserted] = index.emplace(atom, u.atoms.size());
    if (inserted) {
      u.atoms.push_back(atom);
      u.mu.push_back(0.0);
      u.nu.push_back(0.0);
    }
    (first ? u.mu : u.nu)[it->second] += w;
  };
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) add(mu.atoms[i], mu.weights[i], true);
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) add(nu.atoms[i], nu.weights[i], false);
  return u;
}

}  // namespace

DualLipschitzResult dual_lipschitz(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Metric& d) {
  const SignedUnion u = merge_supports(mu, nu);
  const std::size_t k = u.atoms.size();
  DualLipschitzResult res;
  res.atoms = u.atoms;
  res.witness.assign(k, 0.0);
  if (k == 0) return res;
  if (k > kMaxDualLipschitzAtoms)
    throw Error(ErrorCode::TooLarge, "union support has " + std::to_string(k) + " atoms (cap 64)");

  std::vector<double> w(k);
  bool all_zero = true;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = u.mu[i] - u.nu[i];
    if (w[i] != 0.0) all_zero = false;
  }
  if (all_zero) return res;

  std::vector<double> dist(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double dij = d(u.atoms[i], u.atoms[j]);
      if (!(dij > 0.0) || !std::isfinite(dij))
        throw Error(ErrorCode::MetricDegenerate, "distinct atoms at zero or non-finite distance");
      dist[i * k + j] = dist[j * k + i] = dij;
    }

  // Dual LP: minimize sum d_ij y_ij + y_s over y >= 0 with one equality per
  // primal variable (f_0..f_{k-1}, s). Columns: y+_i, y-_i, y_ij (i != j),
  // y_s, t (surplus making the s row an equality).
  const auto K = static_cast<Eigen::Index>(k);
  const Eigen::Index pairs = K * (K - 1);
  const Eigen::Index cols = 2 * K + pairs + 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K + 1, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K + 1);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index i = 0; i < K; ++i) {
    A(i, i) = 1.0;
    A(i, K + i) = -1.0;
    A(K, i) = -1.0;
    A(K, K + i) = -1.0;
    b[i] = w[static_cast<std::size_t>(i)];
  }
  Eigen::Index col = 2 * K;
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) {
      if (i == j) continue;
      const double dij = dist[static_cast<std::size_t>(i * K + j)];
      A(i, col) = 1.0;
      A(j, col) = -1.0;
      A(K, col) = dij;
      c[col] = dij;
      ++col;
    }
  A(K, col) = 1.0;  // y_s
  c[col] = 1.0;
  ++col;
  A(K, col) = -1.0;  // t

  const lp::Result sol = lp::solve_standard_form(A, b, c);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::SolveFailed, "dual-Lipschitz LP did not reach optimality (status " + std::to_string(static_cast<int>(sol.status)) + ")");
  for (std::size_t i = 0; i < k; ++i) res.witness[i] = sol.dual[static_cast<Eigen::Index>(i)];
  res.sup_budget = sol.dual[K];
  res.distance = std::max(0.0, sol.objective);
  return res;
}

double total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const SignedUnion u = merge_supports(mu, nu);
  double s = 0.0;
  for (std::size_t i = 0; i < u.atoms.size(); ++i) s += std::abs(u.mu[i] - u.nu[i]);
  return 0.5 * s;
}

double total_variation(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  return 0.5 * (mu - nu).cwiseAbs().sum();
}

Potential mcshane_extend(const std::vector<std::size_t>& subset, const std::vector<double>& f,
                         const FiniteMarkovKernel& space) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "McShane extension from an empty subset");
  if (subset.size() != f.size()) throw Error(ErrorCode::InvalidArgument, "subset and values differ in size");
  for (double v : f)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite value on the subset");
  double lip = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      const double d = space.distance(subset[a], subset[b]);
      if (d > 0.0) lip = std::max(lip, std::abs(f[a] - f[b]) / d);
    }
  const auto [lo_it, hi_it] = std::minmax_element(f.begin(), f.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < subset.size(); ++a) best = std::min(best, f[a] + lip * space.distance(x, subset[a]));
    out[x] = std::clamp(best, lo, hi);
  }
  for (std::size_t a = 0; a < subset.size(); ++a) out[subset[a]] = f[a];
  Potential p(std::move(out));
  p.lipschitz = lip;
  p.oscillation = hi - lo;
  return p;
}

}  // namespace raredyn
