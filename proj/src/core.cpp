#include "raredyn/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "raredyn/errors.hpp"

namespace raredyn {

double euclidean_distance(const State& a, const State& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

FiniteMarkovKernel::FiniteMarkovKernel(std::vector<std::string> labels,
                                       std::vector<std::vector<double>> coords,
                                       Eigen::MatrixXd matrix)
    : labels_(std::move(labels)), coords_(std::move(coords)), matrix_(std::move(matrix)) {
  const auto n = labels_.size();
  if (n == 0) throw Error(ErrorCode::ConfigError, "kernel needs at least one state");
  if (coords_.size() != n) throw Error(ErrorCode::ConfigError, "coords count differs from state count");
  if (static_cast<std::size_t>(matrix_.rows()) != n || static_cast<std::size_t>(matrix_.cols()) != n)
    throw Error(ErrorCode::ConfigError, "matrix shape differs from state count");
  for (std::size_t i = 0; i < n; ++i) {
    if (coords_[i].size() != coords_[0].size())
      throw Error(ErrorCode::ConfigError, "coordinates have inconsistent dimension");
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = matrix_(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") is negative or non-finite";
        throw Error(ErrorCode::ConfigError, os.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "row " << i << " sums to " << sum;
      throw Error(ErrorCode::ConfigError, os.str());
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (labels_[i] == labels_[j]) throw Error(ErrorCode::ConfigError, "duplicate state label " + labels_[i]);
  cumulative_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cumulative_[i].resize(n);
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      c += matrix_(i, j);
      cumulative_[i][j] = c;
    }
  }
}

namespace {

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

std::vector<std::vector<double>> line_coords(std::size_t n) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<double>(i)});
  return out;
}

}  // namespace

FiniteMarkovKernel::FiniteMarkovKernel(Eigen::MatrixXd matrix)
    : FiniteMarkovKernel(default_labels(static_cast<std::size_t>(matrix.rows())),
                         line_coords(static_cast<std::size_t>(matrix.rows())), matrix) {}

double FiniteMarkovKernel::distance(std::size_t x, std::size_t y) const {
  return euclidean_distance(coords_[x], coords_[y]);
}

std::size_t FiniteMarkovKernel::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  throw Error(ErrorCode::InvalidArgument, "unknown state label '" + label + "'");
}

FiniteMarkovKernel FiniteMarkovKernel::restricted(const std::vector<std::size_t>& subset) const {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "restriction to an empty subset");
  const auto m = subset.size();
  Eigen::MatrixXd sub(m, m);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  for (std::size_t a = 0; a < m; ++a) {
    if (subset[a] >= size()) throw Error(ErrorCode::InvalidArgument, "subset index out of range");
    labels.push_back(labels_[subset[a]]);
    coords.push_back(coords_[subset[a]]);
    for (std::size_t b = 0; b < m; ++b) sub(a, b) = matrix_(subset[a], subset[b]);
    const double leak = 1.0 - sub.row(a).sum();
    if (std::abs(leak) > 1e-12)
      throw Error(ErrorCode::ConfigError, "subset is not closed: state " + labels_[subset[a]] + " leaks mass");
  }
  return FiniteMarkovKernel(std::move(labels), std::move(coords), std::move(sub));
}

std::size_t FiniteMarkovKernel::sample_next(std::size_t x, double uniform) const {
  const auto& cum = cumulative_[x];
  // First positive-probability index whose cumulative sum reaches u, so a
  // draw on a boundary goes to the lower index.
  for (std::size_t j = 0; j < cum.size(); ++j)
    if (uniform <= cum[j] && matrix_(x, j) > 0.0) return j;
  // u above the last cumulative sum can only come from rounding of the row sum.
  for (std::size_t j = cum.size(); j-- > 0;)
    if (matrix_(x, j) > 0.0) return j;
  return x;
}

FiniteMarkovKernel toy_chain() {
  Eigen::MatrixXd m(3, 3);
  m << 1.0, 0.0, 0.0,
       0.5, 0.5, 0.0,
       0.0, 1.0, 0.0;
  return FiniteMarkovKernel(m);
}

FiniteMarkovKernel iid_chain(const std::vector<double>& law) {
  const auto n = static_cast<Eigen::Index>(law.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = law[static_cast<std::size_t>(j)];
  return FiniteMarkovKernel(m);
}

double Potential::osc() const {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

double Potential::lip(const FiniteMarkovKernel& kernel) const {
  double best = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      const double d = kernel.distance(i, j);
      if (d > 0.0) best = std::max(best, std::abs(values[i] - values[j]) / d);
    }
  return best;
}

Potential& Potential::annotate(const FiniteMarkovKernel& kernel) {
  lipschitz = lip(kernel);
  oscillation = osc();
  return *this;
}

double DiscreteMeasure::mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void DiscreteMeasure::validate_probability() const {
  if (atoms.size() != weights.size()) throw Error(ErrorCode::InvalidMeasure, "atoms/weights size mismatch");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidMeasure, "negative or non-finite weight");
  if (std::abs(mass() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidMeasure, "weights do not sum to 1");
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      if (atoms[i] == atoms[j]) throw Error(ErrorCode::InvalidMeasure, "repeated atom");
}

DiscreteMeasure to_measure(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& weights) {
  DiscreteMeasure m;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    if (weights[static_cast<Eigen::Index>(i)] == 0.0) continue;
    m.atoms.push_back(kernel.coords()[i]);
    m.weights.push_back(weights[static_cast<Eigen::Index>(i)]);
  }
  return m;
}

Eigen::VectorXd dirac(std::size_t n, std::size_t x) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(x)] = 1.0;
  return v;
}

RdsModel as_rds_model(const FiniteMarkovKernel& kernel) {
  RdsModel model;
  model.name = "finite-chain";
  model.dimension = 1;
  model.finite = kernel;
  const auto shared = std::make_shared<FiniteMarkovKernel>(kernel);
  model.step = [shared](const State& x, const Kick& kick) {
    const auto i = static_cast<std::size_t>(x.at(0));
    return State{static_cast<double>(shared->sample_next(i, kick.at(0)))};
  };
  model.sample_kick = [](CounterRng& rng) { return Kick{rng.uniform()}; };
  model.distance = [shared](const State& a, const State& b) {
    return shared->distance(static_cast<std::size_t>(a.at(0)), static_cast<std::size_t>(b.at(0)));
  };
  return model;
}

Trajectory simulate_trajectory(const RdsModel& model, const State& x0, std::size_t n,
                               std::uint64_t seed, std::uint64_t trajectory_id, bool record_kicks) {
  Trajectory traj;
  traj.x0 = x0;
  traj.seed = seed;
  traj.trajectory_id = trajectory_id;
  traj.states.reserve(n);
  State x = x0;
  for (std::size_t k = 1; k <= n; ++k) {
    CounterRng rng(seed, trajectory_id, k - 1);
    Kick kick = model.sample_kick(rng);
    State next = model.step(x, kick);
    for (double c : next)
      if (!std::isfinite(c)) throw Error(ErrorCode::NumericalBlowup, "non-finite state at step " + std::to_string(k));
    if (record_kicks) traj.kicks.push_back(std::move(kick));
    traj.states.push_back(next);
    x = std::move(next);
  }
  return traj;
}

EmpiricalMeasure empirical_measure(const Trajectory& traj) {
  if (traj.states.empty()) throw Error(ErrorCode::EmptyTrajectory, "empirical measure of a zero-length trajectory");
  std::map<State, std::size_t> counts;
  for (const auto& s : traj.states) ++counts[s];
  EmpiricalMeasure em;
  em.n = traj.states.size();
  for (const auto& [atom, c] : counts) {
    em.measure.atoms.push_back(atom);
    em.counts.push_back(c);
    em.measure.weights.push_back(static_cast<double>(c) / static_cast<double>(em.n));
  }
  return em;
}

std::vector<std::size_t> occupation_counts(const Trajectory& traj, std::size_t num_states) {
  std::vector<std::size_t> c(num_states, 0);
  for (const auto& s : traj.states) ++c.at(static_cast<std::size_t>(s.at(0)));
  return c;
}

double integrate(const Potential& f, const Eigen::VectorXd& weights) {
  if (static_cast<Eigen::Index>(f.size()) != weights.size())
    throw Error(ErrorCode::InvalidArgument, "potential and measure sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = weights[static_cast<Eigen::Index>(i)];
    if (w == 0.0) continue;
    if (!std::isfinite(f[i])) throw Error(ErrorCode::NonFiniteValue, "potential is non-finite on the support");
    s += w * f[i];
  }
  return s;
}

double integrate(const StateFunction& f, const DiscreteMeasure& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    const double v = f(m.atoms[i]);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "function is non-finite on the support");
    s += m.weights[i] * v;
  }
  return s;
}

}  // namespace raredyn
