#include "raredyn/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "raredyn/errors.hpp"
#include "raredyn/measures.hpp"
#include "raredyn/parallel.hpp"

namespace raredyn {

namespace {

std::size_t draw(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    acc += probs[i];
    if (u <= acc) return i;
  }
  return last;
}

double norm(const State& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double CouplingSpec::delta1() const {
  if (g_slope <= 0.0 || q <= 0.0) return std::numeric_limits<double>::infinity();
  // -(1/k) log(c q^k) = -log q - (log c)/k, whose limit is -log q.
  return -std::log(q);
}

void CouplingSpec::validate() const {
  if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorCode::ConfigError, "q must lie in [0, 1)");
  if (!(g_slope >= 0.0) || !std::isfinite(g_slope)) throw Error(ErrorCode::ConfigError, "g slope must be finite and >= 0");
}

MaximalCoupling::MaximalCoupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  mu.validate_probability();
  nu.validate_probability();
  std::map<State, std::pair<double, double>> w;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) w[mu.atoms[i]].first += mu.weights[i];
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) w[nu.atoms[i]].second += nu.weights[i];
  double overlap_mass = 0.0;
  for (const auto& [atom, p] : w) {
    atoms_.push_back(atom);
    const double m = std::min(p.first, p.second);
    overlap_.push_back(m);
    excess_mu_.push_back(p.first - m);
    excess_nu_.push_back(p.second - m);
    overlap_mass += m;
  }
  tv_ = std::clamp(1.0 - overlap_mass, 0.0, 1.0);
  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    if (s > 0.0)
      for (double& x : v) x /= s;
  };
  normalize(overlap_);
  normalize(excess_mu_);
  normalize(excess_nu_);
}

std::pair<State, State> MaximalCoupling::sample(CounterRng& rng) const {
  const double branch = rng.uniform();
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  if (branch >= tv_) {
    const std::size_t i = draw(overlap_, u1);
    return {atoms_[i], atoms_[i]};
  }
  return {atoms_[draw(excess_mu_, u1)], atoms_[draw(excess_nu_, u2)]};
}

std::vector<std::pair<State, State>> MaximalCoupling::sample_many(std::size_t count, std::uint64_t seed) const {
  std::vector<std::pair<State, State>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, i, 0);
    out.push_back(sample(rng));
  }
  return out;
}

MaximalCoupling maximal_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu) { return MaximalCoupling(mu, nu); }

CoupledStep identical_kick_step(const RdsModel& model) {
  return [model](const State& x, const State& y, CounterRng& rng) {
    const Kick k = model.sample_kick(rng);
    return std::make_pair(model.step(x, k), model.step(y, k));
  };
}

CoupledStep finite_maximal_step(const FiniteMarkovKernel& kernel) {
  return [kernel](const State& x, const State& y, CounterRng& rng) {
    const auto row = [&](const State& s) {
      return to_measure(kernel, kernel.matrix().row(static_cast<Eigen::Index>(s.at(0))).transpose());
    };
    const MaximalCoupling mc(row(x), row(y));
    return mc.sample(rng);
  };
}

double tv_lipschitz_modulus(const FiniteMarkovKernel& kernel) {
  double c = 0.0;
  for (std::size_t x = 0; x < kernel.size(); ++x)
    for (std::size_t y = x + 1; y < kernel.size(); ++y) {
      const double tv = total_variation(Eigen::VectorXd(kernel.matrix().row(static_cast<Eigen::Index>(x)).transpose()),
                                        Eigen::VectorXd(kernel.matrix().row(static_cast<Eigen::Index>(y)).transpose()));
      c = std::max(c, tv / kernel.distance(x, y));
    }
  return c;
}

std::string SqueezingReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "dx,q_dx,p_hat,se,g_dx,pass\n";
  for (const auto& r : rows)
    os << r.dx << ',' << r.q_dx << ',' << r.p_hat << ',' << r.se << ',' << r.g_dx << ',' << (r.pass ? 1 : 0) << '\n';
  return os.str();
}

SqueezingReport squeezing_verify(const RdsModel& model, const CouplingSpec& spec,
                                 const std::vector<std::pair<State, State>>& pairs, std::size_t samples,
                                 std::uint64_t seed, const CoupledStep& step, unsigned jobs) {
  spec.validate();
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be at least 1");
  const CoupledStep coupled = step ? step : identical_kick_step(model);
  SqueezingReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto& [x, y] = pairs[j];
    SqueezingRow row;
    row.dx = model.distance(x, y);
    row.q_dx = spec.q * row.dx;
    row.g_dx = spec.g(row.dx);
    std::vector<char> exceed(samples, 0);
    parallel_for(samples, jobs, [&](std::size_t i) {
      CounterRng rng(seed, i, j);
      const auto [rx, ry] = coupled(x, y, rng);
      exceed[i] = model.distance(rx, ry) > row.q_dx * (1.0 + 1e-12);
    });
    std::size_t c = 0;
    for (char e : exceed) c += e ? 1 : 0;
    const double N = static_cast<double>(samples);
    row.p_hat = static_cast<double>(c) / N;
    row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / N);
    const double margin = row.g_dx + 3.0 * row.se - row.p_hat;
    row.pass = margin >= 0.0;
    rep.all_pass = rep.all_pass && row.pass;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    rep.rows.push_back(row);
  }
  if (pairs.empty()) rep.worst_margin = 0.0;
  return rep;
}

void ContractionToy::validate() const {
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error(ErrorCode::ConfigError, "beta2 must lie in (0, 1)");
  if (!(beta1 >= beta2 && beta1 < 1.0)) throw Error(ErrorCode::ConfigError, "beta1 must lie in [beta2, 1)");
  if (!(c1 >= 0.0) || !std::isfinite(c1)) throw Error(ErrorCode::ConfigError, "C1 must be finite and >= 0");
  if (!(kick_bound >= 0.0) || !std::isfinite(kick_bound)) throw Error(ErrorCode::ConfigError, "kick bound must be finite and >= 0");
  if (dim == 0) throw Error(ErrorCode::ConfigError, "dimension must be positive");
}

double ContractionToy::attainable_radius() const { return c1 * kick_bound / (1.0 - beta2); }

std::size_t ContractionToy::irreducibility_horizon(double eps) const {
  const double R = attainable_radius();
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (2.0 * R <= eps) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(eps / (2.0 * R)) / std::log(beta2)));
}

RdsModel ContractionToy::model() const {
  validate();
  RdsModel m;
  m.name = "contraction";
  m.dimension = dim;
  const double b = beta2, c = c1, kb = kick_bound, R = attainable_radius();
  const std::size_t d = dim;
  m.step = [b, c](const State& u, const Kick& z) {
    State out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = b * u[i] + c * z.at(i);
    return out;
  };
  m.sample_kick = [kb, d](CounterRng& rng) {
    Kick z(d, 0.0);
    if (kb == 0.0) return z;
    // Rejection from the cube; the stream is per (seed, id, step), so the
    // variable number of draws stays reproducible.
    while (true) {
      double s = 0.0;
      for (auto& v : z) {
        v = 2.0 * rng.uniform() - 1.0;
        s += v * v;
      }
      if (s <= 1.0) break;
    }
    for (auto& v : z) v *= kb;
    return z;
  };
  m.dist_to_Y = [R](const State& x) { return std::max(0.0, norm(x) - R); };
  m.designated_point = State(dim, 0.0);
  return m;
}

ContractionToy contraction_toy(double beta1, double c1, double beta2, double kick_bound, std::size_t dim) {
  ContractionToy t{beta1, c1, beta2, kick_bound, dim};
  t.validate();
  return t;
}

}  // namespace raredyn
