#include "raredyn/wave_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "raredyn/errors.hpp"
#include "raredyn/mc_engine.hpp"

namespace raredyn {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kSqrt2 = std::sqrt(2.0);
// Energy is checked against the guard every this many substeps.
constexpr std::size_t kGuardStride = 64;

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double divide_error(double steps, double period, double dt) { return std::abs(steps * dt - period) / period; }

}  // namespace

double WaveConfig::a(double x) const {
  if (constant_damping) return damping;
  if (x >= damping_start) return damping;
  if (damping_ramp <= 0.0) return 0.0;
  return damping * smoothstep((x - (damping_start - damping_ramp)) / damping_ramp);
}

double WaveConfig::budget_limit() const { return budget * std::sqrt(period); }

double WaveConfig::budget_used() const {
  double s = 0.0;
  for (std::size_t j = 1; j <= noise_modes; ++j)
    for (std::size_t k = 1; k <= noise_modes; ++k)
      s += b(j, k) * std::pow(static_cast<double>(j * j), 2.0 / 7.0) * (k == 1 ? 1.0 : kSqrt2);
  return s;
}

double WaveConfig::scale() const {
  if (noise_scale >= 0.0) return noise_scale;
  double unit = 0.0;
  for (std::size_t j = 1; j <= noise_modes; ++j)
    for (std::size_t k = 1; k <= noise_modes; ++k)
      unit += std::pow(static_cast<double>(j), -decay_exponent) * std::pow(static_cast<double>(k), -decay_exponent) *
              std::pow(static_cast<double>(j * j), 2.0 / 7.0) * (k == 1 ? 1.0 : kSqrt2);
  return unit > 0.0 ? budget_fill * budget_limit() / unit : 0.0;
}

double WaveConfig::b(std::size_t j, std::size_t k) const {
  if (j < 1 || k < 1 || j > noise_modes || k > noise_modes) return 0.0;
  return scale() * std::pow(static_cast<double>(j), -decay_exponent) * std::pow(static_cast<double>(k), -decay_exponent);
}

void WaveConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "wave: " + m); };
  if (modes == 0) fail("modes must be positive");
  if (!(period > 0.0) || !std::isfinite(period)) fail("period must be positive");
  if (steps == 0) fail("steps must be positive");
  if (noise_modes == 0 || noise_modes > modes) fail("noise_modes must lie in [1, modes]");
  if (!std::isfinite(decay_exponent)) fail("decay exponent must be finite");
  if (!(budget > 0.0) || !std::isfinite(budget)) fail("budget must be positive");
  if (!(budget_fill > 0.0 && budget_fill <= 1.0)) fail("budget_fill must lie in (0, 1]");
  if (!std::isfinite(noise_scale)) fail("noise_scale must be finite");
  if (!(damping > 0.0) || !std::isfinite(damping)) fail("damping a0 must be positive");
  if (!constant_damping) {
    if (!(damping_start >= 0.0 && damping_start < kPi)) fail("damping interval must start in [0, pi)");
    if (!(damping_ramp >= 0.0) || damping_start - damping_ramp < -1e-12) fail("damping ramp must fit inside (0, pi)");
  }
  if (!(cubic >= 0.0) || !std::isfinite(cubic)) fail("cubic coefficient must be finite and >= 0");
  if (!(blowup_guard > 0.0)) fail("blowup guard must be positive");
  const double used = budget_used(), limit = budget_limit();
  if (used > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << std::setprecision(17) << "noise budget violated: sum b_jk lambda_j^(2/7) |alpha_k| = " << used
       << " > B0 sqrt(T) = " << limit;
    fail(os.str());
  }
}

WaveConfig WaveConfig::from_config(const Config& cfg) {
  WaveConfig c;
  const std::string s = "wave";
  c.modes = static_cast<std::size_t>(cfg.get_int_or(s, "modes", static_cast<long long>(c.modes)));
  c.period = cfg.get_double_or(s, "period", c.period);
  c.noise_modes = static_cast<std::size_t>(cfg.get_int_or(s, "noise_modes", static_cast<long long>(c.noise_modes)));
  c.decay_exponent = cfg.get_double_or(s, "decay_exponent", c.decay_exponent);
  c.budget = cfg.get_double_or(s, "budget", c.budget);
  c.budget_fill = cfg.get_double_or(s, "budget_fill", c.budget_fill);
  c.noise_scale = cfg.get_double_or(s, "noise_scale", c.noise_scale);
  c.damping = cfg.get_double_or(s, "damping", c.damping);
  c.damping_start = kPi * cfg.get_double_or(s, "damping_from", c.damping_start / kPi);
  c.damping_ramp = kPi * cfg.get_double_or(s, "damping_ramp", c.damping_ramp / kPi);
  const std::string profile = cfg.get_or(s, "profile", "localized");
  if (profile == "constant")
    c.constant_damping = true;
  else if (profile != "localized")
    throw Error(ErrorCode::ConfigError, "wave: profile must be localized or constant (line " +
                                            std::to_string(cfg.entry(s, "profile").line) + ")");
  c.cubic = cfg.get_double_or(s, "cubic", c.cubic);
  c.blowup_guard = cfg.get_double_or(s, "blowup_guard", c.blowup_guard);
  if (cfg.has(s, "steps") && cfg.has(s, "dt")) throw Error(ErrorCode::ConfigError, "wave: give steps or dt, not both");
  if (cfg.has(s, "dt")) {
    const double dt = cfg.get_double(s, "dt");
    if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "wave: dt must be positive");
    const double n = std::round(c.period / dt);
    if (n < 1.0 || divide_error(n, c.period, dt) > 1e-9) throw Error(ErrorCode::ConfigError, "wave: dt must divide the period");
    c.steps = static_cast<std::size_t>(n);
  } else {
    const long long n = cfg.get_int_or(s, "steps", static_cast<long long>(c.steps));
    if (n < 1) throw Error(ErrorCode::ConfigError, "wave: steps must be positive");
    c.steps = static_cast<std::size_t>(n);
  }
  c.validate();
  return c;
}

WaveState WaveState::zero(std::size_t modes) {
  const auto J = static_cast<Eigen::Index>(modes);
  return {Eigen::VectorXd::Zero(J), Eigen::VectorXd::Zero(J)};
}

double kick_density(double r) {
  if (r < -1.0 || r > 1.0) return 0.0;
  const double q = 1.0 - r * r;
  return 15.0 / 16.0 * q * q;
}

double kick_cdf(double r) {
  if (r <= -1.0) return 0.0;
  if (r >= 1.0) return 1.0;
  const double r2 = r * r;
  return 15.0 / 16.0 * r * (1.0 - r2 * (2.0 / 3.0 - r2 / 5.0)) + 0.5;
}

double kick_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must lie in [0, 1]");
  if (p == 0.0) return -1.0;
  if (p == 1.0) return 1.0;
  double lo = -1.0, hi = 1.0, r = 2.0 * p - 1.0;
  for (int it = 0; it < 200; ++it) {
    const double f = kick_cdf(r) - p;
    if (f > 0.0)
      hi = r;
    else
      lo = r;
    const double d = kick_density(r);
    double next = d > 0.0 ? r - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 1e-16 || hi - lo <= 1e-16) {
      r = next;
      break;
    }
    r = next;
  }
  return r;
}

double time_basis(std::size_t k, double t) {
  if (k <= 1) return 1.0;
  const double m = static_cast<double>(k / 2);
  return (k % 2 == 0) ? kSqrt2 * std::cos(2.0 * kPi * m * t) : kSqrt2 * std::sin(2.0 * kPi * m * t);
}

WaveModel::WaveModel(WaveConfig config) : config_(config) {
  config_.validate();
  const auto J = static_cast<Eigen::Index>(config_.modes);

  // A_jk by Gauss-Legendre panels aligned with the breakpoints of a(x).
  std::vector<double> pieces = {0.0};
  if (!config_.constant_damping) {
    const double r0 = config_.damping_start - config_.damping_ramp;
    if (r0 > 0.0) pieces.push_back(r0);
    if (config_.damping_start > pieces.back()) pieces.push_back(config_.damping_start);
  }
  pieces.push_back(kPi);
  std::vector<double> gx, gw;
  gauss_legendre(16, gx, gw);
  const int panels = std::max(64, static_cast<int>(4 * config_.modes));
  damping_ = Eigen::MatrixXd::Zero(J, J);
  Eigen::VectorXd basis(J);
  for (std::size_t p = 0; p + 1 < pieces.size(); ++p) {
    const double width = (pieces[p + 1] - pieces[p]) / panels;
    for (int q = 0; q < panels; ++q) {
      const double left = pieces[p] + q * width;
      for (std::size_t g = 0; g < gx.size(); ++g) {
        const double x = left + 0.5 * width * (gx[g] + 1.0);
        const double wt = 0.5 * width * gw[g] * config_.a(x);
        if (wt == 0.0) continue;
        for (Eigen::Index j = 0; j < J; ++j) basis[j] = std::sqrt(2.0 / kPi) * std::sin(static_cast<double>(j + 1) * x);
        damping_.noalias() += wt * basis * basis.transpose();
      }
    }
  }
  const auto N = static_cast<Eigen::Index>(config_.noise_modes);
  b_.resize(N, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index k = 0; k < N; ++k)
      b_(j, k) = config_.b(static_cast<std::size_t>(j + 1), static_cast<std::size_t>(k + 1));

  off_diagonal_ = damping_;
  off_diagonal_.diagonal().setZero();

  // Midpoint collocation on M = 4J points integrates cos(kx) exactly for
  // k < 2M, enough for u^3 e_j and u^4 with u in J modes.
  const Eigen::Index M = 4 * J;
  weight_ = kPi / static_cast<double>(M);
  grid_.resize(M, J);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double x = (static_cast<double>(m) + 0.5) * weight_;
    for (Eigen::Index j = 0; j < J; ++j) grid_(m, j) = std::sqrt(2.0 / kPi) * std::sin(static_cast<double>(j + 1) * x);
  }

  const double dt = config_.dt();
  puu_.resize(J);
  puv_.resize(J);
  pvu_.resize(J);
  pvv_.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double w0 = static_cast<double>(j + 1);
    const double alpha = 0.5 * damping_(j, j);
    const double disc = w0 * w0 - alpha * alpha;
    double c, s;  // s = sin(omega dt) / omega and its hyperbolic analogue
    if (disc > 0.0) {
      const double om = std::sqrt(disc);
      c = std::cos(om * dt);
      s = std::sin(om * dt) / om;
    } else if (disc < 0.0) {
      const double ka = std::sqrt(-disc);
      c = std::cosh(ka * dt);
      s = std::sinh(ka * dt) / ka;
    } else {
      c = 1.0;
      s = dt;
    }
    const double e = std::exp(-alpha * dt);
    puu_[j] = e * (c + alpha * s);
    puv_[j] = e * s;
    pvu_[j] = -e * w0 * w0 * s;
    pvv_[j] = e * (c - alpha * s);
  }
}

KickNoise WaveModel::sample_kick(CounterRng& rng) const {
  const auto N = static_cast<Eigen::Index>(config_.noise_modes);
  KickNoise k{Eigen::MatrixXd(N, N)};
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < N; ++i) {
      const double r = kick_quantile(rng.uniform());
      if (!(r >= -1.0 && r <= 1.0)) throw Error(ErrorCode::NonFiniteValue, "kick sample left [-1, 1]");
      k.theta(j, i) = r;
    }
  return k;
}

KickNoise WaveModel::sample_kick(std::uint64_t seed, std::uint64_t n) const {
  CounterRng rng(seed, 0, n);
  return sample_kick(rng);
}

Eigen::VectorXd WaveModel::cubic_term(const Eigen::VectorXd& u) const {
  if (config_.cubic == 0.0) return Eigen::VectorXd::Zero(u.size());
  const Eigen::VectorXd g = grid_ * u;
  return (config_.cubic * weight_) * (grid_.transpose() * g.array().cube().matrix());
}

Eigen::VectorXd WaveModel::forcing(const KickNoise& kick, double t) const {
  const auto J = static_cast<Eigen::Index>(config_.modes);
  const std::size_t N = config_.noise_modes;
  if (kick.theta.rows() != static_cast<Eigen::Index>(N) || kick.theta.cols() != static_cast<Eigen::Index>(N))
    throw Error(ErrorCode::InvalidArgument, "kick must be noise_modes x noise_modes");
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(J);
  const double tau = t / config_.period;
  std::vector<double> alpha(N + 1);
  for (std::size_t k = 1; k <= N; ++k) alpha[k] = time_basis(k, tau);
  for (std::size_t j = 1; j <= N; ++j) {
    double s = 0.0;
    for (std::size_t k = 1; k <= N; ++k) {
      const auto jj = static_cast<Eigen::Index>(j - 1), kk = static_cast<Eigen::Index>(k - 1);
      s += b_(jj, kk) * kick.theta(jj, kk) * alpha[k];
    }
    eta[static_cast<Eigen::Index>(j - 1)] = s;
  }
  return eta;
}

double WaveModel::quadratic_energy(const WaveState& s) const {
  double e = 0.0;
  for (Eigen::Index j = 0; j < s.u.size(); ++j) {
    const double l = static_cast<double>((j + 1) * (j + 1));
    e += l * s.u[j] * s.u[j] + s.v[j] * s.v[j];
  }
  return 0.5 * e;
}

double WaveModel::energy(const WaveState& s) const {
  if (s.u.size() != static_cast<Eigen::Index>(config_.modes) || s.v.size() != s.u.size())
    throw Error(ErrorCode::InvalidArgument, "state does not have the configured number of modes");
  const Eigen::VectorXd g = grid_ * s.u;
  const double quartic = weight_ * g.array().square().square().sum();
  return quadratic_energy(s) + 0.25 * config_.cubic * quartic;
}

double WaveModel::tail_fraction(const WaveState& w, std::size_t jcut) const {
  if (jcut >= config_.modes) throw Error(ErrorCode::ConfigError, "jcut must be below the number of modes");
  double tail = 0.0, total = 0.0;
  for (Eigen::Index j = 0; j < w.u.size(); ++j) {
    const double l = static_cast<double>((j + 1) * (j + 1));
    const double e = l * w.u[j] * w.u[j] + w.v[j] * w.v[j];
    total += e;
    if (static_cast<std::size_t>(j + 1) > jcut) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

WaveState WaveModel::state_with_energy(double e) const {
  if (!(e >= 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "energy must be finite and >= 0");
  WaveState s = WaveState::zero(config_.modes);
  const Eigen::Index n = std::min<Eigen::Index>(4, s.u.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    s.u[j] = 1.0 / static_cast<double>((j + 1) * (j + 1));
    s.v[j] = 1.0 / static_cast<double>(j + 1);
  }
  const double Q = quadratic_energy(s);
  const double P = energy(s) - Q;
  // Q x + P x^2 = e with x = scale^2.
  const double x = P > 0.0 ? (-Q + std::sqrt(Q * Q + 4.0 * P * e)) / (2.0 * P) : e / Q;
  const double sc = std::sqrt(x);
  s.u *= sc;
  s.v *= sc;
  return s;
}

void WaveModel::advance(WaveState& s, WaveState* w, const KickNoise& kick) const {
  if (s.u.size() != static_cast<Eigen::Index>(config_.modes) || s.v.size() != s.u.size())
    throw Error(ErrorCode::InvalidArgument, "state does not have the configured number of modes");
  const double guard = config_.blowup_guard;
  const auto check = [&](double t) {
    const double e = energy(s);
    if (!std::isfinite(e) || e > guard) {
      std::ostringstream os;
      os << std::setprecision(17) << "energy " << e << " exceeds guard " << guard << " at t = " << t;
      throw Error(ErrorCode::NumericalBlowup, os.str());
    }
  };
  check(0.0);
  const double dt = config_.dt();
  const double h = 0.5 * dt;
  const bool forced = kick.theta.size() > 0 && !kick.theta.isZero(0.0);
  const Eigen::Index J = s.u.size();
  Eigen::VectorXd eta0 = Eigen::VectorXd::Zero(J), eta1 = eta0, eta2 = eta0, eta3 = eta0;
  Eigen::VectorXd c = cubic_term(s.u);

  // v' = -A_off v - c + eta(t) with u frozen, by explicit midpoint.
  const auto half = [&](Eigen::VectorXd& v, const Eigen::VectorXd& ea, const Eigen::VectorXd& eb) {
    const Eigen::VectorXd vm = v + (0.5 * h) * (-off_diagonal_ * v - c + ea);
    v += h * (-off_diagonal_ * vm - c + eb);
  };
  const auto rotate = [&](WaveState& x) {
    const Eigen::ArrayXd u0 = x.u.array(), v0 = x.v.array();
    x.u = (puu_.array() * u0 + puv_.array() * v0).matrix();
    x.v = (pvu_.array() * u0 + pvv_.array() * v0).matrix();
  };

  for (std::size_t i = 0; i < config_.steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (forced) {
      eta0 = forcing(kick, t);
      eta1 = forcing(kick, t + 0.5 * h);
      eta2 = forcing(kick, t + h);
      eta3 = forcing(kick, t + 1.5 * h);
    }
    half(s.v, eta0, eta1);
    if (w) half(w->v, eta0, eta1);
    rotate(s);
    if (w) rotate(*w);
    c = cubic_term(s.u);
    half(s.v, eta2, eta3);
    if (w) half(w->v, eta2, eta3);
    if ((i + 1) % kGuardStride == 0 || i + 1 == config_.steps) check(t + dt);
  }
}

WaveState WaveModel::kick_map(const WaveState& state, const KickNoise& kick) const {
  WaveState s = state;
  advance(s, nullptr, kick);
  return s;
}

WaveState WaveModel::kick_map(const WaveState& state, WaveState& w, const KickNoise& kick) const {
  WaveState s = state;
  advance(s, &w, kick);
  return s;
}

State WaveModel::pack(const WaveState& u, const WaveState& w) const {
  const auto J = static_cast<std::size_t>(config_.modes);
  State x(4 * J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    x[j] = u.u[e];
    x[J + j] = u.v[e];
    x[2 * J + j] = w.u[e];
    x[3 * J + j] = w.v[e];
  }
  return x;
}

void WaveModel::unpack(const State& x, WaveState& u, WaveState& w) const {
  const auto J = static_cast<std::size_t>(config_.modes);
  if (x.size() != 4 * J && x.size() != 2 * J)
    throw Error(ErrorCode::InvalidArgument, "wave state must hold 2J or 4J coordinates");
  u = WaveState::zero(J);
  w = WaveState::zero(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    u.u[e] = x[j];
    u.v[e] = x[J + j];
    if (x.size() == 4 * J) {
      w.u[e] = x[2 * J + j];
      w.v[e] = x[3 * J + j];
    }
  }
}

RdsModel WaveModel::as_rds_model() const {
  RdsModel m;
  m.name = "wave";
  const std::size_t J = config_.modes;
  m.dimension = 4 * J;
  const WaveModel self = *this;
  m.step = [self](const State& x, const Kick& k) {
    WaveState u, w;
    self.unpack(x, u, w);
    const auto N = static_cast<Eigen::Index>(self.config().noise_modes);
    if (static_cast<Eigen::Index>(k.size()) != N * N) throw Error(ErrorCode::InvalidArgument, "kick has the wrong size");
    KickNoise kick{Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(k.data(), N, N)};
    const WaveState next = self.kick_map(u, w, kick);
    return self.pack(next, w);
  };
  m.sample_kick = [self](CounterRng& rng) {
    const KickNoise k = self.sample_kick(rng);
    Kick out;
    out.reserve(static_cast<std::size_t>(k.theta.size()));
    for (Eigen::Index j = 0; j < k.theta.rows(); ++j)
      for (Eigen::Index i = 0; i < k.theta.cols(); ++i) out.push_back(k.theta(j, i));
    return out;
  };
  const auto energy_norm = [J](const State& a, const State& b, std::size_t oa, std::size_t ob) {
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double du = a[oa + j] - b[ob + j], dv = a[oa + J + j] - b[ob + J + j];
      s += static_cast<double>((j + 1) * (j + 1)) * du * du + dv * dv;
    }
    return std::sqrt(s);
  };
  m.distance = [energy_norm](const State& a, const State& b) { return energy_norm(a, b, 0, 0); };
  m.dist_to_Y = [energy_norm, J](const State& x) {
    if (x.size() != 4 * J) return energy_norm(x, State(2 * J, 0.0), 0, 0);
    return energy_norm(x, x, 0, 2 * J);
  };
  m.designated_point = State(4 * J, 0.0);
  return m;
}

std::string DecayReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "initial_energy,n,energy\n";
  for (const auto& r : runs)
    for (std::size_t n = 0; n < r.energies.size(); ++n) os << r.initial_energy << ',' << n << ',' << r.energies[n] << '\n';
  return os.str();
}

DecayReport decay_experiment(const WaveModel& model, const std::vector<double>& initial_energies, bool kicks_on,
                             std::size_t horizon, std::uint64_t seed, double ball_radius) {
  if (horizon == 0) throw Error(ErrorCode::InvalidHorizon, "horizon must be at least 1");
  const std::size_t N = model.config().noise_modes;
  std::vector<KickNoise> kicks;
  for (std::size_t n = 0; n < horizon; ++n) kicks.push_back(kicks_on ? model.sample_kick(seed, n) : KickNoise::zero(N));
  const auto run = [&](WaveState s) {
    std::vector<double> e{model.energy(s)};
    for (std::size_t n = 0; n < horizon; ++n) {
      s = model.kick_map(s, kicks[n]);
      e.push_back(model.energy(s));
    }
    return e;
  };

  DecayReport rep;
  rep.kicks_on = kicks_on;
  if (kicks_on) {
    if (ball_radius <= 0.0) {
      const auto e0 = run(WaveState::zero(model.modes()));
      ball_radius = 2.0 * *std::max_element(e0.begin(), e0.end());
    }
    rep.ball_radius = ball_radius;
  }
  for (double e0 : initial_energies) {
    DecayRun r;
    r.initial_energy = e0;
    r.energies = run(model.state_with_energy(e0));
    if (kicks_on) {
      long long last_out = -1;
      for (std::size_t n = 0; n < r.energies.size(); ++n)
        if (r.energies[n] > ball_radius) last_out = static_cast<long long>(n);
      if (last_out + 1 < static_cast<long long>(r.energies.size())) {
        r.entry_time = last_out + 1;
        r.max_after_entry = *std::max_element(r.energies.begin() + r.entry_time, r.energies.end());
      }
    } else {
      std::vector<double> xs, ys;
      for (std::size_t n = 0; n < r.energies.size(); ++n)
        if (r.energies[n] > 1e-24 * r.energies[0]) {
          xs.push_back(static_cast<double>(n));
          ys.push_back(r.energies[n]);
        }
      const LogLinearFit f = fit_log_linear(xs, ys);
      r.rate = -f.slope;
      r.fit_r2 = f.r2;
    }
    rep.runs.push_back(r);
  }
  return rep;
}

std::vector<WaveRow> wave_simulate(const WaveModel& model, const WaveState& x0, std::size_t n, std::uint64_t seed,
                                   std::size_t jcut, std::size_t dump_modes) {
  dump_modes = std::min(dump_modes, model.modes());
  std::vector<WaveRow> rows;
  WaveState u = x0, w = WaveState::zero(model.modes());
  const auto record = [&](std::size_t k) {
    WaveRow r;
    r.step = k;
    r.energy = model.energy(u);
    r.tail_fraction = model.tail_fraction(w, jcut);
    for (std::size_t j = 0; j < dump_modes; ++j) r.first_modes.push_back(u.u[static_cast<Eigen::Index>(j)]);
    rows.push_back(r);
  };
  record(0);
  for (std::size_t k = 0; k < n; ++k) {
    u = model.kick_map(u, w, model.sample_kick(seed, k));
    record(k + 1);
  }
  return rows;
}

std::string wave_rows_csv(const std::vector<WaveRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "step,energy,tailFraction";
  const std::size_t m = rows.empty() ? 0 : rows.front().first_modes.size();
  for (std::size_t j = 1; j <= m; ++j) os << ",u" << j;
  os << '\n';
  for (const auto& r : rows) {
    os << r.step << ',' << r.energy << ',' << r.tail_fraction;
    for (double x : r.first_modes) os << ',' << x;
    os << '\n';
  }
  return os.str();
}

}  // namespace raredyn
