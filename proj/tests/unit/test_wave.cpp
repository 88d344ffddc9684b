#include "doctest.h"

#include <cmath>

#include "raredyn/config.hpp"
#include "raredyn/errors.hpp"
#include "raredyn/mc_engine.hpp"
#include "raredyn/wave_model.hpp"

using namespace raredyn;

namespace {

constexpr double kPi = 3.14159265358979323846;

WaveConfig small(std::size_t modes = 16, std::size_t steps = 1024) {
  WaveConfig c;
  c.modes = modes;
  c.steps = steps;
  return c;
}

double simpson(double (*f)(double), double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// RK4 on u'' + a u' + j^2 u = f(t) for one mode, as an independent oracle.
std::pair<double, double> damped_mode_rk4(double j, double a, double u, double v, double T,
                                          const std::function<double(double)>& f, int n = 200000) {
  const double h = T / n;
  auto rhs = [&](double t, double x, double y) { return std::make_pair(y, f(t) - a * y - j * j * x); };
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    const auto k1 = rhs(t, u, v);
    const auto k2 = rhs(t + h / 2, u + h / 2 * k1.first, v + h / 2 * k1.second);
    const auto k3 = rhs(t + h / 2, u + h / 2 * k2.first, v + h / 2 * k2.second);
    const auto k4 = rhs(t + h, u + h * k3.first, v + h * k3.second);
    u += h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    v += h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  return {u, v};
}

}  // namespace

TEST_CASE("wave config budget") {
  WaveConfig c;
  c.validate();
  CHECK(c.budget_used() == doctest::Approx(0.9 * c.budget_limit()).epsilon(1e-12));
  // Independent recomputation of the constraint.
  double s = 0.0;
  for (int j = 1; j <= 4; ++j)
    for (int k = 1; k <= 4; ++k) s += c.b(j, k) * std::pow(j, 4.0 / 7.0) * (k == 1 ? 1.0 : std::sqrt(2.0));
  CHECK(s == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(c.b(5, 1) == 0.0);
  CHECK(c.b(1, 1) > 0.0);

  c.noise_scale = 10.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.noise_scale = -1.0;
  c.budget_fill = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);

  const auto cfg = Config::parse("[wave]\nmodes = 8\nperiod = 4\ndt = 0.01\nprofile = constant\n");
  const auto wc = WaveConfig::from_config(cfg);
  CHECK(wc.steps == 400);
  CHECK(wc.constant_damping);
  CHECK_THROWS_AS(WaveConfig::from_config(Config::parse("[wave]\nperiod = 4\ndt = 0.3\n")), Error);
  CHECK_THROWS_AS(WaveConfig::from_config(Config::parse("[wave]\nnoise_scale = 5\n")), Error);
  CHECK_THROWS_AS(WaveConfig::from_config(Config::parse("[wave]\nprofile = bumpy\n")), Error);
}

TEST_CASE("damping profile") {
  WaveConfig c;
  for (double x = c.damping_start; x <= kPi; x += 0.01) CHECK(c.a(x) >= c.damping);
  CHECK(c.a(0.1) == 0.0);
  const double mid = c.damping_start - 0.5 * c.damping_ramp;
  CHECK(c.a(mid) == doctest::Approx(0.5 * c.damping));
  // Continuity across the ramp ends.
  CHECK(std::abs(c.a(c.damping_start - 1e-9) - c.damping) < 1e-6);
  CHECK(c.a(c.damping_start - c.damping_ramp + 1e-9) < 1e-6);
}

TEST_CASE("kick density and sampler") {
  CHECK(simpson(kick_density, -1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kick_density(0.0) == doctest::Approx(15.0 / 16.0));
  CHECK(kick_density(1.5) == 0.0);
  for (double r = -1.0; r <= 1.0; r += 0.125)
    CHECK(kick_cdf(r) == doctest::Approx(simpson(kick_density, -1.0, r)).epsilon(1e-10));
  for (double p = 0.0; p <= 1.0; p += 1.0 / 64) {
    const double r = kick_quantile(p);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(std::abs(kick_cdf(r) - p) < 1e-14);
  }

  const WaveModel m(small(8, 64));
  const std::size_t n = 1000000 / 16;
  double sum = 0.0, sum2 = 0.0;
  // Equal-width bins with probabilities from the density by quadrature.
  constexpr int bins = 20;
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const KickNoise k = m.sample_kick(5, i);
    for (Eigen::Index a = 0; a < k.theta.size(); ++a) {
      const double r = k.theta.data()[a];
      REQUIRE(r >= -1.0);
      REQUIRE(r <= 1.0);
      sum += r;
      sum2 += r * r;
      counts[std::min(bins - 1, static_cast<int>((r + 1.0) / 2.0 * bins))] += 1.0;
    }
  }
  const double N = static_cast<double>(n * 16);
  const double mean = sum / N;
  const double var = sum2 / N - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(var / N));
  CHECK(var == doctest::Approx(1.0 / 7.0).epsilon(0.01));
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = -1.0 + 2.0 * b / bins, hi = lo + 2.0 / bins;
    const double expected = N * simpson(kick_density, lo, hi, 200);
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
  }
  // Upper 1% point of chi-square with 19 degrees of freedom.
  CHECK(chi2 < 36.191);
}

TEST_CASE("wave energy") {
  const WaveModel m(small());
  WaveState s = WaveState::zero(16);
  CHECK(m.energy(s) == 0.0);
  s.u[0] = 1.0;
  CHECK(m.energy(s) == doctest::Approx(0.5 + 3.0 / (8.0 * kPi)).epsilon(1e-14));
  s = WaveState::zero(16);
  s.v[0] = 3.0;
  CHECK(m.energy(s) == doctest::Approx(4.5));
  // Quartic term against fine quadrature of the physical field.
  s = WaveState::zero(16);
  for (int j = 0; j < 16; ++j) s.u[j] = std::sin(1.0 + j) / (1 + j);
  const int n = 20000;
  double quartic = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * kPi / n;
    double u = 0.0;
    for (int j = 0; j < 16; ++j) u += s.u[j] * std::sqrt(2.0 / kPi) * std::sin((j + 1) * x);
    quartic += u * u * u * u * kPi / n;
  }
  CHECK(m.energy(s) - m.quadratic_energy(s) == doctest::Approx(0.25 * quartic).epsilon(1e-9));
  for (double e : {0.5, 1.0, 10.0, 100.0}) CHECK(m.energy(m.state_with_energy(e)) == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("cubic projection is exact") {
  const WaveModel m(small(8, 64));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(8);
  u[0] = 1.0;
  // sin^3 x = (3 sin x - sin 3x) / 4, so (e_1^3)_j = (2/pi) (3/4, 0, -1/4, 0...).
  const Eigen::VectorXd c = m.cubic_term(u);
  CHECK(c[0] == doctest::Approx(2.0 / kPi * 0.75).epsilon(1e-13));
  CHECK(std::abs(c[1]) < 1e-14);
  CHECK(c[2] == doctest::Approx(-2.0 / kPi * 0.25).epsilon(1e-13));
  for (int j = 3; j < 8; ++j) CHECK(std::abs(c[j]) < 1e-14);
}

TEST_CASE("kick map fixed point and linear oracle") {
  const WaveModel m(small());
  const WaveState z = WaveState::zero(16);
  const WaveState out = m.kick_map(z, KickNoise::zero(4));
  CHECK(out.u.isZero(0.0));
  CHECK(out.v.isZero(0.0));

  WaveConfig lc = small(16, 4000);  // dt = 1e-3
  lc.constant_damping = true;
  lc.cubic = 0.0;
  const WaveModel lin(lc);
  CHECK(lin.damping_matrix().isApprox(Eigen::MatrixXd::Identity(16, 16), 1e-12));
  WaveState x = WaveState::zero(16);
  for (int j = 0; j < 16; ++j) {
    x.u[j] = 1.0 / (j + 1);
    x.v[j] = 0.5 / (j + 1);
  }
  const WaveState y = lin.kick_map(x, KickNoise::zero(4));
  double err = 0.0, scale = 0.0;
  for (int j = 0; j < 16; ++j) {
    const auto [ue, ve] = damped_mode_rk4(j + 1, 1.0, x.u[j], x.v[j], 4.0, [](double) { return 0.0; }, 40000);
    err = std::max({err, std::abs(ue - y.u[j]), std::abs(ve - y.v[j])});
    scale = std::max({scale, std::abs(ue), std::abs(ve)});
  }
  CHECK(err / scale < 1e-6);

  // Forced linear regime: modes driven by a fixed kick.
  KickNoise k = lin.sample_kick(9, 0);
  const WaveState yf = lin.kick_map(x, k);
  err = 0.0;
  scale = 0.0;
  for (int j = 0; j < 16; ++j) {
    const auto f = [&](double t) { return lin.forcing(k, t)[j]; };
    const auto [ue, ve] = damped_mode_rk4(j + 1, 1.0, x.u[j], x.v[j], 4.0, f, 40000);
    err = std::max({err, std::abs(ue - yf.u[j]), std::abs(ve - yf.v[j])});
    scale = std::max({scale, std::abs(ue), std::abs(ve)});
  }
  CHECK(err / scale < 1e-6);
}

TEST_CASE("splitting is second order") {
  const WaveModel ref(small());
  const WaveState x = ref.state_with_energy(5.0);
  const KickNoise k = ref.sample_kick(3, 0);
  auto run = [&](std::size_t steps) { return WaveModel(small(16, steps)).kick_map(x, k); };
  const WaveState a = run(256), b = run(512), c = run(1024);
  auto diff = [](const WaveState& p, const WaveState& q) {
    return std::sqrt((p.u - q.u).squaredNorm() + (p.v - q.v).squaredNorm());
  };
  const double ratio = diff(a, b) / diff(b, c);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("unforced energy decays") {
  const WaveModel m(small(16, 1024));
  WaveState s = m.state_with_energy(10.0);
  double prev = m.energy(s);
  for (int n = 0; n < 8; ++n) {
    s = m.kick_map(s, KickNoise::zero(4));
    const double e = m.energy(s);
    CHECK(e < prev);
    prev = e;
  }
  const auto rep = decay_experiment(m, {1.0, 10.0}, false, 20, 1);
  for (const auto& r : rep.runs) {
    CHECK(r.fit_r2 >= 0.99);
    CHECK(r.rate > 0.0);
    for (std::size_t n = 1; n < r.energies.size(); ++n) CHECK(r.energies[n] <= r.energies[n - 1] + 1e-9);
  }
}

TEST_CASE("forced runs share an absorbing ball") {
  const WaveModel m(small(16, 1024));
  const auto rep = decay_experiment(m, {1.0, 10.0, 100.0}, true, 20, 7);
  CHECK(rep.ball_radius > 0.0);
  long long prev = -1;
  for (const auto& r : rep.runs) {
    REQUIRE(r.entry_time >= 0);
    CHECK(r.entry_time >= prev);
    CHECK(r.max_after_entry <= rep.ball_radius);
    prev = r.entry_time;
  }
  const auto zero = decay_experiment(m, {0.0}, true, 20, 7, rep.ball_radius);
  for (double e : zero.runs[0].energies) CHECK(e <= rep.ball_radius);
}

TEST_CASE("blowup guard") {
  WaveConfig c = small(8, 256);
  c.blowup_guard = 50.0;
  const WaveModel m(c);
  CHECK_THROWS_AS(m.kick_map(m.state_with_energy(60.0), KickNoise::zero(4)), Error);
  try {
    m.kick_map(m.state_with_energy(60.0), KickNoise::zero(4));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericalBlowup);
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
}

TEST_CASE("tail fraction of the forced component") {
  const WaveModel m(small(32, 1024));
  WaveState w = WaveState::zero(32);
  WaveState u = m.kick_map(WaveState::zero(32), w, KickNoise::zero(4));
  CHECK(m.tail_fraction(w, 4) == 0.0);
  CHECK_THROWS_AS(m.tail_fraction(w, 32), Error);

  const auto rows = wave_simulate(m, WaveState::zero(32), 12, 11, 8);
  for (std::size_t i = 3; i < rows.size(); ++i) CHECK(rows[i].tail_fraction < 1e-3);
  u = WaveState::zero(32);
  w = WaveState::zero(32);
  for (int n = 0; n < 6; ++n) u = m.kick_map(u, w, m.sample_kick(11, n));
  double prev = 1.0;
  for (std::size_t j = 0; j < 32; ++j) {
    const double f = m.tail_fraction(w, j);
    CHECK(f <= prev + 1e-15);
    prev = f;
  }
  // With zero initial data u and w coincide.
  CHECK((u.u - w.u).norm() < 1e-12);
}

TEST_CASE("wave as an rds model") {
  const WaveModel m(small(8, 256));
  const RdsModel rds = m.as_rds_model();
  CHECK(rds.dimension == 32);
  const State x0 = m.pack(m.state_with_energy(2.0), WaveState::zero(8));
  const Trajectory a = simulate_trajectory(rds, x0, 5, 3, 0);
  const Trajectory b = simulate_trajectory(rds, x0, 5, 3, 0);
  CHECK(a.states == b.states);
  // u - w decays like the damped linear flow.
  CHECK(rds.dist_to_Y(a.states.back()) < rds.dist_to_Y(x0));
  const auto rows = wave_simulate(m, m.state_with_energy(1.0), 3, 4, 2);
  const std::string csv = wave_rows_csv(rows);
  CHECK(csv.rfind("step,energy,tailFraction,u1,u2,u3,u4\n", 0) == 0);
}
