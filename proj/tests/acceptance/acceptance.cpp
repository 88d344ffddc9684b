// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "raredyn/coupling.hpp"
#include "raredyn/errors.hpp"
#include "raredyn/finite_engine.hpp"
#include "raredyn/mc_engine.hpp"
#include "raredyn/measures.hpp"
#include "raredyn/oracle.hpp"
#include "raredyn/wave_model.hpp"

using namespace raredyn;

namespace {

const double kLog2 = std::log(2.0);
const unsigned kJobs = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

FiniteMarkovKernel random_irreducible(std::mt19937_64& gen, int n, bool sparse) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!sparse || U(gen) < 0.5) m(i, j) = 0.05 + U(gen);
  // a cycle keeps the support graph strongly connected, the self-loop aperiodic
  for (int i = 0; i < n; ++i) m(i, (i + 1) % n) += 0.05 + U(gen);
  m(0, 0) += 0.1;
  for (int i = 0; i < n; ++i) m.row(i) /= m.row(i).sum();
  return FiniteMarkovKernel(m);
}

Potential random_potential(std::mt19937_64& gen, int n, double osc) {
  std::uniform_real_distribution<double> U(0.0, osc);
  std::vector<double> v(n);
  for (auto& x : v) x = U(gen);
  return Potential(v);
}

Eigen::VectorXd random_simplex(std::mt19937_64& gen, int n) {
  std::exponential_distribution<double> E(1.0);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = E(gen) + 1e-3;
  return s / s.sum();
}

// DV objective sum_x sigma(x) [u(x) - log (P e^u)(x)] of the toy chain,
// maximized over a grid of u = (0, u1, .). With sigma(2) = 0 only u1 enters:
// row 0 contributes u0 - u0 and row 1 contributes u1 - log((1 + e^u1) / 2).
double toy_dv_grid(double t) {
  double best = 0.0;
  for (int a = -400; a <= 400; ++a) {
    const double u1 = 0.125 * a;
    best = std::max(best, (1.0 - t) * (u1 - std::log(0.5 + 0.5 * std::exp(u1))));
  }
  return best;
}

Outcome toy_exactness() {
  Outcome o;
  const auto toy = toy_chain();
  const auto mix = invariant_and_mixing(toy);
  o.require(mix.mu_star[0] == 1.0 && mix.mu_star[1] == 0.0 && mix.mu_star[2] == 0.0, "mu_* = delta_0");

  const auto ev = OccupationEvent::parse("c1>=1", 3);
  const long double p = occupation_dp(toy, 1, 10, ev);
  o.require(p == std::ldexp(1.0L, -10), "P(stay at 1, n = 10) = 2^-10");

  // Law of x_n: propagated exactly and estimated from simulated paths.
  const std::size_t N = 100000;
  const RdsModel model = as_rds_model(toy);
  double worst_exact = 0.0, worst_mc = 0.0;
  for (std::size_t x0 : {1u, 2u}) {
    std::vector<std::vector<double>> counts(21, std::vector<double>(3, 0.0));
    for (std::size_t i = 0; i < N; ++i) {
      const Trajectory tr = simulate_trajectory(model, {static_cast<double>(x0)}, 20, 3, i);
      for (std::size_t k = 0; k < 20; ++k) counts[k + 1][static_cast<std::size_t>(tr.states[k][0])] += 1.0;
    }
    Eigen::RowVectorXd law = dirac(3, x0).transpose();
    for (std::size_t n = 1; n <= 20; ++n) {
      law = law * toy.matrix();
      const double bound = std::ldexp(1.0, -static_cast<int>(n - 1));
      const double exact = dual_lipschitz(to_measure(toy, law.transpose()), to_measure(toy, dirac(3, 0))).distance;
      Eigen::VectorXd emp(3);
      for (int s = 0; s < 3; ++s) emp[s] = counts[n][s] / static_cast<double>(N);
      const double mc = dual_lipschitz(to_measure(toy, emp), to_measure(toy, dirac(3, 0))).distance;
      // sampling allowance: 4 SE of the mass off 0, times the distance per unit mass
      const double allowance = 4.0 * (2.0 / 3.0) * std::sqrt(bound / static_cast<double>(N));
      o.require(exact <= bound * (1 + 1e-12), "exact distance bound at n = " + std::to_string(n));
      o.require(mc <= bound + allowance, "simulated distance bound at n = " + std::to_string(n));
      worst_exact = std::max(worst_exact, exact / bound);
      worst_mc = std::max(worst_mc, mc / (bound + allowance));
    }
  }
  o.detail << "max exact/bound=" << worst_exact << " max mc/(bound+4SE)=" << worst_mc;
  return o;
}

Outcome dv_toy() {
  Outcome o;
  const auto toy = toy_chain();
  const double i0 = rate_dv(toy, Eigen::Vector3d(1, 0, 0)).value.value();
  const double i1 = rate_dv(toy, Eigen::Vector3d(0, 1, 0)).value.value();
  o.require(std::abs(i0) <= 1e-8, "I(delta_0) = 0");
  o.require(std::abs(i1 - kLog2) <= 1e-8, "I(delta_1) = log 2");
  double err_formula = 0.0, err_grid = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    const double v = rate_dv(toy, Eigen::Vector3d(t, 1 - t, 0)).value.value();
    err_formula = std::max(err_formula, std::abs(v - (1 - t) * kLog2));
    err_grid = std::max(err_grid, std::abs(v - toy_dv_grid(t)));
  }
  o.require(err_formula <= 1e-6, "(1-t) log 2 on the t-grid");
  o.require(err_grid <= 1e-6, "u-grid oracle");
  o.detail << "|I(d0)|=" << std::abs(i0) << " |I(d1)-log2|=" << std::abs(i1 - kLog2) << " max|I-(1-t)log2|="
           << err_formula << " max|I-grid|=" << err_grid
           << "; note: the value along t d0 + (1-t) d1 is (1-t) log 2, not t log 2";
  return o;
}

Outcome sanov() {
  Outcome o;
  std::mt19937_64 gen(31);
  double worst = 0.0;
  for (int r = 0; r < 100; ++r) {
    const int n = 2 + r % 3;
    const Eigen::VectorXd law = random_simplex(gen, n);
    const Eigen::VectorXd s = random_simplex(gen, n);
    const auto k = iid_chain(std::vector<double>(law.data(), law.data() + n));
    double kl = 0.0;
    for (int i = 0; i < n; ++i) kl += s[i] * std::log(s[i] / law[i]);
    worst = std::max(worst, std::abs(rate_dv(k, s).value.value() - kl));
  }
  o.require(worst <= 1e-8, "KL agreement");
  o.detail << "max|I-KL|=" << worst;
  return o;
}

Outcome duality() {
  Outcome o;
  std::mt19937_64 gen(41);
  double lo = 0.0, hi = 0.0;
  for (int r = 0; r < 100; ++r) {
    const auto k = random_irreducible(gen, 2 + r % 5, r % 2 == 1);
    const auto d = duality_check(k, random_potential(gen, static_cast<int>(k.size()), 1.0));
    lo = std::min(lo, d.gap);
    hi = std::max(hi, d.gap);
    o.require(d.gap >= 0.0 && d.gap <= 1e-6, "gap in [0, 1e-6] on instance " + std::to_string(r));
  }
  o.detail << "gap range [" << lo << ", " << hi << "]";
  return o;
}

Outcome feynman_kac() {
  Outcome o;
  std::mt19937_64 gen(51);
  double worst_res = 0.0, worst_eq = 0.0;
  for (int r = 0; r < 50; ++r) {
    // dense kernels: the residual decays like (|lambda_2| / lambda_1)^n, so
    // nearly periodic sparse kernels cannot reach 1e-8 at n = 500
    const int n = 2 + r % 5;
    const auto k = random_irreducible(gen, n, false);
    const Potential V = random_potential(gen, n, 2.0);
    const TiltedKernel tk(k, V);
    const Potential f = random_potential(gen, n, 3.0);
    worst_res = std::max(worst_res, feynman_kac_residual(tk, f, 500));

    const PerronTriple t = perron_triple(tk);
    Eigen::VectorXd sigma = t.h.cwiseProduct(t.mu);
    sigma /= sigma.sum();
    const double I = rate_dv(k, sigma).value.value();
    worst_eq = std::max(worst_eq, std::abs(t.log_lambda - (V.vec().dot(sigma) - I)));
  }
  o.require(worst_res < 1e-8, "residual at n = 500");
  o.require(worst_eq <= 1e-8, "Lambda = <V, sigma_V> - I(sigma_V)");
  o.detail << "max residual=" << worst_res << " max|Lambda-<V,s>+I|=" << worst_eq;
  return o;
}

Outcome ldp() {
  Outcome o;
  struct Case {
    FiniteMarkovKernel k;
    std::size_t x0;
    std::string event;
  };
  const std::vector<Case> cases = {
      {toy_chain(), 1, "c1>=1"},
      {toy_chain(), 1, "c1>=1/2"},
      {iid_chain({0.5, 0.5}), 0, "c1>=0.9"},
      {iid_chain({0.5, 0.5}), 0, "c1>=0.7"},
      {iid_chain({0.7, 0.2, 0.1}), 0, "c2>=0.4"},
  };
  std::vector<std::size_t> grid;
  for (std::size_t n = 5; n <= 60; n += 5) grid.push_back(n);
  for (const auto& c : cases) {
    const auto rep = ldp_bound_report(c.k, c.x0, OccupationEvent::parse(c.event, c.k.size()), grid);
    const double inf_i = rep.inf_closed.value();
    o.require(inf_i <= kLog2 + 1e-12, "inf I <= log 2 for " + c.event);
    o.require(std::abs(rep.fitted_a - inf_i) <= 0.02, "decay vs inf I for " + c.event);
    o.detail << c.event << ": |a-infI|=" << std::abs(rep.fitted_a - inf_i) << "; ";
  }
  return o;
}

Outcome membership() {
  Outcome o;
  const auto toy = toy_chain();
  const auto above = membership_test(toy, Potential({0.0, kLog2 + 0.05, 0.0}));
  bool mismatch = false;
  for (const auto& r : above.reasons) mismatch = mismatch || r.find("per-state") != std::string::npos;
  o.require(!above.in_V && mismatch, "V(1) - V(0) > log 2 rejected for per-state rates");
  const auto tie = membership_test(toy, Potential({0.0, kLog2, 0.0}));
  o.require(!tie.in_V, "tie rejected");

  std::mt19937_64 gen(61);
  int accepted = 0;
  for (int r = 0; r < 100; ++r) {
    const int n = 2 + r % 5;
    const auto k = random_irreducible(gen, n, r % 2 == 1);
    if (membership_test(k, random_potential(gen, n, 0.049)).in_V) ++accepted;
  }
  o.require(accepted == 100, "small-oscillation potentials accepted");
  o.detail << "accepted " << accepted << "/100 small-oscillation potentials";
  return o;
}

Outcome clt() {
  Outcome o;
  Eigen::Matrix2d m;
  m << 0.9, 0.1, 0.2, 0.8;
  const FiniteMarkovKernel k(m);
  const Potential f({0.0, 1.0});
  const double exact = clt_variance(k, f);
  o.require(std::abs(exact - 34.0 / 27.0) <= 1e-10, "sigma^2 = 34/27");
  const auto c = clt_check(k, f, 2000, 10000, 2024, kJobs);
  o.require(c.ks_pvalue > 0.01, "KS p > 0.01");
  o.require(std::abs(c.empirical_variance / exact - 1.0) <= 0.05, "variance within 5%");
  o.detail << "sigma^2=" << exact << " emp var=" << c.empirical_variance << " KS p=" << c.ks_pvalue;
  return o;
}

// V = theta on the target state, theta chosen so the tilted equilibrium puts
// mass `level` there.
Potential tilt_for(const FiniteMarkovKernel& k, std::size_t target, double level) {
  double lo = 0.0, hi = 20.0;
  const auto mass = [&](double th) {
    std::vector<double> v(k.size(), 0.0);
    v[target] = th;
    return equilibrium_states(k, Potential(v)).states.at(0)[static_cast<Eigen::Index>(target)];
  };
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < level ? lo : hi) = mid;
  }
  std::vector<double> v(k.size(), 0.0);
  v[target] = 0.5 * (lo + hi);
  return Potential(v);
}

Outcome tilted() {
  Outcome o;
  struct Case {
    FiniteMarkovKernel k;
    std::size_t x0, n, target;
    double level;
    std::string event;
  };
  Eigen::Matrix2d two;
  two << 0.9, 0.1, 0.2, 0.8;
  Eigen::Matrix3d three;
  three << 0.5, 0.3, 0.2, 0.3, 0.4, 0.3, 0.4, 0.4, 0.2;
  const std::vector<Case> cases = {
      {iid_chain({0.5, 0.5}), 0, 30, 1, 0.9, "c1>=0.9"},
      {iid_chain({0.6, 0.4}), 0, 30, 1, 0.85, "c1>=0.85"},
      {FiniteMarkovKernel(two), 0, 60, 1, 0.95, "c1>=0.95"},
      {FiniteMarkovKernel(three), 0, 30, 2, 0.7, "c2>=0.7"},
  };
  const std::size_t samples = 20000;
  int covered = 0, total = 0;
  double min_ratio = INFINITY, max_p = 0.0;
  for (const auto& c : cases) {
    const auto ev = OccupationEvent::parse(c.event, c.k.size());
    const double truth = static_cast<double>(occupation_dp(c.k, c.x0, c.n, ev));
    max_p = std::max(max_p, truth);
    o.require(truth <= 1e-5, "target probability <= 1e-5 for " + c.event);
    const Potential V = tilt_for(c.k, c.target, c.level);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto est = rare_event_tilted(c.k, V, c.x0, c.n, ev, samples, seed, kJobs);
      const auto naive = rare_event_naive(c.k, c.x0, c.n, ev, samples, seed, kJobs);
      ++total;
      if (std::abs(est.estimate - truth) <= 4.0 * est.standard_error) ++covered;
      // naive hits are mostly zero at this size, so compare with their mean too
      const double naive_hits = std::max(static_cast<double>(naive.hits), truth * samples);
      const double ratio = est.weights->ess / naive_hits;
      min_ratio = std::min(min_ratio, ratio);
      o.require(ratio >= 10.0, "ESS >= 10x naive hits");
    }
  }
  o.require(covered >= 19, "within 4 SE on >= 19/20");
  o.detail << covered << "/" << total << " within 4 SE, min ESS/naive hits=" << min_ratio << ", max p=" << max_p;
  return o;
}

Outcome contraction() {
  Outcome o;
  const double beta2 = 0.5;
  const auto toy = contraction_toy(0.5, 1.0, beta2, 1.0, 2);
  const RdsModel model = toy.model();
  const auto ac = ac_diagnostic(model, {1e6, 0.0}, 60, 3, 16, 1e-4, kJobs);
  const double target = std::log(1.0 / beta2);
  o.require(std::abs(ac.kappa_hat - target) <= 0.1 * target, "kappa within 10%");

  std::vector<std::pair<State, State>> pairs;
  for (double r : {0.1, 0.5, 1.0, 2.0, 5.0}) pairs.push_back({{0.0, 0.0}, {r, 0.0}});
  pairs.push_back({{1.0, 1.0}, {-1.0, 0.5}});
  const auto sq = squeezing_verify(model, CouplingSpec{beta2, 0.0}, pairs, 2000, 5, {}, kJobs);
  o.require(sq.all_pass, "squeezing with q = beta2, g = 0");

  const double eps = 0.5;
  const std::size_t N = toy.irreducibility_horizon(eps);
  const auto probe = irreducibility_probe(model, {toy.attainable_radius(), 0.0}, {0.0, 0.0}, eps, N, 20000, 7, kJobs);
  o.require(probe.probability > 0.0, "irreducibility probability > 0");
  o.detail << "kappa=" << ac.kappa_hat << " (log 1/beta2=" << target << ", " << ac.fit_points
           << " pts) squeeze margin=" << sq.worst_margin << " probe N=" << N << " p=" << probe.probability;
  return o;
}

// Classical RK4 on the full modal system with the forcing sampled at each stage.
WaveState wave_rk4(const WaveModel& m, WaveState s, const KickNoise& kick, std::size_t n) {
  const double T = m.config().period, h = T / static_cast<double>(n);
  const Eigen::MatrixXd& A = m.damping_matrix();
  const std::size_t J = m.modes();
  Eigen::VectorXd lam(J);
  for (std::size_t j = 0; j < J; ++j) lam[j] = static_cast<double>((j + 1) * (j + 1));
  const auto rhs = [&](double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    Eigen::VectorXd a = -lam.cwiseProduct(u) - A * v + m.forcing(kick, t);
    if (m.config().cubic != 0.0) a -= m.config().cubic * m.cubic_term(u);
    return std::make_pair(Eigen::VectorXd(v), a);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * h;
    const auto k1 = rhs(t, s.u, s.v);
    const auto k2 = rhs(t + h / 2, s.u + h / 2 * k1.first, s.v + h / 2 * k1.second);
    const auto k3 = rhs(t + h / 2, s.u + h / 2 * k2.first, s.v + h / 2 * k2.second);
    const auto k4 = rhs(t + h, s.u + h * k3.first, s.v + h * k3.second);
    s.u += h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    s.v += h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  return s;
}

Outcome wave() {
  Outcome o;
  WaveConfig cfg;  // J = 64
  const WaveModel m(cfg);

  const auto unforced = decay_experiment(m, {1.0, 10.0, 100.0}, false, 20, 1);
  double min_r2 = 1.0;
  for (const auto& r : unforced.runs) min_r2 = std::min(min_r2, r.fit_r2);
  o.require(min_r2 >= 0.99, "unforced decay R^2 >= 0.99");

  const auto forced = decay_experiment(m, {1.0, 10.0, 100.0}, true, 25, 7);
  long long last_entry = 0;
  for (const auto& r : forced.runs) {
    o.require(r.entry_time >= 0 && r.max_after_entry <= forced.ball_radius, "forced run enters and stays in the ball");
    last_entry = std::max(last_entry, r.entry_time);
  }

  const std::size_t jcut = 2 * cfg.noise_modes;
  const auto rows = wave_simulate(m, WaveState::zero(cfg.modes), 15, 11, jcut);
  double worst_tail = 0.0;
  for (std::size_t i = 3; i < rows.size(); ++i) worst_tail = std::max(worst_tail, rows[i].tail_fraction);
  o.require(worst_tail < 1e-3, "tail fraction < 1e-3");

  // Linear regime against RK4: a = const at dt = 1e-3, then the localized profile.
  double lin_err = 0.0;
  for (bool constant : {true, false}) {
    WaveConfig lc = cfg;
    lc.cubic = 0.0;
    lc.constant_damping = constant;
    if (constant) lc.steps = 4000;
    const WaveModel lin(lc);
    const WaveState x = lin.state_with_energy(5.0);
    const KickNoise kick = lin.sample_kick(9, 0);
    const WaveState y = lin.kick_map(x, kick);
    const WaveState ref = wave_rk4(lin, x, kick, 80000);
    const double err = std::sqrt((y.u - ref.u).squaredNorm() + (y.v - ref.v).squaredNorm()) /
                       std::sqrt(ref.u.squaredNorm() + ref.v.squaredNorm());
    lin_err = std::max(lin_err, err);
  }
  o.require(lin_err <= 1e-6, "linear-regime oracle");

  // Richardson ratio of the nonlinear map under step halving.
  const WaveState x5 = m.state_with_energy(5.0);
  const KickNoise k5 = m.sample_kick(3, 0);
  const auto run = [&](std::size_t steps) {
    WaveConfig c = cfg;
    c.steps = steps;
    return WaveModel(c).kick_map(x5, k5);
  };
  const WaveState a = run(1024), b = run(2048), c = run(4096);
  const auto diff = [](const WaveState& p, const WaveState& q) {
    return std::sqrt((p.u - q.u).squaredNorm() + (p.v - q.v).squaredNorm());
  };
  const double ratio = diff(a, b) / diff(b, c);
  o.require(ratio >= 3.5 && ratio <= 4.5, "Richardson ratio in [3.5, 4.5]");

  o.detail << "min R^2=" << min_r2 << " ball=" << forced.ball_radius << " last entry=" << last_entry
           << " max tail=" << worst_tail << " linear rel err=" << lin_err << " ratio=" << ratio;
  return o;
}

Outcome dual_lipschitz_check() {
  Outcome o;
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> logd(std::log(1e-3), std::log(1e3));
  double worst = 0.0;
  for (int r = 0; r < 50; ++r) {
    const std::size_t dim = 1 + r % 3;
    State x(dim), dir(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = 10 * U(gen);
      dir[i] = U(gen);
    }
    double norm = 0.0;
    for (double v : dir) norm += v * v;
    norm = std::sqrt(norm);
    const double d = std::exp(logd(gen));
    State y = x;
    for (std::size_t i = 0; i < dim; ++i) y[i] += d * dir[i] / norm;
    const double dd = euclidean_distance(x, y);
    const double got = dual_lipschitz({{x}, {1.0}}, {{y}, {1.0}}).distance;
    worst = std::max(worst, std::abs(got - 2 * dd / (dd + 2)));
  }
  o.require(worst <= 1e-9, "2d/(d+2)");

  // Axioms on random measures over shared atoms.
  double worst_triangle = 0.0;
  for (int r = 0; r < 50; ++r) {
    const int n = 3 + r % 4;
    std::vector<State> atoms(n);
    for (auto& a : atoms) a = {3 * U(gen), 3 * U(gen)};
    const auto measure = [&] {
      const Eigen::VectorXd w = random_simplex(gen, n);
      return DiscreteMeasure{atoms, std::vector<double>(w.data(), w.data() + n)};
    };
    const auto mu = measure(), nu = measure(), rho = measure();
    const double mn = dual_lipschitz(mu, nu).distance, nm = dual_lipschitz(nu, mu).distance;
    const double mr = dual_lipschitz(mu, rho).distance, rn = dual_lipschitz(rho, nu).distance;
    o.require(dual_lipschitz(mu, mu).distance <= 1e-12, "identity");
    o.require(std::abs(mn - nm) <= 1e-12, "symmetry");
    o.require(mn > 0.0, "positivity");
    o.require(mn <= mr + rn + 1e-12, "triangle inequality");
    // |f| <= 1 bounds the distance by the L1 norm, twice the total variation
    o.require(mn <= 2.0 * total_variation(mu, nu) + 1e-12, "bounded by the L1 norm");
    worst_triangle = std::max(worst_triangle, mn - mr - rn);
  }
  o.detail << "max|dist-2d/(d+2)|=" << worst << " max triangle excess=" << worst_triangle;
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "toy chain exactness", 5, toy_exactness},
      {2, "rate function on the toy chain", 10, dv_toy},
      {3, "Sanov oracle", 10, sanov},
      {4, "pressure / rate duality", 60, duality},
      {5, "Feynman-Kac asymptotics", 60, feynman_kac},
      {6, "LDP bound verification", 120, ldp},
      {7, "potential class membership", 30, membership},
      {8, "central limit theorem", 120, clt},
      {9, "tilted rare-event estimator", 120, tilted},
      {10, "contraction toy diagnostics", 60, contraction},
      {11, "wave surrogate properties", 600, wave},
      {12, "dual-Lipschitz LP", 10, dual_lipschitz_check},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) o.require(false, "runtime over " + std::to_string(c.budget_seconds) + " s");
    if (!o.pass) ++failed;
    std::printf("%s [%d] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
