#include "doctest.h"

#include <cmath>
#include <random>

#include "raredyn/errors.hpp"
#include "raredyn/oracle.hpp"

using namespace raredyn;

namespace {

const double kLog2 = std::log(2.0);

FiniteMarkovKernel random_chain(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> U(0.05, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = U(gen);
    m.row(i) /= m.row(i).sum();
  }
  return FiniteMarkovKernel(m);
}

double binom_tail(int n, int k0) {
  // P(Bin(n, 1/2) >= k0)
  double s = 0;
  for (int k = k0; k <= n; ++k) s += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) - n * kLog2);
  return s;
}

}  // namespace

TEST_CASE("rationals parse exactly") {
  auto r = Rational::parse("0.9");
  CHECK(r.num == 9);
  CHECK(r.den == 10);
  r = Rational::parse("-6/8");
  CHECK(r.num == -3);
  CHECK(r.den == 4);
  CHECK(Rational::parse("12").value() == 12.0);
  CHECK_THROWS_AS(Rational::parse("1/0"), Error);
  CHECK_THROWS_AS(Rational::parse("x"), Error);
}

TEST_CASE("event membership is exact on the boundary") {
  const auto ev = OccupationEvent::parse("c1 >= 9/10", 2);
  CHECK(ev.contains({1, 9}));
  CHECK_FALSE(ev.contains({2, 8}));
  const auto open = OccupationEvent::parse("c1 > 0.9", 2);
  CHECK_FALSE(open.contains({1, 9}));
  CHECK(open.contains({0, 10}));
  const auto combo = OccupationEvent::parse("c0 + 2*c1 <= 3/2 && c2 = 0", 3);
  CHECK(combo.contains({1, 1, 0}));
  CHECK_FALSE(combo.contains({0, 2, 0}));
  CHECK_FALSE(combo.contains({1, 0, 1}));
  CHECK(OccupationEvent::parse("all", 3).contains({4, 0, 0}));
  CHECK(OccupationEvent::parse("c0 = 1/3", 3).interior().constraints().size() == 1);
  CHECK_FALSE(OccupationEvent::parse("c0 = 1/3", 3).interior().contains({1, 1, 1}));
  CHECK_THROWS_AS(OccupationEvent::parse("c5 >= 0", 3), Error);
  CHECK_THROWS_AS(OccupationEvent::parse("c0 0.5", 3), Error);
}

TEST_CASE("brute-force pressure examples") {
  const auto toy = toy_chain();
  const auto z = brute_force_pressure(toy, Potential::constant(3, 0.0), 7);
  for (double v : z) CHECK(std::abs(v) < 1e-15);
  const auto one = brute_force_pressure(toy, Potential({0, kLog2, 0}), 1);
  CHECK(one[0] == doctest::Approx(0.0));
  CHECK(one[1] == doctest::Approx(std::log(1.5)));
  CHECK(one[2] == doctest::Approx(kLog2));
  CHECK_THROWS_AS(brute_force_pressure(toy, Potential::constant(3, 0.0), 0), Error);
}

TEST_CASE("enumeration and matrix-power backends agree") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int r = 0; r < 10; ++r) {
    const int m = 2 + r % 3;
    const auto k = random_chain(gen, m);
    std::vector<double> v(m);
    for (auto& x : v) x = U(gen);
    for (std::size_t n : {1, 3, 8}) {
      const auto a = brute_force_pressure(k, Potential(v), n, PathBackend::Enumerate);
      const auto b = brute_force_pressure(k, Potential(v), n, PathBackend::MatrixPower);
      for (int x = 0; x < m; ++x) CHECK(std::abs(a[x] - b[x]) < 1e-10);
    }
  }
}

TEST_CASE("brute-force pressure gap to the spectral rate decays like 1/n") {
  std::mt19937_64 gen(9);
  const auto k = random_chain(gen, 3);
  const Potential V({0.3, -0.5, 1.1});
  const double lam = pressure(k, V).lambda;
  double prev = 0;
  for (std::size_t n : {10, 20, 40}) {
    const auto b = brute_force_pressure(k, V, n);
    const double gap = std::abs(b[0] - lam);
    if (n > 10) CHECK(gap / prev == doctest::Approx(0.5).epsilon(0.05));
    prev = gap;
  }
}

TEST_CASE("occupation DP examples") {
  const auto toy = toy_chain();
  CHECK(occupation_dp(toy, 1, 10, OccupationEvent::parse("c1 = 1", 3)) == doctest::Approx(std::ldexp(1.0, -10)));
  CHECK(occupation_dp(toy, 0, 10, OccupationEvent::parse("c0 = 1", 3)) == doctest::Approx(1.0));
  CHECK(occupation_dp(toy, 2, 10, OccupationEvent::parse("c1 > 0", 3)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(occupation_dp(toy, 0, 61, OccupationEvent::whole(3)), Error);
  CHECK_THROWS_AS(occupation_dp(FiniteMarkovKernel(Eigen::MatrixXd::Identity(5, 5)), 0, 3, OccupationEvent::whole(5)),
                  Error);
  // i.i.d. fair coin: binomial tail
  const auto coin = iid_chain({0.5, 0.5});
  for (int n : {10, 27, 60}) {
    const int k0 = static_cast<int>(std::ceil(0.9 * n - 1e-9));
    CHECK(static_cast<double>(occupation_dp(coin, 0, n, OccupationEvent::parse("c1>=0.9", 2))) ==
          doctest::Approx(binom_tail(n, k0)).epsilon(1e-10));
  }
}

TEST_CASE("occupation DP total mass and marginals") {
  std::mt19937_64 gen(4);
  for (int r = 0; r < 6; ++r) {
    const int m = 2 + r % 3;
    const auto k = random_chain(gen, m);
    for (std::size_t n : {1, 5, 30}) {
      const auto table = occupation_table(k, 0, n);
      std::vector<long double> marg(m, 0.0L);
      long double total = 0.0L;
      for (const auto& c : table) {
        marg[c.current] += c.probability;
        total += c.probability;
      }
      CHECK(std::abs(static_cast<double>(total) - 1.0) < 1e-12);
      Eigen::MatrixXd pn = Eigen::MatrixXd::Identity(m, m);
      for (std::size_t i = 0; i < n; ++i) pn = pn * k.matrix();
      for (int y = 0; y < m; ++y) CHECK(std::abs(static_cast<double>(marg[y]) - pn(0, y)) < 1e-12);
      CHECK(std::abs(static_cast<double>(occupation_dp(k, 0, n, OccupationEvent::whole(m))) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("enlarging an event never decreases its probability") {
  std::mt19937_64 gen(6);
  const auto k = random_chain(gen, 3);
  double prev = 2.0;
  for (const char* thr : {"0.1", "0.2", "1/3", "0.5", "0.7", "0.95"}) {
    const double p = static_cast<double>(occupation_dp(k, 1, 30, OccupationEvent::parse(std::string("c2 >= ") + thr, 3)));
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("LDP report on the toy chain and the coin") {
  const auto toy = toy_chain();
  std::vector<std::size_t> grid;
  for (std::size_t n = 5; n <= 60; n += 5) grid.push_back(n);
  const auto rep = ldp_bound_report(toy, 1, OccupationEvent::parse("c1 >= 1", 3), grid);
  CHECK(rep.fitted_a == doctest::Approx(kLog2).epsilon(1e-10));
  CHECK(std::abs(rep.inf_closed.value() - kLog2) < 1e-8);
  CHECK(rep.inf_open.is_infinite());

  const auto all = ldp_bound_report(toy, 1, OccupationEvent::whole(3), grid);
  CHECK(std::abs(all.fitted_a) < 1e-12);
  CHECK(all.inf_closed.value() < 1e-10);

  const auto coin = iid_chain({0.5, 0.5});
  const auto r = ldp_bound_report(coin, 0, OccupationEvent::parse("c1 >= 0.9", 2), grid);
  const double kl = 0.1 * std::log(0.2) + 0.9 * std::log(1.8);
  CHECK(std::abs(r.inf_closed.value() - kl) < 1e-8);
  CHECK(std::abs(r.fitted_a - kl) < 0.02);
  CHECK(r.to_csv().rfind("n,logP_over_n,fitted_a,fitted_b,infI,gap\n", 0) == 0);
  CHECK(r.to_json().find("\"infI\"") != std::string::npos);
}

TEST_CASE("lattice alignment of event thresholds") {
  const auto e = OccupationEvent::parse("c1 >= 0.9", 2);
  CHECK(e.aligned(10));
  CHECK(e.aligned(60));
  CHECK_FALSE(e.aligned(5));
  CHECK_FALSE(e.aligned(15));
  CHECK_FALSE(OccupationEvent::parse("c0 + 2*c1 >= 1/2", 2).aligned(1));
  CHECK(OccupationEvent::parse("c0 + 2*c1 >= 1/2", 2).aligned(2));
  CHECK_FALSE(OccupationEvent::parse("2*c1 >= 1/2", 2).aligned(3));
  CHECK(OccupationEvent::parse("2*c1 >= 1/2", 2).aligned(4));
  CHECK(OccupationEvent::whole(3).aligned(7));

  // the extrapolation uses only aligned rows, so the spread grid gives the same a
  const auto coin = iid_chain({0.5, 0.5});
  std::vector<std::size_t> spread, tens;
  for (std::size_t n = 2; n <= 60; ++n) spread.push_back(n);
  for (std::size_t n = 10; n <= 60; n += 10) tens.push_back(n);
  const auto a = ldp_bound_report(coin, 0, e, spread), b = ldp_bound_report(coin, 0, e, tens);
  CHECK(a.fit_rows == 6);
  CHECK(a.fitted_a == doctest::Approx(b.fitted_a).epsilon(1e-12));
  CHECK(std::abs(a.fitted_a - a.inf_closed.value()) < 0.005);
}

TEST_CASE("LDP report respects reachability from x0") {
  // From the absorbing state 0 of the toy chain, mass on 1 is impossible.
  const auto rep = ldp_bound_report(toy_chain(), 0, OccupationEvent::parse("c1 >= 1/2", 3), {10, 20});
  CHECK(rep.inf_closed.is_infinite());
  CHECK(std::isinf(rep.fitted_a));
}

TEST_CASE("Laplace principle for sums") {
  std::vector<double> ns, a, b;
  for (int n = 5; n <= 60; n += 5) {
    ns.push_back(n);
    a.push_back(-kLog2);
    b.push_back(-std::log(3.0));
  }
  const auto r = laplace_max(ns, {a, b});
  CHECK(r.agrees);
  CHECK(std::abs(r.combined_limit + kLog2) < 1e-2);
  const auto single = laplace_max(ns, {a});
  for (std::size_t i = 0; i < ns.size(); ++i) CHECK(single.combined[i] == doctest::Approx(a[i]));
  const auto same = laplace_max(ns, {a, a});
  CHECK(same.combined_limit == doctest::Approx(-kLog2).epsilon(1e-10));
}
