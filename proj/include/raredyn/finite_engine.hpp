#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "raredyn/core.hpp"

namespace raredyn {

// Value in [0, +inf] with an explicit infinity flag.
class RateValue {
 public:
  static RateValue finite(double v) { return RateValue(false, v); }
  static RateValue infinity() { return RateValue(true, 0.0); }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  // Throws InvalidArgument when infinite.
  double value() const;
  // +inf as a double, for plotting and comparisons.
  double as_double() const;

 private:
  RateValue(bool inf, double v) : infinite_(inf), value_(v) {}
  bool infinite_;
  double value_;
};

// ---------------------------------------------------------------------------
// Support-graph structure

struct CommunicatingClass {
  std::vector<std::size_t> states;  // sorted
  bool closed = false;              // no transition leaves the class
  bool trivial = false;             // single state without a self-loop
  int period = 1;                   // 0 for trivial classes
};

// Strongly connected components of the graph x -> y iff P(x,y) > 0, ordered
// by smallest member.
std::vector<CommunicatingClass> communicating_classes(const FiniteMarkovKernel& kernel);
// reach[x][y]: y reachable from x in zero or more steps.
std::vector<std::vector<bool>> reachability(const FiniteMarkovKernel& kernel);
// States visited with positive probability at some time k >= 1 from x0.
std::vector<std::size_t> reachable_after_one_step(const FiniteMarkovKernel& kernel, std::size_t x0);

// ---------------------------------------------------------------------------
// Tilted semigroup Q^V(x,y) = pi(x,y) e^{V(y)}

struct TiltedKernel {
  FiniteMarkovKernel base;
  Potential V;
  Eigen::MatrixXd matrix;

  TiltedKernel(FiniteMarkovKernel kernel, Potential potential);
};

// log (Q^V)^n f for a strictly positive f given as log f, in the log domain.
Eigen::VectorXd feynman_kac_log_apply(const TiltedKernel& tk, const Eigen::VectorXd& log_f, std::size_t n);
// (Q^V)^n f for signed f; positive and negative parts run separately in the
// log domain. n = 0 returns f.
Potential feynman_kac_apply(const TiltedKernel& tk, const Potential& f, std::size_t n);

// ---------------------------------------------------------------------------
// Pressure

struct ClassRate {
  std::vector<std::size_t> states;
  double log_radius = 0.0;  // log spectral radius of Q^V on the class
  bool closed = false;
  int period = 1;
};

struct PressureResult {
  double lambda = 0.0;                  // Lambda(V) = max over states
  std::vector<double> per_state_rates;  // lim (1/n) log Q_n^V 1(x)
  bool net_converges = true;            // all per-state rates equal (1e-10)
  std::vector<ClassRate> classes;       // non-trivial classes only
};

PressureResult pressure(const FiniteMarkovKernel& kernel, const Potential& V);

// Log of the spectral radius of a non-negative irreducible matrix: power
// iteration with Collatz-Wielandt stopping (1e-13 relative, 1e5 iterations),
// shifted for periodic matrices, dense eigensolve fallback.
double log_perron_root(const Eigen::MatrixXd& m, int period = 1);

// ---------------------------------------------------------------------------
// Perron triple

struct PerronTriple {
  double lambda = 1.0;      // lambda_V (may overflow for huge V; see log_lambda)
  double log_lambda = 0.0;
  Eigen::VectorXd h;        // right eigenfunction, min > 0
  Eigen::VectorXd mu;       // left eigenmeasure, probability
  int iterations = 0;
  bool dense_fallback = false;
};

// Requires an irreducible support graph (NotIrreducible lists the classes).
PerronTriple perron_triple(const TiltedKernel& tk);
// Perron triple of an irreducible non-negative matrix.
PerronTriple perron_triple_of_matrix(const Eigen::MatrixXd& m, int period = 1);

// ---------------------------------------------------------------------------
// Rate functions

struct RateResult {
  RateValue value = RateValue::finite(0.0);
  // Final ascent iterate u on the support of sigma (entries off the support
  // are pinned 60 below the support minimum). Empty when value is infinite.
  std::optional<Eigen::VectorXd> optimizer;
  std::string method = "dv-variational";
  int iterations = 0;
  double gradient_norm = 0.0;
};

// Objective u -> sum_x sigma(x) [u(x) - log (P e^u)(x)] and its gradient, on
// the full state space (states with P(x,.) e^u = 0 contribute +inf).
double dv_objective(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const Eigen::VectorXd& u);
Eigen::VectorXd dv_gradient(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const Eigen::VectorXd& u);

// I(sigma) = sup_u sum sigma [u - log P e^u], by damped-Newton ascent with
// Armijo backtracking on the support of sigma.
RateResult rate_dv(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma);

// Potential V = u - log(P e^u) for which <V,sigma> - Lambda(V) equals the
// DV objective at u.
Potential induced_potential(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& u);

using PotentialFamily = std::vector<Potential>;

// max over family (plus V = 0) of <V,sigma> - Lambda(V). A lower bound on I.
double rate_legendre(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma, const PotentialFamily& family);

// ---------------------------------------------------------------------------
// Minimizing I over polytopes of measures

enum class Relation { LE, LT, GE, GT, EQ };

// sum_x coeffs[x] sigma(x) (rel) rhs
struct LinearConstraint {
  std::vector<double> coeffs;
  Relation rel = Relation::GE;
  double rhs = 0.0;
};

struct MinRateResult {
  RateValue value = RateValue::infinity();
  Eigen::VectorXd sigma;  // minimizer (empty when the polytope is empty)
  bool feasible = false;
};

// inf { I(sigma) : sigma probability, constraints hold }. Uses the flow form
// I(sigma) = min over kernels Q with sigma Q = sigma of
// sum_x sigma(x) KL(Q(x,.) || P(x,.)), a convex program in the edge flows,
// solved by LP facial reduction plus a log-barrier Newton method. Strict
// relations are treated as their closures once strict feasibility is
// confirmed; otherwise the infimum is +inf.
MinRateResult min_rate_over_polytope(const FiniteMarkovKernel& kernel, const std::vector<LinearConstraint>& constraints);

// I(sigma) through the flow form (an independent route to rate_dv).
RateValue rate_flow(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& sigma);

// I^f(p) = inf { I(sigma) : <f, sigma> = p }; +inf outside [min f, max f].
RateValue level1_rate(const FiniteMarkovKernel& kernel, const Potential& f, double p);

// ---------------------------------------------------------------------------
// Equilibrium states and the class V

struct EquilibriumResult {
  std::vector<Eigen::VectorXd> states;  // sigma_V = h_V mu_V per maximizing class
  bool unique = true;
  double lambda = 0.0;
};

EquilibriumResult equilibrium_states(const FiniteMarkovKernel& kernel, const Potential& V);

struct MembershipResult {
  bool in_V = true;
  std::vector<std::string> reasons;
  PressureResult pressure;
  EquilibriumResult equilibrium;
};

MembershipResult membership_test(const FiniteMarkovKernel& kernel, const Potential& V);

// Lambda(V) against <V, sigma_V> - I(sigma_V). Lambda is taken as its
// Collatz-Wielandt upper bound and I from the flow form (a minimization), so
// both sides err toward a non-negative gap.
struct DualityCheck {
  double pressure = 0.0;
  double legendre = 0.0;
  double gap = 0.0;  // pressure - legendre; ulp-level negatives read as 0
  Eigen::VectorXd sigma;
};
// Requires a unique equilibrium state (NotIrreducible otherwise).
DualityCheck duality_check(const FiniteMarkovKernel& kernel, const Potential& V);

// || lambda_V^{-n} (Q^V)^n f - <f, mu_V> h_V ||_inf.
double feynman_kac_residual(const TiltedKernel& tk, const Potential& f, std::size_t n);

// ---------------------------------------------------------------------------
// Invariant measure, mixing rate, CLT variance

struct MixingResult {
  Eigen::VectorXd mu_star;
  double gamma = 0.0;          // -log |lambda_2|; +inf when lambda_2 = 0
  double second_modulus = 0.0;
};

// Requires exactly one closed class, aperiodic (NotMixing otherwise).
MixingResult invariant_and_mixing(const FiniteMarkovKernel& kernel);

// sigma_f^2 = <psi^2, mu> - <(P psi)^2, mu>, psi solving the Poisson equation
// psi - P psi = f - <f, mu> with <psi, mu> = 0.
double clt_variance(const FiniteMarkovKernel& kernel, const Potential& f);

}  // namespace raredyn
