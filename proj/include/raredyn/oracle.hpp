#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raredyn/finite_engine.hpp"

namespace raredyn {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;  // > 0

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  // Decimal ("0.9", "-1.25"), integer or fraction ("9/10") text, stored exactly.
  static Rational parse(const std::string& text);
};

// Conjunction of linear constraints on the occupation frequencies c_x / n.
//
//   c1 >= 9/10
//   c0 + 2*c1 < 1/2 && c2 <= 0.25
//
// States are referred to by index (c0, c1, ...). Conjunctions use "&&" or
// ",". "all" (or an empty string) is the whole simplex. Membership is
// decided in exact integer arithmetic.
class OccupationEvent {
 public:
  struct Term {
    std::vector<Rational> coeffs;  // one per state
    Relation rel = Relation::GE;
    Rational rhs;
  };

  static OccupationEvent parse(const std::string& text, std::size_t num_states);
  static OccupationEvent whole(std::size_t num_states);

  bool contains(const std::vector<std::size_t>& counts) const;
  // True when every threshold is attainable exactly at horizon n, e.g.
  // n = 10, 20, ... for "c1 >= 0.9".
  bool aligned(std::size_t n) const;
  // Strict relations relaxed to non-strict (the closed version F).
  OccupationEvent closure() const;
  // Non-strict relations tightened to strict (the open version G);
  // equalities make the open version empty.
  OccupationEvent interior() const;
  // Same constraints on a probability vector sigma.
  std::vector<LinearConstraint> constraints() const;

  std::size_t num_states() const { return num_states_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t num_states_ = 0;
  std::vector<Term> terms_;
  std::string text_;
  bool empty_ = false;  // interior of an equality
};

// (1/n) log Q_n^V 1(x) per state.
enum class PathBackend { Auto, Enumerate, MatrixPower };
inline constexpr double kMaxEnumeratedPaths = 1e8;

std::vector<double> brute_force_pressure(const FiniteMarkovKernel& kernel, const Potential& V, std::size_t n,
                                         PathBackend backend = PathBackend::Auto);

inline constexpr std::size_t kMaxDpStates = 4;
inline constexpr std::size_t kMaxDpHorizon = 60;

// Joint law of (occupation counts of x_1..x_n, x_n) from x0.
struct OccupationCell {
  std::vector<std::size_t> counts;
  std::size_t current = 0;
  long double probability = 0.0L;
};
std::vector<OccupationCell> occupation_table(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n);

// P_x0(L_n in event), summed with compensation over the table.
long double occupation_dp(const FiniteMarkovKernel& kernel, std::size_t x0, std::size_t n,
                          const OccupationEvent& event);

// Least squares fit y ~ a + b/n.
struct AffineFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;         // coefficient of log(n)/n; 0 for the affine fit
  double residual = 0.0;  // max abs residual
};
AffineFit fit_inverse_n(const std::vector<double>& ns, const std::vector<double>& ys);
// y ~ a + b/n + c log(n)/n, the form of -(1/n) log P when P carries a
// polynomial prefactor n^-c. Falls back to the affine fit below 4 points.
AffineFit fit_inverse_n_log(const std::vector<double>& ns, const std::vector<double>& ys);

struct LdpRow {
  std::size_t n = 0;
  double probability = 0.0;
  double log_p_over_n = 0.0;  // (1/n) log P, -inf when P = 0
};

struct LdpReport {
  std::string event;
  std::size_t x0 = 0;
  std::vector<LdpRow> rows;
  // -(1/n) log P ~ a + b/n + c log(n)/n over rows with P > 0; a = +inf if
  // all vanish. affine_a is the plain a + b/n extrapolation, which is biased
  // by roughly c log(n)/n at desk-scale n.
  double fitted_a = 0.0;
  double fitted_b = 0.0;
  double fitted_c = 0.0;
  double affine_a = 0.0;
  std::size_t fit_rows = 0;  // rows used by the extrapolation
  double fit_residual = 0.0;
  RateValue inf_closed = RateValue::infinity();  // inf I over the closed event
  RateValue inf_open = RateValue::infinity();    // inf I over the open event
  double gap = 0.0;                              // fitted_a - inf_closed

  std::string to_csv() const;
  std::string to_json() const;
};

// Exact probabilities along nGrid, extrapolated decay rate, and inf I over
// the closed and open versions of the event. I is computed for the chain
// seen from x0: states not reachable in one or more steps carry no mass.
// The extrapolation uses the aligned horizons (see OccupationEvent::aligned)
// when there are at least 4 of them with P > 0, else all rows with P > 0.
LdpReport ldp_bound_report(const FiniteMarkovKernel& kernel, std::size_t x0, const OccupationEvent& event,
                           const std::vector<std::size_t>& n_grid);

struct LaplaceResult {
  std::vector<double> combined;          // (1/n) log sum_k a_{n,k}
  std::vector<double> individual_limits;
  double max_limit = 0.0;
  double combined_limit = 0.0;
  bool agrees = false;
};

// Inputs are sequences (1/n) log a_{n,k} on a common grid `ns`.
LaplaceResult laplace_max(const std::vector<double>& ns, const std::vector<std::vector<double>>& sequences,
                          double tolerance = 1e-2);

}  // namespace raredyn
