#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "raredyn/core.hpp"

namespace raredyn {

// Squeezing data (q, g) with g(r) = slope * r.
struct CouplingSpec {
  double q = 0.5;
  double g_slope = 0.0;

  double g(double r) const { return g_slope * r; }
  // -limsup (1/k) log g(q^k); +inf when g vanishes or q = 0.
  double delta1() const;
  void validate() const;
};

// Total-variation-optimal coupling of two laws on finite supports.
class MaximalCoupling {
 public:
  MaximalCoupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

  // One pair; consumes three uniforms from rng.
  std::pair<State, State> sample(CounterRng& rng) const;
  // Pair i uses the stream (seed, i, 0).
  std::vector<std::pair<State, State>> sample_many(std::size_t count, std::uint64_t seed) const;
  double mismatch_probability() const { return tv_; }

 private:
  std::vector<State> atoms_;
  std::vector<double> overlap_, excess_mu_, excess_nu_;  // normalized
  double tv_ = 0.0;
};

MaximalCoupling maximal_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// One coupled step (R, R') from (x, x').
using CoupledStep = std::function<std::pair<State, State>(const State&, const State&, CounterRng&)>;

// Both copies receive the same kick.
CoupledStep identical_kick_step(const RdsModel& model);
// Next states of a finite chain drawn from the maximal coupling of the rows.
CoupledStep finite_maximal_step(const FiniteMarkovKernel& kernel);
// max_{x != y} TV(P(x,.), P(y,.)) / d(x,y).
double tv_lipschitz_modulus(const FiniteMarkovKernel& kernel);

struct SqueezingRow {
  double dx = 0.0;
  double q_dx = 0.0;
  double p_hat = 0.0;
  double se = 0.0;
  double g_dx = 0.0;
  bool pass = true;
};

struct SqueezingReport {
  std::vector<SqueezingRow> rows;
  bool all_pass = true;
  double worst_margin = 0.0;  // min over rows of g + 3 se - p_hat

  std::string to_csv() const;
};

// Estimates P(d(R, R') > q d(x, x')) for every pair; pass when it is at
// most g(d(x, x')) + 3 SE. Sample i of pair j uses the stream (seed, i, j).
// Distances within 1e-12 relative of q d(x, x') count as not exceeding it.
SqueezingReport squeezing_verify(const RdsModel& model, const CouplingSpec& spec,
                                 const std::vector<std::pair<State, State>>& pairs, std::size_t samples,
                                 std::uint64_t seed, const CoupledStep& step = {}, unsigned jobs = 1);

// S(u, zeta) = beta2 u + C1 zeta on R^m with zeta uniform in the Euclidean
// ball of radius kick_bound (zero kicks when kick_bound = 0).
struct ContractionToy {
  double beta1 = 0.5;
  double c1 = 1.0;
  double beta2 = 0.5;
  double kick_bound = 1.0;
  std::size_t dim = 2;

  void validate() const;
  // Fixed point of r -> beta2 r + C1 kick_bound.
  double attainable_radius() const;
  // Smallest N >= 0 with beta2^N * 2 * radius <= eps.
  std::size_t irreducibility_horizon(double eps) const;
  RdsModel model() const;
};

ContractionToy contraction_toy(double beta1, double c1, double beta2, double kick_bound, std::size_t dim = 2);

}  // namespace raredyn
