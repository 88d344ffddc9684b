#pragma once

#include <vector>

#include "raredyn/core.hpp"

namespace raredyn {

struct DualLipschitzResult {
  double distance = 0.0;
  std::vector<State> atoms;     // union support
  std::vector<double> witness;  // optimal f on `atoms`
  double sup_budget = 0.0;      // s = ||f||_inf bound; Lip(f) <= 1 - s
};

// Largest number of distinct atoms accepted by dual_lipschitz.
inline constexpr std::size_t kMaxDualLipschitzAtoms = 64;

// ||mu - nu||_L^* = sup { <f, mu - nu> : ||f||_inf + Lip(f) <= 1 } over finite
// supports, solved as a single LP in (f, s) with |f| <= s and Lipschitz bound
// 1 - s. Identical atoms are merged first; distinct atoms at zero distance
// raise MetricDegenerate.
DualLipschitzResult dual_lipschitz(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const Metric& d = euclidean_distance);

double total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
double total_variation(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);

// McShane extension of f given on `subset` (indices into the kernel's
// states) to all states, clamped to [min f, max f]. Keeps Lip and range.
Potential mcshane_extend(const std::vector<std::size_t>& subset, const std::vector<double>& f,
                         const FiniteMarkovKernel& space);

}  // namespace raredyn
