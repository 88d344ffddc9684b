#pragma once

#include <optional>
#include <string>

#include "raredyn/config.hpp"
#include "raredyn/core.hpp"
#include "raredyn/coupling.hpp"
#include "raredyn/wave_model.hpp"

namespace raredyn {

// A model definition read from a config file. Exactly one of `chain`,
// `contraction`, `wave` is set.
//
//   [chain]                      [builtin]
//   states = a, b, c             name = toy | iid | contraction | wave
//   matrix = 1 0 0; 1/2 1/2 0; 0 1 0
//   coords = 0; 1; 2             law = 0.5, 0.5      (iid only)
//
// Sections [contraction], [wave] and [coupling] supply parameters.
struct LoadedModel {
  std::string kind;  // "chain", "contraction" or "wave"
  std::optional<FiniteMarkovKernel> chain;
  std::optional<ContractionToy> contraction;
  std::optional<WaveConfig> wave;
  CouplingSpec coupling;

  RdsModel rds() const;
  // Throws Unsupported unless the model is a finite chain.
  const FiniteMarkovKernel& kernel() const;
};

LoadedModel load_model(const Config& cfg);
FiniteMarkovKernel chain_from_config(const Config& cfg);

}  // namespace raredyn
