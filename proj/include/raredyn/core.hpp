#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raredyn/rng.hpp"

namespace raredyn {

// Points of the state space. Finite chains use a one-element vector holding
// the state index; vector models hold coordinates.
using State = std::vector<double>;
using Kick = std::vector<double>;
using Metric = std::function<double(const State&, const State&)>;

double euclidean_distance(const State& a, const State& b);

// Finite state space with a metric embedding and a row-stochastic matrix.
class FiniteMarkovKernel {
 public:
  FiniteMarkovKernel(std::vector<std::string> labels, std::vector<std::vector<double>> coords,
                     Eigen::MatrixXd matrix);
  // States labeled 0..n-1 embedded at coordinates 0..n-1 on the line.
  explicit FiniteMarkovKernel(Eigen::MatrixXd matrix);

  std::size_t size() const { return labels_.size(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double p(std::size_t x, std::size_t y) const { return matrix_(x, y); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::vector<double>>& coords() const { return coords_; }
  double distance(std::size_t x, std::size_t y) const;
  // Index of a label; throws InvalidArgument when absent.
  std::size_t index_of(const std::string& label) const;

  // Kernel restricted to a subset closed under the transitions. Throws
  // ConfigError when a row leaks mass outside the subset.
  FiniteMarkovKernel restricted(const std::vector<std::size_t>& subset) const;

  // Inverse-CDF row sampling over the fixed state ordering; a uniform that
  // lands exactly on a cumulative boundary goes to the lower index.
  std::size_t sample_next(std::size_t x, double uniform) const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> coords_;
  Eigen::MatrixXd matrix_;
  std::vector<std::vector<double>> cumulative_;
};

// The example chain on {0,1,2}: pi(0,0)=pi(2,1)=1, pi(1,0)=pi(1,1)=1/2.
FiniteMarkovKernel toy_chain();
// Every row equal to `law`.
FiniteMarkovKernel iid_chain(const std::vector<double>& law);

// Bounded function on the states of a finite space.
struct Potential {
  std::vector<double> values;
  std::optional<double> lipschitz;
  std::optional<double> oscillation;

  Potential() = default;
  explicit Potential(std::vector<double> v) : values(std::move(v)) {}
  static Potential constant(std::size_t n, double c) { return Potential(std::vector<double>(n, c)); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  Eigen::VectorXd vec() const { return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size()); }
  double osc() const;
  double lip(const FiniteMarkovKernel& kernel) const;
  // Fills lipschitz/oscillation with the exhaustively computed values.
  Potential& annotate(const FiniteMarkovKernel& kernel);
};

using StateFunction = std::function<double(const State&)>;

struct DiscreteMeasure {
  std::vector<State> atoms;
  std::vector<double> weights;

  double mass() const;
  // Throws InvalidMeasure unless weights are >= 0, sum to 1 within 1e-12,
  // and atoms are distinct.
  void validate_probability() const;
};

// Measure on the states of a finite kernel (weights indexed by state).
DiscreteMeasure to_measure(const FiniteMarkovKernel& kernel, const Eigen::VectorXd& weights);
Eigen::VectorXd dirac(std::size_t n, std::size_t x);

// Abstract kicked system x_k = S(x_{k-1}, xi_{k-1}).
struct RdsModel {
  std::string name;
  std::size_t dimension = 0;
  std::function<State(const State&, const Kick&)> step;
  std::function<Kick(CounterRng&)> sample_kick;
  Metric distance = euclidean_distance;
  std::function<double(const State&)> dist_to_Y;
  std::optional<State> designated_point;
  // Set when the model wraps a finite chain.
  std::optional<FiniteMarkovKernel> finite;
};

// Kick is one uniform variate; the step applies inverse-CDF row sampling.
RdsModel as_rds_model(const FiniteMarkovKernel& kernel);

struct Trajectory {
  State x0;
  std::vector<State> states;  // x_1 .. x_n
  std::uint64_t seed = 0;
  std::uint64_t trajectory_id = 0;
  std::vector<Kick> kicks;  // empty unless recorded

  std::size_t length() const { return states.size(); }
};

// Kicks for step k of trajectory `id` come from CounterRng(seed, id, k).
Trajectory simulate_trajectory(const RdsModel& model, const State& x0, std::size_t n,
                               std::uint64_t seed, std::uint64_t trajectory_id = 0,
                               bool record_kicks = false);

// L_{n,x} = (1/n) sum_{k=1}^n delta_{x_k}. The initial state x_0 is NOT
// included.
struct EmpiricalMeasure {
  DiscreteMeasure measure;
  std::vector<std::size_t> counts;  // parallel to measure.atoms
  std::size_t n = 0;
};

EmpiricalMeasure empirical_measure(const Trajectory& traj);
// Occupation counts of x_1..x_n for a finite-chain trajectory.
std::vector<std::size_t> occupation_counts(const Trajectory& traj, std::size_t num_states);

double integrate(const Potential& f, const Eigen::VectorXd& weights);
double integrate(const StateFunction& f, const DiscreteMeasure& m);

}  // namespace raredyn
