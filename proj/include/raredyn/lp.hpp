#pragma once

#include <Eigen/Dense>

namespace raredyn::lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;     // primal solution
  Eigen::VectorXd dual;  // multipliers y with A^T y <= c, optimal b^T y = c^T x
  int iterations = 0;
};

// Dense two-phase tableau simplex for
//     minimize c^T x  subject to  A x = b,  x >= 0.
// Entering variable by most negative reduced cost (lowest index on ties),
// leaving variable by minimum ratio (lowest basis index on ties); switches
// to Bland's rule after a run of degenerate pivots. Fully deterministic.
Result solve_standard_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                           int max_iterations = 200000);

// maximize c^T x subject to G x <= h, E x = e, with x free. Converted to
// standard form by splitting x = x+ - x- and adding slacks.
Result maximize_free(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                     const Eigen::MatrixXd& E, const Eigen::VectorXd& e);

}  // namespace raredyn::lp
