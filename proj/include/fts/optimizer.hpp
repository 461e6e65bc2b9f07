#pragma once

#include <functional>

#include <Eigen/Core>

namespace fts {

// Returns f(x) and, when grad is non-null, writes the gradient. Returning a
// non-finite value marks x infeasible; the line search then backs off.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct LbfgsOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;     // on the projected gradient, infinity norm
  double rel_f_tol = 1e-10;   // stop after two consecutive tiny relative decreases
  int memory = 100;
  double initial_step = 0.1;  // largest coordinate move of the first step
  int max_backtracks = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double f_start = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Box-constrained limited-memory BFGS with Armijo backtracking on the
// projected path. Every accepted step strictly lowers f, so the result never
// exceeds the starting value.
LbfgsResult minimize_lbfgs(const ObjectiveFn& fn, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options = {});

}  // namespace fts
