#include "doctest_fts.hpp"

#include <cmath>

#include "fts/optimizer.hpp"

using namespace fts;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  double f = 0.0;
  if (g) g->setZero(x.size());
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = 1.0 - x(i), b = x(i + 1) - x(i) * x(i);
    f += a * a + 100.0 * b * b;
    if (g) {
      (*g)(i) += -2.0 * a - 400.0 * x(i) * b;
      (*g)(i + 1) += 200.0 * b;
    }
  }
  return f;
}

Eigen::VectorXd unbounded(int n, double v) { return Eigen::VectorXd::Constant(n, v); }

}  // namespace

TEST_CASE("minimizes Rosenbrock") {
  LbfgsOptions o;
  o.max_iters = 2000;
  o.grad_tol = 1e-9;
  const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(6, -1.2), unbounded(6, -1e9),
                                unbounded(6, 1e9), o);
  CHECK(r.converged);
  CHECK((r.x - Eigen::VectorXd::Ones(6)).norm() < 1e-5);
  CHECK(r.f <= r.f_start);
}

TEST_CASE("respects box constraints") {
  ObjectiveFn quad = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd target = Eigen::Vector2d(3.0, -3.0);
    if (g) *g = 2.0 * (x - target);
    return (x - target).squaredNorm();
  };
  const auto r = minimize_lbfgs(quad, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(-1.0, -1.0),
                                Eigen::Vector2d(1.0, 1.0));
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(-1.0));
  CHECK(r.converged);
}

TEST_CASE("never ends above the start and stays feasible") {
  int calls = 0;
  ObjectiveFn wall = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    ++calls;
    if (x(0) < 0.5) return std::numeric_limits<double>::infinity();
    if (g) *g = Eigen::VectorXd::Constant(1, 2.0 * x(0));
    return x(0) * x(0);
  };
  const auto r = minimize_lbfgs(wall, Eigen::VectorXd::Constant(1, 2.0), unbounded(1, -10.0), unbounded(1, 10.0));
  CHECK(r.f <= r.f_start);
  CHECK(r.x(0) >= 0.5);
  CHECK(r.evaluations == calls);
}

TEST_CASE("an already optimal start is kept") {
  const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Ones(3), unbounded(3, -5.0), unbounded(3, 5.0));
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.f == 0.0);
}

TEST_CASE("infeasible start returns immediately") {
  ObjectiveFn bad = [](const Eigen::VectorXd&, Eigen::VectorXd*) { return std::nan(""); };
  const auto r = minimize_lbfgs(bad, Eigen::VectorXd::Zero(2), unbounded(2, -1.0), unbounded(2, 1.0));
  CHECK_FALSE(r.converged);
  CHECK(r.evaluations == 1);
}
