#include "fts/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace fts {

namespace {

Eigen::VectorXd project_box(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components that push against an active bound removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& mem, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const Pair& last = mem.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += mem[i].s * (alpha[i] - beta);
  }
  return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& fn, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& options) {
  LbfgsResult res;
  Eigen::VectorXd x = project_box(std::move(x0), lower, upper);
  Eigen::VectorXd g(x.size());
  double f = fn(x, &g);
  res.evaluations = 1;
  res.f_start = f;
  res.x = x;
  res.f = f;
  if (!std::isfinite(f) || x.size() == 0) return res;

  std::deque<Pair> mem;
  int small_steps = 0;
  Eigen::VectorXd xn(x.size()), gn(x.size());

  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::VectorXd pg = projected_gradient(x, g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::VectorXd d = mem.empty() ? Eigen::VectorXd(-pg) : two_loop(mem, pg);
      for (Eigen::Index i = 0; i < d.size(); ++i)
        if (pg(i) == 0.0) d(i) = 0.0;
      if (pg.dot(d) >= 0.0) {
        mem.clear();
        d = -pg;
      }
      double step = mem.empty() ? options.initial_step / d.lpNorm<Eigen::Infinity>() : 1.0;
      for (int bt = 0; bt < options.max_backtracks; ++bt, step *= 0.5) {
        xn = project_box(x + step * d, lower, upper);
        const double decrease = g.dot(xn - x);
        if (decrease >= 0.0) continue;
        const double fn_val = fn(xn, &gn);
        ++res.evaluations;
        if (std::isfinite(fn_val) && fn_val < f && fn_val <= f + 1e-4 * decrease) {
          const Eigen::VectorXd s = xn - x;
          const Eigen::VectorXd y = gn - g;
          const double sy = s.dot(y);
          if (sy > 1e-12 * s.norm() * y.norm()) {
            mem.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(mem.size()) > options.memory) mem.pop_front();
          }
          const double rel = (f - fn_val) / std::max(1.0, std::abs(f));
          small_steps = rel < options.rel_f_tol ? small_steps + 1 : 0;
          x = xn;
          g = gn;
          f = fn_val;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (mem.empty()) break;
        mem.clear();
      }
    }
    res.iterations = it + 1;
    if (!accepted) {
      // No representable decrease along the steepest projected direction.
      res.converged = true;
      break;
    }
    if (small_steps >= 2) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.f = f;
  return res;
}

}  // namespace fts
