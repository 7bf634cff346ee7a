#pragma once

// Proximal sparse coding against the (non)linear dictionary phi_theta.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cnld/errors.hpp"
#include "cnld/network.hpp"
#include "cnld/types.hpp"

namespace cnld {

template <typename Scalar>
constexpr Scalar soft_threshold(Scalar v, Scalar t) {
  const Scalar m = (v < Scalar(0) ? -v : v) - t;
  if (m <= Scalar(0)) return Scalar(0);
  return v < Scalar(0) ? -m : m;
}

template <typename Scalar>
Plane<Scalar> soft_threshold(const Plane<Scalar>& v, Scalar t) {
  return v.sign() * (v.abs() - t).max(Scalar(0));
}

template <typename Scalar>
CoeffStack<Scalar> soft_threshold(CoeffStack<Scalar> y, Scalar t) {
  for (auto& p : y.planes()) p = soft_threshold(p, t);
  return y;
}

/// Keeps the K largest-magnitude coefficients. Ties resolve to the earlier
/// entry in channel-major, row-major order.
template <typename Scalar>
CoeffStack<Scalar> hard_threshold_topk(const CoeffStack<Scalar>& y, Index k) {
  const Index n = y.size();
  if (k >= n) return y;
  CoeffStack<Scalar> out(y.levels(), y.rows(), y.cols());
  if (k <= 0) return out;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(y.flat(a)) > std::abs(y.flat(b)); });
  for (Index i = 0; i < k; ++i) {
    const Index idx = order[static_cast<std::size_t>(i)];
    out.flat(idx) = y.flat(idx);
  }
  return out;
}

template <typename Scalar>
struct IstaConfig {
  Scalar lambda = Scalar(0.01);
  Scalar step = Scalar(1);
  int max_iters = 100;
  Scalar tol = Scalar(1e-6);
  bool backtracking = true;
  Scalar shrink = Scalar(0.5);
  /// Include the coarsest approximation plane in the l1 penalty.
  bool penalize_approximation = true;

  void validate() const {
    if (!(lambda >= Scalar(0))) throw std::invalid_argument("ISTA lambda must be >= 0");
    if (!(step > Scalar(0))) throw std::invalid_argument("ISTA step must be > 0");
    if (max_iters < 1) throw std::invalid_argument("ISTA needs at least one iteration");
    if (!(tol >= Scalar(0))) throw std::invalid_argument("ISTA tolerance must be >= 0");
    if (!(shrink > Scalar(0) && shrink < Scalar(1))) throw std::invalid_argument("backtracking factor must be in (0,1)");
  }
};

template <typename Scalar>
struct IstaResult {
  CoeffStack<Scalar> coeffs;
  std::vector<Scalar> objective;  ///< F(y_0), F(y_1), ...
  int iterations = 0;
  bool converged = false;
  Scalar step = Scalar(0);
};

namespace detail {

template <typename Scalar>
Scalar penalty(const CoeffStack<Scalar>& y, const IstaConfig<Scalar>& cfg) {
  Scalar l1 = y.l1_norm();
  if (!cfg.penalize_approximation) l1 -= y.approximation().abs().sum();
  return cfg.lambda * l1;
}

template <typename Scalar>
CoeffStack<Scalar> proximal_step(const CoeffStack<Scalar>& y, const CoeffStack<Scalar>& grad, Scalar step,
                                 const IstaConfig<Scalar>& cfg) {
  CoeffStack<Scalar> out = y;
  const Scalar t = step * cfg.lambda;
  for (int c = 0; c < out.channels(); ++c) {
    out.channel(c) -= step * grad.channel(c);
    if (c > 0 || cfg.penalize_approximation) out.channel(c) = soft_threshold(out.channel(c), t);
  }
  return out;
}

}  // namespace detail

/// Proximal gradient descent on F(y) = 0.5 ||x - phi(y)||^2 + lambda ||y||_1.
///
/// With backtracking the step shrinks until the quadratic upper bound
/// f(y+) <= f(y) + <g, y+ - y> + ||y+ - y||^2 / (2 step) holds, which makes
/// the objective trace non-increasing. The accepted step carries over to the
/// next iteration.
template <typename Scalar>
IstaResult<Scalar> ista(const Plane<Scalar>& x, const CnldParams<Scalar>& p, const IstaConfig<Scalar>& cfg,
                        const CoeffStack<Scalar>& y0) {
  cfg.validate();
  check_network_input(y0, p);
  if (x.rows() != y0.rows() || x.cols() != y0.cols()) throw DimensionError("image and coefficient shapes differ");

  IstaResult<Scalar> res;
  res.coeffs = y0;
  Scalar step = cfg.step;

  CnldTape<Scalar> tape;
  Plane<Scalar> residual = x - forward(res.coeffs, p, &tape);
  Scalar smooth = Scalar(0.5) * residual.square().sum();
  Scalar objective = smooth + detail::penalty(res.coeffs, cfg);
  if (!std::isfinite(objective)) throw DivergenceError("ISTA objective is not finite", 0);
  res.objective.push_back(objective);

  constexpr Scalar kMinStep = Scalar(1e-14);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const CoeffStack<Scalar> grad = backward(res.coeffs, p, residual, tape).coeffs;

    CnldTape<Scalar> next_tape;
    CoeffStack<Scalar> next;
    Plane<Scalar> next_residual;
    Scalar next_smooth = Scalar(0);
    bool accepted = false;
    while (true) {
      next = detail::proximal_step(res.coeffs, grad, step, cfg);
      next_residual = x - forward(next, p, &next_tape);
      next_smooth = Scalar(0.5) * next_residual.square().sum();
      if (!cfg.backtracking) {
        accepted = true;
        break;
      }
      const CoeffStack<Scalar> delta = next - res.coeffs;
      const Scalar bound = smooth + grad.dot(delta) + delta.squared_norm() / (Scalar(2) * step);
      if (next_smooth <= bound) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
      if (step < kMinStep) break;
    }

    if (!accepted) {
      // No step size achieves sufficient decrease; y is stationary to working precision.
      res.converged = true;
      break;
    }

    const Scalar next_objective = next_smooth + detail::penalty(next, cfg);
    if (!std::isfinite(next_objective)) throw DivergenceError("ISTA objective is not finite", it);

    res.coeffs = std::move(next);
    tape = std::move(next_tape);
    residual = std::move(next_residual);
    smooth = next_smooth;
    res.objective.push_back(next_objective);
    res.iterations = it;

    const Scalar change = std::abs(objective - next_objective);
    objective = next_objective;
    if (change <= cfg.tol * std::max(std::abs(next_objective), std::numeric_limits<Scalar>::min())) {
      res.converged = true;
      break;
    }
  }
  res.step = step;
  return res;
}

/// Iterative hard thresholding for the literal ||y||_0 <= K constraint.
/// The step shrinks until the data term does not increase.
template <typename Scalar>
IstaResult<Scalar> iht(const Plane<Scalar>& x, const CnldParams<Scalar>& p, Index k, const IstaConfig<Scalar>& cfg,
                       const CoeffStack<Scalar>& y0) {
  cfg.validate();
  check_network_input(y0, p);
  IstaResult<Scalar> res;
  res.coeffs = hard_threshold_topk(y0, k);
  Scalar step = cfg.step;

  CnldTape<Scalar> tape;
  Plane<Scalar> residual = x - forward(res.coeffs, p, &tape);
  Scalar smooth = Scalar(0.5) * residual.square().sum();
  if (!std::isfinite(smooth)) throw DivergenceError("IHT objective is not finite", 0);
  res.objective.push_back(smooth);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const CoeffStack<Scalar> grad = backward(res.coeffs, p, residual, tape).coeffs;
    CnldTape<Scalar> next_tape;
    CoeffStack<Scalar> next;
    Plane<Scalar> next_residual;
    Scalar next_smooth = Scalar(0);
    bool accepted = false;
    while (step >= Scalar(1e-14)) {
      CoeffStack<Scalar> moved = res.coeffs;
      for (int c = 0; c < moved.channels(); ++c) moved.channel(c) -= step * grad.channel(c);
      next = hard_threshold_topk(moved, k);
      next_residual = x - forward(next, p, &next_tape);
      next_smooth = Scalar(0.5) * next_residual.square().sum();
      if (!cfg.backtracking || next_smooth <= smooth) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    if (!std::isfinite(next_smooth)) throw DivergenceError("IHT objective is not finite", it);
    const Scalar change = std::abs(smooth - next_smooth);
    res.coeffs = std::move(next);
    tape = std::move(next_tape);
    residual = std::move(next_residual);
    smooth = next_smooth;
    res.objective.push_back(smooth);
    res.iterations = it;
    if (change <= cfg.tol * std::max(smooth, std::numeric_limits<Scalar>::min())) {
      res.converged = true;
      break;
    }
  }
  res.step = step;
  return res;
}

}  // namespace cnld
