#pragma once

// Two-channel orthonormal CQF banks parameterized by lattice rotations.
//
// The polyphase matrix is R(z) = Q(t_n) L(z) ... Q(t_2) L(z) Q(t_1) with
// Q(t) = [cos t, -sin t; sin t, cos t] and L(z) = diag(z^-1, 1). Writing
// R(z) = sum_k R_k z^-k, the analysis taps of branch p are
// h_p[2k + m] = R_k(p, m), so n rotations give filters of length 2n.
//
// Branch labels: the lowpass h0 is polyphase row 1 and the highpass h1 is
// row 0. With angles (pi/4, 0) this yields the Haar pair
// h0 = (1, 1, 0, 0)/sqrt2, h1 = (0, 0, 1, -1)/sqrt2.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "cnld/errors.hpp"
#include "cnld/types.hpp"

namespace cnld {

/// Rotation angles of one 1-D bank, in radians, unwrapped.
template <typename Scalar>
struct LatticeAngles {
  Vector<Scalar> theta;

  LatticeAngles() : theta(Vector<Scalar>::Zero(2)) {}
  explicit LatticeAngles(Vector<Scalar> t) : theta(std::move(t)) {}
  LatticeAngles(Scalar t1, Scalar t2) : theta(2) { theta << t1, t2; }

  Index stages() const { return theta.size(); }
  Index filter_length() const { return 2 * theta.size(); }

  bool operator==(const LatticeAngles& o) const {
    return theta.size() == o.theta.size() && theta == o.theta;
  }
};

template <typename Scalar>
struct FilterPair {
  Vector<Scalar> h0;  ///< lowpass analysis taps
  Vector<Scalar> h1;  ///< highpass analysis taps

  FilterPair() = default;
  FilterPair(Vector<Scalar> low, Vector<Scalar> high) : h0(std::move(low)), h1(std::move(high)) {}

  static FilterPair Zero(Index length) {
    return {Vector<Scalar>::Zero(length), Vector<Scalar>::Zero(length)};
  }

  Index length() const { return h0.size(); }

  const Vector<Scalar>& branch(int p) const { return p == 0 ? h0 : h1; }
  Vector<Scalar>& branch(int p) { return p == 0 ? h0 : h1; }

  FilterPair& operator+=(const FilterPair& o) {
    h0 += o.h0;
    h1 += o.h1;
    return *this;
  }
};

namespace detail {

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

template <typename Scalar>
Mat2<Scalar> rotation(Scalar t) {
  using std::cos;
  using std::sin;
  Mat2<Scalar> q;
  q << cos(t), -sin(t), sin(t), cos(t);
  return q;
}

template <typename Scalar>
Mat2<Scalar> rotation_derivative(Scalar t) {
  using std::cos;
  using std::sin;
  Mat2<Scalar> q;
  q << -sin(t), -cos(t), cos(t), -sin(t);
  return q;
}

// Multiplies out the cascade. When `differentiate` is a valid stage index,
// that stage's rotation is replaced by its derivative.
template <typename Scalar>
FilterPair<Scalar> multiply_cascade(const LatticeAngles<Scalar>& angles, Index differentiate) {
  const Index n = angles.stages();
  if (n < 1) throw StructuralError("lattice needs at least one rotation angle");

  auto factor = [&](Index i) {
    return i == differentiate ? rotation_derivative(angles.theta(i)) : rotation(angles.theta(i));
  };

  // Polynomial coefficients in z^-1, lowest degree first.
  std::vector<Mat2<Scalar>> poly{factor(0)};
  for (Index i = 1; i < n; ++i) {
    const Mat2<Scalar> q = factor(i);
    std::vector<Mat2<Scalar>> next(poly.size() + 1, Mat2<Scalar>::Zero());
    for (std::size_t k = 0; k < poly.size(); ++k) {
      // L(z) keeps row 1 at degree k and delays row 0 to degree k+1.
      Mat2<Scalar> undelayed = Mat2<Scalar>::Zero();
      Mat2<Scalar> delayed = Mat2<Scalar>::Zero();
      undelayed.row(1) = poly[k].row(1);
      delayed.row(0) = poly[k].row(0);
      next[k] += q * undelayed;
      next[k + 1] += q * delayed;
    }
    poly = std::move(next);
  }

  FilterPair<Scalar> out = FilterPair<Scalar>::Zero(2 * n);
  for (Index k = 0; k < n; ++k) {
    for (Index m = 0; m < 2; ++m) {
      out.h0(2 * k + m) = poly[static_cast<std::size_t>(k)](1, m);
      out.h1(2 * k + m) = poly[static_cast<std::size_t>(k)](0, m);
    }
  }
  return out;
}

}  // namespace detail

/// Analysis impulse responses of the lattice bank.
template <typename Scalar>
FilterPair<Scalar> lattice_to_filters(const LatticeAngles<Scalar>& angles) {
  return detail::multiply_cascade(angles, Index(-1));
}

/// Tap derivatives, one FilterPair per angle: element i holds d(taps)/d(theta_i).
template <typename Scalar>
std::vector<FilterPair<Scalar>> filter_gradients(const LatticeAngles<Scalar>& angles) {
  if (angles.stages() < 1) throw StructuralError("lattice needs at least one rotation angle");
  std::vector<FilterPair<Scalar>> grads;
  grads.reserve(static_cast<std::size_t>(angles.stages()));
  for (Index i = 0; i < angles.stages(); ++i) grads.push_back(detail::multiply_cascade(angles, i));
  return grads;
}

/// Synthesis taps: the time reversal of each analysis branch.
template <typename Scalar>
FilterPair<Scalar> synthesis_filters(const FilterPair<Scalar>& fp) {
  return {fp.h0.reverse().eval(), fp.h1.reverse().eval()};
}

/// Chain rule from tap gradients to angle gradients.
template <typename Scalar>
Vector<Scalar> angle_gradient(const LatticeAngles<Scalar>& angles, const FilterPair<Scalar>& tap_grad) {
  const auto dtaps = filter_gradients(angles);
  Vector<Scalar> g(angles.stages());
  for (Index i = 0; i < angles.stages(); ++i) {
    const auto& d = dtaps[static_cast<std::size_t>(i)];
    g(i) = tap_grad.h0.dot(d.h0) + tap_grad.h1.dot(d.h1);
  }
  return g;
}

}  // namespace cnld
