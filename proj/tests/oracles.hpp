#pragma once

// Reference computations for the tests. None of these go through the
// library's filtering code.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "cnld/network.hpp"
#include "cnld/types.hpp"

namespace cnld::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240917);
  return engine;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline GrayImage random_image(Index rows, Index cols) {
  GrayImage x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x(i) = uniform(0.0, 1.0);
  return x;
}

inline BankSet<double> random_banks(int levels) {
  BankSet<double> b;
  for (int l = 0; l < levels; ++l) b.emplace_back(uniform(-M_PI, M_PI), uniform(-M_PI, M_PI));
  return b;
}

/// Random coefficients with no magnitude below `floor`, so no entry sits near a PReLU kink.
inline CoeffStack<double> random_coeffs(int levels, Index rows, Index cols, double floor = 1e-3) {
  CoeffStack<double> y(levels, rows, cols);
  for (Index i = 0; i < y.size(); ++i) {
    double v;
    do {
      v = uniform(-1.0, 1.0);
    } while (std::abs(v) < floor);
    y.flat(i) = v;
  }
  return y;
}

inline CnldParams<double> random_params(int levels, double slope_lo = 0.3, double slope_hi = 2.0) {
  CnldParams<double> p;
  p.banks = random_banks(levels);
  for (int l = 0; l < levels; ++l) {
    LevelSlopes<double> s;
    for (int o = 0; o < kOrientations; ++o) s(o) = uniform(slope_lo, slope_hi);
    p.slopes.push_back(s);
  }
  return p;
}

/// Exact equality of shape and every pixel.
inline bool identical(const GrayImage& a, const GrayImage& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double central_difference(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

/// One level of the a trous Haar transform written as explicit pixel sums,
/// for h0 = (1, 1, 0, 0)/sqrt2, h1 = (0, 0, 1, -1)/sqrt2 and a 1/sqrt2 gain
/// per 1-D stage. Rows are filtered along j, columns along i.
struct HaarBands {
  GrayImage ll, lh, hl, hh;
};

inline HaarBands haar_level_oracle(const GrayImage& x, Index s) {
  const Index rows = x.rows(), cols = x.cols();
  auto at = [&](Index i, Index j) { return x(((i % rows) + rows) % rows, ((j % cols) + cols) % cols); };
  HaarBands b{GrayImage(rows, cols), GrayImage(rows, cols), GrayImage(rows, cols), GrayImage(rows, cols)};
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      b.ll(i, j) = 0.25 * (at(i, j) + at(i, j - s) + at(i - s, j) + at(i - s, j - s));
      b.lh(i, j) = 0.25 * (at(i - 2 * s, j) + at(i - 2 * s, j - s) - at(i - 3 * s, j) - at(i - 3 * s, j - s));
      b.hl(i, j) = 0.25 * (at(i, j - 2 * s) + at(i - s, j - 2 * s) - at(i, j - 3 * s) - at(i - s, j - 3 * s));
      b.hh(i, j) = 0.25 * (at(i - 2 * s, j - 2 * s) - at(i - 2 * s, j - 3 * s) - at(i - 3 * s, j - 2 * s) +
                           at(i - 3 * s, j - 3 * s));
    }
  }
  return b;
}

/// Full multi-level Haar analysis in the library's channel order.
inline CoeffStack<double> haar_oracle(const GrayImage& x, int levels) {
  CoeffStack<double> y(levels, x.rows(), x.cols());
  GrayImage approx = x;
  for (int l = 1; l <= levels; ++l) {
    HaarBands b = haar_level_oracle(approx, Index(1) << (l - 1));
    y.detail(l, Orientation::LH) = b.lh;
    y.detail(l, Orientation::HL) = b.hl;
    y.detail(l, Orientation::HH) = b.hh;
    approx = b.ll;
  }
  y.approximation() = approx;
  return y;
}

/// Dense analysis matrix of the Haar oracle; columns index pixels in row-major order.
inline Eigen::MatrixXd haar_analysis_matrix(Index rows, Index cols, int levels) {
  const Index n = rows * cols;
  const Index m = CoeffStack<double>::channel_count(levels) * n;
  Eigen::MatrixXd a(m, n);
  for (Index k = 0; k < n; ++k) {
    GrayImage e = GrayImage::Zero(rows, cols);
    e(k) = 1.0;
    const CoeffStack<double> y = haar_oracle(e, levels);
    for (Index r = 0; r < m; ++r) a(r, k) = y.flat(r);
  }
  return a;
}

/// Cyclic coordinate descent for 0.5 ||x - D y||^2 + lambda sum_i w_i |y_i|.
inline Eigen::VectorXd coordinate_descent_lasso(const Eigen::MatrixXd& d, const Eigen::VectorXd& x, double lambda,
                                                const Eigen::VectorXd& weights, int sweeps) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d.cols());
  Eigen::VectorXd r = x;
  const Eigen::VectorXd col_sq = d.colwise().squaredNorm();
  for (int s = 0; s < sweeps; ++s) {
    for (Index i = 0; i < d.cols(); ++i) {
      if (col_sq(i) == 0.0) continue;
      const double rho = d.col(i).dot(r) + col_sq(i) * y(i);
      const double t = lambda * weights(i);
      const double next = (rho > t ? rho - t : (rho < -t ? rho + t : 0.0)) / col_sq(i);
      r -= d.col(i) * (next - y(i));
      y(i) = next;
    }
  }
  return y;
}

/// Plain proximal gradient with a fixed step on the explicit matrix.
inline Eigen::VectorXd proximal_gradient_lasso(const Eigen::MatrixXd& d, const Eigen::VectorXd& x, double lambda,
                                               const Eigen::VectorXd& weights, double step, Eigen::VectorXd y,
                                               int iters) {
  for (int k = 0; k < iters; ++k) {
    const Eigen::VectorXd v = y - step * (d.transpose() * (d * y - x));
    for (Index i = 0; i < y.size(); ++i) {
      const double t = step * lambda * weights(i);
      y(i) = v(i) > t ? v(i) - t : (v(i) < -t ? v(i) + t : 0.0);
    }
  }
  return y;
}

inline double lasso_objective(const Eigen::MatrixXd& d, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              double lambda, const Eigen::VectorXd& weights) {
  return 0.5 * (x - d * y).squaredNorm() + lambda * weights.cwiseProduct(y.cwiseAbs()).sum();
}

inline Eigen::VectorXd flatten(const CoeffStack<double>& y) {
  Eigen::VectorXd v(y.size());
  for (Index i = 0; i < y.size(); ++i) v(i) = y.flat(i);
  return v;
}

inline CoeffStack<double> unflatten(const Eigen::VectorXd& v, int levels, Index rows, Index cols) {
  CoeffStack<double> y(levels, rows, cols);
  for (Index i = 0; i < y.size(); ++i) y.flat(i) = v(i);
  return y;
}

inline Eigen::VectorXd flatten(const GrayImage& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()); }

}  // namespace cnld::testing
