#pragma once

// Separable undecimated (a trous) multi-level transform built from lattice
// CQF banks. Level l filters with taps upsampled by 2^(l-1), every 1-D stage
// is scaled by 1/sqrt2 and boundaries are periodic, so the analysis operator
// A is a Parseval tight frame and synthesis is exactly A^T.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "cnld/errors.hpp"
#include "cnld/lattice.hpp"
#include "cnld/types.hpp"

namespace cnld {

/// One lattice bank per level, level 1 first. Rows and columns share a bank.
template <typename Scalar>
using BankSet = std::vector<LatticeAngles<Scalar>>;

enum class Axis { Horizontal, Vertical };

namespace detail {

inline Index wrap(Index shift, Index n) {
  shift %= n;
  return shift < 0 ? shift + n : shift;
}

// out[n] += coef * x[n - shift] along `axis`, periodic.
template <typename Scalar>
void accumulate_shifted(Plane<Scalar>& out, const Plane<Scalar>& x, Scalar coef, Index shift, Axis axis) {
  if (axis == Axis::Horizontal) {
    const Index n = x.cols();
    const Index s = wrap(shift, n);
    out.rightCols(n - s) += coef * x.leftCols(n - s);
    if (s > 0) out.leftCols(s) += coef * x.rightCols(s);
  } else {
    const Index n = x.rows();
    const Index s = wrap(shift, n);
    out.bottomRows(n - s) += coef * x.topRows(n - s);
    if (s > 0) out.topRows(s) += coef * x.bottomRows(s);
  }
}

// sum_n a[n] * b[n - shift] along `axis`, periodic.
template <typename Scalar>
Scalar shifted_inner(const Plane<Scalar>& a, const Plane<Scalar>& b, Index shift, Axis axis) {
  if (axis == Axis::Horizontal) {
    const Index n = a.cols();
    const Index s = wrap(shift, n);
    Scalar acc = (a.rightCols(n - s) * b.leftCols(n - s)).sum();
    if (s > 0) acc += (a.leftCols(s) * b.rightCols(s)).sum();
    return acc;
  }
  const Index n = a.rows();
  const Index s = wrap(shift, n);
  Scalar acc = (a.bottomRows(n - s) * b.topRows(n - s)).sum();
  if (s > 0) acc += (a.topRows(s) * b.bottomRows(s)).sum();
  return acc;
}

template <typename Scalar>
Scalar stage_gain() {
  using std::sqrt;
  return Scalar(1) / sqrt(Scalar(2));
}

}  // namespace detail

/// out[n] = sum_k taps[k] x[n - k*stride] / sqrt2 along `axis`.
template <typename Scalar>
Plane<Scalar> filter_analysis(const Plane<Scalar>& x, const Vector<Scalar>& taps, Index stride, Axis axis) {
  Plane<Scalar> out = Plane<Scalar>::Zero(x.rows(), x.cols());
  const Scalar g = detail::stage_gain<Scalar>();
  for (Index k = 0; k < taps.size(); ++k) {
    if (taps(k) != Scalar(0)) detail::accumulate_shifted(out, x, g * taps(k), k * stride, axis);
  }
  return out;
}

/// Adjoint of filter_analysis: out[m] = sum_k taps[k] u[m + k*stride] / sqrt2.
template <typename Scalar>
Plane<Scalar> filter_synthesis(const Plane<Scalar>& u, const Vector<Scalar>& taps, Index stride, Axis axis) {
  Plane<Scalar> out = Plane<Scalar>::Zero(u.rows(), u.cols());
  const Scalar g = detail::stage_gain<Scalar>();
  for (Index k = 0; k < taps.size(); ++k) {
    if (taps(k) != Scalar(0)) detail::accumulate_shifted(out, u, g * taps(k), -k * stride, axis);
  }
  return out;
}

/// Gradient of <upstream, filter_analysis(x, taps)> with respect to taps.
/// Since synthesis is the adjoint, the tap gradient of <g, filter_synthesis(u, taps)>
/// is analysis_tap_gradient(u, g).
template <typename Scalar>
Vector<Scalar> analysis_tap_gradient(const Plane<Scalar>& upstream, const Plane<Scalar>& x, Index length,
                                     Index stride, Axis axis) {
  Vector<Scalar> g(length);
  const Scalar gain = detail::stage_gain<Scalar>();
  for (Index k = 0; k < length; ++k) g(k) = gain * detail::shifted_inner(upstream, x, k * stride, axis);
  return g;
}

/// The four bands of one level.
template <typename Scalar>
struct LevelBands {
  Plane<Scalar> ll, lh, hl, hh;

  Plane<Scalar>& detail(Orientation o) {
    return o == Orientation::LH ? lh : (o == Orientation::HL ? hl : hh);
  }
  const Plane<Scalar>& detail(Orientation o) const {
    return o == Orientation::LH ? lh : (o == Orientation::HL ? hl : hh);
  }
};

/// Rows first, then columns.
template <typename Scalar>
struct LevelAnalysisCache {
  Plane<Scalar> input;
  Plane<Scalar> row_low, row_high;
};

/// Column adjoint outputs feeding the row adjoint.
template <typename Scalar>
struct LevelSynthesisCache {
  Plane<Scalar> col_low, col_high;
};

template <typename Scalar>
struct LevelAnalysisGradient {
  Plane<Scalar> input;
  FilterPair<Scalar> taps;
};

template <typename Scalar>
struct LevelSynthesisGradient {
  LevelBands<Scalar> bands;
  FilterPair<Scalar> taps;
};

inline Index level_stride(int level) { return Index(1) << (level - 1); }

template <typename Scalar>
LevelBands<Scalar> analyze_level(const Plane<Scalar>& a, const FilterPair<Scalar>& f, Index stride,
                                 LevelAnalysisCache<Scalar>* cache = nullptr) {
  Plane<Scalar> low = filter_analysis(a, f.h0, stride, Axis::Horizontal);
  Plane<Scalar> high = filter_analysis(a, f.h1, stride, Axis::Horizontal);
  LevelBands<Scalar> b{filter_analysis(low, f.h0, stride, Axis::Vertical),
                       filter_analysis(low, f.h1, stride, Axis::Vertical),
                       filter_analysis(high, f.h0, stride, Axis::Vertical),
                       filter_analysis(high, f.h1, stride, Axis::Vertical)};
  if (cache) *cache = {a, std::move(low), std::move(high)};
  return b;
}

template <typename Scalar>
Plane<Scalar> synthesize_level(const LevelBands<Scalar>& b, const FilterPair<Scalar>& f, Index stride,
                               LevelSynthesisCache<Scalar>* cache = nullptr) {
  Plane<Scalar> low = filter_synthesis(b.ll, f.h0, stride, Axis::Vertical) +
                      filter_synthesis(b.lh, f.h1, stride, Axis::Vertical);
  Plane<Scalar> high = filter_synthesis(b.hl, f.h0, stride, Axis::Vertical) +
                       filter_synthesis(b.hh, f.h1, stride, Axis::Vertical);
  Plane<Scalar> out = filter_synthesis(low, f.h0, stride, Axis::Horizontal) +
                      filter_synthesis(high, f.h1, stride, Axis::Horizontal);
  if (cache) *cache = {std::move(low), std::move(high)};
  return out;
}

/// VJP of analyze_level given upstream gradients of the four bands.
template <typename Scalar>
LevelAnalysisGradient<Scalar> analyze_level_vjp(const LevelBands<Scalar>& upstream, const FilterPair<Scalar>& f,
                                                Index stride, const LevelAnalysisCache<Scalar>& cache) {
  const Index n = f.length();
  LevelAnalysisGradient<Scalar> g;
  g.taps = FilterPair<Scalar>::Zero(n);
  g.taps.h0 += analysis_tap_gradient(upstream.ll, cache.row_low, n, stride, Axis::Vertical) +
               analysis_tap_gradient(upstream.hl, cache.row_high, n, stride, Axis::Vertical);
  g.taps.h1 += analysis_tap_gradient(upstream.lh, cache.row_low, n, stride, Axis::Vertical) +
               analysis_tap_gradient(upstream.hh, cache.row_high, n, stride, Axis::Vertical);
  const Plane<Scalar> g_low = filter_synthesis(upstream.ll, f.h0, stride, Axis::Vertical) +
                              filter_synthesis(upstream.lh, f.h1, stride, Axis::Vertical);
  const Plane<Scalar> g_high = filter_synthesis(upstream.hl, f.h0, stride, Axis::Vertical) +
                               filter_synthesis(upstream.hh, f.h1, stride, Axis::Vertical);
  g.taps.h0 += analysis_tap_gradient(g_low, cache.input, n, stride, Axis::Horizontal);
  g.taps.h1 += analysis_tap_gradient(g_high, cache.input, n, stride, Axis::Horizontal);
  g.input = filter_synthesis(g_low, f.h0, stride, Axis::Horizontal) +
            filter_synthesis(g_high, f.h1, stride, Axis::Horizontal);
  return g;
}

/// VJP of synthesize_level given the upstream gradient of its output.
template <typename Scalar>
LevelSynthesisGradient<Scalar> synthesize_level_vjp(const Plane<Scalar>& upstream, const LevelBands<Scalar>& input,
                                                    const FilterPair<Scalar>& f, Index stride,
                                                    const LevelSynthesisCache<Scalar>& cache) {
  const Index n = f.length();
  LevelSynthesisGradient<Scalar> g;
  g.taps = FilterPair<Scalar>::Zero(n);
  g.taps.h0 += analysis_tap_gradient(cache.col_low, upstream, n, stride, Axis::Horizontal);
  g.taps.h1 += analysis_tap_gradient(cache.col_high, upstream, n, stride, Axis::Horizontal);
  const Plane<Scalar> g_low = filter_analysis(upstream, f.h0, stride, Axis::Horizontal);
  const Plane<Scalar> g_high = filter_analysis(upstream, f.h1, stride, Axis::Horizontal);
  g.taps.h0 += analysis_tap_gradient(input.ll, g_low, n, stride, Axis::Vertical) +
               analysis_tap_gradient(input.hl, g_high, n, stride, Axis::Vertical);
  g.taps.h1 += analysis_tap_gradient(input.lh, g_low, n, stride, Axis::Vertical) +
               analysis_tap_gradient(input.hh, g_high, n, stride, Axis::Vertical);
  g.bands = {filter_analysis(g_low, f.h0, stride, Axis::Vertical), filter_analysis(g_low, f.h1, stride, Axis::Vertical),
             filter_analysis(g_high, f.h0, stride, Axis::Vertical),
             filter_analysis(g_high, f.h1, stride, Axis::Vertical)};
  return g;
}

template <typename Scalar>
void check_transform_shape(Index rows, Index cols, int levels) {
  if (levels < 1) throw StructuralError("transform needs at least one level");
  const Index min_size = Index(1) << levels;
  if (rows < min_size || cols < min_size) {
    throw DimensionError("image " + std::to_string(rows) + "x" + std::to_string(cols) + " is smaller than 2^" +
                         std::to_string(levels) + " required by a " + std::to_string(levels) + "-level transform");
  }
}

template <typename Scalar>
std::vector<FilterPair<Scalar>> bank_filters(const BankSet<Scalar>& banks) {
  std::vector<FilterPair<Scalar>> f;
  f.reserve(banks.size());
  for (const auto& b : banks) f.push_back(lattice_to_filters(b));
  return f;
}

/// Per-level intermediates recorded by analyze() for analyze_vjp().
template <typename Scalar>
struct AnalysisTape {
  BankSet<Scalar> banks;
  std::vector<LevelAnalysisCache<Scalar>> levels;
  bool empty() const { return levels.empty(); }
};

/// Per-level inputs and intermediates recorded by synthesize() for synthesize_vjp().
template <typename Scalar>
struct SynthesisTape {
  BankSet<Scalar> banks;
  std::vector<LevelBands<Scalar>> inputs;
  std::vector<LevelSynthesisCache<Scalar>> caches;
  bool empty() const { return caches.empty(); }
};

template <typename Scalar>
CoeffStack<Scalar> analyze(const Plane<Scalar>& x, const BankSet<Scalar>& banks, AnalysisTape<Scalar>* tape = nullptr) {
  const int levels = static_cast<int>(banks.size());
  check_transform_shape<Scalar>(x.rows(), x.cols(), levels);
  const auto filters = bank_filters(banks);
  CoeffStack<Scalar> y(levels, x.rows(), x.cols());
  if (tape) {
    tape->banks = banks;
    tape->levels.assign(static_cast<std::size_t>(levels), {});
  }
  Plane<Scalar> approx = x;
  for (int l = 1; l <= levels; ++l) {
    auto* cache = tape ? &tape->levels[static_cast<std::size_t>(l - 1)] : nullptr;
    LevelBands<Scalar> b = analyze_level(approx, filters[static_cast<std::size_t>(l - 1)], level_stride(l), cache);
    y.detail(l, Orientation::LH) = std::move(b.lh);
    y.detail(l, Orientation::HL) = std::move(b.hl);
    y.detail(l, Orientation::HH) = std::move(b.hh);
    approx = std::move(b.ll);
  }
  y.approximation() = std::move(approx);
  return y;
}

template <typename Scalar>
Plane<Scalar> synthesize(const CoeffStack<Scalar>& y, const BankSet<Scalar>& banks,
                         SynthesisTape<Scalar>* tape = nullptr) {
  const int levels = static_cast<int>(banks.size());
  if (y.levels() != levels) {
    throw DimensionError("coefficient stack has " + std::to_string(y.levels()) + " levels, banks have " +
                         std::to_string(levels));
  }
  check_transform_shape<Scalar>(y.rows(), y.cols(), levels);
  const auto filters = bank_filters(banks);
  if (tape) {
    tape->banks = banks;
    tape->inputs.assign(static_cast<std::size_t>(levels), {});
    tape->caches.assign(static_cast<std::size_t>(levels), {});
  }
  Plane<Scalar> approx = y.approximation();
  for (int l = levels; l >= 1; --l) {
    const auto i = static_cast<std::size_t>(l - 1);
    LevelBands<Scalar> b{std::move(approx), y.detail(l, Orientation::LH), y.detail(l, Orientation::HL),
                         y.detail(l, Orientation::HH)};
    approx = synthesize_level(b, filters[i], level_stride(l), tape ? &tape->caches[i] : nullptr);
    if (tape) tape->inputs[i] = std::move(b);
  }
  return approx;
}

template <typename Scalar>
struct AnalysisVjp {
  Plane<Scalar> input;
  std::vector<Vector<Scalar>> angles;  ///< one gradient vector per level
};

template <typename Scalar>
struct SynthesisVjp {
  CoeffStack<Scalar> coeffs;
  std::vector<Vector<Scalar>> angles;
};

/// Vector-Jacobian product of analyze() with respect to the image and all angles.
template <typename Scalar>
AnalysisVjp<Scalar> analyze_vjp(const CoeffStack<Scalar>& upstream, const AnalysisTape<Scalar>& tape) {
  if (tape.empty()) throw StateError("analyze_vjp called without a recorded forward pass");
  const int levels = static_cast<int>(tape.levels.size());
  if (upstream.levels() != levels) throw DimensionError("upstream gradient does not match the recorded transform");
  const auto filters = bank_filters(tape.banks);
  AnalysisVjp<Scalar> out;
  out.angles.resize(static_cast<std::size_t>(levels));
  Plane<Scalar> g_approx = upstream.approximation();
  for (int l = levels; l >= 1; --l) {
    const auto i = static_cast<std::size_t>(l - 1);
    LevelBands<Scalar> g{std::move(g_approx), upstream.detail(l, Orientation::LH), upstream.detail(l, Orientation::HL),
                         upstream.detail(l, Orientation::HH)};
    auto lg = analyze_level_vjp(g, filters[i], level_stride(l), tape.levels[i]);
    out.angles[i] = angle_gradient(tape.banks[i], lg.taps);
    g_approx = std::move(lg.input);
  }
  out.input = std::move(g_approx);
  return out;
}

/// Vector-Jacobian product of synthesize() with respect to the coefficients and all angles.
template <typename Scalar>
SynthesisVjp<Scalar> synthesize_vjp(const Plane<Scalar>& upstream, const SynthesisTape<Scalar>& tape) {
  if (tape.empty()) throw StateError("synthesize_vjp called without a recorded forward pass");
  const int levels = static_cast<int>(tape.caches.size());
  const auto filters = bank_filters(tape.banks);
  SynthesisVjp<Scalar> out;
  out.coeffs = CoeffStack<Scalar>(levels, upstream.rows(), upstream.cols());
  out.angles.resize(static_cast<std::size_t>(levels));
  Plane<Scalar> g = upstream;
  for (int l = 1; l <= levels; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    auto lg = synthesize_level_vjp(g, tape.inputs[i], filters[i], level_stride(l), tape.caches[i]);
    out.angles[i] = angle_gradient(tape.banks[i], lg.taps);
    out.coeffs.detail(l, Orientation::LH) = std::move(lg.bands.lh);
    out.coeffs.detail(l, Orientation::HL) = std::move(lg.bands.hl);
    out.coeffs.detail(l, Orientation::HH) = std::move(lg.bands.hh);
    g = std::move(lg.bands.ll);
  }
  out.coeffs.approximation() = std::move(g);
  return out;
}

/// Haar banks, angles (pi/4, 0) at every level.
template <typename Scalar>
BankSet<Scalar> haar_banks(int levels) {
  const Scalar quarter_pi = Scalar(std::atan(1.0));
  return BankSet<Scalar>(static_cast<std::size_t>(levels), LatticeAngles<Scalar>(quarter_pi, Scalar(0)));
}

}  // namespace cnld
