#pragma once

// Convolutional nonlinear dictionary: the per-level synthesis cascade with a
// PReLU on each of the three detail planes entering a level. The
// approximation path is never activated, so a level-L network has 2L lattice
// angles and 3L slopes.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cnld/errors.hpp"
#include "cnld/lattice.hpp"
#include "cnld/types.hpp"
#include "cnld/udt2d.hpp"

namespace cnld {

inline constexpr int kAnglesPerLevel = 2;
inline constexpr int kParamsPerLevel = kAnglesPerLevel + kOrientations;

template <typename Scalar>
constexpr Scalar prelu(Scalar v, Scalar slope) {
  return v >= Scalar(0) ? v : slope * v;
}

template <typename Scalar>
struct PreluSubgradient {
  Scalar d_input;
  Scalar d_slope;
};

/// The kink takes the positive branch, so slope 1 stays exactly linear.
template <typename Scalar>
constexpr PreluSubgradient<Scalar> prelu_subgrad(Scalar v, Scalar slope) {
  if (v < Scalar(0)) return {slope, v};
  return {Scalar(1), Scalar(0)};
}

template <typename Scalar>
Plane<Scalar> prelu(const Plane<Scalar>& v, Scalar slope) {
  return (v >= Scalar(0)).select(v, slope * v);
}

/// Inverse of prelu for slope > 0.
template <typename Scalar>
Plane<Scalar> prelu_inverse(const Plane<Scalar>& v, Scalar slope) {
  return (v >= Scalar(0)).select(v, v / slope);
}

/// Slopes of one level, in LH, HL, HH order.
template <typename Scalar>
using LevelSlopes = Eigen::Array<Scalar, kOrientations, 1>;

template <typename Scalar>
struct CnldParams {
  BankSet<Scalar> banks;
  std::vector<LevelSlopes<Scalar>> slopes;

  int levels() const { return static_cast<int>(banks.size()); }
  Index parameter_count() const { return Index(kParamsPerLevel) * levels(); }

  Scalar slope(int level, Orientation o) const {
    return slopes[static_cast<std::size_t>(level - 1)](static_cast<int>(o));
  }

  void validate() const {
    if (banks.empty()) throw StructuralError("network needs at least one level");
    if (slopes.size() != banks.size()) throw StructuralError("slope and bank level counts differ");
    for (const auto& b : banks)
      if (b.stages() != kAnglesPerLevel) throw StructuralError("each level bank must carry exactly 2 angles");
  }

  bool operator==(const CnldParams& o) const {
    if (banks != o.banks || slopes.size() != o.slopes.size()) return false;
    for (std::size_t i = 0; i < slopes.size(); ++i)
      if (!(slopes[i] == o.slopes[i]).all()) return false;
    return true;
  }
};

/// Flat gradient in pack() order.
template <typename Scalar>
struct ParamGradient {
  int levels = 0;
  Vector<Scalar> values;

  static ParamGradient Zero(int levels) { return {levels, Vector<Scalar>::Zero(Index(kParamsPerLevel) * levels)}; }

  Scalar& angle(int level, int stage) { return values(Index(kAnglesPerLevel) * (level - 1) + stage); }
  Scalar angle(int level, int stage) const { return values(Index(kAnglesPerLevel) * (level - 1) + stage); }
  Scalar& slope(int level, Orientation o) {
    return values(Index(kAnglesPerLevel) * levels + Index(kOrientations) * (level - 1) + static_cast<int>(o));
  }
  Scalar slope(int level, Orientation o) const {
    return values(Index(kAnglesPerLevel) * levels + Index(kOrientations) * (level - 1) + static_cast<int>(o));
  }
  bool all_finite() const { return values.allFinite(); }
};

/// Flat layout: angles of level 1..L (theta1, theta2), then slopes of level 1..L (LH, HL, HH).
template <typename Scalar>
Vector<Scalar> pack(const CnldParams<Scalar>& p) {
  p.validate();
  const int levels = p.levels();
  Vector<Scalar> v(p.parameter_count());
  for (int l = 0; l < levels; ++l) {
    v.segment(kAnglesPerLevel * l, kAnglesPerLevel) = p.banks[static_cast<std::size_t>(l)].theta;
    v.segment(kAnglesPerLevel * levels + kOrientations * l, kOrientations) =
        p.slopes[static_cast<std::size_t>(l)].matrix();
  }
  return v;
}

template <typename Scalar>
CnldParams<Scalar> unpack(const Vector<Scalar>& v, int levels) {
  if (levels < 1) throw StructuralError("network needs at least one level");
  if (v.size() != Index(kParamsPerLevel) * levels) {
    throw StructuralError("parameter vector has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(kParamsPerLevel * levels));
  }
  CnldParams<Scalar> p;
  for (int l = 0; l < levels; ++l) {
    p.banks.emplace_back(Vector<Scalar>(v.segment(kAnglesPerLevel * l, kAnglesPerLevel)));
    p.slopes.emplace_back(v.segment(kAnglesPerLevel * levels + kOrientations * l, kOrientations).array());
  }
  return p;
}

/// Haar angles and unit slopes: the network reduces to the undecimated Haar synthesis.
template <typename Scalar>
CnldParams<Scalar> init_udht(int levels) {
  if (levels < 1) throw StructuralError("network needs at least one level");
  CnldParams<Scalar> p;
  p.banks = haar_banks<Scalar>(levels);
  p.slopes.assign(static_cast<std::size_t>(levels), LevelSlopes<Scalar>::Ones());
  return p;
}

/// Forward intermediates. Levels are indexed 1..L through `level - 1`.
template <typename Scalar>
struct CnldTape {
  CnldParams<Scalar> params;
  CoeffStack<Scalar> input;
  std::vector<LevelBands<Scalar>> stage_inputs;  ///< approximation plus activated details
  std::vector<LevelSynthesisCache<Scalar>> caches;

  bool empty() const { return caches.empty(); }
};

template <typename Scalar>
void check_network_input(const CoeffStack<Scalar>& y, const CnldParams<Scalar>& p) {
  p.validate();
  if (y.levels() != p.levels()) {
    throw DimensionError("coefficient stack has " + std::to_string(y.levels()) + " levels, network has " +
                         std::to_string(p.levels()));
  }
  check_transform_shape<Scalar>(y.rows(), y.cols(), p.levels());
}

/// Evaluates the synthesizer phi_theta(y).
template <typename Scalar>
Plane<Scalar> forward(const CoeffStack<Scalar>& y, const CnldParams<Scalar>& p, CnldTape<Scalar>* tape = nullptr) {
  check_network_input(y, p);
  const int levels = p.levels();
  const auto filters = bank_filters(p.banks);
  if (tape) {
    tape->params = p;
    tape->input = y;
    tape->stage_inputs.assign(static_cast<std::size_t>(levels), {});
    tape->caches.assign(static_cast<std::size_t>(levels), {});
  }
  Plane<Scalar> approx = y.approximation();
  for (int l = levels; l >= 1; --l) {
    const auto i = static_cast<std::size_t>(l - 1);
    LevelBands<Scalar> b{std::move(approx), prelu(y.detail(l, Orientation::LH), p.slope(l, Orientation::LH)),
                         prelu(y.detail(l, Orientation::HL), p.slope(l, Orientation::HL)),
                         prelu(y.detail(l, Orientation::HH), p.slope(l, Orientation::HH))};
    approx = synthesize_level(b, filters[i], level_stride(l), tape ? &tape->caches[i] : nullptr);
    if (tape) tape->stage_inputs[i] = std::move(b);
  }
  return approx;
}

template <typename Scalar>
struct CnldGradient {
  CoeffStack<Scalar> coeffs;
  ParamGradient<Scalar> params;
};

/// Gradients of J = 0.5 * ||x - phi(y)||^2 given residual = x - phi(y) and
/// the tape from forward(y, p).
template <typename Scalar>
CnldGradient<Scalar> backward(const CoeffStack<Scalar>& y, const CnldParams<Scalar>& p, const Plane<Scalar>& residual,
                              const CnldTape<Scalar>& tape) {
  if (tape.empty()) throw StateError("backward called without a recorded forward pass");
  if (!(tape.params == p) || !(tape.input == y)) throw StateError("backward called with a stale forward cache");
  if (residual.rows() != y.rows() || residual.cols() != y.cols()) {
    throw DimensionError("residual shape does not match the coefficient planes");
  }
  const int levels = p.levels();
  const auto filters = bank_filters(p.banks);
  CnldGradient<Scalar> out{CoeffStack<Scalar>(levels, y.rows(), y.cols()), ParamGradient<Scalar>::Zero(levels)};

  Plane<Scalar> g = -residual;
  for (int l = 1; l <= levels; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    auto lg = synthesize_level_vjp(g, tape.stage_inputs[i], filters[i], level_stride(l), tape.caches[i]);
    const Vector<Scalar> dtheta = angle_gradient(p.banks[i], lg.taps);
    for (int s = 0; s < kAnglesPerLevel; ++s) out.params.angle(l, s) = dtheta(s);

    for (int o = 0; o < kOrientations; ++o) {
      const auto orient = static_cast<Orientation>(o);
      const Plane<Scalar>& pre = y.detail(l, orient);
      const Plane<Scalar>& up = lg.bands.detail(orient);
      const Scalar slope = p.slope(l, orient);
      const auto negative = pre < Scalar(0);
      out.coeffs.detail(l, orient) = negative.select(slope * up, up);
      out.params.slope(l, orient) = negative.select(up * pre, Scalar(0)).sum();
    }
    g = std::move(lg.bands.ll);
  }
  out.coeffs.approximation() = std::move(g);
  return out;
}

/// Coefficients that the network maps back to x exactly: level-wise
/// analysis followed by inverse PReLU on the details. Requires slopes > 0.
template <typename Scalar>
CoeffStack<Scalar> inverse(const Plane<Scalar>& x, const CnldParams<Scalar>& p) {
  p.validate();
  CoeffStack<Scalar> y = analyze(x, p.banks);
  for (int l = 1; l <= p.levels(); ++l) {
    for (int o = 0; o < kOrientations; ++o) {
      const auto orient = static_cast<Orientation>(o);
      y.detail(l, orient) = prelu_inverse(y.detail(l, orient), p.slope(l, orient));
    }
  }
  return y;
}

/// 0.5 * ||x - phi(y)||^2, optionally recording the tape.
template <typename Scalar>
Scalar reconstruction_loss(const Plane<Scalar>& x, const CoeffStack<Scalar>& y, const CnldParams<Scalar>& p,
                           CnldTape<Scalar>* tape = nullptr) {
  return Scalar(0.5) * (x - forward(y, p, tape)).square().sum();
}

/// Learnable-parameter census of a dictionary configuration.
struct Census {
  int channels;
  int layers;
  int parameters;
};

enum class DictionaryKind { Udht, Cnld };

constexpr Census census(DictionaryKind kind, int levels) {
  return {kOrientations * levels + 1, levels, kind == DictionaryKind::Udht ? 0 : kParamsPerLevel * levels};
}

}  // namespace cnld
