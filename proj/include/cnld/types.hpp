#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "cnld/errors.hpp"

namespace cnld {

using Index = Eigen::Index;

/// A single row-major 2-D plane of samples.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Grayscale image with nominal range [0,1].
using GrayImage = Plane<double>;

/// Detail orientation within one level. The first letter names the filter
/// applied along rows (horizontal), the second the one along columns.
enum class Orientation : int { LH = 0, HL = 1, HH = 2 };

inline constexpr int kOrientations = 3;

/// Undecimated coefficient array. Channel order is
/// [LL_L, LH_L, HL_L, HH_L, LH_{L-1}, HL_{L-1}, HH_{L-1}, ..., LH_1, HL_1, HH_1].
template <typename Scalar>
class CoeffStack {
public:
  CoeffStack() = default;

  CoeffStack(int levels, Index rows, Index cols) : levels_(levels) {
    if (levels < 1) throw StructuralError("coefficient stack needs at least one level");
    channels_.assign(static_cast<std::size_t>(channel_count(levels)), Plane<Scalar>::Zero(rows, cols));
  }

  static constexpr int channel_count(int levels) { return kOrientations * levels + 1; }

  /// Channel index of a detail plane; level is 1-based (1 = finest).
  static int detail_index(int levels, int level, Orientation o) {
    return 1 + kOrientations * (levels - level) + static_cast<int>(o);
  }

  int levels() const { return levels_; }
  int channels() const { return static_cast<int>(channels_.size()); }
  Index rows() const { return channels_.empty() ? 0 : channels_.front().rows(); }
  Index cols() const { return channels_.empty() ? 0 : channels_.front().cols(); }
  Index size() const { return channels() * rows() * cols(); }

  Plane<Scalar>& channel(int c) { return channels_.at(static_cast<std::size_t>(c)); }
  const Plane<Scalar>& channel(int c) const { return channels_.at(static_cast<std::size_t>(c)); }

  Plane<Scalar>& approximation() { return channels_.front(); }
  const Plane<Scalar>& approximation() const { return channels_.front(); }

  Plane<Scalar>& detail(int level, Orientation o) { return channel(detail_index(levels_, level, o)); }
  const Plane<Scalar>& detail(int level, Orientation o) const {
    return channel(detail_index(levels_, level, o));
  }

  bool same_shape(const CoeffStack& other) const {
    return levels_ == other.levels_ && rows() == other.rows() && cols() == other.cols();
  }

  Scalar dot(const CoeffStack& other) const {
    Scalar acc(0);
    for (std::size_t c = 0; c < channels_.size(); ++c) acc += (channels_[c] * other.channels_[c]).sum();
    return acc;
  }

  Scalar squared_norm() const { return dot(*this); }

  Scalar l1_norm() const {
    Scalar acc(0);
    for (const auto& p : channels_) acc += p.abs().sum();
    return acc;
  }

  Scalar max_abs() const {
    Scalar m(0);
    for (const auto& p : channels_) m = std::max(m, p.abs().maxCoeff());
    return m;
  }

  CoeffStack& operator+=(const CoeffStack& o) {
    for (std::size_t c = 0; c < channels_.size(); ++c) channels_[c] += o.channels_[c];
    return *this;
  }
  CoeffStack& operator-=(const CoeffStack& o) {
    for (std::size_t c = 0; c < channels_.size(); ++c) channels_[c] -= o.channels_[c];
    return *this;
  }
  CoeffStack& operator*=(Scalar s) {
    for (auto& p : channels_) p *= s;
    return *this;
  }

  friend CoeffStack operator+(CoeffStack a, const CoeffStack& b) { return a += b; }
  friend CoeffStack operator-(CoeffStack a, const CoeffStack& b) { return a -= b; }
  friend CoeffStack operator*(Scalar s, CoeffStack a) { return a *= s; }

  bool operator==(const CoeffStack& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t c = 0; c < channels_.size(); ++c)
      if (!(channels_[c] == o.channels_[c]).all()) return false;
    return true;
  }

  /// Flat view in channel-major, row-major scan order.
  Scalar& flat(Index i) {
    const Index plane = rows() * cols();
    return channels_[static_cast<std::size_t>(i / plane)](i % plane);
  }
  Scalar flat(Index i) const {
    const Index plane = rows() * cols();
    return channels_[static_cast<std::size_t>(i / plane)](i % plane);
  }

  std::vector<Plane<Scalar>>& planes() { return channels_; }
  const std::vector<Plane<Scalar>>& planes() const { return channels_; }

private:
  int levels_ = 0;
  std::vector<Plane<Scalar>> channels_;
};

}  // namespace cnld
