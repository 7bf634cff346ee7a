#include <doctest.h>

#include <cmath>

#include "cnld/lattice.hpp"
#include "oracles.hpp"

using namespace cnld;
using cnld::testing::uniform;

namespace {

double even_shift_inner(const Vector<double>& h, Index shift) {
  double acc = 0.0;
  for (Index k = 0; k + shift < h.size(); ++k) acc += h(k) * h(k + shift);
  return acc;
}

}  // namespace

TEST_CASE("Haar angles give the Haar pair") {
  const auto f = lattice_to_filters(LatticeAngles<double>(M_PI / 4, 0.0));
  const double r = 1.0 / std::sqrt(2.0);
  Vector<double> h0(4), h1(4);
  h0 << r, r, 0, 0;
  h1 << 0, 0, r, -r;
  CHECK((f.h0 - h0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((f.h1 - h1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero angles give a pair of unit impulses") {
  const auto f = lattice_to_filters(LatticeAngles<double>(0.0, 0.0));
  CHECK(f.h0.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(f.h0.cwiseAbs().sum() == doctest::Approx(1.0));
  CHECK(f.h1.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(f.h1.cwiseAbs().sum() == doctest::Approx(1.0));
}

TEST_CASE("taps at (0.3, -0.7) match the symbolic polyphase product") {
  // Expanded by computer algebra from Q(t2) diag(z^-1, 1) Q(t1).
  Vector<double> h0(4), h1(4);
  h0 << 0.22602632124962302, 0.7306816499355124, -0.6154446635582734, 0.19037934406737264;
  h1 << 0.19037934406737264, 0.6154446635582734, 0.7306816499355124, -0.22602632124962302;
  const auto f = lattice_to_filters(LatticeAngles<double>(0.3, -0.7));
  CHECK((f.h0 - h0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((f.h1 - h1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("orthonormality holds for random angles") {
  for (int trial = 0; trial < 1000; ++trial) {
    const LatticeAngles<double> a(uniform(-M_PI, M_PI), uniform(-M_PI, M_PI));
    const auto f = lattice_to_filters(a);
    CHECK(std::abs(f.h0.norm() - 1.0) < 1e-12);
    CHECK(std::abs(f.h1.norm() - 1.0) < 1e-12);
    CHECK(std::abs(f.h0.dot(f.h1)) < 1e-12);
    CHECK(std::abs(even_shift_inner(f.h0, 2)) < 1e-12);
    CHECK(std::abs(even_shift_inner(f.h1, 2)) < 1e-12);
  }
}

TEST_CASE("longer cascades stay orthonormal") {
  Vector<double> t(3);
  t << 0.4, -1.1, 2.3;
  const auto f = lattice_to_filters(LatticeAngles<double>(t));
  REQUIRE(f.length() == 6);
  CHECK(std::abs(f.h0.norm() - 1.0) < 1e-12);
  CHECK(std::abs(f.h0.dot(f.h1)) < 1e-12);
  CHECK(std::abs(even_shift_inner(f.h0, 2)) < 1e-12);
  CHECK(std::abs(even_shift_inner(f.h0, 4)) < 1e-12);
}

TEST_CASE("filter gradients match central differences") {
  const double eps = 1e-6;
  auto check_at = [&](const LatticeAngles<double>& a, double tol) {
    const auto grads = filter_gradients(a);
    for (Index i = 0; i < a.stages(); ++i) {
      LatticeAngles<double> up = a, down = a;
      up.theta(i) += eps;
      down.theta(i) -= eps;
      const auto fu = lattice_to_filters(up);
      const auto fd = lattice_to_filters(down);
      const Vector<double> d0 = (fu.h0 - fd.h0) / (2 * eps);
      const Vector<double> d1 = (fu.h1 - fd.h1) / (2 * eps);
      const auto& g = grads[static_cast<std::size_t>(i)];
      for (Index k = 0; k < a.filter_length(); ++k) {
        CHECK(std::abs(d0(k) - g.h0(k)) < tol * std::max(1.0, std::abs(g.h0(k))));
        CHECK(std::abs(d1(k) - g.h1(k)) < tol * std::max(1.0, std::abs(g.h1(k))));
      }
    }
  };
  check_at(LatticeAngles<double>(M_PI / 4, 0.0), 1e-8);
  check_at(LatticeAngles<double>(0.0, 0.0), 1e-8);
  for (int trial = 0; trial < 100; ++trial) {
    check_at(LatticeAngles<double>(uniform(-M_PI, M_PI), uniform(-M_PI, M_PI)), 1e-6);
  }
}

TEST_CASE("gradients are orthogonal to the taps they differentiate") {
  for (int trial = 0; trial < 50; ++trial) {
    const LatticeAngles<double> a(uniform(-5, 5), uniform(-5, 5));
    const auto f = lattice_to_filters(a);
    for (const auto& g : filter_gradients(a)) {
      CHECK(std::abs(f.h0.dot(g.h0)) < 1e-12);
      CHECK(std::abs(f.h1.dot(g.h1)) < 1e-12);
    }
  }
}

TEST_CASE("synthesis filters are time reversals") {
  Vector<double> a(4), b(4);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  const FilterPair<double> fp(a, b);
  const auto s = synthesis_filters(fp);
  CHECK(s.h0(0) == 4);
  CHECK(s.h0(3) == 1);
  CHECK(s.h1(0) == 8);
  const auto back = synthesis_filters(s);
  CHECK(back.h0 == fp.h0);
  CHECK(back.h1 == fp.h1);

  // The Haar lowpass is palindromic up to its two-sample shift.
  const auto haar = synthesis_filters(lattice_to_filters(LatticeAngles<double>(M_PI / 4, 0.0)));
  CHECK(haar.h0(2) == doctest::Approx(haar.h0(3)));
  CHECK(haar.h0(0) == 0.0);
}

TEST_CASE("empty angle list is a structural error") {
  const LatticeAngles<double> none{Vector<double>(0)};
  CHECK_THROWS_AS(lattice_to_filters(none), StructuralError);
  CHECK_THROWS_AS(filter_gradients(none), StructuralError);
}

TEST_CASE("angles are not wrapped") {
  const auto a = lattice_to_filters(LatticeAngles<double>(0.3, -0.7));
  const auto b = lattice_to_filters(LatticeAngles<double>(0.3 + 2 * M_PI, -0.7 - 4 * M_PI));
  CHECK((a.h0 - b.h0).cwiseAbs().maxCoeff() < 1e-12);
  const LatticeAngles<double> stored(7.0, -9.0);
  CHECK(stored.theta(0) == 7.0);
}

TEST_CASE("float instantiation") {
  const auto f = lattice_to_filters(LatticeAngles<float>(0.5f, 0.25f));
  CHECK(std::abs(f.h0.norm() - 1.0f) < 1e-6f);
}
