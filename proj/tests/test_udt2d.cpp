#include <doctest.h>

#include <cmath>

#include "cnld/udt2d.hpp"
#include "oracles.hpp"

using namespace cnld;
using namespace cnld::testing;

namespace {

double max_abs_diff(const CoeffStack<double>& a, const CoeffStack<double>& b) {
  double m = 0.0;
  for (int c = 0; c < a.channels(); ++c) m = std::max(m, (a.channel(c) - b.channel(c)).abs().maxCoeff());
  return m;
}

double half_error(const GrayImage& x, const CoeffStack<double>& y, const BankSet<double>& banks) {
  return 0.5 * (x - synthesize(y, banks)).square().sum();
}

}  // namespace

TEST_CASE("constant image under Haar banks") {
  const int levels = 3;
  const GrayImage x = GrayImage::Constant(16, 16, 0.37);
  const auto y = analyze(x, haar_banks<double>(levels));
  REQUIRE(y.channels() == 10);
  CHECK((y.approximation() - 0.37).abs().maxCoeff() < 1e-15);
  for (int c = 1; c < y.channels(); ++c) CHECK(y.channel(c).abs().maxCoeff() < 1e-15);
}

TEST_CASE("Haar analysis equals the brute-force a trous oracle") {
  for (int levels = 1; levels <= 3; ++levels) {
    for (int trial = 0; trial < 3; ++trial) {
      const GrayImage x = random_image(16, 16);
      const auto y = analyze(x, haar_banks<double>(levels));
      CHECK(max_abs_diff(y, haar_oracle(x, levels)) < 1e-12);
    }
  }
}

TEST_CASE("perfect reconstruction for random angles") {
  for (int trial = 0; trial < 50; ++trial) {
    const int levels = 1 + trial % 4;
    const GrayImage x = random_image(64, 64);
    const auto banks = random_banks(levels);
    const GrayImage back = synthesize(analyze(x, banks), banks);
    CHECK(std::sqrt((back - x).square().sum() / x.square().sum()) < 1e-10);
  }
}

TEST_CASE("non-square images reconstruct") {
  const GrayImage x = random_image(24, 40);
  const auto banks = random_banks(3);
  CHECK((synthesize(analyze(x, banks), banks) - x).abs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesis is the adjoint of analysis") {
  for (int trial = 0; trial < 50; ++trial) {
    const int levels = 1 + trial % 4;
    const GrayImage x = random_image(32, 32) - 0.5;
    const auto y = random_coeffs(levels, 32, 32, 0.0);
    const auto banks = random_banks(levels);
    const double lhs = analyze(x, banks).dot(y);
    const double rhs = (x * synthesize(y, banks)).sum();
    CHECK(std::abs(lhs - rhs) / (std::sqrt(x.square().sum()) * std::sqrt(y.squared_norm())) < 1e-12);
  }
}

TEST_CASE("analysis preserves the norm") {
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage x = random_image(32, 32);
    const auto banks = random_banks(4);
    CHECK(std::abs(std::sqrt(analyze(x, banks).squared_norm()) - std::sqrt(x.square().sum())) < 1e-10);
  }
}

TEST_CASE("DC coefficients synthesize a constant") {
  CoeffStack<double> y(4, 16, 16);
  y.approximation().setConstant(0.8);
  const GrayImage x = synthesize(y, haar_banks<double>(4));
  CHECK((x - 0.8).abs().maxCoeff() < 1e-14);
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(analyze(random_image(8, 32), haar_banks<double>(4)), DimensionError);
  CHECK_THROWS_AS(analyze(random_image(16, 15), haar_banks<double>(4)), DimensionError);
  CoeffStack<double> y(3, 16, 16);
  CHECK_THROWS_AS(synthesize(y, haar_banks<double>(4)), DimensionError);
}

TEST_CASE("synthesis angle gradients match finite differences") {
  const double eps = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const int levels = 1 + trial % 4;
    const GrayImage x = random_image(16, 16);
    const auto y = random_coeffs(levels, 16, 16, 0.0);
    const auto banks = random_banks(levels);

    SynthesisTape<double> tape;
    const GrayImage residual = x - synthesize(y, banks, &tape);
    const auto vjp = synthesize_vjp<double>(-residual, tape);

    for (int l = 0; l < levels; ++l) {
      for (Index s = 0; s < 2; ++s) {
        auto f = [&](double t) {
          BankSet<double> b = banks;
          b[static_cast<std::size_t>(l)].theta(s) = t;
          return half_error(x, y, b);
        };
        const double fd = central_difference(f, banks[static_cast<std::size_t>(l)].theta(s), eps);
        CHECK(relative_error(fd, vjp.angles[static_cast<std::size_t>(l)](s), 1e-6) < 1e-5);
      }
    }
  }
}

TEST_CASE("synthesis coefficient gradient vanishes at the analysis coefficients") {
  const GrayImage x = random_image(32, 32);
  const auto banks = random_banks(3);
  const auto y = analyze(x, banks);
  SynthesisTape<double> tape;
  const GrayImage residual = x - synthesize(y, banks, &tape);
  const auto vjp = synthesize_vjp<double>(-residual, tape);
  CHECK(vjp.coeffs.max_abs() < 1e-12);
}

TEST_CASE("gradient of a linear functional of the synthesis is the analysis") {
  const GrayImage c = random_image(16, 16);
  const auto banks = random_banks(2);
  const auto y = random_coeffs(2, 16, 16, 0.0);
  SynthesisTape<double> tape;
  synthesize(y, banks, &tape);
  const auto vjp = synthesize_vjp(c, tape);
  CHECK(max_abs_diff(vjp.coeffs, analyze(c, banks)) < 1e-13);
}

TEST_CASE("analysis VJP matches finite differences") {
  const double eps = 1e-6;
  const GrayImage x = random_image(16, 16);
  const int levels = 3;
  const auto banks = random_banks(levels);
  const auto w = random_coeffs(levels, 16, 16, 0.0);
  auto objective = [&](const GrayImage& img, const BankSet<double>& b) { return analyze(img, b).dot(w); };

  AnalysisTape<double> tape;
  analyze(x, banks, &tape);
  const auto vjp = analyze_vjp(w, tape);

  // Linear in x, so the input gradient is synthesize(w).
  CHECK((vjp.input - synthesize(w, banks)).abs().maxCoeff() < 1e-13);

  for (int l = 0; l < levels; ++l) {
    for (Index s = 0; s < 2; ++s) {
      auto f = [&](double t) {
        BankSet<double> b = banks;
        b[static_cast<std::size_t>(l)].theta(s) = t;
        return objective(x, b);
      };
      const double fd = central_difference(f, banks[static_cast<std::size_t>(l)].theta(s), eps);
      CHECK(relative_error(fd, vjp.angles[static_cast<std::size_t>(l)](s), 1e-6) < 1e-5);
    }
  }
}

TEST_CASE("VJPs without a recorded pass are state errors") {
  CHECK_THROWS_AS(synthesize_vjp(GrayImage(GrayImage::Zero(16, 16)), SynthesisTape<double>{}), StateError);
  CHECK_THROWS_AS(analyze_vjp(CoeffStack<double>(2, 16, 16), AnalysisTape<double>{}), StateError);
}
