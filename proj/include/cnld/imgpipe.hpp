#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cnld/types.hpp"

namespace cnld {

/// Binary PGM (P5) with maxval 255. Pixels map to v/255.
GrayImage load_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);

/// Quantizes round(clamp(v, 0, 1) * 255).
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

struct NoiseSpec {
  double sigma = 30.0 / 255.0;
  std::uint64_t seed = 0;
};

/// Standard normal samples from mt19937_64 via Box-Muller.
///
/// Each 64-bit draw r becomes a uniform (r >> 11) * 2^-53. A pair
/// (u1, u2) with u1 shifted into (0, 1] yields
/// sqrt(-2 ln u1) * cos(2 pi u2) and sqrt(-2 ln u1) * sin(2 pi u2), used in
/// that order.
class GaussianSource {
public:
  explicit GaussianSource(std::uint64_t seed);
  double next();

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Adds i.i.d. N(0, sigma^2) noise in row-major order. No clipping.
GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec);

/// 10 log10(1 / MSE) for peak 1; +infinity when the images are identical.
double psnr(const GrayImage& ref, const GrayImage& test);

struct PatchCorner {
  Index row;
  Index col;
  bool operator==(const PatchCorner&) const = default;
};

/// Uniformly random top-left corners, deterministic given the seed.
std::vector<PatchCorner> patch_corners(Index rows, Index cols, int count, Index size, std::uint64_t seed);

std::vector<GrayImage> extract_patches(const GrayImage& img, int count, Index size, std::uint64_t seed);

/// Sorted list of *.pgm files in a directory.
std::vector<std::filesystem::path> list_pgm(const std::filesystem::path& dir);

}  // namespace cnld
