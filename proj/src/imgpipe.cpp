#include "cnld/imgpipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cnld/errors.hpp"

namespace cnld {

namespace {

double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

class HeaderReader {
public:
  explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_number(const char* field) {
    skip_whitespace_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) throw FormatError(std::string("PGM ") + field + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("PGM header: expected ") + field, start);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("not a PGM file", 0);
  if (bytes[1] != '5') throw FormatError("unsupported PNM variant P" + std::string(1, char(bytes[1])), 1);

  HeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.read_number("width");
  const long height = reader.read_number("height");
  reader.skip_whitespace_and_comments();
  const std::size_t maxval_at = reader.pos();
  const long maxval = reader.read_number("maxval");
  if (width <= 0 || height <= 0) throw FormatError("PGM dimensions must be positive", maxval_at);
  if (maxval != 255) throw FormatError("PGM maxval must be 255, got " + std::to_string(maxval), maxval_at);
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()])) {
    throw FormatError("PGM header must end with a single whitespace byte", reader.pos());
  }
  reader.advance(1);

  const std::size_t offset = reader.pos();
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - offset < count) {
    throw FormatError("PGM payload truncated: expected " + std::to_string(count) + " bytes, found " +
                          std::to_string(bytes.size() - offset),
                      bytes.size());
  }

  GrayImage img(height, width);
  for (std::size_t i = 0; i < count; ++i) img(static_cast<Index>(i)) = bytes[offset + i] / 255.0;
  return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<std::size_t>(img.size()));
  for (Index i = 0; i < img.size(); ++i) {
    const double v = std::clamp(img(i), 0.0, 1.0);
    bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return bytes;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

GaussianSource::GaussianSource(std::uint64_t seed) : engine_(seed) {}

double GaussianSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - unit_uniform(engine_);
  const double u2 = unit_uniform(engine_);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

GrayImage add_awgn(const GrayImage& img, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (spec.sigma == 0.0) return img;
  GaussianSource source(spec.seed);
  GrayImage out = img;
  for (Index i = 0; i < out.size(); ++i) out(i) += spec.sigma * source.next();
  return out;
}

double psnr(const GrayImage& ref, const GrayImage& test) {
  if (ref.rows() != test.rows() || ref.cols() != test.cols()) {
    throw DimensionError("PSNR needs images of equal size");
  }
  const double mse = (ref - test).square().mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<PatchCorner> patch_corners(Index rows, Index cols, int count, Index size, std::uint64_t seed) {
  if (size < 1 || size > std::min(rows, cols)) {
    throw DimensionError("patch size " + std::to_string(size) + " does not fit a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " image");
  }
  std::mt19937_64 engine(seed);
  std::vector<PatchCorner> corners;
  corners.reserve(static_cast<std::size_t>(std::max(count, 0)));
  const auto pick = [&](Index span) {
    return std::min(static_cast<Index>(unit_uniform(engine) * static_cast<double>(span)), span - 1);
  };
  for (int i = 0; i < count; ++i) {
    const Index r = pick(rows - size + 1);
    const Index c = pick(cols - size + 1);
    corners.push_back({r, c});
  }
  return corners;
}

std::vector<GrayImage> extract_patches(const GrayImage& img, int count, Index size, std::uint64_t seed) {
  std::vector<GrayImage> patches;
  for (const auto& c : patch_corners(img.rows(), img.cols(), count, size, seed)) {
    patches.emplace_back(img.block(c.row, c.col, size, size));
  }
  return patches;
}

std::vector<std::filesystem::path> list_pgm(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace cnld
