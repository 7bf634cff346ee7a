#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cnld/network.hpp"

namespace cnld {

struct ModelProvenance {
  std::uint64_t seed = 0;
  int epochs = 0;
  std::uint64_t corpus_hash = 0;
};

/// Versioned plain-text model:
///
///   cnld-model
///   format_version 1
///   levels 4
///   angles <2*levels numbers, pack() order>
///   slopes <3*levels numbers, pack() order>
///   seed <uint64>
///   epochs <int>
///   corpus_hash <16 hex digits>
///
/// Reals are written with 17 significant digits so reading reproduces the
/// parameters bit-exactly.
struct ModelFile {
  static constexpr int kFormatVersion = 1;

  CnldParams<double> params;
  ModelProvenance provenance;
};

std::string format_model(const ModelFile& model);
ModelFile parse_model(const std::string& text);

void write_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace cnld
