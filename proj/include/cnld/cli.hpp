#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cnld/learn.hpp"
#include "cnld/model_file.hpp"
#include "cnld/sparse.hpp"

namespace cnld {

/// Defaults shared by the commands.
inline constexpr double kDefaultLambda = 0.12;
inline constexpr int kDefaultDenoiseIters = 100;

struct TrainOptions {
  std::filesystem::path images;
  int levels = 4;
  TrainConfig train = default_train_config();
  std::filesystem::path out = "model.txt";
  std::filesystem::path report = "report.json";

  static TrainConfig default_train_config();
};

struct TrainOutcome {
  ModelFile model;
  TrainReport report;
};

/// Loads every PGM in the directory, extracts patches and trains from the UDHT initialization.
TrainOutcome run_train(const TrainOptions& opts, std::ostream& log);

/// FNV-1a over the file names and contents, in sorted order.
std::uint64_t corpus_hash(const std::vector<std::filesystem::path>& files);

std::string report_json(const TrainOutcome& outcome);

/// Whole-image ISTA starting from the network inverse of the observation.
GrayImage denoise(const GrayImage& noisy, const CnldParams<double>& params, const IstaConfig<double>& cfg);

IstaConfig<double> default_denoise_config();

/// A named dictionary for evaluation.
struct NamedModel {
  std::string name;
  CnldParams<double> params;
};

struct EvalOptions {
  std::filesystem::path images;
  std::vector<NamedModel> models;
  double sigma = 30.0 / 255.0;
  std::uint64_t seed = 0;
  IstaConfig<double> ista = default_denoise_config();
};

/// Fixed-width PSNR table: one row per image, one column per model.
std::string eval_table(const EvalOptions& opts);

/// Parses "0.1" or "30/255".
double parse_ratio(const std::string& text);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cnld
