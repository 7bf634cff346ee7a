#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnld/network.hpp"
#include "cnld/sparse.hpp"
#include "cnld/types.hpp"

namespace cnld {

enum class SparseMode { Ista, Iht };

struct TrainConfig {
  int epochs = 10;
  int minibatch = 128;
  int patches_per_image = 256;
  Index patch_size = 32;
  double learning_rate = 0.01;
  SparseMode sparse_mode = SparseMode::Ista;
  /// Sparse-coding solver settings; `coding.lambda` is the ISTA weight.
  IstaConfig<double> coding{};
  /// Nonzero budget per patch for SparseMode::Iht.
  Index sparsity = 0;
  std::uint64_t rng_seed = 0;
  double slope_min = 1e-3;
  double slope_max = 10.0;
  /// Start each epoch's sparse coding from the previous epoch's solution.
  bool warm_start = true;
  /// AWGN level of the observations that are sparse coded; the loss is still
  /// measured against the clean patches. 0 codes the clean patches directly.
  double noise_sigma = 0.0;

  void validate(std::size_t patch_count, int levels) const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::uint64_t param_hash = 0;
  double seconds = 0.0;
};

struct TrainReport {
  std::size_t patches = 0;
  int batches_per_epoch = 0;
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  CnldParams<double> params;
  TrainReport report;
};

/// Raised when the loss becomes non-finite during training.
class TrainingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a over the little-endian bytes of pack(p).
std::uint64_t parameter_hash(const CnldParams<double>& p);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Gradient of 0.5 ||x - phi(y)||^2 with respect to the parameters.
ParamGradient<double> sample_gradient(const GrayImage& x, const CoeffStack<double>& y, const CnldParams<double>& p,
                                      double* loss = nullptr);

/// Mean of per-sample gradients, summed in index order.
ParamGradient<double> mean_gradient(std::span<const ParamGradient<double>> grads);

/// Clamps all slopes into [lo, hi].
void project_slopes(CnldParams<double>& p, double lo, double hi);

/// theta <- theta - lr * grad, followed by slope projection.
CnldParams<double> sgd_step(const CnldParams<double>& p, const ParamGradient<double>& grad, const TrainConfig& cfg);

/// Sparse code for one patch with the configured solver.
CoeffStack<double> sparse_code(const GrayImage& x, const CnldParams<double>& p, const TrainConfig& cfg,
                               const CoeffStack<double>& start);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Alternating sparse coding and minibatch SGD on the dictionary parameters.
TrainResult train(const std::vector<GrayImage>& patches, const TrainConfig& cfg, const CnldParams<double>& init,
                  const EpochCallback& on_epoch = {});

}  // namespace cnld
