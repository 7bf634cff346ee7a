#include "cnld/learn.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "cnld/imgpipe.hpp"
#include "cnld/udt2d.hpp"

namespace cnld {

void TrainConfig::validate(std::size_t patch_count, int levels) const {
  if (patch_count == 0) throw std::invalid_argument("training needs at least one patch");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (minibatch < 1 || static_cast<std::size_t>(minibatch) > patch_count) {
    throw std::invalid_argument("minibatch " + std::to_string(minibatch) + " must lie in [1, " +
                                std::to_string(patch_count) + "]");
  }
  if (patch_size < (Index(1) << levels)) {
    throw std::invalid_argument("patch size " + std::to_string(patch_size) + " is below 2^levels");
  }
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(slope_min > 0.0 && slope_min <= slope_max)) throw std::invalid_argument("slope bounds must satisfy 0 < min <= max");
  if (sparse_mode == SparseMode::Iht && sparsity < 1) throw std::invalid_argument("IHT mode needs a positive sparsity K");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  coding.validate();
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t parameter_hash(const CnldParams<double>& p) {
  const Vector<double> v = pack(p);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<std::size_t>(v.size()) * 8);
  for (Index i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v(i));
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return fnv1a64(bytes);
}

ParamGradient<double> sample_gradient(const GrayImage& x, const CoeffStack<double>& y, const CnldParams<double>& p,
                                      double* loss) {
  CnldTape<double> tape;
  const GrayImage residual = x - forward(y, p, &tape);
  if (loss) *loss = 0.5 * residual.square().sum();
  return backward(y, p, residual, tape).params;
}

ParamGradient<double> mean_gradient(std::span<const ParamGradient<double>> grads) {
  if (grads.empty()) throw std::invalid_argument("mean of an empty gradient set");
  ParamGradient<double> acc = ParamGradient<double>::Zero(grads.front().levels);
  for (const auto& g : grads) acc.values += g.values;
  acc.values /= static_cast<double>(grads.size());
  return acc;
}

void project_slopes(CnldParams<double>& p, double lo, double hi) {
  for (auto& s : p.slopes) s = s.max(lo).min(hi);
}

CnldParams<double> sgd_step(const CnldParams<double>& p, const ParamGradient<double>& grad, const TrainConfig& cfg) {
  if (cfg.learning_rate == 0.0) return p;
  CnldParams<double> next = unpack<double>(pack(p) - cfg.learning_rate * grad.values, p.levels());
  project_slopes(next, cfg.slope_min, cfg.slope_max);
  return next;
}

CoeffStack<double> sparse_code(const GrayImage& x, const CnldParams<double>& p, const TrainConfig& cfg,
                               const CoeffStack<double>& start) {
  if (cfg.sparse_mode == SparseMode::Iht) return iht(x, p, cfg.sparsity, cfg.coding, start).coeffs;
  return ista(x, p, cfg.coding, start).coeffs;
}

namespace {

std::string describe(const CnldParams<double>& p) {
  std::ostringstream os;
  os.precision(17);
  const Vector<double> v = pack(p);
  for (Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

// Fisher-Yates with a fixed index draw so the permutation depends only on the engine.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& engine) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    const auto j = std::min(static_cast<std::size_t>(u * static_cast<double>(i)), i - 1);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

TrainResult train(const std::vector<GrayImage>& patches, const TrainConfig& cfg, const CnldParams<double>& init,
                  const EpochCallback& on_epoch) {
  init.validate();
  cfg.validate(patches.size(), init.levels());
  for (const auto& x : patches) {
    if (x.rows() != patches.front().rows() || x.cols() != patches.front().cols()) {
      throw DimensionError("training patches must share one shape");
    }
  }

  // Sparse codes are fitted to the observations; the dictionary update
  // always measures the error against the clean patches.
  const std::vector<GrayImage>& targets = patches;
  std::vector<GrayImage> observations;
  if (cfg.noise_sigma > 0.0) {
    observations.reserve(patches.size());
    for (std::size_t j = 0; j < patches.size(); ++j) {
      observations.push_back(add_awgn(patches[j], {cfg.noise_sigma, cfg.rng_seed ^ (0x9e3779b97f4a7c15ULL * (j + 1))}));
    }
  }
  const std::vector<GrayImage>& observed = cfg.noise_sigma > 0.0 ? observations : patches;

  TrainResult result{init, {}};
  CnldParams<double>& params = result.params;
  project_slopes(params, cfg.slope_min, cfg.slope_max);

  const std::size_t n = patches.size();
  const auto batch = static_cast<std::size_t>(cfg.minibatch);
  result.report.patches = n;
  result.report.batches_per_epoch = static_cast<int>((n + batch - 1) / batch);

  std::vector<CoeffStack<double>> codes(n);
  std::vector<double> losses(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 engine(cfg.rng_seed);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_indices(order, engine);

    for (std::size_t b = 0; b * batch < n; ++b) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(n, begin + batch);
      std::vector<ParamGradient<double>> grads;
      grads.reserve(end - begin);
      for (std::size_t s = begin; s < end; ++s) {
        const std::size_t j = order[s];
        const bool cold = !cfg.warm_start || codes[j].channels() == 0;
        const CoeffStack<double> start = cold ? inverse(observed[j], params) : codes[j];
        codes[j] = sparse_code(observed[j], params, cfg, start);
        double loss = 0.0;
        grads.push_back(sample_gradient(targets[j], codes[j], params, &loss));
        if (!std::isfinite(loss) || !grads.back().all_finite()) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                              "; parameters: " + describe(params));
        }
        losses[j] = loss;
      }
      params = sgd_step(params, mean_gradient(grads), cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    // Summed in patch order so the value does not depend on the shuffle.
    rec.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
    rec.param_hash = parameter_hash(params);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace cnld
