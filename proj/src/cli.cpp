#include "cnld/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "cnld/imgpipe.hpp"
#include "cnld/network.hpp"

namespace cnld {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// splitmix64 finalizer, used to give each training image its own patch seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

TrainConfig TrainOptions::default_train_config() {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.coding.lambda = kDefaultLambda;
  cfg.coding.max_iters = 20;
  // With a free approximation plane, clean-patch training can drift toward
  // the identity dictionary; keep the full l1 objective unless asked.
  cfg.coding.penalize_approximation = true;
  return cfg;
}

IstaConfig<double> default_denoise_config() {
  IstaConfig<double> cfg;
  cfg.lambda = kDefaultLambda;
  cfg.max_iters = kDefaultDenoiseIters;
  cfg.penalize_approximation = false;
  return cfg;
}

double parse_ratio(const std::string& text) {
  const auto slash = text.find('/');
  std::size_t used = 0;
  try {
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } else {
      const std::string num = text.substr(0, slash);
      const std::string den = text.substr(slash + 1);
      std::size_t used_den = 0;
      const double n = std::stod(num, &used);
      const double d = std::stod(den, &used_den);
      if (used == num.size() && used_den == den.size() && d != 0.0) return n / d;
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("cannot parse number '" + text + "'");
}

std::uint64_t corpus_hash(const std::vector<std::filesystem::path>& files) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    h = fnv1a64({reinterpret_cast<const std::uint8_t*>(name.data()), name.size()}, h);
    std::ifstream in(f, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + f.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    h = fnv1a64(bytes, h);
  }
  return h;
}

TrainOutcome run_train(const TrainOptions& opts, std::ostream& log) {
  const auto files = list_pgm(opts.images);
  if (files.empty()) throw std::runtime_error("no .pgm images in " + opts.images.string());

  std::vector<GrayImage> patches;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const GrayImage img = load_pgm(files[i]);
    auto ps = extract_patches(img, opts.train.patches_per_image, opts.train.patch_size, mix_seed(opts.train.rng_seed, i));
    std::move(ps.begin(), ps.end(), std::back_inserter(patches));
  }
  log << "training on " << patches.size() << " patches from " << files.size() << " images\n";

  TrainOutcome outcome;
  auto result = train(patches, opts.train, init_udht<double>(opts.levels), [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " mean_loss " << fixed(r.mean_loss, 6) << " (" << fixed(r.seconds, 1) << " s)\n";
  });
  outcome.model.params = std::move(result.params);
  outcome.model.provenance = {opts.train.rng_seed, opts.train.epochs, corpus_hash(files)};
  outcome.report = std::move(result.report);
  return outcome;
}

std::string report_json(const TrainOutcome& outcome) {
  nlohmann::ordered_json j;
  j["patches"] = outcome.report.patches;
  j["batches_per_epoch"] = outcome.report.batches_per_epoch;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : outcome.report.epochs) {
    j["epochs"].push_back(
        {{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"param_hash", hex64(e.param_hash)}, {"seconds", e.seconds}});
  }
  j["corpus_hash"] = hex64(outcome.model.provenance.corpus_hash);
  j["seed"] = outcome.model.provenance.seed;
  return j.dump(2) + "\n";
}

GrayImage denoise(const GrayImage& noisy, const CnldParams<double>& params, const IstaConfig<double>& cfg) {
  const auto result = ista(noisy, params, cfg, inverse(noisy, params));
  return forward(result.coeffs, params);
}

std::string eval_table(const EvalOptions& opts) {
  const auto files = list_pgm(opts.images);
  if (files.empty()) throw std::runtime_error("no .pgm images in " + opts.images.string());
  if (opts.models.empty()) throw std::invalid_argument("eval needs at least one model");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"image", "noisy"};
  for (const auto& m : opts.models) header.push_back(m.name);
  rows.push_back(header);

  for (const auto& f : files) {
    const GrayImage clean = load_pgm(f);
    const GrayImage noisy = add_awgn(clean, {opts.sigma, opts.seed});
    std::vector<std::string> row{f.stem().string(), fixed(psnr(clean, noisy), 2)};
    for (const auto& m : opts.models) row.push_back(fixed(psnr(clean, denoise(noisy, m.params, opts.ista)), 2));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());

  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        os << r[c] << std::string(width[c] - r[c].size(), ' ');
      } else {
        os << "  " << std::string(width[c] - r[c].size(), ' ') << r[c];
      }
    }
    os << '\n';
  }
  return os.str();
}

namespace {

void add_ista_flags(CLI::App* cmd, IstaConfig<double>& cfg) {
  cmd->add_option("--lambda", cfg.lambda, "l1 weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--iters", cfg.max_iters, "ISTA iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--step", cfg.step, "initial ISTA step")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", cfg.tol, "relative objective change that stops ISTA")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--penalize-approximation", cfg.penalize_approximation,
                "also apply the l1 penalty to the coarsest approximation plane");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

CnldParams<double> load_dictionary(const std::string& model_path, bool udht, int levels) {
  if (udht) return init_udht<double>(levels);
  if (model_path.empty()) throw std::invalid_argument("either --model or --udht is required");
  return read_model(model_path).params;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convolutional nonlinear dictionary: training, denoising and evaluation"};
  app.require_subcommand(1);

  TrainOptions train_opts;
  std::string train_sigma = "0";
  std::string sparse_mode = "ista";
  auto* train_cmd = app.add_subcommand("train", "learn a CNLD from a directory of PGM images");
  train_cmd->add_option("--images", train_opts.images, "directory of training PGMs")->required();
  train_cmd->add_option("--levels", train_opts.levels, "transform levels")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_opts.train.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--minibatch", train_opts.train.minibatch, "patches per SGD step")->check(CLI::PositiveNumber);
  train_cmd->add_option("--patches-per-image", train_opts.train.patches_per_image)->check(CLI::PositiveNumber);
  train_cmd->add_option("--patch-size", train_opts.train.patch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_opts.train.learning_rate, "SGD learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda", train_opts.train.coding.lambda, "sparse-coding l1 weight")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--coding-iters", train_opts.train.coding.max_iters, "ISTA iterations per sparse-coding step")
      ->check(CLI::PositiveNumber);
  train_cmd->add_flag("--penalize-approximation,!--no-penalize-approximation",
                      train_opts.train.coding.penalize_approximation,
                      "apply the l1 penalty to the coarsest approximation plane while coding (default on)");
  train_cmd->add_option("--sparse-mode", sparse_mode, "ista or iht")->check(CLI::IsMember({"ista", "iht"}));
  train_cmd->add_option("--k", train_opts.train.sparsity, "nonzeros per patch in iht mode");
  train_cmd->add_option("--train-sigma", train_sigma, "AWGN level of the coded observations, e.g. 30/255");
  train_cmd->add_option("--slope-min", train_opts.train.slope_min);
  train_cmd->add_option("--slope-max", train_opts.train.slope_max);
  train_cmd->add_flag("!--no-warm-start", train_opts.train.warm_start, "restart sparse coding every epoch");
  train_cmd->add_option("--seed", train_opts.train.rng_seed, "RNG seed");
  train_cmd->add_option("--out", train_opts.out, "model file to write");
  train_cmd->add_option("--report", train_opts.report, "JSON training report to write");

  std::string model_path;
  bool use_udht = false;
  int udht_levels = 4;
  std::string in_path, clean_path, out_path = "denoised.pgm", noisy_out, sigma_text = "30/255";
  std::uint64_t noise_seed = 0;
  IstaConfig<double> denoise_cfg = default_denoise_config();
  auto* denoise_cmd = app.add_subcommand("denoise", "denoise one image with ISTA");
  denoise_cmd->add_option("--model", model_path, "trained model file");
  denoise_cmd->add_flag("--udht", use_udht, "use the parameter-free undecimated Haar dictionary");
  denoise_cmd->add_option("--levels", udht_levels, "levels for --udht")->check(CLI::PositiveNumber);
  denoise_cmd->add_option("--in", in_path, "noisy input PGM");
  denoise_cmd->add_option("--clean", clean_path, "clean reference PGM");
  denoise_cmd->add_option("--sigma", sigma_text, "AWGN level used with --clean and no --in");
  denoise_cmd->add_option("--seed", noise_seed, "noise seed");
  denoise_cmd->add_option("--out", out_path, "denoised PGM");
  denoise_cmd->add_option("--noisy-out", noisy_out, "also write the synthesized observation");
  add_ista_flags(denoise_cmd, denoise_cfg);

  std::string eval_images;
  std::vector<std::string> eval_models;
  bool eval_udht = false;
  std::string eval_sigma = "30/255";
  std::uint64_t eval_seed = 0;
  IstaConfig<double> eval_cfg = default_denoise_config();
  auto* eval_cmd = app.add_subcommand("eval", "PSNR table over a directory of clean images");
  eval_cmd->add_option("--images", eval_images, "directory of clean PGMs")->required();
  eval_cmd->add_option("--model", eval_models, "model file; repeat for several columns");
  eval_cmd->add_flag("--udht", eval_udht, "add the undecimated Haar column");
  eval_cmd->add_option("--levels", udht_levels, "levels for --udht")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--sigma", eval_sigma, "AWGN level");
  eval_cmd->add_option("--seed", eval_seed, "noise seed");
  add_ista_flags(eval_cmd, eval_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) {
      train_opts.train.noise_sigma = parse_ratio(train_sigma);
      train_opts.train.sparse_mode = sparse_mode == "iht" ? SparseMode::Iht : SparseMode::Ista;
      const TrainOutcome outcome = run_train(train_opts, err);
      write_model(outcome.model, train_opts.out);
      write_text(train_opts.report, report_json(outcome));
      out << "patches=" << outcome.report.patches << " epochs=" << outcome.report.epochs.size()
          << " model=" << train_opts.out.string() << '\n';
    } else if (*denoise_cmd) {
      if (use_udht && !model_path.empty()) throw std::invalid_argument("--model and --udht are exclusive");
      const CnldParams<double> params = load_dictionary(model_path, use_udht, udht_levels);
      std::optional<GrayImage> clean;
      if (!clean_path.empty()) clean = load_pgm(clean_path);
      GrayImage noisy;
      if (!in_path.empty()) {
        noisy = load_pgm(in_path);
      } else if (clean) {
        noisy = add_awgn(*clean, {parse_ratio(sigma_text), noise_seed});
      } else {
        throw std::invalid_argument("denoise needs --in or --clean");
      }
      if (!noisy_out.empty()) save_pgm(noisy, noisy_out);
      const GrayImage result = denoise(noisy, params, denoise_cfg);
      save_pgm(result, out_path);
      if (clean) {
        out << "psnr_noisy=" << fixed(psnr(*clean, noisy), 4) << " psnr_denoised=" << fixed(psnr(*clean, result), 4)
            << '\n';
      }
    } else if (*eval_cmd) {
      EvalOptions opts;
      opts.images = eval_images;
      opts.sigma = parse_ratio(eval_sigma);
      opts.seed = eval_seed;
      opts.ista = eval_cfg;
      if (eval_udht) opts.models.push_back({"udht", init_udht<double>(udht_levels)});
      for (const auto& m : eval_models) {
        opts.models.push_back({std::filesystem::path(m).stem().string(), read_model(m).params});
      }
      out << eval_table(opts);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace cnld
