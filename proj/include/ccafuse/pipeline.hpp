#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccafuse/config.hpp"
#include "ccafuse/simulate.hpp"

namespace ccafuse {

struct RunOptions {
  Config config;
  std::filesystem::path out = ".";
  int jobs = 1;
  std::optional<int> folds;
  std::optional<std::uint64_t> seed;
};

struct CommandResult {
  int folds_ok = 0;
  int folds_failed = 0;
};

/// Writes X.csv, Y.csv, Z.csv, Wx.csv, Wy.csv, folds.json, graph edge lists
/// (graph structure) and labels.csv (when simulate.survival is set).
CommandResult cmd_simulate(const RunOptions& opts);
/// Per fold: tune on the validation set, write the basis and metric reports.
CommandResult cmd_embed(const RunOptions& opts);
/// MLP latent-variable prediction from embeddings and from raw inputs.
CommandResult cmd_predict_latent(const RunOptions& opts);
/// Cox models on the embedded modalities, C-index on the test sets.
CommandResult cmd_survival(const RunOptions& opts);
/// Aggregates the per-fold outputs found in the output directory.
CommandResult cmd_report(const RunOptions& opts);

SimConfig sim_config_from(const Config& cfg, std::optional<std::uint64_t> seed,
                          std::optional<int> folds);

void write_folds(const std::filesystem::path& path, const std::vector<Fold>& folds);
std::vector<Fold> read_folds(const std::filesystem::path& path);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  int count = 0;
};
Summary summarize(const std::vector<double>& values);

std::string fold_name(int fold);

}  // namespace ccafuse
