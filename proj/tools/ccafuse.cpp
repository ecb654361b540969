#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ccafuse/errors.hpp"
#include "ccafuse/pipeline.hpp"

extern char** environ;

namespace {

using ccafuse::CommandResult;
using ccafuse::RunOptions;

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  int jobs = 0;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "random seed (overrides run.seed)");
  cmd->add_option("--folds", f.folds, "number of folds (simulate) or folds to process")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", f.jobs, "parallel fold workers")->check(CLI::NonNegativeNumber);
}

RunOptions resolve(const Flags& f) {
  RunOptions opts;
  std::optional<std::filesystem::path> path;
  if (!f.config.empty()) path = f.config;
  opts.config = ccafuse::Config::load(path);
  opts.config.apply_env(environ);
  opts.out = f.out;
  opts.seed = f.seed;
  opts.folds = f.folds;
  opts.jobs = f.jobs > 0 ? f.jobs : static_cast<int>(opts.config.get_int("run", "jobs", 1));
  std::filesystem::create_directories(opts.out);
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CCA embeddings with deflation, penalized solvers and downstream predictors"};
  app.require_subcommand(1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    CommandResult (*run)(const RunOptions&);
  };
  const Command commands[] = {
      {"simulate", "generate a synthetic two-modality dataset with folds", ccafuse::cmd_simulate},
      {"embed", "fit embeddings per fold with validation tuning", ccafuse::cmd_embed},
      {"predict-latent", "MLP prediction of the latent variable", ccafuse::cmd_predict_latent},
      {"survival", "Cox survival prediction from embeddings", ccafuse::cmd_survival},
      {"report", "aggregate per-fold outputs", ccafuse::cmd_report},
  };
  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_flags(sub, flags);
    sub->callback([&chosen, &c] { chosen = &c; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunOptions opts = resolve(flags);
    const CommandResult r = chosen->run(opts);
    if (r.folds_failed > 0)
      std::cerr << chosen->name << ": " << r.folds_failed << " of "
                << r.folds_ok + r.folds_failed << " folds failed\n";
    // nothing usable came out of the run
    if (r.folds_failed > 0 && r.folds_ok == 0) return static_cast<int>(ccafuse::ErrorClass::numerical);
    return 0;
  } catch (const ccafuse::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.error_class());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ccafuse::ErrorClass::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ccafuse::ErrorClass::numerical);
  }
}
