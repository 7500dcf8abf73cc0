// msk_pinn: command-line front end over the C API.
//
//   msk_pinn generate        simulate trials (CSV + dataset.ini)
//   msk_pinn train           fit the configured method on a dataset
//   msk_pinn eval            score a checkpoint on a split manifest
//   msk_pinn sweep-datasize  nRMSE vs training fraction for every method
//   msk_pinn ablate          physics-informed vs MSE-only, paired by seed
//
// Output goes to --out, else $MSK_PINN_OUT/<command>, else
// <config output_dir>/<command>.

#include "msk_pinn.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

struct Globals {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

struct ConfigDeleter {
  void operator()(msk_config* c) const { msk_config_free(c); }
};
struct DatasetDeleter {
  void operator()(msk_dataset* d) const { msk_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(msk_model* m) const { msk_model_free(m); }
};
using ConfigPtr = std::unique_ptr<msk_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<msk_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<msk_model, ModelDeleter>;

class Failure : public std::runtime_error {
public:
  Failure(msk_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  msk_status status;
};

void check(msk_status s, const char* step) {
  if (s != MSK_OK)
    throw Failure(s, std::string(step) + ": " + msk_status_name(s) + ": " + msk_last_error());
}

ConfigPtr load_config(const Globals& g) {
  msk_config* raw = nullptr;
  if (g.config_path.empty())
    check(msk_config_preset("wrist", &raw), "config");
  else
    check(msk_config_load(g.config_path.c_str(), &raw), "config");
  ConfigPtr cfg(raw);
  if (g.seed)
    check(msk_config_set_seed(cfg.get(), *g.seed), "config");
  return cfg;
}

std::string output_root(const msk_config* cfg) {
  if (const char* env = std::getenv("MSK_PINN_OUT"); env && *env)
    return env;
  return msk_config_output_dir(cfg);
}

std::string out_dir(const Globals& g, const msk_config* cfg, const char* command) {
  if (!g.out.empty())
    return g.out;
  return (std::filesystem::path(output_root(cfg)) / command).string();
}

DatasetPtr load_dataset(const std::string& dir) {
  msk_dataset* raw = nullptr;
  check(msk_dataset_load(dir.c_str(), &raw), "dataset");
  return DatasetPtr(raw);
}

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed EMG-to-force/angle regression: data generation, training and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Experiment INI file (default: wrist preset)");
  app.add_option("--out", g.out, "Output directory for this command");
  app.add_option("--seed", g.seed, "Run seed; overrides [experiment] seed");
  app.add_option("--jobs", g.jobs, "Worker threads for sweeps and ablations")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", std::string(msk_version()));

  auto* gen = app.add_subcommand("generate", "Simulate trials and write CSVs plus dataset.ini");
  std::optional<std::uint64_t> dataset_seed;
  gen->add_option("--dataset-seed", dataset_seed, "Overrides [dataset] seed");

  auto* train = app.add_subcommand("train", "Train the configured method");
  std::string train_data;
  train->add_option("--dataset", train_data, "Directory written by generate")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split manifest");
  std::string ckpt, eval_data, split_path;
  eval->add_option("--checkpoint", ckpt, "Checkpoint directory")->required();
  eval->add_option("--dataset", eval_data, "Directory written by generate")->required();
  eval->add_option("--split", split_path, "Split manifest (split.csv from train)")->required();

  auto* sweep = app.add_subcommand("sweep-datasize", "Test nRMSE against training-set fraction");
  std::string sweep_data;
  sweep->add_option("--dataset", sweep_data, "Existing dataset (default: generate one)");

  auto* ablate = app.add_subcommand("ablate", "Physics-informed vs MSE-only on identical seeds");
  std::string ablate_data;
  ablate->add_option("--dataset", ablate_data, "Existing dataset (default: generate one)");

  CLI11_PARSE(app, argc, argv);
  msk_set_log_callback(print_line, nullptr);

  try {
    auto cfg = load_config(g);
    if (*gen) {
      if (dataset_seed)
        check(msk_config_set_dataset_seed(cfg.get(), *dataset_seed), "config");
      const auto out = out_dir(g, cfg.get(), "generate");
      check(msk_generate(cfg.get(), out.c_str(), nullptr), "generate");
      std::cout << "dataset written to " << out << "\n";
    } else if (*train) {
      auto ds = load_dataset(train_data);
      const auto out = out_dir(g, cfg.get(), "train");
      check(msk_train(cfg.get(), ds.get(), out.c_str(), nullptr), "train");
      std::cout << "checkpoint written to " << (std::filesystem::path(out) / "checkpoint").string() << "\n";
    } else if (*eval) {
      auto ds = load_dataset(eval_data);
      msk_model* raw = nullptr;
      check(msk_model_load(ckpt.c_str(), &raw), "checkpoint");
      ModelPtr model(raw);
      const auto out = out_dir(g, cfg.get(), "eval");
      double nrmse = 0.0;
      check(msk_eval(model.get(), ds.get(), split_path.c_str(), out.c_str(), &nrmse), "eval");
      std::cout << "report written to " << (std::filesystem::path(out) / "report.csv").string() << "\n";
    } else if (*sweep) {
      DatasetPtr ds = sweep_data.empty() ? DatasetPtr() : load_dataset(sweep_data);
      const auto out = out_dir(g, cfg.get(), "sweep-datasize");
      check(msk_sweep_datasize(cfg.get(), ds.get(), out.c_str(), g.jobs), "sweep-datasize");
    } else if (*ablate) {
      DatasetPtr ds = ablate_data.empty() ? DatasetPtr() : load_dataset(ablate_data);
      const auto out = out_dir(g, cfg.get(), "ablate");
      check(msk_ablate(cfg.get(), ds.get(), out.c_str(), g.jobs), "ablate");
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    return f.status == MSK_ERR_PARTIAL ? 3 : 1;
  }
  return 0;
}
