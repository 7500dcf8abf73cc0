#include "msk_pinn.h"

#include "msk/config.hpp"
#include "msk/error.hpp"
#include "msk/experiment.hpp"
#include "msk/io.hpp"

#include <cstring>
#include <limits>
#include <mutex>
#include <new>
#include <string>

struct msk_config {
  msk::config::ExperimentConfig cfg;
};

struct msk_dataset {
  msk::sim::Dataset ds;
};

struct msk_model {
  msk::exp::TrainedModel model;
};

namespace {

thread_local std::string last_error;

std::mutex log_mu;
msk_log_fn log_fn = nullptr;
void* log_user = nullptr;

void emit(const std::string& line) {
  std::lock_guard lock(log_mu);
  if (log_fn)
    log_fn(line.c_str(), log_user);
}

msk_status fail(msk_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <class F>
msk_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const msk::ShapeError& e) {
    return fail(MSK_ERR_SHAPE, e.what());
  } catch (const msk::NumericError& e) {
    return fail(MSK_ERR_NUMERIC, e.what());
  } catch (const msk::InvalidArgument& e) {
    return fail(MSK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const msk::IoError& e) {
    return fail(MSK_ERR_IO, e.what());
  } catch (const msk::InvariantError& e) {
    return fail(MSK_ERR_INVARIANT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MSK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MSK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MSK_ERR_INTERNAL, "unknown exception");
  }
}

#define MSK_REQUIRE(cond, what)                                                                                       \
  do {                                                                                                                 \
    if (!(cond))                                                                                                       \
      return fail(MSK_ERR_INVALID_ARGUMENT, what);                                                                     \
  } while (0)

} // namespace

namespace {

template <class F>
msk_status suite(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, F&& body) {
  MSK_REQUIRE(cfg && out_dir, "null argument");
  return guarded([&] {
    const std::filesystem::path out(out_dir);
    msk::sim::Dataset generated;
    const msk::sim::Dataset* data = ds ? &ds->ds : nullptr;
    if (!data) {
      generated = msk::exp::generate(cfg->cfg, out / "dataset", emit);
      data = &generated;
    }
    const std::size_t failures = body(*data, out);
    if (failures > 0)
      return fail(MSK_ERR_PARTIAL, std::to_string(failures) + " run(s) failed; see the CSV in " + out.string());
    return MSK_OK;
  });
}


} // namespace

extern "C" {

const char* msk_version(void) { return "1.0.0"; }

const char* msk_last_error(void) { return last_error.c_str(); }

const char* msk_status_name(msk_status status) {
  switch (status) {
  case MSK_OK:
    return "ok";
  case MSK_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case MSK_ERR_SHAPE:
    return "shape mismatch";
  case MSK_ERR_NUMERIC:
    return "numeric failure";
  case MSK_ERR_IO:
    return "i/o error";
  case MSK_ERR_INVARIANT:
    return "invariant violation";
  case MSK_ERR_INTERNAL:
    return "internal error";
  case MSK_ERR_PARTIAL:
    return "some runs failed";
  }
  return "unknown status";
}

void msk_set_log_callback(msk_log_fn fn, void* user) {
  std::lock_guard lock(log_mu);
  log_fn = fn;
  log_user = user;
}

msk_status msk_config_preset(const char* preset, msk_config** out) {
  MSK_REQUIRE(preset && out, "msk_config_preset: null argument");
  return guarded([&] {
    *out = new msk_config{msk::config::preset(preset)};
    return MSK_OK;
  });
}

msk_status msk_config_load(const char* path, msk_config** out) {
  MSK_REQUIRE(path && out, "msk_config_load: null argument");
  return guarded([&] {
    *out = new msk_config{msk::config::load(path)};
    return MSK_OK;
  });
}

msk_status msk_config_parse(const char* ini_text, msk_config** out) {
  MSK_REQUIRE(ini_text && out, "msk_config_parse: null argument");
  return guarded([&] {
    *out = new msk_config{msk::config::parse(ini_text)};
    return MSK_OK;
  });
}

msk_status msk_config_set_seed(msk_config* cfg, uint64_t seed) {
  MSK_REQUIRE(cfg, "msk_config_set_seed: null config");
  cfg->cfg.seed = seed;
  return MSK_OK;
}

msk_status msk_config_set_dataset_seed(msk_config* cfg, uint64_t seed) {
  MSK_REQUIRE(cfg, "msk_config_set_dataset_seed: null config");
  cfg->cfg.dataset.seed = seed;
  return MSK_OK;
}

const char* msk_config_output_dir(const msk_config* cfg) { return cfg ? cfg->cfg.output_dir.c_str() : ""; }

msk_status msk_config_set_output_dir(msk_config* cfg, const char* dir) {
  MSK_REQUIRE(cfg && dir, "msk_config_set_output_dir: null argument");
  cfg->cfg.output_dir = dir;
  return MSK_OK;
}

msk_status msk_config_to_ini(const msk_config* cfg, char** out) {
  MSK_REQUIRE(cfg && out, "msk_config_to_ini: null argument");
  return guarded([&] {
    const auto text = msk::config::to_ini(cfg->cfg);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    return MSK_OK;
  });
}

void msk_config_free(msk_config* cfg) { delete cfg; }

void msk_string_free(char* s) { delete[] s; }

msk_status msk_generate(const msk_config* cfg, const char* out_dir, msk_dataset** out) {
  MSK_REQUIRE(cfg && out_dir, "msk_generate: null argument");
  return guarded([&] {
    auto ds = msk::exp::generate(cfg->cfg, out_dir, emit);
    msk::io::write_file(std::filesystem::path(out_dir) / "config.ini", msk::config::to_ini(cfg->cfg));
    if (out)
      *out = new msk_dataset{std::move(ds)};
    return MSK_OK;
  });
}

msk_status msk_dataset_load(const char* dir, msk_dataset** out) {
  MSK_REQUIRE(dir && out, "msk_dataset_load: null argument");
  return guarded([&] {
    *out = new msk_dataset{msk::exp::load_dataset(dir)};
    return MSK_OK;
  });
}

size_t msk_dataset_trial_count(const msk_dataset* ds) { return ds ? ds->ds.trials.size() : 0; }

size_t msk_dataset_muscle_count(const msk_dataset* ds) { return ds ? ds->ds.config.muscles() : 0; }

void msk_dataset_free(msk_dataset* ds) { delete ds; }

msk_status msk_train(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, msk_model** out) {
  MSK_REQUIRE(cfg && ds && out_dir, "msk_train: null argument");
  return guarded([&] {
    auto r = msk::exp::train(cfg->cfg, ds->ds, out_dir, emit);
    if (out)
      *out = new msk_model{std::move(r.model)};
    return MSK_OK;
  });
}

msk_status msk_model_save(const msk_model* model, const char* dir) {
  MSK_REQUIRE(model && dir, "msk_model_save: null argument");
  return guarded([&] {
    msk::exp::save_checkpoint(model->model, dir);
    return MSK_OK;
  });
}

msk_status msk_model_load(const char* dir, msk_model** out) {
  MSK_REQUIRE(dir && out, "msk_model_load: null argument");
  return guarded([&] {
    *out = new msk_model{msk::exp::load_checkpoint(dir)};
    return MSK_OK;
  });
}

void msk_model_free(msk_model* model) { delete model; }

msk_status msk_eval(const msk_model* model, const msk_dataset* ds, const char* split_path, const char* out_dir,
                    double* mean_nrmse) {
  MSK_REQUIRE(model && ds && split_path && out_dir, "msk_eval: null argument");
  return guarded([&] {
    const auto report = msk::exp::eval(model->model, ds->ds, msk::io::read_file(split_path), out_dir, emit);
    if (mean_nrmse)
      *mean_nrmse = report.mean_nrmse ? *report.mean_nrmse : std::numeric_limits<double>::quiet_NaN();
    return MSK_OK;
  });
}


msk_status msk_sweep_datasize(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, size_t jobs) {
  return suite(cfg, ds, out_dir, [&](const msk::sim::Dataset& d, const std::filesystem::path& out) {
    return msk::exp::sweep_datasize(cfg->cfg, d, out, jobs, emit);
  });
}

msk_status msk_ablate(const msk_config* cfg, const msk_dataset* ds, const char* out_dir, size_t jobs) {
  return suite(cfg, ds, out_dir, [&](const msk::sim::Dataset& d, const std::filesystem::path& out) {
    return msk::exp::ablate(cfg->cfg, d, out, jobs, emit);
  });
}

} // extern "C"
