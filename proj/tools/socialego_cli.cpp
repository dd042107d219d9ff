// Command-line front end: one subcommand per pipeline stage.
//
// Config resolution: built-in defaults, then --config FILE, then any
// --<key> VALUE flag (every ExperimentConfig key is accepted).
//
// Exit codes: 0 success, 2 config error, 3 missing input, 4 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

#include "socialego/errors.hpp"
#include "socialego/pipeline.hpp"

namespace se = socialego;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitRuntime = 4;

struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
};

se::ExperimentConfig resolve(const Overrides& o) {
  se::ExperimentConfig c;
  if (!o.config_file.empty()) {
    if (!se::fs::exists(o.config_file)) throw se::PreconditionError("config file not found: " + o.config_file);
    c = se::load_config(o.config_file);
  }
  std::vector<std::string> bad;
  for (const auto& [k, v] : o.values) {
    try {
      c.set(k, v);
    } catch (const se::ConfigError& e) {
      for (const auto& s : e.violations()) bad.push_back(s);
    }
  }
  for (const auto& s : c.violations()) bad.push_back(s);
  if (!bad.empty()) throw se::ConfigError(bad);
  return c;
}

void print_summary(const se::EvaluationResult& r) {
  std::printf("sequences %zu, samples per input %d\n", r.per_sequence.size(), r.samples_per_input);
  std::printf("best-of-k: mpjpe %.3f mm, orientation %.4f, translation %.3f mm, acceleration %.3f mm/s^2\n",
              r.best_of_k.mpjpe, r.best_of_k.orientation_error, r.best_of_k.translation_error,
              r.best_of_k.acceleration_error);
}

void print_table(const se::ReportTable& t) {
  for (size_t c = 0; c < t.columns.size(); ++c) std::printf("%s%s", c ? "," : "", t.columns[c].c_str());
  std::printf("\n");
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < row.size(); ++c) std::printf("%s%s", c ? "," : "", row[c].c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Socially conditioned egocentric motion generation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(se::software_version()));

  Overrides overrides;
  app.add_option("--config", overrides.config_file, "Config file of key: value lines");
  for (const auto& key : se::ExperimentConfig::keys()) {
    std::string dashed = key;
    for (char& ch : dashed)
      if (ch == '_') ch = '-';
    std::string names = "--" + key;
    if (dashed != key) names += ",--" + dashed;
    app.add_option_function<std::string>(
           names, [&overrides, key](const std::string& v) { overrides.values[key] = v; },
           "Override config key " + key)
        ->group("Config overrides");
  }

  std::string train_out, test_out, data, out, scene_out, report, predictions, axis, train_data, test_data;
  se::ModelPaths models;

  auto* gen = app.add_subcommand("generate-data", "Generate synthetic train and test datasets");
  gen->add_option("--train-out", train_out, "Training dataset path")->required();
  gen->add_option("--test-out", test_out, "Test dataset path");

  auto* tvae = app.add_subcommand("train-vae", "Train the motion VAE");
  tvae->add_option("--data", data, "Training dataset")->required();
  tvae->add_option("--out", out, "VAE checkpoint to write")->required();

  auto* tden = app.add_subcommand("train-denoiser", "Train the latent denoiser with a frozen VAE");
  tden->add_option("--data", data, "Training dataset")->required();
  tden->add_option("--vae", models.vae, "VAE checkpoint")->required();
  tden->add_option("--out", out, "Denoiser checkpoint to write")->required();
  tden->add_option("--scene-out", scene_out, "Scene-encoder checkpoint to write (when use_scene)");

  auto add_models = [&](CLI::App* sub, bool denoiser_required) {
    sub->add_option("--vae", models.vae, "VAE checkpoint")->required();
    auto* d = sub->add_option("--denoiser", models.denoiser, "Denoiser checkpoint");
    if (denoiser_required) d->required();
    sub->add_option("--scene", models.scene, "Scene-encoder checkpoint");
  };

  auto* smp = app.add_subcommand("sample", "Generate wearer motion for every episode of a dataset");
  add_models(smp, true);
  smp->add_option("--data", data, "Dataset providing interactee and scene")->required();
  smp->add_option("--out", out, "Generated sequences (dataset format)")->required();

  auto* ev = app.add_subcommand("evaluate", "Score a model, or a predictions file, against a dataset");
  ev->add_option("--vae", models.vae, "VAE checkpoint");
  ev->add_option("--denoiser", models.denoiser, "Denoiser checkpoint");
  ev->add_option("--scene", models.scene, "Scene-encoder checkpoint");
  ev->add_option("--predictions", predictions, "Predictions file written by sample (instead of models)");
  ev->add_option("--data", data, "Test dataset")->required();
  ev->add_option("--report", report, "Report prefix (writes .txt and .csv)");

  auto* abl = app.add_subcommand("ablate", "Per-stratum or per-variant result tables");
  abl->add_option("--axis", axis, "distance, gaze30, gaze60, future or conditioning")
      ->required()
      ->check(CLI::IsMember({"distance", "gaze30", "gaze60", "future", "conditioning"}));
  add_models(abl, false);
  abl->add_option("--train-data", train_data, "Training dataset (future, conditioning)");
  abl->add_option("--test-data", test_data, "Test dataset")->required();
  abl->add_option("--report", report, "Report prefix (writes .txt and .csv)");

  auto* show = app.add_subcommand("show-config", "Print the resolved configuration");

  for (auto* sub : {gen, tvae, tden, smp, ev, abl, show}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const se::ExperimentConfig config = resolve(overrides);
    if (*gen) {
      se::cmd_generate_data(config, train_out, test_out);
    } else if (*tvae) {
      const double loss = se::cmd_train_vae(config, data, out);
      std::printf("final loss %.6f\n", loss);
    } else if (*tden) {
      se::cmd_train_denoiser(config, data, models.vae, out, scene_out);
    } else if (*smp) {
      se::cmd_sample(config, models, data, out);
    } else if (*ev) {
      if (!predictions.empty())
        print_summary(se::cmd_evaluate_predictions(config, predictions, data, report));
      else
        print_summary(se::cmd_evaluate(config, models, data, report));
    } else if (*abl) {
      print_table(se::cmd_ablate(config, axis, models, train_data, test_data, report));
    } else if (*show) {
      std::cout << config.to_text();
    }
    return 0;
  } catch (const se::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kExitConfig;
  } catch (const se::PreconditionError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kExitMissing;
  } catch (const se::DatasetError& e) {
    std::cerr << (e.kind() == se::DatasetError::Kind::Io ? "missing input: " : "dataset error: ") << e.what()
              << "\n";
    return e.kind() == se::DatasetError::Kind::Io ? kExitMissing : kExitRuntime;
  } catch (const se::CheckpointError& e) {
    std::cerr << (e.kind() == se::CheckpointError::Kind::Io ? "missing input: " : "checkpoint error: ") << e.what()
              << "\n";
    return e.kind() == se::CheckpointError::Kind::Io ? kExitMissing : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
