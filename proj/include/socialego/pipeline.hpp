#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "socialego/checkpoint.hpp"
#include "socialego/config.hpp"
#include "socialego/evaluation.hpp"
#include "socialego/synth_data.hpp"

namespace socialego {

namespace fs = std::filesystem;

// A result table written as CSV and as an aligned text table. Both files
// start with the software version and the full configuration.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> info;  // extra key/value lines
  ReportTable table;
};

std::string render_text_report(const Report& report, const ExperimentConfig& config);
std::string render_csv_report(const Report& report, const ExperimentConfig& config);
// Writes <prefix>.txt and <prefix>.csv.
void write_report(const Report& report, const ExperimentConfig& config, const fs::path& prefix);

// Metric columns shared by every table.
std::vector<std::string> metric_columns();
std::vector<std::string> metric_cells(const MetricsReport& r);

// ---- building blocks ---------------------------------------------------------

// Train and test episodes for a config (seeds derived from config.seed).
std::vector<InteractionEpisode> make_train_episodes(const ExperimentConfig& config);
std::vector<InteractionEpisode> make_test_episodes(const ExperimentConfig& config);

// VAE training sequences: wearer windows and interactee windows at every
// offset the pipeline conditions on.
std::vector<PoseSequence> vae_training_sequences(std::span<const InteractionEpisode> episodes,
                                                 const ExperimentConfig& config);

VaeTrainResult fit_vae(std::span<const InteractionEpisode> episodes, const ExperimentConfig& config);

// A trained denoiser with its scene encoder (when used) and the interactee
// offset it was trained with.
struct TrainedDenoiser {
  DenoiserModel model;
  std::optional<SceneEncoder> scene;
  int condition_offset = 0;
  FreezeReport freeze;
  std::vector<double> loss;
};

TrainedDenoiser fit_denoiser(std::span<const InteractionEpisode> episodes, const VaeModel& vae,
                             const ExperimentConfig& config, std::uint64_t train_seed);

ModelStack make_stack(const VaeModel& vae, const TrainedDenoiser& d, const ExperimentConfig& config);
EvalOptions eval_options(const ExperimentConfig& config, int condition_offset);

// ---- commands ---------------------------------------------------------------------

void cmd_generate_data(const ExperimentConfig& config, const fs::path& train_out, const fs::path& test_out);

// Returns the final training loss.
double cmd_train_vae(const ExperimentConfig& config, const fs::path& train_data, const fs::path& vae_out);

// Writes the denoiser checkpoint, and the scene-encoder checkpoint when the
// config conditions on the scene.
void cmd_train_denoiser(const ExperimentConfig& config, const fs::path& train_data, const fs::path& vae_ckpt,
                        const fs::path& denoiser_out, const fs::path& scene_out);

struct ModelPaths {
  fs::path vae, denoiser, scene;  // scene may be empty
};

// Generated wearer windows, written as a dataset whose interactee and scene
// are the conditioning inputs.
void cmd_sample(const ExperimentConfig& config, const ModelPaths& models, const fs::path& data,
                const fs::path& out);

EvaluationResult cmd_evaluate(const ExperimentConfig& config, const ModelPaths& models, const fs::path& data,
                              const fs::path& report_prefix);

// Scores a predictions file (as written by cmd_sample) against a dataset.
EvaluationResult cmd_evaluate_predictions(const ExperimentConfig& config, const fs::path& predictions,
                                          const fs::path& data, const fs::path& report_prefix);

// axis: distance, gaze30, gaze60 (uses the given models), future or
// conditioning (trains the variants from train_data and the VAE, one run
// per entry of config.seeds).
ReportTable cmd_ablate(const ExperimentConfig& config, const std::string& axis, const ModelPaths& models,
                       const fs::path& train_data, const fs::path& test_data, const fs::path& report_prefix);

}  // namespace socialego
