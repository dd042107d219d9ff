#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "socialego/conditioning.hpp"
#include "socialego/diffusion.hpp"
#include "socialego/synth_data.hpp"
#include "socialego/vae.hpp"

namespace socialego {

// Every hyperparameter of the pipeline. Defaults are the full-size model;
// desk-scale runs override latent_dim, layers and step counts.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0};  // training seeds for ablations

  // data
  std::string scenario = "mixed";
  int train_episodes = 200;
  int test_episodes = 50;
  int frames = 60;
  double fps = 30.0;
  double kappa = 0.9;
  int lag = 10;
  int scene_points = 1024;

  // model
  int latent_dim = 256;
  int vae_layers = 9;
  int denoiser_layers = 9;
  int heads = 4;
  int ff_hidden = 0;  // 0 means 4 * latent_dim
  std::vector<int> scene_widths{64, 128, 256};
  int scene_encoder_points = 1024;

  // VAE training
  int vae_steps = 2000;
  int vae_batch = 64;
  double vae_lr = 1e-4;
  double kl_weight = 1e-4;
  double fk_weight = 1.0;
  double weight_decay = 0.01;

  // denoiser training
  int denoiser_steps = 2000;
  int denoiser_batch = 128;
  double denoiser_lr = 1e-4;
  bool denoiser_lr_decay = true;  // cosine decay to zero over the frozen phase
  int diffusion_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int scene_warmup_steps = 200;
  int scene_warmup_batch = 16;

  // conditioning and evaluation
  bool use_scene = true;
  bool use_interactee = true;
  int condition_offset = 0;  // interactee window offset used by train/evaluate
  int future_offset = 30;    // offset compared against 0 by the future ablation
  int inference_steps = 20;
  int samples_per_input = 1;
  double interactee_noise = 0.0;
  std::string gaze_test = "line-of-sight";

  // Recording length needed by the largest interactee offset.
  int record_frames() const;

  // Every violated field, empty when valid.
  std::vector<std::string> violations() const;
  // Throws ConfigError listing every violation.
  void validate() const;

  // key: value lines in declaration order.
  std::string to_text() const;
  std::vector<std::pair<std::string, std::string>> to_pairs() const;

  // Applies one key/value; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();

  VaeConfig vae_config() const;
  VaeTrainConfig vae_train_config(std::uint64_t train_seed) const;
  DenoiserConfig denoiser_config() const;
  DenoiserTrainConfig denoiser_train_config(std::uint64_t train_seed) const;
  SceneEncoderConfig scene_encoder_config() const;
  SynthOptions synth_options() const;
  NoiseSchedule schedule() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses "key: value" text ('#' starts a comment). Unknown keys and bad
// values are collected and reported together.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace socialego
