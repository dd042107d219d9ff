#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socialego/conditioning.hpp"
#include "socialego/nn/layers.hpp"
#include "socialego/vae.hpp"

namespace socialego {

// Linear beta schedule. Timesteps are 1-based: t in [1, T].
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double alpha_bar_at(int t) const { return alpha_bar[static_cast<size_t>(t - 1)]; }
};

NoiseSchedule make_noise_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

// Closed-form jump z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
LatentCode q_sample(const LatentCode& z0, int t, const Eigen::VectorXd& eps, const NoiseSchedule& sched);

// Descending timesteps, uniformly spaced from T down to 1.
std::vector<int> ddim_timesteps(int T, int steps);

// eps prediction for a single latent at timestep t.
using EpsPredictor = std::function<Eigen::VectorXd(const Eigen::VectorXd& z_t, int t)>;

// Deterministic (eta = 0) DDIM starting from the given z_T.
LatentCode ddim_sample_from(const EpsPredictor& predict, const NoiseSchedule& sched, int steps, LatentCode z_T);

// As above with z_T drawn from N(0, I) using seed.
LatentCode ddim_sample(const EpsPredictor& predict, const NoiseSchedule& sched, int steps, int dim,
                       std::uint64_t seed);

struct DenoiserConfig {
  int latent_dim = 256;
  int layers = 9;
  int heads = 4;
  int ff_hidden = 0;  // 0 means 4 * latent_dim
  bool use_interactee = true;
  bool use_scene = true;

  int condition_count() const { return static_cast<int>(use_interactee) + static_cast<int>(use_scene); }
};

// eps_psi(z_t, t, c): one latent token carrying a timestep embedding, with
// per-layer self-attention, cross-attention to the conditioning tokens, and a
// feed-forward block, plus a time-gated skip from z_t to the output.
// Operates on standardized latents.
class DenoiserModel {
 public:
  DenoiserModel(const DenoiserConfig& config, std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // Per-dimension standardization of VAE latents.
  const Eigen::VectorXd& latent_mean() const { return latent_mean_; }
  const Eigen::VectorXd& latent_scale() const { return latent_scale_; }
  void set_latent_normalization(Eigen::VectorXd mean, Eigen::VectorXd scale);
  Eigen::VectorXd standardize(const LatentCode& z) const;
  LatentCode destandardize(const Eigen::VectorXd& s) const;

  // z_t: batch x D; cond: batch*K rows (ignored when K = 0).
  nn::Var forward(const nn::Context& ctx, nn::Var z_t, std::span<const int> t, nn::Var cond, int batch) const;

  Eigen::VectorXd predict_eps(const Eigen::VectorXd& z_t, int t, const ConditionBundle& cond) const;

  // Throws InvalidArgument if the bundle's sources differ from the model's.
  void check_condition(const ConditionBundle& cond) const;

  std::string hash() const { return store_.hash("denoiser."); }

 private:
  DenoiserConfig config_;
  nn::ParameterStore store_;
  Eigen::VectorXd latent_mean_, latent_scale_;

  nn::Linear input_;
  nn::Linear time_up_, time_down_;
  nn::LayerNorm cond_norm_;
  nn::ParameterStore::Id cond_type_ = 0;
  std::vector<nn::DecoderBlock> blocks_;
  nn::LayerNorm out_norm_;
  nn::Linear output_;
  nn::Linear skip_gate_;
};

// Samples a standardized latent with the model and maps it back to VAE
// latent space.
LatentCode ddim_sample(const DenoiserModel& model, const NoiseSchedule& sched, int steps, const ConditionBundle& cond,
                       std::uint64_t seed);

// Batched loss for arbitrary predictors: mean over rows of |eps - eps_hat|^2.
// Rows of z0 and eps are samples; t holds one timestep per row.
double diffusion_loss(const nn::Matrix& z0, std::span<const int> t, const nn::Matrix& eps, const NoiseSchedule& sched,
                      const EpsPredictor& predict);

// Same loss through the model; accumulates dL/dpsi into model.parameters().
// cond has batch*K rows (empty when K = 0). Conditioning enters as a
// constant, so no gradient can reach the encoders that produced it.
double diffusion_loss(const nn::Matrix& z0, std::span<const int> t, const nn::Matrix& eps, const nn::Matrix& cond,
                      DenoiserModel& model, const NoiseSchedule& sched);

nn::Var diffusion_loss_var(const nn::Context& ctx, const DenoiserModel& model, const nn::Matrix& z0,
                           std::span<const int> t, const nn::Matrix& eps, nn::Var cond, const NoiseSchedule& sched);

// One training example: the wearer target plus its conditioning sources.
struct DenoiserExample {
  PoseSequence wearer;
  PoseSequence interactee;
  ScenePointCloud scene;
};

struct DenoiserTrainConfig {
  int steps = 1000;
  int batch = 128;
  double lr = 1e-4;
  double weight_decay = 0.01;
  int diffusion_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  // Joint denoiser + scene-encoder steps before the scene encoder is frozen.
  int scene_warmup_steps = 0;
  int scene_warmup_batch = 16;
  bool z0_from_mean = true;
  bool lr_decay = true;  // cosine decay of lr to zero over the frozen phase
  std::uint64_t seed = 0;
};

// Parameter hashes of the conditioning encoders, taken when the frozen phase
// starts and after it ends.
struct FreezeReport {
  std::string vae_encoder_before, vae_encoder_after;
  std::string scene_before, scene_after;

  bool holds() const { return vae_encoder_before == vae_encoder_after && scene_before == scene_after; }
};

struct DenoiserTrainResult {
  DenoiserModel model;
  std::optional<SceneEncoder> scene_encoder;
  std::vector<double> loss;
  FreezeReport freeze;
};

DenoiserTrainResult train_denoiser(std::span<const DenoiserExample> examples, const VaeModel& vae,
                                   std::optional<SceneEncoder> scene_encoder, const DenoiserConfig& config,
                                   const DenoiserTrainConfig& train);

}  // namespace socialego
