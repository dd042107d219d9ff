#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "socialego/body_model.hpp"
#include "socialego/nn/layers.hpp"

namespace socialego {

using LatentCode = Eigen::VectorXd;

// Diagonal Gaussian q(z | P); sigma is a standard deviation.
struct GaussianPosterior {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

struct VaeConfig {
  int frames = 60;
  int pose_width = pose_width_for(kDefaultJointCount);
  int latent_dim = 256;
  int layers = 9;
  int heads = 4;
  int ff_hidden = 0;  // 0 means 4 * latent_dim
};

// Attention-based sequence VAE. The encoder reads F frame tokens plus two
// learned distribution tokens and emits (mu, log-variance); the decoder
// cross-attends f* zero query tokens (plus positional encoding) against a
// single memory token projected from z.
class VaeModel {
 public:
  VaeModel(const VaeConfig& config, BodyModel body, std::uint64_t seed);

  const VaeConfig& config() const { return config_; }
  const BodyModel& body() const { return body_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // Per-channel feature normalization applied before the encoder and undone
  // after the decoder.
  const nn::RowVector& feature_mean() const { return mean_; }
  const nn::RowVector& feature_scale() const { return scale_; }
  void set_normalization(nn::RowVector mean, nn::RowVector scale);

  GaussianPosterior encode(const PoseSequence& seq) const;
  PoseSequence decode(const LatentCode& z, int frames, double fps = 30.0) const;

  struct EncoderVars {
    nn::Var mu;
    nn::Var logvar;
  };
  // normalized: batch*F rows of normalized features.
  EncoderVars encode_batch(const nn::Context& ctx, const nn::Matrix& normalized, int batch) const;
  // z: batch x D. Returns batch*frames rows of normalized features.
  nn::Var decode_batch(const nn::Context& ctx, nn::Var z, int batch, int frames) const;

  nn::Matrix normalize(const PoseSequence& seq) const;
  nn::Matrix denormalize(const nn::Matrix& normalized) const;

  std::string encoder_hash() const { return store_.hash("encoder."); }
  std::string decoder_hash() const { return store_.hash("decoder."); }

 private:
  void check_sequence(const PoseSequence& seq) const;

  VaeConfig config_;
  BodyModel body_;
  nn::ParameterStore store_;
  nn::RowVector mean_, scale_;

  // encoder
  nn::Linear enc_in_;
  nn::ParameterStore::Id mu_token_ = 0, logvar_token_ = 0;
  std::vector<nn::EncoderBlock> enc_blocks_;
  nn::LayerNorm enc_norm_;
  nn::Linear mu_head_, logvar_head_;
  // decoder
  nn::Linear dec_memory_;
  std::vector<nn::DecoderBlock> dec_blocks_;
  nn::LayerNorm dec_norm_;
  nn::Linear dec_out_;
};

// z = mu + sigma * rho.
LatentCode reparameterize(const GaussianPosterior& posterior, const Eigen::VectorXd& rho);

// Closed-form KL(N(mu, sigma^2) || N(0, I)).
double gaussian_kl(const GaussianPosterior& posterior);

struct ElboWeights {
  double kl_weight = 1e-4;
  double fk_weight = 1.0;
};

struct ElboResult {
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  nn::Matrix grad_prediction;  // F x V, w.r.t. raw pose parameters
  Eigen::VectorXd grad_mu;
  Eigen::VectorXd grad_sigma;
};

// loss = recon + kl_weight * KL where recon is the MSE on normalized pose
// parameters plus fk_weight times the MSE of forward-kinematics joints.
// prediction holds raw (un-normalized) pose parameters, F x V.
ElboResult elbo_loss(const PoseSequence& target, const nn::Matrix& prediction, const GaussianPosterior& posterior,
                     const ElboWeights& weights, const VaeModel& model);

// Tape-level ELBO used in training; pred_normalized has batch*F rows.
struct ElboVars {
  nn::Var total, recon, kl;
};
ElboVars elbo_terms(nn::Tape& tape, const VaeModel& model, nn::Var pred_normalized, const nn::Matrix& target_normalized,
                    const nn::Matrix& target_joints, nn::Var mu, nn::Var logvar, const ElboWeights& weights);

struct VaeTrainConfig {
  int steps = 1000;
  int batch = 64;
  double lr = 1e-4;
  double weight_decay = 0.01;
  ElboWeights weights;
  bool sample_latent = true;  // false trains on z = mu
  bool lr_decay = false;      // cosine decay of lr to zero over the run
  std::uint64_t seed = 0;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<double> loss;
  std::vector<double> recon;
  std::vector<double> kl;
};

// Per-channel mean and standard deviation (floored) over every frame.
void fit_normalization(VaeModel& model, std::span<const PoseSequence> dataset);

VaeTrainResult train_vae(std::span<const PoseSequence> dataset, const VaeConfig& config,
                         const VaeTrainConfig& train, const BodyModel& body);

// Continues training an existing model in place; returns per-step losses.
VaeTrainResult train_vae(VaeModel model, std::span<const PoseSequence> dataset, const VaeTrainConfig& train);

}  // namespace socialego
