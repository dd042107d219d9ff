#include "socialego/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "socialego/errors.hpp"

namespace socialego {

namespace {

using nn::Matrix;
using nn::Var;

// Channels that barely move in the data are scaled by at least this much.
constexpr double kMinFeatureScale = 0.05;

Matrix tiled_positions(int frames, int batch, int width) {
  std::vector<int> pos(frames);
  std::iota(pos.begin(), pos.end(), 0);
  const Matrix pe = nn::sinusoidal_encoding(pos, width);
  Matrix out(static_cast<Eigen::Index>(frames) * batch, width);
  for (int b = 0; b < batch; ++b) out.middleRows(static_cast<Eigen::Index>(b) * frames, frames) = pe;
  return out;
}

}  // namespace

VaeModel::VaeModel(const VaeConfig& config, BodyModel body, std::uint64_t seed)
    : config_(config), body_(std::move(body)) {
  body_.validate();
  if (config_.frames < 1) throw InvalidArgument("vae frames must be >= 1");
  if (config_.pose_width != body_.pose_width()) throw InvalidArgument("vae pose width does not match body model");
  if (config_.latent_dim < 1 || config_.layers < 1 || config_.heads < 1)
    throw InvalidArgument("vae dimensions must be positive");
  const int D = config_.latent_dim;
  const int V = config_.pose_width;
  const int hidden = config_.ff_hidden > 0 ? config_.ff_hidden : 4 * D;

  Rng rng(seed);
  enc_in_ = nn::Linear::create(store_, "encoder.input", V, D, rng);
  Matrix tok(1, D);
  for (int i = 0; i < D; ++i) tok(0, i) = 0.02 * rng.normal();
  mu_token_ = store_.add("encoder.mu_token", tok);
  for (int i = 0; i < D; ++i) tok(0, i) = 0.02 * rng.normal();
  logvar_token_ = store_.add("encoder.logvar_token", tok);
  for (int l = 0; l < config_.layers; ++l)
    enc_blocks_.push_back(nn::EncoderBlock::create(store_, "encoder.block" + std::to_string(l), D, config_.heads,
                                                   hidden, rng));
  enc_norm_ = nn::LayerNorm::create(store_, "encoder.norm", D);
  mu_head_ = nn::Linear::create(store_, "encoder.mu_head", D, D, rng);
  logvar_head_ = nn::Linear::create(store_, "encoder.logvar_head", D, D, rng, 0.1);

  dec_memory_ = nn::Linear::create(store_, "decoder.memory", D, D, rng);
  for (int l = 0; l < config_.layers; ++l)
    dec_blocks_.push_back(nn::DecoderBlock::create(store_, "decoder.block" + std::to_string(l), D, config_.heads,
                                                   hidden, rng));
  dec_norm_ = nn::LayerNorm::create(store_, "decoder.norm", D);
  dec_out_ = nn::Linear::create(store_, "decoder.output", D, V, rng);

  mean_ = nn::RowVector::Zero(V);
  scale_ = nn::RowVector::Ones(V);
}

void VaeModel::set_normalization(nn::RowVector mean, nn::RowVector scale) {
  if (mean.size() != config_.pose_width || scale.size() != config_.pose_width)
    throw InvalidArgument("normalization width mismatch");
  if ((scale.array() <= 0.0).any()) throw InvalidArgument("normalization scale must be positive");
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

void VaeModel::check_sequence(const PoseSequence& seq) const {
  if (seq.frame_count() != config_.frames || seq.width() != config_.pose_width)
    throw InvalidArgument("sequence shape " + std::to_string(seq.frame_count()) + "x" + std::to_string(seq.width()) +
                          " does not match model " + std::to_string(config_.frames) + "x" +
                          std::to_string(config_.pose_width));
  if (!seq.frames.allFinite()) throw InvalidArgument("sequence contains non-finite values");
}

Matrix VaeModel::normalize(const PoseSequence& seq) const {
  Matrix x = seq.frames.cast<double>();
  x.rowwise() -= mean_;
  x.array().rowwise() /= scale_.array();
  return x;
}

Matrix VaeModel::denormalize(const Matrix& normalized) const {
  Matrix x = normalized.array().rowwise() * scale_.array();
  x.rowwise() += mean_;
  return x;
}

VaeModel::EncoderVars VaeModel::encode_batch(const nn::Context& ctx, const Matrix& normalized, int batch) const {
  nn::Tape& t = ctx.tape;
  const int F = config_.frames;
  const int D = config_.latent_dim;
  if (normalized.rows() != static_cast<Eigen::Index>(batch) * F || normalized.cols() != config_.pose_width)
    throw InvalidArgument("encoder batch has wrong shape");

  Var frames = enc_in_(ctx, t.constant(normalized));
  frames = t.add(frames, t.constant(tiled_positions(F, batch, D)));
  const Var mu_tok = ctx.p(mu_token_);
  const Var lv_tok = ctx.p(logvar_token_);
  std::vector<Var> parts;
  parts.reserve(static_cast<size_t>(3 * batch));
  for (int b = 0; b < batch; ++b) {
    parts.push_back(mu_tok);
    parts.push_back(lv_tok);
    parts.push_back(t.rows(frames, b * F, F));
  }
  Var x = t.concat_rows(parts);
  for (const auto& blk : enc_blocks_) x = blk(ctx, x, batch, F + 2);
  x = enc_norm_(ctx, x);

  std::vector<int> mu_rows(batch), lv_rows(batch);
  for (int b = 0; b < batch; ++b) {
    mu_rows[b] = b * (F + 2);
    lv_rows[b] = b * (F + 2) + 1;
  }
  return {mu_head_(ctx, t.gather_rows(x, mu_rows)), logvar_head_(ctx, t.gather_rows(x, lv_rows))};
}

Var VaeModel::decode_batch(const nn::Context& ctx, Var z, int batch, int frames) const {
  nn::Tape& t = ctx.tape;
  if (frames < 1) throw InvalidArgument("decode needs at least one frame");
  const int D = config_.latent_dim;
  Var x = t.constant(tiled_positions(frames, batch, D));
  const Var memory = dec_memory_(ctx, z);
  for (const auto& blk : dec_blocks_) x = blk(ctx, x, memory, batch, frames, 1);
  return dec_out_(ctx, dec_norm_(ctx, x));
}

GaussianPosterior VaeModel::encode(const PoseSequence& seq) const {
  check_sequence(seq);
  nn::Tape tape;
  const nn::Context ctx{tape, store_};
  const auto out = encode_batch(ctx, normalize(seq), 1);
  GaussianPosterior post;
  post.mu = tape.value(out.mu).row(0).transpose();
  post.sigma = (0.5 * tape.value(out.logvar).row(0).transpose().array()).exp().matrix();
  return post;
}

PoseSequence VaeModel::decode(const LatentCode& z, int frames, double fps) const {
  if (frames < 1) throw InvalidArgument("decode needs at least one frame");
  if (z.size() != config_.latent_dim) throw InvalidArgument("latent width does not match model");
  nn::Tape tape;
  const nn::Context ctx{tape, store_};
  const Var out = decode_batch(ctx, tape.constant(z.transpose()), 1, frames);
  PoseSequence seq;
  seq.frames = denormalize(tape.value(out)).cast<float>();
  seq.fps = fps;
  return seq;
}

LatentCode reparameterize(const GaussianPosterior& posterior, const Eigen::VectorXd& rho) {
  if (rho.size() != posterior.mu.size() || posterior.sigma.size() != posterior.mu.size())
    throw InvalidArgument("reparameterize width mismatch");
  if ((posterior.sigma.array() <= 0.0).any()) throw InvalidArgument("sigma must be positive");
  return posterior.mu + posterior.sigma.cwiseProduct(rho);
}

double gaussian_kl(const GaussianPosterior& p) {
  return 0.5 * (p.mu.array().square() + p.sigma.array().square() - 1.0 - 2.0 * p.sigma.array().log()).sum();
}

ElboVars elbo_terms(nn::Tape& tape, const VaeModel& model, Var pred_normalized, const Matrix& target_normalized,
                    const Matrix& target_joints, Var mu, Var logvar, const ElboWeights& weights) {
  Var recon = tape.mse(pred_normalized, target_normalized);
  if (weights.fk_weight != 0.0) {
    const Var raw = tape.affine_const(pred_normalized, model.feature_scale(), model.feature_mean());
    const Var joints = tape.forward_kinematics(raw, model.body());
    recon = tape.add(recon, tape.scale(tape.mse(joints, target_joints), weights.fk_weight));
  }
  const Var kl = tape.gaussian_kl(mu, logvar);
  const Var total = tape.add(recon, tape.scale(kl, weights.kl_weight));
  return {total, recon, kl};
}

namespace {

Matrix joints_matrix(const PoseSequence& seq, const BodyModel& body) {
  const JointTrack track = sequence_joints(seq, body);
  Matrix out(track.frames, 3 * track.joints);
  for (int t = 0; t < track.frames; ++t)
    for (int k = 0; k < 3 * track.joints; ++k) out(t, k) = track.at(t, 0)[k];
  return out;
}

}  // namespace

ElboResult elbo_loss(const PoseSequence& target, const Matrix& prediction, const GaussianPosterior& posterior,
                     const ElboWeights& weights, const VaeModel& model) {
  if (prediction.rows() != target.frame_count() || prediction.cols() != target.width())
    throw InvalidArgument("prediction and target shapes differ");
  if (target.width() != model.config().pose_width) throw InvalidArgument("target width does not match model");
  if ((posterior.sigma.array() <= 0.0).any()) throw InvalidArgument("sigma must be positive");

  nn::Tape tape;
  const Var raw = tape.input(prediction);
  const nn::RowVector inv = model.feature_scale().cwiseInverse();
  const nn::RowVector shift = -model.feature_mean().cwiseProduct(inv);
  const Var normalized = tape.affine_const(raw, inv, shift);
  Var recon = tape.mse(normalized, model.normalize(target));
  if (weights.fk_weight != 0.0) {
    const Var joints = tape.forward_kinematics(raw, model.body());
    recon = tape.add(recon, tape.scale(tape.mse(joints, joints_matrix(target, model.body())), weights.fk_weight));
  }
  tape.backward(recon);

  ElboResult r;
  r.recon = tape.scalar(recon);
  r.kl = gaussian_kl(posterior);
  r.loss = r.recon + weights.kl_weight * r.kl;
  r.grad_prediction = tape.grad(raw);
  r.grad_mu = weights.kl_weight * posterior.mu;
  r.grad_sigma = weights.kl_weight * (posterior.sigma - posterior.sigma.cwiseInverse());
  return r;
}

void fit_normalization(VaeModel& model, std::span<const PoseSequence> dataset) {
  const int V = model.config().pose_width;
  nn::RowVector sum = nn::RowVector::Zero(V), sq = nn::RowVector::Zero(V);
  double n = 0.0;
  for (const auto& seq : dataset) {
    const Matrix x = seq.frames.cast<double>();
    sum += x.colwise().sum();
    sq += x.array().square().matrix().colwise().sum();
    n += static_cast<double>(x.rows());
  }
  const nn::RowVector mean = sum / n;
  nn::RowVector var = sq / n - mean.cwiseProduct(mean);
  nn::RowVector scale = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(kMinFeatureScale);
  // Round so the in-memory normalization equals what a checkpoint stores.
  model.set_normalization(mean.cast<float>().cast<double>(), scale.cast<float>().cast<double>());
}

VaeTrainResult train_vae(std::span<const PoseSequence> dataset, const VaeConfig& config, const VaeTrainConfig& train,
                         const BodyModel& body) {
  if (dataset.empty()) throw InvalidArgument("cannot train a VAE on an empty dataset");
  VaeModel model(config, body, child_seed(train.seed, 1));
  fit_normalization(model, dataset);
  return train_vae(std::move(model), dataset, train);
}

VaeTrainResult train_vae(VaeModel model, std::span<const PoseSequence> dataset, const VaeTrainConfig& train) {
  if (dataset.empty()) throw InvalidArgument("cannot train a VAE on an empty dataset");
  if (train.steps < 0 || train.batch < 1) throw InvalidArgument("invalid VAE training schedule");
  const int F = model.config().frames;
  const int V = model.config().pose_width;
  const int D = model.config().latent_dim;
  const int J = model.body().joint_count();
  for (const auto& seq : dataset) {
    if (seq.frame_count() != F || seq.width() != V) throw InvalidArgument("dataset sequence has inconsistent shape");
    seq.validate();
  }

  std::vector<Matrix> inputs, joints;
  inputs.reserve(dataset.size());
  joints.reserve(dataset.size());
  for (const auto& seq : dataset) {
    inputs.push_back(model.normalize(seq));
    joints.push_back(joints_matrix(seq, model.body()));
  }

  const int N = static_cast<int>(dataset.size());
  const int B = std::min(train.batch, N);
  Rng rng(child_seed(train.seed, 2));
  nn::AdamW opt(model.parameters(), {.lr = train.lr, .weight_decay = train.weight_decay});

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  int cursor = N;

  VaeTrainResult result{std::move(model), {}, {}, {}};
  VaeModel& m = result.model;
  for (int step = 0; step < train.steps; ++step) {
    Matrix x(static_cast<Eigen::Index>(B) * F, V), tj(static_cast<Eigen::Index>(B) * F, 3 * J);
    for (int b = 0; b < B; ++b) {
      if (cursor >= N) {
        for (int i = N - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
        cursor = 0;
      }
      const int idx = order[cursor++];
      x.middleRows(static_cast<Eigen::Index>(b) * F, F) = inputs[idx];
      tj.middleRows(static_cast<Eigen::Index>(b) * F, F) = joints[idx];
    }

    nn::Tape tape;
    const nn::Context ctx{tape, m.parameters(), &m.parameters()};
    const auto enc = m.encode_batch(ctx, x, B);
    Var z = enc.mu;
    if (train.sample_latent) {
      Matrix rho(B, D);
      for (Eigen::Index i = 0; i < rho.size(); ++i) rho.data()[i] = rng.normal();
      const Var sigma = tape.exp(tape.scale(enc.logvar, 0.5));
      z = tape.add(enc.mu, tape.mul(sigma, tape.constant(rho)));
    }
    const Var pred = m.decode_batch(ctx, z, B, F);
    const auto terms = elbo_terms(tape, m, pred, x, tj, enc.mu, enc.logvar, train.weights);
    tape.backward(terms.total);
    if (train.lr_decay) opt.set_lr(nn::cosine_lr(train.lr, step, train.steps));
    opt.step(m.parameters());

    result.loss.push_back(tape.scalar(terms.total));
    result.recon.push_back(tape.scalar(terms.recon));
    result.kl.push_back(tape.scalar(terms.kl));
  }
  m.parameters().quantize_to_float();
  return result;
}

}  // namespace socialego
