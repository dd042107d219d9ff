#include "socialego/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "socialego/errors.hpp"
#include "socialego/rng.hpp"

namespace socialego {

using nn::Matrix;
using nn::Var;

NoiseSchedule make_noise_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw InvalidArgument("noise schedule needs T >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw InvalidArgument("noise schedule needs 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    s.beta[i] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

LatentCode q_sample(const LatentCode& z0, int t, const Eigen::VectorXd& eps, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) throw InvalidArgument("timestep out of range");
  if (eps.size() != z0.size()) throw InvalidArgument("noise width does not match latent");
  const double ab = sched.alpha_bar_at(t);
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

std::vector<int> ddim_timesteps(int T, int steps) {
  if (steps < 1 || steps > T) throw InvalidArgument("sampling steps must be in [1, T]");
  std::vector<int> ts(steps);
  if (steps == 1) {
    ts[0] = T;
    return ts;
  }
  for (int i = 0; i < steps; ++i) {
    // i = 0 -> T, i = steps-1 -> 1
    const long num = static_cast<long>(steps - 1 - i) * (T - 1);
    ts[i] = 1 + static_cast<int>(num / (steps - 1));
  }
  return ts;
}

LatentCode ddim_sample_from(const EpsPredictor& predict, const NoiseSchedule& sched, int steps, LatentCode z) {
  const auto ts = ddim_timesteps(sched.T, steps);
  for (size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    const double ab = sched.alpha_bar_at(t);
    const Eigen::VectorXd eps = predict(z, t);
    const Eigen::VectorXd z0_hat = (z - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    if (i + 1 == ts.size()) return z0_hat;
    const double ab_prev = sched.alpha_bar_at(ts[i + 1]);
    z = std::sqrt(ab_prev) * z0_hat + std::sqrt(1.0 - ab_prev) * eps;
  }
  return z;
}

LatentCode ddim_sample(const EpsPredictor& predict, const NoiseSchedule& sched, int steps, int dim,
                       std::uint64_t seed) {
  Rng rng(seed);
  LatentCode z(dim);
  for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  return ddim_sample_from(predict, sched, steps, std::move(z));
}

// ---- Denoiser ---------------------------------------------------------------

DenoiserModel::DenoiserModel(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  const int D = config_.latent_dim;
  if (D < 1 || config_.layers < 1 || config_.heads < 1) throw InvalidArgument("denoiser dimensions must be positive");
  const int hidden = config_.ff_hidden > 0 ? config_.ff_hidden : 4 * D;
  Rng rng(seed);
  input_ = nn::Linear::create(store_, "denoiser.input", D, D, rng);
  time_up_ = nn::Linear::create(store_, "denoiser.time_up", D, D, rng);
  time_down_ = nn::Linear::create(store_, "denoiser.time_down", D, D, rng);
  cond_norm_ = nn::LayerNorm::create(store_, "denoiser.cond_norm", D);
  Matrix type(2, D);
  for (Eigen::Index i = 0; i < type.size(); ++i) type.data()[i] = 0.02 * rng.normal();
  cond_type_ = store_.add("denoiser.cond_type", type);
  for (int l = 0; l < config_.layers; ++l)
    blocks_.push_back(nn::DecoderBlock::create(store_, "denoiser.block" + std::to_string(l), D, config_.heads, hidden,
                                               rng));
  out_norm_ = nn::LayerNorm::create(store_, "denoiser.out_norm", D);
  output_ = nn::Linear::create(store_, "denoiser.output", D, D, rng, 0.5);
  skip_gate_ = nn::Linear::create(store_, "denoiser.skip_gate", D, D, rng, 0.1);
  latent_mean_ = Eigen::VectorXd::Zero(D);
  latent_scale_ = Eigen::VectorXd::Ones(D);
}

void DenoiserModel::set_latent_normalization(Eigen::VectorXd mean, Eigen::VectorXd scale) {
  if (mean.size() != config_.latent_dim || scale.size() != config_.latent_dim)
    throw InvalidArgument("latent normalization width mismatch");
  if ((scale.array() <= 0.0).any()) throw InvalidArgument("latent scale must be positive");
  latent_mean_ = std::move(mean);
  latent_scale_ = std::move(scale);
}

Eigen::VectorXd DenoiserModel::standardize(const LatentCode& z) const {
  return (z - latent_mean_).cwiseQuotient(latent_scale_);
}

LatentCode DenoiserModel::destandardize(const Eigen::VectorXd& s) const {
  return s.cwiseProduct(latent_scale_) + latent_mean_;
}

Var DenoiserModel::forward(const nn::Context& ctx, Var z_t, std::span<const int> t, Var cond, int batch) const {
  nn::Tape& tape = ctx.tape;
  const int D = config_.latent_dim;
  const int K = config_.condition_count();
  if (static_cast<int>(t.size()) != batch) throw InvalidArgument("one timestep per batch row required");

  const Var temb = time_down_(ctx, tape.silu(time_up_(ctx, tape.constant(nn::sinusoidal_encoding(t, D)))));
  Var x = tape.add(input_(ctx, z_t), temb);

  Var memory;
  if (K > 0) {
    if (tape.value(cond).rows() != static_cast<Eigen::Index>(batch) * K || tape.value(cond).cols() != D)
      throw InvalidArgument("conditioning batch has wrong shape");
    // Type embedding rows in [interactee, scene] order, restricted to the
    // sources this model uses.
    std::vector<int> type_rows;
    if (config_.use_interactee) type_rows.push_back(0);
    if (config_.use_scene) type_rows.push_back(1);
    std::vector<int> tiled;
    tiled.reserve(static_cast<size_t>(batch) * K);
    for (int b = 0; b < batch; ++b) tiled.insert(tiled.end(), type_rows.begin(), type_rows.end());
    memory = tape.add(cond_norm_(ctx, cond), tape.gather_rows(ctx.p(cond_type_), std::move(tiled)));
  }
  for (const auto& blk : blocks_) x = blk(ctx, x, memory, batch, 1, K);
  // The output norm discards the scale of z_t, which eps must track closely
  // at large t; a time-gated skip carries it around the blocks.
  const Var skip = tape.mul(z_t, skip_gate_(ctx, temb));
  return tape.add(output_(ctx, out_norm_(ctx, x)), skip);
}

void DenoiserModel::check_condition(const ConditionBundle& cond) const {
  if (cond.has_interactee != config_.use_interactee || cond.has_scene != config_.use_scene)
    throw InvalidArgument("condition bundle sources do not match the denoiser");
  if (!cond.empty() && cond.tokens.cols() != config_.latent_dim)
    throw InvalidArgument("condition token width does not match the denoiser");
}

Eigen::VectorXd DenoiserModel::predict_eps(const Eigen::VectorXd& z_t, int t, const ConditionBundle& cond) const {
  check_condition(cond);
  nn::Tape tape;
  const nn::Context ctx{tape, store_};
  const int ts[1] = {t};
  const Var c = cond.empty() ? Var{} : tape.constant(cond.tokens);
  const Var out = forward(ctx, tape.constant(z_t.transpose()), ts, c, 1);
  return tape.value(out).row(0).transpose();
}

LatentCode ddim_sample(const DenoiserModel& model, const NoiseSchedule& sched, int steps, const ConditionBundle& cond,
                       std::uint64_t seed) {
  model.check_condition(cond);
  const EpsPredictor predict = [&](const Eigen::VectorXd& z, int t) { return model.predict_eps(z, t, cond); };
  return model.destandardize(ddim_sample(predict, sched, steps, model.config().latent_dim, seed));
}

// ---- Losses -----------------------------------------------------------------

namespace {

Matrix noised_batch(const Matrix& z0, std::span<const int> t, const Matrix& eps, const NoiseSchedule& sched) {
  if (eps.rows() != z0.rows() || eps.cols() != z0.cols()) throw InvalidArgument("noise shape does not match latents");
  if (static_cast<Eigen::Index>(t.size()) != z0.rows()) throw InvalidArgument("one timestep per row required");
  Matrix zt(z0.rows(), z0.cols());
  for (Eigen::Index r = 0; r < z0.rows(); ++r) {
    if (t[r] < 1 || t[r] > sched.T) throw InvalidArgument("timestep out of range");
    const double ab = sched.alpha_bar_at(t[r]);
    zt.row(r) = std::sqrt(ab) * z0.row(r) + std::sqrt(1.0 - ab) * eps.row(r);
  }
  return zt;
}

}  // namespace

double diffusion_loss(const Matrix& z0, std::span<const int> t, const Matrix& eps, const NoiseSchedule& sched,
                      const EpsPredictor& predict) {
  const Matrix zt = noised_batch(z0, t, eps, sched);
  double total = 0.0;
  for (Eigen::Index r = 0; r < zt.rows(); ++r) {
    const Eigen::VectorXd e = predict(zt.row(r).transpose(), t[r]);
    total += (eps.row(r).transpose() - e).squaredNorm();
  }
  return total / static_cast<double>(zt.rows());
}

Var diffusion_loss_var(const nn::Context& ctx, const DenoiserModel& model, const Matrix& z0, std::span<const int> t,
                       const Matrix& eps, Var cond, const NoiseSchedule& sched) {
  const int batch = static_cast<int>(z0.rows());
  const Var pred = model.forward(ctx, ctx.tape.constant(noised_batch(z0, t, eps, sched)), t, cond, batch);
  // mean over rows of the squared L2 norm = D * elementwise mean
  return ctx.tape.scale(ctx.tape.mse(pred, eps), static_cast<double>(z0.cols()));
}

double diffusion_loss(const Matrix& z0, std::span<const int> t, const Matrix& eps, const Matrix& cond,
                      DenoiserModel& model, const NoiseSchedule& sched) {
  nn::Tape tape;
  const nn::Context ctx{tape, model.parameters(), &model.parameters()};
  const Var c = model.config().condition_count() > 0 ? tape.constant(cond) : Var{};
  const Var loss = diffusion_loss_var(ctx, model, z0, t, eps, c, sched);
  tape.backward(loss);
  return tape.scalar(loss);
}

// ---- Training ---------------------------------------------------------------

DenoiserTrainResult train_denoiser(std::span<const DenoiserExample> examples, const VaeModel& vae,
                                   std::optional<SceneEncoder> scene_encoder, const DenoiserConfig& config,
                                   const DenoiserTrainConfig& train) {
  if (examples.empty()) throw InvalidArgument("cannot train a denoiser on an empty dataset");
  if (config.latent_dim != vae.config().latent_dim) throw InvalidArgument("denoiser width does not match the VAE");
  if (config.use_scene && !scene_encoder) throw PreconditionError("scene conditioning requires a scene encoder");
  if (config.use_scene && scene_encoder->config().out_dim != config.latent_dim)
    throw InvalidArgument("scene encoder width does not match the denoiser");
  if (train.steps < 0 || train.batch < 1 || train.scene_warmup_steps < 0)
    throw InvalidArgument("invalid denoiser training schedule");

  const int N = static_cast<int>(examples.size());
  const int D = config.latent_dim;
  const int K = config.condition_count();
  const NoiseSchedule sched = make_noise_schedule(train.diffusion_steps, train.beta_start, train.beta_end);

  DenoiserTrainResult result{DenoiserModel(config, child_seed(train.seed, 11)), std::move(scene_encoder), {}, {}};
  DenoiserModel& model = result.model;
  Rng rng(child_seed(train.seed, 12));

  // Frozen VAE: targets and interactee tokens are fixed for the whole run.
  const std::string vae_hash_before = vae.encoder_hash();
  Matrix z0_raw(N, D), interactee_tokens(N, D);
  for (int i = 0; i < N; ++i) {
    const auto post = vae.encode(examples[i].wearer);
    if (train.z0_from_mean) {
      z0_raw.row(i) = post.mu.transpose();
    } else {
      Eigen::VectorXd rho(D);
      for (int k = 0; k < D; ++k) rho[k] = rng.normal();
      z0_raw.row(i) = reparameterize(post, rho).transpose();
    }
    if (config.use_interactee) interactee_tokens.row(i) = encode_interactee(examples[i].interactee, vae).transpose();
  }

  Eigen::VectorXd mean = z0_raw.colwise().mean().transpose();
  Eigen::VectorXd scale =
      ((z0_raw.rowwise() - mean.transpose()).array().square().colwise().mean().sqrt().transpose()).cwiseMax(1e-3);
  model.set_latent_normalization(mean.cast<float>().cast<double>(), scale.cast<float>().cast<double>());
  Matrix z0(N, D);
  for (int i = 0; i < N; ++i) z0.row(i) = model.standardize(z0_raw.row(i).transpose()).transpose();

  std::vector<ScenePointCloud> scenes;
  if (config.use_scene) {
    const int n_points = result.scene_encoder->config().points;
    for (int i = 0; i < N; ++i)
      scenes.push_back(subsample_pointcloud(examples[i].scene, n_points, child_seed(train.seed, 1000 + i)));
  }

  auto draw_batch = [&](int B, std::vector<int>& idx, std::vector<int>& ts, Matrix& eps) {
    idx.resize(B);
    ts.resize(B);
    eps.resize(B, D);
    for (int b = 0; b < B; ++b) {
      idx[b] = static_cast<int>(rng.below(N));
      ts[b] = 1 + static_cast<int>(rng.below(sched.T));
      for (int k = 0; k < D; ++k) eps(b, k) = rng.normal();
    }
  };
  auto gather = [&](const Matrix& src, const std::vector<int>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
    for (size_t b = 0; b < idx.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = src.row(idx[b]);
    return out;
  };

  nn::AdamW opt(model.parameters(), {.lr = train.lr, .weight_decay = train.weight_decay});

  // Phase 1: scene encoder trained jointly with the denoiser.
  const int warmup = config.use_scene ? train.scene_warmup_steps : 0;
  if (warmup > 0) {
    SceneEncoder& enc = *result.scene_encoder;
    nn::AdamW scene_opt(enc.parameters(), {.lr = train.lr, .weight_decay = train.weight_decay});
    const int n_points = enc.config().points;
    std::vector<int> idx, ts;
    Matrix eps;
    for (int step = 0; step < warmup; ++step) {
      const int B = train.scene_warmup_batch;
      draw_batch(B, idx, ts, eps);
      Matrix pts(static_cast<Eigen::Index>(B) * n_points, 3);
      for (int b = 0; b < B; ++b)
        pts.middleRows(static_cast<Eigen::Index>(b) * n_points, n_points) = scenes[idx[b]].points.cast<double>();

      nn::Tape tape;
      const nn::Context ctx{tape, model.parameters(), &model.parameters()};
      const nn::Context scene_ctx{tape, enc.parameters(), &enc.parameters()};
      const Var scene_tok = enc.forward(scene_ctx, pts, B, n_points);
      Var cond = scene_tok;
      if (config.use_interactee) {
        // interleave [interactee_b, scene_b] per sample
        std::vector<Var> rows;
        const Var inter = tape.constant(gather(interactee_tokens, idx));
        for (int b = 0; b < B; ++b) {
          rows.push_back(tape.rows(inter, b, 1));
          rows.push_back(tape.rows(scene_tok, b, 1));
        }
        cond = tape.concat_rows(rows);
      }
      const Var loss = diffusion_loss_var(ctx, model, gather(z0, idx), ts, eps, cond, sched);
      tape.backward(loss);
      opt.step(model.parameters());
      scene_opt.step(enc.parameters());
      result.loss.push_back(tape.scalar(loss));
    }
    enc.parameters().quantize_to_float();
  }

  // Phase 2: every conditioning encoder frozen; tokens precomputed.
  Matrix cond_tokens(static_cast<Eigen::Index>(N) * std::max(K, 1), D);
  if (K > 0) {
    for (int i = 0; i < N; ++i) {
      int r = 0;
      if (config.use_interactee) cond_tokens.row(static_cast<Eigen::Index>(i) * K + r++) = interactee_tokens.row(i);
      if (config.use_scene)
        cond_tokens.row(static_cast<Eigen::Index>(i) * K + r++) = result.scene_encoder->encode(scenes[i]).transpose();
    }
  }
  result.freeze.vae_encoder_before = vae_hash_before;
  if (result.scene_encoder) result.freeze.scene_before = result.scene_encoder->hash();

  std::vector<int> idx, ts;
  Matrix eps;
  for (int step = 0; step < train.steps; ++step) {
    draw_batch(train.batch, idx, ts, eps);
    Matrix cond;
    if (K > 0) {
      cond.resize(static_cast<Eigen::Index>(train.batch) * K, D);
      for (int b = 0; b < train.batch; ++b)
        cond.middleRows(static_cast<Eigen::Index>(b) * K, K) = cond_tokens.middleRows(static_cast<Eigen::Index>(idx[b]) * K, K);
    }
    result.loss.push_back(diffusion_loss(gather(z0, idx), ts, eps, cond, model, sched));
    if (train.lr_decay) opt.set_lr(nn::cosine_lr(train.lr, step, train.steps));
    opt.step(model.parameters());
  }
  model.parameters().quantize_to_float();

  result.freeze.vae_encoder_after = vae.encoder_hash();
  if (result.scene_encoder) result.freeze.scene_after = result.scene_encoder->hash();
  return result;
}

}  // namespace socialego
