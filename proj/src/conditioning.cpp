#include "socialego/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "socialego/errors.hpp"
#include "socialego/rng.hpp"
#include "socialego/vae.hpp"

namespace socialego {

void ScenePointCloud::validate() const {
  if (points.rows() < 1) throw InvalidArgument("scene point cloud is empty");
  if (!points.allFinite()) throw InvalidArgument("scene point cloud contains non-finite values");
}

SceneEncoder::SceneEncoder(const SceneEncoderConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.widths.empty() || config_.out_dim < 1 || config_.points < 1)
    throw InvalidArgument("invalid scene encoder configuration");
  Rng rng(seed);
  int in = 3;
  for (size_t i = 0; i < config_.widths.size(); ++i) {
    mlp_.push_back(nn::Linear::create(store_, "scene.mlp" + std::to_string(i), in, config_.widths[i], rng,
                                      std::sqrt(2.0)));
    in = config_.widths[i];
  }
  projection_ = nn::Linear::create(store_, "scene.projection", in, config_.out_dim, rng);
}

nn::Var SceneEncoder::forward(const nn::Context& ctx, const nn::Matrix& points, int batch, int n) const {
  if (points.rows() != static_cast<Eigen::Index>(batch) * n || points.cols() != 3)
    throw InvalidArgument("scene batch has wrong shape");
  nn::Var h = ctx.tape.constant(points);
  for (const auto& layer : mlp_) h = ctx.tape.relu(layer(ctx, h));
  return projection_(ctx, ctx.tape.max_pool_rows(h, n));
}

Eigen::VectorXd SceneEncoder::encode(const ScenePointCloud& cloud) const {
  cloud.validate();
  const int N = cloud.size();
  const int width = config_.widths.back();
  nn::Matrix features(N, width);
  // Each point runs through the MLP on its own, so its features do not
  // depend on where it sits in the cloud.
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    nn::RowVector h = cloud.points.row(i).cast<double>();
    for (const auto& layer : mlp_) {
      nn::RowVector next = h * store_[layer.weight].value + store_[layer.bias].value;
      h = next.cwiseMax(0.0);
    }
    features.row(i) = h;
  }
  const nn::RowVector pooled = features.colwise().maxCoeff();
  const nn::RowVector out = pooled * store_[projection_.weight].value + store_[projection_.bias].value;
  return out.transpose();
}

ScenePointCloud subsample_pointcloud(const ScenePointCloud& cloud, int n_target, std::uint64_t seed) {
  cloud.validate();
  if (n_target < 1) throw InvalidArgument("subsample target must be >= 1");
  const int N = cloud.size();
  Rng rng(seed);
  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = N - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  if (N >= n_target) {
    idx.resize(n_target);
  } else {
    while (static_cast<int>(idx.size()) < n_target) idx.push_back(static_cast<int>(rng.below(N)));
    for (int i = n_target - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  ScenePointCloud out;
  out.points.resize(n_target, 3);
  for (int i = 0; i < n_target; ++i) out.points.row(i) = cloud.points.row(idx[i]);
  return out;
}

Eigen::VectorXd encode_interactee(const PoseSequence& interactee, const VaeModel& vae) {
  return vae.encode(interactee).mu;
}

PoseSequence perturb_interactee(const PoseSequence& interactee, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
  PoseSequence out = interactee;
  Rng rng(seed);
  const int rot_cols = out.width() - 3;
  for (int t = 0; t < out.frame_count(); ++t)
    for (int c = 0; c < rot_cols; ++c) out.frames(t, c) += static_cast<float>(sigma * rng.normal());
  return out;
}

ConditionBundle build_condition_bundle(const std::optional<Eigen::VectorXd>& interactee,
                                       const std::optional<Eigen::VectorXd>& scene) {
  ConditionBundle b;
  b.has_interactee = interactee.has_value();
  b.has_scene = scene.has_value();
  if (interactee && scene && interactee->size() != scene->size())
    throw InvalidArgument("conditioning tokens have different widths");
  const Eigen::Index D = interactee ? interactee->size() : (scene ? scene->size() : 0);
  b.tokens.resize(b.count(), D);
  int row = 0;
  if (interactee) b.tokens.row(row++) = interactee->transpose();
  if (scene) b.tokens.row(row++) = scene->transpose();
  return b;
}

}  // namespace socialego
