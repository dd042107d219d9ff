#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "socialego/body_model.hpp"
#include "socialego/nn/layers.hpp"

namespace socialego {

class VaeModel;

// N x 3 points in the wearer-camera frame, meters.
struct ScenePointCloud {
  Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor> points;

  int size() const { return static_cast<int>(points.rows()); }
  void validate() const;  // N >= 1, finite

  bool operator==(const ScenePointCloud& o) const {
    return points.rows() == o.points.rows() && points == o.points;
  }
};

struct SceneEncoderConfig {
  std::vector<int> widths{64, 128, 256};
  int out_dim = 256;
  int points = 1024;  // subsample size fed to the encoder
};

// Shared per-point MLP, column max-pool, then a linear projection to out_dim.
// Max-pooling makes the output independent of point order.
class SceneEncoder {
 public:
  SceneEncoder(const SceneEncoderConfig& config, std::uint64_t seed);

  const SceneEncoderConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // points: batch*n rows of xyz. Returns batch x out_dim.
  nn::Var forward(const nn::Context& ctx, const nn::Matrix& points, int batch, int n) const;

  // Inference path; any N >= 1. Throws InvalidArgument on an empty cloud.
  Eigen::VectorXd encode(const ScenePointCloud& cloud) const;

  std::string hash() const { return store_.hash("scene."); }

 private:
  SceneEncoderConfig config_;
  nn::ParameterStore store_;
  std::vector<nn::Linear> mlp_;
  nn::Linear projection_;
};

inline Eigen::VectorXd encode_scene(const ScenePointCloud& cloud, const SceneEncoder& encoder) {
  return encoder.encode(cloud);
}

// Uniform selection without replacement when N >= n_target, otherwise every
// point once plus uniform draws with replacement to pad, shuffled.
ScenePointCloud subsample_pointcloud(const ScenePointCloud& cloud, int n_target, std::uint64_t seed);

// Posterior mean of the frozen VAE encoder.
Eigen::VectorXd encode_interactee(const PoseSequence& interactee, const VaeModel& vae);

// Gaussian noise on the axis-angle channels, emulating an upstream pose
// estimator. Translation is left untouched.
PoseSequence perturb_interactee(const PoseSequence& interactee, double sigma, std::uint64_t seed);

// K x D conditioning tokens in fixed order [interactee, scene].
struct ConditionBundle {
  nn::Matrix tokens;
  bool has_interactee = false;
  bool has_scene = false;

  int count() const { return static_cast<int>(has_interactee) + static_cast<int>(has_scene); }
  bool empty() const { return count() == 0; }
};

ConditionBundle build_condition_bundle(const std::optional<Eigen::VectorXd>& interactee,
                                       const std::optional<Eigen::VectorXd>& scene);

}  // namespace socialego
