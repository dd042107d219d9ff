#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "socialego/body_model.hpp"
#include "socialego/rng.hpp"

namespace testutil {

inline socialego::PoseSequence random_sequence(int frames, std::uint64_t seed, double scale = 0.3) {
  const auto body = socialego::BodyModel::humanoid();
  socialego::Rng rng(seed);
  socialego::PoseSequence s;
  s.frames.resize(frames, body.pose_width());
  for (int t = 0; t < frames; ++t)
    for (int c = 0; c < body.pose_width(); ++c) s.frames(t, c) = static_cast<float>(scale * rng.normal());
  return s;
}

inline socialego::Vec3 random_axis_angle(socialego::Rng& rng, double max_angle) {
  socialego::Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  return axis * rng.uniform(1e-3, max_angle);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("socialego-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace testutil
