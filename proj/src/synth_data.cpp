#include "socialego/synth_data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "socialego/errors.hpp"
#include "socialego/rng.hpp"

namespace socialego {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWallHeight = 2.5;
constexpr double kShoulderRest = 1.2;  // arms hanging from the T-pose

bool is_room_layout(const std::string& s) { return s == "floor-only" || s == "empty-room" || s == "furnished"; }

struct Box {
  double cx, cz;  // footprint center
  double sx, sy, sz;
};

struct Room {
  double width = 4.0;
  bool walls = true;
  std::vector<Box> boxes;
};

Room make_room(const std::string& layout, double width, Rng& rng) {
  Room room;
  room.width = width;
  room.walls = layout != "floor-only";
  if (layout == "furnished") {
    const int count = 1 + static_cast<int>(rng.below(3));
    const double h = width / 2.0;
    for (int i = 0; i < count; ++i) {
      Box b{};
      b.sx = rng.uniform(0.4, 1.2);
      b.sy = rng.uniform(0.4, 1.0);
      b.sz = rng.uniform(0.4, 1.2);
      // pushed against one of the four walls
      switch (rng.below(4)) {
        case 0: b.cz = h - b.sz / 2; b.cx = rng.uniform(-h + b.sx / 2, h - b.sx / 2); break;
        case 1: b.cz = -h + b.sz / 2; b.cx = rng.uniform(-h + b.sx / 2, h - b.sx / 2); break;
        case 2: b.cx = h - b.sx / 2; b.cz = rng.uniform(-h + b.sz / 2, h - b.sz / 2); break;
        default: b.cx = -h + b.sx / 2; b.cz = rng.uniform(-h + b.sz / 2, h - b.sz / 2); break;
      }
      room.boxes.push_back(b);
    }
  }
  return room;
}

// Area-weighted uniform samples from every surface of the room.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> sample_room(const Room& room, int n, Rng& rng) {
  struct Patch {
    Vec3 origin, u, v;  // point = origin + a*u + b*v, a,b in [0,1)
  };
  const double W = room.width, h = W / 2.0;
  std::vector<Patch> patches;
  patches.push_back({{-h, 0, -h}, {W, 0, 0}, {0, 0, W}});
  if (room.walls) {
    patches.push_back({{-h, 0, h}, {W, 0, 0}, {0, kWallHeight, 0}});
    patches.push_back({{-h, 0, -h}, {W, 0, 0}, {0, kWallHeight, 0}});
    patches.push_back({{h, 0, -h}, {0, 0, W}, {0, kWallHeight, 0}});
    patches.push_back({{-h, 0, -h}, {0, 0, W}, {0, kWallHeight, 0}});
  }
  for (const auto& b : room.boxes) {
    const Vec3 lo(b.cx - b.sx / 2, 0, b.cz - b.sz / 2);
    patches.push_back({lo + Vec3(0, b.sy, 0), {b.sx, 0, 0}, {0, 0, b.sz}});
    patches.push_back({lo, {b.sx, 0, 0}, {0, b.sy, 0}});
    patches.push_back({lo + Vec3(0, 0, b.sz), {b.sx, 0, 0}, {0, b.sy, 0}});
    patches.push_back({lo, {0, 0, b.sz}, {0, b.sy, 0}});
    patches.push_back({lo + Vec3(b.sx, 0, 0), {0, 0, b.sz}, {0, b.sy, 0}});
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : patches) {
    total += p.u.cross(p.v).norm();
    cumulative.push_back(total);
  }
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> pts(n, 3);
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const auto k = std::min<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                    patches.size() - 1);
    const double a = rng.uniform(), c = rng.uniform();
    pts.row(i) = (patches[k].origin + a * patches[k].u + c * patches[k].v).transpose();
  }
  return pts;
}

// Gaussian increments smoothed with a 5-frame box filter.
std::vector<double> smooth_noise(Rng& rng, int n, double sigma) {
  std::vector<double> raw(static_cast<size_t>(n) + 4);
  for (auto& r : raw) r = rng.normal() * sigma;
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) out[t] = (raw[t] + raw[t + 1] + raw[t + 2] + raw[t + 3] + raw[t + 4]) / 5.0;
  return out;
}

std::vector<double> random_walk(Rng& rng, int n, double sigma, double start) {
  const auto inc = smooth_noise(rng, n, sigma);
  std::vector<double> out(n);
  double x = start;
  for (int t = 0; t < n; ++t) {
    out[t] = x;
    x += inc[t];
  }
  return out;
}

struct Preset {
  double width_lo, width_hi;
  double phi_center, phi_spread;  // wearer placement angle around the interactee's facing direction
  double approach;                // max |initial distance - target distance|
  double pos_sigma, yaw_sigma, pose_sigma;
  bool random_layout;
};

Preset preset_for(const std::string& scenario) {
  if (scenario == "face-to-face-near") return {2.6, 3.0, 0.0, 0.1, 0.05, 0.004, 0.004, 0.01, false};
  if (scenario == "mid-range") return {4.5, 6.0, 0.0, 0.4, 0.2, 0.01, 0.01, 0.015, false};
  if (scenario == "far-averted") return {7.5, 10.0, kPi, 0.3, 0.2, 0.01, 0.01, 0.015, false};
  if (scenario == "mixed") return {2.6, 10.0, 0.0, kPi, 0.6, 0.02, 0.03, 0.02, true};
  throw InvalidArgument("unknown interaction scenario '" + scenario + "'");
}

// Body joint rotations (channels 3 .. 3J) for one agent over n frames:
// arms hanging, smoothed jitter on every joint, and occasional arm raises.
Eigen::MatrixXd body_motion(Rng& rng, int n, int J, double pose_sigma) {
  Eigen::MatrixXd pose = Eigen::MatrixXd::Zero(n, 3 * (J - 1));
  for (int c = 0; c < pose.cols(); ++c) {
    const auto jitter = smooth_noise(rng, n, pose_sigma * std::sqrt(5.0));
    for (int t = 0; t < n; ++t) pose(t, c) = jitter[t];
  }
  if (J > kRightShoulder) {
    const int left = 3 * (kLeftShoulder - 1) + 2, right = 3 * (kRightShoulder - 1) + 2;
    for (int t = 0; t < n; ++t) {
      pose(t, left) -= kShoulderRest;
      pose(t, right) += kShoulderRest;
    }
    for (int side = 0; side < 2; ++side) {
      if (rng.uniform() >= 0.7) continue;
      const double start = rng.uniform(-10.0, std::max(1.0, n - 10.0));
      const double dur = rng.uniform(15.0, 30.0);
      const double amp = rng.uniform(0.6, 1.4);
      for (int t = 0; t < n; ++t) {
        const double u = (t - start) / dur;
        if (u <= 0.0 || u >= 1.0) continue;
        const double s = std::sin(kPi * u);
        pose(t, side == 0 ? left : right) += (side == 0 ? 1.0 : -1.0) * amp * s * s;
      }
    }
  }
  return pose;
}

// Left/right partner of each joint in the default skeleton.
int mirror_joint(int j) {
  static constexpr std::array<int, 24> partner{0,  2,  1,  3,  5,  4,  6,  8,  7,  9,  11, 10,
                                               12, 14, 13, 15, 17, 16, 19, 18, 21, 20, 23, 22};
  return j < static_cast<int>(partner.size()) ? partner[j] : j;
}

// Reflection through the sagittal plane (x -> -x) with left and right swapped.
Eigen::RowVectorXd mirror_body(const Eigen::RowVectorXd& body_pose, int J) {
  Eigen::RowVectorXd out(body_pose.size());
  for (int j = 1; j < J; ++j) {
    const int m = mirror_joint(j);
    const int src = 3 * (m - 1), dst = 3 * (j - 1);
    out[dst] = body_pose[src];
    out[dst + 1] = -body_pose[src + 1];
    out[dst + 2] = -body_pose[src + 2];
  }
  return out;
}

double wrap_angle(double a) { return a - 2.0 * kPi * std::round(a / (2.0 * kPi)); }

}  // namespace

bool InteractionEpisode::operator==(const InteractionEpisode& o) const {
  return wearer == o.wearer && interactee == o.interactee && scene == o.scene && meta.seed == o.meta.seed &&
         meta.coupling == o.meta.coupling && meta.scenario == o.meta.scenario && meta.room == o.meta.room &&
         meta.room_width == o.meta.room_width;
}

std::vector<std::string> room_scenarios() { return {"floor-only", "empty-room", "furnished"}; }

std::vector<std::string> interaction_scenarios() { return {"face-to-face-near", "mid-range", "far-averted", "mixed"}; }

ScenePointCloud generate_scene_pointcloud(const std::string& scenario, int n_points, std::uint64_t seed) {
  if (!is_room_layout(scenario)) throw InvalidArgument("unknown room scenario '" + scenario + "'");
  if (n_points < 1) throw InvalidArgument("n_points must be >= 1");
  Rng rng(seed);
  const Room room = make_room(scenario, rng.uniform(3.0, 8.0), rng);
  ScenePointCloud cloud;
  cloud.points = sample_room(room, n_points, rng).cast<float>();
  return cloud;
}

InteractionEpisode generate_interaction_episode(const std::string& scenario, int frames, double kappa,
                                                std::uint64_t seed, const SynthOptions& options,
                                                const BodyModel& body) {
  if (frames < 3) throw InvalidArgument("an episode needs at least 3 frames");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidArgument("coupling kappa must lie in [0, 1]");
  if (options.scene_points < 1 || options.lag < 0 || !(options.fps > 0.0))
    throw InvalidArgument("invalid synthesis options");
  const Preset pre = preset_for(scenario);
  const int J = body.joint_count();
  const int V = body.pose_width();
  const int L = options.lag;
  const int n = frames + L;  // the wearer at frame t responds to the interactee at t + L
  Rng rng(seed);

  const double W = rng.uniform(pre.width_lo, pre.width_hi);
  const double half = W / 2.0 - 0.4;
  const std::string layout = pre.random_layout ? (rng.uniform() < 0.5 ? "empty-room" : "furnished") : "furnished";
  const double phi = pre.phi_center + rng.uniform(-pre.phi_spread, pre.phi_spread);
  const double d_target = 0.3 * W;
  const double d0 = std::max(0.5, d_target + rng.uniform(-pre.approach, pre.approach));
  const double tau = 0.7 * options.fps;
  const double stand = body.standing_root_height();

  // Interactee.
  auto ix = random_walk(rng, n, pre.pos_sigma, rng.uniform(-0.5, 0.5));
  auto iz = random_walk(rng, n, pre.pos_sigma, rng.uniform(-0.5, 0.5));
  const auto iyaw = random_walk(rng, n, pre.yaw_sigma, rng.uniform(-kPi, kPi));
  const auto ibob = smooth_noise(rng, n, 0.004 * std::sqrt(5.0));
  const Eigen::MatrixXd ibody = body_motion(rng, n, J, pre.pose_sigma);
  for (int t = 0; t < n; ++t) {
    ix[t] = std::clamp(ix[t], -half, half);
    iz[t] = std::clamp(iz[t], -half, half);
  }

  // Independent wearer motion.
  const auto wx = random_walk(rng, frames, pre.pos_sigma, rng.uniform(-half, half));
  const auto wz = random_walk(rng, frames, pre.pos_sigma, rng.uniform(-half, half));
  const auto wyaw = random_walk(rng, frames, pre.yaw_sigma, rng.uniform(-kPi, kPi));
  const auto wbob = smooth_noise(rng, frames, 0.004 * std::sqrt(5.0));
  const Eigen::MatrixXd wbody = body_motion(rng, frames, J, pre.pose_sigma);

  Eigen::MatrixXd wearer(frames, V), interactee(frames, V);
  double yaw_offset = 0.0;
  for (int t = 0; t < frames; ++t) {
    const int s = t + L;
    const double ang = iyaw[s] + phi;
    const double d = d_target + (d0 - d_target) * std::exp(-t / tau);
    const double sx = ix[s] + d * std::sin(ang), sz = iz[s] + d * std::cos(ang);
    const double syaw = ang + kPi;
    // keep the yaw blend continuous: fix the 2*pi branch at frame 0
    if (t == 0) yaw_offset = (syaw - wyaw[0]) - wrap_angle(syaw - wyaw[0]);
    const double yaw = wyaw[t] + kappa * (syaw - wyaw[t] - yaw_offset);
    const Eigen::RowVectorXd social_body = mirror_body(ibody.row(s), J);

    wearer.row(t).setZero();
    wearer(t, 1) = yaw;
    wearer.row(t).segment(3, 3 * (J - 1)) = kappa * social_body + (1.0 - kappa) * wbody.row(t);
    wearer(t, V - 3) = kappa * sx + (1.0 - kappa) * wx[t];
    wearer(t, V - 2) = stand + wbob[t];
    wearer(t, V - 1) = kappa * sz + (1.0 - kappa) * wz[t];

    interactee.row(t).setZero();
    interactee(t, 1) = iyaw[t];
    interactee.row(t).segment(3, 3 * (J - 1)) = ibody.row(t);
    interactee(t, V - 3) = ix[t];
    interactee(t, V - 2) = stand + ibob[t];
    interactee(t, V - 1) = iz[t];
  }
  // Keep yaw channels near (-pi, pi] without breaking continuity.
  const double w_shift = wearer(0, 1) - wrap_angle(wearer(0, 1));
  const double i_shift = interactee(0, 1) - wrap_angle(interactee(0, 1));
  wearer.col(1).array() -= w_shift;
  interactee.col(1).array() -= i_shift;

  const Room room = make_room(layout, W, rng);
  auto points = sample_room(room, options.scene_points, rng);

  // Origin at the wearer's head at frame 0.
  const Joints j0 = forward_kinematics(wearer.row(0).transpose(), body);
  const int head = J > kHead ? static_cast<int>(kHead) : J - 1;
  const Eigen::RowVector3d origin = j0.row(head);
  for (int t = 0; t < frames; ++t) {
    wearer.row(t).tail<3>() -= origin;
    interactee.row(t).tail<3>() -= origin;
  }
  points.rowwise() -= origin;

  InteractionEpisode ep;
  ep.wearer.frames = wearer.cast<float>();
  ep.wearer.fps = options.fps;
  ep.interactee.frames = interactee.cast<float>();
  ep.interactee.fps = options.fps;
  ep.scene.points = points.cast<float>();
  ep.meta = {seed, kappa, scenario, layout, W};
  return ep;
}

std::vector<InteractionEpisode> generate_episodes(const std::string& scenario, int count, int frames, double kappa,
                                                  std::uint64_t master_seed, const SynthOptions& options,
                                                  const BodyModel& body) {
  if (count < 0) throw InvalidArgument("episode count must be >= 0");
  preset_for(scenario);
  std::vector<InteractionEpisode> out(count);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      out[i] = generate_interaction_episode(scenario, frames, kappa, child_seed(master_seed, i), options, body);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---- dataset file -------------------------------------------------------------

namespace {

constexpr const char* kDatasetMagic = "socialego-dataset";
constexpr int kDatasetVersion = 1;

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// rows, cols, then row-major float32 values, all little-endian.
void put_block(std::string& out, const float* data, int rows, int cols) {
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  const size_t n = static_cast<size_t>(rows) * cols;
  for (size_t i = 0; i < n; ++i) put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
}

DatasetError corrupt(const std::string& what) { return {DatasetError::Kind::CorruptHeader, what}; }

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw corrupt("header field '" + key + "' is not an integer: '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    throw corrupt("header field '" + key + "' is not a number: '" + value + "'");
  return v;
}

}  // namespace

void write_dataset(std::span<const InteractionEpisode> episodes, const std::filesystem::path& path) {
  int F = 0, V = 0, N = 0;
  double fps = 30.0;
  if (!episodes.empty()) {
    F = episodes[0].wearer.frame_count();
    V = episodes[0].wearer.width();
    N = episodes[0].scene.size();
    fps = episodes[0].wearer.fps;
  }
  for (const auto& ep : episodes) {
    ep.wearer.validate();
    ep.interactee.validate();
    ep.scene.validate();
    if (ep.wearer.frame_count() != F || ep.interactee.frame_count() != F || ep.wearer.width() != V ||
        ep.interactee.width() != V || ep.scene.size() != N)
      throw InvalidArgument("episodes in one dataset must share frame count, pose width and point count");
    if (ep.wearer.fps != fps || ep.interactee.fps != fps)
      throw InvalidArgument("episodes in one dataset must share fps");
    for (const std::string* s : {&ep.meta.scenario, &ep.meta.room})
      if (s->empty() || s->find_first_of(" \t\r\n") != std::string::npos)
        throw InvalidArgument("episode tags must be non-empty and contain no whitespace");
  }
  if (V != 0 && (V - 3) % 3 != 0) throw InvalidArgument("pose width must be 3J + 3");

  std::ostringstream header;
  header << kDatasetMagic << "\n";
  header << "version: " << kDatasetVersion << "\n";
  header << "episodes: " << episodes.size() << "\n";
  header << "frames: " << F << "\n";
  header << "pose_width: " << V << "\n";
  header << "joints: " << (V == 0 ? 0 : (V - 3) / 3) << "\n";
  header << "points: " << N << "\n";
  header << "fps: " << hex_double(fps) << "\n";
  header << "endianness: little\n";
  for (const auto& ep : episodes)
    header << "episode: " << ep.meta.seed << " " << hex_double(ep.meta.coupling) << " " << ep.meta.scenario << " "
           << ep.meta.room << " " << hex_double(ep.meta.room_width) << "\n";
  header << "end_header\n";

  std::string payload = header.str();
  for (const auto& ep : episodes) {
    put_block(payload, ep.wearer.frames.data(), F, V);
    put_block(payload, ep.interactee.frames.data(), F, V);
    put_block(payload, ep.scene.points.data(), N, 3);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DatasetError(DatasetError::Kind::Io, "failed writing '" + path.string() + "'");
}

std::vector<InteractionEpisode> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "cannot open dataset '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // Header lines up to end_header.
  size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) return false;
    line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };
  std::string line;
  if (!next_line(line)) {
    if (bytes.empty() || std::string(kDatasetMagic).starts_with(bytes))
      throw DatasetError(DatasetError::Kind::Truncated, "dataset ends inside the header");
    throw corrupt("not a dataset file (bad magic)");
  }
  if (line != kDatasetMagic) throw corrupt("not a dataset file (bad magic)");

  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> episode_lines;
  bool ended = false;
  while (next_line(line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    const size_t colon = line.find(':');
    if (colon == std::string::npos) throw corrupt("malformed header line '" + line + "'");
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    if (key == "episode")
      episode_lines.push_back(value);
    else
      fields.emplace_back(std::move(key), std::move(value));
  }
  if (!ended) throw DatasetError(DatasetError::Kind::Truncated, "dataset ends inside the header");

  auto field = [&](const std::string& key) -> const std::string& {
    for (const auto& [k, v] : fields)
      if (k == key) return v;
    throw corrupt("header is missing field '" + key + "'");
  };
  const long long version = parse_int("version", field("version"));
  if (version != kDatasetVersion) throw corrupt("unsupported dataset version " + std::to_string(version));
  if (field("endianness") != "little") throw corrupt("unsupported endianness '" + field("endianness") + "'");
  const long long count = parse_int("episodes", field("episodes"));
  const long long F = parse_int("frames", field("frames"));
  const long long V = parse_int("pose_width", field("pose_width"));
  const long long J = parse_int("joints", field("joints"));
  const long long N = parse_int("points", field("points"));
  const double fps = parse_double("fps", field("fps"));
  if (count < 0 || F < 0 || V < 0 || J < 0 || N < 0 || count > (1LL << 31) || F > (1LL << 24) ||
      V > (1LL << 16) || N > (1LL << 26))
    throw corrupt("header dimensions out of range");
  if (V != 3 * J + 3 && !(count == 0 && V == 0))
    throw DatasetError(DatasetError::Kind::DimensionMismatch,
                       "pose_width " + std::to_string(V) + " does not match joints " + std::to_string(J));
  if (count > 0 && !(fps > 0.0)) throw corrupt("fps must be positive");
  if (static_cast<long long>(episode_lines.size()) != count)
    throw corrupt("header lists " + std::to_string(episode_lines.size()) + " episodes, expected " +
                  std::to_string(count));

  std::vector<InteractionEpisode> episodes(static_cast<size_t>(count));
  for (long long e = 0; e < count; ++e) {
    std::istringstream ss(episode_lines[static_cast<size_t>(e)]);
    std::string seed, coupling, scenario, room, width, extra;
    if (!(ss >> seed >> coupling >> scenario >> room >> width) || (ss >> extra))
      throw corrupt("malformed episode line " + std::to_string(e));
    auto& meta = episodes[static_cast<size_t>(e)].meta;
    try {
      size_t used = 0;
      meta.seed = std::stoull(seed, &used);
      if (used != seed.size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      throw corrupt("episode " + std::to_string(e) + " has a malformed seed");
    }
    meta.coupling = parse_double("coupling", coupling);
    meta.scenario = scenario;
    meta.room = room;
    meta.room_width = parse_double("room_width", width);
  }

  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  auto read_block = [&](float* dst, long long rows, long long cols, const char* what, long long e) {
    if (bytes.size() - pos < 8)
      throw DatasetError(DatasetError::Kind::Truncated, "payload truncated in episode " + std::to_string(e));
    const long long r = get_u32(data + pos), c = get_u32(data + pos + 4);
    pos += 8;
    if (r != rows || c != cols)
      throw DatasetError(DatasetError::Kind::DimensionMismatch,
                         std::string(what) + " block of episode " + std::to_string(e) + " is " + std::to_string(r) +
                             "x" + std::to_string(c) + ", header declares " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    const size_t n = static_cast<size_t>(rows * cols);
    if ((bytes.size() - pos) / 4 < n)
      throw DatasetError(DatasetError::Kind::Truncated, "payload truncated in episode " + std::to_string(e));
    for (size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<float>(get_u32(data + pos + 4 * i));
    pos += 4 * n;
  };
  for (long long e = 0; e < count; ++e) {
    auto& ep = episodes[static_cast<size_t>(e)];
    ep.wearer.frames.resize(F, V);
    ep.interactee.frames.resize(F, V);
    ep.scene.points.resize(N, 3);
    ep.wearer.fps = ep.interactee.fps = fps;
    read_block(ep.wearer.frames.data(), F, V, "wearer", e);
    read_block(ep.interactee.frames.data(), F, V, "interactee", e);
    read_block(ep.scene.points.data(), N, 3, "scene", e);
  }
  if (pos != bytes.size())
    throw DatasetError(DatasetError::Kind::DimensionMismatch, "dataset has trailing bytes after the last episode");
  return episodes;
}

}  // namespace socialego
