#include "socialego/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include "socialego/errors.hpp"

namespace socialego {

namespace {

using Member = std::variant<int ExperimentConfig::*, double ExperimentConfig::*, bool ExperimentConfig::*,
                            std::uint64_t ExperimentConfig::*, std::string ExperimentConfig::*,
                            std::vector<int> ExperimentConfig::*, std::vector<std::uint64_t> ExperimentConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f{
      {"seed", &C::seed},
      {"seeds", &C::seeds},
      {"scenario", &C::scenario},
      {"train_episodes", &C::train_episodes},
      {"test_episodes", &C::test_episodes},
      {"frames", &C::frames},
      {"fps", &C::fps},
      {"kappa", &C::kappa},
      {"lag", &C::lag},
      {"scene_points", &C::scene_points},
      {"latent_dim", &C::latent_dim},
      {"vae_layers", &C::vae_layers},
      {"denoiser_layers", &C::denoiser_layers},
      {"heads", &C::heads},
      {"ff_hidden", &C::ff_hidden},
      {"scene_widths", &C::scene_widths},
      {"scene_encoder_points", &C::scene_encoder_points},
      {"vae_steps", &C::vae_steps},
      {"vae_batch", &C::vae_batch},
      {"vae_lr", &C::vae_lr},
      {"kl_weight", &C::kl_weight},
      {"fk_weight", &C::fk_weight},
      {"weight_decay", &C::weight_decay},
      {"denoiser_steps", &C::denoiser_steps},
      {"denoiser_batch", &C::denoiser_batch},
      {"denoiser_lr", &C::denoiser_lr},
      {"denoiser_lr_decay", &C::denoiser_lr_decay},
      {"diffusion_steps", &C::diffusion_steps},
      {"beta_start", &C::beta_start},
      {"beta_end", &C::beta_end},
      {"scene_warmup_steps", &C::scene_warmup_steps},
      {"scene_warmup_batch", &C::scene_warmup_batch},
      {"use_scene", &C::use_scene},
      {"use_interactee", &C::use_interactee},
      {"condition_offset", &C::condition_offset},
      {"future_offset", &C::future_offset},
      {"inference_steps", &C::inference_steps},
      {"samples_per_input", &C::samples_per_input},
      {"interactee_noise", &C::interactee_noise},
      {"gaze_test", &C::gaze_test},
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest decimal form that reads back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s[0] == '-') return false;
  char* end = nullptr;
  out = std::strtoull(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string format_value(const ExperimentConfig& c, const Member& m) {
  return std::visit(
      [&](auto ptr) -> std::string {
        const auto& v = c.*ptr;
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, int>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          std::string out;
          for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
          return out;
        }
      },
      m);
}

// Returns an error message, empty on success.
std::string assign_value(ExperimentConfig& c, const Field& f, const std::string& value) {
  const std::string key = f.key;
  return std::visit(
      [&](auto ptr) -> std::string {
        auto& v = c.*ptr;
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, int>) {
          long long x = 0;
          if (!parse_int(value, x) || x < -(1LL << 31) || x >= (1LL << 31)) return key + ": expected an integer";
          v = static_cast<int>(x);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (!parse_u64(value, v)) return key + ": expected a non-negative integer";
        } else if constexpr (std::is_same_v<T, double>) {
          if (!parse_real(value, v)) return key + ": expected a number";
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1")
            v = true;
          else if (value == "false" || value == "0")
            v = false;
          else
            return key + ": expected true or false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          v = value;
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
          T parsed;
          for (const auto& item : split_list(value)) {
            long long x = 0;
            if (!parse_int(item, x) || x < -(1LL << 31) || x >= (1LL << 31))
              return key + ": expected a comma-separated list of integers";
            parsed.push_back(static_cast<int>(x));
          }
          v = std::move(parsed);
        } else {
          T parsed;
          for (const auto& item : split_list(value)) {
            std::uint64_t x = 0;
            if (!parse_u64(item, x)) return key + ": expected a comma-separated list of non-negative integers";
            parsed.push_back(x);
          }
          v = std::move(parsed);
        }
        return "";
      },
      f.member);
}

}  // namespace

int ExperimentConfig::record_frames() const { return frames + std::max({future_offset, condition_offset, 0}); }

std::vector<std::string> ExperimentConfig::violations() const {
  std::vector<std::string> v;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  const auto scenarios = interaction_scenarios();
  need(!seeds.empty(), "seeds: at least one seed is required");
  need(std::find(scenarios.begin(), scenarios.end(), scenario) != scenarios.end(),
       "scenario: unknown scenario '" + scenario + "'");
  need(train_episodes >= 1, "train_episodes: must be >= 1");
  need(test_episodes >= 1, "test_episodes: must be >= 1");
  need(frames >= 3, "frames: must be >= 3");
  need(fps > 0.0, "fps: must be positive");
  need(kappa >= 0.0 && kappa <= 1.0, "kappa: must lie in [0, 1]");
  need(lag >= 0, "lag: must be >= 0");
  need(scene_points >= 1, "scene_points: must be >= 1");
  need(latent_dim >= 1, "latent_dim: must be >= 1");
  need(heads >= 1, "heads: must be >= 1");
  need(heads < 1 || latent_dim % heads == 0, "heads: must divide latent_dim");
  need(vae_layers >= 1, "vae_layers: must be >= 1");
  need(denoiser_layers >= 1, "denoiser_layers: must be >= 1");
  need(ff_hidden >= 0, "ff_hidden: must be >= 0");
  need(!scene_widths.empty() && std::all_of(scene_widths.begin(), scene_widths.end(), [](int w) { return w >= 1; }),
       "scene_widths: must be a non-empty list of positive widths");
  need(scene_encoder_points >= 1, "scene_encoder_points: must be >= 1");
  need(vae_steps >= 0, "vae_steps: must be >= 0");
  need(vae_batch >= 1, "vae_batch: must be >= 1");
  need(vae_lr > 0.0, "vae_lr: must be positive");
  need(kl_weight >= 0.0, "kl_weight: must be >= 0");
  need(fk_weight >= 0.0, "fk_weight: must be >= 0");
  need(weight_decay >= 0.0, "weight_decay: must be >= 0");
  need(denoiser_steps >= 0, "denoiser_steps: must be >= 0");
  need(denoiser_batch >= 1, "denoiser_batch: must be >= 1");
  need(denoiser_lr > 0.0, "denoiser_lr: must be positive");
  need(diffusion_steps >= 1, "diffusion_steps: must be >= 1");
  need(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
       "beta_start/beta_end: need 0 < beta_start <= beta_end < 1");
  need(scene_warmup_steps >= 0, "scene_warmup_steps: must be >= 0");
  need(scene_warmup_batch >= 1, "scene_warmup_batch: must be >= 1");
  need(condition_offset >= 0, "condition_offset: must be >= 0");
  need(future_offset >= 0, "future_offset: must be >= 0");
  need(inference_steps >= 1 && inference_steps <= diffusion_steps,
       "inference_steps: must lie in [1, diffusion_steps]");
  need(samples_per_input >= 1, "samples_per_input: must be >= 1");
  need(interactee_noise >= 0.0, "interactee_noise: must be >= 0");
  need(gaze_test == "line-of-sight" || gaze_test == "gaze-vs-gaze",
       "gaze_test: must be line-of-sight or gaze-vs-gaze");
  return v;
}

void ExperimentConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, format_value(*this, f.member));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_pairs()) out += k + ": " + v + "\n";
  return out;
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key != f.key) continue;
    const std::string err = assign_value(*this, f, trim(value));
    if (!err.empty()) throw ConfigError({err});
    return;
  }
  throw ConfigError({key + ": unknown configuration key"});
}

VaeConfig ExperimentConfig::vae_config() const {
  VaeConfig c;
  c.frames = frames;
  c.latent_dim = latent_dim;
  c.layers = vae_layers;
  c.heads = heads;
  c.ff_hidden = ff_hidden;
  return c;
}

VaeTrainConfig ExperimentConfig::vae_train_config(std::uint64_t train_seed) const {
  VaeTrainConfig c;
  c.steps = vae_steps;
  c.batch = vae_batch;
  c.lr = vae_lr;
  c.weight_decay = weight_decay;
  c.weights.kl_weight = kl_weight;
  c.weights.fk_weight = fk_weight;
  c.seed = train_seed;
  return c;
}

DenoiserConfig ExperimentConfig::denoiser_config() const {
  DenoiserConfig c;
  c.latent_dim = latent_dim;
  c.layers = denoiser_layers;
  c.heads = heads;
  c.ff_hidden = ff_hidden;
  c.use_interactee = use_interactee;
  c.use_scene = use_scene;
  return c;
}

DenoiserTrainConfig ExperimentConfig::denoiser_train_config(std::uint64_t train_seed) const {
  DenoiserTrainConfig c;
  c.steps = denoiser_steps;
  c.batch = denoiser_batch;
  c.lr = denoiser_lr;
  c.weight_decay = weight_decay;
  c.diffusion_steps = diffusion_steps;
  c.beta_start = beta_start;
  c.beta_end = beta_end;
  c.scene_warmup_steps = scene_warmup_steps;
  c.scene_warmup_batch = scene_warmup_batch;
  c.lr_decay = denoiser_lr_decay;
  c.seed = train_seed;
  return c;
}

SceneEncoderConfig ExperimentConfig::scene_encoder_config() const {
  SceneEncoderConfig c;
  c.widths = scene_widths;
  c.out_dim = latent_dim;
  c.points = scene_encoder_points;
  return c;
}

SynthOptions ExperimentConfig::synth_options() const {
  SynthOptions o;
  o.scene_points = scene_points;
  o.lag = lag;
  o.fps = fps;
  return o;
}

NoiseSchedule ExperimentConfig::schedule() const {
  return make_noise_schedule(diffusion_steps, beta_start, beta_end);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'key: value'");
      continue;
    }
    try {
      base.set(trim(line.substr(0, colon)), line.substr(colon + 1));
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) errors.push_back("line " + std::to_string(lineno) + ": " + v);
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace socialego
