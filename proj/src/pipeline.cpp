#include "socialego/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "socialego/errors.hpp"
#include "socialego/rng.hpp"
#include "socialego/social_analysis.hpp"

namespace socialego {

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw PreconditionError(what + " path not given");
  if (!fs::exists(path)) throw PreconditionError(what + " not found: " + path.string() + " (run the producing command first)");
}

std::vector<InteractionEpisode> load_dataset(const fs::path& path, const std::string& what) {
  require_file(path, what);
  return read_dataset(path);
}

void check_recording_length(std::span<const InteractionEpisode> episodes, const ExperimentConfig& config,
                            const std::string& what) {
  for (const auto& ep : episodes) {
    if (ep.frame_count() < config.record_frames())
      throw PreconditionError(what + " episodes have " + std::to_string(ep.frame_count()) +
                              " frames, config needs " + std::to_string(config.record_frames()));
  }
}

MetricsReport mean_of_members(const EvaluationResult& result, const std::vector<int>& members) {
  std::vector<MetricsReport> reports;
  reports.reserve(members.size());
  for (int i : members) reports.push_back(result.per_sequence[static_cast<size_t>(i)].best);
  return average_reports(reports);
}

struct LoadedModels {
  VaeModel vae;
  DenoiserModel denoiser;
  std::optional<SceneEncoder> scene;
  int condition_offset = 0;
};

LoadedModels load_models(const ModelPaths& paths) {
  require_file(paths.vae, "VAE checkpoint");
  require_file(paths.denoiser, "denoiser checkpoint");
  const Checkpoint dck = read_checkpoint(paths.denoiser, "denoiser");
  LoadedModels m{vae_from_checkpoint(read_checkpoint(paths.vae, "vae")), denoiser_from_checkpoint(dck), {},
                 std::stoi(dck.meta_value("condition_offset"))};
  if (m.denoiser.config().use_scene) {
    require_file(paths.scene, "scene-encoder checkpoint");
    m.scene.emplace(scene_encoder_from_checkpoint(read_checkpoint(paths.scene, "scene-encoder")));
  }
  return m;
}

ModelStack stack_of(const LoadedModels& m, const ExperimentConfig& config) {
  return ModelStack{&m.vae, &m.denoiser, m.scene ? &*m.scene : nullptr, config.schedule(), config.inference_steps};
}

std::vector<std::string> result_info(const EvaluationResult& r) {
  return {std::to_string(r.per_sequence.size()), std::to_string(r.samples_per_input)};
}

}  // namespace

// ---- reports ----------------------------------------------------------------

std::vector<std::string> metric_columns() {
  return {"mpjpe_mm", "orientation", "translation_mm", "acceleration_mm_s2"};
}

std::vector<std::string> metric_cells(const MetricsReport& r) {
  return {fixed(r.mpjpe), fixed(r.orientation_error), fixed(r.translation_error), fixed(r.acceleration_error)};
}

std::string render_text_report(const Report& report, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "version: " << software_version() << "\n";
  out << "command: " << report.command << "\n";
  for (const auto& [k, v] : report.info) out << k << ": " << v << "\n";
  for (const auto& [k, v] : config.to_pairs()) out << "config." << k << ": " << v << "\n";
  out << "\n";

  const auto& t = report.table;
  std::vector<size_t> width(t.columns.size());
  for (size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
  for (const auto& row : t.rows)
    for (size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());

  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (size_t c = 0; c < cells.size(); ++c) {
      std::string cell = cells[c];
      // First column left-aligned, numbers right-aligned.
      if (c == 0)
        cell.append(width[c] - cell.size(), ' ');
      else
        cell.insert(0, width[c] - cell.size(), ' ');
      if (c) line += "  ";
      line += cell;
    }
    out << line << "\n";
  };
  emit(t.columns);
  std::vector<std::string> rule;
  for (size_t w : width) rule.emplace_back(w, '-');
  emit(rule);
  for (const auto& row : t.rows) emit(row);
  return out.str();
}

std::string render_csv_report(const Report& report, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# version: " << software_version() << "\n";
  out << "# command: " << report.command << "\n";
  for (const auto& [k, v] : report.info) out << "# " << k << ": " << v << "\n";
  for (const auto& [k, v] : config.to_pairs()) out << "# config." << k << ": " << v << "\n";
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c) out << ',';
      const bool quote = cells[c].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out << cells[c];
        continue;
      }
      out << '"';
      for (char ch : cells[c]) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    }
    out << "\n";
  };
  emit(report.table.columns);
  for (const auto& row : report.table.rows) emit(row);
  return out.str();
}

void write_report(const Report& report, const ExperimentConfig& config, const fs::path& prefix) {
  write_text(fs::path(prefix.string() + ".txt"), render_text_report(report, config));
  write_text(fs::path(prefix.string() + ".csv"), render_csv_report(report, config));
}

// ---- building blocks ---------------------------------------------------------

std::vector<InteractionEpisode> make_train_episodes(const ExperimentConfig& config) {
  config.validate();
  return generate_episodes(config.scenario, config.train_episodes, config.record_frames(), config.kappa,
                           child_seed(config.seed, 1), config.synth_options());
}

std::vector<InteractionEpisode> make_test_episodes(const ExperimentConfig& config) {
  config.validate();
  return generate_episodes(config.scenario, config.test_episodes, config.record_frames(), config.kappa,
                           child_seed(config.seed, 2), config.synth_options());
}

std::vector<PoseSequence> vae_training_sequences(std::span<const InteractionEpisode> episodes,
                                                 const ExperimentConfig& config) {
  std::vector<int> offsets{0, config.condition_offset, config.future_offset};
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());

  std::vector<PoseSequence> seqs;
  seqs.reserve(episodes.size() * (1 + offsets.size()));
  for (const auto& ep : episodes) {
    seqs.push_back(future_shift(ep.wearer, 0, config.frames));
    for (int off : offsets) seqs.push_back(future_shift(ep.interactee, off, config.frames));
  }
  return seqs;
}

VaeTrainResult fit_vae(std::span<const InteractionEpisode> episodes, const ExperimentConfig& config) {
  config.validate();
  check_recording_length(episodes, config, "training");
  const auto seqs = vae_training_sequences(episodes, config);
  return train_vae(seqs, config.vae_config(), config.vae_train_config(child_seed(config.seed, 10)),
                   BodyModel::humanoid());
}

TrainedDenoiser fit_denoiser(std::span<const InteractionEpisode> episodes, const VaeModel& vae,
                             const ExperimentConfig& config, std::uint64_t train_seed) {
  config.validate();
  check_recording_length(episodes, config, "training");
  const auto examples = episode_windows(episodes, config.frames, config.condition_offset);
  std::optional<SceneEncoder> scene;
  if (config.use_scene) scene.emplace(config.scene_encoder_config(), child_seed(train_seed, 3));
  auto result = train_denoiser(examples, vae, std::move(scene), config.denoiser_config(),
                               config.denoiser_train_config(train_seed));
  return TrainedDenoiser{std::move(result.model), std::move(result.scene_encoder), config.condition_offset,
                         std::move(result.freeze), std::move(result.loss)};
}

ModelStack make_stack(const VaeModel& vae, const TrainedDenoiser& d, const ExperimentConfig& config) {
  return ModelStack{&vae, &d.model, d.scene ? &*d.scene : nullptr, config.schedule(), config.inference_steps};
}

EvalOptions eval_options(const ExperimentConfig& config, int condition_offset) {
  EvalOptions o;
  o.frames = config.frames;
  o.future_offset = condition_offset;
  o.samples_per_input = config.samples_per_input;
  o.interactee_noise = config.interactee_noise;
  o.seed = child_seed(config.seed, 20);
  return o;
}

// ---- commands ---------------------------------------------------------------------

void cmd_generate_data(const ExperimentConfig& config, const fs::path& train_out, const fs::path& test_out) {
  config.validate();
  if (!train_out.empty()) write_dataset(make_train_episodes(config), train_out);
  if (!test_out.empty()) write_dataset(make_test_episodes(config), test_out);
}

double cmd_train_vae(const ExperimentConfig& config, const fs::path& train_data, const fs::path& vae_out) {
  config.validate();
  const auto episodes = load_dataset(train_data, "training dataset");
  auto result = fit_vae(episodes, config);
  write_checkpoint(make_checkpoint(result.model, config, child_seed(config.seed, 10)), vae_out);
  return result.loss.empty() ? 0.0 : result.loss.back();
}

void cmd_train_denoiser(const ExperimentConfig& config, const fs::path& train_data, const fs::path& vae_ckpt,
                        const fs::path& denoiser_out, const fs::path& scene_out) {
  config.validate();
  require_file(vae_ckpt, "VAE checkpoint");
  if (config.use_scene && scene_out.empty())
    throw PreconditionError("scene-encoder output path required when use_scene is true");
  const VaeModel vae = vae_from_checkpoint(read_checkpoint(vae_ckpt, "vae"));
  const auto episodes = load_dataset(train_data, "training dataset");
  const std::uint64_t train_seed = child_seed(config.seed, 11);
  const TrainedDenoiser d = fit_denoiser(episodes, vae, config, train_seed);
  if (!d.freeze.holds()) throw std::runtime_error("frozen encoder parameters changed during denoiser training");
  write_checkpoint(make_checkpoint(d.model, config, train_seed, d.condition_offset, d.freeze), denoiser_out);
  if (d.scene) write_checkpoint(make_checkpoint(*d.scene, config, train_seed), scene_out);
}

void cmd_sample(const ExperimentConfig& config, const ModelPaths& models, const fs::path& data,
                const fs::path& out) {
  config.validate();
  const LoadedModels m = load_models(models);
  const auto episodes = load_dataset(data, "condition dataset");
  check_recording_length(episodes, config, "condition");
  const ModelStack stack = stack_of(m, config);
  check_stack(stack);

  // Same seed derivation as the first hypothesis of evaluate_model, so a
  // sampled file scores exactly like cmd_evaluate with one sample per input.
  const EvalOptions opts = eval_options(config, m.condition_offset);
  std::vector<InteractionEpisode> generated(episodes.size());
  std::vector<std::string> errors(episodes.size());
  const int n = static_cast<int>(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const auto& ep = episodes[static_cast<size_t>(i)];
      DenoiserExample input = episode_window(ep, config.frames, m.condition_offset);
      const std::uint64_t seq_seed = child_seed(opts.seed, static_cast<std::uint64_t>(i));
      if (opts.interactee_noise > 0.0)
        input.interactee = perturb_interactee(input.interactee, opts.interactee_noise, child_seed(seq_seed, 1u << 20));
      InteractionEpisode g;
      g.wearer = generate_wearer(stack, input, child_seed(seq_seed, 0));
      g.interactee = std::move(input.interactee);
      g.scene = ep.scene;
      g.meta = ep.meta;
      generated[static_cast<size_t>(i)] = std::move(g);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("sampling failed: " + e);
  write_dataset(generated, out);
}

namespace {

Report evaluation_report(const std::string& command, const EvaluationResult& r) {
  Report report;
  report.command = command;
  const auto info = result_info(r);
  report.info = {{"sequences", info[0]}, {"samples_per_input", info[1]}};
  report.table.columns = {"aggregate"};
  for (const auto& c : metric_columns()) report.table.columns.push_back(c);
  auto row = [&](const std::string& label, const MetricsReport& m) {
    std::vector<std::string> cells{label};
    for (auto& c : metric_cells(m)) cells.push_back(std::move(c));
    report.table.rows.push_back(std::move(cells));
  };
  row("best-of-k", r.best_of_k);
  row("mean-of-k", r.mean_of_k);
  return report;
}

}  // namespace

EvaluationResult cmd_evaluate(const ExperimentConfig& config, const ModelPaths& models, const fs::path& data,
                              const fs::path& report_prefix) {
  config.validate();
  const LoadedModels m = load_models(models);
  const auto episodes = load_dataset(data, "test dataset");
  check_recording_length(episodes, config, "test");
  const EvaluationResult r = evaluate_model(stack_of(m, config), episodes, eval_options(config, m.condition_offset));
  if (!report_prefix.empty()) write_report(evaluation_report("evaluate", r), config, report_prefix);
  return r;
}

EvaluationResult cmd_evaluate_predictions(const ExperimentConfig& config, const fs::path& predictions,
                                          const fs::path& data, const fs::path& report_prefix) {
  config.validate();
  const auto pred = load_dataset(predictions, "predictions file");
  const auto episodes = load_dataset(data, "test dataset");
  if (pred.size() != episodes.size())
    throw InvalidArgument("predictions hold " + std::to_string(pred.size()) + " sequences, dataset holds " +
                          std::to_string(episodes.size()));
  std::vector<std::vector<PoseSequence>> hyp;
  std::vector<PoseSequence> gt;
  for (size_t i = 0; i < pred.size(); ++i) {
    hyp.push_back({future_shift(pred[i].wearer, 0, config.frames)});
    gt.push_back(future_shift(episodes[i].wearer, 0, config.frames));
  }
  const EvaluationResult r = evaluate_predictions(hyp, gt, BodyModel::humanoid());
  if (!report_prefix.empty()) write_report(evaluation_report("evaluate", r), config, report_prefix);
  return r;
}

namespace {

ReportTable stratum_table(const std::vector<Stratum>& strata, const EvaluationResult& r) {
  ReportTable t;
  t.columns = {"stratum", "count"};
  for (const auto& c : metric_columns()) t.columns.push_back(c);
  for (const auto& s : strata) {
    std::vector<std::string> row{s.label, std::to_string(s.members.size())};
    if (s.members.empty()) {
      for (size_t c = 0; c < metric_columns().size(); ++c) row.emplace_back("nan");
    } else {
      for (auto& c : metric_cells(mean_of_members(r, s.members))) row.push_back(std::move(c));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

GazeTest parse_gaze_test(const std::string& name) {
  return name == "gaze-vs-gaze" ? GazeTest::GazeVsGaze : GazeTest::LineOfSight;
}

// Mean over seeds of the best-of-k test metrics for one training variant.
MetricsReport train_and_score(std::span<const InteractionEpisode> train, std::span<const InteractionEpisode> test,
                              const VaeModel& vae, const ExperimentConfig& variant) {
  std::vector<MetricsReport> per_seed;
  for (std::uint64_t s : variant.seeds) {
    ExperimentConfig c = variant;
    c.seed = s;
    const TrainedDenoiser d = fit_denoiser(train, vae, c, child_seed(s, 11));
    per_seed.push_back(evaluate_model(make_stack(vae, d, c), test, eval_options(c, d.condition_offset)).best_of_k);
  }
  return average_reports(per_seed);
}

}  // namespace

ReportTable cmd_ablate(const ExperimentConfig& config, const std::string& axis, const ModelPaths& models,
                       const fs::path& train_data, const fs::path& test_data, const fs::path& report_prefix) {
  config.validate();
  Report report;
  report.command = "ablate " + axis;
  report.info = {{"axis", axis}};

  if (axis == "distance" || axis == "gaze30" || axis == "gaze60") {
    const LoadedModels m = load_models(models);
    const auto episodes = load_dataset(test_data, "test dataset");
    check_recording_length(episodes, config, "test");
    const EvaluationResult r =
        evaluate_model(stack_of(m, config), episodes, eval_options(config, m.condition_offset));
    std::vector<Stratum> strata;
    if (axis == "distance") {
      strata = stratify_by_distance(episodes, config.frames);
    } else {
      const double theta = axis == "gaze30" ? 30.0 : 60.0;
      strata = stratify_by_gaze(episodes, theta, config.frames, BodyModel::humanoid(), parse_gaze_test(config.gaze_test));
    }
    report.table = stratum_table(strata, r);
  } else if (axis == "future" || axis == "conditioning") {
    require_file(models.vae, "VAE checkpoint");
    const VaeModel vae = vae_from_checkpoint(read_checkpoint(models.vae, "vae"));
    const auto train = load_dataset(train_data, "training dataset");
    const auto test = load_dataset(test_data, "test dataset");
    check_recording_length(train, config, "training");
    check_recording_length(test, config, "test");

    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    if (axis == "conditioning") {
      ExperimentConfig no_scene = config, no_inter = config, full = config;
      no_scene.use_scene = false;
      no_scene.use_interactee = true;
      no_inter.use_scene = true;
      no_inter.use_interactee = false;
      full.use_scene = full.use_interactee = true;
      variants = {{"w/o Scene", no_scene}, {"w/o Int.ee", no_inter}, {"full", full}};
    } else {
      ExperimentConfig present = config, future = config;
      present.condition_offset = 0;
      future.condition_offset = config.future_offset;
      variants = {{"present (offset 0)", present},
                  {"future (offset " + std::to_string(config.future_offset) + ")", future}};
    }
    report.info.emplace_back("seeds", std::to_string(config.seeds.size()));
    report.table.columns = {"variant"};
    for (const auto& c : metric_columns()) report.table.columns.push_back(c);
    for (const auto& [label, variant] : variants) {
      std::vector<std::string> row{label};
      for (auto& c : metric_cells(train_and_score(train, test, vae, variant))) row.push_back(std::move(c));
      report.table.rows.push_back(std::move(row));
    }
  } else {
    throw ConfigError({"axis: unknown value '" + axis + "' (distance, gaze30, gaze60, future, conditioning)"});
  }

  if (!report_prefix.empty()) write_report(report, config, report_prefix);
  return report.table;
}

}  // namespace socialego
