#include "socialego/evaluation.hpp"

#include <exception>

#include "socialego/errors.hpp"
#include "socialego/rng.hpp"
#include "socialego/social_analysis.hpp"

namespace socialego {

void check_stack(const ModelStack& stack) {
  if (!stack.vae) throw PreconditionError("no VAE checkpoint loaded");
  if (!stack.denoiser) throw PreconditionError("no denoiser checkpoint loaded");
  if (stack.denoiser->config().use_scene && !stack.scene)
    throw PreconditionError("denoiser conditions on the scene but no scene encoder checkpoint was given");
  if (stack.schedule.T < 1) throw PreconditionError("noise schedule is empty");
  if (stack.inference_steps < 1 || stack.inference_steps > stack.schedule.T)
    throw InvalidArgument("inference steps must lie in [1, T]");
}

PoseSequence generate_wearer(const ModelStack& stack, const DenoiserExample& input, std::uint64_t seed) {
  check_stack(stack);
  const auto& cfg = stack.denoiser->config();
  std::optional<Eigen::VectorXd> inter, scene;
  if (cfg.use_interactee) inter = encode_interactee(input.interactee, *stack.vae);
  if (cfg.use_scene) {
    const auto cloud = subsample_pointcloud(input.scene, stack.scene->config().points, child_seed(seed, 1));
    scene = stack.scene->encode(cloud);
  }
  const auto cond = build_condition_bundle(inter, scene);
  const LatentCode z = ddim_sample(*stack.denoiser, stack.schedule, stack.inference_steps, cond, child_seed(seed, 2));
  return stack.vae->decode(z, input.wearer.frame_count(), input.wearer.fps);
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
  MetricsReport out;
  if (reports.empty()) return out;
  for (const auto& r : reports) {
    out.mpjpe += r.mpjpe;
    out.orientation_error += r.orientation_error;
    out.translation_error += r.translation_error;
    out.acceleration_error += r.acceleration_error;
  }
  const double n = static_cast<double>(reports.size());
  out.mpjpe /= n;
  out.orientation_error /= n;
  out.translation_error /= n;
  out.acceleration_error /= n;
  out.frame_count = reports[0].frame_count;
  out.joint_count = reports[0].joint_count;
  return out;
}

namespace {

SequenceMetrics score_sequence(int index, std::span<const PoseSequence> hyps, const PoseSequence& gt,
                               const BodyModel& body) {
  if (hyps.empty()) throw InvalidArgument("no hypotheses for sequence " + std::to_string(index));
  std::vector<MetricsReport> reports;
  for (const auto& h : hyps) reports.push_back(compute_metrics(h, gt, body));
  SequenceMetrics s;
  s.index = index;
  s.mean = average_reports(reports);
  size_t best = 0;
  for (size_t k = 1; k < reports.size(); ++k)
    if (reports[k].mpjpe < reports[best].mpjpe) best = k;
  s.best = reports[best];
  return s;
}

EvaluationResult summarize(std::vector<SequenceMetrics> per_sequence, int samples) {
  EvaluationResult r;
  r.samples_per_input = samples;
  std::vector<MetricsReport> best, mean;
  for (const auto& s : per_sequence) {
    best.push_back(s.best);
    mean.push_back(s.mean);
  }
  r.best_of_k = average_reports(best);
  r.mean_of_k = average_reports(mean);
  r.per_sequence = std::move(per_sequence);
  return r;
}

}  // namespace

EvaluationResult evaluate_predictions(const std::vector<std::vector<PoseSequence>>& hypotheses,
                                      std::span<const PoseSequence> ground_truth, const BodyModel& body) {
  if (hypotheses.size() != ground_truth.size())
    throw InvalidArgument("prediction and ground-truth counts differ");
  const int n = static_cast<int>(ground_truth.size());
  std::vector<SequenceMetrics> per(n);
  int samples = hypotheses.empty() ? 1 : static_cast<int>(hypotheses[0].size());
  for (int i = 0; i < n; ++i) per[i] = score_sequence(i, hypotheses[i], ground_truth[i], body);
  return summarize(std::move(per), samples);
}

EvaluationResult evaluate_model(const ModelStack& stack, std::span<const InteractionEpisode> episodes,
                                const EvalOptions& options) {
  check_stack(stack);
  if (options.samples_per_input < 1) throw InvalidArgument("samples_per_input must be >= 1");
  const int n = static_cast<int>(episodes.size());
  std::vector<SequenceMetrics> per(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      DenoiserExample input = episode_window(episodes[i], options.frames, options.future_offset);
      const std::uint64_t seq_seed = child_seed(options.seed, static_cast<std::uint64_t>(i));
      if (options.interactee_noise > 0.0)
        input.interactee = perturb_interactee(input.interactee, options.interactee_noise, child_seed(seq_seed, 1u << 20));
      std::vector<PoseSequence> hyps;
      for (int k = 0; k < options.samples_per_input; ++k)
        hyps.push_back(generate_wearer(stack, input, child_seed(seq_seed, static_cast<std::uint64_t>(k))));
      per[i] = score_sequence(i, hyps, input.wearer, stack.vae->body());
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(std::move(per), options.samples_per_input);
}

}  // namespace socialego
